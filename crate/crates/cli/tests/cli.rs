use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn fstag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fstag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run fstag")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fstag(dir, args);
    assert!(
        out.status.success(),
        "fstag {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn with_stdin(dir: &Path, args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_fstag"))
        .current_dir(dir)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

/// Generated train/test split plus a method-2 model.
fn workspace(seed: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_path_buf();
    ok(&d, &[
        "generate", "--tokens", "3000", "--test-tokens", "800", "--seed", seed, "--output", "train.tsv",
        "--test-output", "test.tsv",
    ]);
    ok(&d, &["train", "--corpus", "train.tsv", "--model", "m.fstag"]);
    (dir, d)
}

fn words_of(tagged: &str) -> Vec<String> {
    tagged
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect()
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let a = ok(d, &["generate", "--tokens", "500", "--seed", "3"]);
    let b = ok(d, &["generate", "--tokens", "500", "--seed", "3"]);
    let c = ok(d, &["generate", "--tokens", "500", "--seed", "4"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let pos = ok(d, &["generate", "--tokens", "200", "--profile", "pos-only"]);
    for l in pos.lines().filter(|l| !l.is_empty()) {
        let tag = l.split('\t').nth(1).unwrap();
        assert!(tag.starts_with("pos=") && !tag.contains('|'), "{tag}");
    }
}

#[test]
fn pipeline_is_byte_identical() {
    let run = || {
        let (_keep, d) = workspace("11");
        let input: String = fs::read_to_string(d.join("test.tsv"))
            .unwrap()
            .lines()
            .map(|l| format!("{}\n", l.split('\t').next().unwrap()))
            .collect();
        fs::write(d.join("test.txt"), input).unwrap();
        let tagged = ok(&d, &["tag", "--model", "m.fstag", "--input", "test.txt", "--log-probs"]);
        let report = ok(&d, &["eval", "--model", "m.fstag", "--corpus", "test.tsv"]);
        (fs::read(d.join("m.fstag")).unwrap(), tagged, report)
    };
    let a = run();
    let b = run();
    assert!(a.0 == b.0, "model files differ");
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    assert!(a.0.starts_with(b"fstag-model 1\nsha256 "));
}

#[test]
fn tagging_preserves_words_and_reads_back() {
    let (_keep, d) = workspace("12");
    let test = fs::read_to_string(d.join("test.tsv")).unwrap();
    let tagged = ok(&d, &["tag", "--model", "m.fstag", "--input", "test.tsv"]);
    assert_eq!(words_of(&tagged), words_of(&test));
    // the output is itself a corpus
    fs::write(d.join("out.tsv"), &tagged).unwrap();
    let stats = ok(&d, &["stats", "--corpus", "out.tsv", "--format", "tsv"]);
    assert!(stats.starts_with("range\tcount\tpercent\n"));
    for line in tagged.lines().filter(|l| l.starts_with('#')) {
        assert!(line == "# lexical-fallback", "{line}");
    }
    let with_probs = ok(&d, &["tag", "--model", "m.fstag", "--input", "test.tsv", "--log-probs"]);
    assert!(with_probs.lines().any(|l| l.starts_with("# logp=-")));
}

#[test]
fn empty_input_gives_empty_output() {
    let (_keep, d) = workspace("13");
    let out = with_stdin(&d, &["tag", "--model", "m.fstag"], "");
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn stats_histogram_matches_summary() {
    let (_keep, d) = workspace("14");
    let text = ok(&d, &["stats", "--corpus", "train.tsv"]);
    let distinct: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("distinct trigrams "))
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    let rows = ok(&d, &["stats", "--corpus", "train.tsv", "--format", "tsv"]);
    let counts: Vec<u64> = rows.lines().skip(1).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 8);
    assert_eq!(counts.iter().sum::<u64>(), distinct);
    let padded = ok(&d, &["stats", "--corpus", "train.tsv", "--format", "tsv", "--include-padding"]);
    assert_ne!(rows, padded);
}

#[test]
fn flags_override_config_file() {
    let (_keep, d) = workspace("15");
    fs::write(d.join("run.cfg"), "# settings\ninclude_padding = true\nformat = tsv\n").unwrap();
    let from_file = ok(&d, &["stats", "--config", "run.cfg", "--corpus", "train.tsv"]);
    let padded = ok(&d, &["stats", "--corpus", "train.tsv", "--format", "tsv", "--include-padding"]);
    assert_eq!(from_file, padded);
    let overridden = ok(&d, &["stats", "--config", "run.cfg", "--corpus", "train.tsv", "--include-padding", "false"]);
    let plain = ok(&d, &["stats", "--corpus", "train.tsv", "--format", "tsv"]);
    assert_eq!(overridden, plain);
}

#[test]
fn eval_with_one_tagger_prints_one_row() {
    let (_keep, d) = workspace("16");
    let tsv = ok(&d, &["eval", "--model", "m.fstag", "--corpus", "test.tsv", "--taggers", "fsT2", "--format", "tsv"]);
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("fsT2\ttest.tsv\t"));
    let missing = fstag(&d, &["eval", "--model", "m.fstag", "--corpus", "test.tsv", "--taggers", "fsT4"]);
    assert!(!missing.status.success());
}

#[test]
fn explain_trigram_matches_ratio() {
    let (_keep, d) = workspace("17");
    let train = fs::read_to_string(d.join("train.tsv")).unwrap();
    let tags: Vec<&str> = train.lines().take(3).map(|l| l.split('\t').nth(1).unwrap()).collect();
    let out = ok(&d, &["explain", "--model", "m.fstag", "--method", "trigram", tags[0], tags[1], tags[2]]);
    let value = |key: &str| out.lines().find_map(|l| l.strip_prefix(key)).unwrap().to_string();
    assert_eq!(value("product = "), value("trigram ratio = "));
    let fs = ok(&d, &["explain", "--model", "m.fstag", tags[0], tags[1], tags[2]]);
    assert!(fs.starts_with("method 2\n"));
    let short = fstag(&d, &["explain", "--model", "m.fstag", tags[1], tags[2]]);
    assert!(!short.status.success());
    ok(&d, &["explain", "--model", "m.fstag", "--order", "1", tags[1], tags[2]]);
}

#[test]
fn errors_are_reported() {
    let (_keep, d) = workspace("18");
    let cases: &[&[&str]] = &[
        &["tag", "--model", "nope.fstag"],
        &["train", "--corpus", "train.tsv"],
        &["train", "--corpus", "train.tsv", "--model", "x", "--method", "3", "--min-gain", "0.1"],
        &["tag", "--model", "m.fstag", "--method", "1"],
        &["tag", "--model", "m.fstag", "--order", "3"],
        &["generate", "--profile", "klingon"],
    ];
    for args in cases {
        let out = fstag(&d, args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("fstag: "), "{args:?}");
    }
    let mut model = fs::read(d.join("m.fstag")).unwrap();
    let n = model.len() - 5;
    model[n] ^= 1;
    fs::write(d.join("bad.fstag"), model).unwrap();
    let out = with_stdin(&d, &["tag", "--model", "bad.fstag"], "la\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}
