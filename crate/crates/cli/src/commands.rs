use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use fstag_core::corpus_io::{read_lexicon_override, read_tagged_corpus, read_tagged_corpus_with, read_untagged, write_tagged_corpus};
use fstag_core::counts::{CountTables, FrequencyBucket};
use fstag_core::eval::compare_taggers;
use fstag_core::synth::generate_split;
use fstag_core::transition::explain;
use fstag_core::{Corpus, Method, Model, Order, Profile, Sentence, TagSet, Tagger};
use log::info;

use crate::config::{CliConfig, Format};

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn required<'a>(path: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref().with_context(|| format!("--{flag} is required"))
}

fn load_model(cfg: &CliConfig) -> Result<Model> {
    let path = required(&cfg.model, "model")?;
    let mut model = Model::load(open(path)?).with_context(|| format!("loading model {}", path.display()))?;
    if let Some(lex) = &cfg.lexicon {
        let over = read_lexicon_override(open(lex)?, model.tagset())
            .with_context(|| format!("lexicon override {}", lex.display()))?;
        model.override_lexicon(over)?;
    }
    Ok(model)
}

fn corpus_summary(corpus: &Corpus, tables: &CountTables) -> String {
    let tags = tables.unigrams().count();
    let distinct = tables.trigrams().filter(|((a, b, c), _)| ![*a, *b, *c].contains(&TagSet::BOUNDARY)).count();
    let possible = (tags as f64).powi(3);
    format!(
        "tokens {}\nsentences {}\ntags {}\nfv-pairs {}\ndistinct trigrams {distinct} ({:.4}% of {tags}^3)\n",
        corpus.num_tokens(),
        corpus.sentences.len(),
        tags,
        corpus.tagset.num_pairs() - 1,
        100.0 * distinct as f64 / possible.max(1.0),
    )
}

pub fn train(cfg: &CliConfig) -> Result<()> {
    cfg.check_training_combination()?;
    let model_path = required(&cfg.model, "model")?;
    let corpus_path = required(&cfg.corpus, "corpus")?;
    let corpus = read_tagged_corpus(open(corpus_path)?).with_context(|| format!("reading {}", corpus_path.display()))?;
    if corpus.sentences.is_empty() {
        bail!("{} holds no sentences", corpus_path.display());
    }
    let methods = cfg.training_methods();
    info!("training methods {methods:?}");
    let model = Model::train(&corpus, &methods, &cfg.training)?;
    let mut out = BufWriter::new(File::create(model_path).with_context(|| format!("creating {}", model_path.display()))?);
    model.save(&mut out)?;
    out.flush()?;
    let mut summary = corpus_summary(&corpus, model.counts());
    for m in &model.config().methods {
        match m {
            Method::Trigram => {}
            Method::Tree => {
                let t = model.trees().expect("trained");
                summary.push_str(&format!("method 4: {} trees, {} nodes\n", t.len(), t.num_nodes()));
            }
            m => summary.push_str(&format!("method {m}: {} relations\n", model.pfr_store(*m).expect("trained").len())),
        }
    }
    print!("{summary}");
    Ok(())
}

pub fn tag(cfg: &CliConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let method = cfg.single_method()?;
    let source = model.source(method)?;
    let sentences = match &cfg.input {
        Some(p) => read_untagged(open(p)?)?,
        None => read_untagged(io::stdin().lock())?,
    };
    let mut out = output(cfg.output.as_deref())?;
    let ts = model.tagset();
    for s in &sentences {
        let words = s.words();
        let tagged = model.tag_with(&source, &words, cfg.order);
        if tagged.fallback {
            writeln!(out, "# lexical-fallback")?;
        } else if cfg.log_probs {
            writeln!(out, "# logp={}", tagged.log_prob.unwrap_or(f64::NEG_INFINITY))?;
        }
        for (w, t) in words.iter().zip(&tagged.tags) {
            writeln!(out, "{w}\t{}", ts.render_tag(*t))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn eval_taggers(cfg: &CliConfig, model: &Model) -> Result<Vec<Tagger>> {
    match &cfg.taggers {
        Some(names) => names
            .iter()
            .map(|n| n.trim().parse::<Tagger>().map_err(anyhow::Error::from))
            .collect(),
        None => Ok(Tagger::standard()
            .into_iter()
            .filter(|t| t.method().is_none_or(|m| model.has_method(m)))
            .collect()),
    }
}

pub fn eval(cfg: &CliConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let path = required(&cfg.corpus, "corpus")?;
    let mut tagset = model.tagset().clone();
    let gold = read_tagged_corpus_with(open(path)?, &mut tagset).with_context(|| format!("reading {}", path.display()))?;
    let taggers = eval_taggers(cfg, &model)?;
    for t in &taggers {
        if let Some(m) = t.method() {
            if !model.has_method(m) {
                bail!("model has no method {m} (tagger {t})");
            }
        }
    }
    let name = path.file_name().map_or_else(|| "corpus".into(), |n| n.to_string_lossy().into_owned());
    let report = compare_taggers(&model, &tagset, &gold, &name, &taggers, cfg.breakdown)?;
    let mut out = output(cfg.output.as_deref())?;
    match cfg.format {
        Format::Text => out.write_all(report.render_text().as_bytes())?,
        Format::Tsv => out.write_all(report.render_tsv().as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

pub fn stats(cfg: &CliConfig) -> Result<()> {
    let path = required(&cfg.corpus, "corpus")?;
    let corpus = read_tagged_corpus(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let seqs = corpus.tag_sequences()?;
    let tables = CountTables::count(seqs.iter().map(Vec::as_slice));
    let hist = tables.trigram_histogram(&FrequencyBucket::defaults(), cfg.include_padding);
    let mut out = output(cfg.output.as_deref())?;
    match cfg.format {
        Format::Text => {
            out.write_all(corpus_summary(&corpus, &tables).as_bytes())?;
            writeln!(out, "padding {}", if cfg.include_padding { "included" } else { "excluded" })?;
            writeln!(out)?;
            out.write_all(hist.render_text().as_bytes())?;
        }
        Format::Tsv => out.write_all(hist.render_rows().as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

pub fn explain_cmd(cfg: &CliConfig, tags: &[String]) -> Result<()> {
    let model = load_model(cfg)?;
    let ts = model.tagset();
    let lookup = |s: &str| -> Result<_> {
        ts.lookup_tag(s)?.with_context(|| format!("tag `{s}` is not in the model"))
    };
    let (t2, t1, t0) = match (tags, cfg.order) {
        ([a, b, c], Order::Second) => (Some(lookup(a)?), lookup(b)?, lookup(c)?),
        ([b, c], Order::First) => (None, lookup(b)?, lookup(c)?),
        (_, Order::Second) => bail!("order 2 needs three tags: t(i-2) t(i-1) t(i)"),
        (_, Order::First) => bail!("order 1 needs two tags: t(i-1) t(i)"),
    };
    let method = cfg.single_method()?;
    let source = model.source(method)?;
    let e = explain(ts, &source, Some(model.counts()), t2, t1, t0);
    let mut out = output(cfg.output.as_deref())?;
    writeln!(out, "method {method}")?;
    write!(out, "{e}")?;
    out.flush()?;
    Ok(())
}

pub fn generate(cfg: &CliConfig) -> Result<()> {
    let profile = match Profile::builtin(&cfg.profile) {
        Ok(p) => p,
        Err(_) if Path::new(&cfg.profile).exists() => Profile::from_json(&fs::read_to_string(&cfg.profile)?)
            .with_context(|| format!("profile {}", cfg.profile))?,
        Err(e) => return Err(e.into()),
    };
    let mut sizes = vec![cfg.tokens];
    if let Some(n) = cfg.test_tokens {
        if cfg.test_output.is_none() {
            bail!("--test-tokens needs --test-output");
        }
        sizes.push(n);
    }
    let (parts, tagset) = generate_split(&profile, cfg.seed, &sizes)?;
    let write = |path: Option<&Path>, sentences: &[Sentence]| -> Result<()> {
        let mut out = output(path)?;
        write_tagged_corpus(&mut out, sentences, &tagset)?;
        out.flush()?;
        Ok(())
    };
    write(cfg.output.as_deref(), &parts[0])?;
    if let Some(test) = parts.get(1) {
        write(cfg.test_output.as_deref(), test)?;
    }
    Ok(())
}
