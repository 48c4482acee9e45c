//! Settings: built-in defaults, then a `key=value` file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser};
use fstag_core::{Method, Order, TrainingConfig};

/// Methods to train or use. `all` trains every source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    One(Method),
    All,
}

impl std::str::FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "all" => Ok(MethodChoice::All),
            other => other.parse().map(MethodChoice::One).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Tsv,
}

/// Every setting as an optional flag. Config files are parsed into the same
/// struct, so both sources share names and validation.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Tagged corpus (train, eval, stats).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model file (written by train, read by tag/eval/explain).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Lexicon override: word<TAB>tag<TAB>count lines.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Input for tag; stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// 1, 2, 3, 4 (tree), trigram, or all (train only).
    #[arg(long)]
    pub method: Option<MethodChoice>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub min_context_freq: Option<u64>,
    #[arg(long)]
    pub min_gain: Option<f64>,
    #[arg(long)]
    pub min_node_freq: Option<u64>,
    #[arg(long)]
    pub pos_condition: Option<bool>,
    #[arg(long)]
    pub audited_reduction: Option<bool>,
    /// HMM order, 1 or 2.
    #[arg(long)]
    pub order: Option<u8>,
    /// Comma-separated POS values offered to unknown words.
    #[arg(long, value_delimiter = ',')]
    pub open_class: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Built-in profile name (french-like, pos-only) or a JSON file.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub tokens: Option<usize>,
    /// Also generate a held-out corpus of this size from the same language.
    #[arg(long)]
    pub test_tokens: Option<usize>,
    #[arg(long)]
    pub test_output: Option<PathBuf>,
    /// Comma-separated tagger names for eval, e.g. tT2,lpT,fsT2.
    #[arg(long, value_delimiter = ',')]
    pub taggers: Option<Vec<String>>,
    /// Per-feature accuracy in eval.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub breakdown: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Count trigrams that contain a boundary tag in stats.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_padding: Option<bool>,
    /// Print `# logp=` before each tagged sentence.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub log_probs: Option<bool>,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct FileSettings {
    #[command(flatten)]
    settings: Settings,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment. Keys may use
    /// dashes or underscores.
    pub fn from_file_text(text: &str) -> Result<Settings> {
        let mut args = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected key=value, got `{raw}`", i + 1);
            };
            args.push(format!("--{}={}", k.trim().replace('_', "-"), v.trim()));
        }
        let parsed = FileSettings::try_parse_from(args).map_err(|e| anyhow::anyhow!("config file: {}", e.to_string().trim()))?;
        Ok(parsed.settings)
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_file_text(&text)
    }

    /// Field-wise: values set in `over` win.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            corpus: over.corpus.or(self.corpus),
            model: over.model.or(self.model),
            lexicon: over.lexicon.or(self.lexicon),
            input: over.input.or(self.input),
            output: over.output.or(self.output),
            method: over.method.or(self.method),
            epsilon: over.epsilon.or(self.epsilon),
            min_context_freq: over.min_context_freq.or(self.min_context_freq),
            min_gain: over.min_gain.or(self.min_gain),
            min_node_freq: over.min_node_freq.or(self.min_node_freq),
            pos_condition: over.pos_condition.or(self.pos_condition),
            audited_reduction: over.audited_reduction.or(self.audited_reduction),
            order: over.order.or(self.order),
            open_class: over.open_class.or(self.open_class),
            seed: over.seed.or(self.seed),
            profile: over.profile.or(self.profile),
            tokens: over.tokens.or(self.tokens),
            test_tokens: over.test_tokens.or(self.test_tokens),
            test_output: over.test_output.or(self.test_output),
            taggers: over.taggers.or(self.taggers),
            breakdown: over.breakdown.or(self.breakdown),
            format: over.format.or(self.format),
            include_padding: over.include_padding.or(self.include_padding),
            log_probs: over.log_probs.or(self.log_probs),
        }
    }
}

/// Resolved settings with defaults filled in.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub method: MethodChoice,
    pub training: TrainingConfig,
    pub order: Order,
    pub seed: u64,
    pub profile: String,
    pub tokens: usize,
    pub test_tokens: Option<usize>,
    pub test_output: Option<PathBuf>,
    pub taggers: Option<Vec<String>>,
    pub breakdown: bool,
    pub format: Format,
    pub include_padding: bool,
    pub log_probs: bool,
    /// Names of training thresholds that were set explicitly.
    explicit: Vec<&'static str>,
}

impl CliConfig {
    pub fn resolve(s: Settings) -> Result<CliConfig> {
        let mut training = TrainingConfig::default();
        let mut explicit = Vec::new();
        if let Some(v) = s.epsilon {
            training.epsilon = v;
            explicit.push("epsilon");
        }
        if let Some(v) = s.min_context_freq {
            training.min_context_freq = v;
            explicit.push("min-context-freq");
        }
        if let Some(v) = s.min_gain {
            training.min_gain = v;
            explicit.push("min-gain");
        }
        if let Some(v) = s.min_node_freq {
            training.min_node_freq = v;
            explicit.push("min-node-freq");
        }
        if let Some(v) = s.pos_condition {
            training.pos_condition = v;
            explicit.push("pos-condition");
        }
        if let Some(v) = s.audited_reduction {
            training.audited_reduction = v;
            explicit.push("audited-reduction");
        }
        if let Some(v) = s.open_class {
            training.open_class = v.into_iter().map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
        }
        training.validate()?;
        Ok(CliConfig {
            corpus: s.corpus,
            model: s.model,
            lexicon: s.lexicon,
            input: s.input,
            output: s.output,
            method: s.method.unwrap_or(MethodChoice::One(Method::Pfr2)),
            training,
            order: Order::from_number(s.order.unwrap_or(2))?,
            seed: s.seed.unwrap_or(1),
            profile: s.profile.unwrap_or_else(|| "french-like".to_string()),
            tokens: s.tokens.unwrap_or(10_000),
            test_tokens: s.test_tokens,
            test_output: s.test_output,
            taggers: s.taggers,
            breakdown: s.breakdown.unwrap_or(false),
            format: s.format.unwrap_or(Format::Text),
            include_padding: s.include_padding.unwrap_or(false),
            log_probs: s.log_probs.unwrap_or(false),
            explicit,
        })
    }

    /// The method for tag and explain; `all` is only meaningful for train.
    pub fn single_method(&self) -> Result<Method> {
        match self.method {
            MethodChoice::One(m) => Ok(m),
            MethodChoice::All => bail!("method `all` only applies to train"),
        }
    }

    /// Methods to train: the trigram source always, plus the chosen one.
    pub fn training_methods(&self) -> Vec<Method> {
        match self.method {
            MethodChoice::All => Method::ALL.to_vec(),
            MethodChoice::One(Method::Trigram) => vec![Method::Trigram],
            MethodChoice::One(m) => vec![m, Method::Trigram],
        }
    }

    /// Rejects explicitly set thresholds the chosen method never reads.
    pub fn check_training_combination(&self) -> Result<()> {
        let MethodChoice::One(m) = self.method else {
            return Ok(());
        };
        let used: &[&str] = match m {
            Method::Pfr1 => &["epsilon", "min-context-freq", "pos-condition", "audited-reduction"],
            Method::Pfr2 => &["epsilon", "min-context-freq", "min-gain", "min-node-freq", "audited-reduction"],
            Method::Pfr3 => &[],
            Method::Tree => &["min-gain", "min-node-freq"],
            Method::Trigram => &[],
        };
        if let Some(k) = self.explicit.iter().find(|k| !used.contains(k)) {
            bail!("invalid configuration: {k} has no effect with method {m}");
        }
        Ok(())
    }
}
