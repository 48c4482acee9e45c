use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How tag transition probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// PFRs over contexts in which the event's feature occurs.
    Pfr1,
    /// PFRs over contexts preselected by a classification tree.
    Pfr2,
    /// PFRs over fixed POS-trigram-shaped contexts.
    Pfr3,
    /// One binary decision tree per fv-pair.
    Tree,
    /// Plain tag trigram ratios.
    Trigram,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Pfr1,
        Method::Pfr2,
        Method::Pfr3,
        Method::Tree,
        Method::Trigram,
    ];

    /// Index used in tagger names (`fsT1` … `fsT4`).
    pub fn number(self) -> Option<u8> {
        match self {
            Method::Pfr1 => Some(1),
            Method::Pfr2 => Some(2),
            Method::Pfr3 => Some(3),
            Method::Tree => Some(4),
            Method::Trigram => None,
        }
    }

    pub fn is_pfr(self) -> bool {
        matches!(self, Method::Pfr1 | Method::Pfr2 | Method::Pfr3)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.number() {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("trigram"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Method::Pfr1),
            "2" => Ok(Method::Pfr2),
            "3" => Ok(Method::Pfr3),
            "4" | "tree" => Ok(Method::Tree),
            "trigram" => Ok(Method::Trigram),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Relative tolerance of the context-reduction test.
    pub epsilon: f64,
    /// Minimum frequency of a preselected (sub-)context (methods 1 and 2).
    pub min_context_freq: u64,
    /// Information gain (bits) a split must exceed (methods 2 and 4).
    pub min_gain: f64,
    /// Node frequency floor for tree growth (methods 2 and 4).
    pub min_node_freq: u64,
    /// Method 1: require pos pairs at positions 1 and 0 in preselected contexts.
    pub pos_condition: bool,
    /// Check each reduction step against every observed complete context the
    /// candidate matches, not only the context being reduced.
    pub audited_reduction: bool,
    /// POS values whose tags are offered to unknown words.
    pub open_class: Vec<String>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epsilon: 0.03,
            min_context_freq: 5,
            min_gain: 0.01,
            min_node_freq: 5,
            pos_condition: true,
            audited_reduction: true,
            open_class: ["NOUN", "ADJ", "VERB", "ADV", "PROPN"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be ≥ 0, got {}", self.epsilon)));
        }
        if !(self.min_gain.is_finite() && self.min_gain >= 0.0) {
            return Err(Error::Config(format!("min_gain must be ≥ 0, got {}", self.min_gain)));
        }
        Ok(())
    }

    /// Exact-information settings: no tolerance, no thresholds.
    pub fn exact() -> Self {
        TrainingConfig {
            epsilon: 0.0,
            min_context_freq: 0,
            min_gain: 0.0,
            min_node_freq: 0,
            ..Default::default()
        }
    }
}
