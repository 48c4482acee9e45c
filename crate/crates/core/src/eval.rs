//! Accuracy, ambiguity and tagger comparison reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::Method;
use crate::corpus_io::Sentence;
use crate::counts::LexicalModel;
use crate::decoder::{lexical_baseline, Order};
use crate::error::{Error, Result};
use crate::feature_model::{FeatureId, TagId, TagSet};
use crate::model::Model;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Score {
    pub correct: usize,
    pub total: usize,
}

impl Score {
    pub fn accuracy(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn errors(self) -> usize {
        self.total - self.correct
    }
}

fn check_lengths(gold: &[Vec<TagId>], predicted: &[Vec<TagId>]) -> Result<()> {
    let g: usize = gold.iter().map(Vec::len).sum();
    let p: usize = predicted.iter().map(Vec::len).sum();
    if gold.len() != predicted.len() || g != p || gold.iter().zip(predicted).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::LengthMismatch { gold: g, predicted: p });
    }
    Ok(())
}

/// Exact full-tag matches over all tokens.
pub fn accuracy(gold: &[Vec<TagId>], predicted: &[Vec<TagId>]) -> Result<Score> {
    check_lengths(gold, predicted)?;
    let mut s = Score::default();
    for (g, p) in gold.iter().zip(predicted) {
        for (a, b) in g.iter().zip(p) {
            s.total += 1;
            s.correct += usize::from(a == b);
        }
    }
    Ok(s)
}

/// Per feature: a token counts as correct when gold and prediction carry
/// the same value for the feature, or both lack it.
pub fn feature_breakdown(
    tagset: &TagSet,
    gold: &[Vec<TagId>],
    predicted: &[Vec<TagId>],
) -> Result<BTreeMap<String, Score>> {
    check_lengths(gold, predicted)?;
    let features: Vec<FeatureId> = tagset.canonical_order();
    let mut scores = vec![Score::default(); features.len()];
    for (g, p) in gold.iter().zip(predicted) {
        for (&a, &b) in g.iter().zip(p) {
            for (s, &f) in scores.iter_mut().zip(&features) {
                s.total += 1;
                s.correct += usize::from(tagset.tag_value(a, f) == tagset.tag_value(b, f));
            }
        }
    }
    Ok(features
        .iter()
        .zip(scores)
        .map(|(&f, s)| (tagset.feature_name(f).to_string(), s))
        .collect())
}

/// Mean number of candidate tags per token after lexicon lookup.
pub fn ambiguity(sentences: &[Sentence], lexical: &LexicalModel) -> f64 {
    let mut n = 0usize;
    let mut sum = 0usize;
    for s in sentences {
        for t in &s.tokens {
            n += 1;
            sum += lexical.candidates(&t.word).len();
        }
    }
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

/// A tagger configuration as named in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tagger {
    /// `tT`: plain tag trigrams.
    Trigram(Order),
    /// `lpT`: the lexically most probable tag.
    Lexical,
    /// `fsT1` … `fsT4`: feature-structure transitions.
    FeatureStructure(Method, Order),
}

impl Tagger {
    /// `tT` at both orders, `lpT`, then `fsT1` … `fsT4` at order 2.
    pub fn standard() -> Vec<Tagger> {
        let mut v = vec![
            Tagger::Trigram(Order::Second),
            Tagger::Trigram(Order::First),
            Tagger::Lexical,
        ];
        v.extend(
            [Method::Pfr1, Method::Pfr2, Method::Pfr3, Method::Tree]
                .into_iter()
                .map(|m| Tagger::FeatureStructure(m, Order::Second)),
        );
        v
    }

    pub fn order(self) -> Option<Order> {
        match self {
            Tagger::Trigram(o) | Tagger::FeatureStructure(_, o) => Some(o),
            Tagger::Lexical => None,
        }
    }

    pub fn method(self) -> Option<Method> {
        match self {
            Tagger::Trigram(_) => Some(Method::Trigram),
            Tagger::FeatureStructure(m, _) => Some(m),
            Tagger::Lexical => None,
        }
    }

    /// Tags every sentence; sentences are processed in parallel.
    pub fn tag_all(self, model: &Model, sentences: &[Sentence]) -> Result<Vec<Vec<TagId>>> {
        match self {
            Tagger::Lexical => Ok(sentences
                .par_iter()
                .map(|s| lexical_baseline(&s.words(), model.lexicon(), model.open_tags()))
                .collect()),
            _ => {
                let method = self.method().expect("non-lexical tagger");
                let order = self.order().expect("non-lexical tagger");
                model.source(method)?;
                Ok(sentences
                    .par_iter()
                    .map(|s| {
                        let source = model.source(method).expect("checked above");
                        model.tag_with(&source, &s.words(), order).tags
                    })
                    .collect())
            }
        }
    }
}

/// `tT1`, `tT2`, `lpT`, `fsT1` … `fsT4` (order 2), or `fsTn@1` for a
/// feature-structure tagger at order 1.
impl fmt::Display for Tagger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tagger::Trigram(o) => write!(f, "tT{}", o.number()),
            Tagger::Lexical => f.write_str("lpT"),
            Tagger::FeatureStructure(m, Order::Second) => write!(f, "fsT{m}"),
            Tagger::FeatureStructure(m, Order::First) => write!(f, "fsT{m}@1"),
        }
    }
}

impl FromStr for Tagger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unknown tagger `{s}`"));
        if s == "lpT" {
            return Ok(Tagger::Lexical);
        }
        if let Some(o) = s.strip_prefix("tT") {
            return Ok(Tagger::Trigram(Order::from_number(o.parse().map_err(|_| bad())?)?));
        }
        if let Some(rest) = s.strip_prefix("fsT") {
            let (m, o) = match rest.split_once('@') {
                Some((m, o)) => (m, Order::from_number(o.parse().map_err(|_| bad())?)?),
                None => (rest, Order::Second),
            };
            let m: Method = m.parse()?;
            if !matches!(m, Method::Pfr1 | Method::Pfr2 | Method::Pfr3 | Method::Tree) {
                return Err(bad());
            }
            return Ok(Tagger::FeatureStructure(m, o));
        }
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub tagger: String,
    pub corpus: String,
    pub tags: usize,
    pub fv_pairs: usize,
    pub order: Option<u8>,
    pub score: Score,
    pub features: Option<BTreeMap<String, Score>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub tokens: usize,
    pub ambiguity: f64,
}

/// Gold tag ids of every sentence; fails on untagged tokens.
pub fn gold_tags(sentences: &[Sentence]) -> Result<Vec<Vec<TagId>>> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.tags().ok_or_else(|| Error::Corpus {
                line: 0,
                message: format!("sentence {} has untagged tokens", i + 1),
            })
        })
        .collect()
}

/// Runs every tagger over `gold` (tagged with ids of `tagset`, which must
/// extend the model's tag set) and scores it.
pub fn compare_taggers(
    model: &Model,
    tagset: &TagSet,
    gold: &[Sentence],
    corpus_name: &str,
    taggers: &[Tagger],
    breakdown: bool,
) -> Result<EvalReport> {
    let gold_ids = gold_tags(gold)?;
    let ts = model.tagset();
    let num_tags = ts.num_tags() - 1;
    let num_pairs = ts.num_pairs() - 1;
    let mut rows = Vec::with_capacity(taggers.len());
    for &t in taggers {
        let predicted = t.tag_all(model, gold)?;
        let score = accuracy(&gold_ids, &predicted)?;
        let features = if breakdown {
            Some(feature_breakdown(tagset, &gold_ids, &predicted)?)
        } else {
            None
        };
        rows.push(EvalRow {
            tagger: t.to_string(),
            corpus: corpus_name.to_string(),
            tags: num_tags,
            fv_pairs: num_pairs,
            order: t.order().map(Order::number),
            score,
            features,
        });
    }
    Ok(EvalReport {
        rows,
        tokens: gold_ids.iter().map(Vec::len).sum(),
        ambiguity: ambiguity(gold, &model.lexical()),
    })
}

impl EvalReport {
    /// Aligned table followed by corpus statistics.
    pub fn render_text(&self) -> String {
        let header = ["tagger", "corpus", "tags", "fv-pairs", "order", "accuracy"];
        let cells: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.tagger.clone(),
                    r.corpus.clone(),
                    r.tags.to_string(),
                    r.fv_pairs.to_string(),
                    r.order.map_or_else(|| "-".to_string(), |o| o.to_string()),
                    format!("{:.2} %", 100.0 * r.score.accuracy()),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut s = String::new();
        let line = |s: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(i, (c, &w))| {
                    if i < 2 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            s.push_str(parts.join("  ").trim_end());
            s.push('\n');
        };
        line(&mut s, &header.map(String::from));
        for row in &cells {
            line(&mut s, row);
        }
        s.push_str(&format!(
            "\n{} tokens, {:.2} candidate tags per token\n",
            self.tokens, self.ambiguity
        ));
        for r in &self.rows {
            if let Some(fs) = &r.features {
                s.push_str(&format!("\nper-feature accuracy, {}\n", r.tagger));
                for (name, sc) in fs {
                    s.push_str(&format!("  {name:<8} {:.2} %\n", 100.0 * sc.accuracy()));
                }
            }
        }
        s
    }

    /// Tab-separated rows with a header line.
    pub fn render_tsv(&self) -> String {
        let mut s = String::from("tagger\tcorpus\ttags\tfv-pairs\torder\taccuracy\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.6}\n",
                r.tagger,
                r.corpus,
                r.tags,
                r.fv_pairs,
                r.order.map_or_else(|| "-".to_string(), |o| o.to_string()),
                r.score.accuracy()
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::{Lexicon, Token};
    use crate::counts::CountTables;

    #[test]
    fn accuracy_basics() {
        let g = vec![vec![TagId(1), TagId(2), TagId(3), TagId(4)]];
        assert_eq!(accuracy(&g, &g).unwrap().accuracy(), 1.0);
        let p = vec![vec![TagId(1), TagId(2), TagId(3), TagId(5)]];
        let s = accuracy(&g, &p).unwrap();
        assert_eq!(s.accuracy(), 0.75);
        assert_eq!(s.errors() + s.correct, s.total);
        let short = vec![vec![TagId(1)]];
        assert!(matches!(accuracy(&g, &short), Err(Error::LengthMismatch { gold: 4, predicted: 1 })));
    }

    #[test]
    fn partial_matches() {
        let mut ts = TagSet::new();
        let a = ts.parse_tag("pos=ADJ|gen=FEM").unwrap();
        let b = ts.parse_tag("pos=ADJ|gen=MAS").unwrap();
        let n = ts.parse_tag("pos=NOUN|gen=FEM").unwrap();
        let v = ts.parse_tag("pos=VERB").unwrap();
        let gold = vec![vec![a, a, n, v, v]];
        let pred = vec![vec![a, b, a, v, n]];
        let s = accuracy(&gold, &pred).unwrap();
        assert_eq!((s.correct, s.total), (2, 5));
        let fb = feature_breakdown(&ts, &gold, &pred).unwrap();
        // pos right on tokens 1, 2, 4
        assert_eq!(fb["pos"], Score { correct: 3, total: 5 });
        // gen right on tokens 1, 3, 4 (both lack it on 4)
        assert_eq!(fb["gen"], Score { correct: 3, total: 5 });
        assert!(fb["pos"].accuracy() >= s.accuracy());
    }

    #[test]
    fn ambiguity_means() {
        let mut lex = Lexicon::new();
        lex.add("a", TagId(1), 1);
        lex.add("a", TagId(2), 1);
        for t in 1..=4 {
            lex.add("b", TagId(t), 1);
        }
        let tables = CountTables::default();
        let lm = LexicalModel::new(&lex, &tables, vec![TagId(1)]);
        let tok = |w: &str| Token {
            word: w.into(),
            tag: None,
        };
        let s = Sentence {
            tokens: vec![tok("a"), tok("b")],
        };
        assert_eq!(ambiguity(&[s], &lm), 3.0);
        let s = Sentence {
            tokens: vec![tok("zzz")],
        };
        assert_eq!(ambiguity(&[s], &lm), 1.0);
    }

    #[test]
    fn tagger_names() {
        for t in Tagger::standard() {
            assert_eq!(t.to_string().parse::<Tagger>().unwrap(), t);
        }
        let names: Vec<String> = Tagger::standard().iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["tT2", "tT1", "lpT", "fsT1", "fsT2", "fsT3", "fsT4"]);
        assert_eq!(
            "fsT2@1".parse::<Tagger>().unwrap(),
            Tagger::FeatureStructure(Method::Pfr2, Order::First)
        );
        assert!("fsTtrigram".parse::<Tagger>().is_err());
        assert!("tT3".parse::<Tagger>().is_err());
    }
}
