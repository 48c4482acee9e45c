//! Frequency tables over boundary-padded tag sequences.
//!
//! A sentence `t0 … tn-1` is padded to `B B t0 … tn-1 B` with the boundary
//! tag `B`; every padded position from the third on closes one trigram
//! instance, so a sentence of `n` tokens contributes `n + 1` instances.
//! Bigram counts are counts of trigram histories, which makes
//! `Σ_c f(a,b,c) = f(a,b)` hold exactly.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus_io::Lexicon;
use crate::feature_model::{Context, PairId, TagId, TagSet};

pub type Trigram = (TagId, TagId, TagId);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTables {
    unigram: BTreeMap<TagId, u64>,
    bigram: BTreeMap<(TagId, TagId), u64>,
    trigram: BTreeMap<Trigram, u64>,
    initial_bigram: BTreeMap<(TagId, TagId), u64>,
    pair: BTreeMap<(TagId, TagId), u64>,
    pair_history: BTreeMap<TagId, u64>,
    sentences: u64,
    instances: u64,
}

impl CountTables {
    /// Counts every padded sentence. Empty sentences are skipped.
    pub fn count<'a>(sentences: impl IntoIterator<Item = &'a [TagId]>) -> Self {
        let b = TagSet::BOUNDARY;
        let mut t = CountTables::default();
        let mut trigram: HashMap<Trigram, u64> = HashMap::new();
        for tags in sentences {
            if tags.is_empty() {
                continue;
            }
            t.sentences += 1;
            for &tag in tags {
                *t.unigram.entry(tag).or_default() += 1;
            }
            let second = tags.get(1).copied().unwrap_or(b);
            *t.initial_bigram.entry((tags[0], second)).or_default() += 1;
            let mut padded = Vec::with_capacity(tags.len() + 3);
            padded.extend([b, b]);
            padded.extend_from_slice(tags);
            padded.push(b);
            for w in padded.windows(3) {
                *trigram.entry((w[0], w[1], w[2])).or_default() += 1;
            }
        }
        t.trigram = trigram.into_iter().collect();
        t.derive_marginals();
        t
    }

    /// Builds tables straight from trigram counts, e.g. for fixtures. Unigram
    /// counts are taken from non-boundary current tags.
    pub fn from_trigrams(trigrams: impl IntoIterator<Item = (Trigram, u64)>) -> Self {
        let mut t = CountTables::default();
        for (k, c) in trigrams {
            if c == 0 {
                continue;
            }
            *t.trigram.entry(k).or_default() += c;
            if k.2 != TagSet::BOUNDARY {
                *t.unigram.entry(k.2).or_default() += c;
            }
            if k.0 == TagSet::BOUNDARY && k.1 == TagSet::BOUNDARY {
                t.sentences += c;
            }
        }
        t.derive_marginals();
        t
    }

    fn from_parts(
        unigram: BTreeMap<TagId, u64>,
        trigram: BTreeMap<Trigram, u64>,
        initial_bigram: BTreeMap<(TagId, TagId), u64>,
        sentences: u64,
    ) -> Self {
        let mut t = CountTables {
            unigram,
            trigram,
            initial_bigram,
            sentences,
            ..Default::default()
        };
        t.derive_marginals();
        t
    }

    fn derive_marginals(&mut self) {
        self.bigram.clear();
        self.pair.clear();
        self.pair_history.clear();
        self.instances = 0;
        for (&(a, b, c), &n) in &self.trigram {
            *self.bigram.entry((a, b)).or_default() += n;
            *self.pair.entry((b, c)).or_default() += n;
            *self.pair_history.entry(b).or_default() += n;
            self.instances += n;
        }
    }

    pub fn unigram(&self, t: TagId) -> u64 {
        self.unigram.get(&t).copied().unwrap_or(0)
    }

    pub fn bigram(&self, t2: TagId, t1: TagId) -> u64 {
        self.bigram.get(&(t2, t1)).copied().unwrap_or(0)
    }

    pub fn trigram(&self, t2: TagId, t1: TagId, t0: TagId) -> u64 {
        self.trigram.get(&(t2, t1, t0)).copied().unwrap_or(0)
    }

    pub fn initial_bigram(&self, t0: TagId, t1: TagId) -> u64 {
        self.initial_bigram.get(&(t0, t1)).copied().unwrap_or(0)
    }

    pub fn num_sentences(&self) -> u64 {
        self.sentences
    }

    /// Number of padded trigram instances.
    pub fn num_instances(&self) -> u64 {
        self.instances
    }

    pub fn num_tokens(&self) -> u64 {
        self.unigram.values().sum()
    }

    pub fn trigrams(&self) -> impl Iterator<Item = (Trigram, u64)> + '_ {
        self.trigram.iter().map(|(&k, &v)| (k, v))
    }

    pub fn unigrams(&self) -> impl Iterator<Item = (TagId, u64)> + '_ {
        self.unigram.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.trigram.is_empty()
    }

    /// `f(t2,t1,t0) / f(t2,t1)`, or 0 for an unseen history.
    pub fn trigram_transition(&self, t2: TagId, t1: TagId, t0: TagId) -> f64 {
        match self.bigram(t2, t1) {
            0 => 0.0,
            h => self.trigram(t2, t1, t0) as f64 / h as f64,
        }
    }

    /// First-order counterpart `f(t1,t0) / f(t1)` over the same instances.
    pub fn bigram_transition(&self, t1: TagId, t0: TagId) -> f64 {
        match self.pair_history.get(&t1).copied().unwrap_or(0) {
            0 => 0.0,
            h => self.pair.get(&(t1, t0)).copied().unwrap_or(0) as f64 / h as f64,
        }
    }

    /// Estimate of the initial state probability of the first two tags.
    pub fn initial_probability(&self, t0: TagId, t1: TagId) -> f64 {
        match self.sentences {
            0 => 0.0,
            n => self.initial_bigram(t0, t1) as f64 / n as f64,
        }
    }

    /// Counts behind `p(e | C)`: instances whose full positioned pair set
    /// contains `C` (denominator), and those whose current tag also carries
    /// `event` (numerator). A plain scan, used as the reference route.
    pub fn fv_conditional_counts(&self, tagset: &TagSet, event: PairId, ctx: &Context) -> (u64, u64) {
        self.constrained_counts(tagset, event, ctx, &Context::new())
    }

    /// Like [`fv_conditional_counts`](Self::fv_conditional_counts) with an
    /// additional set of positioned pairs that must be absent.
    pub fn constrained_counts(
        &self,
        tagset: &TagSet,
        event: PairId,
        present: &Context,
        absent: &Context,
    ) -> (u64, u64) {
        let mut num = 0;
        let mut den = 0;
        for (&(t2, t1, t0), &n) in &self.trigram {
            let has = |m: &crate::feature_model::PosPair| {
                let tag = match m.position() {
                    2 => t2,
                    1 => t1,
                    _ => t0,
                };
                tagset.tag(tag).contains(m.pair())
            };
            if present.members().iter().all(has) && !absent.members().iter().any(has) {
                den += n;
                if tagset.tag(t0).contains(event) {
                    num += n;
                }
            }
        }
        (num, den)
    }

    /// Counts of distinct trigrams per frequency bucket.
    pub fn trigram_histogram(&self, buckets: &[FrequencyBucket], include_padding: bool) -> Histogram {
        let freqs: Vec<u64> = self
            .trigram
            .iter()
            .filter(|(&(a, b, c), _)| {
                include_padding || ![a, b, c].contains(&TagSet::BOUNDARY)
            })
            .map(|(_, &n)| n)
            .collect();
        Histogram::from_frequencies(&freqs, buckets)
    }
}

/// Corpus marginals of every pair at the current-tag slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Marginals {
    counts: BTreeMap<PairId, u64>,
    instances: u64,
}

impl Marginals {
    pub fn new(tables: &CountTables, tagset: &TagSet) -> Self {
        let mut counts = BTreeMap::new();
        for ((_, _, t0), n) in tables.trigrams() {
            for &p in tagset.decompose(t0) {
                *counts.entry(p).or_default() += n;
            }
        }
        Marginals {
            counts,
            instances: tables.num_instances(),
        }
    }

    pub fn counts(&self, event: PairId) -> (u64, u64) {
        (self.counts.get(&event).copied().unwrap_or(0), self.instances)
    }

    pub fn probability(&self, event: PairId) -> f64 {
        match self.instances {
            0 => 0.0,
            n => self.counts.get(&event).copied().unwrap_or(0) as f64 / n as f64,
        }
    }
}

/// Memoizing front end for [`CountTables::fv_conditional_counts`]. Not
/// shareable across threads; keep one per decode pass.
pub struct FvCountCache<'a> {
    tables: &'a CountTables,
    tagset: &'a TagSet,
    cache: RefCell<HashMap<(PairId, Context), (u64, u64)>>,
}

impl<'a> FvCountCache<'a> {
    pub fn new(tables: &'a CountTables, tagset: &'a TagSet) -> Self {
        FvCountCache {
            tables,
            tagset,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn counts(&self, event: PairId, ctx: &Context) -> (u64, u64) {
        let key = (event, ctx.clone());
        if let Some(&v) = self.cache.borrow().get(&key) {
            return v;
        }
        let v = self.tables.fv_conditional_counts(self.tagset, event, ctx);
        self.cache.borrow_mut().insert(key, v);
        v
    }
}

/// Lexical probabilities `p(w|t) = f(w,t)/f(t)` with a uniform open-class
/// fallback for unknown words.
#[derive(Debug, Clone)]
pub struct LexicalModel<'a> {
    lexicon: &'a Lexicon,
    tables: &'a CountTables,
    open_tags: Vec<TagId>,
}

impl<'a> LexicalModel<'a> {
    pub fn new(lexicon: &'a Lexicon, tables: &'a CountTables, open_tags: Vec<TagId>) -> Self {
        LexicalModel {
            lexicon,
            tables,
            open_tags,
        }
    }

    pub fn open_tags(&self) -> &[TagId] {
        &self.open_tags
    }

    pub fn lexicon(&self) -> &Lexicon {
        self.lexicon
    }

    pub fn probability(&self, word: &str, tag: TagId) -> f64 {
        match self.lexicon.entries(word) {
            Some(_) => {
                let ft = self.tables.unigram(tag);
                if ft == 0 {
                    return 0.0;
                }
                // override counts can exceed f(t)
                (self.lexicon.count(word, tag) as f64 / ft as f64).min(1.0)
            }
            None if self.open_tags.contains(&tag) => 1.0 / self.open_tags.len() as f64,
            None => 0.0,
        }
    }

    /// Candidate tags of a word with their lexical probabilities, ascending
    /// by tag id.
    pub fn candidates(&self, word: &str) -> Vec<(TagId, f64)> {
        match self.lexicon.entries(word) {
            Some(es) => es
                .iter()
                .map(|&(t, _)| (t, self.probability(word, t)))
                .collect(),
            None => {
                let p = 1.0 / self.open_tags.len().max(1) as f64;
                self.open_tags.iter().map(|&t| (t, p)).collect()
            }
        }
    }
}

/// A frequency range `[min, max]`; `max = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyBucket {
    pub min: u64,
    pub max: Option<u64>,
}

impl FrequencyBucket {
    pub fn contains(&self, f: u64) -> bool {
        f >= self.min && self.max.is_none_or(|m| f <= m)
    }

    /// The trigram-count table ranges: ≥128, 64–127, …, 2–3, 1.
    pub fn defaults() -> Vec<FrequencyBucket> {
        let mut v = vec![FrequencyBucket { min: 128, max: None }];
        let mut hi: u64 = 127;
        while hi >= 3 {
            let lo = hi.div_ceil(2);
            v.push(FrequencyBucket { min: lo, max: Some(hi) });
            hi = lo - 1;
        }
        v.push(FrequencyBucket { min: 1, max: Some(1) });
        v
    }
}

impl fmt::Display for FrequencyBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            None => write!(f, "≥ {}", self.min),
            Some(m) if m == self.min => write!(f, "{m}"),
            Some(m) => write!(f, "{} - {}", self.min, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bucket: FrequencyBucket,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub rows: Vec<HistogramRow>,
    pub total: u64,
}

impl Histogram {
    pub fn from_frequencies(freqs: &[u64], buckets: &[FrequencyBucket]) -> Self {
        let total = freqs.len() as u64;
        let rows = buckets
            .iter()
            .map(|&bucket| {
                let count = freqs.iter().filter(|&&f| bucket.contains(f)).count() as u64;
                let percent = if total == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / total as f64
                };
                HistogramRow { bucket, count, percent }
            })
            .collect();
        Histogram { rows, total }
    }

    /// Aligned text table with a closing sum row.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<16}{:>10}{:>12}\n", "frequency range", "trigrams", "percent"));
        for r in &self.rows {
            s.push_str(&format!(
                "{:<16}{:>10}{:>11.3}%\n",
                r.bucket.to_string(),
                r.count,
                r.percent
            ));
        }
        let sum: f64 = self.rows.iter().map(|r| r.percent).sum();
        s.push_str(&format!("{:<16}{:>10}{:>11.3}%\n", "sum", self.total, sum));
        s
    }

    /// Tab-separated `range count percent` rows.
    pub fn render_rows(&self) -> String {
        let mut s = String::from("range\tcount\tpercent\n");
        for r in &self.rows {
            let range = match r.bucket.max {
                None => format!("{}+", r.bucket.min),
                Some(m) => format!("{}-{}", r.bucket.min, m),
            };
            s.push_str(&format!("{range}\t{}\t{:.6}\n", r.count, r.percent));
        }
        s
    }
}

impl Serialize for CountTables {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CountTablesData {
            sentences: self.sentences,
            unigram: self.unigram.iter().map(|(&t, &n)| (t, n)).collect(),
            trigram: self
                .trigram
                .iter()
                .map(|(&(a, b, c), &n)| (a, b, c, n))
                .collect(),
            initial_bigram: self
                .initial_bigram
                .iter()
                .map(|(&(a, b), &n)| (a, b, n))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CountTables {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let data = CountTablesData::deserialize(d)?;
        Ok(CountTables::from_parts(
            data.unigram.into_iter().collect(),
            data.trigram
                .into_iter()
                .map(|(a, b, c, n)| ((a, b, c), n))
                .collect(),
            data.initial_bigram
                .into_iter()
                .map(|(a, b, n)| ((a, b), n))
                .collect(),
            data.sentences,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct CountTablesData {
    sentences: u64,
    unigram: Vec<(TagId, u64)>,
    trigram: Vec<(TagId, TagId, TagId, u64)>,
    initial_bigram: Vec<(TagId, TagId, u64)>,
}
