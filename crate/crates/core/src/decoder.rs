//! Viterbi decoding over boundary-padded sentences.
//!
//! The objective of a tag sequence `t0 … tn-1` for words `w0 … wn-1` is
//! `Π_i p(t_i | t_{i-2}, t_{i-1}) p(w_i | t_i) · p(B | t_{n-2}, t_{n-1})`
//! with `t_{-1} = t_{-2} = B`. The two leading transitions play the role of
//! the initial distribution. Scores are summed in log space, always in the
//! same left-to-right order, so equal paths get bit-identical scores.
//!
//! Tie-break: among equally scored paths the one whose reversed tag-id
//! sequence `(t_{n-1}, …, t_0)` is lexicographically smallest wins. Viterbi
//! gets there by taking the smallest tag at every backpointer and choosing
//! the final state by `(t_{n-1}, t_{n-2})`. Scores within a relative
//! [`TIE_TOLERANCE`] of each other count as equal: the same product summed
//! along different paths can round differently, and an exact comparison
//! would let Viterbi drop a partial path that brute force later sees tied.

use std::collections::HashMap;

use crate::corpus_io::Lexicon;
use crate::counts::LexicalModel;
use crate::error::{Error, Result};
use crate::feature_model::{TagId, TagSet};
use crate::transition::TransitionSource;

/// HMM order: 1 conditions on the previous tag, 2 on the previous two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::Config(format!("HMM order must be 1 or 2, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

/// Transition probabilities as seen by the decoder.
pub trait Transitions {
    /// `p(c | t2, t1)` for every candidate `c`; `t2 = None` for first order.
    fn transitions(&self, t2: Option<TagId>, t1: TagId, candidates: &[TagId]) -> Vec<f64>;
}

/// A [`TransitionSource`] bound to its tagset.
pub struct SourceTransitions<'a> {
    pub source: &'a TransitionSource<'a>,
    pub tagset: &'a TagSet,
}

impl Transitions for SourceTransitions<'_> {
    fn transitions(&self, t2: Option<TagId>, t1: TagId, candidates: &[TagId]) -> Vec<f64> {
        self.source.batch_transitions(self.tagset, t2, t1, candidates)
    }
}

/// Candidate tags per position with their lexical probabilities, each list
/// ascending by tag id.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLattice {
    pub positions: Vec<Vec<(TagId, f64)>>,
}

impl CandidateLattice {
    pub fn new(mut positions: Vec<Vec<(TagId, f64)>>) -> Self {
        for p in &mut positions {
            p.sort_by_key(|&(t, _)| t);
            p.dedup_by_key(|&mut (t, _)| t);
        }
        CandidateLattice { positions }
    }

    pub fn from_words(words: &[&str], lexical: &LexicalModel) -> Self {
        Self::new(words.iter().map(|w| lexical.candidates(w)).collect())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of complete paths.
    pub fn num_paths(&self) -> u128 {
        self.positions
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub tags: Vec<TagId>,
    pub log_prob: f64,
}

pub const TIE_TOLERANCE: f64 = 1e-12;

/// `a` beats `b` by more than the tie tolerance.
fn clearly_greater(a: f64, b: f64) -> bool {
    if b == f64::NEG_INFINITY {
        return a > b;
    }
    a - b > TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn ties(a: f64, b: f64) -> bool {
    !clearly_greater(a, b) && !clearly_greater(b, a)
}

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

struct Memo<'t, T: Transitions> {
    inner: &'t T,
    order: Order,
    cache: HashMap<(Option<TagId>, TagId), HashMap<TagId, f64>>,
}

impl<'t, T: Transitions> Memo<'t, T> {
    fn new(inner: &'t T, order: Order) -> Self {
        Memo {
            inner,
            order,
            cache: HashMap::new(),
        }
    }

    /// Log transitions from `(t2, t1)` to each candidate.
    fn log_row(&mut self, t2: TagId, t1: TagId, candidates: &[TagId]) -> Vec<f64> {
        let t2 = match self.order {
            Order::First => None,
            Order::Second => Some(t2),
        };
        let row = self.cache.entry((t2, t1)).or_default();
        let missing: Vec<TagId> = candidates
            .iter()
            .copied()
            .filter(|c| !row.contains_key(c))
            .collect();
        if !missing.is_empty() {
            let ps = self.inner.transitions(t2, t1, &missing);
            for (c, p) in missing.into_iter().zip(ps) {
                row.insert(c, p);
            }
        }
        candidates.iter().map(|c| ln(row[c])).collect()
    }
}

/// Best path, or `None` when the lattice is empty or every path has
/// probability zero.
pub fn viterbi<T: Transitions>(lattice: &CandidateLattice, trans: &T, order: Order) -> Option<Decoded> {
    let n = lattice.len();
    if n == 0 || lattice.positions.iter().any(Vec::is_empty) {
        return None;
    }
    let b = TagSet::BOUNDARY;
    let mut memo = Memo::new(trans, order);
    // states at position i: (index of t_{i-1} in its list, index of t_i);
    // position -1 has the single boundary "candidate".
    let tags_at = |i: isize| -> Vec<TagId> {
        if i < 0 {
            vec![b]
        } else {
            lattice.positions[i as usize].iter().map(|&(t, _)| t).collect()
        }
    };
    let cur = tags_at(0);
    let row = memo.log_row(b, b, &cur);
    // delta[u][v]
    let mut delta: Vec<Vec<f64>> = vec![cur
        .iter()
        .enumerate()
        .map(|(v, _)| (0.0 + row[v]) + ln(lattice.positions[0][v].1))
        .collect()];
    let mut back: Vec<Vec<Vec<usize>>> = vec![vec![vec![0; cur.len()]]];
    for i in 1..n {
        let prev2 = tags_at(i as isize - 2);
        let prev = tags_at(i as isize - 1);
        let cur = tags_at(i as isize);
        let lex: Vec<f64> = lattice.positions[i].iter().map(|&(_, p)| ln(p)).collect();
        let mut nd = vec![vec![f64::NEG_INFINITY; cur.len()]; prev.len()];
        let mut nb = vec![vec![0usize; cur.len()]; prev.len()];
        for (w, &tw) in prev2.iter().enumerate() {
            for (u, &tu) in prev.iter().enumerate() {
                let d = delta[w][u];
                if d == f64::NEG_INFINITY {
                    continue;
                }
                let row = memo.log_row(tw, tu, &cur);
                for v in 0..cur.len() {
                    let s = (d + row[v]) + lex[v];
                    if clearly_greater(s, nd[u][v]) {
                        nd[u][v] = s;
                        nb[u][v] = w;
                    }
                }
            }
        }
        delta = nd;
        back.push(nb);
    }
    // close with the end transition, choosing by (t_{n-1}, t_{n-2})
    let prev = tags_at(n as isize - 2);
    let last = tags_at(n as isize - 1);
    let mut best: Option<(usize, usize, f64)> = None;
    for v in 0..last.len() {
        for (u, &tu) in prev.iter().enumerate() {
            let d = delta[u][v];
            if d == f64::NEG_INFINITY {
                continue;
            }
            let s = d + memo.log_row(tu, last[v], &[b])[0];
            if clearly_greater(s, best.map_or(f64::NEG_INFINITY, |x| x.2)) {
                best = Some((u, v, s));
            }
        }
    }
    let (mut u, mut v, score) = best?;
    let mut idx = vec![0usize; n];
    for i in (0..n).rev() {
        idx[i] = v;
        let w = back[i][u][v];
        v = u;
        u = w;
    }
    Some(Decoded {
        tags: idx
            .iter()
            .enumerate()
            .map(|(i, &k)| lattice.positions[i][k].0)
            .collect(),
        log_prob: score,
    })
}

/// Exhaustive search with the same objective, summation order and
/// tie-break as [`viterbi`].
pub fn brute_force_decode<T: Transitions>(
    lattice: &CandidateLattice,
    trans: &T,
    order: Order,
    cap: u128,
) -> Result<Option<Decoded>> {
    let paths = lattice.num_paths();
    if paths > cap {
        return Err(Error::EnumerationCap { paths, cap });
    }
    let n = lattice.len();
    if n == 0 || paths == 0 {
        return Ok(None);
    }
    let b = TagSet::BOUNDARY;
    let mut memo = Memo::new(trans, order);
    let mut idx = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let tag = |i: isize| if i < 0 { b } else { lattice.positions[i as usize][idx[i as usize]].0 };
        let mut s = 0.0;
        for i in 0..n as isize {
            s += memo.log_row(tag(i - 2), tag(i - 1), &[tag(i)])[0];
            s += ln(lattice.positions[i as usize][idx[i as usize]].1);
        }
        s += memo.log_row(tag(n as isize - 2), tag(n as isize - 1), &[b])[0];
        if s > f64::NEG_INFINITY {
            let better = match &best {
                None => true,
                Some((bi, bs)) => {
                    clearly_greater(s, *bs) || (ties(s, *bs) && idx.iter().rev().lt(bi.iter().rev()))
                }
            };
            if better {
                best = Some((idx.clone(), s));
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == n {
                return Ok(best.map(|(ix, s)| Decoded {
                    tags: ix
                        .iter()
                        .enumerate()
                        .map(|(i, &k)| lattice.positions[i][k].0)
                        .collect(),
                    log_prob: s,
                }));
            }
            idx[i] += 1;
            if idx[i] < lattice.positions[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// The most frequent tag of every word regardless of context; ties go to the
/// smallest tag id, unknown words get the first open-class tag.
pub fn lexical_baseline(words: &[&str], lexicon: &Lexicon, open_tags: &[TagId]) -> Vec<TagId> {
    words
        .iter()
        .map(|w| match lexicon.entries(w) {
            Some(es) => {
                let mut best: Option<(TagId, u64)> = None;
                for &(t, c) in es {
                    let take = match best {
                        None => true,
                        Some((bt, bc)) => c > bc || (c == bc && t < bt),
                    };
                    if take {
                        best = Some((t, c));
                    }
                }
                best.map_or(TagSet::BOUNDARY, |(t, _)| t)
            }
            None => open_tags.iter().copied().min().unwrap_or(TagSet::BOUNDARY),
        })
        .collect()
}

/// A decoded sentence as reported to users.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSentence {
    pub tags: Vec<TagId>,
    /// Log probability of the returned path; `None` after a fallback.
    pub log_prob: Option<f64>,
    /// Every path had probability zero and the lexical baseline was used.
    pub fallback: bool,
}

/// Viterbi with the lexical-baseline fallback for dead lattices.
pub fn tag_words<T: Transitions>(words: &[&str], lexical: &LexicalModel, trans: &T, order: Order) -> TaggedSentence {
    if words.is_empty() {
        return TaggedSentence {
            tags: Vec::new(),
            log_prob: Some(0.0),
            fallback: false,
        };
    }
    let lattice = CandidateLattice::from_words(words, lexical);
    match viterbi(&lattice, trans, order) {
        Some(d) => TaggedSentence {
            tags: d.tags,
            log_prob: Some(d.log_prob),
            fallback: false,
        },
        None => TaggedSentence {
            tags: lexical_baseline(words, lexical.lexicon(), lexical.open_tags()),
            log_prob: None,
            fallback: true,
        },
    }
}
