//! Tag transition probabilities.
//!
//! A feature-structure source decomposes the current tag into its pairs in
//! chain order `e_0 … e_{n-1}` and multiplies the conditionals
//! `p(e_k | t_{i-2}, t_{i-1}, e_0 … e_{k-1})`. A zero conditional makes the
//! whole tag impossible; no flooring happens here.

use std::collections::HashMap;
use std::fmt;

use crate::counts::{CountTables, FvCountCache, Marginals};
use crate::dtree::{PathStep, TreeSet};
use crate::feature_model::{Context, PairId, PosPair, TagId, TagSet};
use crate::instances::Frac;
use crate::pfr::{Pfr, PfrStore};

/// Where transition probabilities come from.
pub enum TransitionSource<'a> {
    /// Plain tag trigram (or, for order 1, tag pair) ratios.
    Trigram(&'a CountTables),
    /// Exact count-table conditionals at complete contexts.
    Exact(FvCountCache<'a>),
    /// Mean of matching relations, the event marginal when none match.
    Pfr {
        store: &'a PfrStore,
        marginals: &'a Marginals,
    },
    /// Tree leaf probability, the event marginal on a `0/0` leaf.
    Tree {
        trees: &'a TreeSet,
        marginals: &'a Marginals,
    },
}

/// How one conditional was obtained, for reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Counts(Frac),
    Relations(Vec<Pfr>),
    TreePath(Vec<PathStep>, Frac),
    Marginal(Frac),
}

impl<'a> TransitionSource<'a> {
    pub fn exact(tables: &'a CountTables, tagset: &'a TagSet) -> Self {
        TransitionSource::Exact(FvCountCache::new(tables, tagset))
    }

    pub fn is_trigram(&self) -> bool {
        matches!(self, TransitionSource::Trigram(_))
    }

    /// `p(event | ctx)` for a feature-structure source. For the trigram source
    /// this is the count-table conditional.
    pub fn fv_conditional(&self, tagset: &TagSet, event: PairId, ctx: &Context) -> f64 {
        match self {
            TransitionSource::Trigram(tables) => {
                let (n, d) = tables.fv_conditional_counts(tagset, event, ctx);
                Frac::new(n, d).value()
            }
            TransitionSource::Exact(cache) => {
                let (n, d) = cache.counts(event, ctx);
                Frac::new(n, d).value()
            }
            TransitionSource::Pfr { store, marginals } => store
                .conditional(event, ctx)
                .unwrap_or_else(|| marginals.probability(event)),
            TransitionSource::Tree { trees, marginals } => trees
                .probability(event, ctx)
                .unwrap_or_else(|| marginals.probability(event)),
        }
    }

    /// Like [`fv_conditional`](Self::fv_conditional), also returning what
    /// the value was derived from.
    pub fn fv_conditional_explained(&self, tagset: &TagSet, event: PairId, ctx: &Context) -> (f64, Evidence) {
        match self {
            TransitionSource::Trigram(tables) => {
                let (n, d) = tables.fv_conditional_counts(tagset, event, ctx);
                (Frac::new(n, d).value(), Evidence::Counts(Frac::new(n, d)))
            }
            TransitionSource::Exact(cache) => {
                let (n, d) = cache.counts(event, ctx);
                (Frac::new(n, d).value(), Evidence::Counts(Frac::new(n, d)))
            }
            TransitionSource::Pfr { store, marginals } => {
                let m = store.matching(event, ctx);
                if m.is_empty() {
                    let (n, d) = marginals.counts(event);
                    (marginals.probability(event), Evidence::Marginal(Frac::new(n, d)))
                } else {
                    let p = store.conditional(event, ctx).unwrap_or(0.0);
                    (p, Evidence::Relations(m.into_iter().cloned().collect()))
                }
            }
            TransitionSource::Tree { trees, marginals } => match trees.get(event) {
                Some(tree) => {
                    let (path, f) = tree.trace(ctx);
                    if f.den > 0 {
                        (f.value(), Evidence::TreePath(path, f))
                    } else {
                        let (n, d) = marginals.counts(event);
                        (marginals.probability(event), Evidence::Marginal(Frac::new(n, d)))
                    }
                }
                None => {
                    let (n, d) = marginals.counts(event);
                    (marginals.probability(event), Evidence::Marginal(Frac::new(n, d)))
                }
            },
        }
    }

    /// `p(t0 | t2, t1)`; with `t2 = None`, the first-order `p(t0 | t1)`.
    pub fn tag_transition(&self, tagset: &TagSet, t2: Option<TagId>, t1: TagId, t0: TagId) -> f64 {
        if let TransitionSource::Trigram(tables) = self {
            return match t2 {
                Some(t2) => tables.trigram_transition(t2, t1, t0),
                None => tables.bigram_transition(t1, t0),
            };
        }
        let pairs = tagset.decompose(t0);
        let mut p = 1.0;
        for k in 0..pairs.len() {
            let ctx = tagset.complete_context(t2, t1, &pairs[..k]);
            p *= self.fv_conditional(tagset, pairs[k], &ctx);
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// Transitions from one history to each candidate, sharing chain steps
    /// between candidates with a common prefix. Equal elementwise to
    /// [`tag_transition`](Self::tag_transition).
    pub fn batch_transitions(&self, tagset: &TagSet, t2: Option<TagId>, t1: TagId, candidates: &[TagId]) -> Vec<f64> {
        if self.is_trigram() {
            return candidates
                .iter()
                .map(|&t0| self.tag_transition(tagset, t2, t1, t0))
                .collect();
        }
        let mut memo: HashMap<&[PairId], f64> = HashMap::new();
        candidates
            .iter()
            .map(|&t0| {
                let pairs = tagset.decompose(t0);
                let mut p = 1.0;
                for k in 0..pairs.len() {
                    let key = &pairs[..=k];
                    let c = *memo.entry(key).or_insert_with(|| {
                        let ctx = tagset.complete_context(t2, t1, &pairs[..k]);
                        self.fv_conditional(tagset, pairs[k], &ctx)
                    });
                    p *= c;
                    if p == 0.0 {
                        break;
                    }
                }
                p
            })
            .collect()
    }
}

/// One chain step of an explained transition.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub event: PairId,
    pub context: Context,
    pub probability: f64,
    pub evidence: Evidence,
}

/// A transition decomposed into its chain steps.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub t2: Option<TagId>,
    pub t1: TagId,
    pub t0: TagId,
    pub steps: Vec<ChainStep>,
    pub product: f64,
    pub trigram: Option<f64>,
    rendered: Vec<String>,
}

/// Decomposes `p(t0 | t2, t1)` step by step. For the trigram source the
/// steps show exact count-table conditionals and the product is the plain
/// trigram ratio.
pub fn explain(
    tagset: &TagSet,
    source: &TransitionSource,
    tables: Option<&CountTables>,
    t2: Option<TagId>,
    t1: TagId,
    t0: TagId,
) -> Explanation {
    let pairs = tagset.decompose(t0);
    let mut steps = Vec::with_capacity(pairs.len());
    let mut rendered = Vec::new();
    let mut product = 1.0;
    for k in 0..pairs.len() {
        let context = tagset.complete_context(t2, t1, &pairs[..k]);
        let (probability, evidence) = source.fv_conditional_explained(tagset, pairs[k], &context);
        product *= probability;
        rendered.push(render_step(tagset, pairs[k], &context, probability, &evidence));
        steps.push(ChainStep {
            event: pairs[k],
            context,
            probability,
            evidence,
        });
    }
    if source.is_trigram() {
        product = source.tag_transition(tagset, t2, t1, t0);
    }
    let trigram = tables.map(|t| match t2 {
        Some(t2) => t.trigram_transition(t2, t1, t0),
        None => t.bigram_transition(t1, t0),
    });
    Explanation {
        t2,
        t1,
        t0,
        steps,
        product,
        trigram,
        rendered: {
            let mut head = vec![format!(
                "trigram: {} {} {}",
                t2.map_or_else(|| "-".to_string(), |t| tagset.render_tag(t)),
                tagset.render_tag(t1),
                tagset.render_tag(t0)
            )];
            head.extend(rendered);
            head
        },
    }
}

fn render_step(tagset: &TagSet, event: PairId, ctx: &Context, p: f64, evidence: &Evidence) -> String {
    let mut s = format!(
        "p({} | {}) = {p:.4}",
        tagset.render_pos_pair(PosPair::new(0, event)),
        tagset.render_context(ctx)
    );
    match evidence {
        Evidence::Counts(f) => s.push_str(&format!("  [{}/{}]", f.num, f.den)),
        Evidence::Marginal(f) => s.push_str(&format!("  [marginal {}/{}]", f.num, f.den)),
        Evidence::Relations(rs) => {
            for r in rs {
                s.push_str(&format!("\n    {}", r.render(tagset)));
            }
        }
        Evidence::TreePath(path, f) => {
            s.push_str("\n    ");
            for step in path {
                let sign = if step.present { '+' } else { '-' };
                s.push_str(&format!("{sign}{} ", tagset.render_pos_pair(step.test)));
            }
            s.push_str(&format!("=> {}/{}", f.num, f.den));
        }
    }
    s
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.rendered {
            writeln!(f, "{line}")?;
        }
        writeln!(f, "product = {:.4}", self.product)?;
        if let Some(t) = self.trigram {
            writeln!(f, "trigram ratio = {t:.4}")?;
        }
        Ok(())
    }
}
