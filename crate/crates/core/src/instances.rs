//! Trigram instances grouped by complete context, per event feature.
//!
//! For a feature `f`, the complete context of a padded trigram instance
//! `(t2, t1, t0)` is every pair of `t2` at position 2, every pair of `t1` at
//! position 1 and the pairs of `t0` that precede `f` in the chain order at
//! position 0. Instances sharing a complete context are merged and their
//! current-tag value of `f` is tallied per class.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::counts::CountTables;
use crate::feature_model::{Context, FeatureId, PairId, TagSet};

/// An exact fraction `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frac {
    pub num: u64,
    pub den: u64,
}

impl Frac {
    pub fn new(num: u64, den: u64) -> Self {
        Frac { num, den }
    }

    /// `0/0` reads as 0.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    /// Compares values by cross-multiplication; denominators must be > 0.
    pub fn cmp_value(self, other: Frac) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// `sub/full ∈ [1-ε, 1+ε]`, with `0/0` treated as a ratio of 1.
pub fn ratio_within(sub: Frac, full: Frac, epsilon: f64) -> bool {
    let lhs = sub.num as f64 * full.den as f64;
    let rhs = sub.den as f64 * full.num as f64;
    if rhs == 0.0 {
        return lhs == 0.0;
    }
    lhs >= (1.0 - epsilon) * rhs && lhs <= (1.0 + epsilon) * rhs
}

#[derive(Debug, Clone)]
pub struct FeatureInstances {
    pub feature: FeatureId,
    /// Value pairs of the feature; class `i` is `classes[i]`, class
    /// `classes.len()` means the current tag lacks the feature.
    pub classes: Vec<PairId>,
    /// Distinct complete contexts, ascending.
    pub contexts: Vec<Context>,
    pub totals: Vec<u64>,
    /// Per context, counts for every class including "absent".
    pub class_counts: Vec<Vec<u64>>,
}

impl FeatureInstances {
    pub fn build(tagset: &TagSet, tables: &CountTables, feature: FeatureId) -> Self {
        let classes = tagset.pairs_of_feature(feature);
        let absent = classes.len();
        let mut grouped: BTreeMap<Context, Vec<u64>> = BTreeMap::new();
        for ((t2, t1, t0), n) in tables.trigrams() {
            let ctx = tagset.complete_context(Some(t2), t1, tagset.chain_prefix(t0, feature));
            let class = tagset
                .tag_value(t0, feature)
                .and_then(|p| classes.iter().position(|&c| c == p))
                .unwrap_or(absent);
            let counts = grouped.entry(ctx).or_insert_with(|| vec![0; absent + 1]);
            counts[class] += n;
        }
        let mut contexts = Vec::with_capacity(grouped.len());
        let mut totals = Vec::with_capacity(grouped.len());
        let mut class_counts = Vec::with_capacity(grouped.len());
        for (ctx, counts) in grouped {
            contexts.push(ctx);
            totals.push(counts.iter().sum());
            class_counts.push(counts);
        }
        FeatureInstances {
            feature,
            classes,
            contexts,
            totals,
            class_counts,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len() + 1
    }

    pub fn class_of(&self, pair: PairId) -> Option<usize> {
        self.classes.iter().position(|&c| c == pair)
    }

    pub fn total(&self) -> u64 {
        self.totals.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Probability of `class` within complete context `i`.
    pub fn class_frac(&self, i: usize, class: usize) -> Frac {
        Frac::new(self.class_counts[i][class], self.totals[i])
    }
}

/// Entropy in bits of a count distribution.
pub fn entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_rules() {
        assert!(ratio_within(Frac::new(170, 174), Frac::new(44, 44), 0.03));
        assert!(!ratio_within(Frac::new(170, 174), Frac::new(44, 44), 0.02));
        assert!(ratio_within(Frac::new(0, 5), Frac::new(0, 3), 0.0));
        assert!(!ratio_within(Frac::new(1, 5), Frac::new(0, 3), 0.5));
        assert!(!ratio_within(Frac::new(0, 5), Frac::new(1, 3), 0.5));
        assert!(ratio_within(Frac::new(0, 5), Frac::new(1, 3), 1.0));
        assert!(ratio_within(Frac::new(2, 4), Frac::new(1, 2), 0.0));
    }

    #[test]
    fn entropies() {
        assert_eq!(entropy(&[4, 4]), 1.0);
        assert_eq!(entropy(&[4, 0]), 0.0);
        assert_eq!(entropy(&[]), 0.0);
        assert!((entropy(&[3, 1]) - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn groups_by_complete_context() {
        let mut ts = TagSet::new();
        let n = ts.parse_tag("pos=N|gen=F").unwrap();
        let a_f = ts.parse_tag("pos=A|gen=F").unwrap();
        let a_m = ts.parse_tag("pos=A|gen=M").unwrap();
        let v = ts.parse_tag("pos=V").unwrap();
        let t = CountTables::from_trigrams([
            ((v, n, a_f), 3),
            ((v, n, a_m), 1),
            ((v, n, v), 2),
        ]);
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &t, gen);
        // gen prefix is pos, so A-tags share one context and V another
        assert_eq!(fi.len(), 2);
        assert_eq!(fi.total(), 6);
        let i = fi
            .contexts
            .iter()
            .position(|c| c.len() == 4 && ts.render_context(c).contains("0pos:A"))
            .unwrap();
        let f = fi.class_of(ts.lookup_pair("gen", "F").unwrap()).unwrap();
        assert_eq!(fi.class_frac(i, f), Frac::new(3, 4));
    }
}
