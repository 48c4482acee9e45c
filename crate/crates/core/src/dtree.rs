//! Binary probability trees, one per feature-value pair.
//!
//! Each tree classifies trigram instances by whether the current tag carries
//! the tree's event pair. Internal nodes test one positioned pair and route
//! instances that contain it to the present branch, all others to the absent
//! branch; leaves hold the exact fraction of event-carrying instances that
//! reach them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TrainingConfig;
use crate::counts::CountTables;
use crate::error::Result;
use crate::feature_model::{Context, PairId, PosPair, TagSet};
use crate::instances::{entropy, FeatureInstances, Frac};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Internal { test: PosPair, present: u32, absent: u32 },
    Leaf { num: u64, den: u64 },
}

/// Nodes live in a flat arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub event: PairId,
    nodes: Vec<TreeNode>,
}

/// One step of a root-to-leaf walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub test: PosPair,
    pub present: bool,
}

impl DecisionTree {
    pub fn leaf(event: PairId, frac: Frac) -> Self {
        DecisionTree {
            event,
            nodes: vec![TreeNode::Leaf {
                num: frac.num,
                den: frac.den,
            }],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, i: u32) -> &TreeNode {
        &self.nodes[i as usize]
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: u32) -> usize {
            match *t.node(i) {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { present, absent, .. } => 1 + go(t, present).max(go(t, absent)),
            }
        }
        go(self, 0)
    }

    /// Walks down for context `ctx`; returns the path taken and the leaf.
    pub fn trace(&self, ctx: &Context) -> (Vec<PathStep>, Frac) {
        let mut path = Vec::new();
        let mut i = 0;
        loop {
            match *self.node(i) {
                TreeNode::Leaf { num, den } => return (path, Frac::new(num, den)),
                TreeNode::Internal { test, present, absent } => {
                    let here = ctx.contains(test);
                    path.push(PathStep { test, present: here });
                    i = if here { present } else { absent };
                }
            }
        }
    }

    /// Probability of the event in `ctx`; `None` for a `0/0` leaf.
    pub fn probability(&self, ctx: &Context) -> Option<f64> {
        let (_, f) = self.trace(ctx);
        (f.den > 0).then(|| f.value())
    }

    /// Every leaf with its path constraints: pairs that must be present and
    /// pairs that must be absent.
    pub fn leaves(&self) -> Vec<(Context, Context, Frac)> {
        let mut out = Vec::new();
        let mut stack = vec![(0u32, Vec::new(), Vec::new())];
        while let Some((i, pos, neg)) = stack.pop() {
            match *self.node(i) {
                TreeNode::Leaf { num, den } => out.push((
                    Context::from_members(pos),
                    Context::from_members(neg),
                    Frac::new(num, den),
                )),
                TreeNode::Internal { test, present, absent } => {
                    let mut p = pos.clone();
                    p.push(test);
                    stack.push((absent, pos, {
                        let mut n = neg.clone();
                        n.push(test);
                        n
                    }));
                    stack.push((present, p, neg));
                }
            }
        }
        out
    }

    /// Indented dump: `?1gen:FEM` for tests, `num/den (=p)` for leaves; the
    /// present branch is marked `+`, the absent branch `-`.
    pub fn dump(&self, tagset: &TagSet) -> String {
        let mut s = String::new();
        self.dump_node(tagset, 0, 0, "", &mut s);
        s
    }

    fn dump_node(&self, tagset: &TagSet, i: u32, depth: usize, mark: &str, s: &mut String) {
        let indent = "  ".repeat(depth);
        match *self.node(i) {
            TreeNode::Leaf { num, den } => {
                let _ = writeln!(s, "{indent}{mark}{num}/{den} (={:.3})", Frac::new(num, den).value());
            }
            TreeNode::Internal { test, present, absent } => {
                let _ = writeln!(s, "{indent}{mark}?{}", tagset.render_pos_pair(test));
                self.dump_node(tagset, present, depth + 1, "+ ", s);
                self.dump_node(tagset, absent, depth + 1, "- ", s);
            }
        }
    }
}

/// `H(event) − Σ_branch |branch|/|node| · H(event | branch)` for a binary
/// split, given `(total, positives)` of the node and of the present branch.
pub fn information_gain(node: (u64, u64), present: (u64, u64)) -> f64 {
    let (n, k) = node;
    if n == 0 {
        return 0.0;
    }
    let (np, kp) = present;
    let (na, ka) = (n - np, k - kp);
    let h = |t: u64, p: u64| entropy(&[p, t - p]);
    h(n, k) - (np as f64 / n as f64) * h(np, kp) - (na as f64 / n as f64) * h(na, ka)
}

/// Builds the tree of `event` over the instances of its feature.
pub fn build_tree(fi: &FeatureInstances, event: PairId, config: &TrainingConfig) -> DecisionTree {
    let Some(class) = fi.class_of(event) else {
        return DecisionTree::leaf(event, Frac::new(0, 0));
    };
    let mut tree = DecisionTree {
        event,
        nodes: Vec::new(),
    };
    let tids: Vec<u32> = (0..fi.len() as u32).collect();
    grow(fi, class, &tids, config, &mut tree.nodes);
    tree
}

fn grow(fi: &FeatureInstances, class: usize, tids: &[u32], config: &TrainingConfig, nodes: &mut Vec<TreeNode>) -> u32 {
    let id = nodes.len() as u32;
    let mut total = 0u64;
    let mut pos = 0u64;
    // candidate test -> (instances, positives)
    let mut stats: BTreeMap<PosPair, (u64, u64)> = BTreeMap::new();
    for &t in tids {
        let t = t as usize;
        let n = fi.totals[t];
        let k = fi.class_counts[t][class];
        total += n;
        pos += k;
        for &m in fi.contexts[t].members() {
            let e = stats.entry(m).or_default();
            e.0 += n;
            e.1 += k;
        }
    }
    nodes.push(TreeNode::Leaf { num: pos, den: total });
    if total == 0 || total < config.min_node_freq {
        return id;
    }
    let mut best: Option<(PosPair, f64, u64)> = None;
    for (&m, &(n, k)) in &stats {
        let g = information_gain((total, pos), (n, k));
        if best.is_none_or(|(_, bg, _)| g > bg + 1e-12) {
            best = Some((m, g, n));
        }
    }
    let Some((test, gain, n_present)) = best else {
        return id;
    };
    if gain <= 1e-12
        || gain < config.min_gain
        || n_present < config.min_node_freq
        || total - n_present < config.min_node_freq
    {
        return id;
    }
    let (yes, no): (Vec<u32>, Vec<u32>) = tids
        .iter()
        .partition(|&&t| fi.contexts[t as usize].contains(test));
    let present = grow(fi, class, &yes, config, nodes);
    let absent = grow(fi, class, &no, config, nodes);
    nodes[id as usize] = TreeNode::Internal { test, present, absent };
    id
}

/// All trees of a tagset, keyed by event pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeSet {
    trees: BTreeMap<PairId, DecisionTree>,
}

impl TreeSet {
    pub fn from_trees(trees: impl IntoIterator<Item = DecisionTree>) -> Self {
        TreeSet {
            trees: trees.into_iter().map(|t| (t.event, t)).collect(),
        }
    }

    pub fn get(&self, event: PairId) -> Option<&DecisionTree> {
        self.trees.get(&event)
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DecisionTree> {
        self.trees.values()
    }

    pub fn num_nodes(&self) -> usize {
        self.trees.values().map(|t| t.nodes.len()).sum()
    }

    /// `None` when the event has no tree or its leaf is `0/0`.
    pub fn probability(&self, event: PairId, ctx: &Context) -> Option<f64> {
        self.trees.get(&event)?.probability(ctx)
    }

    pub fn dump(&self, tagset: &TagSet) -> String {
        let mut s = String::new();
        for t in self.trees.values() {
            let _ = writeln!(s, "# 0{}", tagset.render_pair(t.event).replacen('=', ":", 1));
            s.push_str(&t.dump(tagset));
        }
        s
    }
}

/// Trains one tree per pair (the boundary pair included).
pub fn build_tree_set(tagset: &TagSet, tables: &CountTables, config: &TrainingConfig) -> Result<TreeSet> {
    config.validate()?;
    let trees: Vec<Vec<DecisionTree>> = tagset
        .canonical_order()
        .par_iter()
        .map(|&f| {
            let fi = FeatureInstances::build(tagset, tables, f);
            fi.classes
                .par_iter()
                .map(|&e| build_tree(&fi, e, config))
                .collect()
        })
        .collect();
    Ok(TreeSet::from_trees(trees.into_iter().flatten()))
}
