//! Probabilistic feature relations: `⟨e | C_sub ; p(e | C_sub)⟩`.
//!
//! Training enumerates the (sub-)contexts observed around every event
//! feature, preselects some of them (methods 1–3), shrinks each preselected
//! context by dropping pairs that do not move the event's relative frequency
//! by more than ε, and stores the result with its exact fraction.
//!
//! Lookup collects every stored relation whose context is a subset of the
//! query context and averages their probabilities.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::config::{Method, TrainingConfig};
use crate::counts::CountTables;
use crate::error::{Error, Result};
use crate::feature_model::{is_sorted_subset, Context, FeatureId, PairId, PosPair, TagSet};
use crate::instances::{entropy, ratio_within, FeatureInstances, Frac};

/// A stored relation. `context` is a reduced context of positioned pairs;
/// the event sits at position 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pfr {
    pub event: PairId,
    pub context: Context,
    pub num: u64,
    pub den: u64,
}

impl Pfr {
    pub fn probability(&self) -> f64 {
        Frac::new(self.num, self.den).value()
    }

    pub fn frac(&self) -> Frac {
        Frac::new(self.num, self.den)
    }

    /// `0gen:FEM | 0pos:ADJ 1gen:FEM ; 170/174`
    pub fn render(&self, tagset: &TagSet) -> String {
        let ctx = tagset.render_context(&self.context);
        let event = tagset.render_pos_pair(PosPair::new(0, self.event));
        if ctx.is_empty() {
            format!("{event} | ; {}/{}", self.num, self.den)
        } else {
            format!("{event} | {ctx} ; {}/{}", self.num, self.den)
        }
    }
}

// ---------------------------------------------------------------------------
// Subcontext statistics

/// Statistics of one (sub-)context: instance counts per class and the range
/// of class probabilities over the observed complete contexts containing it.
#[derive(Debug, Clone)]
pub struct NodeStats {
    pub total: u64,
    pub counts: Box<[u64]>,
    min: Box<[Frac]>,
    max: Box<[Frac]>,
}

impl NodeStats {
    fn from_tids(fi: &FeatureInstances, tids: &[u32]) -> Self {
        let k = fi.num_classes();
        let mut total = 0;
        let mut counts = vec![0u64; k];
        let mut min = vec![Frac::new(1, 0); k];
        let mut max = vec![Frac::new(0, 0); k];
        for &t in tids {
            let t = t as usize;
            total += fi.totals[t];
            for c in 0..k {
                counts[c] += fi.class_counts[t][c];
                let p = fi.class_frac(t, c);
                if min[c].den == 0 || p.cmp_value(min[c]).is_lt() {
                    min[c] = p;
                }
                if max[c].den == 0 || p.cmp_value(max[c]).is_gt() {
                    max[c] = p;
                }
            }
        }
        NodeStats {
            total,
            counts: counts.into(),
            min: min.into(),
            max: max.into(),
        }
    }

    pub fn frac(&self, class: usize) -> Frac {
        Frac::new(self.counts[class], self.total)
    }

    /// Smallest and largest `p(class | C)` over matching complete contexts.
    pub fn complete_range(&self, class: usize) -> (Frac, Frac) {
        (self.min[class], self.max[class])
    }
}

/// Statistics for the (sub-)contexts a reduction may visit.
pub trait SubcontextStats {
    /// Statistics of the context with these sorted members.
    fn stats_of(&self, members: &[PosPair]) -> Option<Cow<'_, NodeStats>>;

    fn stats(&self, ctx: &Context) -> Option<Cow<'_, NodeStats>> {
        self.stats_of(ctx.members())
    }
}

#[derive(Debug, Clone, Copy)]
struct LatticeNode {
    item: PosPair,
    children: u32,
    num_children: u32,
    stats: u32,
}

/// Frequent (sub-)contexts of one event feature, mined depth-first over the
/// complete contexts (vertical tid-list intersection). Holds every subset
/// whose instance frequency reaches the threshold; since frequency is
/// antimonotone, all subsets of a stored context are stored as well.
///
/// Contexts live in a prefix trie over their sorted members. Contexts that
/// match the same complete contexts share one statistics record.
pub struct Lattice {
    /// Node 0 is the empty context; children are contiguous and sorted.
    nodes: Vec<LatticeNode>,
    stats: Vec<NodeStats>,
}

impl Lattice {
    pub fn build(fi: &FeatureInstances, min_freq: u64) -> Self {
        let min_freq = min_freq.max(1);
        let mut lattice = Lattice {
            nodes: Vec::new(),
            stats: Vec::new(),
        };
        if fi.total() < min_freq {
            return lattice;
        }
        let mut interned = FxHashMap::default();
        let all: Vec<u32> = (0..fi.len() as u32).collect();
        let root = lattice.intern(fi, &all, &mut interned);
        lattice.nodes.push(LatticeNode {
            item: PosPair::new(0, PairId(0)),
            children: 0,
            num_children: 0,
            stats: root,
        });
        let mut items: BTreeMap<PosPair, Vec<u32>> = BTreeMap::new();
        for (i, ctx) in fi.contexts.iter().enumerate() {
            for &m in ctx.members() {
                items.entry(m).or_default().push(i as u32);
            }
        }
        let items: Vec<(PosPair, Vec<u32>)> = items
            .into_iter()
            .filter(|(_, tids)| support(fi, tids) >= min_freq)
            .collect();
        lattice.expand(fi, min_freq, 0, &items, &mut interned);
        lattice
    }

    fn intern(&mut self, fi: &FeatureInstances, tids: &[u32], interned: &mut FxHashMap<Box<[u32]>, u32>) -> u32 {
        if let Some(&i) = interned.get(tids) {
            return i;
        }
        let i = self.stats.len() as u32;
        self.stats.push(NodeStats::from_tids(fi, tids));
        interned.insert(tids.into(), i);
        i
    }

    fn expand(
        &mut self,
        fi: &FeatureInstances,
        min_freq: u64,
        parent: usize,
        items: &[(PosPair, Vec<u32>)],
        interned: &mut FxHashMap<Box<[u32]>, u32>,
    ) {
        let first = self.nodes.len();
        for (item, tids) in items {
            let stats = self.intern(fi, tids, interned);
            self.nodes.push(LatticeNode {
                item: *item,
                children: 0,
                num_children: 0,
                stats,
            });
        }
        self.nodes[parent].children = first as u32;
        self.nodes[parent].num_children = items.len() as u32;
        for (i, (_, tids)) in items.iter().enumerate() {
            let next: Vec<(PosPair, Vec<u32>)> = items[i + 1..]
                .iter()
                .filter_map(|(other, other_tids)| {
                    let both = intersect(tids, other_tids);
                    (support(fi, &both) >= min_freq).then_some((*other, both))
                })
                .collect();
            if !next.is_empty() {
                self.expand(fi, min_freq, first + i, &next, interned);
            }
        }
    }

    fn find(&self, members: &[PosPair]) -> Option<&LatticeNode> {
        let mut node = self.nodes.first()?;
        for &m in members {
            let lo = node.children as usize;
            let kids = &self.nodes[lo..lo + node.num_children as usize];
            node = &kids[kids.binary_search_by_key(&m, |k| k.item).ok()?];
        }
        Some(node)
    }

    pub fn get(&self, ctx: &Context) -> Option<&NodeStats> {
        self.find(ctx.members()).map(|n| &self.stats[n.stats as usize])
    }

    /// Number of stored contexts.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of distinct statistics records.
    pub fn num_records(&self) -> usize {
        self.stats.len()
    }

    /// Visits every stored context in ascending order.
    pub fn for_each(&self, mut f: impl FnMut(&[PosPair], &NodeStats)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut prefix = Vec::new();
        self.visit(0, &mut prefix, &mut f);
    }

    fn visit(&self, node: usize, prefix: &mut Vec<PosPair>, f: &mut impl FnMut(&[PosPair], &NodeStats)) {
        let n = self.nodes[node];
        f(prefix, &self.stats[n.stats as usize]);
        for child in n.children as usize..(n.children + n.num_children) as usize {
            prefix.push(self.nodes[child].item);
            self.visit(child, prefix, f);
            prefix.pop();
        }
    }

    /// All stored contexts, ascending.
    pub fn contexts(&self) -> Vec<Context> {
        let mut v = Vec::with_capacity(self.len());
        self.for_each(|members, _| v.push(Context::from_sorted(members.to_vec())));
        v
    }
}

fn support(fi: &FeatureInstances, tids: &[u32]) -> u64 {
    tids.iter().map(|&t| fi.totals[t as usize]).sum()
}

impl SubcontextStats for Lattice {
    fn stats_of(&self, members: &[PosPair]) -> Option<Cow<'_, NodeStats>> {
        self.find(members).map(|n| Cow::Borrowed(&self.stats[n.stats as usize]))
    }
}

/// Direct scan over the complete contexts; no precomputation.
pub struct ScanStats<'a>(pub &'a FeatureInstances);

impl SubcontextStats for ScanStats<'_> {
    fn stats_of(&self, members: &[PosPair]) -> Option<Cow<'_, NodeStats>> {
        let tids: Vec<u32> = self
            .0
            .contexts
            .iter()
            .enumerate()
            .filter(|(_, c)| is_sorted_subset(members, c.members()))
            .map(|(i, _)| i as u32)
            .collect();
        if tids.is_empty() {
            None
        } else {
            Some(Cow::Owned(NodeStats::from_tids(self.0, &tids)))
        }
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Context reduction

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOutcome {
    /// The event never had a defined probability in the start context.
    Unusable,
    /// The start context itself disagrees with some complete context it
    /// matches by more than ε (audited reduction only).
    Rejected,
}

/// Greedy single-pass reduction. Members are tried in removal order
/// (position 2, 1, 0; canonical feature order within a position) and a
/// member is dropped when the event's probability in the smaller context
/// stays within `[1-ε, 1+ε]` of its probability in `start`. With `audited`
/// set, the smaller context must also stay within ε of every observed
/// complete context containing it, and so must `start`.
pub fn reduce_context<S: SubcontextStats>(
    tagset: &TagSet,
    stats: &S,
    class: usize,
    start: &Context,
    epsilon: f64,
    audited: bool,
) -> std::result::Result<(Context, Frac), ReduceOutcome> {
    reduce_classes(tagset, stats, &[class], start, epsilon, audited)
        .pop()
        .expect("one result per class")
}

type Reduced = std::result::Result<(Context, Frac), ReduceOutcome>;

/// [`reduce_context`] for several classes of one start context. Lookups of
/// candidate subsets are shared between classes.
pub fn reduce_classes<S: SubcontextStats>(
    tagset: &TagSet,
    stats: &S,
    classes: &[usize],
    start: &Context,
    epsilon: f64,
    audited: bool,
) -> Vec<Reduced> {
    let Some(base) = stats.stats(start).filter(|b| b.total > 0) else {
        return vec![Err(ReduceOutcome::Unusable); classes.len()];
    };
    let members = start.members();
    assert!(members.len() <= 64, "context too large");
    let order: Vec<usize> = tagset
        .removal_order(start)
        .iter()
        .map(|m| members.binary_search(m).expect("member of start"))
        .collect();
    let full: u64 = if members.len() == 64 { u64::MAX } else { (1 << members.len()) - 1 };
    let mut memo: FxHashMap<u64, Option<Cow<'_, NodeStats>>> = FxHashMap::default();
    let mut buf = Vec::with_capacity(members.len());
    let mut lookup = |mask: u64| -> Option<Cow<'_, NodeStats>> {
        memo.entry(mask)
            .or_insert_with(|| {
                buf.clear();
                buf.extend(
                    members
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, &m)| m),
                );
                stats.stats_of(&buf)
            })
            .clone()
    };
    classes
        .iter()
        .map(|&class| {
            let sound = |s: &NodeStats| {
                let p = s.frac(class);
                let (lo, hi) = s.complete_range(class);
                ratio_within(p, lo, epsilon) && ratio_within(p, hi, epsilon)
            };
            if audited && !sound(&base) {
                return Err(ReduceOutcome::Rejected);
            }
            let base_p = base.frac(class);
            let mut mask = full;
            let mut current_p = base_p;
            for &j in &order {
                let candidate = mask & !(1 << j);
                let Some(s) = lookup(candidate) else {
                    continue;
                };
                let p = s.frac(class);
                if ratio_within(p, base_p, epsilon) && (!audited || sound(&s)) {
                    mask = candidate;
                    current_p = p;
                }
            }
            let kept = members
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &m)| m)
                .collect();
            Ok((Context::from_sorted(kept), current_p))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Preselection

/// Method 1: frequent (sub-)contexts that contain some pair of the event's
/// feature type (at position 1 or 2). With `pos_condition` they must also
/// contain a pos pair at position 1 and, unless the event feature is pos
/// itself, at position 0.
pub fn preselect_method1(
    tagset: &TagSet,
    feature: FeatureId,
    lattice: &Lattice,
    config: &TrainingConfig,
) -> Vec<Context> {
    let pos = tagset.feature_id(crate::feature_model::POS_FEATURE);
    let has = |members: &[PosPair], position: u8, f: FeatureId| {
        members
            .iter()
            .any(|m| m.position() == position && tagset.pair_feature(m.pair()) == f)
    };
    let mut out = Vec::new();
    lattice.for_each(|members, stats| {
        if stats.total < config.min_context_freq {
            return;
        }
        if !(has(members, 1, feature) || has(members, 2, feature)) {
            return;
        }
        if config.pos_condition {
            let Some(pos) = pos else { return };
            if !(has(members, 1, pos) && (feature == pos || has(members, 0, pos))) {
                return;
            }
        }
        out.push(Context::from_sorted(members.to_vec()));
    });
    out
}

/// A node of the method-2 classification tree, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub enum PreselectNode {
    Leaf {
        context: Context,
        total: u64,
    },
    Split {
        position: u8,
        feature: FeatureId,
        gain: f64,
        /// `(value, child)`; `None` is the branch of contexts lacking the feature.
        branches: Vec<(Option<PairId>, PreselectNode)>,
    },
}

impl PreselectNode {
    pub fn leaves(&self) -> Vec<(&Context, u64)> {
        match self {
            PreselectNode::Leaf { context, total } => vec![(context, *total)],
            PreselectNode::Split { branches, .. } => {
                branches.iter().flat_map(|(_, c)| c.leaves()).collect()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PreselectNode::Leaf { .. } => 0,
            PreselectNode::Split { branches, .. } => {
                1 + branches.iter().map(|(_, c)| c.depth()).max().unwrap_or(0)
            }
        }
    }
}

/// Method 2: a multiway classification tree over complete contexts whose
/// classes are the values of the event feature (plus "absent"). Nodes test
/// positioned features; each leaf's path of present values is one
/// preselected context.
pub fn preselect_tree(tagset: &TagSet, fi: &FeatureInstances, config: &TrainingConfig) -> PreselectNode {
    let tids: Vec<u32> = (0..fi.len() as u32).collect();
    grow_preselect(tagset, fi, &tids, &mut Vec::new(), &mut Vec::new(), config)
}

fn grow_preselect(
    tagset: &TagSet,
    fi: &FeatureInstances,
    tids: &[u32],
    path: &mut Vec<PosPair>,
    used: &mut Vec<(u8, FeatureId)>,
    config: &TrainingConfig,
) -> PreselectNode {
    let k = fi.num_classes();
    let mut dist = vec![0u64; k];
    let mut total = 0u64;
    for &t in tids {
        total += fi.totals[t as usize];
        for (d, c) in dist.iter_mut().zip(&fi.class_counts[t as usize]) {
            *d += c;
        }
    }
    let leaf = |path: &Vec<PosPair>| PreselectNode::Leaf {
        context: Context::from_members(path.iter().copied()),
        total,
    };
    if total <= config.min_node_freq || total == 0 {
        return leaf(path);
    }
    let h = entropy(&dist);
    // attribute -> value -> class distribution
    let mut attrs: BTreeMap<(u8, FeatureId), BTreeMap<PairId, Vec<u64>>> = BTreeMap::new();
    for &t in tids {
        let t = t as usize;
        for &m in fi.contexts[t].members() {
            let key = (m.position(), tagset.pair_feature(m.pair()));
            if used.contains(&key) {
                continue;
            }
            let d = attrs
                .entry(key)
                .or_default()
                .entry(m.pair())
                .or_insert_with(|| vec![0; k]);
            for (x, c) in d.iter_mut().zip(&fi.class_counts[t]) {
                *x += c;
            }
        }
    }
    let mut best: Option<((u8, FeatureId), f64)> = None;
    for (&key, values) in &attrs {
        let mut absent = dist.clone();
        let mut rem = 0.0;
        for d in values.values() {
            let n: u64 = d.iter().sum();
            rem += n as f64 / total as f64 * entropy(d);
            for (a, x) in absent.iter_mut().zip(d) {
                *a -= x;
            }
        }
        let n_abs: u64 = absent.iter().sum();
        rem += n_abs as f64 / total as f64 * entropy(&absent);
        let gain = h - rem;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((key, gain));
        }
    }
    let Some(((position, feature), gain)) = best else {
        return leaf(path);
    };
    if gain <= config.min_gain || gain <= 1e-12 {
        return leaf(path);
    }
    // partition the node
    let mut groups: BTreeMap<Option<PairId>, Vec<u32>> = BTreeMap::new();
    for &t in tids {
        let v = fi.contexts[t as usize]
            .members()
            .iter()
            .find(|m| m.position() == position && tagset.pair_feature(m.pair()) == feature)
            .map(|m| m.pair());
        groups.entry(v).or_default().push(t);
    }
    used.push((position, feature));
    let mut branches = Vec::new();
    // values ascending, absent branch last
    let mut ordered: Vec<(Option<PairId>, Vec<u32>)> = groups.into_iter().collect();
    let absent_first = ordered.first().is_some_and(|(v, _)| v.is_none());
    ordered.rotate_left(usize::from(absent_first));
    for (value, sub) in ordered {
        if let Some(p) = value {
            path.push(PosPair::new(position, p));
        }
        let child = grow_preselect(tagset, fi, &sub, path, used, config);
        if value.is_some() {
            path.pop();
        }
        branches.push((value, child));
    }
    used.pop();
    PreselectNode::Split {
        position,
        feature,
        gain,
        branches,
    }
}

/// Method 2 preselection: the frequent leaf contexts of the tree.
pub fn preselect_method2(
    tagset: &TagSet,
    fi: &FeatureInstances,
    lattice: &Lattice,
    config: &TrainingConfig,
) -> Vec<Context> {
    let tree = preselect_tree(tagset, fi, config);
    let set: BTreeSet<Context> = tree
        .leaves()
        .into_iter()
        .map(|(c, _)| c.clone())
        .filter(|c| lattice.get(c).is_some_and(|s| s.total >= config.min_context_freq))
        .collect();
    set.into_iter().collect()
}

/// Method 3 key of a complete context: `{2pos:X, 1pos:Y}` for the pos
/// feature, `{1pos:Y, 1f:V, 0pos:Z}` otherwise. `None` when the pattern
/// cannot be instantiated.
pub fn method3_key(tagset: &TagSet, feature: FeatureId, ctx: &Context) -> Option<Context> {
    let pos = tagset.feature_id(crate::feature_model::POS_FEATURE)?;
    let find = |position: u8, f: FeatureId| {
        ctx.members()
            .iter()
            .copied()
            .find(|m| m.position() == position && tagset.pair_feature(m.pair()) == f)
    };
    if feature == pos {
        Some(Context::from_members([find(2, pos)?, find(1, pos)?]))
    } else {
        Some(Context::from_members([
            find(1, pos)?,
            find(1, feature)?,
            find(0, pos)?,
        ]))
    }
}

/// Method 3 preselection with counts: every instantiated key together with
/// its per-class instance counts.
pub fn preselect_method3(tagset: &TagSet, fi: &FeatureInstances) -> BTreeMap<Context, Vec<u64>> {
    let mut out: BTreeMap<Context, Vec<u64>> = BTreeMap::new();
    for (i, ctx) in fi.contexts.iter().enumerate() {
        if let Some(key) = method3_key(tagset, fi.feature, ctx) {
            let acc = out.entry(key).or_insert_with(|| vec![0; fi.num_classes()]);
            for (a, c) in acc.iter_mut().zip(&fi.class_counts[i]) {
                *a += c;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Store

#[derive(Debug, Clone, Default)]
struct ContextTrie {
    nodes: Vec<TrieNode>,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Vec<(PosPair, u32)>,
    record: Option<u32>,
}

impl ContextTrie {
    fn new() -> Self {
        ContextTrie {
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, ctx: &Context, record: u32) {
        let mut node = 0usize;
        for &m in ctx.members() {
            node = match self.nodes[node].children.binary_search_by_key(&m, |&(k, _)| k) {
                Ok(i) => self.nodes[node].children[i].1 as usize,
                Err(i) => {
                    let id = self.nodes.len() as u32;
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(i, (m, id));
                    id as usize
                }
            };
        }
        self.nodes[node].record = Some(record);
    }

    /// Calls `f` for every stored context that is a subset of `query`.
    fn for_each_subset(&self, query: &[PosPair], f: &mut impl FnMut(u32)) {
        self.walk(0, query, f);
    }

    fn walk(&self, node: usize, query: &[PosPair], f: &mut impl FnMut(u32)) {
        let n = &self.nodes[node];
        if let Some(r) = n.record {
            f(r);
        }
        if n.children.is_empty() {
            return;
        }
        for (j, m) in query.iter().enumerate() {
            if let Ok(i) = n.children.binary_search_by_key(m, |&(k, _)| k) {
                self.walk(n.children[i].1 as usize, &query[j + 1..], f);
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct EventRelations {
    records: Vec<Pfr>,
    trie: ContextTrie,
}

/// Trained relations of one method, grouped by event.
#[derive(Debug, Clone)]
pub struct PfrStore {
    method: Method,
    events: BTreeMap<PairId, EventRelations>,
}

impl PartialEq for PfrStore {
    fn eq(&self, other: &Self) -> bool {
        self.method == other.method && self.records().eq(other.records())
    }
}

impl PfrStore {
    /// Builds a store from records; duplicates are dropped.
    pub fn from_records(method: Method, records: impl IntoIterator<Item = Pfr>) -> Self {
        let mut grouped: BTreeMap<PairId, BTreeSet<Pfr>> = BTreeMap::new();
        for r in records {
            grouped.entry(r.event).or_default().insert(r);
        }
        let events = grouped
            .into_iter()
            .map(|(e, rs)| {
                let records: Vec<Pfr> = rs.into_iter().collect();
                let mut trie = ContextTrie::new();
                for (i, r) in records.iter().enumerate() {
                    trie.insert(&r.context, i as u32);
                }
                (e, EventRelations { records, trie })
            })
            .collect();
        PfrStore { method, events }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.events.values().map(|e| e.records.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All records ordered by event, then context.
    pub fn records(&self) -> impl Iterator<Item = &Pfr> {
        self.events.values().flat_map(|e| e.records.iter())
    }

    pub fn records_for(&self, event: PairId) -> &[Pfr] {
        self.events.get(&event).map_or(&[], |e| e.records.as_slice())
    }

    /// Stored relations of `event` whose context is a subset of `ctx`.
    pub fn matching(&self, event: PairId, ctx: &Context) -> Vec<&Pfr> {
        let Some(e) = self.events.get(&event) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        e.trie
            .for_each_subset(ctx.members(), &mut |r| out.push(&e.records[r as usize]));
        out
    }

    /// Mean probability of the matching relations, `None` if none match.
    pub fn conditional(&self, event: PairId, ctx: &Context) -> Option<f64> {
        let e = self.events.get(&event)?;
        let mut mean = MeanAccumulator::default();
        e.trie
            .for_each_subset(ctx.members(), &mut |r| mean.push(e.records[r as usize].frac()));
        mean.value()
    }

    /// One relation per line in `event | members ; num/den` form.
    pub fn dump(&self, tagset: &TagSet) -> String {
        let mut s = String::new();
        for r in self.records() {
            s.push_str(&r.render(tagset));
            s.push('\n');
        }
        s
    }
}

impl Serialize for PfrStore {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Data<'a> {
            method: Method,
            records: Vec<&'a Pfr>,
        }
        Data {
            method: self.method,
            records: self.records().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PfrStore {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Data {
            method: Method,
            records: Vec<Pfr>,
        }
        let data = Data::deserialize(d)?;
        Ok(PfrStore::from_records(data.method, data.records))
    }
}

/// Arithmetic mean of fractions, summed exactly while the terms fit in
/// `u128` and in floating point after that.
#[derive(Debug, Default)]
struct MeanAccumulator {
    exact: Option<(u128, u128)>,
    float: f64,
    overflowed: bool,
    n: u64,
}

impl MeanAccumulator {
    fn push(&mut self, f: Frac) {
        let (num, den) = if f.den == 0 { (0, 1) } else { (f.num as u128, f.den as u128) };
        self.float += num as f64 / den as f64;
        self.n += 1;
        if self.overflowed {
            return;
        }
        let (a, b) = self.exact.unwrap_or((0, 1));
        let g = gcd(b, den);
        let sum = a
            .checked_mul(den / g)
            .zip(num.checked_mul(b / g))
            .and_then(|(x, y)| x.checked_add(y))
            .zip((b / g).checked_mul(den));
        match sum {
            Some((n, d)) => {
                let g = gcd(n, d).max(1);
                self.exact = Some((n / g, d / g));
            }
            None => self.overflowed = true,
        }
    }

    fn value(&self) -> Option<f64> {
        if self.n == 0 {
            return None;
        }
        match self.exact {
            Some((num, den)) if !self.overflowed => match den.checked_mul(self.n as u128) {
                Some(d) => {
                    let g = gcd(num, d).max(1);
                    Some((num / g) as f64 / (d / g) as f64)
                }
                None => Some(self.float / self.n as f64),
            },
            _ => Some(self.float / self.n as f64),
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Relations of one event feature under a given method.
pub fn feature_relations(
    tagset: &TagSet,
    fi: &FeatureInstances,
    method: Method,
    config: &TrainingConfig,
) -> Vec<Pfr> {
    feature_relations_for(tagset, fi, &[method], config)
        .pop()
        .unwrap_or_default()
}

/// Relations of one event feature for several methods; methods 1 and 2
/// share one lattice.
fn feature_relations_for(
    tagset: &TagSet,
    fi: &FeatureInstances,
    methods: &[Method],
    config: &TrainingConfig,
) -> Vec<Vec<Pfr>> {
    let lattice = methods
        .iter()
        .any(|m| matches!(m, Method::Pfr1 | Method::Pfr2))
        .then(|| Lattice::build(fi, config.min_context_freq));
    methods
        .iter()
        .map(|&method| match (method, &lattice) {
            (Method::Pfr3, _) => method3_relations(tagset, fi),
            (Method::Pfr1 | Method::Pfr2, Some(lattice)) => {
                let preselected = if method == Method::Pfr1 {
                    preselect_method1(tagset, fi.feature, lattice, config)
                } else {
                    preselect_method2(tagset, fi, lattice, config)
                };
                debug!(
                    "feature {}, method {method}: {} lattice nodes, {} preselected",
                    tagset.feature_name(fi.feature),
                    lattice.len(),
                    preselected.len()
                );
                reduce_all(tagset, fi, lattice, &preselected, config)
            }
            _ => Vec::new(),
        })
        .collect()
}

fn method3_relations(tagset: &TagSet, fi: &FeatureInstances) -> Vec<Pfr> {
    let mut out = Vec::new();
    for (key, counts) in preselect_method3(tagset, fi) {
        let den: u64 = counts.iter().sum();
        for (class, &event) in fi.classes.iter().enumerate() {
            out.push(Pfr {
                event,
                context: key.clone(),
                num: counts[class],
                den,
            });
        }
    }
    out
}

fn reduce_all(
    tagset: &TagSet,
    fi: &FeatureInstances,
    lattice: &Lattice,
    preselected: &[Context],
    config: &TrainingConfig,
) -> Vec<Pfr> {
    let classes: Vec<usize> = (0..fi.classes.len()).collect();
    let reduced: Vec<Vec<Reduced>> = preselected
        .par_iter()
        .map(|start| reduce_classes(tagset, lattice, &classes, start, config.epsilon, config.audited_reduction))
        .collect();
    let mut per_event: Vec<BTreeSet<Pfr>> = vec![BTreeSet::new(); classes.len()];
    for (start, results) in preselected.iter().zip(reduced) {
        for ((set, &event), r) in per_event.iter_mut().zip(&fi.classes).zip(results) {
            match r {
                Ok((context, p)) => {
                    set.insert(Pfr {
                        event,
                        context,
                        num: p.num,
                        den: p.den,
                    });
                }
                Err(ReduceOutcome::Unusable) => {
                    debug!("skipping unusable context {}", tagset.render_context(start))
                }
                Err(ReduceOutcome::Rejected) => {}
            }
        }
    }
    per_event.into_iter().flatten().collect()
}

/// Trains a relation store with method 1, 2 or 3.
pub fn build_pfr_store(
    tagset: &TagSet,
    tables: &CountTables,
    method: Method,
    config: &TrainingConfig,
) -> Result<PfrStore> {
    Ok(build_pfr_stores(tagset, tables, &[method], config)?
        .pop()
        .expect("one store per method"))
}

/// Trains one relation store per method, in the order given.
pub fn build_pfr_stores(
    tagset: &TagSet,
    tables: &CountTables,
    methods: &[Method],
    config: &TrainingConfig,
) -> Result<Vec<PfrStore>> {
    if let Some(m) = methods.iter().find(|m| !m.is_pfr()) {
        return Err(Error::Config(format!("method {m} does not produce PFRs")));
    }
    config.validate()?;
    let features = tagset.canonical_order();
    let per_feature: Vec<Vec<Vec<Pfr>>> = features
        .par_iter()
        .map(|&f| {
            let fi = FeatureInstances::build(tagset, tables, f);
            feature_relations_for(tagset, &fi, methods, config)
        })
        .collect();
    let mut records: Vec<Vec<Pfr>> = vec![Vec::new(); methods.len()];
    for per_method in per_feature {
        for (acc, r) in records.iter_mut().zip(per_method) {
            acc.extend(r);
        }
    }
    Ok(methods
        .iter()
        .zip(records)
        .map(|(&m, r)| PfrStore::from_records(m, r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_model::TagId;

    /// Trigram counts shaped after the worked decomposition example:
    /// `p(0gen:FEM | 0pos:ADJ 1gen:FEM) = 170/174`,
    /// `p(0num:SG | 0pos:ADJ 1num:SG 2pos:DET) = 96/96`,
    /// `p(0pos:ADJ | 1gen:FEM 1pos:NOUN 2pos:DET) = 69/465`,
    /// and the complete trigram DET.FEM.SG.DEF NOUN.FEM.SG ADJ.FEM.SG seen
    /// 44 times after a history seen 298 times.
    pub(crate) fn figure_fixture() -> (TagSet, CountTables, [TagId; 3]) {
        let mut ts = TagSet::new();
        let mut t = |s: &str| ts.parse_tag(s).unwrap();
        let det_fs = t("pos=DET|typ=DEF|gen=FEM|num=SG");
        let det_fp = t("pos=DET|typ=DEF|gen=FEM|num=PL");
        let det_ms = t("pos=DET|typ=DEF|gen=MAS|num=SG");
        let noun_fs = t("pos=NOUN|gen=FEM|num=SG");
        let noun_fp = t("pos=NOUN|gen=FEM|num=PL");
        let noun_ms = t("pos=NOUN|gen=MAS|num=SG");
        let adj_fs = t("pos=ADJ|gen=FEM|num=SG");
        let adj_fp = t("pos=ADJ|gen=FEM|num=PL");
        let adj_mp = t("pos=ADJ|gen=MAS|num=PL");
        let adj_ms = t("pos=ADJ|gen=MAS|num=SG");
        let prep = t("pos=PREP");
        let verb = t("pos=VERB");
        let tables = CountTables::from_trigrams([
            ((det_fs, noun_fs, adj_fs), 44),
            ((det_fs, noun_fs, verb), 254),
            ((det_fp, noun_fp, adj_fp), 25),
            ((det_fp, noun_fp, verb), 142),
            ((prep, noun_fp, adj_fp), 101),
            ((prep, noun_fp, adj_mp), 4),
            ((det_ms, noun_ms, adj_ms), 52),
        ]);
        (ts, tables, [det_fs, noun_fs, adj_fs])
    }

    fn pp(ts: &TagSet, s: &str) -> PosPair {
        ts.parse_pos_pair(s).unwrap()
    }

    fn ctx(ts: &TagSet, members: &[&str]) -> Context {
        Context::from_members(members.iter().map(|m| pp(ts, m)))
    }

    #[test]
    fn figure_counts() {
        let (ts, tables, _) = figure_fixture();
        let fem = ts.lookup_pair("gen", "FEM").unwrap();
        let sg = ts.lookup_pair("num", "SG").unwrap();
        let adj = ts.lookup_pair("pos", "ADJ").unwrap();
        let c = ctx(&ts, &["0pos:ADJ", "1gen:FEM"]);
        assert_eq!(tables.fv_conditional_counts(&ts, fem, &c), (170, 174));
        let c = ctx(&ts, &["0pos:ADJ", "1num:SG", "2pos:DET"]);
        assert_eq!(tables.fv_conditional_counts(&ts, sg, &c), (96, 96));
        let c = ctx(&ts, &["1gen:FEM", "1pos:NOUN", "2pos:DET"]);
        assert_eq!(tables.fv_conditional_counts(&ts, adj, &c), (69, 465));
    }

    #[test]
    fn figure_reduction() {
        let (ts, tables, [det, noun, adj]) = figure_fixture();
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        let lattice = Lattice::build(&fi, 1);
        let fem = fi.class_of(ts.lookup_pair("gen", "FEM").unwrap()).unwrap();
        let start = ts.complete_context(Some(det), noun, ts.chain_prefix(adj, gen));
        assert_eq!(start.len(), 8);
        for audited in [false, true] {
            let (reduced, p) = reduce_context(&ts, &lattice, fem, &start, 0.03, audited).unwrap();
            assert_eq!(ts.render_context(&reduced), "0pos:ADJ 1gen:FEM");
            assert_eq!(p, Frac::new(170, 174));
            assert!((p.value() - 0.977).abs() < 5e-4);
        }
        // the scan route agrees with the lattice route
        let (r2, p2) =
            reduce_context(&ts, &ScanStats(&fi), fem, &start, 0.03, true).unwrap();
        assert_eq!(ts.render_context(&r2), "0pos:ADJ 1gen:FEM");
        assert_eq!(p2, Frac::new(170, 174));
    }

    #[test]
    fn zero_epsilon_keeps_informative_context() {
        let (ts, tables, [det, noun, adj]) = figure_fixture();
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        let lattice = Lattice::build(&fi, 1);
        let fem = fi.class_of(ts.lookup_pair("gen", "FEM").unwrap()).unwrap();
        let start = ts.complete_context(Some(det), noun, ts.chain_prefix(adj, gen));
        let (reduced, p) = reduce_context(&ts, &lattice, fem, &start, 0.0, false).unwrap();
        // every retained member is needed to keep 44/44 exactly
        assert_eq!(p, Frac::new(44, 44));
        for m in reduced.members() {
            let s = lattice.get(&reduced.without(*m)).unwrap();
            assert_ne!(s.frac(fem).cmp_value(Frac::new(1, 1)), std::cmp::Ordering::Equal);
        }
        assert!(reduced.is_subset_of(&start));
    }

    #[test]
    fn unusable_context() {
        let (ts, tables, _) = figure_fixture();
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        let lattice = Lattice::build(&fi, 1);
        let never = ctx(&ts, &["0pos:VERB", "1pos:ADJ"]);
        assert_eq!(
            reduce_context(&ts, &lattice, 0, &never, 0.03, false),
            Err(ReduceOutcome::Unusable)
        );
    }

    #[test]
    fn lattice_matches_scan() {
        let (ts, tables, _) = figure_fixture();
        for f in ts.canonical_order() {
            let fi = FeatureInstances::build(&ts, &tables, f);
            let lattice = Lattice::build(&fi, 1);
            let scan = ScanStats(&fi);
            for c in lattice.contexts() {
                let a = lattice.get(&c).unwrap();
                let b = scan.stats(&c).unwrap();
                assert_eq!(a.total, b.total);
                assert_eq!(a.counts, b.counts);
                for k in 0..fi.num_classes() {
                    assert_eq!(a.complete_range(k), b.complete_range(k));
                }
            }
            // every subset of every complete context is present
            let n: usize = fi.contexts.iter().map(|c| 1usize << c.len()).sum();
            assert!(lattice.len() <= n + 1);
            for c in &fi.contexts {
                for m in c.members() {
                    assert!(lattice.get(&c.without(*m)).is_some());
                }
            }
        }
    }

    #[test]
    fn lattice_threshold_prunes() {
        let (ts, tables, _) = figure_fixture();
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        let full = Lattice::build(&fi, 1);
        let pruned = Lattice::build(&fi, 100);
        assert!(pruned.len() < full.len());
        for c in pruned.contexts() {
            assert!(pruned.get(&c).unwrap().total >= 100);
        }
        for c in full.contexts() {
            if full.get(&c).unwrap().total >= 100 {
                assert!(pruned.get(&c).is_some());
            }
        }
    }

    #[test]
    fn shared_subsets_merge() {
        let mut ts = TagSet::new();
        let a = ts.parse_tag("pos=N|gen=F").unwrap();
        let b = ts.parse_tag("pos=N|gen=M").unwrap();
        let c = ts.parse_tag("pos=A|gen=F").unwrap();
        let tables = CountTables::from_trigrams([((a, a, c), 1), ((b, a, c), 1)]);
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        assert_eq!(fi.len(), 2);
        // each complete context has 5 members: 32 subsets each, 16 shared
        let lattice = Lattice::build(&fi, 1);
        assert_eq!(lattice.len(), 32 + 32 - 16);
    }

    #[test]
    fn method1_preselection() {
        let (ts, tables, _) = figure_fixture();
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        let lattice = Lattice::build(&fi, 1);
        let mut cfg = TrainingConfig::exact();
        let pre = preselect_method1(&ts, gen, &lattice, &cfg);
        assert!(!pre.is_empty());
        let gen_mas = ctx(&ts, &["0pos:ADJ", "1gen:MAS", "1pos:NOUN"]);
        assert!(pre.contains(&gen_mas));
        for c in &pre {
            let s = ts.render_context(c);
            assert!(s.contains("gen:"), "{s}");
            assert!(s.contains("1pos:") && s.contains("0pos:"), "{s}");
        }
        cfg.min_context_freq = 53;
        let pre = preselect_method1(&ts, gen, &lattice, &cfg);
        assert!(!pre.contains(&gen_mas));
        cfg.min_context_freq = 0;
        cfg.pos_condition = false;
        let pre = preselect_method1(&ts, gen, &lattice, &cfg);
        assert!(pre.contains(&ctx(&ts, &["1gen:MAS"])));
        assert!(!pre.iter().any(|c| !ts.render_context(c).contains("gen:")));
    }

    #[test]
    fn method3_keys() {
        let mut ts = TagSet::new();
        let prep = ts.parse_tag("pos=PREP").unwrap();
        let det = ts.parse_tag("pos=DET|gen=FEM").unwrap();
        let noun = ts.parse_tag("pos=NOUN|gen=FEM").unwrap();
        let pos = ts.pos_feature();
        let gen = ts.feature_id("gen").unwrap();
        let c = ts.complete_context(Some(prep), det, &[]);
        let k = method3_key(&ts, pos, &c).unwrap();
        assert_eq!(ts.render_context(&k), "1pos:DET 2pos:PREP");
        let c = ts.complete_context(Some(prep), det, ts.chain_prefix(noun, gen));
        let k = method3_key(&ts, gen, &c).unwrap();
        assert_eq!(ts.render_context(&k), "0pos:NOUN 1pos:DET 1gen:FEM");
        let c = ts.complete_context(Some(det), prep, ts.chain_prefix(noun, gen));
        assert!(method3_key(&ts, gen, &c).is_none());
    }

    #[test]
    fn method2_three_classes_at_root() {
        // 0num depends on 1num; three classes SG / PL / absent
        let mut ts = TagSet::new();
        let n_sg = ts.parse_tag("pos=N|num=SG").unwrap();
        let n_pl = ts.parse_tag("pos=N|num=PL").unwrap();
        let v = ts.parse_tag("pos=V").unwrap();
        let tables = CountTables::from_trigrams([
            ((v, n_sg, n_sg), 10),
            ((v, n_pl, n_pl), 10),
            ((v, v, v), 10),
        ]);
        let num = ts.feature_id("num").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, num);
        assert_eq!(fi.num_classes(), 3);
        let cfg = TrainingConfig::exact();
        let tree = preselect_tree(&ts, &fi, &cfg);
        let PreselectNode::Split { branches, .. } = &tree else {
            panic!("expected a split");
        };
        assert_eq!(branches.len(), 3);
        assert!(branches.last().unwrap().0.is_none());
    }

    #[test]
    fn method2_zero_gain_is_single_leaf() {
        let mut ts = TagSet::new();
        let a = ts.parse_tag("pos=A|gen=F").unwrap();
        let b = ts.parse_tag("pos=A|gen=M").unwrap();
        let x = ts.parse_tag("pos=X").unwrap();
        let y = ts.parse_tag("pos=Y").unwrap();
        // the current gen is independent of everything in the context
        let tables = CountTables::from_trigrams([
            ((x, x, a), 5),
            ((x, x, b), 5),
            ((y, x, a), 5),
            ((y, x, b), 5),
            ((x, y, a), 5),
            ((x, y, b), 5),
        ]);
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);
        let tree = preselect_tree(&ts, &fi, &TrainingConfig::exact());
        assert_eq!(tree.depth(), 0);
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 1);
        assert!(leaves[0].0.is_empty());
    }

    #[test]
    fn method2_finds_only_the_informative_feature() {
        // 0gen copies 1gen; t2 and 1num vary independently in a balanced design
        let mut ts = TagSet::new();
        let mut tags = Vec::new();
        for g in ["F", "M"] {
            for n in ["SG", "PL"] {
                tags.push((g, ts.parse_tag(&format!("pos=N|gen={g}|num={n}")).unwrap()));
            }
        }
        let a_f = ts.parse_tag("pos=A|gen=F").unwrap();
        let a_m = ts.parse_tag("pos=A|gen=M").unwrap();
        let x = ts.parse_tag("pos=X").unwrap();
        let y = ts.parse_tag("pos=Y").unwrap();
        let mut tri = Vec::new();
        for &t2 in &[x, y] {
            for &(g, t1) in &tags {
                tri.push(((t2, t1, if g == "F" { a_f } else { a_m }), 7));
            }
        }
        let tables = CountTables::from_trigrams(tri);
        let gen = ts.feature_id("gen").unwrap();
        let fi = FeatureInstances::build(&ts, &tables, gen);

        // exact mutual information of every candidate attribute by brute force
        let fem = fi.class_of(ts.lookup_pair("gen", "F").unwrap()).unwrap();
        let mut attrs: BTreeSet<(u8, FeatureId)> = BTreeSet::new();
        for c in &fi.contexts {
            for m in c.members() {
                attrs.insert((m.position(), ts.pair_feature(m.pair())));
            }
        }
        let mut best = None;
        for &(p, f) in &attrs {
            let mut joint: BTreeMap<(Option<PairId>, bool), u64> = BTreeMap::new();
            for (i, c) in fi.contexts.iter().enumerate() {
                let v = c
                    .members()
                    .iter()
                    .find(|m| m.position() == p && ts.pair_feature(m.pair()) == f)
                    .map(|m| m.pair());
                *joint.entry((v, true)).or_default() += fi.class_counts[i][fem];
                *joint.entry((v, false)).or_default() += fi.totals[i] - fi.class_counts[i][fem];
            }
            let n: u64 = joint.values().sum();
            let mut mi = 0.0;
            for (&(v, cls), &c) in &joint {
                if c == 0 {
                    continue;
                }
                let pv: u64 = joint.iter().filter(|((w, _), _)| *w == v).map(|(_, &x)| x).sum();
                let pc: u64 = joint.iter().filter(|((_, d), _)| *d == cls).map(|(_, &x)| x).sum();
                let pj = c as f64 / n as f64;
                mi += pj * (pj / ((pv as f64 / n as f64) * (pc as f64 / n as f64))).log2();
            }
            if best.is_none_or(|(_, b)| mi > b + 1e-12) {
                best = Some(((p, f), mi));
            }
        }
        let ((bp, bf), bmi) = best.unwrap();
        assert_eq!((bp, ts.feature_name(bf)), (1, "gen"));
        assert!((bmi - 1.0).abs() < 1e-12);

        let tree = preselect_tree(&ts, &fi, &TrainingConfig::exact());
        let PreselectNode::Split { position, feature, branches, .. } = &tree else {
            panic!("expected a split")
        };
        assert_eq!((*position, ts.feature_name(*feature)), (1, "gen"));
        for (_, child) in branches {
            assert_eq!(child.depth(), 0);
        }
        for (leaf, _) in tree.leaves() {
            for m in leaf.members() {
                assert_eq!(ts.render_pos_pair(*m).get(..4), Some("1gen"));
            }
        }
    }

    #[test]
    fn trie_subset_lookup() {
        let (ts, _, _) = figure_fixture();
        let fem = ts.lookup_pair("gen", "FEM").unwrap();
        let r = |c: &[&str], num, den| Pfr {
            event: fem,
            context: ctx(&ts, c),
            num,
            den,
        };
        let store = PfrStore::from_records(
            Method::Pfr1,
            [
                r(&["0pos:ADJ", "1gen:FEM"], 170, 174),
                r(&["0pos:ADJ"], 1, 2),
                r(&["1gen:MAS"], 0, 5),
                r(&[], 1, 4),
                r(&["0pos:ADJ", "1gen:FEM"], 170, 174),
            ],
        );
        assert_eq!(store.len(), 4);
        let q = ctx(&ts, &["0pos:ADJ", "1gen:FEM", "1pos:NOUN", "2pos:DET"]);
        let m = store.matching(fem, &q);
        assert_eq!(m.len(), 3);
        let expected = (170.0 / 174.0 + 0.5 + 0.25) / 3.0;
        assert!((store.conditional(fem, &q).unwrap() - expected).abs() < 1e-15);
        let brute: Vec<&Pfr> = store
            .records_for(fem)
            .iter()
            .filter(|p| p.context.is_subset_of(&q))
            .collect();
        assert_eq!(brute.len(), m.len());
        let other = ts.lookup_pair("gen", "MAS").unwrap();
        assert_eq!(store.conditional(other, &q), None);
    }

    #[test]
    fn dump_format() {
        let (ts, _, _) = figure_fixture();
        let fem = ts.lookup_pair("gen", "FEM").unwrap();
        let p = Pfr {
            event: fem,
            context: ctx(&ts, &["1gen:FEM", "0pos:ADJ"]),
            num: 170,
            den: 174,
        };
        assert_eq!(p.render(&ts), "0gen:FEM | 0pos:ADJ 1gen:FEM ; 170/174");
    }

    #[test]
    fn method3_on_single_feature_tagset_matches_trigrams() {
        let mut ts = TagSet::new();
        let tags: Vec<TagId> = ["A", "B", "C"]
            .iter()
            .map(|p| ts.parse_tag(&format!("pos={p}")).unwrap())
            .collect();
        let seqs = [
            vec![tags[0], tags[1], tags[2], tags[0]],
            vec![tags[1], tags[1], tags[0]],
            vec![tags[2]],
        ];
        let tables = CountTables::count(seqs.iter().map(Vec::as_slice));
        let store = build_pfr_store(&ts, &tables, Method::Pfr3, &TrainingConfig::exact()).unwrap();
        let pos = ts.pos_feature();
        for ((t2, t1, _), _) in tables.trigrams() {
            for t0 in ts.tag_ids() {
                let e = ts.decompose(t0)[0];
                let c = ts.complete_context(Some(t2), t1, ts.chain_prefix(t0, pos));
                let m = store.matching(e, &c);
                assert_eq!(m.len(), 1);
                assert_eq!(m[0].probability(), tables.trigram_transition(t2, t1, t0));
            }
        }
    }

    #[test]
    fn empty_corpus_gives_empty_store() {
        let ts = TagSet::new();
        let tables = CountTables::default();
        for m in [Method::Pfr1, Method::Pfr2, Method::Pfr3] {
            let s = build_pfr_store(&ts, &tables, m, &TrainingConfig::default()).unwrap();
            assert!(s.is_empty());
        }
        assert!(build_pfr_store(&ts, &tables, Method::Tree, &TrainingConfig::default()).is_err());
    }

    #[test]
    fn many_contexts_collapse_onto_one_relation() {
        let (ts, tables, _) = figure_fixture();
        let store = build_pfr_store(&ts, &tables, Method::Pfr1, &TrainingConfig {
            min_context_freq: 1,
            ..TrainingConfig::default()
        })
        .unwrap();
        let fem = ts.lookup_pair("gen", "FEM").unwrap();
        let target = ctx(&ts, &["0pos:ADJ", "1gen:FEM"]);
        let hits: Vec<&Pfr> = store
            .records_for(fem)
            .iter()
            .filter(|p| p.context == target)
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].frac(), Frac::new(170, 174));
        let fi = FeatureInstances::build(&ts, &tables, ts.feature_id("gen").unwrap());
        let lattice = Lattice::build(&fi, 1);
        let pre = preselect_method1(&ts, fi.feature, &lattice, &TrainingConfig {
            min_context_freq: 1,
            ..TrainingConfig::default()
        });
        assert!(store.records_for(fem).len() <= pre.len());
    }

    #[test]
    fn serde_roundtrip() {
        let (ts, tables, _) = figure_fixture();
        let store = build_pfr_store(&ts, &tables, Method::Pfr1, &TrainingConfig::default()).unwrap();
        let json = serde_json::to_string(&store).unwrap();
        let back: PfrStore = serde_json::from_str(&json).unwrap();
        assert_eq!(back, store);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
