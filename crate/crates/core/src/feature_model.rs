//! Feature-value pairs, feature-structure tags and positioned contexts.
//!
//! A tag is a bundle of `feature=value` atoms with at most one atom per
//! feature. Everything is interned into dense integer ids at corpus load;
//! the [`TagSet`] owns the symbol tables and the canonical feature order
//! (`pos` first, the remaining features by name) that fixes the order in
//! which a tag's pairs are chained when its transition probability is
//! reconstructed.
//!
//! Contexts address pairs by trigram slot: position 0 is the tag being
//! predicted, 1 the previous tag and 2 the one before. They render as
//! `<position><feature>:<VALUE>`, e.g. `1gen:FEM`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the part-of-speech feature, which always leads the chain order.
pub const POS_FEATURE: &str = "pos";
/// Value of the reserved boundary tag `pos=BOUND`.
pub const BOUNDARY_VALUE: &str = "BOUND";

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

dense_id!(FeatureId);
dense_id!(ValueId);
dense_id!(
    /// Interned feature-value pair.
    PairId
);
dense_id!(
    /// Interned tag. Equal pair sets always share one id.
    TagId
);

/// A feature-value pair tied to a trigram slot.
///
/// Packed into one `u32`: the top two bits hold the position, so the natural
/// order is by position and then by pair id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosPair(u32);

impl PosPair {
    const PAIR_MASK: u32 = (1 << 30) - 1;

    pub fn new(position: u8, pair: PairId) -> Self {
        assert!(position <= 2, "trigram position {position} out of range");
        assert!(pair.0 <= Self::PAIR_MASK, "pair id overflow");
        PosPair(((position as u32) << 30) | pair.0)
    }

    #[inline]
    pub fn position(self) -> u8 {
        (self.0 >> 30) as u8
    }

    #[inline]
    pub fn pair(self) -> PairId {
        PairId(self.0 & Self::PAIR_MASK)
    }
}

/// A set of positioned pairs, kept sorted by [`PosPair`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context(Vec<PosPair>);

impl Context {
    pub fn new() -> Self {
        Context(Vec::new())
    }

    /// Builds a context from arbitrary members; duplicates collapse.
    pub fn from_members(members: impl IntoIterator<Item = PosPair>) -> Self {
        let mut v: Vec<PosPair> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Context(v)
    }

    /// Wraps members that are already sorted and unique.
    pub(crate) fn from_sorted(members: Vec<PosPair>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Context(members)
    }

    pub fn members(&self) -> &[PosPair] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, member: PosPair) -> bool {
        self.0.binary_search(&member).is_ok()
    }

    /// `self ⊆ other`, by a linear merge over both sorted member lists.
    pub fn is_subset_of(&self, other: &Context) -> bool {
        is_sorted_subset(&self.0, &other.0)
    }

    pub fn without(&self, member: PosPair) -> Context {
        Context(self.0.iter().copied().filter(|&m| m != member).collect())
    }

    pub fn with(&self, member: PosPair) -> Context {
        let mut v = self.0.clone();
        if let Err(at) = v.binary_search(&member) {
            v.insert(at, member);
        }
        Context(v)
    }
}

pub(crate) fn is_sorted_subset(small: &[PosPair], big: &[PosPair]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut it = big.iter();
    'outer: for s in small {
        for b in it.by_ref() {
            match b.cmp(s) {
                Ordering::Less => continue,
                Ordering::Equal => continue 'outer,
                Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// A feature-structure tag: its pairs in canonical chain order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tag {
    pairs: Vec<PairId>,
}

impl Tag {
    pub fn pairs(&self) -> &[PairId] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: PairId) -> bool {
        self.pairs.contains(&pair)
    }
}

/// Canonical feature comparison: `pos` first, then lexicographic by name.
pub fn compare_feature_names(a: &str, b: &str) -> Ordering {
    match (a == POS_FEATURE, b == POS_FEATURE) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.cmp(b),
    }
}

/// Symbol tables for features, values, pairs and tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TagSetData", into = "TagSetData")]
pub struct TagSet {
    features: Vec<String>,
    values: Vec<String>,
    pairs: Vec<(FeatureId, ValueId)>,
    tags: Vec<Tag>,
    feature_index: HashMap<String, FeatureId>,
    value_index: HashMap<String, ValueId>,
    pair_index: HashMap<(FeatureId, ValueId), PairId>,
    tag_index: HashMap<Vec<PairId>, TagId>,
    feature_rank: Vec<u32>,
}

impl Default for TagSet {
    fn default() -> Self {
        Self::new()
    }
}

impl TagSet {
    /// The boundary tag `pos=BOUND` is always registered first.
    pub const BOUNDARY: TagId = TagId(0);

    pub fn new() -> Self {
        let mut ts = TagSet {
            features: Vec::new(),
            values: Vec::new(),
            pairs: Vec::new(),
            tags: Vec::new(),
            feature_index: HashMap::new(),
            value_index: HashMap::new(),
            pair_index: HashMap::new(),
            tag_index: HashMap::new(),
            feature_rank: Vec::new(),
        };
        let b = ts.intern_pair(POS_FEATURE, BOUNDARY_VALUE);
        let id = ts.register(vec![b]);
        debug_assert_eq!(id, Self::BOUNDARY);
        ts
    }

    fn intern_feature(&mut self, name: &str) -> FeatureId {
        if let Some(&id) = self.feature_index.get(name) {
            return id;
        }
        let id = FeatureId(self.features.len() as u32);
        self.features.push(name.to_string());
        self.feature_index.insert(name.to_string(), id);
        self.recompute_ranks();
        id
    }

    fn recompute_ranks(&mut self) {
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.sort_by(|&a, &b| compare_feature_names(&self.features[a], &self.features[b]));
        self.feature_rank = vec![0; self.features.len()];
        for (rank, f) in order.into_iter().enumerate() {
            self.feature_rank[f] = rank as u32;
        }
    }

    fn intern_value(&mut self, name: &str) -> ValueId {
        if let Some(&id) = self.value_index.get(name) {
            return id;
        }
        let id = ValueId(self.values.len() as u32);
        self.values.push(name.to_string());
        self.value_index.insert(name.to_string(), id);
        id
    }

    fn intern_pair(&mut self, feature: &str, value: &str) -> PairId {
        let f = self.intern_feature(feature);
        let v = self.intern_value(value);
        if let Some(&id) = self.pair_index.get(&(f, v)) {
            return id;
        }
        let id = PairId(self.pairs.len() as u32);
        self.pairs.push((f, v));
        self.pair_index.insert((f, v), id);
        id
    }

    fn register(&mut self, mut pairs: Vec<PairId>) -> TagId {
        self.sort_canonical(&mut pairs);
        if let Some(&id) = self.tag_index.get(&pairs) {
            return id;
        }
        let id = TagId(self.tags.len() as u32);
        self.tag_index.insert(pairs.clone(), id);
        self.tags.push(Tag { pairs });
        id
    }

    fn sort_canonical(&self, pairs: &mut [PairId]) {
        pairs.sort_by_key(|&p| self.feature_rank[self.pair_feature(p).index()]);
    }

    /// Splits `feature=value|...` into atoms, validating the syntax.
    fn split_atoms(text: &str) -> Result<Vec<(&str, &str)>> {
        if text.is_empty() {
            return Err(Error::EmptyTag);
        }
        let mut atoms: Vec<(&str, &str)> = Vec::new();
        for atom in text.split('|') {
            let (f, v) = atom
                .split_once('=')
                .ok_or_else(|| Error::MalformedAtom(atom.to_string()))?;
            if f.is_empty() || v.is_empty() || v.contains('=') {
                return Err(Error::MalformedAtom(atom.to_string()));
            }
            if atoms.iter().any(|&(g, _)| g == f) {
                return Err(Error::DuplicateFeature {
                    feature: f.to_string(),
                    tag: text.to_string(),
                });
            }
            atoms.push((f, v));
        }
        Ok(atoms)
    }

    /// Parses a tag string and registers it if new.
    pub fn parse_tag(&mut self, text: &str) -> Result<TagId> {
        let atoms = Self::split_atoms(text)?;
        let pairs = atoms
            .into_iter()
            .map(|(f, v)| self.intern_pair(f, v))
            .collect();
        Ok(self.register(pairs))
    }

    /// Resolves a tag string without registering anything.
    pub fn lookup_tag(&self, text: &str) -> Result<Option<TagId>> {
        let atoms = Self::split_atoms(text)?;
        let mut pairs = Vec::with_capacity(atoms.len());
        for (f, v) in atoms {
            match self.lookup_pair(f, v) {
                Some(p) => pairs.push(p),
                None => return Ok(None),
            }
        }
        self.sort_canonical(&mut pairs);
        Ok(self.tag_index.get(&pairs).copied())
    }

    /// Returns the tag with exactly these pairs, registering it if needed.
    pub fn tag_from_pairs(&mut self, pairs: &[PairId]) -> TagId {
        self.register(pairs.to_vec())
    }

    pub fn lookup_pair(&self, feature: &str, value: &str) -> Option<PairId> {
        let f = self.feature_index.get(feature)?;
        let v = self.value_index.get(value)?;
        self.pair_index.get(&(*f, *v)).copied()
    }

    pub fn pair(&mut self, feature: &str, value: &str) -> PairId {
        self.intern_pair(feature, value)
    }

    pub fn feature_id(&self, name: &str) -> Option<FeatureId> {
        self.feature_index.get(name).copied()
    }

    pub fn pos_feature(&self) -> FeatureId {
        self.feature_index[POS_FEATURE]
    }

    pub fn tag(&self, id: TagId) -> &Tag {
        &self.tags[id.index()]
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn tag_ids(&self) -> impl Iterator<Item = TagId> {
        (0..self.tags.len() as u32).map(TagId)
    }

    pub fn pair_ids(&self) -> impl Iterator<Item = PairId> {
        (0..self.pairs.len() as u32).map(PairId)
    }

    pub fn is_boundary(&self, id: TagId) -> bool {
        id == Self::BOUNDARY
    }

    pub fn pair_feature(&self, pair: PairId) -> FeatureId {
        self.pairs[pair.index()].0
    }

    pub fn pair_value(&self, pair: PairId) -> ValueId {
        self.pairs[pair.index()].1
    }

    pub fn feature_name(&self, f: FeatureId) -> &str {
        &self.features[f.index()]
    }

    pub fn value_name(&self, v: ValueId) -> &str {
        &self.values[v.index()]
    }

    /// Rank of a feature in the canonical chain order (0 = `pos`).
    pub fn feature_rank(&self, f: FeatureId) -> u32 {
        self.feature_rank[f.index()]
    }

    pub fn pair_rank(&self, pair: PairId) -> u32 {
        self.feature_rank(self.pair_feature(pair))
    }

    /// Features in canonical chain order.
    pub fn canonical_order(&self) -> Vec<FeatureId> {
        let mut fs: Vec<FeatureId> = (0..self.features.len() as u32).map(FeatureId).collect();
        fs.sort_by_key(|&f| self.feature_rank(f));
        fs
    }

    /// All pairs whose feature is `f`, ascending by id.
    pub fn pairs_of_feature(&self, f: FeatureId) -> Vec<PairId> {
        self.pair_ids().filter(|&p| self.pair_feature(p) == f).collect()
    }

    /// The tag's pairs in canonical chain order.
    pub fn decompose(&self, id: TagId) -> &[PairId] {
        self.tag(id).pairs()
    }

    /// The part of a tag's decomposition that precedes `feature` in the chain.
    pub fn chain_prefix(&self, id: TagId, feature: FeatureId) -> &[PairId] {
        let rank = self.feature_rank(feature);
        let pairs = self.tag(id).pairs();
        let cut = pairs
            .iter()
            .position(|&p| self.pair_rank(p) >= rank)
            .unwrap_or(pairs.len());
        &pairs[..cut]
    }

    /// The pair of `feature` carried by a tag, if any.
    pub fn tag_value(&self, id: TagId, feature: FeatureId) -> Option<PairId> {
        self.tag(id)
            .pairs()
            .iter()
            .copied()
            .find(|&p| self.pair_feature(p) == feature)
    }

    pub fn pos_value(&self, id: TagId) -> Option<&str> {
        let pos = self.feature_id(POS_FEATURE)?;
        self.tag_value(id, pos)
            .map(|p| self.value_name(self.pair_value(p)))
    }

    /// Complete context: every pair of `t2` at position 2, every pair of `t1`
    /// at position 1 and the already fixed pairs of the current tag at 0.
    /// With `t2 = None` (first-order decoding) position 2 stays empty.
    pub fn complete_context(&self, t2: Option<TagId>, t1: TagId, fixed0: &[PairId]) -> Context {
        let mut members = Vec::with_capacity(8);
        if let Some(t2) = t2 {
            members.extend(self.tag(t2).pairs().iter().map(|&p| PosPair::new(2, p)));
        }
        members.extend(self.tag(t1).pairs().iter().map(|&p| PosPair::new(1, p)));
        members.extend(fixed0.iter().map(|&p| PosPair::new(0, p)));
        Context::from_members(members)
    }

    /// Full positioned view of a trigram instance.
    pub fn trigram_members(&self, t2: TagId, t1: TagId, t0: TagId) -> Context {
        self.complete_context(Some(t2), t1, self.tag(t0).pairs())
    }

    /// Order in which a reduction tries to drop members: position 2, then 1,
    /// then 0; canonical feature order within a position.
    pub fn removal_order(&self, ctx: &Context) -> Vec<PosPair> {
        let mut v = ctx.members().to_vec();
        v.sort_by_key(|m| (std::cmp::Reverse(m.position()), self.pair_rank(m.pair())));
        v
    }

    /// Tags whose `pos` value is listed, ascending by id. Never includes the
    /// boundary tag.
    pub fn tags_with_pos(&self, pos_values: &[String]) -> Vec<TagId> {
        self.tag_ids()
            .filter(|&t| !self.is_boundary(t))
            .filter(|&t| {
                self.pos_value(t)
                    .is_some_and(|v| pos_values.iter().any(|p| p == v))
            })
            .collect()
    }

    /// True when every non-boundary tag with a given `pos` value carries the
    /// same set of features. Under this condition no tag's pair set strictly
    /// contains another's, and superset matching on whole tags is exact.
    pub fn feature_sets_determined_by_pos(&self) -> bool {
        let Some(pos) = self.feature_id(POS_FEATURE) else {
            return true;
        };
        let mut seen: HashMap<PairId, Vec<FeatureId>> = HashMap::new();
        for t in self.tag_ids() {
            let Some(p) = self.tag_value(t, pos) else {
                return false;
            };
            let feats: Vec<FeatureId> =
                self.tag(t).pairs().iter().map(|&q| self.pair_feature(q)).collect();
            match seen.get(&p) {
                Some(prev) if *prev != feats => return false,
                Some(_) => {}
                None => {
                    seen.insert(p, feats);
                }
            }
        }
        true
    }

    pub fn render_pair(&self, pair: PairId) -> String {
        let (f, v) = self.pairs[pair.index()];
        format!("{}={}", self.features[f.index()], self.values[v.index()])
    }

    /// `pos=ADJ|gen=FEM|num=SG`, in canonical order.
    pub fn render_tag(&self, id: TagId) -> String {
        let mut s = String::new();
        for (i, &p) in self.tag(id).pairs().iter().enumerate() {
            if i > 0 {
                s.push('|');
            }
            s.push_str(&self.render_pair(p));
        }
        s
    }

    /// `0gen:FEM` style rendering.
    pub fn render_pos_pair(&self, m: PosPair) -> String {
        let (f, v) = self.pairs[m.pair().index()];
        format!(
            "{}{}:{}",
            m.position(),
            self.features[f.index()],
            self.values[v.index()]
        )
    }

    /// Members by ascending position, canonical feature order within one.
    pub fn render_context(&self, ctx: &Context) -> String {
        let mut v = ctx.members().to_vec();
        v.sort_by_key(|m| (m.position(), self.pair_rank(m.pair())));
        v.iter()
            .map(|&m| self.render_pos_pair(m))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the `0gen:FEM` rendering back into a positioned pair.
    pub fn parse_pos_pair(&self, text: &str) -> Result<PosPair> {
        let bad = || Error::MalformedAtom(text.to_string());
        let mut chars = text.chars();
        let position = chars
            .next()
            .and_then(|c| c.to_digit(10))
            .filter(|&d| d <= 2)
            .ok_or_else(bad)?;
        let (f, v) = chars.as_str().split_once(':').ok_or_else(bad)?;
        let pair = self
            .lookup_pair(f, v)
            .ok_or_else(|| Error::UnknownTag(text.to_string()))?;
        Ok(PosPair::new(position as u8, pair))
    }
}

impl fmt::Display for PosPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.position(), self.pair().0)
    }
}

#[derive(Serialize, Deserialize)]
struct TagSetData {
    features: Vec<String>,
    values: Vec<String>,
    pairs: Vec<(u32, u32)>,
    tags: Vec<Vec<u32>>,
}

impl From<TagSet> for TagSetData {
    fn from(ts: TagSet) -> Self {
        TagSetData {
            pairs: ts.pairs.iter().map(|&(f, v)| (f.0, v.0)).collect(),
            tags: ts
                .tags
                .iter()
                .map(|t| t.pairs.iter().map(|p| p.0).collect())
                .collect(),
            features: ts.features,
            values: ts.values,
        }
    }
}

impl TryFrom<TagSetData> for TagSet {
    type Error = String;

    fn try_from(d: TagSetData) -> std::result::Result<Self, String> {
        let (nf, nv, np) = (d.features.len() as u32, d.values.len() as u32, d.pairs.len() as u32);
        if d.pairs.iter().any(|&(f, v)| f >= nf || v >= nv) {
            return Err("pair refers to an unknown feature or value".into());
        }
        if d.tags.iter().any(|t| t.is_empty() || t.iter().any(|&p| p >= np)) {
            return Err("tag refers to an unknown pair".into());
        }
        let boundary_ok = d.tags.first().is_some_and(|t| {
            t.len() == 1
                && d.pairs.get(t[0] as usize).is_some_and(|&(f, v)| {
                    d.features[f as usize] == POS_FEATURE && d.values[v as usize] == BOUNDARY_VALUE
                })
        });
        if !boundary_ok {
            return Err("first tag must be the boundary tag".into());
        }
        let mut ts = TagSet {
            feature_index: d
                .features
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), FeatureId(i as u32)))
                .collect(),
            value_index: d
                .values
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), ValueId(i as u32)))
                .collect(),
            features: d.features,
            values: d.values,
            pairs: d
                .pairs
                .iter()
                .map(|&(f, v)| (FeatureId(f), ValueId(v)))
                .collect(),
            tags: d
                .tags
                .into_iter()
                .map(|ps| Tag {
                    pairs: ps.into_iter().map(PairId).collect(),
                })
                .collect(),
            pair_index: HashMap::new(),
            tag_index: HashMap::new(),
            feature_rank: Vec::new(),
        };
        ts.pair_index = ts
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &fv)| (fv, PairId(i as u32)))
            .collect();
        ts.tag_index = ts
            .tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.pairs.clone(), TagId(i as u32)))
            .collect();
        ts.recompute_ranks();
        if ts.tag_index.len() != ts.tags.len() || ts.pair_index.len() != ts.pairs.len() {
            return Err("duplicate pair or tag entries".into());
        }
        Ok(ts)
    }
}

impl PartialEq for TagSet {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features
            && self.values == other.values
            && self.pairs == other.pairs
            && self.tags == other.tags
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(ts: &TagSet, pairs: &[PairId]) -> Vec<String> {
        pairs.iter().map(|&p| ts.render_pair(p)).collect()
    }

    #[test]
    fn parse_and_decompose() {
        let mut ts = TagSet::new();
        let adj = ts.parse_tag("pos=ADJ|gen=FEM|num=SG").unwrap();
        assert_eq!(
            names(&ts, ts.decompose(adj)),
            ["pos=ADJ", "gen=FEM", "num=SG"]
        );
        let noun = ts.parse_tag("pos=NOUN").unwrap();
        assert_eq!(names(&ts, ts.decompose(noun)), ["pos=NOUN"]);
        let det = ts.parse_tag("typ=DEF|pos=DET").unwrap();
        assert_eq!(names(&ts, ts.decompose(det)), ["pos=DET", "typ=DEF"]);
    }

    #[test]
    fn canonicalization_shares_ids() {
        let mut ts = TagSet::new();
        let a = ts.parse_tag("gen=FEM|pos=ADJ").unwrap();
        let b = ts.parse_tag("pos=ADJ|gen=FEM").unwrap();
        assert_eq!(a, b);
        assert_eq!(ts.render_tag(a), "pos=ADJ|gen=FEM");
        assert_eq!(ts.lookup_tag("gen=FEM|pos=ADJ").unwrap(), Some(a));
        assert_eq!(ts.lookup_tag("pos=ADJ|gen=MAS").unwrap(), None);
    }

    #[test]
    fn parse_errors() {
        let mut ts = TagSet::new();
        assert!(matches!(ts.parse_tag(""), Err(Error::EmptyTag)));
        assert!(matches!(
            ts.parse_tag("pos=ADJ|gen"),
            Err(Error::MalformedAtom(_))
        ));
        assert!(matches!(
            ts.parse_tag("pos=ADJ|=FEM"),
            Err(Error::MalformedAtom(_))
        ));
        assert!(matches!(
            ts.parse_tag("pos=ADJ|pos=NOUN"),
            Err(Error::DuplicateFeature { .. })
        ));
    }

    #[test]
    fn boundary_is_first() {
        let mut ts = TagSet::new();
        assert_eq!(ts.render_tag(TagSet::BOUNDARY), "pos=BOUND");
        assert_eq!(ts.parse_tag("pos=BOUND").unwrap(), TagSet::BOUNDARY);
    }

    #[test]
    fn canonical_order_is_pos_then_lexicographic() {
        let mut ts = TagSet::new();
        ts.parse_tag("typ=DEF|num=SG|gen=FEM|pos=DET").unwrap();
        ts.parse_tag("cas=NOM|pos=PRON").unwrap();
        let order: Vec<&str> = ts
            .canonical_order()
            .into_iter()
            .map(|f| ts.feature_name(f))
            .collect();
        assert_eq!(order, ["pos", "cas", "gen", "num", "typ"]);
    }

    #[test]
    fn complete_context_sizes() {
        let mut ts = TagSet::new();
        let det = ts.parse_tag("pos=DET|typ=DEF|gen=FEM|num=SG").unwrap();
        let noun = ts.parse_tag("pos=NOUN|gen=FEM|num=SG").unwrap();
        let adj = ts.parse_tag("pos=ADJ|gen=FEM|num=SG").unwrap();

        let c = ts.complete_context(Some(det), noun, &[]);
        assert_eq!(c.len(), 7);
        assert_eq!(
            ts.render_context(&c),
            "1pos:NOUN 1gen:FEM 1num:SG 2pos:DET 2gen:FEM 2num:SG 2typ:DEF"
        );

        let b = ts.complete_context(Some(TagSet::BOUNDARY), TagSet::BOUNDARY, &[]);
        assert_eq!(b.len(), 2);

        let pos_adj = ts.lookup_pair("pos", "ADJ").unwrap();
        let num_sg = ts.lookup_pair("num", "SG").unwrap();
        let c = ts.complete_context(Some(det), noun, &[pos_adj, num_sg]);
        assert_eq!(c.len(), 9);
        assert!(c.contains(PosPair::new(0, pos_adj)));
        assert!(c.contains(PosPair::new(0, num_sg)));

        let full = ts.trigram_members(det, noun, adj);
        assert_eq!(full.len(), 4 + 3 + 3);
    }

    #[test]
    fn chain_prefix_and_removal_order() {
        let mut ts = TagSet::new();
        let adj = ts.parse_tag("pos=ADJ|gen=FEM|num=SG").unwrap();
        let gen = ts.feature_id("gen").unwrap();
        let num = ts.feature_id("num").unwrap();
        assert_eq!(names(&ts, ts.chain_prefix(adj, gen)), ["pos=ADJ"]);
        assert_eq!(names(&ts, ts.chain_prefix(adj, num)), ["pos=ADJ", "gen=FEM"]);
        assert!(ts.chain_prefix(adj, ts.pos_feature()).is_empty());

        let ctx = ts.complete_context(Some(adj), adj, &ts.chain_prefix(adj, num).to_vec());
        let order: Vec<String> = ts
            .removal_order(&ctx)
            .into_iter()
            .map(|m| ts.render_pos_pair(m))
            .collect();
        assert_eq!(
            order,
            ["2pos:ADJ", "2gen:FEM", "2num:SG", "1pos:ADJ", "1gen:FEM", "1num:SG", "0pos:ADJ", "0gen:FEM"]
        );
    }

    #[test]
    fn positioned_pair_roundtrip() {
        let mut ts = TagSet::new();
        ts.parse_tag("pos=ADJ|gen=FEM").unwrap();
        let m = ts.parse_pos_pair("0gen:FEM").unwrap();
        assert_eq!(m.position(), 0);
        assert_eq!(ts.render_pos_pair(m), "0gen:FEM");
        assert!(ts.parse_pos_pair("3gen:FEM").is_err());
        assert!(ts.parse_pos_pair("0gen=FEM").is_err());
    }

    #[test]
    fn serde_roundtrip_preserves_ids() {
        let mut ts = TagSet::new();
        let a = ts.parse_tag("pos=ADJ|gen=FEM|num=SG").unwrap();
        let b = ts.parse_tag("num=PL|pos=NOUN").unwrap();
        let json = serde_json::to_string(&ts).unwrap();
        let back: TagSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back.lookup_tag("pos=ADJ|gen=FEM|num=SG").unwrap(), Some(a));
        assert_eq!(back.lookup_tag("pos=NOUN|num=PL").unwrap(), Some(b));
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn pos_determined_feature_sets() {
        let mut ts = TagSet::new();
        ts.parse_tag("pos=NOUN|gen=FEM").unwrap();
        ts.parse_tag("pos=NOUN|gen=MAS").unwrap();
        assert!(ts.feature_sets_determined_by_pos());
        ts.parse_tag("pos=NOUN|gen=MAS|num=SG").unwrap();
        assert!(!ts.feature_sets_determined_by_pos());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const FEATURES: [&str; 5] = ["pos", "gen", "num", "typ", "cas"];
        const VALUES: [&str; 3] = ["A", "B", "C"];

        fn tag_text() -> impl Strategy<Value = String> {
            (
                0usize..3,
                proptest::sample::subsequence(&FEATURES[1..], 0..=4),
                proptest::collection::vec(0usize..3, 4),
            )
                .prop_map(|(posv, feats, vals)| {
                    let mut atoms = vec![format!("pos={}", VALUES[posv])];
                    for (f, v) in feats.iter().zip(vals) {
                        atoms.push(format!("{f}={}", VALUES[v]));
                    }
                    atoms.reverse();
                    atoms.join("|")
                })
        }

        proptest! {
            #[test]
            fn decompose_reassembles(text in tag_text()) {
                let mut ts = TagSet::new();
                let id = ts.parse_tag(&text).unwrap();
                let pairs = ts.decompose(id).to_vec();
                prop_assert_eq!(ts.tag_from_pairs(&pairs), id);
                let rendered = ts.render_tag(id);
                prop_assert_eq!(ts.parse_tag(&rendered).unwrap(), id);
                prop_assert!(pairs.windows(2).all(|w| ts.pair_rank(w[0]) < ts.pair_rank(w[1])));
            }

            #[test]
            fn complete_context_counts_all_pairs(a in tag_text(), b in tag_text(), c in tag_text()) {
                let mut ts = TagSet::new();
                let (a, b, c) = (ts.parse_tag(&a).unwrap(), ts.parse_tag(&b).unwrap(), ts.parse_tag(&c).unwrap());
                let ctx = ts.complete_context(Some(a), b, ts.decompose(c));
                prop_assert_eq!(ctx.len(), ts.tag(a).len() + ts.tag(b).len() + ts.tag(c).len());
            }
        }
    }
}
