//! Synthetic tagged corpora with morphological agreement.
//!
//! A profile describes a toy language: POS categories with their features,
//! a POS chain (first order, with optional rows conditioned on the two
//! previous categories), and agreement rules that copy a feature value
//! from the nearest preceding token of a source category. Each category gets
//! a Zipf-distributed lemma inventory; inherent features (a noun's gender)
//! are fixed per lemma, the others surface as suffixes on some lemmas and
//! stay invisible on others, which is what makes word forms ambiguous.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{Corpus, Sentence, Token};
use crate::error::{Error, Result};
use crate::feature_model::{TagSet, BOUNDARY_VALUE, POS_FEATURE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSpec {
    pub value: String,
    pub weight: f64,
    #[serde(default)]
    pub suffix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub values: Vec<ValueSpec>,
    /// Fixed per lemma instead of varying per token.
    #[serde(default)]
    pub inherent: bool,
    /// Share of lemmas whose forms carry this feature's suffix.
    #[serde(default = "one")]
    pub marked: f64,
    /// `(feature, value)` conditions under which the suffix is dropped.
    #[serde(default)]
    pub hidden_with: Vec<(String, String)>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub pos: String,
    #[serde(default)]
    pub features: Vec<FeatureSpec>,
    /// Number of lemmas; ignored when `stems` is given.
    #[serde(default)]
    pub lemmas: usize,
    /// Explicit stems for closed classes.
    #[serde(default)]
    pub stems: Vec<String>,
    /// Zipf exponent of lemma frequencies.
    #[serde(default = "one")]
    pub zipf: f64,
    /// May share stems with earlier open categories.
    #[serde(default)]
    pub homographs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRule {
    pub target: String,
    pub feature: String,
    pub sources: Vec<String>,
    pub window: usize,
    /// Used when the nearest source lacks the feature.
    #[serde(default)]
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub categories: Vec<CategorySpec>,
    /// `from -> [(to, weight)]`; `BOUND` starts and ends a sentence.
    pub pos_chain: BTreeMap<String, Vec<(String, f64)>>,
    /// `"prev2 prev1" -> [(to, weight)]`; where a row exists it replaces the
    /// `prev1` row of `pos_chain`.
    #[serde(default)]
    pub pos_chain2: BTreeMap<String, Vec<(String, f64)>>,
    #[serde(default)]
    pub agreement: Vec<AgreementRule>,
    /// Probability that a homograph-enabled lemma reuses an earlier stem.
    #[serde(default)]
    pub homograph_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
}

fn v(value: &str, weight: f64, suffix: &str) -> ValueSpec {
    ValueSpec {
        value: value.into(),
        weight,
        suffix: suffix.into(),
    }
}

fn feat(name: &str, values: Vec<ValueSpec>, marked: f64) -> FeatureSpec {
    FeatureSpec {
        name: name.into(),
        values,
        inherent: false,
        marked,
        hidden_with: Vec::new(),
    }
}

fn inherent(name: &str, values: Vec<ValueSpec>) -> FeatureSpec {
    FeatureSpec {
        inherent: true,
        ..feat(name, values, 0.0)
    }
}

fn cat(pos: &str, features: Vec<FeatureSpec>, lemmas: usize, zipf: f64) -> CategorySpec {
    CategorySpec {
        pos: pos.into(),
        features,
        lemmas,
        stems: Vec::new(),
        zipf,
        homographs: false,
    }
}

fn closed(pos: &str, features: Vec<FeatureSpec>, stems: &[&str]) -> CategorySpec {
    CategorySpec {
        stems: stems.iter().map(|s| s.to_string()).collect(),
        ..cat(pos, features, 0, 1.0)
    }
}

fn rule(target: &str, feature: &str, sources: &[&str], window: usize, default: Option<&str>) -> AgreementRule {
    AgreementRule {
        target: target.into(),
        feature: feature.into(),
        sources: sources.iter().map(|s| s.to_string()).collect(),
        window,
        default: default.map(str::to_string),
    }
}

impl Profile {
    pub fn builtin(name: &str) -> Result<Profile> {
        match name {
            "french-like" => Ok(Self::french_like()),
            "pos-only" => Ok(Self::pos_only()),
            other => Err(Error::Profile(format!("unknown profile `{other}`"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Profile> {
        let p: Profile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// A Romance-flavoured inventory: agreement in gender and number inside
    /// noun phrases, person and number between subjects and verbs.
    pub fn french_like() -> Profile {
        let gen = || {
            feat(
                "gen",
                vec![v("MAS", 0.55, ""), v("FEM", 0.45, "e")],
                0.5,
            )
        };
        let num = || feat("num", vec![v("SG", 0.7, ""), v("PL", 0.3, "s")], 0.9);
        let per = || {
            feat(
                "per",
                vec![v("1", 0.2, ""), v("2", 0.1, "s"), v("3", 0.7, "")],
                0.6,
            )
        };
        let verbal = |marked_num: f64| {
            vec![
                feat(
                    "mod",
                    vec![
                        v("IND", 0.75, ""),
                        v("SUB", 0.1, "i"),
                        v("CND", 0.1, "r"),
                        v("IMP", 0.05, ""),
                    ],
                    1.0,
                ),
                feat(
                    "tns",
                    vec![
                        v("PRS", 0.55, ""),
                        v("PST", 0.2, "a"),
                        v("IMPF", 0.15, "ai"),
                        v("FUT", 0.1, "er"),
                        v("PSM", 0.08, "it"),
                        v("PQP", 0.05, "ava"),
                    ],
                    1.0,
                ),
                per(),
                feat("num", vec![v("SG", 0.7, ""), v("PL", 0.3, "nt")], marked_num),
                feat("pol", vec![v("AFF", 0.85, ""), v("NEG", 0.15, "pa")], 1.0),
            ]
        };
        let mut det_gen = gen();
        det_gen.marked = 1.0;
        det_gen.hidden_with = vec![("num".into(), "PL".into())];
        let mut det_num = num();
        det_num.marked = 1.0;
        let mut pron_gen = gen();
        pron_gen.marked = 0.3;
        let mut pron_num = num();
        pron_num.marked = 0.5;
        let categories = vec![
            closed(
                "DET",
                vec![
                    inherent(
                        "typ",
                        vec![
                            v("DEF", 0.55, ""),
                            v("IND", 0.25, ""),
                            v("DEM", 0.1, ""),
                            v("POS", 0.1, ""),
                            v("INT", 0.05, ""),
                        ],
                    ),
                    det_gen,
                    det_num,
                ],
                &["l", "un", "c", "m", "quel", "t", "s", "d"],
            ),
            CategorySpec {
                homographs: true,
                ..cat(
                    "NOUN",
                    vec![inherent("gen", vec![v("MAS", 0.55, ""), v("FEM", 0.45, "")]), num()],
                    420,
                    1.0,
                )
            },
            cat(
                "PROPN",
                vec![inherent("gen", vec![v("MAS", 0.5, ""), v("FEM", 0.5, "")]), num()],
                60,
                1.1,
            ),
            CategorySpec {
                homographs: true,
                ..cat(
                    "ADJ",
                    vec![
                        feat(
                            "deg",
                            vec![v("POS", 0.85, ""), v("CMP", 0.1, "ior"), v("SUP", 0.05, "issim")],
                            1.0,
                        ),
                        gen(),
                        num(),
                    ],
                    160,
                    1.0,
                )
            },
            closed(
                "PRON",
                vec![
                    inherent(
                        "typ",
                        vec![
                            v("PERS", 0.6, ""),
                            v("REL", 0.25, ""),
                            v("DEM", 0.1, ""),
                            v("IND", 0.05, ""),
                        ],
                    ),
                    inherent("per", vec![v("1", 0.25, ""), v("2", 0.15, ""), v("3", 0.6, "")]),
                    inherent("cas", vec![v("NOM", 0.6, ""), v("ACC", 0.25, ""), v("DAT", 0.15, "")]),
                    pron_gen,
                    pron_num,
                ],
                &[
                    "j", "tu", "il", "qu", "cel", "on", "m", "t", "l", "lu", "nou", "vou", "ell",
                    "qui", "do", "ce", "se", "y",
                ],
            ),
            CategorySpec {
                homographs: true,
                ..cat("VERB", verbal(0.7), 110, 1.1)
            },
            closed("AUX", verbal(1.0), &["av", "et"]),
            CategorySpec {
                homographs: true,
                ..cat(
                    "VPART",
                    vec![
                        feat("tns", vec![v("PST", 0.85, "u"), v("PRS", 0.15, "ant")], 1.0),
                        gen(),
                        num(),
                    ],
                    90,
                    1.1,
                )
            },
            cat("VINF", vec![], 90, 1.1),
            cat(
                "ADV",
                vec![inherent(
                    "typ",
                    vec![
                        v("MAN", 0.4, ""),
                        v("TMP", 0.25, ""),
                        v("DEG", 0.2, ""),
                        v("NEG", 0.15, ""),
                        v("LOC", 0.1, ""),
                    ],
                )],
                60,
                1.2,
            ),
            closed("PREP", vec![], &["de", "a", "en", "pour", "dans", "sur", "par", "avec", "sans"]),
            closed(
                "CONJ",
                vec![inherent("typ", vec![v("COORD", 0.6, ""), v("SUB", 0.4, "")])],
                &["et", "que", "ou", "mais", "si", "car"],
            ),
            closed(
                "NUM",
                vec![inherent("typ", vec![v("CARD", 0.8, ""), v("ORD", 0.2, "")])],
                &["deux", "premier", "trois", "second", "dix", "cent"],
            ),
            closed(
                "PUNCT",
                vec![inherent("typ", vec![v("SENT", 0.5, ""), v("WEAK", 0.5, "")])],
                &[".", ",", "!", ";", "?", ":"],
            ),
        ];
        let chain = |pairs: &[(&str, f64)]| pairs.iter().map(|&(p, w)| (p.to_string(), w)).collect::<Vec<_>>();
        let mut pos_chain = BTreeMap::new();
        pos_chain.insert(
            BOUNDARY_VALUE.to_string(),
            chain(&[
                ("DET", 0.35),
                ("PRON", 0.25),
                ("PROPN", 0.1),
                ("ADV", 0.05),
                ("PREP", 0.1),
                ("NOUN", 0.05),
                ("CONJ", 0.05),
                ("NUM", 0.05),
            ]),
        );
        pos_chain.insert("DET".into(), chain(&[("NOUN", 0.65), ("ADJ", 0.25), ("NUM", 0.1)]));
        pos_chain.insert(
            "NOUN".into(),
            chain(&[
                ("ADJ", 0.2),
                ("PREP", 0.2),
                ("VERB", 0.2),
                ("PUNCT", 0.15),
                ("CONJ", 0.08),
                ("PRON", 0.07),
                ("AUX", 0.05),
                ("VPART", 0.05),
            ]),
        );
        pos_chain.insert(
            "PROPN".into(),
            chain(&[
                ("VERB", 0.35),
                ("AUX", 0.15),
                ("PUNCT", 0.2),
                ("PREP", 0.15),
                ("CONJ", 0.1),
                ("PROPN", 0.05),
            ]),
        );
        pos_chain.insert(
            "ADJ".into(),
            chain(&[
                ("NOUN", 0.4),
                ("PREP", 0.15),
                ("PUNCT", 0.2),
                ("CONJ", 0.1),
                ("VERB", 0.1),
                ("ADJ", 0.05),
            ]),
        );
        pos_chain.insert(
            "PRON".into(),
            chain(&[("VERB", 0.5), ("AUX", 0.3), ("PRON", 0.1), ("ADV", 0.1)]),
        );
        pos_chain.insert(
            "VERB".into(),
            chain(&[
                ("DET", 0.3),
                ("PREP", 0.2),
                ("ADV", 0.1),
                ("PUNCT", 0.2),
                ("VINF", 0.1),
                ("PRON", 0.05),
                ("CONJ", 0.05),
            ]),
        );
        pos_chain.insert(
            "AUX".into(),
            chain(&[("VPART", 0.7), ("ADV", 0.15), ("VINF", 0.05), ("ADJ", 0.1)]),
        );
        pos_chain.insert(
            "VPART".into(),
            chain(&[("PREP", 0.3), ("DET", 0.3), ("PUNCT", 0.3), ("ADV", 0.1)]),
        );
        pos_chain.insert(
            "VINF".into(),
            chain(&[("DET", 0.4), ("PREP", 0.3), ("PUNCT", 0.2), ("PRON", 0.1)]),
        );
        pos_chain.insert(
            "ADV".into(),
            chain(&[
                ("VERB", 0.3),
                ("ADJ", 0.3),
                ("VPART", 0.1),
                ("PUNCT", 0.1),
                ("DET", 0.1),
                ("PREP", 0.1),
            ]),
        );
        pos_chain.insert(
            "PREP".into(),
            chain(&[
                ("DET", 0.55),
                ("NOUN", 0.15),
                ("PROPN", 0.1),
                ("VINF", 0.1),
                ("NUM", 0.05),
                ("PRON", 0.05),
            ]),
        );
        pos_chain.insert(
            "CONJ".into(),
            chain(&[
                ("DET", 0.3),
                ("PRON", 0.3),
                ("PROPN", 0.1),
                ("ADJ", 0.1),
                ("VERB", 0.1),
                ("NOUN", 0.1),
            ]),
        );
        pos_chain.insert("NUM".into(), chain(&[("NOUN", 0.8), ("PUNCT", 0.1), ("ADJ", 0.1)]));
        pos_chain.insert(
            "PUNCT".into(),
            chain(&[
                (BOUNDARY_VALUE, 0.6),
                ("CONJ", 0.1),
                ("DET", 0.1),
                ("PRON", 0.1),
                ("PREP", 0.1),
            ]),
        );
        // rows conditioned on two categories, mostly inside noun phrases and
        // verb groups
        let mut pos_chain2 = BTreeMap::new();
        let mut row2 = |prev: &str, pairs: &[(&str, f64)]| {
            pos_chain2.insert(prev.to_string(), chain(pairs));
        };
        row2("DET ADJ", &[("NOUN", 0.92), ("ADJ", 0.08)]);
        row2(
            "NOUN ADJ",
            &[("PREP", 0.3), ("PUNCT", 0.3), ("CONJ", 0.15), ("VERB", 0.2), ("ADJ", 0.05)],
        );
        row2("ADV ADJ", &[("PUNCT", 0.35), ("PREP", 0.35), ("CONJ", 0.3)]);
        row2("PRON AUX", &[("VPART", 0.85), ("ADV", 0.15)]);
        row2("NOUN AUX", &[("VPART", 0.8), ("ADV", 0.1), ("ADJ", 0.1)]);
        row2("PROPN AUX", &[("VPART", 0.8), ("ADV", 0.1), ("ADJ", 0.1)]);
        row2("AUX ADV", &[("VPART", 0.8), ("ADJ", 0.2)]);
        row2("PRON PRON", &[("VERB", 0.6), ("AUX", 0.4)]);
        row2("BOUND PRON", &[("VERB", 0.5), ("AUX", 0.3), ("PRON", 0.2)]);
        row2("PREP DET", &[("NOUN", 0.85), ("ADJ", 0.15)]);
        row2("VERB DET", &[("NOUN", 0.75), ("ADJ", 0.15), ("NUM", 0.1)]);
        row2(
            "DET NOUN",
            &[("ADJ", 0.3), ("PREP", 0.25), ("VERB", 0.2), ("PUNCT", 0.1), ("CONJ", 0.05), ("AUX", 0.1)],
        );
        row2(
            "PREP NOUN",
            &[("PUNCT", 0.3), ("PREP", 0.2), ("ADJ", 0.2), ("CONJ", 0.15), ("VERB", 0.15)],
        );
        row2("ADJ NOUN", &[("PREP", 0.3), ("VERB", 0.3), ("PUNCT", 0.25), ("AUX", 0.15)]);
        row2("VERB PREP", &[("DET", 0.5), ("VINF", 0.3), ("NOUN", 0.1), ("PROPN", 0.1)]);
        row2("NOUN PREP", &[("DET", 0.5), ("NOUN", 0.35), ("PROPN", 0.15)]);
        row2("VERB VINF", &[("DET", 0.5), ("PREP", 0.2), ("PUNCT", 0.3)]);
        row2("PREP VINF", &[("DET", 0.6), ("PRON", 0.2), ("PUNCT", 0.2)]);
        let agreement = vec![
            rule("ADJ", "gen", &["NOUN", "DET", "ADJ"], 2, None),
            rule("ADJ", "num", &["NOUN", "DET", "ADJ", "NUM"], 2, Some("PL")),
            rule("NOUN", "gen", &["DET", "ADJ"], 2, None),
            rule("NOUN", "num", &["DET", "ADJ", "NUM"], 2, Some("PL")),
            rule("PRON", "gen", &["NOUN"], 1, None),
            rule("PRON", "num", &["NOUN"], 1, None),
            rule("VERB", "per", &["PRON", "NOUN", "PROPN"], 3, Some("3")),
            rule("VERB", "num", &["PRON", "NOUN", "PROPN"], 3, None),
            rule("AUX", "per", &["PRON", "NOUN", "PROPN"], 3, Some("3")),
            rule("AUX", "num", &["PRON", "NOUN", "PROPN"], 3, None),
            rule("VPART", "gen", &["PRON", "NOUN", "PROPN"], 4, None),
            rule("VPART", "num", &["PRON", "NOUN", "PROPN"], 4, None),
        ];
        Profile {
            name: "french-like".into(),
            categories,
            pos_chain,
            pos_chain2,
            agreement,
            homograph_rate: 0.5,
            min_len: 3,
            max_len: 40,
        }
    }

    /// The french-like POS chain and lexicon without any features: every
    /// tag is a single `pos=X` pair.
    pub fn pos_only() -> Profile {
        let mut p = Self::french_like();
        p.name = "pos-only".into();
        for c in &mut p.categories {
            c.features.clear();
        }
        p.agreement.clear();
        p
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Profile(m));
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!("bad sentence length range {}..{}", self.min_len, self.max_len));
        }
        if !(0.0..=1.0).contains(&self.homograph_rate) {
            return bad("homograph_rate must lie in [0, 1]".into());
        }
        let mut cats = BTreeMap::new();
        for c in &self.categories {
            if c.pos == BOUNDARY_VALUE || c.pos.is_empty() {
                return bad(format!("invalid category name `{}`", c.pos));
            }
            if cats.insert(c.pos.as_str(), c).is_some() {
                return bad(format!("category `{}` defined twice", c.pos));
            }
            if c.stems.is_empty() && c.lemmas == 0 {
                return bad(format!("category `{}` has no lemmas", c.pos));
            }
            let mut names = BTreeSet::new();
            for f in &c.features {
                if f.name == POS_FEATURE || !names.insert(f.name.as_str()) {
                    return bad(format!("bad or duplicate feature `{}` in `{}`", f.name, c.pos));
                }
                if f.values.is_empty() || f.values.iter().any(|x| !(x.weight > 0.0)) {
                    return bad(format!("feature `{}` of `{}` needs positive weights", f.name, c.pos));
                }
                if !(0.0..=1.0).contains(&f.marked) {
                    return bad(format!("feature `{}` of `{}`: marked must lie in [0, 1]", f.name, c.pos));
                }
            }
        }
        for (from, tos) in &self.pos_chain {
            if from != BOUNDARY_VALUE && !cats.contains_key(from.as_str()) {
                return bad(format!("chain mentions unknown category `{from}`"));
            }
            if tos.is_empty() || tos.iter().any(|(_, w)| !(*w > 0.0)) {
                return bad(format!("chain row `{from}` needs positive weights"));
            }
            for (to, _) in tos {
                if to != BOUNDARY_VALUE && !cats.contains_key(to.as_str()) {
                    return bad(format!("chain mentions unknown category `{to}`"));
                }
            }
        }
        for (key, tos) in &self.pos_chain2 {
            let prev: Vec<&str> = key.split_whitespace().collect();
            if prev.len() != 2 || prev.iter().any(|p| *p != BOUNDARY_VALUE && !cats.contains_key(p)) {
                return bad(format!("second-order chain key `{key}` must name two categories"));
            }
            if tos.is_empty() || tos.iter().any(|(_, w)| !(*w > 0.0)) {
                return bad(format!("chain row `{key}` needs positive weights"));
            }
            for (to, _) in tos {
                if to != BOUNDARY_VALUE && !cats.contains_key(to.as_str()) {
                    return bad(format!("chain mentions unknown category `{to}`"));
                }
            }
        }
        for c in cats.keys().copied().chain([BOUNDARY_VALUE]) {
            if !self.pos_chain.contains_key(c) {
                return bad(format!("chain has no row for `{c}`"));
            }
        }
        let mut seen = BTreeSet::new();
        for r in &self.agreement {
            let what = format!("rule {}.{}", r.target, r.feature);
            let Some(target) = cats.get(r.target.as_str()) else {
                return bad(format!("{what}: unknown target category"));
            };
            let Some(tf) = target.features.iter().find(|f| f.name == r.feature) else {
                return bad(format!("{what}: target has no such feature"));
            };
            if !seen.insert((&r.target, &r.feature)) {
                return bad(format!("{what}: defined twice"));
            }
            if r.window == 0 || r.sources.is_empty() {
                return bad(format!("{what}: needs sources and a window ≥ 1"));
            }
            let valid = |x: &str| tf.values.iter().any(|y| y.value == x);
            if let Some(d) = &r.default {
                if !valid(d) {
                    return bad(format!("{what}: default `{d}` is not a value of the target"));
                }
            }
            for s in &r.sources {
                let Some(src) = cats.get(s.as_str()) else {
                    return bad(format!("{what}: unknown source category `{s}`"));
                };
                match src.features.iter().find(|f| f.name == r.feature) {
                    Some(sf) => {
                        if let Some(x) = sf.values.iter().find(|x| !valid(&x.value)) {
                            return bad(format!(
                                "{what}: source `{s}` value `{}` cannot be copied",
                                x.value
                            ));
                        }
                    }
                    None if r.default.is_none() => {
                        return bad(format!("{what}: source `{s}` lacks the feature and no default is set"));
                    }
                    None => {}
                }
            }
        }
        Ok(())
    }
}

struct Lemma {
    stem: String,
    inherent: Vec<Option<usize>>,
    marked: Vec<bool>,
}

struct Category<'p> {
    spec: &'p CategorySpec,
    lemmas: Vec<Lemma>,
    zipf: Vec<f64>,
    /// inherent value combination -> (lemma indices, sampler)
    by_inherent: HashMap<Vec<Option<usize>>, (Vec<usize>, WeightedIndex<f64>)>,
    values: Vec<WeightedIndex<f64>>,
}

/// A sampled toy language plus its sentence sampler.
pub struct Generator<'p> {
    profile: &'p Profile,
    cats: Vec<Category<'p>>,
    cat_index: HashMap<&'p str, usize>,
    chain: HashMap<&'p str, (Vec<&'p str>, WeightedIndex<f64>)>,
    chain2: HashMap<(&'p str, &'p str), (Vec<&'p str>, WeightedIndex<f64>)>,
    rules: HashMap<(usize, usize), Vec<&'p AgreementRule>>,
    rng: ChaCha8Rng,
    tagset: TagSet,
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "j", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "br", "pl", "tr", "gr", "fl",
];
const NUCLEI: &[&str] = &["a", "o", "i", "ou", "e", "u", "ai", "eau"];

fn make_stem(rng: &mut ChaCha8Rng) -> String {
    let syl = rng.gen_range(2..=3);
    let mut s = String::new();
    for _ in 0..syl {
        s.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
        s.push_str(NUCLEI[rng.gen_range(0..NUCLEI.len())]);
    }
    if rng.gen_bool(0.5) {
        s.push(['n', 'r', 'l', 't'][rng.gen_range(0..4)]);
    }
    s
}

impl<'p> Generator<'p> {
    pub fn new(profile: &'p Profile, seed: u64) -> Result<Self> {
        profile.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used: BTreeSet<String> = BTreeSet::new();
        let mut shareable: Vec<String> = Vec::new();
        let mut cats = Vec::new();
        for spec in &profile.categories {
            let n = if spec.stems.is_empty() { spec.lemmas } else { spec.stems.len() };
            let mut lemmas = Vec::with_capacity(n);
            let mut own = Vec::new();
            for i in 0..n {
                let stem = if let Some(s) = spec.stems.get(i) {
                    s.clone()
                } else if spec.homographs && !shareable.is_empty() && rng.gen_bool(profile.homograph_rate) {
                    shareable[rng.gen_range(0..shareable.len())].clone()
                } else {
                    loop {
                        let s = make_stem(&mut rng);
                        if used.insert(s.clone()) {
                            break s;
                        }
                    }
                };
                if spec.homographs {
                    own.push(stem.clone());
                }
                let inherent = spec
                    .features
                    .iter()
                    .map(|f| {
                        f.inherent.then(|| {
                            if i < f.values.len() {
                                i
                            } else {
                                let w: Vec<f64> = f.values.iter().map(|x| x.weight).collect();
                                WeightedIndex::new(w).expect("validated weights").sample(&mut rng)
                            }
                        })
                    })
                    .collect();
                let marked = spec
                    .features
                    .iter()
                    .map(|f| !f.inherent && rng.gen_bool(f.marked))
                    .collect();
                lemmas.push(Lemma {
                    stem,
                    inherent,
                    marked,
                });
            }
            shareable.extend(own);
            let zipf: Vec<f64> = (0..n).map(|r| 1.0 / ((r + 1) as f64).powf(spec.zipf)).collect();
            let mut groups: BTreeMap<Vec<Option<usize>>, Vec<usize>> = BTreeMap::new();
            for (i, l) in lemmas.iter().enumerate() {
                groups.entry(l.inherent.clone()).or_default().push(i);
            }
            let by_inherent = groups
                .into_iter()
                .map(|(k, ix)| {
                    let w = WeightedIndex::new(ix.iter().map(|&i| zipf[i])).expect("non-empty group");
                    (k, (ix, w))
                })
                .collect();
            let values = spec
                .features
                .iter()
                .map(|f| WeightedIndex::new(f.values.iter().map(|x| x.weight)).expect("validated weights"))
                .collect();
            cats.push(Category {
                spec,
                lemmas,
                zipf,
                by_inherent,
                values,
            });
        }
        let cat_index: HashMap<&str, usize> = profile
            .categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.pos.as_str(), i))
            .collect();
        let chain = profile
            .pos_chain
            .iter()
            .map(|(from, tos)| {
                let names: Vec<&str> = tos.iter().map(|(t, _)| t.as_str()).collect();
                let w = WeightedIndex::new(tos.iter().map(|(_, w)| *w)).expect("validated weights");
                (from.as_str(), (names, w))
            })
            .collect();
        let chain2 = profile
            .pos_chain2
            .iter()
            .map(|(key, tos)| {
                let mut prev = key.split_whitespace();
                let k = (prev.next().expect("validated key"), prev.next().expect("validated key"));
                let names: Vec<&str> = tos.iter().map(|(t, _)| t.as_str()).collect();
                let w = WeightedIndex::new(tos.iter().map(|(_, w)| *w)).expect("validated weights");
                (k, (names, w))
            })
            .collect();
        let mut rules: HashMap<(usize, usize), Vec<&AgreementRule>> = HashMap::new();
        for r in &profile.agreement {
            let c = cat_index[r.target.as_str()];
            let f = profile.categories[c]
                .features
                .iter()
                .position(|x| x.name == r.feature)
                .expect("validated rule");
            rules.entry((c, f)).or_default().push(r);
        }
        Ok(Generator {
            profile,
            cats,
            cat_index,
            chain,
            chain2,
            rules,
            rng,
            tagset: TagSet::new(),
        })
    }

    fn pos_sequence(&mut self) -> Vec<usize> {
        loop {
            let mut seq = Vec::new();
            let (mut prev, mut cur) = (BOUNDARY_VALUE, BOUNDARY_VALUE);
            loop {
                let (names, w) = self.chain2.get(&(prev, cur)).unwrap_or(&self.chain[cur]);
                let next = names[w.sample(&mut self.rng)];
                if next == BOUNDARY_VALUE || seq.len() > self.profile.max_len {
                    break;
                }
                seq.push(self.cat_index[next]);
                (prev, cur) = (cur, next);
            }
            if (self.profile.min_len..=self.profile.max_len).contains(&seq.len()) {
                return seq;
            }
        }
    }

    /// One sentence as (word, tag string) pairs.
    pub fn sentence(&mut self) -> Vec<(String, String)> {
        let seq = self.pos_sequence();
        // per token: category and chosen value index per feature
        let mut assigned: Vec<(usize, Vec<usize>)> = Vec::with_capacity(seq.len());
        let mut out = Vec::with_capacity(seq.len());
        for (i, &c) in seq.iter().enumerate() {
            let cat = &self.cats[c];
            let mut vals = Vec::with_capacity(cat.spec.features.len());
            for (fi, f) in cat.spec.features.iter().enumerate() {
                let agreed = self.rules.get(&(c, fi)).and_then(|rs| {
                    rs.iter().find_map(|r| {
                        let lo = i.saturating_sub(r.window);
                        (lo..i).rev().find_map(|j| {
                            let (sc, ref svals) = assigned[j];
                            let scat = &self.cats[sc];
                            if !r.sources.iter().any(|s| *s == scat.spec.pos) {
                                return None;
                            }
                            let copied = scat
                                .spec
                                .features
                                .iter()
                                .position(|sf| sf.name == f.name)
                                .map(|sfi| scat.spec.features[sfi].values[svals[sfi]].value.as_str())
                                .or(r.default.as_deref());
                            Some(copied.and_then(|val| f.values.iter().position(|x| x.value == val)))
                        })
                    })
                });
                let idx = match agreed {
                    Some(Some(idx)) => idx,
                    _ => cat.values[fi].sample(&mut self.rng),
                };
                vals.push(idx);
            }
            // lemma consistent with inherent values
            let key: Vec<Option<usize>> = cat
                .spec
                .features
                .iter()
                .zip(&vals)
                .map(|(f, &x)| f.inherent.then_some(x))
                .collect();
            let lemma = match cat.by_inherent.get(&key) {
                Some((ix, w)) => ix[w.sample(&mut self.rng)],
                None => {
                    // no lemma carries this combination: take any lemma and
                    // adopt its inherent values
                    let w = WeightedIndex::new(&cat.zipf).expect("non-empty category");
                    let l = w.sample(&mut self.rng);
                    for (fi, iv) in cat.lemmas[l].inherent.iter().enumerate() {
                        if let Some(iv) = iv {
                            vals[fi] = *iv;
                        }
                    }
                    l
                }
            };
            let lem = &cat.lemmas[lemma];
            let mut word = lem.stem.clone();
            for (fi, f) in cat.spec.features.iter().enumerate() {
                if !lem.marked[fi] {
                    continue;
                }
                let hidden = f.hidden_with.iter().any(|(hf, hv)| {
                    cat.spec
                        .features
                        .iter()
                        .position(|x| &x.name == hf)
                        .is_some_and(|k| &cat.spec.features[k].values[vals[k]].value == hv)
                });
                if !hidden {
                    word.push_str(&f.values[vals[fi]].suffix);
                }
            }
            let mut tag = format!("{}={}", POS_FEATURE, cat.spec.pos);
            for (fi, f) in cat.spec.features.iter().enumerate() {
                tag.push_str(&format!("|{}={}", f.name, f.values[vals[fi]].value));
            }
            out.push((word, tag));
            assigned.push((c, vals));
        }
        out
    }

    /// Sentences until at least `tokens` tokens have been produced.
    pub fn corpus(&mut self, tokens: usize) -> Result<Vec<Sentence>> {
        let mut sentences = Vec::new();
        let mut n = 0;
        while n < tokens {
            let s = self.sentence();
            n += s.len();
            let mut toks = Vec::with_capacity(s.len());
            for (word, tag) in s {
                let id = self.tagset.parse_tag(&tag)?;
                toks.push(Token { word, tag: Some(id) });
            }
            sentences.push(Sentence { tokens: toks });
        }
        Ok(sentences)
    }

    /// Tag set of everything generated so far.
    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }
}

/// Generates consecutive corpora of the given sizes from one language; all
/// share the returned tag set.
pub fn generate_split(profile: &Profile, seed: u64, sizes: &[usize]) -> Result<(Vec<Vec<Sentence>>, TagSet)> {
    let mut g = Generator::new(profile, seed)?;
    let parts = sizes.iter().map(|&n| g.corpus(n)).collect::<Result<Vec<_>>>()?;
    Ok((parts, g.tagset))
}

/// A single corpus of at least `tokens` tokens.
pub fn generate(profile: &Profile, seed: u64, tokens: usize) -> Result<Corpus> {
    let (mut parts, tagset) = generate_split(profile, seed, &[tokens])?;
    Ok(Corpus {
        sentences: parts.pop().unwrap_or_default(),
        tagset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::write_tagged_corpus;

    fn render(c: &Corpus) -> Vec<u8> {
        let mut out = Vec::new();
        write_tagged_corpus(&mut out, &c.sentences, &c.tagset).unwrap();
        out
    }

    #[test]
    fn deterministic() {
        let p = Profile::french_like();
        let a = generate(&p, 42, 3000).unwrap();
        let b = generate(&p, 42, 3000).unwrap();
        assert_eq!(render(&a), render(&b));
        let c = generate(&p, 43, 3000).unwrap();
        assert_ne!(render(&a), render(&c));
        assert!(a.num_tokens() >= 3000);
    }

    #[test]
    fn pos_only_has_single_pair_tags() {
        let c = generate(&Profile::pos_only(), 1, 2000).unwrap();
        for t in c.tagset.tag_ids() {
            assert_eq!(c.tagset.decompose(t).len(), 1);
        }
    }

    #[test]
    fn feature_sets_follow_pos() {
        let c = generate(&Profile::french_like(), 3, 10_000).unwrap();
        assert!(c.tagset.feature_sets_determined_by_pos());
        assert!(c.tagset.num_tags() > 150, "{}", c.tagset.num_tags());
    }

    #[test]
    fn agreement_holds() {
        let c = generate(&Profile::french_like(), 5, 5000).unwrap();
        let ts = &c.tagset;
        let gen = ts.feature_id("gen").unwrap();
        for s in &c.sentences {
            let tags = s.tags().unwrap();
            for w in tags.windows(2) {
                if ts.pos_value(w[0]) == Some("NOUN") && ts.pos_value(w[1]) == Some("ADJ") {
                    assert_eq!(
                        ts.value_name(ts.pair_value(ts.tag_value(w[0], gen).unwrap())),
                        ts.value_name(ts.pair_value(ts.tag_value(w[1], gen).unwrap()))
                    );
                }
            }
        }
    }

    #[test]
    fn profile_validation() {
        assert!(Profile::french_like().validate().is_ok());
        let mut p = Profile::french_like();
        p.agreement.push(rule("ADJ", "gen", &["PREP"], 1, None));
        assert!(matches!(p.validate(), Err(Error::Profile(_))));
        let mut p = Profile::french_like();
        p.agreement.push(rule("ADJ", "tns", &["VERB"], 1, None));
        assert!(p.validate().is_err());
        let mut p = Profile::french_like();
        p.agreement.push(rule("VPART", "tns", &["VERB"], 1, None));
        assert!(p.validate().is_err(), "VERB tense values cannot be copied onto participles");
        let json = serde_json::to_string(&Profile::french_like()).unwrap();
        assert_eq!(Profile::from_json(&json).unwrap(), Profile::french_like());
        assert!(Profile::builtin("klingon").is_err());
    }
}
