//! Trained models and their file format.
//!
//! A model file is UTF-8 text:
//!
//! ```text
//! fstag-model 1
//! sha256 <hex digest of the body>
//! <body: one JSON document>
//! ```
//!
//! The body holds the sections `format_version`, `tagset`, `counts`, `pfr`,
//! `trees`, `lexicon` and `config`. All maps are ordered, so equal models
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Method, TrainingConfig};
use crate::corpus_io::{build_lexicon, Corpus, Lexicon};
use crate::counts::{CountTables, LexicalModel, Marginals};
use crate::decoder::{tag_words, Order, SourceTransitions, TaggedSentence};
use crate::dtree::{build_tree_set, TreeSet};
use crate::error::{Error, Result};
use crate::feature_model::{TagId, TagSet};
use crate::pfr::{build_pfr_stores, PfrStore};
use crate::transition::TransitionSource;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "fstag-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub methods: Vec<Method>,
    pub training: TrainingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelBody {
    format_version: u32,
    tagset: TagSet,
    counts: CountTables,
    /// Keyed by method number.
    pfr: BTreeMap<String, PfrStore>,
    trees: Option<TreeSet>,
    lexicon: Lexicon,
    config: ModelConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    body: ModelBody,
    marginals: Marginals,
    open_tags: Vec<TagId>,
}

impl Model {
    /// Trains counts, the lexicon and one transition source per requested
    /// method. The trigram source needs nothing beyond the counts.
    pub fn train(corpus: &Corpus, methods: &[Method], config: &TrainingConfig) -> Result<Model> {
        config.validate()?;
        let tagset = corpus.tagset.clone();
        let seqs = corpus.tag_sequences()?;
        let counts = CountTables::count(seqs.iter().map(Vec::as_slice));
        let lexicon = build_lexicon(&corpus.sentences);
        let mut methods: Vec<Method> = methods.to_vec();
        methods.sort();
        methods.dedup();
        let pfr_methods: Vec<Method> = methods.iter().copied().filter(|m| m.is_pfr()).collect();
        let mut pfr = BTreeMap::new();
        for (m, store) in pfr_methods.iter().zip(build_pfr_stores(&tagset, &counts, &pfr_methods, config)?) {
            info!("method {m}: {} relations", store.len());
            pfr.insert(m.to_string(), store);
        }
        let mut trees = None;
        if methods.contains(&Method::Tree) {
            let t = build_tree_set(&tagset, &counts, config)?;
            info!("method 4: {} trees, {} nodes", t.len(), t.num_nodes());
            trees = Some(t);
        }
        Ok(Self::assemble(ModelBody {
            format_version: FORMAT_VERSION,
            tagset,
            counts,
            pfr,
            trees,
            lexicon,
            config: ModelConfig {
                methods,
                training: config.clone(),
            },
        }))
    }

    fn assemble(body: ModelBody) -> Model {
        let marginals = Marginals::new(&body.counts, &body.tagset);
        let open_tags = body.tagset.tags_with_pos(&body.config.training.open_class);
        Model {
            body,
            marginals,
            open_tags,
        }
    }

    pub fn tagset(&self) -> &TagSet {
        &self.body.tagset
    }

    pub fn counts(&self) -> &CountTables {
        &self.body.counts
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.body.lexicon
    }

    pub fn config(&self) -> &ModelConfig {
        &self.body.config
    }

    pub fn marginals(&self) -> &Marginals {
        &self.marginals
    }

    pub fn open_tags(&self) -> &[TagId] {
        &self.open_tags
    }

    pub fn pfr_store(&self, method: Method) -> Option<&PfrStore> {
        self.body.pfr.get(&method.to_string())
    }

    pub fn trees(&self) -> Option<&TreeSet> {
        self.body.trees.as_ref()
    }

    pub fn has_method(&self, method: Method) -> bool {
        match method {
            Method::Trigram => true,
            Method::Tree => self.body.trees.is_some(),
            m => self.pfr_store(m).is_some(),
        }
    }

    /// Replaces the lexicon entries of every word in `other`. Tags in the
    /// override must come from this model's tag set.
    pub fn override_lexicon(&mut self, other: Lexicon) -> Result<()> {
        for (w, es) in other.iter() {
            for &(t, _) in es {
                if t.index() >= self.body.tagset.num_tags() {
                    return Err(Error::UnknownTag(format!("tag id {} for `{w}`", t.0)));
                }
            }
        }
        self.body.lexicon.override_with(other);
        Ok(())
    }

    pub fn source(&self, method: Method) -> Result<TransitionSource<'_>> {
        match method {
            Method::Trigram => Ok(TransitionSource::Trigram(&self.body.counts)),
            Method::Tree => Ok(TransitionSource::Tree {
                trees: self.trees().ok_or_else(|| Error::MissingSource(method.to_string()))?,
                marginals: &self.marginals,
            }),
            m => Ok(TransitionSource::Pfr {
                store: self
                    .pfr_store(m)
                    .ok_or_else(|| Error::MissingSource(m.to_string()))?,
                marginals: &self.marginals,
            }),
        }
    }

    /// Exact count-table conditionals, for diagnostics.
    pub fn exact_source(&self) -> TransitionSource<'_> {
        TransitionSource::exact(&self.body.counts, &self.body.tagset)
    }

    pub fn lexical(&self) -> LexicalModel<'_> {
        LexicalModel::new(&self.body.lexicon, &self.body.counts, self.open_tags.clone())
    }

    /// Tags one sentence with Viterbi under the given source.
    pub fn tag_with(&self, source: &TransitionSource, words: &[&str], order: Order) -> TaggedSentence {
        let trans = SourceTransitions {
            source,
            tagset: &self.body.tagset,
        };
        tag_words(words, &self.lexical(), &trans, order)
    }

    pub fn tag(&self, words: &[&str], method: Method, order: Order) -> Result<TaggedSentence> {
        let source = self.source(method)?;
        Ok(self.tag_with(&source, words, order))
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let body = serde_json::to_string(&self.body)?;
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "sha256 {digest}")?;
        out.write_all(body.as_bytes())?;
        writeln!(out)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = Vec::new();
        self.save(&mut v)?;
        Ok(v)
    }

    pub fn load<R: BufRead>(mut input: R) -> Result<Model> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header.trim_end();
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| Error::MalformedModel("missing `fstag-model` header".into()))?;
        if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: version.to_string(),
                expected: FORMAT_VERSION,
            });
        }
        let mut sum = String::new();
        input.read_line(&mut sum)?;
        let expected = sum
            .trim_end()
            .strip_prefix("sha256 ")
            .ok_or_else(|| Error::MalformedModel("missing checksum line".into()))?
            .to_string();
        let mut body = String::new();
        input.read_to_string(&mut body)?;
        let body = body.strip_suffix('\n').unwrap_or(&body);
        if hex::encode(Sha256::digest(body.as_bytes())) != expected {
            return Err(Error::Checksum);
        }
        let body: ModelBody =
            serde_json::from_str(body).map_err(|e| Error::MalformedModel(e.to_string()))?;
        if body.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: body.format_version.to_string(),
                expected: FORMAT_VERSION,
            });
        }
        Ok(Self::assemble(body))
    }
}
