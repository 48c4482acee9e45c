//! Tagged and untagged corpus readers, the word→tags lexicon and writers.
//!
//! Corpus format: one token per line as `word<TAB>tagstring`, a blank line
//! ends a sentence, lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_model::{TagId, TagSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub word: String,
    pub tag: Option<TagId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.word.as_str()).collect()
    }

    /// Gold tags, or `None` if any token is untagged.
    pub fn tags(&self) -> Option<Vec<TagId>> {
        self.tokens.iter().map(|t| t.tag).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub tagset: TagSet,
}

impl Corpus {
    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Tag sequences of every sentence; fails on an untagged token.
    pub fn tag_sequences(&self) -> Result<Vec<Vec<TagId>>> {
        self.sentences
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
}

/// Reads a tagged corpus into a fresh tag set.
pub fn read_tagged_corpus<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut tagset = TagSet::new();
    let sentences = read_tagged_corpus_with(reader, &mut tagset)?;
    Ok(Corpus { sentences, tagset })
}

/// Reads a tagged corpus, registering tags into an existing tag set.
pub fn read_tagged_corpus_with<R: BufRead>(reader: R, tagset: &mut TagSet) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        let lineno = i + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (word, tag) = line.split_once('\t').ok_or_else(|| Error::Corpus {
            line: lineno,
            message: "expected word<TAB>tag".to_string(),
        })?;
        if word.is_empty() {
            return Err(Error::Corpus {
                line: lineno,
                message: "empty word".to_string(),
            });
        }
        let tag = tagset.parse_tag(tag).map_err(|e| Error::Corpus {
            line: lineno,
            message: e.to_string(),
        })?;
        if tagset.is_boundary(tag) {
            return Err(Error::Corpus {
                line: lineno,
                message: Error::ReservedTag(tagset.render_tag(tag)).to_string(),
            });
        }
        current.tokens.push(Token {
            word: word.to_string(),
            tag: Some(tag),
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Reads tagging input: one word per line, blank lines between sentences.
/// Anything after a TAB on a line is ignored, so tagged files can be re-tagged.
pub fn read_untagged<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let word = line.split('\t').next().unwrap_or(line);
        current.tokens.push(Token {
            word: word.to_string(),
            tag: None,
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Writes sentences in corpus format; untagged tokens are an error.
pub fn write_tagged_corpus<W: Write>(mut out: W, sentences: &[Sentence], tagset: &TagSet) -> Result<()> {
    for s in sentences {
        for t in &s.tokens {
            let tag = t.tag.ok_or_else(|| Error::Corpus {
                line: 0,
                message: format!("token `{}` has no tag", t.word),
            })?;
            writeln!(out, "{}\t{}", t.word, tagset.render_tag(tag))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Word → (tag, count) entries, counts being `f(w,t)` over a training corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<(TagId, u64)>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self, word: &str) -> Option<&[(TagId, u64)]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn count(&self, word: &str, tag: TagId) -> u64 {
        self.entries(word)
            .and_then(|es| es.iter().find(|(t, _)| *t == tag))
            .map_or(0, |&(_, c)| c)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(TagId, u64)])> {
        self.entries.iter().map(|(w, es)| (w.as_str(), es.as_slice()))
    }

    pub fn add(&mut self, word: &str, tag: TagId, count: u64) {
        let es = self.entries.entry(word.to_string()).or_default();
        match es.binary_search_by_key(&tag, |&(t, _)| t) {
            Ok(i) => es[i].1 += count,
            Err(i) => es.insert(i, (tag, count)),
        }
    }

    /// Replaces the entries of every word listed in `other`.
    pub fn override_with(&mut self, other: Lexicon) {
        for (w, es) in other.entries {
            self.entries.insert(w, es);
        }
    }
}

/// Counts word/tag co-occurrences over tagged sentences. Untagged tokens are
/// skipped.
pub fn build_lexicon(sentences: &[Sentence]) -> Lexicon {
    let mut lex = Lexicon::new();
    for s in sentences {
        for t in &s.tokens {
            if let Some(tag) = t.tag {
                lex.add(&t.word, tag, 1);
            }
        }
    }
    lex
}

/// Reads a lexicon override file (`word<TAB>tagstring<TAB>count`). Tags must
/// already exist in `tagset`.
pub fn read_lexicon_override<R: BufRead>(reader: R, tagset: &TagSet) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Corpus { line: i + 1, message };
        let mut fields = line.split('\t');
        let (Some(word), Some(tag), Some(count), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(err("expected word<TAB>tag<TAB>count".to_string()));
        };
        let tag = tagset
            .lookup_tag(tag)
            .map_err(|e| err(e.to_string()))?
            .ok_or_else(|| err(Error::UnknownTag(tag.to_string()).to_string()))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| err(format!("bad count `{count}`")))?;
        lex.add(word, tag, count);
    }
    Ok(lex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_two_token_sentence() {
        let text = "la\tpos=DET|gen=FEM|num=SG|typ=DEF\nmaison\tpos=NOUN|gen=FEM|num=SG\n";
        let c = read_tagged_corpus(text.as_bytes()).unwrap();
        assert_eq!(c.sentences.len(), 1);
        assert_eq!(c.sentences[0].words(), ["la", "maison"]);
        let tags = c.sentences[0].tags().unwrap();
        assert_eq!(c.tagset.render_tag(tags[0]), "pos=DET|gen=FEM|num=SG|typ=DEF");
        assert_eq!(c.tagset.render_tag(tags[1]), "pos=NOUN|gen=FEM|num=SG");
    }

    #[test]
    fn empty_stream() {
        let c = read_tagged_corpus("".as_bytes()).unwrap();
        assert!(c.sentences.is_empty());
        // only the boundary tag
        assert_eq!(c.tagset.num_tags(), 1);
    }

    #[test]
    fn sentences_comments_and_errors() {
        let text = "# header\na\tpos=X\n\n\nb\tpos=Y\nc\tpos=X\n";
        let c = read_tagged_corpus(text.as_bytes()).unwrap();
        assert_eq!(c.sentences.len(), 2);
        assert_eq!(c.num_tokens(), 3);

        let err = read_tagged_corpus("a pos=X\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 1, .. }));
        let err = read_tagged_corpus("a\tpos=X\nb\tposX\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 2, .. }));
        let err = read_tagged_corpus("a\tpos=BOUND\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("reserved"));
    }

    #[test]
    fn reading_is_idempotent() {
        let text = "a\tpos=X|gen=F\nb\tgen=M|pos=Y\n\nc\tpos=X|gen=F\n";
        let c = read_tagged_corpus(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_tagged_corpus(&mut out, &c.sentences, &c.tagset).unwrap();
        let c2 = read_tagged_corpus(out.as_slice()).unwrap();
        let mut out2 = Vec::new();
        write_tagged_corpus(&mut out2, &c2.sentences, &c2.tagset).unwrap();
        assert_eq!(out, out2);
        assert_eq!(c.sentences, c2.sentences);
    }

    #[test]
    fn lexicon_counts() {
        let text = "w\tpos=A\nw\tpos=A\nv\tpos=B\n\nw\tpos=A\nw\tpos=B\n";
        let c = read_tagged_corpus(text.as_bytes()).unwrap();
        let lex = build_lexicon(&c.sentences);
        let a = c.tagset.lookup_tag("pos=A").unwrap().unwrap();
        let b = c.tagset.lookup_tag("pos=B").unwrap().unwrap();
        assert_eq!(lex.entries("w").unwrap(), &[(a, 3), (b, 1)]);
        assert_eq!(lex.entries("v").unwrap(), &[(b, 1)]);
        assert_eq!(lex.count("w", b), 1);
        assert_eq!(lex.count("zzz", b), 0);
    }

    #[test]
    fn override_file() {
        let c = read_tagged_corpus("w\tpos=A\nw\tpos=B\n".as_bytes()).unwrap();
        let mut lex = build_lexicon(&c.sentences);
        let ov = read_lexicon_override("w\tpos=B\t5\nnew\tpos=A\t2\n".as_bytes(), &c.tagset).unwrap();
        lex.override_with(ov);
        let a = c.tagset.lookup_tag("pos=A").unwrap().unwrap();
        let b = c.tagset.lookup_tag("pos=B").unwrap().unwrap();
        assert_eq!(lex.entries("w").unwrap(), &[(b, 5)]);
        assert_eq!(lex.entries("new").unwrap(), &[(a, 2)]);

        assert!(read_lexicon_override("w\tpos=Z\t1\n".as_bytes(), &c.tagset).is_err());
        assert!(read_lexicon_override("w\tpos=A\n".as_bytes(), &c.tagset).is_err());
        assert!(read_lexicon_override("w\tpos=A\tx\n".as_bytes(), &c.tagset).is_err());
    }

    #[test]
    fn untagged_input() {
        let s = read_untagged("a\nb\tpos=X\n\n# c\nd\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].words(), ["a", "b"]);
        assert_eq!(s[1].words(), ["d"]);
        assert!(s[0].tags().is_none());
    }
}
