//! Corpus, lexicon and tokenizer I/O.
//!
//! Corpora are UTF-8 TSV files with four columns: `id`, `author`, `label`,
//! `text`. The text column is tokenized on load, so the stored [`Document`]
//! only keeps the token sequence.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Neutral,
}

impl Label {
    /// Canonical class order used by models and confusion matrices.
    pub const ALL: [Label; 3] = [Label::Positive, Label::Negative, Label::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Neutral => "neutral",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::Positive => 0,
            Label::Negative => 1,
            Label::Neutral => 2,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            "neutral" => Ok(Label::Neutral),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub author: String,
    pub label: Label,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, author: impl Into<String>, label: Label, text: &str) -> Self {
        Document {
            id: id.into(),
            author: author.into(),
            label,
            tokens: tokenize(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    class_counts: BTreeMap<Label, usize>,
}

impl LabeledCorpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate document id `{}`",
                    doc.id
                )));
            }
        }
        let mut class_counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
        for doc in &documents {
            *class_counts.entry(doc.label).or_default() += 1;
        }
        Ok(LabeledCorpus {
            documents,
            class_counts,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.class_counts.get(&label).copied().unwrap_or(0)
    }

    pub fn class_counts(&self) -> &BTreeMap<Label, usize> {
        &self.class_counts
    }

    pub fn labels(&self) -> Vec<Label> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn authors(&self) -> BTreeSet<&str> {
        self.documents.iter().map(|d| d.author.as_str()).collect()
    }
}

/// Lowercase, split on whitespace, and replace URLs and user mentions with
/// sentinel tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| {
            let tok = raw.to_lowercase();
            if tok.starts_with("http://") || tok.starts_with("https://") || tok.starts_with("www.") {
                URL_TOKEN.to_string()
            } else if tok.len() > 1 && tok.starts_with('@') {
                USER_TOKEN.to_string()
            } else {
                tok
            }
        })
        .collect()
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_corpus(contents: &str, path: &Path) -> Result<LabeledCorpus> {
    let mut documents = Vec::new();
    for (idx, line) in contents.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let label = fields[2].parse::<Label>().map_err(|token| Error::UnknownLabel {
            path: path.to_path_buf(),
            line: lineno,
            token,
        })?;
        documents.push(Document::new(fields[0], fields[1], label, fields[3]));
    }
    LabeledCorpus::new(documents).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::parse(path, 0, msg),
        other => other,
    })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    parse_corpus(&read_to_string(path)?, path)
}

/// Write a corpus back to TSV, with the text column holding the space-joined
/// tokens.
pub fn save_corpus(corpus: &LabeledCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in corpus.documents() {
        writeln!(w, "{}\t{}\t{}\t{}", doc.id, doc.author, doc.label, doc.tokens.join(" "))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SentimentLexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

impl SentimentLexicon {
    /// Build a lexicon, dropping any word listed under both polarities.
    /// Returns the dropped words alongside the lexicon.
    pub fn new<P, N>(positive: P, negative: N) -> (Self, Vec<String>)
    where
        P: IntoIterator,
        P::Item: Into<String>,
        N: IntoIterator,
        N::Item: Into<String>,
    {
        let mut positive: BTreeSet<String> = positive.into_iter().map(Into::into).collect();
        let mut negative: BTreeSet<String> = negative.into_iter().map(Into::into).collect();
        let conflicts: Vec<String> = positive.intersection(&negative).cloned().collect();
        for w in &conflicts {
            positive.remove(w);
            negative.remove(w);
        }
        (SentimentLexicon { positive, negative }, conflicts)
    }

    pub fn positive(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn negative(&self) -> &BTreeSet<String> {
        &self.negative
    }

    pub fn is_positive(&self, word: &str) -> bool {
        self.positive.contains(word)
    }

    pub fn is_negative(&self, word: &str) -> bool {
        self.negative.contains(word)
    }
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn load_lexicon(pos_path: impl AsRef<Path>, neg_path: impl AsRef<Path>) -> Result<SentimentLexicon> {
    let pos = read_word_list(pos_path.as_ref())?;
    let neg = read_word_list(neg_path.as_ref())?;
    let (lexicon, dropped) = SentimentLexicon::new(pos, neg);
    if !dropped.is_empty() {
        log::warn!(
            "dropped {} word(s) listed under both polarities: {}",
            dropped.len(),
            dropped.join(", ")
        );
    }
    Ok(lexicon)
}

pub fn save_word_list<'a>(words: impl IntoIterator<Item = &'a String>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for w in words {
        out.push_str(w);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
