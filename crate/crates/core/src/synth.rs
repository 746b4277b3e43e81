//! Planted-homophily benchmark: a two-block random graph whose authors write
//! short messages, some of which carry their sentiment only through
//! "flip words" whose polarity depends on the author's community.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{save_corpus, save_word_list, Document, Label, LabeledCorpus, SentimentLexicon};
use crate::embeddings::{save_embeddings, WordEmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{save_edge_list, SocialGraph};
use crate::homophily::CorrectnessMap;
use crate::seed::derive_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub nodes_per_community: usize,
    pub intra_prob: f64,
    pub inter_prob: f64,
    /// Each flip word is positive in community A and negative in B when its
    /// position in this list is even, the other way round when odd.
    pub flip_words: Vec<String>,
    pub docs_per_author: usize,
    /// Number of sentiment-free filler words.
    pub vocab_size: usize,
    /// Lexicon words per polarity (flip words not included).
    pub lexicon_size: usize,
    /// Probability that a polar message uses a flip word instead of a lexicon word.
    pub flip_rate: f64,
    pub neutral_rate: f64,
    pub min_length: usize,
    pub max_length: usize,
    pub word_dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            nodes_per_community: 100,
            intra_prob: 0.1,
            inter_prob: 0.005,
            flip_words: vec!["sick".into(), "ill".into()],
            docs_per_author: 5,
            vocab_size: 40,
            lexicon_size: 10,
            flip_rate: 0.5,
            neutral_rate: 0.2,
            min_length: 3,
            max_length: 7,
            word_dim: 16,
            seed: 0,
        }
    }
}

fn filler(i: usize) -> String {
    format!("w{i:03}")
}

fn pos_word(i: usize) -> String {
    format!("good{i:02}")
}

fn neg_word(i: usize) -> String {
    format!("bad{i:02}")
}

impl SynthConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, p) in [
            ("intra_prob", self.intra_prob),
            ("inter_prob", self.inter_prob),
            ("flip_rate", self.flip_rate),
            ("neutral_rate", self.neutral_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                errs.push(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.nodes_per_community == 0 {
            errs.push("nodes_per_community must be positive".into());
        }
        if self.docs_per_author == 0 {
            errs.push("docs_per_author must be positive".into());
        }
        if self.vocab_size == 0 {
            errs.push("vocab_size must be positive".into());
        }
        if self.lexicon_size == 0 {
            errs.push("lexicon_size must be positive".into());
        }
        if self.word_dim == 0 {
            errs.push("word_dim must be positive".into());
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            errs.push(format!(
                "need 1 <= min_length <= max_length, got {}..{}",
                self.min_length, self.max_length
            ));
        }
        let mut seen = BTreeSet::new();
        for w in &self.flip_words {
            let generated = (0..self.vocab_size).any(|i| filler(i) == *w)
                || (0..self.lexicon_size).any(|i| pos_word(i) == *w || neg_word(i) == *w);
            if w.is_empty() || w.contains(char::is_whitespace) || w != &w.to_lowercase() {
                errs.push(format!("flip word {w:?} must be a single lowercase token"));
            } else if generated || !seen.insert(w) {
                errs.push(format!("flip word {w:?} collides with another vocabulary word"));
            }
        }
        errs
    }

    pub fn authors(&self) -> Vec<String> {
        (0..2 * self.nodes_per_community).map(|i| format!("u{i:03}")).collect()
    }

    /// Polarity of `word` for an author in `community` (0 = A, 1 = B).
    pub fn polarity(&self, word: &str, community: usize) -> i32 {
        if let Some(i) = self.flip_words.iter().position(|w| w == word) {
            let in_a = if i % 2 == 0 { 1 } else { -1 };
            return if community == 0 { in_a } else { -in_a };
        }
        if (0..self.lexicon_size).any(|i| pos_word(i) == word) {
            1
        } else if (0..self.lexicon_size).any(|i| neg_word(i) == word) {
            -1
        } else {
            0
        }
    }

    /// Gold label of a message: sign of its summed token polarities.
    pub fn gold_label<S: AsRef<str>>(&self, tokens: &[S], community: usize) -> Label {
        let score: i32 = tokens.iter().map(|t| self.polarity(t.as_ref(), community)).sum();
        match score.signum() {
            1 => Label::Positive,
            -1 => Label::Negative,
            _ => Label::Neutral,
        }
    }

    pub fn lexicon(&self) -> SentimentLexicon {
        let mut pos: Vec<String> = (0..self.lexicon_size).map(pos_word).collect();
        let mut neg: Vec<String> = (0..self.lexicon_size).map(neg_word).collect();
        for (i, w) in self.flip_words.iter().enumerate() {
            if i % 2 == 0 {
                pos.push(w.clone());
            } else {
                neg.push(w.clone());
            }
        }
        SentimentLexicon::new(pos, neg).0
    }

    pub fn vocabulary(&self) -> Vec<String> {
        (0..self.vocab_size)
            .map(filler)
            .chain((0..self.lexicon_size).map(pos_word))
            .chain((0..self.lexicon_size).map(neg_word))
            .chain(self.flip_words.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub config: SynthConfig,
    pub graph: SocialGraph,
    /// Author id to community (0 = A, 1 = B).
    pub communities: BTreeMap<String, usize>,
    pub train: LabeledCorpus,
    pub dev: LabeledCorpus,
    pub test: LabeledCorpus,
    pub word_table: WordEmbeddingTable,
    pub lexicon: SentimentLexicon,
}

fn planted_graph(cfg: &SynthConfig, authors: &[String]) -> Result<SocialGraph> {
    let mut rng = derive_rng(cfg.seed, "synth-graph", 0);
    let n = cfg.nodes_per_community;
    let mut edges = Vec::new();
    for i in 0..authors.len() {
        for j in i + 1..authors.len() {
            let p = if (i < n) == (j < n) { cfg.intra_prob } else { cfg.inter_prob };
            if rng.random_bool(p) {
                edges.push((authors[i].as_str(), authors[j].as_str()));
            }
        }
    }
    SocialGraph::new(authors.iter().map(String::as_str), edges)
}

fn message<R: Rng + ?Sized>(cfg: &SynthConfig, community: usize, rng: &mut R) -> Vec<String> {
    let len = rng.random_range(cfg.min_length..=cfg.max_length);
    let mut tokens: Vec<String> = (0..len)
        .map(|_| filler(rng.random_range(0..cfg.vocab_size)))
        .collect();
    if rng.random_bool(cfg.neutral_rate) {
        return tokens;
    }
    let target = if rng.random_bool(0.5) { 1 } else { -1 };
    let word = if !cfg.flip_words.is_empty() && rng.random_bool(cfg.flip_rate) {
        let matching: Vec<&String> = cfg
            .flip_words
            .iter()
            .filter(|w| cfg.polarity(w, community) == target)
            .collect();
        match matching.choose(rng) {
            Some(w) => (*w).clone(),
            None => cfg.flip_words[0].clone(),
        }
    } else if target > 0 {
        pos_word(rng.random_range(0..cfg.lexicon_size))
    } else {
        neg_word(rng.random_range(0..cfg.lexicon_size))
    };
    let slot = rng.random_range(0..len);
    tokens[slot] = word;
    tokens
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::InvalidArgument(errs.join("; ")));
    }
    let authors = cfg.authors();
    let graph = planted_graph(cfg, &authors)?;
    let communities: BTreeMap<String, usize> = authors
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), usize::from(i >= cfg.nodes_per_community)))
        .collect();

    let mut order = authors.clone();
    order.shuffle(&mut derive_rng(cfg.seed, "synth-split", 0));
    let n_train = (order.len() * 7).div_ceil(10);
    let n_dev = order.len() / 10;
    let mut splits: [Vec<Document>; 3] = Default::default();
    for (pos, author) in order.iter().enumerate() {
        let split = if pos < n_train {
            0
        } else if pos < n_train + n_dev {
            1
        } else {
            2
        };
        let community = communities[author];
        let idx: usize = author[1..].parse().expect("generated author ids are numeric");
        let mut rng = derive_rng(cfg.seed, "synth-docs", idx as u64);
        for d in 0..cfg.docs_per_author {
            let tokens = message(cfg, community, &mut rng);
            splits[split].push(Document {
                id: format!("{author}-{d}"),
                author: author.clone(),
                label: cfg.gold_label(&tokens, community),
                tokens,
            });
        }
    }
    let [train, dev, test] = splits;

    let mut word_table = WordEmbeddingTable::new(cfg.word_dim);
    let mut rng = derive_rng(cfg.seed, "synth-words", 0);
    let normal = Normal::new(0.0, 1.0 / (cfg.word_dim as f64).sqrt()).expect("positive std");
    for w in cfg.vocabulary() {
        let v: Vec<f64> = (0..cfg.word_dim).map(|_| normal.sample(&mut rng)).collect();
        word_table.insert(w, &v)?;
    }

    Ok(SynthDataset {
        config: cfg.clone(),
        graph,
        communities,
        train: LabeledCorpus::new(train)?,
        dev: LabeledCorpus::new(dev)?,
        test: LabeledCorpus::new(test)?,
        word_table,
        lexicon: cfg.lexicon(),
    })
}

/// Per-author correctness drawn with probability `p_a` in community A and
/// `p_b` in community B.
pub fn planted_correctness<R: Rng + ?Sized>(
    communities: &BTreeMap<String, usize>,
    p_a: f64,
    p_b: f64,
    rng: &mut R,
) -> CorrectnessMap {
    communities
        .iter()
        .map(|(a, &c)| (a.clone(), rng.random_bool(if c == 0 { p_a } else { p_b })))
        .collect()
}

impl SynthDataset {
    /// Write graph.txt, train/dev/test.tsv, words.txt, positive.txt,
    /// negative.txt and communities.tsv into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_edge_list(&self.graph, dir.join("graph.txt"))?;
        save_corpus(&self.train, dir.join("train.tsv"))?;
        save_corpus(&self.dev, dir.join("dev.tsv"))?;
        save_corpus(&self.test, dir.join("test.tsv"))?;
        save_embeddings(&self.word_table, dir.join("words.txt"))?;
        save_word_list(self.lexicon.positive(), dir.join("positive.txt"))?;
        save_word_list(self.lexicon.negative(), dir.join("negative.txt"))?;
        let mut text = String::new();
        for (a, c) in &self.communities {
            text.push_str(&format!("{a}\t{}\n", if *c == 0 { "A" } else { "B" }));
        }
        let path = dir.join("communities.tsv");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
