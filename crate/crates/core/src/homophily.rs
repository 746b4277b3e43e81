//! Linguistic-homophily pilot: does a lexicon classifier's correctness
//! cluster on the social graph more than on degree-preserving rewirings?

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Document, Label, LabeledCorpus, SentimentLexicon};
use crate::error::{Error, Result};
use crate::graph::{edge_overlap, SocialGraph};
use crate::seed::derive_rng;

/// Author id to "classifier was correct on this author's single message".
pub type CorrectnessMap = BTreeMap<String, bool>;

/// Positive iff the document has at least as many positive as negative
/// lexicon tokens.
pub fn lexicon_classify(doc: &Document, lex: &SentimentLexicon) -> Label {
    let mut pos = 0usize;
    let mut neg = 0usize;
    for tok in &doc.tokens {
        if lex.is_positive(tok) {
            pos += 1;
        } else if lex.is_negative(tok) {
            neg += 1;
        }
    }
    if pos >= neg {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Keep polar documents, drop authors with more than one of them, and record
/// whether the lexicon classifier got each remaining author right.
pub fn correctness_map(corpus: &LabeledCorpus, lex: &SentimentLexicon) -> CorrectnessMap {
    let mut by_author: HashMap<&str, Vec<&Document>> = HashMap::new();
    for doc in corpus.documents() {
        if doc.label != Label::Neutral {
            by_author.entry(doc.author.as_str()).or_default().push(doc);
        }
    }
    by_author
        .into_iter()
        .filter(|(_, docs)| docs.len() == 1)
        .map(|(author, docs)| (author.to_string(), lexicon_classify(docs[0], lex) == docs[0].label))
        .collect()
}

/// Fraction of edges (both endpoints in `c`) whose endpoints agree on
/// correctness. Edges touching an author outside `c` are skipped.
pub fn assortativity(g: &SocialGraph, c: &CorrectnessMap) -> Result<f64> {
    let by_index: Vec<Option<bool>> = g.nodes().iter().map(|n| c.get(n).copied()).collect();
    let mut eligible = 0usize;
    let mut concordant = 0usize;
    for &(a, b) in g.edge_indices() {
        if let (Some(x), Some(y)) = (by_index[a], by_index[b]) {
            eligible += 1;
            if x == y {
                concordant += 1;
            }
        }
    }
    if eligible == 0 {
        return Err(Error::InvalidArgument(
            "no edge has both endpoints in the correctness map".into(),
        ));
    }
    Ok(concordant as f64 / eligible as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewiringRecord {
    pub trial: usize,
    pub epoch: usize,
    pub assortativity: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_assortativity: f64,
    pub std_assortativity: f64,
    pub mean_overlap: f64,
    pub std_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewiringReport {
    pub observed: f64,
    pub epochs: usize,
    pub trials: usize,
    /// One record per trial and epoch; epoch 0 is the observed graph.
    pub records: Vec<RewiringRecord>,
    /// Per-epoch mean and sample standard deviation across trials, epochs `0..=epochs`.
    pub summary: Vec<EpochSummary>,
}

impl RewiringReport {
    pub fn epoch_summary(&self, epoch: usize) -> Option<&EpochSummary> {
        self.summary.iter().find(|s| s.epoch == epoch)
    }

    /// Tab-separated records with a header, for plotting.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("trial\tepoch\tassortativity\toverlap\n");
        for r in &self.records {
            let _ = writeln!(out, "{}\t{}\t{:.9}\t{:.9}", r.trial, r.epoch, r.assortativity, r.overlap);
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Compare observed assortativity against `trials` independent rewiring
/// chains of `epochs` epochs each. Trial `t` draws from stream
/// `("rewire", t)` of `seed`.
pub fn rewiring_experiment(
    g: &SocialGraph,
    c: &CorrectnessMap,
    epochs: usize,
    trials: usize,
    seed: u64,
) -> Result<RewiringReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let observed = assortativity(g, c)?;
    let mut records = Vec::with_capacity(trials * (epochs + 1));
    for trial in 0..trials {
        let mut rng = derive_rng(seed, "rewire", trial as u64);
        records.push(RewiringRecord {
            trial,
            epoch: 0,
            assortativity: observed,
            overlap: 1.0,
        });
        let mut current = g.clone();
        for epoch in 1..=epochs {
            current = current.double_edge_swap_epoch(&mut rng)?;
            debug_assert_eq!(current.degrees(), g.degrees());
            records.push(RewiringRecord {
                trial,
                epoch,
                assortativity: assortativity(&current, c)?,
                overlap: edge_overlap(g, &current)?,
            });
        }
    }
    let summary = (0..=epochs)
        .map(|epoch| {
            let rows: Vec<&RewiringRecord> = records.iter().filter(|r| r.epoch == epoch).collect();
            let a: Vec<f64> = rows.iter().map(|r| r.assortativity).collect();
            let o: Vec<f64> = rows.iter().map(|r| r.overlap).collect();
            let (mean_assortativity, std_assortativity) = mean_std(&a);
            let (mean_overlap, std_overlap) = mean_std(&o);
            EpochSummary {
                epoch,
                mean_assortativity,
                std_assortativity,
                mean_overlap,
                std_overlap,
            }
        })
        .collect();
    Ok(RewiringReport {
        observed,
        epochs,
        trials,
        records,
        summary,
    })
}
