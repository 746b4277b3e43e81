//! Evaluation: average F1 of the positive and negative classes over the
//! three-way confusion matrix, the paired bootstrap t-test, and per-basis
//! word specificity.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::cnn;
use crate::corpus::{Label, SentimentLexicon};
use crate::error::{Error, Result};
use crate::model::{Mode, SocialAttentionModel};
use crate::seed::derive_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// `confusion[gold][pred]`, indexed in [`Label::ALL`] order.
    pub confusion: [[usize; 3]; 3],
    pub per_class: Vec<ClassScores>,
    /// Mean of the positive and negative F1 scores.
    pub average_f1: f64,
}

impl EvalReport {
    pub fn class(&self, label: Label) -> &ClassScores {
        &self.per_class[label.index()]
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("class\tprecision\trecall\tf1\n");
        for c in &self.per_class {
            out.push_str(&format!("{}\t{:.6}\t{:.6}\t{:.6}\n", c.label, c.precision, c.recall, c.f1));
        }
        out.push_str("confusion (rows gold, columns predicted: positive negative neutral)\n");
        for (label, row) in Label::ALL.iter().zip(&self.confusion) {
            out.push_str(&format!("{label}\t{}\t{}\t{}\n", row[0], row[1], row[2]));
        }
        out
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn average_f1(gold: &[Label], pred: &[Label]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidArgument(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate zero documents".into()));
    }
    let mut confusion = [[0usize; 3]; 3];
    for (g, p) in gold.iter().zip(pred) {
        confusion[g.index()][p.index()] += 1;
    }
    let per_class: Vec<ClassScores> = Label::ALL
        .iter()
        .map(|&label| {
            let c = label.index();
            let tp = confusion[c][c];
            let gold_total: usize = confusion[c].iter().sum();
            let pred_total: usize = confusion.iter().map(|row| row[c]).sum();
            ClassScores {
                label,
                precision: ratio(tp, pred_total),
                recall: ratio(tp, gold_total),
                // 2PR/(P+R) written in counts; zero when the class never occurs.
                f1: ratio(2 * tp, gold_total + pred_total),
            }
        })
        .collect();
    let average_f1 = (per_class[Label::Positive.index()].f1 + per_class[Label::Negative.index()].f1) / 2.0;
    Ok(EvalReport {
        confusion,
        per_class,
        average_f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub samples: usize,
    pub p_value: f64,
    pub significant: bool,
    pub mean_a: f64,
    pub mean_b: f64,
    pub scores_a: Vec<f64>,
    pub scores_b: Vec<f64>,
}

/// Two-tailed paired t-test on per-sample differences, `n − 1` degrees of
/// freedom. Zero variance gives `p = 1` when the mean difference is zero and
/// `p = 0` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        return if mean == 0.0 { 1.0 } else { 0.0 };
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0).expect("n >= 2 gives positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Resample documents with replacement `samples` times, score both systems
/// on each resample, and apply a paired t-test. Sample `s` draws from stream
/// `("bootstrap", s)` of `seed`.
pub fn bootstrap_significance(
    gold: &[Label],
    pred_a: &[Label],
    pred_b: &[Label],
    samples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    use rand::Rng;

    if gold.len() != pred_a.len() || gold.len() != pred_b.len() {
        return Err(Error::InvalidArgument("gold and prediction lengths differ".into()));
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("cannot bootstrap zero documents".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 samples".into()));
    }
    let n = gold.len();
    let mut scores_a = Vec::with_capacity(samples);
    let mut scores_b = Vec::with_capacity(samples);
    let (mut g, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for s in 0..samples {
        let mut rng = derive_rng(seed, "bootstrap", s as u64);
        g.clear();
        a.clear();
        b.clear();
        for _ in 0..n {
            let i = rng.random_range(0..n);
            g.push(gold[i]);
            a.push(pred_a[i]);
            b.push(pred_b[i]);
        }
        scores_a.push(average_f1(&g, &a)?.average_f1);
        scores_b.push(average_f1(&g, &b)?.average_f1);
    }
    let p_value = paired_t_test(&scores_a, &scores_b);
    Ok(BootstrapResult {
        samples,
        p_value,
        significant: p_value < 0.05,
        mean_a: scores_a.iter().sum::<f64>() / samples as f64,
        mean_b: scores_b.iter().sum::<f64>() / samples as f64,
        scores_a,
        scores_b,
    })
}

/// Specificity scores of one lexicon word: `p(y | w, k) − mean_k' p(y | w, k')`
/// for `y` in (positive, negative), one pair per basis model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordScores {
    pub word: String,
    pub lexicon: Label,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisWordLists {
    pub basis: usize,
    /// Negative-lexicon words ranked by their positive-class score.
    pub negative_words: Vec<(String, f64)>,
    /// Positive-lexicon words ranked by their negative-class score.
    pub positive_words: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordSpecificity {
    pub scores: Vec<WordScores>,
    pub per_basis: Vec<BasisWordLists>,
    pub skipped_oov: usize,
}

impl WordSpecificity {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for lists in &self.per_basis {
            out.push_str(&format!("basis {}\n", lists.basis));
            let fmt = |ws: &[(String, f64)]| {
                ws.iter()
                    .map(|(w, s)| format!("{w}:{s:.6}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            out.push_str(&format!("  negative-lexicon words used positively: {}\n", fmt(&lists.negative_words)));
            out.push_str(&format!("  positive-lexicon words used negatively: {}\n", fmt(&lists.positive_words)));
        }
        out
    }

    pub fn contains_in_top(&self, word: &str) -> bool {
        self.per_basis.iter().any(|l| {
            l.negative_words.iter().any(|(w, _)| w == word) || l.positive_words.iter().any(|(w, _)| w == word)
        })
    }
}

fn ranked(scores: &[WordScores], lexicon: Label, basis: usize, top_n: usize) -> Vec<(String, f64)> {
    let mut rows: Vec<(String, f64)> = scores
        .iter()
        .filter(|s| s.lexicon == lexicon)
        .map(|s| {
            let score = match lexicon {
                Label::Negative => s.positive[basis],
                _ => s.negative[basis],
            };
            (s.word.clone(), score)
        })
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(top_n);
    rows
}

/// Score each in-vocabulary lexicon word by how much each basis model's
/// prediction on the single-word document departs from the basis average.
pub fn word_specificity(model: &SocialAttentionModel, lexicon: &SentimentLexicon, top_n: usize) -> Result<WordSpecificity> {
    if model.mode == Mode::Concat {
        return Err(Error::InvalidArgument(
            "word specificity needs basis models with their own softmax heads".into(),
        ));
    }
    let k = model.experts();
    let pos = model.class_index(Label::Positive);
    let neg = model.class_index(Label::Negative);
    let mut scores = Vec::new();
    let mut skipped_oov = 0;
    let words = lexicon
        .positive()
        .iter()
        .map(|w| (w, Label::Positive))
        .chain(lexicon.negative().iter().map(|w| (w, Label::Negative)));
    for (word, polarity) in words {
        if !model.word_table.contains(word) {
            skipped_oov += 1;
            continue;
        }
        let x = model.embed(&[word.as_str()]);
        let probs = model
            .params
            .bases
            .iter()
            .map(|b| cnn::forward_input(x.clone(), b).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        let mean_pos = probs.iter().map(|p| p[pos]).sum::<f64>() / k as f64;
        let mean_neg = probs.iter().map(|p| p[neg]).sum::<f64>() / k as f64;
        scores.push(WordScores {
            word: word.clone(),
            lexicon: polarity,
            positive: probs.iter().map(|p| p[pos] - mean_pos).collect(),
            negative: probs.iter().map(|p| p[neg] - mean_neg).collect(),
        });
    }
    let per_basis = (0..k)
        .map(|basis| BasisWordLists {
            basis,
            negative_words: ranked(&scores, Label::Negative, basis, top_n),
            positive_words: ranked(&scores, Label::Positive, basis, top_n),
        })
        .collect();
    Ok(WordSpecificity {
        scores,
        per_basis,
        skipped_oov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingTable;
    use crate::model::ModelShape;
    use rand::Rng;
    use Label::*;

    #[test]
    fn hand_computed_fixture() {
        let r = average_f1(&[Positive, Positive, Neutral, Negative], &[Positive, Neutral, Neutral, Negative]).unwrap();
        assert!((r.class(Positive).f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.class(Negative).f1, 1.0);
        assert!((r.average_f1 - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.total(), 4);
    }

    #[test]
    fn perfect_and_all_neutral() {
        let gold = [Positive, Negative, Neutral, Positive];
        assert_eq!(average_f1(&gold, &gold).unwrap().average_f1, 1.0);
        assert_eq!(average_f1(&gold, &[Neutral; 4]).unwrap().average_f1, 0.0);
        assert!(average_f1(&gold, &gold[..3]).is_err());
    }

    #[test]
    fn empty_class_has_zero_f1() {
        let r = average_f1(&[Neutral, Neutral], &[Neutral, Neutral]).unwrap();
        assert_eq!(r.class(Positive).f1, 0.0);
        assert_eq!(r.average_f1, 0.0);
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = derive_rng(0, "perm", 0);
        for _ in 0..50 {
            let n = rng.random_range(1..30);
            let gold: Vec<Label> = (0..n).map(|_| Label::ALL[rng.random_range(0..3)]).collect();
            let pred: Vec<Label> = (0..n).map(|_| Label::ALL[rng.random_range(0..3)]).collect();
            let mut idx: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            idx.shuffle(&mut rng);
            let g2: Vec<Label> = idx.iter().map(|&i| gold[i]).collect();
            let p2: Vec<Label> = idx.iter().map(|&i| pred[i]).collect();
            assert_eq!(average_f1(&gold, &pred).unwrap(), average_f1(&g2, &p2).unwrap());
        }
    }

    #[test]
    fn identical_predictions_are_not_significant() {
        let gold = [Positive, Negative, Neutral, Positive, Negative];
        let pred = [Positive, Neutral, Neutral, Negative, Negative];
        let r = bootstrap_significance(&gold, &pred, &pred, 100, 1).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
        assert!(bootstrap_significance(&gold, &pred, &pred, 1, 1).is_err());
        assert!(bootstrap_significance(&gold, &pred[..2], &pred, 10, 1).is_err());
    }

    #[test]
    fn swapping_systems_keeps_p_value() {
        let mut rng = derive_rng(5, "sys", 0);
        let gold: Vec<Label> = (0..60).map(|_| Label::ALL[rng.random_range(0..3)]).collect();
        let a: Vec<Label> = gold.iter().map(|&g| if rng.random_bool(0.7) { g } else { Neutral }).collect();
        let b: Vec<Label> = gold.iter().map(|&g| if rng.random_bool(0.6) { g } else { Positive }).collect();
        let ab = bootstrap_significance(&gold, &a, &b, 50, 3).unwrap();
        let ba = bootstrap_significance(&gold, &b, &a, 50, 3).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn t_test_reference_value() {
        // d = (1, 2, 3): mean 2, sd 1, t = 2·sqrt(3) ≈ 3.4641 with 2 df.
        // Two-tailed p for t with 2 df: 1 − t/sqrt(t² + 2) = 1 − 3.4641/3.7417.
        let p = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]);
        let t = 2.0 * 3f64.sqrt();
        let expected = 1.0 - t / (t * t + 2.0).sqrt();
        assert!((p - expected).abs() < 1e-10, "{p} vs {expected}");
    }

    fn tiny_model(mode: Mode, k: usize) -> SocialAttentionModel {
        let mut words = EmbeddingTable::new(3);
        let mut rng = derive_rng(1, "w", 0);
        for w in ["good", "great", "bad", "awful", "the"] {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            words.insert(w, &v).unwrap();
        }
        let mut authors = EmbeddingTable::new(2);
        authors.insert("u", &[0.1, 0.2]).unwrap();
        let shape = ModelShape { mode, experts: k, filters: 4 };
        SocialAttentionModel::new(shape, words, Some(authors), &mut derive_rng(2, "init", 0)).unwrap()
    }

    fn lexicon() -> SentimentLexicon {
        SentimentLexicon::new(["good", "great", "missing"], ["bad", "awful"]).0
    }

    #[test]
    fn identical_bases_score_zero() {
        let mut m = tiny_model(Mode::Social, 3);
        let first = m.params.bases[0].clone();
        for b in &mut m.params.bases {
            *b = first.clone();
        }
        let ws = word_specificity(&m, &lexicon(), 5).unwrap();
        assert_eq!(ws.skipped_oov, 1);
        assert!(ws.scores.iter().all(|s| s.positive.iter().chain(&s.negative).all(|v| v.abs() < 1e-15)));
    }

    #[test]
    fn single_basis_scores_zero() {
        let m = tiny_model(Mode::Single, 1);
        let ws = word_specificity(&m, &lexicon(), 5).unwrap();
        assert_eq!(ws.per_basis.len(), 1);
        assert!(ws.scores.iter().all(|s| s.positive[0] == 0.0 && s.negative[0] == 0.0));
        assert_eq!(ws.per_basis[0].negative_words.len(), 2);
    }

    #[test]
    fn scores_sum_to_zero_and_match_arithmetic() {
        let mut m = tiny_model(Mode::Social, 2);
        // Force p(pos | w, 1) = 0.9 and p(pos | w, 2) = 0.1 for every word.
        for (k, bias) in [[0.9f64.ln(), 0.1f64.ln(), -800.0], [0.1f64.ln(), 0.9f64.ln(), -800.0]]
            .iter()
            .enumerate()
        {
            m.params.bases[k].head.fill(0.0);
            m.params.bases[k].head_bias = bias.to_vec();
        }
        let ws = word_specificity(&m, &lexicon(), 5).unwrap();
        for s in &ws.scores {
            assert!((s.positive[0] - 0.4).abs() < 1e-12);
            assert!((s.positive[1] + 0.4).abs() < 1e-12);
            assert!(s.positive.iter().sum::<f64>().abs() < 1e-9);
            assert!(s.negative.iter().sum::<f64>().abs() < 1e-9);
        }
        let m = tiny_model(Mode::Random, 4);
        let ws = word_specificity(&m, &lexicon(), 2).unwrap();
        for s in &ws.scores {
            assert!(s.positive.iter().sum::<f64>().abs() < 1e-9);
        }
        assert!(ws.per_basis.iter().all(|l| l.positive_words.len() == 2));
        assert!(word_specificity(&tiny_model(Mode::Concat, 1), &lexicon(), 5).is_err());
    }
}
