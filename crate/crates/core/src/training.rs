//! Instance-weighted pretraining of the basis models and joint training of
//! the full mixture with Adam and dev-set model selection.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cnn::{self, BasisParams, SentenceInput};
use crate::corpus::{Document, LabeledCorpus};
use crate::embeddings::{NodeEmbeddingTable, WordEmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::average_f1;
use crate::math::{dot, sigmoid};
use crate::model::{random_attention_embeddings, Mode, ModelShape, SocialAttentionModel};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::seed::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    /// Standard deviation of each component of the region vectors `γ_k`.
    pub sigma: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            sigma: 1.0,
            epochs: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 15,
            adam: AdamConfig::default(),
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.max_epochs == 0 {
            errs.push("max_epochs must be positive".to_string());
        }
        if !(self.adam.learning_rate > 0.0) {
            errs.push("learning_rate must be positive".to_string());
        }
        if !(self.adam.beta1 > 0.0 && self.adam.beta1 < 1.0) {
            errs.push("adam_beta1 must lie in (0, 1)".to_string());
        }
        if !(self.adam.beta2 > 0.0 && self.adam.beta2 < 1.0) {
            errs.push("adam_beta2 must lie in (0, 1)".to_string());
        }
        if !(self.adam.epsilon > 0.0) {
            errs.push("adam_epsilon must be positive".to_string());
        }
        if self.batch_size == 0 {
            errs.push("batch_size must be positive".to_string());
        }
        errs
    }
}

/// `α_{a,k} = sigmoid(γ_k · v_a)` for every author in the table.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceWeights {
    experts: usize,
    weights: BTreeMap<String, Vec<f64>>,
}

impl InstanceWeights {
    pub fn from_regions(table: &NodeEmbeddingTable, regions: &[Vec<f64>]) -> Self {
        let weights = table
            .iter()
            .map(|(a, v)| (a.to_string(), regions.iter().map(|g| sigmoid(dot(g, v))).collect()))
            .collect();
        InstanceWeights {
            experts: regions.len(),
            weights,
        }
    }

    /// Weight for `(author, k)`; authors without an embedding get 0.5.
    pub fn get(&self, author: &str, k: usize) -> f64 {
        self.weights.get(author).map_or(0.5, |w| w[k])
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.weights.iter().map(|(a, w)| (a.as_str(), w.as_slice()))
    }
}

/// Draw one region vector `γ_k ~ N(0, σ²I)` per basis model and derive the
/// instance weights.
pub fn instance_weights<R: Rng + ?Sized>(
    table: &NodeEmbeddingTable,
    experts: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<(InstanceWeights, Vec<Vec<f64>>)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive and finite, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let regions: Vec<Vec<f64>> = (0..experts)
        .map(|_| (0..table.dim()).map(|_| normal.sample(rng)).collect())
        .collect();
    Ok((InstanceWeights::from_regions(table, &regions), regions))
}

/// A document with its word vectors looked up once.
#[derive(Debug, Clone)]
pub struct Example {
    pub input: SentenceInput,
    pub author: String,
    pub gold: usize,
}

pub fn prepare(model: &SocialAttentionModel, docs: &[Document]) -> Vec<Example> {
    docs.iter()
        .map(|d| Example {
            input: model.embed(&d.tokens),
            author: d.author.clone(),
            gold: model.class_index(d.label),
        })
        .collect()
}

fn shuffled(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Train basis `k` alone on `−α_{a,k} log p(y* | x, Z=k)` for `epochs`
/// epochs. With `weights = None` every instance has weight 1. Returns the
/// mean weighted loss of each epoch.
pub fn pretrain_basis(
    k: usize,
    examples: &[Example],
    weights: Option<&InstanceWeights>,
    basis: &mut BasisParams,
    epochs: usize,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let mut rng = derive_rng(cfg.seed, "pretrain", k as u64);
    let mut state = AdamState::new(basis.tensors().iter().map(|t| t.len()));
    let mut grads = basis.zeros_like();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let order = shuffled(examples.len(), &mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            for t in grads.tensors_mut() {
                t.fill(0.0);
            }
            for &i in batch {
                let ex = &examples[i];
                let (probs, cache) = cnn::forward_input(ex.input.clone(), basis)?;
                let mut dlogits: Vec<f64> = probs.clone();
                dlogits[ex.gold] -= 1.0;
                let loss = -probs[ex.gold].max(f64::MIN_POSITIVE).ln();
                if let Some(w) = weights {
                    let alpha = w.get(&ex.author, k);
                    for d in &mut dlogits {
                        *d *= alpha;
                    }
                    total += alpha * loss;
                } else {
                    total += loss;
                }
                cnn::backward_logits(&cache, basis, &dlogits, &mut grads);
            }
            let inv = 1.0 / batch.len() as f64;
            for t in grads.tensors_mut() {
                for g in t.iter_mut() {
                    *g *= inv;
                }
            }
            adam_step(basis.tensors_mut().into(), grads.tensors().into(), &mut state, &cfg.adam);
        }
        history.push(total / examples.len().max(1) as f64);
    }
    Ok(history)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_dev_f1: f64,
}

impl TrainHistory {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tdev_f1\n");
        for r in &self.epochs {
            out.push_str(&format!("{}\t{:.9}\t{:.9}\n", r.epoch, r.train_loss, r.dev_f1));
        }
        out
    }
}

/// Average F1 of the model's predictions on a corpus.
pub fn evaluate(model: &SocialAttentionModel, corpus: &LabeledCorpus) -> Result<f64> {
    let gold = corpus.labels();
    let pred = corpus
        .documents()
        .iter()
        .map(|d| model.predict_label(d))
        .collect::<Result<Vec<_>>>()?;
    Ok(average_f1(&gold, &pred)?.average_f1)
}

/// Minimize `−log p(y* | x, a)` over every trainable parameter (embeddings
/// stay frozen). After each epoch the dev average F1 is computed; the
/// returned model carries the parameters of the best dev epoch (earliest on
/// ties).
pub fn joint_train(
    mut model: SocialAttentionModel,
    train: &LabeledCorpus,
    dev: &LabeledCorpus,
    cfg: &TrainConfig,
) -> Result<(SocialAttentionModel, TrainHistory)> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::InvalidArgument(errs.join("; ")));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::InvalidArgument("development corpus is empty".into()));
    }
    let examples = prepare(&model, train.documents());
    let mut rng = derive_rng(cfg.seed, "train", 0);
    let mut state = AdamState::new(model.params.tensors().iter().map(|t| t.len()));
    let mut grads = model.params.zeros_like();
    let mut records = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(usize, f64, crate::model::ModelParams)> = None;

    for epoch in 1..=cfg.max_epochs {
        let order = shuffled(examples.len(), &mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for t in grads.tensors_mut() {
                t.fill(0.0);
            }
            for &i in batch {
                let ex = &examples[i];
                let fwd = model.forward_input(&ex.input, &ex.author)?;
                total += model.backward(&fwd, ex.gold, 1.0, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(model.params.tensors_mut(), grads.tensors(), &mut state, &cfg.adam);
        }
        let train_loss = total / examples.len() as f64;
        let dev_f1 = evaluate(&model, dev)?;
        log::info!("epoch {epoch}: train loss {train_loss:.6}, dev avg F1 {dev_f1:.6}");
        records.push(EpochRecord {
            epoch,
            train_loss,
            dev_f1,
        });
        if best.as_ref().is_none_or(|(_, f1, _)| dev_f1 > *f1) {
            best = Some((epoch, dev_f1, model.params.clone()));
        }
    }
    let (best_epoch, best_dev_f1, params) = best.expect("at least one epoch ran");
    model.params = params;
    Ok((
        model,
        TrainHistory {
            epochs: records,
            best_epoch,
            best_dev_f1,
        },
    ))
}

/// Mean attention weight per basis model over the given authors.
pub fn average_attention<'a>(
    model: &SocialAttentionModel,
    authors: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; model.experts()];
    let mut n = 0usize;
    for a in authors {
        for (s, w) in sum.iter_mut().zip(model.attention_weights(a)?) {
            *s += w;
        }
        n += 1;
    }
    Ok(sum.into_iter().map(|s| s / n.max(1) as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub shape: ModelShape,
    pub pretrain: PretrainConfig,
    pub train: TrainConfig,
}

/// Result of the pretraining stage.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub model: SocialAttentionModel,
    pub regions: Vec<Vec<f64>>,
    pub weights: InstanceWeights,
}

/// Build the model for `cfg.shape.mode` and, for the attention modes, run
/// instance-weighted pretraining of every basis and point each gate row at
/// its basis's region (`φ_k = γ_k`, `b_k = 0`).
pub fn build_and_pretrain(
    cfg: &FitConfig,
    train: &LabeledCorpus,
    word_table: WordEmbeddingTable,
    author_table: Option<NodeEmbeddingTable>,
) -> Result<Pretrained> {
    let seed = cfg.train.seed;
    let author_table = match cfg.shape.mode {
        Mode::Random => {
            let source = author_table
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("random mode needs the author set and dimension".into()))?;
            let mut rng = derive_rng(seed, "random-embeddings", 0);
            Some(random_attention_embeddings(
                source.keys().iter().map(String::as_str),
                source.dim(),
                &mut rng,
            ))
        }
        _ => author_table,
    };
    let mut model = SocialAttentionModel::new(cfg.shape, word_table, author_table, &mut derive_rng(seed, "init", 0))?;

    let mut regions = Vec::new();
    let mut weights = InstanceWeights {
        experts: model.experts(),
        weights: BTreeMap::new(),
    };
    if matches!(model.mode, Mode::Social | Mode::Random) && cfg.pretrain.epochs > 0 {
        let table = model.author_table.as_ref().expect("attention modes carry authors");
        let mut rng = derive_rng(cfg.pretrain.seed, "pretrain-regions", 0);
        let (w, g) = instance_weights(table, model.experts(), cfg.pretrain.sigma, &mut rng)?;
        let examples = prepare(&model, train.documents());
        let pre_cfg = TrainConfig {
            seed: cfg.pretrain.seed,
            ..cfg.train
        };
        for k in 0..model.experts() {
            let losses = pretrain_basis(k, &examples, Some(&w), &mut model.params.bases[k], cfg.pretrain.epochs, &pre_cfg)?;
            log::info!("pretrained basis {k}: weighted loss {:?}", losses);
        }
        let gate = model.params.gate.as_mut().expect("attention modes carry a gate");
        for (k, region) in g.iter().enumerate() {
            gate.row_mut(k).copy_from_slice(region);
            gate.bias[k] = 0.0;
        }
        regions = g;
        weights = w;
    }
    Ok(Pretrained { model, regions, weights })
}

/// Pretraining (when applicable) followed by joint training.
pub fn fit(
    cfg: &FitConfig,
    train: &LabeledCorpus,
    dev: &LabeledCorpus,
    word_table: WordEmbeddingTable,
    author_table: Option<NodeEmbeddingTable>,
) -> Result<(SocialAttentionModel, TrainHistory)> {
    let pre = build_and_pretrain(cfg, train, word_table, author_table)?;
    let unknown = train
        .authors()
        .into_iter()
        .filter(|a| pre.model.mode.uses_authors() && !pre.model.knows_author(a))
        .count();
    if unknown > 0 {
        log::warn!("{unknown} training author(s) have no embedding; they get uniform attention or a zero vector");
    }
    joint_train(pre.model, train, dev, &cfg.train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::embeddings::EmbeddingTable;
    use crate::synth::{generate, SynthConfig};

    fn tables(rng: &mut impl Rng) -> (WordEmbeddingTable, NodeEmbeddingTable) {
        let mut words = EmbeddingTable::new(4);
        for w in ["good", "bad", "meh", "the", "a"] {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            words.insert(w, &v).unwrap();
        }
        let mut authors = EmbeddingTable::new(3);
        for a in ["x", "y", "z"] {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            authors.insert(a, &v).unwrap();
        }
        (words, authors)
    }

    fn corpus() -> LabeledCorpus {
        let docs = [
            ("x", Label::Positive, "good the"),
            ("y", Label::Negative, "bad a"),
            ("z", Label::Neutral, "meh the a"),
            ("x", Label::Positive, "a good"),
            ("y", Label::Negative, "the bad bad"),
            ("z", Label::Neutral, "the meh"),
        ];
        LabeledCorpus::new(
            docs.iter()
                .enumerate()
                .map(|(i, (a, l, t))| Document::new(format!("d{i}"), *a, *l, t))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn instance_weight_closed_forms() {
        let mut table = EmbeddingTable::new(2);
        table.insert("zero", &[0.0, 0.0]).unwrap();
        table.insert("two", &[2.0, 0.0]).unwrap();
        table.insert("twin", &[2.0, 0.0]).unwrap();
        let w = InstanceWeights::from_regions(&table, &[vec![1.0, 5.0], vec![-0.3, 0.7]]);
        assert_eq!(w.get("zero", 0), 0.5);
        assert!((w.get("two", 0) - 0.8807970779778823).abs() < 1e-12);
        assert_eq!(w.get("two", 1), w.get("twin", 1));
        assert_eq!(w.get("stranger", 1), 0.5);
        let (w, g) = instance_weights(&table, 4, 1.0, &mut derive_rng(0, "g", 0)).unwrap();
        assert_eq!((g.len(), g[0].len(), w.experts()), (4, 2, 4));
        assert!(w.iter().all(|(_, ws)| ws.iter().all(|&a| a > 0.0 && a < 1.0)));
        assert!(instance_weights(&table, 2, 0.0, &mut derive_rng(0, "g", 0)).is_err());
    }

    #[test]
    fn unit_weights_match_unweighted_training() {
        let mut rng = derive_rng(3, "t", 0);
        let (words, authors) = tables(&mut rng);
        let shape = ModelShape { mode: Mode::Social, experts: 2, filters: 3 };
        let model = SocialAttentionModel::new(shape, words, Some(authors.clone()), &mut rng).unwrap();
        let examples = prepare(&model, corpus().documents());
        let ones = InstanceWeights {
            experts: 2,
            weights: authors.keys().iter().map(|a| (a.clone(), vec![1.0, 1.0])).collect(),
        };
        let cfg = TrainConfig { batch_size: 2, ..TrainConfig::default() };
        let mut a = model.params.bases[1].clone();
        let mut b = a.clone();
        let la = pretrain_basis(1, &examples, Some(&ones), &mut a, 3, &cfg).unwrap();
        let lb = pretrain_basis(1, &examples, None, &mut b, 3, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn vanishing_weights_barely_move_parameters() {
        let mut rng = derive_rng(4, "t", 0);
        let (words, authors) = tables(&mut rng);
        let shape = ModelShape { mode: Mode::Social, experts: 1, filters: 3 };
        let model = SocialAttentionModel::new(shape, words, Some(authors.clone()), &mut rng).unwrap();
        let examples = prepare(&model, corpus().documents());
        let tiny = InstanceWeights {
            experts: 1,
            weights: authors.keys().iter().map(|a| (a.clone(), vec![1e-9])).collect(),
        };
        let cfg = TrainConfig { batch_size: 6, ..TrainConfig::default() };
        let distance = |weights: Option<&InstanceWeights>| {
            let mut p = model.params.bases[0].clone();
            pretrain_basis(0, &examples, weights, &mut p, 1, &cfg).unwrap();
            p.tensors()
                .iter()
                .zip(model.params.bases[0].tensors())
                .flat_map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b).powi(2)))
                .sum::<f64>()
                .sqrt()
        };
        let small = distance(Some(&tiny));
        let full = distance(None);
        assert!(small < 0.1 * full, "{small} vs {full}");
    }

    #[test]
    fn weighted_gradient_scales_with_alpha() {
        let mut rng = derive_rng(5, "t", 0);
        let (words, _) = tables(&mut rng);
        let p = BasisParams::random(3, 4, 3, &mut rng);
        let x = cnn::embed_tokens(&["good", "the", "bad"], &words);
        let alpha = 0.37;
        let weighted_loss = |p: &BasisParams| {
            let (probs, _) = cnn::forward_input(x.clone(), p).unwrap();
            -alpha * probs[2].ln()
        };
        let (probs, cache) = cnn::forward_input(x.clone(), &p).unwrap();
        let mut d = probs.clone();
        d[2] -= 1.0;
        let mut unweighted = p.zeros_like();
        cnn::backward_logits(&cache, &p, &d, &mut unweighted);
        let h = 1e-6;
        for ti in 0..5 {
            for i in 0..p.tensors()[ti].len() {
                let mut up = p.clone();
                up.tensors_mut()[ti][i] += h;
                let mut down = p.clone();
                down.tensors_mut()[ti][i] -= h;
                let numeric = (weighted_loss(&up) - weighted_loss(&down)) / (2.0 * h);
                let expected = alpha * unweighted.tensors()[ti][i];
                assert!((numeric - expected).abs() < 1e-7 * (1.0 + expected.abs()), "{numeric} vs {expected}");
            }
        }
    }

    #[test]
    fn validation_lists_every_problem() {
        let cfg = TrainConfig {
            max_epochs: 0,
            batch_size: 0,
            adam: AdamConfig { beta1: 1.0, ..AdamConfig::default() },
            ..TrainConfig::default()
        };
        assert_eq!(cfg.validate().len(), 3);
        assert!(TrainConfig::default().validate().is_empty());
    }

    #[test]
    fn joint_training_contract() {
        let mut rng = derive_rng(6, "t", 0);
        let (words, authors) = tables(&mut rng);
        let shape = ModelShape { mode: Mode::Social, experts: 2, filters: 3 };
        let model = SocialAttentionModel::new(shape, words, Some(authors), &mut rng).unwrap();
        let cfg = TrainConfig { max_epochs: 6, batch_size: 2, ..TrainConfig::default() };
        let empty = LabeledCorpus::new(vec![]).unwrap();
        assert!(joint_train(model.clone(), &empty, &corpus(), &cfg).is_err());

        let (trained, history) = joint_train(model, &corpus(), &corpus(), &cfg).unwrap();
        assert_eq!(history.epochs.len(), 6);
        let best = &history.epochs[history.best_epoch - 1];
        assert_eq!(best.dev_f1, history.best_dev_f1);
        assert!(history.epochs[..history.best_epoch - 1].iter().all(|r| r.dev_f1 < best.dev_f1));
        assert!(history.epochs.iter().all(|r| r.dev_f1 <= best.dev_f1));
        assert_eq!(evaluate(&trained, &corpus()).unwrap(), history.best_dev_f1);
        assert_eq!(history.to_tsv().lines().count(), 7);
    }

    #[test]
    fn fit_is_deterministic_and_gate_starts_at_regions() {
        let mut rng = derive_rng(7, "t", 0);
        let (words, authors) = tables(&mut rng);
        let cfg = FitConfig {
            shape: ModelShape { mode: Mode::Social, experts: 2, filters: 3 },
            pretrain: PretrainConfig { epochs: 2, seed: 1, ..PretrainConfig::default() },
            train: TrainConfig { max_epochs: 2, ..TrainConfig::default() },
        };
        let pre = build_and_pretrain(&cfg, &corpus(), words.clone(), Some(authors.clone())).unwrap();
        let gate = pre.model.params.gate.as_ref().unwrap();
        for (k, region) in pre.regions.iter().enumerate() {
            assert_eq!(gate.row(k), region.as_slice());
            assert_eq!(gate.bias[k], 0.0);
        }
        let a = fit(&cfg, &corpus(), &corpus(), words.clone(), Some(authors.clone())).unwrap();
        let b = fit(&cfg, &corpus(), &corpus(), words, Some(authors)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn random_mode_replaces_author_vectors() {
        let mut rng = derive_rng(8, "t", 0);
        let (words, authors) = tables(&mut rng);
        let cfg = FitConfig {
            shape: ModelShape { mode: Mode::Random, experts: 2, filters: 3 },
            pretrain: PretrainConfig::default(),
            train: TrainConfig::default(),
        };
        let pre = build_and_pretrain(&cfg, &corpus(), words, Some(authors.clone())).unwrap();
        let table = pre.model.author_table.unwrap();
        assert_eq!(table.keys(), authors.keys());
        assert_ne!(table, authors);
        assert!(table.iter().all(|(_, v)| v.iter().all(|x| x.abs() < 0.25)));
    }

    #[test]
    fn synthetic_benchmark_sanity() {
        let data = generate(&SynthConfig { nodes_per_community: 40, intra_prob: 0.2, inter_prob: 0.01, seed: 2, ..SynthConfig::default() }).unwrap();
        let line = crate::line::LineConfig { dimension: 8, epochs: 20, ..Default::default() };
        let authors = crate::line::train_line_embeddings(&data.graph, &line, &mut derive_rng(2, "line", 0)).unwrap();
        let cfg = FitConfig {
            shape: ModelShape { mode: Mode::Social, experts: 3, filters: 10 },
            pretrain: PretrainConfig { seed: 2, ..PretrainConfig::default() },
            train: TrainConfig { max_epochs: 3, seed: 2, ..TrainConfig::default() },
        };
        let pre = build_and_pretrain(&cfg, &data.train, data.word_table.clone(), Some(authors)).unwrap();
        // Dead-expert guard: pretraining leaves at least two bases with real attention mass.
        let att = average_attention(&pre.model, data.train.authors()).unwrap();
        assert!(att.iter().filter(|&&w| w > 1.0 / 12.0).count() >= 2, "{att:?}");
        // Loss on a fixed batch goes down over the first epochs at the default learning rate.
        let batch = prepare(&pre.model, &data.train.documents()[..32]);
        let fixed_loss = |m: &SocialAttentionModel| {
            batch.iter().map(|ex| m.loss(&ex.input, &ex.author, ex.gold).unwrap()).sum::<f64>()
        };
        let mut model = pre.model;
        let examples = prepare(&model, data.train.documents());
        let mut state = AdamState::new(model.params.tensors().iter().map(|t| t.len()));
        let mut rng = derive_rng(2, "train", 0);
        let mut losses = vec![fixed_loss(&model)];
        for _ in 0..3 {
            for chunk in shuffled(examples.len(), &mut rng).chunks(32) {
                let mut grads = model.params.zeros_like();
                for &i in chunk {
                    let fwd = model.forward_input(&examples[i].input, &examples[i].author).unwrap();
                    model.backward(&fwd, examples[i].gold, 1.0, &mut grads);
                }
                grads.scale(1.0 / chunk.len() as f64);
                adam_step(model.params.tensors_mut(), grads.tensors(), &mut state, &cfg.train.adam);
            }
            losses.push(fixed_loss(&model));
        }
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }
}
