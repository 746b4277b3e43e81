//! Mixture of basis CNNs gated by attention over author embeddings, and the
//! baselines that share its structure.
//!
//! `p(y | x, a) = Σ_k Pr(Z_a = k | a, G) · p(y | x, Z_a = k)` where the gate
//! is a softmax over `φ_k·v_a + b_k`. The `mode` flag swaps the gate input
//! (random author vectors, summed word vectors) or replaces the mixture with
//! a single CNN, optionally concatenated with the author vector.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cnn::{self, BasisCache, BasisParams, SentenceInput};
use crate::corpus::{Document, Label};
use crate::embeddings::{NodeEmbeddingTable, WordEmbeddingTable};
use crate::error::{Error, Result};
use crate::math::{argmax, dot, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Attention over LINE author embeddings.
    Social,
    /// Attention over frozen random author vectors.
    Random,
    /// Gate driven by the sum of the document's word vectors.
    Moe,
    /// One CNN whose pooled features are concatenated with the author vector.
    Concat,
    /// One plain CNN.
    Single,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Social, Mode::Random, Mode::Moe, Mode::Concat, Mode::Single];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Social => "social",
            Mode::Random => "random",
            Mode::Moe => "moe",
            Mode::Concat => "concat",
            Mode::Single => "single",
        }
    }

    /// Whether the model mixes several basis CNNs through a gate.
    pub fn is_mixture(self) -> bool {
        matches!(self, Mode::Social | Mode::Random | Mode::Moe)
    }

    /// Whether the model consumes an author embedding table.
    pub fn uses_authors(self) -> bool {
        matches!(self, Mode::Social | Mode::Random | Mode::Concat)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode `{s}` (expected social, random, moe, concat or single)")))
    }
}

/// Linear-softmax gate: `K × input_dim` weights plus `K` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub experts: usize,
    pub input_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl GateParams {
    pub fn zeros(experts: usize, input_dim: usize) -> Self {
        GateParams {
            experts,
            input_dim,
            weights: vec![0.0; experts * input_dim],
            bias: vec![0.0; experts],
        }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.input_dim..(k + 1) * self.input_dim]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.weights[k * self.input_dim..(k + 1) * self.input_dim]
    }

    pub fn scores(&self, input: &[f64]) -> Vec<f64> {
        (0..self.experts).map(|k| dot(self.row(k), input) + self.bias[k]).collect()
    }

    pub fn weights_for(&self, input: &[f64]) -> Vec<f64> {
        softmax(&self.scores(input))
    }
}

/// Softmax head over `[s ; v_a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatHead {
    pub classes: usize,
    pub input_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConcatHead {
    pub fn zeros(classes: usize, input_dim: usize) -> Self {
        ConcatHead {
            classes,
            input_dim,
            weights: vec![0.0; classes * input_dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.weights[t * self.input_dim..(t + 1) * self.input_dim]
    }

    pub fn probs(&self, input: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.classes).map(|t| dot(self.row(t), input) + self.bias[t]).collect();
        softmax(&logits)
    }
}

/// Everything the optimizer updates. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub bases: Vec<BasisParams>,
    pub gate: Option<GateParams>,
    pub concat: Option<ConcatHead>,
}

impl ModelParams {
    pub fn zeros_like(&self) -> Self {
        ModelParams {
            bases: self.bases.iter().map(BasisParams::zeros_like).collect(),
            gate: self.gate.as_ref().map(|g| GateParams::zeros(g.experts, g.input_dim)),
            concat: self.concat.as_ref().map(|c| ConcatHead::zeros(c.classes, c.input_dim)),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.bases.iter().flat_map(|b| b.tensors()).collect();
        if let Some(g) = &self.gate {
            out.push(&g.weights);
            out.push(&g.bias);
        }
        if let Some(c) = &self.concat {
            out.push(&c.weights);
            out.push(&c.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.bases.iter_mut().flat_map(|b| b.tensors_mut()).collect();
        if let Some(g) = &mut self.gate {
            out.push(&mut g.weights);
            out.push(&mut g.bias);
        }
        if let Some(c) = &mut self.concat {
            out.push(&mut c.weights);
            out.push(&mut c.bias);
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub mode: Mode,
    /// Number of basis models; forced to 1 for `single` and `concat`.
    pub experts: usize,
    pub filters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialAttentionModel {
    pub mode: Mode,
    pub classes: Vec<Label>,
    pub params: ModelParams,
    pub author_table: Option<NodeEmbeddingTable>,
    pub word_table: WordEmbeddingTable,
}

/// Forward-pass intermediates for one document.
#[derive(Debug, Clone)]
pub struct Forward {
    pub probs: Vec<f64>,
    /// Gate weights; `[1.0]` for the single-CNN modes.
    pub gate: Vec<f64>,
    pub gate_input: Option<Vec<f64>>,
    pub basis_probs: Vec<Vec<f64>>,
    pub caches: Vec<BasisCache>,
    pub concat_input: Option<Vec<f64>>,
}

impl SocialAttentionModel {
    /// Build a freshly initialized model. Basis weights and gate weights are
    /// uniform in `(-0.05, 0.05)` with zero biases.
    pub fn new<R: Rng + ?Sized>(
        shape: ModelShape,
        word_table: WordEmbeddingTable,
        author_table: Option<NodeEmbeddingTable>,
        rng: &mut R,
    ) -> Result<Self> {
        if shape.filters == 0 {
            return Err(Error::InvalidArgument("number of filters must be positive".into()));
        }
        if shape.experts == 0 {
            return Err(Error::InvalidArgument("number of basis models must be positive".into()));
        }
        if shape.mode.uses_authors() && author_table.is_none() {
            return Err(Error::InvalidArgument(format!("mode `{}` needs author embeddings", shape.mode)));
        }
        let author_table = if shape.mode.uses_authors() { author_table } else { None };
        let classes = Label::ALL.to_vec();
        let t = classes.len();
        let experts = if shape.mode.is_mixture() { shape.experts } else { 1 };
        let bases: Vec<BasisParams> = (0..experts)
            .map(|_| BasisParams::random(shape.filters, word_table.dim(), t, rng))
            .collect();
        let gate_dim = match shape.mode {
            Mode::Social | Mode::Random => author_table.as_ref().map(|a| a.dim()),
            Mode::Moe => Some(word_table.dim()),
            Mode::Concat | Mode::Single => None,
        };
        let gate = gate_dim.map(|d| {
            let mut g = GateParams::zeros(experts, d);
            for w in &mut g.weights {
                *w = rng.random_range(-0.05..0.05);
            }
            g
        });
        let concat = (shape.mode == Mode::Concat).then(|| {
            let dv = author_table.as_ref().map_or(0, |a| a.dim());
            let mut h = ConcatHead::zeros(t, shape.filters + dv);
            for w in &mut h.weights {
                *w = rng.random_range(-0.05..0.05);
            }
            h
        });
        Ok(SocialAttentionModel {
            mode: shape.mode,
            classes,
            params: ModelParams { bases, gate, concat },
            author_table,
            word_table,
        })
    }

    pub fn experts(&self) -> usize {
        self.params.bases.len()
    }

    pub fn filters(&self) -> usize {
        self.params.bases[0].filters
    }

    pub fn author_vector(&self, author: &str) -> Option<&[f64]> {
        self.author_table.as_ref().and_then(|t| t.get(author))
    }

    pub fn knows_author(&self, author: &str) -> bool {
        self.author_vector(author).is_some()
    }

    /// `Pr(Z_a = k | a, G)`; uniform for authors without an embedding.
    pub fn attention_weights(&self, author: &str) -> Result<Vec<f64>> {
        if !matches!(self.mode, Mode::Social | Mode::Random) {
            return Err(Error::InvalidArgument(format!(
                "attention weights are undefined in mode `{}`",
                self.mode
            )));
        }
        let gate = self.params.gate.as_ref().expect("social modes carry a gate");
        Ok(match self.author_vector(author) {
            Some(v) => gate.weights_for(v),
            None => vec![1.0 / gate.experts as f64; gate.experts],
        })
    }

    /// Document-only gate of the mixture-of-experts baseline.
    pub fn moe_gate<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>> {
        if self.mode != Mode::Moe {
            return Err(Error::InvalidArgument(format!("moe gate is undefined in mode `{}`", self.mode)));
        }
        let gate = self.params.gate.as_ref().expect("moe mode carries a gate");
        Ok(gate.weights_for(&cnn::sum_embeddings(tokens, &self.word_table)))
    }

    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> SentenceInput {
        cnn::embed_tokens(tokens, &self.word_table)
    }

    /// Full forward pass over pre-embedded tokens.
    pub fn forward_input(&self, x: &SentenceInput, author: &str) -> Result<Forward> {
        match self.mode {
            Mode::Concat => self.forward_concat(x, author),
            Mode::Single => {
                let (probs, cache) = cnn::forward_input(x.clone(), &self.params.bases[0])?;
                Ok(Forward {
                    probs: probs.clone(),
                    gate: vec![1.0],
                    gate_input: None,
                    basis_probs: vec![probs],
                    caches: vec![cache],
                    concat_input: None,
                })
            }
            Mode::Social | Mode::Random | Mode::Moe => {
                let gate = self.params.gate.as_ref().expect("mixture modes carry a gate");
                let gate_input = match self.mode {
                    Mode::Moe => Some(column_sums(x)),
                    _ => self.author_vector(author).map(<[f64]>::to_vec),
                };
                let weights = match &gate_input {
                    Some(input) => gate.weights_for(input),
                    None => vec![1.0 / gate.experts as f64; gate.experts],
                };
                let mut caches = Vec::with_capacity(self.experts());
                let mut basis_probs = Vec::with_capacity(self.experts());
                let mut probs = vec![0.0; self.classes.len()];
                for (basis, &w) in self.params.bases.iter().zip(&weights) {
                    let (p, cache) = cnn::forward_input(x.clone(), basis)?;
                    for (acc, pk) in probs.iter_mut().zip(&p) {
                        *acc += w * pk;
                    }
                    basis_probs.push(p);
                    caches.push(cache);
                }
                Ok(Forward {
                    probs,
                    gate: weights,
                    gate_input,
                    basis_probs,
                    caches,
                    concat_input: None,
                })
            }
        }
    }

    fn forward_concat(&self, x: &SentenceInput, author: &str) -> Result<Forward> {
        let head = self.params.concat.as_ref().expect("concat mode carries a head");
        let cache = cnn::encode(x.clone(), &self.params.bases[0])?;
        let dv = head.input_dim - cache.pooled.len();
        let mut input = cache.pooled.clone();
        match self.author_vector(author) {
            Some(v) => input.extend_from_slice(v),
            None => input.extend(std::iter::repeat_n(0.0, dv)),
        }
        let probs = head.probs(&input);
        Ok(Forward {
            probs: probs.clone(),
            gate: vec![1.0],
            gate_input: None,
            basis_probs: vec![probs],
            caches: vec![cache],
            concat_input: Some(input),
        })
    }

    /// `p(y | x, a)` over the model's class list.
    pub fn mixture_predict<S: AsRef<str>>(&self, tokens: &[S], author: &str) -> Result<Vec<f64>> {
        Ok(self.forward_input(&self.embed(tokens), author)?.probs)
    }

    pub fn predict_proba(&self, doc: &Document) -> Result<Vec<f64>> {
        self.mixture_predict(&doc.tokens, &doc.author)
    }

    /// Most probable class; ties go to the earliest class in the list.
    pub fn predict_label(&self, doc: &Document) -> Result<Label> {
        Ok(self.classes[argmax(&self.predict_proba(doc)?)])
    }

    pub fn class_index(&self, label: Label) -> usize {
        self.classes
            .iter()
            .position(|&c| c == label)
            .expect("model class list covers every label")
    }

    /// Accumulate `weight × ∇(−log p(gold | x, a))` into `grads` and return
    /// the unweighted loss.
    pub fn backward(&self, fwd: &Forward, gold: usize, weight: f64, grads: &mut ModelParams) -> f64 {
        let p_gold = fwd.probs[gold].max(f64::MIN_POSITIVE);
        let loss = -p_gold.ln();
        if self.mode == Mode::Concat {
            let head = self.params.concat.as_ref().expect("concat head");
            let ghead = grads.concat.as_mut().expect("concat grads");
            let input = fwd.concat_input.as_ref().expect("concat input");
            let m = self.params.bases[0].filters;
            let mut grad_pooled = vec![0.0; m];
            for t in 0..head.classes {
                let dz = weight * (fwd.probs[t] - if t == gold { 1.0 } else { 0.0 });
                ghead.bias[t] += dz;
                let row = &mut ghead.weights[t * head.input_dim..(t + 1) * head.input_dim];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += dz * x;
                }
                for (gp, w) in grad_pooled.iter_mut().zip(&head.row(t)[..m]) {
                    *gp += dz * w;
                }
            }
            cnn::backward_pooled(&fwd.caches[0], &self.params.bases[0], &grad_pooled, &mut grads.bases[0]);
            return loss;
        }

        // Posterior responsibility of each basis for the gold label.
        let resp: Vec<f64> = fwd
            .gate
            .iter()
            .zip(&fwd.basis_probs)
            .map(|(w, pk)| w * pk[gold] / p_gold)
            .collect();
        for (k, basis) in self.params.bases.iter().enumerate() {
            let pk = &fwd.basis_probs[k];
            let dlogits: Vec<f64> = pk
                .iter()
                .enumerate()
                .map(|(t, &p)| weight * resp[k] * (p - if t == gold { 1.0 } else { 0.0 }))
                .collect();
            cnn::backward_logits(&fwd.caches[k], basis, &dlogits, &mut grads.bases[k]);
        }
        if let (Some(ggate), Some(input)) = (grads.gate.as_mut(), fwd.gate_input.as_ref()) {
            for k in 0..ggate.experts {
                let ds = weight * (fwd.gate[k] - resp[k]);
                ggate.bias[k] += ds;
                for (g, x) in ggate.row_mut(k).iter_mut().zip(input) {
                    *g += ds * x;
                }
            }
        }
        loss
    }

    /// Loss `−log p(gold | x, a)` for one document.
    pub fn loss(&self, x: &SentenceInput, author: &str, gold: usize) -> Result<f64> {
        let fwd = self.forward_input(x, author)?;
        Ok(-fwd.probs[gold].max(f64::MIN_POSITIVE).ln())
    }
}

fn column_sums(x: &SentenceInput) -> Vec<f64> {
    let mut sum = vec![0.0; x.cols];
    for i in 0..x.rows {
        for (s, v) in sum.iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    sum
}

/// One `U(-0.25, 0.25)^dim` vector per author, in the iteration order given.
pub fn random_attention_embeddings<'a, I, R>(authors: I, dim: usize, rng: &mut R) -> NodeEmbeddingTable
where
    I: IntoIterator<Item = &'a str>,
    R: Rng + ?Sized,
{
    let mut table = NodeEmbeddingTable::new(dim);
    let mut v = vec![0.0; dim];
    for a in authors {
        if table.contains(a) {
            continue;
        }
        for x in v.iter_mut() {
            *x = rng.random_range(-0.25..0.25);
        }
        table.insert(a, &v).expect("dimension matches");
    }
    table
}
