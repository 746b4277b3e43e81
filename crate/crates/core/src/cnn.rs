//! Bigram convolutional basis classifier.
//!
//! `c_i = tanh(W_L h_i + W_R h_{i+1} + b)`, `s = max_i c_i` (per filter),
//! then a softmax over `β_t·s + β_t0`. Gradients are computed by hand;
//! word vectors are inputs, never parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::WordEmbeddingTable;
use crate::error::{Error, Result};
use crate::math::{dot, softmax, softmax_backward, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub filters: usize,
    pub word_dim: usize,
    pub classes: usize,
    /// `filters × word_dim`
    pub w_left: Vec<f64>,
    /// `filters × word_dim`
    pub w_right: Vec<f64>,
    pub bias: Vec<f64>,
    /// `classes × filters`
    pub head: Vec<f64>,
    pub head_bias: Vec<f64>,
}

impl BasisParams {
    pub fn zeros(filters: usize, word_dim: usize, classes: usize) -> Self {
        BasisParams {
            filters,
            word_dim,
            classes,
            w_left: vec![0.0; filters * word_dim],
            w_right: vec![0.0; filters * word_dim],
            bias: vec![0.0; filters],
            head: vec![0.0; classes * filters],
            head_bias: vec![0.0; classes],
        }
    }

    /// Weights uniform in `(-0.05, 0.05)`, biases zero.
    pub fn random<R: Rng + ?Sized>(filters: usize, word_dim: usize, classes: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(filters, word_dim, classes);
        for w in p.w_left.iter_mut().chain(p.w_right.iter_mut()).chain(p.head.iter_mut()) {
            *w = rng.random_range(-0.05..0.05);
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.filters, self.word_dim, self.classes)
    }

    pub fn tensors(&self) -> [&[f64]; 5] {
        [&self.w_left, &self.w_right, &self.bias, &self.head, &self.head_bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            &mut self.w_left,
            &mut self.w_right,
            &mut self.bias,
            &mut self.head,
            &mut self.head_bias,
        ]
    }

    pub fn head_row(&self, t: usize) -> &[f64] {
        &self.head[t * self.filters..(t + 1) * self.filters]
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let ok = self.w_left.len() == self.filters * self.word_dim
            && self.w_right.len() == self.filters * self.word_dim
            && self.bias.len() == self.filters
            && self.head.len() == self.classes * self.filters
            && self.head_bias.len() == self.classes;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("basis parameter shapes are inconsistent".into()))
        }
    }
}

/// Token vectors `h_1..h_n`, one row per token.
pub type SentenceInput = Matrix;

/// Look up in-vocabulary tokens (skipping OOV) and zero-pad to two rows.
pub fn embed_tokens<S: AsRef<str>>(tokens: &[S], table: &WordEmbeddingTable) -> SentenceInput {
    let dim = table.dim();
    let mut data = Vec::with_capacity(tokens.len().max(2) * dim);
    let mut rows = 0;
    for tok in tokens {
        if let Some(v) = table.get(tok.as_ref()) {
            data.extend_from_slice(v);
            rows += 1;
        }
    }
    while rows < 2 {
        data.extend(std::iter::repeat_n(0.0, dim));
        rows += 1;
    }
    Matrix { rows, cols: dim, data }
}

/// Sum of in-vocabulary token vectors; zero if none are known.
pub fn sum_embeddings<S: AsRef<str>>(tokens: &[S], table: &WordEmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim()];
    for tok in tokens {
        if let Some(v) = table.get(tok.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    sum
}

/// Bigram feature maps, `(n-1) × filters`.
pub fn conv_forward(x: &SentenceInput, p: &BasisParams) -> Result<Matrix> {
    if x.rows < 2 {
        return Err(Error::InvalidArgument(format!(
            "bigram convolution needs at least 2 rows, got {}",
            x.rows
        )));
    }
    if x.cols != p.word_dim {
        return Err(Error::InvalidArgument(format!(
            "input width {} does not match word dimension {}",
            x.cols, p.word_dim
        )));
    }
    let m = p.filters;
    let d = p.word_dim;
    let mut out = Matrix::zeros(x.rows - 1, m);
    for i in 0..x.rows - 1 {
        let (hl, hr) = (x.row(i), x.row(i + 1));
        let row = out.row_mut(i);
        for f in 0..m {
            let z = dot(&p.w_left[f * d..(f + 1) * d], hl) + dot(&p.w_right[f * d..(f + 1) * d], hr) + p.bias[f];
            row[f] = z.tanh();
        }
    }
    Ok(out)
}

/// Column-wise max over rows, with the winning row per column (lowest index
/// on ties).
pub fn max_pool(c: &Matrix) -> Result<(Vec<f64>, Vec<usize>)> {
    if c.rows == 0 {
        return Err(Error::InvalidArgument("max pooling over zero rows".into()));
    }
    let mut values = c.row(0).to_vec();
    let mut rows = vec![0; c.cols];
    for i in 1..c.rows {
        for (f, &v) in c.row(i).iter().enumerate() {
            if v > values[f] {
                values[f] = v;
                rows[f] = i;
            }
        }
    }
    Ok((values, rows))
}

pub fn class_logits(s: &[f64], p: &BasisParams) -> Vec<f64> {
    (0..p.classes).map(|t| dot(p.head_row(t), s) + p.head_bias[t]).collect()
}

pub fn class_probs(s: &[f64], p: &BasisParams) -> Vec<f64> {
    softmax(&class_logits(s, p))
}

/// Forward intermediates needed by [`basis_backward`].
#[derive(Debug, Clone)]
pub struct BasisCache {
    pub input: SentenceInput,
    pub features: Matrix,
    pub pooled: Vec<f64>,
    pub argmax: Vec<usize>,
    pub probs: Vec<f64>,
}

/// Sentence representation `s` and its cache (no softmax head).
pub fn encode(x: SentenceInput, p: &BasisParams) -> Result<BasisCache> {
    p.check_shapes()?;
    let features = conv_forward(&x, p)?;
    let (pooled, argmax) = max_pool(&features)?;
    Ok(BasisCache {
        input: x,
        features,
        pooled,
        argmax,
        probs: Vec::new(),
    })
}

pub fn forward_input(x: SentenceInput, p: &BasisParams) -> Result<(Vec<f64>, BasisCache)> {
    let mut cache = encode(x, p)?;
    cache.probs = class_probs(&cache.pooled, p);
    Ok((cache.probs.clone(), cache))
}

pub fn basis_forward<S: AsRef<str>>(
    tokens: &[S],
    table: &WordEmbeddingTable,
    p: &BasisParams,
) -> Result<(Vec<f64>, BasisCache)> {
    forward_input(embed_tokens(tokens, table), p)
}

/// Accumulate gradients for an upstream gradient on the pooled vector `s`.
pub fn backward_pooled(cache: &BasisCache, p: &BasisParams, grad_pooled: &[f64], grads: &mut BasisParams) {
    let d = p.word_dim;
    for (f, &g) in grad_pooled.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let i = cache.argmax[f];
        let c = cache.features.row(i)[f];
        let dz = g * (1.0 - c * c);
        grads.bias[f] += dz;
        let (hl, hr) = (cache.input.row(i), cache.input.row(i + 1));
        for k in 0..d {
            grads.w_left[f * d + k] += dz * hl[k];
            grads.w_right[f * d + k] += dz * hr[k];
        }
    }
}

/// Accumulate gradients for an upstream gradient on the class logits.
pub fn backward_logits(cache: &BasisCache, p: &BasisParams, grad_logits: &[f64], grads: &mut BasisParams) {
    let m = p.filters;
    let mut grad_pooled = vec![0.0; m];
    for (t, &g) in grad_logits.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grads.head_bias[t] += g;
        let row = &mut grads.head[t * m..(t + 1) * m];
        for (w, s) in row.iter_mut().zip(&cache.pooled) {
            *w += g * s;
        }
        for (gp, w) in grad_pooled.iter_mut().zip(p.head_row(t)) {
            *gp += g * w;
        }
    }
    backward_pooled(cache, p, &grad_pooled, grads);
}

/// Parameter gradients for an upstream gradient on the class probabilities.
pub fn basis_backward(cache: &BasisCache, p: &BasisParams, grad_probs: &[f64]) -> BasisParams {
    let mut grads = p.zeros_like();
    let grad_logits = softmax_backward(&cache.probs, grad_probs);
    backward_logits(cache, p, &grad_logits, &mut grads);
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingTable;
    use crate::seed::derive_rng;

    fn table(dim: usize, words: &[&str], seed: u64) -> EmbeddingTable {
        let mut rng = derive_rng(seed, "words", 0);
        let mut t = EmbeddingTable::new(dim);
        for w in words {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            t.insert(*w, &v).unwrap();
        }
        t
    }

    #[test]
    fn embedding_and_padding() {
        let t = table(3, &["a", "b", "c"], 0);
        let x = embed_tokens(&["a", "b", "c"], &t);
        assert_eq!((x.rows, x.cols), (3, 3));
        let x = embed_tokens(&["zz", "yy"], &t);
        assert_eq!(x.rows, 2);
        assert!(x.data.iter().all(|&v| v == 0.0));
        let x = embed_tokens(&["b", "oov"], &t);
        assert_eq!(x.row(0), t.get("b").unwrap());
        assert_eq!(x.row(1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn conv_closed_forms() {
        let mut p = BasisParams::zeros(4, 3, 3);
        let x = Matrix {
            rows: 3,
            cols: 3,
            data: vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0, 2.0, 2.0, 2.0],
        };
        let c = conv_forward(&x, &p).unwrap();
        assert!(c.data.iter().all(|&v| v == 0.0));
        p.bias = vec![0.5; 4];
        let c = conv_forward(&x, &p).unwrap();
        assert_eq!((c.rows, c.cols), (2, 4));
        assert!(c.data.iter().all(|&v| (v - 0.462_117_157_260_009_8).abs() < 1e-12));
        let two = Matrix::zeros(2, 3);
        assert_eq!(conv_forward(&two, &p).unwrap().rows, 1);
        assert!(conv_forward(&Matrix::zeros(1, 3), &p).is_err());
    }

    #[test]
    fn pooling() {
        let one = Matrix { rows: 1, cols: 2, data: vec![3.0, -4.0] };
        assert_eq!(max_pool(&one).unwrap().0, vec![3.0, -4.0]);
        let two = Matrix { rows: 2, cols: 2, data: vec![1.0, -1.0, 0.0, 2.0] };
        let (v, idx) = max_pool(&two).unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        assert_eq!(idx, vec![0, 1]);
        let same = Matrix { rows: 3, cols: 2, data: vec![0.5, 0.1, 0.5, 0.1, 0.5, 0.1] };
        let (v, idx) = max_pool(&same).unwrap();
        assert_eq!(v, vec![0.5, 0.1]);
        assert_eq!(idx, vec![0, 0]);
        assert!(max_pool(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn class_probability_examples() {
        let p = BasisParams::zeros(3, 2, 3);
        let probs = class_probs(&[0.1, 0.2, 0.3], &p);
        assert!(probs.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        let mut p = BasisParams::zeros(1, 1, 2);
        p.head_bias = vec![1.0, 0.0];
        let probs = class_probs(&[0.0], &p);
        assert!((probs[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((probs[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
        p.head_bias = vec![101.0, 100.0];
        let shifted = class_probs(&[0.0], &p);
        assert!((shifted[0] - probs[0]).abs() < 1e-12);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_grads() {
        let mut rng = derive_rng(1, "t", 0);
        let p = BasisParams::random(4, 5, 3, &mut rng);
        let t = table(5, &["a", "b", "c", "d"], 1);
        let (_, cache) = basis_forward(&["a", "b", "c", "d"], &t, &p).unwrap();
        let g = basis_backward(&cache, &p, &[0.0, 0.0, 0.0]);
        assert!(g.tensors().iter().all(|ts| ts.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn pooling_ties_route_to_lowest_row() {
        // Identical bigrams give identical feature rows.
        let mut rng = derive_rng(2, "t", 0);
        let p = BasisParams::random(3, 2, 3, &mut rng);
        let x = Matrix { rows: 3, cols: 2, data: vec![0.3, -0.2, 0.3, -0.2, 0.3, -0.2] };
        let (_, cache) = forward_input(x, &p).unwrap();
        assert!(cache.argmax.iter().all(|&i| i == 0));
        let mut grads = p.zeros_like();
        backward_pooled(&cache, &p, &[1.0, 1.0, 1.0], &mut grads);
        // Row 0 is [h0, h1]; with the tie the gradient equals dz * h0 exactly once.
        for f in 0..3 {
            let c = cache.features.row(0)[f];
            let dz = 1.0 - c * c;
            assert!((grads.bias[f] - dz).abs() < 1e-15);
            assert!((grads.w_left[f * 2] - dz * 0.3).abs() < 1e-15);
        }
    }

    fn loss(tokens: &[&str], t: &EmbeddingTable, p: &BasisParams, upstream: &[f64]) -> f64 {
        let (probs, _) = basis_forward(tokens, t, p).unwrap();
        dot(&probs, upstream)
    }

    #[test]
    fn backward_matches_central_differences() {
        let tokens = ["a", "b", "c", "d"];
        for draw in 0..20 {
            let mut rng = derive_rng(draw, "gradcheck", 0);
            let t = table(5, &tokens, draw + 100);
            let mut p = BasisParams::random(4, 5, 3, &mut rng);
            for w in p.tensors_mut().into_iter().flat_map(|ts| ts.iter_mut()) {
                *w = rng.random_range(-1.0..1.0);
            }
            let upstream: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, cache) = basis_forward(&tokens, &t, &p).unwrap();
            let grads = basis_backward(&cache, &p, &upstream);
            let h = 1e-5;
            for ti in 0..5 {
                for k in 0..p.tensors()[ti].len() {
                    let mut plus = p.clone();
                    plus.tensors_mut()[ti][k] += h;
                    let mut minus = p.clone();
                    minus.tensors_mut()[ti][k] -= h;
                    let fd = (loss(&tokens, &t, &plus, &upstream) - loss(&tokens, &t, &minus, &upstream)) / (2.0 * h);
                    let a = grads.tensors()[ti][k];
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                    assert!(rel < 1e-4, "draw {draw} tensor {ti}[{k}]: {a} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn word_order_matters() {
        let mut rng = derive_rng(4, "t", 0);
        let p = BasisParams::random(4, 3, 3, &mut rng);
        let t = table(3, &["x", "y", "z"], 4);
        let (fwd, _) = basis_forward(&["x", "y", "z"], &t, &p).unwrap();
        let (rev, _) = basis_forward(&["z", "y", "x"], &t, &p).unwrap();
        assert_ne!(fwd, rev);
    }

    #[test]
    fn probabilities_are_proper() {
        for seed in 0..20 {
            let mut rng = derive_rng(seed, "t", 0);
            let p = BasisParams::random(6, 3, 3, &mut rng);
            let t = table(3, &["x", "y", "z"], seed);
            let (probs, _) = basis_forward(&["x", "z", "y", "x"], &t, &p).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }
}
