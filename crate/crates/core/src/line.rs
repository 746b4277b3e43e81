//! First-order LINE node embeddings trained with negative sampling.
//!
//! For a sampled edge `(i, j)` the objective is
//! `log σ(v_i·v_j) + Σ_n log σ(−v_i·v_n)` over negative nodes `n` drawn from
//! the degree-biased noise distribution. One epoch samples `|E|` edges.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::NodeEmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::math::{dot, log_sigmoid, sigmoid};
use crate::seed::derive_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineConfig {
    pub dimension: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the final step of linear decay.
    pub final_learning_rate: f64,
    pub epochs: usize,
    pub noise_exponent: f64,
}

impl Default for LineConfig {
    fn default() -> Self {
        LineConfig {
            dimension: 100,
            negatives: 5,
            learning_rate: 0.025,
            final_learning_rate: 1e-4,
            epochs: 50,
            noise_exponent: 0.75,
        }
    }
}

impl LineConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.dimension < 1 {
            errs.push("line.dimension must be >= 1".to_string());
        }
        if self.negatives < 1 {
            errs.push("line.negatives must be >= 1".to_string());
        }
        if !(self.learning_rate > 0.0) {
            errs.push("line.learning_rate must be positive".to_string());
        }
        if self.epochs < 1 {
            errs.push("line.epochs must be >= 1".to_string());
        }
        if !self.noise_exponent.is_finite() {
            errs.push("line.noise_exponent must be finite".to_string());
        }
        errs
    }
}

/// `p(n) ∝ degree(n)^exponent`, in node order.
pub fn noise_distribution(g: &SocialGraph, exponent: f64) -> Result<Vec<f64>> {
    if g.edge_count() == 0 {
        return Err(Error::Graph("noise distribution needs at least one edge".into()));
    }
    let weights: Vec<f64> = g.degrees().iter().map(|&d| (d as f64).powf(exponent)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Value and sparse gradient of the per-edge objective.
#[derive(Debug, Clone)]
pub struct EdgeObjective {
    pub value: f64,
    /// `(node, d objective / d v_node)`, one entry per distinct node touched.
    pub grads: Vec<(usize, Vec<f64>)>,
}

fn accumulate(grads: &mut Vec<(usize, Vec<f64>)>, node: usize, scale: f64, v: &[f64]) {
    let slot = match grads.iter().position(|(n, _)| *n == node) {
        Some(p) => p,
        None => {
            grads.push((node, vec![0.0; v.len()]));
            grads.len() - 1
        }
    };
    for (g, x) in grads[slot].1.iter_mut().zip(v) {
        *g += scale * x;
    }
}

/// Objective for source `i`, target `j` and the given negatives, with
/// vectors stored row-major in `vectors`. Negatives equal to `i` or `j`
/// are ignored.
pub fn edge_objective(vectors: &[f64], dim: usize, i: usize, j: usize, negatives: &[usize]) -> EdgeObjective {
    let row = |n: usize| &vectors[n * dim..(n + 1) * dim];
    let vi = row(i);
    let vj = row(j);
    let pos = dot(vi, vj);
    let mut value = log_sigmoid(pos);
    let mut grads = Vec::with_capacity(2 + negatives.len());
    let coef = 1.0 - sigmoid(pos);
    accumulate(&mut grads, i, coef, vj);
    accumulate(&mut grads, j, coef, vi);
    for &n in negatives {
        if n == i || n == j {
            continue;
        }
        let vn = row(n);
        let s = dot(vi, vn);
        value += log_sigmoid(-s);
        let coef = -sigmoid(s);
        accumulate(&mut grads, i, coef, vn);
        accumulate(&mut grads, n, coef, vi);
    }
    EdgeObjective { value, grads }
}

struct Sampler {
    edges: Vec<(usize, usize)>,
    noise: WeightedIndex<f64>,
}

impl Sampler {
    fn new(g: &SocialGraph, exponent: f64) -> Result<Self> {
        let probs = noise_distribution(g, exponent)?;
        let noise = WeightedIndex::new(&probs)
            .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
        Ok(Sampler {
            edges: g.edge_indices().to_vec(),
            noise,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, negatives: usize, buf: &mut Vec<usize>) -> (usize, usize) {
        let (a, b) = self.edges[rng.random_range(0..self.edges.len())];
        let (i, j) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        buf.clear();
        buf.extend((0..negatives).map(|_| self.noise.sample(rng)));
        (i, j)
    }
}

/// Train first-order LINE vectors by stochastic gradient ascent with a
/// linearly decaying step size. Every node, including isolated ones, gets a
/// vector initialized uniformly in `(-0.5/D, 0.5/D)`.
pub fn train_line_embeddings<R: Rng + ?Sized>(
    g: &SocialGraph,
    cfg: &LineConfig,
    rng: &mut R,
) -> Result<NodeEmbeddingTable> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::InvalidArgument(errs.join("; ")));
    }
    let sampler = Sampler::new(g, cfg.noise_exponent)?;
    let dim = cfg.dimension;
    let n = g.node_count();
    let bound = 0.5 / dim as f64;
    let mut vectors: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-bound..bound)).collect();

    let isolated = g.degrees().iter().filter(|&&d| d == 0).count();
    if isolated > 0 {
        log::warn!("{isolated} isolated node(s) keep their random initialization");
    }

    let total_steps = (cfg.epochs * g.edge_count()) as f64;
    let mut step = 0usize;
    let mut negatives = Vec::with_capacity(cfg.negatives);
    for _ in 0..cfg.epochs {
        for _ in 0..g.edge_count() {
            let lr = cfg.learning_rate - (cfg.learning_rate - cfg.final_learning_rate) * (step as f64 / total_steps);
            let lr = lr.max(cfg.final_learning_rate.min(cfg.learning_rate));
            let (i, j) = sampler.draw(rng, cfg.negatives, &mut negatives);
            let obj = edge_objective(&vectors, dim, i, j, &negatives);
            for (node, grad) in obj.grads {
                for (v, g) in vectors[node * dim..(node + 1) * dim].iter_mut().zip(&grad) {
                    *v += lr * g;
                }
            }
            step += 1;
        }
    }

    let mut table = NodeEmbeddingTable::new(dim);
    for (idx, name) in g.nodes().iter().enumerate() {
        table.insert(name.clone(), &vectors[idx * dim..(idx + 1) * dim])?;
    }
    Ok(table)
}

/// Mean per-edge objective over `samples` edges drawn from stream
/// `("line-objective", 0)` of `seed`. Nodes missing from the table make the
/// estimate an error.
pub fn objective_estimate(
    g: &SocialGraph,
    table: &NodeEmbeddingTable,
    cfg: &LineConfig,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let sampler = Sampler::new(g, cfg.noise_exponent)?;
    let dim = table.dim();
    let mut vectors = Vec::with_capacity(g.node_count() * dim);
    for name in g.nodes() {
        let v = table
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("node `{name}` has no embedding")))?;
        vectors.extend_from_slice(v);
    }
    let mut rng = derive_rng(seed, "line-objective", 0);
    let mut negatives = Vec::new();
    let mut total = 0.0;
    for _ in 0..samples.max(1) {
        let (i, j) = sampler.draw(&mut rng, cfg.negatives, &mut negatives);
        total += edge_objective(&vectors, dim, i, j, &negatives).value;
    }
    Ok(total / samples.max(1) as f64)
}
