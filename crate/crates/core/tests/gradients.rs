//! Full-model gradient checks against central differences for every mode.

use rand::Rng;
use socatt_core::embeddings::EmbeddingTable;
use socatt_core::model::{Mode, ModelShape, SocialAttentionModel};
use socatt_core::seed::derive_rng;

fn table(prefix: &str, n: usize, dim: usize, rng: &mut impl Rng) -> EmbeddingTable {
    let mut t = EmbeddingTable::new(dim);
    for i in 0..n {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        t.insert(format!("{prefix}{i}"), &v).unwrap();
    }
    t
}

fn max_relative_error(mode: Mode, author: &str, seed: u64) -> f64 {
    let mut rng = derive_rng(seed, "gradients", 0);
    let words = table("w", 6, 5, &mut rng);
    let authors = table("a", 3, 6, &mut rng);
    let shape = ModelShape { mode, experts: 3, filters: 4 };
    let mut model = SocialAttentionModel::new(shape, words, Some(authors), &mut rng).unwrap();
    for t in model.params.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.random_range(-0.7..0.7);
        }
    }
    let tokens: Vec<String> = (0..5).map(|_| format!("w{}", rng.random_range(0..7))).collect();
    let x = model.embed(&tokens);
    let gold = rng.random_range(0..3);
    let fwd = model.forward_input(&x, author).unwrap();
    let mut grads = model.params.zeros_like();
    let loss = model.backward(&fwd, gold, 1.0, &mut grads);
    assert!((loss - model.loss(&x, author, gold).unwrap()).abs() < 1e-12);
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (ti, tensor) in analytic.iter().enumerate() {
        for (i, &a) in tensor.iter().enumerate() {
            let orig = model.params.tensors()[ti][i];
            model.params.tensors_mut()[ti][i] = orig + h;
            let up = model.loss(&x, author, gold).unwrap();
            model.params.tensors_mut()[ti][i] = orig - h;
            let down = model.loss(&x, author, gold).unwrap();
            model.params.tensors_mut()[ti][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-7));
        }
    }
    worst
}

#[test]
fn every_mode_matches_central_differences() {
    for mode in [Mode::Social, Mode::Random, Mode::Moe, Mode::Concat, Mode::Single] {
        for seed in 0..5 {
            let err = max_relative_error(mode, "a1", seed);
            assert!(err < 1e-4, "{mode} seed {seed}: {err}");
        }
    }
}

#[test]
fn unknown_authors_still_have_correct_gradients() {
    for mode in [Mode::Social, Mode::Concat] {
        let err = max_relative_error(mode, "nobody", 11);
        assert!(err < 1e-4, "{mode}: {err}");
    }
}

#[test]
fn instance_weight_scales_the_gradient() {
    let mut rng = derive_rng(3, "weighted", 0);
    let words = table("w", 6, 5, &mut rng);
    let authors = table("a", 3, 6, &mut rng);
    let shape = ModelShape { mode: Mode::Social, experts: 2, filters: 3 };
    let model = SocialAttentionModel::new(shape, words, Some(authors), &mut rng).unwrap();
    let x = model.embed(&["w1", "w2", "w3"]);
    let fwd = model.forward_input(&x, "a0").unwrap();
    let mut g1 = model.params.zeros_like();
    let mut g2 = model.params.zeros_like();
    model.backward(&fwd, 1, 1.0, &mut g1);
    model.backward(&fwd, 1, 0.25, &mut g2);
    for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
        for (x, y) in a.iter().zip(b) {
            assert!((0.25 * x - y).abs() < 1e-15);
        }
    }
}
