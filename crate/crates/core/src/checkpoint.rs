//! Self-describing JSON checkpoints: format version, the run configuration
//! that produced the model, the class list, every parameter tensor with its
//! shape, and the inlined embedding tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Mode, SocialAttentionModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    /// Echo of the configuration the model was trained with.
    pub config: Value,
    pub model: SocialAttentionModel,
}

impl Checkpoint {
    pub fn new(config: Value, model: SocialAttentionModel) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            config,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                ck.format_version
            )));
        }
        validate(&ck.model)?;
        Ok(ck)
    }
}

fn validate(m: &SocialAttentionModel) -> Result<()> {
    let bad = |msg: String| Err(Error::Checkpoint(msg));
    if m.params.bases.is_empty() {
        return bad("checkpoint has no basis models".into());
    }
    let first = &m.params.bases[0];
    for (k, b) in m.params.bases.iter().enumerate() {
        b.check_shapes().map_err(|e| Error::Checkpoint(format!("basis {k}: {e}")))?;
        if (b.filters, b.word_dim, b.classes) != (first.filters, m.word_table.dim(), m.classes.len()) {
            return bad(format!("basis {k} disagrees with the model's filters, word dimension or classes"));
        }
    }
    if m.mode.uses_authors() && m.author_table.is_none() {
        return bad(format!("mode `{}` checkpoint lacks an author table", m.mode));
    }
    let k = m.params.bases.len();
    match (m.mode, &m.params.gate) {
        (Mode::Social | Mode::Random | Mode::Moe, Some(g)) => {
            let dim = match m.mode {
                Mode::Moe => m.word_table.dim(),
                _ => m.author_table.as_ref().map_or(0, |a| a.dim()),
            };
            if g.experts != k || g.input_dim != dim || g.weights.len() != k * dim || g.bias.len() != k {
                return bad("gate parameter shapes are inconsistent".into());
            }
        }
        (Mode::Social | Mode::Random | Mode::Moe, None) => return bad("mixture checkpoint lacks gate parameters".into()),
        (_, Some(_)) => return bad(format!("mode `{}` checkpoint carries gate parameters", m.mode)),
        (_, None) if k != 1 => return bad(format!("mode `{}` needs exactly one basis model", m.mode)),
        _ => {}
    }
    match (m.mode, &m.params.concat) {
        (Mode::Concat, Some(c)) => {
            let dim = first.filters + m.author_table.as_ref().map_or(0, |a| a.dim());
            if c.classes != m.classes.len() || c.input_dim != dim || c.weights.len() != c.classes * dim || c.bias.len() != c.classes {
                return bad("concat head shapes are inconsistent".into());
            }
        }
        (Mode::Concat, None) => return bad("concat checkpoint lacks its head".into()),
        (_, Some(_)) => return bad(format!("mode `{}` checkpoint carries a concat head", m.mode)),
        _ => {}
    }
    Ok(())
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ck.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Label};
    use crate::embeddings::EmbeddingTable;
    use crate::model::ModelShape;
    use crate::seed::derive_rng;
    use rand::Rng;

    fn model(mode: Mode) -> SocialAttentionModel {
        let mut rng = derive_rng(9, "ck", 0);
        let mut words = EmbeddingTable::new(4);
        for i in 0..12 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            words.insert(format!("t{i}"), &v).unwrap();
        }
        let mut authors = EmbeddingTable::new(3);
        for i in 0..5 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            authors.insert(format!("a{i}"), &v).unwrap();
        }
        let shape = ModelShape { mode, experts: 3, filters: 5 };
        SocialAttentionModel::new(shape, words, Some(authors), &mut rng).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions_bitwise() {
        let mut rng = derive_rng(1, "docs", 0);
        for mode in [Mode::Social, Mode::Random, Mode::Moe, Mode::Concat, Mode::Single] {
            let m = model(mode);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            let ck = Checkpoint::new(serde_json::json!({"mode": mode.as_str()}), m.clone());
            save_checkpoint(&ck, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            assert_eq!(back, ck);
            for i in 0..50 {
                let n = rng.random_range(0..8);
                let text: Vec<String> = (0..n).map(|_| format!("t{}", rng.random_range(0..14))).collect();
                let doc = Document::new(format!("d{i}"), format!("a{}", rng.random_range(0..7)), Label::Neutral, &text.join(" "));
                let p = m.predict_proba(&doc).unwrap();
                let q = back.model.predict_proba(&doc).unwrap();
                assert!(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
            assert_eq!(back.to_json().unwrap(), ck.to_json().unwrap());
        }
    }

    #[test]
    fn rejects_bad_version_and_shapes() {
        let ck = Checkpoint::new(Value::Null, model(Mode::Social));
        let mut v: Value = serde_json::from_str(&ck.to_json().unwrap()).unwrap();
        v["format_version"] = 99.into();
        assert!(Checkpoint::from_json(&v.to_string()).is_err());
        let mut broken = ck.clone();
        broken.model.params.bases[1].bias.pop();
        assert!(Checkpoint::from_json(&broken.to_json().unwrap()).is_err());
        let mut broken = ck;
        broken.model.params.gate = None;
        assert!(Checkpoint::from_json(&broken.to_json().unwrap()).is_err());
        assert!(Checkpoint::from_json("{").is_err());
    }
}
