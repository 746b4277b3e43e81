//! Dense embedding tables in the word2vec text format:
//! a `V D` header followed by `V` lines of `key v1 ... vD`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major table of equal-length vectors keyed by string, in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

/// Word vectors `h_i` fed to the convolutional layer.
pub type WordEmbeddingTable = EmbeddingTable;
/// Author vectors learned from the social graph.
pub type NodeEmbeddingTable = EmbeddingTable;

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            keys: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Insert or overwrite. Returns `true` when the key already existed.
    pub fn insert(&mut self, key: impl Into<String>, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector length {} does not match table dimension {}",
                vector.len(),
                self.dim
            )));
        }
        let key = key.into();
        if let Some(&row) = self.index.get(&key) {
            self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
            return Ok(true);
        }
        self.index.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.data.extend_from_slice(vector);
        Ok(false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn row_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.row_of(key).map(|r| self.row(r))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.keys
            .iter()
            .enumerate()
            .map(move |(r, k)| (k.as_str(), self.row(r)))
    }

    /// Parse the text format. Duplicate keys keep their last occurrence and
    /// are reported in the second return value.
    pub fn parse(contents: &str, path: &Path) -> Result<(Self, Vec<String>)> {
        let mut lines = contents
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (header_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing `V D` header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_count = |s: &str| s.parse::<usize>().ok();
        let (rows, dim) = match fields.as_slice() {
            [v, d] => match (parse_count(v), parse_count(d)) {
                (Some(v), Some(d)) if d > 0 => (v, d),
                _ => return Err(Error::parse(path, header_no + 1, "malformed `V D` header")),
            },
            _ => return Err(Error::parse(path, header_no + 1, "malformed `V D` header")),
        };

        let mut table = EmbeddingTable::new(dim);
        let mut duplicates = Vec::new();
        let mut seen_rows = 0;
        let mut vector = Vec::with_capacity(dim);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("non-blank line has a field");
            vector.clear();
            for tok in parts {
                let v = tok
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("invalid number `{tok}`")))?;
                vector.push(v);
            }
            if vector.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {dim} values, found {}", vector.len()),
                ));
            }
            if table.insert(key, &vector)? {
                duplicates.push(key.to_string());
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(Error::parse(
                path,
                header_no + 1,
                format!("header declares {rows} rows but file has {seen_rows}"),
            ));
        }
        Ok((table, duplicates))
    }

    /// Serialize with 9 significant digits per component.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (key, vec) in self.iter() {
            out.push_str(key);
            for v in vec {
                out.push(' ');
                out.push_str(&format!("{v:.8e}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (table, duplicates) = EmbeddingTable::parse(&contents, path)?;
    if !duplicates.is_empty() {
        log::warn!(
            "{}: {} duplicate key(s), last occurrence kept (first: `{}`)",
            path.display(),
            duplicates.len(),
            duplicates[0]
        );
    }
    Ok(table)
}

/// Alias of [`load_embeddings`] for word vectors.
pub fn load_word_embeddings(path: impl AsRef<Path>) -> Result<WordEmbeddingTable> {
    load_embeddings(path)
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(table.to_text().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    dim: usize,
    keys: Vec<String>,
    data: Vec<f64>,
}

impl From<EmbeddingTable> for RawTable {
    fn from(t: EmbeddingTable) -> Self {
        RawTable {
            dim: t.dim,
            keys: t.keys,
            data: t.data,
        }
    }
}

impl TryFrom<RawTable> for EmbeddingTable {
    type Error = String;

    fn try_from(raw: RawTable) -> std::result::Result<Self, Self::Error> {
        if raw.data.len() != raw.keys.len() * raw.dim {
            return Err(format!(
                "table has {} values, expected {} x {}",
                raw.data.len(),
                raw.keys.len(),
                raw.dim
            ));
        }
        let mut table = EmbeddingTable::new(raw.dim);
        for (r, key) in raw.keys.into_iter().enumerate() {
            let row = &raw.data[r * raw.dim..(r + 1) * raw.dim];
            if table.insert(key, row).map_err(|e| e.to_string())? {
                return Err("duplicate key in serialized table".into());
            }
        }
        Ok(table)
    }
}
