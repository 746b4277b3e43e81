//! Undirected simple graphs over author ids, plus degree-preserving rewiring.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph. Nodes are kept in sorted order and edges are
/// stored as sorted `(low, high)` index pairs, so two graphs with the same
/// content compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
}

fn canon(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl SocialGraph {
    /// Build a graph from explicit nodes and edges. Edge endpoints missing from
    /// `nodes` are added. Duplicate and reversed edges collapse; self-loops are
    /// rejected.
    pub fn new<N, E, S>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = S>,
        E: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let edges: Vec<(String, String)> = edges
            .into_iter()
            .map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string()))
            .collect();
        let mut names: BTreeSet<String> = nodes.into_iter().map(|n| n.as_ref().to_string()).collect();
        for (a, b) in &edges {
            if a == b {
                return Err(Error::Graph(format!("self-loop on `{a}`")));
            }
            names.insert(a.clone());
            names.insert(b.clone());
        }
        let nodes: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let set: BTreeSet<(usize, usize)> = edges
            .iter()
            .map(|(a, b)| canon(index[a], index[b]))
            .collect();
        Ok(SocialGraph {
            nodes,
            index,
            edges: set.into_iter().collect(),
        })
    }

    fn with_edges(&self, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        SocialGraph {
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            edges,
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Edges as `(low, high)` node indices, sorted.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .iter()
            .map(move |&(a, b)| (self.nodes[a].as_str(), self.nodes[b].as_str()))
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(i), Some(j)) => self.edges.binary_search(&canon(i, j)).is_ok(),
            _ => false,
        }
    }

    /// Degree of each node, in node order.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// The degree multiset, sorted ascending.
    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d = self.degrees();
        d.sort_unstable();
        d
    }

    pub fn connected_components(&self) -> usize {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
        components
    }

    /// One rewiring epoch: exactly `|edges|` double-edge-swap attempts.
    ///
    /// Each attempt draws two distinct edges `(u,v)`, `(x,y)` uniformly (the
    /// second edge's orientation is a fair coin) and replaces them with
    /// `(u,x)`, `(v,y)`. Attempts that would create a self-loop or a parallel
    /// edge leave the graph unchanged but still count.
    pub fn double_edge_swap_epoch<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SocialGraph> {
        let m = self.edges.len();
        if m < 2 {
            return Err(Error::Graph(format!(
                "double edge swap needs at least 2 edges, graph has {m}"
            )));
        }
        let mut edges = self.edges.clone();
        let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
        for _ in 0..m {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let (u, v) = edges[i];
            let (mut x, mut y) = edges[j];
            if rng.random_bool(0.5) {
                std::mem::swap(&mut x, &mut y);
            }
            if u == x || v == y {
                continue;
            }
            let (e1, e2) = (canon(u, x), canon(v, y));
            if present.contains(&e1) || present.contains(&e2) {
                continue;
            }
            present.remove(&edges[i]);
            present.remove(&edges[j]);
            present.insert(e1);
            present.insert(e2);
            edges[i] = e1;
            edges[j] = e2;
        }
        Ok(self.with_edges(edges))
    }

    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.edges() {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        out
    }
}

/// Fraction of `g1`'s edges that also occur in `g2`.
pub fn edge_overlap(g1: &SocialGraph, g2: &SocialGraph) -> Result<f64> {
    if g1.edge_count() == 0 {
        return Err(Error::Graph("edge overlap undefined for a graph without edges".into()));
    }
    let shared = if g1.nodes == g2.nodes {
        let set: HashSet<&(usize, usize)> = g2.edges.iter().collect();
        g1.edges.iter().filter(|e| set.contains(e)).count()
    } else {
        g1.edges().filter(|(a, b)| g2.has_edge(a, b)).count()
    };
    Ok(shared as f64 / g1.edge_count() as f64)
}

pub fn parse_edge_list(contents: &str, path: &Path) -> Result<SocialGraph> {
    let mut edges = Vec::new();
    for (idx, line) in contents.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 node ids, found {}", fields.len()),
            ));
        }
        if fields[0] == fields[1] {
            return Err(Error::parse(path, lineno, format!("self-loop on `{}`", fields[0])));
        }
        edges.push((fields[0], fields[1]));
    }
    SocialGraph::new(Vec::<&str>::new(), edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<SocialGraph> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&contents, path)
}

pub fn save_edge_list(g: &SocialGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, g.to_edge_list_text()).map_err(|e| Error::io(path, e))
}
