//! Undirected, unweighted agent network and its neighbor-averaging operator.

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("edge ({0}, {1}) references a vertex outside [0, {2})")]
    IndexOutOfRange(usize, usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),
    #[error("vector length {got} does not match vertex count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid graph file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

/// On-disk layout: `{"n": 3, "edges": [[0, 1], [1, 2]]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut neighbors = vec![Vec::new(); n];
        let mut stored = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(GraphError::IndexOutOfRange(i, j, n));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
            stored.push(key);
        }
        if let Some(v) = neighbors.iter().position(|nb| nb.is_empty()) {
            return Err(GraphError::IsolatedVertex(v));
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: stored,
            neighbors,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(file.n, &edges)
    }

    pub fn to_json(&self) -> String {
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|(i, j)| format!("[{i},{j}]"))
            .collect();
        format!("{{\"n\":{},\"edges\":[{}]}}", self.n, edges.join(","))
    }

    pub fn triangle() -> Self {
        Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).expect("triangle is valid")
    }

    /// Random spanning tree plus independent extra edges with probability `extra_p`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra_p: f64, rng: &mut R) -> Self {
        assert!(n >= 2, "random_connected needs at least two vertices");
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut present = HashSet::new();
        let mut edges = Vec::new();
        for k in 1..n {
            let parent = order[rng.random_range(0..k)];
            let child = order[k];
            present.insert((parent.min(child), parent.max(child)));
            edges.push((parent, child));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !present.contains(&(i, j)) && rng.random_bool(extra_p.clamp(0.0, 1.0)) {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges).expect("spanning tree covers every vertex")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// `w = D^{-1} A v`.
    pub fn apply_normalized_adjacency(&self, v: &[f64]) -> Result<Vec<f64>, GraphError> {
        let mut out = vec![0.0; self.n];
        self.normalized_adjacency_into(v, &mut out)?;
        Ok(out)
    }

    /// Writes `D^{-1} A v` into `out`.
    ///
    /// Each row average is accumulated as deviations from the first neighbor's
    /// value, so a row whose inputs are all equal returns that value bit for bit.
    pub fn normalized_adjacency_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), GraphError> {
        if v.len() != self.n {
            return Err(GraphError::LengthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        if out.len() != self.n {
            return Err(GraphError::LengthMismatch {
                expected: self.n,
                got: out.len(),
            });
        }
        for (i, nb) in self.neighbors.iter().enumerate() {
            let base = v[nb[0]];
            let dev: f64 = nb[1..].iter().map(|&j| v[j] - base).sum();
            out[i] = base + dev / nb.len() as f64;
        }
        Ok(())
    }
}
