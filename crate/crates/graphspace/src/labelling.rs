//! Canonical edge labelling.
//!
//! Edges of the complete graph on vertex labels `1, 2, 3, ...` are put in
//! bijection with the positive integers via colexicographic order:
//! `{1,2}, {1,3}, {2,3}, {1,4}, {2,4}, {3,4}, {1,5}, ...`
//! The closed form is `psi({u,v}) = (v-1)(v-2)/2 + u` for `u < v`, and the
//! inverse is recovered with an integer square root.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based position of an edge in the canonical colex order.
pub type EdgeIndex = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabellingError {
    #[error("invalid edge {{{0},{1}}}: vertex labels must satisfy 1 <= u < v")]
    InvalidEdge(u64, u64),
    #[error("invalid edge index {0}: indices start at 1")]
    InvalidIndex(u64),
}

/// A normalized unordered vertex pair, `u < v`, labels starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "(u64, u64)", try_from = "(u64, u64)")]
pub struct Edge {
    u: u64,
    v: u64,
}

impl Edge {
    pub fn new(u: u64, v: u64) -> Result<Self, LabellingError> {
        if u < 1 || v < 1 || u >= v {
            return Err(LabellingError::InvalidEdge(u, v));
        }
        Ok(Edge { u, v })
    }

    pub fn u(&self) -> u64 {
        self.u
    }

    pub fn v(&self) -> u64 {
        self.v
    }
}

impl From<Edge> for (u64, u64) {
    fn from(e: Edge) -> Self {
        (e.u, e.v)
    }
}

impl TryFrom<(u64, u64)> for Edge {
    type Error = LabellingError;

    fn try_from(t: (u64, u64)) -> Result<Self, Self::Error> {
        Edge::new(t.0, t.1)
    }
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{}}}", self.u, self.v)
    }
}

/// Colex index of an edge: `psi({u,v}) = (v-1)(v-2)/2 + u`.
pub fn psi(e: Edge) -> EdgeIndex {
    (e.v - 1) * (e.v - 2) / 2 + e.u
}

/// Inverse of [`psi`]; `psi(psi_inv(n)) == n` for all `n >= 1`.
pub fn psi_inv(n: EdgeIndex) -> Result<Edge, LabellingError> {
    if n < 1 {
        return Err(LabellingError::InvalidIndex(n));
    }
    // Largest v with (v-1)(v-2)/2 < n. Start from a float guess and fix up.
    let mut v = ((2.0 * n as f64).sqrt() + 1.5) as u64;
    while v >= 2 && (v - 1) * (v - 2) / 2 >= n {
        v -= 1;
    }
    while v * (v - 1) / 2 < n {
        v += 1;
    }
    let u = n - (v - 1) * (v - 2) / 2;
    Edge::new(u, v)
}

/// The edges with indices `1..=depth`, in index order (the prefix `E_n`).
pub fn prefix_edges(depth: u64) -> Vec<Edge> {
    (1..=depth).map(|n| psi_inv(n).expect("n >= 1")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(Edge::new(1, 2).unwrap()), 1);
        assert_eq!(psi(Edge::new(2, 3).unwrap()), 3);
        assert_eq!(psi(Edge::new(1, 5).unwrap()), 7);
    }

    #[test]
    fn psi_inv_examples() {
        assert_eq!(psi_inv(1).unwrap(), Edge::new(1, 2).unwrap());
        assert_eq!(psi_inv(3).unwrap(), Edge::new(2, 3).unwrap());
        assert_eq!(psi_inv(7).unwrap(), Edge::new(1, 5).unwrap());
        assert_eq!(psi_inv(0), Err(LabellingError::InvalidIndex(0)));
    }

    #[test]
    fn malformed_edges_rejected() {
        assert!(Edge::new(2, 2).is_err());
        assert!(Edge::new(3, 2).is_err());
        assert!(Edge::new(0, 1).is_err());
    }

    /// Brute-force oracle: enumerate pairs in colex order and index them.
    fn colex_enumerate(count: usize) -> Vec<Edge> {
        let mut out = Vec::with_capacity(count);
        let mut v = 2u64;
        'outer: loop {
            for u in 1..v {
                out.push(Edge::new(u, v).unwrap());
                if out.len() == count {
                    break 'outer;
                }
            }
            v += 1;
        }
        out
    }

    #[test]
    fn matches_colex_enumeration_oracle() {
        let oracle = colex_enumerate(500);
        for (i, e) in oracle.iter().enumerate() {
            let n = (i + 1) as u64;
            assert_eq!(psi(*e), n, "psi({e})");
            assert_eq!(psi_inv(n).unwrap(), *e, "psi_inv({n})");
        }
    }

    #[test]
    fn prefix_edges_examples() {
        assert!(prefix_edges(0).is_empty());
        let p3 = prefix_edges(3);
        assert_eq!(
            p3,
            vec![
                Edge::new(1, 2).unwrap(),
                Edge::new(1, 3).unwrap(),
                Edge::new(2, 3).unwrap()
            ]
        );
        let p4 = prefix_edges(4);
        assert_eq!(p4[3], Edge::new(1, 4).unwrap());
    }

    #[test]
    fn roundtrip_large_range() {
        for n in 1..=1_000_000u64 {
            assert_eq!(psi(psi_inv(n).unwrap()), n);
        }
        for v in 2..=2000u64 {
            for u in [1, v / 2 + 1, v - 1] {
                let e = Edge::new(u.clamp(1, v - 1), v).unwrap();
                assert_eq!(psi_inv(psi(e)).unwrap(), e);
            }
        }
    }

    #[test]
    fn monotone_prefix_vertex_labels() {
        for n in 1..200u64 {
            let edges = prefix_edges(n);
            let m = edges.iter().map(|e| e.v()).max().unwrap();
            assert!(m * (m - 1) / 2 >= n);
            assert!((m - 1) * (m - 2) / 2 < n);
            // every label 1..=m appears
            let mut seen = vec![false; m as usize + 1];
            for e in &edges {
                seen[e.u() as usize] = true;
                seen[e.v() as usize] = true;
            }
            // labels 1..m-1 are always covered; m appears by maximality
            assert!(seen[m as usize]);
        }
    }
}
