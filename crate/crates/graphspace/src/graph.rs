//! Exact graph values and cylinder sets.
//!
//! A graph on the countable vertex set is represented exactly when it is
//! determined by finitely many edge indices plus a constant tail: either a
//! finite edge set or the complement of one. Together with the cylinder
//! sets `E(I0, I1)` (forbidden / required finite index sets) this carries
//! the whole Boolean and translation algebra needed for measure queries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{DyadicValue, Tail};
use crate::labelling::EdgeIndex;

/// Hard cap on `2^depth` enumerations.
pub const MAX_ATOM_DEPTH: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("forbidden and required index sets overlap at {0}")]
    OverlappingCylinder(EdgeIndex),
    #[error("edge index {0} is invalid: indices start at 1")]
    InvalidIndex(EdgeIndex),
    #[error("depth {0} exceeds the enumeration limit {MAX_ATOM_DEPTH}")]
    ResourceLimit(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Finite,
    #[serde(rename = "cofinite")]
    CoFinite,
}

/// Exact graph: a finite support of present edges, or the complement of a
/// finite set of absent edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRepr {
    kind: GraphKind,
    support: BTreeSet<EdgeIndex>,
}

impl GraphRepr {
    pub fn finite<I: IntoIterator<Item = EdgeIndex>>(indices: I) -> Self {
        GraphRepr {
            kind: GraphKind::Finite,
            support: indices.into_iter().collect(),
        }
    }

    pub fn cofinite<I: IntoIterator<Item = EdgeIndex>>(absent: I) -> Self {
        GraphRepr {
            kind: GraphKind::CoFinite,
            support: absent.into_iter().collect(),
        }
    }

    /// The zero graph (no edges).
    pub fn zero() -> Self {
        GraphRepr::finite([])
    }

    /// The complete graph `K_V`.
    pub fn complete() -> Self {
        GraphRepr::cofinite([])
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Present indices for `Finite`, absent indices for `CoFinite`.
    pub fn support(&self) -> &BTreeSet<EdgeIndex> {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, GraphKind::Finite) && self.support.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.kind, GraphKind::CoFinite) && self.support.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GraphKind::Finite)
    }

    pub fn contains_edge(&self, n: EdgeIndex) -> bool {
        match self.kind {
            GraphKind::Finite => self.support.contains(&n),
            GraphKind::CoFinite => !self.support.contains(&n),
        }
    }

    /// Largest index at which this graph differs from its tail behaviour.
    pub fn max_constrained_index(&self) -> EdgeIndex {
        self.support.iter().next_back().copied().unwrap_or(0)
    }

    /// Group law: symmetric difference of edge sets.
    pub fn sym_diff(&self, other: &GraphRepr) -> GraphRepr {
        let sd: BTreeSet<EdgeIndex> = self
            .support
            .symmetric_difference(&other.support)
            .copied()
            .collect();
        match (self.kind, other.kind) {
            (GraphKind::Finite, GraphKind::Finite) => GraphRepr {
                kind: GraphKind::Finite,
                support: sd,
            },
            (GraphKind::CoFinite, GraphKind::CoFinite) => GraphRepr {
                kind: GraphKind::Finite,
                support: sd,
            },
            // mixed: result is co-finite, absent exactly where the two
            // listed sets differ
            _ => GraphRepr {
                kind: GraphKind::CoFinite,
                support: sd,
            },
        }
    }

    /// Ring multiplication: intersection of edge sets.
    pub fn intersect(&self, other: &GraphRepr) -> GraphRepr {
        match (self.kind, other.kind) {
            (GraphKind::Finite, GraphKind::Finite) => {
                GraphRepr::finite(self.support.intersection(&other.support).copied())
            }
            (GraphKind::Finite, GraphKind::CoFinite) => {
                GraphRepr::finite(self.support.difference(&other.support).copied())
            }
            (GraphKind::CoFinite, GraphKind::Finite) => {
                GraphRepr::finite(other.support.difference(&self.support).copied())
            }
            (GraphKind::CoFinite, GraphKind::CoFinite) => {
                GraphRepr::cofinite(self.support.union(&other.support).copied())
            }
        }
    }

    pub fn complement(&self) -> GraphRepr {
        GraphRepr {
            kind: match self.kind {
                GraphKind::Finite => GraphKind::CoFinite,
                GraphKind::CoFinite => GraphKind::Finite,
            },
            support: self.support.clone(),
        }
    }

    /// The other graph with the same dyadic value: for a nonempty finite
    /// graph with top index `k`, the co-finite graph that agrees below `k`,
    /// is absent at `k`, and present above; and conversely. `None` for the
    /// zero and complete graphs, whose values 0 and 1 have one expansion.
    pub fn dual(&self) -> Option<GraphRepr> {
        let k = *self.support.iter().next_back()?;
        let flipped: BTreeSet<EdgeIndex> = (1..k)
            .filter(|n| !self.support.contains(n))
            .chain(std::iter::once(k))
            .collect();
        Some(GraphRepr {
            kind: match self.kind {
                GraphKind::Finite => GraphKind::CoFinite,
                GraphKind::CoFinite => GraphKind::Finite,
            },
            support: flipped,
        })
    }
}

/// The measurable generator `E(I0, I1)`: graphs avoiding every index in
/// `forbidden` and containing every index in `required`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderSet {
    forbidden: BTreeSet<EdgeIndex>,
    required: BTreeSet<EdgeIndex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    Open,
    Closed,
}

/// A metric ball in the dyadic norm, produced by cylinder decompositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub center: GraphRepr,
    pub radius: DyadicValue,
    pub kind: BallKind,
}

impl CylinderSet {
    pub fn new<I0, I1>(forbidden: I0, required: I1) -> Result<Self, GraphError>
    where
        I0: IntoIterator<Item = EdgeIndex>,
        I1: IntoIterator<Item = EdgeIndex>,
    {
        let forbidden: BTreeSet<EdgeIndex> = forbidden.into_iter().collect();
        let required: BTreeSet<EdgeIndex> = required.into_iter().collect();
        if let Some(&n) = forbidden.iter().chain(required.iter()).find(|&&n| n < 1) {
            return Err(GraphError::InvalidIndex(n));
        }
        if let Some(&n) = forbidden.intersection(&required).next() {
            return Err(GraphError::OverlappingCylinder(n));
        }
        Ok(CylinderSet {
            forbidden,
            required,
        })
    }

    /// The full space `E(empty, empty)`.
    pub fn full() -> Self {
        CylinderSet {
            forbidden: BTreeSet::new(),
            required: BTreeSet::new(),
        }
    }

    pub fn forbidden(&self) -> &BTreeSet<EdgeIndex> {
        &self.forbidden
    }

    pub fn required(&self) -> &BTreeSet<EdgeIndex> {
        &self.required
    }

    pub fn is_full(&self) -> bool {
        self.forbidden.is_empty() && self.required.is_empty()
    }

    /// Number of constrained indices `|I0 u I1|`.
    pub fn constrained(&self) -> usize {
        self.forbidden.len() + self.required.len()
    }

    pub fn max_index(&self) -> EdgeIndex {
        self.forbidden
            .iter()
            .chain(self.required.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, g: &GraphRepr) -> bool {
        self.required.iter().all(|&n| g.contains_edge(n))
            && self.forbidden.iter().all(|&n| !g.contains_edge(n))
    }

    /// Intersection on unioned index sets; `None` when some index would be
    /// both forbidden and required (the empty set).
    pub fn intersect(&self, other: &CylinderSet) -> Option<CylinderSet> {
        let forbidden: BTreeSet<EdgeIndex> =
            self.forbidden.union(&other.forbidden).copied().collect();
        let required: BTreeSet<EdgeIndex> = self.required.union(&other.required).copied().collect();
        if forbidden.intersection(&required).next().is_some() {
            return None;
        }
        Some(CylinderSet {
            forbidden,
            required,
        })
    }

    /// Translate by a graph: `E(I0,I1) + G = E((I0\G) u (I1 n G), (I1\G) u (I0 n G))`.
    pub fn translate(&self, g: &GraphRepr) -> CylinderSet {
        let mut forbidden = BTreeSet::new();
        let mut required = BTreeSet::new();
        for &n in &self.forbidden {
            if g.contains_edge(n) {
                required.insert(n);
            } else {
                forbidden.insert(n);
            }
        }
        for &n in &self.required {
            if g.contains_edge(n) {
                forbidden.insert(n);
            } else {
                required.insert(n);
            }
        }
        CylinderSet {
            forbidden,
            required,
        }
    }

    /// Decompose as an ideal plus a translation:
    /// `E(I0,I1) = E(I0 u I1, empty) + I1`.
    pub fn to_graph_form(&self) -> (CylinderSet, GraphRepr) {
        let forbidden: BTreeSet<EdgeIndex> =
            self.forbidden.union(&self.required).copied().collect();
        (
            CylinderSet {
                forbidden,
                required: BTreeSet::new(),
            },
            GraphRepr::finite(self.required.iter().copied()),
        )
    }

    /// Write this cylinder as a finite union of dyadic-norm balls.
    ///
    /// When the constrained indices form a full prefix `{1..n}` this is the
    /// two-ball decomposition (open balls of radius `2^-n`, or closed balls
    /// of radius `2^-(n+1)`); gaps are first filled by partitioning over all
    /// completions.
    pub fn to_balls(&self, kind: BallKind) -> Result<Vec<Ball>, GraphError> {
        if self.is_full() {
            return Ok(match kind {
                // whole space minus the single point K_V, plus that point
                BallKind::Open => vec![
                    Ball {
                        center: GraphRepr::zero(),
                        radius: DyadicValue::one(),
                        kind: BallKind::Open,
                    },
                    Ball {
                        center: GraphRepr::complete(),
                        radius: DyadicValue::zero(),
                        kind: BallKind::Closed,
                    },
                ],
                BallKind::Closed => vec![Ball {
                    center: GraphRepr::zero(),
                    radius: DyadicValue::one(),
                    kind: BallKind::Closed,
                }],
            });
        }
        let n = self.max_index();
        let gaps: Vec<EdgeIndex> = (1..=n)
            .filter(|k| !self.forbidden.contains(k) && !self.required.contains(k))
            .collect();
        if gaps.len() as u32 > MAX_ATOM_DEPTH {
            return Err(GraphError::ResourceLimit(gaps.len() as u32));
        }
        let radius = match kind {
            BallKind::Open => DyadicValue::new(
                {
                    let mut b = vec![false; n as usize];
                    b[n as usize - 1] = true;
                    b
                },
                Tail::Zeros,
            ),
            BallKind::Closed => DyadicValue::new(
                {
                    let mut b = vec![false; n as usize + 1];
                    b[n as usize] = true;
                    b
                },
                Tail::Zeros,
            ),
        };
        let mut balls = Vec::new();
        for mask in 0u64..(1u64 << gaps.len()) {
            let mut forbidden = self.forbidden.clone();
            let mut required = self.required.clone();
            for (i, &g) in gaps.iter().enumerate() {
                if mask >> i & 1 == 0 {
                    forbidden.insert(g);
                } else {
                    required.insert(g);
                }
            }
            balls.push(Ball {
                center: GraphRepr::finite(required.iter().copied()),
                radius: radius.clone(),
                kind,
            });
            balls.push(Ball {
                center: GraphRepr::cofinite(forbidden.iter().copied()),
                radius: radius.clone(),
                kind,
            });
        }
        Ok(balls)
    }
}

/// A depth-`d` truncation of a graph: membership bits for indices `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedAtom {
    depth: u32,
    words: Vec<u64>,
}

impl TruncatedAtom {
    pub fn empty(depth: u32) -> Self {
        TruncatedAtom {
            depth,
            words: vec![0; ((depth as usize) + 63) / 64],
        }
    }

    /// Atom from a bit mask; bit `k-1` of `mask` is membership of index `k`.
    pub fn from_mask(depth: u32, mask: u64) -> Self {
        assert!(depth <= 64);
        let mut a = TruncatedAtom::empty(depth);
        if depth > 0 {
            a.words[0] = if depth == 64 {
                mask
            } else {
                mask & ((1u64 << depth) - 1)
            };
        }
        a
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Membership of edge index `n` (1-based); `n` must be `<= depth`.
    pub fn bit(&self, n: EdgeIndex) -> bool {
        debug_assert!(n >= 1 && n <= self.depth as u64);
        let i = (n - 1) as usize;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, n: EdgeIndex, value: bool) {
        debug_assert!(n >= 1 && n <= self.depth as u64);
        let i = (n - 1) as usize;
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Indices of present edges, ascending.
    pub fn present(&self) -> impl Iterator<Item = EdgeIndex> + '_ {
        (1..=self.depth as u64).filter(move |&n| self.bit(n))
    }

    /// Whether every constraint of the cylinder (all indices `<= depth`)
    /// holds for this truncation.
    pub fn satisfies(&self, cyl: &CylinderSet) -> bool {
        debug_assert!(cyl.max_index() <= self.depth as u64);
        cyl.required().iter().all(|&n| self.bit(n))
            && cyl.forbidden().iter().all(|&n| !self.bit(n))
    }

    /// XOR with a graph, coordinatewise on `1..=depth`.
    pub fn translate(&self, g: &GraphRepr) -> TruncatedAtom {
        let mut out = self.clone();
        for n in 1..=self.depth as u64 {
            if g.contains_edge(n) {
                let b = out.bit(n);
                out.set_bit(n, !b);
            }
        }
        out
    }

    pub fn to_graph(&self) -> GraphRepr {
        GraphRepr::finite(self.present())
    }

    /// Little-endian packed bytes, bit `k-1` of the row = index `k`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = ((self.depth as usize) + 7) / 8;
        let mut out = vec![0u8; nbytes];
        for (i, b) in out.iter_mut().enumerate() {
            let word = self.words[i / 8];
            *b = (word >> ((i % 8) * 8)) as u8;
        }
        out
    }

    pub fn from_bytes(depth: u32, bytes: &[u8]) -> Self {
        let mut a = TruncatedAtom::empty(depth);
        for (i, &b) in bytes.iter().enumerate() {
            if i / 8 < a.words.len() {
                a.words[i / 8] |= (b as u64) << ((i % 8) * 8);
            }
        }
        a
    }
}

/// All `2^depth` atoms at a depth, as an iterator. `depth <= 24`.
pub fn atoms_at_depth(depth: u32) -> Result<impl Iterator<Item = TruncatedAtom>, GraphError> {
    if depth > MAX_ATOM_DEPTH {
        return Err(GraphError::ResourceLimit(depth));
    }
    Ok((0u64..(1u64 << depth)).map(move |mask| TruncatedAtom::from_mask(depth, mask)))
}
