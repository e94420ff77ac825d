//! Metrics and norms on graph space.
//!
//! The base-`a` Hamming weight `sum_{e in G} a^-psi(e)`, its exact dyadic
//! specialization at `a = 2` (with both preimage branches), the ternary
//! Cantor embedding, and the summable / vanishing / multiplicative weight
//! families with their norms.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{DyadicValue, Tail};
use crate::graph::{GraphKind, GraphRepr, TruncatedAtom};
use crate::labelling::EdgeIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("base {0} is invalid: need a > 1")]
    InvalidBase(f64),
    #[error("no preimage: {0}")]
    NoPreimage(&'static str),
    #[error("invalid weight parameter: {0}")]
    InvalidWeight(String),
}

/// `sum_{e in G} a^-psi(e)` as a float; exact closed form for the
/// constant tail of co-finite graphs. `precision` is a floor on accuracy
/// (the truncation error never exceeds `a^-precision / (a-1)`).
pub fn heart(g: &GraphRepr, a: f64, precision: u32) -> Result<f64, MetricError> {
    if a <= 1.0 {
        return Err(MetricError::InvalidBase(a));
    }
    let _ = precision; // closed forms below are exact past any precision
    let listed: f64 = g.support().iter().map(|&n| a.powi(-(n as i32))).sum();
    Ok(match g.kind() {
        GraphKind::Finite => listed,
        GraphKind::CoFinite => 1.0 / (a - 1.0) - listed,
    })
}

/// Distance `d_a(G,H) = heart(G delta H, a)`.
pub fn dist(g: &GraphRepr, h: &GraphRepr, a: f64, precision: u32) -> Result<f64, MetricError> {
    heart(&g.sym_diff(h), a, precision)
}

/// Exact dyadic value of a graph: bit `k` of the expansion is membership
/// of edge index `k`. Finite graphs get a zeros tail, co-finite ones a
/// ones tail.
pub fn heart2_exact(g: &GraphRepr) -> DyadicValue {
    let top = g.max_constrained_index();
    let bits: Vec<bool> = (1..=top).map(|n| g.contains_edge(n)).collect();
    match g.kind() {
        GraphKind::Finite => DyadicValue::new(bits, Tail::Zeros),
        GraphKind::CoFinite => DyadicValue::new(bits, Tail::Ones),
    }
}

/// Exact dyadic distance `heart2_exact(G delta H)`.
pub fn dist2_exact(g: &GraphRepr, h: &GraphRepr) -> DyadicValue {
    heart2_exact(&g.sym_diff(h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreimageBranch {
    Finite,
    CoFinite,
}

/// Preimage of a dyadic value under the dyadic map.
///
/// At a nonzero dyadic rational below 1 both a finite and a co-finite
/// graph map to the value; the branch picks one. `finite` fails only at
/// `x = 1` and `cofinite` only at `x = 0`.
pub fn heart2_inv(x: &DyadicValue, branch: PreimageBranch) -> Result<GraphRepr, MetricError> {
    match branch {
        PreimageBranch::Finite => {
            let z = x
                .zeros_form()
                .ok_or(MetricError::NoPreimage("x = 1 has no finite preimage"))?;
            Ok(GraphRepr::finite(
                z.bits()
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(i, _)| i as EdgeIndex + 1),
            ))
        }
        PreimageBranch::CoFinite => {
            let o = x
                .ones_form()
                .ok_or(MetricError::NoPreimage("x = 0 has no co-finite preimage"))?;
            Ok(GraphRepr::cofinite(
                o.bits()
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| !b)
                    .map(|(i, _)| i as EdgeIndex + 1),
            ))
        }
    }
}

/// Depth-limited preimage of an arbitrary real in `[0,1]`: the finite
/// graph on the first `depth` expansion bits. `residual` is set when the
/// expansion continues past the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimagePrefix {
    pub graph: GraphRepr,
    pub residual: bool,
}

pub fn preimage_prefix(x: f64, depth: u32) -> Result<PreimagePrefix, MetricError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(MetricError::NoPreimage("x outside [0,1]"));
    }
    let mut r = x;
    let mut support = Vec::new();
    for k in 1..=depth as u64 {
        r *= 2.0;
        if r >= 1.0 {
            support.push(k);
            r -= 1.0;
        }
    }
    Ok(PreimagePrefix {
        graph: GraphRepr::finite(support),
        residual: r != 0.0,
    })
}

/// Exact ternary value with digits in `{0, 2}`: the Cantor-set coordinate
/// `2 * heart(G, 3)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CantorValue {
    /// digit `k` is 2 iff `digits[k-1]`
    digits: Vec<bool>,
    tail_twos: bool,
}

impl CantorValue {
    pub fn digits(&self) -> &[bool] {
        &self.digits
    }

    pub fn tail_twos(&self) -> bool {
        self.tail_twos
    }

    pub fn to_rational(&self) -> BigRational {
        let mut num = BigInt::zero();
        for &d in &self.digits {
            num = &num * 3 + if d { 2 } else { 0 };
        }
        if self.tail_twos {
            num += 1; // sum of 2*3^-k beyond len is 3^-len
        }
        let den = BigInt::from(3).pow(self.digits.len() as u32);
        BigRational::new(num, den)
    }

    pub fn to_f64(&self) -> f64 {
        let mut x = 0.0;
        for (i, &d) in self.digits.iter().enumerate() {
            if d {
                x += 2.0 * 3.0f64.powi(-(i as i32 + 1));
            }
        }
        if self.tail_twos {
            x += 3.0f64.powi(-(self.digits.len() as i32));
        }
        x
    }
}

/// Cantor-set coordinate of a graph: ternary digit `k` is 2 iff index `k`
/// is present.
pub fn cantor_coord(g: &GraphRepr) -> CantorValue {
    let top = g.max_constrained_index();
    CantorValue {
        digits: (1..=top).map(|n| g.contains_edge(n)).collect(),
        tail_twos: matches!(g.kind(), GraphKind::CoFinite),
    }
}

/// Summable positive weights with closed-form totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSequence {
    /// `weight(n) = a^-n`
    Geometric { a: f64 },
    /// `weight(n) = table[n-1]` for `n <= len`, `scale * a^-n` beyond
    TableGeometric {
        table: Vec<f64>,
        tail_base: f64,
        tail_scale: f64,
    },
}

impl WeightSequence {
    pub fn geometric(a: f64) -> Result<Self, MetricError> {
        if a <= 1.0 {
            return Err(MetricError::InvalidBase(a));
        }
        Ok(WeightSequence::Geometric { a })
    }

    pub fn table_geometric(
        table: Vec<f64>,
        tail_base: f64,
        tail_scale: f64,
    ) -> Result<Self, MetricError> {
        if tail_base <= 1.0 {
            return Err(MetricError::InvalidBase(tail_base));
        }
        if tail_scale <= 0.0 || table.iter().any(|&w| w <= 0.0) {
            return Err(MetricError::InvalidWeight(
                "weights must be positive".into(),
            ));
        }
        Ok(WeightSequence::TableGeometric {
            table,
            tail_base,
            tail_scale,
        })
    }

    pub fn weight(&self, n: EdgeIndex) -> f64 {
        match self {
            WeightSequence::Geometric { a } => a.powi(-(n as i32)),
            WeightSequence::TableGeometric {
                table,
                tail_base,
                tail_scale,
            } => {
                if (n as usize) <= table.len() {
                    table[n as usize - 1]
                } else {
                    tail_scale * tail_base.powi(-(n as i32))
                }
            }
        }
    }

    /// `sum_n weight(n)` in closed form.
    pub fn total(&self) -> f64 {
        match self {
            WeightSequence::Geometric { a } => 1.0 / (a - 1.0),
            WeightSequence::TableGeometric {
                table,
                tail_base,
                tail_scale,
            } => {
                let head: f64 = table.iter().sum();
                head + tail_scale * tail_base.powi(-(table.len() as i32)) / (tail_base - 1.0)
            }
        }
    }

    /// The squared sequence, again in closed form (geometric squares are
    /// geometric in `a^2`).
    pub fn squared(&self) -> WeightSequence {
        match self {
            WeightSequence::Geometric { a } => WeightSequence::Geometric { a: a * a },
            WeightSequence::TableGeometric {
                table,
                tail_base,
                tail_scale,
            } => WeightSequence::TableGeometric {
                table: table.iter().map(|w| w * w).collect(),
                tail_base: tail_base * tail_base,
                tail_scale: tail_scale * tail_scale,
            },
        }
    }
}

/// Positive bounded weights accumulating only at zero; structurally the
/// same closed-form families as [`WeightSequence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecaySequence(pub WeightSequence);

impl DecaySequence {
    pub fn geometric(a: f64) -> Result<Self, MetricError> {
        Ok(DecaySequence(WeightSequence::geometric(a)?))
    }

    pub fn table_geometric(
        table: Vec<f64>,
        tail_base: f64,
        tail_scale: f64,
    ) -> Result<Self, MetricError> {
        Ok(DecaySequence(WeightSequence::table_geometric(
            table, tail_base, tail_scale,
        )?))
    }

    pub fn weight(&self, n: EdgeIndex) -> f64 {
        self.0.weight(n)
    }

    fn table_len(&self) -> usize {
        match &self.0 {
            WeightSequence::Geometric { .. } => 0,
            WeightSequence::TableGeometric { table, .. } => table.len(),
        }
    }
}

/// `max { zeta(e) : e in G }`, or 0 for the zero graph. The maximum exists
/// because the weights accumulate only at 0.
pub fn norminf(g: &GraphRepr, zeta: &DecaySequence) -> f64 {
    match g.kind() {
        GraphKind::Finite => g
            .support()
            .iter()
            .map(|&n| zeta.weight(n))
            .fold(0.0, f64::max),
        GraphKind::CoFinite => {
            // scan the table region, then the first included tail index
            // (the tail is strictly decreasing)
            let len = zeta.table_len() as u64;
            let mut best = 0.0f64;
            for n in 1..=len {
                if g.contains_edge(n) {
                    best = best.max(zeta.weight(n));
                }
            }
            let mut n = len + 1;
            while !g.contains_edge(n) {
                n += 1;
            }
            best.max(zeta.weight(n))
        }
    }
}

/// `sum_{e in G} phi(e)`; finite sums are exact term sums, the co-finite
/// tail uses the closed-form total.
pub fn norm1(g: &GraphRepr, phi: &WeightSequence) -> f64 {
    let listed: f64 = g.support().iter().map(|&n| phi.weight(n)).sum();
    match g.kind() {
        GraphKind::Finite => listed,
        GraphKind::CoFinite => phi.total() - listed,
    }
}

/// `norm1` of a truncation (used by the Monte Carlo estimators).
pub fn norm1_atom(atom: &TruncatedAtom, phi: &WeightSequence) -> f64 {
    atom.present().map(|n| phi.weight(n)).sum()
}

/// Multiplicative weights: values `> 1` with a finite total product.
/// `weight(n) = 1 + scale * a^-n` beyond the table; log-weights are used
/// for stable products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultWeightSequence {
    OnePlusGeometric { a: f64, scale: f64 },
    TableOnePlusGeometric { table: Vec<f64>, a: f64, scale: f64 },
}

impl MultWeightSequence {
    pub fn one_plus_geometric(a: f64, scale: f64) -> Result<Self, MetricError> {
        if a <= 1.0 {
            return Err(MetricError::InvalidBase(a));
        }
        if scale <= 0.0 {
            return Err(MetricError::InvalidWeight("scale must be positive".into()));
        }
        Ok(MultWeightSequence::OnePlusGeometric { a, scale })
    }

    pub fn table_one_plus_geometric(
        table: Vec<f64>,
        a: f64,
        scale: f64,
    ) -> Result<Self, MetricError> {
        if a <= 1.0 {
            return Err(MetricError::InvalidBase(a));
        }
        if scale <= 0.0 || table.iter().any(|&w| w <= 1.0) {
            return Err(MetricError::InvalidWeight("values must exceed 1".into()));
        }
        Ok(MultWeightSequence::TableOnePlusGeometric { table, a, scale })
    }

    pub fn weight(&self, n: EdgeIndex) -> f64 {
        match self {
            MultWeightSequence::OnePlusGeometric { a, scale } => {
                1.0 + scale * a.powi(-(n as i32))
            }
            MultWeightSequence::TableOnePlusGeometric { table, a, scale } => {
                if (n as usize) <= table.len() {
                    table[n as usize - 1]
                } else {
                    1.0 + scale * a.powi(-(n as i32))
                }
            }
        }
    }

    fn tail_params(&self) -> (usize, f64, f64) {
        match self {
            MultWeightSequence::OnePlusGeometric { a, scale } => (0, *a, *scale),
            MultWeightSequence::TableOnePlusGeometric { table, a, scale } => {
                (table.len(), *a, *scale)
            }
        }
    }

    /// `sum_n log weight(n)`, to machine precision; the geometric tail is
    /// cut off once its log-sum bound drops below 1e-18.
    pub fn log_total(&self) -> f64 {
        let (len, a, scale) = self.tail_params();
        let mut s = 0.0f64;
        for n in 1..=len as u64 {
            s += self.weight(n).ln();
        }
        let mut n = len as u64 + 1;
        loop {
            // log(1+x) <= x, so the remaining tail is below this bound
            let tail_bound = scale * a.powi(-(n as i32 - 1)) / (a - 1.0);
            if tail_bound < 1e-18 {
                break;
            }
            s += (scale * a.powi(-(n as i32))).ln_1p();
            n += 1;
        }
        s
    }

    /// `prod_n weight(n)` over all edges.
    pub fn total_product(&self) -> f64 {
        self.log_total().exp()
    }

    /// The exponent in the norm definition: smallest `n` with
    /// `2^n >= 1 + total_product`.
    pub fn norm_exponent(&self) -> u32 {
        let target = 1.0 + self.total_product();
        let mut n = 1u32;
        while (2.0f64).powi(n as i32) < target {
            n += 1;
        }
        n
    }
}

/// `(prod_{e in G} phi(e) - 1)^(1/n)` with `n = phi.norm_exponent()`,
/// computed in log space; 0 for the zero graph.
pub fn normx(g: &GraphRepr, phi: &MultWeightSequence) -> f64 {
    if g.is_zero() {
        return 0.0;
    }
    let n = phi.norm_exponent();
    let log_prod = match g.kind() {
        GraphKind::Finite => g.support().iter().map(|&k| phi.weight(k).ln()).sum::<f64>(),
        GraphKind::CoFinite => {
            phi.log_total() - g.support().iter().map(|&k| phi.weight(k).ln()).sum::<f64>()
        }
    };
    (log_prod.exp() - 1.0).powf(1.0 / n as f64)
}

/// `prod_{k in atom} phi(k)` on a truncation (Monte Carlo substrate).
pub fn product_atom(atom: &TruncatedAtom, phi: &MultWeightSequence) -> f64 {
    atom.present().map(|n| phi.weight(n).ln()).sum::<f64>().exp()
}

/// First `depth` entries of a permutation `pi` of indices with
/// `zeta(pi(1)) >= zeta(pi(2)) >= ...`; ties broken by ascending index so
/// the result is deterministic and stable under extending `depth`.
pub fn sorted_bijection(zeta: &DecaySequence, depth: usize) -> Vec<EdgeIndex> {
    // the top `depth` values live among the table indices plus the first
    // `depth` tail indices (the tail is strictly decreasing)
    let candidates = zeta.table_len() + depth;
    let mut idx: Vec<EdgeIndex> = (1..=candidates as u64).collect();
    idx.sort_by(|&a, &b| {
        zeta.weight(b)
            .partial_cmp(&zeta.weight(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(depth);
    idx
}
