//! Expectations under the product measures.
//!
//! Closed forms for the minimum-edge statistics and the norm functionals,
//! a deterministic Monte Carlo estimator over seeded truncations, and the
//! two-sided change-of-variables integral between graph space and the
//! unit interval.

use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::DyadicValue;
use crate::graph::{BallKind, GraphKind, GraphRepr, TruncatedAtom};
use crate::labelling::EdgeIndex;
use crate::measures::{ball_measure_haar, sample_map, MeasureError, ProbabilityAssignment};
use crate::metrics::{norm1_atom, product_atom, DecaySequence, MultWeightSequence, WeightSequence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("expectation diverges at p = 0")]
    DivergentExpectation,
    #[error("all samples were undefined; nothing to estimate")]
    EstimatorFailure,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// k-th smallest present edge index of an exact graph.
///
/// Defined for every co-finite graph; for a finite graph with fewer than
/// `k` edges the statistic does not exist.
pub fn psi_k_of_graph(g: &GraphRepr, k: u32) -> Result<EdgeIndex, StatError> {
    if k < 1 {
        return Err(StatError::Undefined("k must be at least 1"));
    }
    match g.kind() {
        GraphKind::Finite => g
            .support()
            .iter()
            .nth(k as usize - 1)
            .copied()
            .ok_or(StatError::Undefined("graph has fewer than k edges")),
        GraphKind::CoFinite => {
            let mut remaining = k as u64;
            let mut n = 1u64;
            loop {
                if g.contains_edge(n) {
                    remaining -= 1;
                    if remaining == 0 {
                        return Ok(n);
                    }
                }
                n += 1;
            }
        }
    }
}

/// k-th smallest present index of a truncation; distinguishes "too few
/// edges visible" (the truncation may simply be too shallow) from success.
pub fn psi_k_of_atom(atom: &TruncatedAtom, k: u32) -> Result<EdgeIndex, StatError> {
    atom.present()
        .nth(k as usize - 1)
        .ok_or(StatError::Undefined(
            "fewer than k edges within the truncation depth",
        ))
}

/// Closed form `E[Psi_k] = k/p`.
pub fn psi_k_expect(k: u32, p: f64) -> Result<f64, StatError> {
    if p <= 0.0 {
        return Err(StatError::DivergentExpectation);
    }
    Ok(k as f64 / p)
}

/// Truncated series `sum_{n=k}^{N} n C(n-1,k-1) p^k (1-p)^(n-k)`, the
/// term-by-term expectation; approaches `k/p` from below.
pub fn psi_k_series(k: u32, p: f64, terms: u32) -> f64 {
    let mut total = 0.0f64;
    let mut binom = 1.0f64; // C(n-1, k-1) at n = k
    let mut tail = p.powi(k as i32); // p^k (1-p)^(n-k) at n = k
    for n in k..=terms {
        total += n as f64 * binom * tail;
        // update to n+1: C(n, k-1) = C(n-1, k-1) * n / (n-k+1)
        binom *= n as f64 / (n as f64 - k as f64 + 1.0);
        tail *= 1.0 - p;
    }
    total
}

/// Digit-scanning form of the k-th minimum edge statistic on `[0,1]`:
/// the position of the k-th set bit of the binary expansion.
pub fn f_k_dyadic(x: &DyadicValue, k: u32) -> Result<EdgeIndex, StatError> {
    if x.is_zero() {
        return Err(StatError::Undefined("x = 0 has no set bits"));
    }
    let mut seen = 0u32;
    let mut n = 1u64;
    // bits region, then the constant tail
    let limit = x.bits().len() as u64;
    loop {
        if x.expansion_bit(n) {
            seen += 1;
            if seen == k {
                return Ok(n);
            }
        }
        if n >= limit && !x.expansion_bit(n + 1) {
            // zeros tail from here on: bits exhausted
            return Err(StatError::Undefined("expansion bits exhausted before k"));
        }
        n += 1;
    }
}

/// Partial sum of `E[f(norminf)] = sum_n p (1-p)^(n-1) f(zeta(pi(n)))`
/// with the tail bounded by `(1-p)^terms * f_bound`.
pub fn norminf_expect<F: Fn(f64) -> f64>(
    zeta: &DecaySequence,
    f: F,
    p: f64,
    terms: usize,
    f_bound: f64,
) -> (f64, f64) {
    let pi = crate::metrics::sorted_bijection(zeta, terms);
    let mut total = 0.0f64;
    let mut geo = p;
    for &idx in &pi {
        total += geo * f(zeta.weight(idx));
        geo *= 1.0 - p;
    }
    let tail = (1.0 - p).powi(terms as i32).abs() * f_bound;
    (total, tail)
}

/// Mean, second moment, and variance of the summable-weight norm under a
/// product measure: `mean = sum P(n) phi(n)`, `var = sum P(n)(1-P(n)) phi(n)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norm1Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

pub fn norm1_moments(phi: &WeightSequence, p: &ProbabilityAssignment) -> Norm1Moments {
    let phi2 = phi.squared();
    let (table_len, default) = match p {
        ProbabilityAssignment::Constant { p } => (0usize, p.to_f64().unwrap()),
        ProbabilityAssignment::Table { entries, default } => {
            (entries.len(), default.to_f64().unwrap())
        }
    };
    // constant-default closed form plus finite corrections over the table
    let mut mean = default * phi.total();
    let mut variance = default * (1.0 - default) * phi2.total();
    for n in 1..=table_len as u64 {
        let pn = p.p_f64(n);
        mean += (pn - default) * phi.weight(n);
        variance += (pn * (1.0 - pn) - default * (1.0 - default)) * phi2.weight(n);
    }
    Norm1Moments {
        mean,
        second_moment: variance + mean * mean,
        variance,
    }
}

/// `E[(normx)^n] = -1 + prod(1 - p + p phi(e))`, in log space. The
/// hypothesis `normx(K_V) <= (2^n - 2)^(1/n)` is checked against the
/// definition's exponent; the value is returned either way, flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormXExpect {
    pub value: f64,
    pub exponent: u32,
    pub hypothesis_met: bool,
}

pub fn normx_expect(phi: &MultWeightSequence, p: f64) -> NormXExpect {
    let n = phi.norm_exponent();
    let total = phi.total_product();
    let normx_full = (total - 1.0).powf(1.0 / n as f64);
    let bound = (2.0f64.powi(n as i32) - 2.0).powf(1.0 / n as f64);
    // log of prod (1 + p (phi(k) - 1)), summed to machine precision
    let mut log_sum = 0.0f64;
    let mut k = 1u64;
    loop {
        let term = p * (phi.weight(k) - 1.0);
        if term < 1e-18 && k > 64 {
            break;
        }
        log_sum += term.ln_1p();
        k += 1;
        if k > 1_000_000 {
            break;
        }
    }
    NormXExpect {
        value: log_sum.exp() - 1.0,
        exponent: n,
        hypothesis_met: normx_full <= bound,
    }
}

/// A deterministic Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
    pub undefined: u64,
    pub depth: u32,
    pub seed: u64,
}

impl MCEstimate {
    /// |mean - reference| <= 4 * std_error
    pub fn agrees_4sigma(&self, reference: f64) -> bool {
        (self.mean - reference).abs() <= 4.0 * self.std_error
    }
}

/// Estimates `E[f]` over `count` seeded truncations at the given depth.
/// Undefined samples are excluded and counted. Sample evaluation may run
/// in parallel; the reduction is a fixed sequential pass over the
/// index-ordered values, so the result is bitwise reproducible.
pub fn mc_expect<F>(
    f: F,
    p: &ProbabilityAssignment,
    depth: u32,
    seed: u64,
    count: u64,
) -> Result<MCEstimate, StatError>
where
    F: Fn(&TruncatedAtom) -> Option<f64> + Sync,
{
    let values = sample_map(p, depth, seed, count, f)?;
    let mut n = 0u64;
    let mut sum = 0.0f64;
    for v in values.iter().flatten() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return Err(StatError::EstimatorFailure);
    }
    let mean = sum / n as f64;
    let mut ss = 0.0f64;
    for v in values.iter().flatten() {
        ss += (v - mean) * (v - mean);
    }
    let variance = if n > 1 { ss / (n - 1) as f64 } else { 0.0 };
    Ok(MCEstimate {
        mean,
        std_error: (variance / n as f64).sqrt(),
        count: n,
        undefined: count - n,
        depth,
        seed,
    })
}

/// The named graph statistics exposed to the estimator and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stat", rename_all = "snake_case")]
pub enum Statistic {
    PsiK { k: u32 },
    Norm1 { phi: WeightSequence },
    NormInf { zeta: DecaySequence },
    /// `(normx)^n` with the exponent from the weight family itself,
    /// i.e. the quantity with the closed-form product expectation.
    NormXPow { phi: MultWeightSequence },
    Heart2,
}

impl Statistic {
    pub fn eval(&self, atom: &TruncatedAtom) -> Option<f64> {
        match self {
            Statistic::PsiK { k } => psi_k_of_atom(atom, *k).ok().map(|n| n as f64),
            Statistic::Norm1 { phi } => Some(norm1_atom(atom, phi)),
            Statistic::NormInf { zeta } => Some(
                atom.present()
                    .map(|n| zeta.weight(n))
                    .fold(0.0, f64::max),
            ),
            Statistic::NormXPow { phi } => Some(product_atom(atom, phi) - 1.0),
            Statistic::Heart2 => Some(heart2_of_atom(atom)),
        }
    }
}

/// Dyadic value of a truncation as a float.
pub fn heart2_of_atom(atom: &TruncatedAtom) -> f64 {
    atom.present().map(|n| 2.0f64.powi(-(n as i32))).sum()
}

/// The interval-side functions of the change-of-variables formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "snake_case")]
pub enum TransferFn {
    Identity,
    Square,
    /// polynomial `c0 + c1 x + c2 x^2 + ...`
    Poly { coeffs: Vec<f64> },
    Indicator { lo: f64, hi: f64 },
    NegFloorLog2,
}

impl TransferFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TransferFn::Identity => x,
            TransferFn::Square => x * x,
            TransferFn::Poly { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            TransferFn::Indicator { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            TransferFn::NegFloorLog2 => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    -(x.log2().floor())
                }
            }
        }
    }

    /// Deterministic `int_0^1 f(x) dx`: adaptive Simpson for the smooth
    /// entries, exact interval length for indicators, and the exact dyadic
    /// step series for the floor-log (a step function with breakpoints
    /// `2^-n`, summed to machine precision).
    pub fn interval_integral(&self) -> f64 {
        match self {
            TransferFn::Identity | TransferFn::Square | TransferFn::Poly { .. } => {
                adaptive_simpson(&|x| self.eval(x), 0.0, 1.0, 1e-12, 40)
            }
            TransferFn::Indicator { lo, hi } => (hi.min(1.0) - lo.max(0.0)).max(0.0),
            TransferFn::NegFloorLog2 => {
                // sum_{n>=1} n 2^-n over the steps (2^-n, 2^-(n-1)]
                let mut total = 0.0f64;
                for n in 1..64 {
                    total += n as f64 * 2.0f64.powi(-n);
                }
                total
            }
        }
    }

    /// Exact evaluation of the graph side through cylinder measures, where
    /// the function is an indicator with dyadic-rational breakpoints: the
    /// preimage of `[lo, hi]` under the dyadic map is a difference of
    /// balls, whose Haar measures are computed constructively.
    pub fn exact_graph_side(&self) -> Option<BigRational> {
        match self {
            TransferFn::Indicator { lo, hi } => {
                let lo_d = DyadicValue::from_f64_exact(lo.clamp(0.0, 1.0)).ok()?;
                let hi_d = DyadicValue::from_f64_exact(hi.clamp(0.0, 1.0)).ok()?;
                let zero = GraphRepr::zero();
                // mu(heart2 <= hi) = closed-ball measure, mu(heart2 < lo) = open
                let upper = if hi_d.is_one() {
                    BigRational::one()
                } else {
                    ball_measure_haar(&zero, &hi_d, BallKind::Closed).ok()?
                };
                let lower = ball_measure_haar(&zero, &lo_d, BallKind::Open).ok()?;
                Some(upper - lower)
            }
            _ => None,
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let whole = simpson(f, a, b);
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, eps / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, eps / 2.0, depth - 1)
    }
}

/// Both sides of the change-of-variables identity for a registry function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub graph_side: MCEstimate,
    pub interval_side: f64,
    /// number of sampled points where `f` was non-finite (excluded, per
    /// the measure-zero convention)
    pub nonfinite_hits: u64,
    /// exact rational pair (graph via cylinder measures, interval length)
    /// when the function admits the exact path
    pub exact_graph_side: Option<String>,
    pub exact_interval_side: Option<String>,
    pub exact_equal: Option<bool>,
}

/// Monte Carlo on the graph side (sampling truncations under Haar and
/// evaluating `f` at their dyadic values) against the deterministic
/// interval-side integral.
pub fn change_of_variables(
    f: &TransferFn,
    depth: u32,
    seed: u64,
    count: u64,
) -> Result<TransferReport, StatError> {
    let haar = ProbabilityAssignment::haar();
    let graph_side = mc_expect(
        |atom| {
            let v = f.eval(heart2_of_atom(atom));
            v.is_finite().then_some(v)
        },
        &haar,
        depth,
        seed,
        count,
    )?;
    let interval_side = f.interval_integral();
    let exact = f.exact_graph_side();
    let (exact_graph, exact_interval, exact_equal) = match (&exact, f) {
        (Some(g), TransferFn::Indicator { lo, hi }) => {
            let lo_r = BigRational::from_float(lo.clamp(0.0, 1.0)).unwrap_or_else(BigRational::zero);
            let hi_r = BigRational::from_float(hi.clamp(0.0, 1.0)).unwrap_or_else(BigRational::one);
            let length = hi_r - lo_r;
            (
                Some(g.to_string()),
                Some(length.to_string()),
                Some(*g == length),
            )
        }
        _ => (None, None, None),
    };
    Ok(TransferReport {
        nonfinite_hits: graph_side.undefined,
        graph_side,
        interval_side,
        exact_graph_side: exact_graph,
        exact_interval_side: exact_interval,
        exact_equal,
    })
}

/// Converse direction of the change of variables: integrates a graph
/// functional over `[0,1]` through the truncated finite-branch preimage,
/// by midpoint quadrature on the dyadic grid `2^-grid_bits`.
pub fn converse_integral<F>(g: F, grid_bits: u32, preimage_depth: u32) -> f64
where
    F: Fn(&GraphRepr) -> Option<f64>,
{
    let cells = 1u64 << grid_bits;
    let mut total = 0.0f64;
    let mut used = 0u64;
    for i in 0..cells {
        let x = (i as f64 + 0.5) / cells as f64;
        let pre = crate::metrics::preimage_prefix(x, preimage_depth).expect("x in (0,1)");
        if let Some(v) = g(&pre.graph) {
            total += v;
            used += 1;
        }
    }
    total / used.max(1) as f64
}
