//! Product measures on graph space.
//!
//! Exact cylinder measures under an edge-indexed Bernoulli assignment, the
//! constructive ball-measure computation for the Haar case, point-mass
//! profiles, and reproducible seeded sampling of depth-`d` truncations.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{DyadicValue, Tail};
use crate::graph::{BallKind, CylinderSet, GraphRepr, TruncatedAtom};
use crate::labelling::EdgeIndex;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("probability {0} is outside [0,1]")]
    InvalidProbability(String),
    #[error("a ones-tail radius has no terminating expansion; use the dyadic bracketing helper")]
    UnsupportedExactRadius,
    #[error("requested {0} samples x depth {1} exceeds the resource budget")]
    SampleBudget(u64, u32),
}

fn check_prob(p: &BigRational) -> Result<(), MeasureError> {
    if p < &BigRational::zero() || p > &BigRational::one() {
        return Err(MeasureError::InvalidProbability(p.to_string()));
    }
    Ok(())
}

/// Edge-indexed Bernoulli parameters: a constant, or a finite table over
/// low indices with a constant default. Probabilities are kept as exact
/// rationals; decimal inputs parse exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilityAssignment {
    Constant {
        #[serde(with = "rational_string")]
        p: BigRational,
    },
    Table {
        #[serde(with = "rational_vec_string")]
        entries: Vec<BigRational>,
        #[serde(with = "rational_string")]
        default: BigRational,
    },
}

mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

mod rational_vec_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(|r| r.to_string()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let strs: Vec<String> = Vec::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Parses `"1/2"`, `"0.3"`, or `"1"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.trim().parse().map_err(|e| format!("{e}"))?;
        let den: BigInt = d.trim().parse().map_err(|e| format!("{e}"))?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int_part: BigInt = if int.is_empty() {
            BigInt::zero()
        } else {
            int.parse().map_err(|e| format!("{e}"))?
        };
        let digits = frac.len() as u32;
        let frac_part: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse().map_err(|e| format!("{e}"))?
        };
        let den = BigInt::from(10).pow(digits);
        let num = int_part * &den + frac_part;
        return Ok(BigRational::new(num, den));
    }
    let num: BigInt = s.parse().map_err(|e| format!("{e}"))?;
    Ok(BigRational::from_integer(num))
}

impl ProbabilityAssignment {
    pub fn constant(p: BigRational) -> Result<Self, MeasureError> {
        check_prob(&p)?;
        Ok(ProbabilityAssignment::Constant { p })
    }

    pub fn table(entries: Vec<BigRational>, default: BigRational) -> Result<Self, MeasureError> {
        for p in entries.iter().chain(std::iter::once(&default)) {
            check_prob(p)?;
        }
        Ok(ProbabilityAssignment::Table { entries, default })
    }

    pub fn haar() -> Self {
        ProbabilityAssignment::Constant {
            p: BigRational::new(BigInt::one(), BigInt::from(2)),
        }
    }

    pub fn is_haar(&self) -> bool {
        matches!(self, ProbabilityAssignment::Constant { p }
            if *p == BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    pub fn p(&self, n: EdgeIndex) -> BigRational {
        match self {
            ProbabilityAssignment::Constant { p } => p.clone(),
            ProbabilityAssignment::Table { entries, default } => {
                if (n as usize) <= entries.len() {
                    entries[n as usize - 1].clone()
                } else {
                    default.clone()
                }
            }
        }
    }

    pub fn p_f64(&self, n: EdgeIndex) -> f64 {
        self.p(n).to_f64().unwrap_or(0.0)
    }

    /// Bernoulli thresholds `floor(p * 2^64)` for indices `1..=depth`.
    fn thresholds(&self, depth: u32) -> Vec<u128> {
        (1..=depth as u64).map(|n| threshold(&self.p(n))).collect()
    }
}

fn threshold(p: &BigRational) -> u128 {
    if p.is_one() {
        return 1u128 << 64;
    }
    let scaled = (p.numer() << 64u32) / p.denom();
    scaled.to_u128().unwrap_or(0)
}

/// Exact product-formula measure of a cylinder set:
/// factors `1 - P` over forbidden indices and `P` over required ones.
pub fn cylinder_measure(cyl: &CylinderSet, p: &ProbabilityAssignment) -> BigRational {
    let mut m = BigRational::one();
    for &n in cyl.forbidden() {
        m *= BigRational::one() - p.p(n);
    }
    for &n in cyl.required() {
        m *= p.p(n);
    }
    m
}

/// Haar measure of a dyadic-radius ball, computed constructively from the
/// cylinder decomposition of `[0, eps)` rather than by returning the
/// radius: each set bit `n_i` of `eps` contributes the cylinder fixing the
/// earlier set bits as required, the other indices up to `n_i` as
/// forbidden. Centers are immaterial by translation invariance; closed and
/// open balls differ by a measure-zero sphere.
pub fn ball_measure_haar(
    center: &GraphRepr,
    radius: &DyadicValue,
    kind: BallKind,
) -> Result<BigRational, MeasureError> {
    let _ = center;
    if radius.is_one() {
        // the whole space (open: minus one point)
        return Ok(cylinder_measure(&CylinderSet::full(), &ProbabilityAssignment::haar()));
    }
    if matches!(radius.tail(), Tail::Ones) {
        return Err(MeasureError::UnsupportedExactRadius);
    }
    let haar = ProbabilityAssignment::haar();
    let set_bits: Vec<u64> = radius
        .bits()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64 + 1)
        .collect();
    let mut total = BigRational::zero();
    let mut required: Vec<u64> = Vec::new();
    for &nk in &set_bits {
        let forbidden: Vec<u64> = (1..=nk).filter(|i| !required.contains(i)).collect();
        let piece = CylinderSet::new(forbidden, required.iter().copied())
            .expect("disjoint by construction");
        total += cylinder_measure(&piece, &haar);
        required.push(nk);
    }
    // the doubleton of boundary expansions and, for closed balls, the
    // sphere are countable, hence of measure zero
    let _ = kind;
    Ok(total)
}

/// Certified interval for a non-dyadic radius: measures of the truncated
/// expansion (below) and its increment (above).
pub fn ball_measure_bracket(
    center: &GraphRepr,
    radius: f64,
    bits: u32,
) -> Result<(BigRational, BigRational), MeasureError> {
    let mut lower_bits = Vec::with_capacity(bits as usize);
    let mut r = radius.clamp(0.0, 1.0);
    for _ in 0..bits {
        r *= 2.0;
        if r >= 1.0 {
            lower_bits.push(true);
            r -= 1.0;
        } else {
            lower_bits.push(false);
        }
    }
    let lower = DyadicValue::new(lower_bits, Tail::Zeros);
    let lo = ball_measure_haar(center, &lower, BallKind::Open)?;
    let ulp = BigRational::new(BigInt::one(), BigInt::one() << bits as usize);
    let hi = (&lo + ulp).min(BigRational::one());
    Ok((lo, hi))
}

/// Point-mass profile of a product measure: the non-increasing partial
/// products `pi_n = prod max(P, 1-P)` and the prefix of the maximal-mass
/// graph `{ e : P(e) >= 1/2 }`.
pub fn atom_mass_profile(
    p: &ProbabilityAssignment,
    depth: u32,
) -> (Vec<BigRational>, Vec<bool>) {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut pis = Vec::with_capacity(depth as usize);
    let mut prefix = Vec::with_capacity(depth as usize);
    let mut acc = BigRational::one();
    for n in 1..=depth as u64 {
        let pn = p.p(n);
        let qn = BigRational::one() - &pn;
        let hi = if pn >= half { pn.clone() } else { qn };
        prefix.push(pn >= half);
        acc *= hi;
        pis.push(acc.clone());
    }
    (pis, prefix)
}

/// A reproducible batch of depth-`d` truncations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub depth: u32,
    pub seed: u64,
    pub count: u64,
    pub atoms: Vec<TruncatedAtom>,
}

pub const MAX_SAMPLE_BITS: u64 = 1 << 33;

/// One sample row; pure in `(P, depth, seed, index)`.
pub fn sample_atom(
    thresholds: &[u128],
    depth: u32,
    seed: u64,
    index: u64,
) -> TruncatedAtom {
    let mut atom = TruncatedAtom::empty(depth);
    for k in 0..depth as u64 {
        if rng::bernoulli(seed, index, k, thresholds[k as usize]) {
            atom.set_bit(k + 1, true);
        }
    }
    atom
}

/// Draws `count` independent rows under the product measure. Rows are
/// keyed by sample index, so the output does not depend on how the work
/// is partitioned across threads.
pub fn sample(
    p: &ProbabilityAssignment,
    depth: u32,
    seed: u64,
    count: u64,
) -> Result<SampleBatch, MeasureError> {
    if (depth as u64).checked_mul(count).map_or(true, |b| b > MAX_SAMPLE_BITS) {
        return Err(MeasureError::SampleBudget(count, depth));
    }
    let thresholds = p.thresholds(depth);
    let atoms: Vec<TruncatedAtom> = (0..count)
        .into_par_iter()
        .map(|i| sample_atom(&thresholds, depth, seed, i))
        .collect();
    Ok(SampleBatch {
        depth,
        seed,
        count,
        atoms,
    })
}

/// Streams sample values through a functional without materializing rows;
/// the result vector is ordered by sample index.
pub fn sample_map<F, T>(
    p: &ProbabilityAssignment,
    depth: u32,
    seed: u64,
    count: u64,
    f: F,
) -> Result<Vec<T>, MeasureError>
where
    F: Fn(&TruncatedAtom) -> T + Sync,
    T: Send,
{
    if (depth as u64).checked_mul(count).map_or(true, |b| b > MAX_SAMPLE_BITS) {
        return Err(MeasureError::SampleBudget(count, depth));
    }
    let thresholds = p.thresholds(depth);
    Ok((0..count)
        .into_par_iter()
        .map(|i| f(&sample_atom(&thresholds, depth, seed, i)))
        .collect())
}

impl SampleBatch {
    /// Binary frame: `depth`, `count`, `seed` as little-endian u64, then
    /// packed bit rows (bit `k-1` of a row = membership of index `k`).
    pub fn to_frame(&self) -> Vec<u8> {
        let row_bytes = ((self.depth as usize) + 7) / 8;
        let mut out = Vec::with_capacity(24 + row_bytes * self.atoms.len());
        out.extend_from_slice(&(self.depth as u64).to_le_bytes());
        out.extend_from_slice(&self.count.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for atom in &self.atoms {
            out.extend_from_slice(&atom.to_bytes());
        }
        out
    }

    pub fn from_frame(frame: &[u8]) -> Option<SampleBatch> {
        if frame.len() < 24 {
            return None;
        }
        let depth = u64::from_le_bytes(frame[0..8].try_into().ok()?) as u32;
        let count = u64::from_le_bytes(frame[8..16].try_into().ok()?);
        let seed = u64::from_le_bytes(frame[16..24].try_into().ok()?);
        let row_bytes = ((depth as usize) + 7) / 8;
        let body = &frame[24..];
        if body.len() != row_bytes * count as usize {
            return None;
        }
        let atoms = body
            .chunks(row_bytes.max(1))
            .take(count as usize)
            .map(|row| TruncatedAtom::from_bytes(depth, row))
            .collect();
        Some(SampleBatch {
            depth,
            seed,
            count,
            atoms,
        })
    }
}

/// Formats an exact rational as `num/den` plus a decimal approximation.
pub fn rational_report(r: &BigRational) -> (String, f64) {
    (format!("{}/{}", r.numer(), r.denom()), r.to_f64().unwrap_or(f64::NAN))
}
