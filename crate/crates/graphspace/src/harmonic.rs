//! Characters, the fast Walsh–Hadamard transform, and positive
//! definiteness.
//!
//! The characters of the edge-set group are `chi_E(G) = (-1)^{|E ∩ G|}`
//! for finite `E`; restricted to a depth-`d` truncation they are the
//! Walsh functions on `2^d` points, indexed subset-rank style: bit `k-1`
//! of the row index corresponds to edge index `k`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphRepr, TruncatedAtom, MAX_ATOM_DEPTH};

#[derive(Debug, Error)]
pub enum HarmonicError {
    #[error("character index must be a finite graph")]
    InfiniteCharacter,
    #[error("transform depth {0} exceeds the supported maximum {max}", max = MAX_ATOM_DEPTH)]
    DepthLimit(u32),
    #[error("spectrum length {0} is not 2^depth for depth {1}")]
    LengthMismatch(usize, u32),
    #[error("measure weights must be nonnegative and sum to 1 (sum = {0})")]
    InvalidMeasure(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// `chi_E(G) = (-1)^{|E ∩ G|}`; the index `E` must be finite.
pub fn walsh_eval(e: &GraphRepr, g: &GraphRepr) -> Result<i32, HarmonicError> {
    match e.kind() {
        crate::graph::GraphKind::CoFinite => Err(HarmonicError::InfiniteCharacter),
        crate::graph::GraphKind::Finite => {
            let parity = e
                .support()
                .iter()
                .filter(|&&n| g.contains_edge(n))
                .count()
                % 2;
            Ok(if parity == 0 { 1 } else { -1 })
        }
    }
}

/// Character value against a truncation mask (indices above the depth are
/// treated as absent).
pub fn walsh_eval_atom(e_mask: u64, atom: &TruncatedAtom) -> i32 {
    let mut parity = 0u32;
    let mut m = e_mask;
    while m != 0 {
        let k = m.trailing_zeros() as u64 + 1;
        if atom.bit(k) {
            parity ^= 1;
        }
        m &= m - 1;
    }
    if parity == 0 {
        1
    } else {
        -1
    }
}

fn check_depth(depth: u32, len: usize) -> Result<(), HarmonicError> {
    if depth > MAX_ATOM_DEPTH {
        return Err(HarmonicError::DepthLimit(depth));
    }
    if len != 1usize << depth {
        return Err(HarmonicError::LengthMismatch(len, depth));
    }
    Ok(())
}

/// Walsh spectrum of a function on the depth-`d` truncation lattice,
/// subset-rank indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshSpectrum {
    pub depth: u32,
    pub coeffs: Vec<f64>,
}

impl WalshSpectrum {
    /// File format: a little-endian `u64` depth header, then `2^depth`
    /// little-endian `f64` coefficients in subset-rank order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), HarmonicError> {
        check_depth(self.depth, self.coeffs.len())?;
        w.write_all(&(self.depth as u64).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, HarmonicError> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let depth = u64::from_le_bytes(word) as u32;
        if depth > MAX_ATOM_DEPTH {
            return Err(HarmonicError::DepthLimit(depth));
        }
        let n = 1usize << depth;
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut word)?;
            coeffs.push(f64::from_le_bytes(word));
        }
        Ok(WalshSpectrum { depth, coeffs })
    }
}

fn butterfly_f64(data: &mut [f64]) {
    let n = data.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Forward transform: `c_E = 2^-d sum_G f(G) chi_E(G)`.
pub fn wht_forward(values: &[f64], depth: u32) -> Result<WalshSpectrum, HarmonicError> {
    check_depth(depth, values.len())?;
    let mut coeffs = values.to_vec();
    butterfly_f64(&mut coeffs);
    let scale = (values.len() as f64).recip();
    for c in &mut coeffs {
        *c *= scale;
    }
    Ok(WalshSpectrum { depth, coeffs })
}

/// Inverse transform (unscaled butterfly): `f(G) = sum_E c_E chi_E(G)`.
pub fn wht_inverse(spectrum: &WalshSpectrum) -> Result<Vec<f64>, HarmonicError> {
    check_depth(spectrum.depth, spectrum.coeffs.len())?;
    let mut values = spectrum.coeffs.clone();
    butterfly_f64(&mut values);
    Ok(values)
}

/// Integer butterfly, exact; `wht_integer(wht_integer(v)) = 2^d v` and the
/// character rows are exactly orthogonal in this arithmetic.
pub fn wht_integer(values: &[i64], depth: u32) -> Result<Vec<i64>, HarmonicError> {
    check_depth(depth, values.len())?;
    let mut data = values.to_vec();
    let n = data.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
    Ok(data)
}

/// Full character table at the given depth; `table[e][g] = chi_e(g)`.
pub fn walsh_table(depth: u32) -> Result<Vec<Vec<i8>>, HarmonicError> {
    if depth > 12 {
        return Err(HarmonicError::DepthLimit(depth));
    }
    let n = 1usize << depth;
    let mut table = vec![vec![0i8; n]; n];
    for e in 0..n {
        for g in 0..n {
            table[e][g] = if (e & g).count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(table)
}

/// Pointwise spectral product — the transform of the convolution of the
/// underlying functions under normalized counting measure.
pub fn spectrum_convolve(
    a: &WalshSpectrum,
    b: &WalshSpectrum,
) -> Result<WalshSpectrum, HarmonicError> {
    if a.depth != b.depth {
        return Err(HarmonicError::LengthMismatch(b.coeffs.len(), a.depth));
    }
    check_depth(a.depth, a.coeffs.len())?;
    Ok(WalshSpectrum {
        depth: a.depth,
        coeffs: a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x * y)
            .collect(),
    })
}

/// A finitely supported probability measure on finite graphs, the input
/// to Bochner synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSupportMeasure {
    pub support: Vec<GraphRepr>,
    pub weights: Vec<f64>,
}

impl FiniteSupportMeasure {
    pub fn new(support: Vec<GraphRepr>, weights: Vec<f64>) -> Result<Self, HarmonicError> {
        if support.len() != weights.len() {
            return Err(HarmonicError::LengthMismatch(weights.len(), 0));
        }
        for h in &support {
            if matches!(h.kind(), crate::graph::GraphKind::CoFinite) {
                return Err(HarmonicError::InfiniteCharacter);
            }
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(HarmonicError::InvalidMeasure(f64::NAN));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HarmonicError::InvalidMeasure(sum));
        }
        for i in 0..support.len() {
            for j in i + 1..support.len() {
                if support[i] == support[j] {
                    return Err(HarmonicError::InvalidMeasure(sum));
                }
            }
        }
        Ok(FiniteSupportMeasure { support, weights })
    }

    /// The transform `f(G) = sum_i w_i chi_{H_i}(G)` — a positive definite
    /// function with `f(0) = 1` and `|f| <= 1`.
    pub fn synthesize(&self) -> PdFunction {
        PdFunction {
            measure: self.clone(),
        }
    }
}

/// Positive definite function realized as the transform of a finitely
/// supported measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdFunction {
    pub measure: FiniteSupportMeasure,
}

impl PdFunction {
    pub fn eval(&self, g: &GraphRepr) -> f64 {
        self.measure
            .support
            .iter()
            .zip(&self.measure.weights)
            .map(|(h, w)| w * walsh_eval(h, g).expect("finite support") as f64)
            .sum()
    }
}

/// PSD verdict on the Gram matrix `[f(G_i - G_j)]` (difference = symmetric
/// difference, the group operation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub size: usize,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub tolerance: f64,
}

pub fn gram_check(f: &PdFunction, points: &[GraphRepr], tolerance: f64) -> GramReport {
    let n = points.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = f.eval(&points[i].sym_diff(&points[j]));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let eigen = SymmetricEigen::new(m);
    let min_eigenvalue = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    GramReport {
        size: n,
        min_eigenvalue,
        psd: min_eigenvalue >= -tolerance,
        tolerance,
    }
}

/// Recovers a character's index by probing with singletons: bit `k` of
/// the index is set iff `chi({k})` evaluates to -1 under the character
/// `chi_E`, i.e. iff `k ∈ E`. Exact for finite `E` bounded by
/// `max_index`.
pub fn dual_roundtrip(e: &GraphRepr, max_index: u64) -> Result<GraphRepr, HarmonicError> {
    let mut recovered = Vec::new();
    for k in 1..=max_index {
        if walsh_eval(e, &GraphRepr::finite([k]))? == -1 {
            recovered.push(k);
        }
    }
    Ok(GraphRepr::finite(recovered))
}
