//! Exact binary fractions in `[0,1]`.
//!
//! A [`DyadicValue`] stores a finite bit vector (coefficient of `2^-k` at
//! position `k`, most significant first) plus a tail flag: after the listed
//! bits the expansion continues with all zeros or all ones. An all-ones tail
//! after `len` bits contributes exactly `2^-len`, so every value is a dyadic
//! rational in `[0,1]` and both binary expansions of such a rational are
//! representable.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DyadicError {
    #[error("cannot parse {0:?} as a binary fraction")]
    Parse(String),
    #[error("value out of [0,1]")]
    OutOfRange,
    #[error("not a dyadic rational")]
    NotDyadic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Zeros,
    Ones,
}

/// Exact binary fraction in `[0,1]`: finite bits plus a constant tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DyadicWire", into = "DyadicWire")]
pub struct DyadicValue {
    bits: Vec<bool>,
    tail: Tail,
}

/// Serialized form: `{"bits":"0101","tail":"zeros"}`.
#[derive(Serialize, Deserialize)]
struct DyadicWire {
    bits: String,
    tail: Tail,
}

impl From<DyadicValue> for DyadicWire {
    fn from(d: DyadicValue) -> Self {
        DyadicWire {
            bits: d.bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            tail: d.tail,
        }
    }
}

impl TryFrom<DyadicWire> for DyadicValue {
    type Error = DyadicError;

    fn try_from(w: DyadicWire) -> Result<Self, Self::Error> {
        let mut bits = Vec::with_capacity(w.bits.len());
        for c in w.bits.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(DyadicError::Parse(w.bits)),
            }
        }
        Ok(DyadicValue::new(bits, w.tail))
    }
}

impl DyadicValue {
    /// Canonical constructor: trims trailing bits equal to the tail digit.
    pub fn new(mut bits: Vec<bool>, tail: Tail) -> Self {
        let pad = matches!(tail, Tail::Ones);
        while bits.last() == Some(&pad) {
            bits.pop();
        }
        DyadicValue { bits, tail }
    }

    pub fn zero() -> Self {
        DyadicValue::new(Vec::new(), Tail::Zeros)
    }

    pub fn one() -> Self {
        DyadicValue::new(Vec::new(), Tail::Ones)
    }

    /// Terminating expansion with set bits at the given 1-based positions.
    pub fn from_positions<I: IntoIterator<Item = u64>>(positions: I) -> Self {
        let pos: Vec<u64> = positions.into_iter().collect();
        let len = pos.iter().copied().max().unwrap_or(0) as usize;
        let mut bits = vec![false; len];
        for p in pos {
            bits[p as usize - 1] = true;
        }
        DyadicValue::new(bits, Tail::Zeros)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Digit `k` (1-based) of the infinite expansion this value denotes.
    pub fn expansion_bit(&self, k: u64) -> bool {
        let i = k as usize;
        if i >= 1 && i <= self.bits.len() {
            self.bits[i - 1]
        } else {
            matches!(self.tail, Tail::Ones)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| !b) && matches!(self.tail, Tail::Zeros)
    }

    pub fn is_one(&self) -> bool {
        self.bits.is_empty() && matches!(self.tail, Tail::Ones)
    }

    /// Exact value as a rational number.
    pub fn to_rational(&self) -> BigRational {
        let mut num = BigInt::zero();
        for &b in &self.bits {
            num = &num * 2 + if b { 1 } else { 0 };
        }
        if matches!(self.tail, Tail::Ones) {
            num += 1;
        }
        let den = BigInt::one() << self.bits.len();
        BigRational::new(num, den)
    }

    pub fn to_f64(&self) -> f64 {
        let mut x = 0.0f64;
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                x += 2.0f64.powi(-(i as i32 + 1));
            }
        }
        if matches!(self.tail, Tail::Ones) {
            x += 2.0f64.powi(-(self.bits.len() as i32));
        }
        x
    }

    /// The same value written with a zeros tail (terminating expansion).
    /// Returns `None` for the value 1, which has no terminating expansion.
    pub fn zeros_form(&self) -> Option<DyadicValue> {
        match self.tail {
            Tail::Zeros => Some(self.clone()),
            Tail::Ones => {
                // add 2^-len to the bit string
                let mut bits = self.bits.clone();
                loop {
                    match bits.pop() {
                        None => return None, // carried past the point: value is 1
                        Some(false) => {
                            bits.push(true);
                            return Some(DyadicValue::new(bits, Tail::Zeros));
                        }
                        Some(true) => continue,
                    }
                }
            }
        }
    }

    /// The same value written with a ones tail. Returns `None` for 0.
    pub fn ones_form(&self) -> Option<DyadicValue> {
        match self.tail {
            Tail::Ones => Some(self.clone()),
            Tail::Zeros => {
                // drop the last set bit; everything after becomes ones
                let mut bits = self.bits.clone();
                loop {
                    match bits.pop() {
                        None => return None, // value is 0
                        Some(true) => {
                            bits.push(false);
                            return Some(DyadicValue::new(bits, Tail::Ones));
                        }
                        Some(false) => continue,
                    }
                }
            }
        }
    }

    /// Exact conversion from an `f64` in `[0,1]` (every finite `f64` is a
    /// dyadic rational). Bails out after 1100 bits, which covers all of f64.
    pub fn from_f64_exact(x: f64) -> Result<DyadicValue, DyadicError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(DyadicError::OutOfRange);
        }
        if x == 1.0 {
            return Ok(DyadicValue::one());
        }
        let mut bits = Vec::new();
        let mut r = x;
        for _ in 0..1100 {
            if r == 0.0 {
                break;
            }
            r *= 2.0;
            if r >= 1.0 {
                bits.push(true);
                r -= 1.0;
            } else {
                bits.push(false);
            }
        }
        debug_assert_eq!(r, 0.0);
        Ok(DyadicValue::new(bits, Tail::Zeros))
    }

    /// Parses `"0.0110"` style binary strings, or a bare `"0"` / `"1"`.
    pub fn parse_binary(s: &str) -> Result<DyadicValue, DyadicError> {
        let s = s.trim();
        if s == "0" || s == "0." {
            return Ok(DyadicValue::zero());
        }
        if s == "1" || s == "1." {
            return Ok(DyadicValue::one());
        }
        let rest = s
            .strip_prefix("0.")
            .or_else(|| s.strip_prefix('.'))
            .ok_or_else(|| DyadicError::Parse(s.to_string()))?;
        if rest.is_empty() {
            return Err(DyadicError::Parse(s.to_string()));
        }
        let mut bits = Vec::with_capacity(rest.len());
        for c in rest.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(DyadicError::Parse(s.to_string())),
            }
        }
        Ok(DyadicValue::new(bits, Tail::Zeros))
    }

    /// Exact conversion from a rational in `[0,1]` whose denominator is a
    /// power of two.
    pub fn from_rational(r: &BigRational) -> Result<DyadicValue, DyadicError> {
        if r < &BigRational::zero() || r > &BigRational::one() {
            return Err(DyadicError::OutOfRange);
        }
        if r.is_one() {
            return Ok(DyadicValue::one());
        }
        let mut den = r.denom().clone();
        let mut k = 0usize;
        while (&den % 2) == BigInt::zero() {
            den /= 2;
            k += 1;
        }
        if !den.is_one() {
            return Err(DyadicError::NotDyadic);
        }
        let mut num = r.numer().clone();
        let mut bits = vec![false; k];
        for i in (0..k).rev() {
            if (&num % 2) == BigInt::one() {
                bits[i] = true;
            }
            num /= 2;
        }
        Ok(DyadicValue::new(bits, Tail::Zeros))
    }
}

impl std::fmt::Display for DyadicValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "0.")?;
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        match self.tail {
            Tail::Zeros => Ok(()),
            Tail::Ones => write!(f, "111..."),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn values() {
        assert_eq!(DyadicValue::zero().to_rational(), rat(0, 1));
        assert_eq!(DyadicValue::one().to_rational(), rat(1, 1));
        let half = DyadicValue::new(vec![true], Tail::Zeros);
        assert_eq!(half.to_rational(), rat(1, 2));
        // 0.0111... is also 1/2
        let half_ones = DyadicValue::new(vec![false], Tail::Ones);
        assert_eq!(half_ones.to_rational(), rat(1, 2));
        assert_ne!(half, half_ones); // distinct expansions
        let v = DyadicValue::from_positions([2u64, 4]);
        assert_eq!(v.to_rational(), rat(5, 16));
    }

    #[test]
    fn canonical_trimming() {
        let a = DyadicValue::new(vec![true, false, false], Tail::Zeros);
        assert_eq!(a.bits(), &[true]);
        let b = DyadicValue::new(vec![false, true, true], Tail::Ones);
        assert_eq!(b.bits(), &[false]);
        // all-ones with Ones tail collapses to 1
        let c = DyadicValue::new(vec![true, true], Tail::Ones);
        assert!(c.is_one());
    }

    #[test]
    fn expansion_forms() {
        let half = DyadicValue::new(vec![true], Tail::Zeros);
        let alt = half.ones_form().unwrap();
        assert_eq!(alt, DyadicValue::new(vec![false], Tail::Ones));
        assert_eq!(alt.zeros_form().unwrap(), half);
        assert!(DyadicValue::zero().ones_form().is_none());
        assert!(DyadicValue::one().zeros_form().is_none());
        // 0.101 -> ones form 0.100111...
        let v = DyadicValue::from_positions([1u64, 3]);
        let o = v.ones_form().unwrap();
        assert_eq!(o.to_rational(), v.to_rational());
        assert_eq!(o.tail(), Tail::Ones);
    }

    #[test]
    fn f64_and_parse() {
        let v = DyadicValue::from_f64_exact(0.375).unwrap();
        assert_eq!(v.to_rational(), rat(3, 8));
        assert_eq!(DyadicValue::parse_binary("0.011").unwrap(), v);
        assert_eq!(DyadicValue::parse_binary("1").unwrap(), DyadicValue::one());
        assert!(DyadicValue::parse_binary("0.012").is_err());
        let w = DyadicValue::from_rational(&rat(3, 8)).unwrap();
        assert_eq!(w, v);
        assert!(DyadicValue::from_rational(&rat(1, 3)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let v = DyadicValue::from_positions([1u64, 3]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"bits":"101","tail":"zeros"}"#);
        let back: DyadicValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
