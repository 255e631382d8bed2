//! Exact dyadic phases, bit strings, and the classical accumulator.
//!
//! Every phase in the algorithm path is a fraction `v / 2^p` of a full turn
//! held with an unbounded numerator, so no rounding ever happens between
//! stages no matter how many bits are being estimated.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QpeError, Result};

/// A phase `numerator / 2^precision_bits` in turns, always in `[0, 1)`.
///
/// Two phases compare equal when their values agree, regardless of the
/// precision they carry.
#[derive(Clone, Debug)]
pub struct BinaryPhase {
    numerator: BigUint,
    precision_bits: u32,
}

fn pow2(bits: u32) -> BigUint {
    BigUint::one() << bits as usize
}

impl BinaryPhase {
    pub fn new(numerator: BigUint, precision_bits: u32) -> Result<Self> {
        if numerator >= pow2(precision_bits) {
            return Err(QpeError::InvalidInput(format!(
                "numerator {numerator} does not fit in {precision_bits} fractional bits"
            )));
        }
        Ok(BinaryPhase {
            numerator,
            precision_bits,
        })
    }

    pub fn from_u64(numerator: u64, precision_bits: u32) -> Result<Self> {
        Self::new(BigUint::from(numerator), precision_bits)
    }

    pub fn zero() -> Self {
        BinaryPhase {
            numerator: BigUint::zero(),
            precision_bits: 0,
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// True when the phase is exactly one half turn.
    pub fn is_half(&self) -> bool {
        self.precision_bits >= 1 && self.numerator == pow2(self.precision_bits - 1)
    }

    /// Fewest fractional bits that represent this value exactly.
    pub fn min_bits(&self) -> u32 {
        match self.numerator.trailing_zeros() {
            None => 0,
            Some(tz) => self.precision_bits - tz as u32,
        }
    }

    pub fn normalized(&self) -> Self {
        let bits = self.min_bits();
        BinaryPhase {
            numerator: &self.numerator >> (self.precision_bits - bits) as usize,
            precision_bits: bits,
        }
    }

    /// Numerator rescaled to `bits` fractional bits. Caller guarantees
    /// `bits >= min_bits()`.
    fn numerator_at(&self, bits: u32) -> BigUint {
        if bits >= self.precision_bits {
            &self.numerator << (bits - self.precision_bits) as usize
        } else {
            &self.numerator >> (self.precision_bits - bits) as usize
        }
    }

    /// `self + other` reduced mod 1.
    pub fn add(&self, other: &BinaryPhase) -> BinaryPhase {
        let p = self.precision_bits.max(other.precision_bits);
        let sum = self.numerator_at(p) + other.numerator_at(p);
        let modulus = pow2(p);
        let numerator = if sum >= modulus { sum - modulus } else { sum };
        BinaryPhase {
            numerator,
            precision_bits: p,
        }
    }

    /// `self - other` reduced mod 1.
    pub fn sub(&self, other: &BinaryPhase) -> BinaryPhase {
        let p = self.precision_bits.max(other.precision_bits);
        let a = self.numerator_at(p);
        let b = other.numerator_at(p);
        let numerator = if a >= b { a - b } else { pow2(p) + a - b };
        BinaryPhase {
            numerator,
            precision_bits: p,
        }
    }

    /// `2^l * self` reduced mod 1.
    pub fn mul_pow2(&self, l: u32) -> BinaryPhase {
        if l >= self.precision_bits {
            return BinaryPhase {
                numerator: BigUint::zero(),
                precision_bits: self.precision_bits,
            };
        }
        let mask = pow2(self.precision_bits) - BigUint::one();
        BinaryPhase {
            numerator: (&self.numerator << l as usize) & mask,
            precision_bits: self.precision_bits,
        }
    }

    /// `self / 2^k`, exact.
    pub fn div_pow2(&self, k: u32) -> BinaryPhase {
        BinaryPhase {
            numerator: self.numerator.clone(),
            precision_bits: self.precision_bits + k,
        }
    }

    /// Nearest double. Only the top 64 significant bits are used.
    pub fn to_f64(&self) -> f64 {
        let shift = self.precision_bits.saturating_sub(64);
        let top = (&self.numerator >> shift as usize).to_u64().unwrap_or(u64::MAX);
        let exp = (self.precision_bits - shift) as i32;
        top as f64 * 2f64.powi(-exp)
    }

    /// Exact `n`-bit expansion, most significant bit first.
    pub fn to_bits(&self, n: u32) -> Result<BitString> {
        if self.min_bits() > n {
            return Err(QpeError::Precision {
                phase: self.to_string(),
                bits: n,
            });
        }
        let v = self.numerator_at(n);
        let bits = (0..n).rev().map(|i| v.bit(i as u64)).collect();
        Ok(BitString(bits))
    }

    /// Rational form `v/2^p`, e.g. `53/64`.
    pub fn to_ratio_string(&self) -> String {
        format!("{}/{}", self.numerator, pow2(self.precision_bits))
    }
}

/// Evaluates `sum_i c_i / 2^i` exactly; the result carries `bits.len()` bits.
pub fn fraction_from_bits(bits: &BitString) -> Result<BinaryPhase> {
    if bits.is_empty() {
        return Err(QpeError::InvalidInput("empty bit string".into()));
    }
    let mut numerator = BigUint::zero();
    for &b in bits.iter() {
        numerator <<= 1usize;
        if b {
            numerator += 1u32;
        }
    }
    Ok(BinaryPhase {
        numerator,
        precision_bits: bits.len() as u32,
    })
}

/// `F[j] = f(c_1..c_k) + F[j-1] / 2^k`.
pub fn accumulate(previous: &BinaryPhase, stage_bits: &BitString, k: usize) -> Result<BinaryPhase> {
    if stage_bits.len() != k {
        return Err(QpeError::InvalidInput(format!(
            "stage produced {} bits, expected {k}",
            stage_bits.len()
        )));
    }
    let head = fraction_from_bits(stage_bits)?;
    Ok(head.add(&previous.div_pow2(k as u32)))
}

pub fn phase_to_bits(phase: &BinaryPhase, n: u32) -> Result<BitString> {
    phase.to_bits(n)
}

/// Classical storage cost of the register model with 64-bit doubles:
/// `X`, `Y`, `k` angle registers, and `n` result bits.
pub fn paper_model_classical_bits(n: u64, k: u64) -> u64 {
    64 * (k + 2) + n
}

impl PartialEq for BinaryPhase {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BinaryPhase {}

impl Ord for BinaryPhase {
    fn cmp(&self, other: &Self) -> Ordering {
        let p = self.precision_bits.max(other.precision_bits);
        self.numerator_at(p).cmp(&other.numerator_at(p))
    }
}

impl PartialOrd for BinaryPhase {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for BinaryPhase {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let n = self.normalized();
        n.numerator.hash(state);
        n.precision_bits.hash(state);
    }
}

impl fmt::Display for BinaryPhase {
    /// Binary literal with exactly `precision_bits` digits, `0` when there are none.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.precision_bits == 0 {
            return f.write_str("0");
        }
        let bits = self
            .to_bits(self.precision_bits)
            .expect("a phase always fits its own precision");
        write!(f, "0.{bits}")
    }
}

/// Parses a phase literal: either binary (`0.110101`, `0`) or a ratio
/// whose denominator is a power of two (`53/64`).
impl FromStr for BinaryPhase {
    type Err = QpeError;

    fn from_str(s: &str) -> Result<Self> {
        match parse_literal(s)? {
            Literal::Dyadic(p) => Ok(p),
            Literal::Ratio(..) => Err(QpeError::InvalidInput(format!(
                "`{s}`: denominator is not a power of two"
            ))),
        }
    }
}

enum Literal {
    Dyadic(BinaryPhase),
    Ratio(u128, u128),
}

fn parse_literal(s: &str) -> Result<Literal> {
    let s = s.trim();
    let bad = |why: &str| QpeError::InvalidInput(format!("malformed phase literal `{s}`: {why}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: u128 = num.trim().parse().map_err(|_| bad("numerator"))?;
        let den: u128 = den.trim().parse().map_err(|_| bad("denominator"))?;
        if den == 0 {
            return Err(bad("zero denominator"));
        }
        if num >= den {
            return Err(bad("phase must lie in [0, 1)"));
        }
        if den.is_power_of_two() {
            let p = den.trailing_zeros();
            return Ok(Literal::Dyadic(BinaryPhase {
                numerator: BigUint::from(num),
                precision_bits: p,
            }));
        }
        return Ok(Literal::Ratio(num, den));
    }
    if s == "0" {
        return Ok(Literal::Dyadic(BinaryPhase::zero()));
    }
    let digits = s
        .strip_prefix("0.")
        .ok_or_else(|| bad("expected `0.<bits>` or `p/q`"))?;
    let bits: BitString = digits.parse().map_err(|_| bad("non-binary digit"))?;
    if bits.is_empty() {
        return Ok(Literal::Dyadic(BinaryPhase::zero()));
    }
    Ok(Literal::Dyadic(fraction_from_bits(&bits)?))
}

impl Serialize for BinaryPhase {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryPhase {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A phase in turns that is either exact or, for non-dyadic inputs, a double.
#[derive(Clone, Debug, PartialEq)]
pub enum Turns {
    Exact(BinaryPhase),
    Approx(f64),
}

impl Turns {
    pub fn zero() -> Self {
        Turns::Exact(BinaryPhase::zero())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Turns::Exact(p) => p.to_f64(),
            Turns::Approx(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Turns::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BinaryPhase> {
        match self {
            Turns::Exact(p) => Some(p),
            Turns::Approx(_) => None,
        }
    }

    pub fn add(&self, other: &Turns) -> Turns {
        match (self, other) {
            (Turns::Exact(a), Turns::Exact(b)) => Turns::Exact(a.add(b)),
            _ => Turns::Approx(wrap(self.to_f64() + other.to_f64())),
        }
    }

    pub fn sub(&self, other: &Turns) -> Turns {
        match (self, other) {
            (Turns::Exact(a), Turns::Exact(b)) => Turns::Exact(a.sub(b)),
            _ => Turns::Approx(wrap(self.to_f64() - other.to_f64())),
        }
    }

    /// `2^l * self` mod 1. Doubling a double and dropping the integer part
    /// are both exact, so the approximate branch adds no error of its own.
    pub fn mul_pow2(&self, l: u32) -> Turns {
        match self {
            Turns::Exact(p) => Turns::Exact(p.mul_pow2(l)),
            Turns::Approx(v) => {
                let mut x = *v;
                for _ in 0..l.min(1100) {
                    x = wrap(2.0 * x);
                    if x == 0.0 {
                        break;
                    }
                }
                Turns::Approx(x)
            }
        }
    }

    /// Probability of reading 1 after a Hadamard on `(|0> + e^{2 pi i theta}|1>)/sqrt 2`,
    /// i.e. `sin^2(pi theta)`. Exact at 0 and 1/2.
    pub fn prob_one(&self) -> f64 {
        if let Turns::Exact(p) = self {
            if p.is_zero() {
                return 0.0;
            }
            if p.is_half() {
                return 1.0;
            }
        }
        let s = (std::f64::consts::PI * self.to_f64()).sin();
        s * s
    }
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl From<BinaryPhase> for Turns {
    fn from(p: BinaryPhase) -> Self {
        Turns::Exact(p)
    }
}

impl fmt::Display for Turns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Turns::Exact(p) => p.fmt(f),
            Turns::Approx(v) => write!(f, "{v}"),
        }
    }
}

/// Accepts everything [`BinaryPhase`] does, plus ratios with any
/// denominator, which become approximate.
impl FromStr for Turns {
    type Err = QpeError;

    fn from_str(s: &str) -> Result<Self> {
        match parse_literal(s)? {
            Literal::Dyadic(p) => Ok(Turns::Exact(p)),
            Literal::Ratio(n, d) => Ok(Turns::Approx(n as f64 / d as f64)),
        }
    }
}

/// Bits ordered most significant first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &bool> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// `self` followed by `tail`.
    pub fn concat(&self, tail: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        BitString(v)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> BitString {
        BitString(self.0[range].to_vec())
    }

    /// Bits of `value` in `width` positions, most significant first.
    pub fn from_u64(value: u64, width: usize) -> BitString {
        BitString((0..width).rev().map(|i| (value >> i) & 1 == 1).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = QpeError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(QpeError::InvalidInput(format!("`{other}` is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Registers `X = F[j]` and `Y = F[j-1]` with the full history `F[0..=j]`.
#[derive(Clone, Debug)]
pub struct ClassicalAccumulator {
    current: BinaryPhase,
    previous: BinaryPhase,
    history: Vec<BinaryPhase>,
}

impl Default for ClassicalAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl ClassicalAccumulator {
    pub fn new() -> Self {
        ClassicalAccumulator {
            current: BinaryPhase::zero(),
            previous: BinaryPhase::zero(),
            history: vec![BinaryPhase::zero()],
        }
    }

    /// Folds one stage's bits into `X` and returns the new value.
    pub fn push_stage(&mut self, stage_bits: &BitString) -> Result<&BinaryPhase> {
        let next = accumulate(&self.current, stage_bits, stage_bits.len())?;
        self.previous = std::mem::replace(&mut self.current, next);
        self.history.push(self.current.clone());
        Ok(&self.current)
    }

    pub fn current(&self) -> &BinaryPhase {
        &self.current
    }

    pub fn previous(&self) -> &BinaryPhase {
        &self.previous
    }

    pub fn history(&self) -> &[BinaryPhase] {
        &self.history
    }

    pub fn into_history(self) -> Vec<BinaryPhase> {
        self.history
    }
}
