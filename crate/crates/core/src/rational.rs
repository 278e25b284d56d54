//! Exact rational numbers and extended costs.
//!
//! [`Rational`] keeps values in lowest terms. Values whose numerator and
//! denominator fit in an `i64` use a machine-word representation; any
//! operation that would overflow transparently promotes to arbitrary
//! precision, and results that fit again are demoted, so the representation
//! is canonical and `Eq`/`Hash` can compare structurally.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number in lowest terms with a positive denominator.
#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    Small(Ratio<i64>),
    Big(BigRational),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {literal:?}: {reason}")]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: &'static str,
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(Ratio::from_integer(0)))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(Ratio::from_integer(1)))
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_small(Ratio::from_integer(n))
    }

    /// Builds `numer / denom`. Panics if `denom` is zero.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        if numer != i64::MIN && denom != i64::MIN {
            return Self::from_small(Ratio::new(numer, denom));
        }
        Self::from_big(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_big(value: BigRational) -> Self {
        match (value.numer().to_i64(), value.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN => Rational(Repr::Small(Ratio::new_raw(n, d))),
            _ => Rational(Repr::Big(value)),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Repr::Big(b) => b.clone(),
        }
    }

    fn from_small(value: Ratio<i64>) -> Self {
        if *value.numer() == i64::MIN {
            Self::from_big(BigRational::new(BigInt::from(*value.numer()), BigInt::from(*value.denom())))
        } else {
            Rational(Repr::Small(value))
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.numer()),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.denom()),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(b) => b.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => *r.numer() < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => *r.denom() == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(r) => Self::from_small(r.recip()),
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    /// Floor as an integer, if it fits in `i64`.
    pub fn floor_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(r) => Some(r.floor().to_integer()),
            Repr::Big(b) => b.floor().to_integer().to_i64(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Fixed-point decimal rendering with `places` digits, rounded half away from zero.
    pub fn to_decimal_string(&self, places: usize) -> String {
        let scale = BigInt::from(10u32).pow(places as u32);
        let big = self.to_big();
        let scaled = big * BigRational::from_integer(scale.clone());
        let rounded = scaled.round().to_integer();
        let negative = rounded.is_negative();
        let digits = rounded.abs().to_string();
        let digits = if digits.len() <= places {
            format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = digits.split_at(digits.len() - places);
        let sign = if negative { "-" } else { "" };
        if places == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }

    fn binop(
        &self,
        rhs: &Self,
        small: impl Fn(&Ratio<i64>, &Ratio<i64>) -> Option<Ratio<i64>>,
        big: impl Fn(BigRational, BigRational) -> BigRational,
    ) -> Self {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(r) = small(a, b) {
                return Self::from_small(r);
            }
        }
        Self::from_big(big(self.to_big(), rhs.to_big()))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a == b,
            (Repr::Big(a), Repr::Big(b)) => a == b,
            // canonical form: a value representable as Small is never Big
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.numer().hash(state);
                b.denom().hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident, $op:tt) => {
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                self.binop(rhs, |a, b| a.$checked(b), |a, b| a $op b)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add, +);
forward_binop!(Sub, sub, checked_sub, -);
forward_binop!(Mul, mul, checked_mul, *);

impl<'a> Div<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn div(self, rhs: &'a Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        self.binop(rhs, |a, b| a.checked_div(b), |a, b| a / b)
    }
}

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl<'a> Div<&'a Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: &'a Rational) -> Rational {
        &self / rhs
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            // numer != i64::MIN by construction
            Repr::Small(r) => Rational(Repr::Small(-*r)),
            Repr::Big(b) => Rational::from_big(-b.clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = &*self - rhs;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational::one()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Repr::Small(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_bigint(literal: &str, digits: &str) -> Result<BigInt, ParseRationalError> {
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRationalError { literal: literal.to_string(), reason: "expected digits" });
    }
    Ok(digits.parse::<BigInt>().expect("digits only"))
}

/// Parses decimal text (`-12.5`, `3`, `1e-3`, `2.5E2`) exactly.
fn parse_decimal(literal: &str, text: &str) -> Result<BigRational, ParseRationalError> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = text[pos + 1..]
                .parse()
                .map_err(|_| ParseRationalError { literal: literal.to_string(), reason: "bad exponent" })?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_digits, frac_digits) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_digits.is_empty() && frac_digits.is_empty() {
        return Err(ParseRationalError { literal: literal.to_string(), reason: "empty number" });
    }
    let all = format!("{int_digits}{frac_digits}");
    let mut value = BigRational::from_integer(parse_bigint(literal, &all)?);
    let shift = exponent - frac_digits.len() as i64;
    if shift.unsigned_abs() > 4096 {
        return Err(ParseRationalError { literal: literal.to_string(), reason: "exponent out of range" });
    }
    let scale = BigInt::from(10u32).pow(shift.unsigned_abs() as u32);
    if shift >= 0 {
        value *= BigRational::from_integer(scale);
    } else {
        value /= BigRational::from_integer(scale);
    }
    Ok(if negative { -value } else { value })
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `a/b` fractions and exact decimal literals (`0.6` is `3/5`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num = parse_decimal(s, num.trim())?;
            let den = parse_decimal(s, den.trim())?;
            if den.is_zero() {
                return Err(ParseRationalError { literal: s.to_string(), reason: "zero denominator" });
            }
            return Ok(Rational::from_big(num / den));
        }
        parse_decimal(s, text).map(Rational::from_big)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(deserializer)?;
        let text = match &value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(D::Error::custom(format!("expected number or fraction string, got {other}"))),
        };
        text.parse().map_err(D::Error::custom)
    }
}

/// A non-negative cost that may be infinite (goal never reached).
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Cost {
    Finite(Rational),
    Infinite,
}

impl Cost {
    pub fn zero() -> Self {
        Cost::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Cost::Finite(r) => Some(r),
            Cost::Infinite => None,
        }
    }

    pub fn add(&self, w: &Rational) -> Cost {
        match self {
            Cost::Finite(r) => Cost::Finite(r + w),
            Cost::Infinite => Cost::Infinite,
        }
    }

    /// `q * self` with the convention `0 * inf = 0`.
    pub fn scale(&self, q: &Rational) -> Cost {
        match self {
            _ if q.is_zero() => Cost::zero(),
            Cost::Finite(r) => Cost::Finite(r * q),
            Cost::Infinite => Cost::Infinite,
        }
    }

    pub fn plus(&self, other: &Cost) -> Cost {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl From<Rational> for Cost {
    fn from(r: Rational) -> Self {
        Cost::Finite(r)
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a.cmp(b),
            (Cost::Finite(_), Cost::Infinite) => Ordering::Less,
            (Cost::Infinite, Cost::Finite(_)) => Ordering::Greater,
            (Cost::Infinite, Cost::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(r) => fmt::Display::fmt(r, f),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Cost {
    type Err = ParseRationalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Cost::Infinite),
            other => other.parse().map(Cost::Finite),
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(deserializer)?;
        let text = match &value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(D::Error::custom(format!("expected cost, got {other}"))),
        };
        text.parse().map_err(D::Error::custom)
    }
}

/// Shorthand used throughout tests and fixtures.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom)
}
