//! Exact arithmetic in a real quadratic field `Q(√N)`.
//!
//! A value is `a + b√N` with rational `a`, `b`. A number with `b = 0` is
//! stored with `radicand = 0` and combines with any field; mixing two
//! genuinely different radicands is a programming error and panics.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct ExactNumber {
    a: BigRational,
    b: BigRational,
    radicand: u32,
}

pub fn is_square_free(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u32;
    while k.saturating_mul(k) <= n {
        if n % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

fn join_radicand(x: u32, y: u32) -> u32 {
    match (x, y) {
        (0, r) | (r, 0) => r,
        (r, s) if r == s => r,
        (r, s) => panic!("mixing Q(sqrt {r}) with Q(sqrt {s})"),
    }
}

impl ExactNumber {
    /// `a + b√N`; `N` must be square-free and at least 2 unless `b = 0`.
    pub fn new(a: BigRational, b: BigRational, radicand: u32) -> Result<Self> {
        if !b.is_zero() && !is_square_free(radicand) {
            return Err(Error::BadInput(format!("radicand {radicand} is not square-free")));
        }
        Ok(Self::raw(a, b, radicand))
    }

    fn raw(a: BigRational, b: BigRational, radicand: u32) -> Self {
        let radicand = if b.is_zero() { 0 } else { radicand };
        Self { a, b, radicand }
    }

    pub fn rational(q: BigRational) -> Self {
        Self::raw(q, BigRational::zero(), 0)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `√N` itself.
    pub fn sqrt(radicand: u32) -> Result<Self> {
        Self::new(BigRational::zero(), BigRational::one(), radicand)
    }

    /// `(p + q√N) / r` from small integers, handy in tests and examples.
    pub fn quadratic(p: i64, q: i64, r: i64, radicand: u32) -> Result<Self> {
        let den = BigInt::from(r);
        Self::new(BigRational::new(p.into(), den.clone()), BigRational::new(q.into(), den), radicand)
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    /// The radicand, or `0` for a rational value.
    pub fn radicand(&self) -> u32 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        sign_of(&self.a, &self.b, &BigRational::from_integer(self.radicand.into()))
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn conjugate(&self) -> Self {
        Self::raw(self.a.clone(), -self.b.clone(), self.radicand)
    }

    /// `a² − N b²`.
    pub fn norm(&self) -> BigRational {
        let n = BigRational::from_integer(self.radicand.into());
        &self.a * &self.a - n * &self.b * &self.b
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        let norm = self.norm();
        let c = self.conjugate();
        Self::raw(c.a / &norm, c.b / norm, self.radicand)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Display-only decimal approximation.
    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * f64::from(self.radicand).sqrt()
    }

    pub fn mul_int(&self, k: u64) -> Self {
        let k = BigRational::from_integer(k.into());
        Self::raw(&self.a * &k, &self.b * k, self.radicand)
    }
}

/// Exact sign of `a + b√n`, decided by comparing squares.
pub(crate) fn sign_of<T: Signed + Clone + Ord>(a: &T, b: &T, n: &T) -> Ordering {
    let sgn = |v: &T| if v.is_zero() { Ordering::Equal } else if v.is_positive() { Ordering::Greater } else { Ordering::Less };
    match (sgn(a), sgn(b)) {
        (x, Ordering::Equal) => x,
        (Ordering::Equal, y) => y,
        (x, y) if x == y => x,
        (x, _) => {
            let a2 = a.clone() * a.clone();
            let b2 = n.clone() * b.clone() * b.clone();
            match a2.cmp(&b2) {
                Ordering::Equal => Ordering::Equal,
                Ordering::Greater => x,
                Ordering::Less => x.reverse(),
            }
        }
    }
}

impl PartialEq for ExactNumber {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && (self.b.is_zero() || self.radicand == other.radicand)
    }
}

impl Eq for ExactNumber {}

impl Hash for ExactNumber {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        self.radicand.hash(state);
    }
}

impl PartialOrd for ExactNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $body:expr) => {
        impl<'a> $tr<&'a ExactNumber> for &'a ExactNumber {
            type Output = ExactNumber;
            fn $f(self, rhs: &'a ExactNumber) -> ExactNumber {
                let g: fn(&ExactNumber, &ExactNumber) -> ExactNumber = $body;
                g(self, rhs)
            }
        }
        impl $tr for ExactNumber {
            type Output = ExactNumber;
            fn $f(self, rhs: ExactNumber) -> ExactNumber {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a ExactNumber> for ExactNumber {
            type Output = ExactNumber;
            fn $f(self, rhs: &'a ExactNumber) -> ExactNumber {
                (&self).$f(rhs)
            }
        }
    };
}

binop!(Add, add, |x, y| {
    let r = join_radicand(x.radicand, y.radicand);
    ExactNumber::raw(&x.a + &y.a, &x.b + &y.b, r)
});
binop!(Sub, sub, |x, y| {
    let r = join_radicand(x.radicand, y.radicand);
    ExactNumber::raw(&x.a - &y.a, &x.b - &y.b, r)
});
binop!(Mul, mul, |x, y| {
    let r = join_radicand(x.radicand, y.radicand);
    let n = BigRational::from_integer(r.into());
    let a = &x.a * &y.a + n * &x.b * &y.b;
    let b = &x.a * &y.b + &x.b * &y.a;
    ExactNumber::raw(a, b, r)
});
binop!(Div, div, |x, y| x * &y.recip());

impl Neg for ExactNumber {
    type Output = ExactNumber;
    fn neg(self) -> ExactNumber {
        ExactNumber::raw(-self.a, -self.b, self.radicand)
    }
}

impl std::iter::Sum for ExactNumber {
    fn sum<I: Iterator<Item = ExactNumber>>(iter: I) -> Self {
        iter.fold(ExactNumber::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for ExactNumber {
    /// `a`, `b*sqrtN`, or `a+b*sqrtN`; parsed back by `FromStr`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let coef = |b: &BigRational| if b.is_one() { String::new() } else { format!("{b}*") };
        if self.a.is_zero() {
            if self.b == -BigRational::one() {
                return write!(f, "-sqrt{}", self.radicand);
            }
            return write!(f, "{}sqrt{}", coef(&self.b), self.radicand);
        }
        if self.b.is_negative() {
            write!(f, "{}-{}sqrt{}", self.a, coef(&-self.b.clone()), self.radicand)
        } else {
            write!(f, "{}+{}sqrt{}", self.a, coef(&self.b), self.radicand)
        }
    }
}

impl fmt::Debug for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (~{:.6})", self.to_f64())
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl FromStr for ExactNumber {
    type Err = Error;

    /// Grammar: `[a][(+|-)[b*]sqrtN]` with rationals `a`, `b`, e.g. `-1+sqrt2`,
    /// `1/3-2/5*sqrt5`, `sqrt5`, `3/4`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(pos) = s.find("sqrt") else {
            return Ok(Self::rational(parse_rational(&s)?));
        };
        let radicand: u32 = s[pos + 4..].parse().map_err(|_| Error::Parse(format!("bad radicand in {s:?}")))?;
        let head = &s[..pos];
        let head = head.strip_suffix('*').unwrap_or(head);
        // split head into rational part and coefficient at the last sign that is not leading
        let split = head
            .char_indices()
            .filter(|&(i, c)| i > 0 && (c == '+' || c == '-') && !head[..i].ends_with('/'))
            .map(|(i, _)| i)
            .last();
        let (a_str, b_str) = match split {
            Some(i) => (&head[..i], &head[i..]),
            None => ("", head),
        };
        let a = if a_str.is_empty() { BigRational::zero() } else { parse_rational(a_str)? };
        let b = match b_str {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            t => parse_rational(t.strip_prefix('+').unwrap_or(t))?,
        };
        Self::new(a, b, radicand)
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ExactNumberJson {
    pub a: String,
    pub b: String,
}

impl ExactNumber {
    pub(crate) fn to_json(&self) -> ExactNumberJson {
        ExactNumberJson { a: self.a.to_string(), b: self.b.to_string() }
    }

    pub(crate) fn from_json(j: &ExactNumberJson, radicand: u32) -> Result<Self> {
        Self::new(parse_rational(&j.a)?, parse_rational(&j.b)?, radicand)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(s: &str) -> ExactNumber {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        for s in ["3/4", "-1+sqrt2", "1/3-2/5*sqrt5", "sqrt5", "-sqrt5", "2*sqrt3", "-1/2+1/2*sqrt5"] {
            let v = x(s);
            assert_eq!(x(&v.to_string()), v, "{s}");
        }
        assert_eq!(x("-1+sqrt2").to_string(), "-1+sqrt2");
        assert!("1+sqrt4".parse::<ExactNumber>().is_err());
    }

    #[test]
    fn golden_ratio_identities() {
        let phi = x("1/2+1/2*sqrt5");
        let lhs = &phi * &phi;
        let rhs = &phi + &ExactNumber::one();
        assert_eq!(lhs, rhs);
        let inv = phi.recip();
        assert_eq!(&inv + &ExactNumber::one(), phi);
    }

    #[test]
    fn exact_sign() {
        assert!(x("-1+sqrt2").is_positive());
        assert!(x("3/2-sqrt2").is_positive());
        assert!(x("7/5-sqrt2").is_negative());
        assert!(x("-3/2+sqrt2").is_negative());
        assert_eq!((x("sqrt5") - x("sqrt5")).signum(), Ordering::Equal);
        let mut v = vec![x("sqrt2"), x("7/5"), x("3/2"), x("-1+sqrt2")];
        v.sort();
        assert_eq!(v, vec![x("-1+sqrt2"), x("7/5"), x("sqrt2"), x("3/2")]);
    }

    #[test]
    fn rational_mixes_with_any_field() {
        let r = x("1/2");
        assert_eq!((&r + &x("sqrt5")).radicand(), 5);
        assert_eq!((&r + &x("sqrt2")).radicand(), 2);
        assert_eq!((x("sqrt5") - x("sqrt5")).radicand(), 0);
    }

    #[test]
    #[should_panic]
    fn different_fields_panic() {
        let _ = x("sqrt5") + x("sqrt2");
    }

    #[test]
    fn square_free() {
        assert!(is_square_free(2) && is_square_free(5) && is_square_free(30));
        assert!(!is_square_free(1) && !is_square_free(12) && !is_square_free(49));
    }
}
