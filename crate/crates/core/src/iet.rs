//! Interval exchange transformations with lengths in `Q(√N)`: evaluation,
//! Rauzy induction on `[0, δmax)`, finite-horizon Keane checks and sampling
//! from the cone of a path matrix.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::IntegerMatrix;
use crate::number::{sign_of, ExactNumber, ExactNumberJson};
use crate::perm::{is_irreducible, Permutation};
use crate::rauzy::{step, Move};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactIet {
    perm: Permutation,
    lengths: Vec<ExactNumber>,
}

fn common_radicand(xs: &[ExactNumber]) -> Result<u32> {
    let mut r = 0;
    for x in xs {
        match (r, x.radicand()) {
            (_, 0) => {}
            (0, s) => r = s,
            (a, b) if a == b => {}
            (a, b) => return Err(Error::BadInput(format!("lengths mix sqrt{a} and sqrt{b}"))),
        }
    }
    Ok(r)
}

impl ExactIet {
    /// Lengths must be positive and sum to exactly 1.
    pub fn new(perm: Permutation, lengths: Vec<ExactNumber>) -> Result<Self> {
        if lengths.len() != perm.d() {
            return Err(Error::BadInput(format!("{} lengths for {} letters", lengths.len(), perm.d())));
        }
        common_radicand(&lengths)?;
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::BadInput("interval lengths must be positive".into()));
        }
        let total: ExactNumber = lengths.iter().cloned().sum();
        if total != ExactNumber::one() {
            return Err(Error::BadInput(format!("lengths sum to {total}, not 1")));
        }
        Ok(Self { perm, lengths })
    }

    /// Rescales positive lengths to sum 1.
    pub fn normalized(perm: Permutation, lengths: Vec<ExactNumber>) -> Result<Self> {
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::BadInput("interval lengths must be positive".into()));
        }
        common_radicand(&lengths)?;
        let total: ExactNumber = lengths.iter().cloned().sum();
        let inv = total.recip();
        Self::new(perm, lengths.iter().map(|l| l * &inv).collect())
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn lengths(&self) -> &[ExactNumber] {
        &self.lengths
    }

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    /// Radicand of the field the lengths live in (`0` if all rational).
    pub fn radicand(&self) -> u32 {
        common_radicand(&self.lengths).expect("checked at construction")
    }

    /// Left endpoints of `I_1, ..., I_d`.
    pub fn starts(&self) -> Vec<ExactNumber> {
        let mut acc = ExactNumber::zero();
        let mut out = Vec::with_capacity(self.d());
        for l in &self.lengths {
            out.push(acc.clone());
            acc = &acc + l;
        }
        out
    }

    /// `δ_1, ..., δ_{d-1}`: the interior endpoints.
    pub fn discontinuities(&self) -> Vec<ExactNumber> {
        self.starts().into_iter().skip(1).collect()
    }

    /// Translation applied on each interval.
    pub fn translations(&self) -> Vec<ExactNumber> {
        let starts = self.starts();
        let inv = self.perm.inverse();
        let mut image_starts = vec![ExactNumber::zero(); self.d()];
        let mut acc = ExactNumber::zero();
        for pos in 1..=self.d() {
            let j = inv.at(pos);
            image_starts[j - 1] = acc.clone();
            acc = &acc + &self.lengths[j - 1];
        }
        image_starts.iter().zip(&starts).map(|(img, s)| img - s).collect()
    }

    pub fn inverse(&self) -> ExactIet {
        let inv = self.perm.inverse();
        let lengths = (1..=self.d()).map(|pos| self.lengths[inv.at(pos) - 1].clone()).collect();
        ExactIet { perm: inv, lengths }
    }

    /// Rightmost discontinuity of `T`.
    pub fn delta_plus(&self) -> ExactNumber {
        ExactNumber::one() - &self.lengths[self.d() - 1]
    }

    /// Rightmost discontinuity of `T⁻¹`.
    pub fn delta_minus(&self) -> ExactNumber {
        let t = self.perm.preimage(self.d());
        ExactNumber::one() - &self.lengths[t - 1]
    }

    /// 1-based index of the interval containing `x`.
    pub fn interval_of(&self, x: &ExactNumber) -> Result<usize> {
        if x.is_negative() || *x >= ExactNumber::one() {
            return Err(Error::OutOfDomain);
        }
        let starts = self.starts();
        Ok(starts.iter().rposition(|s| s <= x).expect("0 is a start") + 1)
    }
}

pub fn evaluate(t: &ExactIet, x: &ExactNumber) -> Result<ExactNumber> {
    let j = t.interval_of(x)?;
    Ok(x + &t.translations()[j - 1])
}

/// One step of Rauzy induction on the concrete IET.
pub fn induce_step(t: &ExactIet) -> Result<(Move, ExactIet, IntegerMatrix)> {
    induce_step_at(t, 0)
}

fn induce_step_at(t: &ExactIet, index: usize) -> Result<(Move, ExactIet, IntegerMatrix)> {
    let d = t.d();
    if !is_irreducible(t.perm()) {
        return Err(Error::ReducibleInput(t.perm().to_string()));
    }
    let tt = t.perm().preimage(d);
    let (ld, lt) = (&t.lengths[d - 1], &t.lengths[tt - 1]);
    let mv = match ld.cmp(lt) {
        Ordering::Less => Move::A,
        Ordering::Greater => Move::B,
        Ordering::Equal => return Err(Error::DegenerateCoincidence { step: index }),
    };
    let l = &t.lengths;
    let new: Vec<ExactNumber> = match mv {
        Move::A => {
            let mut v: Vec<ExactNumber> = l[..tt - 1].to_vec();
            v.push(lt - ld);
            v.push(ld.clone());
            v.extend_from_slice(&l[tt..d - 1]);
            v
        }
        Move::B => {
            let mut v = l.clone();
            v[d - 1] = ld - lt;
            v
        }
    };
    let (perm, mat) = step(t.perm(), mv)?;
    Ok((mv, ExactIet::normalized(perm, new)?, mat))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedPath {
    pub iet: ExactIet,
    pub matrix: IntegerMatrix,
    pub moves: Vec<Move>,
}

/// `n` steps of induction: `R^n(T)`, `M(T,n)` and the realized word.
pub fn induce_path(t: &ExactIet, n: usize) -> Result<InducedPath> {
    let mut cur = t.clone();
    let mut matrix = IntegerMatrix::identity(t.d());
    let mut moves = Vec::with_capacity(n);
    for i in 0..n {
        let (mv, next, m) = induce_step_at(&cur, i)?;
        matrix = matrix.checked_mul(&m)?;
        moves.push(mv);
        cur = next;
    }
    Ok(InducedPath { iet: cur, matrix, moves })
}

/// `M · v` for an exact vector.
pub fn mat_vec(m: &IntegerMatrix, v: &[ExactNumber]) -> Vec<ExactNumber> {
    (0..m.d())
        .map(|i| (0..m.d()).filter(|&j| m.get(i, j) != 0).map(|j| v[j].mul_int(m.get(i, j))).sum())
        .collect()
}

/// A point of the cone `M ℝ₊^d` normalized to the simplex, using the
/// positive vector `(1, s, s², ..., s^{d-1})`.
pub fn iet_from_cone(p: &Permutation, m: &IntegerMatrix, seed: &ExactNumber) -> Result<ExactIet> {
    if seed.is_rational() {
        return Err(Error::InvalidSeed(format!("{seed} is rational")));
    }
    if !seed.is_positive() || *seed >= ExactNumber::one() {
        return Err(Error::InvalidSeed(format!("{seed} is outside (0,1)")));
    }
    if m.d() != p.d() {
        return Err(Error::BadParams("matrix and permutation sizes differ".into()));
    }
    if !is_irreducible(p) {
        return Err(Error::ReducibleInput(p.to_string()));
    }
    let v: Vec<ExactNumber> = (0..p.d()).map(|k| seed.pow(k as u32)).collect();
    ExactIet::normalized(p.clone(), mat_vec(m, &v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeaneWitness {
    /// `T^step(δ_orbit) = T^other_step(δ_other_orbit)`; orbits are 1-based.
    pub orbit: usize,
    pub step: usize,
    pub other_orbit: usize,
    pub other_step: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeaneReport {
    pub verified_horizon: usize,
    pub passed: bool,
    pub witness: Option<KeaneWitness>,
}

/// Forward orbits of the `d-1` discontinuities, `horizon` steps each, must
/// be pairwise disjoint (base points included).
pub fn check_keane(t: &ExactIet, horizon: usize) -> Result<KeaneReport> {
    if horizon == 0 {
        return Err(Error::BadParams("horizon must be at least 1".into()));
    }
    let lat = Lattice::new(t, &[]);
    let mut pts: Vec<Pt> = lat.starts[1..].to_vec();
    let mut seen: HashMap<Pt, (usize, usize)> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        seen.insert(p.clone(), (i + 1, 0));
    }
    for s in 1..=horizon {
        for (i, p) in pts.iter_mut().enumerate() {
            *p = lat.apply(p);
            if let Some(&(j, sj)) = seen.get(p) {
                let witness = KeaneWitness { orbit: i + 1, step: s, other_orbit: j, other_step: sj };
                return Ok(KeaneReport { verified_horizon: s - 1, passed: false, witness: Some(witness) });
            }
            seen.insert(p.clone(), (i + 1, s));
        }
    }
    Ok(KeaneReport { verified_horizon: horizon, passed: true, witness: None })
}

/// A point `(a + b√N) / D` of a fixed lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Pt {
    pub a: BigInt,
    pub b: BigInt,
}

impl Pt {
    fn sub(&self, o: &Pt) -> Pt {
        Pt { a: &self.a - &o.a, b: &self.b - &o.b }
    }
    fn add(&self, o: &Pt) -> Pt {
        Pt { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

/// Integer form of an IET over a common denominator, for long orbits.
pub(crate) struct Lattice {
    radicand: BigInt,
    den: BigInt,
    pub starts: Vec<Pt>,
    shifts: Vec<Pt>,
}

fn lcm_den(acc: BigInt, q: &BigRational) -> BigInt {
    acc.lcm(q.denom())
}

impl Lattice {
    /// Denominator covers the lengths and every point in `extra`.
    pub fn new(t: &ExactIet, extra: &[ExactNumber]) -> Lattice {
        let mut den = BigInt::one();
        for x in t.lengths().iter().chain(extra) {
            den = lcm_den(den, x.a());
            den = lcm_den(den, x.b());
        }
        Self::with_den(t, den)
    }

    pub fn with_den(t: &ExactIet, den: BigInt) -> Lattice {
        let field = t.radicand();
        let mut lat = Lattice { radicand: BigInt::from(field), den, starts: Vec::new(), shifts: Vec::new() };
        lat.starts = t.starts().iter().map(|x| lat.point(x)).collect();
        lat.shifts = t.translations().iter().map(|x| lat.point(x)).collect();
        lat
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn point(&self, x: &ExactNumber) -> Pt {
        let conv = |q: &BigRational| {
            let v = q * BigRational::from_integer(self.den.clone());
            assert!(v.is_integer(), "point not on the lattice");
            v.to_integer()
        };
        Pt { a: conv(x.a()), b: conv(x.b()) }
    }

    pub fn cmp(&self, x: &Pt, y: &Pt) -> Ordering {
        let diff = x.sub(y);
        sign_of(&diff.a, &diff.b, &self.radicand)
    }

    /// 0-based interval with `start ≤ x` maximal.
    pub fn locate(&self, x: &Pt) -> usize {
        let (mut lo, mut hi) = (0usize, self.starts.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cmp(&self.starts[mid], x) != Ordering::Greater {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// 0-based interval with `start < x` maximal (left limits); `None` at 0.
    pub fn locate_left(&self, x: &Pt) -> Option<usize> {
        (0..self.starts.len()).rev().find(|&j| self.cmp(&self.starts[j], x) == Ordering::Less)
    }

    pub fn shift(&self, x: &Pt, j: usize) -> Pt {
        x.add(&self.shifts[j])
    }

    pub fn apply(&self, x: &Pt) -> Pt {
        self.shift(x, self.locate(x))
    }

    pub fn is_discontinuity(&self, x: &Pt) -> bool {
        self.starts[1..].iter().any(|s| s == x)
    }
}

#[derive(Serialize, Deserialize)]
struct IetJson {
    perm: Permutation,
    sqrt: u32,
    lengths: Vec<ExactNumberJson>,
}

impl Serialize for ExactIet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.radicand();
        IetJson {
            perm: self.perm.clone(),
            sqrt: if r == 0 { 5 } else { r },
            lengths: self.lengths.iter().map(|l| l.to_json()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactIet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = IetJson::deserialize(de)?;
        let lengths = raw
            .lengths
            .iter()
            .map(|j| ExactNumber::from_json(j, raw.sqrt))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        ExactIet::new(raw.perm, lengths).map_err(serde::de::Error::custom)
    }
}
