//! Symbolic coding: orbit words, return blocks of induced maps, exact
//! languages of allowed blocks, and block-concatenation tables.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iet::{induce_path, ExactIet, Lattice, Pt};
use crate::matrix::IntegerMatrix;
use crate::number::ExactNumber;
use crate::perm::Permutation;
use crate::rauzy::{step_perm, Move};

/// Letters are 1-based interval labels.
pub type Word = Vec<u8>;

pub const DEFAULT_EXPANSION_BUDGET: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Exact,
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Side::Exact),
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Parse(format!("unknown side {s}"))),
        }
    }
}

/// Forward and backward integer forms of one IET over a shared denominator.
pub(crate) struct Orbits {
    fwd: Lattice,
    bwd: Lattice,
}

impl Orbits {
    pub(crate) fn new(t: &ExactIet, extra: &[ExactNumber]) -> Orbits {
        let fwd = Lattice::new(t, extra);
        let bwd = Lattice::with_den(&t.inverse(), fwd.den().clone());
        Orbits { fwd, bwd }
    }

    pub(crate) fn point(&self, x: &ExactNumber) -> Pt {
        self.fwd.point(x)
    }

    pub(crate) fn letter(&self, y: &Pt) -> u8 {
        self.fwd.locate(y) as u8 + 1
    }

    /// Coding of `T^i(x)` for `i` in `p..=q`, and the first `i` at which the
    /// orbit sits on a discontinuity.
    pub(crate) fn word(&self, x: &Pt, p: i64, q: i64, side: Side) -> Result<(Word, Option<i64>)> {
        let left = side == Side::Left;
        let mut y = x.clone();
        let mut hit = None;
        let step = |lat: &Lattice, y: &Pt| -> Result<Pt> {
            if left {
                let j = lat.locate_left(y).ok_or(Error::OutOfDomain)?;
                Ok(lat.shift(y, j))
            } else {
                Ok(lat.apply(y))
            }
        };
        let mut i = 0i64;
        while i > p {
            y = step(&self.bwd, &y)?;
            i -= 1;
        }
        while i < p {
            y = step(&self.fwd, &y)?;
            i += 1;
        }
        let mut out = Vec::with_capacity((q - p + 1).max(0) as usize);
        while i <= q {
            if hit.is_none() && self.fwd.is_discontinuity(&y) {
                hit = Some(i);
            }
            let l = if left { self.fwd.locate_left(&y).ok_or(Error::OutOfDomain)? } else { self.fwd.locate(&y) };
            out.push(l as u8 + 1);
            if i < q {
                y = step(&self.fwd, &y)?;
            }
            i += 1;
        }
        Ok((out, hit))
    }

    pub(crate) fn fwd(&self) -> &Lattice {
        &self.fwd
    }
}

/// The word `w_{p,q}(x)`, or its one-sided limits.
///
/// The maps are right-continuous, so the right limit is the coding of the
/// point itself; the exact side refuses orbits that meet a discontinuity.
pub fn code_orbit(t: &ExactIet, x: &ExactNumber, p: i64, q: i64, side: Side) -> Result<Word> {
    if p > q {
        return Err(Error::BadParams(format!("empty window [{p}, {q}]")));
    }
    if x.is_negative() || *x >= ExactNumber::one() {
        return Err(Error::OutOfDomain);
    }
    if x.radicand() != 0 && t.radicand() != 0 && x.radicand() != t.radicand() {
        return Err(Error::BadInput("point and lengths live in different fields".into()));
    }
    let orbits = Orbits::new(t, std::slice::from_ref(x));
    let (word, hit) = orbits.word(&orbits.point(x), p, q, side)?;
    match (side, hit) {
        (Side::Exact, Some(i)) => Err(Error::OrbitHitsDiscontinuity { index: i }),
        _ => Ok(word),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFamily {
    pub n: usize,
    pub blocks: Vec<Word>,
    pub matrix: IntegerMatrix,
    pub moves: Vec<Move>,
}

impl BlockFamily {
    pub fn lengths(&self) -> Vec<u64> {
        self.blocks.iter().map(|b| b.len() as u64).collect()
    }
}

pub fn return_blocks(t: &ExactIet, n: usize) -> Result<BlockFamily> {
    return_blocks_with_budget(t, n, DEFAULT_EXPANSION_BUDGET)
}

/// Words traced by each subinterval of `I^(n)` until its first return.
pub fn return_blocks_with_budget(t: &ExactIet, n: usize, budget: usize) -> Result<BlockFamily> {
    let ind = induce_path(t, n)?;
    let sums = ind.matrix.column_sums();
    let total: u64 = sums.iter().sum();
    if total > budget as u64 {
        return Err(Error::BudgetExceeded { budget });
    }
    // Undo the normalization: T = M · (c · λ⁽ⁿ⁾) with |λ| = 1.
    let v = crate::iet::mat_vec(&ind.matrix, ind.iet.lengths());
    let c: ExactNumber = v.iter().cloned().sum::<ExactNumber>().recip();
    let starts: Vec<ExactNumber> = ind.iet.starts().iter().map(|s| s * &c).collect();
    let mut extra = starts.clone();
    extra.push(c.clone());
    let orbits = Orbits::new(t, &extra);
    let lat = orbits.fwd();
    let end = lat.point(&c);
    let blocks = starts
        .iter()
        .zip(&sums)
        .map(|(s, &len)| {
            let mut y = lat.point(s);
            let mut word = Vec::with_capacity(len as usize);
            loop {
                word.push(orbits.letter(&y));
                y = lat.apply(&y);
                if lat.cmp(&y, &end) == std::cmp::Ordering::Less {
                    break;
                }
            }
            word
        })
        .collect::<Vec<_>>();
    for (b, &s) in blocks.iter().zip(&sums) {
        if b.len() as u64 != s {
            return Err(Error::ConstructionFailed(format!("return block of length {} where the matrix says {s}", b.len())));
        }
    }
    Ok(BlockFamily { n, blocks, matrix: ind.matrix, moves: ind.moves })
}

/// Words whose factors are exactly the allowed blocks of length `≤ reach+1`:
/// the codings of each discontinuity over `[-reach, reach]` and of `0` over
/// `[0, reach]`. Every cylinder of length `l` is an interval whose left end
/// is `0` or a preimage `T^{-i}δ_j` with `i < l`.
pub fn cover_words(t: &ExactIet, reach: usize) -> Result<Vec<Word>> {
    let orbits = Orbits::new(t, &[]);
    let r = reach as i64;
    let mut out = Vec::with_capacity(t.d());
    let zero = orbits.point(&ExactNumber::zero());
    out.push(orbits.word(&zero, 0, r, Side::Right)?.0);
    for delta in t.discontinuities() {
        out.push(orbits.word(&orbits.point(&delta), -r, r, Side::Right)?.0);
    }
    Ok(out)
}

/// Exact set of allowed `l`-blocks.
pub fn allowed_blocks(t: &ExactIet, l: usize) -> Result<BTreeSet<Word>> {
    if l == 0 {
        return Err(Error::BadParams("block length must be at least 1".into()));
    }
    let words = cover_words(t, l - 1)?;
    Ok(factors(&words, l))
}

pub fn factors(words: &[Word], l: usize) -> BTreeSet<Word> {
    words.iter().flat_map(|w| w.windows(l).map(|f| f.to_vec())).collect()
}

/// `B_{i1}^{e1} B_{i2}^{e2} ...` with 1-based block ids and exponents ≥ 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockExpression(pub Vec<(usize, u64)>);

impl BlockExpression {
    pub fn single(id: usize) -> Self {
        BlockExpression(vec![(id, 1)])
    }

    pub fn push(&mut self, id: usize, e: u64) {
        if e == 0 {
            return;
        }
        match self.0.last_mut() {
            Some((last, k)) if *last == id => *k += e,
            _ => self.0.push((id, e)),
        }
    }

    pub fn concat(&self, other: &BlockExpression) -> BlockExpression {
        let mut out = self.clone();
        for &(id, e) in &other.0 {
            out.push(id, e);
        }
        out
    }

    pub fn length(&self, base: &[u64]) -> Result<u64> {
        self.0.iter().try_fold(0u64, |acc, &(id, e)| {
            base[id - 1].checked_mul(e).and_then(|x| x.checked_add(acc)).ok_or(Error::Overflow("block length"))
        })
    }

    pub fn expand(&self, blocks: &[Word], budget: usize) -> Result<Word> {
        let lens: Vec<u64> = blocks.iter().map(|b| b.len() as u64).collect();
        if self.length(&lens)? > budget as u64 {
            return Err(Error::BudgetExceeded { budget });
        }
        let mut out = Vec::new();
        for &(id, e) in &self.0 {
            for _ in 0..e {
                out.extend_from_slice(&blocks[id - 1]);
            }
        }
        Ok(out)
    }

    /// Block ids one by one, exponents unrolled.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().flat_map(|&(id, e)| std::iter::repeat(id).take(e as usize))
    }
}

impl std::fmt::Display for BlockExpression {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.0.iter().map(|&(id, e)| if e == 1 { format!("B{id}") } else { format!("B{id}^{e}") }).collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Blocks after applying `moves` from `perm`, as words over the old blocks.
/// Move `A` splits interval `t = π⁻¹(d)` and appends `B_d` to the new
/// interval `t+1`; move `B` appends `B_d` to `B_t`.
pub fn substitute_symbolic(perm: &Permutation, moves: &[Move]) -> Result<Vec<BlockExpression>> {
    let d = perm.d();
    let mut p = perm.clone();
    let mut exprs: Vec<BlockExpression> = (1..=d).map(BlockExpression::single).collect();
    for &mv in moves {
        let t = p.preimage(d);
        let joined = exprs[t - 1].concat(&exprs[d - 1]);
        match mv {
            Move::A => {
                exprs.pop();
                exprs.insert(t, joined);
            }
            Move::B => exprs[t - 1] = joined,
        }
        p = step_perm(&p, mv)?;
    }
    Ok(exprs)
}

/// Concrete version of [`substitute_symbolic`].
pub fn substitute_blocks(perm: &Permutation, blocks: &[Word], moves: &[Move], budget: usize) -> Result<Vec<Word>> {
    substitute_symbolic(perm, moves)?.iter().map(|e| e.expand(blocks, budget)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HatKind {
    FourLetter,
    Proxy,
    Quasi,
}

impl std::str::FromStr for HatKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourletter" | "four" | "four-letter" => Ok(HatKind::FourLetter),
            "proxy" => Ok(HatKind::Proxy),
            "quasi" => Ok(HatKind::Quasi),
            _ => Err(Error::Parse(format!("unknown hat kind {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HatTable {
    pub kind: HatKind,
    pub d: usize,
    pub m: u64,
    pub n: u64,
    pub rows: Vec<BlockExpression>,
}

/// Blocks after the first-kind path, in terms of the blocks before it; `m`
/// is the exponent carried by `B_{d-2}` and `n` the one carried by `B_{d-1}`.
pub fn hat_blocks(kind: HatKind, d: usize, m: u64, n: u64) -> Result<HatTable> {
    match kind {
        HatKind::FourLetter if d != 4 => return Err(Error::BadParams("the four-letter table needs d = 4".into())),
        HatKind::Proxy | HatKind::Quasi if d <= 4 => {
            return Err(Error::BadParams("proxy tables need d > 4".into()))
        }
        _ => {}
    }
    let expr = |parts: &[(usize, u64)]| {
        let mut e = BlockExpression(Vec::new());
        for &(id, k) in parts {
            e.push(id, k);
        }
        e
    };
    let (b2, b1, bd) = (d - 2, d - 1, d);
    let mut rows = Vec::with_capacity(d);
    match kind {
        HatKind::FourLetter | HatKind::Proxy => {
            for l in 1..=d - 4 {
                rows.push(expr(&[(l, 1), (b1, n), (bd, 1)]));
            }
            rows.push(expr(&[(d - 3, 1), (b1, n + 1), (bd, 1)]));
            rows.push(expr(&[(d - 3, 1), (b1, n), (bd, 1)]));
        }
        HatKind::Quasi => {
            rows.push(expr(&[(1, 1), (b1, n + 1), (bd, 1)]));
            rows.push(expr(&[(1, 1), (b1, n), (bd, 1)]));
            for l in 3..=d - 2 {
                rows.push(expr(&[(l - 1, 1), (b1, n), (bd, 1)]));
            }
        }
    }
    rows.push(expr(&[(b2, m + 1), (b1, n + 1), (bd, 1)]));
    rows.push(expr(&[(b2, m), (b1, n + 1), (bd, 1)]));
    Ok(HatTable { kind, d, m, n, rows })
}
