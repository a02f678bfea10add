//! Named induction paths and the number-theoretic searches that steer
//! column sums of transition matrices.
//!
//! Named paths are written as words in the letters `a`/`b` and read against
//! named permutations printed in some notation. Which engine move each letter
//! is, and how printed permutations map to one-line images, is settled once
//! by [`resolve_convention`]: the only combination accepted is the one whose
//! replayed `M1`/`M2` words reproduce the reference matrices and endpoints.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, gcd_all, is_prime, smallest_prime_factor};
use crate::error::{Error, Result};
use crate::matrix::IntegerMatrix;
use crate::perm::{is_degenerate, is_irreducible, proxy_kind, Permutation, ProxyKind};
use crate::rauzy::{path_product, step_perm, Move, RauzyPath};

pub const DEFAULT_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

/// Run-length word over `{a, b}`.
pub type LabelWord = Vec<(Label, u64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelMap {
    Identity,
    Swap,
}

/// How a printed permutation relates to the engine's one-line image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Notation {
    Direct,
    /// Printed digits are the bottom row, i.e. the inverse of the direct image.
    BottomRow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convention {
    pub labels: LabelMap,
    pub notation: Notation,
}

impl Convention {
    pub const ALL: [Convention; 4] = [
        Convention { labels: LabelMap::Identity, notation: Notation::Direct },
        Convention { labels: LabelMap::Identity, notation: Notation::BottomRow },
        Convention { labels: LabelMap::Swap, notation: Notation::Direct },
        Convention { labels: LabelMap::Swap, notation: Notation::BottomRow },
    ];

    pub fn letter(&self, l: Label) -> Move {
        match (self.labels, l) {
            (LabelMap::Identity, Label::A) | (LabelMap::Swap, Label::B) => Move::A,
            _ => Move::B,
        }
    }

    pub fn translate(&self, word: &[(Label, u64)]) -> Vec<Move> {
        let mut out = Vec::new();
        for &(l, k) in word {
            out.extend(std::iter::repeat(self.letter(l)).take(k as usize));
        }
        out
    }

    /// Engine permutation named by a printed one.
    pub fn read(&self, printed: &Permutation) -> Permutation {
        match self.notation {
            Notation::Direct => printed.clone(),
            Notation::BottomRow => printed.inverse(),
        }
    }

    /// Printed form of an engine permutation.
    pub fn print(&self, p: &Permutation) -> Permutation {
        self.read(p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConventionReport {
    /// Every combination with whether it reproduced the references.
    pub candidates: Vec<(Convention, bool)>,
    pub chosen: Option<Convention>,
}

fn perm(s: &str) -> Permutation {
    s.parse().expect("static permutation")
}

fn conforms(c: Convention) -> bool {
    let p4213 = c.read(&perm("4213"));
    let p2431 = c.read(&perm("2431"));
    for m in 0..=4 {
        for n in 0..=4 {
            let checks = [
                (&p4213, m1_word(m, n), &p2431, printed_m1(m, n)),
                (&p2431, m2_word(4, m, n), &p4213, printed_m2(m, n)),
            ];
            for (start, word, end, expected) in checks {
                match path_product(&RauzyPath::new(start.clone(), c.translate(&word))) {
                    Ok((e, mat)) if &e == end && mat == expected => {}
                    _ => return false,
                }
            }
        }
    }
    true
}

pub fn convention_report() -> &'static ConventionReport {
    static REPORT: OnceLock<ConventionReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let candidates: Vec<_> = Convention::ALL.iter().map(|&c| (c, conforms(c))).collect();
        let chosen = candidates.iter().find(|(_, ok)| *ok).map(|(c, _)| *c);
        ConventionReport { candidates, chosen }
    })
}

pub fn resolve_convention() -> Result<Convention> {
    convention_report().chosen.ok_or(Error::ConventionUnresolved)
}

fn w(parts: &[(Label, u64)]) -> LabelWord {
    parts.iter().copied().filter(|&(_, k)| k > 0).collect()
}

pub fn m1_word(m: u64, n: u64) -> LabelWord {
    use Label::*;
    w(&[(A, n), (B, 1), (A, 1), (B, 1), (A, m), (B, 1)])
}

/// Uses `n(d-1)+2` trailing `b` letters, which is `3n+2` at `d = 4`.
pub fn m2_word(d: usize, m: u64, n: u64) -> LabelWord {
    use Label::*;
    w(&[(A, 1), (B, m), (A, 1), (B, n * (d as u64 - 1) + 2), (A, 1)])
}

pub fn tilde_m1_word(d: usize, m: u64, n: u64) -> LabelWord {
    use Label::*;
    w(&[(A, n), (B, d as u64 - 3), (A, 1), (B, 1), (A, m), (B, 1)])
}

pub fn tilde_m2_word(kind: ProxyKind, d: usize, m: u64, n: u64) -> LabelWord {
    use Label::*;
    let middle = if kind == ProxyKind::QuasiProxy4321 { d as u64 - 3 } else { 1 };
    w(&[(A, 1), (B, m), (A, middle), (B, n * (d as u64 - 1) + 2), (A, 1)])
}

/// Closed loop at a standard permutation; `sigma_inv_l` is the printed
/// inverse permutation evaluated at `l`.
pub fn mstar_word(d: usize, s: u64, l: usize, sigma_inv_l: usize) -> LabelWord {
    use Label::*;
    w(&[(B, (d - sigma_inv_l) as u64), (A, s * (d - l) as u64), (B, sigma_inv_l as u64 - 1)])
}

fn rows(r: Vec<Vec<u64>>) -> IntegerMatrix {
    IntegerMatrix::from_rows(r).expect("square")
}

pub fn printed_m1(m: u64, n: u64) -> IntegerMatrix {
    rows(vec![vec![1, 1, 0, 0], vec![0, 0, m + 1, m], vec![n + 1, n, n + 1, n + 1], vec![1, 1, 1, 1]])
}

pub fn printed_m2(m: u64, n: u64) -> IntegerMatrix {
    rows(vec![vec![1, 1, 1, 1], vec![n + 1, n + 1, n, n + 1], vec![m, m + 1, 0, 0], vec![0, 0, 1, 1]])
}

pub fn printed_tilde_m1(kind: ProxyKind, d: usize, m: u64, n: u64) -> IntegerMatrix {
    let mut a = IntegerMatrix::zeros(d);
    if kind == ProxyKind::QuasiProxy4321 {
        a.set(0, 0, 1);
        a.set(0, 1, 1);
        for k in 0..d - 4 {
            a.set(1 + k, 2 + k, 1);
        }
        a.set(d - 3, d - 2, m + 1);
        a.set(d - 3, d - 1, m);
        for j in 0..d {
            a.set(d - 2, j, n);
            a.set(d - 1, j, 1);
        }
        a.set(d - 2, 0, n + 1);
        a.set(d - 2, d - 2, n + 1);
        a.set(d - 2, d - 1, n + 1);
    } else {
        let r = d - 4;
        for i in 0..r {
            a.set(i, i, 1);
        }
        let block = [[1, 1, 0, 0], [0, 0, m + 1, m], [n + 1, n, n + 1, n + 1], [1, 1, 1, 1]];
        for (i, row) in block.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a.set(r + i, r + j, v);
            }
        }
        for j in 0..r {
            a.set(r + 2, j, n);
            a.set(r + 3, j, 1);
        }
    }
    a
}

pub fn printed_tilde_m2(kind: ProxyKind, d: usize, m: u64, n: u64) -> IntegerMatrix {
    let mut a = IntegerMatrix::zeros(d);
    if kind == ProxyKind::QuasiProxy4321 {
        for j in 0..d {
            a.set(0, j, 1);
            a.set(1, j, n);
            a.set(d - 2, j, m);
        }
        a.set(1, 0, n + 1);
        a.set(1, d - 3, n + 1);
        a.set(1, d - 1, n + 1);
        for k in 0..d - 4 {
            a.set(2 + k, 1 + k, 1);
        }
        a.set(d - 2, d - 3, m + 1);
        a.set(d - 2, d - 2, 0);
        a.set(d - 2, d - 1, 0);
        a.set(d - 1, d - 2, 1);
        a.set(d - 1, d - 1, 1);
    } else {
        let r = d - 4;
        for i in 0..r {
            a.set(i, i, 1);
        }
        let block = [[1, 1, 1, 1], [n + 1, n + 1, n, n + 1], [m, m + 1, 0, 0], [0, 0, 1, 1]];
        for (i, row) in block.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a.set(r + i, r + j, v);
            }
        }
        for j in 0..r {
            a.set(r + 1, j, n);
        }
    }
    a
}

/// The closed form for the `M*(s, ℓ)` loop exactly as printed. It omits the
/// `1` that the product carries in row `d`, column `1`; see [`mstar_matrix`].
pub fn printed_mstar(sigma_inv: &Permutation, s: u64, l: usize) -> IntegerMatrix {
    let d = sigma_inv.d();
    let si = |j: usize| sigma_inv.at(j);
    let mut a = IntegerMatrix::zeros(d);
    for i in 1..=d {
        for j in 1..=d {
            let v = if (i == j && i != l) || (i == d && j > 1) {
                1
            } else if i == l && j == l {
                s + 1
            } else if i == l && l < j && j < d && si(j) < si(l) {
                2 * s
            } else if i == l && (j == d || (j < l && si(j) < si(l)) || (j > l && si(j) > si(l))) {
                s
            } else {
                0
            };
            a.set(i - 1, j - 1, v);
        }
    }
    a
}

/// Closed form of the `M*(s, ℓ)` loop as the product actually evaluates:
/// the printed form with row `d` made entirely of ones.
pub fn mstar_matrix(sigma_inv: &Permutation, s: u64, l: usize) -> IntegerMatrix {
    let mut a = printed_mstar(sigma_inv, s, l);
    a.set(sigma_inv.d() - 1, 0, 1);
    a
}

/// Column-sum update of one `M*(s, ℓ)` loop, written with the multipliers
/// `τ_j ∈ {0, 1, 2}` instead of the full matrix.
pub fn mstar_sums(sigma_inv: &Permutation, c: &[u64], s: u64, l: usize) -> Result<Vec<u64>> {
    let d = sigma_inv.d();
    let si = |j: usize| sigma_inv.at(j);
    let ov = || Error::Overflow("M* column sums");
    let cl = c[l - 1];
    let cd = c[d - 1];
    let mut out = Vec::with_capacity(d);
    for j in 1..=d {
        let v = if j == d {
            s.checked_mul(cl).and_then(|x| x.checked_add(cd)).ok_or_else(ov)?
        } else {
            let tau = if j == l {
                1
            } else if j > l && si(j) < si(l) {
                2
            } else if j < l && si(j) > si(l) {
                0
            } else {
                1
            };
            s.checked_mul(tau)
                .and_then(|x| x.checked_mul(cl))
                .and_then(|x| x.checked_add(cd))
                .and_then(|x| x.checked_add(c[j - 1]))
                .ok_or_else(ov)?
        };
        out.push(v);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    M1,
    M2,
    TildeM1Proxy,
    TildeM1Quasi,
    TildeM2Proxy,
    TildeM2Quasi,
    MStar,
}

impl PathKind {
    pub const ALL: [PathKind; 7] = [
        PathKind::M1,
        PathKind::M2,
        PathKind::TildeM1Proxy,
        PathKind::TildeM1Quasi,
        PathKind::TildeM2Proxy,
        PathKind::TildeM2Quasi,
        PathKind::MStar,
    ];

    fn proxy(self) -> ProxyKind {
        match self {
            PathKind::TildeM1Quasi | PathKind::TildeM2Quasi => ProxyKind::QuasiProxy4321,
            _ => ProxyKind::Proxy4321,
        }
    }
}

impl std::str::FromStr for PathKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "m1" => PathKind::M1,
            "m2" => PathKind::M2,
            "tildem1proxy" | "tildem1" => PathKind::TildeM1Proxy,
            "tildem1quasi" => PathKind::TildeM1Quasi,
            "tildem2proxy" | "tildem2" => PathKind::TildeM2Proxy,
            "tildem2quasi" => PathKind::TildeM2Quasi,
            "mstar" => PathKind::MStar,
            _ => return Err(Error::Parse(format!("unknown path kind {s}"))),
        };
        Ok(k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedPath {
    pub kind: PathKind,
    /// `(m, n)`, or `(s, ℓ)` for `MStar`.
    pub params: [u64; 2],
    pub d: usize,
    pub start: Permutation,
    pub moves: Vec<Move>,
    pub matrix: IntegerMatrix,
    pub end: Permutation,
}

impl NamedPath {
    pub fn path(&self) -> RauzyPath {
        RauzyPath::new(self.start.clone(), self.moves.clone())
    }
}

/// Lexicographically first proxy (or quasi-proxy) of size `d`, preferring
/// non-degenerate ones.
pub fn default_anchor(kind: ProxyKind, d: usize) -> Result<Permutation> {
    if d < 4 || kind == ProxyKind::None {
        return Err(Error::BadParams("anchors exist only for proxy kinds and d ≥ 4".into()));
    }
    if d == 4 {
        return Ok(Permutation::reversal(4));
    }
    let free: Vec<usize> = (2..=d - 3).collect();
    let mut first_irreducible = None;
    for order in permutations_of(&free) {
        let image = if kind == ProxyKind::Proxy4321 {
            order.iter().copied().chain([d, d - 1, d - 2, 1]).collect()
        } else {
            std::iter::once(d).chain(order.iter().copied()).chain([d - 1, d - 2, 1]).collect()
        };
        let p = Permutation::new(image)?;
        if proxy_kind(&p) != kind {
            continue;
        }
        if is_degenerate(&p).is_none() {
            return Ok(p);
        }
        first_irreducible.get_or_insert(p);
    }
    first_irreducible.ok_or_else(|| Error::BadParams(format!("no {kind:?} permutation of size {d}")))
}

fn permutations_of(xs: &[usize]) -> Vec<Vec<usize>> {
    if xs.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut tail in permutations_of(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

fn replay(kind: PathKind, params: [u64; 2], start: Permutation, moves: Vec<Move>, matrix: IntegerMatrix, end: Permutation) -> Result<NamedPath> {
    let (got_end, got) = path_product(&RauzyPath::new(start.clone(), moves.clone()))?;
    if got != matrix || got_end != end {
        return Err(Error::PathMismatch(format!(
            "{kind:?}{params:?} from {start}: product {:?} ending at {got_end}, closed form {:?} ending at {end}",
            got.rows(),
            matrix.rows()
        )));
    }
    Ok(NamedPath { kind, params, d: start.d(), start, moves, matrix, end })
}

/// Builds a named path and checks its product against the closed form.
///
/// `anchor` is the proxy permutation for tilde kinds and the standard start
/// for `MStar`; it defaults to [`default_anchor`] or the reversal.
pub fn build_named_path(kind: PathKind, params: [u64; 2], d: usize, anchor: Option<&Permutation>) -> Result<NamedPath> {
    let c = resolve_convention()?;
    let [m, n] = params;
    if let Some(a) = anchor {
        if a.d() != d {
            return Err(Error::BadParams(format!("anchor {a} does not have size {d}")));
        }
    }
    match kind {
        PathKind::M1 | PathKind::M2 => {
            if d != 4 {
                return Err(Error::BadParams("M1 and M2 are defined for d = 4".into()));
            }
            let p4213 = c.read(&perm("4213"));
            let p2431 = c.read(&perm("2431"));
            if kind == PathKind::M1 {
                replay(kind, params, p4213, c.translate(&m1_word(m, n)), printed_m1(m, n), p2431)
            } else {
                replay(kind, params, p2431, c.translate(&m2_word(4, m, n)), printed_m2(m, n), p4213)
            }
        }
        PathKind::TildeM1Proxy | PathKind::TildeM1Quasi | PathKind::TildeM2Proxy | PathKind::TildeM2Quasi => {
            if d < 4 {
                return Err(Error::BadParams("tilde paths need d ≥ 4".into()));
            }
            let pk = kind.proxy();
            let sigma = match anchor {
                Some(a) => a.clone(),
                None => default_anchor(pk, d)?,
            };
            let actual = proxy_kind(&sigma);
            if actual != pk && !(d == 4 && actual != ProxyKind::None) {
                return Err(Error::BadParams(format!("{sigma} is not a {pk:?} permutation")));
            }
            let (s2431, s4213) = tilde_vertices(c, &sigma, pk)?;
            if matches!(kind, PathKind::TildeM2Proxy | PathKind::TildeM2Quasi) {
                let moves = c.translate(&tilde_m2_word(pk, d, m, n));
                replay(kind, params, s2431, moves, printed_tilde_m2(pk, d, m, n), s4213)
            } else {
                let moves = c.translate(&tilde_m1_word(d, m, n));
                replay(kind, params, s4213, moves, printed_tilde_m1(pk, d, m, n), s2431)
            }
        }
        PathKind::MStar => {
            let sigma = anchor.cloned().unwrap_or_else(|| Permutation::reversal(d));
            if !sigma.is_standard() || !is_irreducible(&sigma) {
                return Err(Error::BadParams(format!("{sigma} is not standard")));
            }
            let l = n as usize;
            if l == 0 || l >= d {
                return Err(Error::BadParams(format!("ℓ = {l} must lie in 1..{}", d - 1)));
            }
            let sinv = c.print(&sigma).inverse();
            let moves = c.translate(&mstar_word(d, m, l, sinv.at(l)));
            replay(kind, params, sigma.clone(), moves, mstar_matrix(&sinv, m, l), sigma)
        }
    }
}

/// `(σ₂₄₃₁, σ₄₂₁₃)` for a proxy `σ`: one `a` move, then the end of the
/// second-kind path, which does not depend on its parameters.
fn tilde_vertices(c: Convention, sigma: &Permutation, pk: ProxyKind) -> Result<(Permutation, Permutation)> {
    let s2431 = step_perm(sigma, c.letter(Label::A))?;
    let mut p = s2431.clone();
    for mv in c.translate(&tilde_m2_word(pk, sigma.d(), 0, 0)) {
        p = step_perm(&p, mv)?;
    }
    Ok((s2431, p))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoprimalityCertificate {
    pub chosen_a: u64,
    pub chosen_b: u64,
    pub col2_sum: u64,
    pub col3_sum: u64,
    pub primes: (u64, u64),
}

/// Least `b`, then least `a`, both from 1, such that the two column sums
/// `c1 + (b+1)c2 + (a+1)c3` and `c1 + b·c2 + c4` are coprime, each being a
/// prime times the gcd forced by its form.
pub fn make_columns_coprime(c: [u64; 4], cap: u64) -> Result<CoprimalityCertificate> {
    let [c1, c2, c3, c4] = c;
    if c.iter().any(|&x| x == 0) || gcd_all(&c) != 1 {
        return Err(Error::BadInput(format!("column sums {c:?} must be positive with gcd 1")));
    }
    let ov = || Error::Overflow("column scan");
    let g1 = gcd(c2, c1 + c4);
    for b in 1..=cap {
        let col3 = b.checked_mul(c2).and_then(|x| x.checked_add(c1 + c4)).ok_or_else(ov)?;
        let p1 = col3 / g1;
        if !is_prime(p1) {
            continue;
        }
        let base = (b + 1).checked_mul(c2).and_then(|x| x.checked_add(c1)).ok_or_else(ov)?;
        let g2 = gcd(c3, base);
        // g2 divides every candidate second sum, so it must be coprime to col3.
        if gcd(g2, col3) != 1 {
            continue;
        }
        for a in 1..=cap {
            let col2 = (a + 1).checked_mul(c3).and_then(|x| x.checked_add(base)).ok_or_else(ov)?;
            let p2 = col2 / g2;
            if p2 != p1 && is_prime(p2) && gcd(col2, col3) == 1 {
                return Ok(CoprimalityCertificate { chosen_a: a, chosen_b: b, col2_sum: col2, col3_sum: col3, primes: (p1, p2) });
            }
        }
    }
    Err(Error::SearchCapExceeded { cap })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentStep {
    pub l: usize,
    pub s: u64,
    pub q: u64,
    pub descent: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdPrime {
    /// Closed loops at `sigma` appended to the caller's path.
    pub extension: RauzyPath,
    pub steps: Vec<DescentStep>,
    pub normalized: bool,
    pub matrix: IntegerMatrix,
}

fn cd_done(c: &[u64]) -> bool {
    let d = c.len();
    let q = c[d - 1];
    is_prime(q) && c[..d - 1].iter().all(|&x| x % q != 0)
}

/// Appends loops at the standard `sigma` until the last column sum is a
/// prime dividing no other column sum.
pub fn make_cd_prime(current: &IntegerMatrix, sigma: &Permutation, cap: u64) -> Result<CdPrime> {
    let conv = resolve_convention()?;
    let d = sigma.d();
    if !sigma.is_standard() || !is_irreducible(sigma) {
        return Err(Error::BadParams(format!("{sigma} is not standard")));
    }
    if current.d() != d {
        return Err(Error::BadParams("matrix size does not match the permutation".into()));
    }
    let sinv = conv.print(sigma).inverse();
    let mut matrix = current.clone();
    let mut extension = RauzyPath::empty(sigma.clone());
    let mut steps = Vec::new();
    let mut c = matrix.column_sums();
    if cd_done(&c) {
        return Ok(CdPrime { extension, steps, normalized: false, matrix });
    }

    let normalized = c[..d - 1].contains(&c[d - 1]);
    if normalized {
        let loop_moves = conv.translate(&[(Label::B, d as u64 - 1)]);
        let (end, m) = path_product(&RauzyPath::new(sigma.clone(), loop_moves.clone()))?;
        if &end != sigma {
            return Err(Error::ConstructionFailed("normalization loop does not close".into()));
        }
        matrix = matrix.checked_mul(&m)?;
        extension.moves.extend(loop_moves);
        let before = c.clone();
        c = matrix.column_sums();
        debug_assert!((0..d - 1).all(|j| c[j] == before[j] + before[d - 1]));
    }

    let mut q = 1u64;
    let mut descent = c[d - 1];
    while !(q > 1 && descent == 1) {
        let l = match smallest_prime_factor(descent) {
            Some(p) => (1..d).find(|&j| c[j - 1] % p != 0),
            None => Some(1),
        }
        .ok_or_else(|| Error::ConstructionFailed("every column sum shares the descent prime".into()))?;
        let g = gcd(c[d - 1], c[l - 1]);
        let mut chosen = None;
        for s in 1..=cap {
            let next = mstar_sums(&sinv, &c, s, l)?;
            let qn = next[d - 1] / g;
            if qn > q && is_prime(qn) && next[..d - 1].iter().all(|&x| x % qn != 0) {
                chosen = Some((s, qn, next));
                break;
            }
        }
        let (s, qn, predicted) = chosen.ok_or(Error::SearchCapExceeded { cap })?;
        let np = build_named_path(PathKind::MStar, [s, l as u64], d, Some(sigma))?;
        matrix = matrix.checked_mul(&np.matrix)?;
        c = matrix.column_sums();
        if c != predicted {
            return Err(Error::PathMismatch("M* column sums disagree with the multiplier formula".into()));
        }
        let next_descent = g;
        assert!(
            next_descent < descent || (q == 1 && descent == 1 && next_descent == 1),
            "descent stalled at {descent}"
        );
        extension.moves.extend(np.moves);
        q = qn;
        descent = next_descent;
        steps.push(DescentStep { l, s, q, descent });
    }
    if !cd_done(&c) {
        return Err(Error::ConstructionFailed(format!("final sums {c:?} fail the prime-column check")));
    }
    Ok(CdPrime { extension, steps, normalized, matrix })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProxyCoprime {
    pub path: RauzyPath,
    pub certificate: CoprimalityCertificate,
    /// Standard vertex where the prime-column loops were attached.
    pub standard: Permutation,
    pub proxy: Permutation,
    pub kind: ProxyKind,
    /// Prefix matrix times that of `path`; columns `d-2` and `d-1` carry the
    /// certified sums.
    pub matrix: IntegerMatrix,
    pub end: Permutation,
    /// Length of the path at the proxy vertex, before the final two stages.
    pub proxy_at: usize,
}

fn b_steps_to_proxy(conv: Convention, sigma: &Permutation) -> Option<(usize, Permutation)> {
    let mut p = sigma.clone();
    for k in 0..sigma.d() {
        if proxy_kind(&p) != ProxyKind::None {
            return Some((k, p));
        }
        p = step_perm(&p, conv.letter(Label::B)).ok()?;
    }
    None
}

/// Steers a path from `pi` to a `σ₄₂₁₃` vertex whose two designated column
/// sums are coprime.
pub fn make_proxy_coprime(pi: &Permutation, cap: u64) -> Result<ProxyCoprime> {
    make_proxy_coprime_after(pi, &IntegerMatrix::identity(pi.d()), cap)
}

/// As [`make_proxy_coprime`], for a path that continues one whose matrix is
/// `prefix`; column sums are those of `prefix` times the new path.
pub fn make_proxy_coprime_after(pi: &Permutation, prefix: &IntegerMatrix, cap: u64) -> Result<ProxyCoprime> {
    let conv = resolve_convention()?;
    let d = pi.d();
    if prefix.d() != d {
        return Err(Error::BadParams("prefix matrix size does not match the permutation".into()));
    }
    if d < 4 {
        return Err(Error::BadParams("d must be at least 4".into()));
    }
    if !is_irreducible(pi) {
        return Err(Error::ReducibleInput(pi.to_string()));
    }
    if let Some(wit) = is_degenerate(pi) {
        return Err(Error::BadInput(format!("{pi} is degenerate (bullet {}, j = {})", wit.bullet, wit.j)));
    }
    let mut path = find_standard_route(conv, pi)?;
    let (standard, route) = path_product(&path)?;
    let mut matrix = prefix.checked_mul(&route)?;
    if d > 4 {
        let cd = make_cd_prime(&matrix, &standard, cap)?;
        path.moves.extend(cd.extension.moves);
        matrix = cd.matrix;
    }
    let (k, proxy) = b_steps_to_proxy(conv, &standard).ok_or(Error::GoalUnreachable)?;
    let kind = if d == 4 { ProxyKind::Proxy4321 } else { proxy_kind(&proxy) };
    let mut to_2431 = conv.translate(&[(Label::B, k as u64)]);
    to_2431.push(conv.letter(Label::A));
    let (s2431, m) = path_product(&RauzyPath::new(standard.clone(), to_2431.clone()))?;
    let proxy_at = path.len() + k;
    path.moves.extend(to_2431);
    matrix = matrix.checked_mul(&m)?;

    let c = matrix.column_sums();
    let first = if kind == ProxyKind::QuasiProxy4321 { 1 } else { d - 3 };
    let designated = [c[first - 1], c[first], c[d - 2], c[d - 1]];
    let certificate = make_columns_coprime(designated, cap)?;
    let kind_path = if kind == ProxyKind::QuasiProxy4321 { PathKind::TildeM2Quasi } else { PathKind::TildeM2Proxy };
    let np = build_named_path(kind_path, [certificate.chosen_a, certificate.chosen_b], d, Some(&proxy))?;
    if np.start != s2431 {
        return Err(Error::ConstructionFailed("second-kind path starts elsewhere".into()));
    }
    path.moves.extend(np.moves);
    matrix = matrix.checked_mul(&np.matrix)?;
    let sums = matrix.column_sums();
    let (b2, b1) = (sums[d - 3], sums[d - 2]);
    if (b2, b1) != (certificate.col2_sum, certificate.col3_sum) || gcd(b2, b1) != 1 {
        return Err(Error::ConstructionFailed(format!("designated sums {b2}, {b1} are not the certified coprime pair")));
    }
    let (end, check) = path_product(&path)?;
    debug_assert_eq!(prefix.checked_mul(&check)?, matrix);
    Ok(ProxyCoprime { path, certificate, standard, proxy, kind, matrix, end, proxy_at })
}

/// Shortest route to a standard vertex from which a few `b` moves reach a
/// proxy or quasi-proxy.
fn find_standard_route(conv: Convention, pi: &Permutation) -> Result<RauzyPath> {
    crate::rauzy::find_path(pi, |p| p.is_standard() && b_steps_to_proxy(conv, p).is_some())
}
