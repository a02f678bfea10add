//! Two-coin representations, covering certificates, gap constants and the
//! finite-horizon k-alphabet mixing checker.
//!
//! The checker never concludes topological mixing. It reports whether, for
//! every ordered pair of allowed k-blocks `(u, v)`, every length in a window
//! `[N, N + horizon]` carries an allowed block `u…v`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, gcd};
use crate::coding::{cover_words, factors, HatKind, HatTable, Word};
use crate::error::{Error, Result};
use crate::iet::ExactIet;

pub const MAX_BUDGET: usize = 1_000_000;

/// `(a, b)` with `a·c2 + b·c3 = M` and `0 ≤ a, b ≤ 5g`, by residues.
pub fn coin_representation(c2: u64, c3: u64, g: u64, m: u64) -> Result<(u64, u64)> {
    if c2 == 0 || c3 == 0 || gcd(c2, c3) != 1 {
        return Err(Error::BadInput(format!("coin values {c2}, {c3} are not coprime")));
    }
    if g as u128 != 2 * c2 as u128 * c3 as u128 {
        return Err(Error::BadInput(format!("g = {g} is not 2·{c2}·{c3}")));
    }
    let big = 5 * g as u128;
    let hi = big * (c2 as u128 + c3 as u128) - g as u128;
    if (m as u128) < g as u128 || m as u128 > hi {
        return Err(Error::OutOfRange { value: m, lo: g, hi: hi.min(u64::MAX as u128) as u64 });
    }
    let (a, b) = coin_inner(c2 as u128, c3 as u128, big, m as u128);
    debug_assert_eq!(a * c2 as u128 + b * c3 as u128, m as u128);
    Ok((a as u64, b as u64))
}

/// `b` is the residue of `M / c3` modulo `c2`, which forces `b < c2`.
fn residue_split(c2: u128, c3: u128, m: u128) -> (u128, u128) {
    let (_, _, y) = ext_gcd(c2 as i128, c3 as i128);
    let inv = y.rem_euclid(c2 as i128) as u128;
    let b = (inv * (m % c2)) % c2;
    ((m - b * c3) / c2, b)
}

fn coin_inner(c2: u128, c3: u128, big: u128, m: u128) -> (u128, u128) {
    if m <= big * c2 {
        residue_split(c2, c3, m)
    } else if m <= big * c3 {
        let (b, a) = residue_split(c3, c2, m);
        (a, b)
    } else {
        let (a, b) = coin_inner(c2, c3, big, big * (c2 + c3) - m);
        (big - a, big - b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCertificate {
    pub g: u64,
    pub block_lengths: Vec<u64>,
    pub gap_constant_c: u64,
    pub threshold: u64,
    pub span: u64,
    pub covered_intervals: Vec<(u64, u64)>,
    pub verified: bool,
    pub first_uncovered: Option<u64>,
}

/// `max_{j ≤ d-3} |B_j| + |B_{d-2}| + |B_{d-1}| + |B_d|`.
pub fn gap_formula(lengths: &[u64]) -> u64 {
    let d = lengths.len();
    lengths[..d - 3].iter().copied().max().unwrap_or(0) + lengths[d - 3] + lengths[d - 2] + lengths[d - 1]
}

/// Chains the covering intervals anchored at `|B_d| + i·C` and checks that
/// they tile `[threshold, threshold + 10g]`.
pub fn coverage_certificate(block_lengths: &[u64], g: u64, c: Option<u64>) -> Result<CoverageCertificate> {
    let d = block_lengths.len();
    if d < 4 {
        return Err(Error::BadParams("need at least four block lengths".into()));
    }
    let (b2, b1, bd) = (block_lengths[d - 3], block_lengths[d - 2], block_lengths[d - 1]);
    if b2 == 0 || b1 == 0 || gcd(b2, b1) != 1 {
        return Err(Error::BadInput(format!("designated lengths {b2}, {b1} are not coprime")));
    }
    if g != 2 * b2 * b1 {
        return Err(Error::BadInput(format!("g = {g} is not 2·{b2}·{b1}")));
    }
    let c = c.unwrap_or_else(|| gap_formula(block_lengths));
    let ov = || Error::Overflow("coverage interval");
    let five_g = g.checked_mul(5).ok_or_else(ov)?;
    let reach = five_g.checked_mul(b2 + b1).ok_or_else(ov)?;
    let lo_off = c + b2 + b1 + g;
    let hi_off = (c + reach).checked_sub(b2 + b1 + g).ok_or_else(ov)?;
    let threshold = bd + lo_off;
    let span = 10 * g;
    let target = threshold + span;

    let mut intervals = Vec::new();
    let mut k = bd;
    while k + lo_off <= target {
        intervals.push((k + lo_off, k + hi_off));
        k += c.max(1);
    }
    let near_lo = (five_g + 1) * b1 + c + g;
    let near_hi = ((five_g + 1) * b1 + five_g * b1 + (five_g + 1) * b2 + c).saturating_sub(g);
    if near_lo <= near_hi {
        intervals.push((near_lo, near_hi));
    }
    let first_uncovered = (threshold..=target).find(|r| !intervals.iter().any(|&(lo, hi)| lo <= *r && *r <= hi));
    Ok(CoverageCertificate {
        g,
        block_lengths: block_lengths.to_vec(),
        gap_constant_c: c,
        threshold,
        span,
        covered_intervals: intervals,
        verified: first_uncovered.is_none(),
        first_uncovered,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub c: u64,
    pub empirical_max_gap: u64,
    pub within: bool,
}

/// The formula constant, and the largest stretch between occurrences of
/// `B_{d-1}^n` or `B_{d-2}^m B_{d-1}^n` inside any `B̂_j B̂_j'`.
pub fn gap_constant(hat: &HatTable, base_lengths: &[u64]) -> Result<GapReport> {
    let d = hat.d;
    if base_lengths.len() != d {
        return Err(Error::BadParams(format!("{} base lengths for d = {d}", base_lengths.len())));
    }
    if hat.m == 0 || hat.n == 0 {
        return Err(Error::BadParams("patterns need m, n ≥ 1".into()));
    }
    if hat.kind == HatKind::FourLetter && d != 4 {
        return Err(Error::BadParams("four-letter table with d ≠ 4".into()));
    }
    let (m, n) = (hat.m as usize, hat.n as usize);
    let (i2, i1) = (d - 2, d - 1);
    let mut worst = 0u64;
    for x in &hat.rows {
        for y in &hat.rows {
            let ids: Vec<usize> = x.ids().chain(y.ids()).collect();
            let mut pos = vec![0u64; ids.len() + 1];
            for (i, &id) in ids.iter().enumerate() {
                pos[i + 1] = pos[i] + base_lengths[id - 1];
            }
            let run = |i: usize, id: usize, len: usize| i + len <= ids.len() && ids[i..i + len].iter().all(|&v| v == id);
            let mut occ: Vec<(u64, u64)> = Vec::new();
            for i in 0..ids.len() {
                if run(i, i1, n) {
                    occ.push((pos[i], pos[i + n]));
                }
                if run(i, i2, m) && run(i + m, i1, n) {
                    occ.push((pos[i], pos[i + m + n]));
                }
            }
            occ.sort_unstable();
            let mut end = match occ.first() {
                Some(&(_, e)) => e,
                None => return Err(Error::BadParams("a hat block pair has no pattern occurrence".into())),
            };
            for &(s, e) in &occ[1..] {
                worst = worst.max(s.saturating_sub(end));
                end = end.max(e);
            }
        }
    }
    let c = gap_formula(base_lengths);
    Ok(GapReport { c, empirical_max_gap: worst, within: worst <= c })
}

/// Achievable bridge lengths for every ordered pair of allowed `k`-blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeTable {
    pub k: usize,
    pub max_len: usize,
    /// Allowed `k`-blocks in lexicographic order.
    pub blocks: Vec<Word>,
    /// Row-major over `(u, v)`; bit `n` set when an allowed `n`-block starts
    /// with `u` and ends with `v`. Only `2k ≤ n ≤ max_len` are recorded.
    pub bits: Vec<Vec<u64>>,
}

impl BridgeTable {
    fn empty(k: usize, max_len: usize, blocks: Vec<Word>) -> Self {
        let words = max_len / 64 + 1;
        let nb = blocks.len();
        BridgeTable { k, max_len, blocks, bits: vec![vec![0; words]; nb * nb] }
    }

    pub fn has(&self, u: usize, v: usize, n: usize) -> bool {
        n <= self.max_len && self.bits[u * self.blocks.len() + v][n / 64] >> (n % 64) & 1 == 1
    }

    fn clip(&mut self) {
        let (lo, hi) = (2 * self.k, self.max_len);
        for row in &mut self.bits {
            for n in 0..lo.min(row.len() * 64) {
                row[n / 64] &= !(1u64 << (n % 64));
            }
            for n in hi + 1..row.len() * 64 {
                row[n / 64] &= !(1u64 << (n % 64));
            }
        }
    }
}

/// 64 bits of `bits` starting at the signed bit offset `at`.
fn extract(bits: &[u64], at: isize) -> u64 {
    let word = at.div_euclid(64);
    let shift = at.rem_euclid(64) as u32;
    let get = |i: isize| if i >= 0 && (i as usize) < bits.len() { bits[i as usize] } else { 0 };
    let lo = get(word) >> shift;
    if shift == 0 {
        lo
    } else {
        lo | get(word + 1) << (64 - shift)
    }
}

/// Bridge table of the language whose allowed blocks up to `max_len` are
/// the factors of `words`.
pub fn bridges_from_cover_words(words: &[Word], k: usize, max_len: usize) -> BridgeTable {
    let blocks: Vec<Word> = factors(words, k).into_iter().collect();
    let nb = blocks.len();
    let index = |w: &[u8]| blocks.binary_search_by(|b| b.as_slice().cmp(w)).ok();
    let mut table = BridgeTable::empty(k, max_len, blocks.clone());
    let nwords = table.bits[0].len();
    for w in words {
        if w.len() < k {
            continue;
        }
        let starts: Vec<usize> = (0..=w.len() - k).map(|s| index(&w[s..s + k]).expect("factor")).collect();
        let mut occ = vec![vec![0u64; w.len() / 64 + 1]; nb];
        for (t, &v) in starts.iter().enumerate() {
            occ[v][t / 64] |= 1 << (t % 64);
        }
        let present: Vec<usize> = (0..nb).filter(|&v| occ[v].iter().any(|&x| x != 0)).collect();
        let chunk = 256;
        let partial = starts
            .par_chunks(chunk)
            .enumerate()
            .fold(
                || vec![vec![0u64; nwords]; nb * nb],
                |mut acc, (ci, us)| {
                    for (off, &u) in us.iter().enumerate() {
                        let s = ci * chunk + off;
                        // Bit n of the result is bit n + s - k of occ.
                        let base = s as isize - k as isize;
                        for &v in &present {
                            let row = &mut acc[u * nb + v];
                            for (i, slot) in row.iter_mut().enumerate() {
                                *slot |= extract(&occ[v], base + 64 * i as isize);
                            }
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![vec![0u64; nwords]; nb * nb],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        for (p, q) in x.iter_mut().zip(y) {
                            *p |= q;
                        }
                    }
                    a
                },
            );
        for (x, y) in table.bits.iter_mut().zip(partial) {
            for (p, q) in x.iter_mut().zip(y) {
                *p |= q;
            }
        }
    }
    table.clip();
    table
}

/// A source of allowed blocks.
pub trait Language: Sync {
    fn alphabet_size(&self) -> usize;
    fn allowed_blocks(&self, l: usize) -> Result<BTreeSet<Word>>;
    fn bridge_table(&self, k: usize, max_len: usize) -> Result<BridgeTable>;
}

/// Exact language of an IET.
pub struct IetLanguage<'a> {
    pub iet: &'a ExactIet,
}

impl Language for IetLanguage<'_> {
    fn alphabet_size(&self) -> usize {
        self.iet.d()
    }

    fn allowed_blocks(&self, l: usize) -> Result<BTreeSet<Word>> {
        crate::coding::allowed_blocks(self.iet, l)
    }

    fn bridge_table(&self, k: usize, max_len: usize) -> Result<BridgeTable> {
        let words = cover_words(self.iet, max_len.max(k).saturating_sub(1))?;
        Ok(bridges_from_cover_words(&words, k, max_len))
    }
}

/// Every word over `{1..d}`.
pub struct FullShift {
    pub d: usize,
}

impl Language for FullShift {
    fn alphabet_size(&self) -> usize {
        self.d
    }

    fn allowed_blocks(&self, l: usize) -> Result<BTreeSet<Word>> {
        let total = (self.d as u64).checked_pow(l as u32).ok_or(Error::Overflow("full shift blocks"))?;
        if total > MAX_BUDGET as u64 {
            return Err(Error::BudgetExceeded { budget: MAX_BUDGET });
        }
        let mut out = BTreeSet::new();
        for mut code in 0..total {
            let mut w = vec![0u8; l];
            for slot in w.iter_mut().rev() {
                *slot = (code % self.d as u64) as u8 + 1;
                code /= self.d as u64;
            }
            out.insert(w);
        }
        Ok(out)
    }

    fn bridge_table(&self, k: usize, max_len: usize) -> Result<BridgeTable> {
        let blocks: Vec<Word> = self.allowed_blocks(k)?.into_iter().collect();
        let mut t = BridgeTable::empty(k, max_len, blocks);
        for row in &mut t.bits {
            row.iter_mut().for_each(|x| *x = u64::MAX);
        }
        t.clip();
        Ok(t)
    }
}

/// Language of a substitution, read off a long prefix of its fixed point.
/// The prefix has length `prefix_factor · max_len + 16`, which contains every
/// factor up to `max_len` for linearly recurrent substitutions such as the
/// Fibonacci one.
pub struct SubstitutionLanguage {
    pub rules: Vec<Word>,
    pub prefix_factor: usize,
}

impl SubstitutionLanguage {
    pub fn fibonacci() -> Self {
        SubstitutionLanguage { rules: vec![vec![1, 2], vec![1]], prefix_factor: 8 }
    }

    fn prefix(&self, len: usize) -> Result<Word> {
        let first = self.rules.first().ok_or_else(|| Error::BadParams("no rules".into()))?;
        if first.len() < 2 || first[0] != 1 {
            return Err(Error::BadParams("letter 1 must be a growing prefix of its image".into()));
        }
        let mut w = vec![1u8];
        while w.len() < len {
            let next: Word = w.iter().flat_map(|&a| self.rules[a as usize - 1].iter().copied()).collect();
            if next.len() <= w.len() {
                return Err(Error::BadParams("substitution does not grow".into()));
            }
            w = next;
        }
        w.truncate(len);
        Ok(w)
    }
}

impl Language for SubstitutionLanguage {
    fn alphabet_size(&self) -> usize {
        self.rules.len()
    }

    fn allowed_blocks(&self, l: usize) -> Result<BTreeSet<Word>> {
        Ok(factors(&[self.prefix(self.prefix_factor * l + 16)?], l))
    }

    fn bridge_table(&self, k: usize, max_len: usize) -> Result<BridgeTable> {
        let w = self.prefix(self.prefix_factor * max_len + 16)?;
        Ok(bridges_from_cover_words(&[w], k, max_len))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixingStatus {
    Verified,
    NotVerified,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailingPair {
    pub u: Word,
    pub v: Word,
    /// Largest length within the budget with no bridge.
    pub missing: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingReport {
    pub k: usize,
    pub status: MixingStatus,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub horizon: usize,
    pub length_budget: usize,
    pub block_count: usize,
    pub failing_pairs: Vec<FailingPair>,
}

/// Least `N` with every length in `[N, N + horizon]` bridged for every pair,
/// subject to `N + horizon ≤ length_budget`.
pub fn alphabet_mixing_check(lang: &dyn Language, k: usize, horizon: usize, length_budget: usize) -> Result<MixingReport> {
    if k == 0 {
        return Err(Error::BadParams("k must be at least 1".into()));
    }
    if length_budget > MAX_BUDGET {
        return Err(Error::BudgetExceeded { budget: MAX_BUDGET });
    }
    if 2 * k + horizon > length_budget {
        return Err(Error::BadParams(format!("budget {length_budget} leaves no room for a window of {horizon} past 2k")));
    }
    let table = lang.bridge_table(k, length_budget)?;
    let nb = table.blocks.len();
    let all = |n: usize| (0..nb * nb).all(|p| table.has(p / nb, p % nb, n));
    let mut n_found = None;
    let mut run_start = None;
    for n in 2 * k..=length_budget {
        if all(n) {
            let s = *run_start.get_or_insert(n);
            if n - s == horizon {
                n_found = Some(s);
                break;
            }
        } else {
            run_start = None;
        }
    }
    let mut failing_pairs = Vec::new();
    if n_found.is_none() {
        for u in 0..nb {
            for v in 0..nb {
                if let Some(missing) = (2 * k..=length_budget).rev().find(|&n| !table.has(u, v, n)) {
                    failing_pairs.push(FailingPair { u: table.blocks[u].clone(), v: table.blocks[v].clone(), missing });
                }
            }
        }
    }
    Ok(MixingReport {
        k,
        status: if n_found.is_some() { MixingStatus::Verified } else { MixingStatus::NotVerified },
        n: n_found,
        horizon,
        length_budget,
        block_count: nb,
        failing_pairs,
    })
}
