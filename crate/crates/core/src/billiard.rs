//! L-shaped tables with opposite sides identified, their transversal
//! 4-IETs, suspension heights, and a finite check of (k, ε)-alphabet mixing
//! for the directional flow.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coding::{cover_words, factors, Word};
use crate::error::{Error, Result};
use crate::iet::ExactIet;
use crate::number::ExactNumber;
use crate::paths::resolve_convention;
use crate::perm::Permutation;

/// Numbers travel as their textual form, e.g. `"-1+sqrt5"`.
mod exact_text {
    use super::*;

    pub fn serialize<S: Serializer>(x: &ExactNumber, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExactNumber, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }

    pub fn serialize_all<S: Serializer>(xs: &[ExactNumber; 4], s: S) -> std::result::Result<S::Ok, S::Error> {
        xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(s)
    }
}

/// Widths `a, b`, heights `s, t` and the direction through `cot θ`, all in
/// one quadratic field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LTable {
    #[serde(with = "exact_text")]
    pub a: ExactNumber,
    #[serde(with = "exact_text")]
    pub b: ExactNumber,
    #[serde(with = "exact_text")]
    pub s: ExactNumber,
    #[serde(with = "exact_text")]
    pub t: ExactNumber,
    #[serde(with = "exact_text")]
    pub cot_theta: ExactNumber,
}

impl LTable {
    pub fn sin_theta(&self) -> f64 {
        let c = self.cot_theta.to_f64();
        1.0 / (1.0 + c * c).sqrt()
    }

    pub fn cos_theta(&self) -> f64 {
        self.cot_theta.to_f64() * self.sin_theta()
    }

    /// `(a − (s+t)cot θ, t cot θ, b, s cot θ)`, before normalizing.
    pub fn lengths(&self) -> Result<[ExactNumber; 4]> {
        let c = &self.cot_theta;
        if [&self.a, &self.b, &self.s, &self.t, c].iter().any(|x| !x.is_positive()) {
            return Err(Error::InvalidDirection);
        }
        let l = [&self.a - &(&(&self.s + &self.t) * c), &self.t * c, self.b.clone(), &self.s * c];
        if l.iter().any(|x| !x.is_positive()) {
            return Err(Error::InvalidDirection);
        }
        Ok(l)
    }

    /// Inverse of [`LTable::lengths`] for a given direction.
    pub fn from_lengths(l: &[ExactNumber; 4], cot_theta: ExactNumber) -> Result<LTable> {
        if !cot_theta.is_positive() || l.iter().any(|x| !x.is_positive()) {
            return Err(Error::InvalidDirection);
        }
        let s = &l[3] / &cot_theta;
        let t = &l[1] / &cot_theta;
        let a = &l[0] + &(&(&s + &t) * &cot_theta);
        Ok(LTable { a, b: l[2].clone(), s, t, cot_theta })
    }
}

/// One-line form of the transversal's permutation, printed `(2413)`.
pub fn transversal_perm() -> Result<Permutation> {
    Ok(resolve_convention()?.read(&"2413".parse()?))
}

/// Transversal IET, lengths divided by `a + b`.
pub fn transversal_iet(table: &LTable) -> Result<ExactIet> {
    let l = table.lengths()?;
    let total = &table.a + &table.b;
    ExactIet::new(transversal_perm()?, l.iter().map(|x| x / &total).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuspensionData {
    /// Return times multiplied by `sin θ`: `s` over `I_3`, `s + t` elsewhere.
    #[serde(serialize_with = "exact_text::serialize_all")]
    pub scaled: [ExactNumber; 4],
    pub sin_theta: f64,
    pub heights: [f64; 4],
}

pub fn suspension_data(table: &LTable) -> Result<SuspensionData> {
    table.lengths()?;
    let full = &table.s + &table.t;
    let scaled = [full.clone(), full.clone(), table.s.clone(), full];
    let sin = table.sin_theta();
    let heights = [0, 1, 2, 3].map(|i| scaled[i].to_f64() / sin);
    let data = SuspensionData { scaled, sin_theta: sin, heights };
    validate_suspension(table, &data)?;
    Ok(data)
}

/// `h_3 cos θ = |I_4|` and `h_1 cos θ = |I_2| + |I_4|`, exactly on the scaled
/// heights and to `1e-12` on the real ones; `h_3 < h_1 = h_2 = h_4`.
pub fn validate_suspension(table: &LTable, data: &SuspensionData) -> Result<()> {
    let l = table.lengths()?;
    let c = &table.cot_theta;
    let bad = |what: &str| Err(Error::BadInput(format!("suspension heights violate {what}")));
    if &data.scaled[2] * c != l[3] {
        return bad("h3·cos θ = |I4|");
    }
    for i in [0, 1, 3] {
        if &data.scaled[i] * c != &l[1] + &l[3] {
            return bad("h·cos θ = |I2| + |I4|");
        }
    }
    if data.scaled[2] >= data.scaled[0] {
        return bad("h3 < h1");
    }
    let cos = table.cos_theta();
    let tol = 1e-12 * (1.0 + l.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max));
    if (data.heights[2] * cos - l[3].to_f64()).abs() > tol
        || [0, 1, 3].iter().any(|&i| (data.heights[i] * cos - (l[1].to_f64() + l[3].to_f64())).abs() > tol)
    {
        return bad("the real return-time identities");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Verified,
    NotVerified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowGap {
    pub u: Word,
    pub v: Word,
    /// Largest grid time below `t_max` left uncovered.
    pub uncovered: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowMixingReport {
    pub k: usize,
    pub epsilon: f64,
    pub t_max: f64,
    pub status: FlowStatus,
    /// Least grid time from which every grid time up to `t_max` is within
    /// `ε` of a bridge height, for every pair.
    pub t0: Option<f64>,
    pub block_count: usize,
    pub gaps: Vec<FlowGap>,
}

/// Verified when the covered suffix `[T₀, t_max]` spans at least half of
/// `[0, t_max]`. Grid spacing is `ε/2`; a grid time counts as covered when a
/// bridge height lands in one of the two buckets of width `ε/2` around it.
pub fn flow_mixing_check(iet: &ExactIet, heights: &[f64], k: usize, epsilon: f64, t_max: f64, length_budget: usize) -> Result<FlowMixingReport> {
    if !(epsilon > 0.0) || !(t_max > 0.0) || k == 0 {
        return Err(Error::BadParams("need ε > 0, t_max > 0 and k ≥ 1".into()));
    }
    if heights.len() != iet.d() || heights.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::BadParams("one positive height per interval".into()));
    }
    let h_min = heights.iter().copied().fold(f64::INFINITY, f64::min);
    let need = (t_max / h_min).ceil() as usize + 2 * k + 1;
    if need > length_budget {
        return Err(Error::BudgetExceeded { budget: length_budget });
    }
    let words = cover_words(iet, need)?;
    flow_check_words(&words, heights, k, epsilon, t_max)
}

/// [`flow_mixing_check`] on a language given by cover words.
pub fn flow_check_words(words: &[Word], heights: &[f64], k: usize, epsilon: f64, t_max: f64) -> Result<FlowMixingReport> {
    use rayon::prelude::*;
    let blocks: Vec<Word> = factors(words, k).into_iter().collect();
    let nb = blocks.len();
    let width = epsilon / 2.0;
    let grid = (t_max / width).floor() as usize;
    let limit = t_max + epsilon;
    let per_pair: Vec<Vec<bool>> = (0..nb * nb)
        .into_par_iter()
        .map(|pair| {
            let (u, v) = (&blocks[pair / nb], &blocks[pair % nb]);
            let mut occupied = vec![false; grid + 2];
            for w in words {
                let mut prefix = vec![0.0f64; w.len() + 1];
                for (i, &a) in w.iter().enumerate() {
                    prefix[i + 1] = prefix[i] + heights[a as usize - 1];
                }
                for s in 0..w.len().saturating_sub(2 * k - 1) {
                    if &w[s..s + k] != u.as_slice() {
                        continue;
                    }
                    for t in s + k..=w.len() - k {
                        let sum = prefix[t + k] - prefix[s];
                        if sum > limit {
                            break;
                        }
                        if &w[t..t + k] == v.as_slice() {
                            let b = (sum / width).floor() as usize;
                            if b < occupied.len() {
                                occupied[b] = true;
                            }
                        }
                    }
                }
            }
            (0..=grid).map(|i| occupied[i] || (i > 0 && occupied[i - 1])).collect()
        })
        .collect();
    let covered = |i: usize| per_pair.iter().all(|c| c[i]);
    let mut first = grid + 1;
    while first > 0 && covered(first - 1) {
        first -= 1;
    }
    let t0 = (first <= grid).then(|| first as f64 * width);
    let verified = t0.is_some_and(|t| t <= t_max / 2.0);
    let mut gaps = Vec::new();
    if !verified {
        for (pair, c) in per_pair.iter().enumerate() {
            if let Some(i) = (0..=grid).rev().find(|&i| !c[i]) {
                gaps.push(FlowGap { u: blocks[pair / nb].clone(), v: blocks[pair % nb].clone(), uncovered: i as f64 * width });
            }
        }
    }
    Ok(FlowMixingReport {
        k,
        epsilon,
        t_max,
        status: if verified { FlowStatus::Verified } else { FlowStatus::NotVerified },
        t0,
        block_count: nb,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> ExactNumber {
        s.parse().unwrap()
    }

    fn table(a: &str, b: &str, s: &str, t: &str, c: &str) -> LTable {
        LTable { a: q(a), b: q(b), s: q(s), t: q(t), cot_theta: q(c) }
    }

    #[test]
    fn transversal_examples() {
        let t = transversal_iet(&table("3", "1", "1", "1", "1")).unwrap();
        assert_eq!(t.lengths(), vec![q("1/4"); 4].as_slice());
        assert_eq!(t.perm(), &"3142".parse::<Permutation>().unwrap());
        let t = transversal_iet(&table("3", "1", "1", "1", "1/2")).unwrap();
        assert_eq!(t.lengths(), [q("1/2"), q("1/8"), q("1/4"), q("1/8")].as_slice());
        assert_eq!(transversal_iet(&table("2", "1", "1", "1", "1")), Err(Error::InvalidDirection));
    }

    #[test]
    fn heights_at_forty_five_degrees() {
        let tb = table("3", "1", "1", "1", "1");
        let h = suspension_data(&tb).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        assert!((h.heights[2] - r2).abs() < 1e-12);
        for i in [0, 1, 3] {
            assert!((h.heights[i] - 2.0 * r2).abs() < 1e-12);
        }
        let mut bad = h.clone();
        bad.scaled[2] = q("3/2");
        assert!(validate_suspension(&tb, &bad).is_err());
    }

    #[test]
    fn round_trip() {
        let tb = table("3", "1", "1", "-1+sqrt5", "1/2");
        let back = LTable::from_lengths(&tb.lengths().unwrap(), tb.cot_theta.clone()).unwrap();
        assert_eq!(back, tb);
        let json = serde_json::to_string(&tb).unwrap();
        assert!(json.contains("\"cot_theta\":\"1/2\""));
        assert_eq!(serde_json::from_str::<LTable>(&json).unwrap(), tb);
    }

    #[test]
    fn equal_heights_give_an_arithmetic_progression() {
        let words = vec![vec![1, 2, 1, 1, 2, 2, 2, 1, 2, 1, 1, 1, 2, 1, 2, 2, 1, 1, 2, 1, 2, 1, 1, 2, 2, 1]];
        let r = flow_check_words(&words, &[1.0, 1.0], 1, 1.0, 12.0).unwrap();
        assert_eq!(r.status, FlowStatus::Verified);
        assert_eq!(r.t0, Some(2.0));
        let r = flow_check_words(&words, &[1.0, 1.0], 1, 0.5, 12.0).unwrap();
        assert_eq!(r.status, FlowStatus::NotVerified);
    }

    #[test]
    fn equal_legs_halve_the_short_height() {
        let h = suspension_data(&table("5", "2", "3/2", "3/2", "1/3")).unwrap();
        assert_eq!(&h.scaled[2] + &h.scaled[2], h.scaled[0]);
        assert!((2.0 * h.heights[2] - h.heights[0]).abs() < 1e-12);
    }

    /// Every bridge sum listed by direct enumeration, then the grid scanned
    /// against sorted sums.
    fn brute_t0(words: &[Word], h: &[f64], eps: f64, t_max: f64) -> Option<f64> {
        let w = eps / 2.0;
        let grid = (t_max / w).floor() as usize;
        let mut ok = vec![true; grid + 1];
        for u in 1..=4u8 {
            for v in 1..=4u8 {
                let mut sums = Vec::new();
                for x in words {
                    for s in 0..x.len() {
                        let mut acc = 0.0;
                        for t in s..x.len() {
                            acc += h[x[t] as usize - 1];
                            if t > s && x[s] == u && x[t] == v {
                                sums.push(acc);
                            }
                        }
                    }
                }
                for (i, o) in ok.iter_mut().enumerate() {
                    let lo = (i as f64 - 1.0) * w;
                    let hi = (i as f64 + 1.0) * w;
                    *o &= sums.iter().any(|&x| x >= lo - 1e-9 && x < hi - 1e-9);
                }
            }
        }
        let first = (0..=grid).rev().take_while(|&i| ok[i]).last()?;
        Some(first as f64 * w)
    }

    #[test]
    fn flow_check_agrees_with_enumeration() {
        let tb = table("3", "1/2", "1", "sqrt2", "1/5");
        let it = transversal_iet(&tb).unwrap();
        let h = suspension_data(&tb).unwrap().heights;
        let words = cover_words(&it, 80).unwrap();
        let mut found = Vec::new();
        for eps in [0.5, 2.0, 6.0, 12.0] {
            let r = flow_check_words(&words, &h, 1, eps, 40.0).unwrap();
            assert_eq!(r.t0, brute_t0(&words, &h, eps, 40.0), "ε = {eps}");
            found.push(r.t0);
        }
        assert!(found.iter().any(|t| t.is_some()) && found.iter().any(|t| t.is_none()), "{found:?}");
    }

    #[test]
    fn epsilon_must_be_positive() {
        let tb = table("3", "1", "1", "-1+sqrt5", "1/2");
        let t = transversal_iet(&tb).unwrap();
        assert!(flow_mixing_check(&t, &[1.0; 4], 1, 0.0, 10.0, 1000).is_err());
    }
}
