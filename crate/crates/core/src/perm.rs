//! Permutations in one-line notation and the classifications the
//! constructions branch on (irreducible, degenerate, standard, proxy).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A permutation of `{1..d}`; `image[j-1] = π(j)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let d = image.len();
        if d < 2 {
            return Err(Error::BadInput("a permutation needs at least 2 letters".into()));
        }
        let mut seen = vec![false; d + 1];
        for &x in &image {
            if x == 0 || x > d || seen[x] {
                return Err(Error::BadInput(format!("{image:?} is not a bijection of 1..{d}")));
            }
            seen[x] = true;
        }
        Ok(Self { image })
    }

    /// The reversal `(d, d-1, ..., 1)`.
    pub fn reversal(d: usize) -> Self {
        Self { image: (1..=d).rev().collect() }
    }

    pub fn identity(d: usize) -> Self {
        Self { image: (1..=d).collect() }
    }

    pub fn d(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// `π(j)` for 1-based `j`.
    pub fn at(&self, j: usize) -> usize {
        self.image[j - 1]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.d()];
        for (j, &x) in self.image.iter().enumerate() {
            inv[x - 1] = j + 1;
        }
        Self { image: inv }
    }

    /// `π⁻¹(x)` for 1-based `x`.
    pub fn preimage(&self, x: usize) -> usize {
        self.image.iter().position(|&y| y == x).expect("bijection") + 1
    }

    pub fn is_standard(&self) -> bool {
        self.at(1) == self.d() && self.at(self.d()) == 1
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d() <= 9 {
            let s: String = self.image.iter().map(|x| char::from(b'0' + *x as u8)).collect();
            write!(f, "({s})")
        } else {
            let parts: Vec<String> = self.image.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", parts.join(","))
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Accepts `4321`, `(4321)` and comma lists such as `10,3,2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let image = if s.contains(',') {
            s.split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|x| x as usize).ok_or_else(|| Error::Parse(format!("bad digit {c:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(image)
    }
}

#[derive(Serialize, Deserialize)]
struct PermutationJson {
    d: usize,
    image: Vec<usize>,
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PermutationJson { d: self.d(), image: self.image.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = PermutationJson::deserialize(de)?;
        if raw.d != raw.image.len() {
            return Err(serde::de::Error::custom("d does not match image length"));
        }
        Permutation::new(raw.image).map_err(serde::de::Error::custom)
    }
}

/// No proper prefix `{1..k}` is mapped onto itself.
pub fn is_irreducible(p: &Permutation) -> bool {
    let d = p.d();
    let mut max = 0;
    for k in 1..d {
        max = max.max(p.at(k));
        if max == k {
            return false;
        }
    }
    true
}

/// Which of the four degeneracy conditions fired, and at which `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneracyWitness {
    pub bullet: u8,
    pub j: usize,
}

/// First witness in bullet order, then index order.
pub fn is_degenerate(p: &Permutation) -> Option<DegeneracyWitness> {
    let m = p.d();
    let pi = |j: usize| p.at(j);
    let bullets: [&dyn Fn(usize) -> bool; 4] = [
        &|j| pi(j + 1) == pi(j) + 1,
        &|j| pi(j) == m && pi(j + 1) == 1 && pi(1) == pi(m) + 1,
        &|j| pi(j + 1) == 1 && pi(1) == pi(j) + 1,
        &|j| pi(j + 1) == pi(m) + 1 && pi(j) == m,
    ];
    for (b, cond) in bullets.iter().enumerate() {
        if let Some(j) = (1..m).find(|&j| cond(j)) {
            return Some(DegeneracyWitness { bullet: b as u8 + 1, j });
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProxyKind {
    None,
    Proxy4321,
    QuasiProxy4321,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermClass {
    pub irreducible: bool,
    pub degenerate: bool,
    pub standard: bool,
    pub proxy_kind: ProxyKind,
}

pub fn proxy_kind(p: &Permutation) -> ProxyKind {
    let d = p.d();
    if d < 4 || !is_irreducible(p) {
        return ProxyKind::None;
    }
    let tail = p.at(d - 2) == d - 1 && p.at(d - 1) == d - 2 && p.at(d) == 1;
    if tail && p.at(d - 3) == d {
        ProxyKind::Proxy4321
    } else if tail && p.at(1) == d {
        ProxyKind::QuasiProxy4321
    } else {
        ProxyKind::None
    }
}

pub fn classify(p: &Permutation) -> PermClass {
    PermClass {
        irreducible: is_irreducible(p),
        degenerate: is_degenerate(p).is_some(),
        standard: p.is_standard(),
        proxy_kind: proxy_kind(p),
    }
}

/// All permutations of `{1..d}` in lexicographic order.
pub fn all_permutations(d: usize) -> Vec<Permutation> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        let d = used.len();
        if cur.len() == d {
            out.push(Permutation { image: cur.clone() });
            return;
        }
        for x in 1..=d {
            if !used[x - 1] {
                used[x - 1] = true;
                cur.push(x);
                rec(cur, used, out);
                cur.pop();
                used[x - 1] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(d), &mut vec![false; d], &mut out);
    out
}
