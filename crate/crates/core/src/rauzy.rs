//! Rauzy induction on permutations and transition matrices, Rauzy classes
//! and shortest-path search inside a class.
//!
//! Moves follow the induction equations literally: with `t = π⁻¹(d)`,
//! move `A` is taken when the last interval is shorter than interval `t`
//! (the rightmost discontinuity of `T` is the larger one), move `B` otherwise.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::IntegerMatrix;
use crate::perm::{is_irreducible, Permutation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    A,
    B,
}

impl Move {
    pub fn other(self) -> Self {
        match self {
            Move::A => Move::B,
            Move::B => Move::A,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::A => "A",
            Move::B => "B",
        })
    }
}

impl std::str::FromStr for Move {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match parse_moves(s)?.as_slice() {
            [m] => Ok(*m),
            _ => Err(Error::Parse(format!("expected a single move, got {s:?}"))),
        }
    }
}

/// Parses words like `AABAB` (whitespace ignored).
pub fn parse_moves(s: &str) -> Result<Vec<Move>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'A' | 'a' => Ok(Move::A),
            'B' | 'b' => Ok(Move::B),
            other => Err(Error::Parse(format!("bad move {other:?}"))),
        })
        .collect()
}

pub fn moves_to_string(moves: &[Move]) -> String {
    moves.iter().map(|m| m.to_string()).collect()
}

/// The permutation after one move, without the matrix.
pub fn step_perm(p: &Permutation, m: Move) -> Result<Permutation> {
    if !is_irreducible(p) {
        return Err(Error::ReducibleInput(p.to_string()));
    }
    let d = p.d();
    let t = p.preimage(d);
    let pd = p.at(d);
    let image: Vec<usize> = match m {
        Move::A => (1..=d)
            .map(|j| match j.cmp(&(t + 1)) {
                std::cmp::Ordering::Less => p.at(j),
                std::cmp::Ordering::Equal => pd,
                std::cmp::Ordering::Greater => p.at(j - 1),
            })
            .collect(),
        Move::B => (1..=d)
            .map(|j| {
                let x = p.at(j);
                if x <= pd {
                    x
                } else if x < d {
                    x + 1
                } else {
                    pd + 1
                }
            })
            .collect(),
    };
    Permutation::new(image)
}

/// Right-multiplies `acc` in place by the matrix of move `m` at `p`.
pub(crate) fn apply_step_matrix(acc: &mut IntegerMatrix, p: &Permutation, m: Move) -> Result<()> {
    let d = p.d();
    let t = p.preimage(d);
    match m {
        Move::B => acc.add_column(t - 1, d - 1),
        Move::A => {
            // columns j > t+1 take old column j-1; column t+1 = col t + col d
            let cols: Vec<Vec<u64>> = (0..d).map(|j| acc.column(j)).collect();
            for j in (t + 1)..d {
                for i in 0..d {
                    acc.set(i, j, cols[j - 1][i]);
                }
            }
            for i in 0..d {
                let v = cols[t - 1][i].checked_add(cols[d - 1][i]).ok_or(Error::Overflow("step matrix"))?;
                acc.set(i, t, v);
            }
            Ok(())
        }
    }
}

/// One Rauzy step: the new permutation and the single-step matrix.
pub fn step(p: &Permutation, m: Move) -> Result<(Permutation, IntegerMatrix)> {
    let q = step_perm(p, m)?;
    let mut mat = IntegerMatrix::identity(p.d());
    apply_step_matrix(&mut mat, p, m)?;
    Ok((q, mat))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RauzyPath {
    pub start: Permutation,
    pub moves: Vec<Move>,
}

impl RauzyPath {
    pub fn new(start: Permutation, moves: Vec<Move>) -> Self {
        Self { start, moves }
    }

    pub fn empty(start: Permutation) -> Self {
        Self { start, moves: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Appends `other`; its start must be this path's end.
    pub fn extend(&mut self, other: &RauzyPath) -> Result<()> {
        let (end, _) = path_end(self)?;
        if end != other.start {
            return Err(Error::BadParams(format!("cannot append a path from {} to one ending at {}", other.start, end)));
        }
        self.moves.extend_from_slice(&other.moves);
        Ok(())
    }
}

/// End permutation and the intermediate permutations (including start).
fn path_end(path: &RauzyPath) -> Result<(Permutation, Vec<Permutation>)> {
    let mut p = path.start.clone();
    let mut seen = vec![p.clone()];
    for &m in &path.moves {
        p = step_perm(&p, m)?;
        seen.push(p.clone());
    }
    Ok((p, seen))
}

/// End permutation and `M = M_1 M_2 ... M_n` in move order.
pub fn path_product(path: &RauzyPath) -> Result<(Permutation, IntegerMatrix)> {
    if !is_irreducible(&path.start) {
        return Err(Error::ReducibleInput(path.start.to_string()));
    }
    let mut p = path.start.clone();
    let mut acc = IntegerMatrix::identity(p.d());
    for &m in &path.moves {
        apply_step_matrix(&mut acc, &p, m)?;
        p = step_perm(&p, m)?;
    }
    Ok((p, acc))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEdge {
    pub from: Permutation,
    #[serde(rename = "move")]
    pub mv: Move,
    pub to: Permutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RauzyClassGraph {
    /// Lexicographic one-line order.
    pub vertices: Vec<Permutation>,
    /// Sorted by source vertex, then move.
    pub edges: Vec<ClassEdge>,
}

impl RauzyClassGraph {
    pub fn contains(&self, p: &Permutation) -> bool {
        self.vertices.binary_search(p).is_ok()
    }

    pub fn out_degrees(&self) -> BTreeMap<Permutation, usize> {
        let mut out: BTreeMap<Permutation, usize> = self.vertices.iter().map(|v| (v.clone(), 0)).collect();
        for e in &self.edges {
            *out.get_mut(&e.from).expect("edge source is a vertex") += 1;
        }
        out
    }

    pub fn is_strongly_connected(&self) -> bool {
        let Some(root) = self.vertices.first() else { return true };
        let reach = |forward: bool| {
            let mut seen = BTreeSet::from([root.clone()]);
            let mut queue = VecDeque::from([root.clone()]);
            while let Some(v) = queue.pop_front() {
                for e in &self.edges {
                    let (a, b) = if forward { (&e.from, &e.to) } else { (&e.to, &e.from) };
                    if *a == v && seen.insert(b.clone()) {
                        queue.push_back(b.clone());
                    }
                }
            }
            seen.len()
        };
        reach(true) == self.vertices.len() && reach(false) == self.vertices.len()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph rauzy_class {\n");
        for v in &self.vertices {
            s.push_str(&format!("  \"{v}\";\n"));
        }
        for e in &self.edges {
            s.push_str(&format!("  \"{}\" -> \"{}\" [label=\"{}\"];\n", e.from, e.to, e.mv));
        }
        s.push_str("}\n");
        s
    }
}

/// Closure of `p` under both moves.
pub fn enumerate_class(p: &Permutation) -> Result<RauzyClassGraph> {
    if !is_irreducible(p) {
        return Err(Error::ReducibleInput(p.to_string()));
    }
    let mut seen = BTreeSet::from([p.clone()]);
    let mut queue = VecDeque::from([p.clone()]);
    let mut edges = Vec::new();
    while let Some(v) = queue.pop_front() {
        for m in [Move::A, Move::B] {
            let w = step_perm(&v, m)?;
            if seen.insert(w.clone()) {
                queue.push_back(w.clone());
            }
            edges.push(ClassEdge { from: v.clone(), mv: m, to: w });
        }
    }
    edges.sort_by(|x, y| (&x.from, x.mv).cmp(&(&y.from, y.mv)));
    Ok(RauzyClassGraph { vertices: seen.into_iter().collect(), edges })
}

/// Shortest path (BFS, `A` before `B`) from `p` to a vertex satisfying `goal`.
pub fn find_path(p: &Permutation, goal: impl Fn(&Permutation) -> bool) -> Result<RauzyPath> {
    if !is_irreducible(p) {
        return Err(Error::ReducibleInput(p.to_string()));
    }
    let mut parent: BTreeMap<Permutation, Option<(Permutation, Move)>> = BTreeMap::from([(p.clone(), None)]);
    let mut queue = VecDeque::from([p.clone()]);
    while let Some(v) = queue.pop_front() {
        if goal(&v) {
            let mut moves = Vec::new();
            let mut cur = v;
            while let Some(Some((prev, m))) = parent.get(&cur) {
                moves.push(*m);
                cur = prev.clone();
            }
            moves.reverse();
            return Ok(RauzyPath::new(p.clone(), moves));
        }
        for m in [Move::A, Move::B] {
            let w = step_perm(&v, m)?;
            if !parent.contains_key(&w) {
                parent.insert(w.clone(), Some((v.clone(), m)));
                queue.push_back(w);
            }
        }
    }
    Err(Error::GoalUnreachable)
}
