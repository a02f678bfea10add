use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Square matrix of nonnegative integers, row-major, 0-based storage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntegerMatrix {
    d: usize,
    entries: Vec<u64>,
}

impl IntegerMatrix {
    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.entries[i * d + i] = 1;
        }
        m
    }

    pub fn zeros(d: usize) -> Self {
        Self { d, entries: vec![0; d * d] }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::BadInput("matrix rows must form a nonempty square".into()));
        }
        Ok(Self { d, entries: rows.into_iter().flatten().collect() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Entry at 0-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.d + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.d).map(|i| self.get(i, j)).collect()
    }

    /// Column sums `|C_1|, ..., |C_d|`.
    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.d).map(|j| (0..self.d).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        let d = self.d;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..d {
                    let v = a.checked_mul(rhs.get(k, j)).and_then(|p| p.checked_add(out.get(i, j)));
                    out.set(i, j, v.ok_or(Error::Overflow("matrix product"))?);
                }
            }
        }
        Ok(out)
    }

    /// `col[dst] += col[src]`.
    pub(crate) fn add_column(&mut self, dst: usize, src: usize) -> Result<()> {
        for i in 0..self.d {
            let v = self.get(i, dst).checked_add(self.get(i, src)).ok_or(Error::Overflow("column update"))?;
            self.set(i, dst, v);
        }
        Ok(())
    }

    /// Exact determinant by fraction-free elimination.
    pub fn determinant(&self) -> i128 {
        let d = self.d;
        let mut a: Vec<Vec<i128>> = self.rows().into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..d {
            if a[k][k] == 0 {
                match (k + 1..d).find(|&r| a[r][k] != 0) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[d - 1][d - 1]
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&x| x > 0)
    }
}

impl fmt::Debug for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.rows() {
            writeln!(f, "{r:?}")?;
        }
        Ok(())
    }
}

impl Serialize for IntegerMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegerMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<u64>>::deserialize(de)?;
        IntegerMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}
