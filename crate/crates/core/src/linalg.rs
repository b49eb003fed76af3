//! Sparse exact matrices over ℚ and reduced row echelon form.
//!
//! Indices are 0-based. Zero entries are never stored.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("shape mismatch: {left:?} vs {right:?}")]
pub struct ShapeError {
    pub left: (usize, usize),
    pub right: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BTreeMap<usize, Q>>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![BTreeMap::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<Q>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged dense matrix");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.data[i].get(&j).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, value: Q) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        if value.is_zero() {
            self.data[i].remove(&j);
        } else {
            self.data[i].insert(j, value);
        }
    }

    pub fn row(&self, i: usize) -> &BTreeMap<usize, Q> {
        &self.data[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &BTreeMap<usize, Q>> {
        self.data.iter()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BTreeMap::is_empty)
    }

    /// First stored entry in row-major order.
    pub fn first_nonzero(&self) -> Option<(usize, usize, Q)> {
        self.data.iter().enumerate().find_map(|(i, row)| {
            row.iter().next().map(|(&j, v)| (i, j, v.clone()))
        })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (i, row) in self.data.iter().enumerate() {
            for (&j, v) in row {
                t.data[j].insert(i, v.clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix, ShapeError> {
        if self.cols != other.rows {
            return Err(ShapeError {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (i, row) in self.data.iter().enumerate() {
            let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
            for (&k, a) in row {
                for (&j, b) in &other.data[k] {
                    *acc.entry(j).or_insert_with(Q::zero) += a * b;
                }
            }
            acc.retain(|_, v| !v.is_zero());
            out.data[i] = acc;
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Q]) -> Result<Vec<Q>, ShapeError> {
        if x.len() != self.cols {
            return Err(ShapeError {
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok(self
            .data
            .iter()
            .map(|row| row.iter().map(|(&j, v)| v * &x[j]).sum())
            .collect())
    }

    pub fn scale(&self, k: &Q) -> SparseMatrix {
        let mut out = self.clone();
        for row in &mut out.data {
            for v in row.values_mut() {
                *v *= k;
            }
            row.retain(|_, v| !v.is_zero());
        }
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix, ShapeError> {
        if self.shape() != other.shape() {
            return Err(ShapeError {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = self.clone();
        for (i, row) in other.data.iter().enumerate() {
            for (&j, v) in row {
                let sum = out.get(i, j) + v;
                out.set(i, j, sum);
            }
        }
        Ok(out)
    }

    /// Submatrix of the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let col_pos: BTreeMap<usize, usize> =
            cols.iter().enumerate().map(|(p, &c)| (c, p)).collect();
        let mut out = Self::zeros(rows.len(), cols.len());
        for (pi, &i) in rows.iter().enumerate() {
            for (j, v) in &self.data[i] {
                if let Some(&pj) = col_pos.get(j) {
                    out.data[pi].insert(pj, v.clone());
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<Q>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Reduced row echelon form: the nonzero rows with leading 1s, and the pivot
/// column of each.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub cols: usize,
    pub pivots: Vec<(usize, BTreeMap<usize, Q>)>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn rref(m: &SparseMatrix) -> Echelon {
    let (_, cols) = m.shape();
    let mut remaining: Vec<BTreeMap<usize, Q>> =
        m.rows().filter(|r| !r.is_empty()).cloned().collect();
    let mut pivots: Vec<(usize, BTreeMap<usize, Q>)> = Vec::new();
    for c in 0..cols {
        // Sparsest row with a nonzero in column c keeps fill-in low.
        let Some(pos) = remaining
            .iter()
            .enumerate()
            .filter(|(_, r)| r.contains_key(&c))
            .min_by_key(|(_, r)| r.len())
            .map(|(i, _)| i)
        else {
            continue;
        };
        let mut pivot = remaining.swap_remove(pos);
        let lead = pivot[&c].clone();
        for v in pivot.values_mut() {
            *v /= &lead;
        }
        let eliminate = |row: &mut BTreeMap<usize, Q>| {
            if let Some(f) = row.get(&c).cloned() {
                for (&j, pv) in &pivot {
                    let entry = row.entry(j).or_insert_with(Q::zero);
                    *entry -= &f * pv;
                }
                row.retain(|_, v| !v.is_zero());
            }
        };
        remaining.iter_mut().for_each(eliminate);
        remaining.retain(|r| !r.is_empty());
        pivots.iter_mut().for_each(|(_, r)| eliminate(r));
        pivots.push((c, pivot));
    }
    pivots.sort_by_key(|(c, _)| *c);
    Echelon { cols, pivots }
}

pub fn rank(m: &SparseMatrix) -> usize {
    rref(m).rank()
}

/// Basis of `{x : M x = 0}`, one vector per free column (1 at the free
/// column, 0 at the other free columns).
pub fn nullspace(m: &SparseMatrix) -> Vec<Vec<Q>> {
    let ech = rref(m);
    let pivot_cols: std::collections::BTreeSet<usize> =
        ech.pivots.iter().map(|(c, _)| *c).collect();
    (0..ech.cols)
        .filter(|f| !pivot_cols.contains(f))
        .map(|f| {
            let mut v = vec![Q::zero(); ech.cols];
            v[f] = Q::one();
            for (pc, row) in &ech.pivots {
                if let Some(coef) = row.get(&f) {
                    v[*pc] = -coef.clone();
                }
            }
            v
        })
        .collect()
}

/// Basis of `{y : yᵀ M = 0}`.
pub fn left_nullspace(m: &SparseMatrix) -> Vec<Vec<Q>> {
    nullspace(&m.transpose())
}

/// Whether `v` lies in the span of `basis`.
pub fn span_contains(basis: &[Vec<Q>], v: &[Q]) -> bool {
    let rows: Vec<Vec<Q>> = basis.to_vec();
    let base_rank = if rows.is_empty() {
        0
    } else {
        rank(&SparseMatrix::from_dense(&rows))
    };
    let mut extended = rows;
    extended.push(v.to_vec());
    rank(&SparseMatrix::from_dense(&extended)) == base_rank
}
