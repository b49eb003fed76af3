//! Finite truncations of `uC_φ`, `C_φ` and `M_u` on ℓ^p, and their norms.
//!
//! A truncation of size `N` keeps coordinates `1..=N`. Row `m` carries the
//! single entry `u(m)` in column `φ(m)`; rows whose image leaves the window
//! are zero. Entries are exact; only norms are computed in floating point.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};

use crate::linalg::{ShapeError, SparseMatrix};
use crate::rational::{fmt_q, to_f64, Q};
use crate::symbol::{Cardinality, MapTail, SelfMap, WeightSeq};

/// Relative tolerance of the 2-norm power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-12;
/// Iteration cap of the 2-norm power iteration.
pub const POWER_ITERATION_MAX: usize = 10_000;

/// Exponent `p ∈ [1, ∞]` of the ambient ℓ^p space.
#[derive(Debug, Clone, Copy)]
pub enum Exponent {
    One,
    Two,
    Infinity,
    /// Any other finite `p > 1`.
    Other(f64),
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self, OperatorError> {
        if p.is_nan() || p < 1.0 {
            return Err(OperatorError::InvalidExponent(p.to_string()));
        }
        Ok(if p == 1.0 {
            Exponent::One
        } else if p == 2.0 {
            Exponent::Two
        } else if p.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Other(p)
        })
    }

    /// Finite value of `p`, `None` for `p = ∞`.
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::One => Some(1.0),
            Exponent::Two => Some(2.0),
            Exponent::Infinity => None,
            Exponent::Other(p) => Some(p),
        }
    }
}

impl PartialEq for Exponent {
    fn eq(&self, other: &Self) -> bool {
        self.finite().map(f64::to_bits) == other.finite().map(f64::to_bits)
    }
}

impl Eq for Exponent {}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.finite() {
            None => f.write_str("inf"),
            Some(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Exponent {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::Infinity);
        }
        let p = match crate::rational::parse_q(t) {
            Ok(v) => to_f64(&v),
            Err(_) => return Err(OperatorError::InvalidExponent(s.to_string())),
        };
        Exponent::new(p)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exponent mismatch: {0} vs {1}")]
    ExponentMismatch(Exponent, Exponent),
    #[error("invalid exponent {0:?}; expected p >= 1 or inf")]
    InvalidExponent(String),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last estimate {last}, relative change {residual})"
    )]
    NoConvergence {
        last: f64,
        residual: f64,
        iterations: usize,
    },
}

impl From<ShapeError> for OperatorError {
    fn from(e: ShapeError) -> Self {
        OperatorError::DimensionMismatch {
            expected: e.left.1,
            found: e.right.0,
        }
    }
}

/// The weighted composition operator `f ↦ u·(f∘φ)` on ℓ^p.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub weight: WeightSeq,
    pub map: SelfMap,
    pub p: Exponent,
}

impl OperatorSpec {
    pub fn new(weight: WeightSeq, map: SelfMap, p: Exponent) -> Self {
        OperatorSpec { weight, map, p }
    }

    /// `C_φ`.
    pub fn composition(map: SelfMap, p: Exponent) -> Self {
        Self::new(WeightSeq::ones(), map, p)
    }

    /// `M_u`.
    pub fn multiplication(weight: WeightSeq, p: Exponent) -> Self {
        Self::new(weight, SelfMap::identity(), p)
    }

    pub fn with_weight(&self, weight: WeightSeq) -> Self {
        Self::new(weight, self.map.clone(), self.p)
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} C[{}] on l^{}", self.weight, self.map, self.p)
    }
}

/// Exact square matrix acting on the first `dim` coordinates of ℓ^p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedOperator {
    matrix: SparseMatrix,
    p: Exponent,
}

impl TruncatedOperator {
    pub fn new(matrix: SparseMatrix, p: Exponent) -> Result<Self, OperatorError> {
        let (r, c) = matrix.shape();
        if r != c {
            return Err(OperatorError::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        if r == 0 {
            return Err(OperatorError::ZeroDimension);
        }
        Ok(TruncatedOperator { matrix, p })
    }

    pub fn identity(dim: usize, p: Exponent) -> Self {
        TruncatedOperator {
            matrix: SparseMatrix::identity(dim),
            p,
        }
    }

    pub fn zero(dim: usize, p: Exponent) -> Self {
        TruncatedOperator {
            matrix: SparseMatrix::zeros(dim, dim),
            p,
        }
    }

    /// Diagonal operator with the given diagonal.
    pub fn diagonal(diag: &[Q], p: Exponent) -> Self {
        let mut m = SparseMatrix::zeros(diag.len(), diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, v.clone());
        }
        TruncatedOperator { matrix: m, p }
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape().0
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Entry at coordinates `(m, n)`, both 1-based.
    pub fn entry(&self, m: usize, n: usize) -> Q {
        self.matrix.get(m - 1, n - 1)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }

    /// Dense CSV, row-major, each entry as `"p/q"`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.matrix.to_dense() {
            let cells: Vec<String> = row.iter().map(fmt_q).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, p: Exponent) -> Result<Self, String> {
        let rows: Vec<Vec<Q>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| crate::rational::parse_q(c).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err("matrix is not square".to_string());
        }
        Self::new(SparseMatrix::from_dense(&rows), p).map_err(|e| e.to_string())
    }
}

/// Assembles the `N×N` truncation of `uC_φ`.
pub fn assemble(spec: &OperatorSpec, n: usize) -> TruncatedOperator {
    assert!(n >= 1, "truncation size must be positive");
    let mut m = SparseMatrix::zeros(n, n);
    for row in 1..=n as u64 {
        let target = spec.map.eval(row);
        if target as usize <= n {
            m.set(row as usize - 1, target as usize - 1, spec.weight.eval(row));
        }
    }
    TruncatedOperator { matrix: m, p: spec.p }
}

/// Outcome of the boundedness test, with the reason it was decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundedness {
    pub bounded: bool,
    pub reason: String,
}

/// Decides whether `uC_φ` is bounded on ℓ^p.
///
/// For finite `p` the criterion is `sup_n Σ_{m∈φ⁻¹(n)} |u(m)|^p < ∞`. Finite
/// fibers are uniformly bounded in size and `u` is bounded, so only a
/// constant tail (one infinite fiber) can break it, and then the sum
/// converges exactly when the tail of `u` lies in ℓ^p. On ℓ^∞ every
/// `uC_φ` with bounded `u` is bounded.
pub fn is_bounded(spec: &OperatorSpec) -> Boundedness {
    let Some(p) = spec.p.finite() else {
        return Boundedness {
            bounded: true,
            reason: "p = inf: |u f(phi)| <= sup|u| sup|f|".into(),
        };
    };
    match spec.map.fiber_bound() {
        Cardinality::Finite(b) => Boundedness {
            bounded: true,
            reason: format!("fibers have at most {b} points and u is bounded"),
        },
        Cardinality::Infinite => {
            let MapTail::Const(c) = spec.map.tail() else {
                unreachable!("only constant tails have infinite fibers")
            };
            if spec.weight.in_lp(Some(p)) {
                Boundedness {
                    bounded: true,
                    reason: format!("fiber of {c} is infinite but the tail of u is in l^{p}"),
                }
            } else {
                Boundedness {
                    bounded: false,
                    reason: format!(
                        "fiber of {c} is infinite and sum of |u|^{p} over it diverges"
                    ),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMethod {
    /// Maximum absolute column sum, exact.
    ColumnSum,
    /// Maximum absolute row sum, exact.
    RowSum,
    /// Power iteration on `TᵀT`.
    PowerIteration { iterations: usize },
    /// Probe lower bound and Riesz–Thorin upper bound.
    Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorNorm {
    Point { value: f64, method: NormMethod },
    Interval { lower: f64, upper: f64 },
}

impl OperatorNorm {
    pub fn point(&self) -> Option<f64> {
        match self {
            OperatorNorm::Point { value, .. } => Some(*value),
            OperatorNorm::Interval { .. } => None,
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            OperatorNorm::Point { value, .. } => *value,
            OperatorNorm::Interval { lower, .. } => *lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            OperatorNorm::Point { value, .. } => *value,
            OperatorNorm::Interval { upper, .. } => *upper,
        }
    }
}

fn max_abs_row_sum(m: &SparseMatrix) -> Q {
    m.rows()
        .map(|r| r.values().map(Signed::abs).sum::<Q>())
        .max()
        .unwrap_or_else(Q::zero)
}

/// Operator norm of a truncation on ℓ^p.
pub fn operator_norm(t: &TruncatedOperator) -> Result<OperatorNorm, OperatorError> {
    match t.p {
        Exponent::One => Ok(OperatorNorm::Point {
            value: to_f64(&max_abs_row_sum(&t.matrix.transpose())),
            method: NormMethod::ColumnSum,
        }),
        Exponent::Infinity => Ok(OperatorNorm::Point {
            value: to_f64(&max_abs_row_sum(&t.matrix)),
            method: NormMethod::RowSum,
        }),
        Exponent::Two => {
            let (value, iterations) = spectral_norm(&t.matrix)?;
            Ok(OperatorNorm::Point {
                value,
                method: NormMethod::PowerIteration { iterations },
            })
        }
        Exponent::Other(p) => {
            let n1 = to_f64(&max_abs_row_sum(&t.matrix.transpose()));
            let ninf = to_f64(&max_abs_row_sum(&t.matrix));
            let upper = n1.powf(1.0 / p) * ninf.powf(1.0 - 1.0 / p);
            let lower = probe_lower_bound(t, p).min(upper);
            Ok(OperatorNorm::Interval { lower, upper })
        }
    }
}

fn float_rows(m: &SparseMatrix) -> Vec<Vec<(usize, f64)>> {
    m.rows()
        .map(|r| r.iter().map(|(&j, v)| (j, to_f64(v))).collect())
        .collect()
}

fn sparse_apply(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
        .collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Iterations on one power of `TᵀT` before it is squared.
const SQUARING_PERIOD: usize = 64;
/// Largest power of `TᵀT` the iteration squares up to.
const MAX_POWER: u32 = 1 << 24;

/// Sparse `A·B` in floating point.
fn float_mul(a: &[Vec<(usize, f64)>], b: &[Vec<(usize, f64)>]) -> Vec<Vec<(usize, f64)>> {
    a.iter()
        .map(|row| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for &(k, x) in row {
                for &(j, y) in &b[k] {
                    *acc.entry(j).or_insert(0.0) += x * y;
                }
            }
            acc.into_iter().filter(|&(_, v)| v != 0.0).collect()
        })
        .collect()
}

/// Largest singular value via power iteration on `M = TᵀT`, stopping on a
/// relative change of at most [`POWER_ITERATION_TOL`] in the estimate.
///
/// Near-degenerate top eigenvalues make plain iteration crawl, so after every
/// [`SQUARING_PERIOD`] unconverged steps the iterated matrix is squared
/// (`M → M²`, rescaled to unit max entry); the iterates stay those of power
/// iteration on `M`, subsampled at powers of two.
fn spectral_norm(m: &SparseMatrix) -> Result<(f64, usize), OperatorError> {
    let dim = m.shape().1;
    let rows = float_rows(m);
    let cols = float_rows(&m.transpose());
    let mut gram = float_mul(&cols, &rows);
    // gram = scale · (TᵀT)^power
    let mut log_scale = 0.0f64;
    let mut power: u32 = 1;
    // Slightly non-uniform start so no eigenvector is missed by symmetry.
    let mut v: Vec<f64> = (0..dim)
        .map(|i| 1.0 + (i + 1) as f64 / (4.0 * dim as f64))
        .collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut estimate_prev = f64::NAN;
    let mut estimate = 0.0;
    let mut since_squaring = 0;
    for it in 1..=POWER_ITERATION_MAX {
        let w = sparse_apply(&gram, &v);
        let rayleigh = dot(&v, &w);
        if rayleigh <= 0.0 {
            return Ok((0.0, it));
        }
        estimate = ((rayleigh.ln() - log_scale) / f64::from(power)).exp();
        let wn = dot(&w, &w).sqrt();
        v = w.into_iter().map(|x| x / wn).collect();
        if (estimate - estimate_prev).abs() <= POWER_ITERATION_TOL * estimate {
            return Ok((estimate.sqrt(), it));
        }
        estimate_prev = estimate;
        since_squaring += 1;
        if since_squaring == SQUARING_PERIOD && power < MAX_POWER {
            gram = float_mul(&gram, &gram);
            let peak = gram
                .iter()
                .flat_map(|r| r.iter().map(|&(_, x)| x.abs()))
                .fold(0.0, f64::max);
            if peak == 0.0 {
                return Ok((0.0, it));
            }
            gram.iter_mut()
                .for_each(|r| r.iter_mut().for_each(|(_, x)| *x /= peak));
            log_scale = 2.0 * log_scale - peak.ln();
            power *= 2;
            since_squaring = 0;
            estimate_prev = f64::NAN;
        }
    }
    Err(OperatorError::NoConvergence {
        last: estimate.sqrt(),
        residual: ((estimate - estimate_prev) / estimate).abs(),
        iterations: POWER_ITERATION_MAX,
    })
}

/// `max ‖Tx‖_p / ‖x‖_p` over unit coordinate vectors, the all-ones vector and
/// the sign pattern of every row.
fn probe_lower_bound(t: &TruncatedOperator, p: f64) -> f64 {
    let dim = t.dim();
    let rows = float_rows(&t.matrix);
    let ratio = |x: &[f64]| {
        let tx = sparse_apply(&rows, x);
        let nx = float_norm(x, Some(p));
        if nx == 0.0 {
            0.0
        } else {
            float_norm(&tx, Some(p)) / nx
        }
    };
    let mut best: f64 = 0.0;
    let cols = float_rows(&t.matrix.transpose());
    for col in &cols {
        let norm: f64 = col.iter().map(|(_, v)| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        best = best.max(norm);
    }
    best = best.max(ratio(&vec![1.0; dim]));
    for r in &rows {
        if r.is_empty() {
            continue;
        }
        let mut x = vec![0.0; dim];
        for &(j, v) in r {
            x[j] = v.signum();
        }
        best = best.max(ratio(&x));
    }
    best
}

fn float_norm(x: &[f64], p: Option<f64>) -> f64 {
    match p {
        None => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        Some(1.0) => x.iter().map(|v| v.abs()).sum(),
        Some(p) => x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// ℓ^p norm of an exact vector.
pub fn vector_norm(x: &[Q], p: Exponent) -> f64 {
    let f: Vec<f64> = x.iter().map(to_f64).collect();
    float_norm(&f, p.finite())
}

pub fn apply(t: &TruncatedOperator, x: &[Q]) -> Result<Vec<Q>, OperatorError> {
    if x.len() != t.dim() {
        return Err(OperatorError::DimensionMismatch {
            expected: t.dim(),
            found: x.len(),
        });
    }
    Ok(t.matrix.mul_vec(x)?)
}

/// `A·B`.
pub fn compose(
    a: &TruncatedOperator,
    b: &TruncatedOperator,
) -> Result<TruncatedOperator, OperatorError> {
    if a.dim() != b.dim() {
        return Err(OperatorError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if a.p != b.p {
        return Err(OperatorError::ExponentMismatch(a.p, b.p));
    }
    Ok(TruncatedOperator {
        matrix: a.matrix.mul(&b.matrix)?,
        p: a.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use crate::symbol::WeightTail;
    use proptest::prelude::*;

    fn dense(t: &TruncatedOperator) -> Vec<Vec<Q>> {
        t.matrix().to_dense()
    }

    fn ints(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    fn backward_shift(n: usize) -> TruncatedOperator {
        let spec = OperatorSpec::composition(
            SelfMap::from_tail(MapTail::Shift(1)).unwrap(),
            Exponent::Infinity,
        );
        assemble(&spec, n)
    }

    #[test]
    fn assemble_examples() {
        assert_eq!(dense(&backward_shift(3)), ints(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]));
        let id = assemble(&OperatorSpec::composition(SelfMap::identity(), Exponent::Two), 3);
        assert_eq!(id, TruncatedOperator::identity(3, Exponent::Two));
        let inv = WeightSeq::from_tail(WeightTail::Inv(qi(1))).unwrap();
        let diag = assemble(&OperatorSpec::multiplication(inv, Exponent::Two), 3);
        assert_eq!(
            dense(&diag),
            vec![
                vec![qi(1), qi(0), qi(0)],
                vec![qi(0), q(1, 2), qi(0)],
                vec![qi(0), qi(0), q(1, 3)]
            ]
        );
    }

    #[test]
    fn boundedness_examples() {
        let block = SelfMap::from_tail(MapTail::Block { d: 2, c: 0 }).unwrap();
        assert!(is_bounded(&OperatorSpec::composition(block, Exponent::Two)).bounded);
        let constant = SelfMap::from_tail(MapTail::Const(1)).unwrap();
        assert!(!is_bounded(&OperatorSpec::composition(constant.clone(), Exponent::One)).bounded);
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            assert!(is_bounded(&OperatorSpec::composition(SelfMap::identity(), p)).bounded);
        }
        // A square-summable weight tames the infinite fiber for p = 2 but not p = 1.
        let inv = WeightSeq::from_tail(WeightTail::Inv(qi(1))).unwrap();
        assert!(is_bounded(&OperatorSpec::new(inv.clone(), constant.clone(), Exponent::Two)).bounded);
        assert!(!is_bounded(&OperatorSpec::new(inv, constant, Exponent::One)).bounded);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(operator_norm(&backward_shift(3)).unwrap().point(), Some(1.0));
        let block = SelfMap::from_tail(MapTail::Block { d: 2, c: 0 }).unwrap();
        let t = assemble(&OperatorSpec::composition(block, Exponent::Two), 6);
        let norm = operator_norm(&t).unwrap().point().unwrap();
        assert!((norm - 2f64.sqrt()).abs() < 1e-10);
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            let n = operator_norm(&TruncatedOperator::identity(7, p)).unwrap();
            assert!((n.point().unwrap() - 1.0).abs() < 1e-12);
        }
        let zero = TruncatedOperator::zero(4, Exponent::Two);
        assert_eq!(operator_norm(&zero).unwrap().point(), Some(0.0));
    }

    #[test]
    fn two_norm_matches_dense_eigensolver() {
        // Dense symmetric eigensolve of TᵀT as an independent oracle.
        let rows = ints(&[&[1, 2, 0, -1], &[0, 3, 1, 0], &[2, 0, 0, 1], &[0, -1, 4, 2]]);
        let t = TruncatedOperator::new(SparseMatrix::from_dense(&rows), Exponent::Two).unwrap();
        let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| to_f64(&rows[i][j]));
        let ata = m.transpose() * &m;
        let top = ata.symmetric_eigen().eigenvalues.max().sqrt();
        let est = operator_norm(&t).unwrap().point().unwrap();
        assert!((est - top).abs() < 1e-9 * top, "{est} vs {top}");
    }

    #[test]
    fn two_norm_handles_near_degenerate_top_singular_values() {
        // Columns 4 and 8 carry squared norms 13/8 and 2601/1600.
        let w = WeightSeq::new(
            [(1, q(3, 5)), (2, q(1, 4)), (3, qi(0))].into(),
            4,
            WeightTail::CPlusInv { c: qi(1), a: qi(1) },
        )
        .unwrap();
        let m = SelfMap::new([(1, 8), (2, 4), (3, 1)].into(), 4, MapTail::Shift(0)).unwrap();
        let t = assemble(&OperatorSpec::new(w, m, Exponent::Two), 64);
        let dense = nalgebra::DMatrix::from_fn(64, 64, |i, j| to_f64(&t.matrix().get(i, j)));
        let top = (dense.transpose() * &dense).symmetric_eigen().eigenvalues.max().sqrt();
        let est = operator_norm(&t).unwrap().point().unwrap();
        assert!((est - top).abs() < 1e-10, "{est} vs {top}");
        assert!((est - (2601f64 / 1600.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn general_p_is_an_interval_bracketing_known_norms() {
        let t = TruncatedOperator::identity(5, Exponent::Other(3.0));
        let OperatorNorm::Interval { lower, upper } = operator_norm(&t).unwrap() else {
            panic!("expected interval");
        };
        assert!((lower - 1.0).abs() < 1e-12 && (upper - 1.0).abs() < 1e-12);
        let rows = ints(&[&[1, 1], &[1, -1]]);
        let t = TruncatedOperator::new(SparseMatrix::from_dense(&rows), Exponent::Other(1.5)).unwrap();
        let n = operator_norm(&t).unwrap();
        assert!(n.lower() <= n.upper());
        assert!(n.lower() >= 2f64.powf(1.0 / 1.5) - 1e-12);
    }

    #[test]
    fn apply_examples() {
        let x = vec![qi(1), qi(2), qi(3)];
        assert_eq!(apply(&backward_shift(3), &x).unwrap(), vec![qi(2), qi(3), qi(0)]);
        let id = TruncatedOperator::identity(3, Exponent::Two);
        assert_eq!(apply(&id, &x).unwrap(), x);
        let d = TruncatedOperator::diagonal(&[qi(1), q(1, 2), q(1, 3)], Exponent::Two);
        assert_eq!(apply(&d, &[qi(6), qi(6), qi(6)]).unwrap(), vec![qi(6), qi(3), qi(2)]);
        assert!(matches!(
            apply(&id, &[qi(1)]),
            Err(OperatorError::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn compose_examples() {
        let b = backward_shift(3);
        let id = TruncatedOperator::identity(3, Exponent::Infinity);
        assert_eq!(compose(&id, &b).unwrap(), b);
        let zero = TruncatedOperator::zero(3, Exponent::Infinity);
        assert!(compose(&zero, &b).unwrap().is_zero());
        let proj = TruncatedOperator::diagonal(&[qi(1), qi(0), qi(0)], Exponent::Infinity);
        let prod = compose(&proj, &b).unwrap();
        assert_eq!(dense(&prod), ints(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]]));
        assert!(compose(&id, &backward_shift(4)).is_err());
        assert!(compose(&TruncatedOperator::identity(3, Exponent::Two), &b).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = TruncatedOperator::diagonal(&[qi(1), q(-1, 2)], Exponent::Two);
        let csv = d.to_csv();
        assert_eq!(csv, "1/1,0/1\n0/1,-1/2\n");
        assert_eq!(TruncatedOperator::from_csv(&csv, Exponent::Two).unwrap(), d);
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("1".parse::<Exponent>().unwrap(), Exponent::One);
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("3/2".parse::<Exponent>().unwrap(), Exponent::Other(1.5));
        assert!("1/2".parse::<Exponent>().is_err());
    }

    fn arb_spec() -> impl Strategy<Value = OperatorSpec> {
        let tail = prop_oneof![
            (0u64..3).prop_map(MapTail::Shift),
            (1u64..4, 0u64..2).prop_map(|(d, c)| MapTail::Block { d, c }),
            Just(MapTail::Power(2)),
        ];
        (tail, prop::collection::vec((1i64..9, -5i64..6, 1i64..6), 4), 1u64..5).prop_map(
            |(tail, ex, ts)| {
                let map_ex = (1..ts).map(|k| (k, ex[(k - 1) as usize].0 as u64)).collect();
                let w_ex = (1..ts)
                    .map(|k| (k, q(ex[(k - 1) as usize].1, ex[(k - 1) as usize].2)))
                    .collect();
                let map = SelfMap::new(map_ex, ts, tail).unwrap();
                let w = WeightSeq::new(w_ex, ts, WeightTail::CPlusInv { c: qi(1), a: qi(1) })
                    .unwrap();
                OperatorSpec::new(w, map, Exponent::Two)
            },
        )
    }

    proptest! {
        #[test]
        fn composition_norm_identity(spec in arb_spec(), f in prop::collection::vec(-4i64..5, 6)) {
            // Σ_m |f(φ(m))|^p = Σ_n |φ⁻¹(n)| |f(n)|^p for f supported in 1..=6.
            let c = OperatorSpec::composition(spec.map.clone(), Exponent::One);
            let window = 6 * 4 + 10;
            let mut x = vec![Q::zero(); window];
            for (i, &v) in f.iter().enumerate() { x[i] = qi(v); }
            let cx = apply(&assemble(&c, window), &x).unwrap();
            let lhs: Q = cx.iter().map(Signed::abs).sum();
            let rhs: Q = (1..=6u64)
                .map(|n| {
                    let Cardinality::Finite(k) = spec.map.fiber(n).cardinality() else { unreachable!() };
                    qi(k as i64) * x[n as usize - 1].abs()
                })
                .sum();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn assemble_is_linear(spec in arb_spec(), xs in prop::collection::vec((-3i64..4, -3i64..4), 8),
                              alpha in -3i64..4, beta in 1i64..4) {
            let t = assemble(&spec, 8);
            let x: Vec<Q> = xs.iter().map(|p| qi(p.0)).collect();
            let y: Vec<Q> = xs.iter().map(|p| q(p.1, 3)).collect();
            let (a, b) = (qi(alpha), q(1, beta));
            let combo: Vec<Q> = x.iter().zip(&y).map(|(u, v)| &a * u + &b * v).collect();
            let lhs = apply(&t, &combo).unwrap();
            let tx = apply(&t, &x).unwrap();
            let ty = apply(&t, &y).unwrap();
            let rhs: Vec<Q> = tx.iter().zip(&ty).map(|(u, v)| &a * u + &b * v).collect();
            prop_assert_eq!(lhs, rhs);
            prop_assert!(t.matrix().rows().all(|r| r.len() <= 1));
        }

        #[test]
        fn compose_is_associative(s1 in arb_spec(), s2 in arb_spec(), s3 in arb_spec()) {
            let (a, b, c) = (assemble(&s1, 7), assemble(&s2, 7), assemble(&s3, 7));
            let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn truncated_norm_is_nondecreasing(spec in arb_spec()) {
            let mut prev = 0.0;
            for n in [8usize, 16, 32, 64, 128] {
                let v = operator_norm(&assemble(&spec, n)).unwrap().point().unwrap();
                prop_assert!(v >= prev - 1e-9, "{} < {}", v, prev);
                prev = v;
            }
        }
    }
}
