//! Continuous functions on `[a, b]`, sampled on a uniform grid.
//!
//! The grid itself plays the role of `X`: norms are maxima over grid points
//! and therefore exact. A closed-form tag, when present, lets zero locations
//! between grid points be computed exactly.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{fmt_q, pow, Rational, Q};

use super::FunctionSpaceError;

/// Exact formula for a grid function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `x ↦ αx + β`
    Affine {
        alpha: Rational,
        beta: Rational,
    },
    /// `x ↦ x^k`
    Monomial { k: u32 },
    Const { c: Rational },
}

impl ClosedForm {
    pub fn eval(&self, x: &Q) -> Q {
        match self {
            ClosedForm::Affine { alpha, beta } => &alpha.0 * x + &beta.0,
            ClosedForm::Monomial { k } => pow(x, *k as u64),
            ClosedForm::Const { c } => c.0.clone(),
        }
    }

    /// Exact zeros in `[lo, hi]`, when there are finitely many.
    fn root_in(&self, lo: &Q, hi: &Q) -> Option<Q> {
        let root = match self {
            ClosedForm::Affine { alpha, beta } if !alpha.0.is_zero() => -&beta.0 / &alpha.0,
            ClosedForm::Monomial { .. } => Q::zero(),
            _ => return None,
        };
        (lo <= &root && &root <= hi).then_some(root)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridFunction {
    a: Q,
    b: Q,
    samples: Vec<Q>,
    closed_form: Option<ClosedForm>,
}

impl GridFunction {
    pub fn new(a: Q, b: Q, samples: Vec<Q>) -> Result<Self, FunctionSpaceError> {
        if a >= b {
            return Err(FunctionSpaceError::EmptyInterval {
                a: fmt_q(&a),
                b: fmt_q(&b),
            });
        }
        if samples.len() < 3 {
            return Err(FunctionSpaceError::TooFewSamples(samples.len()));
        }
        Ok(GridFunction {
            a,
            b,
            samples,
            closed_form: None,
        })
    }

    /// Samples `form` on `g` uniform points and keeps it for exact queries.
    pub fn from_closed_form(a: Q, b: Q, g: usize, form: ClosedForm) -> Result<Self, FunctionSpaceError> {
        let probe = GridFunction::new(a, b, vec![Q::zero(); g.max(3)])?;
        if g < 3 {
            return Err(FunctionSpaceError::TooFewSamples(g));
        }
        let samples = (0..g).map(|i| form.eval(&probe.point(i))).collect();
        Ok(GridFunction {
            samples,
            closed_form: Some(form),
            ..probe
        })
    }

    /// Same grid, new values.
    pub fn with_samples(&self, samples: Vec<Q>) -> Result<Self, FunctionSpaceError> {
        if samples.len() != self.samples.len() {
            return Err(FunctionSpaceError::GridMismatch);
        }
        Ok(GridFunction {
            a: self.a.clone(),
            b: self.b.clone(),
            samples,
            closed_form: None,
        })
    }

    pub fn a(&self) -> &Q {
        &self.a
    }

    pub fn b(&self) -> &Q {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Q] {
        &self.samples
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    /// `x_i = a + i(b − a)/(G − 1)`.
    pub fn point(&self, i: usize) -> Q {
        let g = Q::from_integer((self.samples.len() as u64 - 1).into());
        &self.a + (&self.b - &self.a) * Q::from_integer((i as u64).into()) / g
    }

    pub fn sup_norm(&self) -> Q {
        self.samples
            .iter()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(Q::zero)
    }

    pub fn product(&self, other: &GridFunction) -> Result<GridFunction, FunctionSpaceError> {
        if self.a != other.a || self.b != other.b || self.len() != other.len() {
            return Err(FunctionSpaceError::GridMismatch);
        }
        self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| x * y)
                .collect(),
        )
    }

    /// `x ↦ f(x) − c`.
    pub fn shifted(&self, c: &Q) -> GridFunction {
        let closed_form = match &self.closed_form {
            Some(ClosedForm::Affine { alpha, beta }) => Some(ClosedForm::Affine {
                alpha: alpha.clone(),
                beta: Rational(&beta.0 - c),
            }),
            Some(ClosedForm::Const { c: k }) => Some(ClosedForm::Const {
                c: Rational(&k.0 - c),
            }),
            _ => None,
        };
        GridFunction {
            a: self.a.clone(),
            b: self.b.clone(),
            samples: self.samples.iter().map(|v| v - c).collect(),
            closed_form,
        }
    }
}

impl fmt::Display for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid[{}, {}; G={}]",
            fmt_q(&self.a),
            fmt_q(&self.b),
            self.samples.len()
        )
    }
}

/// Where a grid function vanishes (or nearly so).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroLocation {
    /// Grid index of the zero, or of the grid point nearest to it.
    pub index: usize,
    pub x: Rational,
    /// The function is exactly zero at `x`.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CxTdz {
    pub is_tdz: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<ZeroLocation>,
}

/// An element of `C[a, b]` is a TDZ exactly when it has a zero. On the grid
/// that is a sample with `|f| ≤ tol` or a sign change between neighbours.
pub fn cx_is_tdz(f: &GridFunction, tol: &Q) -> CxTdz {
    let s = &f.samples;
    for i in 0..s.len() {
        if s[i].abs() <= *tol {
            return CxTdz {
                is_tdz: true,
                location: Some(ZeroLocation {
                    index: i,
                    x: Rational(f.point(i)),
                    exact: s[i].is_zero(),
                }),
            };
        }
        if i + 1 < s.len() && !s[i + 1].is_zero() && s[i].is_positive() != s[i + 1].is_positive() {
            let (lo, hi) = (f.point(i), f.point(i + 1));
            let exact_root = f.closed_form.as_ref().and_then(|c| c.root_in(&lo, &hi));
            let exact = exact_root.is_some();
            let x = exact_root.unwrap_or_else(|| {
                // Linear interpolation between the two samples.
                let t = &s[i] / (&s[i] - &s[i + 1]);
                &lo + (&hi - &lo) * t
            });
            let index = if (&x - &lo) <= (&hi - &x) { i } else { i + 1 };
            return CxTdz {
                is_tdz: true,
                location: Some(ZeroLocation {
                    index,
                    x: Rational(x),
                    exact,
                }),
            };
        }
    }
    CxTdz {
        is_tdz: false,
        location: None,
    }
}

/// The norm-one hat `f_n` with `f_n(x₀) = 1` that vanishes at the grid points
/// just outside the largest run around `x₀` where `|f| < 1/n`. At the ends of
/// the grid the hat descends towards a virtual point one step beyond.
pub fn urysohn_sequence(f: &GridFunction, x0: usize, n: u64) -> Result<GridFunction, FunctionSpaceError> {
    if x0 >= f.len() {
        return Err(FunctionSpaceError::IndexOutOfRange(x0));
    }
    if n == 0 {
        return Err(FunctionSpaceError::NonPositiveIndex);
    }
    let eps = Q::new(One::one(), n.into());
    let small = |i: usize| f.samples[i].abs() < eps;
    if !small(x0) {
        return Err(FunctionSpaceError::RefinementNeeded { n, index: x0 });
    }
    let mut lo = x0;
    while lo > 0 && small(lo - 1) {
        lo -= 1;
    }
    let mut hi = x0;
    while hi + 1 < f.len() && small(hi + 1) {
        hi += 1;
    }
    // Integer positions of the two zeros of the hat, possibly virtual.
    let left = lo as i64 - 1;
    let right = hi as i64 + 1;
    let c = x0 as i64;
    let samples = (0..f.len() as i64)
        .map(|i| {
            if i <= left || i >= right {
                Q::zero()
            } else if i <= c {
                Q::new((i - left).into(), (c - left).into())
            } else {
                Q::new((right - i).into(), (right - c).into())
            }
        })
        .collect();
    f.with_samples(samples)
}

/// `p(x) = x − h(x₀)`, so that `p∘h` vanishes at `x₀`.
pub fn poly_tdz_witness(h: &GridFunction, x0: usize) -> Result<super::atomic::PolyTdz, FunctionSpaceError> {
    if x0 >= h.len() {
        return Err(FunctionSpaceError::IndexOutOfRange(x0));
    }
    let alpha = h.samples[x0].clone();
    let check = cx_is_tdz(&h.shifted(&alpha), &Q::zero());
    Ok(super::atomic::PolyTdz {
        coefficients: vec![-alpha.clone(), Q::one()],
        detail: format!(
            "h - {} vanishes at x = {}",
            fmt_q(&alpha),
            fmt_q(&h.point(x0))
        ),
        alpha,
        evidence: check.is_tdz,
    })
}

/// `M_h` on the grid is a TDZ iff `h` is one; the sequence is `M_{f_n}` with
/// `f_n` the hats of [`urysohn_sequence`]. Rows stop early when the grid can
/// no longer resolve `|h| < 1/n` around the zero.
pub fn mult_op_tdz(h: &GridFunction, n_max: u64, tol: &Q) -> super::atomic::MultOpTdz {
    let t = cx_is_tdz(h, tol);
    let mut rows = Vec::new();
    if let Some(loc) = &t.location {
        for n in 1..=n_max {
            let Ok(f_n) = urysohn_sequence(h, loc.index, n) else {
                break;
            };
            let product = h.product(&f_n).expect("same grid").sup_norm();
            rows.push(super::atomic::MultRow {
                n,
                factor_norm: f_n.sup_norm().into(),
                product_norm: product.into(),
            });
        }
    }
    super::atomic::MultOpTdz {
        is_tdz: t.is_tdz,
        rows,
    }
}

/// A self-map of the grid points, `C_φ f = f∘φ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    image: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CxComposition {
    /// `‖C_φ‖`, always 1.
    pub norm: Q,
    pub injective: bool,
    pub surjective: bool,
    /// A nonzero `f₀` with `C_φ f₀ = 0`, when `φ` misses a point.
    pub kernel_witness: Option<Vec<Q>>,
    /// Points `x₁ ≠ x₂` with `φ(x₁) = φ(x₂)`; every function in the range of
    /// `C_φ` agrees on them, so the indicator of `x₂` is not in the range.
    pub range_gap: Option<(usize, usize)>,
}

impl GridMap {
    pub fn new(image: Vec<usize>) -> Result<Self, FunctionSpaceError> {
        if let Some(&bad) = image.iter().find(|&&j| j >= image.len()) {
            return Err(FunctionSpaceError::IndexOutOfRange(bad));
        }
        Ok(GridMap { image })
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, f: &[Q]) -> Vec<Q> {
        self.image.iter().map(|&j| f[j].clone()).collect()
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.image.len()];
        self.image.iter().all(|&j| !std::mem::replace(&mut seen[j], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.image.len()];
        for &j in &self.image {
            hit[j] = true;
        }
        hit.into_iter().all(|h| h)
    }

    pub fn composition(&self) -> CxComposition {
        let g = self.image.len();
        let mut hit = vec![false; g];
        for &j in &self.image {
            hit[j] = true;
        }
        let kernel_witness = hit.iter().position(|h| !h).map(|x0| {
            let mut f = vec![Q::zero(); g];
            f[x0] = Q::one();
            f
        });
        let mut first_pre = vec![None; g];
        let mut range_gap = None;
        for (x, &y) in self.image.iter().enumerate() {
            match first_pre[y] {
                None => first_pre[y] = Some(x),
                Some(x1) => {
                    range_gap = Some((x1, x));
                    break;
                }
            }
        }
        // Each row of the 0/1 matrix of C_φ has exactly one entry.
        let norm = if g == 0 { Q::zero() } else { Q::one() };
        CxComposition {
            norm,
            injective: kernel_witness.is_none(),
            surjective: range_gap.is_none(),
            kernel_witness,
            range_gap,
        }
    }
}
