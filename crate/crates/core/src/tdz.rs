//! Norm-one operator sequences on ℓ^p and the tables that show `T·T_n`
//! (or `T_n·T`) tending to zero, pointwise or in norm.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::SparseMatrix;
use crate::operators::{
    apply, compose, operator_norm, vector_norm, Exponent, OperatorError, TruncatedOperator,
};
use crate::rational::{fmt_sig12, pow, to_f64, Sig12, Q};
use crate::symbol::{SymbolError, WeightSeq, WeightTail};

/// Slack for the inequality `‖T T_n x‖ ≤ ‖T T_n‖ ‖x‖`.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Below this operator-norm value a sequence counts as having reached zero.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Slack for `value ≤ bound` in convergence tables.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TdzError {
    #[error("index n = {n} must be below the dimension {dim}")]
    IndexTooLarge { n: u64, dim: usize },
    #[error("probe {index} has length {found}, expected {expected}")]
    ProbeLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("a c0 sequence needs an inv or geom tail, got {0}")]
    NotNullSequence(&'static str),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn check_index(n: u64, dim: usize) -> Result<(), TdzError> {
    if n == 0 || n >= dim as u64 {
        return Err(TdzError::IndexTooLarge { n, dim });
    }
    Ok(())
}

/// `T_n x = Σ_{k>n} x_k e_k`, truncated to `dim` coordinates.
pub fn tail_projection(n: u64, dim: usize, p: Exponent) -> Result<TruncatedOperator, TdzError> {
    check_index(n, dim)?;
    let diag: Vec<Q> = (1..=dim as u64)
        .map(|k| if k > n { Q::one() } else { Q::zero() })
        .collect();
    Ok(TruncatedOperator::diagonal(&diag, p))
}

/// `T_n x = x_{n+1} e_{n+1}`.
pub fn single_hole(n: u64, dim: usize, p: Exponent) -> Result<TruncatedOperator, TdzError> {
    check_index(n, dim)?;
    let diag: Vec<Q> = (1..=dim as u64)
        .map(|k| if k == n + 1 { Q::one() } else { Q::zero() })
        .collect();
    Ok(TruncatedOperator::diagonal(&diag, p))
}

/// A sequence tending to zero: finite exceptions plus an `a/k` or `a·r^k`
/// tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct C0Sequence {
    seq: WeightSeq,
}

impl C0Sequence {
    pub fn new(seq: WeightSeq) -> Result<Self, TdzError> {
        match seq.tail() {
            WeightTail::Inv(_) | WeightTail::Geom { .. } => Ok(C0Sequence { seq }),
            other => Err(TdzError::NotNullSequence(other.kind())),
        }
    }

    pub fn harmonic(a: Q) -> Self {
        Self::new(WeightSeq::from_tail(WeightTail::Inv(a)).expect("valid tail"))
            .expect("inv tail")
    }

    pub fn geometric(a: Q, r: Q) -> Result<Self, TdzError> {
        Self::new(WeightSeq::from_tail(WeightTail::Geom { a, r })?)
    }

    pub fn weights(&self) -> &WeightSeq {
        &self.seq
    }

    pub fn eval(&self, k: u64) -> Q {
        self.seq.eval(k)
    }

    /// `sup_{k ≥ m} |y_k|`, exact. Both tail rules are nonincreasing in
    /// absolute value, so the tail contributes its first term.
    pub fn sup_from(&self, m: u64) -> Q {
        let m = m.max(1);
        let ts = self.seq.tail_start();
        let head = (m..ts).map(|k| self.eval(k).abs()).max();
        let tail = self.eval(m.max(ts)).abs();
        head.map_or(tail.clone(), |h| h.max(tail))
    }

    pub fn diagonal(&self, dim: usize, p: Exponent) -> TruncatedOperator {
        let diag: Vec<Q> = (1..=dim as u64).map(|k| self.eval(k)).collect();
        TruncatedOperator::diagonal(&diag, p)
    }
}

/// How the `n`-th operator of a sequence is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperatorSequenceRule {
    TailProjection,
    SingleHole,
    /// `P_n·diag(y)` rescaled by `1/sup_{k>n}|y_k|`, so that it has norm one
    /// whenever that supremum is attained inside the window. When the tail
    /// of `y` vanishes the plain projection `P_n` is used.
    DiagonalTail(C0Sequence),
}

impl OperatorSequenceRule {
    pub fn kind(&self) -> &'static str {
        match self {
            OperatorSequenceRule::TailProjection => "tail_projection",
            OperatorSequenceRule::SingleHole => "single_hole",
            OperatorSequenceRule::DiagonalTail(_) => "diagonal_tail",
        }
    }

    pub fn instantiate(&self, n: u64, dim: usize, p: Exponent) -> Result<TruncatedOperator, TdzError> {
        match self {
            OperatorSequenceRule::TailProjection => tail_projection(n, dim, p),
            OperatorSequenceRule::SingleHole => single_hole(n, dim, p),
            OperatorSequenceRule::DiagonalTail(y) => {
                let proj = tail_projection(n, dim, p)?;
                let sup = y.sup_from(n + 1);
                if sup.is_zero() {
                    return Ok(proj);
                }
                let scaled = y.diagonal(dim, p).matrix().scale(&sup.recip());
                Ok(compose(&proj, &TruncatedOperator::new(scaled, p)?)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub value: Sig12,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<Sig12>,
    pub exact_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(label: impl Into<String>) -> Self {
        ConvergenceTable {
            label: label.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, n: u64, value: f64, bound: Option<f64>, exact_zero: bool) {
        self.rows.push(ConvergenceRow {
            n,
            value: Sig12::new(value),
            bound: bound.map(Sig12::new),
            exact_zero,
        });
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value.get()).collect()
    }

    /// Rows whose value exceeds their bound by more than [`BOUND_SLACK`].
    pub fn bound_violations(&self) -> Vec<u64> {
        self.rows
            .iter()
            .filter(|r| r.bound.is_some_and(|b| r.value.get() > b.get() + BOUND_SLACK))
            .map(|r| r.n)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,bound,exact_zero\n");
        for r in &self.rows {
            let bound = r.bound.map(|b| fmt_sig12(b.get())).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.n, r.value, bound, r.exact_zero);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.label);
        let _ = writeln!(out, "{:>6}  {:>18}  {:>18}  {}", "n", "value", "bound", "exact_zero");
        for r in &self.rows {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:>6}  {:>18}  {:>18}  {}", r.n, r.value.to_string(), bound, r.exact_zero);
        }
        out
    }
}

/// Unit vectors `e₁, e₅, e₁₀` (those that fit), the harmonic vector
/// `(1/k)` and the geometric vector `(2^{-k})`.
pub fn default_probes(dim: usize) -> Vec<(String, Vec<Q>)> {
    let mut probes: Vec<(String, Vec<Q>)> = [1usize, 5, 10]
        .into_iter()
        .filter(|&k| k <= dim)
        .map(|k| {
            let mut e = vec![Q::zero(); dim];
            e[k - 1] = Q::one();
            (format!("e{k}"), e)
        })
        .collect();
    probes.push((
        "harmonic".into(),
        (1..=dim as u64).map(|k| Q::new(1.into(), k.into())).collect(),
    ));
    let half = Q::new(1.into(), 2.into());
    probes.push((
        "geometric".into(),
        (1..=dim as u64).map(|k| pow(&half, k)).collect(),
    ));
    probes
}

fn check_probes(t: &TruncatedOperator, probes: &[(String, Vec<Q>)]) -> Result<(), TdzError> {
    for (index, (_, x)) in probes.iter().enumerate() {
        if x.len() != t.dim() {
            return Err(TdzError::ProbeLength {
                index,
                expected: t.dim(),
                found: x.len(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongTdzDemo {
    /// One table of `‖T·T_n x‖` per probe `x`.
    pub probes: Vec<ConvergenceTable>,
    /// `‖T·T_n‖` (upper end of the interval for general `p`).
    pub operator_norms: ConvergenceTable,
    /// `‖T_n‖`, expected to be 1 throughout.
    pub sequence_norms: ConvergenceTable,
}

fn last_index(n_max: u64, dim: usize) -> u64 {
    n_max.min(dim as u64 - 1)
}

/// Tabulates `‖T·T_n x‖_p` for `n = 1..=n_max` (capped below the dimension).
/// The exact-zero flag marks products that vanish identically.
pub fn strongly_tdz_demo(
    t: &TruncatedOperator,
    rule: &OperatorSequenceRule,
    probes: &[(String, Vec<Q>)],
    n_max: u64,
) -> Result<StrongTdzDemo, TdzError> {
    check_probes(t, probes)?;
    let p = t.p();
    let mut tables: Vec<ConvergenceTable> = probes
        .iter()
        .map(|(name, _)| ConvergenceTable::new(format!("|T T_n x|, x = {name}")))
        .collect();
    let mut op = ConvergenceTable::new("|T T_n|");
    let mut seq = ConvergenceTable::new("|T_n|");
    for n in 1..=last_index(n_max, t.dim()) {
        let tn = rule.instantiate(n, t.dim(), p)?;
        let ttn = compose(t, &tn)?;
        for ((_, x), table) in probes.iter().zip(tables.iter_mut()) {
            let y = apply(&ttn, x)?;
            let exact_zero = y.iter().all(Zero::is_zero);
            table.push(n, vector_norm(&y, p), None, exact_zero);
        }
        op.push(n, operator_norm(&ttn)?.upper(), None, ttn.is_zero());
        seq.push(n, operator_norm(&tn)?.upper(), None, tn.is_zero());
    }
    Ok(StrongTdzDemo {
        probes: tables,
        operator_norms: op,
        sequence_norms: seq,
    })
}

/// Rows `(n, ‖P_n·diag(y)‖, sup_{k>n}|y_k|)` for `n = 1..=n_max`.
pub fn diagonal_tdz_demo(
    y: &C0Sequence,
    n_max: u64,
    dim: usize,
    p: Exponent,
) -> Result<ConvergenceTable, TdzError> {
    if n_max >= dim as u64 {
        return Err(TdzError::IndexTooLarge { n: n_max, dim });
    }
    let d = y.diagonal(dim, p);
    let mut table = ConvergenceTable::new("|T_n T| for T = diag(y)");
    for n in 1..=n_max {
        let product = compose(&tail_projection(n, dim, p)?, &d)?;
        let measured = operator_norm(&product)?.upper();
        let bound = to_f64(&y.sup_from(n + 1));
        table.push(n, measured, Some(bound), product.is_zero());
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongCheck {
    pub holds: bool,
    /// First `n` at which `‖T·T_n‖` fell below the threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_reached_at: Option<u64>,
    pub violations: Vec<String>,
}

/// Checks row by row that `‖T T_n x‖ ≤ ‖T T_n‖·‖x‖ + 1e-9`, and that once
/// `‖T T_n‖ < ε` every probe column is below `ε‖x‖ + 1e-9`.
pub fn check_tdz_implies_strong(
    t: &TruncatedOperator,
    rule: &OperatorSequenceRule,
    probes: &[(String, Vec<Q>)],
    n_max: u64,
    threshold: f64,
) -> Result<StrongCheck, TdzError> {
    let demo = strongly_tdz_demo(t, rule, probes, n_max)?;
    let p = t.p();
    let mut violations = Vec::new();
    let mut threshold_reached_at = None;
    for (row_index, op_row) in demo.operator_norms.rows.iter().enumerate() {
        let op = op_row.value.get();
        if op < threshold && threshold_reached_at.is_none() {
            threshold_reached_at = Some(op_row.n);
        }
        for ((name, x), table) in probes.iter().zip(&demo.probes) {
            let value = table.rows[row_index].value.get();
            let xn = vector_norm(x, p);
            if value > op * xn + INEQUALITY_SLACK {
                violations.push(format!("n = {}, x = {name}: {value} > {op} * {xn}", op_row.n));
            }
            if op < threshold && value > threshold * xn + INEQUALITY_SLACK {
                violations.push(format!("n = {}, x = {name}: {value} above threshold", op_row.n));
            }
        }
    }
    Ok(StrongCheck {
        holds: violations.is_empty(),
        threshold_reached_at,
        violations,
    })
}

/// Identity of size `dim`, for the strongly-TDZ-but-not-TDZ example.
pub fn identity(dim: usize, p: Exponent) -> TruncatedOperator {
    TruncatedOperator::identity(dim, p)
}

/// Backward shift `(x₂, x₃, …)` of size `dim`.
pub fn backward_shift(dim: usize, p: Exponent) -> TruncatedOperator {
    let mut m = SparseMatrix::zeros(dim, dim);
    for i in 0..dim.saturating_sub(1) {
        m.set(i, i + 1, Q::one());
    }
    TruncatedOperator::new(m, p).expect("square")
}
