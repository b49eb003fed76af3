//! Finite descriptions of the symbols of a weighted composition operator:
//! self-maps `φ: ℕ → ℕ` and bounded weights `u: ℕ → ℚ`.
//!
//! Both are given by a finite exception table plus a tail rule from a small
//! catalog. Indices below `tail_start` that have no exception entry fall back
//! to the tail formula, so the exception table only needs to list overrides.
//! Every predicate here (fibers, injectivity, surjectivity, zero sets,
//! bounded-away-from-zero) is decided exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Roots;
use num_traits::{One, Signed, Zero};

use crate::rational::{fmt_q, pow, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymbolError {
    #[error("tail_start must be at least 1")]
    TailStartZero,
    #[error("exception key {0} must satisfy 1 <= key < tail_start")]
    ExceptionOutOfRange(u64),
    #[error("map value at {0} must be a positive integer")]
    NonPositiveValue(u64),
    #[error("block divisor must be at least 1")]
    BlockDivisorZero,
    #[error("power exponent must be at least 2, got {0}")]
    PowerTooSmall(u32),
    #[error("constant tail value must be at least 1")]
    ConstTailZero,
    #[error("geometric ratio must satisfy |r| < 1, got {0}")]
    RatioNotContracting(String),
}

/// Tail rule of a self-map, applied to every `n >= tail_start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapTail {
    /// `n ↦ n + s`
    Shift(u64),
    /// `n ↦ ⌈n/d⌉ + c`
    Block { d: u64, c: u64 },
    /// `n ↦ n^k`, `k >= 2`
    Power(u32),
    /// `n ↦ c`
    Const(u64),
}

impl MapTail {
    fn eval(self, n: u64) -> u64 {
        match self {
            MapTail::Shift(s) => n.saturating_add(s),
            MapTail::Block { d, c } => n.div_ceil(d).saturating_add(c),
            MapTail::Power(k) => n.checked_pow(k).unwrap_or(u64::MAX),
            MapTail::Const(c) => c,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            MapTail::Shift(_) => "shift",
            MapTail::Block { .. } => "block",
            MapTail::Power(_) => "power",
            MapTail::Const(_) => "const",
        }
    }
}

/// A self-map of the positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfMap {
    exceptions: BTreeMap<u64, u64>,
    tail_start: u64,
    tail: MapTail,
}

/// Arithmetic progression `first, first + stride, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progression {
    pub first: u64,
    pub stride: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cardinality {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Finite(n) => write!(f, "{n}"),
            Cardinality::Infinite => f.write_str("inf"),
        }
    }
}

/// Exact preimage `φ⁻¹(n)`: a finite set plus, for constant tails only, an
/// infinite arithmetic progression.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiberDescriptor {
    pub finite_part: BTreeSet<u64>,
    pub tail_progression: Option<Progression>,
}

impl FiberDescriptor {
    pub fn cardinality(&self) -> Cardinality {
        match self.tail_progression {
            Some(_) => Cardinality::Infinite,
            None => Cardinality::Finite(self.finite_part.len() as u64),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.finite_part.is_empty() && self.tail_progression.is_none()
    }

    pub fn contains(&self, m: u64) -> bool {
        self.finite_part.contains(&m)
            || self
                .tail_progression
                .is_some_and(|p| m >= p.first && (m - p.first) % p.stride == 0)
    }

    /// Smallest elements in increasing order, at most `limit` of them.
    pub fn smallest(&self, limit: usize) -> Vec<u64> {
        let mut out: BTreeSet<u64> = self.finite_part.iter().copied().take(limit).collect();
        if let Some(p) = self.tail_progression {
            out.extend((0..limit as u64).map(|i| p.first + i * p.stride));
        }
        out.into_iter().take(limit).collect()
    }
}

impl SelfMap {
    pub fn new(
        exceptions: BTreeMap<u64, u64>,
        tail_start: u64,
        tail: MapTail,
    ) -> Result<Self, SymbolError> {
        if tail_start == 0 {
            return Err(SymbolError::TailStartZero);
        }
        for (&k, &v) in &exceptions {
            if k == 0 || k >= tail_start {
                return Err(SymbolError::ExceptionOutOfRange(k));
            }
            if v == 0 {
                return Err(SymbolError::NonPositiveValue(k));
            }
        }
        match tail {
            MapTail::Block { d: 0, .. } => return Err(SymbolError::BlockDivisorZero),
            MapTail::Power(k) if k < 2 => return Err(SymbolError::PowerTooSmall(k)),
            MapTail::Const(0) => return Err(SymbolError::ConstTailZero),
            _ => {}
        }
        Ok(SelfMap {
            exceptions,
            tail_start,
            tail,
        })
    }

    pub fn from_tail(tail: MapTail) -> Result<Self, SymbolError> {
        Self::new(BTreeMap::new(), 1, tail)
    }

    pub fn identity() -> Self {
        Self::from_tail(MapTail::Shift(0)).expect("identity is valid")
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, u64> {
        &self.exceptions
    }

    pub fn tail_start(&self) -> u64 {
        self.tail_start
    }

    pub fn tail(&self) -> MapTail {
        self.tail
    }

    /// `φ(n)` for `n >= 1`. Power tails saturate at `u64::MAX`, which lies
    /// beyond any window the crate ever assembles.
    pub fn eval(&self, n: u64) -> u64 {
        debug_assert!(n >= 1);
        match self.exceptions.get(&n) {
            Some(&v) => v,
            None => self.tail.eval(n),
        }
    }

    /// Values taken on the head `1..tail_start`.
    fn head_values(&self) -> BTreeSet<u64> {
        (1..self.tail_start).map(|m| self.eval(m)).collect()
    }

    pub fn fiber(&self, n: u64) -> FiberDescriptor {
        let mut fiber = FiberDescriptor::default();
        for m in 1..self.tail_start {
            if self.eval(m) == n {
                fiber.finite_part.insert(m);
            }
        }
        let ts = self.tail_start;
        match self.tail {
            MapTail::Shift(s) => {
                if n > s && n - s >= ts {
                    fiber.finite_part.insert(n - s);
                }
            }
            MapTail::Block { d, c } => {
                if n > c {
                    let q = n - c;
                    let lo = ((q - 1) * d + 1).max(ts);
                    let hi = q * d;
                    fiber.finite_part.extend(lo..=hi);
                }
            }
            MapTail::Power(k) => {
                let r = n.nth_root(k);
                if r >= ts && r.checked_pow(k) == Some(n) {
                    fiber.finite_part.insert(r);
                }
            }
            MapTail::Const(c) => {
                if n == c {
                    fiber.tail_progression = Some(Progression {
                        first: ts,
                        stride: 1,
                    });
                }
            }
        }
        fiber
    }

    /// `sup_n |φ⁻¹(n)|`.
    pub fn fiber_bound(&self) -> Cardinality {
        let generic = match self.tail {
            MapTail::Const(_) => return Cardinality::Infinite,
            MapTail::Block { d, .. } => d,
            MapTail::Shift(_) | MapTail::Power(_) => 1,
        };
        let head_max = self
            .head_values()
            .into_iter()
            .map(|v| self.fiber(v).finite_part.len() as u64)
            .max()
            .unwrap_or(0);
        Cardinality::Finite(generic.max(head_max))
    }

    pub fn is_injective(&self) -> bool {
        matches!(self.fiber_bound(), Cardinality::Finite(b) if b <= 1)
    }

    /// Every value at or above this threshold is attained by the tail;
    /// `None` when the tail range has infinitely many gaps.
    fn tail_cover_threshold(&self) -> Option<u64> {
        let ts = self.tail_start;
        match self.tail {
            MapTail::Shift(s) => Some(ts + s),
            MapTail::Block { d, c } => Some(ts.div_ceil(d) + c),
            MapTail::Power(_) | MapTail::Const(_) => None,
        }
    }

    pub fn is_surjective(&self) -> bool {
        match self.tail_cover_threshold() {
            None => false,
            Some(t) => (1..t).all(|n| !self.fiber(n).is_empty()),
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// Smallest `n` with `φ⁻¹(n) = ∅`.
    pub fn first_empty_fiber(&self) -> Option<u64> {
        if self.is_surjective() {
            return None;
        }
        // Terminates: a non-surjective map misses some value.
        (1..).find(|&n| self.fiber(n).is_empty())
    }

    /// Upper bound on the smallest colliding value, when one exists.
    fn collision_horizon(&self) -> u64 {
        let head_max = self.head_values().into_iter().max().unwrap_or(0);
        let ts = self.tail_start;
        let tail_side = match self.tail {
            MapTail::Block { d, c } => (ts.saturating_sub(1)).div_ceil(d) + 1 + c,
            MapTail::Const(c) => c,
            MapTail::Shift(_) | MapTail::Power(_) => 0,
        };
        head_max.max(tail_side)
    }

    /// Smallest value `n₀` hit at least twice, with its two smallest preimages
    /// `a < b`.
    pub fn first_collision(&self) -> Option<(u64, u64, u64)> {
        if self.is_injective() {
            return None;
        }
        (1..=self.collision_horizon()).find_map(|n| {
            let pre = self.fiber(n).smallest(2);
            (pre.len() == 2).then(|| (n, pre[0], pre[1]))
        })
    }

    /// A bound past which the map behaves purely by its tail rule and all
    /// exceptional values have been seen.
    pub fn horizon(&self) -> u64 {
        let base = self.collision_horizon().max(self.tail_start);
        match self.tail_cover_threshold() {
            Some(t) => base.max(t),
            None => base,
        }
    }
}

impl fmt::Display for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ex: Vec<String> = self
            .exceptions
            .iter()
            .map(|(k, v)| format!("{k}->{v}"))
            .collect();
        let tail = match self.tail {
            MapTail::Shift(s) => format!("n+{s}"),
            MapTail::Block { d, c } => format!("ceil(n/{d})+{c}"),
            MapTail::Power(k) => format!("n^{k}"),
            MapTail::Const(c) => format!("{c}"),
        };
        write!(f, "phi{{{}; n>={}: {}}}", ex.join(","), self.tail_start, tail)
    }
}

/// Tail rule of a weight sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WeightTail {
    Const(Q),
    /// `n ↦ c + a/n`
    CPlusInv { c: Q, a: Q },
    /// `n ↦ a/n`
    Inv(Q),
    /// `n ↦ a·rⁿ`, `|r| < 1`
    Geom { a: Q, r: Q },
}

impl WeightTail {
    fn eval(&self, n: u64) -> Q {
        let nq = Q::from_integer(n.into());
        match self {
            WeightTail::Const(c) => c.clone(),
            WeightTail::CPlusInv { c, a } => c + a / nq,
            WeightTail::Inv(a) => a / nq,
            WeightTail::Geom { a, r } => a * pow(r, n),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WeightTail::Const(_) => "const",
            WeightTail::CPlusInv { .. } => "c_plus_inv",
            WeightTail::Inv(_) => "inv",
            WeightTail::Geom { .. } => "geom",
        }
    }

    fn scaled(&self, k: &Q) -> WeightTail {
        match self {
            WeightTail::Const(c) => WeightTail::Const(c * k),
            WeightTail::CPlusInv { c, a } => WeightTail::CPlusInv { c: c * k, a: a * k },
            WeightTail::Inv(a) => WeightTail::Inv(a * k),
            WeightTail::Geom { a, r } => WeightTail::Geom {
                a: a * k,
                r: r.clone(),
            },
        }
    }
}

/// Exact zero set of a weight: a finite set, optionally together with every
/// index from `cofinite_from` on. Normalized so that `finite` lies strictly
/// below `cofinite_from - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ZeroSet {
    pub finite: BTreeSet<u64>,
    pub cofinite_from: Option<u64>,
}

impl ZeroSet {
    pub fn contains(&self, n: u64) -> bool {
        self.finite.contains(&n) || self.cofinite_from.is_some_and(|t| n >= t)
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.cofinite_from.is_none()
    }

    pub fn min(&self) -> Option<u64> {
        self.finite.iter().next().copied().or(self.cofinite_from)
    }

    fn normalize(&mut self) {
        if let Some(mut t) = self.cofinite_from {
            self.finite.retain(|&m| m < t);
            while t > 1 && self.finite.remove(&(t - 1)) {
                t -= 1;
            }
            self.cofinite_from = Some(t);
        }
    }
}

/// A bounded weight sequence `u: ℕ → ℚ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSeq {
    exceptions: BTreeMap<u64, Q>,
    tail_start: u64,
    tail: WeightTail,
}

impl WeightSeq {
    pub fn new(
        exceptions: BTreeMap<u64, Q>,
        tail_start: u64,
        tail: WeightTail,
    ) -> Result<Self, SymbolError> {
        if tail_start == 0 {
            return Err(SymbolError::TailStartZero);
        }
        if let Some(&k) = exceptions.keys().find(|&&k| k == 0 || k >= tail_start) {
            return Err(SymbolError::ExceptionOutOfRange(k));
        }
        if let WeightTail::Geom { r, .. } = &tail {
            if r.abs() >= Q::one() {
                return Err(SymbolError::RatioNotContracting(fmt_q(r)));
            }
        }
        Ok(WeightSeq {
            exceptions,
            tail_start,
            tail,
        })
    }

    pub fn from_tail(tail: WeightTail) -> Result<Self, SymbolError> {
        Self::new(BTreeMap::new(), 1, tail)
    }

    pub fn constant(c: Q) -> Self {
        Self::from_tail(WeightTail::Const(c)).expect("constant weight is valid")
    }

    pub fn ones() -> Self {
        Self::constant(Q::one())
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, Q> {
        &self.exceptions
    }

    pub fn tail_start(&self) -> u64 {
        self.tail_start
    }

    pub fn tail(&self) -> &WeightTail {
        &self.tail
    }

    pub fn eval(&self, n: u64) -> Q {
        debug_assert!(n >= 1);
        match self.exceptions.get(&n) {
            Some(v) => v.clone(),
            None => self.tail.eval(n),
        }
    }

    pub fn zero_set(&self) -> ZeroSet {
        let mut zs = ZeroSet::default();
        for m in 1..self.tail_start {
            if self.eval(m).is_zero() {
                zs.finite.insert(m);
            }
        }
        let ts = self.tail_start;
        match &self.tail {
            WeightTail::Const(c) if c.is_zero() => zs.cofinite_from = Some(ts),
            WeightTail::Const(_) => {}
            WeightTail::CPlusInv { c, a } => {
                if c.is_zero() {
                    if a.is_zero() {
                        zs.cofinite_from = Some(ts);
                    }
                } else {
                    let root = -a / c;
                    if root.is_integer() && root.is_positive() {
                        let m: u64 = root.to_integer().try_into().unwrap_or(u64::MAX);
                        if m >= ts {
                            zs.finite.insert(m);
                        }
                    }
                }
            }
            WeightTail::Inv(a) => {
                if a.is_zero() {
                    zs.cofinite_from = Some(ts);
                }
            }
            WeightTail::Geom { a, r } => {
                if a.is_zero() || r.is_zero() {
                    zs.cofinite_from = Some(ts);
                }
            }
        }
        zs.normalize();
        zs
    }

    /// `inf_n |u(n)| > 0`.
    pub fn is_bounded_away_from_zero(&self) -> bool {
        let tail_ok = match &self.tail {
            WeightTail::Const(c) => !c.is_zero(),
            WeightTail::CPlusInv { c, .. } => !c.is_zero(),
            WeightTail::Inv(_) | WeightTail::Geom { .. } => false,
        };
        tail_ok && self.zero_set().is_empty()
    }

    /// Whether `u ∈ ℓ^p`, decided from the tail rule. `None` stands for
    /// `p = ∞`.
    pub fn in_lp(&self, p: Option<f64>) -> bool {
        let Some(p) = p else { return true };
        match &self.tail {
            WeightTail::Const(c) => c.is_zero(),
            WeightTail::CPlusInv { c, a } => c.is_zero() && (a.is_zero() || p > 1.0),
            WeightTail::Inv(a) => a.is_zero() || p > 1.0,
            WeightTail::Geom { .. } => true,
        }
    }

    /// True when `u(n) = 1` for every `n`.
    pub fn is_identically_one(&self) -> bool {
        let tail_one = match &self.tail {
            WeightTail::Const(c) => c.is_one(),
            WeightTail::CPlusInv { c, a } => c.is_one() && a.is_zero(),
            _ => false,
        };
        tail_one && self.exceptions.values().all(|v| v.is_one())
    }

    /// `k·u`.
    pub fn scaled(&self, k: &Q) -> WeightSeq {
        WeightSeq {
            exceptions: self
                .exceptions
                .iter()
                .map(|(&n, v)| (n, v * k))
                .collect(),
            tail_start: self.tail_start,
            tail: self.tail.scaled(k),
        }
    }
}

impl fmt::Display for WeightSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ex: Vec<String> = self
            .exceptions
            .iter()
            .map(|(k, v)| format!("{k}->{}", fmt_q(v)))
            .collect();
        let tail = match &self.tail {
            WeightTail::Const(c) => fmt_q(c),
            WeightTail::CPlusInv { c, a } => format!("{}+{}/n", fmt_q(c), fmt_q(a)),
            WeightTail::Inv(a) => format!("{}/n", fmt_q(a)),
            WeightTail::Geom { a, r } => format!("{}*({})^n", fmt_q(a), fmt_q(r)),
        };
        write!(f, "u{{{}; n>={}: {}}}", ex.join(","), self.tail_start, tail)
    }
}
