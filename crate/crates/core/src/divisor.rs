//! Left, right and two-sided zero-divisor classification of `uC_φ` on ℓ^p,
//! explicit finite-rank annihilators, and an elimination-based oracle.
//!
//! A witness is a finite sum of rank-one operators `g ↦ ⟨λ, g⟩·r`. For the
//! right side `T∘uC_φ = 0` reduces to `λᵀ(uC_φ) = 0` for every functional
//! `λ`, which involves only the rows in `supp λ` and their images. For the
//! left side `uC_φ∘T = 0` reduces to `uC_φ r = 0` for every range vector
//! `r`, which is an infinite condition: every `m` with `φ(m) ∈ supp r` must
//! satisfy `u(m) = 0`. The finite window checks `m ≤ W` exactly and the tail
//! certificate covers `m > W` from the fiber descriptors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::{left_nullspace, nullspace, span_contains, SparseMatrix};
use crate::operators::{assemble, is_bounded, OperatorSpec};
use crate::rational::{fmt_q, Rational, Q};
use crate::symbol::{FiberDescriptor, MapTail, SelfMap, ZeroSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side {other:?}, expected left or right")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Yes => "Yes",
            Status::No => "No",
            Status::Unknown => "Unknown",
        })
    }
}

/// The criterion a verdict was decided by. The serialized ids are stable and
/// appear verbatim in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// `u` nowhere zero: right zero divisor iff `φ` is not injective.
    #[serde(rename = "Thm-Anurag31")]
    RightNonInjective,
    /// Some nonempty fiber lies inside `Z(u)`.
    #[serde(rename = "Thm-hc31")]
    RightZeroFiber,
    /// `u(n₀) = 0` with `u ∈ ℓ^p`.
    #[serde(rename = "Thm-weight-zero")]
    RightZeroWeight,
    /// `u` nowhere zero: left zero divisor iff `φ` is not surjective.
    #[serde(rename = "Thm-anurag13")]
    LeftNonSurjective,
    /// `φ` misses a value.
    #[serde(rename = "Thm-HCsir1")]
    LeftMissedValue,
    /// `u` vanishes on a whole nonempty fiber.
    #[serde(rename = "Thm-fiber-zero")]
    LeftZeroFiber,
    /// `uC_φ` is injective, hence not a left zero divisor.
    #[serde(rename = "Cor-injective")]
    LeftInjective,
    /// `u` nowhere zero and `φ` not invertible.
    #[serde(rename = "Thm-Anurag34")]
    TwoSidedNowhereZero,
    /// `u` bounded away from zero: zero divisor iff `φ` not invertible.
    #[serde(rename = "Thm-TDZ-UC")]
    TwoSidedBoundedAway,
    /// Both one-sided verdicts are No.
    #[serde(rename = "Combined-sides")]
    TwoSidedCombined,
    /// Atomic `C_φ`: some atom has empty preimage.
    #[serde(rename = "Thm-comp-left")]
    AtomicEmptyPreimage,
    /// Atomic `uC_φ`: some atom has its whole preimage inside `Z(u)`.
    #[serde(rename = "Thm-amar1")]
    AtomicZeroPreimage,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::RightNonInjective,
        Rule::RightZeroFiber,
        Rule::RightZeroWeight,
        Rule::LeftNonSurjective,
        Rule::LeftMissedValue,
        Rule::LeftZeroFiber,
        Rule::LeftInjective,
        Rule::TwoSidedNowhereZero,
        Rule::TwoSidedBoundedAway,
        Rule::TwoSidedCombined,
        Rule::AtomicEmptyPreimage,
        Rule::AtomicZeroPreimage,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::RightNonInjective => "Thm-Anurag31",
            Rule::RightZeroFiber => "Thm-hc31",
            Rule::RightZeroWeight => "Thm-weight-zero",
            Rule::LeftNonSurjective => "Thm-anurag13",
            Rule::LeftMissedValue => "Thm-HCsir1",
            Rule::LeftZeroFiber => "Thm-fiber-zero",
            Rule::LeftInjective => "Cor-injective",
            Rule::TwoSidedNowhereZero => "Thm-Anurag34",
            Rule::TwoSidedBoundedAway => "Thm-TDZ-UC",
            Rule::TwoSidedCombined => "Combined-sides",
            Rule::AtomicEmptyPreimage => "Thm-comp-left",
            Rule::AtomicZeroPreimage => "Thm-amar1",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| format!("unknown rule id {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    pub explanation: String,
}

impl Verdict {
    fn yes(rule: Rule, explanation: impl Into<String>) -> Self {
        Verdict {
            status: Status::Yes,
            rule: Some(rule),
            explanation: explanation.into(),
        }
    }

    fn no(rule: Rule, explanation: impl Into<String>) -> Self {
        Verdict {
            status: Status::No,
            rule: Some(rule),
            explanation: explanation.into(),
        }
    }

    fn unknown(explanation: impl Into<String>) -> Self {
        Verdict {
            status: Status::Unknown,
            rule: None,
            explanation: explanation.into(),
        }
    }

    pub fn is_yes(&self) -> bool {
        self.status == Status::Yes
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(r) => write!(f, "{} [{}] {}", self.status, r, self.explanation),
            None => write!(f, "{} {}", self.status, self.explanation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    CoordinateProjection,
    SpanProjection,
    FunctionalTensor,
    KernelTensor,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::CoordinateProjection => "coordinate_projection",
            WitnessKind::SpanProjection => "span_projection",
            WitnessKind::FunctionalTensor => "functional_tensor",
            WitnessKind::KernelTensor => "kernel_tensor",
        })
    }
}

/// One coordinate of a sparse vector (1-based index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coef {
    pub index: u64,
    pub value: Rational,
}

/// The rank-one operator `g ↦ ⟨functional, g⟩·range`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOne {
    pub range: Vec<Coef>,
    pub functional: Vec<Coef>,
}

fn sparse(entries: impl IntoIterator<Item = (u64, Q)>) -> Vec<Coef> {
    let mut map: BTreeMap<u64, Q> = BTreeMap::new();
    for (i, v) in entries {
        *map.entry(i).or_insert_with(Q::zero) += v;
    }
    map.into_iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(index, v)| Coef {
            index,
            value: Rational(v),
        })
        .collect()
}

fn unit(i: u64) -> Vec<Coef> {
    sparse([(i, Q::one())])
}

impl RankOne {
    pub fn new(
        range: impl IntoIterator<Item = (u64, Q)>,
        functional: impl IntoIterator<Item = (u64, Q)>,
    ) -> Self {
        RankOne {
            range: sparse(range),
            functional: sparse(functional),
        }
    }

    fn projection(i: u64) -> Self {
        RankOne {
            range: unit(i),
            functional: unit(i),
        }
    }
}

/// Explicit finite-rank annihilator of `uC_φ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub side: Side,
    pub kind: WitnessKind,
    pub terms: Vec<RankOne>,
    pub required_window: u64,
}

impl Witness {
    fn new(spec: &OperatorSpec, side: Side, kind: WitnessKind, terms: Vec<RankOne>) -> Self {
        let mut w = Witness {
            side,
            kind,
            terms,
            required_window: 1,
        };
        w.required_window = required_window(spec, &w);
        w
    }

    pub fn range_support(&self) -> BTreeSet<u64> {
        self.terms
            .iter()
            .flat_map(|t| t.range.iter().map(|c| c.index))
            .collect()
    }

    pub fn functional_support(&self) -> BTreeSet<u64> {
        self.terms
            .iter()
            .flat_map(|t| t.functional.iter().map(|c| c.index))
            .collect()
    }

    /// The `W×W` matrix of the witness, `Σ range·functionalᵀ`.
    pub fn matrix(&self, window: u64) -> SparseMatrix {
        let w = window as usize;
        let mut m = SparseMatrix::zeros(w, w);
        for t in &self.terms {
            for r in &t.range {
                for f in &t.functional {
                    let (i, j) = (r.index as usize - 1, f.index as usize - 1);
                    let v = m.get(i, j) + &r.value.0 * &f.value.0;
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    /// Range vectors (left side) or functionals (right side) as dense
    /// vectors of length `window`: the vectors that must be annihilated.
    pub fn annihilated_vectors(&self, window: u64) -> Vec<Vec<Q>> {
        self.terms
            .iter()
            .map(|t| {
                let coefs = match self.side {
                    Side::Left => &t.range,
                    Side::Right => &t.functional,
                };
                let mut v = vec![Q::zero(); window as usize];
                for c in coefs {
                    v[c.index as usize - 1] = c.value.0.clone();
                }
                v
            })
            .collect()
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[Coef]| {
            v.iter()
                .map(|c| format!("{}:{}", c.index, fmt_q(&c.value.0)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(f, "{} {} (W={})", self.side, self.kind, self.required_window)?;
        for t in &self.terms {
            write!(f, "; [{}] <- <{}, g>", show(&t.range), show(&t.functional))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DivisorError {
    #[error("operator is not bounded: {0}")]
    Unbounded(String),
    #[error("no {side} witness: verdict is {status}")]
    NotAZeroDivisor { side: Side, status: Status },
    #[error("synthesized witness failed verification: {0}")]
    VerificationFailed(String),
}

fn require_bounded(spec: &OperatorSpec) -> Result<(), DivisorError> {
    let b = is_bounded(spec);
    if b.bounded {
        Ok(())
    } else {
        Err(DivisorError::Unbounded(b.reason))
    }
}

fn fiber_inside(zs: &ZeroSet, fiber: &FiberDescriptor) -> bool {
    !fiber.is_empty()
        && fiber.finite_part.iter().all(|&m| zs.contains(m))
        && fiber
            .tail_progression
            .is_none_or(|p| zs.cofinite_from.is_some_and(|t| t <= p.first))
}

/// Smallest `n₀` whose fiber is nonempty and contained in `Z(u)`.
///
/// Any such fiber contains a zero `z` and `n₀ = φ(z)`, so it suffices to look
/// at images of zeros. For a cofinite zero set the scan stops at the first
/// tail index whose whole fiber lies in the cofinite part: every later index
/// has a larger image with the same property.
pub fn zero_fiber(map: &SelfMap, zs: &ZeroSet) -> Option<u64> {
    let mut candidates: BTreeSet<u64> = zs.finite.iter().map(|&z| map.eval(z)).collect();
    if let Some(t) = zs.cofinite_from {
        let ts = map.tail_start();
        let head_max = (1..ts).map(|m| map.eval(m)).max().unwrap_or(0);
        let mut m = t;
        loop {
            let n = map.eval(m);
            candidates.insert(n);
            if m >= ts {
                if matches!(map.tail(), MapTail::Const(_)) {
                    break;
                }
                if n > head_max && map.fiber(n).finite_part.iter().all(|&k| k >= t) {
                    break;
                }
            }
            m += 1;
        }
    }
    candidates
        .into_iter()
        .find(|&n| fiber_inside(zs, &map.fiber(n)))
}

pub fn classify_right_zd(spec: &OperatorSpec) -> Result<Verdict, DivisorError> {
    require_bounded(spec)?;
    let zs = spec.weight.zero_set();
    let map = &spec.map;
    if zs.is_empty() {
        return Ok(match map.first_collision() {
            Some((n0, a, b)) => Verdict::yes(
                Rule::RightNonInjective,
                format!("u has no zeros and phi is not injective: phi({a}) = phi({b}) = {n0}"),
            ),
            None => Verdict::no(
                Rule::RightNonInjective,
                "u has no zeros and phi is injective",
            ),
        });
    }
    if let Some(n0) = zero_fiber(map, &zs) {
        return Ok(Verdict::yes(
            Rule::RightZeroFiber,
            format!("u vanishes on the fiber of {n0}"),
        ));
    }
    let n0 = zs.min().expect("zero set is nonempty");
    if spec.weight.in_lp(spec.p.finite()) {
        return Ok(Verdict::yes(
            Rule::RightZeroWeight,
            format!("u({n0}) = 0 and u is in l^{}", spec.p),
        ));
    }
    Ok(Verdict::unknown(format!(
        "u({n0}) = 0 but no fiber lies in Z(u) and u is not certified in l^{}",
        spec.p
    )))
}

pub fn classify_left_zd(spec: &OperatorSpec) -> Result<Verdict, DivisorError> {
    require_bounded(spec)?;
    let zs = spec.weight.zero_set();
    let map = &spec.map;
    let missed = map.first_empty_fiber();
    if zs.is_empty() {
        return Ok(match missed {
            Some(n0) => Verdict::yes(
                Rule::LeftNonSurjective,
                format!("u has no zeros and phi misses {n0}"),
            ),
            None => Verdict::no(
                Rule::LeftNonSurjective,
                "u has no zeros and phi is surjective",
            ),
        });
    }
    if let Some(n0) = missed {
        return Ok(Verdict::yes(
            Rule::LeftMissedValue,
            format!("phi misses {n0}"),
        ));
    }
    if let Some(n0) = zero_fiber(map, &zs) {
        return Ok(Verdict::yes(
            Rule::LeftZeroFiber,
            format!("u vanishes on the fiber of {n0}"),
        ));
    }
    // The zero-fiber search is exhaustive, so here every fiber is nonempty
    // and carries a nonzero weight.
    Ok(Verdict::no(
        Rule::LeftInjective,
        "phi is surjective and every fiber carries a nonzero weight",
    ))
}

pub fn classify_zd(spec: &OperatorSpec) -> Result<Verdict, DivisorError> {
    require_bounded(spec)?;
    let zs = spec.weight.zero_set();
    let map = &spec.map;
    if zs.is_empty() && !map.is_invertible() {
        return Ok(Verdict::yes(
            Rule::TwoSidedNowhereZero,
            "u has no zeros and phi is not invertible",
        ));
    }
    if spec.weight.is_bounded_away_from_zero() {
        // Zero-free, so the previous branch already caught non-invertible maps.
        return Ok(Verdict::no(
            Rule::TwoSidedBoundedAway,
            "u is bounded away from zero and phi is invertible",
        ));
    }
    let right = classify_right_zd(spec)?;
    let left = classify_left_zd(spec)?;
    Ok(match (&right.status, &left.status) {
        (Status::Yes, _) => Verdict {
            explanation: format!("right zero divisor: {}", right.explanation),
            ..right
        },
        (_, Status::Yes) => Verdict {
            explanation: format!("left zero divisor: {}", left.explanation),
            ..left
        },
        (Status::No, Status::No) => Verdict::no(
            Rule::TwoSidedCombined,
            "neither a left nor a right zero divisor",
        ),
        _ => Verdict::unknown(format!(
            "right: {}; left: {}",
            right.explanation, left.explanation
        )),
    })
}

/// Builds the annihilator of `T∘uC_φ = 0`, following the rule that
/// classified the operator.
pub fn synth_right_witness(spec: &OperatorSpec) -> Result<Witness, DivisorError> {
    let verdict = classify_right_zd(spec)?;
    let map = &spec.map;
    let u = &spec.weight;
    let w = match verdict.rule {
        Some(Rule::RightNonInjective) if verdict.is_yes() => {
            let (_, a, b) = map.first_collision().expect("map is not injective");
            let functional = [(a, u.eval(b)), (b, -u.eval(a))];
            Witness::new(
                spec,
                Side::Right,
                WitnessKind::FunctionalTensor,
                vec![RankOne::new([(1, Q::one())], functional)],
            )
        }
        Some(Rule::RightZeroFiber) => {
            let zs = u.zero_set();
            let n0 = zero_fiber(map, &zs).expect("classifier found a zero fiber");
            let fiber = map.fiber(n0);
            let coords = fiber.smallest(fiber.finite_part.len().max(1));
            let kind = if coords.len() == 1 {
                WitnessKind::CoordinateProjection
            } else {
                WitnessKind::SpanProjection
            };
            let terms = coords.into_iter().map(RankOne::projection).collect();
            Witness::new(spec, Side::Right, kind, terms)
        }
        Some(Rule::RightZeroWeight) => {
            let n0 = u.zero_set().min().expect("weight has a zero");
            Witness::new(
                spec,
                Side::Right,
                WitnessKind::CoordinateProjection,
                vec![RankOne::projection(n0)],
            )
        }
        _ => {
            return Err(DivisorError::NotAZeroDivisor {
                side: Side::Right,
                status: verdict.status,
            })
        }
    };
    checked(spec, w)
}

/// Builds the annihilator of `uC_φ∘T = 0`, following the rule that
/// classified the operator.
pub fn synth_left_witness(spec: &OperatorSpec) -> Result<Witness, DivisorError> {
    let verdict = classify_left_zd(spec)?;
    let map = &spec.map;
    let w = match verdict.rule {
        Some(Rule::LeftNonSurjective) if verdict.is_yes() => {
            let n0 = map.first_empty_fiber().expect("map is not surjective");
            if spec.weight.is_identically_one() {
                Witness::new(
                    spec,
                    Side::Left,
                    WitnessKind::CoordinateProjection,
                    vec![RankOne::projection(n0)],
                )
            } else {
                Witness::new(
                    spec,
                    Side::Left,
                    WitnessKind::KernelTensor,
                    vec![RankOne::new([(n0, Q::one())], [(1, Q::one())])],
                )
            }
        }
        Some(Rule::LeftMissedValue) => {
            let n0 = map.first_empty_fiber().expect("map is not surjective");
            Witness::new(
                spec,
                Side::Left,
                WitnessKind::CoordinateProjection,
                vec![RankOne::projection(n0)],
            )
        }
        Some(Rule::LeftZeroFiber) => {
            let n0 = zero_fiber(map, &spec.weight.zero_set()).expect("classifier found one");
            Witness::new(
                spec,
                Side::Left,
                WitnessKind::CoordinateProjection,
                vec![RankOne::projection(n0)],
            )
        }
        _ => {
            return Err(DivisorError::NotAZeroDivisor {
                side: Side::Left,
                status: verdict.status,
            })
        }
    };
    checked(spec, w)
}

/// Witness for the two-sided question: the right witness when there is one,
/// otherwise the left one.
pub fn synth_witness(spec: &OperatorSpec) -> Result<Witness, DivisorError> {
    match synth_right_witness(spec) {
        Ok(w) => Ok(w),
        Err(DivisorError::NotAZeroDivisor { .. }) => synth_left_witness(spec),
        Err(e) => Err(e),
    }
}

fn checked(spec: &OperatorSpec, w: Witness) -> Result<Witness, DivisorError> {
    let check = verify_witness(spec, &w);
    if check.verified {
        Ok(w)
    } else {
        Err(DivisorError::VerificationFailed(check.detail))
    }
}

/// Smallest window containing every coordinate the identity depends on.
pub fn required_window(spec: &OperatorSpec, w: &Witness) -> u64 {
    let mut coords: BTreeSet<u64> = w.range_support();
    coords.extend(w.functional_support());
    match w.side {
        Side::Right => {
            let images: Vec<u64> = w
                .functional_support()
                .iter()
                .map(|&m| spec.map.eval(m))
                .collect();
            coords.extend(images);
        }
        Side::Left => {
            for s in w.range_support() {
                coords.extend(spec.map.fiber(s).finite_part);
            }
        }
    }
    coords.last().copied().unwrap_or(1).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub verified: bool,
    pub window: u64,
    /// The finite product vanished on the window.
    pub product_zero: bool,
    pub tail_certificate: bool,
    /// First nonzero entry `(row, col)` of the product, 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failing: Option<(u64, u64)>,
    pub detail: String,
}

/// Checks the annihilation identity exactly on the witness window and
/// certifies the coordinates beyond it.
pub fn verify_witness(spec: &OperatorSpec, w: &Witness) -> WitnessCheck {
    let window = w.required_window.max(1);
    let mut detail = Vec::new();
    let nonzero = w
        .terms
        .iter()
        .any(|t| !t.range.is_empty() && !t.functional.is_empty());
    let inside = w
        .range_support()
        .into_iter()
        .chain(w.functional_support())
        .all(|i| (1..=window).contains(&i));
    if !nonzero {
        detail.push("witness is zero".to_string());
    }
    if !inside {
        detail.push(format!("witness support leaves the window 1..={window}"));
    }
    let (product_zero, failing) = if nonzero && inside {
        let a = assemble(spec, window as usize);
        let t = w.matrix(window);
        let product = match w.side {
            Side::Right => t.mul(a.matrix()),
            Side::Left => a.matrix().mul(&t),
        }
        .expect("square matrices of equal size");
        match product.first_nonzero() {
            None => (true, None),
            Some((i, j, v)) => {
                detail.push(format!(
                    "product entry ({}, {}) is {}",
                    i + 1,
                    j + 1,
                    fmt_q(&v)
                ));
                (false, Some((i as u64 + 1, j as u64 + 1)))
            }
        }
    } else {
        (false, None)
    };
    let tail_certificate = inside && tail_certificate(spec, w, window, &mut detail);
    let verified = nonzero && product_zero && tail_certificate;
    if verified {
        detail.push(format!("product vanishes on 1..={window}; tail certified"));
    }
    WitnessCheck {
        verified,
        window,
        product_zero,
        tail_certificate,
        failing,
        detail: detail.join("; "),
    }
}

fn tail_certificate(spec: &OperatorSpec, w: &Witness, window: u64, detail: &mut Vec<String>) -> bool {
    match w.side {
        Side::Right => {
            // Only rows in supp λ enter λᵀ(uC_φ); each has a single entry at φ(m).
            match w
                .functional_support()
                .into_iter()
                .find(|&m| spec.map.eval(m) > window)
            {
                Some(m) => {
                    detail.push(format!("phi({m}) lies beyond the window"));
                    false
                }
                None => true,
            }
        }
        Side::Left => {
            let zs = spec.weight.zero_set();
            for s in w.range_support() {
                let fiber = spec.map.fiber(s);
                if let Some(&m) = fiber
                    .finite_part
                    .iter()
                    .find(|&&m| m > window && !zs.contains(m))
                {
                    detail.push(format!("u({m}) != 0 with phi({m}) = {s} beyond the window"));
                    return false;
                }
                if let Some(p) = fiber.tail_progression {
                    let start = p.first.max(window + 1);
                    if !zs.cofinite_from.is_some_and(|t| t <= start) {
                        detail.push(format!(
                            "fiber of {s} is infinite and u does not vanish on it from {start}"
                        ));
                        return false;
                    }
                }
            }
            true
        }
    }
}

/// A nonzero `T` with `T·A = 0` (right) or `A·T = 0` (left), found by exact
/// elimination: rows of `T` span the left nullspace of `A`, or columns of
/// `T` span its nullspace. `None` when that space is trivial.
pub fn oracle_annihilator(a: &SparseMatrix, side: Side) -> Option<SparseMatrix> {
    let (rows, cols) = a.shape();
    let t = match side {
        Side::Right => {
            let basis = left_nullspace(a);
            if basis.is_empty() {
                return None;
            }
            SparseMatrix::from_dense(&basis)
        }
        Side::Left => {
            let basis = nullspace(a);
            if basis.is_empty() {
                return None;
            }
            SparseMatrix::from_dense(&basis).transpose()
        }
    };
    let product = match side {
        Side::Right => t.mul(a),
        Side::Left => a.mul(&t),
    }
    .expect("annihilator shape matches");
    assert!(
        product.is_zero(),
        "oracle annihilator of a {rows}x{cols} matrix failed its self-check"
    );
    Some(t)
}

/// Largest `k` such that the truncated question restricted to coordinates
/// `1..=k` is the untruncated one: on the left, every fiber of `j ≤ k` lies
/// inside the window; on the right, every row `m ≤ k` maps inside it.
pub fn admissible_support(spec: &OperatorSpec, n: u64, side: Side) -> u64 {
    let ok = |k: u64| match side {
        Side::Left => {
            let f = spec.map.fiber(k);
            f.tail_progression.is_none() && f.finite_part.iter().all(|&m| m <= n)
        }
        Side::Right => spec.map.eval(k) <= n,
    };
    (1..=n).take_while(|&k| ok(k)).last().unwrap_or(0)
}

/// A nonzero annihilator in the `N`-window supported on the admissible
/// coordinates `1..=k`, as a vector of length `k`. For a true No there is
/// none.
pub fn restricted_annihilator(spec: &OperatorSpec, n: u64, side: Side) -> Option<Vec<Q>> {
    let k = admissible_support(spec, n, side) as usize;
    if k == 0 {
        return None;
    }
    let a = assemble(spec, n as usize);
    let all: Vec<usize> = (0..n as usize).collect();
    let first: Vec<usize> = (0..k).collect();
    let basis = match side {
        Side::Left => nullspace(&a.matrix().select(&all, &first)),
        Side::Right => left_nullspace(&a.matrix().select(&first, &all)),
    };
    basis.into_iter().next()
}

pub fn restricted_annihilator_exists(spec: &OperatorSpec, n: u64, side: Side) -> bool {
    restricted_annihilator(spec, n, side).is_some()
}

/// The first vector the witness must annihilate that falls outside the span
/// of the oracle basis at window `max(n, W)`, as its first nonzero
/// coordinate. `Ok(())` when all of them lie in the span.
pub fn witness_oracle_gap(spec: &OperatorSpec, w: &Witness, n: u64) -> Result<(), u64> {
    let n = n.max(w.required_window);
    let a = assemble(spec, n as usize);
    let basis = match w.side {
        Side::Left => nullspace(a.matrix()),
        Side::Right => left_nullspace(a.matrix()),
    };
    for v in w.annihilated_vectors(n) {
        if basis.is_empty() || !span_contains(&basis, &v) {
            let first = v.iter().position(|x| !x.is_zero()).unwrap_or(0);
            return Err(first as u64 + 1);
        }
    }
    Ok(())
}

pub fn witness_in_oracle_span(spec: &OperatorSpec, w: &Witness, n: u64) -> bool {
    witness_oracle_gap(spec, w, n).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Yes: the witness lies in the span of the oracle annihilators.
    AnnihilatorInSpan,
    /// No: the window has no annihilator on the admissible coordinates.
    NoRestrictedAnnihilator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub side: Side,
    pub n: u64,
    pub window: u64,
    pub expectation: Expectation,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failing_coordinate: Option<u64>,
}

/// Compares the one-sided verdict with the elimination oracle at size `n`.
/// `None` for Unknown verdicts and for No verdicts not covered by a
/// characterization (none at present).
pub fn oracle_cross_check(spec: &OperatorSpec, side: Side, n: u64) -> Result<Option<CrossCheck>, DivisorError> {
    let verdict = match side {
        Side::Left => classify_left_zd(spec)?,
        Side::Right => classify_right_zd(spec)?,
    };
    match verdict.status {
        Status::Yes => {
            let w = match side {
                Side::Left => synth_left_witness(spec)?,
                Side::Right => synth_right_witness(spec)?,
            };
            let gap = witness_oracle_gap(spec, &w, n);
            Ok(Some(CrossCheck {
                side,
                n,
                window: n.max(w.required_window),
                expectation: Expectation::AnnihilatorInSpan,
                passed: gap.is_ok(),
                failing_coordinate: gap.err(),
            }))
        }
        Status::No => {
            let found = restricted_annihilator(spec, n, side);
            Ok(Some(CrossCheck {
                side,
                n,
                window: n,
                expectation: Expectation::NoRestrictedAnnihilator,
                passed: found.is_none(),
                failing_coordinate: found
                    .and_then(|v| v.iter().position(|x| !x.is_zero()))
                    .map(|i| i as u64 + 1),
            }))
        }
        Status::Unknown => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Exponent;
    use crate::rational::{q, qi};
    use crate::symbol::{WeightSeq, WeightTail};
    use proptest::prelude::*;

    fn map(ex: &[(u64, u64)], ts: u64, tail: MapTail) -> SelfMap {
        SelfMap::new(ex.iter().copied().collect(), ts, tail).unwrap()
    }

    fn weight(ex: &[(u64, Q)], ts: u64, tail: WeightTail) -> WeightSeq {
        WeightSeq::new(ex.iter().cloned().collect(), ts, tail).unwrap()
    }

    fn inv() -> WeightSeq {
        WeightSeq::from_tail(WeightTail::Inv(qi(1))).unwrap()
    }

    fn one_plus_inv() -> WeightSeq {
        WeightSeq::from_tail(WeightTail::CPlusInv { c: qi(1), a: qi(1) }).unwrap()
    }

    fn block2() -> SelfMap {
        SelfMap::from_tail(MapTail::Block { d: 2, c: 0 }).unwrap()
    }

    fn square() -> SelfMap {
        SelfMap::from_tail(MapTail::Power(2)).unwrap()
    }

    fn collide12() -> SelfMap {
        map(&[(1, 1), (2, 1)], 3, MapTail::Shift(0))
    }

    fn hc31_spec() -> OperatorSpec {
        OperatorSpec::new(
            weight(&[(1, qi(0))], 2, WeightTail::Inv(qi(1))),
            map(&[(1, 1)], 2, MapTail::Shift(1)),
            Exponent::Two,
        )
    }

    fn block_zero_spec() -> OperatorSpec {
        OperatorSpec::new(
            weight(&[(1, qi(0)), (2, qi(0))], 3, WeightTail::Const(qi(1))),
            block2(),
            Exponent::Two,
        )
    }

    fn rule_of(v: &Verdict) -> (Status, Option<&'static str>) {
        (v.status, v.rule.map(Rule::id))
    }

    #[test]
    fn right_classifier_examples() {
        let s = OperatorSpec::new(inv(), collide12(), Exponent::Two);
        assert_eq!(rule_of(&classify_right_zd(&s).unwrap()), (Status::Yes, Some("Thm-Anurag31")));
        let s = OperatorSpec::composition(SelfMap::identity(), Exponent::Two);
        assert_eq!(rule_of(&classify_right_zd(&s).unwrap()), (Status::No, Some("Thm-Anurag31")));
        assert_eq!(
            rule_of(&classify_right_zd(&hc31_spec()).unwrap()),
            (Status::Yes, Some("Thm-hc31"))
        );
    }

    #[test]
    fn left_classifier_examples() {
        let s = OperatorSpec::new(inv(), square(), Exponent::Two);
        assert_eq!(rule_of(&classify_left_zd(&s).unwrap()), (Status::Yes, Some("Thm-anurag13")));
        let s = OperatorSpec::multiplication(one_plus_inv(), Exponent::Two);
        assert_eq!(rule_of(&classify_left_zd(&s).unwrap()), (Status::No, Some("Thm-anurag13")));
        assert_eq!(
            rule_of(&classify_left_zd(&block_zero_spec()).unwrap()),
            (Status::Yes, Some("Thm-fiber-zero"))
        );
    }

    #[test]
    fn two_sided_examples() {
        let s = OperatorSpec::composition(square(), Exponent::Two);
        assert_eq!(rule_of(&classify_zd(&s).unwrap()), (Status::Yes, Some("Thm-Anurag34")));
        let s = OperatorSpec::multiplication(one_plus_inv(), Exponent::Two);
        assert_eq!(rule_of(&classify_zd(&s).unwrap()), (Status::No, Some("Thm-TDZ-UC")));
        let s = OperatorSpec::composition(block2(), Exponent::Two);
        assert_eq!(classify_zd(&s).unwrap().status, Status::Yes);
        let a = assemble(&s, 12);
        assert!(oracle_annihilator(a.matrix(), Side::Right).is_some());
    }

    #[test]
    fn unbounded_specs_are_rejected() {
        let s = OperatorSpec::composition(SelfMap::from_tail(MapTail::Const(1)).unwrap(), Exponent::One);
        assert!(matches!(classify_zd(&s), Err(DivisorError::Unbounded(_))));
    }

    #[test]
    fn left_witness_examples() {
        let s = OperatorSpec::composition(map(&[(1, 1)], 2, MapTail::Shift(1)), Exponent::Two);
        let w = synth_left_witness(&s).unwrap();
        assert_eq!(w.kind, WitnessKind::CoordinateProjection);
        assert_eq!(w.terms, vec![RankOne::projection(2)]);
        let a = assemble(&s, 8);
        assert!(a.matrix().mul(&w.matrix(8)).unwrap().is_zero());

        let s = OperatorSpec::new(inv(), square(), Exponent::Two);
        let w = synth_left_witness(&s).unwrap();
        assert_eq!(w.kind, WitnessKind::KernelTensor);
        assert_eq!(w.terms, vec![RankOne::new([(2, qi(1))], [(1, qi(1))])]);

        let w = synth_left_witness(&block_zero_spec()).unwrap();
        assert_eq!(w.terms, vec![RankOne::projection(1)]);
        assert!(verify_witness(&block_zero_spec(), &w).verified);
    }

    #[test]
    fn right_witness_examples() {
        let w = synth_right_witness(&hc31_spec()).unwrap();
        assert_eq!(w.kind, WitnessKind::CoordinateProjection);
        assert_eq!(w.terms, vec![RankOne::projection(1)]);

        let s = OperatorSpec::new(inv(), collide12(), Exponent::Two);
        let w = synth_right_witness(&s).unwrap();
        assert_eq!(w.kind, WitnessKind::FunctionalTensor);
        assert_eq!(w.terms, vec![RankOne::new([(1, qi(1))], [(1, q(1, 2)), (2, qi(-1))])]);
        let a = assemble(&s, 8);
        assert!(w.matrix(8).mul(a.matrix()).unwrap().is_zero());

        let s = OperatorSpec::composition(block2(), Exponent::Two);
        let w = synth_right_witness(&s).unwrap();
        assert_eq!(w.terms, vec![RankOne::new([(1, qi(1))], [(1, qi(1)), (2, qi(-1))])]);
    }

    #[test]
    fn perturbed_witnesses_fail_with_a_coordinate() {
        let s = hc31_spec();
        let mut w = synth_right_witness(&s).unwrap();
        w.terms[0].functional.push(Coef {
            index: 2,
            value: Rational(q(1, 1000)),
        });
        w.required_window = required_window(&s, &w);
        let check = verify_witness(&s, &w);
        assert!(!check.verified);
        assert_eq!(check.failing, Some((1, 3)));

        let s = OperatorSpec::new(inv(), collide12(), Exponent::Two);
        let mut w = synth_right_witness(&s).unwrap();
        w.terms[0].functional[0].value = Rational(q(1001, 1000));
        let check = verify_witness(&s, &w);
        assert!(!check.verified);
        assert_eq!(check.failing, Some((1, 1)));
    }

    #[test]
    fn zero_operator_accepts_any_left_witness() {
        let s = OperatorSpec::new(WeightSeq::constant(qi(0)), square(), Exponent::Two);
        let w = Witness {
            side: Side::Left,
            kind: WitnessKind::KernelTensor,
            terms: vec![RankOne::new([(3, q(2, 3)), (4, qi(1))], [(1, qi(5))])],
            required_window: 16,
        };
        assert!(verify_witness(&s, &w).verified);
    }

    #[test]
    fn left_tail_certificate_catches_infinite_fibers() {
        // φ ≡ 1 from 3 on, u zero only up to 5: projecting onto e_1 misses
        // the rows 6, 7, ... that also map to 1.
        let s = OperatorSpec::new(
            weight(&[(1, qi(0)), (2, qi(0)), (3, qi(0)), (4, qi(0)), (5, qi(0))], 6, WeightTail::Geom { a: qi(1), r: q(1, 2) }),
            map(&[(1, 2), (2, 3)], 3, MapTail::Const(1)),
            Exponent::Two,
        );
        let w = Witness {
            side: Side::Left,
            kind: WitnessKind::CoordinateProjection,
            terms: vec![RankOne::projection(1)],
            required_window: 5,
        };
        let check = verify_witness(&s, &w);
        assert!(check.product_zero);
        assert!(!check.tail_certificate);
    }

    #[test]
    fn oracle_examples() {
        let p = Exponent::Two;
        for side in [Side::Left, Side::Right] {
            assert!(oracle_annihilator(&SparseMatrix::identity(5), side).is_none());
        }
        let shift = assemble(&OperatorSpec::composition(SelfMap::from_tail(MapTail::Shift(1)).unwrap(), p), 3);
        let t = oracle_annihilator(shift.matrix(), Side::Left).unwrap();
        assert_eq!(t.to_dense(), vec![vec![qi(1)], vec![qi(0)], vec![qi(0)]]);
        let b = assemble(&OperatorSpec::composition(block2(), p), 6);
        let t = oracle_annihilator(b.matrix(), Side::Right).unwrap();
        assert!(t.mul(b.matrix()).unwrap().is_zero());
    }

    #[test]
    fn cross_checks_agree_on_examples() {
        let specs = [
            hc31_spec(),
            block_zero_spec(),
            OperatorSpec::new(inv(), collide12(), Exponent::Two),
            OperatorSpec::new(inv(), square(), Exponent::Two),
            OperatorSpec::multiplication(one_plus_inv(), Exponent::Two),
        ];
        for s in &specs {
            for side in [Side::Left, Side::Right] {
                for n in [8, 12] {
                    if let Some(c) = oracle_cross_check(s, side, n).unwrap() {
                        assert!(c.passed, "{s} {side} {n}: {c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn restricted_oracle_finds_annihilators_of_non_injective_truncations() {
        let s = OperatorSpec::composition(block2(), Exponent::Two);
        let v = restricted_annihilator(&s, 8, Side::Right).unwrap();
        assert_eq!(v[0], -v[1].clone());
    }

    #[test]
    fn rule_ids_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.id().parse::<Rule>().unwrap(), r);
        }
    }

    fn arb_map() -> impl Strategy<Value = SelfMap> {
        let tail = prop_oneof![
            (0u64..3).prop_map(MapTail::Shift),
            (1u64..4, 0u64..3).prop_map(|(d, c)| MapTail::Block { d, c }),
            (2u32..4).prop_map(MapTail::Power),
        ];
        (prop::collection::btree_map(1u64..9, 1u64..12, 0..5), tail).prop_map(|(ex, tail)| {
            let ts = ex.keys().last().map_or(1, |k| k + 1);
            SelfMap::new(ex, ts, tail).unwrap()
        })
    }

    fn arb_rational() -> impl Strategy<Value = Q> {
        (-10i64..=10, 1i64..=10).prop_map(|(n, d)| q(n, d))
    }

    fn arb_weight() -> impl Strategy<Value = WeightSeq> {
        let tail = prop_oneof![
            arb_rational().prop_map(WeightTail::Const),
            (arb_rational(), arb_rational()).prop_map(|(c, a)| WeightTail::CPlusInv { c, a }),
            arb_rational().prop_map(WeightTail::Inv),
            (arb_rational(), (-9i64..=9).prop_map(|n| q(n, 10))).prop_map(|(a, r)| WeightTail::Geom { a, r }),
        ];
        (prop::collection::btree_map(1u64..9, prop_oneof![Just(qi(0)), arb_rational()], 0..5), tail)
            .prop_map(|(ex, tail)| {
                let ts = ex.keys().last().map_or(1, |k| k + 1);
                WeightSeq::new(ex, ts, tail).unwrap()
            })
    }

    fn arb_spec() -> impl Strategy<Value = OperatorSpec> {
        (arb_weight(), arb_map(), prop_oneof![Just(Exponent::One), Just(Exponent::Two), Just(Exponent::Infinity)])
            .prop_map(|(u, phi, p)| OperatorSpec::new(u, phi, p))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn yes_verdicts_carry_verified_witnesses(spec in arb_spec()) {
            if classify_right_zd(&spec).unwrap().is_yes() {
                let w = synth_right_witness(&spec).unwrap();
                prop_assert!(verify_witness(&spec, &w).verified);
            }
            if classify_left_zd(&spec).unwrap().is_yes() {
                let w = synth_left_witness(&spec).unwrap();
                prop_assert!(verify_witness(&spec, &w).verified);
            }
        }

        #[test]
        fn verdicts_are_scale_invariant(spec in arb_spec(), c in prop_oneof![Just(q(1, 3)), Just(q(-1, 3)), Just(qi(2)), Just(qi(-2)), Just(qi(5))]) {
            let scaled = spec.with_weight(spec.weight.scaled(&c));
            for f in [classify_right_zd, classify_left_zd, classify_zd] {
                let a = f(&spec).unwrap();
                let b = f(&scaled).unwrap();
                prop_assert_eq!((a.status, a.rule), (b.status, b.rule));
            }
        }

        #[test]
        fn zero_fiber_search_matches_enumeration(spec in arb_spec()) {
            let zs = spec.weight.zero_set();
            let found = zero_fiber(&spec.map, &zs);
            // Brute force over values up to 40 with preimages up to 2000.
            let mut fibers: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            for m in 1..=2000u64 {
                let v = spec.map.eval(m);
                if v <= 40 {
                    fibers.entry(v).or_default().push(m);
                }
            }
            let brute = fibers
                .iter()
                .find(|(_, pre)| pre.iter().all(|&m| zs.contains(m)))
                .map(|(&n, _)| n);
            if let Some(b) = brute {
                prop_assert_eq!(found, Some(b));
            } else if let Some(f) = found {
                prop_assert!(f > 40);
            }
        }
    }
}
