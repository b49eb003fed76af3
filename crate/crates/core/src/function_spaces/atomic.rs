//! Finite atomic measure spaces, simple functions on them, and maps between
//! atoms.
//!
//! Every atom has positive mass, so almost-everywhere statements become
//! statements about every atom, and `L^∞` is the space of value vectors with
//! the max norm.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::divisor::{Rule, Status, Verdict};
use crate::linalg::SparseMatrix;
use crate::rational::{fmt_q, Rational, Q};

use super::FunctionSpaceError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub id: String,
    pub mass: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicMeasureSpace {
    atoms: Vec<Atom>,
}

impl AtomicMeasureSpace {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, FunctionSpaceError> {
        if atoms.is_empty() {
            return Err(FunctionSpaceError::NoAtoms);
        }
        let mut seen = BTreeSet::new();
        for a in &atoms {
            if a.mass.is_negative() {
                return Err(FunctionSpaceError::NegativeMass(a.id.clone()));
            }
            if a.mass.is_zero() {
                return Err(FunctionSpaceError::ZeroMass(a.id.clone()));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(FunctionSpaceError::DuplicateAtom(a.id.clone()));
            }
        }
        Ok(AtomicMeasureSpace { atoms })
    }

    /// Atoms `1..=n`, each of mass 1.
    pub fn unit(n: usize) -> Self {
        Self::new(
            (1..=n)
                .map(|i| Atom {
                    id: i.to_string(),
                    mass: Q::one(),
                })
                .collect(),
        )
        .expect("unit masses are valid")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, FunctionSpaceError> {
        self.atoms
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| FunctionSpaceError::UnknownAtom(id.to_string()))
    }

    /// Same atoms, every mass multiplied by `k > 0`.
    pub fn scaled(&self, k: &Q) -> Result<Self, FunctionSpaceError> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom {
                    id: a.id.clone(),
                    mass: &a.mass * k,
                })
                .collect(),
        )
    }
}

/// A function constant on atoms, stored in atom order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleFunction {
    space: AtomicMeasureSpace,
    values: Vec<Q>,
}

impl SimpleFunction {
    pub fn new(space: &AtomicMeasureSpace, values: Vec<Q>) -> Result<Self, FunctionSpaceError> {
        if values.len() != space.len() {
            return Err(FunctionSpaceError::NotTotal {
                expected: space.len(),
                found: values.len(),
            });
        }
        Ok(SimpleFunction {
            space: space.clone(),
            values,
        })
    }

    /// From an `atom id → value` table covering every atom.
    pub fn from_map(space: &AtomicMeasureSpace, map: &BTreeMap<String, Q>) -> Result<Self, FunctionSpaceError> {
        for id in map.keys() {
            space.index_of(id)?;
        }
        let values = space
            .atoms
            .iter()
            .map(|a| {
                map.get(&a.id)
                    .cloned()
                    .ok_or_else(|| FunctionSpaceError::MissingValue(a.id.clone()))
            })
            .collect::<Result<_, _>>()?;
        Self::new(space, values)
    }

    pub fn constant(space: &AtomicMeasureSpace, c: Q) -> Self {
        SimpleFunction {
            space: space.clone(),
            values: vec![c; space.len()],
        }
    }

    pub fn space(&self) -> &AtomicMeasureSpace {
        &self.space
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn sup_norm(&self) -> Q {
        self.values.iter().map(Signed::abs).max().unwrap_or_else(Q::zero)
    }

    pub fn product(&self, other: &SimpleFunction) -> Result<SimpleFunction, FunctionSpaceError> {
        if self.space != other.space {
            return Err(FunctionSpaceError::SpaceMismatch);
        }
        Self::new(
            &self.space,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    /// `x ↦ h(x) − c`.
    pub fn shifted(&self, c: &Q) -> SimpleFunction {
        SimpleFunction {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v - c).collect(),
        }
    }

    fn indicator(space: &AtomicMeasureSpace, set: &BTreeSet<usize>) -> SimpleFunction {
        SimpleFunction {
            space: space.clone(),
            values: (0..space.len())
                .map(|i| if set.contains(&i) { Q::one() } else { Q::zero() })
                .collect(),
        }
    }
}

/// Essential range: since every atom has positive mass, the set of values.
pub fn ess_range(h: &SimpleFunction) -> BTreeSet<Q> {
    h.values.iter().cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinfTdz {
    pub is_tdz: bool,
    /// `χ_E` with `E = {h = 0}`; norm one and `h·χ_E = 0`.
    pub witness: Option<SimpleFunction>,
}

/// `h` is a TDZ in `L^∞` exactly when it vanishes on a set of positive
/// measure, here on some atom.
pub fn linf_is_tdz(h: &SimpleFunction) -> LinfTdz {
    let zeros: BTreeSet<usize> = h
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_zero())
        .map(|(i, _)| i)
        .collect();
    if zeros.is_empty() {
        return LinfTdz {
            is_tdz: false,
            witness: None,
        };
    }
    let chi = SimpleFunction::indicator(&h.space, &zeros);
    debug_assert!(h.product(&chi).expect("same space").sup_norm().is_zero());
    LinfTdz {
        is_tdz: true,
        witness: Some(chi),
    }
}

/// A polynomial `p(x) = x − α` that makes `p(h)` a TDZ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyTdz {
    pub alpha: Q,
    /// Coefficients of `p`, lowest degree first.
    pub coefficients: Vec<Q>,
    /// `p(h)` passed its TDZ check.
    pub evidence: bool,
    pub detail: String,
}

/// `α` is the value at the first atom, which lies in the essential range.
pub fn poly_tdz_witness(h: &SimpleFunction) -> PolyTdz {
    let alpha = h.values[0].clone();
    let ph = h.shifted(&alpha);
    let evidence = ess_range(&ph).contains(&Q::zero());
    PolyTdz {
        coefficients: vec![-alpha.clone(), Q::one()],
        detail: format!(
            "ess range of h - {} contains 0: {evidence}",
            fmt_q(&alpha)
        ),
        alpha,
        evidence,
    }
}

/// One term of the sequence `M_{h_n}` that shows `M_h` is a TDZ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultRow {
    pub n: u64,
    /// `‖M_{h_n}‖ = ‖h_n‖_∞`.
    pub factor_norm: Rational,
    /// `‖M_h M_{h_n}‖ = ‖h·h_n‖_∞`.
    pub product_norm: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultOpTdz {
    pub is_tdz: bool,
    pub rows: Vec<MultRow>,
}

/// `M_h` on `L^p(μ)` is a TDZ iff `h` is one in `L^∞`; the sequence is the
/// constant `M_{χ_E}`.
pub fn mult_op_tdz(h: &SimpleFunction, n_max: u64) -> MultOpTdz {
    let t = linf_is_tdz(h);
    let rows = match &t.witness {
        Some(chi) => {
            let product = h.product(chi).expect("same space").sup_norm();
            (1..=n_max)
                .map(|n| MultRow {
                    n,
                    factor_norm: chi.sup_norm().into(),
                    product_norm: product.clone().into(),
                })
                .collect()
        }
        None => Vec::new(),
    };
    MultOpTdz {
        is_tdz: t.is_tdz,
        rows,
    }
}

/// A map of atoms to atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomMap {
    space: AtomicMeasureSpace,
    image: Vec<usize>,
}

impl AtomMap {
    pub fn new(space: &AtomicMeasureSpace, image: Vec<usize>) -> Result<Self, FunctionSpaceError> {
        if image.len() != space.len() {
            return Err(FunctionSpaceError::NotTotal {
                expected: space.len(),
                found: image.len(),
            });
        }
        if let Some(&bad) = image.iter().find(|&&j| j >= space.len()) {
            return Err(FunctionSpaceError::IndexOutOfRange(bad));
        }
        Ok(AtomMap {
            space: space.clone(),
            image,
        })
    }

    pub fn from_map(space: &AtomicMeasureSpace, map: &BTreeMap<String, String>) -> Result<Self, FunctionSpaceError> {
        for id in map.keys() {
            space.index_of(id)?;
        }
        let image = space
            .atoms
            .iter()
            .map(|a| {
                let target = map
                    .get(&a.id)
                    .ok_or_else(|| FunctionSpaceError::MissingValue(a.id.clone()))?;
                space.index_of(target)
            })
            .collect::<Result<_, _>>()?;
        Self::new(space, image)
    }

    pub fn identity(space: &AtomicMeasureSpace) -> Self {
        AtomMap {
            space: space.clone(),
            image: (0..space.len()).collect(),
        }
    }

    pub fn space(&self) -> &AtomicMeasureSpace {
        &self.space
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn preimage(&self, y: usize) -> BTreeSet<usize> {
        self.image
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == y)
            .map(|(x, _)| x)
            .collect()
    }

    pub fn is_injective(&self) -> bool {
        let set: BTreeSet<usize> = self.image.iter().copied().collect();
        set.len() == self.image.len()
    }

    pub fn is_surjective(&self) -> bool {
        let set: BTreeSet<usize> = self.image.iter().copied().collect();
        set.len() == self.space.len()
    }

    /// Matrix of `uC_φ` in the atom basis: row `x` has `u(x)` in column `φ(x)`.
    pub fn weighted_matrix(&self, u: &SimpleFunction) -> SparseMatrix {
        let n = self.space.len();
        let mut m = SparseMatrix::zeros(n, n);
        for (x, &y) in self.image.iter().enumerate() {
            m.set(x, y, u.values[x].clone());
        }
        m
    }
}

/// `dμφ⁻¹/dμ` at each atom: the mass of its preimage over its own mass.
pub fn radon_nikodym(phi: &AtomMap) -> SimpleFunction {
    let atoms = phi.space.atoms();
    let mut pushed = vec![Q::zero(); atoms.len()];
    for (x, &y) in phi.image.iter().enumerate() {
        pushed[y] += &atoms[x].mass;
    }
    let values = pushed
        .into_iter()
        .zip(atoms)
        .map(|(p, a)| p / &a.mass)
        .collect();
    SimpleFunction {
        space: phi.space.clone(),
        values,
    }
}

/// Rank-one annihilator `T f = f(n₀)·χ_{n₀}` of `uC_φ` on the left.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicWitness {
    pub atom: String,
    /// Atoms mapped onto `atom`; `u` vanishes on all of them.
    pub preimage: Vec<String>,
    /// `uC_φ∘T = 0` held exactly on the whole space.
    pub verified: bool,
}

/// Left zero-divisor test for `uC_φ` on `L^p(μ)` over a finite atomic space.
///
/// `uC_φ χ_{n₀} = u·χ_{φ⁻¹(n₀)}`, so the projection onto `χ_{n₀}` is a left
/// annihilator exactly when `u` vanishes on `φ⁻¹(n₀)`. If no atom has that
/// property every atom has a preimage carrying a nonzero weight and `uC_φ`
/// is injective. On a finite space the test is therefore complete.
pub fn lp_comp_left_zd(phi: &AtomMap, u: &SimpleFunction) -> Result<(Verdict, Option<AtomicWitness>), FunctionSpaceError> {
    if u.space != phi.space {
        return Err(FunctionSpaceError::SpaceMismatch);
    }
    let atoms = phi.space.atoms();
    let unweighted = u.values.iter().all(One::is_one);
    let found = (0..atoms.len()).find(|&y| {
        let pre = phi.preimage(y);
        if unweighted {
            pre.is_empty()
        } else {
            pre.iter().all(|&x| u.values[x].is_zero())
        }
    });
    let Some(y) = found else {
        let verdict = Verdict {
            status: Status::No,
            rule: Some(Rule::LeftInjective),
            explanation: "every atom has a preimage atom with nonzero weight".into(),
        };
        return Ok((verdict, None));
    };
    let pre = phi.preimage(y);
    let (rule, explanation) = if unweighted {
        (
            Rule::AtomicEmptyPreimage,
            format!("atom {} has empty preimage", atoms[y].id),
        )
    } else {
        (
            Rule::AtomicZeroPreimage,
            format!("u vanishes on the preimage of atom {}", atoms[y].id),
        )
    };
    let n = atoms.len();
    let mut t = SparseMatrix::zeros(n, n);
    t.set(y, y, Q::one());
    let verified = phi
        .weighted_matrix(u)
        .mul(&t)
        .expect("square matrices of equal size")
        .is_zero();
    let witness = AtomicWitness {
        atom: atoms[y].id.clone(),
        preimage: pre.iter().map(|&x| atoms[x].id.clone()).collect(),
        verified,
    };
    let verdict = Verdict {
        status: Status::Yes,
        rule: Some(rule),
        explanation,
    };
    Ok((verdict, Some(witness)))
}

/// `C_φ` on `L²(μ)` is onto exactly when `φ` is injective on atoms.
pub fn l2_comp_surjective(phi: &AtomMap) -> bool {
    phi.is_injective()
}
