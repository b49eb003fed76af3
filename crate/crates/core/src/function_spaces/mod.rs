//! Computable models of `C(X)` and `L^p(μ)`: functions on a uniform grid of
//! an interval, and functions on a finite atomic measure space.

pub mod atomic;
pub mod grid;

pub use atomic::{
    ess_range, l2_comp_surjective, linf_is_tdz, lp_comp_left_zd, radon_nikodym, Atom, AtomMap,
    AtomicMeasureSpace, AtomicWitness, LinfTdz, MultOpTdz, MultRow, PolyTdz, SimpleFunction,
};
pub use grid::{cx_is_tdz, urysohn_sequence, ClosedForm, CxTdz, GridFunction, GridMap, ZeroLocation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FunctionSpaceError {
    #[error("interval [{a}, {b}] is empty")]
    EmptyInterval { a: String, b: String },
    #[error("a grid needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("functions live on different measure spaces")]
    SpaceMismatch,
    #[error("index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("n must be positive")]
    NonPositiveIndex,
    #[error("no grid neighbourhood of point {index} has |f| < 1/{n}; refine the grid")]
    RefinementNeeded { n: u64, index: usize },
    #[error("a measure space needs at least one atom")]
    NoAtoms,
    #[error("atom {0:?} has negative mass")]
    NegativeMass(String),
    #[error("atom {0:?} has zero mass")]
    ZeroMass(String),
    #[error("atom {0:?} is listed twice")]
    DuplicateAtom(String),
    #[error("unknown atom {0:?}")]
    UnknownAtom(String),
    #[error("no value given for atom {0:?}")]
    MissingValue(String),
    #[error("expected one value per atom ({expected}), got {found}")]
    NotTotal { expected: usize, found: usize },
}
