//! Randomly twisted transfer operators on the Bergman space of a disc.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`]: disc geometry, the explicit Bergman kernel and orthonormal basis.
//! * [`system`]: contraction branches `γ_j`, the weight `G`, and validation of
//!   the strict inclusion `closure(γ_j(Ω₀)) ⊂ Ω₀`.
//! * [`assembly`]: disc quadrature, Galerkin matrices of the weighted composition
//!   operators `e^{G∘γ_j} T_{γ_j}`, and the overlap matrix `H`.
//! * [`freegroup`]: reduced words, random homomorphisms `F^d → S_N` and fixed-point
//!   statistics.
//! * [`twisted`]: the twisted operator `L_N = Σ_j U_j ⊗ W_j`, its singular values,
//!   eigenvalues, the Hilbert–Schmidt trace formula and the restriction to the
//!   mean-zero subspace.
//! * [`limit`]: the group algebra with matrix coefficients, the tracial state and
//!   the closed-form arcsine example.
//! * [`stats`]: Poisson/Bell combinatorics, limit moments and Monte Carlo estimation.
//! * [`export`]: binary matrix containers, CSV and JSON helpers with provenance headers.

pub mod assembly;
pub mod domain;
pub mod error;
pub mod export;
pub mod freegroup;
pub mod limit;
pub mod linalg;
pub mod stats;
pub mod system;
pub mod twisted;

pub use faer::c64;

pub use assembly::{
    assemble_all, assemble_weighted_composition, overlap_matrix, quadrature_nodes, OverlapMatrix,
    QuadratureRule, TruncatedOperator,
};
pub use domain::Disc;
pub use error::{Error, Result};
pub use freegroup::{Permutation, RandomHom, Word};
pub use limit::AlgebraElement;
pub use stats::{MomentReport, TrialRecord};
pub use system::{AffineMap, Branch, BranchSystem, MobiusMap, ValidationReport, Weight};
pub use twisted::{SpectrumReport, TwistedMatrix};
