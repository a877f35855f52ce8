//! Cost functions, test-matrix constructions, symplectic eigenvalue
//! post-processing and the building blocks of structure-preserving model
//! reduction.

pub mod deim;
pub mod problems;
pub mod spectrum;
pub mod testmat;

pub use deim::{deim_select, AffineReference, DeimReducedRhs, DeimVariant, LocalNonlinearity};
pub use problems::{cotangent_lift, sum_gate, PsdProblem, TargetProblem, TraceProblem};
pub use spectrum::{symplectic_eigenpairs, williamson_small, SymplecticSpectrum, WilliamsonForm};
pub use testmat::{gauss_transform, random_symplectic_orthogonal, spsd_test_matrix};
