//! Riemannian optimization on the symplectic Stiefel manifold
//! `Sp(2k, 2n) = { X ∈ R^{2n×2k} : XᵀJ_{2n}X = J_{2k} }`.
//!
//! The crate provides the manifold geometry for the canonical-like and
//! Euclidean metrics, Cayley, quasi-geodesic and SR-decomposition
//! retractions, a non-monotone Barzilai–Borwein gradient method, and three
//! applications: nearest symplectic matrices, symplectic eigenvalues via
//! trace minimization, and symplectic model reduction of Hamiltonian systems.

pub mod error;
pub mod symplectic;
pub mod sr;
pub mod geometry;
pub mod linalg;
pub mod retraction;
pub mod optimizer;
pub mod applications;
pub mod models;

pub use error::{Error, Result};
