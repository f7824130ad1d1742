//! Numerical toolkit for Schrödinger-type operators H = T(−i∇) − V whose
//! kinetic symbol vanishes on a codimension-one level set (continuum
//! BCS-type and lattice variants).
//!
//! The crate builds the operators on finite tori, extracts their negative
//! spectra, computes Birman–Schwinger singular values and Schatten norms,
//! meshes Fermi-surface level sets with Leray quadrature, and evaluates the
//! eigenvalue-counting / eigenvalue-sum / log-moment / weak-coupling / CLR
//! functionals against their structural bounds.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod quad;
pub mod schatten;
pub mod spectra;
pub mod surface;
pub mod symbols;
pub mod torus;

mod fit;

pub use error::{Error, Result};
