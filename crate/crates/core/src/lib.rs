//! Constructive holomorphic dynamics on `C^n`: sparse polynomial algebra,
//! shear/overshear automorphism words, complete-field splitting, push-out
//! construction of Fatou-Bieberbach families avoiding a compact set, basin
//! rate certification, and deterministic slice rendering.
//!
//! The crate is organised around the data flow of the construction:
//!
//! * [`calg`] — complex vectors, sparse multivariate polynomials, polynomial maps.
//! * [`autword`] — basic automorphisms of `C^n` and their finite compositions,
//!   with exact inverses and polynomial parameter dependence.
//! * [`fields`] — polynomial vector fields, decomposition into complete
//!   shear/overshear fields, exact flows and Lie-Trotter composition.
//! * [`scenario`] — compact obstacle sets, shrink schedules, graph transforms
//!   and deterministic low-discrepancy samplers.
//! * [`pushout`] — the inductive stage engine, certification, limit evaluation
//!   and the resulting `F(z, ζ)` family.
//! * [`basins`] — rate-bounded non-autonomous basins and Koenigs linearization.
//! * [`render`] — slice rasterization and PPM output.
//! * [`cli`] — the `fatou` command-line surface.

pub mod autword;
pub mod basins;
pub mod calg;
pub mod cli;
pub mod fields;
pub mod pushout;
pub mod render;
pub mod scenario;
pub mod testkit;

pub use calg::{CMatrix, CVec, Cpx, MultiPoly, PolyMap};
