//! Geodesics, cut loci and Carnot–Carathéodory distances for the radial
//! Grushin structure on ℝ³.
//!
//! The horizontal distribution is spanned by `∂x`, `∂y` and `f(r) ∂z`, with
//! `r = √(x² + y²)`, so motion in `z` is free away from the axis `Σ = {r = 0}`
//! and forbidden on it. Geodesics are projections of trajectories of
//! `H = ½(u² + v² + f(r)² w²)`.

pub mod dynamics;
pub mod error;
pub mod export;
pub mod grushin_r;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod riemannian;
pub mod roots;
pub mod singular_synthesis;
pub mod verify;

pub use error::{GrushinError, Result};
pub use profile::Profile;
