//! Simulation and calibration toolkit for contact drying of wet fabric on
//! heated cylinders under low pressure.
//!
//! The fabric is modelled through its thickness as a coupled
//! temperature/moisture initial-boundary value problem: heat conduction
//! with moisture-dependent effective properties and a latent-heat sink,
//! and a pointwise evaporation law gated by a smooth temperature
//! activation. A machine pass chains three heated-cylinder stages with the
//! fabric flipped in between. On top of the solver sits a bound-constrained
//! trust-region least-squares fitter that calibrates the evaporation
//! parameters `(k, M_b, gamma)` against measured drying records.
//!
//! Modules:
//! - [`properties`]: effective heat capacity, conductivity and density of
//!   the wet fabric;
//! - [`kinetics`]: the evaporation source model;
//! - [`heat_transfer`]: the free-surface exchange coefficient
//!   (convection correlation + enclosure radiation);
//! - [`solver`]: the implicit stage integrator and machine composition;
//! - [`estimation`]: residuals, finite-difference Jacobians, the
//!   trust-region fitter, prediction metrics and drying classification;
//! - [`workbench`]: configuration, dataset ingestion, embedded validation
//!   tables and report emission.
//!
//! With the default `parallel` feature the independent per-sample
//! simulations of a batch evaluation fan out via rayon; disabling the
//! feature falls back to sequential evaluation with identical results.

pub mod error;
pub mod estimation;
pub mod heat_transfer;
pub mod kinetics;
pub mod properties;
pub mod solver;
pub mod workbench;

pub use error::{Error, Result};
