//! Phase-space solver and analysis toolkit for the Vlasov equation with
//! fractional Riesz interactions and an optional linear Fokker–Planck
//! term:
//!
//! ```text
//! ∂t f + v·∇x f + ∇Φ·∇v f = σ ∇v·(∇v f + v f),   Φ = κ Λ^{-β} ρ,   ρ = ∫ f dv
//! ```
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below are what the command-line tool uses.

pub mod blowup;
pub mod closed_form;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fokker_planck;
pub mod grid;
pub mod identities;
pub mod integrator;
pub mod output;
pub mod quadrature;
pub mod riesz;
pub mod scalar;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PhaseGrid64 = grid::PhaseGrid<f64>;
pub type DistributionField64 = grid::DistributionField<f64>;
pub type KernelSpec64 = riesz::KernelSpec<f64>;
pub type KernelTerm64 = riesz::KernelTerm<f64>;
pub type IntegratorConfig64 = integrator::IntegratorConfig<f64>;
pub type DiagnosticsRecord64 = diagnostics::DiagnosticsRecord<f64>;
pub type BlowupReport64 = blowup::BlowupReport<f64>;
pub type InitialFunctionals64 = blowup::InitialFunctionals<f64>;
pub type ClosedFormDensity64 = closed_form::ClosedFormDensity<f64>;

pub type PhaseGrid32 = grid::PhaseGrid<f32>;
pub type DistributionField32 = grid::DistributionField<f32>;
