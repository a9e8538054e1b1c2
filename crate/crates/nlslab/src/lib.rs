//! Numerical laboratory for multi-solitons of the nonlinear Schrödinger
//! equation
//!
//!   ∂_t u = i (Δu + f(|u|²) u),     u : I × ℝ^d → ℂ,   d ∈ {1, 2},
//!
//! with pure-power nonlinearities f(r) = r^((p-1)/2) and the cubic-quintic
//! model f(r) = r − r².  The crate provides:
//!
//! * a periodic spectral grid with Fourier differentiation and Sobolev norms,
//! * ground-state profiles Q_ω (closed forms and radial shooting),
//! * boosted solitons R_k and their exact identities,
//! * a Strang split-step propagator (forward and backward in time),
//! * the modified H^s energy functionals, cutoff partitions, and localized
//!   Weinstein energies used to diagnose multi-soliton decay,
//! * the modulation decomposition enforcing orthogonality to the soliton
//!   symmetry directions,
//! * dense linearized operators L₊/L₋ with constrained coercivity reports
//!   and the supercritical instability eigenpair,
//! * experiment drivers for the backward-construction ladder and the
//!   two-construction uniqueness diagnostic.

pub mod config;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod linops;
pub mod modulation;
pub mod nonlinearity;
pub mod propagator;
pub mod soliton;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
