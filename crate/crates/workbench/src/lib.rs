//! Numerical workbench for Gupta–Bleuler-style quantization of the
//! electromagnetic vector potential on an ultrastatic lattice spacetime
//! M = ℝ × Σ, where Σ is a flat torus discretized as a periodic cochain
//! complex.
//!
//! The crate is organized bottom-up:
//!
//! * [`spatial`] — the discrete exterior calculus on Σ: cochain spaces,
//!   incidence derivatives, diagonal Hodge masses, Laplacians and their
//!   eigenbases.
//! * [`profile`] — smooth compactly supported time profiles with
//!   closed-form derivatives of every order.
//! * [`spacetime`] — test forms on M in product representation
//!   f = f₀ dt + f_Σ, with the Lorentzian pairing, exterior
//!   derivative/codifferential and the wave operator □ = −∂²ₜ − Δ.
//! * [`wave`] — per-mode solution theory: Cauchy evolution, retarded and
//!   advanced Green operators, the Pauli–Jordan propagator, the classical
//!   symplectic form, and time-slice reduction.
//! * [`oneparticle`] — the Krein one-particle structure κ, the zero-mode
//!   (harmonic) symplectic space, energy and frequency diagnostics.
//! * [`fock`] — truncated bosonic Fock space over a Krein subbasis, the
//!   oscillator sector for harmonic zero modes, field operators, n-point
//!   functions and the Gupta–Bleuler property checks.
//! * [`algebra`] — the free *-algebra of smeared fields with commutator
//!   normal ordering, gauge transformations and the gauge ideal.
//! * [`gaugeparam`] — gauge-parameter (ξ) wave operators □_ξ, the exact
//!   right inverse R, the localized primitive L, and the intertwiners 𝔍_R,
//!   𝔍_L between ξ-dynamics and Feynman-gauge dynamics.
//! * [`brst`] — scalar ghost-sector two-point functions and their
//!   compatibility conditions with the vector sector.
//! * [`config`], [`report`], [`suites`] — the verification harness used by
//!   the `workbench` binary.

pub mod algebra;
pub mod brst;
pub mod config;
pub mod fock;
pub mod gaugeparam;
pub mod oneparticle;
pub mod profile;
pub mod report;
pub mod spacetime;
pub mod spatial;
pub mod suites;
pub mod wave;

use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto exit codes: configuration problems are
/// distinguished from numerical failures so that scripted callers can react
/// appropriately.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or arguments (bad lattice parameters, mismatched
    /// degrees, out-of-range truncation orders, …).
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition on the mathematical domain of an operation failed
    /// (e.g. a form with harmonic leakage fed to an inverse power of Δ).
    #[error("domain error: {0}")]
    Domain(String),

    /// An internal numerical procedure failed (eigensolver breakdown,
    /// detected time-stepper instability, singular projection, …).
    #[error("numerical error: {0}")]
    Numerical(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
