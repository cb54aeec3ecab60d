//! Spectral laboratory for the modified KdV equation on a large periodic domain.
//!
//! The crate is organized around one currency type, [`SpectralField`]: a function
//! of x held as continuum-normalized Fourier coefficients on a [`Grid`]. On top of
//! it sit the norm evaluators (Lebesgue, Sobolev, Besov, modulation,
//! Fourier-Lebesgue, mixed space-time), the exact Airy group and the dealiased
//! mKdV time steppers, the dispersive-estimate sweep drivers (Strichartz decay,
//! bilinear decay with its closed-form spectral oracle), and the norm-inflation
//! experiment built from three independent routes to the third Gateaux
//! derivative of the data-to-solution map.

pub mod estimates;
pub mod field;
pub mod flows;
pub mod grid;
pub mod illposedness;
pub mod norms;
pub mod synth;

pub use field::{dealiased_cube, dealiased_product, SpectralField};
pub use grid::{FrequencyWindow, Grid};
pub use norms::{NormSpec, Trajectory};

use thiserror::Error;

/// Errors shared by every module in the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("grid cannot resolve the request: {0}")]
    Resolution(String),
    #[error("spectrum exceeds the target grid band: |xi| up to {max_xi:.6} vs limit {limit:.6}")]
    SpectrumOverflow { max_xi: f64, limit: f64 },
    #[error("inadmissible (p, q) = ({p}, {q}): {reason}")]
    Inadmissible { p: f64, q: f64, reason: String },
    #[error("degenerate frequency separation: lambda = {lambda:.6}, mu = {mu:.6} (both must be positive)")]
    DegenerateSeparation { lambda: f64, mu: f64 },
    #[error("undefined ratio: inner norm is zero")]
    UndefinedRatio,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("blow-up detected at t = {t:.6}: growth factor {factor:.3e} exceeds guard")]
    BlowUp { t: f64, factor: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
