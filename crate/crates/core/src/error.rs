use thiserror::Error;

use crate::basis::BasisKind;
use crate::model::ModelKind;
use crate::transport::SectorLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure mode of the toolkit. Numeric payloads are carried as `f64` regardless of the
/// scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("momentum |p| = {magnitude:e} lies in the gauge-singular neighbourhood of p = 0")]
    MomentumAtOrigin { magnitude: f64 },

    #[error("closed form requires lambda_r = 0, got {lambda_r}")]
    RequiresZeroRashba { lambda_r: f64 },

    #[error("Foldy-Wouthuysen transform undefined: E + delta_so = {denominator:e}")]
    FwUndefined { denominator: f64 },

    #[error("unsupported operator dimension {0} (expected 2, 4 or 8)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("state {index} has no definite spin: residual {residual:e}, polarization {polarization}")]
    NotSpinDiagonalizable { index: usize, residual: f64, polarization: f64 },

    #[error("finite-difference step too large (diagnostic {diagnostic:e})")]
    StepTooLarge { diagnostic: f64 },

    #[error("no closed form for model {model:?} in basis {basis:?}")]
    UnsupportedCombination { model: ModelKind, basis: BasisKind },

    #[error("basis {basis:?} is not spin-diagonal: Tr[S_z G] = {trace_sz_g:e}, so a diagonal distribution gives no spin Hall current")]
    BasisNotSpinDiagonal { basis: BasisKind, trace_sz_g: f64 },

    #[error("phase-space measure is singular (|det| = {determinant:e})")]
    MeasureSingular { determinant: f64 },

    #[error("integrator could not meet tolerance {tolerance:e} at t = {time}")]
    ToleranceNotMet { tolerance: f64, time: f64 },

    #[error("curvature is not rotationally symmetric (relative ring spread {spread:e})")]
    NotRotationallySymmetric { spread: f64 },

    #[error("tail error estimate {bound:e} exceeds tolerance {tolerance:e}")]
    TailBoundExceedsTolerance { bound: f64, tolerance: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e} > tolerance {tolerance:e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("sector {0:?} missing from spin Chern input")]
    MissingSector(SectorLabel),

    #[error("gap closes: |delta_so - 2 lambda_r| = {distance:e}")]
    GapClosing { distance: f64 },

    #[error("outside the spin Hall regime: delta_so = {delta_so} <= 2 lambda_r = {twice_lambda}")]
    RegimeViolation { delta_so: f64, twice_lambda: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
}
