//! Semiclassical Berry-curvature toolkit for the continuum Kane–Mele Hamiltonian with intrinsic
//! and Rashba spin–orbit coupling.
//!
//! Bottom-up layout: [`model`] (Hamiltonian, spectra, closed-form states, FW transform),
//! [`basis`] (energy ↔ spin-adapted rotation), [`berry`] (connections and curvature, closed form
//! and by finite differences), [`semiclassics`] (matrix-valued equations of motion and
//! trajectories), [`transport`] (Chern numbers, spin Chern number, Hall conductivities).
//! [`checks`] bundles the invariants used by the `spinhall check` command.
//!
//! All numerics are generic over [`Real`] (`f32`, `f64`); the `*F64` aliases fix the
//! double-precision instantiation used by the command-line tool.

pub mod basis;
pub mod berry;
pub mod checks;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod scalar;
pub mod semiclassics;
pub mod transport;

pub use basis::{BasisKind, BasisRotation};
pub use berry::{BerryData, GaugeTwist, ModelFrame, StateProvider};
pub use error::{Error, Result};
pub use model::{Block, ModelKind, ModelParams, Spin, SpinorSet, SpectrumResult, Valley};
pub use scalar::Real;
pub use semiclassics::{Trajectory, TrajectorySample};
pub use transport::{ChernEstimate, Distribution, QuadratureConfig, SectorLabel, TopologyReport};

pub type ModelParamsF64 = ModelParams<f64>;
pub type SpectrumResultF64 = SpectrumResult<f64>;
pub type SpinorSetF64 = SpinorSet<f64>;
pub type BerryDataF64 = BerryData<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TopologyReportF64 = TopologyReport<f64>;
pub type QuadratureConfigF64 = QuadratureConfig<f64>;
