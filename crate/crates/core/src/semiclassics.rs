//! Matrix-valued symplectic data, Pfaffian measure, weighted velocities and band trajectories.
//!
//! Two-dimensional phase space with Euclidean metric and `ε^{xy} = +1`. Antisymmetric tensors
//! are stored by their `xy` component only (`F_yx = −F_xy`, `G^{yx} = −G^{xy}`).

use serde::Serialize;

use crate::basis::{self, BasisKind};
use crate::berry;
use crate::error::{Error, Result};
use nalgebra::ComplexField;

use crate::linalg::{self, anticommutator, CMat};
use crate::model::{self, ModelKind, ModelParams, Radicals, Valley};
use crate::ode::{self, OdeOptions};
use crate::scalar::Real;
use crate::transport::SectorLabel;

/// Lower bound on `|w̃|` along a trajectory.
pub const MEASURE_FLOOR: f64 = 1e-8;

/// Position-space gauge data. Every shipped model has these identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionSpaceFields<T: Real> {
    /// `a_a`, the position-space Berry connection.
    pub connection: [CMat<T>; 2],
    /// Berry part of `F_xy` (the external `−eB` is added separately).
    pub curvature: CMat<T>,
    /// Mixed components `M^a_b`, indexed `[a][b]`.
    pub mixed: [[CMat<T>; 2]; 2],
}

impl<T: Real> PositionSpaceFields<T> {
    pub fn zero(n: usize) -> Self {
        let z = || linalg::zeros::<T>(n);
        Self { connection: [z(), z()], curvature: z(), mixed: [[z(), z()], [z(), z()]] }
    }
}

/// Band-projected inputs at one phase-space point.
#[derive(Clone, Debug, PartialEq)]
pub struct BandInputs<T: Real> {
    pub h0: CMat<T>,
    /// `∂H₀/∂p_a`.
    pub h0_gradient: [CMat<T>; 2],
    /// Momentum-space connection `A^a`.
    pub connection: [CMat<T>; 2],
    /// Momentum-space curvature `G^{xy}`, commutator term included.
    pub curvature: CMat<T>,
    pub position: PositionSpaceFields<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticData<T: Real> {
    pub f_xy: CMat<T>,
    /// `M^a_b`, indexed `[a][b]`.
    pub m: [[CMat<T>; 2]; 2],
    pub g_xy: CMat<T>,
    /// `e_a = e𝓔_a − (i/ħ)[H₀, a_a]`.
    pub e_drive: [CMat<T>; 2],
    /// `f^a = −∂H₀/∂p_a − (i/ħ)[H₀, A^a]`.
    pub f_drive: [CMat<T>; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinematicSolution<T: Real> {
    /// `w̃₁/₂`.
    pub measure: CMat<T>,
    /// `ẋ^i w̃₁/₂`.
    pub weighted_velocity: [CMat<T>; 2],
    /// `w̃₁/₂ ṗ_i`.
    pub weighted_force: [CMat<T>; 2],
}

/// `G^{xy} = ∂_x A^y − ∂_y A^x − (i/ħ)[A^x, A^y]` from a connection and its derivatives
/// `derivative[a][b] = ∂A^b/∂p_a`.
pub fn field_strength<T: Real>(connection: &[CMat<T>; 2], derivative: &[[CMat<T>; 2]; 2], hbar: T) -> CMat<T> {
    let commutator = linalg::minus_i_commutator(&connection[0], &connection[1]);
    &derivative[0][1] - &derivative[1][0] + linalg::scale(&commutator, T::one() / hbar)
}

fn check_square<T: Real>(m: &CMat<T>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: if m.nrows() != n { m.nrows() } else { m.ncols() } });
    }
    Ok(())
}

/// Assembles `F`, `M`, `G`, `e_a` and `f^a` at one point.
///
/// `F_xy = −eB + (position-space Berry curvature)`.
pub fn form_components<T: Real>(inputs: &BandInputs<T>, params: &ModelParams<T>) -> Result<SymplecticData<T>> {
    let n = inputs.h0.nrows();
    let pos = &inputs.position;
    let all = [
        &inputs.h0,
        &inputs.h0_gradient[0],
        &inputs.h0_gradient[1],
        &inputs.connection[0],
        &inputs.connection[1],
        &inputs.curvature,
        &pos.connection[0],
        &pos.connection[1],
        &pos.curvature,
        &pos.mixed[0][0],
        &pos.mixed[0][1],
        &pos.mixed[1][0],
        &pos.mixed[1][1],
    ];
    for m in all {
        check_square(m, n)?;
    }
    let one = linalg::identity::<T>(n);
    let inv_hbar = T::one() / params.hbar;
    let e = params.charge;
    let f_xy = linalg::scale(&one, -e * params.b_field) + &pos.curvature;
    let e_drive = [0, 1].map(|a| {
        linalg::scale(&one, e * params.e_field[a]) + linalg::scale(&linalg::minus_i_commutator(&inputs.h0, &pos.connection[a]), inv_hbar)
    });
    let f_drive = [0, 1].map(|a| {
        -&inputs.h0_gradient[a] + linalg::scale(&linalg::minus_i_commutator(&inputs.h0, &inputs.connection[a]), inv_hbar)
    });
    Ok(SymplecticData { f_xy, m: pos.mixed.clone(), g_xy: inputs.curvature.clone(), e_drive, f_drive })
}

fn trace_m<T: Real>(data: &SymplecticData<T>) -> CMat<T> {
    &data.m[0][0] + &data.m[1][1]
}

/// `w̃₁/₂ = 1 + M^i_i − ¼{F_ij, G^ij} = 1 + M^i_i − ½{F_xy, G^xy}`.
pub fn pfaffian_measure<T: Real>(data: &SymplecticData<T>) -> CMat<T> {
    let n = data.g_xy.nrows();
    linalg::identity::<T>(n) + trace_m(data) - linalg::scale(&anticommutator(&data.f_xy, &data.g_xy), T::of(0.5))
}

/// `G^{ij}` or `F_ij` as a full antisymmetric tensor entry.
fn antisym<T: Real>(xy: &CMat<T>, i: usize, j: usize) -> CMat<T> {
    match (i, j) {
        (0, 1) => xy.clone(),
        (1, 0) => -xy,
        _ => linalg::zeros(xy.nrows()),
    }
}

/// Weighted velocity and force:
///
/// ```text
/// ẋ^i w̃ = −f^i − {M^i_j, f^j} + {M^j_j, f^i} + ½{G^ij, e_j}
/// w̃ ṗ_i = e_i + {M^j_i, e_j} − {M^j_j, e_i} − ½{F_ji, f^j}
/// ```
pub fn weighted_velocities<T: Real>(data: &SymplecticData<T>) -> KinematicSolution<T> {
    let half = T::of(0.5);
    let tr = trace_m(data);
    let velocity = [0, 1].map(|i| {
        let mut v = -&data.f_drive[i] + anticommutator(&tr, &data.f_drive[i]);
        for j in 0..2 {
            v -= anticommutator(&data.m[i][j], &data.f_drive[j]);
            v += linalg::scale(&anticommutator(&antisym(&data.g_xy, i, j), &data.e_drive[j]), half);
        }
        v
    });
    let force = [0, 1].map(|i| {
        let mut f = &data.e_drive[i] - anticommutator(&tr, &data.e_drive[i]);
        for j in 0..2 {
            f += anticommutator(&data.m[j][i], &data.e_drive[j]);
            f -= linalg::scale(&anticommutator(&antisym(&data.f_xy, j, i), &data.f_drive[j]), half);
        }
        f
    });
    KinematicSolution { measure: pfaffian_measure(data), weighted_velocity: velocity, weighted_force: force }
}

/// Single-band (Abelian) kinematics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnomalousKinematics<T> {
    pub sqrt_w: T,
    /// `√w ẋ`.
    pub xdot: [T; 2],
    /// `√w ṗ`.
    pub pdot: [T; 2],
}

/// Scalar reduction: `√w = 1 + eBG`, `√w ẋ^i = ∂H/∂p_i + e ε^{ij} 𝓔_j G`,
/// `√w ṗ_i = e𝓔_i + eB ε_ij ∂H/∂p_j`.
pub fn anomalous_specialize<T: Real>(params: &ModelParams<T>, g_xy: T, h_grad: [T; 2]) -> AnomalousKinematics<T> {
    let e = params.charge;
    let [ex, ey] = params.e_field;
    let b = params.b_field;
    AnomalousKinematics {
        sqrt_w: T::one() + e * b * g_xy,
        xdot: [h_grad[0] + e * ey * g_xy, h_grad[1] - e * ex * g_xy],
        pdot: [e * ex + e * b * h_grad[1], e * ey - e * b * h_grad[0]],
    }
}

/// Closed-form positive-energy inputs of one valley in a basis with known Berry data.
///
/// FW: `H₀ = E·1`. Φ: `H₀ = diag(E₁, E₂)`. Ψ: `H₀ = R̃ diag(E₁, E₂) R̃`.
pub fn model_inputs<T: Real>(params: &ModelParams<T>, model: ModelKind, basis: BasisKind, p: [T; 2]) -> Result<BandInputs<T>> {
    let connection = berry::analytic_connection(model, basis, params, p)?;
    let curvature = berry::analytic_curvature(model, basis, params, p)?;
    let v2 = params.v_f * params.v_f;
    let (h0, h0_gradient) = match basis {
        BasisKind::Fw => {
            let e = (params.v_f * model::momentum_norm(p)).hypot(params.delta_so);
            let one = linalg::identity::<T>(2);
            (linalg::scale(&one, e), [0, 1].map(|i| linalg::scale(&one, v2 * p[i] / e)))
        }
        BasisKind::Phi | BasisKind::Psi => {
            let r = Radicals::new(params, model::momentum_norm(p));
            let energies = model::analytic_spectrum(params, p).energies;
            let grads = [0, 1].map(|i| [v2 * p[i] / r.r1, v2 * p[i] / r.r2]);
            if basis == BasisKind::Phi {
                (linalg::diag_real(&energies[..2]), grads.map(|g| linalg::diag_real(&g)))
            } else {
                (basis::psi_band_hamiltonian(energies[0], energies[1]), grads.map(|g| basis::psi_band_hamiltonian(g[0], g[1])))
            }
        }
    };
    Ok(BandInputs { h0, h0_gradient, connection, curvature, position: PositionSpaceFields::zero(2) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub x: [T; 2],
    pub p: [T; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest accepted local error estimate, in units of the tolerance.
    pub max_scaled_error: f64,
    /// Largest dropped inter-band entry of `ẋw̃` or `w̃ṗ` seen by the integrator.
    pub max_interband: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub band: SectorLabel,
    pub samples: Vec<TrajectorySample<T>>,
    pub stats: TrajectoryStats,
}

/// Band velocity and force `(ẋ, ṗ)` at `p` for position `k` of the positive block, plus the
/// largest off-diagonal entry that the band projection drops.
pub fn band_rates<T: Real>(params: &ModelParams<T>, model: ModelKind, basis: BasisKind, k: usize, p: [T; 2]) -> Result<([T; 2], [T; 2], T)> {
    let inputs = model_inputs(params, model, basis, p)?;
    let sol = weighted_velocities(&form_components(&inputs, params)?);
    let w = sol.measure[(k, k)].re;
    if !(w.abs() > T::of(MEASURE_FLOOR)) {
        return Err(Error::MeasureSingular { determinant: w.as_f64() });
    }
    let other = 1 - k;
    let mut interband = T::zero();
    for m in sol.weighted_velocity.iter().chain(sol.weighted_force.iter()) {
        interband = interband.max(m[(k, other)].modulus());
    }
    let xdot = [0, 1].map(|i| sol.weighted_velocity[i][(k, k)].re / w);
    let pdot = [0, 1].map(|i| sol.weighted_force[i][(k, k)].re / w);
    Ok((xdot, pdot, interband))
}

/// Integrates the band-diagonal equations of motion of a positive-energy, definite-spin band
/// with Dormand–Prince 5(4) at local tolerance `tol` (relative and absolute).
#[allow(clippy::too_many_arguments)]
pub fn integrate_trajectory<T: Real>(
    params: &ModelParams<T>,
    model: ModelKind,
    basis: BasisKind,
    band: SectorLabel,
    x0: [T; 2],
    p0: [T; 2],
    t_span: (T, T),
    tol: T,
) -> Result<Trajectory<T>> {
    if !basis.spin_diagonal() {
        let g = berry::analytic_curvature(model, basis, params, p0)?;
        let sz = model::spin_operator::<T>(2)?;
        return Err(Error::BasisNotSpinDiagonal { basis, trace_sz_g: linalg::trace(&(sz * g)).re.as_f64() });
    }
    let k = berry::positive_spin_position(params, basis, band.valley, band.spin)?;
    let mut interband = T::zero();
    let rhs = |_t: T, y: &[T]| -> Result<Vec<T>> {
        let (xdot, pdot, off) = band_rates(params, model, basis, k, [y[2], y[3]])?;
        interband = interband.max(off);
        Ok(vec![xdot[0], xdot[1], pdot[0], pdot[1]])
    };
    let (samples, stats) = ode::dopri5(rhs, t_span.0, t_span.1, &[x0[0], x0[1], p0[0], p0[1]], OdeOptions::with_tolerance(tol))?;
    Ok(Trajectory {
        band,
        samples: samples.into_iter().map(|s| TrajectorySample { t: s.t, x: [s.y[0], s.y[1]], p: [s.y[2], s.y[3]] }).collect(),
        stats: TrajectoryStats {
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            max_scaled_error: stats.max_error,
            max_interband: interband.as_f64(),
        },
    })
}

/// Valley-independent scalar inputs of a single band, for the one-band reductions.
pub fn single_band<T: Real>(params: &ModelParams<T>, basis: BasisKind, valley: Valley, spin: crate::model::Spin, p: [T; 2]) -> Result<(T, [T; 2])> {
    let model = berry::analytic_model_for(basis);
    let k = berry::positive_spin_position(params, basis, valley, spin)?;
    let inputs = model_inputs(params, model, basis, p)?;
    Ok((inputs.curvature[(k, k)].re, [inputs.h0_gradient[0][(k, k)].re, inputs.h0_gradient[1][(k, k)].re]))
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::model::Spin;
    use crate::linalg::real;
    use proptest::prelude::*;

    fn scalar(x: f64) -> CMat<f64> {
        CMat::from_element(1, 1, real(x))
    }

    fn scalar_data(prm: &ModelParams<f64>, g: f64, grad: [f64; 2]) -> SymplecticData<f64> {
        let inputs = BandInputs {
            h0: scalar(0.7),
            h0_gradient: grad.map(scalar),
            connection: [scalar(0.0), scalar(0.0)],
            curvature: scalar(g),
            position: PositionSpaceFields::zero(1),
        };
        form_components(&inputs, prm).unwrap()
    }

    #[test]
    fn free_limit() {
        let prm = ModelParams::new(0.5, 0.0).unwrap().with_e_field([0.1, 0.0]);
        let data = scalar_data(&prm, 0.0, [0.3, -0.2]);
        let sol = weighted_velocities(&data);
        assert_eq!(sol.measure[(0, 0)].re, 1.0);
        assert_eq!(sol.weighted_force[0][(0, 0)].re, 0.1);
        assert_eq!(sol.weighted_force[1][(0, 0)].re, 0.0);
        assert_eq!(sol.weighted_velocity[0][(0, 0)].re, 0.3);
    }

    #[test]
    fn magnetic_field_enters_f() {
        let prm = ModelParams::new(0.5, 0.0).unwrap().with_b_field(0.2);
        let data = scalar_data(&prm, -0.7071, [0.0, 0.0]);
        assert_eq!(data.f_xy[(0, 0)].re, -0.2);
        assert!((pfaffian_measure(&data)[(0, 0)].re - 0.85858).abs() < 1e-12);
    }

    #[test]
    fn anomalous_velocity_example() {
        let prm = ModelParams::new(0.5, 0.0).unwrap().with_e_field([0.1, 0.0]);
        let k = anomalous_specialize(&prm, -0.7071, [0.0, 0.0]);
        assert_eq!(k.sqrt_w, 1.0);
        assert!((k.xdot[1] - 0.07071).abs() < 1e-15);
        assert_eq!(k.xdot[0], 0.0);
    }

    #[test]
    fn fw_inputs_reproduce_closed_form_motion() {
        let prm = ModelParams::new(0.5, 0.0).unwrap().with_e_field([0.1, -0.05]);
        let p = [0.3, 0.4];
        let data = form_components(&model_inputs(&prm, ModelKind::KmSo, BasisKind::Fw, p).unwrap(), &prm).unwrap();
        assert_eq!(linalg::max_abs(&(pfaffian_measure(&data) - linalg::identity::<f64>(2))), 0.0);
        assert_eq!(linalg::max_abs(&(&data.e_drive[0] - linalg::scale(&linalg::identity::<f64>(2), 0.1))), 0.0);
        let sol = weighted_velocities(&data);
        let e = 0.5f64.sqrt();
        let g = berry::fw_curvature_scalar(&prm, 0.5);
        // spin up: ẋ = p/E + e ε^{ij} 𝓔_j G
        assert!((sol.weighted_velocity[0][(0, 0)].re - (0.3 / e + (-0.05) * g)).abs() < 1e-15);
        assert!((sol.weighted_velocity[1][(0, 0)].re - (0.4 / e - 0.1 * g)).abs() < 1e-15);
        // spin down carries the opposite anomalous term
        assert!((sol.weighted_velocity[1][(1, 1)].re - (0.4 / e + 0.1 * g)).abs() < 1e-15);
    }

    #[test]
    fn psi_inputs_are_hermitian() {
        let prm = ModelParams::new(0.5, 0.1).unwrap().with_e_field([0.1, 0.2]).with_b_field(0.3);
        let data = form_components(&model_inputs(&prm, ModelKind::KmRashba, BasisKind::Psi, [0.3, -0.4]).unwrap(), &prm).unwrap();
        let sol = weighted_velocities(&data);
        for m in sol.weighted_velocity.iter().chain(&sol.weighted_force).chain([&sol.measure]) {
            assert!(linalg::hermiticity_defect(m) < 1e-12);
        }
    }

    #[test]
    fn field_strength_of_closed_form_connection() {
        let prm = ModelParams::new(0.5, 0.1).unwrap();
        let p = [0.3, 0.4];
        let h = 1e-5;
        let conn = |q: [f64; 2]| berry::analytic_connection(ModelKind::KmRashba, BasisKind::Phi, &prm, q).unwrap();
        let deriv = |a: usize| {
            let (dx, dy) = if a == 0 { (h, 0.0) } else { (0.0, h) };
            let (up, dn) = (conn([p[0] + dx, p[1] + dy]), conn([p[0] - dx, p[1] - dy]));
            [0, 1].map(|b| linalg::scale(&(&up[b] - &dn[b]), 0.5 / h))
        };
        let g = field_strength(&conn(p), &[deriv(0), deriv(1)], 1.0);
        let exact = berry::analytic_curvature(ModelKind::KmRashba, BasisKind::Phi, &prm, p).unwrap();
        assert!(linalg::max_abs(&(g - exact)) < 1e-7);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let prm = ModelParams::new(0.5, 0.0).unwrap();
        let mut inputs = model_inputs(&prm, ModelKind::KmSo, BasisKind::Fw, [0.3, 0.4]).unwrap();
        inputs.curvature = linalg::zeros(3);
        assert!(matches!(form_components(&inputs, &prm), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn force_free_trajectory_keeps_momentum() {
        let prm = ModelParams::new(0.5, 0.1).unwrap();
        let band = SectorLabel::new(Valley::K, Spin::Up);
        let tr = integrate_trajectory(&prm, ModelKind::KmRashba, BasisKind::Psi, band, [0.0, 0.0], [0.3, 0.4], (0.0, 5.0), 1e-10).unwrap();
        let last = tr.samples.last().unwrap();
        assert!((last.p[0] - 0.3).abs() < 1e-10 && (last.p[1] - 0.4).abs() < 1e-10);
        assert!(last.x[0] > 0.0);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn phi_basis_trajectory_is_refused() {
        let prm = ModelParams::new(0.5, 0.1).unwrap();
        let band = SectorLabel::new(Valley::K, Spin::Up);
        let r = integrate_trajectory(&prm, ModelKind::KmRashba, BasisKind::Phi, band, [0.0; 2], [0.3, 0.4], (0.0, 1.0), 1e-8);
        assert!(matches!(r, Err(Error::BasisNotSpinDiagonal { .. })));
    }

    #[test]
    fn singular_measure_is_reported() {
        // G(0) = −1/(2Δ²) = −2, so 1 + eBG vanishes at B = 1/2
        let prm = ModelParams::new(0.5, 0.0).unwrap().with_b_field(0.5);
        let r = band_rates(&prm, ModelKind::KmSo, BasisKind::Fw, 0, [0.0, 0.0]);
        assert!(matches!(r, Err(Error::MeasureSingular { .. })));
    }

    proptest! {
        #[test]
        fn matrix_equations_reduce_to_scalar_form(
            b in -2.0..2.0f64, g in -2.0..2.0f64, ex in -1.0..1.0f64, ey in -1.0..1.0f64,
            gx in -3.0..3.0f64, gy in -3.0..3.0f64, e in 0.1..2.0f64,
        ) {
            let mut prm = ModelParams::new(0.5, 0.0).unwrap().with_b_field(b).with_e_field([ex, ey]);
            prm.charge = e;
            let sol = weighted_velocities(&scalar_data(&prm, g, [gx, gy]));
            let k = anomalous_specialize(&prm, g, [gx, gy]);
            prop_assert!((sol.measure[(0, 0)].re - k.sqrt_w).abs() <= 1e-14);
            for i in 0..2 {
                prop_assert!((sol.weighted_velocity[i][(0, 0)].re - k.xdot[i]).abs() <= 1e-14);
                prop_assert!((sol.weighted_force[i][(0, 0)].re - k.pdot[i]).abs() <= 1e-14);
            }
        }

        #[test]
        fn outputs_stay_hermitian(px in -2.0..2.0f64, py in 0.1..2.0f64, b in -1.0..1.0f64, ex in -1.0..1.0f64) {
            let prm = ModelParams::new(0.5, 0.1).unwrap().with_b_field(b).with_e_field([ex, 0.3]);
            let data = form_components(&model_inputs(&prm, ModelKind::KmRashba, BasisKind::Psi, [px, py]).unwrap(), &prm).unwrap();
            let sol = weighted_velocities(&data);
            for m in sol.weighted_velocity.iter().chain(&sol.weighted_force).chain([&sol.measure]) {
                prop_assert!(linalg::hermiticity_defect(m) < 1e-10);
            }
        }
    }
}
