//! Matrix-valued Berry connections and curvatures, numeric and closed-form.
//!
//! Conventions: `A^i = iħ u† ∂u/∂p_i`, `G^{xy} = ∂_x A^y − ∂_y A^x − (i/ħ)[A^x, A^y]` and
//! `ε^{xy} = +1`. Closed forms refer to the positive-energy 2×2 block of one valley.

use crate::basis::{self, BasisKind};
use crate::error::{Error, Result};
use nalgebra::ComplexField;

use crate::linalg::{self, imag, real, CMat};
use crate::model::{self, ModelKind, ModelParams, Radicals, Spin, SpinorSet, Valley, P_MIN};
use crate::scalar::Real;

/// Limit on the anti-Hermitian part of a finite-difference connection.
pub const CONNECTION_RESIDUAL_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct BerryData<T: Real> {
    pub momentum: [T; 2],
    pub connection: [CMat<T>; 2],
    pub curvature: CMat<T>,
    pub basis: BasisKind,
    pub valley: Valley,
}

/// A momentum-indexed family of orthonormal states, returned as the columns of a frame.
///
/// Implementations must be pure functions of `p`.
pub trait StateProvider<T: Real>: Sync {
    fn frame(&self, p: [T; 2]) -> Result<CMat<T>>;

    /// `true` when the frame is a smooth section (closed forms); `false` for eigensolver
    /// output whose column phases are arbitrary and need aligning before differencing.
    fn smooth_gauge(&self) -> bool {
        true
    }

    fn hbar(&self) -> T {
        T::one()
    }
}

impl<T: Real, F> StateProvider<T> for F
where
    F: Fn([T; 2]) -> Result<CMat<T>> + Sync,
{
    fn frame(&self, p: [T; 2]) -> Result<CMat<T>> {
        self(p)
    }
}

/// Spinor set of a valley block in the requested basis.
pub fn spinor_set<T: Real>(params: &ModelParams<T>, basis: BasisKind, valley: Valley, p: [T; 2]) -> Result<SpinorSet<T>> {
    match basis {
        BasisKind::Phi => model::analytic_eigenstates(params, p, valley),
        BasisKind::Psi => basis::spin_eigenbasis(&model::analytic_eigenstates(params, p, valley)?),
        BasisKind::Fw => model::fw_eigenstates(params, p, valley),
    }
}

/// Closed-form states of the model, restricted to a subset of positions in the spinor set.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFrame<T: Real> {
    pub params: ModelParams<T>,
    pub basis: BasisKind,
    pub valley: Valley,
    pub positions: Vec<usize>,
}

impl<T: Real> ModelFrame<T> {
    pub fn new(params: ModelParams<T>, basis: BasisKind, valley: Valley, positions: Vec<usize>) -> Result<Self> {
        if positions.is_empty() || positions.iter().any(|&k| k > 3) {
            return Err(Error::InvalidParameter { name: "positions", reason: format!("{positions:?} must be a non-empty subset of 0..4") });
        }
        Ok(Self { params, basis, valley, positions })
    }

    /// The positive-energy pair.
    pub fn positive(params: ModelParams<T>, basis: BasisKind, valley: Valley) -> Result<Self> {
        Self::new(params, basis, valley, vec![0, 1])
    }

    /// The positive-energy state of definite spin in a spin-adapted basis.
    pub fn spin_sector(params: ModelParams<T>, basis: BasisKind, valley: Valley, spin: Spin) -> Result<Self> {
        let k = positive_spin_position(&params, basis, valley, spin)?;
        Self::new(params, basis, valley, vec![k])
    }
}

/// Position of the positive-energy state with the given spin (0 or 1), read off the measured
/// labels at a reference momentum.
pub fn positive_spin_position<T: Real>(params: &ModelParams<T>, basis: BasisKind, valley: Valley, spin: Spin) -> Result<usize> {
    if !basis.spin_diagonal() {
        return Err(Error::BasisNotSpinDiagonal { basis, trace_sz_g: 0.0 });
    }
    let scale = params.delta_so.max(params.lambda_r).max(T::of(0.1)) / params.v_f;
    let set = spinor_set(params, basis, valley, [scale, T::zero()])?;
    (0..2)
        .find(|&k| set.spinors[k].spin == Some(spin))
        .ok_or(Error::NotSpinDiagonalizable { index: valley.index_offset() + 1, residual: f64::NAN, polarization: f64::NAN })
}

impl<T: Real> StateProvider<T> for ModelFrame<T> {
    fn frame(&self, p: [T; 2]) -> Result<CMat<T>> {
        Ok(spinor_set(&self.params, self.basis, self.valley, p)?.frame(&self.positions))
    }

    fn hbar(&self) -> T {
        self.params.hbar
    }
}

/// Eigenvectors from a dense eigensolve, in descending energy order. Their phases are whatever
/// the solver returns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFrame<T: Real> {
    pub params: ModelParams<T>,
    pub valley: Valley,
    pub positions: Vec<usize>,
}

impl<T: Real> StateProvider<T> for EigenFrame<T> {
    fn frame(&self, p: [T; 2]) -> Result<CMat<T>> {
        let h = model::build_hamiltonian(&self.params, p, self.valley.into());
        let (_, vectors) = linalg::eigh(&h.matrix);
        let n = vectors.ncols();
        let mut out = CMat::zeros(n, self.positions.len());
        for (col, &k) in self.positions.iter().enumerate() {
            out.set_column(col, &vectors.column(n - 1 - k));
        }
        Ok(out)
    }

    fn smooth_gauge(&self) -> bool {
        false
    }

    fn hbar(&self) -> T {
        self.params.hbar
    }
}

/// Multiplies column `k` of the inner frame by `exp(i θ(p, k))`.
pub struct GaugeTwist<P, F> {
    pub inner: P,
    pub phase: F,
}

impl<T: Real, P: StateProvider<T>, F: Fn([T; 2], usize) -> T + Sync> StateProvider<T> for GaugeTwist<P, F> {
    fn frame(&self, p: [T; 2]) -> Result<CMat<T>> {
        let mut u = self.inner.frame(p)?;
        for k in 0..u.ncols() {
            let theta = (self.phase)(p, k);
            let z = crate::linalg::cplx(theta.cos(), theta.sin());
            u.column_mut(k).iter_mut().for_each(|c| *c *= z);
        }
        Ok(u)
    }

    fn smooth_gauge(&self) -> bool {
        self.inner.smooth_gauge()
    }

    fn hbar(&self) -> T {
        self.inner.hbar()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionEstimate<T: Real> {
    /// Hermitian part of the central-difference connection.
    pub connection: [CMat<T>; 2],
    /// `max |A − A†| / 2` before symmetrization.
    pub anti_hermitian_residual: T,
}

fn shifted<T: Real>(p: [T; 2], dx: T, dy: T) -> [T; 2] {
    [p[0] + dx, p[1] + dy]
}

/// Multiplies each column of `u` by the unit phase that makes its overlap with the matching
/// column of `reference` real and positive.
fn align_phases<T: Real>(u: &mut CMat<T>, reference: &CMat<T>) {
    for k in 0..u.ncols() {
        let overlap = reference.column(k).dotc(&u.column(k));
        let r = overlap.modulus();
        if r > T::zero() {
            let phase = overlap.conjugate() / real(r);
            u.column_mut(k).iter_mut().for_each(|c| *c *= phase);
        }
    }
}

/// Central-difference connection `A^i = iħ u(p)† (u(p + h e_i) − u(p − h e_i)) / 2h`.
pub fn numeric_connection<T: Real, P: StateProvider<T> + ?Sized>(states: &P, p: [T; 2], step: T) -> Result<ConnectionEstimate<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter { name: "step", reason: format!("must be positive, got {step}") });
    }
    let u0 = states.frame(p)?;
    let hbar = states.hbar();
    let mut residual = T::zero();
    let mut out = Vec::with_capacity(2);
    for axis in 0..2 {
        let (dx, dy) = if axis == 0 { (step, T::zero()) } else { (T::zero(), step) };
        let mut up = states.frame(shifted(p, dx, dy))?;
        let mut down = states.frame(shifted(p, -dx, -dy))?;
        if !states.smooth_gauge() {
            align_phases(&mut up, &u0);
            align_phases(&mut down, &u0);
        }
        let d = u0.adjoint() * (up - down) * real(T::one() / (T::of(2.0) * step));
        let a = d * imag(hbar);
        residual = residual.max(linalg::hermiticity_defect(&a) * T::of(0.5));
        out.push(linalg::hermitian_part(&a));
    }
    if !(residual <= T::of(CONNECTION_RESIDUAL_LIMIT)) {
        return Err(Error::StepTooLarge { diagnostic: residual.as_f64() });
    }
    let ay = out.pop().expect("two axes");
    let ax = out.pop().expect("two axes");
    Ok(ConnectionEstimate { connection: [ax, ay], anti_hermitian_residual: residual })
}

fn link<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    linalg::polar_unitary(&(a.adjoint() * b)).ok_or(Error::StepTooLarge { diagnostic: f64::INFINITY })
}

/// Curvature `G^{xy}` from the Wilson loop of a square plaquette of side `step` centred on `p`.
///
/// The loop is a lasso based at `p`: out to one corner, counter-clockwise round the square and
/// back. Links are the unitary polar factors of the overlaps. With `W` the ordered product,
/// `G = (iħ/area) log W`, expressed in the gauge of the frame at `p`. This is gauge covariant
/// for degenerate multiplets as well and second-order accurate in `step`.
pub fn numeric_curvature<T: Real, P: StateProvider<T> + ?Sized>(states: &P, p: [T; 2], step: T) -> Result<CMat<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter { name: "step", reason: format!("must be positive, got {step}") });
    }
    let h = step * T::of(0.5);
    let u0 = states.frame(p)?;
    let corners = [shifted(p, -h, -h), shifted(p, h, -h), shifted(p, h, h), shifted(p, -h, h)];
    let frames = corners.iter().map(|&c| states.frame(c)).collect::<Result<Vec<_>>>()?;
    let mut w = link(&u0, &frames[0])?;
    for k in 0..4 {
        w = w * link(&frames[k], &frames[(k + 1) % 4])?;
    }
    w = w * link(&frames[0], &u0)?;
    let n = w.nrows();
    let distance = linalg::max_abs(&(&w - linalg::identity::<T>(n)));
    let log = linalg::log_near_identity(&w).ok_or(Error::StepTooLarge { diagnostic: distance.as_f64() })?;
    let area = step * step;
    Ok(linalg::hermitian_part(&(log * imag(states.hbar() / area))))
}

/// Numeric connection and curvature bundled as [`BerryData`].
pub fn numeric_berry<T: Real, P: StateProvider<T> + ?Sized>(
    states: &P,
    p: [T; 2],
    step: T,
    basis: BasisKind,
    valley: Valley,
) -> Result<BerryData<T>> {
    let connection = numeric_connection(states, p, step)?.connection;
    let curvature = numeric_curvature(states, p, step)?;
    Ok(BerryData { momentum: p, connection, curvature, basis, valley })
}

/// `N₁N₂ = ¼ √((1 + (Δ−λ)/R₁)(1 + (Δ+λ)/R₂))`, the product of the positive-band normalizations.
pub fn rashba_overlap<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    let r = Radicals::new(params, p_abs);
    let f1 = Radicals::r_plus(r.r1, r.a, r.x) / r.r1;
    let f2 = Radicals::r_plus(r.r2, r.b, r.x) / r.r2;
    (f1 * f2).sqrt() * T::of(0.25)
}

/// Bracket `A/(R₁²(R₁+A)) + B/(R₂²(R₂+B))` shared by the derivative and the curvature.
fn overlap_bracket<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    let r = Radicals::new(params, p_abs);
    let t1 = r.a / (r.r1 * r.r1 * Radicals::r_plus(r.r1, r.a, r.x));
    let t2 = r.b / (r.r2 * r.r2 * Radicals::r_plus(r.r2, r.b, r.x));
    t1 + t2
}

/// `d(N₁N₂)/d|p|`.
pub fn rashba_overlap_derivative<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    let v2 = params.v_f * params.v_f;
    -rashba_overlap(params, p_abs) * T::of(0.5) * v2 * p_abs * overlap_bracket(params, p_abs)
}

/// `g = −(2ħ/|p|) d(N₁N₂)/d|p|`, regular at `p = 0`.
pub fn rashba_curvature_scalar<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    params.hbar * params.v_f * params.v_f * rashba_overlap(params, p_abs) * overlap_bracket(params, p_abs)
}

fn fw_energy<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    (params.v_f * p_abs).hypot(params.delta_so)
}

/// `ħ v_F² / (2E(E + Δ))`, the coefficient of `ε^{ij} p_j s_z` in the FW connection.
pub fn fw_connection_scalar<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    let e = fw_energy(params, p_abs);
    params.hbar * params.v_f * params.v_f / (T::of(2.0) * e * (e + params.delta_so))
}

/// `−ħ v_F² Δ / (2E³)`, the spin-up FW curvature.
pub fn fw_curvature_scalar<T: Real>(params: &ModelParams<T>, p_abs: T) -> T {
    let e = fw_energy(params, p_abs);
    -params.hbar * params.v_f * params.v_f * params.delta_so / (T::of(2.0) * e * e * e)
}

fn check_combination<T: Real>(model: ModelKind, basis: BasisKind, params: &ModelParams<T>, p: [T; 2]) -> Result<T> {
    let p_abs = model::momentum_norm(p);
    match (model, basis) {
        (ModelKind::KmSo, BasisKind::Fw) => {
            params.require_zero_rashba()?;
            Ok(p_abs)
        }
        (ModelKind::KmRashba, BasisKind::Phi | BasisKind::Psi) => {
            if !(p_abs > T::of(P_MIN)) {
                return Err(Error::MomentumAtOrigin { magnitude: p_abs.as_f64() });
            }
            Ok(p_abs)
        }
        _ => Err(Error::UnsupportedCombination { model, basis }),
    }
}

/// Closed-form connection of the positive-energy 2×2 block.
///
/// FW (ordering ↑, ↓): `A^i = ħv_F²/(2E(E+Δ)) ε^{ij} p_j s_z`.
/// Φ: `A^i = ħ ε^{ij} (p_j/p²) [[−1, 2N₁N₂], [2N₁N₂, −1]]`.
/// Ψ: `A^i = ħ ε^{ij} (p_j/p²) (−1 + 2N₁N₂ s_z)`.
pub fn analytic_connection<T: Real>(model: ModelKind, basis: BasisKind, params: &ModelParams<T>, p: [T; 2]) -> Result<[CMat<T>; 2]> {
    let p_abs = check_combination(model, basis, params, p)?;
    let (shape, coeff) = match basis {
        BasisKind::Fw => (linalg::diag_real(&[T::one(), -T::one()]), fw_connection_scalar(params, p_abs)),
        BasisKind::Phi | BasisKind::Psi => {
            let two_n = T::of(2.0) * rashba_overlap(params, p_abs);
            let m = if basis == BasisKind::Phi {
                CMat::from_row_slice(2, 2, &[real(-T::one()), real(two_n), real(two_n), real(-T::one())])
            } else {
                linalg::diag_real(&[two_n - T::one(), -two_n - T::one()])
            };
            (m, params.hbar / (p_abs * p_abs))
        }
    };
    // ε^{xy} = +1: A^x ∝ p_y, A^y ∝ −p_x
    Ok([linalg::scale(&shape, coeff * p[1]), linalg::scale(&shape, -coeff * p[0])])
}

/// Closed-form curvature `G^{xy}` of the positive-energy 2×2 block.
///
/// FW: `−ħv_F²Δ/(2E³) s_z`. Φ: `g s_x`. Ψ: `g s_z = R̃ (g s_x) R̃`, with
/// `g = −(2ħ/p) ∂_p(N₁N₂)`. The pure vortex `−ħ ε^{ij} p_j/p²` carries no curvature away
/// from the origin.
pub fn analytic_curvature<T: Real>(model: ModelKind, basis: BasisKind, params: &ModelParams<T>, p: [T; 2]) -> Result<CMat<T>> {
    let p_abs = check_combination(model, basis, params, p)?;
    Ok(match basis {
        BasisKind::Fw => {
            let g = fw_curvature_scalar(params, p_abs);
            linalg::diag_real(&[g, -g])
        }
        BasisKind::Phi => {
            let g = real(rashba_curvature_scalar(params, p_abs));
            let z = real(T::zero());
            CMat::from_row_slice(2, 2, &[z, g, g, z])
        }
        BasisKind::Psi => {
            let g = rashba_curvature_scalar(params, p_abs);
            linalg::diag_real(&[g, -g])
        }
    })
}

pub fn analytic_berry<T: Real>(model: ModelKind, basis: BasisKind, params: &ModelParams<T>, p: [T; 2], valley: Valley) -> Result<BerryData<T>> {
    Ok(BerryData {
        momentum: p,
        connection: analytic_connection(model, basis, params, p)?,
        curvature: analytic_curvature(model, basis, params, p)?,
        basis,
        valley,
    })
}

/// Model tag whose closed forms apply in `basis`.
pub fn analytic_model_for(basis: BasisKind) -> ModelKind {
    match basis {
        BasisKind::Fw => ModelKind::KmSo,
        BasisKind::Phi | BasisKind::Psi => ModelKind::KmRashba,
    }
}

/// Curvature of the positive-energy state of given spin and valley, from the closed forms.
pub fn sector_curvature<T: Real>(params: &ModelParams<T>, basis: BasisKind, valley: Valley, spin: Spin, p: [T; 2]) -> Result<T> {
    let k = positive_spin_position(params, basis, valley, spin)?;
    Ok(analytic_curvature(analytic_model_for(basis), basis, params, p)?[(k, k)].re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn so() -> ModelParams<f64> {
        ModelParams::new(0.5, 0.0).unwrap()
    }

    fn rashba() -> ModelParams<f64> {
        ModelParams::new(0.5, 0.1).unwrap()
    }

    #[test]
    fn fw_connection_closed_form_values() {
        let a = analytic_connection(ModelKind::KmSo, BasisKind::Fw, &so(), [0.3, 0.4]).unwrap();
        assert_relative_eq!(a[0][(0, 0)].re, 0.234314575050762, max_relative = 1e-12);
        assert_relative_eq!(a[1][(0, 0)].re, -0.175735931288071, max_relative = 1e-12);
        assert_relative_eq!(a[0][(1, 1)].re, -0.234314575050762, max_relative = 1e-12);
    }

    #[test]
    fn fw_numeric_connection_matches() {
        let frame = ModelFrame::positive(so(), BasisKind::Fw, Valley::K).unwrap();
        let num = numeric_connection(&frame, [0.3, 0.4], 1e-4).unwrap();
        let exact = analytic_connection(ModelKind::KmSo, BasisKind::Fw, &so(), [0.3, 0.4]).unwrap();
        for i in 0..2 {
            assert!(linalg::max_abs(&(&num.connection[i] - &exact[i])) < 1e-6);
        }
        assert!(num.anti_hermitian_residual < 1e-8);
    }

    #[test]
    fn constant_family_has_no_connection() {
        let constant = |_: [f64; 2]| Ok(linalg::identity::<f64>(3));
        let a = numeric_connection(&constant, [0.2, 0.1], 1e-3).unwrap();
        assert_eq!(linalg::max_abs(&a.connection[0]), 0.0);
        assert_eq!(linalg::max_abs(&a.connection[1]), 0.0);
    }

    #[test]
    fn gauge_twist_shifts_connection_only() {
        let p = [0.3, 0.4];
        let base = ModelFrame::spin_sector(rashba(), BasisKind::Psi, Valley::K, Spin::Up).unwrap();
        let twisted = GaugeTwist { inner: base.clone(), phase: |q: [f64; 2], _| q[0] * q[1] };
        let a0 = numeric_connection(&base, p, 1e-4).unwrap().connection;
        let a1 = numeric_connection(&twisted, p, 1e-4).unwrap().connection;
        // A → A − ħ ∂θ, ∂θ = (p_y, p_x)
        assert!((a1[0][(0, 0)].re - a0[0][(0, 0)].re + p[1]).abs() < 1e-7);
        assert!((a1[1][(0, 0)].re - a0[1][(0, 0)].re + p[0]).abs() < 1e-7);
        let g0 = numeric_curvature(&base, p, 1e-3).unwrap();
        let g1 = numeric_curvature(&twisted, p, 1e-3).unwrap();
        assert!(linalg::max_abs(&(g0 - g1)) < 1e-8);
    }

    #[test]
    fn fw_spin_up_curvature() {
        let frame = ModelFrame::spin_sector(so(), BasisKind::Fw, Valley::K, Spin::Up).unwrap();
        let g = numeric_curvature(&frame, [0.3, 0.4], 1e-3).unwrap()[(0, 0)].re;
        assert_relative_eq!(g, -0.5f64.sqrt(), max_relative = 1e-4);
        assert_relative_eq!(fw_curvature_scalar(&so(), 0.5), -0.5f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn phi_curvature_is_off_diagonal() {
        for valley in Valley::ALL {
            let frame = ModelFrame::positive(rashba(), BasisKind::Phi, valley).unwrap();
            let g = numeric_curvature(&frame, [0.3, 0.4], 1e-3).unwrap();
            assert!(g[(0, 0)].norm() < 1e-8 && g[(1, 1)].norm() < 1e-8, "{g}");
            let exact = analytic_curvature(ModelKind::KmRashba, BasisKind::Phi, &rashba(), [0.3, 0.4]).unwrap();
            assert!(linalg::max_abs(&(g - exact)) < 1e-6);
        }
    }

    #[test]
    fn rashba_curvature_value() {
        assert_relative_eq!(rashba_curvature_scalar(&rashba(), 0.5), 0.69918, max_relative = 1e-4);
    }

    #[test]
    fn overlap_limits() {
        assert_relative_eq!(rashba_overlap(&rashba(), 0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(rashba_overlap(&rashba(), 1e9), 0.25, max_relative = 1e-9);
    }

    #[test]
    fn overlap_derivative_matches_stencil() {
        let prm = rashba();
        for p in [0.05, 0.3, 1.0, 2.7] {
            let h = 1e-3;
            let f = |x: f64| rashba_overlap(&prm, x);
            let stencil = (f(p - 2.0 * h) - 8.0 * f(p - h) + 8.0 * f(p + h) - f(p + 2.0 * h)) / (12.0 * h);
            assert!((rashba_overlap_derivative(&prm, p) - stencil).abs() < 1e-10);
        }
    }

    #[test]
    fn psi_curvature_is_rotated_phi_curvature() {
        let prm = rashba();
        let r = basis::rotation_block::<f64>();
        let g_phi = analytic_curvature(ModelKind::KmRashba, BasisKind::Phi, &prm, [0.3, 0.4]).unwrap();
        let g_psi = analytic_curvature(ModelKind::KmRashba, BasisKind::Psi, &prm, [0.3, 0.4]).unwrap();
        assert!(linalg::max_abs(&(basis::transform_observable(&r, &g_phi).unwrap() - &g_psi)) < 1e-12);
        let numeric_psi = numeric_curvature(&ModelFrame::positive(prm.clone(), BasisKind::Psi, Valley::K).unwrap(), [0.3, 0.4], 1e-3).unwrap();
        let numeric_phi = numeric_curvature(&ModelFrame::positive(prm, BasisKind::Phi, Valley::K).unwrap(), [0.3, 0.4], 1e-3).unwrap();
        assert!(linalg::max_abs(&(numeric_psi - &r * numeric_phi * &r)) < 1e-8);
    }

    #[test]
    fn analytic_connections_match_numeric_in_both_valleys() {
        let p = [-0.6, 0.25];
        for (prm, basis) in [(so(), BasisKind::Fw), (rashba(), BasisKind::Phi), (rashba(), BasisKind::Psi)] {
            let model = analytic_model_for(basis);
            let exact = analytic_connection(model, basis, &prm, p).unwrap();
            for valley in Valley::ALL {
                let frame = ModelFrame::positive(prm.clone(), basis, valley).unwrap();
                let num = numeric_connection(&frame, p, 1e-4).unwrap().connection;
                for i in 0..2 {
                    assert!(linalg::max_abs(&(&num[i] - &exact[i])) < 1e-6, "{basis:?} {valley:?} {i}");
                }
            }
        }
    }

    #[test]
    fn second_order_convergence_of_plaquette() {
        let frame = ModelFrame::spin_sector(so(), BasisKind::Fw, Valley::K, Spin::Up).unwrap();
        let g = |h: f64| numeric_curvature(&frame, [0.3, 0.4], h).unwrap()[(0, 0)].re;
        let d1 = (g(4e-2) - g(2e-2)).abs();
        let d2 = (g(2e-2) - g(1e-2)).abs();
        let ratio = d1 / d2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn eigensolver_frames_give_the_same_curvature() {
        let eig = EigenFrame { params: rashba(), valley: Valley::KPrime, positions: vec![0, 1] };
        let g = numeric_curvature(&eig, [0.3, 0.4], 1e-3).unwrap();
        let exact = analytic_curvature(ModelKind::KmRashba, BasisKind::Phi, &rashba(), [0.3, 0.4]).unwrap();
        let (ev_num, ev_exact) = (linalg::eigvalsh(&g), linalg::eigvalsh(&exact));
        for (a, b) in ev_num.iter().zip(&ev_exact) {
            assert!((a - b).abs() < 1e-6);
        }
        // degenerate FW multiplet from the solver: only the spectrum is gauge invariant
        let eig = EigenFrame { params: so(), valley: Valley::K, positions: vec![0, 1] };
        let ev = linalg::eigvalsh(&numeric_curvature(&eig, [0.3, 0.4], 1e-3).unwrap());
        assert!((ev[0] + 0.5f64.sqrt()).abs() < 1e-6 && (ev[1] - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn unsupported_combinations() {
        assert!(matches!(
            analytic_curvature(ModelKind::KmSo, BasisKind::Psi, &so(), [0.3, 0.4]),
            Err(Error::UnsupportedCombination { .. })
        ));
        assert!(matches!(
            analytic_curvature(ModelKind::KmSo, BasisKind::Fw, &rashba(), [0.3, 0.4]),
            Err(Error::RequiresZeroRashba { .. })
        ));
        assert!(matches!(
            analytic_connection(ModelKind::KmRashba, BasisKind::Phi, &rashba(), [0.0, 0.0]),
            Err(Error::MomentumAtOrigin { .. })
        ));
    }

    #[test]
    fn psi_connection_is_diagonal_without_rashba() {
        let a = analytic_connection(ModelKind::KmRashba, BasisKind::Psi, &ModelParams::new(0.5, 1e-9).unwrap(), [0.3, 0.4]).unwrap();
        assert_eq!(linalg::off_diagonal_max(&a[0]), 0.0);
    }

    #[test]
    fn sector_curvature_spin_up_agrees_between_bases_at_zero_rashba() {
        let prm = so();
        let fw = sector_curvature(&prm, BasisKind::Fw, Valley::K, Spin::Up, [0.3, 0.4]).unwrap();
        let psi = sector_curvature(&prm, BasisKind::Psi, Valley::K, Spin::Up, [0.3, 0.4]).unwrap();
        assert_relative_eq!(fw, psi, max_relative = 1e-12);
    }
}
