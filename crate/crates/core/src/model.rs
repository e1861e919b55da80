//! Continuum Kane–Mele Hamiltonian near the Dirac points.
//!
//! Index ordering is fixed once for the whole crate: valley `τ` is the outermost index,
//! then sublattice `σ`, then spin `s`, so a full-space index is `4·τ + 2·σ + s` with
//! `τ = 0 ↔ K`, `σ = 0 ↔ A` (σ_z = +1) and `s = 0 ↔ ↑` (s_z = +1). Within a valley block
//! the ordering is `σ ⊗ s`.
//!
//! ```text
//! H = v_F σx τz px + v_F σy py + Δ_SO σz τz sz + λ_R (σx τz sy − σy sx)
//! ```

use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, imag, kron, pauli, real, CMat, CVec, Pauli};
use crate::scalar::Real;

/// Radius of the excluded disc around the gauge-singular point `p = 0`.
pub const P_MIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Valley {
    K,
    KPrime,
}

impl Valley {
    pub const ALL: [Valley; 2] = [Valley::K, Valley::KPrime];

    /// Eigenvalue of `τ_z` on this valley.
    pub fn tau<T: Real>(self) -> T {
        match self {
            Valley::K => T::one(),
            Valley::KPrime => -T::one(),
        }
    }

    /// First Appendix-style state index in this valley (Φ1..Φ4 for K, Φ5..Φ8 for K′).
    pub fn index_offset(self) -> usize {
        match self {
            Valley::K => 0,
            Valley::KPrime => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const ALL: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn sign<T: Real>(self) -> T {
        match self {
            Spin::Up => T::one(),
            Spin::Down => -T::one(),
        }
    }

    pub fn from_sign<T: Real>(x: T) -> Spin {
        if x >= T::zero() {
            Spin::Up
        } else {
            Spin::Down
        }
    }
}

/// Which Hamiltonian a computation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Intrinsic spin–orbit coupling only (`λ_R = 0`, spin conserved).
    KmSo,
    /// Intrinsic plus Rashba coupling.
    KmRashba,
}

/// Selects a valley block or the full 8×8 Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Valley(Valley),
    Full,
}

impl From<Valley> for Block {
    fn from(v: Valley) -> Self {
        Block::Valley(v)
    }
}

/// Couplings and external fields. Natural units by default: `ħ = e = v_F = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub v_f: T,
    pub delta_so: T,
    pub lambda_r: T,
    pub hbar: T,
    pub charge: T,
    pub e_field: [T; 2],
    pub b_field: T,
    pub fermi_energy: Option<T>,
}

/// Which of the two regime conditions quoted for the Rashba case hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `Δ_SO > 2 λ_R`: both positive bands above zero, both negative below.
    pub strict: bool,
    /// `Δ_SO > λ_R`.
    pub weak: bool,
}

impl<T: Real> ModelParams<T> {
    /// Kane–Mele couplings with unit `v_F`, `ħ`, `e` and no external fields.
    pub fn new(delta_so: T, lambda_r: T) -> Result<Self> {
        let params = Self {
            v_f: T::one(),
            delta_so,
            lambda_r,
            hbar: T::one(),
            charge: T::one(),
            e_field: [T::zero(); 2],
            b_field: T::zero(),
            fermi_energy: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_v_f(mut self, v_f: T) -> Self {
        self.v_f = v_f;
        self
    }

    pub fn with_e_field(mut self, e_field: [T; 2]) -> Self {
        self.e_field = e_field;
        self
    }

    pub fn with_b_field(mut self, b: T) -> Self {
        self.b_field = b;
        self
    }

    pub fn with_lambda_r(mut self, lambda_r: T) -> Self {
        self.lambda_r = lambda_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("v_f", self.v_f), ("hbar", self.hbar), ("charge", self.charge)];
        for (name, value) in positive {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive and finite, got {value}") });
            }
        }
        for (name, value) in [("delta_so", self.delta_so), ("lambda_r", self.lambda_r)] {
            if !(value >= T::zero()) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("must be non-negative and finite, got {value}") });
            }
        }
        let fields = [("e_field", self.e_field[0]), ("e_field", self.e_field[1]), ("b_field", self.b_field)];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite".into() });
            }
        }
        Ok(())
    }

    /// `Δ_SO > 2 λ_R`.
    pub fn spin_hall_regime(&self) -> bool {
        self.delta_so > T::of(2.0) * self.lambda_r
    }

    pub fn regime(&self) -> RegimeReport {
        RegimeReport { strict: self.spin_hall_regime(), weak: self.delta_so > self.lambda_r }
    }

    /// Copy with the Rashba coupling switched off.
    pub fn without_rashba(&self) -> Self {
        let mut p = self.clone();
        p.lambda_r = T::zero();
        p
    }

    pub(crate) fn require_zero_rashba(&self) -> Result<()> {
        if self.lambda_r != T::zero() {
            return Err(Error::RequiresZeroRashba { lambda_r: self.lambda_r.as_f64() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix<T: Real> {
    pub block: Block,
    pub matrix: CMat<T>,
}

impl<T: Real> HamiltonianMatrix<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub(crate) fn momentum_norm<T: Real>(p: [T; 2]) -> T {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn valley_block<T: Real>(params: &ModelParams<T>, p: [T; 2], valley: Valley) -> CMat<T> {
    let tau: T = valley.tau();
    let (s0, sx, sy, sz) = (pauli::<T>(Pauli::I), pauli::<T>(Pauli::X), pauli::<T>(Pauli::Y), pauli::<T>(Pauli::Z));
    let v = params.v_f;
    let kinetic = linalg::scale(&kron(&sx, &s0), tau * v * p[0]) + linalg::scale(&kron(&sy, &s0), v * p[1]);
    let intrinsic = linalg::scale(&kron(&sz, &sz), tau * params.delta_so);
    let rashba = linalg::scale(&(linalg::scale(&kron(&sx, &sy), tau) - kron(&sy, &sx)), params.lambda_r);
    kinetic + intrinsic + rashba
}

/// Hamiltonian at momentum `p` for a valley block (4×4) or the full space (8×8).
///
/// Every term is a real multiple of a Kronecker product of Pauli matrices, so the result is
/// Hermitian entry-for-entry, not just to rounding.
pub fn build_hamiltonian<T: Real>(params: &ModelParams<T>, p: [T; 2], block: Block) -> HamiltonianMatrix<T> {
    let matrix = match block {
        Block::Valley(v) => valley_block(params, p, v),
        Block::Full => linalg::block_diag(&valley_block(params, p, Valley::K), &valley_block(params, p, Valley::KPrime)),
    };
    HamiltonianMatrix { block, matrix }
}

/// Eigenvalues from a dense Hermitian eigensolve, descending.
pub fn numeric_spectrum<T: Real>(h: &HamiltonianMatrix<T>) -> Vec<T> {
    let mut values = linalg::eigvalsh(&h.matrix);
    values.reverse();
    values
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult<T> {
    /// `E1..E4` in the closed-form ordering (`E1, E2 > 0 > E3, E4` inside the regime).
    pub energies: [T; 4],
    /// `min(E1, E2) − max(E3, E4)`.
    pub gap: T,
}

/// Intermediate radicals shared by the spectrum, the eigenstates and the curvature.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Radicals<T> {
    /// `v_F |p|`
    pub x: T,
    /// `Δ − λ`
    pub a: T,
    /// `Δ + λ`
    pub b: T,
    /// `√(a² + x²)`
    pub r1: T,
    /// `√(b² + x²)`
    pub r2: T,
}

impl<T: Real> Radicals<T> {
    pub fn new(params: &ModelParams<T>, p_abs: T) -> Self {
        let x = params.v_f * p_abs;
        let a = params.delta_so - params.lambda_r;
        let b = params.delta_so + params.lambda_r;
        Self { x, a, b, r1: a.hypot(x), r2: b.hypot(x) }
    }

    /// `r − c` for `r = √(c² + x²)`, without cancellation when `c > 0`.
    fn r_minus(r: T, c: T, x: T) -> T {
        if c > T::zero() {
            x * x / (r + c)
        } else {
            r - c
        }
    }

    /// `r + c` for `r = √(c² + x²)`, without cancellation when `c < 0`.
    pub fn r_plus(r: T, c: T, x: T) -> T {
        if c < T::zero() {
            x * x / (r - c)
        } else {
            r + c
        }
    }

    /// `E_α − Δ_SO` for α = 1..4.
    pub fn shifted_energies(&self) -> [T; 4] {
        [
            Self::r_minus(self.r1, self.a, self.x),
            Self::r_minus(self.r2, self.b, self.x),
            -Self::r_plus(self.r1, self.a, self.x),
            -Self::r_plus(self.r2, self.b, self.x),
        ]
    }
}

/// Closed-form band energies, valley independent.
pub fn analytic_spectrum<T: Real>(params: &ModelParams<T>, p: [T; 2]) -> SpectrumResult<T> {
    let r = Radicals::new(params, momentum_norm(p));
    let l = params.lambda_r;
    let two_l = T::of(2.0) * l;
    let e1 = l + r.r1;
    let e2 = -l + r.r2;
    let e3 = two_l - e1;
    let e4 = -two_l - e2;
    SpectrumResult { energies: [e1, e2, e3, e4], gap: e1.min(e2) - e3.max(e4) }
}

/// A single labelled spinor.
#[derive(Clone, Debug, PartialEq)]
pub struct Spinor<T: Real> {
    /// 1-based label: Φ1..Φ8 / Ψ1..Ψ8 across both valleys, 1..4 within a valley for FW states.
    pub index: usize,
    pub energy: T,
    /// Definite spin, when the state carries one.
    pub spin: Option<Spin>,
    pub vector: CVec<T>,
}

/// Spin diagnostics attached to a spin-adapted basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinDiagnostic<T> {
    pub index: usize,
    /// `⟨ψ|S_z|ψ⟩`.
    pub polarization: T,
    /// `‖P S_z ψ − ⟨S_z⟩ ψ‖` with `P` the projector onto the state's energy sector.
    pub projected_residual: T,
    /// `‖S_z ψ − ⟨S_z⟩ ψ‖`, zero only for an exact `S_z` eigenstate.
    pub leakage: T,
}

/// Family of orthonormal spinors at one momentum in one valley.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorSet<T: Real> {
    pub basis: BasisKind,
    pub valley: Valley,
    pub momentum: [T; 2],
    pub spinors: Vec<Spinor<T>>,
    pub spin_diagnostics: Vec<SpinDiagnostic<T>>,
}

impl<T: Real> SpinorSet<T> {
    /// Columns `[ψ_k0, ψ_k1, …]` for the given positions in `spinors`.
    pub fn frame(&self, positions: &[usize]) -> CMat<T> {
        let dim = self.spinors[0].vector.len();
        let mut out = CMat::zeros(dim, positions.len());
        for (col, &k) in positions.iter().enumerate() {
            out.set_column(col, &self.spinors[k].vector);
        }
        out
    }

    pub fn full_frame(&self) -> CMat<T> {
        let all: Vec<usize> = (0..self.spinors.len()).collect();
        self.frame(&all)
    }

    /// Gram matrix `U† U` of the whole set.
    pub fn gram(&self) -> CMat<T> {
        let u = self.full_frame();
        u.adjoint() * u
    }

    /// `max |U†U − 1|`.
    pub fn orthonormality_defect(&self) -> T {
        linalg::unitarity_defect(&self.full_frame())
    }

    pub fn energies(&self) -> Vec<T> {
        self.spinors.iter().map(|s| s.energy).collect()
    }
}

fn check_momentum<T: Real>(p: [T; 2]) -> Result<T> {
    let p_abs = momentum_norm(p);
    if !(p_abs > T::of(P_MIN)) {
        return Err(Error::MomentumAtOrigin { magnitude: p_abs.as_f64() });
    }
    Ok(p_abs)
}

/// Closed-form energy eigenstates of a valley block.
///
/// K: `Φα = Nα (sα i u, c, sα i c, 1)`; K′: `Φα = Nα (sα i c, 1, −sα i u, −c)`; where
/// `u = (px − i py)/(px + i py)`, `c = (Eα − Δ)/(v_F (px + i py))`, `sα = −1` for α = 1, 3 and
/// `+1` for α = 2, 4, and `Nα = v_F p / √(2(v_F² p² + (Eα − Δ)²))`.
pub fn analytic_eigenstates<T: Real>(params: &ModelParams<T>, p: [T; 2], valley: Valley) -> Result<SpinorSet<T>> {
    let p_abs = check_momentum(p)?;
    let spectrum = analytic_spectrum(params, p);
    let radicals = Radicals::new(params, p_abs);
    let shifted = radicals.shifted_energies();
    let x = radicals.x;
    let p_plus = cplx(p[0], p[1]);
    let winding = p_plus.conjugate() / p_plus;
    let two = T::of(2.0);
    let one = real(T::one());
    let mut spinors = Vec::with_capacity(4);
    for alpha in 0..4 {
        let d = shifted[alpha];
        let norm = x / (two * (x * x + d * d)).sqrt();
        let c = real(d) / (p_plus * real(params.v_f));
        let s = if alpha % 2 == 0 { -T::one() } else { T::one() };
        let i_s = imag(s);
        let components = match valley {
            Valley::K => [i_s * winding, c, i_s * c, one],
            Valley::KPrime => [i_s * c, one, -(i_s * winding), -c],
        };
        let vector = CVec::from_iterator(4, components.iter().map(|z| z * real(norm)));
        spinors.push(Spinor { index: valley.index_offset() + alpha + 1, energy: spectrum.energies[alpha], spin: None, vector });
    }
    Ok(SpinorSet { basis: BasisKind::Phi, valley, momentum: p, spinors, spin_diagnostics: Vec::new() })
}

/// `Γ = σ_z τ_z s_z` restricted to a block.
fn gamma<T: Real>(block: Block) -> CMat<T> {
    let sz = pauli::<T>(Pauli::Z);
    let in_valley = kron(&sz, &sz);
    match block {
        Block::Valley(v) => linalg::scale(&in_valley, v.tau()),
        Block::Full => kron(&sz, &in_valley),
    }
}

fn fw_unitary<T: Real>(params: &ModelParams<T>, p: [T; 2], block: Block) -> Result<CMat<T>> {
    params.require_zero_rashba()?;
    let h = build_hamiltonian(params, p, block).matrix;
    let energy = (params.v_f * params.v_f * (p[0] * p[0] + p[1] * p[1]) + params.delta_so * params.delta_so).sqrt();
    let denominator = energy + params.delta_so;
    if !(denominator > T::zero()) {
        return Err(Error::FwUndefined { denominator: denominator.as_f64() });
    }
    let n = h.nrows();
    let numerator = gamma::<T>(block) * h + linalg::identity::<T>(n) * real(energy);
    Ok(linalg::scale(&numerator, T::one() / (T::of(2.0) * energy * denominator).sqrt()))
}

/// Foldy–Wouthuysen unitary `U = (σzτzsz H + E)/√(2E(E+Δ))` on the full 8×8 space.
///
/// `U H U† = E σz τz sz`.
pub fn fw_transform<T: Real>(params: &ModelParams<T>, p: [T; 2]) -> Result<CMat<T>> {
    fw_unitary(params, p, Block::Full)
}

/// FW unitary of one valley block.
pub fn fw_transform_block<T: Real>(params: &ModelParams<T>, p: [T; 2], valley: Valley) -> Result<CMat<T>> {
    fw_unitary(params, p, Block::Valley(valley))
}

/// Diagonal target `E σz τz sz` of the FW transform.
pub fn fw_target<T: Real>(params: &ModelParams<T>, p: [T; 2], block: Block) -> CMat<T> {
    let energy = (params.v_f * params.v_f * (p[0] * p[0] + p[1] * p[1]) + params.delta_so * params.delta_so).sqrt();
    linalg::scale(&gamma::<T>(block), energy)
}

/// Spin-adapted eigenstates `u = U† v` of a valley block at `λ_R = 0`, ordered
/// `[+E ↑, +E ↓, −E ↑, −E ↓]`. Unlike a generic eigensolve on the degenerate pairs, every
/// state carries a definite spin.
pub fn fw_eigenstates<T: Real>(params: &ModelParams<T>, p: [T; 2], valley: Valley) -> Result<SpinorSet<T>> {
    let u = fw_transform_block(params, p, valley)?;
    let energy = (params.v_f * params.v_f * (p[0] * p[0] + p[1] * p[1]) + params.delta_so * params.delta_so).sqrt();
    let ud = u.adjoint();
    // Which unit vector carries (sign of Γ, spin) in each valley.
    let columns: [(usize, T, Spin); 4] = match valley {
        Valley::K => [(0, energy, Spin::Up), (3, energy, Spin::Down), (2, -energy, Spin::Up), (1, -energy, Spin::Down)],
        Valley::KPrime => [(2, energy, Spin::Up), (1, energy, Spin::Down), (0, -energy, Spin::Up), (3, -energy, Spin::Down)],
    };
    let spinors = columns
        .iter()
        .enumerate()
        .map(|(k, &(col, e, spin))| Spinor { index: k + 1, energy: e, spin: Some(spin), vector: ud.column(col).into_owned() })
        .collect();
    Ok(SpinorSet { basis: BasisKind::Fw, valley, momentum: p, spinors, spin_diagnostics: Vec::new() })
}

/// `S_z` in the Hamiltonian's index ordering: `diag(1, −1)` for `dim = 2`, `1_σ ⊗ s_z` for a
/// valley block and `1_τ ⊗ 1_σ ⊗ s_z` for the full space.
pub fn spin_operator<T: Real>(dim: usize) -> Result<CMat<T>> {
    let sz = pauli::<T>(Pauli::Z);
    match dim {
        2 => Ok(sz),
        4 => Ok(kron(&linalg::identity(2), &sz)),
        8 => Ok(kron(&linalg::identity(4), &sz)),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(delta: f64, lambda: f64) -> ModelParams<f64> {
        ModelParams::new(delta, lambda).unwrap()
    }

    fn residual(h: &CMat<f64>, s: &Spinor<f64>) -> f64 {
        linalg::vec_norm(&(h * &s.vector - &s.vector * real(s.energy)))
    }

    #[test]
    fn origin_hamiltonian_is_intrinsic_mass() {
        let h = build_hamiltonian(&params(0.5, 0.0), [0.0, 0.0], Valley::K.into());
        let expected = linalg::diag_real(&[0.5, -0.5, -0.5, 0.5]);
        assert_eq!(h.matrix, expected);
    }

    #[test]
    fn origin_spectrum_with_rashba() {
        let prm = params(0.5, 0.1);
        let h = build_hamiltonian(&prm, [0.0, 0.0], Valley::K.into());
        let vals = numeric_spectrum(&h);
        for (got, want) in vals.iter().zip([0.5, 0.5, -0.3, -0.7]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(h.matrix.trace().re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((&h.matrix * &h.matrix).trace().re, 1.08, epsilon = 1e-14);
        let s = analytic_spectrum(&prm, [0.0, 0.0]);
        assert_eq!(s.energies, [0.5, 0.5, -0.3, -0.7]);
    }

    #[test]
    fn hamiltonian_is_exactly_hermitian() {
        let prm = params(0.37, 0.11).with_v_f(1.3);
        for p in [[0.3, -0.4], [2.0, 1.0], [-1.7, 0.01]] {
            for block in [Block::Valley(Valley::K), Block::Valley(Valley::KPrime), Block::Full] {
                assert_eq!(linalg::hermiticity_defect(&build_hamiltonian(&prm, p, block).matrix), 0.0);
            }
        }
    }

    #[test]
    fn full_hamiltonian_is_block_diagonal() {
        let prm = params(0.5, 0.1);
        let h = build_hamiltonian(&prm, [0.3, 0.4], Block::Full).matrix;
        assert_eq!(h.view((0, 4), (4, 4)).iter().map(|z| z.norm1()).sum::<f64>(), 0.0);
        assert_eq!(h.view((0, 0), (4, 4)).into_owned(), build_hamiltonian(&prm, [0.3, 0.4], Valley::K.into()).matrix);
    }

    #[test]
    fn zero_rashba_spectrum_collapses() {
        let s = analytic_spectrum(&params(0.5, 0.0), [0.3, 0.4]);
        for e in s.energies {
            assert_abs_diff_eq!(e.abs(), 0.5f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn appendix_states_are_eigenvectors() {
        let prm = params(0.5, 0.1);
        let p = [0.3, 0.4];
        for valley in Valley::ALL {
            let h = build_hamiltonian(&prm, p, valley.into()).matrix;
            let set = analytic_eigenstates(&prm, p, valley).unwrap();
            for s in &set.spinors {
                assert!(residual(&h, s) < 1e-12, "{valley:?} {} residual {}", s.index, residual(&h, s));
            }
            assert!(set.orthonormality_defect() < 1e-14);
        }
    }

    #[test]
    fn appendix_normalisations() {
        let prm = params(0.5, 0.1);
        let p = [0.3, 0.4];
        let set = analytic_eigenstates(&prm, p, Valley::K).unwrap();
        let e = analytic_spectrum(&prm, p).energies;
        for (s, energy) in set.spinors.iter().zip(e) {
            let n = 0.5 / (2.0 * (0.25 + (energy - 0.5f64).powi(2))).sqrt();
            // last component of a K state is exactly N_α
            assert_abs_diff_eq!(s.vector[3].re, n, epsilon = 1e-15);
        }
    }

    #[test]
    fn eigenstates_reject_origin() {
        let err = analytic_eigenstates(&params(0.5, 0.1), [0.0, 0.0], Valley::K).unwrap_err();
        assert!(matches!(err, Error::MomentumAtOrigin { .. }));
    }

    #[test]
    fn fw_diagonalises() {
        let prm = params(0.5, 0.0);
        let p = [0.3, 0.4];
        let u = fw_transform(&prm, p).unwrap();
        let h = build_hamiltonian(&prm, p, Block::Full).matrix;
        assert!(linalg::unitarity_defect(&u) < 1e-14);
        let d = &u * h * u.adjoint();
        assert!(linalg::max_abs(&(d - fw_target(&prm, p, Block::Full))) < 1e-14);
    }

    #[test]
    fn fw_is_identity_at_origin() {
        let u = fw_transform(&params(0.5, 0.0), [0.0, 0.0]).unwrap();
        assert!(linalg::max_abs(&(u - linalg::identity::<f64>(8))) < 1e-15);
    }

    #[test]
    fn fw_rejects_rashba() {
        assert!(matches!(fw_transform(&params(0.5, 0.1), [0.3, 0.4]), Err(Error::RequiresZeroRashba { .. })));
    }

    #[test]
    fn fw_undefined_for_massless_origin() {
        assert!(matches!(fw_transform(&params(0.0, 0.0), [0.0, 0.0]), Err(Error::FwUndefined { .. })));
    }

    #[test]
    fn fw_states_have_definite_spin() {
        let prm = params(0.5, 0.0);
        let sz = spin_operator::<f64>(4).unwrap();
        for valley in Valley::ALL {
            let h = build_hamiltonian(&prm, [0.3, 0.4], valley.into()).matrix;
            let set = fw_eigenstates(&prm, [0.3, 0.4], valley).unwrap();
            for s in &set.spinors {
                assert!(residual(&h, s) < 1e-14);
                let sign = s.spin.unwrap().sign::<f64>();
                assert!(linalg::vec_norm(&(&sz * &s.vector - &s.vector * real(sign))) < 1e-14);
            }
        }
    }

    #[test]
    fn spin_operator_shapes() {
        assert_eq!(spin_operator::<f64>(2).unwrap(), linalg::diag_real(&[1.0, -1.0]));
        assert_eq!(spin_operator::<f64>(4).unwrap(), linalg::diag_real(&[1.0, -1.0, 1.0, -1.0]));
        let s8 = spin_operator::<f64>(8).unwrap();
        assert_eq!(&s8 * &s8, linalg::identity::<f64>(8));
        assert_eq!(spin_operator::<f64>(3), Err(Error::UnsupportedDimension(3)));
    }

    #[test]
    fn regime_flags() {
        assert!(params(0.5, 0.1).spin_hall_regime());
        let r = params(0.2, 0.15).regime();
        assert!(!r.strict && r.weak);
    }

    #[test]
    fn validation_rejects_bad_couplings() {
        assert!(ModelParams::new(-0.1, 0.0).is_err());
        assert!(ModelParams::new(0.5, f64::NAN).is_err());
        let mut p = params(0.5, 0.1);
        p.hbar = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn f32_eigenstates() {
        let prm = ModelParams::<f32>::new(0.5, 0.1).unwrap();
        let h = build_hamiltonian(&prm, [0.3, 0.4], Valley::K.into()).matrix;
        let set = analytic_eigenstates(&prm, [0.3, 0.4], Valley::K).unwrap();
        for s in &set.spinors {
            let r = linalg::vec_norm(&(&h * &s.vector - &s.vector * real(s.energy)));
            assert!(r < 1e-5);
        }
    }
}
