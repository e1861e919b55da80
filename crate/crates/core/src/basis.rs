//! Spin-adapted basis Ψ built from the energy eigenbasis Φ, and covariant transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat};
use crate::model::{self, Spin, SpinDiagnostic, Spinor, SpinorSet};
use crate::scalar::Real;

/// Threshold separating a basis/convention bug from rounding in the spin checks.
pub const SPIN_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// Foldy–Wouthuysen (spin-adapted eigenstates at `λ_R = 0`).
    Fw,
    /// Energy eigenbasis.
    Phi,
    /// `S_z`-adapted rotation of the energy eigenbasis.
    Psi,
}

impl BasisKind {
    /// Whether `S_z` is diagonal on each energy sector in this basis.
    pub fn spin_diagonal(self) -> bool {
        !matches!(self, BasisKind::Phi)
    }
}

/// `R = diag(R̃, R̃)` with `R̃ = (1/√2)[[1, 1], [1, −1]]`, mapping Φ-components to Ψ-components.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisRotation<T: Real> {
    pub matrix: CMat<T>,
    pub source: BasisKind,
    pub target: BasisKind,
}

/// The 2×2 block `R̃`.
pub fn rotation_block<T: Real>() -> CMat<T> {
    let h = real(T::one() / T::of(2.0).sqrt());
    CMat::from_row_slice(2, 2, &[h, h, h, -h])
}

impl<T: Real> BasisRotation<T> {
    pub fn phi_to_psi() -> Self {
        let r = rotation_block::<T>();
        Self { matrix: linalg::block_diag(&r, &r), source: BasisKind::Phi, target: BasisKind::Psi }
    }
}

/// Rotates Φ₁..Φ₄ into Ψ₁,₂ = (Φ₁ ± Φ₂)/√2 and Ψ₃,₄ = (Φ₃ ± Φ₄)/√2.
///
/// With Rashba coupling the two-dimensional sector spans contain no exact `S_z` eigenvector, so
/// what is validated is that each Ψ diagonalizes the spin operator projected onto its energy
/// sector. The spin label of each state is the sign of the measured `⟨S_z⟩`; the polarization
/// and the leakage out of the sector are reported alongside.
pub fn spin_eigenbasis<T: Real>(phi: &SpinorSet<T>) -> Result<SpinorSet<T>> {
    if phi.basis != BasisKind::Phi {
        return Err(Error::InvalidParameter { name: "basis", reason: format!("expected Phi states, got {:?}", phi.basis) });
    }
    if phi.spinors.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: phi.spinors.len() });
    }
    let dim = phi.spinors[0].vector.len();
    let sz = model::spin_operator::<T>(dim)?;
    let h = real(T::one() / T::of(2.0).sqrt());
    let mut spinors = Vec::with_capacity(4);
    let mut diagnostics = Vec::with_capacity(4);
    for sector in [0usize, 2] {
        let (a, b) = (&phi.spinors[sector], &phi.spinors[sector + 1]);
        let plus = (&a.vector + &b.vector) * h;
        let minus = (&a.vector - &b.vector) * h;
        let frame = phi.frame(&[sector, sector + 1]);
        let projector = &frame * frame.adjoint();
        for (k, vector) in [plus, minus].into_iter().enumerate() {
            let index = phi.spinors[sector + k].index;
            let sz_v = &sz * &vector;
            let polarization = linalg::inner(&vector, &sz_v).re;
            let shifted = |w: &crate::linalg::CVec<T>| w - &vector * real(polarization);
            let projected_residual = linalg::vec_norm(&shifted(&(&projector * &sz_v)));
            let leakage = linalg::vec_norm(&shifted(&sz_v));
            if !(projected_residual <= T::of(SPIN_RESIDUAL_TOL)) {
                return Err(Error::NotSpinDiagonalizable {
                    index,
                    residual: projected_residual.as_f64(),
                    polarization: polarization.as_f64(),
                });
            }
            // sector energy is shared: ⟨Ψ|H|Ψ⟩ = (E_a + E_b)/2
            let energy = (a.energy + b.energy) * T::of(0.5);
            spinors.push(Spinor { index, energy, spin: Some(Spin::from_sign(polarization)), vector });
            diagnostics.push(SpinDiagnostic { index, polarization, projected_residual, leakage });
        }
        let (s0, s1) = (spinors[sector].spin, spinors[sector + 1].spin);
        if s0 == s1 {
            return Err(Error::NotSpinDiagonalizable {
                index: phi.spinors[sector].index,
                residual: 0.0,
                polarization: diagnostics[sector].polarization.as_f64(),
            });
        }
    }
    Ok(SpinorSet { basis: BasisKind::Psi, valley: phi.valley, momentum: phi.momentum, spinors, spin_diagnostics: diagnostics })
}

/// `U O U†`, checking shapes and unitarity of `U` (to 1e−10).
pub fn transform_observable<T: Real>(u: &CMat<T>, o: &CMat<T>) -> Result<CMat<T>> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), found: u.ncols() });
    }
    if o.nrows() != u.ncols() || o.ncols() != u.ncols() {
        return Err(Error::DimensionMismatch { expected: u.ncols(), found: o.nrows().max(o.ncols()) });
    }
    let defect = linalg::unitarity_defect(u);
    if !(defect <= T::of(1e-10)) {
        return Err(Error::NotUnitary { defect: defect.as_f64() });
    }
    Ok(u * o * u.adjoint())
}

/// Positive-energy band Hamiltonian in the Ψ basis, `R̃ diag(E₁, E₂) R̃`.
pub fn psi_band_hamiltonian<T: Real>(e1: T, e2: T) -> CMat<T> {
    let r = rotation_block::<T>();
    &r * linalg::diag_real(&[e1, e2]) * &r
}

/// Spin labels (`+1` up, `−1` down) of a spin-adapted set as a diagonal matrix over the given
/// positions. Fails on a state without a definite spin.
pub fn spin_label_matrix<T: Real>(set: &SpinorSet<T>, positions: &[usize]) -> Result<CMat<T>> {
    let mut signs = Vec::with_capacity(positions.len());
    for &k in positions {
        let s = &set.spinors[k];
        match s.spin {
            Some(spin) => signs.push(spin.sign::<T>()),
            None => return Err(Error::NotSpinDiagonalizable { index: s.index, residual: f64::NAN, polarization: f64::NAN }),
        }
    }
    Ok(linalg::diag_real(&signs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{analytic_eigenstates, analytic_spectrum, fw_eigenstates, ModelParams, Valley};

    fn rashba() -> ModelParams<f64> {
        ModelParams::new(0.5, 0.1).unwrap()
    }

    #[test]
    fn rotation_is_a_hermitian_involution() {
        let r = BasisRotation::<f64>::phi_to_psi().matrix;
        assert!(linalg::hermiticity_defect(&r) < 1e-15);
        assert!(linalg::max_abs(&(&r * &r - linalg::identity::<f64>(4))) < 1e-15);
    }

    #[test]
    fn psi_states_diagonalise_projected_spin() {
        for valley in Valley::ALL {
            let phi = analytic_eigenstates(&rashba(), [0.3, 0.4], valley).unwrap();
            let psi = spin_eigenbasis(&phi).unwrap();
            assert!(psi.orthonormality_defect() < 1e-12);
            for d in &psi.spin_diagnostics {
                assert!(d.projected_residual < 1e-12, "{d:?}");
                assert!(d.polarization.abs() > 0.99 && d.polarization.abs() < 1.0);
                assert!(d.leakage > 1e-3);
            }
            let spins: Vec<_> = psi.spinors.iter().map(|s| s.spin.unwrap()).collect();
            assert_eq!(spins, vec![Spin::Down, Spin::Up, Spin::Down, Spin::Up]);
        }
    }

    #[test]
    fn psi_states_are_exact_spin_eigenstates_without_rashba() {
        let prm = ModelParams::new(0.5, 0.0).unwrap();
        let sz = model::spin_operator::<f64>(4).unwrap();
        let psi = spin_eigenbasis(&analytic_eigenstates(&prm, [0.3, 0.4], Valley::K).unwrap()).unwrap();
        for s in &psi.spinors {
            let sign = s.spin.unwrap().sign::<f64>();
            assert!(linalg::vec_norm(&(&sz * &s.vector - &s.vector * real(sign))) < 1e-10);
        }
    }

    #[test]
    fn psi_matches_fw_states_without_rashba() {
        let prm = ModelParams::new(0.5, 0.0).unwrap();
        for valley in Valley::ALL {
            let psi = spin_eigenbasis(&analytic_eigenstates(&prm, [0.3, 0.4], valley).unwrap()).unwrap();
            let fw = fw_eigenstates(&prm, [0.3, 0.4], valley).unwrap();
            let overlap = psi.full_frame().adjoint() * fw.full_frame();
            for (i, s) in psi.spinors.iter().enumerate() {
                for (j, u) in fw.spinors.iter().enumerate() {
                    let same = s.spin == u.spin && (s.energy > 0.0) == (u.energy > 0.0);
                    let want: f64 = if same { 1.0 } else { 0.0 };
                    assert!((overlap[(i, j)].norm() - want).abs() < 1e-12, "{valley:?} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn sectors_do_not_mix() {
        let phi = analytic_eigenstates(&rashba(), [0.7, -0.2], Valley::KPrime).unwrap();
        let psi = spin_eigenbasis(&phi).unwrap();
        let p_phi = phi.frame(&[0, 1]) * phi.frame(&[0, 1]).adjoint();
        let p_psi = psi.frame(&[0, 1]) * psi.frame(&[0, 1]).adjoint();
        assert!(linalg::max_abs(&(p_phi - p_psi)) < 1e-12);
    }

    #[test]
    fn rotating_twice_returns_phi() {
        let phi = analytic_eigenstates(&rashba(), [0.3, 0.4], Valley::K).unwrap();
        let psi = spin_eigenbasis(&phi).unwrap();
        let back = psi.full_frame() * BasisRotation::<f64>::phi_to_psi().matrix;
        assert!(linalg::max_abs(&(back - phi.full_frame())) < 1e-14);
    }

    #[test]
    fn psi_hamiltonian_block_form() {
        let prm = rashba();
        let p = [0.3, 0.4];
        let phi = analytic_eigenstates(&prm, p, Valley::K).unwrap();
        let psi = spin_eigenbasis(&phi).unwrap();
        let h = crate::model::build_hamiltonian(&prm, p, Valley::K.into()).matrix;
        let e = analytic_spectrum(&prm, p).energies;
        let block = psi.frame(&[0, 1]).adjoint() * h * psi.frame(&[0, 1]);
        let expected = psi_band_hamiltonian(e[0], e[1]);
        assert!(linalg::max_abs(&(&block - &expected)) < 1e-12);
        assert!((expected[(0, 0)].re - (e[0] + e[1]) / 2.0).abs() < 1e-15);
        assert!((expected[(0, 1)].re - (e[0] - e[1]) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn transform_rejects_bad_input() {
        let o = linalg::identity::<f64>(2);
        let not_unitary = linalg::diag_real(&[1.0, 2.0]);
        assert!(matches!(transform_observable(&not_unitary, &o), Err(Error::NotUnitary { .. })));
        let u3 = linalg::identity::<f64>(3);
        assert!(matches!(transform_observable(&u3, &o), Err(Error::DimensionMismatch { .. })));
        assert_eq!(transform_observable(&o, &o).unwrap(), o);
    }

    #[test]
    fn spin_eigenbasis_requires_phi() {
        let fw = fw_eigenstates(&ModelParams::new(0.5, 0.0).unwrap(), [0.3, 0.4], Valley::K).unwrap();
        assert!(spin_eigenbasis(&fw).is_err());
    }
}
