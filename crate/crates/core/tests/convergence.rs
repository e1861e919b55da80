//! Tolerance scaling of the trajectory integrator.

use spinhall_core::checks::trajectory_convergence_ratio;

#[test]
fn halving_tolerance_cuts_trajectory_error_fourfold() {
    let ratios: Vec<f64> = [1e-5, 1e-6, 1e-7].iter().map(|&tol| trajectory_convergence_ratio(tol).unwrap()).collect();
    println!("error ratios for tol -> tol/2: {ratios:?}");
    for r in &ratios {
        assert!(*r >= 4.0, "error ratio {r} below 4 (all ratios {ratios:?})");
    }
}

#[test]
fn trajectory_error_decreases_with_tolerance() {
    for tol in [1e-5, 1e-6, 1e-7] {
        let r = trajectory_convergence_ratio(tol).unwrap();
        assert!(r > 1.2, "tol {tol}: ratio {r}");
    }
}
