//! Momentum-space quadrature of curvature into Chern numbers and Hall conductivities.
//!
//! Chern numbers are `N = (1/2πħ) ∫ d²p G = (1/ħ) ∫ p G(p) dp` for rotationally symmetric
//! curvature. The radial integral is split into `[p_min, p_max]`, the semi-infinite tail (mapped
//! onto a finite interval) and the excluded disc `|p| < p_min`, which only enters the error.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::berry;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{self, ModelKind, ModelParams, Spin, Valley, P_MIN};
use crate::quadrature::{self, AdaptiveOptions};
use crate::scalar::Real;
use crate::semiclassics;

/// Global orientation applied to reported Chern numbers and conductivities.
///
/// With `ε^{xy} = +1`, `A = iħu†∂u` and spin labels from the measured `⟨S_z⟩`, the raw spin
/// Chern number of the gapped Kane–Mele phase is −1 in both the FW and Ψ constructions; this
/// sign maps it to +1. Raw values are kept in [`ConventionRecord`].
pub const ORIENTATION_SIGN: f64 = -1.0;

pub const INDEX_ORDERING: &str = "valley (outer) x sublattice x spin (inner)";
pub const CONNECTION_CONVENTION: &str = "A = i hbar u^dagger grad_p u";
pub const SPIN_LABEL_CONVENTION: &str = "sign of measured <S_z>";

/// Refuse parameter sets with `|Δ_SO − 2λ_R|` below this.
pub const GAP_GUARD: f64 = 1e-6;

/// One (valley, spin) sector of the positive-energy bands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorLabel {
    pub valley: Valley,
    pub spin: Spin,
}

impl SectorLabel {
    pub const ALL: [SectorLabel; 4] = [
        SectorLabel { valley: Valley::K, spin: Spin::Up },
        SectorLabel { valley: Valley::K, spin: Spin::Down },
        SectorLabel { valley: Valley::KPrime, spin: Spin::Up },
        SectorLabel { valley: Valley::KPrime, spin: Spin::Down },
    ];

    pub fn new(valley: Valley, spin: Spin) -> Self {
        Self { valley, spin }
    }

    /// Stable key used in serialized reports: `up_K`, `down_K`, `up_Kp`, `down_Kp`.
    pub fn key(&self) -> &'static str {
        match (self.spin, self.valley) {
            (Spin::Up, Valley::K) => "up_K",
            (Spin::Down, Valley::K) => "down_K",
            (Spin::Up, Valley::KPrime) => "up_Kp",
            (Spin::Down, Valley::KPrime) => "down_Kp",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.key() == key)
    }
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    #[serde(rename = "unity")]
    Unity,
    #[serde(rename = "fermi_zero_T")]
    FermiZeroT,
}

/// Occupation of the positive-energy bands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution<T> {
    pub kind: DistributionKind,
    /// Used iff `kind` is `FermiZeroT`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fermi_energy: Option<T>,
}

impl<T: Real> Distribution<T> {
    pub fn unity() -> Self {
        Self { kind: DistributionKind::Unity, fermi_energy: None }
    }

    pub fn fermi(fermi_energy: T) -> Self {
        Self { kind: DistributionKind::FermiZeroT, fermi_energy: Some(fermi_energy) }
    }

    fn cutoff(&self) -> Result<Option<T>> {
        match self.kind {
            DistributionKind::Unity => Ok(None),
            DistributionKind::FermiZeroT => match self.fermi_energy {
                Some(e) if e.is_finite() => Ok(Some(e)),
                _ => Err(Error::InvalidParameter { name: "fermi_energy", reason: "required by fermi_zero_T".into() }),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig<T> {
    pub p_min: T,
    pub p_max: T,
    /// Absolute tolerance on each radial integral (core and tail separately).
    pub tolerance: T,
    pub max_panels: usize,
    /// Radii of the rotational-symmetry check.
    pub ring_radii: Vec<T>,
    pub ring_points: usize,
    /// Allowed relative spread of the curvature on a ring.
    pub ring_tolerance: T,
    /// Direction of the radial ray that is integrated.
    pub ray_angle: T,
}

impl<T: Real> QuadratureConfig<T> {
    /// `p_max = 50·max(Δ_SO, λ_R, 1)/v_F`, `p_min = 1e−8`, tolerance 1e−9.
    pub fn for_params(params: &ModelParams<T>) -> Self {
        let scale = params.delta_so.max(params.lambda_r).max(T::one()) / params.v_f;
        Self {
            p_min: T::of(P_MIN),
            p_max: T::of(50.0) * scale,
            tolerance: T::of(1e-9),
            max_panels: 400,
            ring_radii: [0.05, 0.5, 2.0].iter().map(|&r| T::of(r) * scale).collect(),
            ring_points: 16,
            ring_tolerance: T::of(1e-8),
            ray_angle: T::pi() / T::of(7.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > T::zero()) || !(self.p_max > self.p_min) {
            return Err(Error::InvalidParameter { name: "p_max", reason: format!("need 0 < p_min < p_max, got {} and {}", self.p_min, self.p_max) });
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive".into() });
        }
        Ok(())
    }

    fn options(&self) -> AdaptiveOptions<T> {
        AdaptiveOptions { abs_tol: self.tolerance, rel_tol: T::zero(), max_panels: self.max_panels }
    }
}

/// A radial Chern-type integral with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernEstimate<T> {
    pub value: T,
    /// Sum of the core and tail quadrature errors and the excluded-disc bound, over `ħ`.
    pub error: T,
    /// `(1/ħ)∫_{p_min}^{p_max} p G dp` (or up to the Fermi momentum).
    pub core: T,
    /// `(1/ħ)∫_{p_max}^∞ p G dp`.
    pub tail: T,
    pub tail_error: T,
    /// `|G(2p_min)| p_min² / 2ħ`.
    pub origin_bound: T,
}

/// Relative spread of `G` over rings of the given radii; fails above `tolerance`.
pub fn ring_symmetry_check<T: Real, F: Fn([T; 2]) -> Result<T>>(curvature: &F, radii: &[T], points: usize, tolerance: T) -> Result<T> {
    let mut worst = T::zero();
    for &r in radii {
        let mut lo = T::max_value().unwrap_or(T::of(f64::MAX));
        let mut hi = -lo;
        for k in 0..points.max(2) {
            let theta = T::two_pi() * T::of(k as f64) / T::of(points.max(2) as f64);
            let g = curvature([r * theta.cos(), r * theta.sin()])?;
            lo = lo.min(g);
            hi = hi.max(g);
        }
        let scale = lo.abs().max(hi.abs());
        if scale > T::zero() {
            worst = worst.max((hi - lo) / scale);
        }
    }
    if !(worst <= tolerance) {
        return Err(Error::NotRotationallySymmetric { spread: worst.as_f64() });
    }
    Ok(worst)
}

/// Fermi momentum of a radially increasing band, or `None` when the band is empty.
fn fermi_momentum<T: Real, E: Fn(T) -> T>(energy: &E, fermi_energy: T) -> Result<Option<T>> {
    if fermi_energy <= energy(T::zero()) {
        return Ok(None);
    }
    let mut hi = T::one();
    let mut guard = 0;
    while energy(hi) < fermi_energy {
        hi *= T::of(2.0);
        guard += 1;
        if guard > 200 {
            return Err(Error::NonFinite("Fermi momentum"));
        }
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if energy(mid) < fermi_energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo + hi) * T::of(0.5)))
}

fn radial_chern<T: Real, F, E>(curvature: &F, energy: &E, hbar: T, dist: &Distribution<T>, quad: &QuadratureConfig<T>) -> Result<ChernEstimate<T>>
where
    F: Fn([T; 2]) -> Result<T>,
    E: Fn(T) -> T,
{
    quad.validate()?;
    let cutoff = match dist.cutoff()? {
        None => None,
        Some(e_f) => match fermi_momentum(energy, e_f)? {
            None => {
                let z = T::zero();
                return Ok(ChernEstimate { value: z, error: z, core: z, tail: z, tail_error: z, origin_bound: z });
            }
            Some(p_f) => Some(p_f),
        },
    };
    ring_symmetry_check(curvature, &quad.ring_radii, quad.ring_points, quad.ring_tolerance)?;
    let (c, s) = (quad.ray_angle.cos(), quad.ray_angle.sin());
    let integrand = |r: T| -> Result<T> { Ok(r * curvature([r * c, r * s])?) };
    let upper = match cutoff {
        Some(p_f) => p_f.min(quad.p_max),
        None => quad.p_max,
    };
    let origin_bound = if upper > quad.p_min {
        // G is smooth through the origin; p_min itself is excluded by the gauge guard
        let probe = quad.p_min * T::of(2.0);
        curvature([probe * c, probe * s])?.abs() * quad.p_min * quad.p_min * T::of(0.5)
    } else {
        T::zero()
    };
    let core = if upper > quad.p_min {
        quadrature::integrate(integrand, quad.p_min, upper, quad.options())?
    } else {
        quadrature::QuadResult { value: T::zero(), error: T::zero(), evaluations: 0 }
    };
    let tail_upper = cutoff.filter(|&p_f| p_f > quad.p_max);
    let tail = match (cutoff, tail_upper) {
        (None, _) => quadrature::integrate_to_infinity(integrand, quad.p_max, quad.options())?,
        (Some(_), Some(p_f)) => quadrature::integrate(integrand, quad.p_max, p_f, quad.options())?,
        (Some(_), None) => quadrature::QuadResult { value: T::zero(), error: T::zero(), evaluations: 0 },
    };
    if !(tail.error <= quad.tolerance) {
        return Err(Error::TailBoundExceedsTolerance { bound: tail.error.as_f64(), tolerance: quad.tolerance.as_f64() });
    }
    Ok(ChernEstimate {
        value: (core.value + tail.value) / hbar,
        error: (core.error + tail.error + origin_bound) / hbar,
        core: core.value / hbar,
        tail: tail.value / hbar,
        tail_error: tail.error / hbar,
        origin_bound: origin_bound / hbar,
    })
}

/// `(1/2πħ)∫d²p G` for a rotationally symmetric scalar curvature, whole plane.
///
/// Symmetry is checked on rings first, then one radial ray is integrated.
pub fn chern_number<T: Real, F: Fn([T; 2]) -> Result<T>>(curvature: F, hbar: T, quad: &QuadratureConfig<T>) -> Result<ChernEstimate<T>> {
    radial_chern(&curvature, &|_: T| T::zero(), hbar, &Distribution::unity(), quad)
}

/// `σ_AH` in units of `e²/2πħ`: the curvature integrated over the occupied part of one band.
///
/// `energy` is the band dispersion as a function of `|p|`, used only for `fermi_zero_T`.
pub fn anomalous_hall_conductivity<T: Real, F, E>(curvature: F, energy: E, hbar: T, dist: &Distribution<T>, quad: &QuadratureConfig<T>) -> Result<ChernEstimate<T>>
where
    F: Fn([T; 2]) -> Result<T>,
    E: Fn(T) -> T,
{
    radial_chern(&curvature, &energy, hbar, dist, quad)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinChern<T> {
    pub chern_up: T,
    pub chern_down: T,
    pub spin_chern: T,
    pub per_valley: BTreeMap<Valley, T>,
}

/// `C_s = ½(N↑ − N↓)` with `N↑,↓` summed over valleys; per-valley values alongside.
pub fn spin_chern<T: Real>(sectors: &BTreeMap<SectorLabel, T>) -> Result<SpinChern<T>> {
    let get = |s: SectorLabel| sectors.get(&s).copied().ok_or(Error::MissingSector(s));
    let half = T::of(0.5);
    let mut per_valley = BTreeMap::new();
    let (mut up, mut down) = (T::zero(), T::zero());
    for valley in Valley::ALL {
        let u = get(SectorLabel::new(valley, Spin::Up))?;
        let d = get(SectorLabel::new(valley, Spin::Down))?;
        per_valley.insert(valley, (u - d) * half);
        up += u;
        down += d;
    }
    Ok(SpinChern { chern_up: up, chern_down: down, spin_chern: (up - down) * half, per_valley })
}

/// Orientation and labelling conventions behind a report, with the unoriented values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConventionRecord<T> {
    pub epsilon_xy: i8,
    pub orientation_sign: T,
    pub index_ordering: &'static str,
    pub connection: &'static str,
    pub spin_labels: &'static str,
    pub raw_sector_chern: BTreeMap<String, T>,
    pub raw_spin_chern: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopologyReport<T> {
    pub model: ModelKind,
    pub basis: BasisKind,
    pub distribution: Distribution<T>,
    pub sector_chern: BTreeMap<String, T>,
    pub chern_up: T,
    pub chern_down: T,
    pub spin_chern: T,
    pub spin_chern_per_valley: BTreeMap<String, T>,
    /// Leading (topological) spin Hall conductivity, `C_s` in units of `e/2π`.
    pub sigma_sh_units_e_over_2pi: T,
    /// Total charge Hall conductivity, `N↑ + N↓` in units of `e²/2πħ`.
    pub sigma_ah_units_e2_over_2pi_hbar: T,
    pub quadrature_error: T,
    pub convention: ConventionRecord<T>,
}

/// Refuses `|Δ_SO − 2λ_R| < 1e−6`.
pub fn gap_guard<T: Real>(params: &ModelParams<T>) -> Result<()> {
    let distance = (params.delta_so - T::of(2.0) * params.lambda_r).abs();
    if distance < T::of(GAP_GUARD) {
        return Err(Error::GapClosing { distance: distance.as_f64() });
    }
    Ok(())
}

fn reference_momentum<T: Real>(params: &ModelParams<T>) -> [T; 2] {
    let r = params.delta_so.max(params.lambda_r).max(T::of(0.1)) / params.v_f;
    [r * T::of(0.6), r * T::of(0.8)]
}

/// `Tr[S_z G]` of the positive block at a reference momentum, `S_z` taken as the band-label
/// matrix `diag(1, −1)` of the block. Zero in the Φ basis.
pub fn trace_spin_curvature<T: Real>(params: &ModelParams<T>, model: ModelKind, basis: BasisKind, p: [T; 2]) -> Result<T> {
    let g = berry::analytic_curvature(model, basis, params, p)?;
    let sz = model::spin_operator::<T>(2)?;
    Ok(linalg::trace(&(sz * g)).re)
}

fn require_spin_diagonal<T: Real>(params: &ModelParams<T>, model: ModelKind, basis: BasisKind) -> Result<()> {
    if !basis.spin_diagonal() {
        let trace = trace_spin_curvature(params, model, basis, reference_momentum(params)).unwrap_or_else(|_| T::zero());
        return Err(Error::BasisNotSpinDiagonal { basis, trace_sz_g: trace.as_f64() });
    }
    match (model, basis) {
        (ModelKind::KmSo, BasisKind::Fw) | (ModelKind::KmRashba, BasisKind::Psi) => Ok(()),
        _ => Err(Error::UnsupportedCombination { model, basis }),
    }
}

/// Band energy of a positive-energy spin sector as a function of `|p|`: `E` for FW,
/// the shared diagonal `(E₁ + E₂)/2` of `H₀` in the Ψ basis.
pub fn sector_energy<T: Real>(params: &ModelParams<T>, basis: BasisKind, p_abs: T) -> T {
    let e = model::analytic_spectrum(params, [p_abs, T::zero()]).energies;
    match basis {
        BasisKind::Fw => e[0],
        BasisKind::Phi | BasisKind::Psi => (e[0] + e[1]) * T::of(0.5),
    }
}

/// Unoriented Chern number of one sector from the closed-form curvature.
pub fn sector_chern<T: Real>(
    params: &ModelParams<T>,
    model: ModelKind,
    basis: BasisKind,
    sector: SectorLabel,
    dist: &Distribution<T>,
    quad: &QuadratureConfig<T>,
) -> Result<ChernEstimate<T>> {
    require_spin_diagonal(params, model, basis)?;
    let k = berry::positive_spin_position(params, basis, sector.valley, sector.spin)?;
    let curvature = |p: [T; 2]| -> Result<T> { Ok(berry::analytic_curvature(model, basis, params, p)?[(k, k)].re) };
    let energy = |r: T| sector_energy(params, basis, r);
    radial_chern(&curvature, &energy, params.hbar, dist, quad)
}

/// Full topology report: per-sector Chern numbers, `C_s`, and `σ_SH = (e/2π) C_s`.
pub fn spin_hall_conductivity<T: Real>(
    params: &ModelParams<T>,
    model: ModelKind,
    basis: BasisKind,
    dist: &Distribution<T>,
    quad: &QuadratureConfig<T>,
) -> Result<TopologyReport<T>> {
    params.validate()?;
    gap_guard(params)?;
    require_spin_diagonal(params, model, basis)?;
    let sign = T::of(ORIENTATION_SIGN);
    let mut raw = BTreeMap::new();
    let mut error = T::zero();
    for sector in SectorLabel::ALL {
        let est = sector_chern(params, model, basis, sector, dist, quad)?;
        raw.insert(sector, est.value);
        error += est.error;
    }
    let raw_summary = spin_chern(&raw)?;
    let oriented: BTreeMap<SectorLabel, T> = raw.iter().map(|(&k, &v)| (k, sign * v)).collect();
    let summary = spin_chern(&oriented)?;
    let keyed = |m: &BTreeMap<SectorLabel, T>| m.iter().map(|(k, &v)| (k.key().to_string(), v)).collect::<BTreeMap<_, _>>();
    let valley_key = |v: Valley| if v == Valley::K { "K" } else { "Kp" }.to_string();
    Ok(TopologyReport {
        model,
        basis,
        distribution: *dist,
        sector_chern: keyed(&oriented),
        chern_up: summary.chern_up,
        chern_down: summary.chern_down,
        spin_chern: summary.spin_chern,
        spin_chern_per_valley: summary.per_valley.iter().map(|(&v, &c)| (valley_key(v), c)).collect(),
        sigma_sh_units_e_over_2pi: summary.spin_chern,
        sigma_ah_units_e2_over_2pi_hbar: summary.chern_up + summary.chern_down,
        quadrature_error: error,
        convention: ConventionRecord {
            epsilon_xy: 1,
            orientation_sign: sign,
            index_ordering: INDEX_ORDERING,
            connection: CONNECTION_CONVENTION,
            spin_labels: SPIN_LABEL_CONVENTION,
            raw_sector_chern: keyed(&raw),
            raw_spin_chern: raw_summary.spin_chern,
        },
    })
}

/// Quadrature grid in polar coordinates: radial nodes with weights (the `p` of `d²p = p dp dθ`
/// not included) and a number of angle pairs `(θ, θ + π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarGrid<T> {
    pub radial: Vec<(T, T)>,
    pub angle_pairs: usize,
}

impl<T: Real> PolarGrid<T> {
    /// Composite 21-point panels out to `min(p_max, cutoff)`, plus the mapped tail when there is
    /// no cutoff.
    pub fn new(quad: &QuadratureConfig<T>, cutoff: Option<T>, angle_pairs: usize) -> Self {
        let scale = quad.p_max / T::of(50.0);
        let upper = cutoff.map_or(quad.p_max, |c| c.min(quad.p_max));
        let mut breaks = vec![quad.p_min];
        for b in [1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0, 1.5, 2.5, 4.0, 7.0, 12.0, 20.0, 35.0, 50.0] {
            let x = T::of(b) * scale;
            if x > quad.p_min && x < upper {
                breaks.push(x);
            }
        }
        if upper > quad.p_min {
            breaks.push(upper);
        }
        let mut radial = quadrature::composite_nodes(&breaks);
        match cutoff {
            None => radial.extend(quadrature::tail_nodes(quad.p_max, 8)),
            Some(c) if c > quad.p_max => radial.extend(quadrature::composite_nodes(&[quad.p_max, c])),
            Some(_) => {}
        }
        Self { radial, angle_pairs: angle_pairs.max(1) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentOperator {
    /// `S_z` (band-label matrix of the spin-diagonal basis), prefactor `ħ/2`.
    Spin,
    /// Identity in place of `S_z`, prefactor `e`.
    Charge,
}

/// `j^a = (ħ/2) Σ_valleys ∫ d²p/(2πħ)² Tr[S_z ẋ^a w̃ f]` over the positive-energy bands, with
/// the external fields taken from `params`.
///
/// Angles come in pairs `(p, −p)` so odd integrands cancel exactly.
pub fn spin_current_density<T: Real>(
    params: &ModelParams<T>,
    model: ModelKind,
    basis: BasisKind,
    operator: CurrentOperator,
    dist: &Distribution<T>,
    grid: &PolarGrid<T>,
) -> Result<[T; 2]> {
    require_spin_diagonal(params, model, basis)?;
    let e_f = dist.cutoff()?;
    let two_pi_hbar = T::two_pi() * params.hbar;
    let prefactor = match operator {
        CurrentOperator::Spin => params.hbar * T::of(0.5),
        CurrentOperator::Charge => params.charge,
    } / (two_pi_hbar * two_pi_hbar);
    let d_theta = T::pi() / T::of(grid.angle_pairs as f64);
    let mut total = [T::zero(); 2];
    for valley in Valley::ALL {
        let up = berry::positive_spin_position(params, basis, valley, Spin::Up)?;
        let op: CMat<T> = match operator {
            CurrentOperator::Spin => {
                let mut signs = [-T::one(); 2];
                signs[up] = T::one();
                linalg::diag_real(&signs)
            }
            CurrentOperator::Charge => linalg::identity(2),
        };
        for &(r, w) in &grid.radial {
            let mut ring = [T::zero(); 2];
            for k in 0..grid.angle_pairs {
                let theta = d_theta * T::of(k as f64);
                let p = [r * theta.cos(), r * theta.sin()];
                let mut pair = [T::zero(); 2];
                for q in [p, [-p[0], -p[1]]] {
                    let inputs = semiclassics::model_inputs(params, model, basis, q)?;
                    let occupation = match e_f {
                        None => linalg::identity::<T>(2),
                        Some(e) => {
                            let occ = [0, 1].map(|i| if inputs.h0[(i, i)].re < e { T::one() } else { T::zero() });
                            linalg::diag_real(&occ)
                        }
                    };
                    // ẋw̃ is linear in the drives; tracing the electric and band parts separately
                    // keeps the small anomalous term from being swamped by the group velocity
                    let data = semiclassics::form_components(&inputs, params)?;
                    let zero = linalg::zeros::<T>(2);
                    let mut electric = data.clone();
                    electric.f_drive = [zero.clone(), zero.clone()];
                    let mut band = data;
                    band.e_drive = [zero.clone(), zero];
                    for sol in [semiclassics::weighted_velocities(&electric), semiclassics::weighted_velocities(&band)] {
                        for a in 0..2 {
                            pair[a] += linalg::trace(&(&op * &sol.weighted_velocity[a] * &occupation)).re;
                        }
                    }
                }
                ring[0] += pair[0];
                ring[1] += pair[1];
            }
            for a in 0..2 {
                total[a] += ring[a] * w * r * d_theta;
            }
        }
    }
    Ok(total.map(|j| j * prefactor))
}

/// Unoriented `σ` in units of `e/2π` from `j^i = σ ε^{ij} 𝓔_j`.
pub fn sigma_from_current<T: Real>(current: [T; 2], params: &ModelParams<T>) -> Result<T> {
    let [ex, ey] = params.e_field;
    let norm2 = ex * ex + ey * ey;
    if !(norm2 > T::zero()) {
        return Err(Error::InvalidParameter { name: "e_field", reason: "linear response needs a nonzero field".into() });
    }
    let sigma = (current[0] * ey - current[1] * ex) / norm2;
    Ok(sigma / (params.charge / T::two_pi()))
}

/// Relative sign of the λ_R → 0 limit of the Ψ-basis curvature against the λ_R = 0 closed form,
/// and the spin Chern numbers on both sides of the limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignConsistencyReport<T> {
    pub probe_momentum: T,
    pub probe_lambda_r: T,
    /// `−ħv²Δ/2E³` at `λ_R = 0`.
    pub fw_spin_up_curvature: T,
    /// `G_Ψ[0, 0] = −(2ħ/p)∂_p(N₁N₂)` at small `λ_R`; the first Ψ slot.
    pub psi_first_slot_curvature: T,
    /// `G_Ψ` on the state whose measured `⟨S_z⟩` is positive.
    pub psi_spin_up_curvature: T,
    /// Sign of `psi_first_slot / fw_spin_up`: −1 when slot order is read as spin order.
    pub relative_sign_slot_order: T,
    /// Sign of `psi_spin_up / fw_spin_up`: +1 with measured spin labels.
    pub relative_sign_measured_spin: T,
    pub raw_spin_chern_fw: T,
    pub raw_spin_chern_psi: T,
    pub orientation_sign: T,
    pub spin_chern_fw: T,
    pub spin_chern_psi: T,
    /// `|C_s(FW, λ_R = 0) − C_s(Ψ, λ_R = probe)|`.
    pub continuity_gap: T,
}

pub fn sign_consistency<T: Real>(params: &ModelParams<T>, probe_lambda_r: T) -> Result<SignConsistencyReport<T>> {
    let so = params.without_rashba();
    let rashba = params.clone().with_lambda_r(probe_lambda_r);
    let p_abs = params.delta_so.max(T::of(0.1)) / params.v_f;
    let p = [p_abs, T::zero()];
    let fw = berry::fw_curvature_scalar(&so, p_abs);
    let g_psi = berry::analytic_curvature(ModelKind::KmRashba, BasisKind::Psi, &rashba, p)?;
    let up = berry::positive_spin_position(&rashba, BasisKind::Psi, Valley::K, Spin::Up)?;
    let slot = g_psi[(0, 0)].re;
    let measured = g_psi[(up, up)].re;
    let sign_of = |x: T| if x >= T::zero() { T::one() } else { -T::one() };
    let dist = Distribution::unity();
    let fw_report = spin_hall_conductivity(&so, ModelKind::KmSo, BasisKind::Fw, &dist, &QuadratureConfig::for_params(&so))?;
    let psi_report = spin_hall_conductivity(&rashba, ModelKind::KmRashba, BasisKind::Psi, &dist, &QuadratureConfig::for_params(&rashba))?;
    Ok(SignConsistencyReport {
        probe_momentum: p_abs,
        probe_lambda_r,
        fw_spin_up_curvature: fw,
        psi_first_slot_curvature: slot,
        psi_spin_up_curvature: measured,
        relative_sign_slot_order: sign_of(slot / fw),
        relative_sign_measured_spin: sign_of(measured / fw),
        raw_spin_chern_fw: fw_report.convention.raw_spin_chern,
        raw_spin_chern_psi: psi_report.convention.raw_spin_chern,
        orientation_sign: T::of(ORIENTATION_SIGN),
        spin_chern_fw: fw_report.spin_chern,
        spin_chern_psi: psi_report.spin_chern,
        continuity_gap: (fw_report.spin_chern - psi_report.spin_chern).abs(),
    })
}
