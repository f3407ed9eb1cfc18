//! On-grid sparse-recovery STAP: a discretized angle-Doppler steering
//! dictionary and the regularized FOCUSS solver (single and joint-sparse
//! multiple measurement vectors).

use crate::linalg::HermitianSolver;
use crate::radar_scene::{space_steering, time_steering, wrap_frequency, HermitianCov, RadarConfig, SnapshotSet};
use crate::{CMatrix, Result, StapError, C64};

/// Profile energy below this fraction of the maximum is dropped before the
/// covariance is rebuilt.
pub const TRUNCATION_RATIO: f64 = 1e-6;

/// Space-time steering dictionary `Ψ = S_d ⊗ S_s`.
#[derive(Debug, Clone)]
pub struct SteeringDictionary {
    atoms: CMatrix,
    doppler_grid: Vec<f64>,
    spatial_grid: Vec<f64>,
    rho_d: usize,
    rho_s: usize,
    n: usize,
    m: usize,
}

impl SteeringDictionary {
    pub fn atoms(&self) -> &CMatrix {
        &self.atoms
    }

    pub fn doppler_grid(&self) -> &[f64] {
        &self.doppler_grid
    }

    pub fn spatial_grid(&self) -> &[f64] {
        &self.spatial_grid
    }

    pub fn oversampling(&self) -> (usize, usize) {
        (self.rho_d, self.rho_s)
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    /// Column index of grid point `(doppler_idx, spatial_idx)`.
    pub fn column(&self, doppler_idx: usize, spatial_idx: usize) -> usize {
        doppler_idx * self.spatial_grid.len() + spatial_idx
    }

    /// `(doppler_idx, spatial_idx)` of a column.
    pub fn grid_point(&self, column: usize) -> (usize, usize) {
        (column / self.spatial_grid.len(), column % self.spatial_grid.len())
    }
}

/// `count` uniform points over (−0.5, 0.5], ascending, containing 0.
fn frequency_grid(count: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..count).map(|k| wrap_frequency(k as f64 / count as f64)).collect();
    g.sort_by(f64::total_cmp);
    g
}

/// Dictionary with `ρ_d·N` Doppler and `ρ_s·M` spatial grid points, columns
/// ordered Doppler-major.
pub fn build_dictionary(config: &RadarConfig, rho_s: usize, rho_d: usize) -> Result<SteeringDictionary> {
    config.validate()?;
    if rho_s == 0 || rho_d == 0 {
        return Err(StapError::InvalidSettings("oversampling factors must be at least 1".into()));
    }
    let (n, m) = (config.num_pulses, config.num_elements);
    let doppler_grid = frequency_grid(rho_d * n);
    let spatial_grid = frequency_grid(rho_s * m);
    let sd: Vec<_> = doppler_grid.iter().map(|&f| time_steering(f, n)).collect::<Result<_>>()?;
    let ss: Vec<_> = spatial_grid.iter().map(|&f| space_steering(f, m)).collect::<Result<_>>()?;
    let mut atoms = CMatrix::zeros(n * m, sd.len() * ss.len());
    for (p, d) in sd.iter().enumerate() {
        for (q, s) in ss.iter().enumerate() {
            atoms.set_column(p * ss.len() + q, &d.kronecker(s));
        }
    }
    Ok(SteeringDictionary { atoms, doppler_grid, spatial_grid, rho_d, rho_s, n, m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocussSettings {
    /// Tikhonov regularization `λ`.
    pub lambda: f64,
    /// Norm exponent `p ∈ (0, 1]`.
    pub p: f64,
    pub max_iterations: usize,
    /// Relative change of the profile that ends the iteration.
    pub tolerance: f64,
}

impl Default for FocussSettings {
    fn default() -> Self {
        Self { lambda: 1e-4, p: 0.8, max_iterations: 30, tolerance: 1e-4 }
    }
}

/// Recovered clutter angle-Doppler profile.
#[derive(Debug, Clone)]
pub struct AngleDopplerProfile {
    /// Complex amplitudes, `atoms × K`.
    pub amplitudes: CMatrix,
    /// `‖Ψ a − x‖² + (2λ/p) Σ_i ‖a_i‖^p` after each iteration (row norms
    /// for multiple snapshots); FOCUSS is a majorization-minimization scheme
    /// for this objective, so the sequence is nonincreasing.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl AngleDopplerProfile {
    /// `|a_{i,k}|`.
    pub fn magnitudes(&self) -> nalgebra::DMatrix<f64> {
        self.amplitudes.map(|z| z.norm())
    }

    /// Mean power per grid point, `(1/K) Σ_k |a_{i,k}|²`.
    pub fn mean_power(&self) -> Vec<f64> {
        let k = self.amplitudes.ncols() as f64;
        self.amplitudes
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() / k)
            .collect()
    }
}

/// `‖Ψ A − X‖_F² + (2λ/p) Σ_i ‖A_{i,:}‖^p`.
pub fn focuss_objective(dict: &SteeringDictionary, data: &CMatrix, amplitudes: &CMatrix, settings: &FocussSettings) -> f64 {
    let resid = (dict.atoms() * amplitudes - data).norm_squared();
    let penalty: f64 = amplitudes
        .row_iter()
        .map(|r| r.norm().powf(settings.p))
        .sum();
    resid + 2.0 * settings.lambda / settings.p * penalty
}

/// Regularized (M-)FOCUSS.
///
/// Starting from the matched filter `Ψ^H X`, iterate
/// `A ← W_f Ψ_W^H (Ψ_W Ψ_W^H + λI)^{-1} X` with `Ψ_W = Ψ W_f` and
/// `W_f = diag(‖A_{i,:}‖^{1−p/2})`.
pub fn focuss_solve(dict: &SteeringDictionary, set: &SnapshotSet, settings: &FocussSettings) -> Result<AngleDopplerProfile> {
    if set.dim() != dict.dim() {
        return Err(StapError::DimensionMismatch { expected: dict.dim(), found: set.dim() });
    }
    if !(settings.p > 0.0 && settings.p <= 1.0) {
        return Err(StapError::InvalidSettings("FOCUSS exponent p must lie in (0, 1]".into()));
    }
    if !(settings.lambda > 0.0) {
        return Err(StapError::InvalidSettings("FOCUSS lambda must be positive".into()));
    }
    if settings.max_iterations == 0 {
        return Err(StapError::InvalidSettings("FOCUSS max_iterations must be at least 1".into()));
    }
    let data = set.to_matrix();
    let psi = dict.atoms();
    let (d, g) = (psi.nrows(), psi.ncols());

    if data.norm() == 0.0 {
        return Ok(AngleDopplerProfile {
            amplitudes: CMatrix::zeros(g, data.ncols()),
            objective_history: vec![0.0],
            iterations: 0,
            converged: true,
        });
    }

    let mut a = psi.adjoint() * &data;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let exponent = 1.0 - settings.p / 2.0;

    for it in 1..=settings.max_iterations {
        iterations = it;
        let weights: Vec<f64> = a.row_iter().map(|r| r.norm().powf(exponent)).collect();
        // Ψ_W = Ψ diag(w); gram = Ψ diag(w²) Ψ^H + λI
        let mut psi_w = psi.clone();
        for (j, &w) in weights.iter().enumerate() {
            psi_w.column_mut(j).scale_mut(w);
        }
        let mut gram = &psi_w * psi_w.adjoint();
        for i in 0..d {
            gram[(i, i)] += C64::new(settings.lambda, 0.0);
        }
        let gram = crate::linalg::hermitian_part(&gram);
        let solved = HermitianSolver::new(&gram)?.solve_matrix(&data)?;
        let mut next = psi_w.adjoint() * solved;
        for (j, &w) in weights.iter().enumerate() {
            next.row_mut(j).scale_mut(w);
        }
        let change = (&next - &a).norm() / a.norm().max(f64::MIN_POSITIVE);
        a = next;
        history.push(focuss_objective(dict, &data, &a, settings));
        if change < settings.tolerance {
            converged = true;
            break;
        }
    }

    Ok(AngleDopplerProfile { amplitudes: a, objective_history: history, iterations, converged })
}

/// `(1/K) Σ_k Σ_i |a_{i,k}|² Ψ_i Ψ_i^H + σ² I`, after dropping grid points
/// whose mean power is below [`TRUNCATION_RATIO`] of the maximum.
pub fn ongrid_ccm(profile: &AngleDopplerProfile, dict: &SteeringDictionary, noise_power: f64) -> Result<HermitianCov> {
    if profile.amplitudes.nrows() != dict.num_atoms() {
        return Err(StapError::DimensionMismatch { expected: dict.num_atoms(), found: profile.amplitudes.nrows() });
    }
    let power = profile.mean_power();
    let peak = power.iter().cloned().fold(0.0, f64::max);
    let d = dict.dim();
    let mut r = CMatrix::identity(d, d).scale(noise_power);
    if peak > 0.0 {
        for (i, &p) in power.iter().enumerate() {
            if p < TRUNCATION_RATIO * peak {
                continue;
            }
            let col = dict.atoms().column(i);
            r.ger(C64::new(p, 0.0), &col, &col.map(|z| z.conj()), C64::new(1.0, 0.0));
        }
    }
    HermitianCov::new(crate::linalg::hermitian_part(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_scene::{space_time_steering, Snapshot};

    fn small_config(n: usize, m: usize) -> RadarConfig {
        let mut cfg = RadarConfig::benchmark(0.0);
        cfg.num_pulses = n;
        cfg.num_elements = m;
        cfg
    }

    #[test]
    fn dft_dictionary() {
        let dict = build_dictionary(&small_config(2, 2), 1, 1).unwrap();
        assert_eq!(dict.num_atoms(), 4);
        assert_eq!(dict.doppler_grid(), &[0.0, 0.5]);
        let gram = dict.atoms().adjoint() * dict.atoms();
        // orthogonal DFT set
        assert!((gram - CMatrix::identity(4, 4).scale(4.0)).norm() < 1e-12);
        for p in 0..2 {
            for q in 0..2 {
                let s = space_time_steering(dict.doppler_grid()[p], dict.spatial_grid()[q], 2, 2).unwrap();
                assert!((dict.atoms().column(dict.column(p, q)) - s).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn benchmark_dictionary_size() {
        let dict = build_dictionary(&RadarConfig::benchmark(0.0), 6, 6).unwrap();
        assert_eq!(dict.num_atoms(), 2304);
        assert_eq!(dict.dim(), 64);
        assert!(dict.doppler_grid().contains(&0.0));
        for col in dict.atoms().column_iter().step_by(97) {
            assert!((col.norm_squared() - 64.0).abs() < 1e-10);
        }
        assert!(build_dictionary(&RadarConfig::benchmark(0.0), 0, 6).is_err());
    }

    #[test]
    fn recovers_single_on_grid_atom() {
        let cfg = small_config(4, 4);
        let dict = build_dictionary(&cfg, 2, 2).unwrap();
        let target = dict.column(3, 5);
        let amp = C64::new(2.0, -1.0);
        let x = dict.atoms().column(target).map(|z| z * amp);
        let set = SnapshotSet::new(vec![Snapshot::new(x)], 0).unwrap();
        let settings = FocussSettings { lambda: 1e-10, max_iterations: 200, tolerance: 1e-12, ..Default::default() };
        let prof = focuss_solve(&dict, &set, &settings).unwrap();
        let mags = prof.magnitudes();
        // least squares on the true support recovers amp exactly
        assert!((mags[(target, 0)] - amp.norm()).abs() < 1e-6);
        let others: f64 = (0..dict.num_atoms()).filter(|&i| i != target).map(|i| mags[(i, 0)]).fold(0.0, f64::max);
        assert!(others < 1e-6, "largest off-support magnitude {others}");
    }

    #[test]
    fn zero_data_gives_zero_profile() {
        let cfg = small_config(3, 3);
        let dict = build_dictionary(&cfg, 2, 2).unwrap();
        let set = SnapshotSet::new(vec![Snapshot::new(crate::CVector::zeros(9))], 0).unwrap();
        let prof = focuss_solve(&dict, &set, &FocussSettings::default()).unwrap();
        assert_eq!(prof.amplitudes.norm(), 0.0);
        let r = ongrid_ccm(&prof, &dict, 1.5).unwrap();
        assert!((r.matrix() - CMatrix::identity(9, 9).scale(1.5)).norm() < 1e-15);
    }

    #[test]
    fn ongrid_ccm_single_point_and_mmv_average() {
        let cfg = small_config(2, 3);
        let dict = build_dictionary(&cfg, 2, 2).unwrap();
        let i = dict.column(1, 2);
        let mut amps = CMatrix::zeros(dict.num_atoms(), 1);
        amps[(i, 0)] = C64::new(0.0, 2.0);
        let smv = AngleDopplerProfile { amplitudes: amps.clone(), objective_history: vec![], iterations: 0, converged: true };
        let r = ongrid_ccm(&smv, &dict, 1.0).unwrap();
        let col = dict.atoms().column(i).into_owned();
        let expected = &col * col.adjoint() * C64::new(4.0, 0.0) + CMatrix::identity(6, 6);
        assert!((r.matrix() - &expected).norm() < 1e-12);

        let mmv = AngleDopplerProfile {
            amplitudes: CMatrix::from_columns(&[amps.column(0).into_owned(), amps.column(0).into_owned(), amps.column(0).into_owned()]),
            objective_history: vec![],
            iterations: 0,
            converged: true,
        };
        let r3 = ongrid_ccm(&mmv, &dict, 1.0).unwrap();
        assert!((r3.matrix() - &expected).norm() < 1e-12);
    }

    #[test]
    fn focuss_rejects_bad_input() {
        let dict = build_dictionary(&small_config(2, 2), 2, 2).unwrap();
        let set = SnapshotSet::new(vec![Snapshot::new(crate::CVector::zeros(6))], 0).unwrap();
        assert!(matches!(focuss_solve(&dict, &set, &FocussSettings::default()), Err(StapError::DimensionMismatch { .. })));
        let set = SnapshotSet::new(vec![Snapshot::new(crate::CVector::zeros(4))], 0).unwrap();
        let bad = FocussSettings { p: 1.5, ..Default::default() };
        assert!(focuss_solve(&dict, &set, &bad).is_err());
    }

    #[test]
    fn focuss_objective_is_monotone() {
        let mut cfg = RadarConfig::benchmark(0.8);
        cfg.num_pulses = 4;
        cfg.num_elements = 4;
        let scenario = crate::radar_scene::make_clutter_scenario(&cfg).unwrap();
        let set = crate::radar_scene::draw_snapshots(&scenario, &cfg, 3, 11).unwrap();
        let dict = build_dictionary(&cfg, 4, 4).unwrap();
        let settings = FocussSettings { max_iterations: 60, tolerance: 0.0, ..Default::default() };
        let profile = focuss_solve(&dict, &set, &settings).unwrap();
        assert_eq!(profile.objective_history.len(), 60);
        for w in profile.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} -> {}", w[0], w[1]);
        }
    }
}
