//! STAP figures of merit: adaptive weights, SINR loss, eigenspectra and
//! Capon angle-Doppler maps.

use crate::linalg::{add_diagonal, hermitian_eigenvalues, HermitianSolver};
use crate::radar_scene::{space_time_steering, HermitianCov, RadarConfig};
use crate::{CMatrix, CVector, Result, StapError};

/// Floor used for zero or negative eigenvalues in dB spectra.
pub const EIGEN_FLOOR_DB: f64 = -320.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SinrLossCurve {
    pub doppler_grid: Vec<f64>,
    pub loss_db: Vec<f64>,
}

impl SinrLossCurve {
    /// Grid point with the smallest loss (the clutter notch).
    pub fn notch(&self) -> Option<(f64, f64)> {
        self.doppler_grid
            .iter()
            .zip(&self.loss_db)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, l)| (*f, *l))
    }
}

/// Minimum-variance power on a Doppler × spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMap {
    pub doppler_grid: Vec<f64>,
    pub spatial_grid: Vec<f64>,
    /// Row-major, `power[p * spatial_grid.len() + q]` at
    /// `(doppler_grid[p], spatial_grid[q])`.
    pub power: Vec<f64>,
}

impl SpectrumMap {
    pub fn at(&self, doppler_idx: usize, spatial_idx: usize) -> f64 {
        self.power[doppler_idx * self.spatial_grid.len() + spatial_idx]
    }

    /// `(doppler_idx, spatial_idx)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let idx = self
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (idx / self.spatial_grid.len(), idx % self.spatial_grid.len())
    }
}

/// `n` uniform points over (−0.5, 0.5], ending at 0.5.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -0.5 + (k + 1) as f64 / n as f64).collect()
}

/// Adaptive weight `(R̂ + δI)^{-1} s`.
pub fn stap_weight(cov: &HermitianCov, steering: &CVector, loading: f64) -> Result<CVector> {
    if steering.len() != cov.dim() {
        return Err(StapError::DimensionMismatch { expected: cov.dim(), found: steering.len() });
    }
    let solver = HermitianSolver::new(&add_diagonal(cov.matrix(), loading))?;
    solver.solve_vector(steering)
}

/// `10 log10( σ² |w^H s|² / (s^H s · w^H R w) )`.
pub fn sinr_loss(w: &CVector, exact: &HermitianCov, steering: &CVector, noise_power: f64) -> Result<f64> {
    let dim = exact.dim();
    for len in [w.len(), steering.len()] {
        if len != dim {
            return Err(StapError::DimensionMismatch { expected: dim, found: len });
        }
    }
    let rw = exact.matrix() * w;
    let denom = w.dotc(&rw).re * steering.norm_squared();
    if !(denom > 0.0) {
        return Err(StapError::UndefinedSinr);
    }
    let num = noise_power * w.dotc(steering).norm_sqr();
    Ok(10.0 * (num / denom).log10())
}

/// SINR loss of the filter built from `estimate` against `exact`, over a
/// Doppler grid at fixed target spatial frequency.
pub fn sinr_loss_curve(
    estimate: &HermitianCov,
    exact: &HermitianCov,
    config: &RadarConfig,
    doppler_grid: &[f64],
    target_spatial_freq: f64,
    loading: f64,
) -> Result<SinrLossCurve> {
    if doppler_grid.is_empty() {
        return Err(StapError::InvalidDimension("Doppler grid is empty".into()));
    }
    let solver = HermitianSolver::new(&add_diagonal(estimate.matrix(), loading))?;
    let loss_db = doppler_grid
        .iter()
        .map(|&fd| {
            let s = space_time_steering(fd, target_spatial_freq, config.num_pulses, config.num_elements)?;
            let w = solver.solve_vector(&s)?;
            sinr_loss(&w, exact, &s, config.noise_power)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SinrLossCurve { doppler_grid: doppler_grid.to_vec(), loss_db })
}

/// Eigenvalues in dB, descending, floored at [`EIGEN_FLOOR_DB`].
pub fn eigenspectrum(cov: &HermitianCov) -> Vec<f64> {
    eigenspectrum_of(cov.matrix())
}

pub fn eigenspectrum_of(matrix: &CMatrix) -> Vec<f64> {
    let mut ev = hermitian_eigenvalues(matrix);
    ev.reverse();
    ev.into_iter()
        .map(|l| if l > 0.0 { (10.0 * l.log10()).max(EIGEN_FLOOR_DB) } else { EIGEN_FLOOR_DB })
        .collect()
}

/// Capon spectrum `1 / (s^H (R̂ + δI)^{-1} s)` on the grid.
pub fn capon_spectrum(
    cov: &HermitianCov,
    n: usize,
    m: usize,
    doppler_grid: &[f64],
    spatial_grid: &[f64],
    loading: f64,
) -> Result<SpectrumMap> {
    if n * m != cov.dim() {
        return Err(StapError::DimensionMismatch { expected: cov.dim(), found: n * m });
    }
    let inv = HermitianSolver::new(&add_diagonal(cov.matrix(), loading))?.inverse()?;
    let mut power = Vec::with_capacity(doppler_grid.len() * spatial_grid.len());
    for &fd in doppler_grid {
        for &fs in spatial_grid {
            let s = space_time_steering(fd, fs, n, m)?;
            let q = s.dotc(&(&inv * &s)).re;
            power.push(if q > 0.0 { 1.0 / q } else { f64::INFINITY });
        }
    }
    Ok(SpectrumMap {
        doppler_grid: doppler_grid.to_vec(),
        spatial_grid: spatial_grid.to_vec(),
        power,
    })
}
