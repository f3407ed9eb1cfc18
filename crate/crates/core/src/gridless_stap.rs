//! Gridless clutter covariance estimation by reweighted atomic norm
//! minimization (RAM).
//!
//! RAM minimizes the log-det surrogate `ln|S(T(u)) + ζI| + tr(Φ)` over the
//! same PSD / fidelity feasible set as atomic norm minimization (ANM). Each
//! majorization-minimization step linearizes the concave log-det at the
//! current iterate, which yields the weighted SDP
//! `tr((S(T(u_i)) + ζI)^{-1} S(T(u))) + tr(Φ)` solved by [`crate::sdp_core`].
//! Starting from `W = I` makes the first step plain ANM.

use crate::linalg::{add_diagonal, hermitian_eigen, HermitianSolver};
use crate::radar_scene::{HermitianCov, SnapshotSet};
use crate::sdp_core::{
    solve_weighted_subproblem_warm, SdpProblem, SdpSolution, SolverSettings,
};
use crate::toeplitz_ops::TwoLevelToeplitzCoeffs;
use crate::{CMatrix, Result, StapError};

/// Threshold (relative to the largest eigenvalue) above which an eigenvalue
/// of `S(T(u))` counts toward the clutter rank.
pub const RANK_THRESHOLD: f64 = 1e-3;

/// How the data-fidelity radius `ε` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonPolicy {
    /// Use this total radius (already summed over snapshots).
    Explicit(f64),
    /// [`epsilon_default`].
    NoiseStatistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamSettings {
    /// Log-det regularization `ζ`; `None` uses the noise power.
    pub zeta: Option<f64>,
    pub max_mm_iterations: usize,
    /// Stop when `‖u_{i+1} − u_i‖ / ‖u_i‖` falls below this.
    pub mm_tolerance: f64,
    pub epsilon_policy: EpsilonPolicy,
    pub sdp: SolverSettings,
}

impl Default for RamSettings {
    fn default() -> Self {
        Self {
            zeta: None,
            max_mm_iterations: 12,
            mm_tolerance: 1e-3,
            epsilon_policy: EpsilonPolicy::NoiseStatistic,
            sdp: SolverSettings::default(),
        }
    }
}

impl RamSettings {
    fn resolve_zeta(&self, noise_power: f64) -> Result<f64> {
        let zeta = self.zeta.unwrap_or(noise_power);
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(StapError::InvalidSettings(format!(
                "zeta must be positive (got {zeta}); set it explicitly for noise-free data"
            )));
        }
        Ok(zeta)
    }

    fn resolve_epsilon(&self, noise_power: f64, n: usize, m: usize, k: usize) -> Result<f64> {
        match self.epsilon_policy {
            EpsilonPolicy::Explicit(eps) if eps >= 0.0 && eps.is_finite() => Ok(eps),
            EpsilonPolicy::Explicit(eps) => Err(StapError::InvalidSettings(format!(
                "explicit epsilon must be finite and nonnegative (got {eps})"
            ))),
            EpsilonPolicy::NoiseStatistic => Ok(epsilon_default(noise_power, n, m, k)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_mm_iterations == 0 {
            return Err(StapError::InvalidSettings("max_mm_iterations must be at least 1".into()));
        }
        if !(self.mm_tolerance >= 0.0) {
            return Err(StapError::InvalidSettings("mm_tolerance must be nonnegative".into()));
        }
        if let Some(z) = self.zeta {
            if !(z > 0.0 && z.is_finite()) {
                return Err(StapError::InvalidSettings("zeta must be positive".into()));
            }
        }
        self.sdp.validate()
    }
}

/// Per-MM-iteration solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MmStep {
    pub sdp_iterations: usize,
    pub sdp_converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Weighted subproblem objective `tr(W S(T(u))) + tr(Φ)`.
    pub subproblem_objective: f64,
    /// Relative change of `u` from the previous MM iterate.
    pub relative_change: f64,
    /// Re-solves at tighter tolerance after the surrogate rose.
    pub refinements: usize,
}

#[derive(Debug, Clone)]
pub struct RamResult {
    pub u: TwoLevelToeplitzCoeffs,
    /// Denoised clutter, `NM × K`.
    pub x_c: CMatrix,
    pub phi: CMatrix,
    /// `ln|S(T(u_i)) + ζI| + tr(Φ_i)` after each MM iteration.
    pub surrogate_objectives: Vec<f64>,
    pub mm_iterations: usize,
    pub steps: Vec<MmStep>,
    /// All subproblems converged and the MM loop met its tolerance (or ran
    /// the single ANM step).
    pub converged: bool,
    pub zeta: f64,
    pub epsilon: f64,
}

impl RamResult {
    /// `S(T(u))`.
    pub fn toeplitz(&self) -> CMatrix {
        crate::toeplitz_ops::build_unchecked(&self.u)
    }
}

/// Covariance rebuilt from the recovered Toeplitz structure.
#[derive(Debug, Clone)]
pub struct CcmEstimate {
    pub matrix: HermitianCov,
    pub clutter_rank_estimate: usize,
    pub noise_power_used: f64,
}

/// Default fidelity radius `K σ² (NM + 2√NM)`: the mean squared noise norm
/// plus two standard deviations, per snapshot.
pub fn epsilon_default(noise_power: f64, n: usize, m: usize, k: usize) -> f64 {
    let d = (n * m) as f64;
    k as f64 * noise_power * (d + 2.0 * d.sqrt())
}

/// `ln|A|` for Hermitian positive-definite `A`.
fn log_det(a: &CMatrix) -> Result<f64> {
    let chol = a.clone().cholesky().ok_or(StapError::Singular)?;
    let l = chol.l_dirty();
    Ok((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

fn surrogate(u_matrix: &CMatrix, phi: &CMatrix, zeta: f64) -> Result<f64> {
    Ok(log_det(&add_diagonal(u_matrix, zeta))? + phi.trace().re)
}

fn dims_from(set: &SnapshotSet, n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(StapError::InvalidDimension("N and M must be at least 1".into()));
    }
    if set.dim() != n * m {
        return Err(StapError::DimensionMismatch { expected: n * m, found: set.dim() });
    }
    Ok(())
}

/// Atomic norm minimization: the `W = I` subproblem alone.
pub fn anm_solve(
    set: &SnapshotSet,
    n: usize,
    m: usize,
    noise_power: f64,
    settings: &RamSettings,
) -> Result<RamResult> {
    let single = RamSettings {
        max_mm_iterations: 1,
        ..settings.clone()
    };
    ram_solve(set, n, m, noise_power, &single)
}

/// Relative surrogate increase that triggers a tighter re-solve.
const ASCENT_SLACK: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 2;

/// Reweighted atomic norm minimization by MM iterations.
///
/// Inexact subproblem solves can break MM descent. When the surrogate rises,
/// the subproblem is re-solved warm at a tenfold tighter tolerance, at most
/// twice.
///
/// A subproblem that fails to converge ends the loop; the result then holds
/// the best iterate so far with `converged = false`.
pub fn ram_solve(
    set: &SnapshotSet,
    n: usize,
    m: usize,
    noise_power: f64,
    settings: &RamSettings,
) -> Result<RamResult> {
    settings.validate()?;
    dims_from(set, n, m)?;
    let k = set.len();
    let d = n * m;
    let zeta = settings.resolve_zeta(noise_power)?;
    let epsilon = settings.resolve_epsilon(noise_power, n, m, k)?;
    let data = set.to_matrix();

    let mut weight = CMatrix::identity(d, d);
    let mut previous: Option<SdpSolution> = None;
    let mut best: Option<(SdpSolution, f64)> = None;
    let mut surrogates: Vec<f64> = Vec::new();
    let mut steps = Vec::new();
    let mut converged = false;

    for iter in 0..settings.max_mm_iterations {
        let problem = SdpProblem::new(weight.clone(), data.clone(), epsilon, n, m)?;
        let mut sdp = settings.sdp.clone();
        let mut sol = solve_weighted_subproblem_warm(&problem, &sdp, previous.as_ref())?;
        let mut value = surrogate(&sol.iterate.toeplitz(), &sol.iterate.phi, zeta)?;
        let mut refinements = 0;
        if let Some(&last) = surrogates.last() {
            while sol.converged && value > last + ASCENT_SLACK * last.abs() && refinements < MAX_REFINEMENTS {
                sdp.tolerance *= 0.1;
                sdp.max_iterations *= 2;
                sol = solve_weighted_subproblem_warm(&problem, &sdp, Some(&sol))?;
                value = surrogate(&sol.iterate.toeplitz(), &sol.iterate.phi, zeta)?;
                refinements += 1;
            }
        }
        let t = sol.iterate.toeplitz();

        let relative_change = match &previous {
            Some(prev) => {
                let du = sol.iterate.u.sub(&prev.iterate.u).norm();
                du / prev.iterate.u.norm().max(1e-12)
            }
            None => f64::INFINITY,
        };
        steps.push(MmStep {
            sdp_iterations: sol.iterations,
            sdp_converged: sol.converged,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            subproblem_objective: sol.objective,
            relative_change,
            refinements,
        });

        if !sol.converged {
            // keep the best converged iterate, if any
            if best.is_none() {
                surrogates.push(value);
                best = Some((sol, value));
            }
            converged = false;
            break;
        }

        surrogates.push(value);
        best = Some((sol.clone(), value));

        if iter + 1 == settings.max_mm_iterations {
            converged = settings.max_mm_iterations == 1;
            break;
        }
        if relative_change < settings.mm_tolerance {
            converged = true;
            break;
        }

        let shifted = add_diagonal(&t, zeta);
        weight = HermitianSolver::new(&shifted)?.inverse()?;
        weight = crate::linalg::hermitian_part(&weight);
        previous = Some(sol);
    }

    let (sol, _) = best.expect("at least one MM iteration runs");
    Ok(RamResult {
        u: sol.iterate.u,
        x_c: sol.iterate.x_c,
        phi: sol.iterate.phi,
        mm_iterations: surrogates.len(),
        surrogate_objectives: surrogates,
        steps,
        converged,
        zeta,
        epsilon,
    })
}

/// Covariance estimate `(1/L) Σ_l U diag(|U^H x_{c,l}|²) U^H + σ² I` from the
/// eigenbasis `U` of `S(T(u))`, with `L` the number of denoised snapshots.
pub fn ccm_from_toeplitz(result: &RamResult, noise_power: f64) -> Result<CcmEstimate> {
    let t = result.toeplitz();
    let d = t.nrows();
    let eig = hermitian_eigen(&t);
    let top = eig.max_value();
    let clutter_rank_estimate = if top > 0.0 {
        eig.values.iter().filter(|&&l| l > RANK_THRESHOLD * top).count()
    } else {
        0
    };
    let l = result.x_c.ncols();
    let mut power = vec![0.0; d];
    for col in result.x_c.column_iter() {
        let proj = eig.vectors.adjoint() * col;
        for (p, z) in power.iter_mut().zip(proj.iter()) {
            *p += z.norm_sqr() / l as f64;
        }
    }
    let mut r = CMatrix::identity(d, d).scale(noise_power);
    for (idx, &p) in power.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let v = eig.vectors.column(idx);
        r.ger(crate::C64::new(p, 0.0), &v, &v.map(|z| z.conj()), crate::C64::new(1.0, 0.0));
    }
    Ok(CcmEstimate {
        matrix: HermitianCov::new(crate::linalg::hermitian_part(&r))?,
        clutter_rank_estimate,
        noise_power_used: noise_power,
    })
}
