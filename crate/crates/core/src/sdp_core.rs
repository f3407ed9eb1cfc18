//! ADMM solver for the weighted trace-minimization SDP
//!
//! ```text
//! minimize    tr(W · S(T(u))) + tr(Φ)
//! subject to  [[Φ, X_c^H], [X_c, S(T(u))]] ⪰ 0
//!             ‖X_c − X‖_F² ≤ ε
//! ```
//!
//! The structured variable `(Φ, X_c, u)` and a free PSD copy `Y` of the
//! assembled block matrix are split and coupled through `A(Φ, X_c, u) = Y`.
//! Each iteration:
//!
//! 1. minimizes the linear objective plus the augmented quadratic over the
//!    structured set in closed form (`Φ` by a shifted copy, `X_c` by a
//!    fidelity-ball projection, `u` by a least-squares Toeplitz fit);
//! 2. projects the over-relaxed estimate onto the PSD cone;
//! 3. updates the scaled dual.
//!
//! Reweighted problems have weights whose spectrum spans many decades. The
//! solver works on the congruent matrix `diag(I, L) A diag(I, L)` with
//! `L = W^{1/2}`, where the objective becomes a plain trace; the PSD cone is
//! invariant under the congruence, so the optimum is unchanged.
//!
//! The penalty is rebalanced every few iterations when the primal and dual
//! residuals drift apart. Data are normalized to unit per-entry scale
//! internally; the optimum is positively homogeneous of degree one in
//! `(X, √ε)`, so results are mapped back exactly.

use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, hermitian_part, inner, relative_asymmetry};
use crate::toeplitz_ops::{
    build_unchecked, coeffs_from_real, hermitian_parameter_count, real_adjoint, toeplitz_project_coeffs,
    TwoLevelToeplitzCoeffs,
};
use crate::{CMatrix, Result, StapError};
use nalgebra::{DMatrix, DVector};

/// Penalty rebalancing cadence and thresholds.
const REBALANCE_EVERY: usize = 10;
const REBALANCE_RATIO: f64 = 3.0;
const REBALANCE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Initial ADMM penalty `ρ`.
    pub rho: f64,
    pub max_iterations: usize,
    /// Relative primal and dual residual target.
    pub tolerance: f64,
    /// Over-relaxation `α ∈ [1, 2)`.
    pub over_relaxation: f64,
    /// Rebalance `ρ` from the residual ratio.
    pub adaptive_rho: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iterations: 5000,
            tolerance: 1e-6,
            over_relaxation: 1.6,
            adaptive_rho: true,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(StapError::InvalidSettings("rho must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(StapError::InvalidSettings("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(StapError::InvalidSettings("tolerance must be positive".into()));
        }
        if !(1.0..2.0).contains(&self.over_relaxation) {
            return Err(StapError::InvalidSettings("over_relaxation must lie in [1, 2)".into()));
        }
        Ok(())
    }
}

/// One weighted subproblem instance.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    weight: CMatrix,
    data: CMatrix,
    fidelity_radius: f64,
    n: usize,
    m: usize,
}

impl SdpProblem {
    /// `weight` must be `NM × NM` Hermitian PSD (to 1e−10 relative);
    /// `data` is `NM × K`; `fidelity_radius` bounds `‖X_c − X‖_F²`.
    pub fn new(weight: CMatrix, data: CMatrix, fidelity_radius: f64, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 || data.ncols() == 0 {
            return Err(StapError::InvalidDimension("N, M and K must be at least 1".into()));
        }
        let dim = n * m;
        if data.nrows() != dim {
            return Err(StapError::DimensionMismatch { expected: dim, found: data.nrows() });
        }
        if weight.nrows() != dim || weight.ncols() != dim {
            return Err(StapError::DimensionMismatch { expected: dim, found: weight.nrows() });
        }
        if !(fidelity_radius >= 0.0 && fidelity_radius.is_finite()) {
            return Err(StapError::InvalidSettings("fidelity radius must be finite and nonnegative".into()));
        }
        let asym = relative_asymmetry(&weight);
        if asym > 1e-10 {
            return Err(StapError::NotHermitian(asym));
        }
        let weight = hermitian_part(&weight);
        let ev = hermitian_eigenvalues(&weight);
        let top = ev.last().copied().unwrap_or(0.0).abs();
        if ev[0] < -1e-10 * top.max(1e-300) {
            return Err(StapError::NotPsd(ev[0]));
        }
        Ok(Self { weight, data, fidelity_radius, n, m })
    }

    pub fn weight(&self) -> &CMatrix {
        &self.weight
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn fidelity_radius(&self) -> f64 {
        self.fidelity_radius
    }

    /// `(N, M, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.data.ncols())
    }

    /// `tr(W · S(T(u))) + tr(Φ)`.
    pub fn objective(&self, iterate: &StructuredPsdIterate) -> f64 {
        let t = build_unchecked(&iterate.u);
        inner(&self.weight, &t) + iterate.phi.trace().re
    }
}

/// `(Φ, X_c, u)`, the variables of one subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPsdIterate {
    pub phi: CMatrix,
    pub x_c: CMatrix,
    pub u: TwoLevelToeplitzCoeffs,
}

impl StructuredPsdIterate {
    pub fn zeros(n: usize, m: usize, k: usize) -> Result<Self> {
        Ok(Self {
            phi: CMatrix::zeros(k, k),
            x_c: CMatrix::zeros(n * m, k),
            u: TwoLevelToeplitzCoeffs::zeros(n, m)?,
        })
    }

    /// `[[Φ, X_c^H], [X_c, S(T(u))]]`.
    pub fn assemble(&self) -> CMatrix {
        assemble_blocks(&self.phi, &self.x_c, &build_unchecked(&self.u))
    }

    /// `S(T(u))`.
    pub fn toeplitz(&self) -> CMatrix {
        build_unchecked(&self.u)
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            phi: self.phi.scale(c),
            x_c: self.x_c.scale(c),
            u: self.u.scale(c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub iterate: StructuredPsdIterate,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// PSD copy of the assembled matrix (original units).
    pub psd_copy: CMatrix,
    /// Unscaled dual multiplier for `A(Φ, X_c, u) = Y`.
    pub dual: CMatrix,
    /// Final penalty.
    pub rho: f64,
}

impl SdpSolution {
    /// Wrap a hand-built iterate, using its own assembled matrix as the PSD
    /// copy. Useful for scoring reference points with [`kkt_residuals`].
    pub fn from_iterate(problem: &SdpProblem, iterate: StructuredPsdIterate) -> Self {
        let psd_copy = iterate.assemble();
        let d = psd_copy.nrows();
        Self {
            objective: problem.objective(&iterate),
            iterate,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            converged: false,
            psd_copy,
            dual: CMatrix::zeros(d, d),
            rho: 1.0,
        }
    }
}

/// Feasibility and optimality diagnostics for a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResiduals {
    /// `max(0, −λ_min)` of the assembled matrix.
    pub psd_violation: f64,
    /// `psd_violation` divided by the largest eigenvalue magnitude.
    pub psd_violation_relative: f64,
    /// `‖X_c − X‖_F² − ε`; nonpositive when feasible.
    pub fidelity_slack: f64,
    /// Relative distance of the PSD copy from the structured affine set.
    pub structure_violation: f64,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

fn assemble_blocks(phi: &CMatrix, x_c: &CMatrix, t: &CMatrix) -> CMatrix {
    let k = phi.nrows();
    let d = t.nrows();
    let mut out = CMatrix::zeros(k + d, k + d);
    out.view_mut((0, 0), (k, k)).copy_from(phi);
    out.view_mut((k, 0), (d, k)).copy_from(x_c);
    out.view_mut((0, k), (k, d)).copy_from(&x_c.adjoint());
    out.view_mut((k, k), (d, d)).copy_from(t);
    out
}

/// Nearest point of the structured affine set `{A(Φ, X_c, u)}` to `y`.
fn structured_projection(y: &CMatrix, k: usize, n: usize, m: usize) -> CMatrix {
    let d = n * m;
    let phi = hermitian_part(&y.view((0, 0), (k, k)).into_owned());
    let x_c = (y.view((k, 0), (d, k)).into_owned() + y.view((0, k), (k, d)).adjoint()).scale(0.5);
    let u = toeplitz_project_coeffs(&y.view((k, k), (d, d)).into_owned(), n, m)
        .expect("dimensions checked by caller");
    assemble_blocks(&phi, &x_c, &build_unchecked(&u))
}

fn project_ball(v: &CMatrix, center: &CMatrix, radius: f64) -> CMatrix {
    let diff = v - center;
    let dist = diff.norm();
    if dist <= radius {
        v.clone()
    } else if radius == 0.0 {
        center.clone()
    } else {
        center + diff.scale(radius / dist)
    }
}

/// Congruence `C = diag(I_K, L)` applied to the assembled matrix.
///
/// With `L = W^{1/2}` the weighted objective becomes `tr(L S(T(u)) L) + tr(Φ)`,
/// which is far better conditioned for ADMM when `W` spreads over many
/// decades. Weights that are scalar or near-singular keep `L = I`.
struct Preconditioner {
    /// Eigenvectors of `W` and square roots of its eigenvalues; `None` for
    /// `L = I`.
    basis: Option<(CMatrix, Vec<f64>)>,
    l: CMatrix,
    l_inv: CMatrix,
    /// Linear cost on the transformed Toeplitz block.
    tilt: CMatrix,
    /// Cholesky factor of the Gram matrix of `θ ↦ L S(T(θ)) L`.
    gram: Option<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>>,
}

/// Smallest eigenvalue ratio of `W` for which preconditioning is used.
const PRECONDITION_MIN_RATIO: f64 = 1e-10;

impl Preconditioner {
    fn new(weight: &CMatrix, n: usize, m: usize, enabled: bool) -> Result<Self> {
        let d = weight.nrows();
        let mean = weight.trace().re / d as f64;
        let off_scalar = (weight - CMatrix::identity(d, d).scale(mean)).norm();
        let eig = hermitian_eigen(weight);
        let top = eig.max_value();
        if !enabled
            || off_scalar <= 1e-12 * weight.norm().max(f64::MIN_POSITIVE)
            || top <= 0.0
            || eig.min_value() <= PRECONDITION_MIN_RATIO * top
        {
            return Ok(Self {
                basis: None,
                l: CMatrix::identity(d, d),
                l_inv: CMatrix::identity(d, d),
                tilt: weight.clone(),
                gram: None,
            });
        }
        let roots: Vec<f64> = eig.values.iter().map(|l| l.sqrt()).collect();
        let l = eig.reassemble(f64::sqrt);
        let l_inv = eig.reassemble(|v| 1.0 / v.sqrt());
        let count = hermitian_parameter_count(n, m);
        let mut gram = DMatrix::<f64>::zeros(count, count);
        let mut theta = vec![0.0; count];
        for a in 0..count {
            theta[a] = 1.0;
            let basis = build_unchecked(&coeffs_from_real(&theta, n, m)?);
            theta[a] = 0.0;
            let image = weight * basis * weight;
            let column = real_adjoint(&image, n, m)?;
            gram.column_mut(a).copy_from_slice(&column);
        }
        let gram = (&gram + gram.transpose()).scale(0.5);
        let gram = gram.cholesky().ok_or(StapError::Singular)?;
        Ok(Self {
            basis: Some((eig.vectors, roots)),
            l,
            l_inv,
            tilt: CMatrix::identity(d, d),
            gram: Some(gram),
        })
    }

    /// `C M C` for the block congruence.
    fn forward(&self, mat: &CMatrix, k: usize) -> CMatrix {
        congruence(mat, &self.l, k)
    }

    fn backward(&self, mat: &CMatrix, k: usize) -> CMatrix {
        congruence(mat, &self.l_inv, k)
    }

    /// Toeplitz coefficients minimizing `‖L S(T(u)) L − H‖_F`, and the
    /// transformed block.
    fn toeplitz_step(&self, h: &CMatrix, n: usize, m: usize) -> Result<(TwoLevelToeplitzCoeffs, CMatrix)> {
        match &self.gram {
            None => {
                let u = toeplitz_project_coeffs(h, n, m)?;
                let t = build_unchecked(&u);
                Ok((u, t))
            }
            Some(chol) => {
                let rhs = real_adjoint(&(&self.l * h * &self.l), n, m)?;
                let theta = chol.solve(&DVector::from_vec(rhs));
                let u = coeffs_from_real(theta.as_slice(), n, m)?;
                let t = &self.l * build_unchecked(&u) * &self.l;
                Ok((u, t))
            }
        }
    }

    /// Minimize `‖L X_c − V‖_F` over `‖X_c − center‖_F ≤ radius`. Returns
    /// `(X_c, L X_c)`.
    fn fidelity_step(&self, v: &CMatrix, center: &CMatrix, radius: f64) -> (CMatrix, CMatrix) {
        let Some((q, roots)) = &self.basis else {
            let x = project_ball(v, center, radius);
            return (x.clone(), x);
        };
        let p = q.adjoint() * v;
        let b = q.adjoint() * center;
        let rows = p.nrows();
        let row_gap = |i: usize| -> f64 {
            let s = roots[i];
            (p.row(i).scale(s) - b.row(i).scale(s * s)).norm_squared()
        };
        let gaps: Vec<f64> = (0..rows).map(row_gap).collect();
        let distance_sq = |mu: f64| -> f64 {
            gaps.iter()
                .zip(roots)
                .map(|(g, s)| g / (s * s + mu).powi(2))
                .sum()
        };
        let r2 = radius * radius;
        let mu = if distance_sq(0.0) <= r2 {
            0.0
        } else if radius == 0.0 {
            f64::INFINITY
        } else {
            let mut hi = roots.iter().fold(0.0f64, |a, s| a.max(s * s)).max(1e-300);
            while distance_sq(hi) > r2 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if distance_sq(mid) > r2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            hi
        };
        let mut z = b.clone();
        if mu.is_finite() {
            for i in 0..rows {
                let s = roots[i];
                let row = (p.row(i).scale(s) + b.row(i).scale(mu)).unscale(s * s + mu);
                z.row_mut(i).copy_from(&row);
            }
        }
        let mut lz = z.clone();
        for i in 0..rows {
            lz.row_mut(i).scale_mut(roots[i]);
        }
        (q * z, q * lz)
    }
}

/// `diag(I_K, L) · mat · diag(I_K, L)` for Hermitian `L`.
fn congruence(mat: &CMatrix, l: &CMatrix, k: usize) -> CMatrix {
    let total = mat.nrows();
    let d = total - k;
    let mut out = mat.clone();
    let top_right = mat.view((0, k), (k, d)) * l;
    let bottom_left = l * mat.view((k, 0), (d, k));
    let bottom = l * mat.view((k, k), (d, d)) * l;
    out.view_mut((0, k), (k, d)).copy_from(&top_right);
    out.view_mut((k, 0), (d, k)).copy_from(&bottom_left);
    out.view_mut((k, k), (d, d)).copy_from(&bottom);
    out
}

/// Solve one weighted subproblem from a cold start.
pub fn solve_weighted_subproblem(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution> {
    solve_weighted_subproblem_warm(problem, settings, None)
}

/// Solve one weighted subproblem, optionally seeding ADMM with the PSD copy
/// and dual of a previous solution of the same dimensions.
pub fn solve_weighted_subproblem_warm(
    problem: &SdpProblem,
    settings: &SolverSettings,
    warm: Option<&SdpSolution>,
) -> Result<SdpSolution> {
    solve(problem, settings, warm, true)
}

fn solve(
    problem: &SdpProblem,
    settings: &SolverSettings,
    warm: Option<&SdpSolution>,
    precondition: bool,
) -> Result<SdpSolution> {
    settings.validate()?;
    let (n, m, k) = problem.dims();
    let d = n * m;
    let total = k + d;

    let data_sq = problem.data.norm_squared();
    if data_sq <= problem.fidelity_radius {
        // X_c = 0 is feasible; with W ⪰ 0 and Φ ⪰ 0 the objective is ≥ 0,
        // so the all-zero point is optimal.
        let iterate = StructuredPsdIterate::zeros(n, m, k)?;
        return Ok(SdpSolution {
            iterate,
            objective: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            converged: true,
            psd_copy: CMatrix::zeros(total, total),
            dual: CMatrix::zeros(total, total),
            rho: settings.rho,
        });
    }

    let pre = Preconditioner::new(&problem.weight, n, m, precondition)?;
    let scale = ((&pre.l * &problem.data).norm_squared() / (k * d) as f64).sqrt();
    let x = problem.data.unscale(scale);
    let radius = problem.fidelity_radius.sqrt() / scale;

    let warm = warm.filter(|s| s.psd_copy.nrows() == total);
    let mut rho = warm.map_or(settings.rho, |s| s.rho);
    let (mut y, mut lambda) = match warm {
        Some(s) => (
            pre.forward(&s.psd_copy, k).unscale(scale),
            pre.backward(&s.dual, k).unscale(rho),
        ),
        None => (CMatrix::zeros(total, total), CMatrix::zeros(total, total)),
    };

    let alpha = settings.over_relaxation;
    let mut primal = f64::INFINITY;
    let mut dual_res = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let eye_k = CMatrix::identity(k, k);
    let mut iterate = StructuredPsdIterate::zeros(n, m, k)?;

    for it in 1..=settings.max_iterations {
        iterations = it;
        let g = &y - &lambda;

        // structured update in transformed coordinates
        let g11 = g.view((0, 0), (k, k)).into_owned();
        let phi = hermitian_part(&g11) - eye_k.unscale(rho);
        let v = (g.view((k, 0), (d, k)).into_owned() + g.view((0, k), (k, d)).adjoint()).scale(0.5);
        let (x_c, x_t) = pre.fidelity_step(&v, &x, radius);
        let g22 = g.view((k, k), (d, d)).into_owned();
        let (u, t) = pre.toeplitz_step(&(g22 - pre.tilt.unscale(rho)), n, m)?;
        let a = assemble_blocks(&phi, &x_t, &t);
        iterate = StructuredPsdIterate { phi, x_c, u };

        // cone update with over-relaxation
        let relaxed = a.scale(alpha) + y.scale(1.0 - alpha);
        let y_old = std::mem::replace(&mut y, {
            let target = &relaxed + &lambda;
            hermitian_eigen(&target).reassemble(|l| l.max(0.0))
        });
        lambda += &relaxed - &y;

        let a_norm = a.norm();
        let y_norm = y.norm();
        primal = (&a - &y).norm() / a_norm.max(y_norm).max(f64::MIN_POSITIVE);
        let lambda_norm = lambda.norm();
        dual_res = (&y - &y_old).norm() / lambda_norm.max(f64::MIN_POSITIVE);
        if lambda_norm == 0.0 && y == y_old {
            dual_res = 0.0;
        }

        if primal <= settings.tolerance && dual_res <= settings.tolerance {
            converged = true;
            break;
        }

        if settings.adaptive_rho && it % REBALANCE_EVERY == 0 {
            if primal > REBALANCE_RATIO * dual_res {
                rho *= REBALANCE_FACTOR;
                lambda.unscale_mut(REBALANCE_FACTOR);
            } else if dual_res > REBALANCE_RATIO * primal {
                rho /= REBALANCE_FACTOR;
                lambda.scale_mut(REBALANCE_FACTOR);
            }
        }
    }

    let iterate = iterate.scaled(scale);
    let objective = problem.objective(&iterate);
    Ok(SdpSolution {
        iterate,
        objective,
        primal_residual: primal,
        dual_residual: dual_res,
        iterations,
        converged,
        psd_copy: pre.backward(&y, k).scale(scale),
        dual: pre.forward(&lambda, k).scale(rho),
        rho,
    })
}

/// Diagnostics for `solution` against `problem`.
pub fn kkt_residuals(problem: &SdpProblem, solution: &SdpSolution) -> KktResiduals {
    let (n, m, k) = problem.dims();
    let assembled = solution.iterate.assemble();
    let ev = hermitian_eigenvalues(&assembled);
    let lo = ev.first().copied().unwrap_or(0.0);
    let spread = ev.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
    let psd_violation = (-lo).max(0.0);
    let fidelity_slack = (&solution.iterate.x_c - &problem.data).norm_squared() - problem.fidelity_radius;
    let y = &solution.psd_copy;
    let y_norm = y.norm();
    let structure_violation = if y_norm == 0.0 {
        0.0
    } else {
        (y - structured_projection(y, k, n, m)).norm() / y_norm
    };
    KktResiduals {
        psd_violation,
        psd_violation_relative: if spread > 0.0 { psd_violation / spread } else { 0.0 },
        fidelity_slack,
        structure_violation,
        objective: problem.objective(&solution.iterate),
        primal_residual: solution.primal_residual,
        dual_residual: solution.dual_residual,
    }
}
