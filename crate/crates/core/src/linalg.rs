//! Small dense linear-algebra helpers shared by the solver modules.

use nalgebra::DVector;

use crate::{CMatrix, CVector, Result, StapError, C64};

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; column `k` of `vectors` is the unit
/// eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Reassemble `V diag(f(λ)) V^H`, skipping terms where `f` returns zero.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let g = f(lambda);
            if g == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            out.ger(C64::new(g, 0.0), &v, &v.map(|z| z.conj()), C64::new(1.0, 0.0));
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// The input is symmetrized as `(A + A^H) / 2` first, so callers should check
/// Hermitian-ness themselves when it matters.
pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    let sym = hermitian_part(a);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let sym = hermitian_part(a);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// `‖A − A^H‖_F / max(‖A‖_F, tiny)`.
pub fn relative_asymmetry(a: &CMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / norm
}

/// Real trace inner product `Re tr(A^H B)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `v^H w`.
pub fn dot_h(v: &CVector, w: &CVector) -> C64 {
    v.dotc(w)
}

/// `A + δ I`.
pub fn add_diagonal(a: &CMatrix, delta: f64) -> CMatrix {
    let mut out = a.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] += C64::new(delta, 0.0);
    }
    out
}

/// Smallest LU pivot, relative to the largest, accepted as nonsingular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Factorization of a Hermitian positive-definite matrix, with an LU
/// fallback for matrices that are only numerically definite.
pub enum HermitianSolver {
    Cholesky(nalgebra::Cholesky<C64, nalgebra::Dyn>),
    Lu(nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl HermitianSolver {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if let Some(chol) = a.clone().cholesky() {
            let pivots = chol.l_dirty().diagonal().map(|z| z.norm_sqr());
            if pivots.min() > SINGULAR_PIVOT_RATIO * pivots.max() {
                return Ok(Self::Cholesky(chol));
            }
        }
        let lu = a.clone().lu();
        let pivots = lu.u().diagonal().map(|z| z.norm());
        if !lu.is_invertible() || pivots.min() <= SINGULAR_PIVOT_RATIO * pivots.max() {
            return Err(StapError::Singular);
        }
        Ok(Self::Lu(lu))
    }

    pub fn solve_vector(&self, b: &CVector) -> Result<CVector> {
        let x = match self {
            Self::Cholesky(c) => c.solve(b),
            Self::Lu(lu) => lu.solve(b).ok_or(StapError::Singular)?,
        };
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(StapError::Singular);
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> Result<CMatrix> {
        let x = match self {
            Self::Cholesky(c) => c.solve(b),
            Self::Lu(lu) => lu.solve(b).ok_or(StapError::Singular)?,
        };
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(StapError::Singular);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        let n = match self {
            Self::Cholesky(c) => c.l_dirty().nrows(),
            Self::Lu(lu) => lu.l().nrows(),
        };
        self.solve_matrix(&CMatrix::identity(n, n))
    }
}

/// Collect a slice of reals into a complex column vector.
pub fn real_vector(values: &[f64]) -> CVector {
    DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)))
}
