//! Two-level (block) Toeplitz algebra.
//!
//! `S(T(u))` is an `N × N` block-Toeplitz matrix whose `(a, b)` block is the
//! `M × M` Toeplitz matrix `T_{a−b}` with entries `T_i[c, d] = u_{i, c−d}`.
//! Row `(a, c)` of the full matrix is `a·M + c`, matching the Doppler-major
//! ordering of space-time steering vectors.

use crate::linalg::{hermitian_eigen, relative_asymmetry};
use crate::{CMatrix, Result, StapError, C64};

/// Coefficients `u_{i,j}` for `i ∈ [−(N−1), N−1]`, `j ∈ [−(M−1), M−1]`.
///
/// Stored as the full `(2N−1) × (2M−1)` table. Coefficients that define a
/// Hermitian matrix satisfy `u_{−i,−j} = conj(u_{i,j})`; tables produced by
/// [`toeplitz_adjoint`] on non-Hermitian input need not.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelToeplitzCoeffs {
    n: usize,
    m: usize,
    values: Vec<C64>,
}

impl TwoLevelToeplitzCoeffs {
    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(StapError::InvalidDimension(
                "Toeplitz dimensions must be at least 1".into(),
            ));
        }
        Ok(Self {
            n,
            m,
            values: vec![C64::new(0.0, 0.0); (2 * n - 1) * (2 * m - 1)],
        })
    }

    /// Table with `u_{i,j} = f(i, j)`.
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(isize, isize) -> C64) -> Result<Self> {
        let mut out = Self::zeros(n, m)?;
        for i in out.lag_range_n() {
            for j in out.lag_range_m() {
                out.set(i, j, f(i, j));
            }
        }
        Ok(out)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    /// Size `N·M` of the matrix these coefficients build.
    pub fn matrix_dim(&self) -> usize {
        self.n * self.m
    }

    pub fn lag_range_n(&self) -> std::ops::RangeInclusive<isize> {
        -(self.n as isize - 1)..=(self.n as isize - 1)
    }

    pub fn lag_range_m(&self) -> std::ops::RangeInclusive<isize> {
        -(self.m as isize - 1)..=(self.m as isize - 1)
    }

    #[inline]
    fn index(&self, i: isize, j: isize) -> usize {
        let row = (i + self.n as isize - 1) as usize;
        let col = (j + self.m as isize - 1) as usize;
        row * (2 * self.m - 1) + col
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> C64 {
        self.values[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, value: C64) {
        let k = self.index(i, j);
        self.values[k] = value;
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Largest `|u_{−i,−j} − conj(u_{i,j})|` over the table, including the
    /// imaginary part of `u_{0,0}`.
    pub fn symmetry_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in self.lag_range_n() {
            for j in self.lag_range_m() {
                worst = worst.max((self.get(-i, -j) - self.get(i, j).conj()).norm());
            }
        }
        worst
    }

    /// Project onto the conjugate-symmetric subspace:
    /// `u_{i,j} ← (u_{i,j} + conj(u_{−i,−j})) / 2`.
    pub fn hermitian_symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in self.lag_range_n() {
            for j in self.lag_range_m() {
                out.set(i, j, (self.get(i, j) + self.get(-i, -j).conj()) * 0.5);
            }
        }
        out
    }

    /// Euclidean norm of the coefficient table.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real inner product `Re Σ conj(u_{ij}) v_{ij}` over the table.
    pub fn inner(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            m: self.m,
            values: self.values.iter().map(|z| z * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Number of matrix entries on the `(i, j)` two-level diagonal,
    /// `(N − |i|)(M − |j|)`.
    pub fn diagonal_count(&self, i: isize, j: isize) -> usize {
        (self.n - i.unsigned_abs()) * (self.m - j.unsigned_abs())
    }
}

/// Assemble `S(T(u))`.
///
/// Errors when `u` departs from conjugate symmetry by more than 1e−12
/// (relative to the largest coefficient).
pub fn toeplitz_build(u: &TwoLevelToeplitzCoeffs) -> Result<CMatrix> {
    let scale = u.values.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let violation = u.symmetry_violation();
    if violation > 1e-12 * scale {
        return Err(StapError::SymmetryViolation(violation));
    }
    Ok(build_unchecked(u))
}

pub(crate) fn build_unchecked(u: &TwoLevelToeplitzCoeffs) -> CMatrix {
    let (n, m) = (u.n, u.m);
    CMatrix::from_fn(n * m, n * m, |row, col| {
        let (a, c) = ((row / m) as isize, (row % m) as isize);
        let (b, d) = ((col / m) as isize, (col % m) as isize);
        u.get(a - b, c - d)
    })
}

/// Coefficients of the unit-power atom `s s^H`, `u_{i,j} = e^{j2π(i f_d + j f_s)}`.
pub fn single_atom_coeffs(
    doppler_freq: f64,
    spatial_freq: f64,
    n: usize,
    m: usize,
) -> Result<TwoLevelToeplitzCoeffs> {
    TwoLevelToeplitzCoeffs::from_fn(n, m, |i, j| {
        C64::from_polar(
            1.0,
            2.0 * std::f64::consts::PI * (i as f64 * doppler_freq + j as f64 * spatial_freq),
        )
    })
}

/// Adjoint of [`toeplitz_build`]: `u_{i,j}` is the sum of `Z` over the
/// `(i, j)` two-level diagonal.
pub fn toeplitz_adjoint(z: &CMatrix, n: usize, m: usize) -> Result<TwoLevelToeplitzCoeffs> {
    if z.nrows() != n * m || z.ncols() != n * m {
        return Err(StapError::DimensionMismatch {
            expected: n * m,
            found: z.nrows().max(z.ncols()),
        });
    }
    let mut u = TwoLevelToeplitzCoeffs::zeros(n, m)?;
    for col in 0..n * m {
        let (b, d) = ((col / m) as isize, (col % m) as isize);
        for row in 0..n * m {
            let (a, c) = ((row / m) as isize, (row % m) as isize);
            let k = u.index(a - b, c - d);
            u.values[k] += z[(row, col)];
        }
    }
    Ok(u)
}

/// Coefficients of the Frobenius-nearest Hermitian two-level Toeplitz matrix.
pub fn toeplitz_project_coeffs(z: &CMatrix, n: usize, m: usize) -> Result<TwoLevelToeplitzCoeffs> {
    let mut u = toeplitz_adjoint(z, n, m)?;
    for i in u.lag_range_n() {
        for j in u.lag_range_m() {
            let count = u.diagonal_count(i, j) as f64;
            let k = u.index(i, j);
            u.values[k] /= count;
        }
    }
    Ok(u.hermitian_symmetrized())
}

/// Frobenius-nearest Hermitian two-level Toeplitz matrix: average each
/// two-level diagonal, then Hermitian-symmetrize.
pub fn toeplitz_project(z: &CMatrix, n: usize, m: usize) -> Result<CMatrix> {
    Ok(build_unchecked(&toeplitz_project_coeffs(z, n, m)?))
}

/// Number of real parameters of a conjugate-symmetric coefficient table,
/// `(2N−1)(2M−1)`.
pub fn hermitian_parameter_count(n: usize, m: usize) -> usize {
    (2 * n - 1) * (2 * m - 1)
}

/// Lags `(i, j)` on the nonnegative half, `i > 0` or `i = 0, j ≥ 0`.
fn half_lags(n: usize, m: usize) -> impl Iterator<Item = (isize, isize)> {
    let (n, m) = (n as isize, m as isize);
    (0..n).flat_map(move |i| {
        let lo = if i == 0 { 0 } else { -(m - 1) };
        (lo..m).map(move |j| (i, j))
    })
}

/// Conjugate-symmetric coefficients from the real parameter vector: `u_{0,0}`
/// first, then `(Re, Im)` of each lag on the nonnegative half.
pub fn coeffs_from_real(theta: &[f64], n: usize, m: usize) -> Result<TwoLevelToeplitzCoeffs> {
    if theta.len() != hermitian_parameter_count(n, m) {
        return Err(StapError::DimensionMismatch {
            expected: hermitian_parameter_count(n, m),
            found: theta.len(),
        });
    }
    let mut u = TwoLevelToeplitzCoeffs::zeros(n, m)?;
    let mut k = 0;
    for (i, j) in half_lags(n, m) {
        if i == 0 && j == 0 {
            u.set(0, 0, C64::new(theta[k], 0.0));
            k += 1;
        } else {
            let z = C64::new(theta[k], theta[k + 1]);
            u.set(i, j, z);
            u.set(-i, -j, z.conj());
            k += 2;
        }
    }
    Ok(u)
}

/// Adjoint of [`coeffs_from_real`] followed by [`toeplitz_build`]: entry `a`
/// is `Re tr(B_a^H Z)` for the `a`-th real basis matrix `B_a`.
pub fn real_adjoint(z: &CMatrix, n: usize, m: usize) -> Result<Vec<f64>> {
    let adj = toeplitz_adjoint(z, n, m)?;
    let mut out = Vec::with_capacity(hermitian_parameter_count(n, m));
    for (i, j) in half_lags(n, m) {
        if i == 0 && j == 0 {
            out.push(adj.get(0, 0).re);
        } else {
            let (p, q) = (adj.get(i, j), adj.get(-i, -j));
            out.push(p.re + q.re);
            out.push(p.im - q.im);
        }
    }
    Ok(out)
}

/// Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.
///
/// Rejects input whose relative asymmetry exceeds 1e−8.
pub fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    let asym = relative_asymmetry(h);
    if asym > 1e-8 {
        return Err(StapError::NotHermitian(asym));
    }
    Ok(psd_project_unchecked(h))
}

pub(crate) fn psd_project_unchecked(h: &CMatrix) -> CMatrix {
    hermitian_eigen(h).reassemble(|l| l.max(0.0))
}
