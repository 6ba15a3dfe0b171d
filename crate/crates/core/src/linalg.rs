//! Dense linear-algebra helpers used by the filters and certificates.
//!
//! All inversions of symmetric positive-definite matrices go through
//! [`SpdFactor`]: factorize once, solve many, and retry once with a
//! trace-scaled jitter if the factorization fails. Explicit inverses are
//! produced only where a recursion genuinely sums inverse matrices, and
//! then always by solving against the identity.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative jitter added to the diagonal when a Cholesky factorization of
/// a nominally PD matrix fails; scaled by `trace/dim`.
pub const SPD_JITTER: f64 = 1e-12;

/// Returns `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Largest absolute entry of `m − mᵀ`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// `(min, max)` eigenvalue of a symmetric matrix.
pub fn symmetric_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let vals = symmetric_eigenvalues(m);
    (vals[0], vals[vals.len() - 1])
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eig_range(m).0
}

/// Cholesky factor of a symmetric PD matrix with a single jitter retry.
///
/// On factorization failure, `SPD_JITTER · trace/dim` is added to the
/// diagonal and the factorization retried once; a second failure is
/// reported together with the smallest eigenvalue of the input.
#[derive(Debug)]
pub struct SpdFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    dim: usize,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>, context: &str) -> Result<Self> {
        Self::build(m, context, true)
    }

    /// Like [`SpdFactor::new`] but without the jitter retry: a singular
    /// input is an error, not something to regularize (used for the
    /// weighting matrices, where jitter would silently fabricate a huge
    /// inverse).
    pub fn new_strict(m: &DMatrix<f64>, context: &str) -> Result<Self> {
        Self::build(m, context, false)
    }

    fn build(m: &DMatrix<f64>, context: &str, jitter_retry: bool) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dimension(format!(
                "{context}: matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let dim = m.nrows();
        let sym = symmetrize(m);
        if let Some(chol) = sym.clone().cholesky() {
            return Ok(SpdFactor { chol, dim });
        }
        if jitter_retry {
            let jitter = SPD_JITTER * sym.trace().abs().max(1.0) / dim as f64;
            let mut jittered = sym.clone();
            for i in 0..dim {
                jittered[(i, i)] += jitter;
            }
            if let Some(chol) = jittered.cholesky() {
                return Ok(SpdFactor { chol, dim });
            }
        }
        let min_eig = min_symmetric_eigenvalue(&sym);
        Err(Error::numerical(format!(
            "{context}: matrix is not positive definite (smallest eigenvalue {min_eig:.3e})"
        )))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `M x = b`.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Solves `M X = B` column-wise.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `M⁻¹`, obtained by solving against the identity and symmetrizing.
    pub fn inverse(&self) -> DMatrix<f64> {
        symmetrize(&self.chol.inverse())
    }
}

/// `M⁻¹` of a symmetric PD matrix (factorize-and-solve with jitter retry).
pub fn spd_inverse(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    Ok(SpdFactor::new(m, context)?.inverse())
}

/// Solves `M X = B` for symmetric PD `M`.
pub fn spd_solve(m: &DMatrix<f64>, b: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    Ok(SpdFactor::new(m, context)?.solve_mat(b))
}

/// Symmetric PSD square root via eigendecomposition.
///
/// Returns the full `n×n` factor `F = V·diag(√λ)·Vᵀ` with negative
/// eigenvalues below `-tol·max(1, |λ|max)` rejected and small negative
/// ones clamped to zero. `F·Fᵀ = m` for PSD `m`; the factor is valid for
/// rank-deficient inputs where a Cholesky factor does not exist.
pub fn psd_sqrt(m: &DMatrix<f64>, tol: f64, context: &str) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let max_abs = eig.eigenvalues.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let mut sqrt_vals = DVector::zeros(eig.eigenvalues.len());
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -tol * max_abs {
            return Err(Error::numerical(format!(
                "{context}: matrix is not PSD (eigenvalue {v:.3e})"
            )));
        }
        sqrt_vals[i] = v.max(0.0).sqrt();
    }
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Rectangular PSD factor: columns of `V·diag(√λ)` for eigenvalues above
/// `tol·max(1, |λ|max)`. Satisfies `F·Fᵀ = m` with `F` of size `n×rank`;
/// an all-zero matrix yields a factor with zero columns.
pub fn psd_sqrt_factor(m: &DMatrix<f64>, tol: f64, context: &str) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let max_abs = eig.eigenvalues.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let mut cols = Vec::new();
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -tol * max_abs {
            return Err(Error::numerical(format!(
                "{context}: matrix is not PSD (eigenvalue {v:.3e})"
            )));
        }
        if v > tol * max_abs {
            cols.push(eig.eigenvectors.column(i) * v.sqrt());
        }
    }
    let n = m.nrows();
    if cols.is_empty() {
        return Ok(DMatrix::zeros(n, 0));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Spectral radius of a general real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(complex_eigenvalues(m)?
        .iter()
        .fold(0.0f64, |a, v| a.max(v.norm())))
}

/// Eigenvalues of a general real square matrix as complex numbers.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() != m.ncols() {
        return Err(Error::dimension(format!(
            "eigenvalues: matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("eigenvalues: Schur iteration did not converge"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest singular value (operator 2-norm).
pub fn operator_norm_2(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &v| a.max(v))
}

/// Smallest and largest singular values of the complex matrix
/// `re + i·im`, computed from the real embedding `[[re, -im], [im, re]]`
/// (whose singular values are those of the complex matrix, doubled in
/// multiplicity).
pub fn complex_singular_extremes(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<(f64, f64)> {
    if re.shape() != im.shape() {
        return Err(Error::dimension(
            "complex_singular_extremes: real and imaginary parts differ in shape",
        ));
    }
    let (r, c) = re.shape();
    let mut embed = DMatrix::zeros(2 * r, 2 * c);
    embed.view_mut((0, 0), (r, c)).copy_from(re);
    embed.view_mut((0, c), (r, c)).copy_from(&(-im));
    embed.view_mut((r, 0), (r, c)).copy_from(im);
    embed.view_mut((r, c), (r, c)).copy_from(re);
    let sv = embed.svd(false, false).singular_values;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &v in sv.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}
