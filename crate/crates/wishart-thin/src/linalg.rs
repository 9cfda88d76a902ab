//! Deterministic dense linear-algebra primitives: symmetric eigendecomposition
//! with numeric-rank truncation, Helmert-style centering complements, and
//! positive semi-definite validation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative rank tolerance: eigenvalues above `tol * lambda_max`
/// count toward the rank, values in `(-tol * lambda_max, tol * lambda_max]`
/// are treated as zero, and anything lower is rejected as not PSD.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A square matrix stored in exactly symmetric form.
///
/// Construction symmetrizes the input, so `entries[(i, j)] == entries[(j, i)]`
/// holds bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    entries: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Symmetrize a square matrix as `(A + A^T) / 2`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut entries = a;
        for i in 0..entries.nrows() {
            for j in (i + 1)..entries.ncols() {
                let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(Self { entries })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = if i == j { f(i, j) } else { 0.5 * (f(i, j) + f(j, i)) };
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Self { entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// A symmetric positive semi-definite matrix with a cached numeric rank.
///
/// Validation runs a full symmetric eigendecomposition: all eigenvalues must
/// lie above `-rank_tol * lambda_max`, and the rank counts those strictly
/// above `rank_tol * lambda_max`.
#[derive(Debug, Clone)]
pub struct PsdMatrix {
    entries: SymmetricMatrix,
    rank: usize,
    rank_tol: f64,
}

impl PsdMatrix {
    /// Validate a symmetric matrix as PSD under the given relative tolerance.
    pub fn new(s: SymmetricMatrix, rank_tol: f64) -> Result<Self> {
        let decomp = eigh(&s, rank_tol)?;
        Ok(Self { entries: s, rank: decomp.rank(), rank_tol })
    }

    /// Validate under [`DEFAULT_RANK_TOL`].
    pub fn from_symmetric(s: SymmetricMatrix) -> Result<Self> {
        Self::new(s, DEFAULT_RANK_TOL)
    }

    /// Symmetrize and validate a raw square matrix under [`DEFAULT_RANK_TOL`].
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        Self::from_symmetric(SymmetricMatrix::new(a)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: SymmetricMatrix::identity(dim), rank: dim, rank_tol: DEFAULT_RANK_TOL }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: SymmetricMatrix::zeros(dim), rank: 0, rank_tol: DEFAULT_RANK_TOL }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn as_symmetric(&self) -> &SymmetricMatrix {
        &self.entries
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.entries.as_matrix()
    }

    /// Eigendecomposition truncated at this matrix's rank tolerance.
    pub fn eigh(&self) -> EigenDecomposition {
        // Validation already succeeded at construction.
        eigh(&self.entries, self.rank_tol).expect("validated PSD matrix")
    }
}

/// Truncated eigendecomposition of a PSD matrix: `V diag(eigenvalues) V^T`
/// reconstructs the input up to the dropped near-zero part.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Retained eigenvalues, sorted nonincreasing, all positive.
    eigenvalues: Vec<f64>,
    /// Matching eigenvectors as orthonormal columns (p x r).
    vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Square roots of the eigenvalues (the diagonal factor `D` with
    /// `V D^2 V^T` equal to the input).
    pub fn singular_values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v.sqrt()).collect()
    }

    /// Rebuild `V diag(eigenvalues) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let p = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (j, &val) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(val);
        }
        if self.eigenvalues.is_empty() {
            DMatrix::zeros(p, p)
        } else {
            &scaled * self.vectors.transpose()
        }
    }
}

/// A matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct StiefelMatrix {
    entries: DMatrix<f64>,
}

/// Max absolute deviation of `Q^T Q` from the identity tolerated on
/// construction.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

impl StiefelMatrix {
    /// Validate that the columns are orthonormal to [`ORTHONORMAL_TOL`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.ncols() > entries.nrows() {
            return Err(Error::InvalidSize(format!(
                "orthonormal columns need rows >= cols, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let gram = entries.transpose() * &entries;
        let r = entries.ncols();
        for i in 0..r {
            for j in 0..r {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidInput(format!(
                        "columns not orthonormal: |(Q^T Q - I)[{i},{j}]| = {:.3e}",
                        (gram[(i, j)] - target).abs()
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// Eigendecomposition of a symmetric PSD matrix, truncated at the numeric
/// rank.
///
/// Eigenvalues are sorted nonincreasing and only those above
/// `rank_tol * max(lambda_1, 0)` are retained with their eigenvectors.
/// Eigenvalues in `(-rank_tol * lambda_max, rank_tol * lambda_max]` are
/// treated as zero and dropped; anything below the negative band is a
/// [`Error::NotPsd`]. The zero matrix yields rank 0 with empty factors.
pub fn eigh(s: &SymmetricMatrix, rank_tol: f64) -> Result<EigenDecomposition> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidInput(format!("rank_tol must be in (0, 1), got {rank_tol}")));
    }
    let p = s.dim();
    let se = s.as_matrix().clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());

    let lambda_max = if p == 0 { 0.0 } else { se.eigenvalues[order[0]].max(0.0) };
    let threshold = rank_tol * lambda_max;

    let mut eigenvalues = Vec::new();
    let mut kept = Vec::new();
    for &idx in &order {
        let lam = se.eigenvalues[idx];
        if lam < -threshold {
            return Err(Error::NotPsd { eigenvalue: lam, tol: threshold });
        }
        if lam > threshold {
            eigenvalues.push(lam);
            kept.push(idx);
        }
    }

    let mut vectors = DMatrix::zeros(p, kept.len());
    for (col, &idx) in kept.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(idx));
    }
    Ok(EigenDecomposition { eigenvalues, vectors })
}

/// The deterministic n x (n-1) matrix of normalized Helmert contrasts.
///
/// Satisfies `H^T H = I_{n-1}`, `H H^T = I_n - (1/n) 1 1^T`, and
/// `H^T 1_n = 0`. Column `j` (0-based) carries `1/sqrt((j+1)(j+2))` in its
/// first `j+1` rows, `-(j+1)/sqrt((j+1)(j+2))` at row `j+1`, zeros below.
pub fn helmert_complement(n: usize) -> Result<StiefelMatrix> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("centering complement needs n >= 2, got {n}")));
    }
    let mut h = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        let k = (j + 1) as f64;
        let scale = 1.0 / (k * (k + 1.0)).sqrt();
        for i in 0..=j {
            h[(i, j)] = scale;
        }
        h[(j + 1, j)] = -k * scale;
    }
    StiefelMatrix::new(h)
}

/// Count of eigenvalues above `rank_tol * max(lambda_1, 0)`.
///
/// `eigenvalues` must be sorted nonincreasing. Returns 0 for an empty slice
/// or the zero matrix.
pub fn numeric_rank(eigenvalues: &[f64], rank_tol: f64) -> usize {
    let lambda_max = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let threshold = rank_tol * lambda_max;
    eigenvalues.iter().take_while(|&&v| v > threshold).count()
}

/// Frobenius norm of the difference, relative to `1 + ||b||_F`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}
