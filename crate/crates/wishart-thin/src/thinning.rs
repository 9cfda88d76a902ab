//! Decomposition of summary statistics into data matrices with independent
//! Gaussian rows, fold partitioning, per-fold summary statistics, and
//! recombination back to the originals.
//!
//! The covariance-only route turns a PSD matrix `W` into an `n x p` matrix
//! `X` with `X^T X = W`; when `W` is a Wishart draw the rows of `X` are
//! independent Gaussians. The mean-and-covariance route additionally
//! reproduces a given mean vector exactly while centering the scatter
//! through a deterministic orthonormal complement.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{helmert_complement, PsdMatrix, SymmetricMatrix};
use crate::samplers::{sample_haar_stiefel, RngStream};

/// An n x p data matrix whose rows are reconstructed observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    entries: DMatrix<f64>,
}

impl DataMatrix {
    /// Wrap a matrix, rejecting non-finite entries.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data matrix has non-finite entries".into()));
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

/// Sample mean, unbiased sample covariance, and the sample size they came
/// from.
#[derive(Debug, Clone)]
pub struct SummaryStats {
    pub mean: DVector<f64>,
    pub covariance: PsdMatrix,
    pub count: usize,
}

impl SummaryStats {
    /// Compute the sample mean and the unbiased (n-1 divisor) sample
    /// covariance of a data matrix with at least two rows.
    pub fn from_data(x: &DataMatrix) -> Result<Self> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::InvalidSize(format!(
                "summary statistics with an unbiased covariance need n >= 2, got {n}"
            )));
        }
        let m = x.as_matrix();
        let mean = m.row_mean().transpose();
        let p = x.cols();
        let mut scatter = DMatrix::zeros(p, p);
        for i in 0..n {
            let d = m.row(i).transpose() - &mean;
            scatter += &d * d.transpose();
        }
        scatter /= (n - 1) as f64;
        Ok(Self { mean, covariance: PsdMatrix::from_matrix(scatter)?, count: n })
    }
}

/// An assignment of rows `0..n` to folds `1..=K`, every fold nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignments: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validate an explicit assignment vector (fold ids in `1..=k`).
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || assignments.is_empty() {
            return Err(Error::InvalidFoldSpec("need at least one fold and one row".into()));
        }
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            if a < 1 || a > k {
                return Err(Error::InvalidFoldSpec(format!("fold id {a} outside 1..={k}")));
            }
            counts[a - 1] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidFoldSpec(format!("fold {} is empty", empty + 1)));
        }
        Ok(Self { assignments, k })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn fold_count(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Row indices belonging to fold `fold_id` (1-based).
    pub fn fold_rows(&self, fold_id: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == fold_id).then_some(i))
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &a in &self.assignments {
            counts[a - 1] += 1;
        }
        counts
    }
}

/// Per-fold sample statistics.
///
/// In known-mean mode `covariance` is the uncentered second-moment form
/// with divisor `|C_k|` and `mean` is absent; in unknown-mean mode it is
/// the centered form with divisor `|C_k| - 1` and `mean` is the fold mean.
#[derive(Debug, Clone)]
pub struct FoldStatistics {
    pub fold_id: usize,
    pub count: usize,
    pub mean: Option<DVector<f64>>,
    pub covariance: DMatrix<f64>,
}

/// Decompose a PSD matrix `W` of rank `r` into an `n x p` matrix `X` with
/// `X^T X = W`, for any `n >= r`.
///
/// The row space factor is a fresh uniform orthonormal draw, which is what
/// makes the rows of `X` independent Gaussians when `W` is a Wishart draw
/// with `n` degrees of freedom.
pub fn decompose_psd(w: &PsdMatrix, n: usize, rng: &mut RngStream) -> Result<DataMatrix> {
    let r = w.rank();
    if n < r {
        return Err(Error::RankExceedsRows {
            rank: r,
            rows: n,
            need: "n >= rank(W)".into(),
        });
    }
    let p = w.dim();
    if r == 0 {
        return DataMatrix::new(DMatrix::zeros(n, p));
    }
    let decomp = w.eigh();
    let q = sample_haar_stiefel(rng, n, r)?;
    // X = Q D V^T
    let mut qd = q.into_matrix();
    for (j, sv) in decomp.singular_values().iter().enumerate() {
        qd.column_mut(j).scale_mut(*sv);
    }
    DataMatrix::new(qd * decomp.vectors().transpose())
}

/// The raw eigendecomposition square root `D V^T` of `W`, shaped `n x p`.
///
/// This satisfies `X^T X = W` like [`decompose_psd`] but carries no random
/// rotation, so its entries do not have Gaussian marginals when `W` is a
/// Wishart draw. It exists as the negative control for the verification
/// harness and requires `rank(W) == n`.
pub fn eigen_root(w: &PsdMatrix, n: usize) -> Result<DataMatrix> {
    let r = w.rank();
    if r != n {
        return Err(Error::RankExceedsRows {
            rank: r,
            rows: n,
            need: "the plain eigendecomposition root needs rank(W) == n".into(),
        });
    }
    let decomp = w.eigh();
    let mut dv = decomp.vectors().transpose();
    for (i, sv) in decomp.singular_values().iter().enumerate() {
        dv.row_mut(i).scale_mut(*sv);
    }
    DataMatrix::new(dv)
}

/// Decompose `(W, t)` into an `n x p` matrix `X` whose sample mean is `t`
/// and whose centered scatter is `W`, for any `n > rank(W)`.
///
/// `X = 1 t^T + H Xt` where `Xt` is the (n-1)-row output of
/// [`decompose_psd`] and `H` is the deterministic centering complement.
pub fn decompose_with_mean(
    w: &PsdMatrix,
    t: &DVector<f64>,
    n: usize,
    rng: &mut RngStream,
) -> Result<DataMatrix> {
    let r = w.rank();
    let p = w.dim();
    if t.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "mean vector has length {} but matrix is {p}x{p}",
            t.len()
        )));
    }
    if n <= r {
        return Err(Error::RankExceedsRows {
            rank: r,
            rows: n,
            need: "n > rank(W)".into(),
        });
    }
    let xt = decompose_psd(w, n - 1, rng)?;
    let h = helmert_complement(n)?;
    let mut x = h.as_matrix() * xt.as_matrix();
    for j in 0..p {
        x.column_mut(j).add_scalar_mut(t[j]);
    }
    DataMatrix::new(x)
}

/// Partition rows `0..n` into `K` folds.
///
/// Default is balanced contiguous blocks (sizes differ by at most one,
/// larger folds first) for reproducibility; pass `rng` to shuffle the
/// assignment, or `sizes` for explicit positive fold sizes summing to `n`.
pub fn partition_folds(
    n: usize,
    k: usize,
    sizes: Option<&[usize]>,
    rng: Option<&mut RngStream>,
) -> Result<Partition> {
    if k < 1 || k > n {
        return Err(Error::InvalidFoldSpec(format!("need 1 <= K <= n, got K = {k}, n = {n}")));
    }
    let sizes = match sizes {
        Some(s) => {
            if s.len() != k {
                return Err(Error::InvalidFoldSpec(format!(
                    "{} sizes given for K = {k}",
                    s.len()
                )));
            }
            if s.iter().any(|&c| c == 0) {
                return Err(Error::InvalidFoldSpec("fold sizes must be positive".into()));
            }
            if s.iter().sum::<usize>() != n {
                return Err(Error::InvalidFoldSpec(format!(
                    "fold sizes sum to {}, expected {n}",
                    s.iter().sum::<usize>()
                )));
            }
            s.to_vec()
        }
        None => (0..k).map(|i| n / k + usize::from(i < n % k)).collect(),
    };
    let mut assignments = Vec::with_capacity(n);
    for (fold, &count) in sizes.iter().enumerate() {
        assignments.extend(std::iter::repeat(fold + 1).take(count));
    }
    if let Some(rng) = rng {
        assignments.shuffle(rng);
    }
    Partition::new(assignments, k)
}

/// Per-fold uncentered second-moment statistics `S^(k)` with divisor
/// `|C_k|`, for data whose row mean is known (and already removed).
///
/// The scaled statistics add back up exactly: `sum_k |C_k| S^(k) = X^T X`.
pub fn fold_statistics_known_mean(x: &DataMatrix, part: &Partition) -> Result<Vec<FoldStatistics>> {
    if part.len() != x.rows() {
        return Err(Error::PartitionMismatch { partition_len: part.len(), rows: x.rows() });
    }
    let p = x.cols();
    let m = x.as_matrix();
    let mut out = Vec::with_capacity(part.fold_count());
    for fold_id in 1..=part.fold_count() {
        let rows = part.fold_rows(fold_id);
        let mut scatter = DMatrix::zeros(p, p);
        for &i in &rows {
            let xi = m.row(i).transpose();
            scatter += &xi * xi.transpose();
        }
        scatter /= rows.len() as f64;
        out.push(FoldStatistics { fold_id, count: rows.len(), mean: None, covariance: scatter });
    }
    Ok(out)
}

/// Per-fold sample means and centered covariances with divisor `|C_k| - 1`.
///
/// Every fold needs at least two rows.
pub fn fold_statistics_unknown_mean(
    x: &DataMatrix,
    part: &Partition,
) -> Result<Vec<FoldStatistics>> {
    if part.len() != x.rows() {
        return Err(Error::PartitionMismatch { partition_len: part.len(), rows: x.rows() });
    }
    let p = x.cols();
    let m = x.as_matrix();
    let mut out = Vec::with_capacity(part.fold_count());
    for fold_id in 1..=part.fold_count() {
        let rows = part.fold_rows(fold_id);
        let count = rows.len();
        if count < 2 {
            return Err(Error::FoldTooSmall { fold_id, count, min: 2 });
        }
        let mut mean = DVector::zeros(p);
        for &i in &rows {
            mean += m.row(i).transpose();
        }
        mean /= count as f64;
        let mut scatter = DMatrix::zeros(p, p);
        for &i in &rows {
            let d = m.row(i).transpose() - &mean;
            scatter += &d * d.transpose();
        }
        scatter /= (count - 1) as f64;
        out.push(FoldStatistics { fold_id, count, mean: Some(mean), covariance: scatter });
    }
    Ok(out)
}

/// Pool unknown-mean fold statistics back into the overall sample mean and
/// unbiased sample covariance via the within/between scatter decomposition.
pub fn recombine(folds: &[FoldStatistics]) -> Result<SummaryStats> {
    if folds.is_empty() {
        return Err(Error::InvalidInput("no folds to recombine".into()));
    }
    let p = folds[0].covariance.nrows();
    let mut n = 0usize;
    for f in folds {
        let mean = f.mean.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!(
                "fold {} has no mean; recombination needs unknown-mean statistics",
                f.fold_id
            ))
        })?;
        if mean.len() != p || f.covariance.nrows() != p || f.covariance.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "fold {} statistics disagree on dimension {p}",
                f.fold_id
            )));
        }
        n += f.count;
    }
    let mut grand_mean = DVector::zeros(p);
    for f in folds {
        grand_mean += f.mean.as_ref().unwrap() * f.count as f64;
    }
    grand_mean /= n as f64;

    let mut scatter = DMatrix::zeros(p, p);
    for f in folds {
        scatter += &f.covariance * (f.count - 1) as f64;
        let d = f.mean.as_ref().unwrap() - &grand_mean;
        scatter += &d * d.transpose() * f.count as f64;
    }
    scatter /= (n - 1) as f64;
    Ok(SummaryStats {
        mean: grand_mean,
        covariance: PsdMatrix::from_matrix(scatter)?,
        count: n,
    })
}

/// Symmetrized Gram matrix `X^T X` of a data matrix.
pub fn gram(x: &DataMatrix) -> SymmetricMatrix {
    let g = x.as_matrix().transpose() * x.as_matrix();
    SymmetricMatrix::new(g).expect("gram matrix is square")
}

/// Centered scatter `X^T (I - (1/n) 1 1^T) X` of a data matrix.
pub fn centered_scatter(x: &DataMatrix) -> SymmetricMatrix {
    let m = x.as_matrix();
    let mean = m.row_mean();
    let centered = m - DVector::from_element(m.nrows(), 1.0) * &mean;
    SymmetricMatrix::new(centered.transpose() * centered).expect("square")
}
