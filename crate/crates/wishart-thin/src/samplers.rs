//! Seeded random generation: standard normal arrays, uniform (Haar)
//! orthonormal-column matrices, matrix normal samples, and Wishart samples,
//! including the rank-deficient cases.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{PsdMatrix, StiefelMatrix};
use crate::thinning::DataMatrix;

/// A seeded, splittable random stream.
///
/// The same `(seed, stream_id)` pair reproduces the same sample sequence on
/// every platform given the same draw order. Parallel replications take
/// disjoint streams by varying `stream_id` (typically the replication index)
/// under one seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Mean vector plus covariance of a multivariate Gaussian.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    mean: DVector<f64>,
    covariance: PsdMatrix,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, covariance: PsdMatrix) -> Result<Self> {
        if mean.len() != covariance.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {} but covariance is {0}x{1}",
                mean.len(),
                covariance.dim()
            )));
        }
        Ok(Self { mean, covariance })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &PsdMatrix {
        &self.covariance
    }

    /// Draw `n` independent rows from this distribution.
    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Result<DataMatrix> {
        sample_matrix_normal(rng, self.mean.as_slice(), n, &self.covariance)
    }
}

/// An n x p matrix of independent standard normal entries.
///
/// Entries are drawn in column-major order so the sequence is part of the
/// reproducibility contract.
pub fn sample_std_normal_matrix(rng: &mut RngStream, n: usize, p: usize) -> DataMatrix {
    let mut m = DMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    DataMatrix::new(m).expect("normal draws are finite")
}

/// A uniform (rotation-invariant) draw from the n x r matrices with
/// orthonormal columns.
///
/// QR factorization of a standard normal matrix alone is not uniform: the
/// factorization convention biases the column signs. Multiplying column `j`
/// of `Q` by the sign of `R[j, j]` removes the bias and makes the draw
/// exactly rotation invariant.
pub fn sample_haar_stiefel(rng: &mut RngStream, n: usize, r: usize) -> Result<StiefelMatrix> {
    if r < 1 || r > n {
        return Err(Error::InvalidSize(format!(
            "need 1 <= r <= n for an orthonormal n x r draw, got n = {n}, r = {r}"
        )));
    }
    let g = sample_std_normal_matrix(rng, n, r);
    let qr = g.into_matrix().qr();
    let mut q = qr.q();
    let rmat = qr.r();
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    StiefelMatrix::new(q)
}

/// `n` independent rows from `N_p(mean_row, covariance)`.
///
/// The square root comes from the truncated eigendecomposition, so
/// rank-deficient covariances are handled without special casing.
pub fn sample_matrix_normal(
    rng: &mut RngStream,
    mean_row: &[f64],
    n: usize,
    covariance: &PsdMatrix,
) -> Result<DataMatrix> {
    let p = covariance.dim();
    if mean_row.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {} but covariance is {p}x{p}",
            mean_row.len()
        )));
    }
    if n < 1 {
        return Err(Error::InvalidSize("need at least one row".into()));
    }
    let decomp = covariance.eigh();
    let r = decomp.rank();
    // root = V sqrt(D): root * root^T reconstructs the covariance
    let mut root = decomp.vectors().clone();
    for (j, sv) in decomp.singular_values().iter().enumerate() {
        root.column_mut(j).scale_mut(*sv);
    }
    let mut x = if r == 0 {
        DMatrix::zeros(n, p)
    } else {
        let g = sample_std_normal_matrix(rng, n, r);
        g.into_matrix() * root.transpose()
    };
    for j in 0..p {
        x.column_mut(j).add_scalar_mut(mean_row[j]);
    }
    DataMatrix::new(x)
}

/// `Z^T Z` for `Z` with `dof` independent `N_p(0, scale)` rows.
///
/// The result has numeric rank `min(dof, rank(scale))` almost surely; when
/// `dof < p` it is a draw from the rank-deficient regime.
pub fn sample_wishart(rng: &mut RngStream, dof: usize, scale: &PsdMatrix) -> Result<PsdMatrix> {
    if dof < 1 {
        return Err(Error::InvalidDof(dof));
    }
    let z = sample_matrix_normal(rng, &vec![0.0; scale.dim()], dof, scale)?;
    let w = z.as_matrix().transpose() * z.as_matrix();
    PsdMatrix::from_matrix(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;

    fn toeplitz(p: usize) -> PsdMatrix {
        PsdMatrix::from_symmetric(SymmetricMatrix::from_fn(p, |i, j| {
            1.0 / (1.0 + (i as f64 - j as f64).abs())
        }))
        .unwrap()
    }

    #[test]
    fn std_normal_deterministic() {
        let a = sample_std_normal_matrix(&mut RngStream::new(7, 0), 2, 2);
        let b = sample_std_normal_matrix(&mut RngStream::new(7, 0), 2, 2);
        assert_eq!(a.as_matrix(), b.as_matrix());
        let c = sample_std_normal_matrix(&mut RngStream::new(7, 1), 2, 2);
        assert_ne!(a.as_matrix(), c.as_matrix());
    }

    #[test]
    fn std_normal_first_moment() {
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_std_normal_matrix(&mut rng, 1, 1).as_matrix()[(0, 0)];
        }
        assert!((sum / n as f64).abs() < 0.02);
    }

    #[test]
    fn std_normal_second_moment() {
        let x = sample_std_normal_matrix(&mut RngStream::new(12, 0), 1000, 1);
        let mean = x.as_matrix().column(0).mean();
        let var = x
            .as_matrix()
            .column(0)
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / 999.0;
        assert!((var - 1.0).abs() < 0.15);
    }

    #[test]
    fn haar_one_by_one_is_sign_flip() {
        let mut rng = RngStream::new(3, 0);
        let reps = 50_000;
        let mut plus = 0usize;
        for _ in 0..reps {
            let q = sample_haar_stiefel(&mut rng, 1, 1).unwrap();
            let v = q.as_matrix()[(0, 0)];
            assert!((v.abs() - 1.0).abs() < 1e-12);
            if v > 0.0 {
                plus += 1;
            }
        }
        let freq = plus as f64 / reps as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn haar_columns_orthonormal() {
        let mut rng = RngStream::new(4, 0);
        for (n, r) in [(5, 3), (8, 8), (2, 1), (100, 10)] {
            let q = sample_haar_stiefel(&mut rng, n, r).unwrap();
            let gram = q.as_matrix().transpose() * q.as_matrix();
            assert!((gram - DMatrix::identity(r, r)).amax() < 1e-10);
        }
    }

    #[test]
    fn haar_entry_moments() {
        let mut rng = RngStream::new(5, 0);
        let reps = 50_000;
        let (n, r) = (4, 2);
        let mut mean = DMatrix::zeros(n, r);
        let mut second = DMatrix::zeros(n, r);
        for _ in 0..reps {
            let q = sample_haar_stiefel(&mut rng, n, r).unwrap();
            for i in 0..n {
                for j in 0..r {
                    let v = q.as_matrix()[(i, j)];
                    mean[(i, j)] += v;
                    second[(i, j)] += v * v;
                }
            }
        }
        mean /= reps as f64;
        second /= reps as f64;
        for i in 0..n {
            for j in 0..r {
                assert!(mean[(i, j)].abs() < 0.01, "mean[{i},{j}] = {}", mean[(i, j)]);
                assert!(
                    (second[(i, j)] - 0.25).abs() < 0.01,
                    "second[{i},{j}] = {}",
                    second[(i, j)]
                );
            }
        }
    }

    #[test]
    fn haar_rejects_bad_shape() {
        let mut rng = RngStream::new(1, 0);
        assert!(sample_haar_stiefel(&mut rng, 2, 3).is_err());
        assert!(sample_haar_stiefel(&mut rng, 2, 0).is_err());
    }

    // Left rotation invariance: the (1,1) entry of P*Q matches the law of
    // Q's (1,1) entry for a fixed orthogonal P.
    #[test]
    fn haar_left_rotation_invariant() {
        let n = 4;
        let p_fixed = sample_haar_stiefel(&mut RngStream::new(999, 0), n, n).unwrap();
        let mut rng = RngStream::new(6, 0);
        let reps = 20_000;
        let mut base = Vec::with_capacity(reps);
        let mut rotated = Vec::with_capacity(reps);
        for _ in 0..reps {
            let q = sample_haar_stiefel(&mut rng, n, 2).unwrap();
            base.push(q.as_matrix()[(0, 0)]);
            rotated.push((p_fixed.as_matrix() * q.as_matrix())[(0, 0)]);
        }
        let d = two_sample_ks(&mut base, &mut rotated);
        // 1% two-sample critical value at 20k vs 20k draws
        let crit = 1.63 * (2.0 / reps as f64).sqrt();
        assert!(d < crit, "D = {d}, crit = {crit}");
    }

    fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let diff = (i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs();
            d = d.max(diff);
        }
        d
    }

    #[test]
    fn matrix_normal_degenerate_covariance() {
        let cov = PsdMatrix::zeros(2);
        let x = sample_matrix_normal(&mut RngStream::new(8, 0), &[3.0, -1.0], 2, &cov).unwrap();
        for i in 0..2 {
            assert_eq!(x.as_matrix()[(i, 0)], 3.0);
            assert_eq!(x.as_matrix()[(i, 1)], -1.0);
        }
    }

    #[test]
    fn matrix_normal_identity_covariance() {
        let cov = PsdMatrix::identity(2);
        let x = sample_matrix_normal(&mut RngStream::new(9, 0), &[0.0, 0.0], 100_000, &cov).unwrap();
        let m = x.as_matrix();
        let n = m.nrows() as f64;
        for a in 0..2 {
            for b in 0..2 {
                let cov_ab = m.column(a).dot(&m.column(b)) / n;
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((cov_ab - target).abs() < 0.02, "cov[{a},{b}] = {cov_ab}");
            }
        }
    }

    #[test]
    fn matrix_normal_toeplitz_covariance() {
        let cov = toeplitz(5);
        let n = 100_000usize;
        let x = sample_matrix_normal(&mut RngStream::new(10, 0), &[0.0; 5], n, &cov).unwrap();
        let m = x.as_matrix();
        let sigma = cov.as_matrix();
        for a in 0..5 {
            for b in 0..5 {
                let got = m.column(a).dot(&m.column(b)) / n as f64;
                let se = ((sigma[(a, a)] * sigma[(b, b)] + sigma[(a, b)] * sigma[(a, b)])
                    / n as f64)
                    .sqrt();
                assert!(
                    (got - sigma[(a, b)]).abs() < 5.0 * se,
                    "cov[{a},{b}] = {got}, want {} +- {}",
                    sigma[(a, b)],
                    5.0 * se
                );
            }
        }
    }

    #[test]
    fn wishart_scalar_mean() {
        let scale = PsdMatrix::identity(1);
        let mut rng = RngStream::new(13, 0);
        let reps = 100_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            sum += sample_wishart(&mut rng, 1, &scale).unwrap().as_matrix()[(0, 0)];
        }
        let mean = sum / reps as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean = {mean}");
    }

    #[test]
    fn wishart_rank_is_dof() {
        let scale = toeplitz(5);
        for rep in 0..100 {
            let w = sample_wishart(&mut RngStream::new(14, rep), 3, &scale).unwrap();
            assert_eq!(w.rank(), 3, "rep = {rep}");
        }
    }

    #[test]
    fn wishart_rejects_zero_dof() {
        let scale = PsdMatrix::identity(2);
        assert!(matches!(
            sample_wishart(&mut RngStream::new(1, 0), 0, &scale),
            Err(Error::InvalidDof(0))
        ));
    }

    // sample_wishart(dof, S) must agree in distribution with X^T X for
    // X = sample_matrix_normal(0, dof, S): entrywise mean and variance
    // within 5 standard errors.
    #[test]
    fn wishart_matches_gram_of_matrix_normal() {
        let scale = toeplitz(3);
        let dof = 4;
        let reps = 50_000;
        let p = 3;
        let mut rng_a = RngStream::new(15, 0);
        let mut rng_b = RngStream::new(16, 0);
        let mut stats = vec![(0.0f64, 0.0f64, 0.0f64, 0.0f64); p * p];
        for _ in 0..reps {
            let w = sample_wishart(&mut rng_a, dof, &scale).unwrap();
            let x = sample_matrix_normal(&mut rng_b, &[0.0; 3], dof, &scale).unwrap();
            let g = x.as_matrix().transpose() * x.as_matrix();
            for i in 0..p {
                for j in 0..p {
                    let (sa, sa2, sb, sb2) = &mut stats[i * p + j];
                    let a = w.as_matrix()[(i, j)];
                    let b = g[(i, j)];
                    *sa += a;
                    *sa2 += a * a;
                    *sb += b;
                    *sb2 += b * b;
                }
            }
        }
        let nf = reps as f64;
        for (sa, sa2, sb, sb2) in stats {
            let (ma, mb) = (sa / nf, sb / nf);
            let (va, vb) = (sa2 / nf - ma * ma, sb2 / nf - mb * mb);
            let se_mean = (va / nf).sqrt() + (vb / nf).sqrt();
            assert!((ma - mb).abs() < 5.0 * se_mean);
            // variance of the sample variance ~ 2 v^2 / n for near-Gaussian;
            // these entries are quadratic forms, use a generous 4 v^2 / n
            let se_var = 2.0 * (va + vb) / nf.sqrt();
            assert!((va - vb).abs() < 5.0 * se_var);
        }
    }

    #[test]
    fn wishart_first_moment_matches_scale() {
        let scale = toeplitz(3);
        let dof = 3;
        let reps = 50_000;
        let mut rng = RngStream::new(17, 0);
        let p = 3;
        let mut sum = DMatrix::zeros(p, p);
        let mut sum_sq = DMatrix::zeros(p, p);
        for _ in 0..reps {
            let w = sample_wishart(&mut rng, dof, &scale).unwrap();
            sum += w.as_matrix();
            sum_sq += w.as_matrix().component_mul(w.as_matrix());
        }
        let nf = reps as f64;
        for i in 0..p {
            for j in 0..p {
                let mean = sum[(i, j)] / nf;
                let var = sum_sq[(i, j)] / nf - mean * mean;
                let se = (var / nf).sqrt();
                let target = dof as f64 * scale.as_matrix()[(i, j)];
                assert!(
                    (mean - target).abs() < 5.0 * se,
                    "E[W[{i},{j}]] = {mean}, want {target} +- {}",
                    5.0 * se
                );
            }
        }
    }
}
