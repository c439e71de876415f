//! Generative-model fidelity metrics over precomputed embeddings.
//!
//! Storage is `f32`; all arithmetic is `f64`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{matmul, symmetric_eigen, symmetric_eigenvalues, symmetrize, trace};
use crate::util::{mean, sample_std};

/// Eigenvalues down to this are treated as rounding noise and clamped to 0.
pub const EIGEN_TOLERANCE: f64 = 1e-6;

/// `n x d` row-major embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    n: usize,
    d: usize,
    data: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive"));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, actual: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(EmbeddingSet { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Mean vector and covariance matrix of an embedding distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    dim: usize,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GaussianStats {
    /// `sigma` is row-major `dim x dim` and gets symmetrized.
    pub fn new(mu: Vec<f64>, mut sigma: Vec<f64>) -> Result<Self> {
        let dim = mu.len();
        if sigma.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: sigma.len() });
        }
        if let Some(i) = mu.iter().chain(&sigma).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        symmetrize(&mut sigma, dim);
        Ok(GaussianStats { dim, mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

/// Sample mean and unbiased covariance.
pub fn gaussian_stats(emb: &EmbeddingSet) -> Result<GaussianStats> {
    let (n, d) = (emb.n, emb.d);
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, actual: n });
    }
    let mut mu = vec![0.0; d];
    for i in 0..n {
        for (m, &x) in mu.iter_mut().zip(emb.row(i)) {
            *m += x as f64;
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }

    let mut sigma = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for i in 0..n {
        for ((c, &x), m) in centered.iter_mut().zip(emb.row(i)).zip(&mu) {
            *c = x as f64 - m;
        }
        for a in 0..d {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            let row = &mut sigma[a * d..a * d + a + 1];
            for (s, &cb) in row.iter_mut().zip(&centered[..=a]) {
                *s += ca * cb;
            }
        }
    }
    let norm = (n - 1) as f64;
    for a in 0..d {
        for b in 0..=a {
            let v = sigma[a * d + b] / norm;
            sigma[a * d + b] = v;
            sigma[b * d + a] = v;
        }
    }
    GaussianStats::new(mu, sigma)
}

fn clamp_eigenvalue(lambda: f64) -> Result<f64> {
    if lambda < -EIGEN_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite(lambda));
    }
    Ok(lambda.max(0.0))
}

/// Symmetric PSD square root via eigendecomposition.
fn sqrt_psd(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let eig = symmetric_eigen(a, n)?;
    let roots: Vec<f64> = eig.values.iter().map(|&l| clamp_eigenvalue(l).map(libm::sqrt)).collect::<Result<_>>()?;
    let mut out = vec![0.0; n * n];
    for (k, &root) in roots.iter().enumerate() {
        if root == 0.0 {
            continue;
        }
        let v = eig.vector(k);
        for i in 0..n {
            let vi = root * v[i];
            if vi == 0.0 {
                continue;
            }
            for (o, &vj) in out[i * n..(i + 1) * n].iter_mut().zip(v) {
                *o += vi * vj;
            }
        }
    }
    symmetrize(&mut out, n);
    Ok(out)
}

/// Fréchet distance between two Gaussians:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The trace of the cross term is taken as the sum of square roots of the
/// eigenvalues of the symmetric matrix `S_a^(1/2) S_b S_a^(1/2)`, which shares
/// its spectrum with `S_a S_b`.
pub fn fid(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, actual: b.dim });
    }
    let n = a.dim;
    let mean_term: f64 = a.mu.iter().zip(&b.mu).map(|(x, y)| (x - y) * (x - y)).sum();
    let root_a = sqrt_psd(&a.sigma, n)?;
    let mut inner = matmul(&matmul(&root_a, &b.sigma, n), &root_a, n);
    symmetrize(&mut inner, n);
    let mut cross = 0.0;
    for lambda in symmetric_eigenvalues(&inner, n)? {
        cross += libm::sqrt(clamp_eigenvalue(lambda)?);
    }
    Ok(mean_term + trace(&a.sigma, n) + trace(&b.sigma, n) - 2.0 * cross)
}

// ---------------------------------------------------------------------------
// KID

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KidParams {
    pub subset_size: usize,
    pub n_subsets: usize,
    pub seed: u64,
}

impl Default for KidParams {
    fn default() -> Self {
        KidParams { subset_size: 1000, n_subsets: 100, seed: 0 }
    }
}

impl KidParams {
    /// Caps `subset_size` at the smaller sample count.
    pub fn capped(self, na: usize, nb: usize) -> Self {
        KidParams { subset_size: self.subset_size.min(na).min(nb), ..self }
    }
}

/// Row indices drawn for one KID subset pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetPair {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

/// Draws the subsets `kid` evaluates, without replacement within a subset.
pub fn kid_subsets(na: usize, nb: usize, params: KidParams) -> Result<Vec<SubsetPair>> {
    let m = params.subset_size;
    if m < 2 {
        return Err(Error::InvalidParameter("KID subset size must be at least 2"));
    }
    if m > na.min(nb) {
        return Err(Error::TooFewSamples { needed: m, actual: na.min(nb) });
    }
    if params.n_subsets == 0 {
        return Err(Error::InvalidParameter("KID needs at least one subset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok((0..params.n_subsets)
        .map(|_| SubsetPair { a: index::sample(&mut rng, na, m).into_vec(), b: index::sample(&mut rng, nb, m).into_vec() })
        .collect())
}

fn poly_kernel(x: &[f32], y: &[f32]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(&p, &q)| p as f64 * q as f64).sum();
    let base = dot / x.len() as f64 + 1.0;
    base * base * base
}

/// Unbiased MMD² with kernel `(xᵀy / d + 1)³` between the selected rows.
pub fn mmd2_unbiased(a: &EmbeddingSet, b: &EmbeddingSet, subset: &SubsetPair) -> Result<f64> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, actual: b.d });
    }
    let m = subset.a.len();
    if m < 2 || subset.b.len() != m {
        return Err(Error::InvalidParameter("KID subsets must have equal size of at least 2"));
    }
    let (mut kxx, mut kyy, mut kxy) = (0.0, 0.0, 0.0);
    for (p, &i) in subset.a.iter().enumerate() {
        for &j in &subset.a[p + 1..] {
            kxx += poly_kernel(a.row(i), a.row(j));
        }
    }
    for (p, &i) in subset.b.iter().enumerate() {
        for &j in &subset.b[p + 1..] {
            kyy += poly_kernel(b.row(i), b.row(j));
        }
    }
    for &i in &subset.a {
        for &j in &subset.b {
            kxy += poly_kernel(a.row(i), b.row(j));
        }
    }
    let mf = m as f64;
    // off-diagonal sums were accumulated over i < j only
    Ok(2.0 * (kxx + kyy) / (mf * (mf - 1.0)) - 2.0 * kxy / (mf * mf))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KidEstimate {
    pub mean: f64,
    /// Sample standard deviation over subsets, 0 for a single subset.
    pub std: f64,
    pub per_subset: Vec<f64>,
}

impl KidEstimate {
    pub fn from_values(per_subset: Vec<f64>) -> Self {
        KidEstimate { mean: mean(&per_subset), std: sample_std(&per_subset), per_subset }
    }
}

pub fn kid(a: &EmbeddingSet, b: &EmbeddingSet, params: KidParams) -> Result<KidEstimate> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, actual: b.d });
    }
    let values = kid_subsets(a.n, b.n, params)?.iter().map(|s| mmd2_unbiased(a, b, s)).collect::<Result<Vec<_>>>()?;
    Ok(KidEstimate::from_values(values))
}

// ---------------------------------------------------------------------------
// Precision / recall

fn sq_dist(x: &[f32], y: &[f32]) -> f64 {
    x.iter().zip(y).map(|(&p, &q)| (p as f64 - q as f64) * (p as f64 - q as f64)).sum()
}

/// Squared distance from every point to its k-th nearest other point.
pub fn knn_radii_sq(set: &EmbeddingSet, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive"));
    }
    if k >= set.n {
        return Err(Error::TooFewSamples { needed: k + 1, actual: set.n });
    }
    let mut dists = vec![0.0; set.n - 1];
    Ok((0..set.n)
        .map(|i| {
            let mut w = 0;
            for j in 0..set.n {
                if j != i {
                    dists[w] = sq_dist(set.row(i), set.row(j));
                    w += 1;
                }
            }
            *dists.select_nth_unstable_by(k - 1, f64::total_cmp).1
        })
        .collect())
}

/// Fraction of `probe` points inside at least one k-NN ball of `manifold`.
pub fn manifold_coverage(manifold: &EmbeddingSet, radii_sq: &[f64], probe: &EmbeddingSet) -> f64 {
    let inside = (0..probe.n)
        .filter(|&p| (0..manifold.n).any(|m| sq_dist(probe.row(p), manifold.row(m)) <= radii_sq[m]))
        .count();
    inside as f64 / probe.n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

/// k-NN manifold precision (fake inside real balls) and recall (real inside fake balls).
pub fn precision_recall(real: &EmbeddingSet, fake: &EmbeddingSet, k: usize) -> Result<PrecisionRecall> {
    if real.d != fake.d {
        return Err(Error::DimensionMismatch { expected: real.d, actual: fake.d });
    }
    let real_radii = knn_radii_sq(real, k)?;
    let fake_radii = knn_radii_sq(fake, k)?;
    Ok(PrecisionRecall {
        precision: manifold_coverage(real, &real_radii, fake),
        recall: manifold_coverage(fake, &fake_radii, real),
    })
}
