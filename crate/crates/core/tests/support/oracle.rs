//! Brute-force reference implementations used to check the core metrics.
//!
//! Each oracle works from raw vectors and takes a different computational
//! route than the library: explicit confusion matrices, Pearson correlation
//! on 0/1 floats, full sorts, all-pairs distance tables, and nalgebra's
//! eigensolver for FID.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// (switched, mal_to_ben, ben_to_mal) from raw probabilities at threshold 0.5.
pub fn switched(base: &[f64], biased: &[f64]) -> (usize, usize, usize) {
    let mut m2b = 0;
    let mut b2m = 0;
    for i in 0..base.len() {
        let before = base[i] >= 0.5;
        let after = biased[i] >= 0.5;
        if before && !after {
            m2b += 1;
        }
        if !before && after {
            b2m += 1;
        }
    }
    (m2b + b2m, m2b, b2m)
}

/// (mean, median) of absolute shifts via a full sort.
pub fn shift(base: &[f64], biased: &[f64]) -> (f64, f64) {
    let mut s: Vec<f64> = base.iter().zip(biased).map(|(a, b)| (b - a).abs()).collect();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    let median = if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 };
    (mean, median)
}

/// F1 (%) for malignant from a 2x2 confusion matrix via precision and recall.
pub fn f1(probs: &[f64], malignant: &[bool]) -> f64 {
    let mut cm = [[0usize; 2]; 2]; // [truth][pred]
    for (p, &t) in probs.iter().zip(malignant) {
        cm[t as usize][(*p >= 0.5) as usize] += 1;
    }
    let tp = cm[1][1] as f64;
    let fp = cm[0][1] as f64;
    let fn_ = cm[1][0] as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * precision * recall / (precision + recall)
    }
}

/// Pearson correlation of two 0/1 vectors; `None` if either is constant.
pub fn phi(x: &[bool], y: &[bool]) -> Option<f64> {
    let n = x.len() as f64;
    let xf: Vec<f64> = x.iter().map(|&b| b as u8 as f64).collect();
    let yf: Vec<f64> = y.iter().map(|&b| b as u8 as f64).collect();
    let mx = xf.iter().sum::<f64>() / n;
    let my = yf.iter().sum::<f64>() / n;
    let cov: f64 = xf.iter().zip(&yf).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = xf.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = yf.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}

/// Cohen's kappa from a full `k x k` confusion matrix over labels `0..k`.
pub fn kappa(a: &[u32], b: &[u32], k: usize) -> f64 {
    let n = a.len() as f64;
    let mut cm = vec![vec![0.0; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        cm[x as usize][y as usize] += 1.0;
    }
    let po: f64 = (0..k).map(|i| cm[i][i]).sum::<f64>() / n;
    let pe: f64 = (0..k)
        .map(|i| {
            let row: f64 = cm[i].iter().sum();
            let col: f64 = (0..k).map(|j| cm[j][i]).sum();
            row * col / (n * n)
        })
        .sum();
    if (1.0 - pe).abs() < 1e-12 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

/// Weighted F1 (fraction) with explicit per-class confusion counts.
pub fn weighted_f1(truth: &[u32], pred: &[u32], classes: u32) -> f64 {
    let n = truth.len() as f64;
    let mut total = 0.0;
    for c in 0..classes {
        let support = truth.iter().filter(|&&t| t == c).count() as f64;
        if support == 0.0 {
            continue;
        }
        let tp = truth.iter().zip(pred).filter(|(&t, &p)| t == c && p == c).count() as f64;
        let fp = truth.iter().zip(pred).filter(|(&t, &p)| t != c && p == c).count() as f64;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = tp / support;
        let f = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        total += f * support / n;
    }
    total
}

/// Mean and (n-1) covariance with an explicit double loop over dimension pairs.
pub fn covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mu = vec![0.0; d];
    for j in 0..d {
        for r in rows {
            mu[j] += r[j];
        }
        mu[j] /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for r in rows {
                s += (r[a] - mu[a]) * (r[b] - mu[b]);
            }
            cov[a][b] = s / (n - 1) as f64;
        }
    }
    (mu, cov)
}

fn sqrtm_nalgebra(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// FID computed with nalgebra's symmetric eigensolver.
pub fn fid(mu_a: &[f64], sigma_a: &[f64], mu_b: &[f64], sigma_b: &[f64]) -> f64 {
    let d = mu_a.len();
    let sa = DMatrix::from_row_slice(d, d, sigma_a);
    let sb = DMatrix::from_row_slice(d, d, sigma_b);
    let diff = DVector::from_column_slice(mu_a) - DVector::from_column_slice(mu_b);
    let ra = sqrtm_nalgebra(&sa);
    let inner = &ra * &sb * &ra;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    diff.norm_squared() + sa.trace() + sb.trace() - 2.0 * cross
}

/// Unbiased MMD² with the cubic polynomial kernel, full double sums.
pub fn mmd2(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let d = x[0].len() as f64;
    let k = |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / d + 1.0).powi(3);
    let m = x.len() as f64;
    let mut xx = 0.0;
    let mut yy = 0.0;
    let mut xy = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                xx += k(&x[i], &x[j]);
                yy += k(&y[i], &y[j]);
            }
            xy += k(&x[i], &y[j]);
        }
    }
    xx / (m * (m - 1.0)) + yy / (m * (m - 1.0)) - 2.0 * xy / (m * m)
}

/// Precision/recall from a full distance table and sorted neighbor lists.
pub fn precision_recall(real: &[Vec<f64>], fake: &[Vec<f64>], k: usize) -> (f64, f64) {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let radii = |set: &[Vec<f64>]| -> Vec<f64> {
        (0..set.len())
            .map(|i| {
                let mut ds: Vec<f64> = (0..set.len()).filter(|&j| j != i).map(|j| dist(&set[i], &set[j])).collect();
                ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ds[k - 1]
            })
            .collect()
    };
    let real_r = radii(real);
    let fake_r = radii(fake);
    let covered = |manifold: &[Vec<f64>], r: &[f64], probe: &[Vec<f64>]| {
        probe.iter().filter(|p| manifold.iter().zip(r).any(|(m, rad)| dist(p, m) <= *rad)).count() as f64 / probe.len() as f64
    };
    (covered(real, &real_r, fake), covered(fake, &fake_r, real))
}

/// Per-pixel select: `source` where the mask is set, else `target`.
pub fn composite(target: &[[u8; 3]], source: &[[u8; 3]], mask: &[bool]) -> Vec<[u8; 3]> {
    let mut out = Vec::with_capacity(target.len());
    for i in 0..target.len() {
        out.push(if mask[i] { source[i] } else { target[i] });
    }
    out
}
