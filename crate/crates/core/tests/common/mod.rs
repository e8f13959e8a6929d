//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavescope::cae::{build_cae, Activation, Batch, CaeModel, LayerSpec};
use wavescope::ocsvm::dual_objective;

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

/// Mixed-scale data so eigenvalues are well separated.
pub fn anisotropic(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    let mut x = gaussian(rng, n, d);
    let mix = gaussian(rng, d, d);
    for j in 0..d {
        x.column_mut(j).scale_mut(1.0 + j as f64);
    }
    x * mix
}

pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mean = x.row_mean();
    let mut xc = x.clone();
    for mut r in xc.row_iter_mut() {
        r -= &mean;
    }
    xc.transpose() * xc / (n - 1.0)
}

/// Eigenpairs of the sample covariance, descending.
pub fn eigen_oracle(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(covariance(x));
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|a, b| e.eigenvalues[*b].total_cmp(&e.eigenvalues[*a]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(x.ncols(), idx.len(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Sine of the largest principal angle between the column spaces of two
/// orthonormal bases; stable for tiny angles where acos is not.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let residual = b - a * (a.transpose() * b);
    residual.singular_values().max().min(1.0).asin()
}

pub fn laplace(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Best |correlation| per true source under the best permutation.
pub fn matched_correlations(truth: &DMatrix<f64>, est: &DMatrix<f64>) -> Vec<f64> {
    let k = truth.ncols();
    let col = |m: &DMatrix<f64>, j: usize| m.column(j).iter().copied().collect::<Vec<_>>();
    let corr = DMatrix::from_fn(k, k, |i, j| correlation(&col(truth, i), &col(est, j)).abs());
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let best = perms
        .iter()
        .max_by(|p, q| {
            let s = |p: &[usize; 3]| (0..3).map(|i| corr[(i, p[i])]).sum::<f64>();
            s(p).total_cmp(&s(q))
        })
        .unwrap();
    (0..k).map(|i| corr[(i, best[i])]).collect()
}

/// Euclidean projection onto {0 ≤ a ≤ c, Σa = 1} by bisection on the shift.
pub fn project(v: &[f64], c: f64) -> Vec<f64> {
    let mass = |t: f64| v.iter().map(|x| (x - t).clamp(0.0, c)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).clamp(0.0, c)).collect()
}

/// Accelerated projected gradient on ½αᵀKα.
pub fn oracle_objective(k: &DMatrix<f64>, c: f64) -> f64 {
    let n = k.nrows();
    let lipschitz = (0..n)
        .map(|i| k.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut x = project(&vec![1.0 / n as f64; n], c);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * y[j]).sum()).collect();
        let z: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let x_new = project(&z, c);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_new * (a - b))
            .collect();
        x = x_new;
        t = t_new;
    }
    dual_objective(&x, k)
}

pub fn lrelu() -> Activation {
    Activation::LeakyRelu(0.2)
}

/// 8×8 input, two stride-2 convolutions, code width 2, with every layer
/// kind present at least once.
pub fn tiny_model(seed: u64) -> CaeModel {
    let encoder = vec![
        LayerSpec::conv(2, lrelu()),
        LayerSpec::BatchNorm,
        LayerSpec::conv(3, lrelu()),
        LayerSpec::BatchNorm,
    ];
    let code = vec![
        LayerSpec::Flatten,
        LayerSpec::Dense {
            units: 4,
            activation: Activation::Linear,
        },
        LayerSpec::Activation(lrelu()),
        LayerSpec::Dense {
            units: 2,
            activation: Activation::Linear,
        },
    ];
    let decoder = vec![
        LayerSpec::Dense {
            units: 12,
            activation: lrelu(),
        },
        LayerSpec::Reshape {
            height: 2,
            width: 2,
            channels: 3,
        },
        LayerSpec::conv_transpose(2, lrelu()),
        LayerSpec::BatchNorm,
        LayerSpec::conv_transpose(1, Activation::Linear),
        LayerSpec::Activation(Activation::Sigmoid),
    ];
    build_cae(&encoder, &code, &decoder, (8, 8, 1), seed).unwrap()
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize, shape: (usize, usize, usize)) -> Batch {
    let len = n * shape.0 * shape.1 * shape.2;
    Batch::new(n, shape, (0..len).map(|_| rng.random::<f64>()).collect()).unwrap()
}
