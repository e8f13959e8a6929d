//! Eigen-decomposition whitening and symmetric FastICA with the log-cosh
//! contrast.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{center, check_cols, column_mean, fix_row_signs};
use crate::error::{Error, Result};
use crate::seed;

/// Ridge added to covariance eigenvalues, relative to the trace.
pub const RIDGE: f64 = 1e-12;

/// Result of [`whiten`]: `whitened = (X − mean) · matrixᵀ` has identity
/// sample covariance.
#[derive(Debug, Clone)]
pub struct Whitening {
    pub mean: DVector<f64>,
    /// Symmetric `E (D + ε)^{-1/2} Eᵀ`.
    pub matrix: DMatrix<f64>,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
}

fn sorted_eigen(sym: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

fn covariance(xc: &DMatrix<f64>) -> DMatrix<f64> {
    let n = xc.nrows();
    (xc.transpose() * xc) / (n - 1) as f64
}

/// Full-rank whitening through the eigen-decomposition of the sample
/// covariance (normalized by `n − 1`).
pub fn whiten(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Whitening)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("whitening needs at least 2 samples"));
    }
    let mean = column_mean(x);
    let xc = center(x, &mean);
    let cov = covariance(&xc);
    let trace = cov.trace();
    if !(trace > 0.0) {
        return Err(Error::invalid("cannot whiten data with zero variance"));
    }
    let (values, vectors) = sorted_eigen(cov);
    let eps = RIDGE * trace;
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|l| 1.0 / (l.max(0.0) + eps).sqrt()),
    ));
    let matrix = &vectors * inv_sqrt * vectors.transpose();
    let whitened = &xc * &matrix;
    Ok((
        whitened,
        Whitening {
            mean,
            matrix,
            eigenvalues: values,
            eigenvectors: vectors,
        },
    ))
}

/// Top `m` covariance eigenpairs of centered data, computed from whichever
/// of `XᵀX` (d × d) or `XXᵀ` (n × n) is smaller; both share the nonzero
/// spectrum.
fn top_eigenpairs(xc: &DMatrix<f64>, m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = xc.shape();
    let denom = (n - 1) as f64;
    if d <= n {
        let (values, vectors) = sorted_eigen(covariance(xc));
        (values[..m].to_vec(), vectors.columns(0, m).into_owned())
    } else {
        let gram = (xc * xc.transpose()) / denom;
        let (values, u) = sorted_eigen(gram);
        let mut e = xc.transpose() * u.columns(0, m);
        for (j, mut col) in e.column_iter_mut().enumerate() {
            let norm = (denom * values[j].max(0.0)).sqrt();
            if norm > 0.0 {
                col /= norm;
            }
        }
        (values[..m].to_vec(), e)
    }
}

/// Fitted FastICA model. Sources are `ŝ = components · (x − mean)` with
/// `components = unmixing · whitening`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcaModel {
    pub mean: DVector<f64>,
    /// `m × d`: `D_m^{-1/2} E_mᵀ` over the retained eigenpairs.
    pub whitening: DMatrix<f64>,
    /// `m × m` orthogonal rotation of the whitened space.
    pub unmixing: DMatrix<f64>,
    /// `m × d` composed forward map.
    pub components: DMatrix<f64>,
    /// `d × m` pseudo-inverse of `components` (estimated mixing matrix).
    pub mixing: DMatrix<f64>,
    pub converged: bool,
    pub n_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastIcaConfig {
    pub n_components: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl FastIcaConfig {
    pub fn new(n_components: usize) -> Self {
        Self {
            n_components,
            tol: 1e-4,
            max_iter: 500,
            seed: 0,
        }
    }
}

/// `(W Wᵀ)^{-1/2} W`
fn sym_decorrelate(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()));
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose() * w
}

pub fn fastica_fit(x: &DMatrix<f64>, config: &FastIcaConfig) -> Result<IcaModel> {
    let (n, d) = x.shape();
    let m = config.n_components;
    if n < 2 {
        return Err(Error::invalid("FastICA needs at least 2 samples"));
    }
    if m == 0 || m > d.min(n - 1) {
        return Err(Error::invalid(format!(
            "n_components must lie in 1..={}, got {m}",
            d.min(n - 1)
        )));
    }
    if !(config.tol > 0.0) || config.max_iter == 0 {
        return Err(Error::invalid("FastICA needs tol > 0 and max_iter > 0"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("FastICA input".into()));
    }
    let mean = column_mean(x);
    let xc = center(x, &mean);
    let trace = xc.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;
    if !(trace > 0.0) {
        return Err(Error::invalid("cannot whiten data with zero variance"));
    }
    let (values, e) = top_eigenpairs(&xc, m);
    let eps = RIDGE * trace;
    let whitening = DMatrix::from_fn(m, d, |i, j| e[(j, i)] / (values[i].max(0.0) + eps).sqrt());
    let z = &xc * whitening.transpose();

    let mut rng = seed::rng(config.seed);
    let w0 = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut w = sym_decorrelate(&w0);
    let mut best = (f64::INFINITY, w.clone());
    let mut converged = false;
    let mut n_iter = 0;
    let nf = n as f64;
    for it in 1..=config.max_iter {
        n_iter = it;
        let wx = &z * w.transpose();
        let g = wx.map(f64::tanh);
        let g_prime_mean: Vec<f64> = (0..m)
            .map(|j| g.column(j).iter().map(|t| 1.0 - t * t).sum::<f64>() / nf)
            .collect();
        let mut w_new = g.transpose() * &z / nf;
        for (i, gp) in g_prime_mean.iter().enumerate() {
            let wi = w.row(i) * *gp;
            let mut row = w_new.row_mut(i);
            row -= wi;
        }
        let w_new = sym_decorrelate(&w_new);
        let lim = (&w_new * w.transpose())
            .diagonal()
            .iter()
            .map(|v| (v.abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < best.0 {
            best = (lim, w.clone());
        }
        if lim < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        w = best.1;
    }

    let signs = fix_row_signs(&mut (&w * &whitening));
    for (i, s) in signs.iter().enumerate() {
        let mut row = w.row_mut(i);
        row *= *s;
    }
    let components = &w * &whitening;
    let sqrt_d = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        values.iter().map(|l| (l.max(0.0) + eps).sqrt()),
    ));
    let mixing = e * sqrt_d * w.transpose();
    Ok(IcaModel {
        mean,
        whitening,
        unmixing: w,
        components,
        mixing,
        converged,
        n_iter,
    })
}

impl IcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.components.ncols()
    }

    /// `ŝ = (X − mean) · componentsᵀ`
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols("ICA transform", self.dim(), x)?;
        Ok(center(x, &self.mean) * self.components.transpose())
    }

    /// `x = ŝ · mixingᵀ + mean`
    pub fn inverse(&self, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols("ICA inverse", self.n_components(), s)?;
        let mut out = s * self.mixing.transpose();
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(out)
    }
}

pub fn ica_transform(model: &IcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}

pub fn ica_inverse(model: &IcaModel, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.inverse(s)
}
