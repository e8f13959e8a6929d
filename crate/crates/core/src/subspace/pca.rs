use nalgebra::{DMatrix, DVector};

use super::{center, check_cols, column_mean, fix_row_signs};
use crate::error::{Error, Result};

/// Principal subspace fitted by a full SVD of the centered data.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `M × d`, orthonormal rows in order of decreasing variance.
    pub components: DMatrix<f64>,
    /// Variance along each component, `σ_i² / (n − 1)`, descending.
    pub eigenvalues: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
    pub n_samples: usize,
    /// Set when some requested components carry (numerically) zero variance.
    pub rank_deficient: bool,
}

/// Relative size below which an eigenvalue counts as zero.
const RANK_TOL: f64 = 1e-12;

pub fn pca_fit(x: &DMatrix<f64>, n_components: usize) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 samples, got {n}")));
    }
    if n_components == 0 || n_components > (n - 1).min(d) {
        return Err(Error::invalid(format!(
            "n_components must lie in 1..={} for {n} samples of dimension {d}, got {n_components}",
            (n - 1).min(d)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input".into()));
    }
    let mean = column_mean(x);
    let xc = center(x, &mean);
    let total_variance = xc.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;

    let svd = xc.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));

    let mut components = DMatrix::zeros(n_components, d);
    let mut eigenvalues = Vec::with_capacity(n_components);
    for (row, &k) in order.iter().take(n_components).enumerate() {
        components.row_mut(row).copy_from(&v_t.row(k));
        let s = svd.singular_values[k];
        eigenvalues.push(s * s / (n - 1) as f64);
    }
    fix_row_signs(&mut components);
    let rank_deficient = eigenvalues
        .iter()
        .any(|l| *l <= RANK_TOL * total_variance.max(f64::MIN_POSITIVE));
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance,
        n_samples: n,
        rank_deficient,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.components.ncols()
    }

    /// `(X − mean) · componentsᵀ`
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols("PCA transform", self.dim(), x)?;
        Ok(center(x, &self.mean) * self.components.transpose())
    }

    /// `Y · components + mean`
    pub fn inverse(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols("PCA inverse", self.n_components(), y)?;
        let mut out = y * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(out)
    }

    /// Fraction of the total variance carried by each component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.eigenvalues.len()];
        }
        self.eigenvalues
            .iter()
            .map(|l| l / self.total_variance)
            .collect()
    }

    /// Variance left out of the principal subspace.
    pub fn discarded_variance(&self) -> f64 {
        (self.total_variance - self.eigenvalues.iter().sum::<f64>()).max(0.0)
    }
}

pub fn pca_transform(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}

pub fn pca_inverse(model: &PcaModel, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.inverse(y)
}

pub fn explained_variance_ratio(model: &PcaModel) -> Vec<f64> {
    model.explained_variance_ratio()
}
