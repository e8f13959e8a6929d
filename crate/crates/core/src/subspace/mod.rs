//! Linear feature extraction: PCA (full SVD) and FastICA (eigen-decomposition
//! whitening), with inverse maps for reconstruction-error scoring.

mod ica;
mod pca;

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::codec::{Reader, Writer};
use crate::error::{Error, FormatError, Result};

pub use ica::{fastica_fit, ica_inverse, ica_transform, whiten, FastIcaConfig, IcaModel, Whitening, RIDGE};
pub use pca::{explained_variance_ratio, pca_fit, pca_inverse, pca_transform, PcaModel};

pub(crate) fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

pub(crate) fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= mean.transpose();
    }
    xc
}

pub(crate) fn check_cols(context: &'static str, expected: usize, x: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got: x.ncols(),
        });
    }
    Ok(())
}

/// Flips rows so that each row's largest-magnitude entry is positive.
/// Returns the sign applied to each row.
pub(crate) fn fix_row_signs(m: &mut DMatrix<f64>) -> Vec<f64> {
    let mut signs = Vec::with_capacity(m.nrows());
    for mut row in m.row_iter_mut() {
        let pivot = row
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        let s = if pivot < 0.0 { -1.0 } else { 1.0 };
        if s < 0.0 {
            row *= -1.0;
        }
        signs.push(s);
    }
    signs
}

/// Builds an `n × d` matrix from equal-length rows.
pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.first().map_or(0, |r| r.len());
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            context: "feature rows",
            expected: d,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        d,
        rows.iter().flat_map(|r| r.iter().copied()),
    ))
}

/// Per-row mean squared difference between `a` and `b`.
pub fn row_mse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let d = a.ncols().max(1) as f64;
    (0..a.nrows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(b.row(i).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                / d
        })
        .collect()
}

/// Either fitted subspace model.
#[derive(Debug, Clone, PartialEq)]
pub enum SubspaceModel {
    Pca(PcaModel),
    Ica(IcaModel),
}

impl SubspaceModel {
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            SubspaceModel::Pca(m) => m.transform(x),
            SubspaceModel::Ica(m) => m.transform(x),
        }
    }

    pub fn inverse(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            SubspaceModel::Pca(m) => m.inverse(y),
            SubspaceModel::Ica(m) => m.inverse(y),
        }
    }

    /// Per-sample reconstruction MSE through transform → inverse.
    pub fn reconstruction_errors(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let recon = self.inverse(&self.transform(x)?)?;
        Ok(row_mse(x, &recon))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SubspaceModel::Pca(_) => "pca",
            SubspaceModel::Ica(_) => "ica",
        }
    }

    /// Binary container: magic `WSUB`, `u16` version, `u8` kind
    /// (0 PCA, 1 ICA), dimensions, then `f64` matrices row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = container_header(match self {
            SubspaceModel::Pca(_) => KIND_PCA,
            SubspaceModel::Ica(_) => KIND_ICA,
        });
        match self {
            SubspaceModel::Pca(m) => {
                w.u32(m.dim() as u32);
                w.u32(m.n_components() as u32);
                w.u64(m.n_samples as u64);
                w.u8(m.rank_deficient as u8);
                w.f64(m.total_variance);
                w.f64s(m.mean.as_slice());
                w.f64s(&m.eigenvalues);
                write_matrix(&mut w, &m.components);
            }
            SubspaceModel::Ica(m) => {
                w.u32(m.dim() as u32);
                w.u32(m.n_components() as u32);
                w.u8(m.converged as u8);
                w.u32(m.n_iter as u32);
                w.f64s(m.mean.as_slice());
                write_matrix(&mut w, &m.whitening);
                write_matrix(&mut w, &m.unmixing);
                write_matrix(&mut w, &m.mixing);
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        let kind = read_container_header(&mut r)?;
        let model = match kind {
            KIND_PCA => {
                let d = r.u32()? as usize;
                let m = r.u32()? as usize;
                let n_samples = r.u64()? as usize;
                let rank_deficient = r.u8()? != 0;
                let total_variance = r.f64()?;
                let mean = DVector::from_vec(r.f64s(d)?);
                let eigenvalues = r.f64s(m)?;
                let components = read_matrix(&mut r, m, d)?;
                SubspaceModel::Pca(PcaModel {
                    mean,
                    components,
                    eigenvalues,
                    total_variance,
                    n_samples,
                    rank_deficient,
                })
            }
            KIND_ICA => {
                let d = r.u32()? as usize;
                let m = r.u32()? as usize;
                let converged = r.u8()? != 0;
                let n_iter = r.u32()? as usize;
                let mean = DVector::from_vec(r.f64s(d)?);
                let whitening = read_matrix(&mut r, m, d)?;
                let unmixing = read_matrix(&mut r, m, m)?;
                let mixing = read_matrix(&mut r, d, m)?;
                let components = &unmixing * &whitening;
                SubspaceModel::Ica(IcaModel {
                    mean,
                    whitening,
                    unmixing,
                    components,
                    mixing,
                    converged,
                    n_iter,
                })
            }
            other => {
                return Err(FormatError::Schema(format!(
                    "container kind {other} is not a subspace model"
                )))
            }
        };
        r.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|source| Error::Format {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub(crate) const CONTAINER_MAGIC: &[u8; 4] = b"WSUB";
pub(crate) const CONTAINER_VERSION: u16 = 1;
pub(crate) const KIND_PCA: u8 = 0;
pub(crate) const KIND_ICA: u8 = 1;
pub(crate) const KIND_OCSVM: u8 = 2;

pub(crate) fn container_header(kind: u8) -> Writer {
    let mut w = Writer::new();
    w.bytes(CONTAINER_MAGIC);
    w.u16(CONTAINER_VERSION);
    w.u8(kind);
    w
}

pub(crate) fn read_container_header(r: &mut Reader<'_>) -> std::result::Result<u8, FormatError> {
    r.expect_magic(CONTAINER_MAGIC)?;
    let version = r.u16()?;
    if version != CONTAINER_VERSION {
        return Err(FormatError::UnknownVersion {
            found: version as u32,
            supported: CONTAINER_VERSION as u32,
        });
    }
    r.u8()
}

pub(crate) fn write_matrix(w: &mut Writer, m: &DMatrix<f64>) {
    for row in m.row_iter() {
        for v in row.iter() {
            w.f64(*v);
        }
    }
}

pub(crate) fn read_matrix(r: &mut Reader<'_>, rows: usize, cols: usize) -> std::result::Result<DMatrix<f64>, FormatError> {
    let v = r.f64s(rows * cols)?;
    Ok(DMatrix::from_row_slice(rows, cols, &v))
}
