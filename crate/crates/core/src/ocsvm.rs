//! One-class SVM with an RBF kernel.
//!
//! The dual problem
//!
//! ```text
//! minimize   ½ Σᵢ Σⱼ αᵢ αⱼ K(xᵢ, xⱼ)
//! subject to 0 ≤ αᵢ ≤ 1/(νn),  Σᵢ αᵢ = 1
//! ```
//!
//! is solved by pairwise working-set updates on the maximal KKT-violating
//! pair. The decision function is `Σ αᵢ K(xᵢ, x) − ρ`; negative scores are
//! anomalies, a score of exactly zero lies on the boundary and counts as
//! normal.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::codec::Reader;
use crate::error::{Error, FormatError, Result};
use crate::subspace::{container_header, read_container_header, read_matrix, write_matrix, KIND_OCSVM};

/// KKT violation at which the solver stops. Decision values of two fits
/// that differ only in row order agree to roughly this size, so it sits
/// well below the 1e-6 scale callers compare at.
pub const KKT_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 1_000_000;
/// Margin points (free support vectors) land within a few KKT_TOL of a zero
/// decision value, on either side. Only points below `-MARGIN_TOL` are
/// outside the margin in the sense of the ν bound.
pub const MARGIN_TOL: f64 = 10.0 * KKT_TOL;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub gamma: f64,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("RBF gamma must be positive and finite, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    /// `1 / (M · mean per-feature variance)`.
    pub fn scaled_to(x: &DMatrix<f64>) -> Result<Self> {
        let (n, m) = x.shape();
        if n < 2 || m == 0 {
            return Self::rbf(1.0);
        }
        let mean_var = x
            .column_iter()
            .map(|c| {
                let mu = c.mean();
                c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / m as f64;
        if mean_var > 0.0 {
            Self::rbf(1.0 / (m as f64 * mean_var))
        } else {
            Self::rbf(1.0)
        }
    }
}

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Dense kernel matrix of the rows of `x`.
pub fn kernel_matrix(x: &DMatrix<f64>, kernel: &KernelSpec) -> DMatrix<f64> {
    let pts = rows(x);
    let n = pts.len();
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pts = &pts;
            (0..n).map(move |j| rbf_kernel(&pts[i], &pts[j], kernel.gamma))
        })
        .collect();
    DMatrix::from_row_slice(n, n, &data)
}

/// `½ αᵀ K α`
pub fn dual_objective(alpha: &[f64], k: &DMatrix<f64>) -> f64 {
    let n = alpha.len();
    let mut s = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            s += alpha[i] * alpha[j] * k[(i, j)];
        }
    }
    0.5 * s
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// `K α`, the decision value of each training point before the offset.
    pub gradient: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Final maximal KKT violation.
    pub violation: f64,
    pub objective: f64,
}

/// Working-set solver for the simplex-box dual with upper bound `c`.
pub fn solve_dual(k: &DMatrix<f64>, c: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    let n = k.nrows();
    if n == 0 || k.ncols() != n {
        return Err(Error::invalid("kernel matrix must be square and non-empty"));
    }
    if !(c * n as f64 >= 1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "box bound {c} cannot hold unit mass over {n} points"
        )));
    }
    // Fill the first ⌊1/c⌋ coordinates to the bound, the remainder into the next.
    let mut alpha = vec![0.0; n];
    let mut remaining = 1.0;
    for a in alpha.iter_mut() {
        if remaining <= 0.0 {
            break;
        }
        *a = c.min(remaining);
        remaining -= *a;
    }
    let mut grad: Vec<f64> = (0..n)
        .map(|t| (0..n).map(|s| k[(t, s)] * alpha[s]).sum())
        .collect();

    let mut iterations = 0;
    let mut violation;
    loop {
        // i: may increase (α < c), smallest gradient; j: may decrease (α > 0), largest gradient.
        let mut i = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut j = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if alpha[t] < c && grad[t] < g_min {
                g_min = grad[t];
                i = t;
            }
            if alpha[t] > 0.0 && grad[t] > g_max {
                g_max = grad[t];
                j = t;
            }
        }
        violation = if i == usize::MAX || j == usize::MAX {
            0.0
        } else {
            g_max - g_min
        };
        if violation < tol || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let eta = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(TAU);
        let mut delta = (g_max - g_min) / eta;
        let room_i = c - alpha[i];
        let room_j = alpha[j];
        if delta >= room_i && room_i <= room_j {
            delta = room_i;
            alpha[i] = c;
            alpha[j] -= delta;
        } else if delta >= room_j {
            delta = room_j;
            alpha[i] += delta;
            alpha[j] = 0.0;
        } else {
            alpha[i] += delta;
            alpha[j] -= delta;
        }
        for (t, g) in grad.iter_mut().enumerate() {
            *g += delta * (k[(t, i)] - k[(t, j)]);
        }
    }
    if iterations >= max_iter && violation >= tol {
        return Err(Error::invalid(format!(
            "one-class SVM solver stopped after {max_iter} iterations with KKT violation {violation:.3e}"
        )));
    }
    let rho = offset(&alpha, &grad, c);
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
    Ok(DualSolution {
        alpha,
        gradient: grad,
        rho,
        iterations,
        violation,
        objective,
    })
}

/// Mean decision value over free support vectors; without free vectors,
/// the midpoint of the interval the KKT conditions allow.
fn offset(alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let free: Vec<f64> = alpha
        .iter()
        .zip(grad)
        .filter(|(a, _)| **a > 0.0 && **a < c)
        .map(|(_, g)| *g)
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    let mut upper = f64::INFINITY; // α = 0 ⇒ g ≥ ρ
    let mut lower = f64::NEG_INFINITY; // α = c ⇒ g ≤ ρ
    for (a, g) in alpha.iter().zip(grad) {
        if *a == 0.0 {
            upper = upper.min(*g);
        } else {
            lower = lower.max(*g);
        }
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => 0.5 * (lower + upper),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    /// `k × M`
    pub support_vectors: DMatrix<f64>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub nu: f64,
    pub gamma: f64,
    pub n_train: usize,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub objective: f64,
}

pub fn ocsvm_fit(x: &DMatrix<f64>, nu: f64, kernel: &KernelSpec) -> Result<OcsvmModel> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::invalid("one-class SVM needs at least one training point"));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid(format!("nu must lie in (0, 1], got {nu}")));
    }
    KernelSpec::rbf(kernel.gamma)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("one-class SVM input".into()));
    }
    let k = kernel_matrix(x, kernel);
    let c = 1.0 / (nu * n as f64);
    let sol = solve_dual(&k, c, KKT_TOL, MAX_ITER)?;
    let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    let support_vectors = DMatrix::from_fn(sv.len(), x.ncols(), |r, col| x[(sv[r], col)]);
    Ok(OcsvmModel {
        support_vectors,
        alphas: sv.iter().map(|&i| sol.alpha[i]).collect(),
        rho: sol.rho,
        nu,
        gamma: kernel.gamma,
        n_train: n,
        iterations: sol.iterations,
        kkt_violation: sol.violation,
        objective: sol.objective,
    })
}

impl OcsvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn n_support(&self) -> usize {
        self.alphas.len()
    }

    /// `Σ αᵢ K(xᵢ, x) − ρ`
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "one-class SVM decision",
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut s = 0.0;
        for (row, a) in self.support_vectors.row_iter().zip(&self.alphas) {
            let d2: f64 = row.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
            s += a * (-self.gamma * d2).exp();
        }
        Ok(s - self.rho)
    }

    pub fn decision_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        rows(x).par_iter().map(|r| self.decision(r)).collect()
    }

    /// `true` marks an anomaly (negative score).
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<bool>> {
        Ok(self.decision_rows(x)?.into_iter().map(|s| s < 0.0).collect())
    }

    /// Points strictly outside the margin, beyond solver precision.
    pub fn margin_violations(&self, x: &DMatrix<f64>) -> Result<usize> {
        Ok(self.decision_rows(x)?.iter().filter(|d| **d < -MARGIN_TOL).count())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = container_header(KIND_OCSVM);
        w.u32(self.n_support() as u32);
        w.u32(self.dim() as u32);
        w.f64(self.nu);
        w.f64(self.gamma);
        w.f64(self.rho);
        w.u64(self.n_train as u64);
        w.u64(self.iterations as u64);
        w.f64(self.kkt_violation);
        w.f64(self.objective);
        write_matrix(&mut w, &self.support_vectors);
        w.f64s(&self.alphas);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        let kind = read_container_header(&mut r)?;
        if kind != KIND_OCSVM {
            return Err(FormatError::Schema(format!(
                "container kind {kind} is not a one-class SVM"
            )));
        }
        let k = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let nu = r.f64()?;
        let gamma = r.f64()?;
        let rho = r.f64()?;
        let n_train = r.u64()? as usize;
        let iterations = r.u64()? as usize;
        let kkt_violation = r.f64()?;
        let objective = r.f64()?;
        let support_vectors = read_matrix(&mut r, k, dim)?;
        let alphas = r.f64s(k)?;
        r.finish()?;
        Ok(Self {
            support_vectors,
            alphas,
            rho,
            nu,
            gamma,
            n_train,
            iterations,
            kkt_violation,
            objective,
        })
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

pub fn decision(model: &OcsvmModel, x: &[f64]) -> Result<f64> {
    model.decision(x)
}

pub fn predict(model: &OcsvmModel, x: &DMatrix<f64>) -> Result<Vec<bool>> {
    model.predict(x)
}
