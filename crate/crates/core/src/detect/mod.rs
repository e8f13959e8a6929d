//! Anomaly decisions and the end-to-end benchmark harness.
//!
//! Conventions used in every report:
//!
//! * the positive class is "anomaly" (damaged), so a false positive is a
//!   baseline sample flagged as damaged;
//! * a score strictly above its threshold is an anomaly, a score equal to
//!   the threshold is normal;
//! * one-class SVM scores are the negated decision function, so they share
//!   the reconstruction-error orientation (higher = more anomalous) with a
//!   fixed threshold of 0.

mod pipeline;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cae::{Batch, CaeModel};
use crate::error::{Error, Result};
use crate::ocsvm::{ocsvm_fit, KernelSpec};
use crate::subspace::SubspaceModel;

pub use pipeline::{execute_run, run_pipeline, write_manifest, CaeRun, RunOutcome, SubspaceRun, MANIFEST_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PcaOcsvm,
    IcaOcsvm,
    Cae,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PcaOcsvm => "pca_ocsvm",
            Method::IcaOcsvm => "ica_ocsvm",
            Method::Cae => "cae",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pca_ocsvm" => Some(Method::PcaOcsvm),
            "ica_ocsvm" => Some(Method::IcaOcsvm),
            "cae" => Some(Method::Cae),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a threshold is derived from training reconstruction errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    Max,
    /// Empirical quantile, `q` in (0, 1].
    Quantile(f64),
}

impl ThresholdRule {
    /// `max`, `qNN` (percent, e.g. `q99`) or `quantile:Q` (fraction).
    pub fn parse(s: &str) -> Option<Self> {
        let q = if s == "max" {
            return Some(ThresholdRule::Max);
        } else if let Some(p) = s.strip_prefix("quantile:") {
            p.parse::<f64>().ok()?
        } else if let Some(p) = s.strip_prefix('q') {
            p.parse::<f64>().ok()? / 100.0
        } else {
            return None;
        };
        (q > 0.0 && q <= 1.0).then_some(ThresholdRule::Quantile(q))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Quantile(q) if !(q > 0.0 && q <= 1.0) => {
                Err(Error::invalid(format!("quantile {q} must lie in (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::Max => f.write_str("max"),
            ThresholdRule::Quantile(q) => write!(f, "quantile:{q}"),
        }
    }
}

/// Linear interpolation between order statistics: with the values sorted
/// ascending as `x[0..n]`, `h = (n - 1)·q`, the result is
/// `x[⌊h⌋] + (h - ⌊h⌋)·(x[⌊h⌋ + 1] - x[⌊h⌋])`. This is numpy's default
/// ("linear", Hyndman–Fan type 7).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty vector"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile {q} must lie in [0, 1]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile input".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= s.len() || frac == 0.0 {
        return Ok(s[lo]);
    }
    Ok(s[lo] + frac * (s[lo + 1] - s[lo]))
}

pub fn compute_threshold(train_errors: &[f64], rule: ThresholdRule) -> Result<f64> {
    rule.validate()?;
    match rule {
        ThresholdRule::Max => quantile(train_errors, 1.0),
        ThresholdRule::Quantile(q) => quantile(train_errors, q),
    }
}

/// `true` marks an anomaly: score strictly above the threshold.
pub fn classify(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|s| *s > threshold).collect()
}

/// 2×2 counts with "anomaly" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }
}

pub fn confusion_and_accuracy(predicted: &[bool], truth: &[bool]) -> Result<(Confusion, f64)> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "predictions vs labels",
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok((c, c.accuracy()))
}

/// Anything that maps feature rows to per-row reconstruction MSE.
pub trait Reconstructor {
    fn reconstruction_errors(&self, rows: &DMatrix<f64>) -> Result<Vec<f64>>;
}

impl Reconstructor for SubspaceModel {
    fn reconstruction_errors(&self, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
        SubspaceModel::reconstruction_errors(self, rows)
    }
}

/// Rows are flattened images in (row, column, channel) order.
impl Reconstructor for CaeModel {
    fn reconstruction_errors(&self, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
        let shape = self.input_shape();
        let per = shape.0 * shape.1 * shape.2;
        if rows.ncols() != per {
            return Err(Error::DimensionMismatch {
                context: "autoencoder input width",
                expected: per,
                got: rows.ncols(),
            });
        }
        let data: Vec<f64> = rows.transpose().as_slice().to_vec();
        CaeModel::reconstruction_errors(self, &Batch::new(rows.nrows(), shape, data)?)
    }
}

pub fn reconstruction_errors<R: Reconstructor + ?Sized>(model: &R, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
    model.reconstruction_errors(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSweepRow {
    pub nu: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    /// Fraction of training points outside the margin (see `ocsvm::MARGIN_TOL`).
    pub train_outlier_fraction: f64,
    pub support_fraction: f64,
}

/// Fits one ocSVM per `ν` on `train` and evaluates it on `test`.
pub fn nu_sweep(
    train: &DMatrix<f64>,
    test: &DMatrix<f64>,
    truth: &[bool],
    nus: &[f64],
    kernel: &KernelSpec,
) -> Result<Vec<NuSweepRow>> {
    nus.iter()
        .map(|&nu| {
            let model = ocsvm_fit(train, nu, kernel)?;
            let (confusion, accuracy) = confusion_and_accuracy(&model.predict(test)?, truth)?;
            let outliers = model.margin_violations(train)?;
            Ok(NuSweepRow {
                nu,
                accuracy,
                confusion,
                train_outlier_fraction: outliers as f64 / train.nrows() as f64,
                support_fraction: model.n_support() as f64 / train.nrows() as f64,
            })
        })
        .collect()
}

/// One method's verdict on one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub method: Method,
    /// `max`, `quantile:Q`, or `ocsvm` for the SVM's own boundary.
    pub rule: String,
    pub threshold: f64,
    pub positive_class: String,
    pub nu: Option<f64>,
    pub rbf_gamma: Option<f64>,
    pub run: usize,
    pub seed: u64,
    pub scores: Vec<f64>,
    pub truth: Vec<bool>,
    pub predictions: Vec<bool>,
    pub train_scores: Vec<f64>,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub nu_sweep: Vec<NuSweepRow>,
    /// Mean training reconstruction MSE of the method's model.
    pub train_reconstruction_mse: f64,
    pub config: String,
}

impl DetectionReport {
    /// File stem used for this report's artifacts.
    pub fn name(&self) -> String {
        let rule = self.rule.replace(':', "");
        format!("{}-{rule}", self.method)
    }

    /// Best test accuracy across the ν sweep, if one was run.
    pub fn best_sweep_accuracy(&self) -> Option<f64> {
        self.nu_sweep.iter().map(|r| r.accuracy).max_by(f64::total_cmp)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("report serialisation: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("report parse: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_hand_case() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile(&v, 0.99).unwrap() - 99.01).abs() < 1e-12);
        assert_eq!(compute_threshold(&[1.0, 2.0, 3.0, 4.0], ThresholdRule::Max).unwrap(), 4.0);
        assert!(compute_threshold(&[], ThresholdRule::Max).is_err());
    }

    #[test]
    fn boundary_is_normal() {
        assert_eq!(classify(&[1.0, 2.0, 3.0], 2.0), vec![false, false, true]);
    }

    #[test]
    fn rule_text_round_trips() {
        for r in [ThresholdRule::Max, ThresholdRule::Quantile(0.99), ThresholdRule::Quantile(0.5)] {
            assert_eq!(ThresholdRule::parse(&r.to_string()), Some(r));
        }
        assert_eq!(ThresholdRule::parse("q99"), Some(ThresholdRule::Quantile(0.99)));
        assert_eq!(ThresholdRule::parse("q150"), None);
    }

    #[test]
    fn perfect_and_trivial_predictions() {
        let truth = [false, false, true, true];
        let (c, acc) = confusion_and_accuracy(&truth, &truth).unwrap();
        assert_eq!((c.fp, c.fn_, acc), (0, 0, 1.0));
        let (_, acc) = confusion_and_accuracy(&[false; 4], &truth).unwrap();
        assert_eq!(acc, 0.5);
        assert!(confusion_and_accuracy(&[false; 3], &truth).is_err());
    }
}
