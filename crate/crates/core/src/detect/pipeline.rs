//! generate/load → scalograms → (subspace → ocSVM | autoencoder) → reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;

use super::{classify, compute_threshold, confusion_and_accuracy, nu_sweep, DetectionReport, Method};
use crate::cae::{latent_codes, save_checkpoint, train, Batch, CaeModel, OptimizerState, TrainHistory};
use crate::config::{DatasetSource, RunConfig};
use crate::error::{Error, Result, StageExt};
use crate::ocsvm::{ocsvm_fit, KernelSpec, OcsvmModel};
use crate::scalogram::ImageCorpus;
use crate::seed;
use crate::subspace::{fastica_fit, pca_fit, rows_to_matrix, FastIcaConfig, SubspaceModel};
use crate::wavegen::{build_dataset, load_dataset, save_dataset, DatasetSplit, Label};

pub const MANIFEST_FILE: &str = "run.manifest";

pub struct SubspaceRun {
    pub method: Method,
    pub subspace: SubspaceModel,
    pub ocsvm: OcsvmModel,
}

pub struct CaeRun {
    pub model: CaeModel,
    pub history: TrainHistory,
    pub optimizer: OptimizerState,
    pub train_codes: DMatrix<f64>,
    pub test_codes: DMatrix<f64>,
}

/// Everything one repeat produced, before anything touches disk.
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub dataset: DatasetSplit,
    pub train_images: ImageCorpus,
    pub test_images: ImageCorpus,
    pub subspace_runs: Vec<SubspaceRun>,
    pub cae: Option<CaeRun>,
    pub reports: Vec<DetectionReport>,
    /// (stage, seconds)
    pub timings: Vec<(&'static str, f64)>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn timed<T>(timings: &mut Vec<(&'static str, f64)>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f().stage(stage)?;
    timings.push((stage, t.elapsed().as_secs_f64()));
    Ok(out)
}

/// Runs repeat `run` of `config` in memory. The run seed is derived from the
/// master seed and the repeat index; every other seed is derived from it.
pub fn execute_run(config: &RunConfig, run: usize) -> Result<RunOutcome> {
    config.validate()?;
    let run_seed = seed::derive(config.seed, seed::stream::REPEAT, run as u64);
    let echo = config_echo(config);
    let mut timings = Vec::new();

    let dataset = timed(&mut timings, "dataset", || match &config.dataset.source {
        DatasetSource::Preset(_) => build_dataset(&config.dataset.generation, run_seed),
        DatasetSource::Path(p) => load_dataset(p),
    })?;

    let r = &config.representation;
    let (train_images, test_images) = timed(&mut timings, "scalogram", || {
        let fs = dataset
            .sample_rate()
            .ok_or_else(|| Error::invalid("dataset has no records"))?;
        let wavelet = r.wavelet(fs)?;
        let train = ImageCorpus::from_records(dataset.train_baseline.iter(), &wavelet, r.height, r.width, r.channels)?;
        let test = ImageCorpus::from_records(dataset.test_records(), &wavelet, r.height, r.width, r.channels)?;
        Ok((train, test))
    })?;
    let truth: Vec<bool> = test_images.labels.iter().map(|l| *l == Label::Damaged).collect();

    let mut reports = Vec::new();
    let mut subspace_runs = Vec::new();
    let mut cae = None;

    let base = |method: Method| DetectionReport {
        method,
        rule: String::new(),
        threshold: 0.0,
        positive_class: "anomaly".into(),
        nu: None,
        rbf_gamma: None,
        run,
        seed: run_seed,
        scores: Vec::new(),
        truth: truth.clone(),
        predictions: Vec::new(),
        train_scores: Vec::new(),
        confusion: Default::default(),
        accuracy: 0.0,
        nu_sweep: Vec::new(),
        train_reconstruction_mse: 0.0,
        config: echo.clone(),
    };

    let needs_rows = config.methods.iter().any(|m| *m != Method::Cae);
    let (xtr, xte) = if needs_rows {
        (rows_to_matrix(&train_images.flattened())?, rows_to_matrix(&test_images.flattened())?)
    } else {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    };

    for &method in &config.methods {
        match method {
            Method::PcaOcsvm | Method::IcaOcsvm => {
                let stage = if method == Method::PcaOcsvm { "pca" } else { "ica" };
                let subspace = timed(&mut timings, stage, || {
                    Ok(if method == Method::PcaOcsvm {
                        SubspaceModel::Pca(pca_fit(&xtr, config.components)?)
                    } else {
                        SubspaceModel::Ica(fastica_fit(
                            &xtr,
                            &FastIcaConfig {
                                n_components: config.components,
                                tol: config.ica_tol,
                                max_iter: config.ica_max_iter,
                                seed: seed::derive(run_seed, seed::stream::ICA_INIT, 0),
                            },
                        )?)
                    })
                })?;
                let (ocsvm, report) = timed(&mut timings, "ocsvm", || {
                    let ftr = subspace.transform(&xtr)?;
                    let fte = subspace.transform(&xte)?;
                    let kernel = match config.rbf_gamma {
                        Some(g) => KernelSpec::rbf(g)?,
                        None => KernelSpec::scaled_to(&ftr)?,
                    };
                    let model = ocsvm_fit(&ftr, config.nu, &kernel)?;
                    let scores: Vec<f64> = model.decision_rows(&fte)?.iter().map(|d| -d).collect();
                    let train_scores: Vec<f64> = model.decision_rows(&ftr)?.iter().map(|d| -d).collect();
                    let predictions = classify(&scores, 0.0);
                    let (confusion, accuracy) = confusion_and_accuracy(&predictions, &truth)?;
                    let report = DetectionReport {
                        rule: "ocsvm".into(),
                        nu: Some(config.nu),
                        rbf_gamma: Some(kernel.gamma),
                        scores,
                        predictions,
                        train_scores,
                        confusion,
                        accuracy,
                        nu_sweep: nu_sweep(&ftr, &fte, &truth, &config.nu_grid, &kernel)?,
                        train_reconstruction_mse: mean(&subspace.reconstruction_errors(&xtr)?),
                        ..base(method)
                    };
                    Ok((model, report))
                })?;
                reports.push(report);
                subspace_runs.push(SubspaceRun { method, subspace, ocsvm });
            }
            Method::Cae => {
                let run_cae = timed(&mut timings, "cae", || {
                    let mut model = config.cae.architecture()?.build(run_seed)?;
                    let btr = Batch::from_images(&train_images.images)?;
                    let bte = Batch::from_images(&test_images.images)?;
                    let (history, optimizer) = train(&mut model, &btr, &config.cae.train_config(run_seed))?;
                    let train_err = model.reconstruction_errors(&btr)?;
                    let test_err = model.reconstruction_errors(&bte)?;
                    for &rule in &config.thresholds {
                        let threshold = compute_threshold(&train_err, rule)?;
                        let predictions = classify(&test_err, threshold);
                        let (confusion, accuracy) = confusion_and_accuracy(&predictions, &truth)?;
                        reports.push(DetectionReport {
                            rule: rule.to_string(),
                            threshold,
                            scores: test_err.clone(),
                            predictions,
                            train_scores: train_err.clone(),
                            confusion,
                            accuracy,
                            train_reconstruction_mse: mean(&train_err),
                            ..base(Method::Cae)
                        });
                    }
                    Ok(CaeRun {
                        train_codes: latent_codes(&model, &btr)?,
                        test_codes: latent_codes(&model, &bte)?,
                        model,
                        history,
                        optimizer,
                    })
                })?;
                cae = Some(run_cae);
            }
        }
    }

    Ok(RunOutcome {
        run,
        seed: run_seed,
        dataset,
        train_images,
        test_images,
        subspace_runs,
        cae,
        reports,
        timings,
    })
}

/// The echo recorded in reports; the output location is not part of a
/// run's identity.
fn config_echo(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.output = None;
    c.echo()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn label_name(l: Label) -> &'static str {
    l.as_str()
}

impl RunOutcome {
    /// Persists dataset, images, models, reports and CSV exports under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let sub = |name: &str| -> Result<std::path::PathBuf> {
            let p = dir.join(name);
            mkdir(&p)?;
            Ok(p)
        };
        let (models, reports, csv) = (sub("models")?, sub("reports")?, sub("csv")?);
        save_dataset(&self.dataset, &dir.join("dataset"))?;
        let images = sub("images")?;
        self.train_images.save(&images.join("train.wimg"))?;
        self.test_images.save(&images.join("test.wimg"))?;

        for s in &self.subspace_runs {
            let kind = s.subspace.kind_name();
            s.subspace.save(&models.join(format!("{kind}.wsub")))?;
            s.ocsvm.save(&models.join(format!("{}.wsvm", s.method)))?;
        }

        for r in &self.reports {
            write_text(&reports.join(format!("{}.json", r.name())), &r.to_json()?)?;
            let mut t = String::from("index,label,score,threshold,predicted_anomaly\n");
            for (i, (s, p)) in r.scores.iter().zip(&r.predictions).enumerate() {
                let label = label_name(self.test_images.labels[i]);
                let _ = writeln!(t, "{i},{label},{s:e},{:e},{}", r.threshold, *p as u8);
            }
            write_text(&csv.join(format!("{}-test.csv", r.name())), &t)?;
            let mut t = String::from("index,score\n");
            for (i, s) in r.train_scores.iter().enumerate() {
                let _ = writeln!(t, "{i},{s:e}");
            }
            write_text(&csv.join(format!("{}-train.csv", r.name())), &t)?;
            if !r.nu_sweep.is_empty() {
                let mut t = String::from("nu,accuracy,tp,fp,tn,fn,train_outlier_fraction,support_fraction\n");
                for row in &r.nu_sweep {
                    let c = row.confusion;
                    let _ = writeln!(
                        t,
                        "{},{},{},{},{},{},{},{}",
                        row.nu, row.accuracy, c.tp, c.fp, c.tn, c.fn_, row.train_outlier_fraction, row.support_fraction
                    );
                }
                write_text(&csv.join(format!("{}-nu_sweep.csv", r.method)), &t)?;
            }
        }

        if let Some(c) = &self.cae {
            save_checkpoint(&models.join("cae.wcae"), &c.model, Some(&c.optimizer))?;
            let mut t = String::from("epoch,loss,mae,r2\n");
            for e in 0..c.history.epochs() {
                let _ = writeln!(t, "{},{:e},{:e},{}", e + 1, c.history.loss[e], c.history.mae[e], c.history.r2[e]);
            }
            write_text(&csv.join("cae-loss.csv"), &t)?;
            let width = c.train_codes.ncols();
            let mut t = String::from("split,index,label");
            for k in 0..width {
                let _ = write!(t, ",z{}", k + 1);
            }
            t.push('\n');
            for (split, codes, labels) in [
                ("train", &c.train_codes, &self.train_images.labels),
                ("test", &c.test_codes, &self.test_images.labels),
            ] {
                for (i, row) in codes.row_iter().enumerate() {
                    let _ = write!(t, "{split},{i},{}", label_name(labels[i]));
                    for v in row.iter() {
                        let _ = write!(t, ",{v:e}");
                    }
                    t.push('\n');
                }
            }
            write_text(&csv.join("cae-latent.csv"), &t)?;
        }
        Ok(())
    }
}

/// `key = value` manifest: versions, seeds and per-stage timings.
pub fn write_manifest(dir: &Path, config: &RunConfig, runs: &[(usize, u64, Vec<(&'static str, f64)>)]) -> Result<()> {
    let mut t = String::new();
    let _ = writeln!(t, "wavescope_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(t, "master_seed = {}", config.seed);
    let _ = writeln!(t, "repeats = {}", config.repeats);
    let _ = writeln!(t, "config = config.cfg");
    for (run, seed, timings) in runs {
        let _ = writeln!(t, "run.{run}.dir = {}", run_dir_name(*run));
        let _ = writeln!(t, "run.{run}.seed = {seed}");
        for (stage, secs) in timings {
            let _ = writeln!(t, "run.{run}.seconds.{stage} = {secs:.3}");
        }
    }
    write_text(&dir.join(MANIFEST_FILE), &t)
}

fn run_dir_name(run: usize) -> String {
    format!("run-{run:03}")
}

/// Executes every repeat, writing each under `out/run-NNN` together with
/// the echoed configuration and the manifest. Returns all reports.
pub fn run_pipeline(config: &RunConfig, out: &Path) -> Result<Vec<DetectionReport>> {
    config.validate()?;
    mkdir(out).stage("write")?;
    write_text(&out.join("config.cfg"), &config_echo(config)).stage("write")?;
    let mut reports = Vec::new();
    let mut runs = Vec::new();
    for run in 0..config.repeats {
        let outcome = execute_run(config, run)?;
        let dir = out.join(run_dir_name(run));
        mkdir(&dir).stage("write")?;
        outcome.write(&dir).stage("write")?;
        runs.push((run, outcome.seed, outcome.timings));
        reports.extend(outcome.reports);
        write_manifest(out, config, &runs).stage("write")?;
    }
    Ok(reports)
}
