use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use wavescope::cae::{save_checkpoint, train, Architecture, Batch, TrainConfig};
use wavescope::config::{parse_config, DatasetSource, RunConfig};
use wavescope::detect::{nu_sweep, run_pipeline, DetectionReport};
use wavescope::ocsvm::{ocsvm_fit, KernelSpec};
use wavescope::scalogram::{ImageCorpus, WaveletParams};
use wavescope::subspace::{fastica_fit, pca_fit, rows_to_matrix, FastIcaConfig, SubspaceModel};
use wavescope::wavegen::{build_dataset, load_dataset, save_dataset, Label};
use wavescope::{Error, Result};

/// Unsupervised damage detection from guided-wave scalograms.
#[derive(Parser)]
#[command(name = "wavescope", version, arg_required_else_help = true)]
struct Cli {
    /// Cap on worker threads (also read from WAVESCOPE_THREADS).
    #[arg(long, global = true, env = "WAVESCOPE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubspaceKind {
    Pca,
    Ica,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic baseline/damaged dataset.
    Gen {
        /// Run configuration; its [dataset] section is used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset preset when no config is given (desk or dataset1).
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a dataset into a scalogram image corpus.
    Cwt {
        /// Dataset directory written by `gen`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output image corpus file.
        #[arg(long)]
        out: PathBuf,
        /// Image height and width.
        #[arg(long, default_value_t = 64)]
        size: usize,
        /// 1 (grayscale) or 3 (colormapped RGB).
        #[arg(long, default_value_t = 1)]
        channels: usize,
        /// Which records to transform.
        #[arg(long, value_enum, default_value = "all")]
        split: Split,
    },
    /// Fit a PCA or FastICA subspace on an image corpus.
    FitSubspace {
        #[arg(long, value_enum)]
        kind: SubspaceKind,
        #[arg(long, default_value_t = 3)]
        components: usize,
        /// Training image corpus.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// FastICA initialisation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        ica_tol: f64,
        #[arg(long, default_value_t = 500)]
        ica_max_iter: usize,
    },
    /// Fit a one-class SVM on subspace features of an image corpus.
    FitOcsvm {
        #[arg(long, default_value_t = 0.1)]
        nu: f64,
        /// Training image corpus.
        #[arg(long = "in")]
        input: PathBuf,
        /// Subspace model projecting images to features.
        #[arg(long)]
        subspace: PathBuf,
        /// RBF width, or `auto` for 1/(M·mean feature variance).
        #[arg(long, default_value = "auto")]
        gamma: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the convolutional autoencoder on an image corpus.
    TrainCae {
        /// desk or paper-shape.
        #[arg(long, default_value = "desk")]
        preset: String,
        /// Training image corpus.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output checkpoint file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[run] out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test accuracy of the one-class SVM across a grid of ν values.
    SweepNu {
        #[arg(long)]
        subspace: PathBuf,
        /// Training (baseline) image corpus.
        #[arg(long)]
        train: PathBuf,
        /// Labelled test image corpus.
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated ν values.
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        nus: String,
        #[arg(long, default_value = "auto")]
        gamma: String,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise the reports of a `run` output directory.
    Report {
        /// Directory written by `run`.
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config { .. } => 3,
        Error::Io { .. } | Error::Format { .. } | Error::Decode(_) => 4,
        _ => 1,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn kernel_for(gamma: &str, features: &nalgebra::DMatrix<f64>) -> Result<KernelSpec> {
    if gamma == "auto" {
        return KernelSpec::scaled_to(features);
    }
    let g: f64 = gamma
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("gamma `{gamma}` is neither a number nor `auto`")))?;
    KernelSpec::rbf(g)
}

fn features(corpus: &ImageCorpus) -> Result<nalgebra::DMatrix<f64>> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("image corpus is empty".into()));
    }
    rows_to_matrix(&corpus.flattened())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            config,
            preset,
            seed,
            out,
        } => {
            let cfg = match config {
                Some(path) => parse_config(&read_text(&path)?)?,
                None => parse_config(&format!("[dataset]\npreset = {preset}\n"))?,
            };
            if let DatasetSource::Path(p) = &cfg.dataset.source {
                return Err(Error::Config {
                    line: 0,
                    message: format!("`gen` needs a preset, config names a path ({})", p.display()),
                });
            }
            let t = Instant::now();
            let split = build_dataset(&cfg.dataset.generation, seed).map_err(|e| e.in_stage("dataset"))?;
            save_dataset(&split, &out).map_err(|e| e.in_stage("write"))?;
            let manifest = format!(
                "wavescope_version = {}\nseed = {seed}\nseconds.dataset = {:.3}\n",
                env!("CARGO_PKG_VERSION"),
                t.elapsed().as_secs_f64()
            );
            write_text(&out.join(wavescope::detect::MANIFEST_FILE), &manifest)?;
            println!(
                "wrote {} train / {} test records to {}",
                split.train_baseline.len(),
                split.test_baseline.len() + split.test_damaged.len(),
                out.display()
            );
        }
        Command::Cwt {
            input,
            out,
            size,
            channels,
            split,
        } => {
            let ds = load_dataset(&input)?;
            let fs = ds
                .sample_rate()
                .ok_or_else(|| Error::InvalidParameter("dataset has no records".into()))?;
            let params = WaveletParams::default_for(fs)?;
            let records: Vec<_> = match split {
                Split::Train => ds.train_baseline.iter().collect(),
                Split::Test => ds.test_records().collect(),
                Split::All => ds.train_baseline.iter().chain(ds.test_records()).collect(),
            };
            let corpus = ImageCorpus::from_records(records, &params, size, size, channels)
                .map_err(|e| e.in_stage("scalogram"))?;
            corpus.save(&out)?;
            println!("wrote {} images to {}", corpus.len(), out.display());
        }
        Command::FitSubspace {
            kind,
            components,
            input,
            out,
            seed,
            ica_tol,
            ica_max_iter,
        } => {
            let x = features(&ImageCorpus::load(&input)?)?;
            let model = match kind {
                SubspaceKind::Pca => SubspaceModel::Pca(pca_fit(&x, components).map_err(|e| e.in_stage("pca"))?),
                SubspaceKind::Ica => SubspaceModel::Ica(
                    fastica_fit(
                        &x,
                        &FastIcaConfig {
                            n_components: components,
                            tol: ica_tol,
                            max_iter: ica_max_iter,
                            seed,
                        },
                    )
                    .map_err(|e| e.in_stage("ica"))?,
                ),
            };
            let errs = model.reconstruction_errors(&x)?;
            model.save(&out)?;
            println!(
                "{} with {components} components; mean training reconstruction MSE {:.6e}",
                model.kind_name(),
                errs.iter().sum::<f64>() / errs.len() as f64
            );
        }
        Command::FitOcsvm {
            nu,
            input,
            subspace,
            gamma,
            out,
        } => {
            let sub = SubspaceModel::load(&subspace)?;
            let f = sub.transform(&features(&ImageCorpus::load(&input)?)?)?;
            let kernel = kernel_for(&gamma, &f)?;
            let model = ocsvm_fit(&f, nu, &kernel).map_err(|e| e.in_stage("ocsvm"))?;
            model.save(&out)?;
            println!(
                "nu {nu}, gamma {:.6e}: {} support vectors, rho {:.6e}",
                model.gamma,
                model.n_support(),
                model.rho
            );
        }
        Command::TrainCae {
            preset,
            input,
            epochs,
            lr,
            batch,
            seed,
            out,
        } => {
            let arch = Architecture::by_name(&preset)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown autoencoder preset `{preset}`")))?;
            let corpus = ImageCorpus::load(&input)?;
            let images = Batch::from_images(&corpus.images)?;
            let mut model = arch.build(seed).map_err(|e| e.in_stage("cae"))?;
            let cfg = TrainConfig {
                epochs,
                learning_rate: lr,
                batch_size: batch,
                seed,
            };
            let (history, opt) = train(&mut model, &images, &cfg).map_err(|e| e.in_stage("cae"))?;
            save_checkpoint(&out, &model, Some(&opt))?;
            if let Some(last) = history.loss.last() {
                println!("{epochs} epochs in {:.1}s, final loss {last:.6e}", history.wall_time);
            }
        }
        Command::Run { config, out } => {
            let mut cfg: RunConfig = parse_config(&read_text(&config)?)?;
            if out.is_some() {
                cfg.output = out;
            }
            let dir = cfg.output.clone().ok_or_else(|| Error::Config {
                line: 0,
                message: "no output directory: pass --out or set `[run] out`".into(),
            })?;
            let reports = run_pipeline(&cfg, &dir)?;
            print_summary(&reports);
        }
        Command::SweepNu {
            subspace,
            train,
            test,
            nus,
            gamma,
            out,
        } => {
            let sub = SubspaceModel::load(&subspace)?;
            let ftr = sub.transform(&features(&ImageCorpus::load(&train)?)?)?;
            let test_corpus = ImageCorpus::load(&test)?;
            let fte = sub.transform(&features(&test_corpus)?)?;
            let truth: Vec<bool> = test_corpus.labels.iter().map(|l| *l == Label::Damaged).collect();
            let grid = nus
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("`{v}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            let kernel = kernel_for(&gamma, &ftr)?;
            let rows = nu_sweep(&ftr, &fte, &truth, &grid, &kernel).map_err(|e| e.in_stage("ocsvm"))?;
            let mut t = String::from("nu,accuracy,tp,fp,tn,fn,train_outlier_fraction,support_fraction\n");
            for r in &rows {
                let c = r.confusion;
                let _ = writeln!(
                    t,
                    "{},{},{},{},{},{},{},{}",
                    r.nu, r.accuracy, c.tp, c.fp, c.tn, c.fn_, r.train_outlier_fraction, r.support_fraction
                );
                println!("nu {:.2}  accuracy {:.3}  fp {:>4}  fn {:>4}", r.nu, r.accuracy, c.fp, c.fn_);
            }
            write_text(&out, &t)?;
        }
        Command::Report { input } => {
            let mut reports = Vec::new();
            let mut dirs: Vec<PathBuf> = fs::read_dir(&input)
                .map_err(|e| Error::Io {
                    path: input.clone(),
                    source: e,
                })?
                .filter_map(|e| e.ok().map(|e| e.path().join("reports")))
                .filter(|p| p.is_dir())
                .collect();
            dirs.sort();
            for dir in dirs {
                let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                    .map_err(|e| Error::Io {
                        path: dir.clone(),
                        source: e,
                    })?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect();
                files.sort();
                for f in files {
                    reports.push(DetectionReport::from_json(&read_text(&f)?)?);
                }
            }
            if reports.is_empty() {
                return Err(Error::InvalidParameter(format!("no reports under {}", input.display())));
            }
            print_summary(&reports);
        }
    }
    Ok(())
}

fn print_summary(reports: &[DetectionReport]) {
    println!("run  method     rule            threshold     accuracy  tp  fp  tn  fn  best-nu-acc");
    for r in reports {
        let c = r.confusion;
        let best = r.best_sweep_accuracy().map_or("-".to_string(), |a| format!("{a:.3}"));
        println!(
            "{:<4} {:<10} {:<15} {:<13.6e} {:<9.3} {:<3} {:<3} {:<3} {:<3} {best}",
            r.run,
            r.method.as_str(),
            r.rule,
            r.threshold,
            r.accuracy,
            c.tp,
            c.fp,
            c.tn,
            c.fn_
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads.filter(|n| *n > 0) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
