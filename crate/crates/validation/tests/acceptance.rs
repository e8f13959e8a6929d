//! Acceptance criteria 1 to 12. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr so it shows up even when output is captured.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use common::{
    anisotropic, eigen_oracle, gaussian, laplace, matched_correlations, max_principal_angle, oracle_objective,
    random_batch, tiny_model,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavescope::cae::{Architecture, Mode, Section};
use wavescope::config::{parse_config, RunConfig};
use wavescope::detect::{
    classify, compute_threshold, confusion_and_accuracy, execute_run, quantile, DetectionReport, Method,
    RunOutcome, ThresholdRule,
};
use wavescope::ocsvm::{kernel_matrix, ocsvm_fit, solve_dual, KernelSpec, KKT_TOL, MAX_ITER};
use wavescope::scalogram::{cwt, WaveletParams};
use wavescope::subspace::{fastica_fit, pca_fit, FastIcaConfig, SubspaceModel};
use wavescope::wavegen::{synth_baseline, Label, ModeTag, TimeSeriesRecord, WavePacketSpec};

type Outcome = Result<String, String>;

fn criterion(n: u32, title: &str, check: impl FnOnce() -> Outcome) {
    let t = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = t.elapsed().as_secs_f64();
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2}: {tag} {title} ({secs:.1}s) {detail}");
    if let Err(d) = result {
        panic!("criterion {n} failed: {d}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

#[test]
fn criterion_01_parameter_counts() {
    criterion(1, "paper-preset parameter counts", || {
        let t = Instant::now();
        let model = Architecture::paper().build(0).map_err(|e| e.to_string())?;
        let table = model.layer_table();
        let encoder: Vec<usize> = table
            .iter()
            .filter(|(s, ..)| *s != Section::Decoder)
            .map(|(.., n)| *n)
            .filter(|n| *n > 0)
            .collect();
        let want = vec![448, 64, 4640, 128, 18_496, 256, 73_856, 512, 295_168, 1024, 819_250, 153];
        ensure(encoder == want, || format!("encoder rows {encoder:?}"))?;
        let counts = model.count_params();
        ensure(counts.encoder == 1_213_995, || format!("encoder total {}", counts.encoder))?;
        let expansion = table.iter().find(|(s, ..)| *s == Section::Decoder).map(|r| r.3);
        ensure(expansion == Some(65_536), || format!("decoder expansion row {expansion:?}"))?;
        let secs = t.elapsed().as_secs_f64();
        ensure(secs < 1.0, || format!("took {secs:.2}s"))?;
        Ok(format!("encoder 1,213,995; decoder total {}", counts.decoder))
    });
}

#[test]
fn criterion_02_gradient_check() {
    criterion(2, "finite-difference gradients", || {
        let t = Instant::now();
        let mut model = tiny_model(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = random_batch(&mut rng, 3, (8, 8, 1));
        let (_, analytic) = model.loss_and_gradient(&batch).map_err(|e| e.to_string())?;
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..analytic.len() {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + h;
            let up = model.loss_and_gradient(&batch).unwrap().0;
            model.params_mut()[i] = orig - h;
            let down = model.loss_and_gradient(&batch).unwrap().0;
            model.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((analytic[i] - numeric).abs() / denom);
        }
        let secs = t.elapsed().as_secs_f64();
        ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
        ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
        Ok(format!("max relative error {worst:.2e} over {} parameters", analytic.len()))
    });
}

#[test]
fn criterion_03_pca_oracle() {
    criterion(3, "PCA against covariance eigendecomposition", || {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (mut worst_angle, mut worst_eig) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let x = anisotropic(&mut rng, 20, 8);
            let (vals, vecs) = eigen_oracle(&x);
            for m in [3, 8] {
                let model = pca_fit(&x, m).map_err(|e| e.to_string())?;
                let angle = max_principal_angle(&vecs.columns(0, m).into_owned(), &model.components.transpose());
                worst_angle = worst_angle.max(angle);
                for (a, b) in model.eigenvalues.iter().zip(&vals) {
                    worst_eig = worst_eig.max((a - b).abs() / b.abs());
                }
            }
        }
        let secs = t.elapsed().as_secs_f64();
        ensure(worst_angle < 1e-8, || format!("principal angle {worst_angle:e}"))?;
        ensure(worst_eig < 1e-8, || format!("eigenvalue relative error {worst_eig:e}"))?;
        ensure(secs < 5.0, || format!("took {secs:.1}s"))?;
        Ok(format!("angle {worst_angle:.1e} rad, eigenvalues {worst_eig:.1e}"))
    });
}

#[test]
fn criterion_04_distortion_identity() {
    criterion(4, "PCA distortion equals discarded eigenvalues", || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let (n, d) = (20, 8);
            let x = anisotropic(&mut rng, n, d);
            let (vals, _) = eigen_oracle(&x);
            for m in 1..=d {
                let model = SubspaceModel::Pca(pca_fit(&x, m).map_err(|e| e.to_string())?);
                let errs = model.reconstruction_errors(&x).map_err(|e| e.to_string())?;
                let mse = errs.iter().sum::<f64>() / n as f64;
                let expected = vals[m..].iter().sum::<f64>() * (n as f64 - 1.0) / n as f64 / d as f64;
                worst = worst.max((mse - expected).abs() / expected.max(1.0));
            }
        }
        ensure(worst < 1e-8, || format!("deviation {worst:e}"))?;
        Ok(format!("max deviation {worst:.1e} for M = 1..8"))
    });
}

#[test]
fn criterion_05_fastica_recovery() {
    criterion(5, "FastICA recovers Laplace sources", || {
        let t = Instant::now();
        let mut successes = 0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let s = DMatrix::from_fn(5000, 3, |_, _| laplace(&mut rng));
            let x = &s * gaussian(&mut rng, 3, 3).transpose();
            let mut cfg = FastIcaConfig::new(3);
            cfg.seed = seed;
            cfg.tol = 1e-4;
            cfg.max_iter = 500;
            let est = fastica_fit(&x, &cfg).and_then(|m| m.transform(&x)).map_err(|e| e.to_string())?;
            if matched_correlations(&s, &est).iter().all(|c| *c > 0.99) {
                successes += 1;
            }
        }
        let secs = t.elapsed().as_secs_f64();
        ensure(successes >= 9, || format!("{successes}/10 seeds"))?;
        ensure(secs < 20.0, || format!("took {secs:.1}s"))?;
        Ok(format!("{successes}/10 seeds"))
    });
}

#[test]
fn criterion_06_dual_oracle() {
    criterion(6, "ocSVM dual against projected gradient", || {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut gap, mut kkt) = (0.0f64, 0.0f64);
        for case in 0..20 {
            let n = rng.random_range(3..=20);
            let x = gaussian(&mut rng, n, 2);
            let nu = [0.1, 0.3, 0.5, 0.8][case % 4];
            let gamma = [0.2, 1.0, 3.0][case % 3];
            let k = kernel_matrix(&x, &KernelSpec::rbf(gamma).unwrap());
            let c = 1.0 / (nu * n as f64);
            let sol = solve_dual(&k, c, KKT_TOL, MAX_ITER).map_err(|e| e.to_string())?;
            gap = gap.max((sol.objective - oracle_objective(&k, c)).abs());
            kkt = kkt.max(sol.violation);
        }
        let secs = t.elapsed().as_secs_f64();
        ensure(gap < 1e-6, || format!("objective gap {gap:e}"))?;
        ensure(kkt < 1e-6, || format!("KKT residual {kkt:e}"))?;
        ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
        Ok(format!("objective gap {gap:.1e}, KKT residual {kkt:.1e}"))
    });
}

#[test]
fn criterion_07_nu_property() {
    criterion(7, "nu bounds outliers and support vectors", || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 500;
        let x = gaussian(&mut rng, n, 3);
        let kernel = KernelSpec::scaled_to(&x).map_err(|e| e.to_string())?;
        let slack = 2.0 / n as f64;
        let mut rows = Vec::new();
        for step in 1..=9 {
            let nu = step as f64 / 10.0;
            let model = ocsvm_fit(&x, nu, &kernel).map_err(|e| e.to_string())?;
            let outliers = model.margin_violations(&x).map_err(|e| e.to_string())? as f64 / n as f64;
            let svs = model.n_support() as f64 / n as f64;
            ensure(outliers <= nu + slack, || format!("nu {nu}: outlier fraction {outliers}"))?;
            ensure(svs >= nu - slack, || format!("nu {nu}: support fraction {svs}"))?;
            rows.push(format!("{nu:.1}:{outliers:.3}/{svs:.3}"));
        }
        Ok(rows.join(" "))
    });
}

fn burst(cycles: f64, freq: f64, center: f64) -> TimeSeriesRecord {
    let p = WavePacketSpec {
        cycles,
        center_freq: freq,
        arrival_time: center,
        amplitude: 1.0,
        mode: ModeTag::A0,
    };
    synth_baseline(&[p], f64::INFINITY, 2e6, 2e-3, 0).unwrap()
}

#[test]
fn criterion_08_cwt_localisation() {
    criterion(8, "CWT localises tonebursts; transform is linear", || {
        let fs = 2e6;
        let params = WaveletParams::default_for(fs).map_err(|e| e.to_string())?;
        let mut detail = Vec::new();
        for (cycles, freq) in [(5.0, 40e3), (4.5, 60e3)] {
            let center = 0.8e-3;
            let cm = cwt(&burst(cycles, freq, center), &params).map_err(|e| e.to_string())?;
            let (si, ti) = cm.argmax();
            let f = params.peak_frequency(params.scales[si], fs);
            let t = ti as f64 / fs;
            let (ef, et) = ((f - freq).abs() / freq, (t - center).abs() / center);
            ensure(ef < 0.05, || format!("{freq} Hz burst peaks at {f:.0} Hz"))?;
            ensure(et < 0.05, || format!("burst at {center} s peaks at {t} s"))?;
            detail.push(format!("{:.0} kHz: df {:.1}% dt {:.2}%", freq / 1e3, ef * 100.0, et * 100.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        let rec = |rng: &mut ChaCha8Rng| {
            let s = (0..500).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            TimeSeriesRecord::new(s, fs, Label::Unlabeled).unwrap()
        };
        for _ in 0..5 {
            let (x, y) = (rec(&mut rng), rec(&mut rng));
            let (a, b) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
            let mix: Vec<f64> = x.samples().iter().zip(y.samples()).map(|(p, q)| a * p + b * q).collect();
            let mix = TimeSeriesRecord::new(mix, fs, Label::Unlabeled).unwrap();
            let (cx, cy, cm) = (cwt(&x, &params).unwrap(), cwt(&y, &params).unwrap(), cwt(&mix, &params).unwrap());
            let peak = cm.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
            for ((p, q), r) in cx.values().iter().zip(cy.values()).zip(cm.values()) {
                worst = worst.max((p * a + q * b - r).norm() / peak);
            }
        }
        ensure(worst < 1e-10, || format!("linearity error {worst:e}"))?;
        detail.push(format!("linearity {worst:.1e}"));
        Ok(detail.join(", "))
    });
}

#[test]
fn criterion_10_threshold_semantics() {
    criterion(10, "threshold semantics", || {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = quantile(&v, 0.99).map_err(|e| e.to_string())?;
        ensure((q - 99.01).abs() < 1e-12, || format!("q99 of 1..100 is {q}"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(1..300);
            let errs: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
            let t = compute_threshold(&errs, ThresholdRule::Max).unwrap();
            let flagged = classify(&errs, t).iter().filter(|f| **f).count();
            ensure(flagged == 0, || format!("max rule flagged {flagged} training samples"))?;
            let mut grid: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            grid.sort_by(f64::total_cmp);
            let counts: Vec<usize> = grid.iter().map(|t| classify(&errs, *t).iter().filter(|f| **f).count()).collect();
            ensure(counts.windows(2).all(|w| w[1] <= w[0]), || format!("counts {counts:?}"))?;
        }
        Ok("q99(1..100) = 99.01, max rule flags 0, counts monotone".into())
    });
}

const SMALL: &str = "
[dataset]
preset = desk
snr_db = 25
train_baseline = 16
test_baseline = 6
test_damaged = 6
[methods]
epochs = 3
batch = 8
[run]
seed = 21
";

fn same_report(a: &DetectionReport, b: &DetectionReport) -> Result<(), String> {
    ensure(a.name() == b.name(), || format!("{} vs {}", a.name(), b.name()))?;
    let close = |x: &[f64], y: &[f64], tol: f64| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol);
    match a.method {
        Method::Cae => ensure(a.scores == b.scores && a.train_scores == b.train_scores, || {
            format!("{}: autoencoder scores differ bitwise", a.name())
        })?,
        _ => ensure(
            close(&a.scores, &b.scores, 1e-9) && close(&a.train_scores, &b.train_scores, 1e-9),
            || format!("{}: solver scores differ beyond 1e-9", a.name()),
        )?,
    }
    ensure(a.threshold == b.threshold || (a.threshold - b.threshold).abs() <= 1e-9, || {
        format!("{}: thresholds differ", a.name())
    })?;
    ensure(a.predictions == b.predictions && a.confusion == b.confusion, || {
        format!("{}: predictions differ", a.name())
    })
}

#[test]
fn criterion_11_reproducibility() {
    criterion(11, "identical config and seed reproduce reports", || {
        let cfg = parse_config(SMALL).map_err(|e| e.to_string())?;
        let a = execute_run(&cfg, 0).map_err(|e| e.to_string())?;
        let b = execute_run(&cfg, 0).map_err(|e| e.to_string())?;
        ensure(a.reports.len() == b.reports.len(), || "report counts differ".into())?;
        for (p, q) in a.reports.iter().zip(&b.reports) {
            same_report(p, q)?;
        }
        let identical = a.reports == b.reports;
        Ok(format!("{} reports match (fully identical: {identical})", a.reports.len()))
    });
}

// Shared desk benchmark for criteria 9 and 12 and the benchmark checks below.
const BENCHMARK: &str = "
[dataset]
preset = desk
snr_db = 25
train_baseline = 200
test_baseline = 100
test_damaged = 100
damage_amplitude = 0.7
damage_delay = 10e-6
[representation]
height = 64
width = 64
channels = 1
[methods]
list = pca_ocsvm, ica_ocsvm, cae
epochs = 500
[threshold]
rules = quantile:0.99, max
[run]
seed = 0
";

struct Benchmark {
    config: RunConfig,
    outcome: RunOutcome,
    seconds: f64,
}

fn benchmark() -> &'static Benchmark {
    static CELL: OnceLock<Benchmark> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = parse_config(BENCHMARK).unwrap();
        let t = Instant::now();
        let outcome = execute_run(&config, 0).unwrap();
        Benchmark {
            config,
            outcome,
            seconds: t.elapsed().as_secs_f64(),
        }
    })
}

fn report<'a>(b: &'a Benchmark, method: Method, rule: &str) -> &'a DetectionReport {
    b.outcome
        .reports
        .iter()
        .find(|r| r.method == method && r.rule == rule)
        .unwrap_or_else(|| panic!("no {method} report for {rule}"))
}

#[test]
fn criterion_09_desk_benchmark() {
    criterion(9, "desk benchmark accuracies", || {
        let b = benchmark();
        let cae = report(b, Method::Cae, "quantile:0.99").accuracy;
        let pca = report(b, Method::PcaOcsvm, "ocsvm").best_sweep_accuracy().ok_or("empty nu sweep")?;
        let ica = report(b, Method::IcaOcsvm, "ocsvm").best_sweep_accuracy().ok_or("empty nu sweep")?;
        let at_nu = |m: Method| report(b, m, "ocsvm").accuracy;
        let detail = format!(
            "cae q99 {cae:.3} (>= 0.95), pca-ocsvm best nu {pca:.3} (>= 0.85), ica-ocsvm best nu {ica:.3} (>= 0.85), \
             at nu {}: pca {:.3} ica {:.3}, runtime {:.0}s",
            b.config.nu,
            at_nu(Method::PcaOcsvm),
            at_nu(Method::IcaOcsvm),
            b.seconds
        );
        let mut failed = Vec::new();
        if cae < 0.95 {
            failed.push("cae below 0.95");
        }
        if pca < 0.85 {
            failed.push("pca-ocsvm below 0.85");
        }
        if ica < 0.85 {
            failed.push("ica-ocsvm below 0.85");
        }
        if cae < pca || cae < ica {
            failed.push("cae below an ocsvm method");
        }
        if b.seconds >= 900.0 {
            failed.push("runtime over 15 min");
        }
        if failed.is_empty() {
            Ok(detail)
        } else {
            Err(format!("{}; {detail}", failed.join(", ")))
        }
    });
}

#[test]
fn criterion_12_reconstruction_ordering() {
    criterion(12, "autoencoder reconstructs training images better than PCA/ICA", || {
        let b = benchmark();
        let cae = report(b, Method::Cae, "quantile:0.99").train_reconstruction_mse;
        let pca = report(b, Method::PcaOcsvm, "ocsvm").train_reconstruction_mse;
        let ica = report(b, Method::IcaOcsvm, "ocsvm").train_reconstruction_mse;
        let detail = format!("cae {cae:.3e}, pca(3) {pca:.3e}, ica(3) {ica:.3e}");
        if cae < pca && cae < ica {
            Ok(detail)
        } else {
            Err(detail)
        }
    });
}

fn line(msg: String) {
    let _ = writeln!(std::io::stderr(), "benchmark: {msg}");
}

#[test]
fn benchmark_training_loss() {
    let b = benchmark();
    let cae = b.outcome.cae.as_ref().expect("autoencoder ran");
    let loss = &cae.history.loss;
    let marks: Vec<String> = (99..loss.len()).step_by(100).map(|i| format!("{}:{:.1e}", i + 1, loss[i])).collect();
    line(format!("training loss {}", marks.join(" ")));
    let final_loss = *loss.last().unwrap();
    assert!(final_loss < 1e-4, "training MSE {final_loss:e} after {} epochs", b.config.cae.epochs);
}

#[test]
fn benchmark_separation() {
    let b = benchmark();
    let cae = b.outcome.cae.as_ref().expect("autoencoder ran");
    assert!(!cae.model.is_training());

    // Damaged errors dominate baseline errors.
    let r = report(b, Method::Cae, "quantile:0.99");
    let pick = |damaged: bool| -> Vec<f64> {
        r.scores.iter().zip(&r.truth).filter(|(_, t)| **t == damaged).map(|(s, _)| *s).collect()
    };
    let ratio = quantile(&pick(true), 0.5).unwrap() / quantile(&pick(false), 0.5).unwrap();
    line(format!("median damaged/baseline error ratio {ratio:.2}"));
    assert!(ratio > 1.0);

    // Damaged codes sit further from baseline codes than baseline codes from each other.
    let codes = &cae.test_codes;
    let dist = |i: usize, j: usize| (codes.row(i) - codes.row(j)).norm();
    let (base, dmg): (Vec<usize>, Vec<usize>) = (0..codes.nrows()).partition(|i| !r.truth[*i]);
    let mut intra = Vec::new();
    for (k, &i) in base.iter().enumerate() {
        for &j in &base[k + 1..] {
            intra.push(dist(i, j));
        }
    }
    let inter: Vec<f64> = base.iter().flat_map(|&i| dmg.iter().map(move |&j| (i, j))).map(|(i, j)| dist(i, j)).collect();
    let (mi, mx) = (intra.iter().sum::<f64>() / intra.len() as f64, inter.iter().sum::<f64>() / inter.len() as f64);
    line(format!("code distance inter {mx:.3e} vs intra-baseline {mi:.3e}"));
    assert!(mx > mi);

    // Inference is batch independent.
    let batch = wavescope::cae::Batch::from_images(&b.outcome.test_images.images).unwrap();
    let (full, _) = cae.model.forward(&batch, Mode::Infer).unwrap();
    let (one, _) = cae.model.forward(&batch.select(&[7]), Mode::Infer).unwrap();
    assert!(one.image(0).iter().zip(full.image(7)).all(|(p, q)| (p - q).abs() < 1e-12));
}

#[test]
fn benchmark_threshold_trade_off() {
    let b = benchmark();
    let r = report(b, Method::Cae, "quantile:0.99");
    let mut thresholds = r.scores.clone();
    thresholds.sort_by(f64::total_cmp);
    let mut prev: Option<(usize, usize)> = None;
    for t in thresholds {
        let (c, _) = confusion_and_accuracy(&classify(&r.scores, t), &r.truth).unwrap();
        if let Some((fp, fn_)) = prev {
            assert!(c.fp <= fp && c.fn_ >= fn_, "raising the threshold to {t} moved FP/FN the wrong way");
        }
        prev = Some((c.fp, c.fn_));
    }
    let max = report(b, Method::Cae, "max");
    assert!(max.threshold >= r.threshold);
    assert!(max.confusion.fp <= r.confusion.fp && max.confusion.fn_ >= r.confusion.fn_);
    line(format!(
        "q99 threshold {:.3e} fp {} fn {}; max threshold {:.3e} fp {} fn {}",
        r.threshold, r.confusion.fp, r.confusion.fn_, max.threshold, max.confusion.fp, max.confusion.fn_
    ));
}

#[test]
fn benchmark_nu_sweeps() {
    let b = benchmark();
    for method in [Method::PcaOcsvm, Method::IcaOcsvm] {
        let r = report(b, method, "ocsvm");
        assert_eq!(r.nu_sweep.len(), 9);
        let fps: Vec<usize> = r.nu_sweep.iter().map(|s| s.confusion.fp).collect();
        line(format!(
            "{method} sweep accuracy {:?}",
            r.nu_sweep.iter().map(|s| (s.accuracy * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ));
        assert!(fps.windows(2).all(|w| w[1] + 2 >= w[0]), "{method} fp by nu {fps:?}");
        for s in &r.nu_sweep {
            assert!(s.train_outlier_fraction <= s.nu + 2.0 / 200.0, "{method} {s:?}");
        }
    }
}
