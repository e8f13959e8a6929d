use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavescope::scalogram::{
    cwt, cwt_with, flatten, morse_filter, morse_peak, scalogram, to_image, CwtForm, ImageTensor, WaveletParams,
};
use wavescope::wavegen::{synth_baseline, Label, ModeTag, TimeSeriesRecord, WavePacketSpec};

const FS: f64 = 2e6;

fn burst_record(cycles: f64, freq: f64, center: f64) -> TimeSeriesRecord {
    let packet = WavePacketSpec {
        cycles,
        center_freq: freq,
        arrival_time: center,
        amplitude: 1.0,
        mode: ModeTag::A0,
    };
    synth_baseline(&[packet], f64::INFINITY, FS, 2e-3, 0).unwrap()
}

fn random_record(rng: &mut ChaCha8Rng, n: usize) -> TimeSeriesRecord {
    let s = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    TimeSeriesRecord::new(s, FS, Label::Unlabeled).unwrap()
}

#[test]
fn tonebursts_localise_in_scale_and_time() {
    let params = WaveletParams::default_for(FS).unwrap();
    for (cycles, freq) in [(5.0, 40e3), (4.5, 60e3)] {
        let center = 0.8e-3;
        let cm = cwt(&burst_record(cycles, freq, center), &params).unwrap();
        let (si, ti) = cm.argmax();
        let f_peak = params.peak_frequency(params.scales[si], FS);
        assert!((f_peak - freq).abs() / freq < 0.05, "{freq} Hz burst peaks at {f_peak} Hz");
        let t_peak = ti as f64 / FS;
        assert!((t_peak - center).abs() / center < 0.05, "burst centre {center} s, peak at {t_peak} s");

        // The image row of the maximum sits within one scale step of it.
        let img = to_image(&cm, params.scales.len(), 256, 1).unwrap();
        let mut best = (0, 0.0);
        for r in 0..img.height() {
            for c in 0..img.width() {
                if img.get(r, c, 0) > best.1 {
                    best = (r, img.get(r, c, 0));
                }
            }
        }
        assert!((best.0 as i64 - si as i64).abs() <= 1, "row {} vs scale {si}", best.0);
    }
}

fn max_rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn transform_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = WaveletParams::log_spaced(20.0, 3.0, FS, 2e3, 5e5, 16).unwrap();
    for _ in 0..5 {
        let (x, y) = (random_record(&mut rng, 500), random_record(&mut rng, 500));
        let (alpha, beta) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
        let combo: Vec<f64> = x.samples().iter().zip(y.samples()).map(|(a, b)| alpha * a + beta * b).collect();
        let combo = TimeSeriesRecord::new(combo, FS, Label::Unlabeled).unwrap();
        let (cx, cy, cc) = (cwt(&x, &params).unwrap(), cwt(&y, &params).unwrap(), cwt(&combo, &params).unwrap());
        let expected: Vec<Complex64> = cx.values().iter().zip(cy.values()).map(|(a, b)| a * alpha + b * beta).collect();
        assert!(max_rel_diff(cc.values(), &expected) < 1e-10);
    }
}

#[test]
fn zero_signal_gives_zero_coefficients() {
    let params = WaveletParams::default_for(FS).unwrap();
    let rec = TimeSeriesRecord::new(vec![0.0; 300], FS, Label::Baseline).unwrap();
    assert!(cwt(&rec, &params).unwrap().values().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn time_shift_moves_columns() {
    let params = WaveletParams::default_for(FS).unwrap();
    let a = cwt(&burst_record(4.5, 60e3, 0.6e-3), &params).unwrap().magnitude();
    let k = 100;
    let b = cwt(&burst_record(4.5, 60e3, 0.6e-3 + k as f64 / FS), &params).unwrap().magnitude();
    let n = 4000;
    let peak = a.iter().cloned().fold(0.0, f64::max);
    // Interior columns only; the finest scales decay within a few hundred samples.
    for s in 0..params.scales.len() / 2 {
        for t in 600..2400 {
            let d = (a[s * n + t] - b[s * n + t + k]).abs();
            assert!(d < 1e-9 * peak, "scale {s} time {t}: {d:e}");
        }
    }
}

/// Riemann sum of ∫ F(t) Φ((t − b)/a) dt on the sample grid, with the
/// time-domain wavelet built from its spectrum by a direct (non-FFT) sum.
#[test]
fn literal_integral_matches_time_domain_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rec = random_record(&mut rng, 40);
    let params = WaveletParams::new(20.0, 3.0, vec![3.0, 6.5]).unwrap();
    let got = cwt_with(&rec, &params, CwtForm::LiteralIntegral).unwrap();
    let n = rec.len();
    let l = (2 * n).next_power_of_two();
    let omega: Vec<f64> = (0..l)
        .map(|k| if k <= l / 2 { 2.0 * PI * k as f64 / l as f64 } else { -2.0 * PI * (l - k) as f64 / l as f64 })
        .collect();
    for (si, &a) in params.scales.iter().enumerate() {
        let filt = morse_filter(20.0, 3.0, a, &omega).unwrap();
        // Φ(u/a) = (1/2π) ∫ a Φ̂(aω) e^{iωu} dω, discretised on the padded grid.
        let phi = |u: i64| -> Complex64 {
            (0..l)
                .map(|k| Complex64::from_polar(a * filt[k], omega[k] * u as f64))
                .sum::<Complex64>()
                / l as f64
        };
        for b in 0..n {
            let direct: Complex64 = (0..n).map(|t| phi(t as i64 - b as i64) * rec.samples()[t]).sum();
            let ours = got.get(si, b);
            assert!((direct - ours).norm() < 1e-10 * direct.norm().max(1.0), "scale {a} b {b}");
        }
    }
}

#[test]
fn morse_filter_shape() {
    let grid: Vec<f64> = (0..=40_000).map(|i| i as f64 * 1e-4).collect();
    let f = morse_filter(20.0, 3.0, 1.0, &grid).unwrap();
    assert_eq!(f[0], 0.0);
    let imax = (0..f.len()).max_by(|a, b| f[*a].total_cmp(&f[*b])).unwrap();
    assert!((grid[imax] - (20.0f64 / 3.0).cbrt()).abs() <= 1e-4);
    assert!((grid[imax] - 1.8821).abs() < 1e-3);
    let f2 = morse_filter(20.0, 3.0, 2.0, &grid).unwrap();
    let imax2 = (0..f2.len()).max_by(|a, b| f2[*a].total_cmp(&f2[*b])).unwrap();
    assert!((grid[imax2] - morse_peak(20.0, 3.0) / 2.0).abs() <= 1e-4);
    assert!(morse_filter(20.0, 3.0, 1.0, &[-1.0]).unwrap()[0] == 0.0);
}

#[test]
fn paper_shape_image_has_expected_size() {
    let params = WaveletParams::default_for(FS).unwrap();
    let img = scalogram(&burst_record(5.0, 40e3, 0.8e-3), &params, 256, 256, 3).unwrap();
    assert_eq!(img.pixels().len(), 196_608);
    assert!(img.is_quantized());
    let gray = scalogram(&burst_record(5.0, 40e3, 0.8e-3), &params, 256, 256, 1).unwrap();
    assert_eq!(flatten(&gray).len(), 65_536);
}

#[test]
fn flatten_of_two_by_two() {
    let img = ImageTensor::new(2, 2, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(flatten(&img), vec![0.1, 0.2, 0.3, 0.4]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn images_are_quantized_and_bounded(seed in 0u64..1000, h in 1usize..40, w in 1usize..40, rgb in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = random_record(&mut rng, 64);
        let params = WaveletParams::log_spaced(20.0, 3.0, FS, 1e4, 5e5, 8).unwrap();
        let img = scalogram(&rec, &params, h, w, if rgb { 3 } else { 1 }).unwrap();
        prop_assert!(img.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!(img.is_quantized());
    }

    #[test]
    fn reshape_inverts_flatten(seed in 0u64..1000, h in 1usize..12, w in 1usize..12, c in prop::sample::select(vec![1usize, 3])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px: Vec<f64> = (0..h * w * c).map(|_| rng.random::<f64>()).collect();
        let img = ImageTensor::new(h, w, c, px).unwrap();
        prop_assert_eq!(ImageTensor::reshape(flatten(&img), h, w, c).unwrap(), img);
    }
}
