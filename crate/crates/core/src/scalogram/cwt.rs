use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavegen::TimeSeriesRecord;

/// Peak value of every scaled Morse filter.
pub const MORSE_PEAK_GAIN: f64 = 2.0;

/// Minimum record length accepted by [`cwt`].
pub const MIN_RECORD_LEN: usize = 16;

/// Generalized Morse wavelet parameters and the analysis scale grid.
///
/// Scales are in samples: scale `a` has its filter peak at
/// `morse_peak(beta, gamma) / a` radians per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletParams {
    pub beta: f64,
    pub gamma: f64,
    pub scales: Vec<f64>,
}

/// Peak radian frequency of `ω^β exp(-ω^γ)`.
pub fn morse_peak(beta: f64, gamma: f64) -> f64 {
    (beta / gamma).powf(1.0 / gamma)
}

impl WaveletParams {
    pub fn new(beta: f64, gamma: f64, scales: Vec<f64>) -> Result<Self> {
        let p = Self { beta, gamma, scales };
        p.validate()?;
        Ok(p)
    }

    /// `count` log-spaced scales whose peak frequencies run from `f_high`
    /// down to `f_low` Hz.
    pub fn log_spaced(
        beta: f64,
        gamma: f64,
        sample_rate: f64,
        f_low: f64,
        f_high: f64,
        count: usize,
    ) -> Result<Self> {
        if !(f_low > 0.0 && f_high > f_low) || count < 2 {
            return Err(Error::invalid(format!(
                "scale grid needs 0 < f_low < f_high and >= 2 scales, got {f_low}..{f_high} x{count}"
            )));
        }
        let peak = morse_peak(beta, gamma);
        let a_min = peak * sample_rate / (2.0 * PI * f_high);
        let a_max = peak * sample_rate / (2.0 * PI * f_low);
        let ratio = (a_max / a_min).ln() / (count - 1) as f64;
        let scales = (0..count).map(|i| a_min * (ratio * i as f64).exp()).collect();
        Self::new(beta, gamma, scales)
    }

    /// β = 20, γ = 3, 64 scales spanning fs/1000 to fs/4.
    pub fn default_for(sample_rate: f64) -> Result<Self> {
        Self::log_spaced(20.0, 3.0, sample_rate, sample_rate / 1000.0, sample_rate / 4.0, 64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) || !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "Morse parameters must be positive, got beta={} gamma={}",
                self.beta, self.gamma
            )));
        }
        if self.scales.is_empty() {
            return Err(Error::invalid("scale grid is empty"));
        }
        if self.scales.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("scales must be strictly positive"));
        }
        if self.scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("scales must be strictly increasing"));
        }
        Ok(())
    }

    /// Peak frequency (Hz) of the filter at `scale`.
    pub fn peak_frequency(&self, scale: f64, sample_rate: f64) -> f64 {
        morse_peak(self.beta, self.gamma) * sample_rate / (2.0 * PI * scale)
    }
}

/// Frequency response of the Morse wavelet dilated by `scale`, sampled on
/// `freq_grid` (radians per sample). Zero for non-positive frequencies;
/// the maximum equals [`MORSE_PEAK_GAIN`].
pub fn morse_filter(beta: f64, gamma: f64, scale: f64, freq_grid: &[f64]) -> Result<Vec<f64>> {
    if !(beta > 0.0) || !(gamma > 0.0) || !(scale > 0.0) {
        return Err(Error::invalid(format!(
            "morse filter needs beta, gamma, scale > 0 (got {beta}, {gamma}, {scale})"
        )));
    }
    // log of the normalizer 2 (eγ/β)^{β/γ}
    let log_norm = MORSE_PEAK_GAIN.ln() + (beta / gamma) * (1.0 + (gamma / beta).ln());
    Ok(freq_grid
        .iter()
        .map(|&w| {
            let w = w * scale;
            if w <= 0.0 {
                0.0
            } else {
                (log_norm + beta * w.ln() - w.powf(gamma)).exp()
            }
        })
        .collect())
}

/// Which discretization of the wavelet integral to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CwtForm {
    /// Analytic filter bank: `W(a,b) = (1/2π) ∫ F̂(ω) Φ̂(aω) e^{iωb} dω`.
    #[default]
    Analytic,
    /// The unnormalized, unconjugated integral `∫ F(t) Φ((t-b)/a) dt`,
    /// which for real input equals `a · conj(W(a,b))`.
    LiteralIntegral,
}

/// Wavelet coefficients over (scale, time).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    values: Vec<Complex64>,
    scales: Vec<f64>,
    len: usize,
    sample_rate: f64,
}

impl CoefficientMatrix {
    pub fn from_parts(values: Vec<Complex64>, scales: Vec<f64>, len: usize, sample_rate: f64) -> Result<Self> {
        if values.len() != scales.len() * len {
            return Err(Error::DimensionMismatch {
                context: "coefficient matrix",
                expected: scales.len() * len,
                got: values.len(),
            });
        }
        if values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("wavelet coefficient".into()));
        }
        Ok(Self {
            values,
            scales,
            len,
            sample_rate,
        })
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn n_times(&self) -> usize {
        self.len
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, scale_index: usize) -> &[Complex64] {
        &self.values[scale_index * self.len..(scale_index + 1) * self.len]
    }

    pub fn get(&self, scale_index: usize, time_index: usize) -> Complex64 {
        self.values[scale_index * self.len + time_index]
    }

    /// |coefficients| in row-major (scale, time) order.
    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    /// (scale index, time index) of the largest magnitude.
    pub fn argmax(&self) -> (usize, usize) {
        let i = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (i / self.len, i % self.len)
    }
}

pub fn cwt(rec: &TimeSeriesRecord, params: &WaveletParams) -> Result<CoefficientMatrix> {
    cwt_with(rec, params, CwtForm::Analytic)
}

/// Frequency-domain CWT: one forward FFT of the zero-padded record, then per
/// scale a product with the dilated Morse filter and an inverse FFT.
pub fn cwt_with(rec: &TimeSeriesRecord, params: &WaveletParams, form: CwtForm) -> Result<CoefficientMatrix> {
    params.validate()?;
    let x = rec.samples();
    if x.len() < MIN_RECORD_LEN {
        return Err(Error::invalid(format!(
            "record has {} samples, CWT needs at least {MIN_RECORD_LEN}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("CWT input sample".into()));
    }
    let n = x.len();
    let l = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(l);
    let inv = planner.plan_fft_inverse(l);

    let mut spectrum: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(l)
        .collect();
    fwd.process(&mut spectrum);

    // Negative-frequency bins map to ω <= 0 and so vanish in the analytic filter.
    let omega: Vec<f64> = (0..l)
        .map(|k| {
            if k <= l / 2 {
                2.0 * PI * k as f64 / l as f64
            } else {
                -2.0 * PI * (l - k) as f64 / l as f64
            }
        })
        .collect();

    let mut values = Vec::with_capacity(params.scales.len() * n);
    let mut work = vec![Complex64::new(0.0, 0.0); l];
    for &a in &params.scales {
        let filt = morse_filter(params.beta, params.gamma, a, &omega)?;
        for ((w, s), f) in work.iter_mut().zip(&spectrum).zip(&filt) {
            *w = s * f;
        }
        inv.process(&mut work);
        let scale = match form {
            CwtForm::Analytic => 1.0 / l as f64,
            CwtForm::LiteralIntegral => a / l as f64,
        };
        values.extend(work[..n].iter().map(|c| {
            let c = c * scale;
            match form {
                CwtForm::Analytic => c,
                CwtForm::LiteralIntegral => c.conj(),
            }
        }));
    }
    CoefficientMatrix::from_parts(values, params.scales.clone(), n, rec.sample_rate())
}
