//! Synthetic guided-wave records.
//!
//! A record is a superposition of Hann-windowed tonebursts (one per wave
//! packet: A0, S0, boundary reflections) plus white Gaussian noise. Damage
//! is modelled by its two observable effects on the packets that cross it:
//! lower amplitude and a delayed arrival.

mod io;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use io::{load_dataset, save_dataset, MANIFEST_FILE};

/// Ground-truth class of a record. Codes are part of the on-disk format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Baseline,
    Damaged,
    Unlabeled,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Baseline => 0,
            Label::Damaged => 1,
            Label::Unlabeled => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Baseline),
            1 => Some(Label::Damaged),
            2 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Baseline => "baseline",
            Label::Damaged => "damaged",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline" => Some(Label::Baseline),
            "damaged" => Some(Label::Damaged),
            "unlabeled" => Some(Label::Unlabeled),
            _ => None,
        }
    }
}

/// One sensed waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    samples: Vec<f64>,
    sample_rate: f64,
    pub label: Label,
    pub meta: BTreeMap<String, String>,
}

impl TimeSeriesRecord {
    pub fn new(samples: Vec<f64>, sample_rate: f64, label: Label) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("record has no samples"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} of record")));
        }
        Ok(Self {
            samples,
            sample_rate,
            label,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeTag {
    S0,
    A0,
    Reflection,
}

impl ModeTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s0" => Some(ModeTag::S0),
            "a0" => Some(ModeTag::A0),
            "reflection" => Some(ModeTag::Reflection),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModeTag::S0 => "S0",
            ModeTag::A0 => "A0",
            ModeTag::Reflection => "reflection",
        }
    }
}

/// A single toneburst arriving at the sensor.
///
/// `arrival_time` is the time of the envelope peak (burst center); the
/// burst occupies `arrival_time ± cycles / (2 * center_freq)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    pub cycles: f64,
    pub center_freq: f64,
    pub arrival_time: f64,
    pub amplitude: f64,
    pub mode: ModeTag,
}

impl WavePacketSpec {
    pub fn burst_length(&self) -> f64 {
        self.cycles / self.center_freq
    }

    fn validate(&self) -> Result<()> {
        if !(self.cycles > 0.0) || !self.cycles.is_finite() {
            return Err(Error::invalid(format!("cycles must be > 0, got {}", self.cycles)));
        }
        if !(self.center_freq > 0.0) || !self.center_freq.is_finite() {
            return Err(Error::invalid(format!(
                "center frequency must be > 0, got {}",
                self.center_freq
            )));
        }
        if !(self.arrival_time >= 0.0) || !self.arrival_time.is_finite() {
            return Err(Error::invalid(format!(
                "arrival time must be >= 0, got {}",
                self.arrival_time
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::NonFinite("packet amplitude".into()));
        }
        Ok(())
    }

    /// Noise-free contribution at time `t`.
    fn value_at(&self, t: f64) -> f64 {
        let dt = t - self.arrival_time;
        let u = dt / self.burst_length() + 0.5;
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let w = (PI * u).sin().powi(2);
        self.amplitude * w * (2.0 * PI * self.center_freq * dt).cos()
    }
}

/// Observable effect of a delamination on the packets that cross it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageTransform {
    pub amplitude_factor: f64,
    pub phase_delay: f64,
    /// `None` applies the transform to every packet.
    pub applies_to: Option<Vec<ModeTag>>,
}

impl DamageTransform {
    pub fn identity() -> Self {
        Self {
            amplitude_factor: 1.0,
            phase_delay: 0.0,
            applies_to: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_factor > 0.0 && self.amplitude_factor <= 1.0) {
            return Err(Error::invalid(format!(
                "damage amplitude factor must lie in (0, 1], got {}",
                self.amplitude_factor
            )));
        }
        if !(self.phase_delay >= 0.0) || !self.phase_delay.is_finite() {
            return Err(Error::invalid(format!(
                "damage phase delay must be >= 0, got {}",
                self.phase_delay
            )));
        }
        Ok(())
    }

    fn matches(&self, mode: ModeTag) -> bool {
        self.applies_to
            .as_ref()
            .map_or(true, |modes| modes.contains(&mode))
    }

    pub fn apply(&self, packets: &[WavePacketSpec]) -> Vec<WavePacketSpec> {
        packets
            .iter()
            .map(|p| {
                if self.matches(p.mode) {
                    WavePacketSpec {
                        amplitude: p.amplitude * self.amplitude_factor,
                        arrival_time: p.arrival_time + self.phase_delay,
                        ..*p
                    }
                } else {
                    *p
                }
            })
            .collect()
    }
}

fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    if !(sample_rate > 0.0) || !sample_rate.is_finite() {
        return Err(Error::invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid(format!("duration must be > 0, got {duration}")));
    }
    Ok((duration * sample_rate).round() as usize)
}

fn check_nyquist_margin(center_freq: f64, sample_rate: f64) -> Result<()> {
    if sample_rate < 10.0 * center_freq {
        return Err(Error::invalid(format!(
            "sample rate {sample_rate} Hz is below 10x the {center_freq} Hz center frequency"
        )));
    }
    Ok(())
}

/// A single Hann-windowed toneburst starting at t = 0.
///
/// The burst spans `round(cycles * fs / f)` samples; the cosine carrier
/// peaks at the window center so the envelope maximum sits at the burst
/// midpoint.
pub fn make_toneburst(
    cycles: f64,
    center_freq: f64,
    amplitude: f64,
    sample_rate: f64,
    duration: f64,
) -> Result<TimeSeriesRecord> {
    let n = sample_count(sample_rate, duration)?;
    check_nyquist_margin(center_freq, sample_rate)?;
    let support = (cycles * sample_rate / center_freq).round() as usize;
    // The window spans samples [-0.5, support - 0.5].
    let packet = WavePacketSpec {
        cycles,
        center_freq,
        arrival_time: (support as f64 - 1.0) / 2.0 / sample_rate,
        amplitude,
        mode: ModeTag::A0,
    };
    packet.validate()?;
    if duration < packet.burst_length() {
        return Err(Error::invalid(format!(
            "duration {duration} s is shorter than the {} s burst",
            packet.burst_length()
        )));
    }
    let mut samples = vec![0.0; n];
    for (i, s) in samples.iter_mut().enumerate().take(support) {
        *s = packet.value_at(i as f64 / sample_rate);
    }
    TimeSeriesRecord::new(samples, sample_rate, Label::Unlabeled)
}

fn render(packets: &[WavePacketSpec], sample_rate: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for p in packets {
        let half = p.burst_length() / 2.0;
        let lo = (((p.arrival_time - half) * sample_rate).floor().max(0.0)) as usize;
        let hi = (((p.arrival_time + half) * sample_rate).ceil() as usize + 1).min(n);
        for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
            *v += p.value_at(i as f64 / sample_rate);
        }
    }
    out
}

fn validate_packets(packets: &[WavePacketSpec], sample_rate: f64, duration: f64) -> Result<()> {
    for (i, p) in packets.iter().enumerate() {
        p.validate()?;
        check_nyquist_margin(p.center_freq, sample_rate)?;
        let half = p.burst_length() / 2.0;
        if p.arrival_time - half < 0.0 || p.arrival_time + half > duration {
            return Err(Error::invalid(format!(
                "packet {i} ({}) spans [{:.3e}, {:.3e}] s, outside the {duration} s record",
                p.mode.as_str(),
                p.arrival_time - half,
                p.arrival_time + half
            )));
        }
    }
    Ok(())
}

fn add_noise(samples: &mut [f64], noise_power: f64, seed: u64) {
    if noise_power <= 0.0 {
        return;
    }
    let sigma = noise_power.sqrt();
    let mut rng = seed::rng(seed);
    for s in samples.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *s += sigma * z;
    }
}

fn noise_power_for(clean: &[f64], snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let p = clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64;
    p / 10f64.powf(snr_db / 10.0)
}

fn check_snr(snr_db: f64) -> Result<()> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("SNR must be a number or +inf, got {snr_db}")));
    }
    Ok(())
}

/// Superposition of the packets plus white Gaussian noise at `noise_snr_db`
/// relative to the clean superposition. `f64::INFINITY` disables noise.
pub fn synth_baseline(
    packets: &[WavePacketSpec],
    noise_snr_db: f64,
    sample_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<TimeSeriesRecord> {
    synth_damaged(
        packets,
        &DamageTransform::identity(),
        noise_snr_db,
        sample_rate,
        duration,
        seed,
    )
    .map(|mut r| {
        r.label = Label::Baseline;
        r
    })
}

/// Synthesis with the damage transform applied to matching packets.
///
/// The noise floor is set from the undamaged superposition: the sensor's
/// noise does not change because the structure lost energy.
pub fn synth_damaged(
    baseline_spec: &[WavePacketSpec],
    damage: &DamageTransform,
    noise_snr_db: f64,
    sample_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<TimeSeriesRecord> {
    damage.validate()?;
    check_snr(noise_snr_db)?;
    let n = sample_count(sample_rate, duration)?;
    validate_packets(baseline_spec, sample_rate, duration)?;
    let damaged = damage.apply(baseline_spec);
    validate_packets(&damaged, sample_rate, duration)?;

    let noise_power = if noise_snr_db == f64::INFINITY {
        0.0
    } else {
        noise_power_for(&render(baseline_spec, sample_rate, n), noise_snr_db)
    };
    let mut samples = render(&damaged, sample_rate, n);
    add_noise(&mut samples, noise_power, seed);
    TimeSeriesRecord::new(samples, sample_rate, Label::Damaged)
}

/// Additive white Gaussian noise at the requested SNR relative to the
/// record's own power.
pub fn augment_noise(rec: &TimeSeriesRecord, snr_db: f64, seed: u64) -> Result<TimeSeriesRecord> {
    check_snr(snr_db)?;
    if rec.energy() == 0.0 {
        return Err(Error::invalid("cannot set an SNR on a zero-energy record"));
    }
    if snr_db == f64::INFINITY {
        return Ok(rec.clone());
    }
    let mut out = rec.clone();
    add_noise(&mut out.samples, noise_power_for(&rec.samples, snr_db), seed);
    Ok(out)
}

/// Recipe for a full train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub sample_rate: f64,
    pub duration: f64,
    pub packets: Vec<WavePacketSpec>,
    pub snr_db: f64,
    pub damage: DamageTransform,
    pub train_baseline: usize,
    pub test_baseline: usize,
    pub test_damaged: usize,
    /// Half-width (s) of a uniform per-record shift applied to every packet.
    pub arrival_jitter: f64,
    /// Relative standard deviation of a per-record, per-packet amplitude gain.
    pub amplitude_jitter: f64,
}

impl GenerationConfig {
    /// 60 kHz, 4.5-cycle excitation sampled at 2 MHz for 5 ms: a dominant A0
    /// packet near 0.2 ms and a weaker reflected S0 near 3.5 ms.
    pub fn desk() -> Self {
        Self {
            sample_rate: 2e6,
            duration: 5e-3,
            packets: vec![
                WavePacketSpec {
                    cycles: 4.5,
                    center_freq: 60e3,
                    arrival_time: 0.2e-3,
                    amplitude: 1.0,
                    mode: ModeTag::A0,
                },
                WavePacketSpec {
                    cycles: 4.5,
                    center_freq: 60e3,
                    arrival_time: 3.5e-3,
                    amplitude: 0.4,
                    mode: ModeTag::Reflection,
                },
            ],
            snr_db: 30.0,
            damage: DamageTransform {
                amplitude_factor: 0.7,
                phase_delay: 10e-6,
                applies_to: Some(vec![ModeTag::A0]),
            },
            train_baseline: 200,
            test_baseline: 100,
            test_damaged: 100,
            arrival_jitter: 0.0,
            amplitude_jitter: 0.0,
        }
    }

    /// Desk waveforms at the record counts of the largest experimental
    /// campaign (2125 training / 2875 testing examples).
    pub fn dataset1_scale() -> Self {
        Self {
            train_baseline: 2125,
            test_baseline: 1437,
            test_damaged: 1438,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        sample_count(self.sample_rate, self.duration)?;
        check_snr(self.snr_db)?;
        self.damage.validate()?;
        if self.train_baseline == 0 {
            return Err(Error::invalid("train_baseline count must be > 0"));
        }
        if self.test_baseline + self.test_damaged == 0 {
            return Err(Error::invalid("test split is empty"));
        }
        if !(self.arrival_jitter >= 0.0) || !(self.amplitude_jitter >= 0.0) {
            return Err(Error::invalid("jitter must be >= 0"));
        }
        let j = self.arrival_jitter;
        let shifted: Vec<_> = self
            .packets
            .iter()
            .flat_map(|p| {
                [-j, j].map(|d| WavePacketSpec {
                    arrival_time: p.arrival_time + d,
                    ..*p
                })
            })
            .collect();
        validate_packets(&shifted, self.sample_rate, self.duration)?;
        validate_packets(&self.damage.apply(&shifted), self.sample_rate, self.duration)
    }

    fn jittered_packets(&self, record_seed: u64) -> Vec<WavePacketSpec> {
        if self.arrival_jitter == 0.0 && self.amplitude_jitter == 0.0 {
            return self.packets.clone();
        }
        let mut rng = seed::rng(seed::derive(record_seed, seed::stream::JITTER, 0));
        let shift = if self.arrival_jitter > 0.0 {
            rng.random_range(-self.arrival_jitter..=self.arrival_jitter)
        } else {
            0.0
        };
        self.packets
            .iter()
            .map(|p| {
                let z: f64 = rng.sample(StandardNormal);
                WavePacketSpec {
                    arrival_time: p.arrival_time + shift,
                    amplitude: p.amplitude * (1.0 + self.amplitude_jitter * z),
                    ..*p
                }
            })
            .collect()
    }

    fn record(&self, stream: u64, index: usize, master: u64) -> Result<TimeSeriesRecord> {
        let rs = seed::derive(master, stream, index as u64);
        let packets = self.jittered_packets(rs);
        let rec = if stream == seed::stream::TEST_DAMAGED {
            synth_damaged(&packets, &self.damage, self.snr_db, self.sample_rate, self.duration, rs)?
        } else {
            synth_baseline(&packets, self.snr_db, self.sample_rate, self.duration, rs)?
        };
        let split = match stream {
            seed::stream::TRAIN_BASELINE => "train",
            _ => "test",
        };
        Ok(rec
            .with_meta("split", split)
            .with_meta("run", index.to_string()))
    }
}

/// Records grouped by role. Test labels are carried for scoring only.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train_baseline: Vec<TimeSeriesRecord>,
    pub test_baseline: Vec<TimeSeriesRecord>,
    pub test_damaged: Vec<TimeSeriesRecord>,
    pub seed: u64,
}

impl DatasetSplit {
    /// Test records in (baseline, damaged) order.
    pub fn test_records(&self) -> impl Iterator<Item = &TimeSeriesRecord> {
        self.test_baseline.iter().chain(self.test_damaged.iter())
    }

    pub fn sample_rate(&self) -> Option<f64> {
        self.train_baseline
            .iter()
            .chain(self.test_records())
            .map(|r| r.sample_rate())
            .next()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, records, allowed) in [
            ("train_baseline", &self.train_baseline, Label::Baseline),
            ("test_baseline", &self.test_baseline, Label::Baseline),
            ("test_damaged", &self.test_damaged, Label::Damaged),
        ] {
            if let Some(r) = records.iter().find(|r| r.label != allowed) {
                return Err(Error::invalid(format!(
                    "{name} contains a {} record",
                    r.label.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// Generates every record of the split; record `i` of each role is a pure
/// function of `(config, seed, role, i)`.
pub fn build_dataset(config: &GenerationConfig, seed: u64) -> Result<DatasetSplit> {
    config.validate()?;
    let make = |stream: u64, count: usize| -> Result<Vec<TimeSeriesRecord>> {
        (0..count)
            .into_par_iter()
            .map(|i| config.record(stream, i, seed))
            .collect()
    };
    Ok(DatasetSplit {
        train_baseline: make(seed::stream::TRAIN_BASELINE, config.train_baseline)?,
        test_baseline: make(seed::stream::TEST_BASELINE, config.test_baseline)?,
        test_damaged: make(seed::stream::TEST_DAMAGED, config.test_damaged)?,
        seed,
    })
}
