//! Run configuration: a line-oriented `key = value` format with
//! `[section]` headers.
//!
//! Grammar, one construct per line after trimming whitespace:
//!
//! ```text
//! line    := blank | comment | header | entry
//! comment := ('#' | ';') any*
//! header  := '[' name ']'
//! entry   := key '=' value          (key and value trimmed)
//! list    := item (',' item)*       (items trimmed; empty value = empty list)
//! ```
//!
//! Entries must follow a header. Unknown sections, unknown keys and
//! repeated keys are rejected with the offending line number. Every key is
//! optional; [`RunConfig::echo`] writes the fully resolved configuration
//! back in the same grammar.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::cae::{Architecture, TrainConfig};
use crate::detect::{Method, ThresholdRule};
use crate::error::{Error, Result};
use crate::scalogram::WaveletParams;
use crate::wavegen::{DamageTransform, GenerationConfig, ModeTag};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Generate from a named preset (`desk` or `dataset1`).
    Preset(String),
    /// Load a dataset directory written by `save_dataset`.
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub source: DatasetSource,
    /// Generation recipe; ignored when loading from a path.
    pub generation: GenerationConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub beta: f64,
    pub gamma: f64,
    pub n_scales: usize,
    /// Peak frequencies of the finest and coarsest scales, in Hz; `None`
    /// resolves to fs/4 and fs/1000 of the dataset.
    pub f_high: Option<f64>,
    pub f_low: Option<f64>,
}

impl RepresentationSpec {
    pub fn wavelet(&self, sample_rate: f64) -> Result<WaveletParams> {
        WaveletParams::log_spaced(
            self.beta,
            self.gamma,
            sample_rate,
            self.f_low.unwrap_or(sample_rate / 1000.0),
            self.f_high.unwrap_or(sample_rate / 4.0),
            self.n_scales,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaeSpec {
    pub preset: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl CaeSpec {
    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::by_name(&self.preset)
            .ok_or_else(|| Error::invalid(format!("unknown autoencoder preset `{}`", self.preset)))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub representation: RepresentationSpec,
    pub methods: Vec<Method>,
    pub components: usize,
    pub nu: f64,
    pub nu_grid: Vec<f64>,
    /// `None` selects `1 / (M · mean feature variance)`.
    pub rbf_gamma: Option<f64>,
    pub ica_tol: f64,
    pub ica_max_iter: usize,
    pub cae: CaeSpec,
    pub thresholds: Vec<ThresholdRule>,
    pub seed: u64,
    pub repeats: usize,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec {
                source: DatasetSource::Preset("desk".into()),
                generation: GenerationConfig::desk(),
            },
            representation: RepresentationSpec {
                height: 64,
                width: 64,
                channels: 1,
                beta: 20.0,
                gamma: 3.0,
                n_scales: 64,
                f_high: None,
                f_low: None,
            },
            methods: vec![Method::PcaOcsvm, Method::IcaOcsvm, Method::Cae],
            components: 3,
            nu: 0.1,
            nu_grid: (1..=9).map(|k| k as f64 / 10.0).collect(),
            rbf_gamma: None,
            ica_tol: 1e-4,
            ica_max_iter: 500,
            cae: CaeSpec {
                preset: "desk".into(),
                epochs: 500,
                learning_rate: 1e-3,
                batch_size: 32,
            },
            thresholds: vec![ThresholdRule::Quantile(0.99), ThresholdRule::Max],
            seed: 0,
            repeats: 1,
            output: None,
        }
    }
}

fn preset(name: &str) -> Option<GenerationConfig> {
    match name {
        "desk" => Some(GenerationConfig::desk()),
        "dataset1" => Some(GenerationConfig::dataset1_scale()),
        _ => None,
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "dataset",
        &[
            "preset",
            "path",
            "snr_db",
            "train_baseline",
            "test_baseline",
            "test_damaged",
            "arrival_jitter",
            "amplitude_jitter",
            "damage_amplitude",
            "damage_delay",
            "damage_modes",
        ],
    ),
    (
        "representation",
        &["height", "width", "channels", "beta", "gamma", "scales", "f_high", "f_low"],
    ),
    (
        "methods",
        &[
            "list",
            "components",
            "nu",
            "nu_grid",
            "rbf_gamma",
            "ica_tol",
            "ica_max_iter",
            "cae_preset",
            "epochs",
            "lr",
            "batch",
        ],
    ),
    ("threshold", &["rules"]),
    ("run", &["seed", "repeats", "out"]),
];

struct Entry {
    line: usize,
    section: &'static str,
    key: &'static str,
    value: String,
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    let mut section: Option<(&'static str, &'static [&'static str])> = None;
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line, format!("unterminated section header `{t}`")))?
                .trim();
            let found = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| cfg_err(line, format!("unknown section `[{name}]`")))?;
            section = Some(*found);
            continue;
        }
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| cfg_err(line, format!("expected `key = value`, got `{t}`")))?;
        let key = key.trim();
        let (sec, keys) = section.ok_or_else(|| cfg_err(line, format!("key `{key}` appears before any section")))?;
        let key = *keys
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| cfg_err(line, format!("unknown key `{key}` in [{sec}]")))?;
        if !seen.insert((sec, key)) {
            return Err(cfg_err(line, format!("duplicate key `{key}` in [{sec}]")));
        }
        entries.push(Entry {
            line,
            section: sec,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| cfg_err(e.line, format!("`{}` is not a valid value for `{}`", e.value, e.key)))
}

fn list(e: &Entry) -> Vec<&str> {
    if e.value.is_empty() {
        return Vec::new();
    }
    e.value.split(',').map(str::trim).collect()
}

fn ranged(e: &Entry, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(cfg_err(e.line, format!("`{}` = {} is out of range: {what}", e.key, e.value)))
    }
}

/// Parses and validates a configuration, resolving every default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = tokenize(text)?;
    let mut cfg = RunConfig::default();
    let find = |sec: &str, key: &str| entries.iter().find(|e| e.section == sec && e.key == key);

    // The preset fixes the base recipe before individual overrides apply.
    if let Some(e) = find("dataset", "preset") {
        cfg.dataset.generation =
            preset(&e.value).ok_or_else(|| cfg_err(e.line, format!("unknown dataset preset `{}`", e.value)))?;
        cfg.dataset.source = DatasetSource::Preset(e.value.clone());
    }
    if let (Some(p), Some(path)) = (find("dataset", "preset"), find("dataset", "path")) {
        return Err(cfg_err(
            path.line.max(p.line),
            "`preset` and `path` are mutually exclusive",
        ));
    }

    for e in &entries {
        let g = &mut cfg.dataset.generation;
        match (e.section, e.key) {
            ("dataset", "preset") => {}
            ("dataset", "path") => cfg.dataset.source = DatasetSource::Path(PathBuf::from(&e.value)),
            ("dataset", "snr_db") => {
                g.snr_db = if e.value == "inf" { f64::INFINITY } else { num(e)? };
                ranged(e, !g.snr_db.is_nan(), "must be a number or `inf`")?;
            }
            ("dataset", "train_baseline") => {
                g.train_baseline = num(e)?;
                ranged(e, g.train_baseline > 0, "must be positive")?;
            }
            ("dataset", "test_baseline") => g.test_baseline = num(e)?,
            ("dataset", "test_damaged") => g.test_damaged = num(e)?,
            ("dataset", "arrival_jitter") => {
                g.arrival_jitter = num(e)?;
                ranged(e, g.arrival_jitter >= 0.0, "must be >= 0")?;
            }
            ("dataset", "amplitude_jitter") => {
                g.amplitude_jitter = num(e)?;
                ranged(e, g.amplitude_jitter >= 0.0, "must be >= 0")?;
            }
            ("dataset", "damage_amplitude") => {
                g.damage.amplitude_factor = num(e)?;
                ranged(e, g.damage.amplitude_factor > 0.0 && g.damage.amplitude_factor <= 1.0, "must lie in (0, 1]")?;
            }
            ("dataset", "damage_delay") => {
                g.damage.phase_delay = num(e)?;
                ranged(e, g.damage.phase_delay >= 0.0, "must be >= 0")?;
            }
            ("dataset", "damage_modes") => {
                g.damage.applies_to = if e.value == "all" {
                    None
                } else {
                    let modes = list(e)
                        .into_iter()
                        .map(|m| {
                            ModeTag::parse(m).ok_or_else(|| cfg_err(e.line, format!("unknown mode `{m}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Some(modes)
                };
            }
            ("representation", "height") => cfg.representation.height = num(e)?,
            ("representation", "width") => cfg.representation.width = num(e)?,
            ("representation", "channels") => {
                cfg.representation.channels = num(e)?;
                ranged(e, matches!(cfg.representation.channels, 1 | 3), "must be 1 or 3")?;
            }
            ("representation", "beta") => cfg.representation.beta = num(e)?,
            ("representation", "gamma") => cfg.representation.gamma = num(e)?,
            ("representation", "scales") => cfg.representation.n_scales = num(e)?,
            ("representation", "f_high") => cfg.representation.f_high = Some(num(e)?),
            ("representation", "f_low") => cfg.representation.f_low = Some(num(e)?),
            ("methods", "list") => {
                cfg.methods = list(e)
                    .into_iter()
                    .map(|m| Method::parse(m).ok_or_else(|| cfg_err(e.line, format!("unknown method `{m}`"))))
                    .collect::<Result<Vec<_>>>()?;
                ranged(e, !cfg.methods.is_empty(), "at least one method is required")?;
                let distinct: BTreeSet<_> = cfg.methods.iter().map(|m| m.as_str()).collect();
                ranged(e, distinct.len() == cfg.methods.len(), "methods must not repeat")?;
            }
            ("methods", "components") => {
                cfg.components = num(e)?;
                ranged(e, cfg.components > 0, "must be positive")?;
            }
            ("methods", "nu") => {
                cfg.nu = num(e)?;
                ranged(e, cfg.nu > 0.0 && cfg.nu <= 1.0, "nu must lie in (0, 1]")?;
            }
            ("methods", "nu_grid") => {
                cfg.nu_grid = list(e).into_iter().map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| cfg_err(e.line, format!("`{v}` is not a number")))
                }).collect::<Result<Vec<_>>>()?;
                ranged(e, cfg.nu_grid.iter().all(|v| *v > 0.0 && *v <= 1.0), "every nu must lie in (0, 1]")?;
            }
            ("methods", "rbf_gamma") => {
                cfg.rbf_gamma = if e.value == "auto" { None } else { Some(num(e)?) };
                ranged(e, cfg.rbf_gamma.map_or(true, |g| g > 0.0 && g.is_finite()), "must be positive or `auto`")?;
            }
            ("methods", "ica_tol") => {
                cfg.ica_tol = num(e)?;
                ranged(e, cfg.ica_tol > 0.0, "must be positive")?;
            }
            ("methods", "ica_max_iter") => {
                cfg.ica_max_iter = num(e)?;
                ranged(e, cfg.ica_max_iter > 0, "must be positive")?;
            }
            ("methods", "cae_preset") => {
                ranged(e, Architecture::by_name(&e.value).is_some(), "must be `desk` or `paper-shape`")?;
                cfg.cae.preset = e.value.clone();
            }
            ("methods", "epochs") => cfg.cae.epochs = num(e)?,
            ("methods", "lr") => {
                cfg.cae.learning_rate = num(e)?;
                ranged(e, cfg.cae.learning_rate > 0.0 && cfg.cae.learning_rate.is_finite(), "must be positive")?;
            }
            ("methods", "batch") => {
                cfg.cae.batch_size = num(e)?;
                ranged(e, cfg.cae.batch_size > 0, "must be positive")?;
            }
            ("threshold", "rules") => {
                cfg.thresholds = list(e)
                    .into_iter()
                    .map(|r| ThresholdRule::parse(r).ok_or_else(|| cfg_err(e.line, format!("unknown threshold rule `{r}`"))))
                    .collect::<Result<Vec<_>>>()?;
                ranged(e, !cfg.thresholds.is_empty(), "at least one rule is required")?;
            }
            ("run", "seed") => cfg.seed = num(e)?,
            ("run", "repeats") => {
                cfg.repeats = num(e)?;
                ranged(e, cfg.repeats > 0, "must be positive")?;
            }
            ("run", "out") => cfg.output = Some(PathBuf::from(&e.value)),
            _ => unreachable!("key table and parser disagree"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Cross-field checks; line 0 marks errors not tied to a single line.
    pub fn validate(&self) -> Result<()> {
        let whole = |m: String| cfg_err(0, m);
        if self.methods.is_empty() {
            return Err(whole("no methods selected".into()));
        }
        if matches!(self.dataset.source, DatasetSource::Preset(_)) {
            self.dataset.generation.validate().map_err(|e| whole(e.to_string()))?;
        }
        if self.representation.height == 0 || self.representation.width == 0 {
            return Err(whole("image dimensions must be positive".into()));
        }
        if let Some(arch) = self.methods.contains(&Method::Cae).then(|| self.cae.architecture()) {
            let arch = arch?;
            let r = &self.representation;
            if arch.input_shape != (r.height, r.width, r.channels) {
                return Err(whole(format!(
                    "autoencoder preset `{}` expects {:?} images, representation gives {:?}",
                    self.cae.preset,
                    arch.input_shape,
                    (r.height, r.width, r.channels)
                )));
            }
        }
        if let DatasetSource::Preset(_) = self.dataset.source {
            self.representation
                .wavelet(self.dataset.generation.sample_rate)
                .map_err(|e| whole(e.to_string()))?;
        }
        Ok(())
    }

    /// The resolved configuration in the input grammar.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let g = &self.dataset.generation;
        let _ = writeln!(s, "[dataset]");
        match &self.dataset.source {
            DatasetSource::Preset(p) => {
                let _ = writeln!(s, "preset = {p}");
            }
            DatasetSource::Path(p) => {
                let _ = writeln!(s, "path = {}", p.display());
            }
        }
        let snr = if g.snr_db.is_infinite() { "inf".to_string() } else { g.snr_db.to_string() };
        let _ = writeln!(s, "snr_db = {snr}");
        let _ = writeln!(s, "train_baseline = {}", g.train_baseline);
        let _ = writeln!(s, "test_baseline = {}", g.test_baseline);
        let _ = writeln!(s, "test_damaged = {}", g.test_damaged);
        let _ = writeln!(s, "arrival_jitter = {}", g.arrival_jitter);
        let _ = writeln!(s, "amplitude_jitter = {}", g.amplitude_jitter);
        let _ = writeln!(s, "damage_amplitude = {}", g.damage.amplitude_factor);
        let _ = writeln!(s, "damage_delay = {}", g.damage.phase_delay);
        let modes = g.damage.applies_to.as_ref().map_or("all".to_string(), |m| {
            m.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(", ")
        });
        let _ = writeln!(s, "damage_modes = {modes}");

        let r = &self.representation;
        let _ = writeln!(s, "\n[representation]");
        let _ = writeln!(s, "height = {}", r.height);
        let _ = writeln!(s, "width = {}", r.width);
        let _ = writeln!(s, "channels = {}", r.channels);
        let _ = writeln!(s, "beta = {}", r.beta);
        let _ = writeln!(s, "gamma = {}", r.gamma);
        let _ = writeln!(s, "scales = {}", r.n_scales);
        if let Some(f) = r.f_high {
            let _ = writeln!(s, "f_high = {f}");
        }
        if let Some(f) = r.f_low {
            let _ = writeln!(s, "f_low = {f}");
        }

        let _ = writeln!(s, "\n[methods]");
        let names: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(s, "list = {}", names.join(", "));
        let _ = writeln!(s, "components = {}", self.components);
        let _ = writeln!(s, "nu = {}", self.nu);
        let grid: Vec<String> = self.nu_grid.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "nu_grid = {}", grid.join(", "));
        let _ = writeln!(
            s,
            "rbf_gamma = {}",
            self.rbf_gamma.map_or("auto".to_string(), |g| g.to_string())
        );
        let _ = writeln!(s, "ica_tol = {}", self.ica_tol);
        let _ = writeln!(s, "ica_max_iter = {}", self.ica_max_iter);
        let _ = writeln!(s, "cae_preset = {}", self.cae.preset);
        let _ = writeln!(s, "epochs = {}", self.cae.epochs);
        let _ = writeln!(s, "lr = {}", self.cae.learning_rate);
        let _ = writeln!(s, "batch = {}", self.cae.batch_size);

        let _ = writeln!(s, "\n[threshold]");
        let rules: Vec<String> = self.thresholds.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(s, "rules = {}", rules.join(", "));

        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        if let Some(o) = &self.output {
            let _ = writeln!(s, "out = {}", o.display());
        }
        s
    }

    /// Damage recipe in effect for generated datasets.
    pub fn damage(&self) -> &DamageTransform {
        &self.dataset.generation.damage
    }
}
