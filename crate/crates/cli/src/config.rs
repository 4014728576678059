//! Run configuration: a flat TOML file of dotted keys such as
//! `transform.window_length = 256`. Missing keys take their defaults;
//! unknown keys are rejected.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use imred_core::detector::{DetectorConfig, ThresholdCriterion};
use imred_core::separability::{FamilyGenerator, Orientation};
use imred_core::signal::{ImpulseParams, NoiseSpec, SampleGrid};
use imred_core::synth::{SyntheticConfig, DEFAULT_SEED};
use imred_core::transform::{GridSpec, StftSpec, WaveletSpec, WindowKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub sample_rate_hz: f64,
    pub num_samples: usize,
    pub amplitude: f64,
    pub f0_hz: f64,
    pub damping: f64,
    pub delta_damping: f64,
    pub delta_f_hz: f64,
    pub jitter: f64,
    pub snr_db: f64,
    pub n_healthy: usize,
    pub n_defective: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            sample_rate_hz: 17000.0,
            num_samples: 8192,
            amplitude: 1.0,
            f0_hz: 3000.0,
            damping: 150.0,
            delta_damping: 100.0,
            delta_f_hz: -150.0,
            jitter: 0.05,
            snr_db: 20.0,
            n_healthy: 20,
            n_defective: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformSection {
    /// `stft` or `wavelet`.
    pub backend: String,
    pub window: String,
    pub window_length: usize,
    pub hop: usize,
    pub omega_c: f64,
    /// Wavelet scales in samples, log-spaced.
    pub scale_min: f64,
    pub scale_max: f64,
    pub num_scales: usize,
    pub translation_step: usize,
}

impl Default for TransformSection {
    fn default() -> Self {
        Self {
            backend: "stft".into(),
            window: "hann".into(),
            window_length: 256,
            hop: 64,
            omega_c: 6.0,
            scale_min: 2.0,
            scale_max: 64.0,
            num_scales: 32,
            translation_step: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySection {
    /// `rect_grid` or `scale_bands`.
    pub generator: String,
    pub scale_step: usize,
    pub time_step: usize,
    pub min_scale_extent: usize,
    /// 0 means unlimited.
    pub max_scale_extent: usize,
    pub min_time_extent: usize,
    /// 0 means unlimited.
    pub max_time_extent: usize,
    /// Band widths for `scale_bands`.
    pub band_widths: Vec<usize>,
}

impl Default for FamilySection {
    fn default() -> Self {
        Self {
            generator: "rect_grid".into(),
            scale_step: 4,
            time_step: 8,
            min_scale_extent: 1,
            max_scale_extent: 0,
            min_time_extent: 1,
            max_time_extent: 0,
            band_widths: vec![1, 2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub orientation: String,
    pub criterion: String,
    pub n_boot: usize,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            orientation: "defective_high".into(),
            criterion: "youden".into(),
            n_boot: imred_core::detector::DEFAULT_BOOTSTRAP_REPLICATES,
            band_lo_hz: imred_core::detector::DEFAULT_BAND_HZ.0,
            band_hi_hz: imred_core::detector::DEFAULT_BAND_HZ.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub folds: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { folds: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivitySection {
    pub steps: usize,
    /// Fraction of the class perturbation for the first rung; 0 picks a
    /// scale small enough for the first-order model to hold.
    pub start_scale: f64,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        Self { steps: 4, start_scale: 0.0 }
    }
}

/// Paths only; not part of the fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: String,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { out_dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthSection,
    pub transform: TransformSection,
    pub family: FamilySection,
    pub detector: DetectorSection,
    pub eval: EvalSection,
    pub sensitivity: SensitivitySection,
    pub io: IoSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            synth: SynthSection::default(),
            transform: TransformSection::default(),
            family: FamilySection::default(),
            detector: DetectorSection::default(),
            eval: EvalSection::default(),
            sensitivity: SensitivitySection::default(),
            io: IoSection::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Every tunable except the `io` paths as sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut pairs = Vec::new();
        flatten("", &value, &mut pairs);
        pairs.retain(|(k, _)| !k.starts_with("io."));
        pairs.sort();
        let mut s = String::new();
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn synthetic(&self) -> Result<SyntheticConfig<f64>, CliError> {
        let s = &self.synth;
        let cfg = SyntheticConfig {
            base: ImpulseParams::new(s.amplitude, s.damping, TAU * s.f0_hz)?,
            delta_alpha: s.delta_damping,
            delta_omega: TAU * s.delta_f_hz,
            grid: SampleGrid::new(s.sample_rate_hz, s.num_samples)?,
            noise: NoiseSpec::white(s.snr_db, self.seed),
            n_healthy: s.n_healthy,
            n_defective: s.n_defective,
            jitter: s.jitter,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self, num_samples: usize) -> Result<GridSpec<f64>, CliError> {
        let t = &self.transform;
        match t.backend.as_str() {
            "stft" => {
                let spec = StftSpec::new(WindowKind::parse(&t.window)?, t.window_length, t.hop)?;
                Ok(GridSpec::stft(spec, num_samples)?)
            }
            "wavelet" => Ok(GridSpec::wavelet_log(
                WaveletSpec::morlet(t.omega_c)?,
                num_samples,
                t.scale_min,
                t.scale_max,
                t.num_scales,
                t.translation_step,
            )?),
            other => Err(invalid(format!("transform.backend must be 'stft' or 'wavelet', got '{other}'"))),
        }
    }

    pub fn family(&self) -> Result<FamilyGenerator, CliError> {
        let f = &self.family;
        let unlimited = |v: usize| if v == 0 { usize::MAX } else { v };
        match f.generator.as_str() {
            "rect_grid" => Ok(FamilyGenerator::RectGrid {
                scale_step: f.scale_step,
                time_step: f.time_step,
                min_scale_extent: f.min_scale_extent,
                max_scale_extent: unlimited(f.max_scale_extent),
                min_time_extent: f.min_time_extent,
                max_time_extent: unlimited(f.max_time_extent),
            }),
            "scale_bands" => Ok(FamilyGenerator::ScaleBands { widths: f.band_widths.clone() }),
            other => Err(invalid(format!(
                "family.generator must be 'rect_grid' or 'scale_bands', got '{other}'"
            ))),
        }
    }

    pub fn band_hz(&self) -> (f64, f64) {
        (self.detector.band_lo_hz, self.detector.band_hi_hz)
    }

    pub fn detector(&self, grid: GridSpec<f64>) -> Result<DetectorConfig<f64>, CliError> {
        let d = &self.detector;
        let mut cfg = DetectorConfig::new(grid, self.seed);
        cfg.family = self.family()?;
        cfg.orientation = Orientation::parse(&d.orientation)?;
        cfg.criterion = ThresholdCriterion::parse(&d.criterion)?;
        cfg.n_boot = d.n_boot;
        cfg.fourier_band_hz = self.band_hz();
        cfg.wavelet_band_hz = self.band_hz();
        cfg.fingerprint = self.fingerprint();
        Ok(cfg)
    }
}
