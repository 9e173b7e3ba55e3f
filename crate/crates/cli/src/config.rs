//! Scenario configuration: TOML sections with a default for every key.
//!
//! All lengths are in meters. Unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use slitcorr_core::{DoubleSlitMask, MaskLabel, ModelError, OpticalSetup, ScanAxis, ScanGrid, SourceProfile, SourceShape};
use thiserror::Error;

/// Smallest Monte Carlo ensemble accepted by the runner.
pub const MIN_REALIZATIONS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fig2,
    Fig3a,
    Fig3bc,
    Custom,
    Selftest,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3a => "fig3a",
            Scenario::Fig3bc => "fig3bc",
            Scenario::Custom => "custom",
            Scenario::Selftest => "selftest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Scenario::Fig2, Scenario::Fig3a, Scenario::Fig3bc, Scenario::Custom, Scenario::Selftest]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    /// Monte Carlo; analytic columns are always emitted alongside.
    Montecarlo,
    Both,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Montecarlo => "montecarlo",
            Engine::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Engine::Analytic, Engine::Montecarlo, Engine::Both]
            .into_iter()
            .find(|v| v.name() == s)
    }

    pub fn uses_monte_carlo(self) -> bool {
        self != Engine::Analytic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupSection {
    pub wavelength: f64,
    pub z: f64,
    pub focal_length: f64,
    pub coherence_length: f64,
    pub source_shape: SourceShape,
}

impl Default for SetupSection {
    fn default() -> Self {
        Self {
            wavelength: 980e-9,
            z: 70e-3,
            focal_length: 200e-3,
            coherence_length: 0.55e-3,
            source_shape: SourceShape::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    #[serde(default)]
    pub center: f64,
    pub separation: f64,
    #[serde(default = "default_slit_width")]
    pub slit_width: f64,
}

fn default_slit_width() -> f64 {
    55e-6
}

fn default_mask_c() -> MaskSection {
    MaskSection {
        center: 0.0,
        separation: 0.69e-3,
        slit_width: default_slit_width(),
    }
}

fn default_mask_t() -> MaskSection {
    MaskSection {
        center: 0.0,
        separation: 0.57e-3,
        slit_width: default_slit_width(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    /// Width of each detector's sensitive area.
    pub aperture: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { aperture: 50e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub scenario: Scenario,
    pub engine: Engine,
    pub realizations: u64,
    pub seed: u64,
    /// Source grid points for the Monte Carlo engine.
    pub source_points: usize,
    /// Directory receiving the CSV files.
    pub output: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scenario: Scenario::Fig2,
            engine: Engine::Analytic,
            realizations: 20_000,
            seed: 1,
            source_points: slitcorr_core::speckle::DEFAULT_SOURCE_POINTS,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis: ScanAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub setup: SetupSection,
    pub mask_c: MaskSection,
    pub mask_t: MaskSection,
    pub detector: DetectorSection,
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            setup: SetupSection::default(),
            mask_c: default_mask_c(),
            mask_t: default_mask_t(),
            detector: DetectorSection::default(),
            run: RunSection::default(),
            scan: None,
        }
    }
}

fn model_field(section: &str, err: &ModelError) -> String {
    let name = match err {
        ModelError::NonFinite { field, .. } | ModelError::NonPositive { field, .. } | ModelError::Negative { field, .. } => {
            field.to_string()
        }
        ModelError::OverlappingSlits { .. } => "slit_width".to_string(),
        ModelError::TooFewPoints(_) => "points".to_string(),
        ModelError::EmptyRange { .. } => "stop".to_string(),
    };
    format!("{section}.{name}")
}

impl ScenarioConfig {
    pub fn setup(&self) -> Result<OpticalSetup, ConfigError> {
        let s = &self.setup;
        let source = SourceProfile::new(s.source_shape, s.coherence_length)
            .map_err(|e| ConfigError::invalid(&model_field("setup", &e), &e))?;
        OpticalSetup::new(s.wavelength, s.z, s.focal_length, source)
            .map_err(|e| ConfigError::invalid(&model_field("setup", &e), &e))
    }

    fn mask(section: &MaskSection, name: &str, label: MaskLabel) -> Result<DoubleSlitMask, ConfigError> {
        DoubleSlitMask::new(section.center, section.separation, section.slit_width, label)
            .map_err(|e| ConfigError::invalid(&model_field(name, &e), &e))
    }

    pub fn mask_c(&self) -> Result<DoubleSlitMask, ConfigError> {
        Self::mask(&self.mask_c, "mask_c", MaskLabel::C)
    }

    pub fn mask_t(&self) -> Result<DoubleSlitMask, ConfigError> {
        Self::mask(&self.mask_t, "mask_t", MaskLabel::T)
    }

    pub fn scan_grid(&self) -> Result<Option<ScanGrid>, ConfigError> {
        self.scan
            .as_ref()
            .map(|s| {
                ScanGrid::new(s.axis, s.start, s.stop, s.points)
                    .map_err(|e| ConfigError::invalid(&model_field("scan", &e), &e))
            })
            .transpose()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.setup()?;
        self.mask_c()?;
        self.mask_t()?;
        let a = self.detector.aperture;
        if !(a.is_finite() && a >= 0.0) {
            return Err(ConfigError::invalid("detector.aperture", format!("must be finite and ≥ 0, got {a}")));
        }
        if self.run.engine.uses_monte_carlo() && self.run.realizations < MIN_REALIZATIONS {
            return Err(ConfigError::invalid(
                "run.realizations",
                format!("Monte Carlo needs at least {MIN_REALIZATIONS}, got {}", self.run.realizations),
            ));
        }
        if self.run.source_points < slitcorr_core::speckle::MIN_SOURCE_POINTS {
            return Err(ConfigError::invalid(
                "run.source_points",
                format!("at least {} required", slitcorr_core::speckle::MIN_SOURCE_POINTS),
            ));
        }
        match (self.run.scenario, &self.scan) {
            (Scenario::Custom, None) => {
                return Err(ConfigError::invalid("scan", "the custom scenario needs a [scan] section"));
            }
            (Scenario::Custom, Some(_)) => {
                self.scan_grid()?;
            }
            (other, Some(_)) => {
                return Err(ConfigError::invalid(
                    "scan",
                    format!("scenario {} uses fixed scans; [scan] applies to custom only", other.name()),
                ));
            }
            (_, None) => {}
        }
        Ok(())
    }

    /// TOML text that parses back to an equal configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates configuration text; missing keys take the defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}
