//! Scenario configuration.
//!
//! The file is TOML, normally written as flat dotted keys:
//!
//! ```text
//! array.num_antennas = 16
//! scenario.legit_angle_deg = 120.0
//! pa.models = ["poly3"]
//! sweep.ibo_db = [-20.0, -10.0, 0.0]
//! ```
//!
//! Every key has a default reproducing the reference scenario, so an empty
//! file is valid. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::bussgang::{DEFAULT_MC_SAMPLES, MIN_MC_SAMPLES};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_GRID_POINTS;
use crate::pa::{
    RappParams, REFERENCE_AMPM_KNEE, REFERENCE_AMPM_SCALE_DEG, REFERENCE_SMOOTHNESS_Q,
    REFERENCE_SMOOTHNESS_S,
};
use crate::precoder::DEFAULT_INFO_FRACTION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderSelector {
    Mrt,
    Z3ro,
    MrtAn,
}

impl PrecoderSelector {
    pub fn label(self) -> &'static str {
        match self {
            PrecoderSelector::Mrt => "mrt",
            PrecoderSelector::Z3ro => "z3ro",
            PrecoderSelector::MrtAn => "mrt-an",
        }
    }
}

impl fmt::Display for PrecoderSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PrecoderSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mrt" => Ok(Self::Mrt),
            "z3ro" => Ok(Self::Z3ro),
            "mrt-an" => Ok(Self::MrtAn),
            other => Err(format!(
                "unknown precoder `{other}` (expected mrt, z3ro or mrt-an)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaSelector {
    Poly3,
    Rapp,
}

impl PaSelector {
    pub fn label(self) -> &'static str {
        match self {
            PaSelector::Poly3 => "poly3",
            PaSelector::Rapp => "rapp",
        }
    }
}

impl fmt::Display for PaSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PaSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "poly3" => Ok(Self::Poly3),
            "rapp" => Ok(Self::Rapp),
            other => Err(format!(
                "unknown PA model `{other}` (expected poly3 or rapp)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub num_antennas: usize,
    pub spacing_over_wavelength: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            num_antennas: 16,
            spacing_over_wavelength: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub legit_angle_deg: f64,
    pub noise_variance: f64,
    pub path_loss: f64,
    pub grid_points: usize,
    /// Half-width of the window around the legitimate user excluded when
    /// picking the strongest eavesdropper.
    pub eve_exclusion_deg: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            legit_angle_deg: 120.0,
            noise_variance: 1e-2,
            path_loss: 1.0,
            grid_points: DEFAULT_GRID_POINTS,
            eve_exclusion_deg: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaConfig {
    /// Models to evaluate; unset means the experiment's own default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<PaSelector>>,
    pub amam_gain: f64,
    pub smoothness_s: f64,
    pub smoothness_q: f64,
    pub ampm_scale_deg: f64,
    pub ampm_knee: f64,
    /// Fixed `[re, im]` polynomial coefficients replacing the per-IBO fit.
    /// Both must be given together.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta3: Option<[f64; 2]>,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self {
            models: None,
            amam_gain: 1.0,
            smoothness_s: REFERENCE_SMOOTHNESS_S,
            smoothness_q: REFERENCE_SMOOTHNESS_Q,
            ampm_scale_deg: REFERENCE_AMPM_SCALE_DEG,
            ampm_knee: REFERENCE_AMPM_KNEE,
            beta1: None,
            beta3: None,
        }
    }
}

impl PaConfig {
    pub fn rapp(&self, p_sat: f64) -> RappParams {
        RappParams {
            amam_gain: self.amam_gain,
            p_sat,
            smoothness_s: self.smoothness_s,
            ampm_scale_deg: self.ampm_scale_deg,
            ampm_knee: self.ampm_knee,
            smoothness_q: self.smoothness_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrecoderConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<PrecoderSelector>>,
    pub saturated_antennas: usize,
    pub info_fraction: f64,
}

impl Default for PrecoderConfig {
    fn default() -> Self {
        Self {
            kinds: None,
            saturated_antennas: 1,
            info_fraction: DEFAULT_INFO_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ibo_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_MC_SAMPLES,
            seed: 0x5EC_2E7,
        }
    }
}

/// Complete description of a simulation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub array: ArrayConfig,
    pub scenario: ScenarioSection,
    pub pa: PaConfig,
    pub precoder: PrecoderConfig,
    pub sweep: SweepConfig,
    pub monte_carlo: MonteCarloConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(
                if key.is_empty() { ".".into() } else { key },
                e.into_inner().message().trim(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config { key, message } => {
                Error::config(key, format!("{message} (in {})", path.display()))
            }
            other => other,
        })
    }

    /// Serialises back to TOML; parsing the result yields `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.array.num_antennas, self.array.spacing_over_wavelength).map_err(
            |e| {
                let key = if self.array.num_antennas < 2 {
                    "array.num_antennas"
                } else {
                    "array.spacing_over_wavelength"
                };
                Error::config(key, e.to_string())
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.geometry()?.num_antennas();
        let s = &self.scenario;
        if !(0.0..=180.0).contains(&s.legit_angle_deg) {
            return Err(Error::config(
                "scenario.legit_angle_deg",
                "must lie in [0, 180] degrees",
            ));
        }
        if !(s.noise_variance > 0.0) || !s.noise_variance.is_finite() {
            return Err(Error::config("scenario.noise_variance", "must be positive"));
        }
        if !(s.path_loss > 0.0) || !s.path_loss.is_finite() {
            return Err(Error::config("scenario.path_loss", "must be positive"));
        }
        if s.grid_points < 2 {
            return Err(Error::config("scenario.grid_points", "must be at least 2"));
        }
        if !(s.eve_exclusion_deg >= 0.0) {
            return Err(Error::config(
                "scenario.eve_exclusion_deg",
                "must be nonnegative",
            ));
        }

        self.pa
            .rapp(1.0)
            .validate()
            .map_err(|e| Error::config("pa", e.to_string()))?;
        match (self.pa.beta1, self.pa.beta3) {
            (Some(b1), Some(b3)) => {
                if b1 == [0.0, 0.0] {
                    return Err(Error::config("pa.beta1", "must be nonzero"));
                }
                if b1.iter().chain(&b3).any(|v| !v.is_finite()) {
                    return Err(Error::config("pa.beta1", "coefficients must be finite"));
                }
            }
            (None, None) => {}
            (Some(_), None) => {
                return Err(Error::config(
                    "pa.beta3",
                    "must be given together with pa.beta1",
                ))
            }
            (None, Some(_)) => {
                return Err(Error::config(
                    "pa.beta1",
                    "must be given together with pa.beta3",
                ))
            }
        }
        if matches!(&self.pa.models, Some(v) if v.is_empty()) {
            return Err(Error::config("pa.models", "must not be empty"));
        }

        let p = &self.precoder;
        if p.saturated_antennas == 0 || 2 * p.saturated_antennas >= m {
            return Err(Error::config(
                "precoder.saturated_antennas",
                format!("must satisfy 0 < M_s < M/2 with M = {m}"),
            ));
        }
        if !(p.info_fraction > 0.0 && p.info_fraction <= 1.0) {
            return Err(Error::config(
                "precoder.info_fraction",
                "must lie in (0, 1]",
            ));
        }
        if matches!(&p.kinds, Some(v) if v.is_empty()) {
            return Err(Error::config("precoder.kinds", "must not be empty"));
        }

        if let Some(ibo) = &self.sweep.ibo_db {
            if ibo.is_empty() {
                return Err(Error::config("sweep.ibo_db", "must not be empty"));
            }
            if ibo.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("sweep.ibo_db", "values must be finite"));
            }
        }
        if self.monte_carlo.samples < MIN_MC_SAMPLES {
            return Err(Error::config(
                "monte_carlo.samples",
                format!("must be at least {MIN_MC_SAMPLES}"),
            ));
        }
        Ok(())
    }
}
