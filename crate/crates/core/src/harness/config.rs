//! TOML scenario configuration.
//!
//! Every block and field is optional; missing entries take the defaults of
//! the full-size scenario (`ScenarioConfig::default`) or of the base passed
//! to [`ScenarioConfig::from_toml_with_base`]. Powers are given in dBm and
//! angles in degrees here and nowhere else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamforming::Algorithm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub arrays: ArrayConfig,
    pub radio: RadioConfig,
    pub sensing: SensingConfig,
    pub rotation: RotationConfig,
    pub solver: SolverConfig,
    pub rl: RlConfig,
}

/// Positions relative to the RIS centre. Distances are horizontal; heights
/// are relative to the RIS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub bs_distance_m: f64,
    pub bs_azimuth_deg: f64,
    pub bs_height_m: f64,
    pub bob_distance_m: f64,
    pub bob_azimuth_deg: f64,
    pub bob_height_m: f64,
    pub eve_distance_m: f64,
    pub eve_height_m: f64,
    /// Eve's azimuth moves linearly between these over the slots.
    pub eve_azimuth_start_deg: f64,
    pub eve_azimuth_end_deg: f64,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub bs_horizontal: usize,
    pub bs_vertical: usize,
    pub ris_horizontal: usize,
    pub ris_vertical: usize,
    /// Element spacings in wavelengths.
    pub bs_spacing: f64,
    pub ris_spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_hz: f64,
    pub tx_power_dbm: f64,
    /// Overrides `tx_power_dbm` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_power_w: Option<f64>,
    pub rho_max: f64,
    pub noise_user_dbm: f64,
    pub noise_ris_dbm: f64,
    pub noise_bs_dbm: f64,
    /// Unit-distance channel gain; free space `(lambda / 4 pi)^2` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_gain: Option<f64>,
    pub multipath_paths: usize,
    /// Multipath power below the direct path, per entry (dB).
    pub multipath_excess_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub modes: usize,
    pub crlb_threshold_rad2: f64,
    /// Per-pilot power; `P_t / 2` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilot_power_dbm: Option<f64>,
    pub music_step_deg: f64,
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    pub alpha_min_deg: f64,
    pub alpha_max_deg: f64,
    pub beta_min_deg: f64,
    pub beta_max_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Beamformer used inside the environment: `el` or `mnpl`.
    pub algorithm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub temperature_lr: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub hidden: usize,
    pub soft_update: f64,
    pub temperature: f64,
    pub adaptive_temperature: bool,
    pub target_entropy: f64,
    /// Synchronisation rate of the clip bounds and gradient weights.
    pub bound_rate: f64,
    /// Clip-bound multiplier applied to the mean value std.
    pub clip_scale: f64,
    /// Reward offset subtracted from the secrecy rate.
    pub reward_offset: f64,
    /// Factor applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    pub episodes: usize,
    pub warmup_steps: usize,
    /// Gradient updates per environment step once warm-up is over.
    pub updates_per_step: usize,
    /// Sliding window of the smoothed reward curve, in episodes.
    pub smoothing_window: usize,
    pub eval_seeds: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            geometry: GeometryConfig::default(),
            arrays: ArrayConfig::default(),
            radio: RadioConfig::default(),
            sensing: SensingConfig::default(),
            rotation: RotationConfig::default(),
            solver: SolverConfig::default(),
            rl: RlConfig::default(),
        }
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            bs_distance_m: 20.0,
            bs_azimuth_deg: 60.0,
            bs_height_m: 0.0,
            bob_distance_m: 10.0,
            bob_azimuth_deg: 120.0,
            bob_height_m: -10.0,
            eve_distance_m: 5.0,
            eve_height_m: 0.0,
            eve_azimuth_start_deg: 80.0,
            eve_azimuth_end_deg: 100.0,
            slots: 20,
        }
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            bs_horizontal: 4,
            bs_vertical: 4,
            ris_horizontal: 8,
            ris_vertical: 8,
            bs_spacing: 0.5,
            ris_spacing: 0.5,
        }
    }
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 2.4e9,
            tx_power_dbm: 40.0,
            tx_power_w: None,
            rho_max: 10.0,
            noise_user_dbm: -80.0,
            noise_ris_dbm: -90.0,
            noise_bs_dbm: -80.0,
            channel_gain: None,
            multipath_paths: 2,
            multipath_excess_db: 10.0,
        }
    }
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            modes: 8,
            crlb_threshold_rad2: 1e-3,
            pilot_power_dbm: None,
            music_step_deg: 0.5,
            snapshots: 64,
        }
    }
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            alpha_min_deg: -80.0,
            alpha_max_deg: 0.0,
            beta_min_deg: 90.0,
            beta_max_deg: 150.0,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: "el".into(),
        }
    }
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            temperature_lr: 3e-4,
            gamma: 0.99,
            batch_size: 64,
            buffer_capacity: 100_000,
            hidden: 256,
            soft_update: 0.005,
            temperature: 0.01,
            adaptive_temperature: true,
            target_entropy: -2.0,
            bound_rate: 0.005,
            clip_scale: 3.0,
            reward_offset: 0.0,
            reward_scale: 0.1,
            episodes: 200,
            warmup_steps: 400,
            updates_per_step: 8,
            smoothing_window: 10,
            eval_seeds: 20,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be at least {min}, got {v}")))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("must lie in [0, 1], got {v}")))
    }
}

impl ScenarioConfig {
    /// Small scenario for quick runs: 8 BS antennas, 16 RIS elements, 4
    /// sensing modes and 5 evaluation seeds.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.arrays.bs_horizontal = 4;
        c.arrays.bs_vertical = 2;
        c.arrays.ris_horizontal = 4;
        c.arrays.ris_vertical = 4;
        c.sensing.modes = 4;
        c.rl.eval_seeds = 5;
        c
    }

    pub fn tx_power(&self) -> f64 {
        self.radio.tx_power_w.unwrap_or_else(|| dbm_to_watts(self.radio.tx_power_dbm))
    }

    pub fn wavelength(&self) -> f64 {
        299_792_458.0 / self.radio.carrier_hz
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.solver
            .algorithm
            .parse()
            .map_err(|_| Error::config("solver.algorithm", format!("expected `el` or `mnpl`, got `{}`", self.solver.algorithm)))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        positive("geometry.bs_distance_m", g.bs_distance_m)?;
        positive("geometry.bob_distance_m", g.bob_distance_m)?;
        positive("geometry.eve_distance_m", g.eve_distance_m)?;
        for (f, v) in [
            ("geometry.bs_azimuth_deg", g.bs_azimuth_deg),
            ("geometry.bs_height_m", g.bs_height_m),
            ("geometry.bob_azimuth_deg", g.bob_azimuth_deg),
            ("geometry.bob_height_m", g.bob_height_m),
            ("geometry.eve_height_m", g.eve_height_m),
            ("geometry.eve_azimuth_start_deg", g.eve_azimuth_start_deg),
            ("geometry.eve_azimuth_end_deg", g.eve_azimuth_end_deg),
        ] {
            finite(f, v)?;
        }
        at_least("geometry.slots", g.slots, 1)?;

        let a = &self.arrays;
        at_least("arrays.bs_horizontal", a.bs_horizontal, 1)?;
        at_least("arrays.bs_vertical", a.bs_vertical, 1)?;
        at_least("arrays.ris_horizontal", a.ris_horizontal, 1)?;
        at_least("arrays.ris_vertical", a.ris_vertical, 1)?;
        positive("arrays.bs_spacing", a.bs_spacing)?;
        positive("arrays.ris_spacing", a.ris_spacing)?;

        let r = &self.radio;
        positive("radio.carrier_hz", r.carrier_hz)?;
        finite("radio.tx_power_dbm", r.tx_power_dbm)?;
        if let Some(p) = r.tx_power_w {
            positive("radio.tx_power_w", p)?;
        }
        if !(r.rho_max >= 1.0 && r.rho_max.is_finite()) {
            return Err(Error::config("radio.rho_max", format!("must be at least 1, got {}", r.rho_max)));
        }
        finite("radio.noise_user_dbm", r.noise_user_dbm)?;
        finite("radio.noise_ris_dbm", r.noise_ris_dbm)?;
        finite("radio.noise_bs_dbm", r.noise_bs_dbm)?;
        if let Some(gain) = r.channel_gain {
            positive("radio.channel_gain", gain)?;
        }
        finite("radio.multipath_excess_db", r.multipath_excess_db)?;

        let s = &self.sensing;
        at_least("sensing.modes", s.modes, 2)?;
        positive("sensing.crlb_threshold_rad2", s.crlb_threshold_rad2)?;
        if let Some(p) = s.pilot_power_dbm {
            finite("sensing.pilot_power_dbm", p)?;
        }
        positive("sensing.music_step_deg", s.music_step_deg)?;
        at_least("sensing.snapshots", s.snapshots, 2)?;

        let o = &self.rotation;
        if !(o.alpha_min_deg <= o.alpha_max_deg && o.alpha_min_deg >= -90.0 && o.alpha_max_deg <= 90.0) {
            return Err(Error::config("rotation.alpha_min_deg", "elevation range must be ordered within [-90, 90]"));
        }
        if !(o.beta_min_deg <= o.beta_max_deg && o.beta_min_deg >= 0.0 && o.beta_max_deg <= 360.0) {
            return Err(Error::config("rotation.beta_min_deg", "azimuth range must be ordered within [0, 360]"));
        }

        self.algorithm()?;

        let l = &self.rl;
        positive("rl.actor_lr", l.actor_lr)?;
        positive("rl.critic_lr", l.critic_lr)?;
        positive("rl.temperature_lr", l.temperature_lr)?;
        unit_interval("rl.gamma", l.gamma)?;
        at_least("rl.batch_size", l.batch_size, 1)?;
        at_least("rl.hidden", l.hidden, 1)?;
        if l.buffer_capacity < l.batch_size {
            return Err(Error::config("rl.buffer_capacity", "must hold at least one batch"));
        }
        if l.warmup_steps >= l.buffer_capacity {
            return Err(Error::config("rl.warmup_steps", "must be smaller than the buffer capacity"));
        }
        unit_interval("rl.soft_update", l.soft_update)?;
        unit_interval("rl.bound_rate", l.bound_rate)?;
        positive("rl.temperature", l.temperature)?;
        finite("rl.target_entropy", l.target_entropy)?;
        positive("rl.clip_scale", l.clip_scale)?;
        finite("rl.reward_offset", l.reward_offset)?;
        positive("rl.reward_scale", l.reward_scale)?;
        at_least("rl.updates_per_step", l.updates_per_step, 1)?;
        at_least("rl.smoothing_window", l.smoothing_window, 1)?;
        at_least("rl.eval_seeds", l.eval_seeds, 1)?;
        Ok(())
    }

    /// Parse TOML on top of the full-size defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_base(text, &Self::default())
    }

    /// Parse TOML on top of `base`: keys present in `text` replace those of
    /// `base`, unknown keys are rejected.
    pub fn from_toml_with_base(text: &str, base: &Self) -> Result<Self> {
        let overlay: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        let mut merged = toml::Table::try_from(base).map_err(|e| Error::ConfigParse(e.to_string()))?;
        merge(&mut merged, overlay);
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_base(path, &Self::default())
    }

    pub fn load_with_base(path: &Path, base: &Self) -> Result<Self> {
        Self::from_toml_with_base(&std::fs::read_to_string(path)?, base)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
