//! Scenario files.
//!
//! A scenario is flat TOML, one value per key, units in the key names.
//! Absent keys take the defaults below; unknown keys are rejected. Unit
//! conversions happen once, in [`ScenarioFile::to_scenario`], so a file
//! written back by [`ScenarioFile::to_toml`] reloads bit for bit.
//!
//! ```
//! use dtsnoma::config::ScenarioFile;
//!
//! let file = ScenarioFile::parse("max_tx_power_dbm = 10\nnum_devices = 250\n").unwrap();
//! let scn = file.to_scenario().unwrap();
//! assert_eq!(scn.num_devices, 250);
//! assert!((scn.strategy.p_max_w - 0.01).abs() < 1e-15);
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_lin, dbm_to_w, FadingConfig, FadingPolynomials, LinkBudget, MuUnits, RiceKUnits};
use crate::engine::{Region, Scenario};
use crate::orbit::OrbitConfig;
use crate::phy::{InterferenceScope, LoraParams, ReceiverConfig};
use crate::strategies::{PowerLevels, StrategyConfig, StrategyKind};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub replications: usize,
    pub num_devices: usize,
    /// Device counts swept by a campaign.
    pub sweep_devices: Vec<usize>,
    pub strategies: Vec<StrategyKind>,

    pub altitude_km: f64,
    pub ground_speed_mps: f64,
    pub earth_radius_km: f64,
    pub min_elevation_deg: f64,
    pub sample_period_s: f64,

    pub region_cross_track_min_km: f64,
    pub region_cross_track_max_km: f64,
    pub region_along_track_min_km: f64,
    pub region_along_track_max_km: f64,

    pub max_tx_power_dbm: f64,
    pub tx_antenna_gain_dbi: f64,
    pub rx_antenna_gain_dbi: f64,
    pub carrier_frequency_mhz: f64,
    pub bandwidth_khz: f64,
    pub noise_figure_db: f64,
    pub speed_of_light_mps: f64,

    pub spreading_factor: u8,
    pub time_on_air_s: f64,
    pub payload_bytes: u32,
    pub snr_threshold_db: f64,
    pub sir_threshold_db: f64,
    pub sensitivity_dbm: f64,

    pub max_sic_levels: usize,
    pub sic_residual_fraction: f64,
    pub aloha_sic: bool,
    pub interference_scope: InterferenceScope,

    pub power_levels_dbm: Vec<f64>,
    pub level_margin_db: f64,
    pub ctp_fallback: bool,
    pub ftp_edge_clipping: bool,

    pub fading_enabled: bool,
    pub rice_k_units: RiceKUnits,
    pub mu_units: MuUnits,
    pub sigma_floor_db: f64,
    pub fading_min_elevation_deg: f64,
    pub rice_k_coeffs: Vec<f64>,
    pub mu_coeffs: Vec<f64>,
    pub sigma_coeffs: Vec<f64>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        let orbit = OrbitConfig::default();
        let link = LinkBudget::default();
        let lora = LoraParams::default();
        let rx = ReceiverConfig::default();
        let fading = FadingConfig::default();
        Self {
            seed: 1,
            replications: 200,
            num_devices: 100,
            sweep_devices: (1..=12).map(|k| 50 * k).collect(),
            strategies: StrategyKind::ALL.to_vec(),

            altitude_km: orbit.altitude_m / 1e3,
            ground_speed_mps: orbit.ground_speed_mps,
            earth_radius_km: orbit.earth_radius_m / 1e3,
            min_elevation_deg: orbit.min_elevation_deg,
            sample_period_s: 1.0,

            region_cross_track_min_km: DEFAULT_REGION_KM[0],
            region_cross_track_max_km: DEFAULT_REGION_KM[1],
            region_along_track_min_km: DEFAULT_REGION_KM[2],
            region_along_track_max_km: DEFAULT_REGION_KM[3],

            max_tx_power_dbm: 14.0,
            tx_antenna_gain_dbi: 0.0,
            rx_antenna_gain_dbi: 13.5,
            carrier_frequency_mhz: 868.0,
            bandwidth_khz: 125.0,
            noise_figure_db: link.noise_figure_db,
            speed_of_light_mps: link.speed_of_light_mps,

            spreading_factor: lora.sf,
            time_on_air_s: lora.toa_s,
            payload_bytes: lora.payload_bytes,
            snr_threshold_db: lora.snr_threshold_db,
            sir_threshold_db: lora.sir_threshold_db,
            sensitivity_dbm: lora.sensitivity_dbm,

            max_sic_levels: rx.max_sic_levels,
            sic_residual_fraction: rx.residual_fraction,
            aloha_sic: rx.aloha_sic,
            interference_scope: DEFAULT_INTERFERENCE_SCOPE,

            power_levels_dbm: DEFAULT_LEVELS_DBM.to_vec(),
            level_margin_db: DEFAULT_LEVEL_MARGIN_DB,
            ctp_fallback: true,
            ftp_edge_clipping: DEFAULT_FTP_EDGE_CLIPPING,

            fading_enabled: fading.enabled,
            rice_k_units: fading.rice_k_units,
            mu_units: fading.mu_units,
            sigma_floor_db: fading.sigma_floor_db,
            fading_min_elevation_deg: fading.min_alpha_deg,
            rice_k_coeffs: fading.polynomials.rice_k,
            mu_coeffs: fading.polynomials.mu,
            sigma_coeffs: fading.polynomials.sigma,
        }
    }
}

/// Deployment rectangle `[cross min, cross max, along min, along max]`.
/// The field sits off the ground track, so most devices see a partial pass.
pub const DEFAULT_REGION_KM: [f64; 4] = [-573.0, 311.0, -297.5, 297.5];
/// Target received powers, 6 dB apart. Calibrated against the reference
/// goodput curves; see the README.
pub const DEFAULT_LEVELS_DBM: [f64; 2] = [-125.3, -119.3];
pub const DEFAULT_LEVEL_MARGIN_DB: f64 = 0.5;
pub const DEFAULT_FTP_EDGE_CLIPPING: bool = true;
pub const DEFAULT_INTERFERENCE_SCOPE: InterferenceScope = InterferenceScope::Group;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        // Plain data with string keys; serialization cannot fail.
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// Converts to model units and validates.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let scn = Scenario {
            num_devices: self.num_devices,
            orbit: OrbitConfig {
                altitude_m: self.altitude_km * 1e3,
                ground_speed_mps: self.ground_speed_mps,
                earth_radius_m: self.earth_radius_km * 1e3,
                min_elevation_deg: self.min_elevation_deg,
            },
            link: LinkBudget {
                carrier_hz: self.carrier_frequency_mhz * 1e6,
                tx_gain_lin: db_to_lin(self.tx_antenna_gain_dbi),
                rx_gain_lin: db_to_lin(self.rx_antenna_gain_dbi),
                bandwidth_hz: self.bandwidth_khz * 1e3,
                noise_figure_db: self.noise_figure_db,
                speed_of_light_mps: self.speed_of_light_mps,
            },
            fading: FadingConfig {
                enabled: self.fading_enabled,
                rice_k_units: self.rice_k_units,
                mu_units: self.mu_units,
                sigma_floor_db: self.sigma_floor_db,
                min_alpha_deg: self.fading_min_elevation_deg,
                polynomials: FadingPolynomials {
                    rice_k: self.rice_k_coeffs.clone(),
                    mu: self.mu_coeffs.clone(),
                    sigma: self.sigma_coeffs.clone(),
                },
            },
            lora: LoraParams {
                sf: self.spreading_factor,
                bandwidth_hz: self.bandwidth_khz * 1e3,
                toa_s: self.time_on_air_s,
                payload_bytes: self.payload_bytes,
                snr_threshold_db: self.snr_threshold_db,
                sir_threshold_db: self.sir_threshold_db,
                sensitivity_dbm: self.sensitivity_dbm,
            },
            receiver: ReceiverConfig {
                max_sic_levels: self.max_sic_levels,
                interference_scope: self.interference_scope,
                residual_fraction: self.sic_residual_fraction,
                aloha_sic: self.aloha_sic,
            },
            strategy: StrategyConfig {
                kind: self.strategies.first().copied().unwrap_or(StrategyKind::Aloha),
                p_max_w: dbm_to_w(self.max_tx_power_dbm),
                levels: PowerLevels::from_dbm(&self.power_levels_dbm)?,
                ctp_fallback: self.ctp_fallback,
                ftp_edge_clipping: self.ftp_edge_clipping,
            },
            region: Region {
                cross_track_min_m: self.region_cross_track_min_km * 1e3,
                cross_track_max_m: self.region_cross_track_max_km * 1e3,
                along_track_min_m: self.region_along_track_min_km * 1e3,
                along_track_max_m: self.region_along_track_max_km * 1e3,
            },
            level_margin_db: self.level_margin_db,
            sample_period_s: self.sample_period_s,
            replications: self.replications,
            seed: self.seed,
        };
        scn.validate()?;
        self.validate_run()?;
        Ok(scn)
    }

    fn validate_run(&self) -> Result<(), crate::Error> {
        check_sweep(&self.sweep_devices)?;
        if self.strategies.is_empty() {
            return Err(invalid("strategies", "need at least one strategy"));
        }
        Ok(())
    }

    /// Inverse of [`to_scenario`](Self::to_scenario) for the model fields;
    /// run fields (sweep, strategies) keep their defaults.
    pub fn from_scenario(scn: &Scenario) -> Self {
        let lin_db = crate::channel::lin_to_db;
        Self {
            seed: scn.seed,
            replications: scn.replications,
            num_devices: scn.num_devices,
            altitude_km: scn.orbit.altitude_m / 1e3,
            ground_speed_mps: scn.orbit.ground_speed_mps,
            earth_radius_km: scn.orbit.earth_radius_m / 1e3,
            min_elevation_deg: scn.orbit.min_elevation_deg,
            sample_period_s: scn.sample_period_s,
            region_cross_track_min_km: scn.region.cross_track_min_m / 1e3,
            region_cross_track_max_km: scn.region.cross_track_max_m / 1e3,
            region_along_track_min_km: scn.region.along_track_min_m / 1e3,
            region_along_track_max_km: scn.region.along_track_max_m / 1e3,
            max_tx_power_dbm: crate::channel::w_to_dbm(scn.strategy.p_max_w),
            tx_antenna_gain_dbi: lin_db(scn.link.tx_gain_lin),
            rx_antenna_gain_dbi: lin_db(scn.link.rx_gain_lin),
            carrier_frequency_mhz: scn.link.carrier_hz / 1e6,
            bandwidth_khz: scn.link.bandwidth_hz / 1e3,
            noise_figure_db: scn.link.noise_figure_db,
            speed_of_light_mps: scn.link.speed_of_light_mps,
            spreading_factor: scn.lora.sf,
            time_on_air_s: scn.lora.toa_s,
            payload_bytes: scn.lora.payload_bytes,
            snr_threshold_db: scn.lora.snr_threshold_db,
            sir_threshold_db: scn.lora.sir_threshold_db,
            sensitivity_dbm: scn.lora.sensitivity_dbm,
            max_sic_levels: scn.receiver.max_sic_levels,
            sic_residual_fraction: scn.receiver.residual_fraction,
            aloha_sic: scn.receiver.aloha_sic,
            interference_scope: scn.receiver.interference_scope,
            power_levels_dbm: scn
                .strategy
                .levels
                .as_slice()
                .iter()
                .map(|&w| crate::channel::w_to_dbm(w))
                .collect(),
            level_margin_db: scn.level_margin_db,
            ctp_fallback: scn.strategy.ctp_fallback,
            ftp_edge_clipping: scn.strategy.ftp_edge_clipping,
            fading_enabled: scn.fading.enabled,
            rice_k_units: scn.fading.rice_k_units,
            mu_units: scn.fading.mu_units,
            sigma_floor_db: scn.fading.sigma_floor_db,
            fading_min_elevation_deg: scn.fading.min_alpha_deg,
            rice_k_coeffs: scn.fading.polynomials.rice_k.clone(),
            mu_coeffs: scn.fading.polynomials.mu.clone(),
            sigma_coeffs: scn.fading.polynomials.sigma.clone(),
            ..Self::default()
        }
    }
}

fn invalid(field: &'static str, reason: &str) -> crate::Error {
    crate::Error::InvalidParameter {
        field,
        reason: reason.to_string(),
    }
}

/// Sweep values must be positive and strictly ascending.
pub fn check_sweep(values: &[usize]) -> Result<(), crate::Error> {
    if values.is_empty() {
        return Err(invalid("sweep_devices", "need at least one value"));
    }
    if values.contains(&0) {
        return Err(invalid("sweep_devices", "values must be positive"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("sweep_devices", "values must be strictly ascending"));
    }
    Ok(())
}

impl Default for Scenario {
    fn default() -> Self {
        // The default file is validated by the test suite.
        ScenarioFile::default()
            .to_scenario()
            .expect("default scenario is valid")
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    ScenarioFile::load(path)?.to_scenario()
}
