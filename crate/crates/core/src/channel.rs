//! Free-space path loss plus an elevation-dependent Rice/lognormal fading
//! envelope.
//!
//! A transmission sees `rx = P * g(d) * h^2`, where `g` is the free-space
//! gain and `h` is a Rice envelope whose mean-square equals `S^2`, with `S`
//! a lognormal shadowing scale. Rice factor and shadowing statistics are
//! polynomials in the elevation angle fitted for a rural tree-shadowed
//! environment. Both are drawn once per packet.

use std::f64::consts::{LN_10, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// `ln(10) / 20`: converts a dB spread of an amplitude into natural-log units.
pub const BETA: f64 = LN_10 / 20.0;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    db_to_lin(dbm - 30.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    lin_to_db(w) + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub carrier_hz: f64,
    pub tx_gain_lin: f64,
    pub rx_gain_lin: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub speed_of_light_mps: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            carrier_hz: 868e6,
            tx_gain_lin: 1.0,
            rx_gain_lin: db_to_lin(13.5),
            bandwidth_hz: 125e3,
            noise_figure_db: 6.0,
            speed_of_light_mps: SPEED_OF_LIGHT_MPS,
        }
    }
}

impl LinkBudget {
    pub fn wavelength_m(&self) -> f64 {
        self.speed_of_light_mps / self.carrier_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("tx_gain", self.tx_gain_lin),
            ("rx_gain", self.rx_gain_lin),
            ("bandwidth_hz", self.bandwidth_hz),
            ("speed_of_light_mps", self.speed_of_light_mps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::invalid("noise_figure_db", "must be finite"));
        }
        Ok(())
    }

    /// `G_t * G_r * (lambda / 4 pi)^2`, the distance-free part of the gain.
    pub fn gain_at_unit_distance(&self) -> f64 {
        let k = self.wavelength_m() / (4.0 * PI);
        self.tx_gain_lin * self.rx_gain_lin * k * k
    }
}

/// Free-space power gain over `d` meters.
pub fn path_loss_gain(d: f64, lb: &LinkBudget) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok(lb.gain_at_unit_distance() / (d * d))
}

/// Receiver noise floor `-174 + F + 10 log10(B)` dBm, in watts.
pub fn noise_power_w(lb: &LinkBudget) -> f64 {
    dbm_to_w(-174.0 + lb.noise_figure_db + 10.0 * lb.bandwidth_hz.log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiceKUnits {
    /// The polynomial yields `10 log10(K)`.
    #[default]
    Db,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuUnits {
    /// The polynomial yields the mean of `ln S` directly.
    Natural,
    /// The polynomial yields the mean of `20 log10 S`.
    #[default]
    Db,
}

/// Polynomial coefficients, lowest order first, with `alpha` in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingPolynomials {
    pub rice_k: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Default for FadingPolynomials {
    fn default() -> Self {
        Self {
            rice_k: vec![2.731, -1.0474e-1, 2.7740e-3],
            mu: vec![-2.331, 1.142e-1, -1.939e-3, 1.094e-5],
            sigma: vec![4.5, -0.05],
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl FadingPolynomials {
    /// Raw `(K, mu, sigma)` at `alpha_deg`, without clamping or unit conversion.
    pub fn evaluate(&self, alpha_deg: f64) -> (f64, f64, f64) {
        (
            horner(&self.rice_k, alpha_deg),
            horner(&self.mu, alpha_deg),
            horner(&self.sigma, alpha_deg),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingConfig {
    /// `false` forces `S = h = 1`.
    pub enabled: bool,
    pub rice_k_units: RiceKUnits,
    pub mu_units: MuUnits,
    pub sigma_floor_db: f64,
    pub min_alpha_deg: f64,
    pub polynomials: FadingPolynomials,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rice_k_units: RiceKUnits::Db,
            mu_units: MuUnits::Db,
            sigma_floor_db: 0.1,
            min_alpha_deg: 10.0,
            polynomials: FadingPolynomials::default(),
        }
    }
}

impl FadingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_floor_db > 0.0) {
            return Err(Error::invalid("sigma_floor_db", "must be > 0"));
        }
        if !(0.0..=90.0).contains(&self.min_alpha_deg) {
            return Err(Error::invalid("fading_min_alpha_deg", "must lie in [0, 90]"));
        }
        let p = &self.polynomials;
        if p.rice_k.is_empty() || p.mu.is_empty() || p.sigma.is_empty() {
            return Err(Error::invalid("fading polynomials", "need at least one coefficient"));
        }
        Ok(())
    }
}

/// Fading statistics at one elevation, in sampling-ready units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    /// Linear Rice factor.
    pub rice_k: f64,
    /// Mean of `ln S`.
    pub mu: f64,
    /// Shadowing spread in dB; `ln S` has standard deviation `beta * sigma`.
    pub sigma: f64,
    pub beta: f64,
}

impl FadingParams {
    pub fn ln_std(&self) -> f64 {
        self.beta * self.sigma
    }

    /// `E[S^2]` of the lognormal shadowing.
    pub fn mean_square_shadowing(&self) -> f64 {
        let s = self.ln_std();
        (2.0 * self.mu + 2.0 * s * s).exp()
    }
}

/// Evaluates the fitted polynomials at `alpha_deg`, clamped into the fitted
/// range `[min_alpha_deg, 90]`.
pub fn fading_coeffs(alpha_deg: f64, cfg: &FadingConfig) -> FadingParams {
    let a = alpha_deg.clamp(cfg.min_alpha_deg, 90.0);
    let (k, mu, sigma) = cfg.polynomials.evaluate(a);
    let rice_k = match cfg.rice_k_units {
        RiceKUnits::Db => db_to_lin(k),
        RiceKUnits::Linear => k.max(0.0),
    };
    let mu = match cfg.mu_units {
        MuUnits::Natural => mu,
        MuUnits::Db => BETA * mu,
    };
    FadingParams {
        rice_k,
        mu,
        sigma: sigma.max(cfg.sigma_floor_db),
        beta: BETA,
    }
}

pub fn sample_shadowing<R: Rng + ?Sized>(params: &FadingParams, rng: &mut R) -> f64 {
    let std = params.ln_std();
    if std <= 0.0 {
        return params.mu.exp();
    }
    // std > 0 and finite here, so construction cannot fail
    let n = Normal::new(params.mu, std).expect("valid normal");
    n.sample(rng).exp()
}

/// Rice envelope with Rice factor `k_lin` and mean-square `omega`, built as
/// the modulus of a complex Gaussian with a deterministic component.
pub fn sample_rice_envelope<R: Rng + ?Sized>(k_lin: f64, omega: f64, rng: &mut R) -> f64 {
    if k_lin.is_infinite() {
        return omega.sqrt();
    }
    let los = (omega * k_lin / (k_lin + 1.0)).sqrt();
    let diffuse = (omega / (2.0 * (k_lin + 1.0))).sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let re = los + diffuse * x;
    let im = diffuse * y;
    re.hypot(im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub shadowing_s: f64,
    pub fading_h: f64,
    pub rx_power_w: f64,
}

/// Draws shadowing then the Rice envelope conditioned on it and returns the
/// received power for one packet.
pub fn received_power<R: Rng + ?Sized>(
    p_tx_w: f64,
    d: f64,
    alpha_deg: f64,
    lb: &LinkBudget,
    fading: &FadingConfig,
    rng: &mut R,
) -> Result<ChannelDraw> {
    if !(p_tx_w >= 0.0) {
        return Err(Error::invalid("p_tx_w", "must be non-negative"));
    }
    let g = path_loss_gain(d, lb)?;
    if !fading.enabled {
        return Ok(ChannelDraw {
            shadowing_s: 1.0,
            fading_h: 1.0,
            rx_power_w: p_tx_w * g,
        });
    }
    let params = fading_coeffs(alpha_deg, fading);
    let s = sample_shadowing(&params, rng);
    let h = sample_rice_envelope(params.rice_k, s * s, rng);
    Ok(ChannelDraw {
        shadowing_s: s,
        fading_h: h,
        rx_power_w: p_tx_w * g * h * h,
    })
}
