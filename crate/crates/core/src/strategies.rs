//! Per-lap transmission scheduling for the three access strategies.
//!
//! * ALOHA: maximum power, start time uniform over the visibility window.
//! * FTP (fixed transmit power): maximum power, sent when the slant range
//!   makes the mean received power hit one of the target levels. Each level
//!   is crossed once while the satellite rises and once while it sets.
//! * CTP (controlled transmit power): any instant at which the power needed
//!   to reach the chosen level stays under the maximum.
//!
//! Levels are mean received powers before fading. Every NOMA attempt carries
//! the pilot of its level so the gateway can cancel it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_lin, LinkBudget};
use crate::error::{Error, Result};
use crate::orbit::PassGeometry;
use crate::phy::TransmissionAttempt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Aloha,
    Ftp,
    Ctp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [Self::Aloha, Self::Ftp, Self::Ctp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Aloha => "aloha",
            Self::Ftp => "ftp",
            Self::Ctp => "ctp",
        }
    }

    pub fn uses_levels(&self) -> bool {
        !matches!(self, Self::Aloha)
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aloha" => Ok(Self::Aloha),
            "ftp" => Ok(Self::Ftp),
            "ctp" => Ok(Self::Ctp),
            other => Err(format!("unknown strategy '{other}'")),
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

/// Target mean received powers at the gateway, weakest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLevels {
    levels_w: Vec<f64>,
}

impl PowerLevels {
    pub fn new(levels_w: Vec<f64>) -> Result<Self> {
        if levels_w.is_empty() {
            return Err(Error::invalid("power_levels", "need at least one level"));
        }
        if levels_w.len() > usize::from(u8::MAX) {
            return Err(Error::invalid("power_levels", "too many levels"));
        }
        if levels_w.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("power_levels", "levels must be positive"));
        }
        if levels_w.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("power_levels", "levels must be strictly increasing"));
        }
        Ok(Self { levels_w })
    }

    pub fn from_dbm(levels_dbm: &[f64]) -> Result<Self> {
        Self::new(levels_dbm.iter().map(|d| db_to_lin(d - 30.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.levels_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.levels_w
    }

    /// Level by 1-based index.
    pub fn level_w(&self, index: u8) -> f64 {
        self.levels_w[usize::from(index) - 1]
    }

    /// Smallest spacing between adjacent levels in dB; infinite for one level.
    pub fn min_separation_db(&self) -> f64 {
        self.levels_w
            .windows(2)
            .map(|w| 10.0 * (w[1] / w[0]).log10())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub p_max_w: f64,
    pub levels: PowerLevels,
    /// CTP tries lower levels when the drawn one is infeasible.
    pub ctp_fallback: bool,
    /// FTP crossings that fall outside the window are moved to its edge
    /// instead of being dropped.
    pub ftp_edge_clipping: bool,
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_max_w > 0.0 && self.p_max_w.is_finite()) {
            return Err(Error::invalid("max_tx_power", "must be > 0"));
        }
        Ok(())
    }

    pub fn with_kind(&self, kind: StrategyKind) -> Self {
        Self { kind, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkipReason {
    EmptyWindow,
    WindowTooShort,
    NoReachableLevel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Transmit(TransmissionAttempt),
    Skip(SkipReason),
}

impl Schedule {
    pub fn attempt(&self) -> Option<&TransmissionAttempt> {
        match self {
            Schedule::Transmit(a) => Some(a),
            Schedule::Skip(_) => None,
        }
    }
}

/// `[rise, set - toa]`, the admissible start times.
fn start_range(pass: &PassGeometry, toa_s: f64) -> std::result::Result<(f64, f64), SkipReason> {
    let w = pass.window.ok_or(SkipReason::EmptyWindow)?;
    if w.duration_s() < toa_s {
        return Err(SkipReason::WindowTooShort);
    }
    Ok((w.rise_time_s, w.set_time_s - toa_s))
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn attempt(pass: &PassGeometry, start_s: f64, toa_s: f64, p_tx_w: f64, level: u8) -> TransmissionAttempt {
    TransmissionAttempt {
        device_id: pass.device_id,
        start_s,
        toa_s,
        p_tx_w,
        level_index: level,
        pilot_id: level,
        rx_power_w: 0.0,
    }
}

pub fn aloha_schedule<R: Rng + ?Sized>(pass: &PassGeometry, cfg: &StrategyConfig, toa_s: f64, rng: &mut R) -> Schedule {
    match start_range(pass, toa_s) {
        Ok((lo, hi)) => Schedule::Transmit(attempt(pass, uniform(lo, hi, rng), toa_s, cfg.p_max_w, 0)),
        Err(r) => Schedule::Skip(r),
    }
}

/// Where the pass distance crosses a target on either side of culmination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Crossing {
    /// Ascending-phase crossing; the rise time when the target lies beyond
    /// the window edge.
    pub rising: f64,
    pub setting: f64,
    /// Whether each side had to be clipped to the window edge.
    pub rising_clipped: bool,
    pub setting_clipped: bool,
}

/// Linear-interpolated crossing times of `target_m`, or `None` when the
/// target is closer than the culmination distance.
pub(crate) fn distance_crossings(pass: &PassGeometry, target_m: f64) -> Option<Crossing> {
    let peak = pass.peak_index()?;
    let s = &pass.samples;
    if target_m < s[peak].distance_m {
        return None;
    }
    // Rising side: distance decreases from s[0] to s[peak].
    let (rising, rising_clipped) = if target_m >= s[0].distance_m {
        (s[0].time_s, true)
    } else {
        let mut t = s[peak].time_s;
        for i in 0..peak {
            let (a, b) = (s[i], s[i + 1]);
            if a.distance_m >= target_m && target_m >= b.distance_m {
                t = if a.distance_m == target_m || a.distance_m == b.distance_m {
                    a.time_s
                } else {
                    a.time_s + (a.distance_m - target_m) / (a.distance_m - b.distance_m) * (b.time_s - a.time_s)
                };
                break;
            }
        }
        (t, false)
    };
    let last = s.len() - 1;
    let (setting, setting_clipped) = if target_m >= s[last].distance_m {
        (s[last].time_s, true)
    } else {
        let mut t = s[peak].time_s;
        for i in peak..last {
            let (a, b) = (s[i], s[i + 1]);
            if a.distance_m <= target_m && target_m <= b.distance_m {
                t = if a.distance_m == target_m || a.distance_m == b.distance_m {
                    a.time_s
                } else {
                    a.time_s + (target_m - a.distance_m) / (b.distance_m - a.distance_m) * (b.time_s - a.time_s)
                };
                break;
            }
        }
        (t, false)
    };
    Some(Crossing {
        rising,
        setting,
        rising_clipped,
        setting_clipped,
    })
}

/// Distance at which transmitting with `p_tx_w` yields `level_w` on average.
pub fn ftp_target_distance(p_tx_w: f64, level_w: f64, lb: &LinkBudget) -> f64 {
    (p_tx_w * lb.gain_at_unit_distance() / level_w).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtpCandidate {
    /// Instant at which the target distance is reached.
    pub crossing_s: f64,
    /// Packet start, midpoint-aligned on the crossing and clipped into the
    /// window.
    pub start_s: f64,
    pub level_index: u8,
}

/// All FTP transmit positions for one pass: up to two per reachable level.
pub fn ftp_positions(pass: &PassGeometry, cfg: &StrategyConfig, lb: &LinkBudget, toa_s: f64) -> Vec<FtpCandidate> {
    let Ok((lo, hi)) = start_range(pass, toa_s) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, &level) in cfg.levels.as_slice().iter().enumerate() {
        let level_index = (i + 1) as u8;
        let target = ftp_target_distance(cfg.p_max_w, level, lb);
        let Some(c) = distance_crossings(pass, target) else {
            continue;
        };
        for (t, clipped) in [(c.rising, c.rising_clipped), (c.setting, c.setting_clipped)] {
            if clipped && !cfg.ftp_edge_clipping {
                continue;
            }
            out.push(FtpCandidate {
                crossing_s: t,
                start_s: (t - 0.5 * toa_s).clamp(lo, hi),
                level_index,
            });
        }
    }
    out
}

pub fn ftp_schedule<R: Rng + ?Sized>(
    pass: &PassGeometry,
    cfg: &StrategyConfig,
    lb: &LinkBudget,
    toa_s: f64,
    rng: &mut R,
) -> Schedule {
    if let Err(r) = start_range(pass, toa_s) {
        return Schedule::Skip(r);
    }
    let candidates = ftp_positions(pass, cfg, lb, toa_s);
    if candidates.is_empty() {
        return Schedule::Skip(SkipReason::NoReachableLevel);
    }
    let c = candidates[rng.random_range(0..candidates.len())];
    Schedule::Transmit(attempt(pass, c.start_s, toa_s, cfg.p_max_w, c.level_index))
}

/// Transmit power that yields `level_w` on average over `d` meters.
pub fn ctp_power(d: f64, level_w: f64, lb: &LinkBudget) -> f64 {
    level_w * d * d / lb.gain_at_unit_distance()
}

/// Feasible start-time interval for one CTP level, if any.
pub fn ctp_feasible_starts(
    pass: &PassGeometry,
    level_w: f64,
    cfg: &StrategyConfig,
    lb: &LinkBudget,
    toa_s: f64,
) -> Option<(f64, f64)> {
    let (lo, hi) = start_range(pass, toa_s).ok()?;
    let d_max = ftp_target_distance(cfg.p_max_w, level_w, lb);
    let c = distance_crossings(pass, d_max)?;
    // Midpoint must stay inside [rising, setting].
    let a = (c.rising - 0.5 * toa_s).max(lo);
    let b = (c.setting - 0.5 * toa_s).min(hi);
    (a <= b).then_some((a, b))
}

pub fn ctp_schedule<R: Rng + ?Sized>(
    pass: &PassGeometry,
    cfg: &StrategyConfig,
    lb: &LinkBudget,
    toa_s: f64,
    rng: &mut R,
) -> Schedule {
    if let Err(r) = start_range(pass, toa_s) {
        return Schedule::Skip(r);
    }
    let n = cfg.levels.len();
    let drawn = rng.random_range(0..n);
    let tries: Vec<usize> = if cfg.ctp_fallback {
        (0..=drawn).rev().collect()
    } else {
        vec![drawn]
    };
    for l in tries {
        let level_index = (l + 1) as u8;
        let level = cfg.levels.level_w(level_index);
        let Some((a, b)) = ctp_feasible_starts(pass, level, cfg, lb, toa_s) else {
            continue;
        };
        let start = uniform(a, b, rng);
        let Some(d) = pass.distance_at(start + 0.5 * toa_s) else {
            continue;
        };
        let p = ctp_power(d, level, lb).min(cfg.p_max_w);
        return Schedule::Transmit(attempt(pass, start, toa_s, p, level_index));
    }
    Schedule::Skip(SkipReason::NoReachableLevel)
}

pub fn schedule<R: Rng + ?Sized>(
    pass: &PassGeometry,
    cfg: &StrategyConfig,
    lb: &LinkBudget,
    toa_s: f64,
    rng: &mut R,
) -> Schedule {
    match cfg.kind {
        StrategyKind::Aloha => aloha_schedule(pass, cfg, toa_s, rng),
        StrategyKind::Ftp => ftp_schedule(pass, cfg, lb, toa_s, rng),
        StrategyKind::Ctp => ctp_schedule(pass, cfg, lb, toa_s, rng),
    }
}
