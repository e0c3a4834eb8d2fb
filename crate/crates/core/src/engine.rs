//! Monte Carlo lap pipeline and campaign aggregation.
//!
//! One lap: deploy devices, compute each pass, schedule, draw the channel at
//! the packet midpoint, group overlapping packets and decode each group.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{noise_power_w, received_power, FadingConfig, LinkBudget};
use crate::error::{Error, Result};
use crate::orbit::{compute_pass, DeviceLocation, OrbitConfig};
use crate::phy::{decode, overlap_groups, CollisionClass, LoraParams, ReceiverConfig, TransmissionAttempt};
use crate::strategies::{schedule, Schedule, StrategyConfig, StrategyKind};

/// Deployment rectangle in track coordinates. Along-track positions are
/// measured from the sub-satellite point at lap time zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub cross_track_min_m: f64,
    pub cross_track_max_m: f64,
    pub along_track_min_m: f64,
    pub along_track_max_m: f64,
}

impl Default for Region {
    fn default() -> Self {
        Self {
            cross_track_min_m: -700e3,
            cross_track_max_m: 700e3,
            along_track_min_m: -350e3,
            along_track_max_m: 350e3,
        }
    }
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.cross_track_min_m, self.cross_track_max_m) {
            return Err(Error::invalid("region cross-track span", "min must be below max"));
        }
        if !ok(self.along_track_min_m, self.along_track_max_m) {
            return Err(Error::invalid("region along-track span", "min must be below max"));
        }
        Ok(())
    }

    pub fn contains(&self, d: &DeviceLocation) -> bool {
        (self.cross_track_min_m..=self.cross_track_max_m).contains(&d.cross_track_m)
            && (self.along_track_min_m..=self.along_track_max_m).contains(&d.along_track_m)
    }
}

pub fn deploy_devices<R: Rng + ?Sized>(region: &Region, n: usize, rng: &mut R) -> Vec<DeviceLocation> {
    (0..n)
        .map(|_| {
            let x = rng.random_range(region.cross_track_min_m..=region.cross_track_max_m);
            let y = rng.random_range(region.along_track_min_m..=region.along_track_max_m);
            DeviceLocation::new(x, y)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub num_devices: usize,
    pub orbit: OrbitConfig,
    pub link: LinkBudget,
    pub fading: FadingConfig,
    pub lora: LoraParams,
    pub receiver: ReceiverConfig,
    pub strategy: StrategyConfig,
    pub region: Region,
    /// Extra spacing between adjacent levels beyond the SIR threshold, in dB.
    pub level_margin_db: f64,
    pub sample_period_s: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.num_devices == 0 {
            return Err(Error::invalid("num_devices", "must be >= 1"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be >= 1"));
        }
        if !(self.sample_period_s > 0.0) {
            return Err(Error::NonPositiveSamplePeriod(self.sample_period_s));
        }
        if !(self.level_margin_db >= 0.0) {
            return Err(Error::invalid("level_margin_db", "must be >= 0"));
        }
        self.orbit.validate()?;
        self.link.validate()?;
        self.fading.validate()?;
        self.lora.validate()?;
        self.receiver.validate()?;
        self.strategy.validate()?;
        self.region.validate()?;
        let need = self.lora.sir_threshold_db + self.level_margin_db;
        let have = self.strategy.levels.min_separation_db();
        if have < need - 1e-9 {
            return Err(Error::invalid(
                "power_levels_dbm",
                format!("adjacent levels {have:.3} dB apart, need at least {need:.3} dB"),
            ));
        }
        Ok(())
    }

    pub fn with_strategy(&self, kind: StrategyKind) -> Self {
        Self {
            strategy: self.strategy.with_kind(kind),
            ..self.clone()
        }
    }

    pub fn with_devices(&self, n: usize) -> Self {
        Self {
            num_devices: n,
            ..self.clone()
        }
    }
}

/// Per-message outcome counts, indexed by collision class then
/// `[decoded, lost]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CollisionHistogram {
    pub counts: [[u64; 2]; 3],
}

impl CollisionHistogram {
    fn slot(class: CollisionClass) -> usize {
        match class {
            CollisionClass::None => 0,
            CollisionClass::Simple => 1,
            CollisionClass::Multiple => 2,
        }
    }

    pub fn record(&mut self, class: CollisionClass, decoded: bool) {
        self.counts[Self::slot(class)][usize::from(!decoded)] += 1;
    }

    pub fn decoded(&self, class: CollisionClass) -> u64 {
        self.counts[Self::slot(class)][0]
    }

    pub fn lost(&self, class: CollisionClass) -> u64 {
        self.counts[Self::slot(class)][1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapReport {
    pub strategy: StrategyKind,
    pub num_devices: usize,
    pub goodput_bytes: f64,
    /// Goodput over `U * mean_tx_power_w`.
    pub energy_eff: f64,
    /// `energy_eff` divided by the time on air.
    pub energy_eff_per_joule: f64,
    pub decoded_count: usize,
    pub attempts: usize,
    /// Mean transmit power over devices that transmitted.
    pub mean_tx_power_w: f64,
    pub histogram: CollisionHistogram,
    /// Number of simple collisions in which both packets were decoded.
    pub simple_both_decoded: usize,
    pub skipped_devices: usize,
    /// Set when no device transmitted.
    pub degenerate: bool,
}

/// Attempts actually emitted for one lap, with drawn received powers.
pub fn lap_attempts<R: Rng + ?Sized>(scn: &Scenario, rng: &mut R) -> Result<(Vec<TransmissionAttempt>, usize)> {
    let devices = deploy_devices(&scn.region, scn.num_devices, rng);
    let toa = scn.lora.toa_s;
    let mut attempts = Vec::with_capacity(devices.len());
    let mut skipped = 0;
    for (id, dev) in devices.iter().enumerate() {
        let pass = compute_pass(id, dev, &scn.orbit, scn.sample_period_s)?;
        match schedule(&pass, &scn.strategy, &scn.link, toa, rng) {
            Schedule::Transmit(mut a) => {
                // Start times are clipped into the window, so the midpoint
                // always interpolates.
                let mid = pass
                    .interpolate(a.midpoint_s())
                    .ok_or_else(|| Error::invalid("schedule", "midpoint outside visibility window"))?;
                let draw = received_power(a.p_tx_w, mid.distance_m, mid.elevation_deg, &scn.link, &scn.fading, rng)?;
                a.rx_power_w = draw.rx_power_w;
                attempts.push(a);
            }
            Schedule::Skip(_) => skipped += 1,
        }
    }
    Ok((attempts, skipped))
}

pub fn run_lap<R: Rng + ?Sized>(scn: &Scenario, rng: &mut R) -> Result<LapReport> {
    let (attempts, skipped) = lap_attempts(scn, rng)?;
    let noise = noise_power_w(&scn.link);
    let use_sic = scn.strategy.kind.uses_levels() || scn.receiver.aloha_sic;

    let mut histogram = CollisionHistogram::default();
    let mut decoded_count = 0;
    let mut simple_both = 0;
    for idx in overlap_groups(&attempts) {
        let group: Vec<TransmissionAttempt> = idx.iter().map(|&i| attempts[i]).collect();
        let depth = if use_sic { scn.receiver.max_sic_levels } else { 1 };
        let outcomes = decode(
            &group,
            noise,
            &scn.lora,
            scn.receiver.interference_scope,
            depth,
            scn.receiver.residual_fraction,
        );
        let ok = outcomes.iter().filter(|o| o.decoded).count();
        if group.len() == 2 && ok == 2 {
            simple_both += 1;
        }
        decoded_count += ok;
        for o in &outcomes {
            histogram.record(o.collision_class, o.decoded);
        }
    }

    let u = scn.num_devices as f64;
    let goodput = decoded_count as f64 * f64::from(scn.lora.payload_bytes);
    let degenerate = attempts.is_empty();
    let mean_p = if degenerate {
        0.0
    } else {
        attempts.iter().map(|a| a.p_tx_w).sum::<f64>() / attempts.len() as f64
    };
    let (energy_eff, per_joule) = if mean_p > 0.0 {
        let e = goodput / (u * mean_p);
        (e, e / scn.lora.toa_s)
    } else {
        (0.0, 0.0)
    };
    Ok(LapReport {
        strategy: scn.strategy.kind,
        num_devices: scn.num_devices,
        goodput_bytes: goodput,
        energy_eff,
        energy_eff_per_joule: per_joule,
        decoded_count,
        attempts: attempts.len(),
        mean_tx_power_w: mean_p,
        histogram,
        simple_both_decoded: simple_both,
        skipped_devices: skipped,
        degenerate,
    })
}

/// Random stream of one replication. Strategies share it, so at equal
/// `(seed, U, replication)` they see the same deployment.
pub fn replication_rng(seed: u64, num_devices: usize, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((num_devices as u64) << 32) ^ replication as u64);
    rng
}

/// Sample mean with a 95% normal-approximation half-width; the half-width
/// is NaN below two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                ci95: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, ci95: f64::NAN };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            ci95: 1.96 * (var / n).sqrt(),
        }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPoint {
    pub strategy: StrategyKind,
    pub num_devices: usize,
    pub replications: usize,
    pub goodput: Estimate,
    pub energy_eff: Estimate,
    pub energy_eff_per_joule: Estimate,
    pub decoded: Estimate,
    pub mean_tx_power_w: Estimate,
    /// Mean per-lap counts, same layout as [`CollisionHistogram`].
    pub collisions: [[f64; 2]; 3],
    pub simple_both_decoded: f64,
    pub degenerate_laps: usize,
}

impl CampaignPoint {
    pub fn aggregate(reports: &[LapReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::invalid("replications", "no reports to aggregate"))?;
        let col = |f: fn(&LapReport) -> f64| Estimate::from_samples(&reports.iter().map(f).collect::<Vec<_>>());
        let n = reports.len() as f64;
        let mut collisions = [[0.0; 2]; 3];
        for r in reports {
            for (c, row) in collisions.iter_mut().enumerate() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v += r.histogram.counts[c][k] as f64;
                }
            }
        }
        collisions.iter_mut().flatten().for_each(|v| *v /= n);
        Ok(Self {
            strategy: first.strategy,
            num_devices: first.num_devices,
            replications: reports.len(),
            goodput: col(|r| r.goodput_bytes),
            energy_eff: col(|r| r.energy_eff),
            energy_eff_per_joule: col(|r| r.energy_eff_per_joule),
            decoded: col(|r| r.decoded_count as f64),
            mean_tx_power_w: col(|r| r.mean_tx_power_w),
            collisions,
            simple_both_decoded: reports.iter().map(|r| r.simple_both_decoded as f64).sum::<f64>() / n,
            degenerate_laps: reports.iter().filter(|r| r.degenerate).count(),
        })
    }
}

/// Runs every replication of one `(strategy, U)` point. Output does not
/// depend on the rayon pool size.
pub fn run_point(scn: &Scenario) -> Result<Vec<LapReport>> {
    scn.validate()?;
    (0..scn.replications)
        .into_par_iter()
        .map(|k| run_lap(scn, &mut replication_rng(scn.seed, scn.num_devices, k)))
        .collect()
}

/// Sweeps strategies and device counts; points come out strategy-major in
/// the order given.
pub fn run_campaign(
    scn: &Scenario,
    strategies: &[StrategyKind],
    device_counts: &[usize],
) -> Result<Vec<CampaignPoint>> {
    let mut out = Vec::with_capacity(strategies.len() * device_counts.len());
    for &kind in strategies {
        for &u in device_counts {
            let reports = run_point(&scn.with_strategy(kind).with_devices(u))?;
            out.push(CampaignPoint::aggregate(&reports)?);
        }
    }
    Ok(out)
}
