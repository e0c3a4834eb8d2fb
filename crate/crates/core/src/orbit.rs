//! Pass geometry for a single LEO lap over a field of ground devices.
//!
//! The satellite follows a circular orbit whose sub-satellite point moves
//! along a great circle at constant ground speed. Devices are located by
//! their cross-track and along-track arc offsets from that ground track, so
//! the Earth-central angle between a device and the sub-satellite point is
//! exact spherical geometry:
//!
//! ```text
//! cos(psi) = cos(cross / R) * cos((along - v t) / R)
//! ```
//!
//! Elevation and slant range follow from `psi` and the orbit radius `R + H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6.378e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitConfig {
    pub altitude_m: f64,
    /// Speed of the sub-satellite point over the ground.
    pub ground_speed_mps: f64,
    pub earth_radius_m: f64,
    pub min_elevation_deg: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            altitude_m: 550e3,
            ground_speed_mps: 7_000.0,
            earth_radius_m: EARTH_RADIUS_M,
            min_elevation_deg: 30.0,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_m > 0.0) {
            return Err(Error::invalid("altitude_m", "must be > 0"));
        }
        if !(self.ground_speed_mps > 0.0) {
            return Err(Error::invalid("ground_speed_mps", "must be > 0"));
        }
        if !(self.earth_radius_m > 0.0) {
            return Err(Error::invalid("earth_radius_m", "must be > 0"));
        }
        if !(self.min_elevation_deg > 0.0 && self.min_elevation_deg < 90.0) {
            return Err(Error::invalid("min_elevation_deg", "must lie in (0, 90)"));
        }
        Ok(())
    }

    pub fn orbit_radius_m(&self) -> f64 {
        self.earth_radius_m + self.altitude_m
    }

    /// Earth-central angle (radians) at which the satellite sits exactly at
    /// the minimum elevation. Devices farther than this never see it.
    pub fn footprint_central_angle(&self) -> f64 {
        central_angle_for_elevation(self.min_elevation_deg, self)
    }

    /// Longest possible visibility window, reached by a device on the track.
    pub fn max_window_s(&self) -> f64 {
        2.0 * self.footprint_central_angle() * self.earth_radius_m / self.ground_speed_mps
    }
}

/// Slant range between a ground device and the satellite seen at
/// `alpha_deg` above the horizon.
pub fn slant_range(alpha_deg: f64, orbit: &OrbitConfig) -> Result<f64> {
    if !(0.0..=90.0).contains(&alpha_deg) {
        return Err(Error::ElevationOutOfRange(alpha_deg));
    }
    let r = orbit.earth_radius_m;
    let rs = orbit.orbit_radius_m();
    let a = alpha_deg.to_radians();
    let rc = r * a.cos();
    Ok((rs * rs - rc * rc).sqrt() - r * a.sin())
}

/// Straight-line distance between a ground point and the satellite when they
/// are separated by the Earth-central angle `psi` (radians).
pub fn chord_distance(psi: f64, orbit: &OrbitConfig) -> f64 {
    let r = orbit.earth_radius_m;
    let rs = orbit.orbit_radius_m();
    (r * r + rs * rs - 2.0 * r * rs * psi.cos()).max(0.0).sqrt()
}

/// Elevation seen from a device whose great-circle distance to the
/// sub-satellite point is `subsat_offset_m`. Negative below the horizon.
pub fn elevation_from_ground_geometry(subsat_offset_m: f64, orbit: &OrbitConfig) -> f64 {
    let psi = subsat_offset_m / orbit.earth_radius_m;
    elevation_from_central_angle(psi, orbit)
}

pub fn elevation_from_central_angle(psi: f64, orbit: &OrbitConfig) -> f64 {
    let ratio = orbit.earth_radius_m / orbit.orbit_radius_m();
    (psi.cos() - ratio).atan2(psi.sin()).to_degrees()
}

/// Inverse of [`chord_distance`]: the central angle at which the satellite
/// is `d` meters away, by the law of cosines.
pub fn central_angle_for_distance(d: f64, orbit: &OrbitConfig) -> f64 {
    let r = orbit.earth_radius_m;
    let rs = orbit.orbit_radius_m();
    ((r * r + rs * rs - d * d) / (2.0 * r * rs)).clamp(-1.0, 1.0).acos()
}

/// Inverse of [`elevation_from_central_angle`] on `[0, 90]` degrees.
pub fn central_angle_for_elevation(alpha_deg: f64, orbit: &OrbitConfig) -> f64 {
    let a = alpha_deg.to_radians();
    let ratio = orbit.earth_radius_m / orbit.orbit_radius_m();
    (ratio * a.cos()).acos() - a
}

/// Ground position of a device relative to the sub-satellite track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceLocation {
    pub cross_track_m: f64,
    pub along_track_m: f64,
}

impl DeviceLocation {
    pub fn new(cross_track_m: f64, along_track_m: f64) -> Self {
        Self {
            cross_track_m,
            along_track_m,
        }
    }

    /// Central angle to the sub-satellite point at lap time `t`.
    pub fn central_angle_at(&self, t: f64, orbit: &OrbitConfig) -> f64 {
        let r = orbit.earth_radius_m;
        let lat = self.cross_track_m / r;
        let dlon = (self.along_track_m - orbit.ground_speed_mps * t) / r;
        (lat.cos() * dlon.cos()).clamp(-1.0, 1.0).acos()
    }

    /// Lap time at which the satellite culminates for this device.
    pub fn culmination_time_s(&self, orbit: &OrbitConfig) -> f64 {
        self.along_track_m / orbit.ground_speed_mps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassSample {
    pub time_s: f64,
    pub elevation_deg: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityWindow {
    pub rise_time_s: f64,
    pub set_time_s: f64,
    pub max_elevation_deg: f64,
    pub max_elevation_time_s: f64,
}

impl VisibilityWindow {
    pub fn duration_s(&self) -> f64 {
        self.set_time_s - self.rise_time_s
    }
}

/// Elevation and distance trajectory of one device over the lap, restricted
/// to the contiguous interval above the minimum elevation.
#[derive(Debug, Clone, PartialEq)]
pub struct PassGeometry {
    pub device_id: usize,
    pub samples: Vec<PassSample>,
    /// `None` when the device never sees the satellite above the minimum
    /// elevation during this lap.
    pub window: Option<VisibilityWindow>,
}

impl PassGeometry {
    pub fn empty(device_id: usize) -> Self {
        Self {
            device_id,
            samples: Vec::new(),
            window: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_none()
    }

    pub fn window_s(&self) -> f64 {
        self.window.map_or(0.0, |w| w.duration_s())
    }

    /// Index of the culmination sample.
    pub fn peak_index(&self) -> Option<usize> {
        let w = self.window?;
        self.samples.iter().position(|s| s.time_s == w.max_elevation_time_s)
    }

    pub fn min_distance_m(&self) -> Option<f64> {
        self.peak_index().map(|i| self.samples[i].distance_m)
    }

    /// Linear interpolation of distance and elevation at `t`; `None` outside
    /// the window.
    pub fn interpolate(&self, t: f64) -> Option<PassSample> {
        let w = self.window?;
        if t < w.rise_time_s || t > w.set_time_s {
            return None;
        }
        let i = self.samples.partition_point(|s| s.time_s <= t);
        if i == 0 {
            return Some(self.samples[0]);
        }
        if i == self.samples.len() {
            return self.samples.last().copied();
        }
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let f = if b.time_s > a.time_s {
            (t - a.time_s) / (b.time_s - a.time_s)
        } else {
            0.0
        };
        Some(PassSample {
            time_s: t,
            elevation_deg: a.elevation_deg + f * (b.elevation_deg - a.elevation_deg),
            distance_m: a.distance_m + f * (b.distance_m - a.distance_m),
        })
    }

    pub fn distance_at(&self, t: f64) -> Option<f64> {
        self.interpolate(t).map(|s| s.distance_m)
    }
}

fn sample_at(dev: &DeviceLocation, orbit: &OrbitConfig, t: f64) -> PassSample {
    let psi = dev.central_angle_at(t, orbit);
    PassSample {
        time_s: t,
        elevation_deg: elevation_from_central_angle(psi, orbit),
        distance_m: chord_distance(psi, orbit),
    }
}

/// Sweeps the lap on the global time grid `k * sample_period_s` around the
/// device's culmination and keeps the samples above the minimum elevation.
///
/// The exact culmination instant is inserted as an extra sample, so the
/// window always contains the true minimum distance.
pub fn compute_pass(
    device_id: usize,
    dev: &DeviceLocation,
    orbit: &OrbitConfig,
    sample_period_s: f64,
) -> Result<PassGeometry> {
    if !(sample_period_s > 0.0) {
        return Err(Error::NonPositiveSamplePeriod(sample_period_s));
    }
    let t_peak = dev.culmination_time_s(orbit);
    let half = 0.5 * orbit.max_window_s();
    let k_lo = ((t_peak - half) / sample_period_s).floor() as i64 - 1;
    let k_hi = ((t_peak + half) / sample_period_s).ceil() as i64 + 1;

    let min_el = orbit.min_elevation_deg;
    let mut samples: Vec<PassSample> = Vec::new();
    let mut peak_inserted = false;
    for k in k_lo..=k_hi {
        let t = k as f64 * sample_period_s;
        if !peak_inserted && t >= t_peak {
            peak_inserted = true;
            if t > t_peak {
                let s = sample_at(dev, orbit, t_peak);
                if s.elevation_deg >= min_el {
                    samples.push(s);
                }
            }
        }
        let s = sample_at(dev, orbit, t);
        if s.elevation_deg >= min_el {
            samples.push(s);
        }
    }

    if samples.is_empty() {
        return Ok(PassGeometry::empty(device_id));
    }
    let peak = samples.iter().copied().fold(
        samples[0],
        |best, s| {
            if s.elevation_deg > best.elevation_deg {
                s
            } else {
                best
            }
        },
    );
    let window = VisibilityWindow {
        rise_time_s: samples[0].time_s,
        set_time_s: samples[samples.len() - 1].time_s,
        max_elevation_deg: peak.elevation_deg,
        max_elevation_time_s: peak.time_s,
    };
    Ok(PassGeometry {
        device_id,
        samples,
        window: Some(window),
    })
}
