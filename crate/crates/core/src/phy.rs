//! LoRa link constants and the gateway receiver.
//!
//! Concurrent packets are grouped by chained time overlap. Within a group the
//! receiver decodes the strongest packet if its SNR clears `gamma` (C1) and
//! its SIR against everything else still in the air clears `psi` (C2). With
//! successive interference cancellation the decoded packet is subtracted and
//! the next strongest is tried, provided it carries a pilot different from
//! every packet already decoded in the group.

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_lin, lin_to_db};
use crate::error::{Error, Result};

/// Slack on threshold comparisons, absorbing dB round-off at the boundary.
const THRESHOLD_SLACK_DB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoraParams {
    pub sf: u8,
    pub bandwidth_hz: f64,
    pub toa_s: f64,
    pub payload_bytes: u32,
    pub snr_threshold_db: f64,
    pub sir_threshold_db: f64,
    pub sensitivity_dbm: f64,
}

impl Default for LoraParams {
    fn default() -> Self {
        Self {
            sf: 12,
            bandwidth_hz: 125e3,
            toa_s: 1.8104,
            payload_bytes: 20,
            snr_threshold_db: -20.0,
            sir_threshold_db: 1.0,
            sensitivity_dbm: -137.0,
        }
    }
}

impl LoraParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.toa_s > 0.0 && self.toa_s.is_finite()) {
            return Err(Error::invalid("toa_s", "must be > 0"));
        }
        if self.payload_bytes == 0 {
            return Err(Error::invalid("payload_bytes", "must be > 0"));
        }
        if !(7..=12).contains(&self.sf) {
            return Err(Error::invalid("spreading_factor", "must lie in 7..=12"));
        }
        for (name, v) in [
            ("snr_threshold_db", self.snr_threshold_db),
            ("sir_threshold_db", self.sir_threshold_db),
            ("sensitivity_dbm", self.sensitivity_dbm),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Semtech time-on-air for explicit header, CRC on and coding rate 4/5,
/// with low data-rate optimisation when the symbol time exceeds 16 ms.
///
/// Informational only: the simulator uses the configured `toa_s`.
pub fn toa_from_formula(sf: u8, bandwidth_hz: f64, payload_bytes: u32, preamble_symbols: u32) -> f64 {
    let t_sym = f64::from(1u32 << sf) / bandwidth_hz;
    let de = if t_sym > 16e-3 { 1.0 } else { 0.0 };
    let sf = f64::from(sf);
    let num = 8.0 * f64::from(payload_bytes) - 4.0 * sf + 28.0 + 16.0;
    let payload_symbols = 8.0 + ((num / (4.0 * (sf - 2.0 * de))).ceil() * 5.0).max(0.0);
    (f64::from(preamble_symbols) + 4.25 + payload_symbols) * t_sym
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionAttempt {
    pub device_id: usize,
    pub start_s: f64,
    pub toa_s: f64,
    pub p_tx_w: f64,
    /// Target power level, 1-based; 0 when the strategy uses none.
    pub level_index: u8,
    /// Orthogonal syncword class; equal to `level_index` for NOMA strategies.
    pub pilot_id: u8,
    pub rx_power_w: f64,
}

impl TransmissionAttempt {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.toa_s
    }

    pub fn midpoint_s(&self) -> f64 {
        self.start_s + 0.5 * self.toa_s
    }

    pub fn overlaps(&self, other: &TransmissionAttempt) -> bool {
        self.start_s < other.end_s() && other.start_s < self.end_s()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionClass {
    None,
    Simple,
    Multiple,
}

impl CollisionClass {
    pub const ALL: [CollisionClass; 3] = [Self::None, Self::Simple, Self::Multiple];

    pub fn for_group_size(n: usize) -> Self {
        match n {
            0 | 1 => Self::None,
            2 => Self::Simple,
            _ => Self::Multiple,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Simple => "simple",
            Self::Multiple => "multiple",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    SnrBelowGamma,
    SirBelowPsi,
    SamePilot,
    MultipleUnresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodingOutcome {
    pub device_id: usize,
    pub decoded: bool,
    pub collision_class: CollisionClass,
    /// 0 when no cancellation was involved, otherwise the 1-based position in
    /// the group's decoding order.
    pub sic_stage: u8,
    pub failure_reason: Option<FailureReason>,
}

/// Which packets count as interference for C2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferenceScope {
    /// Every other packet of the chained overlap group, with at most
    /// `max_sic_levels` decodes per group.
    #[default]
    Group,
    /// Only packets overlapping the one being decoded; the SIC depth limit
    /// applies per packet, counting its cancelled neighbours.
    Overlap,
}

/// Receiver knobs beyond the LoRa thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    /// Maximum decoded packets per overlap group when SIC is active.
    pub max_sic_levels: usize,
    pub interference_scope: InterferenceScope,
    /// Fraction of a decoded packet's power left behind after cancellation.
    pub residual_fraction: f64,
    /// Whether the ALOHA baseline may use SIC.
    pub aloha_sic: bool,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            max_sic_levels: 2,
            interference_scope: InterferenceScope::Group,
            residual_fraction: 0.0,
            aloha_sic: false,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sic_levels == 0 {
            return Err(Error::invalid("max_sic_levels", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.residual_fraction) {
            return Err(Error::invalid("sic_residual_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// C1: SNR at or above `gamma`.
pub fn check_c1(rx_power_w: f64, noise_w: f64, params: &LoraParams) -> bool {
    rx_power_w > 0.0 && lin_to_db(rx_power_w / noise_w) >= params.snr_threshold_db - THRESHOLD_SLACK_DB
}

/// C2: SIR against the summed interference at or above `psi`; vacuous
/// without interferers.
pub fn check_c2(rx_power_w: f64, interference_sum_w: f64, params: &LoraParams) -> bool {
    if interference_sum_w <= 0.0 {
        return true;
    }
    rx_power_w > 0.0 && lin_to_db(rx_power_w / interference_sum_w) >= params.sir_threshold_db - THRESHOLD_SLACK_DB
}

/// Received power needed to clear C1 exactly.
pub fn c1_floor_w(noise_w: f64, params: &LoraParams) -> f64 {
    noise_w * db_to_lin(params.snr_threshold_db)
}

/// Partitions attempts into maximal groups chained by pairwise overlap.
/// Returns indices into `attempts`, each group ordered by start time.
pub fn overlap_groups(attempts: &[TransmissionAttempt]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..attempts.len()).collect();
    order.sort_by(|&a, &b| attempts[a].start_s.total_cmp(&attempts[b].start_s));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut horizon = f64::NEG_INFINITY;
    for i in order {
        let a = &attempts[i];
        match groups.last_mut() {
            Some(g) if a.start_s < horizon => {
                g.push(i);
                horizon = horizon.max(a.end_s());
            }
            _ => {
                groups.push(vec![i]);
                horizon = a.end_s();
            }
        }
    }
    groups
}

/// Decodes one overlap group, allowing at most `max_decoded` packets.
pub fn decode_group(
    group: &[TransmissionAttempt],
    noise_w: f64,
    params: &LoraParams,
    max_decoded: usize,
    residual_fraction: f64,
) -> Vec<DecodingOutcome> {
    let n = group.len();
    let class = CollisionClass::for_group_size(n);
    let mut outcomes: Vec<DecodingOutcome> = group
        .iter()
        .map(|a| DecodingOutcome {
            device_id: a.device_id,
            decoded: false,
            collision_class: class,
            sic_stage: 0,
            failure_reason: None,
        })
        .collect();
    if n == 0 {
        return outcomes;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| group[b].rx_power_w.total_cmp(&group[a].rx_power_w));

    // Power still in the air: everything not yet cancelled.
    let mut in_air: Vec<f64> = group.iter().map(|a| a.rx_power_w).collect();
    let mut decoded_pilots: Vec<u8> = Vec::new();
    let mut decoded = 0usize;
    let mut stalled = false;

    for &i in &order {
        if stalled || decoded >= max_decoded {
            break;
        }
        let a = &group[i];
        if decoded_pilots.contains(&a.pilot_id) {
            // No channel estimate can separate it from the decoded packet.
            continue;
        }
        let interference: f64 = in_air.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p).sum();
        if !check_c1(a.rx_power_w, noise_w, params) {
            outcomes[i].failure_reason = Some(FailureReason::SnrBelowGamma);
            stalled = true;
        } else if !check_c2(a.rx_power_w, interference, params) {
            outcomes[i].failure_reason = Some(FailureReason::SirBelowPsi);
            stalled = true;
        } else {
            decoded += 1;
            outcomes[i].decoded = true;
            outcomes[i].sic_stage = if n == 1 { 0 } else { decoded as u8 };
            decoded_pilots.push(a.pilot_id);
            in_air[i] = residual_fraction * a.rx_power_w;
            let cancellable = order
                .iter()
                .any(|&j| !outcomes[j].decoded && !decoded_pilots.contains(&group[j].pilot_id));
            if !cancellable {
                break;
            }
        }
    }

    for (i, o) in outcomes.iter_mut().enumerate() {
        if o.decoded || o.failure_reason.is_some() {
            continue;
        }
        let a = &group[i];
        o.failure_reason = Some(if !check_c1(a.rx_power_w, noise_w, params) {
            FailureReason::SnrBelowGamma
        } else if decoded_pilots.contains(&a.pilot_id) {
            FailureReason::SamePilot
        } else if n >= 3 {
            FailureReason::MultipleUnresolved
        } else {
            FailureReason::SirBelowPsi
        });
    }
    outcomes
}

/// Decodes one overlap group where each packet only sees interference from
/// the packets it overlaps in time.
///
/// Packets are tried strongest first and the scan restarts after every
/// success, since a cancellation may unlock a stronger neighbour's
/// neighbour. A packet is decodable at stage `1 + cancelled neighbours`,
/// which must not exceed `max_stage`, and never alongside a cancelled
/// neighbour sharing its pilot.
pub fn decode_overlapping(
    group: &[TransmissionAttempt],
    noise_w: f64,
    params: &LoraParams,
    max_stage: usize,
    residual_fraction: f64,
) -> Vec<DecodingOutcome> {
    let n = group.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && group[i].overlaps(&group[j])).collect())
        .collect();
    let mut outcomes: Vec<DecodingOutcome> = group
        .iter()
        .zip(&neighbours)
        .map(|(a, nb)| DecodingOutcome {
            device_id: a.device_id,
            decoded: false,
            collision_class: CollisionClass::for_group_size(nb.len() + 1),
            sic_stage: 0,
            failure_reason: None,
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| group[b].rx_power_w.total_cmp(&group[a].rx_power_w));
    let mut in_air: Vec<f64> = group.iter().map(|a| a.rx_power_w).collect();

    let blocked_by_pilot = |i: usize, outcomes: &[DecodingOutcome]| {
        neighbours[i]
            .iter()
            .any(|&j| outcomes[j].decoded && group[j].pilot_id == group[i].pilot_id)
    };

    'scan: loop {
        for &i in &order {
            if outcomes[i].decoded {
                continue;
            }
            let cancelled = neighbours[i].iter().filter(|&&j| outcomes[j].decoded).count();
            if cancelled + 1 > max_stage || blocked_by_pilot(i, &outcomes) {
                continue;
            }
            let a = &group[i];
            let interference: f64 = neighbours[i].iter().map(|&j| in_air[j]).sum();
            if check_c1(a.rx_power_w, noise_w, params) && check_c2(a.rx_power_w, interference, params) {
                outcomes[i].decoded = true;
                outcomes[i].sic_stage = if neighbours[i].is_empty() {
                    0
                } else {
                    (cancelled + 1) as u8
                };
                in_air[i] = residual_fraction * a.rx_power_w;
                continue 'scan;
            }
        }
        break;
    }

    for i in 0..n {
        if outcomes[i].decoded {
            continue;
        }
        let a = &group[i];
        outcomes[i].failure_reason = Some(if !check_c1(a.rx_power_w, noise_w, params) {
            FailureReason::SnrBelowGamma
        } else if blocked_by_pilot(i, &outcomes) {
            FailureReason::SamePilot
        } else if neighbours[i].len() >= 2 {
            FailureReason::MultipleUnresolved
        } else {
            FailureReason::SirBelowPsi
        });
    }
    outcomes
}

/// Dispatches on the configured interference scope. `max_decoded` is the
/// SIC depth; 1 gives a capture-only receiver.
pub fn decode(
    group: &[TransmissionAttempt],
    noise_w: f64,
    params: &LoraParams,
    scope: InterferenceScope,
    max_decoded: usize,
    residual_fraction: f64,
) -> Vec<DecodingOutcome> {
    match scope {
        InterferenceScope::Group => decode_group(group, noise_w, params, max_decoded, residual_fraction),
        InterferenceScope::Overlap => decode_overlapping(group, noise_w, params, max_decoded, residual_fraction),
    }
}

/// SIC receiver with orthogonal pilots.
pub fn sic_decode(
    group: &[TransmissionAttempt],
    noise_w: f64,
    params: &LoraParams,
    max_sic_levels: usize,
) -> Vec<DecodingOutcome> {
    decode_group(group, noise_w, params, max_sic_levels, 0.0)
}

/// Capture-only receiver: at most the strongest packet of a group survives.
pub fn aloha_decode(group: &[TransmissionAttempt], noise_w: f64, params: &LoraParams) -> Vec<DecodingOutcome> {
    decode_group(group, noise_w, params, 1, 0.0)
}
