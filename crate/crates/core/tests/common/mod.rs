//! Helpers shared by the integration test targets.

use dtsnoma::channel::{noise_power_w, LinkBudget};
use dtsnoma::phy::TransmissionAttempt;

pub const TOA: f64 = 1.8104;

pub fn packet(id: usize, start: f64, rx_w: f64, pilot: u8) -> TransmissionAttempt {
    TransmissionAttempt {
        device_id: id,
        start_s: start,
        toa_s: TOA,
        p_tx_w: 0.025,
        level_index: pilot,
        pilot_id: pilot,
        rx_power_w: rx_w,
    }
}

pub fn noise() -> f64 {
    noise_power_w(&LinkBudget::default())
}

/// Two packets, the first `m` dB above the C1 floor and the second `g` dB
/// above the first. Returns which of the pair must decode.
pub fn two_packet_truth(m: i32, g: i32, same_pilot: bool, sic: bool) -> [bool; 2] {
    let margins = [m, m + g];
    if g == 0 {
        // 0 dB SIR fails C2 for both.
        return [false, false];
    }
    let (s, w) = if g > 0 { (1, 0) } else { (0, 1) };
    let mut out = [false; 2];
    // SIR of the stronger is |g| dB against psi = 1 dB.
    if margins[s] >= 0 && g.abs() >= 1 {
        out[s] = true;
        if sic && !same_pilot && margins[w] >= 0 {
            out[w] = true;
        }
    }
    out
}
