use approx::assert_relative_eq;
use dtsnoma::channel::{dbm_to_w, LinkBudget};
use dtsnoma::orbit::*;
use dtsnoma::phy::LoraParams;
use dtsnoma::strategies::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toa() -> f64 {
    LoraParams::default().toa_s
}

fn config(kind: StrategyKind, levels_dbm: &[f64]) -> StrategyConfig {
    StrategyConfig {
        kind,
        p_max_w: dbm_to_w(14.0),
        levels: PowerLevels::from_dbm(levels_dbm).unwrap(),
        ctp_fallback: true,
        ftp_edge_clipping: true,
    }
}

/// An 800 s pass with culmination at 400 s, distance V-shaped.
fn synthetic_pass() -> PassGeometry {
    let samples: Vec<PassSample> = (0..=800)
        .map(|t| {
            let t = f64::from(t);
            PassSample {
                time_s: t,
                elevation_deg: 90.0 - 0.15 * (t - 400.0).abs(),
                distance_m: 550e3 + 1000.0 * (t - 400.0).abs(),
            }
        })
        .collect();
    PassGeometry {
        device_id: 0,
        samples,
        window: Some(VisibilityWindow {
            rise_time_s: 0.0,
            set_time_s: 800.0,
            max_elevation_deg: 90.0,
            max_elevation_time_s: 400.0,
        }),
    }
}

fn zenith_pass() -> PassGeometry {
    compute_pass(3, &DeviceLocation::new(0.0, 0.0), &OrbitConfig::default(), 1.0).unwrap()
}

/// Kolmogorov-Smirnov distance to the uniform law on `[lo, hi]`.
fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn aloha_starts_are_uniform() {
    let pass = synthetic_pass();
    let cfg = config(StrategyKind::Aloha, &[-125.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| aloha_schedule(&pass, &cfg, toa(), &mut rng).attempt().unwrap().start_s)
        .collect();
    let d = ks_uniform(xs, 0.0, 800.0 - toa());
    assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
}

#[test]
fn ftp_candidates_are_equally_likely() {
    // Both levels reachable on both sides of a zenith pass: four positions.
    let pass = zenith_pass();
    let cfg = config(StrategyKind::Ftp, &[-122.0, -119.5]);
    let lb = LinkBudget::default();
    let cands = ftp_positions(&pass, &cfg, &lb, toa());
    assert_eq!(cands.len(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let a = *ftp_schedule(&pass, &cfg, &lb, toa(), &mut rng).attempt().unwrap();
        let k = cands
            .iter()
            .position(|c| c.start_s == a.start_s && c.level_index == a.level_index)
            .unwrap();
        counts[k] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 0.25).abs() < 0.01, "{counts:?}");
    }
}

#[test]
fn ftp_crossings_hit_target_distance() {
    let pass = zenith_pass();
    let cfg = config(StrategyKind::Ftp, &[-122.0, -119.5]);
    let lb = LinkBudget::default();
    for c in ftp_positions(&pass, &cfg, &lb, toa()) {
        let target = ftp_target_distance(cfg.p_max_w, cfg.levels.level_w(c.level_index), &lb);
        assert_relative_eq!(pass.distance_at(c.crossing_s).unwrap(), target, max_relative = 1e-9);
        assert_relative_eq!(c.start_s + 0.5 * toa(), c.crossing_s, epsilon = 1e-9);
    }
}

#[test]
fn ftp_clipping_switch() {
    // The lower level lies beyond the footprint edge.
    let pass = zenith_pass();
    let lb = LinkBudget::default();
    let mut cfg = config(StrategyKind::Ftp, &[-126.0, -120.0]);
    let clipped = ftp_positions(&pass, &cfg, &lb, toa());
    assert_eq!(clipped.len(), 4);
    let w = pass.window.unwrap();
    assert!(clipped.iter().any(|c| c.start_s == w.rise_time_s));
    assert!(clipped.iter().any(|c| c.start_s == w.set_time_s - toa()));
    cfg.ftp_edge_clipping = false;
    let kept = ftp_positions(&pass, &cfg, &lb, toa());
    assert_eq!(kept.len(), 2);
    assert!(kept.iter().all(|c| c.level_index == 2));
}

#[test]
fn single_level_ctp_is_aloha_with_less_power() {
    // A level reachable across the whole window leaves the start law uniform.
    let pass = zenith_pass();
    let w = pass.window.unwrap();
    let lb = LinkBudget::default();
    let cfg = config(StrategyKind::Ctp, &[-124.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 50_000;
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let a = *ctp_schedule(&pass, &cfg, &lb, toa(), &mut rng).attempt().unwrap();
        assert!(a.p_tx_w <= cfg.p_max_w);
        xs.push(a.start_s);
    }
    let d = ks_uniform(xs, w.rise_time_s, w.set_time_s - toa());
    assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
}

#[test]
fn unreachable_level_is_skipped() {
    let pass = zenith_pass();
    let lb = LinkBudget::default();
    let cfg = config(StrategyKind::Ctp, &[-110.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert_eq!(
        ctp_schedule(&pass, &cfg, &lb, toa(), &mut rng),
        Schedule::Skip(SkipReason::NoReachableLevel)
    );
    let empty = PassGeometry::empty(9);
    assert_eq!(
        schedule(&empty, &cfg, &lb, toa(), &mut rng),
        Schedule::Skip(SkipReason::EmptyWindow)
    );
}

proptest! {
    #[test]
    fn schedules_respect_window_power_and_pilot(
        cross in -1.0e6f64..1.0e6,
        along in -3e5f64..3e5,
        l1 in -127.0f64..-121.0,
        step in 1.5f64..7.0,
        seed: u64,
    ) {
        let orbit = OrbitConfig::default();
        let pass = compute_pass(0, &DeviceLocation::new(cross, along), &orbit, 1.0).unwrap();
        let lb = LinkBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for kind in StrategyKind::ALL {
            let cfg = config(kind, &[l1, l1 + step]);
            let Some(a) = schedule(&pass, &cfg, &lb, toa(), &mut rng).attempt().copied() else { continue; };
            let w = pass.window.unwrap();
            prop_assert!(a.start_s >= w.rise_time_s && a.end_s() <= w.set_time_s + 1e-9);
            prop_assert!(a.p_tx_w > 0.0 && a.p_tx_w <= cfg.p_max_w);
            prop_assert_eq!(a.pilot_id, a.level_index);
            if kind.uses_levels() {
                prop_assert!((1..=2).contains(&a.level_index));
            } else {
                prop_assert_eq!(a.level_index, 0);
            }
            if kind == StrategyKind::Ctp && a.p_tx_w < cfg.p_max_w {
                let d = pass.distance_at(a.midpoint_s()).unwrap();
                let rx = a.p_tx_w * dtsnoma::channel::path_loss_gain(d, &lb).unwrap();
                let err_db = 10.0 * (rx / cfg.levels.level_w(a.level_index)).log10();
                prop_assert!(err_db.abs() < 1e-6, "{err_db}");
            }
        }
    }
}
