use approx::assert_relative_eq;
use dtsnoma::channel::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Exp, LogNormal};

/// Two-sided Kolmogorov-Smirnov statistic against `cdf`.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical value at the 1% level, asymptotic.
fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn rayleigh_power_is_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<f64> = (0..50_000)
        .map(|_| sample_rice_envelope(0.0, 2.0, &mut rng).powi(2))
        .collect();
    let exp = Exp::new(0.5).unwrap();
    let d = ks_statistic(xs, |x| exp.cdf(x));
    assert!(d < ks_critical_1pct(50_000), "D = {d}");
}

#[test]
fn rice_fourth_moment() {
    // E[h^4] = Omega^2 (K^2 + 4K + 2) / (K + 1)^2.
    for k in [1.0, 5.0, 12.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let n = 400_000;
        let m4 = (0..n)
            .map(|_| sample_rice_envelope(k, 1.0, &mut rng).powi(4))
            .sum::<f64>()
            / n as f64;
        let expected = (k * k + 4.0 * k + 2.0) / ((k + 1.0) * (k + 1.0));
        assert_relative_eq!(m4, expected, max_relative = 0.01);
    }
}

#[test]
fn shadowing_is_lognormal() {
    let cfg = FadingConfig::default();
    for alpha in [30.0, 55.0] {
        let p = fading_coeffs(alpha, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(alpha as u64);
        let xs: Vec<f64> = (0..50_000).map(|_| sample_shadowing(&p, &mut rng)).collect();
        let ln = LogNormal::new(p.mu, p.ln_std()).unwrap();
        let d = ks_statistic(xs, |x| ln.cdf(x));
        assert!(d < ks_critical_1pct(50_000), "alpha {alpha}: D = {d}");
    }
}

#[test]
fn received_power_mean_follows_shadowing() {
    // E[P_rx] = P g E[S^2] since E[h^2 | S] = S^2.
    let lb = LinkBudget::default();
    let cfg = FadingConfig::default();
    let (alpha, d) = (45.0, 750e3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let mean = (0..n)
        .map(|_| received_power(1.0, d, alpha, &lb, &cfg, &mut rng).unwrap().rx_power_w)
        .sum::<f64>()
        / n as f64;
    let expected = path_loss_gain(d, &lb).unwrap() * fading_coeffs(alpha, &cfg).mean_square_shadowing();
    assert_relative_eq!(mean, expected, max_relative = 0.01);
}

#[test]
fn rice_factor_unit_switch() {
    let mut cfg = FadingConfig::default();
    let db = fading_coeffs(50.0, &cfg).rice_k;
    cfg.rice_k_units = RiceKUnits::Linear;
    let lin = fading_coeffs(50.0, &cfg).rice_k;
    assert_relative_eq!(db, 10f64.powf(lin / 10.0), max_relative = 1e-12);
}

proptest! {
    #[test]
    fn disabled_fading_is_free_space(p in 1e-4f64..0.1, d in 5e5f64..1.2e6, alpha in 30.0f64..90.0, seed: u64) {
        let lb = LinkBudget::default();
        let cfg = FadingConfig { enabled: false, ..FadingConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = received_power(p, d, alpha, &lb, &cfg, &mut rng).unwrap();
        prop_assert_eq!(draw.rx_power_w, p * path_loss_gain(d, &lb).unwrap());
    }

    #[test]
    fn received_power_is_positive(p in 1e-4f64..0.1, d in 5e5f64..1.2e6, alpha in 0.0f64..90.0, seed: u64) {
        let lb = LinkBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = received_power(p, d, alpha, &lb, &FadingConfig::default(), &mut rng).unwrap();
        prop_assert!(draw.rx_power_w > 0.0 && draw.rx_power_w.is_finite());
        prop_assert!(draw.shadowing_s > 0.0);
    }

    #[test]
    fn sigma_is_floored(alpha in 0.0f64..=90.0) {
        let cfg = FadingConfig::default();
        prop_assert!(fading_coeffs(alpha, &cfg).sigma >= cfg.sigma_floor_db);
    }

    #[test]
    fn inverse_square(d in 1e3f64..2e6) {
        let lb = LinkBudget::default();
        let g1 = path_loss_gain(d, &lb).unwrap();
        let g2 = path_loss_gain(2.0 * d, &lb).unwrap();
        prop_assert!((g1 / g2 - 4.0).abs() < 1e-12);
    }
}
