mod common;

use common::{noise, packet, two_packet_truth};
use dtsnoma::channel::db_to_lin;
use dtsnoma::phy::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn decoded_ids(out: &[DecodingOutcome]) -> Vec<usize> {
    let mut v: Vec<usize> = out.iter().filter(|o| o.decoded).map(|o| o.device_id).collect();
    v.sort_unstable();
    v
}

#[test]
fn two_packet_truth_table() {
    let params = LoraParams::default();
    let floor = noise() * db_to_lin(params.snr_threshold_db);
    let mut cases = 0;
    for same_pilot in [true, false] {
        for g in -3..=9 {
            for m in -3..=9 {
                let p0 = floor * db_to_lin(f64::from(m));
                let p1 = p0 * db_to_lin(f64::from(g));
                let group = [
                    packet(0, 0.0, p0, 1),
                    packet(1, 0.5, p1, if same_pilot { 1 } else { 2 }),
                ];
                for (sic, out) in [
                    (true, sic_decode(&group, noise(), &params, 2)),
                    (false, aloha_decode(&group, noise(), &params)),
                ] {
                    let want = two_packet_truth(m, g, same_pilot, sic);
                    let got = [out[0].decoded, out[1].decoded];
                    assert_eq!(got, want, "m={m} g={g} same={same_pilot} sic={sic}");
                    assert!(out.iter().all(|o| o.collision_class == CollisionClass::Simple));
                    cases += 1;
                }
            }
        }
    }
    assert_eq!(cases, 2 * 13 * 13 * 2);
}

#[test]
fn same_pilot_weaker_reports_same_pilot() {
    let params = LoraParams::default();
    let group = [packet(0, 0.0, 4e-15, 1), packet(1, 0.0, 1e-15, 1)];
    let out = sic_decode(&group, noise(), &params, 2);
    assert!(out[0].decoded);
    assert_eq!(out[1].failure_reason, Some(FailureReason::SamePilot));
}

/// Union-find over all overlapping pairs.
fn brute_force_groups(a: &[TransmissionAttempt]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..a.len()).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..a.len() {
        for j in 0..i {
            if a[i].overlaps(&a[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..a.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.iter_mut().for_each(|g| g.sort_unstable());
    out.sort();
    out
}

#[test]
fn grouping_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..50 {
        let a: Vec<_> = (0..100)
            .map(|i| packet(i, rng.random_range(0.0..300.0), 1e-15, 1))
            .collect();
        let mut fast = overlap_groups(&a);
        fast.iter_mut().for_each(|g| g.sort_unstable());
        fast.sort();
        assert_eq!(fast, brute_force_groups(&a));
    }
}

fn random_group(rng: &mut ChaCha8Rng, n: usize) -> Vec<TransmissionAttempt> {
    let floor = noise() * db_to_lin(-20.0);
    (0..n)
        .map(|i| {
            let start = rng.random_range(0.0..1.5);
            let rx = floor * db_to_lin(rng.random_range(-4.0..12.0));
            packet(i, start, rx, rng.random_range(1..=2))
        })
        .collect()
}

#[test]
fn aloha_is_subset_of_sic() {
    let params = LoraParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=5);
        let g = random_group(&mut rng, n);
        for scope in [InterferenceScope::Group, InterferenceScope::Overlap] {
            let aloha = decoded_ids(&decode(&g, noise(), &params, scope, 1, 0.0));
            let sic = decoded_ids(&decode(&g, noise(), &params, scope, 2, 0.0));
            assert!(
                aloha.iter().all(|id| sic.contains(id)),
                "{scope:?}: {aloha:?} vs {sic:?}"
            );
        }
    }
}

#[test]
fn overlap_scope_matches_group_scope_on_cliques() {
    // Every packet starts inside the first ToA, so all pairs overlap.
    let params = LoraParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5_000 {
        let n = rng.random_range(1..=5);
        let g = random_group(&mut rng, n);
        for depth in [1, 2] {
            let a = decode(&g, noise(), &params, InterferenceScope::Group, depth, 0.0);
            let b = decode(&g, noise(), &params, InterferenceScope::Overlap, depth, 0.0);
            assert_eq!(decoded_ids(&a), decoded_ids(&b));
        }
    }
}

#[test]
fn overlap_scope_frees_chain_ends() {
    // A-B-C chain: A and C do not overlap, so each only fights B.
    let params = LoraParams::default();
    let g = [
        packet(0, 0.0, 8e-15, 1),
        packet(1, 1.5, 1e-15, 1),
        packet(2, 3.0, 8e-15, 1),
    ];
    let grouped = decode(&g, noise(), &params, InterferenceScope::Group, 2, 0.0);
    let overlap = decode(&g, noise(), &params, InterferenceScope::Overlap, 2, 0.0);
    assert_eq!(decoded_ids(&grouped), Vec::<usize>::new());
    assert_eq!(decoded_ids(&overlap), vec![0, 2]);
    assert_eq!(overlap[0].collision_class, CollisionClass::Simple);
    assert_eq!(overlap[1].collision_class, CollisionClass::Multiple);
}

proptest! {
    #[test]
    fn at_most_two_per_group(seed: u64, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_group(&mut rng, n);
        let out = sic_decode(&g, noise(), &LoraParams::default(), 2);
        prop_assert!(out.iter().filter(|o| o.decoded).count() <= n.min(2));
    }

    #[test]
    fn decoded_packets_clear_c1(seed: u64, n in 1usize..8) {
        let params = LoraParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_group(&mut rng, n);
        for scope in [InterferenceScope::Group, InterferenceScope::Overlap] {
            let out = decode(&g, noise(), &params, scope, 2, 0.0);
            for (o, a) in out.iter().zip(&g) {
                if o.decoded {
                    prop_assert!(check_c1(a.rx_power_w, noise(), &params));
                }
                if o.collision_class == CollisionClass::None {
                    prop_assert_eq!(o.sic_stage, 0);
                }
                prop_assert_eq!(o.decoded, o.failure_reason.is_none());
            }
        }
    }

    #[test]
    fn invariant_under_relabel_and_shift(seed: u64, n in 1usize..6, shift in -500.0f64..500.0) {
        let params = LoraParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_group(&mut rng, n);
        let base = decoded_ids(&sic_decode(&g, noise(), &params, 2));
        let moved: Vec<_> = g
            .iter()
            .rev()
            .map(|a| TransmissionAttempt { device_id: a.device_id + 1000, start_s: a.start_s + shift, ..*a })
            .collect();
        let got: Vec<usize> = decoded_ids(&sic_decode(&moved, noise(), &params, 2)).iter().map(|id| id - 1000).collect();
        prop_assert_eq!(base, got);
    }
}
