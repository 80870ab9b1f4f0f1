mod common;

use common::{chain_plan, check_partition};
use gsc_core::geometry::{bundled_sites, compute_contacts, propagate_positions, IslPattern};
use gsc_core::routing::occupied_bandwidth;
use gsc_core::scenario::{run_experiment, ExperimentConfig};
use gsc_core::temporal::merge_windows;
use gsc_core::{ConstellationSpec, DiscretizationConfig, Horizon, LinkKind, NodeId, VisibilityRules};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn codec_placement_bandwidth(
        k in 1usize..=10,
        a in 0usize..=10,
        b in 0usize..=10,
        rate in 1u32..=200,
        ratio in prop::sample::select(vec![0.125, 0.25, 0.5, 1.0]),
    ) {
        let (enc, dec) = (a.min(k - 1), b.max(a.min(k - 1) + 1).min(k));
        prop_assume!(enc < dec);
        let rate = rate as f64;
        let occ = occupied_bandwidth(&chain_plan(k, enc, dec, rate, ratio));
        // every hop carries either the raw or the compressed stream
        let compressed = (dec - enc) as f64;
        prop_assert!((occ - rate * (k as f64 - compressed + ratio * compressed)).abs() < 1e-9);
        prop_assert!(occ <= rate * k as f64 + 1e-9);
        prop_assert!(occ + 1e-9 >= rate * ratio * k as f64);
        if enc > 0 {
            prop_assert!(occupied_bandwidth(&chain_plan(k, enc - 1, dec, rate, ratio)) <= occ + 1e-9);
        }
        if dec < k {
            prop_assert!(occupied_bandwidth(&chain_plan(k, enc, dec + 1, rate, ratio)) <= occ + 1e-9);
        }
        let best = occupied_bandwidth(&chain_plan(k, 0, k, rate, ratio));
        prop_assert!(best <= occ + 1e-9);
    }
}

fn timestamps() -> impl Strategy<Value = Vec<f64>> {
    (0u32..100, prop::collection::vec(1u32..300, 1..40)).prop_map(|(t0, gaps)| {
        let mut t = t0 as f64;
        let mut ts = vec![t];
        for g in gaps {
            t += g as f64;
            ts.push(t);
        }
        ts
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn windows_partition_the_horizon(ts in timestamps(), lambda in 0u32..600, extra in 1u32..200) {
        let lambda = lambda as f64;
        let w = merge_windows(&ts, &DiscretizationConfig { min_duration_s: lambda }).unwrap();
        if let Err(e) = check_partition(&ts, lambda, &w) {
            prop_assert!(false, "{}", e);
        }
        let longer = merge_windows(&ts, &DiscretizationConfig { min_duration_s: lambda + extra as f64 }).unwrap();
        prop_assert!(longer.len() <= w.len());
        if lambda == 0.0 {
            prop_assert_eq!(w.len(), ts.len() - 1);
        }
    }
}

fn small_constellation() -> ConstellationSpec {
    ConstellationSpec {
        planes: 4,
        sats_per_plane: 6,
        altitude_km: 550.0,
        inclination_deg: 53.0,
        phasing: 1,
        ai_fraction: 0.0,
    }
}

/// Elevation from first principles: angle between the local horizontal plane
/// at the site and the site-to-satellite line of sight.
fn elevation(site: [f64; 3], sat: [f64; 3]) -> f64 {
    let d = [sat[0] - site[0], sat[1] - site[1], sat[2] - site[2]];
    let dn = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let sn = (site[0] * site[0] + site[1] * site[1] + site[2] * site[2]).sqrt();
    let dot = (d[0] * site[0] + d[1] * site[1] + d[2] * site[2]) / (dn * sn);
    dot.asin().to_degrees()
}

#[test]
fn ground_contacts_follow_the_elevation_mask() {
    let spec = small_constellation();
    let sites = bundled_sites();
    let rules = VisibilityRules::default();
    let horizon = Horizon::new(0.0, 5400.0);
    let plan = compute_contacts(&spec, &sites, horizon, &rules, 3).unwrap();
    let n = spec.sat_count();
    let mut visible_samples = 0;
    let mut t = 0.0;
    while t < horizon.end {
        let sats = propagate_positions(&spec, t).unwrap();
        for (si, site) in sites.iter().enumerate() {
            let g = site.position_eci(t);
            for (s, pos) in sats.iter().enumerate() {
                let term = NodeId((n + si) as u32);
                let above = elevation(g, *pos) > rules.elevation_mask_deg;
                let covered = plan.contacts().iter().any(|c| {
                    c.kind == LinkKind::Sgl
                        && c.pair() == (NodeId(s as u32), term)
                        && c.start <= t
                        && t < c.end
                });
                assert_eq!(above, covered, "sat {s} site {} at t={t}", site.name);
                visible_samples += above as usize;
            }
        }
        t += rules.sampling_step_s;
    }
    assert!(visible_samples > 0);
    for c in plan.contacts() {
        assert!(c.rate_mbps >= 300.0 && c.rate_mbps <= 350.0);
        assert!(c.delay_ms >= 5.0 && c.delay_ms <= 15.0);
        if c.kind == LinkKind::Isl {
            assert_eq!((c.start, c.end), (horizon.start, horizon.end));
        }
    }
}

#[test]
fn plus_grid_gives_four_neighbours() {
    let spec = small_constellation();
    let rules = VisibilityRules {
        isl_pattern: IslPattern::PlusGrid,
        ..VisibilityRules::default()
    };
    let plan = compute_contacts(&spec, &[], Horizon::new(0.0, 60.0), &rules, 0).unwrap();
    let mut degree = vec![0; spec.sat_count()];
    for c in plan.contacts() {
        degree[c.node_a.0 as usize] += 1;
        degree[c.node_b.0 as usize] += 1;
    }
    assert!(degree.iter().all(|&d| d == 4), "{degree:?}");
}

#[test]
fn experiments_are_reproducible() {
    let mut cfg = ExperimentConfig::reference();
    cfg.constellation.planes = 8;
    cfg.constellation.sats_per_plane = 8;
    cfg.app_count = 40;
    cfg.window_count = 6;
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.records, b.records);
    cfg.seed += 1;
    let c = run_experiment(&cfg).unwrap();
    assert_ne!(a.records, c.records);
}
