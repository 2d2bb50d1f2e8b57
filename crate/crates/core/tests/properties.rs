mod common;

use cfran_core::channel::{generate_realization, read_dump, write_dump, ChannelParams};
use cfran_core::clustering::{categorize_users, serving_antenna_set};
use cfran_core::config::TopologyConfig;
use cfran_core::evaluation::{empirical_cdf, improvement_ratios, outage_quantile, signaling_load};
use cfran_core::map_engine::{assemble_dl_transmit, uplink_sinr};
use cfran_core::{build_topology, Complex64, DVector, DeploymentOption, Level, SimConfig};
use common::*;
use proptest::prelude::*;

fn topo_cfg(n_odus: usize, orus: usize, ant: usize) -> TopologyConfig {
    TopologyConfig {
        n_odus,
        orus_per_odu: orus,
        antennas_per_oru: ant,
        ..TopologyConfig::default()
    }
}

fn params(shadowing_db: f64) -> ChannelParams {
    let mut cfg = SimConfig::default();
    cfg.channel.shadowing_db = shadowing_db;
    ChannelParams::from_config(&cfg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn antenna_sets_partition(n_odus in 1usize..4, orus in 1usize..6, ant in 1usize..5) {
        let t = build_topology(&topo_cfg(n_odus, orus, ant)).unwrap();
        t.validate().unwrap();
        prop_assert_eq!(&t, &build_topology(&topo_cfg(n_odus, orus, ant)).unwrap());
        let mut global = vec![];
        for odu in &t.odus {
            let odu_set = t.antenna_index_set(Level::Odu, odu.id).unwrap();
            let mut from_orus = vec![];
            for oru in &odu.orus {
                from_orus.extend(t.antenna_index_set(Level::Oru, oru.id).unwrap());
            }
            prop_assert_eq!(from_orus, odu_set.clone().collect::<Vec<_>>());
            global.extend(odu_set);
        }
        prop_assert_eq!(global, t.antenna_index_set(Level::Global, 0).unwrap().collect::<Vec<_>>());
        prop_assert_eq!(t.n_antennas(), n_odus * orus * ant);
    }

    #[test]
    fn categorization_is_monotone_and_scale_free(seed in any::<u64>(), lo in 0.0f64..10.0, extra in 0.0f64..10.0, shift_db in -30.0f64..30.0) {
        let t = build_topology(&TopologyConfig::default()).unwrap();
        let ch = generate_realization(&t, 8, seed, &params(4.0)).unwrap();
        let low = categorize_users(&ch, &t, lo);
        let high = categorize_users(&ch, &t, lo + extra);
        for ue in 0..8 {
            prop_assert_eq!(low.serving_odu[ue], high.serving_odu[ue]);
            prop_assert_eq!(&low.cooperating_odus[ue][0], &low.serving_odu[ue]);
            if low.category[ue] == cfran_core::UserCategory::Edge {
                prop_assert_eq!(high.category[ue], cfran_core::UserCategory::Edge);
                prop_assert_eq!(low.cooperating_odus[ue].len(), 2);
            } else {
                prop_assert_eq!(low.cooperating_odus[ue].len(), 1);
            }
        }
        let mut shifted = ch.clone();
        shifted.beta_db.add_scalar_mut(shift_db);
        let moved = categorize_users(&shifted, &t, lo);
        prop_assert_eq!(moved, low);
    }

    #[test]
    fn provable_option_chain_holds(
        seed in any::<u64>(),
        orus in 1usize..4,
        ant in 1usize..4,
        k in 1usize..7,
        threshold in 0.0f64..40.0,
    ) {
        let t = build_topology(&topo_cfg(2, orus, ant)).unwrap();
        let ch = generate_realization(&t, k, seed, &params(6.0)).unwrap();
        let a = categorize_users(&ch, &t, threshold);
        for ue in 0..k {
            let s: Vec<f64> = DeploymentOption::ALL
                .iter()
                .map(|&o| uplink_sinr(o, &ch, &a, &t, ue).unwrap())
                .collect();
            prop_assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert!(le_rel(s[0], s[1], 1e-9), "1 <= 2: {:?}", s);
            prop_assert!(le_rel(s[0], s[2], 1e-9), "1 <= 3: {:?}", s);
            prop_assert!(le_rel(s[2], s[3], 1e-9), "3 <= 4: {:?}", s);
            prop_assert!(le_rel(s[3], s[4], 1e-9), "4 <= 5: {:?}", s);
            prop_assert!(le_rel(s[1], s[4], 1e-9), "2 <= 5: {:?}", s);
        }
    }

    #[test]
    fn full_chain_at_default_scale(seed in any::<u64>()) {
        let cfg = SimConfig::default();
        let t = build_topology(&cfg.topology).unwrap();
        let ch = generate_realization(&t, 10, seed, &ChannelParams::from_config(&cfg)).unwrap();
        let a = categorize_users(&ch, &t, cfg.campaign.edge_threshold_db);
        for ue in 0..10 {
            let s: Vec<f64> = DeploymentOption::ALL
                .iter()
                .map(|&o| uplink_sinr(o, &ch, &a, &t, ue).unwrap())
                .collect();
            prop_assert!(le_rel(s[1], s[3], 1e-9), "2 <= 4: {:?}", s);
        }
    }

    #[test]
    fn fronthaul_streams_ignore_antenna_count(seed in any::<u64>(), ant in 1usize..12) {
        let base = build_topology(&TopologyConfig::default()).unwrap();
        let ch = generate_realization(&base, 10, seed, &params(4.0)).unwrap();
        let a = categorize_users(&ch, &base, 6.0);
        let other = build_topology(&topo_cfg(2, 4, ant)).unwrap();
        for opt in DeploymentOption::ALL {
            let l8 = signaling_load(opt, &a, &base);
            let ln = signaling_load(opt, &a, &other);
            prop_assert_eq!(&l8.fronthaul_streams_per_oru, &ln.fronthaul_streams_per_oru);
            prop_assert_eq!(l8.inter_odu_scalars_per_symbol, ln.inter_odu_scalars_per_symbol);
            for (oru, streams) in base.orus().zip(&l8.fronthaul_streams_per_oru) {
                let r = oru.antenna_range();
                let served = (0..10)
                    .filter(|&ue| serving_antenna_set(&a, opt, &base, ue).iter().any(|m| r.contains(m)))
                    .count();
                prop_assert_eq!(*streams, served);
            }
        }
    }

    #[test]
    fn dl_assembly_is_linear(re in -5.0f64..5.0, im in -5.0f64..5.0, seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w = random_channel(&mut rng, 6, 3);
        let s = DVector::from_fn(3, |_, _| cfran_core::channel::complex_normal(&mut rng));
        let alpha = Complex64::new(re, im);
        let lhs = assemble_dl_transmit(&(&s * alpha), &w).unwrap();
        let rhs = assemble_dl_transmit(&s, &w).unwrap() * alpha;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + s.norm() * w.norm() * alpha.norm()));
        let direct: DVector<Complex64> = (0..3).fold(DVector::zeros(6), |acc, k| acc + w.column(k) * s[k]);
        prop_assert!((assemble_dl_transmit(&s, &w).unwrap() - direct).norm() < 1e-12 * (1.0 + w.norm()));
    }

    #[test]
    fn outage_is_positively_homogeneous(
        data in prop::collection::vec(0.0f64..20.0, 1..300),
        scale in 0.01f64..100.0,
        q in 0.01f64..0.99,
    ) {
        let scaled: Vec<f64> = data.iter().map(|x| x * scale).collect();
        let a = outage_quantile(&data, q).unwrap();
        let b = outage_quantile(&scaled, q).unwrap();
        prop_assert_eq!(a * scale, b);
    }

    #[test]
    fn ratios_survive_common_rescaling(o in prop::collection::vec(0.01f64..10.0, 5), scale in 0.01f64..100.0) {
        let base: Vec<(u8, f64)> = o.iter().enumerate().map(|(i, v)| (i as u8 + 1, *v)).collect();
        let scaled: Vec<(u8, f64)> = base.iter().map(|(i, v)| (*i, v * scale)).collect();
        let r1 = improvement_ratios(&base).unwrap();
        let r2 = improvement_ratios(&scaled).unwrap();
        prop_assert_eq!(r1[0].1, 1.0);
        for (a, b) in r1.iter().zip(&r2) {
            prop_assert!(rel_err(a.1, b.1) < 1e-12);
        }
    }

    #[test]
    fn cdf_is_monotone_and_complete(data in prop::collection::vec(-50.0f64..50.0, 1..200)) {
        let cdf = empirical_cdf(&data).unwrap();
        prop_assert_eq!(cdf.len(), data.len());
        prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        for w in cdf.windows(2) {
            prop_assert!(w[0].0 <= w[1].0 && w[0].1 < w[1].1);
        }
    }

    #[test]
    fn channel_dump_round_trips(seed in any::<u64>(), k in 1usize..6) {
        let t = build_topology(&topo_cfg(2, 2, 3)).unwrap();
        let ch = generate_realization(&t, k, seed, &params(4.0)).unwrap();
        let mut buf = Vec::new();
        write_dump(&ch, &mut buf).unwrap();
        let back = read_dump(&buf[..]).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        for m in 0..ch.n_antennas() {
            for u in 0..k {
                prop_assert!(close(ch.h[(m, u)].re, back.h[(m, u)].re));
                prop_assert!(close(ch.h[(m, u)].im, back.h[(m, u)].im));
                prop_assert!(close(ch.beta_db[(m, u)], back.beta_db[(m, u)]));
            }
        }
        prop_assert_eq!(ch.tx_power, back.tx_power);
        prop_assert_eq!(ch.noise_power, back.noise_power);
    }
}

#[test]
fn generation_is_pure_in_seed() {
    let t = build_topology(&TopologyConfig::default()).unwrap();
    let a = generate_realization(&t, 10, 123, &params(4.0)).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let t = t.clone();
            std::thread::spawn(move || generate_realization(&t, 10, 123, &params(4.0)).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), a);
    }
}
