//! Simulator and metric invariants over deployed fields.

use lmt_core::metrics::{anlt_empirical, anlt_predicted, LifetimeEstimator, RunMetrics, DRAIN_WINDOW};
use lmt_core::sim::{run, simulate};
use lmt_core::{EnergyView, NodeId, Scheme, SimConfig, Topology};
use proptest::prelude::*;

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Espan), Just(Scheme::Dlmt), Just(Scheme::Clmt)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traces_conserve_energy_and_respect_liveness(
        n in 50usize..=120,
        seed in 0u64..1000,
        scheme in scheme(),
        aggregation in any::<bool>(),
        overhearing in any::<bool>(),
    ) {
        let cfg = SimConfig {
            node_count: n,
            seed,
            sim_duration: 60.0,
            aggregation,
            overhearing,
            // Low budgets so deaths and repairs happen inside the window.
            source_energy_min: 1.5,
            source_energy_max: 3.0,
            ..SimConfig::default()
        };
        let (_, _, tr) = simulate(&cfg, scheme).unwrap();
        prop_assert!(tr.max_conservation_error() < 1e-9);
        let died_at = |v: NodeId| tr.deaths.iter().find(|d| d.node == v).map(|d| d.t_us);
        for tx in &tr.transmissions {
            for v in [tx.sender, tx.receiver] {
                // A transmission may exhaust its own endpoint, which then dies
                // at the start instant; nothing may start after a death.
                if let Some(t) = died_at(v) {
                    prop_assert!(tx.start_us <= t);
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &tr.deaths {
            prop_assert!(seen.insert(d.node), "node died twice");
        }
        for d in &tr.deliveries {
            prop_assert!(d.fused_count as usize <= tr.sources_alive_at(d.created_min_us));
            prop_assert!(d.delivered_us >= d.root_sent_us);
        }
        let m = RunMetrics::from_trace(&tr, n);
        prop_assert!((0.0..=1.0).contains(&m.avg_dr));
        let life = anlt_empirical(&tr);
        prop_assert_eq!(life.curve[0], (0, tr.sources.len()));
        prop_assert!(life.curve.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
        for r in &tr.rebuilds {
            prop_assert!(r.atd <= r.max_depth as f64);
        }
    }
}

#[test]
fn queueing_delay_grows_with_offered_load() {
    let mut last = 0.0;
    for rate in [1.0, 2.0, 4.0] {
        let cfg = SimConfig {
            node_count: 150,
            seed: 2,
            sim_duration: 60.0,
            data_rate: rate,
            ..SimConfig::default()
        };
        let (_, _, tr) = simulate(&cfg, Scheme::Dlmt).unwrap();
        let sp = RunMetrics::from_trace(&tr, cfg.node_count).avg_dly_sp;
        assert!(sp >= last, "rate {rate}: {sp} < {last}");
        last = sp;
    }
}

#[test]
fn predicted_lifetime_converges_on_a_static_tree() {
    // Three sources in a line, sink beyond the last; no periodic refresh.
    let t = Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3)])
        .with_sources([NodeId(0), NodeId(1), NodeId(2)])
        .with_sinks([NodeId(3)]);
    let e = EnergyView::from_vec(vec![14.0, 16.0, 15.0, 50.0]).unwrap();
    let cfg = SimConfig {
        run_to_extinction: true,
        start_jitter_max: 0.0,
        timeframe: 1e6,
        ..SimConfig::default()
    };
    let tr = run(&cfg, &t, &e, Scheme::Dlmt).unwrap();
    let first = &tr.deaths[0];
    let mut est = LifetimeEstimator::new(DRAIN_WINDOW);
    // Skip the start-up second, then take the first 20 samples.
    for s in tr.energy_log.iter().filter(|s| s.node == first.node && s.t_us >= 1_100_000) {
        est.push(s.t_us as f64 * 1e-6, s.residual);
        if est.len() == DRAIN_WINDOW {
            break;
        }
    }
    let (t_last, residual) = est.latest().unwrap();
    let predicted = t_last + anlt_predicted(residual, est.mean_drain().unwrap());
    let actual = first.t_us as f64 * 1e-6;
    assert!(((predicted - actual) / actual).abs() < 0.05, "{predicted} vs {actual}");
}
