use lmt_core::topology::{assign_energy, deploy, field_width};
use lmt_core::{SimConfig, Topology};
use proptest::prelude::*;

fn cfg(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        node_count: n,
        seed,
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn adjacency_is_exactly_the_radio_disk(n in 50usize..=160, seed in 0u64..10_000) {
        let c = cfg(n, seed);
        let t = deploy(&c).unwrap();
        for a in t.node_ids() {
            for b in t.node_ids().filter(|&b| b > a) {
                let close = t.distance(a, b) <= c.radio_range;
                prop_assert_eq!(t.are_adjacent(a, b), close, "{} {}", a, b);
            }
        }
    }

    #[test]
    fn sources_are_connected_and_sized(n in 50usize..=300, seed in 0u64..10_000) {
        let c = cfg(n, seed);
        let t = deploy(&c).unwrap();
        prop_assert_eq!(t.sources().len(), c.source_quota());
        prop_assert!(t.is_induced_connected(t.sources()));
        prop_assert_eq!(t.sinks().len(), c.sink_count);
        prop_assert!(t.sinks().is_disjoint(t.sources()));
    }

    #[test]
    fn same_seed_same_text(n in 50usize..=120, seed in 0u64..10_000) {
        let c = cfg(n, seed);
        let a = deploy(&c).unwrap();
        let b = deploy(&c).unwrap();
        let ea = assign_energy(&a, &c, seed).unwrap();
        let eb = assign_energy(&b, &c, seed).unwrap();
        let text = a.to_text(&ea);
        prop_assert_eq!(&text, &b.to_text(&eb));
        let (back, eback) = Topology::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(&eback), text);
        for &s in a.sources() {
            let e = ea.get(s);
            prop_assert!((c.source_energy_min..=c.source_energy_max).contains(&e));
        }
    }

    #[test]
    fn field_width_matches_density(n in 1usize..5000, num in 1u32..200, den in 100u32..5000) {
        let d = num as f64 / den as f64;
        let w = field_width(n, d).unwrap();
        prop_assert!(((w * w * d) - n as f64).abs() <= 1e-9 * n as f64);
    }
}
