use proptest::prelude::*;
use stabperc_core::pointprocess::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cube_counts_partition_the_window(seed in any::<u64>(), lambda in 0.0f64..3.0, m in prop_oneof![Just(1.0), Just(2.0), Just(5.0)], torus in any::<bool>()) {
        let topo = if torus { Topology::Torus } else { Topology::Box };
        let region = Region::cube(2, 10.0, topo).unwrap();
        let centers = sample_poisson(&region, lambda, seed).unwrap();
        // cubes [m i - m/2, m i + m/2) for i in 0..=10/m tile [-m/2, 10 + m/2)
        let n = (10.0 / m) as i64;
        let range = if torus { 0..n } else { 0..n + 1 };
        let mut total = 0;
        for i in range.clone() {
            for j in range.clone() {
                total += count_in_cube(&centers, &[i, j], m);
            }
        }
        prop_assert_eq!(total, centers.len());
    }

    #[test]
    fn rescale_round_trip(seed in any::<u64>(), b in 0.1f64..10.0) {
        let region = Region::cube(3, 4.0, Topology::Torus).unwrap();
        let centers = sample_poisson(&region, 1.0, seed).unwrap();
        let back = rescale(&rescale(&centers, b).unwrap(), 1.0 / b).unwrap();
        for (x, y) in centers.coords().iter().zip(back.coords()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn torus_translation_keeps_distances(seed in any::<u64>(), kx in -3i32..3, ky in -3i32..3, sx in 0.0f64..8.0, sy in 0.0f64..8.0) {
        let region = Region::cube(2, 8.0, Topology::Torus).unwrap();
        let centers = sample_poisson(&region, 0.3, seed).unwrap();
        let shifted = centers.translated(&[sx + 8.0 * kx as f64, sy + 8.0 * ky as f64]).unwrap();
        for a in 0..centers.len() {
            for b in 0..centers.len() {
                let before = region.dist(centers.center(a), centers.center(b));
                let after = region.dist(shifted.center(a), shifted.center(b));
                prop_assert!((before - after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        let region = Region::cube(2, 6.0, Topology::Box).unwrap();
        let a = sample_poisson(&region, lambda, seed).unwrap();
        let b = sample_poisson(&region, lambda, seed).unwrap();
        prop_assert_eq!(a.coords(), b.coords());
        prop_assert!(a.iter().all(|p| region.contains(p)));
    }
}
