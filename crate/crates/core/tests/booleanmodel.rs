use proptest::prelude::*;
use stabperc_core::allocation::{compute_allocation, Grid};
use stabperc_core::booleanmodel::*;
use stabperc_core::pointprocess::{rescale, sample_poisson, CenterSet, Region, Topology};

fn setup(seed: u64, side: f64, h: f64, lambda: f64, topo: Topology) -> (CenterSet, Grid) {
    let region = Region::cube(2, side, topo).unwrap();
    (sample_poisson(&region, lambda, seed).unwrap(), Grid::new(&region, h).unwrap())
}

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![Just(Topology::Torus), Just(Topology::Box)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brute_force_cells(seed in any::<u64>(), r in 0.0f64..2.0, topo in topology()) {
        let (centers, grid) = setup(seed, 5.0, 0.25, 0.5, topo);
        let mask = boolean_mask(&centers, r, &grid);
        let region = grid.region();
        for cell in 0..grid.num_cells() {
            let p = grid.cell_center(cell);
            let mut hit = false;
            for c in centers.iter() {
                let mut s = 0.0;
                for k in 0..2 {
                    let mut dx = p[k] - c[k];
                    if region.is_torus() {
                        dx -= 5.0 * (dx / 5.0).round();
                    }
                    s += dx * dx;
                }
                hit |= r > 0.0 && s <= r * r;
            }
            prop_assert_eq!(mask.get(cell), hit);
        }
    }

    #[test]
    fn monotone_in_radius_and_centers(seed in any::<u64>(), r in 0.0f64..1.5, dr in 0.0f64..1.0, keep in 0usize..5, topo in topology()) {
        let (centers, grid) = setup(seed, 6.0, 0.1, 1.0, topo);
        let fewer = centers.filtered(|k, _| k % 5 != keep);
        let base = boolean_mask(&fewer, r, &grid);
        prop_assert!(base.is_subset_of(&boolean_mask(&fewer, r + dr, &grid)));
        prop_assert!(base.is_subset_of(&boolean_mask(&centers, r, &grid)));
    }

    #[test]
    fn commutes_with_homothety(seed in any::<u64>(), r in 0.0f64..1.5, topo in topology()) {
        let (centers, grid) = setup(seed, 5.0, 0.125, 1.0, topo);
        let scaled = rescale(&centers, 2.0).unwrap();
        let big = Grid::new(scaled.region(), 0.25).unwrap();
        let small = boolean_mask(&centers, r, &grid);
        let large = boolean_mask(&scaled, 2.0 * r, &big);
        prop_assert_eq!(small.cells(), large.cells());
    }

    #[test]
    fn claimed_set_dominates(seed in any::<u64>(), lambda in prop_oneof![Just(0.5), Just(1.0)], alpha in prop_oneof![Just(0.5), Just(0.8), Just(1.0)]) {
        let (centers, grid) = setup(seed, 10.0, 0.05, lambda, Topology::Torus);
        let alloc = compute_allocation(&centers, &grid, alpha).unwrap();
        prop_assert!(domination_check(&alloc, &centers).unwrap().is_empty());
    }
}

#[test]
fn unit_radius_rescale_matches_equivalent_params() {
    // Scaling by 1 / (2 r) with r = (alpha / pi)^(1/2) maps rate-one balls of
    // volume alpha onto radius-1/2 balls at the equivalent intensity.
    let alpha = std::f64::consts::PI / 16.0;
    let r = appetite_radius(alpha, 2);
    assert!((r - 0.25).abs() < 1e-15);
    let (centers, grid) = setup(17, 4.0, 0.0625, 1.0, Topology::Torus);
    let scaled = rescale(&centers, 2.0).unwrap();
    let params = equivalent_boolean_params(alpha, 2).unwrap();
    assert!((scaled.intensity() - params.intensity).abs() < 1e-15);
    let big = Grid::new(scaled.region(), 0.125).unwrap();
    assert_eq!(
        boolean_mask(&centers, 0.25, &grid).cells(),
        boolean_mask(&scaled, params.radius, &big).cells()
    );
}
