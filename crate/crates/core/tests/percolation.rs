use std::collections::VecDeque;

use proptest::prelude::*;
use stabperc_core::allocation::{claimed_set, compute_allocation, Grid};
use stabperc_core::lattice::{Mask, Shape};
use stabperc_core::percolation::*;
use stabperc_core::pointprocess::{rescale, sample_poisson, Region, Topology};

fn neighbours(x: usize, y: usize, nx: usize, ny: usize, wrap: bool, corners: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for dx in -1i64..=1 {
        for dy in -1i64..=1 {
            if (dx, dy) == (0, 0) || (!corners && dx != 0 && dy != 0) {
                continue;
            }
            let (mut a, mut b) = (x as i64 + dx, y as i64 + dy);
            if wrap {
                a = a.rem_euclid(nx as i64);
                b = b.rem_euclid(ny as i64);
            } else if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                continue;
            }
            out.push((a as usize, b as usize));
        }
    }
    out
}

// Breadth-first flood fill; returns a component id per cell (0 = vacant).
fn flood_fill(cells: &[bool], nx: usize, ny: usize, wrap: bool, corners: bool) -> Vec<usize> {
    let mut id = vec![0; cells.len()];
    let mut next = 0;
    for start in 0..cells.len() {
        if !cells[start] || id[start] != 0 {
            continue;
        }
        next += 1;
        id[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for (a, b) in neighbours(c % nx, c / nx, nx, ny, wrap, corners) {
                let k = a + b * nx;
                if cells[k] && id[k] == 0 {
                    id[k] = next;
                    queue.push_back(k);
                }
            }
        }
    }
    id
}

fn random_mask() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..40, 1usize..40).prop_flat_map(|(nx, ny)| {
        (Just(nx), Just(ny), prop::collection::vec(prop::bool::weighted(0.55), nx * ny))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labels_match_flood_fill((nx, ny, cells) in random_mask(), wrap in any::<bool>(), corners in any::<bool>()) {
        let adjacency = if corners { Adjacency::FaceCorner } else { Adjacency::Face };
        let mask = Mask::from_cells(Shape::new(&[nx, ny]), wrap, cells.clone());
        let labels = label_clusters(&mask, adjacency);
        let oracle = flood_fill(&cells, nx, ny, wrap, corners);
        prop_assert_eq!(labels.count(), oracle.iter().copied().max().unwrap_or(0));
        for a in 0..cells.len() {
            prop_assert_eq!(labels.label(a) == 0, oracle[a] == 0);
            for b in 0..a {
                if oracle[a] != 0 && oracle[b] != 0 {
                    prop_assert_eq!(labels.label(a) == labels.label(b), oracle[a] == oracle[b]);
                }
            }
        }
    }

    #[test]
    fn crossing_monotone_under_inclusion((nx, ny, cells) in random_mask(), extra in prop::collection::vec(prop::bool::weighted(0.2), 1600), corners in any::<bool>()) {
        let adjacency = if corners { Adjacency::FaceCorner } else { Adjacency::Face };
        let shape = Shape::new(&[nx, ny]);
        let small = Mask::from_cells(shape.clone(), false, cells.clone());
        let big = Mask::from_cells(shape, false, cells.iter().zip(&extra).map(|(&a, &b)| a || b).collect());
        for axis in 0..2 {
            let s = crossing(&label_clusters(&small, adjacency), axis).unwrap();
            let b = crossing(&label_clusters(&big, adjacency), axis).unwrap();
            prop_assert!(!s.crosses || b.crosses);
        }
    }

    #[test]
    fn coupled_crossings_nondecreasing(seed in any::<u64>(), replica in 0u64..1000) {
        let grid = Grid::new(&Region::cube(2, 6.0, Topology::Box).unwrap(), 0.1).unwrap();
        let alphas = [0.3, 0.5, 0.6, 0.7, 0.8, 1.0, 1.4];
        let out = crossing_replica(1.0, &grid, &alphas, seed, replica, Adjacency::Face).unwrap();
        for w in out.windows(2) {
            prop_assert!(!w[0] || w[1]);
        }
    }

    #[test]
    fn crossing_depends_on_lambda_alpha_product(seed in any::<u64>(), alpha in 0.3f64..1.2) {
        let region = Region::cube(2, 5.0, Topology::Box).unwrap();
        let centers = sample_poisson(&region, 1.0, seed).unwrap();
        let grid = Grid::new(&region, 0.125).unwrap();
        let scaled = rescale(&centers, 2.0).unwrap();
        prop_assert_eq!(scaled.intensity(), 0.25);
        let big_grid = Grid::new(scaled.region(), 0.25).unwrap();
        let m1 = claimed_set(&compute_allocation(&centers, &grid, alpha).unwrap());
        let m2 = claimed_set(&compute_allocation(&scaled, &big_grid, 4.0 * alpha).unwrap());
        prop_assert_eq!(m1.cells(), m2.cells());
        let l1 = label_clusters(&m1, Adjacency::Face);
        let l2 = label_clusters(&m2, Adjacency::Face);
        prop_assert_eq!(crossing(&l1, 0).unwrap().crosses, crossing(&l2, 0).unwrap().crosses);
    }
}

#[test]
fn sweep_is_reproducible() {
    let grid = Grid::new(&Region::cube(2, 5.0, Topology::Box).unwrap(), 0.1).unwrap();
    let alphas = [0.4, 0.7, 1.0];
    let a = sweep_alpha(1.0, &grid, &alphas, 12, 99, Adjacency::Face).unwrap();
    let b = sweep_alpha(1.0, &grid, &alphas, 12, 99, Adjacency::Face).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.points.len(), 3);
    assert!(monotone_crossing_check(1.0, &grid, 0.5, 0.9, 5, Adjacency::Face).unwrap());
}
