use std::path::Path;

use proptest::prelude::*;
use stabperc::formats::*;
use stabperc_core::allocation::{claimed_set, compute_allocation, Grid};
use stabperc_core::majorant::{painted_set, r_field, zeta, CubeLattice};
use stabperc_core::pointprocess::{sample_poisson, Region, Topology};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn center_text_is_lossless(seed in any::<u64>(), lambda in 0.0f64..3.0, lx in 1.0f64..9.0, torus in any::<bool>()) {
        let topo = if torus { Topology::Torus } else { Topology::Box };
        let region = Region::new(&[lx, 3.0, 2.5], topo).unwrap();
        let c = sample_poisson(&region, lambda, seed).unwrap();
        let back = centers_from_text(&centers_to_text(&c), Path::new("p")).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn snapshots_are_lossless(seed in any::<u64>(), alpha in 0.0f64..1.5) {
        let region = Region::cube(2, 6.0, Topology::Torus).unwrap();
        let grid = Grid::new(&region, 0.1).unwrap();
        let centers = sample_poisson(&region, 0.8, seed).unwrap();
        let alloc = compute_allocation(&centers, &grid, alpha).unwrap();
        let p = Path::new("s");

        let snap = Snapshot::from_bytes(&allocation_snapshot(&alloc, &centers).to_bytes(), p).unwrap();
        let (a2, c2) = allocation_from_snapshot(&snap, p).unwrap();
        prop_assert_eq!(a2.owners(), alloc.owners());
        prop_assert_eq!(a2.claimed_counts(), alloc.claimed_counts());
        prop_assert_eq!(c2.coords(), centers.coords());
        prop_assert_eq!(snap.get("quota").unwrap(), alloc.quota().to_string());

        let claimed = claimed_set(&alloc);
        let ms = Snapshot::from_bytes(&mask_snapshot(&claimed, &grid, "claimed").to_bytes(), p).unwrap();
        let (m2, _) = mask_from_snapshot(&ms, p).unwrap();
        prop_assert_eq!(m2.cells(), claimed.cells());

        let field = r_field(&zeta(&centers, &CubeLattice::for_region(&region).unwrap()));
        let rs = Snapshot::from_bytes(&rfield_snapshot(&field).to_bytes(), p).unwrap();
        prop_assert_eq!(rs.section("r"), Some(&SectionData::F64(field.values().to_vec())));
        let painted = painted_set(&field).unwrap();
        let ps = Snapshot::from_bytes(&painted_snapshot(&painted).to_bytes(), p).unwrap();
        prop_assert_eq!(ps.section("mask"), Some(&SectionData::Bits(painted.mask().cells().to_vec())));
    }
}

#[test]
fn snapshot_header_records_provenance() {
    let snap = Snapshot::new("mask");
    assert_eq!(snap.get("engine"), Some(stabperc_core::ENGINE_VERSION));
    assert_eq!(snap.get("rng"), Some(stabperc_core::rng::RNG_ID));
    let bytes = snap.to_bytes();
    assert_eq!(&bytes[..8], SNAPSHOT_MAGIC);
}
