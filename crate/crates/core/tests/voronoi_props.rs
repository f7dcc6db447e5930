use maxfilter_core::group::{build_family, orbit_of, Family};
use maxfilter_core::sampling::{gaussian_vector, task_rng};
use maxfilter_core::voronoi::{is_principal, s_set, sample_principal, voronoi_characteristic, VoronoiCellSpec};
use maxfilter_core::{FiniteGroup, TolerancePolicy};
use nalgebra::dvector;

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn groups() -> Vec<FiniteGroup> {
    [
        Family::CyclicRotation2d { m: 5 },
        Family::AxisRotation3d { m: 3 },
        Family::Dihedral2d { m: 4 },
        Family::SignFlips { d: 3 },
        Family::Permutations { d: 3 },
        Family::PlusMinusId { d: 3 },
    ]
    .into_iter()
    .map(|f| build_family(f, &tol()).unwrap())
    .collect()
}

#[test]
fn closure_membership_is_symmetric() {
    for (gi, group) in groups().iter().enumerate() {
        for k in 0..200u64 {
            let mut rng = task_rng(gi as u64, k);
            let x = gaussian_vector(&mut rng, group.dim());
            let y = gaussian_vector(&mut rng, group.dim());
            let vx = VoronoiCellSpec::new(group, &x, &tol()).unwrap();
            let vy = VoronoiCellSpec::new(group, &y, &tol()).unwrap();
            assert_eq!(vx.closure_contains(&y, &tol()), vy.closure_contains(&x, &tol()));
        }
    }
}

#[test]
fn principal_points_are_reciprocal() {
    for (gi, group) in groups().iter().enumerate() {
        let mut hits = 0;
        for k in 0..300u64 {
            let mut rng = task_rng(100 + gi as u64, k);
            let x = sample_principal(group, &mut rng, &tol()).unwrap();
            let y = gaussian_vector(&mut rng, group.dim());
            let vx = VoronoiCellSpec::new(group, &x, &tol()).unwrap();
            if vx.contains(&y, &tol()) {
                hits += 1;
                let vy = VoronoiCellSpec::new(group, &y, &tol()).unwrap();
                assert!(vy.contains(&x, &tol()));
            }
        }
        assert!(hits > 0);
    }
}

#[test]
fn reciprocity_fails_at_a_reflection_fixed_point() {
    let group = build_family(Family::SignFlips { d: 2 }, &tol()).unwrap();
    let x = dvector![1.0, 0.0];
    let y = dvector![1.0, 0.5];
    assert!(!is_principal(&group, &x, &tol()).unwrap());
    assert!(VoronoiCellSpec::new(&group, &x, &tol()).unwrap().contains(&y, &tol()));
    assert!(!VoronoiCellSpec::new(&group, &y, &tol()).unwrap().contains(&x, &tol()));
}

#[test]
fn s_set_covering_is_minimal() {
    for (gi, group) in groups().iter().enumerate() {
        for k in 0..30u64 {
            let mut rng = task_rng(200 + gi as u64, k);
            let x = sample_principal(group, &mut rng, &tol()).unwrap();
            let y = sample_principal(group, &mut rng, &tol()).unwrap();
            let s = s_set(group, &x, &y, &tol()).unwrap();
            assert!(!s.is_empty() && s.len() <= group.order());
            let vx = VoronoiCellSpec::new(group, &x, &tol()).unwrap();
            for (j, w) in s.witnesses.iter().enumerate() {
                assert!(vx.contains(w, &tol()));
                for (other, &idx) in s.member_indices.iter().enumerate() {
                    let cell = VoronoiCellSpec::of_orbit_point(&s.orbit_y, idx);
                    assert_eq!(cell.closure_contains(w, &tol()), other == j);
                }
            }
        }
    }
}

#[test]
fn s_set_size_is_equivariant_in_x() {
    for (gi, group) in groups().iter().enumerate() {
        for k in 0..20u64 {
            let mut rng = task_rng(300 + gi as u64, k);
            let x = sample_principal(group, &mut rng, &tol()).unwrap();
            let y = sample_principal(group, &mut rng, &tol()).unwrap();
            let base = s_set(group, &x, &y, &tol()).unwrap().len();
            for g in group.elements() {
                assert_eq!(s_set(group, &g.apply(&x), &y, &tol()).unwrap().len(), base);
            }
        }
    }
}

#[test]
fn chi_is_monotone_in_sample_count() {
    for group in groups() {
        let mut last = 0;
        for n in [1, 5, 20, 80] {
            let chi = voronoi_characteristic(&group, n, 9, &tol()).unwrap().chi_lower;
            assert!(chi >= last);
            last = chi;
        }
    }
}

#[test]
fn orbit_cells_partition_generic_points() {
    let group = build_family(Family::CyclicRotation2d { m: 7 }, &tol()).unwrap();
    let orbit = orbit_of(&group, &dvector![0.3, 1.1], &tol()).unwrap();
    for k in 0..100u64 {
        let y = gaussian_vector(&mut task_rng(5, k), 2);
        let inside = (0..orbit.len())
            .filter(|&j| VoronoiCellSpec::of_orbit_point(&orbit, j).contains(&y, &tol()))
            .count();
        assert_eq!(inside, 1);
    }
}
