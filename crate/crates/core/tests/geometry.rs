use kinklap::geometry::{
    bouligand_in_chart, classify, sector_at, Domain, LocalChart, PointClassification, Sector,
    StepSequence,
};
use kinklap::linalg::{dot, normalized};
use kinklap::sector_moments::monte_carlo_moments;
use kinklap::specfun::sphere_area;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn boundary_normal(domain: &Domain, x: &[f64]) -> Vec<f64> {
    match classify(domain, x, 1e-3).unwrap() {
        PointClassification::C1Boundary { inner_normal } => inner_normal,
        other => panic!("{x:?} classified as {}", other.name()),
    }
}

#[test]
fn tangent_cone_matches_the_normal_half_space() {
    let ball = Domain::ball(3, 1.0).unwrap();
    let cube = Domain::unit_cube(3).unwrap();
    let cases = [
        (&ball, vec![1.0, 0.0, 0.0]),
        (&ball, vec![0.6, -0.8, 0.0]),
        (&cube, vec![0.5, 0.5, 1.0]),
        (&cube, vec![0.3, 0.0, 0.7]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (domain, x) in cases {
        let nu = boundary_normal(domain, &x);
        let chart = LocalChart::at(domain, &x).unwrap();
        let steps = StepSequence::for_domain(domain);
        let mut decided = 0;
        for _ in 0..10_000 {
            let v = normalized(&gaussian_vector(&mut rng, 3));
            let side = dot(&nu, &v);
            let out = bouligand_in_chart(&chart, &v, &steps).unwrap();
            if side.abs() >= 1e-6 {
                assert_eq!(out.contained, side >= 0.0, "{x:?} {v:?}");
                decided += 1;
            }
        }
        assert!(decided > 9_990);
    }
}

/// Fraction of fixed `z ∈ B₂` on which the blow-up indicator disagrees
/// with the sector, along `t = 2^{-j}`.
fn blow_up_mismatch(domain: &Domain, x: &[f64], zs: &[Vec<f64>]) -> Vec<f64> {
    let cls = classify(domain, x, 1e-3).unwrap();
    let sector = sector_at(domain, &cls);
    (1..=12)
        .map(|j| {
            let t = 2f64.powi(-j);
            let bad = zs
                .iter()
                .filter(|z| domain.blow_up_indicator(x, z, t).unwrap() != sector.contains(z))
                .count();
            bad as f64 / zs.len() as f64
        })
        .collect()
}

#[test]
fn blow_ups_converge_to_the_sector() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let zs: Vec<Vec<f64>> = (0..100_000)
        .map(|_| {
            let g = normalized(&gaussian_vector(&mut rng, 3));
            let r = 2.0 * rng.gen::<f64>().powf(1.0 / 3.0);
            g.iter().map(|v| r * v).collect()
        })
        .collect();
    let ball = Domain::ball(3, 1.0).unwrap();
    let cube = Domain::unit_cube(3).unwrap();
    let cases = [
        (&ball, [1.0, 0.0, 0.0]),
        (&cube, [0.5, 0.5, 0.5]),
        (&cube, [0.5, 0.5, 1.0]),
        (&cube, [0.5, 0.0, 0.0]),
        (&cube, [0.0, 0.0, 0.0]),
    ];
    for (domain, x) in cases {
        let fr = blow_up_mismatch(domain, &x, &zs);
        let inversions = fr.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(inversions <= 2, "{x:?} {fr:?}");
        assert!(*fr.last().unwrap() < 1e-3, "{x:?} {fr:?}");
        assert!(fr.last().unwrap() <= &fr[0], "{x:?} {fr:?}");
    }
}

#[test]
fn orthant_sector_measure() {
    for (d, k) in [(2usize, 2usize), (3, 2), (3, 3), (5, 3)] {
        let domain = Domain::orthant_model(d, k, 1.0).unwrap();
        let cls = classify(&domain, &vec![0.0; d], 1e-3).unwrap();
        let sector = sector_at(&domain, &cls);
        let m = monte_carlo_moments(&sector, d, 400_000, 21).unwrap();
        let expect = sphere_area(d) / 2f64.powi(k as i32);
        assert!(
            (m.measure - expect).abs() <= 3.0 * m.stderr.measure,
            "d={d} k={k} {} vs {expect}",
            m.measure
        );
    }
}

#[test]
fn cusp_sector_has_null_measure() {
    let cusp = Domain::cusp(3, 0.5).unwrap();
    let cls = classify(&cusp, &[0.0; 3], 1e-3).unwrap();
    let sector = sector_at(&cusp, &cls);
    assert!(matches!(sector, Sector::Predicate { .. }));
    let m = monte_carlo_moments(&sector, 3, 400_000, 2).unwrap();
    assert!(
        m.measure <= 3.0 * m.stderr.measure.max(1e-12),
        "{} ± {}",
        m.measure,
        m.stderr.measure
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_membership_is_coordinatewise(
        edges in prop::collection::vec(0.2f64..3.0, 1..6),
        fr in prop::collection::vec(-0.5f64..1.5, 6),
    ) {
        let d = edges.len();
        let x: Vec<f64> = (0..d).map(|i| fr[i] * edges[i]).collect();
        let domain = Domain::boxed(edges.clone()).unwrap();
        let inside = x.iter().zip(&edges).all(|(v, e)| *v >= 0.0 && v <= e);
        prop_assert_eq!(domain.contains(&x).unwrap(), inside);
    }

    #[test]
    fn ball_boundary_normal_points_inward(
        g in prop::collection::vec(-1.0f64..1.0, 3),
        radius in 0.5f64..2.0,
    ) {
        prop_assume!(g.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        let u = normalized(&g);
        // pulled inside by far less than the active-face band
        let x: Vec<f64> = u.iter().map(|v| radius * (1.0 - 1e-12) * v).collect();
        let ball = Domain::ball(3, radius).unwrap();
        let nu = boundary_normal(&ball, &x);
        for (a, b) in nu.iter().zip(&u) {
            prop_assert!((a + b).abs() < 1e-9);
        }
        let inner: Vec<f64> = x.iter().zip(&nu).map(|(a, b)| a + 1e-3 * b).collect();
        prop_assert!(ball.contains(&inner).unwrap());
    }

    #[test]
    fn intrinsic_distance_is_euclidean_on_convex_domains(
        a in prop::collection::vec(0.0f64..1.0, 3),
        b in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let cube = Domain::unit_cube(3).unwrap();
        let dist = cube.intrinsic_distance(&a, &b).unwrap().value;
        let e = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        prop_assert!((dist - e).abs() <= 1e-15 * (1.0 + e));
        prop_assert!((cube.intrinsic_distance(&b, &a).unwrap().value - dist).abs() == 0.0);
    }
}
