use kinklap::geometry::{Domain, Sector};
use kinklap::linalg::unit;
use kinklap::operators::{
    asymptotic_predictor, euclidean_cone_operator, gauss_operator, graph_laplacian,
    localized_operator, predictor_at, ContinuumProblem, KernelParams, MomentBudget, OperatorReport,
};
use kinklap::sampling::{DensityField, Monomial, Sampler, ScalarField};
use kinklap::sector_moments::closed_form_moments;
use nalgebra::DMatrix;

fn coordinate_sum() -> ScalarField {
    ScalarField::CoordinateSum { dim: 3 }
}

fn mono(coef: f64, exponents: [u32; 3]) -> Monomial {
    Monomial {
        coef,
        exponents: exponents.to_vec(),
    }
}

fn test_points() -> Vec<(Domain, [f64; 3])> {
    let ball = Domain::ball(3, 1.0).unwrap();
    let cube = Domain::unit_cube(3).unwrap();
    vec![
        (ball.clone(), [0.0, 0.0, 0.0]),
        (ball, [1.0, 0.0, 0.0]),
        (cube.clone(), [0.5, 0.5, 0.5]),
        (cube.clone(), [0.5, 0.5, 1.0]),
        (cube.clone(), [0.5, 0.0, 0.0]),
        (cube, [0.0, 0.0, 0.0]),
    ]
}

#[test]
fn discrete_is_consistent_with_continuum() {
    let f = coordinate_sum();
    let t = 0.05;
    let params = KernelParams::with_default_eta(t).unwrap();
    let mut checks = 0;
    let mut excursions = Vec::new();
    for seed in [11u64, 12, 13] {
        let mut last: Option<(String, kinklap::sampling::SampleSet)> = None;
        for (domain, x) in test_points() {
            if last
                .as_ref()
                .map(|(id, _)| id != &domain.id())
                .unwrap_or(true)
            {
                let s = Sampler::uniform(&domain, seed).unwrap().sample(1_000_000);
                last = Some((domain.id(), s));
            }
            let samples = &last.as_ref().unwrap().1;
            let p = DensityField::uniform(&domain);
            let cont = gauss_operator(&domain, &p, &f, &x, &params, 1e-7).unwrap();
            let disc = graph_laplacian(&domain, samples, &f, &x, t).unwrap();
            checks += 1;
            let z = (disc.value - cont.value).abs() / disc.stderr;
            if z > 4.0 {
                excursions.push((seed, x, z));
            }
        }
    }
    assert_eq!(checks, 18);
    assert!(excursions.len() <= 1, "{excursions:?}");
}

#[test]
fn constant_fields_are_annihilated_by_every_evaluator() {
    let f = ScalarField::constant(3, 2.75);
    for (domain, x) in test_points() {
        let p = DensityField::uniform(&domain);
        let samples = Sampler::uniform(&domain, 3).unwrap().sample(5_000);
        for t in [0.05, 0.01] {
            let params = KernelParams::with_default_eta(t).unwrap();
            assert_eq!(
                graph_laplacian(&domain, &samples, &f, &x, t).unwrap().value,
                0.0
            );
            assert_eq!(
                gauss_operator(&domain, &p, &f, &x, &params, 1e-6)
                    .unwrap()
                    .value,
                0.0
            );
            let pred = predictor_at(&domain, &p, &f, &x, t, 1, MomentBudget::default()).unwrap();
            assert_eq!(pred.value, 0.0);
        }
    }
}

#[test]
fn scaled_columns_are_exact_products() {
    let cube = Domain::unit_cube(3).unwrap();
    let p = DensityField::uniform(&cube);
    let f = coordinate_sum();
    let samples = Sampler::uniform(&cube, 5).unwrap().sample(20_000);
    let x = [0.5, 0.0, 0.0];
    for t in [0.05, 0.0317, 0.01] {
        let params = KernelParams::with_default_eta(t).unwrap();
        let disc = graph_laplacian(&cube, &samples, &f, &x, t).unwrap();
        let cont = gauss_operator(&cube, &p, &f, &x, &params, 1e-6).unwrap();
        let pred = predictor_at(&cube, &p, &f, &x, t, 1, MomentBudget::default()).unwrap();
        let r = OperatorReport::new(
            x.to_vec(),
            params,
            Some(disc),
            Some(cont),
            Some(pred.value),
            1,
            None,
            cube.mode(),
        );
        let st = t.sqrt();
        assert_eq!(
            r.sqrt_t_discrete.unwrap().to_bits(),
            (st * disc.value).to_bits()
        );
        assert_eq!(
            r.sqrt_t_continuum.unwrap().to_bits(),
            (st * cont.value).to_bits()
        );
        assert_eq!(
            r.sqrt_t_predictor.unwrap().to_bits(),
            (st * pred.value).to_bits()
        );
    }
}

#[test]
fn localization_gap_respects_the_tail_bound() {
    let f = coordinate_sum();
    for (domain, x) in test_points() {
        let p = DensityField::uniform(&domain);
        let problem = ContinuumProblem::new(&domain, &p, &f).unwrap();
        for t in [0.05, 0.01] {
            for eta in [0.1, 0.45] {
                let params = KernelParams::new(t, eta).unwrap();
                let g = problem.gauss(&x, &params, 1e-5).unwrap();
                let l = problem.localized(&x, &params, 1e-5).unwrap();
                let bound = problem.truncation_bound(&x, &params).unwrap();
                assert!((g.value - l.value).abs() <= bound, "{x:?} t={t} eta={eta}");
            }
        }
    }
}

#[test]
fn small_eta_makes_localization_negligible() {
    let ball = Domain::ball(3, 1.0).unwrap();
    let p = DensityField::uniform(&ball);
    let f = coordinate_sum();
    let x = [1.0, 0.0, 0.0];
    let params = KernelParams::new(0.05, 0.02).unwrap();
    let g = gauss_operator(&ball, &p, &f, &x, &params, 1e-8)
        .unwrap()
        .value;
    let l = localized_operator(&ball, &p, &f, &x, &params, 1e-8)
        .unwrap()
        .value;
    assert!((g - l).abs() <= 1e-6 * g.abs(), "{g} {l}");
}

#[test]
fn cube_scaled_predictors_follow_the_normals() {
    let cube = Domain::unit_cube(3).unwrap();
    let p = DensityField::uniform(&cube);
    let f = coordinate_sum();
    let t: f64 = 0.02;
    let scaled = |x: [f64; 3]| {
        t.sqrt()
            * predictor_at(&cube, &p, &f, &x, t, 1, MomentBudget::default())
                .unwrap()
                .value
    };
    let face = scaled([0.5, 0.5, 1.0]);
    let edge = scaled([0.5, 0.0, 0.0]);
    assert!((face - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!((face + edge).abs() < 1e-12);
    // the opposite face has inward normal +e3 and flips the sign
    assert!((scaled([0.5, 0.5, 0.0]) + face).abs() < 1e-12);
}

#[test]
fn third_order_predictor_tracks_a_cubic_field_at_the_face() {
    let cube = Domain::unit_cube(3).unwrap();
    let p = DensityField::uniform(&cube);
    let f = ScalarField::polynomial(
        3,
        vec![
            mono(1.0, [1, 0, 0]),
            mono(1.0, [0, 1, 0]),
            mono(1.0, [0, 0, 1]),
            mono(1.0, [0, 0, 3]),
        ],
    )
    .unwrap();
    let x = [0.5, 0.5, 1.0];
    let t = 0.05;
    let params = KernelParams::with_default_eta(t).unwrap();
    let g = gauss_operator(&cube, &p, &f, &x, &params, 1e-8)
        .unwrap()
        .value;
    let budget = MomentBudget::default();
    let first = predictor_at(&cube, &p, &f, &x, t, 1, budget).unwrap().value;
    let third = predictor_at(&cube, &p, &f, &x, t, 3, budget).unwrap().value;
    assert!((third - g).abs() < (first - g).abs(), "{g} {first} {third}");
}

#[test]
fn half_space_cone_scaled_value_tends_to_minus_half_pi() {
    let sector = Sector::HalfSpace { nu: unit(3, 2) };
    let p = DensityField::Uniform { value: 1.0 };
    let f = ScalarField::Linear {
        a: vec![0.0, 0.0, 1.0],
    };
    let mut prev = f64::INFINITY;
    for j in [6, 10, 14] {
        let t = 2f64.powi(-j);
        let params = KernelParams::with_default_eta(t).unwrap();
        let v = euclidean_cone_operator(&sector, &p, &f, &params, 1e-9).unwrap();
        let gap = (t.sqrt() * v + std::f64::consts::FRAC_PI_2).abs();
        assert!(gap < prev, "t={t} gap={gap}");
        prev = gap;
    }
    assert!(prev < 1e-8);
}

#[test]
fn linear_field_on_the_full_cone_vanishes() {
    let sector = Sector::Full { dim: 3 };
    let p = DensityField::Uniform { value: 1.0 };
    let params = KernelParams::with_default_eta(0.01).unwrap();
    let v = euclidean_cone_operator(&sector, &p, &coordinate_sum(), &params, 1e-9).unwrap();
    assert!(v.abs() < 1e-10, "{v}");
}

/// Residual against the two-term predictor on a dyadic grid is `K √t`
/// with a good least-squares fit.
#[test]
fn cone_residual_is_order_sqrt_t() {
    let sector = Sector::HalfSpace { nu: unit(3, 2) };
    let f = ScalarField::polynomial(
        3,
        vec![
            mono(1.0, [0, 0, 1]),
            mono(0.5, [0, 0, 2]),
            mono(1.0, [2, 0, 0]),
            mono(0.3, [0, 0, 3]),
        ],
    )
    .unwrap();
    let shape =
        ScalarField::polynomial(3, vec![mono(1.0, [0, 0, 0]), mono(0.5, [0, 0, 1])]).unwrap();
    let p = DensityField::Custom {
        shape,
        normalization: 1.0,
    };
    let moments = closed_form_moments(&sector, 3).unwrap();
    let origin = [0.0; 3];
    let hess: DMatrix<f64> = f.hessian(&origin);
    let (mut h, mut r) = (Vec::new(), Vec::new());
    for j in 4..=10 {
        let t = 2f64.powi(-j);
        let params = KernelParams::new(t, 0.1).unwrap();
        let v = euclidean_cone_operator(&sector, &p, &f, &params, 1e-10).unwrap();
        let pred = asymptotic_predictor(
            &moments,
            p.value(&origin),
            &p.gradient(&origin),
            &f.gradient(&origin),
            &hess,
            t,
        )
        .unwrap();
        h.push(t.sqrt());
        r.push(v - pred);
    }
    let k =
        h.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / h.iter().map(|a| a * a).sum::<f64>();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let sse: f64 = h.iter().zip(&r).map(|(a, b)| (b - k * a).powi(2)).sum();
    let sst: f64 = r.iter().map(|b| (b - mean).powi(2)).sum();
    let r2 = 1.0 - sse / sst;
    assert!(k != 0.0 && r2 > 0.9, "K={k} R²={r2} residuals={r:?}");
    for (a, b) in h.iter().zip(&r) {
        assert!(b.abs() <= 2.0 * k.abs() * a, "{b} vs {}", k * a);
    }
}

#[test]
fn outside_points_and_bad_bandwidths_are_errors() {
    let ball = Domain::ball(3, 1.0).unwrap();
    let p = DensityField::uniform(&ball);
    let f = coordinate_sum();
    let params = KernelParams::with_default_eta(0.05).unwrap();
    assert!(gauss_operator(&ball, &p, &f, &[1.2, 0.0, 0.0], &params, 1e-6).is_err());
    assert!(KernelParams::new(0.0, 0.3).is_err());
    let samples = Sampler::uniform(&ball, 1).unwrap().sample(10);
    assert!(graph_laplacian(&ball, &samples, &f, &[0.0; 3], -1.0).is_err());
}
