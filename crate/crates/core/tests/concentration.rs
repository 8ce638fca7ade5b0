use kinklap::concentration::{
    check_as_condition, check_probability_condition, deviation_experiment, estimate_tail_alpha,
    synthetic_draws, BandwidthSchedule, Verdict, ALPHA_GRID, BOUNDED_NOTE, DEVIATION_HEADER,
};
use kinklap::geometry::Domain;
use kinklap::operators::{kernel_summand, ContinuumProblem, KernelParams};
use kinklap::sampling::{DensityField, Sampler, ScalarField};
use proptest::prelude::*;

#[test]
fn centered_summands_have_zero_mean() {
    let cube = Domain::unit_cube(3).unwrap();
    let p = DensityField::uniform(&cube);
    let f = ScalarField::CoordinateSum { dim: 3 };
    let problem = ContinuumProblem::new(&cube, &p, &f).unwrap();
    let samples = Sampler::uniform(&cube, 31).unwrap().sample(200_000);
    for x in [[0.5, 0.5, 0.5], [0.5, 0.5, 1.0], [0.0, 0.0, 0.0]] {
        for t in [0.05, 0.02] {
            let params = KernelParams::with_default_eta(t).unwrap();
            let lt = problem.gauss(&x, &params, 1e-7).unwrap().value;
            let shift = t.powf(2.5) * lt;
            let fx = f.value(&x);
            let z: Vec<f64> = samples
                .rows()
                .map(|y| kernel_summand(y, &x, fx, &f, t) - shift)
                .collect();
            let n = z.len() as f64;
            let mean = z.iter().sum::<f64>() / n;
            let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!(mean.abs() <= 4.0 * se, "{x:?} t={t}: {mean} ± {se}");
        }
    }
}

#[test]
fn bounded_field_reports_the_subgaussian_note() {
    let cube = Domain::unit_cube(3).unwrap();
    let f = ScalarField::CoordinateSum { dim: 3 };
    let samples = Sampler::uniform(&cube, 5).unwrap().sample(20_000);
    let values: Vec<f64> = samples.rows().map(|y| f.value(y)).collect();
    let tail = estimate_tail_alpha(&values, &ALPHA_GRID).unwrap();
    assert_eq!(tail.alpha, 2.0);
    assert_eq!(tail.note.as_deref(), Some(BOUNDED_NOTE));
}

#[test]
fn single_trial_tables_are_well_formed() {
    let cube = Domain::unit_cube(3).unwrap();
    let p = DensityField::uniform(&cube);
    let f = ScalarField::CoordinateSum { dim: 3 };
    let problem = ContinuumProblem::new(&cube, &p, &f).unwrap();
    let sampler = Sampler::uniform(&cube, 1).unwrap();
    let schedule = BandwidthSchedule::power_law(1.0, 0.25, 3).unwrap();
    let table = deviation_experiment(
        &problem,
        &sampler,
        &[0.5; 3],
        &schedule,
        &[1_000, 4_000],
        1,
        0.3,
        1e-6,
        3,
    )
    .unwrap();
    assert!(table.schedule_warning);
    for r in &table.rows {
        assert_eq!(r.q50, r.q90);
        assert_eq!(r.q90, r.q99);
        assert_eq!(r.condition1, Verdict::Fails);
    }
    let csv = table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(DEVIATION_HEADER));
    assert_eq!(lines.count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn almost_sure_condition_implies_probability_condition(
        c0 in 0.01f64..0.99,
        beta in 0.01f64..0.6,
        alpha in 0.05f64..2.0,
        d in 1usize..9,
    ) {
        let s = BandwidthSchedule::power_law(c0, beta, d).unwrap();
        if check_as_condition(&s, alpha).unwrap().holds() {
            prop_assert!(check_probability_condition(&s).holds());
        }
        let boundary = BandwidthSchedule::power_law(c0, 1.0 / (d as f64 + 2.0), d).unwrap();
        prop_assert!(!check_probability_condition(&boundary).holds());
        prop_assert!(!check_as_condition(&boundary, alpha).unwrap().holds());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tail_exponent_ignores_translation(
        law in prop::sample::select(vec!["exponential", "gaussian", "uniform"]),
        seed in 0u64..1_000,
        shift in -10.0f64..10.0,
    ) {
        let z = synthetic_draws(law, 20_000, seed).unwrap();
        let moved: Vec<f64> = z.iter().map(|v| v - shift).collect();
        let a = estimate_tail_alpha(&z, &ALPHA_GRID).unwrap();
        let b = estimate_tail_alpha(&moved, &ALPHA_GRID).unwrap();
        prop_assert_eq!(a.alpha, b.alpha);
    }
}

#[test]
fn fixed_shift_from_the_closure_example() {
    let z = synthetic_draws("exponential", 50_000, 77).unwrap();
    let moved: Vec<f64> = z.iter().map(|v| v - 7.3).collect();
    let a = estimate_tail_alpha(&z, &ALPHA_GRID).unwrap();
    let b = estimate_tail_alpha(&moved, &ALPHA_GRID).unwrap();
    assert_eq!(a.alpha, b.alpha);
    assert!((0.8..=1.2).contains(&a.alpha), "{a:?}");
}
