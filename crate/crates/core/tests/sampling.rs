use kinklap::geometry::Domain;
use kinklap::sampling::{DensityField, Monomial, Sampler, ScalarField};
use proptest::prelude::*;

/// Wilson–Hilferty approximation of the upper 1% point of χ²_k.
fn chi_square_critical_1pct(k: f64) -> f64 {
    let z = 2.326_347_874;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

/// Two-sided Kolmogorov–Smirnov statistic against the CDF `cdf`.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

const KS_CRITICAL_1PCT: f64 = 1.628;

#[test]
fn cube_histogram_passes_chi_square() {
    let cube = Domain::unit_cube(3).unwrap();
    let n = 1_000_000;
    let samples = Sampler::uniform(&cube, 0).unwrap().sample(n);
    let mut counts = vec![0u64; 512];
    for y in samples.rows() {
        let cell = |v: f64| ((v * 8.0) as usize).min(7);
        counts[cell(y[0]) * 64 + cell(y[1]) * 8 + cell(y[2])] += 1;
    }
    let expected = n as f64 / 512.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < chi_square_critical_1pct(511.0), "χ² = {chi2}");
}

#[test]
fn ball_radii_follow_the_volume_law() {
    let ball = Domain::ball(3, 1.0).unwrap();
    let samples = Sampler::uniform(&ball, 8).unwrap().sample(100_000);
    let r: Vec<f64> = samples
        .rows()
        .map(|y| y.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let d = ks_statistic(r, |s| s.powi(3));
    assert!(d * 100_000f64.sqrt() < KS_CRITICAL_1PCT, "D = {d}");
}

#[test]
fn weighted_marginal_matches_the_density() {
    let cube = Domain::unit_cube(3).unwrap();
    let shape = ScalarField::polynomial(
        3,
        vec![
            Monomial {
                coef: 1.0,
                exponents: vec![0, 0, 0],
            },
            Monomial {
                coef: 1.0,
                exponents: vec![1, 0, 0],
            },
        ],
    )
    .unwrap();
    let p = DensityField::normalized(shape, &cube).unwrap();
    let samples = Sampler::with_density(&cube, &p, 4.0 / 3.0, 2)
        .unwrap()
        .sample(50_000);
    let xs: Vec<f64> = samples.rows().map(|y| y[0]).collect();
    let d = ks_statistic(xs, |x| (x + 0.5 * x * x) / 1.5);
    assert!(d * 50_000f64.sqrt() < KS_CRITICAL_1PCT, "D = {d}");
}

#[test]
fn samples_do_not_depend_on_the_thread_count() {
    let ball = Domain::ball(3, 1.0).unwrap();
    let sampler = Sampler::uniform(&ball, 42).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sampler.sample(50_000))
    };
    let a = run(1);
    let b = run(4);
    assert!(a
        .as_flat()
        .iter()
        .zip(b.as_flat())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.n(), b.n());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn points_lie_in_their_domain(seed in 0u64..1_000, d in 1usize..6, which in 0usize..3) {
        let domain = match which {
            0 => Domain::ball(d.max(2), 0.7).unwrap(),
            1 => Domain::boxed((1..=d).map(|i| 0.5 * i as f64).collect()).unwrap(),
            _ => Domain::cone(3, 0.6, 1.5).unwrap(),
        };
        let sampler = Sampler::uniform(&domain, seed).unwrap();
        for i in 0..200 {
            prop_assert!(domain.contains(&sampler.point(i)).unwrap());
        }
    }

    #[test]
    fn points_are_pure_functions_of_seed_and_index(seed in 0u64..1_000_000, i in 0u64..1_000_000) {
        let cube = Domain::unit_cube(3).unwrap();
        let a = Sampler::uniform(&cube, seed).unwrap();
        let b = Sampler::uniform(&cube, seed).unwrap();
        prop_assert_eq!(a.point(i), b.point(i));
        prop_assert_ne!(a.point(i), a.point(i + 1));
    }
}
