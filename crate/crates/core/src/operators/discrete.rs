use crate::error::{check_dim, Error, Result};
use crate::geometry::{Distance, DistanceMode, Domain};
use crate::par::map_indexed;
use crate::sampling::{SampleSet, Sampler, ScalarField};
use crate::summation::{block_count, block_range, pairwise, NeumaierSum};

/// Graph Laplacian value with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub mode: DistanceMode,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    sum: NeumaierSum,
    sq: NeumaierSum,
}

fn combine(a: &Moments, b: &Moments) -> Moments {
    Moments {
        sum: a.sum + b.sum,
        sq: a.sq + b.sq,
    }
}

fn check(domain: &Domain, x: &[f64], t: f64) -> Result<()> {
    check_dim(domain.dim(), x.len())?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!(
            "bandwidth must be positive, got {t}"
        )));
    }
    // refuses intrinsic distances where they would differ from Euclidean ones
    domain.intrinsic_distance(x, x).map(|_: Distance| ())
}

/// `(1/(n t^{d/2+1})) Σ_j e^{-|x-X_j|²/t} (f(x) - f(X_j))`.
///
/// Summands are accumulated with compensation inside fixed blocks of 4096
/// and the blocks are reduced by a fixed pairwise tree, so the result does
/// not depend on the number of worker threads.
pub fn graph_laplacian(
    domain: &Domain,
    samples: &SampleSet,
    f: &ScalarField,
    x: &[f64],
    t: f64,
) -> Result<DiscreteEstimate> {
    check(domain, x, t)?;
    check_dim(domain.dim(), samples.dim())?;
    let n = samples.n();
    if n == 0 {
        return Err(Error::Argument("graph Laplacian of an empty sample".into()));
    }
    let fx = f.value(x);
    let blocks = map_indexed(block_count(n), |b| {
        let mut m = Moments::default();
        for i in block_range(b, n) {
            accumulate(&mut m, samples.point(i), x, fx, f, t);
        }
        m
    });
    Ok(finish(&blocks, n, domain, t))
}

/// Same estimator over points `0..n` of `sampler`, generated block by block
/// so that the sample is never held in memory.
pub fn graph_laplacian_streaming(
    sampler: &Sampler,
    n: usize,
    f: &ScalarField,
    x: &[f64],
    t: f64,
) -> Result<DiscreteEstimate> {
    let domain = sampler.domain();
    check(domain, x, t)?;
    if n == 0 {
        return Err(Error::Argument("graph Laplacian of an empty sample".into()));
    }
    let fx = f.value(x);
    let blocks = map_indexed(block_count(n), |b| {
        let mut m = Moments::default();
        for i in block_range(b, n) {
            accumulate(&mut m, &sampler.point(i as u64), x, fx, f, t);
        }
        m
    });
    Ok(finish(&blocks, n, domain, t))
}

/// Per-trial summand `e^{-|x-X|²/t} (f(x) - f(X))`.
#[inline]
pub fn kernel_summand(y: &[f64], x: &[f64], fx: f64, f: &ScalarField, t: f64) -> f64 {
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let diff = fx - f.value(y);
    if diff == 0.0 {
        0.0
    } else {
        (-r2 / t).exp() * diff
    }
}

#[inline]
fn accumulate(m: &mut Moments, y: &[f64], x: &[f64], fx: f64, f: &ScalarField, t: f64) {
    let s = kernel_summand(y, x, fx, f, t);
    m.sum += s;
    m.sq += s * s;
}

fn finish(blocks: &[Moments], n: usize, domain: &Domain, t: f64) -> DiscreteEstimate {
    let total = pairwise(blocks, &combine).expect("n > 0 gives at least one block");
    let nf = n as f64;
    let scale = t.powf(domain.dim() as f64 / 2.0 + 1.0);
    let mean = total.sum.value() / nf;
    let var = if n > 1 {
        ((total.sq.value() - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    DiscreteEstimate {
        value: mean / scale,
        stderr: var.sqrt() / (scale * nf.sqrt()),
        n,
        mode: domain.mode(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_uniform;

    #[test]
    fn constant_field_is_annihilated() {
        let ball = Domain::ball(3, 1.0).unwrap();
        let s = sample_uniform(&ball, 10_000, 1).unwrap();
        let est = graph_laplacian(
            &ball,
            &s,
            &ScalarField::constant(3, 2.5),
            &[0.3, 0.0, 0.0],
            0.05,
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn single_coincident_point() {
        let cube = Domain::unit_cube(2).unwrap();
        let x = [0.25, 0.75];
        let s = SampleSet::from_rows(2, x.to_vec(), "cube", "uniform", 0).unwrap();
        let est =
            graph_laplacian(&cube, &s, &ScalarField::CoordinateSum { dim: 2 }, &x, 0.1).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn streaming_matches_materialized() {
        let cube = Domain::unit_cube(3).unwrap();
        let sampler = Sampler::uniform(&cube, 21).unwrap();
        let s = sampler.sample(9_000);
        let f = ScalarField::CoordinateSum { dim: 3 };
        let x = [0.5, 0.5, 1.0];
        let a = graph_laplacian(&cube, &s, &f, &x, 0.05).unwrap();
        let b = graph_laplacian_streaming(&sampler, 9_000, &f, &x, 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argument_errors() {
        let cube = Domain::unit_cube(3).unwrap();
        let s = sample_uniform(&cube, 10, 1).unwrap();
        let f = ScalarField::CoordinateSum { dim: 3 };
        assert!(graph_laplacian(&cube, &s, &f, &[0.5; 3], 0.0).is_err());
        assert!(matches!(
            graph_laplacian(&cube, &s, &f, &[0.5; 2], 0.1),
            Err(Error::Dimension { .. })
        ));
        let cusp = Domain::cusp(3, 0.5).unwrap();
        let cs = sample_uniform(&cusp, 10, 1).unwrap();
        assert!(matches!(
            graph_laplacian(&cusp, &cs, &f, &[0.0, 0.0, 1.0], 0.1),
            Err(Error::Unsupported(_))
        ));
    }
}
