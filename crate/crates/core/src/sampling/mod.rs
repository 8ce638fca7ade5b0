//! Seeded i.i.d. samplers on domains and the scalar fields evaluated on them.
//!
//! Point `i` of a sample is a pure function of `(seed, i)`: it is drawn from
//! its own counter stream, so any index range can be generated independently
//! and in parallel with bitwise identical results.

mod field;
mod io;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use field::{
    CustomField, DensityField, GradientFn, HessianFn, Monomial, ScalarField, TensorFn,
};
pub use io::{read_binary, read_csv, write_binary, write_csv};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Shape};
use crate::par::map_indexed;
use crate::rng::stream;
use crate::sector_moments::sphere_direction;
use crate::summation::{block_count, block_range};

/// Lowest rejection acceptance rate accepted before asking for a tighter box.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
const ENVELOPE_PROBES: usize = 100_000;

/// `n` points in ℝ^d stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    dim: usize,
    pub domain_id: String,
    pub density_id: String,
    pub seed: u64,
}

impl SampleSet {
    pub fn from_rows(
        dim: usize,
        points: Vec<f64>,
        domain_id: impl Into<String>,
        density_id: impl Into<String>,
        seed: u64,
    ) -> Result<SampleSet> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::Argument(
                "point buffer length is not a multiple of d".into(),
            ));
        }
        Ok(SampleSet {
            points,
            dim,
            domain_id: domain_id.into(),
            density_id: density_id.into(),
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy)]
enum Method {
    Ball(f64),
    Box,
    Rejection,
}

/// Index-addressable sampler for a density on a domain.
#[derive(Debug, Clone)]
pub struct Sampler {
    domain: Domain,
    density: Option<(DensityField, f64)>,
    seed: u64,
    method: Method,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Sampler {
    /// Uniform sampler: exact for balls and boxes, bounding-box rejection otherwise.
    pub fn uniform(domain: &Domain, seed: u64) -> Result<Sampler> {
        let (lower, upper) = domain.bounding_box();
        let method = match domain.shape() {
            Shape::Ball { radius } => Method::Ball(*radius),
            Shape::Box { .. } => Method::Box,
            _ => {
                let rate = domain.volume() / box_volume(&lower, &upper);
                if rate < MIN_ACCEPTANCE {
                    return Err(Error::LowAcceptance { rate });
                }
                Method::Rejection
            }
        };
        Ok(Sampler {
            domain: domain.clone(),
            density: None,
            seed,
            method,
            lower,
            upper,
        })
    }

    /// Accept/reject sampler for `density` under the constant `envelope ≥ sup p`.
    pub fn with_density(
        domain: &Domain,
        density: &DensityField,
        envelope: f64,
        seed: u64,
    ) -> Result<Sampler> {
        if !(envelope > 0.0 && envelope.is_finite()) {
            return Err(Error::Argument(
                "envelope must be positive and finite".into(),
            ));
        }
        let base = Sampler::uniform(domain, seed)?;
        let rate = 1.0 / (envelope * box_volume(&base.lower, &base.upper));
        if rate < MIN_ACCEPTANCE {
            return Err(Error::LowAcceptance { rate });
        }
        // probes come from an independent stream so they never alias sample draws
        let probe = Sampler::uniform(domain, crate::rng::mix(seed, 0x0E7E_109E))?;
        for i in 0..ENVELOPE_PROBES {
            let x = probe.point(i as u64);
            let p = density.value(&x);
            if !(p >= 0.0) {
                return Err(Error::Argument(format!(
                    "density is negative ({p}) at {x:?}"
                )));
            }
            if p > envelope {
                return Err(Error::Argument(format!(
                    "envelope {envelope} violated: p = {p} at {x:?}"
                )));
            }
        }
        Ok(Sampler {
            density: Some((density.clone(), envelope)),
            ..base
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The same sampler drawing from another seed.
    pub fn reseeded(&self, seed: u64) -> Sampler {
        Sampler {
            seed,
            ..self.clone()
        }
    }

    pub fn density_id(&self) -> String {
        match &self.density {
            None => DensityField::uniform(&self.domain).id(),
            Some((p, _)) => p.id(),
        }
    }

    /// Point number `index`; a pure function of `(seed, index)`.
    pub fn point(&self, index: u64) -> Vec<f64> {
        let mut rng = stream(self.seed, index);
        let mut out = vec![0.0; self.domain.dim()];
        loop {
            self.uniform_into(&mut rng, &mut out);
            match &self.density {
                None => return out,
                Some((p, envelope)) => {
                    if rng.gen::<f64>() * envelope <= p.value(&out) {
                        return out;
                    }
                }
            }
        }
    }

    fn uniform_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let d = out.len();
        match self.method {
            Method::Ball(radius) => {
                sphere_direction(rng, out);
                let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
                out.iter_mut().for_each(|v| *v *= r);
            }
            Method::Box => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = self.upper[i] * rng.gen::<f64>();
                }
            }
            Method::Rejection => loop {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = rng.gen_range(self.lower[i]..=self.upper[i]);
                }
                if self.domain.contains_unchecked(out) {
                    return;
                }
            },
        }
    }

    /// Points `0..n` gathered into a sample set.
    pub fn sample(&self, n: usize) -> SampleSet {
        let d = self.domain.dim();
        let blocks = map_indexed(block_count(n), |b| {
            let mut buf = Vec::with_capacity(block_range(b, n).len() * d);
            for i in block_range(b, n) {
                buf.extend(self.point(i as u64));
            }
            buf
        });
        SampleSet {
            points: blocks.concat(),
            dim: d,
            domain_id: self.domain.id(),
            density_id: self.density_id(),
            seed: self.seed,
        }
    }
}

fn box_volume(lower: &[f64], upper: &[f64]) -> f64 {
    lower.iter().zip(upper).map(|(l, u)| u - l).product()
}

/// `n` i.i.d. uniform points on `domain`.
pub fn sample_uniform(domain: &Domain, n: usize, seed: u64) -> Result<SampleSet> {
    Ok(Sampler::uniform(domain, seed)?.sample(n))
}

/// `n` i.i.d. points from `density` by rejection against `envelope`.
pub fn rejection_sample(
    domain: &Domain,
    density: &DensityField,
    n: usize,
    seed: u64,
    envelope: f64,
) -> Result<SampleSet> {
    Ok(Sampler::with_density(domain, density, envelope, seed)?.sample(n))
}
