//! Measure, first moment and second-moment matrix of a sector of the unit
//! sphere, plus higher mixed moments of derivative tensors.
//!
//! Closed-form sectors (full sphere, half-space, orthogonal orthant) are
//! handled exactly: after rotating into a frame whose leading vectors are the
//! sector's normals, every monomial moment factorizes into Gamma functions.
//! Predicate sectors fall back to seeded Monte Carlo on the sphere.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Sector;
use crate::linalg::{complete_basis, unit};
use crate::par::map_indexed;
use crate::rng::stream;
use crate::specfun::{ln_gamma, sphere_area};
use crate::summation::{block_count, block_range, pairwise};

/// Where a set of moments came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    ClosedForm,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Per-entry standard errors; all zero for closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentErrors {
    pub measure: f64,
    pub first_moment: DVector<f64>,
    pub second_moment: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorMoments {
    pub measure: f64,
    pub first_moment: DVector<f64>,
    pub second_moment: DMatrix<f64>,
    pub stderr: MomentErrors,
    pub source: MomentSource,
    /// Set when no Monte Carlo sample fell into the sector.
    pub degenerate: bool,
}

impl SectorMoments {
    pub fn dim(&self) -> usize {
        self.first_moment.len()
    }

    /// `⟨H, M⟩ = Σ H_ab M_ab`.
    pub fn contract_second(&self, h: &DMatrix<f64>) -> f64 {
        self.second_moment.component_mul(h).sum()
    }

    /// `aᵀ M b`.
    pub fn bilinear(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.second_moment * b)[(0, 0)]
    }

    /// One CSV row per entry: `quantity,i,j,value,stderr`.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("quantity,i,j,value,stderr\n");
        out.push_str(&format!(
            "measure,,,{:.17e},{:.17e}\n",
            self.measure, self.stderr.measure
        ));
        for i in 0..d {
            out.push_str(&format!(
                "first_moment,{i},,{:.17e},{:.17e}\n",
                self.first_moment[i], self.stderr.first_moment[i]
            ));
        }
        for i in 0..d {
            for j in 0..d {
                out.push_str(&format!(
                    "second_moment,{i},{j},{:.17e},{:.17e}\n",
                    self.second_moment[(i, j)],
                    self.stderr.second_moment[(i, j)]
                ));
            }
        }
        out
    }
}

/// Frame whose first `k` vectors are the sector's normals, with `k`.
fn sector_frame(sector: &Sector) -> Result<(Vec<Vec<f64>>, usize)> {
    let d = sector.dim();
    match sector {
        Sector::Full { .. } => Ok(((0..d).map(|i| unit(d, i)).collect(), 0)),
        Sector::HalfSpace { nu } => Ok((complete_basis(std::slice::from_ref(nu), d), 1)),
        Sector::Orthant { normals } => {
            for (i, a) in normals.iter().enumerate() {
                if (crate::linalg::norm(a) - 1.0).abs() > 1e-12
                    || normals[i + 1..]
                        .iter()
                        .any(|b| crate::linalg::dot(a, b).abs() > 1e-12)
                {
                    return Err(Error::Argument(
                        "orthant normals must be orthonormal".into(),
                    ));
                }
            }
            Ok((complete_basis(normals, d), normals.len()))
        }
        Sector::Predicate { .. } => Err(Error::NoClosedForm),
    }
}

/// `∫ θ^α dσ` over `{θ_i ≥ 0, i < k}` in frame coordinates.
fn monomial_moment(alpha: &[u32], k: usize) -> f64 {
    let d = alpha.len();
    if alpha[k..].iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let total: u32 = alpha.iter().sum();
    let ln: f64 = alpha
        .iter()
        .map(|&a| ln_gamma((a as f64 + 1.0) / 2.0))
        .sum::<f64>()
        - ln_gamma((total as f64 + d as f64) / 2.0);
    2.0 * 0.5f64.powi(k as i32) * ln.exp()
}

/// Closed-form moments of a full, half-space or orthant sector.
pub fn closed_form_moments(sector: &Sector, d: usize) -> Result<SectorMoments> {
    check_dim(d, sector.dim())?;
    let (frame, k) = sector_frame(sector)?;
    let f = DMatrix::from_fn(d, d, |r, c| frame[c][r]);
    let mut first_local = DVector::zeros(d);
    let mut second_local = DMatrix::zeros(d, d);
    let mut alpha = vec![0u32; d];
    let measure = monomial_moment(&alpha, k);
    for i in 0..d {
        alpha[i] = 1;
        first_local[i] = monomial_moment(&alpha, k);
        alpha[i] = 0;
    }
    for i in 0..d {
        for j in 0..d {
            alpha[i] += 1;
            alpha[j] += 1;
            second_local[(i, j)] = monomial_moment(&alpha, k);
            alpha[i] -= 1;
            alpha[j] -= 1;
        }
    }
    let mut second = &f * second_local * f.transpose();
    // symmetrize away rounding from the rotation
    second = 0.5 * (&second + second.transpose());
    if k == 0 {
        debug_assert!((measure - sphere_area(d)).abs() <= 1e-12 * measure);
    }
    Ok(SectorMoments {
        measure,
        first_moment: &f * first_local,
        second_moment: second,
        stderr: zero_errors(d),
        source: MomentSource::ClosedForm,
        degenerate: false,
    })
}

fn zero_errors(d: usize) -> MomentErrors {
    MomentErrors {
        measure: 0.0,
        first_moment: DVector::zeros(d),
        second_moment: DMatrix::zeros(d, d),
    }
}

/// Uniform direction on S^{d-1} by normalizing a standard Gaussian vector.
pub(crate) fn sphere_direction<R: rand::Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
            s += *v * *v;
        }
        if s > 0.0 {
            let inv = 1.0 / s.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Seeded Monte Carlo moments.
///
/// Sample `s` lives in block `s / 4096`, and each block draws from its own
/// counter stream of `seed`, so the estimate does not depend on how blocks
/// are scheduled across threads.
pub fn monte_carlo_moments(
    sector: &Sector,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<SectorMoments> {
    check_dim(d, sector.dim())?;
    if samples < 1000 {
        return Err(Error::Argument(
            "Monte Carlo moments need at least 1000 samples".into(),
        ));
    }
    // layout: [count, first (d), upper-triangular second (d(d+1)/2)]; sums then sums of squares
    let width = 1 + d + d * (d + 1) / 2;
    let blocks = map_indexed(block_count(samples), |b| {
        let mut rng = stream(seed, b as u64);
        let mut acc = vec![0.0; 2 * width];
        let mut theta = vec![0.0; d];
        for _ in block_range(b, samples) {
            sphere_direction(&mut rng, &mut theta);
            if !sector.contains(&theta) {
                continue;
            }
            acc[0] += 1.0;
            acc[width] += 1.0;
            let mut idx = 1;
            for i in 0..d {
                acc[idx] += theta[i];
                acc[width + idx] += theta[i] * theta[i];
                idx += 1;
            }
            for i in 0..d {
                for j in i..d {
                    let v = theta[i] * theta[j];
                    acc[idx] += v;
                    acc[width + idx] += v * v;
                    idx += 1;
                }
            }
        }
        acc
    });
    let total = pairwise(&blocks, &|a: &Vec<f64>, b: &Vec<f64>| {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    })
    .expect("at least one block");

    let n = samples as f64;
    let area = sphere_area(d);
    let mean = |i: usize| total[i] / n;
    let err = |i: usize| {
        let m = mean(i);
        let var = (total[width + i] / n - m * m).max(0.0);
        area * (var / (n - 1.0)).sqrt()
    };
    let source = MomentSource::MonteCarlo { samples, seed };
    if total[0] == 0.0 {
        return Ok(SectorMoments {
            measure: 0.0,
            first_moment: DVector::zeros(d),
            second_moment: DMatrix::zeros(d, d),
            stderr: zero_errors(d),
            source,
            degenerate: true,
        });
    }
    let mut first = DVector::zeros(d);
    let mut first_err = DVector::zeros(d);
    for i in 0..d {
        first[i] = area * mean(1 + i);
        first_err[i] = err(1 + i);
    }
    let mut second = DMatrix::zeros(d, d);
    let mut second_err = DMatrix::zeros(d, d);
    let mut idx = 1 + d;
    for i in 0..d {
        for j in i..d {
            second[(i, j)] = area * mean(idx);
            second[(j, i)] = second[(i, j)];
            second_err[(i, j)] = err(idx);
            second_err[(j, i)] = second_err[(i, j)];
            idx += 1;
        }
    }
    Ok(SectorMoments {
        measure: area * mean(0),
        first_moment: first,
        second_moment: second,
        stderr: MomentErrors {
            measure: err(0),
            first_moment: first_err,
            second_moment: second_err,
        },
        source,
        degenerate: false,
    })
}

/// Moments by closed form when available, Monte Carlo otherwise.
pub fn sector_moments(
    sector: &Sector,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<SectorMoments> {
    match closed_form_moments(sector, d) {
        Err(Error::NoClosedForm) => monte_carlo_moments(sector, d, samples, seed),
        other => other,
    }
}

/// Dense multilinear form on ℝ^d of a given order, stored row-major with
/// `d^order` entries. Order 0 is a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dim: usize,
    order: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dim: usize, order: usize, data: Vec<f64>) -> Result<Tensor> {
        if data.len() != dim.pow(order as u32) {
            return Err(Error::Argument(format!(
                "tensor of order {order} in dimension {dim} needs {} entries, got {}",
                dim.pow(order as u32),
                data.len()
            )));
        }
        Ok(Tensor { dim, order, data })
    }

    pub fn scalar(dim: usize, value: f64) -> Tensor {
        Tensor {
            dim,
            order: 0,
            data: vec![value],
        }
    }

    pub fn from_vector(v: &[f64]) -> Tensor {
        Tensor {
            dim: v.len(),
            order: 1,
            data: v.to_vec(),
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Tensor {
        let d = m.nrows();
        Tensor {
            dim: d,
            order: 2,
            data: (0..d * d).map(|k| m[(k / d, k % d)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `T(θ, …, θ)`.
    pub fn apply(&self, theta: &[f64]) -> f64 {
        let mut cur = self.data.clone();
        for _ in 0..self.order {
            let rows = cur.len() / self.dim;
            cur = (0..rows)
                .map(|r| {
                    (0..self.dim)
                        .map(|c| cur[r * self.dim + c] * theta[c])
                        .sum()
                })
                .collect();
        }
        cur[0]
    }

    /// Components in an orthonormal `frame`: `T'(i…) = T(F_i, …)`.
    fn rotated(&self, frame: &[Vec<f64>]) -> Tensor {
        let d = self.dim;
        let mut cur = self.data.clone();
        // contract one slot at a time; each pass moves the rotated slot to the front
        for _ in 0..self.order {
            let rest = cur.len() / d;
            let mut next = vec![0.0; cur.len()];
            for (i, f) in frame.iter().enumerate() {
                for r in 0..rest {
                    let mut s = 0.0;
                    for (c, fc) in f.iter().enumerate() {
                        s += cur[r * d + c] * fc;
                    }
                    next[i * rest + r] = s;
                }
            }
            cur = next;
        }
        Tensor {
            dim: d,
            order: self.order,
            data: cur,
        }
    }
}

/// Mixed moment with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedMoment {
    pub value: f64,
    pub stderr: f64,
}

/// `∫_S d^i f(θ^{(i)}) d^j p(θ^{(j)}) dσ(θ)` for `1 ≤ i ≤ 4`, `0 ≤ j ≤ 3`.
///
/// Exact on closed-form sectors at every order (each monomial moment has a
/// Gamma-function closed form); Monte Carlo with `samples`/`seed` on
/// predicate sectors.
pub fn mixed_moment(
    sector: &Sector,
    f_deriv: &Tensor,
    p_deriv: &Tensor,
    samples: usize,
    seed: u64,
) -> Result<MixedMoment> {
    let d = sector.dim();
    check_dim(d, f_deriv.dim())?;
    check_dim(d, p_deriv.dim())?;
    let (i, j) = (f_deriv.order(), p_deriv.order());
    if !(1..=4).contains(&i) || j > 3 {
        return Err(Error::Argument(format!(
            "unsupported derivative orders ({i}, {j})"
        )));
    }
    match sector_frame(sector) {
        Ok((frame, k)) => {
            let fr = f_deriv.rotated(&frame);
            let pr = p_deriv.rotated(&frame);
            let mut value = 0.0;
            let mut alpha = vec![0u32; d];
            for (a, &fa) in fr.data.iter().enumerate() {
                if fa == 0.0 {
                    continue;
                }
                add_indices(&mut alpha, a, d, i, 1);
                for (b, &pb) in pr.data.iter().enumerate() {
                    if pb == 0.0 {
                        continue;
                    }
                    add_indices(&mut alpha, b, d, j, 1);
                    value += fa * pb * monomial_moment(&alpha, k);
                    add_indices(&mut alpha, b, d, j, -1);
                }
                add_indices(&mut alpha, a, d, i, -1);
            }
            Ok(MixedMoment { value, stderr: 0.0 })
        }
        Err(Error::NoClosedForm) => {
            if samples < 1000 {
                return Err(Error::Argument(
                    "Monte Carlo needs at least 1000 samples".into(),
                ));
            }
            let blocks = map_indexed(block_count(samples), |b| {
                let mut rng = stream(seed, b as u64);
                let mut theta = vec![0.0; d];
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in block_range(b, samples) {
                    sphere_direction(&mut rng, &mut theta);
                    if sector.contains(&theta) {
                        let v = f_deriv.apply(&theta) * p_deriv.apply(&theta);
                        s += v;
                        s2 += v * v;
                    }
                }
                (s, s2)
            });
            let (s, s2) = pairwise(&blocks, &|a: &(f64, f64), b: &(f64, f64)| {
                (a.0 + b.0, a.1 + b.1)
            })
            .expect("at least one block");
            let n = samples as f64;
            let area = sphere_area(d);
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0);
            Ok(MixedMoment {
                value: area * mean,
                stderr: area * (var / (n - 1.0)).sqrt(),
            })
        }
        Err(e) => Err(e),
    }
}

/// Adds `sign` to the exponent of every index in the flat multi-index `flat`.
fn add_indices(alpha: &mut [u32], mut flat: usize, d: usize, order: usize, sign: i32) {
    for _ in 0..order {
        let idx = flat % d;
        flat /= d;
        alpha[idx] = (alpha[idx] as i32 + sign) as u32;
    }
}
