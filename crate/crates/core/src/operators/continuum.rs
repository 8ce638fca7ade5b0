//! The continuum operator `L_t` by iterated quadrature in the rescaled
//! coordinates `z = (y - x)/√t`, where
//! `L_t f(x) = (1/t) ∫ e^{-|z|²} (f(x) - f(x + √t z)) p(x + √t z) dz`.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Domain, Sector};
use crate::linalg::{complete_basis, from_frame, unit};
use crate::quadrature::{integrate_nested, integrate_nested_pieces, Estimate};
use crate::sampling::{DensityField, ScalarField};
use crate::specfun::localization_tail_bound;

use super::KernelParams;

/// Rescaled radius beyond which the Gaussian weight is below `e^{-49}`; the
/// neglected tail is bounded and added to the quadrature error.
pub const CUTOFF_RADIUS: f64 = 7.0;

/// Quadrature value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumEstimate {
    pub value: f64,
    /// Quadrature error estimate plus any bounded cut-off tail.
    pub quad_error: f64,
    /// Localization tail bound at the run's `η`.
    pub truncation_bound: f64,
}

/// A domain, density and field with the global integrals needed by the
/// localization bound computed once.
#[derive(Debug, Clone)]
pub struct ContinuumProblem {
    pub domain: Domain,
    pub density: DensityField,
    pub f: ScalarField,
    /// `∫ p` over the domain.
    pub mass: f64,
    /// Upper estimate of `∫ |f| p` over the domain.
    pub f_l1: f64,
}

impl ContinuumProblem {
    pub fn new(
        domain: &Domain,
        density: &DensityField,
        f: &ScalarField,
    ) -> Result<ContinuumProblem> {
        check_dim(domain.dim(), f.dim())?;
        let limits = |p: &[f64]| domain.section(p);
        let rough = 1e-7 * domain.volume();
        let mass = match density {
            DensityField::Uniform { value } => value * domain.volume(),
            DensityField::Custom { .. } => {
                let est =
                    integrate_nested(domain.dim(), &limits, &|y: &[f64]| density.value(y), rough);
                est.value + est.error
            }
        };
        let est = integrate_nested(
            domain.dim(),
            &limits,
            &|y: &[f64]| f.value(y).abs() * density.value(y),
            rough,
        );
        Ok(ContinuumProblem {
            domain: domain.clone(),
            density: density.clone(),
            f: f.clone(),
            mass,
            f_l1: est.value + est.error.max(1e-9 * est.value.abs()),
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.domain.dim(), x.len())?;
        if !self.domain.contains(x)? {
            return Err(Error::OutsideDomain);
        }
        self.domain.intrinsic_distance(x, x).map(|_| ())
    }

    /// `(|f(x)| μ(M) + ‖f‖₁) t^{-d/2-1} e^{-t^{2η-1}}`.
    pub fn truncation_bound(&self, x: &[f64], params: &KernelParams) -> Result<f64> {
        localization_tail_bound(
            self.f.value(x),
            self.mass,
            self.f_l1,
            params.t,
            params.eta,
            self.domain.dim(),
        )
    }

    /// Bound on the part of the integral outside rescaled radius `r`.
    fn tail_beyond(&self, x: &[f64], t: f64, r: f64) -> f64 {
        let d = self.domain.dim() as f64;
        let a = self.f.value(x).abs() * self.mass + self.f_l1;
        if a == 0.0 {
            return 0.0;
        }
        (a.ln() - (d / 2.0 + 1.0) * t.ln() - r * r).exp()
    }

    /// Absolute error target for a relative tolerance: the integrand's size
    /// at unit rescaled distance, times the Gaussian mass.
    fn scale(&self, x: &[f64], t: f64) -> f64 {
        let d = self.domain.dim();
        let fx = self.f.value(x);
        let st = t.sqrt();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for sign in [-1.0, 1.0] {
                let mut y = x.to_vec();
                y[i] += sign * st;
                if self.domain.contains_unchecked(&y) {
                    m = m.max(((fx - self.f.value(&y)) * self.density.value(&y)).abs());
                }
            }
        }
        m.max(self.density.value(x).abs() * st * crate::linalg::norm(&self.f.gradient(x)))
            * std::f64::consts::PI.powf(d as f64 / 2.0)
            / t
    }

    /// Integral over `{r_in ≤ |z| ≤ r_out}` intersected with the rescaled domain.
    fn shell(&self, x: &[f64], t: f64, r_in: f64, r_out: f64, abs_tol: f64) -> Estimate {
        let d = self.domain.dim();
        let st = t.sqrt();
        let fx = self.f.value(x);
        let limits = |zp: &[f64]| -> Vec<(f64, f64)> {
            let m = zp.len();
            let s: f64 = zp.iter().map(|v| v * v).sum();
            let outer2 = r_out * r_out - s;
            if outer2 <= 0.0 {
                return Vec::new();
            }
            let yp: Vec<f64> = zp.iter().zip(x).map(|(z, xi)| xi + st * z).collect();
            let Some((a, b)) = self.domain.section(&yp) else {
                return Vec::new();
            };
            let outer = outer2.sqrt();
            let lo = ((a - x[m]) / st).max(-outer);
            let hi = ((b - x[m]) / st).min(outer);
            if !(hi > lo) {
                return Vec::new();
            }
            let inner2 = r_in * r_in - s;
            if inner2 <= 0.0 {
                return vec![(lo, hi)];
            }
            let inner = inner2.sqrt();
            let mut pieces = Vec::with_capacity(3);
            let mut push = |a: f64, b: f64| {
                if b > a {
                    pieces.push((a, b));
                }
            };
            push(lo, hi.min(-inner));
            if m + 1 < d {
                // keep the hole as its own piece so each piece is smooth
                push(lo.max(-inner), hi.min(inner));
            }
            push(lo.max(inner), hi);
            pieces
        };
        let integrand = |z: &[f64]| -> f64 {
            if m_last_inside_hole(z, r_in) {
                return 0.0;
            }
            let r2: f64 = z.iter().map(|v| v * v).sum();
            let y: Vec<f64> = z.iter().zip(x).map(|(z, xi)| xi + st * z).collect();
            let diff = fx - self.f.value(&y);
            if diff == 0.0 {
                return 0.0;
            }
            (-r2).exp() * diff * self.density.value(&y) / t
        };
        integrate_nested_pieces(d, &limits, &integrand, abs_tol)
    }

    /// Truncated integral over `B_{t^η}(x)`.
    pub fn localized(
        &self,
        x: &[f64],
        params: &KernelParams,
        tol: f64,
    ) -> Result<ContinuumEstimate> {
        self.check_point(x)?;
        let t = params.t;
        let est = self.shell(x, t, 0.0, params.rescaled_radius(), tol * self.scale(x, t));
        converged(est)?;
        Ok(ContinuumEstimate {
            value: est.value,
            quad_error: est.error,
            truncation_bound: self.truncation_bound(x, params)?,
        })
    }

    /// Full integral: the localized ball plus the shell out to the cut-off,
    /// whose remaining tail is bounded and added to the error.
    pub fn gauss(&self, x: &[f64], params: &KernelParams, tol: f64) -> Result<ContinuumEstimate> {
        let local = self.localized(x, params, tol)?;
        let t = params.t;
        let r = params.rescaled_radius();
        let cutoff = CUTOFF_RADIUS.max(r);
        let shell = self.shell(x, t, r, cutoff, tol * self.scale(x, t));
        converged(shell)?;
        Ok(ContinuumEstimate {
            value: local.value + shell.value,
            quad_error: local.quad_error + shell.error + self.tail_beyond(x, t, cutoff),
            truncation_bound: local.truncation_bound,
        })
    }
}

/// Points strictly inside the excluded ball contribute nothing; pieces never
/// place nodes there except through rounding at the hole boundary.
fn m_last_inside_hole(z: &[f64], r_in: f64) -> bool {
    r_in > 0.0 && z.iter().map(|v| v * v).sum::<f64>() < r_in * r_in * (1.0 - 1e-15)
}

fn converged(est: Estimate) -> Result<()> {
    if est.converged && est.value.is_finite() {
        Ok(())
    } else {
        Err(Error::Quadrature {
            estimate: est.value,
            error: est.error,
        })
    }
}

/// `L_t f(x)` over the whole domain, to relative tolerance `tol`.
pub fn gauss_operator(
    domain: &Domain,
    density: &DensityField,
    f: &ScalarField,
    x: &[f64],
    params: &KernelParams,
    tol: f64,
) -> Result<ContinuumEstimate> {
    ContinuumProblem::new(domain, density, f)?.gauss(x, params, tol)
}

/// The truncated operator over `B_{t^η}(x)`, with no tail added back.
pub fn localized_operator(
    domain: &Domain,
    density: &DensityField,
    f: &ScalarField,
    x: &[f64],
    params: &KernelParams,
    tol: f64,
) -> Result<ContinuumEstimate> {
    ContinuumProblem::new(domain, density, f)?.localized(x, params, tol)
}

/// `(1/t) ∫_{B_{t^η} ∩ C} e^{-|y|²/t} (f(0) - f(y)) p(y) dy` for a cone `C`
/// with apex at the origin.
///
/// Closed-form sectors are integrated in a frame whose leading axes are the
/// sector normals, so every section is an exact interval. Predicate sectors
/// are integrated over the ball with the membership indicator applied per node.
pub fn euclidean_cone_operator(
    sector: &Sector,
    density: &DensityField,
    f: &ScalarField,
    params: &KernelParams,
    tol: f64,
) -> Result<f64> {
    let d = sector.dim();
    check_dim(d, f.dim())?;
    let t = params.t;
    let st = t.sqrt();
    let radius = params.rescaled_radius();
    let (frame, k) = match sector {
        Sector::Full { .. } | Sector::Predicate { .. } => ((0..d).map(|i| unit(d, i)).collect(), 0),
        Sector::HalfSpace { nu } => (complete_basis(std::slice::from_ref(nu), d), 1),
        Sector::Orthant { normals } => (complete_basis(normals, d), normals.len()),
    };
    let origin = vec![0.0; d];
    let f0 = f.value(&origin);
    let limits = |wp: &[f64]| -> Option<(f64, f64)> {
        let s: f64 = wp.iter().map(|v| v * v).sum();
        let r2 = radius * radius - s;
        (r2 > 0.0).then(|| {
            let r = r2.sqrt();
            if wp.len() < k {
                (0.0, r)
            } else {
                (-r, r)
            }
        })
    };
    let integrand = |w: &[f64]| -> f64 {
        let z = from_frame(&frame, w);
        if !sector.contains(&z) {
            return 0.0;
        }
        let r2: f64 = w.iter().map(|v| v * v).sum();
        let y: Vec<f64> = z.iter().map(|v| st * v).collect();
        (-r2).exp() * (f0 - f.value(&y)) * density.value(&y) / t
    };
    let scale = (density.value(&origin).abs() * st * crate::linalg::norm(&f.gradient(&origin)))
        .max(1e-300)
        * std::f64::consts::PI.powf(d as f64 / 2.0)
        / t;
    let est = integrate_nested(d, &limits, &integrand, tol * scale);
    converged(est)?;
    Ok(est.value)
}
