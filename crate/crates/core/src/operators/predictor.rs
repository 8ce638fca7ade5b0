//! Closed-form small-`t` expansions of the Gauss operator built from sector
//! moments of the inward cone.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{classify, sector_at, Domain, Sector};
use crate::sampling::{DensityField, ScalarField};
use crate::sector_moments::{mixed_moment, sector_moments, SectorMoments, Tensor};
use crate::specfun::c;

/// Leading two orders:
/// `-(c_d/√t) p ∇f·v - c_{d+1} (½ p ⟨Hess f, M⟩ + ∇fᵀ M ∇p)`.
pub fn asymptotic_predictor(
    moments: &SectorMoments,
    p: f64,
    grad_p: &[f64],
    grad_f: &[f64],
    hess_f: &DMatrix<f64>,
    t: f64,
) -> Result<f64> {
    let d = moments.dim();
    check_dim(d, grad_p.len())?;
    check_dim(d, grad_f.len())?;
    check_dim(d, hess_f.nrows())?;
    check_dim(d, hess_f.ncols())?;
    if !(t > 0.0) {
        return Err(Error::Argument(format!(
            "bandwidth must be positive, got {t}"
        )));
    }
    let gf = DVector::from_column_slice(grad_f);
    let gp = DVector::from_column_slice(grad_p);
    let first = p * gf.dot(&moments.first_moment);
    let second = 0.5 * p * moments.contract_second(hess_f) + moments.bilinear(&gf, &gp);
    Ok(-c(d) / t.sqrt() * first - c(d + 1) * second)
}

/// One term of the expansion with its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerm {
    /// Order of the derivative of `f`.
    pub i: usize,
    /// Order of the derivative of `p`.
    pub j: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Predictor value with its Monte Carlo error (zero for closed-form sectors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub stderr: f64,
    pub order: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Every term `-t^{(i+j)/2-1} c_{d+i+j-1}/(i! j!) ∫_S d^i f(θ^i) d^j p(θ^j) dσ`
/// for `1 ≤ i ≤ N+1`, `0 ≤ j ≤ N`.
///
/// `f_derivs[k]` is the derivative tensor of order `k+1`; `p_derivs[k]` has
/// order `k`.
pub fn expansion_terms(
    sector: &Sector,
    f_derivs: &[Tensor],
    p_derivs: &[Tensor],
    t: f64,
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<ExpansionTerm>> {
    if !(1..=3).contains(&order) {
        return Err(Error::Argument(format!(
            "expansion order must lie in [1, 3], got {order}"
        )));
    }
    if f_derivs.len() < order + 1 || p_derivs.len() < order + 1 {
        return Err(Error::Argument(format!(
            "order {order} needs f derivatives up to {} and p derivatives up to {order}",
            order + 1
        )));
    }
    for (k, tensor) in f_derivs.iter().enumerate() {
        if tensor.order() != k + 1 {
            return Err(Error::Argument(format!(
                "f_derivs[{k}] must have order {}",
                k + 1
            )));
        }
    }
    for (k, tensor) in p_derivs.iter().enumerate() {
        if tensor.order() != k {
            return Err(Error::Argument(format!(
                "p_derivs[{k}] must have order {k}"
            )));
        }
    }
    if !(t > 0.0) {
        return Err(Error::Argument(format!(
            "bandwidth must be positive, got {t}"
        )));
    }
    let d = sector.dim();
    let mut terms = Vec::new();
    for i in 1..=order + 1 {
        for j in 0..=order {
            let m = mixed_moment(sector, &f_derivs[i - 1], &p_derivs[j], samples, seed)?;
            let w = t.powf((i + j) as f64 / 2.0 - 1.0) * c(d + i + j - 1)
                / (factorial(i) * factorial(j));
            terms.push(ExpansionTerm {
                i,
                j,
                value: -w * m.value,
                stderr: w * m.stderr,
            });
        }
    }
    Ok(terms)
}

/// Sum of [`expansion_terms`] for `2 ≤ N ≤ 3`.
pub fn higher_order_predictor(
    sector: &Sector,
    f_derivs: &[Tensor],
    p_derivs: &[Tensor],
    t: f64,
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<Prediction> {
    if !(2..=3).contains(&order) {
        return Err(Error::Argument(format!(
            "higher-order predictor needs N in [2, 3], got {order}"
        )));
    }
    let terms = expansion_terms(sector, f_derivs, p_derivs, t, order, samples, seed)?;
    Ok(Prediction {
        value: terms.iter().map(|e| e.value).sum(),
        stderr: terms
            .iter()
            .map(|e| e.stderr * e.stderr)
            .sum::<f64>()
            .sqrt(),
        order,
    })
}

/// Monte Carlo budget used for sectors without a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBudget {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MomentBudget {
    fn default() -> Self {
        MomentBudget {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Sector of inward directions at `x`, from the point's classification.
pub fn inward_sector(domain: &Domain, x: &[f64]) -> Result<Sector> {
    let tol = 1e-3 * domain.feature_scale();
    let cls = classify(domain, x, tol)?;
    Ok(sector_at(domain, &cls))
}

/// Predictor at `x` of order 1 (the two-term form) or 2–3 (the expansion).
pub fn predictor_at(
    domain: &Domain,
    density: &DensityField,
    f: &ScalarField,
    x: &[f64],
    t: f64,
    order: usize,
    budget: MomentBudget,
) -> Result<Prediction> {
    check_dim(domain.dim(), x.len())?;
    check_dim(domain.dim(), f.dim())?;
    let sector = inward_sector(domain, x)?;
    let d = domain.dim();
    if order == 1 {
        let moments = sector_moments(&sector, d, budget.samples, budget.seed)?;
        let value = asymptotic_predictor(
            &moments,
            density.value(x),
            &density.gradient(x),
            &f.gradient(x),
            &f.hessian(x),
            t,
        )?;
        // first and second moments share the sample, so the errors are summed
        let stderr = if moments.source == crate::sector_moments::MomentSource::ClosedForm {
            0.0
        } else {
            let gf = DVector::from_column_slice(&f.gradient(x));
            let e1 = density.value(x).abs() * gf.abs().dot(&moments.stderr.first_moment);
            let e2 = moments
                .stderr
                .second_moment
                .component_mul(&f.hessian(x).abs())
                .sum();
            c(d) / t.sqrt() * e1 + c(d + 1) * e2
        };
        return Ok(Prediction {
            value,
            stderr,
            order,
        });
    }
    let f_derivs = (1..=order + 1)
        .map(|k| f.derivative_tensor(x, k))
        .collect::<Result<Vec<_>>>()?;
    let p_derivs = (0..=order)
        .map(|k| density.derivative_tensor(x, k))
        .collect::<Result<Vec<_>>>()?;
    higher_order_predictor(
        &sector,
        &f_derivs,
        &p_derivs,
        t,
        order,
        budget.samples,
        budget.seed,
    )
}
