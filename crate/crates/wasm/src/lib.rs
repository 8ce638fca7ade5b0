//! Browser bindings for the demo page: operator values at reference points
//! of the unit ball and cube, a sampled graph Laplacian, and sector moments.

use kinklap::geometry::{Domain, Sector};
use kinklap::linalg::unit;
use kinklap::operators::{
    graph_laplacian_streaming, predictor_at, ContinuumProblem, KernelParams, MomentBudget,
};
use kinklap::sampling::{DensityField, Sampler, ScalarField};
use kinklap::sector_moments::closed_form_moments;
use kinklap::{Error, Result};
use wasm_bindgen::prelude::*;

/// Quadrature tolerance; loose enough to stay interactive.
const DEMO_TOL: f64 = 1e-5;
/// Largest sample the page may request.
const MAX_SAMPLES: usize = 2_000_000;

/// Named reference points of the demo domains.
pub fn reference_point(shape: &str, point: &str) -> Result<(Domain, Vec<f64>)> {
    let unknown = || Error::Argument(format!("no point `{point}` on `{shape}`"));
    match shape {
        "ball" => {
            let x = match point {
                "center" => vec![0.0, 0.0, 0.0],
                "boundary" => vec![1.0, 0.0, 0.0],
                _ => return Err(unknown()),
            };
            Ok((Domain::ball(3, 1.0)?, x))
        }
        "cube" => {
            let x = match point {
                "interior" => vec![0.5, 0.5, 0.5],
                "face" => vec![0.5, 0.5, 1.0],
                "edge" => vec![0.5, 0.0, 0.0],
                "vertex" => vec![0.0, 0.0, 0.0],
                _ => return Err(unknown()),
            };
            Ok((Domain::unit_cube(3)?, x))
        }
        other => Err(Error::Argument(format!("unknown shape `{other}`"))),
    }
}

/// Continuum value and predictor at one bandwidth, for `f = x + y + z`.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub t: f64,
    pub continuum: f64,
    pub quad_error: f64,
    pub predictor: f64,
    pub scaled_continuum: f64,
    pub scaled_predictor: f64,
}

pub fn evaluate_point(shape: &str, point: &str, t: f64, eta: f64) -> Result<Evaluation> {
    let (domain, x) = reference_point(shape, point)?;
    let params = KernelParams::new(t, eta)?;
    let p = DensityField::uniform(&domain);
    let f = ScalarField::CoordinateSum { dim: 3 };
    let cont = ContinuumProblem::new(&domain, &p, &f)?.gauss(&x, &params, DEMO_TOL)?;
    let pred = predictor_at(&domain, &p, &f, &x, t, 1, MomentBudget::default())?.value;
    let st = t.sqrt();
    Ok(Evaluation {
        t,
        continuum: cont.value,
        quad_error: cont.quad_error,
        predictor: pred,
        scaled_continuum: st * cont.value,
        scaled_predictor: st * pred,
    })
}

/// Graph Laplacian over `n` sampled points, with its standard error.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrete {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn discrete_point(shape: &str, point: &str, t: f64, n: usize, seed: u64) -> Result<Discrete> {
    if n == 0 || n > MAX_SAMPLES {
        return Err(Error::Argument(format!(
            "sample size must lie in [1, {MAX_SAMPLES}], got {n}"
        )));
    }
    let (domain, x) = reference_point(shape, point)?;
    let sampler = Sampler::uniform(&domain, seed)?;
    let f = ScalarField::CoordinateSum { dim: 3 };
    let e = graph_laplacian_streaming(&sampler, n, &f, &x, t)?;
    Ok(Discrete {
        value: e.value,
        stderr: e.stderr,
        n,
    })
}

/// Closed-form moments of the full sphere, a half-space with normal `e_d`,
/// or the orthant cut by `e_1 … e_k`, as CSV.
pub fn moments_csv(sector: &str, dim: usize, k: usize) -> Result<String> {
    if !(1..=16).contains(&dim) {
        return Err(Error::Argument(format!(
            "dimension must lie in [1, 16], got {dim}"
        )));
    }
    let s = match sector {
        "full" => Sector::Full { dim },
        "half" => Sector::HalfSpace {
            nu: unit(dim, dim - 1),
        },
        "orthant" if (1..=dim).contains(&k) => Sector::Orthant {
            normals: (0..k).map(|i| unit(dim, i)).collect(),
        },
        "orthant" => return Err(Error::Argument(format!("need 1 ≤ k ≤ {dim}, got k = {k}"))),
        other => return Err(Error::Argument(format!("unknown sector `{other}`"))),
    };
    Ok(closed_form_moments(&s, dim)?.to_csv())
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn evaluate(
    shape: &str,
    point: &str,
    t: f64,
    eta: f64,
) -> std::result::Result<Evaluation, JsError> {
    evaluate_point(shape, point, t, eta).map_err(js)
}

#[wasm_bindgen]
pub fn discrete(
    shape: &str,
    point: &str,
    t: f64,
    n: usize,
    seed: u32,
) -> std::result::Result<Discrete, JsError> {
    discrete_point(shape, point, t, n, seed as u64).map_err(js)
}

#[wasm_bindgen]
pub fn sector_moments(sector: &str, dim: usize, k: usize) -> std::result::Result<String, JsError> {
    moments_csv(sector, dim, k).map_err(js)
}
