//! The three evaluators: the discrete graph Laplacian `L_{n,t}`, the
//! continuum Gauss operator `L_t`, and the small-`t` predictor.

mod continuum;
mod discrete;
mod predictor;

pub use continuum::{
    euclidean_cone_operator, gauss_operator, localized_operator, ContinuumEstimate,
    ContinuumProblem, CUTOFF_RADIUS,
};
pub use discrete::{graph_laplacian, graph_laplacian_streaming, kernel_summand, DiscreteEstimate};
pub use predictor::{
    asymptotic_predictor, expansion_terms, higher_order_predictor, inward_sector, predictor_at,
    ExpansionTerm, MomentBudget, Prediction,
};

use crate::error::{Error, Result};
use crate::geometry::DistanceMode;

pub const DEFAULT_ETA: f64 = 0.3;

/// Bandwidth `t` and localization exponent `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub t: f64,
    pub eta: f64,
}

impl KernelParams {
    pub fn new(t: f64, eta: f64) -> Result<KernelParams> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Argument(format!("t must lie in (0, 1), got {t}")));
        }
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::Argument(format!(
                "eta must lie in (0, 1/2), got {eta}"
            )));
        }
        Ok(KernelParams { t, eta })
    }

    pub fn with_default_eta(t: f64) -> Result<KernelParams> {
        KernelParams::new(t, DEFAULT_ETA)
    }

    /// Localization radius `t^η`.
    pub fn radius(&self) -> f64 {
        self.t.powf(self.eta)
    }

    /// Localization radius in rescaled units, `t^{η-1/2}`.
    pub fn rescaled_radius(&self) -> f64 {
        self.t.powf(self.eta - 0.5)
    }
}

pub const REPORT_HEADER: &str =
    "t,L_nt,L_t,sqrt_t_L_nt,sqrt_t_L_t,predictor,sqrt_t_predictor,stderr,quad_err,trunc_bound";

/// All three evaluators at one `(x, t)`. Missing evaluators serialize as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorReport {
    pub x: Vec<f64>,
    pub t: f64,
    pub eta: f64,
    pub discrete: Option<DiscreteEstimate>,
    pub continuum: Option<ContinuumEstimate>,
    pub predictor: Option<f64>,
    pub predictor_order: usize,
    pub sqrt_t_discrete: Option<f64>,
    pub sqrt_t_continuum: Option<f64>,
    pub sqrt_t_predictor: Option<f64>,
    pub truncation_bound: Option<f64>,
    pub mode: DistanceMode,
}

impl OperatorReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: Vec<f64>,
        params: KernelParams,
        discrete: Option<DiscreteEstimate>,
        continuum: Option<ContinuumEstimate>,
        predictor: Option<f64>,
        predictor_order: usize,
        truncation_bound: Option<f64>,
        mode: DistanceMode,
    ) -> OperatorReport {
        let st = params.t.sqrt();
        OperatorReport {
            x,
            t: params.t,
            eta: params.eta,
            sqrt_t_discrete: discrete.map(|e| st * e.value),
            sqrt_t_continuum: continuum.map(|e| st * e.value),
            sqrt_t_predictor: predictor.map(|v| st * v),
            discrete,
            continuum,
            predictor,
            predictor_order,
            truncation_bound: truncation_bound.or(continuum.map(|e| e.truncation_bound)),
            mode,
        }
    }

    /// One CSV row matching [`REPORT_HEADER`], without a trailing newline.
    pub fn csv_row(&self) -> String {
        let v = |o: Option<f64>| o.unwrap_or(f64::NAN);
        let fields = [
            self.t,
            v(self.discrete.map(|e| e.value)),
            v(self.continuum.map(|e| e.value)),
            v(self.sqrt_t_discrete),
            v(self.sqrt_t_continuum),
            v(self.predictor),
            v(self.sqrt_t_predictor),
            v(self.discrete.map(|e| e.stderr)),
            v(self.continuum.map(|e| e.quad_error)),
            v(self.truncation_bound),
        ];
        fields
            .iter()
            .map(|f| format!("{f}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}
