//! Local graph charts, one-sided directional derivatives and Bouligand
//! tangent cone membership.

use std::fmt;
use std::sync::Arc;

use super::{classify, Domain, PointClassification, ScalarFn};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, frame_with_up, from_frame, norm, normalized, to_frame, unit};

/// Relative spread of the extrapolated quotients above which a direction is
/// declared fluctuating.
pub const FLUCTUATION_TOL: f64 = 1e-3;

/// Decreasing positive step lengths for one-sided difference quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSequence(Vec<f64>);

impl StepSequence {
    pub fn new(steps: Vec<f64>) -> Result<StepSequence> {
        if steps.len() < 4 {
            return Err(Error::Argument("need at least four steps".into()));
        }
        if steps.iter().any(|h| !(*h > 0.0)) || steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Argument(
                "steps must be positive and strictly decreasing".into(),
            ));
        }
        Ok(StepSequence(steps))
    }

    /// `h_j = h0 · 2^{-j}` for `j = 0..levels`.
    pub fn dyadic(h0: f64, levels: usize) -> Result<StepSequence> {
        Self::new((0..levels).map(|j| h0 * 0.5f64.powi(j as i32)).collect())
    }

    /// Twelve dyadic steps starting at one percent of the feature scale.
    pub fn for_domain(domain: &Domain) -> StepSequence {
        Self::dyadic(1e-2 * domain.feature_scale(), 12).expect("valid default steps")
    }

    pub fn steps(&self) -> &[f64] {
        &self.0
    }
}

/// Positively homogeneous evaluator `v' ↦ γ'(x'; v')` on ℝ^{d-1}. May return
/// `+∞` along cusp directions and NaN along fluctuating ones.
#[derive(Clone)]
pub struct DirectionalDerivative {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl DirectionalDerivative {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DirectionalDerivative {
            dim,
            f: Arc::new(f),
        }
    }

    /// Tangent-plane dimension d-1.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        (self.f)(v)
    }
}

impl fmt::Debug for DirectionalDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DirectionalDerivative {{ dim: {} }}", self.dim)
    }
}

/// Difference-quotient estimate of a one-sided derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error: f64,
}

/// The boundary near `origin` written as the graph `s = g(w')` over an
/// orthonormal frame whose last vector points into the domain; `g(0) = 0`.
#[derive(Clone)]
pub struct LocalChart {
    origin: Vec<f64>,
    frame: Vec<Vec<f64>>,
    graph: ScalarFn,
    analytic: bool,
}

impl fmt::Debug for LocalChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalChart")
            .field("origin", &self.origin)
            .field("frame", &self.frame)
            .field("analytic", &self.analytic)
            .finish()
    }
}

impl LocalChart {
    /// Chart at a boundary point. Graph-type domains use their global γ
    /// when `x` lies on the graph; other convex domains get a chart by
    /// bisection along an interior direction of the normal cone.
    pub fn at(domain: &Domain, x: &[f64]) -> Result<LocalChart> {
        check_dim(domain.dim(), x.len())?;
        let d = domain.dim();
        if !domain.contains_unchecked(x) {
            return Err(Error::OutsideDomain);
        }
        if let Some(gamma) = domain.graph_function() {
            let base = gamma(&x[..d - 1]);
            if (x[d - 1] - base).abs() <= 1e-10 {
                let xp = x[..d - 1].to_vec();
                let graph: ScalarFn = Arc::new(move |w: &[f64]| {
                    let y: Vec<f64> = xp.iter().zip(w).map(|(a, b)| a + b).collect();
                    gamma(&y) - base
                });
                return Ok(LocalChart {
                    origin: x.to_vec(),
                    frame: (0..d).map(|i| unit(d, i)).collect(),
                    graph,
                    analytic: true,
                });
            }
        }
        if !domain.is_convex() {
            return Err(Error::Unsupported(
                "bisection charts need a convex domain".into(),
            ));
        }
        let tol = 1e-9 * domain.feature_scale();
        let up = match classify(domain, x, tol)? {
            PointClassification::Interior => {
                return Err(Error::Argument(
                    "chart requested at an interior point".into(),
                ))
            }
            PointClassification::C1Boundary { inner_normal } => inner_normal,
            PointClassification::CornerDepthK { inward_normals, .. } => {
                let mut s = vec![0.0; d];
                for n in &inward_normals {
                    s.iter_mut().zip(n).for_each(|(a, b)| *a += b);
                }
                normalized(&s)
            }
            PointClassification::LcddKink { frame, .. }
            | PointClassification::Cusp { frame, .. } => frame[d - 1].clone(),
        };
        Ok(Self::by_bisection(domain, x, &up))
    }

    fn by_bisection(domain: &Domain, x: &[f64], up: &[f64]) -> LocalChart {
        let frame = frame_with_up(up);
        let reach = 0.5 * domain.feature_scale();
        let dom = domain.clone();
        let origin = x.to_vec();
        let fr = frame.clone();
        let lowest = move |w: &[f64]| -> f64 {
            let mut coords = w.to_vec();
            coords.push(0.0);
            let base: Vec<f64> = origin
                .iter()
                .zip(from_frame(&fr, &coords))
                .map(|(a, b)| a + b)
                .collect();
            let u = &fr[fr.len() - 1];
            let at = |s: f64| -> Vec<f64> { base.iter().zip(u).map(|(b, e)| b + s * e).collect() };
            let (mut lo, mut hi) = (-reach, reach);
            if !dom.contains_unchecked(&at(hi)) {
                return f64::NAN;
            }
            if dom.contains_unchecked(&at(lo)) {
                return f64::NEG_INFINITY;
            }
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if dom.contains_unchecked(&at(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        let g0 = lowest(&vec![0.0; x.len() - 1]);
        LocalChart {
            origin: x.to_vec(),
            frame,
            graph: Arc::new(move |w: &[f64]| lowest(w) - g0),
            analytic: false,
        }
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Orthonormal frame; the last vector is the chart's "up" direction.
    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn graph(&self, w: &[f64]) -> f64 {
        (self.graph)(w)
    }

    /// One-sided derivative `g'(0; v')` along `steps`.
    pub fn derivative(&self, v: &[f64], steps: &StepSequence) -> Result<DerivativeEstimate> {
        estimate_directional_derivative(&*self.graph, v, steps)
    }
}

/// One-sided derivative of `g` at 0 along `v` from Richardson-extrapolated
/// difference quotients.
///
/// Quotients whose magnitude grows geometrically as the step shrinks give
/// `±∞`. Quotients that neither settle nor blow up are reported as
/// [`Error::Fluctuating`].
pub fn estimate_directional_derivative(
    g: &dyn Fn(&[f64]) -> f64,
    v: &[f64],
    steps: &StepSequence,
) -> Result<DerivativeEstimate> {
    let g0 = g(&vec![0.0; v.len()]);
    if norm(v) == 0.0 {
        return Ok(DerivativeEstimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let h = steps.steps();
    let q: Vec<f64> = h
        .iter()
        .map(|&hj| {
            let w: Vec<f64> = v.iter().map(|c| c * hj).collect();
            (g(&w) - g0) / hj
        })
        .collect();
    if q.iter().any(|x| x.is_nan()) {
        return Err(Error::Argument(
            "chart undefined along this direction".into(),
        ));
    }
    if let Some(inf) = q.iter().find(|x| x.is_infinite()) {
        return Ok(DerivativeEstimate {
            value: *inf,
            error: 0.0,
        });
    }
    if let Some(sign) = diverging(h, &q) {
        return Ok(DerivativeEstimate {
            value: sign * f64::INFINITY,
            error: 0.0,
        });
    }
    // Richardson for an O(h) leading error with arbitrary step ratios
    let r: Vec<f64> = (0..q.len() - 1)
        .map(|j| {
            let ratio = h[j] / h[j + 1];
            (ratio * q[j + 1] - q[j]) / (ratio - 1.0)
        })
        .collect();
    let tail = &r[r.len() - 3..];
    let value = tail[2];
    let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = value.abs().max(1.0);
    if spread / scale > FLUCTUATION_TOL {
        return Err(Error::Fluctuating {
            spread: spread / scale,
        });
    }
    Ok(DerivativeEstimate {
        value,
        error: (tail[2] - tail[1]).abs() + 4.0 * f64::EPSILON * scale,
    })
}

/// Sign of the blow-up when the last six quotients share a sign and grow in
/// magnitude at a power rate at least `h^{-0.1}`.
fn diverging(h: &[f64], q: &[f64]) -> Option<f64> {
    let n = q.len();
    let k = 6.min(n);
    let (hs, qs) = (&h[n - k..], &q[n - k..]);
    let sign = qs[0].signum();
    if qs.iter().any(|x| x.signum() != sign || *x == 0.0) {
        return None;
    }
    if qs.windows(2).any(|w| w[1].abs() <= w[0].abs()) {
        return None;
    }
    let slope = (qs[k - 1].abs().ln() - qs[0].abs().ln()) / (hs[k - 1].ln() - hs[0].ln());
    (slope < -0.1).then_some(sign)
}

/// Result of a tangent cone membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BouligandOutcome {
    pub contained: bool,
    /// `v` lies on the cone boundary within the estimator error and was
    /// counted as inside.
    pub tie: bool,
    pub derivative: DerivativeEstimate,
}

/// Whether `v` lies in the Bouligand tangent cone at the boundary point `x`,
/// i.e. `v_d ≥ γ'(x'; v')` in the local chart.
pub fn bouligand_contains(
    domain: &Domain,
    x: &[f64],
    v: &[f64],
    steps: &StepSequence,
) -> Result<BouligandOutcome> {
    check_dim(domain.dim(), v.len())?;
    let chart = LocalChart::at(domain, x)?;
    bouligand_in_chart(&chart, v, steps)
}

/// Tangent cone test against an already built chart.
pub fn bouligand_in_chart(
    chart: &LocalChart,
    v: &[f64],
    steps: &StepSequence,
) -> Result<BouligandOutcome> {
    let d = chart.frame.len();
    check_dim(d, v.len())?;
    let coords = to_frame(&chart.frame, v);
    let (vp, vd) = coords.split_at(d - 1);
    let derivative = chart.derivative(vp, steps)?;
    let gap = vd[0] - derivative.value;
    let band = derivative.error.max(1e-9 * (1.0 + dot(v, v).sqrt()));
    let tie = derivative.value.is_finite() && gap.abs() <= band;
    Ok(BouligandOutcome {
        contained: gap >= 0.0 || tie,
        tie,
        derivative,
    })
}
