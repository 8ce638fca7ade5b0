//! Flat domains with kinked boundaries.
//!
//! A [`Domain`] is a bounded region of ℝ^d with a closed membership test, an
//! analytic volume, exact coordinate sections for iterated quadrature and,
//! where one exists globally, the graph function whose epigraph it is.

mod bouligand;
mod classify;
mod sector;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use bouligand::{
    bouligand_contains, bouligand_in_chart, estimate_directional_derivative, BouligandOutcome,
    DerivativeEstimate, DirectionalDerivative, LocalChart, StepSequence,
};
pub use classify::{classify, PointClassification};
pub use sector::{sector_at, Sector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::norm;
use crate::quadrature::integrate_nested;
use crate::specfun::unit_ball_volume;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How graph distances are measured; recorded in every operator report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Geodesic distance inside the domain (Euclidean on convex domains).
    #[default]
    Intrinsic,
    /// Ambient Euclidean distance.
    Extrinsic,
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceMode::Intrinsic => f.write_str("intrinsic"),
            DistanceMode::Extrinsic => f.write_str("extrinsic"),
        }
    }
}

#[derive(Clone)]
pub enum Shape {
    /// Closed ball of the given radius centred at the origin.
    Ball { radius: f64 },
    /// Axis-aligned box `[0, a_1] × … × [0, a_d]`.
    Box { edges: Vec<f64> },
    /// Local corner model ℝ^k_+ × ℝ^{d-k}, truncated to `[0, L]^k × [-L, L]^{d-k}`.
    OrthantModel { depth: usize, extent: f64 },
    /// Convex circular cone `|y'| ≤ y_d tan α` with apex at the origin and axis
    /// `e_d`, cut at `y_d = height`.
    Cone { half_angle: f64, height: f64 },
    /// `y_d ≥ |y_1|^β` inside `|y_i| ≤ half_width` (i < d), `y_d ≤ top`.
    CuspEpigraph {
        exponent: f64,
        half_width: f64,
        top: f64,
    },
    /// `y_d ≥ γ(y')` over the box `lower ≤ y' ≤ upper`, `y_d ≤ top`.
    Epigraph {
        gamma: ScalarFn,
        lipschitz_bound: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        top: f64,
        convex: bool,
    },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Ball { radius } => write!(f, "Ball {{ radius: {radius} }}"),
            Shape::Box { edges } => write!(f, "Box {{ edges: {edges:?} }}"),
            Shape::OrthantModel { depth, extent } => {
                write!(f, "OrthantModel {{ depth: {depth}, extent: {extent} }}")
            }
            Shape::Cone { half_angle, height } => {
                write!(f, "Cone {{ half_angle: {half_angle}, height: {height} }}")
            }
            Shape::CuspEpigraph {
                exponent,
                half_width,
                top,
            } => write!(
                f,
                "CuspEpigraph {{ exponent: {exponent}, half_width: {half_width}, top: {top} }}"
            ),
            Shape::Epigraph {
                lipschitz_bound,
                lower,
                upper,
                top,
                convex,
                ..
            } => write!(
                f,
                "Epigraph {{ lipschitz_bound: {lipschitz_bound}, lower: {lower:?}, upper: {upper:?}, top: {top}, convex: {convex} }}"
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Domain {
    dim: usize,
    shape: Shape,
    mode: DistanceMode,
    volume: f64,
}

/// Euclidean length with the distance mode it was computed under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub mode: DistanceMode,
}

impl Domain {
    pub fn ball(dim: usize, radius: f64) -> Result<Domain> {
        positive("radius", radius)?;
        Self::build(dim, Shape::Ball { radius })
    }

    pub fn unit_cube(dim: usize) -> Result<Domain> {
        Self::boxed(vec![1.0; dim])
    }

    pub fn boxed(edges: Vec<f64>) -> Result<Domain> {
        for &a in &edges {
            positive("edge length", a)?;
        }
        Self::build(edges.len(), Shape::Box { edges })
    }

    pub fn orthant_model(dim: usize, depth: usize, extent: f64) -> Result<Domain> {
        if depth > dim {
            return Err(Error::Argument(format!(
                "depth {depth} exceeds dimension {dim}"
            )));
        }
        positive("extent", extent)?;
        Self::build(dim, Shape::OrthantModel { depth, extent })
    }

    pub fn cone(dim: usize, half_angle: f64, height: f64) -> Result<Domain> {
        if !(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Argument(
                "cone half-angle must lie in (0, π/2)".into(),
            ));
        }
        positive("height", height)?;
        Self::build(dim, Shape::Cone { half_angle, height })
    }

    pub fn cusp(dim: usize, exponent: f64) -> Result<Domain> {
        Self::cusp_with(dim, exponent, 1.0, 2.0)
    }

    pub fn cusp_with(dim: usize, exponent: f64, half_width: f64, top: f64) -> Result<Domain> {
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::Argument("cusp exponent must lie in (0, 1)".into()));
        }
        positive("half width", half_width)?;
        if top <= half_width.powf(exponent) {
            return Err(Error::Argument(
                "top must clear the graph over the box".into(),
            ));
        }
        Self::build(
            dim,
            Shape::CuspEpigraph {
                exponent,
                half_width,
                top,
            },
        )
    }

    /// Epigraph of `gamma` over a box; the Lipschitz bound is probed at random points.
    pub fn epigraph(
        gamma: ScalarFn,
        lipschitz_bound: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        top: f64,
        convex: bool,
    ) -> Result<Domain> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::Argument(
                "epigraph box must have lower < upper".into(),
            ));
        }
        if lipschitz_bound < 0.0 {
            return Err(Error::Argument(
                "Lipschitz bound must be nonnegative".into(),
            ));
        }
        let dim = lower.len() + 1;
        probe_lipschitz(&gamma, lipschitz_bound, &lower, &upper)?;
        Self::build(
            dim,
            Shape::Epigraph {
                gamma,
                lipschitz_bound,
                lower,
                upper,
                top,
                convex,
            },
        )
    }

    fn build(dim: usize, shape: Shape) -> Result<Domain> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        if matches!(shape, Shape::Cone { .. } | Shape::CuspEpigraph { .. }) && dim < 2 {
            return Err(Error::Argument("cones and cusps need dimension ≥ 2".into()));
        }
        let mut domain = Domain {
            dim,
            shape,
            mode: DistanceMode::Intrinsic,
            volume: 0.0,
        };
        domain.volume = domain.compute_volume()?;
        Ok(domain)
    }

    pub fn with_mode(mut self, mode: DistanceMode) -> Domain {
        self.mode = mode;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Short name used in sample-set metadata and report sidecars.
    pub fn id(&self) -> String {
        match &self.shape {
            Shape::Ball { radius } => format!("ball(d={},r={radius})", self.dim),
            Shape::Box { edges } => format!("box({edges:?})"),
            Shape::OrthantModel { depth, extent } => {
                format!("orthant(d={},k={depth},L={extent})", self.dim)
            }
            Shape::Cone { half_angle, height } => {
                format!("cone(d={},alpha={half_angle},h={height})", self.dim)
            }
            Shape::CuspEpigraph { exponent, .. } => format!("cusp(d={},beta={exponent})", self.dim),
            Shape::Epigraph { .. } => format!("epigraph(d={})", self.dim),
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.shape {
            Shape::CuspEpigraph { .. } => false,
            Shape::Epigraph { convex, .. } => *convex,
            _ => true,
        }
    }

    /// Length scale of the smallest geometric feature.
    pub fn feature_scale(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Box { edges } => edges.iter().cloned().fold(f64::INFINITY, f64::min),
            Shape::OrthantModel { extent, .. } => *extent,
            Shape::Cone { height, .. } => *height,
            Shape::CuspEpigraph { half_width, .. } => *half_width,
            Shape::Epigraph { lower, upper, .. } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| u - l)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Closed membership, evaluated directly on the defining inequalities.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        let d = self.dim;
        match &self.shape {
            Shape::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() <= radius * radius,
            Shape::Box { edges } => x.iter().zip(edges).all(|(&v, &a)| (0.0..=a).contains(&v)),
            Shape::OrthantModel { depth, extent } => x.iter().enumerate().all(|(i, &v)| {
                if i < *depth {
                    (0.0..=*extent).contains(&v)
                } else {
                    v.abs() <= *extent
                }
            }),
            Shape::Cone { half_angle, height } => {
                let z = x[d - 1];
                let r2: f64 = x[..d - 1].iter().map(|v| v * v).sum();
                let tan = half_angle.tan();
                z >= 0.0 && z <= *height && r2 <= z * z * tan * tan
            }
            Shape::CuspEpigraph {
                exponent,
                half_width,
                top,
            } => {
                let z = x[d - 1];
                x[..d - 1].iter().all(|v| v.abs() <= *half_width)
                    && z <= *top
                    && z >= cusp_graph(*exponent, x[0])
            }
            Shape::Epigraph {
                gamma,
                lower,
                upper,
                top,
                ..
            } => {
                let z = x[d - 1];
                x[..d - 1]
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(&v, (&l, &u))| (l..=u).contains(&v))
                    && z <= *top
                    && z >= gamma(&x[..d - 1])
            }
        }
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        match &self.shape {
            Shape::Ball { radius } => (vec![-radius; d], vec![*radius; d]),
            Shape::Box { edges } => (vec![0.0; d], edges.clone()),
            Shape::OrthantModel { depth, extent } => (
                (0..d)
                    .map(|i| if i < *depth { 0.0 } else { -extent })
                    .collect(),
                vec![*extent; d],
            ),
            Shape::Cone { half_angle, height } => {
                let r = height * half_angle.tan();
                let mut lo = vec![-r; d];
                let mut hi = vec![r; d];
                lo[d - 1] = 0.0;
                hi[d - 1] = *height;
                (lo, hi)
            }
            Shape::CuspEpigraph {
                half_width, top, ..
            } => {
                let mut lo = vec![-half_width; d];
                let mut hi = vec![*half_width; d];
                lo[d - 1] = 0.0;
                hi[d - 1] = *top;
                (lo, hi)
            }
            Shape::Epigraph {
                gamma,
                lower,
                upper,
                top,
                lipschitz_bound,
                ..
            } => {
                // γ ≥ γ(centre) − L·radius over the box
                let centre: Vec<f64> = lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| 0.5 * (l + u))
                    .collect();
                let radius = 0.5
                    * norm(
                        &lower
                            .iter()
                            .zip(upper)
                            .map(|(l, u)| u - l)
                            .collect::<Vec<_>>(),
                    );
                let floor = gamma(&centre) - lipschitz_bound * radius;
                let mut lo = lower.clone();
                let mut hi = upper.clone();
                lo.push(floor.min(*top));
                hi.push(*top);
                (lo, hi)
            }
        }
    }

    /// Interval of coordinate `prefix.len()` over the section of the domain
    /// with the leading coordinates fixed to `prefix`.
    ///
    /// Exact for every shape: convex shapes have interval projections, and
    /// the epigraph shapes are only cut along their last coordinate.
    pub fn section(&self, prefix: &[f64]) -> Option<(f64, f64)> {
        let d = self.dim;
        let m = prefix.len();
        debug_assert!(m < d);
        let interval = |lo: f64, hi: f64| (hi >= lo).then_some((lo, hi));
        match &self.shape {
            Shape::Ball { radius } => {
                let r2 = radius * radius - prefix.iter().map(|v| v * v).sum::<f64>();
                (r2 >= 0.0).then(|| (-r2.sqrt(), r2.sqrt()))
            }
            Shape::Box { edges } => Some((0.0, edges[m])),
            Shape::OrthantModel { depth, extent } => Some(if m < *depth {
                (0.0, *extent)
            } else {
                (-extent, *extent)
            }),
            Shape::Cone { half_angle, height } => {
                let tan = half_angle.tan();
                let rmax = height * tan;
                let r2: f64 = prefix.iter().map(|v| v * v).sum();
                if m + 1 < d {
                    let rest = rmax * rmax - r2;
                    (rest >= 0.0).then(|| (-rest.sqrt(), rest.sqrt()))
                } else {
                    interval(r2.sqrt() / tan, *height)
                }
            }
            Shape::CuspEpigraph {
                exponent,
                half_width,
                top,
            } => {
                if m + 1 < d {
                    Some((-half_width, *half_width))
                } else {
                    interval(cusp_graph(*exponent, prefix[0]), *top)
                }
            }
            Shape::Epigraph {
                gamma,
                lower,
                upper,
                top,
                ..
            } => {
                if m + 1 < d {
                    Some((lower[m], upper[m]))
                } else {
                    interval(gamma(prefix), *top)
                }
            }
        }
    }

    /// Graph function γ and the region of ℝ^{d-1} where the domain boundary
    /// is its graph, for shapes that are globally epigraphs along `e_d`.
    pub fn graph_function(&self) -> Option<ScalarFn> {
        match &self.shape {
            Shape::Cone { half_angle, .. } => {
                let cot = 1.0 / half_angle.tan();
                Some(Arc::new(move |y: &[f64]| cot * norm(y)))
            }
            Shape::CuspEpigraph { exponent, .. } => {
                let beta = *exponent;
                Some(Arc::new(move |y: &[f64]| cusp_graph(beta, y[0])))
            }
            Shape::Epigraph { gamma, .. } => Some(gamma.clone()),
            _ => None,
        }
    }

    /// Distance under the domain's mode. Intrinsic distances are only
    /// available on convex domains, where they equal the Euclidean norm.
    pub fn intrinsic_distance(&self, x: &[f64], y: &[f64]) -> Result<Distance> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        if self.mode == DistanceMode::Intrinsic && !self.is_convex() {
            return Err(Error::Unsupported(
                "intrinsic distance on a non-convex domain; use extrinsic mode".into(),
            ));
        }
        let value = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(Distance {
            value,
            mode: self.mode,
        })
    }

    /// Indicator of the blown-up domain `(Ω − x)/t` at `z`.
    pub fn blow_up_indicator(&self, x: &[f64], z: &[f64], t: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, z.len())?;
        let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + t * b).collect();
        Ok(self.contains_unchecked(&y))
    }

    fn compute_volume(&self) -> Result<f64> {
        let d = self.dim as f64;
        let v = match &self.shape {
            Shape::Ball { radius } => unit_ball_volume(self.dim) * radius.powi(self.dim as i32),
            Shape::Box { edges } => edges.iter().product(),
            Shape::OrthantModel { depth, extent } => {
                extent.powi(self.dim as i32) * 2f64.powi((self.dim - depth) as i32)
            }
            Shape::Cone { half_angle, height } => {
                let r = height * half_angle.tan();
                unit_ball_volume(self.dim - 1) * r.powi(self.dim as i32 - 1) * height / d
            }
            Shape::CuspEpigraph {
                exponent,
                half_width,
                top,
            } => {
                let w = *half_width;
                (2.0 * w).powi(self.dim as i32 - 2)
                    * (2.0 * w * top - 2.0 * w.powf(exponent + 1.0) / (exponent + 1.0))
            }
            Shape::Epigraph { .. } => {
                let est = integrate_nested(self.dim, &|p: &[f64]| self.section(p), &|_| 1.0, 1e-10);
                if !est.converged {
                    return Err(Error::Quadrature {
                        estimate: est.value,
                        error: est.error,
                    });
                }
                est.value
            }
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Argument(format!(
                "domain volume {v} is not positive"
            )));
        }
        Ok(v)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be positive, got {v}")))
    }
}

/// |s|^β, with β = ½ routed through `sqrt` so equality cases are exact.
pub(crate) fn cusp_graph(beta: f64, s: f64) -> f64 {
    if beta == 0.5 {
        s.abs().sqrt()
    } else {
        s.abs().powf(beta)
    }
}

fn probe_lipschitz(gamma: &ScalarFn, bound: f64, lower: &[f64], upper: &[f64]) -> Result<()> {
    use rand::Rng;
    let mut rng = crate::rng::stream(0x11_95C4, 0);
    let k = lower.len();
    for _ in 0..2_000 {
        let a: Vec<f64> = (0..k).map(|i| rng.gen_range(lower[i]..=upper[i])).collect();
        let b: Vec<f64> = (0..k).map(|i| rng.gen_range(lower[i]..=upper[i])).collect();
        let dist = norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        if dist == 0.0 {
            continue;
        }
        let slope = (gamma(&a) - gamma(&b)).abs() / dist;
        if slope > bound * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::Argument(format!(
                "Lipschitz bound {bound} violated: observed slope {slope}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn membership_examples() {
        let ball = Domain::ball(3, 1.0).unwrap();
        assert!(ball.contains(&[0.0, 0.0, 0.0]).unwrap());
        let cube = Domain::unit_cube(3).unwrap();
        assert!(cube.contains(&[1.0, 1.0, 1.0]).unwrap());
        assert!(!cube.contains(&[1.0001, 0.0, 0.0]).unwrap());
        let cusp = Domain::cusp(3, 0.5).unwrap();
        assert!(cusp.contains(&[0.04, 0.0, 0.2]).unwrap());
        assert!(!cusp.contains(&[0.04, 0.0, 0.199_999]).unwrap());
        assert!(matches!(
            ball.contains(&[0.0, 0.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn volumes_match_closed_forms() {
        assert!((Domain::ball(3, 2.0).unwrap().volume() - 32.0 * PI / 3.0).abs() < 1e-12);
        assert!((Domain::boxed(vec![1.0, 2.0, 3.0]).unwrap().volume() - 6.0).abs() < 1e-15);
        assert_eq!(Domain::orthant_model(3, 2, 1.0).unwrap().volume(), 2.0);
    }

    #[test]
    fn section_volumes_agree_with_analytic_volumes() {
        let domains = [
            Domain::ball(3, 1.0).unwrap(),
            Domain::cone(3, 0.6, 1.0).unwrap(),
            Domain::cusp(3, 0.5).unwrap(),
            Domain::cusp(2, 0.3).unwrap(),
            Domain::orthant_model(3, 2, 0.5).unwrap(),
        ];
        for dom in &domains {
            let est = integrate_nested(dom.dim(), &|p: &[f64]| dom.section(p), &|_| 1.0, 1e-9);
            assert!(
                (est.value - dom.volume()).abs() < 1e-7 * dom.volume(),
                "{:?}: {} vs {}",
                dom.shape(),
                est.value,
                dom.volume()
            );
        }
    }

    #[test]
    fn epigraph_volume_and_lipschitz_probe() {
        let gamma: ScalarFn = Arc::new(|y: &[f64]| y[0].abs());
        let dom = Domain::epigraph(
            gamma.clone(),
            1.0,
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
            1.0,
            true,
        )
        .unwrap();
        // ∫∫ (1 - |x|) over [-1,1]² = 2
        assert!((dom.volume() - 2.0).abs() < 1e-8);
        assert!(Domain::epigraph(gamma, 0.5, vec![-1.0, -1.0], vec![1.0, 1.0], 1.0, true).is_err());
    }

    #[test]
    fn intrinsic_distance_rules() {
        let cube = Domain::unit_cube(3).unwrap();
        let dist = cube.intrinsic_distance(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!((dist.value - 3f64.sqrt()).abs() < 1e-15);
        let ball = Domain::ball(3, 2.0).unwrap();
        let dist = ball
            .intrinsic_distance(&[2.0, 0.0, 0.0], &[-2.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(dist.value, 4.0);
        let cusp = Domain::cusp(3, 0.5).unwrap();
        assert!(matches!(
            cusp.intrinsic_distance(&[0.0; 3], &[0.0, 0.0, 1.0]),
            Err(Error::Unsupported(_))
        ));
        let ext = cusp.with_mode(DistanceMode::Extrinsic);
        let dist = ext.intrinsic_distance(&[0.0; 3], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(dist.mode, DistanceMode::Extrinsic);
        assert_eq!(dist.value, 1.0);
    }

    #[test]
    fn blow_up_examples() {
        let cube = Domain::unit_cube(3).unwrap();
        for t in [1.0, 0.5, 0.01] {
            assert!(cube
                .blow_up_indicator(&[0.0; 3], &[1.0, 1.0, 1.0], t)
                .unwrap());
        }
        let ball = Domain::ball(3, 1.0).unwrap();
        let x = [1.0, 0.0, 0.0];
        for t in [1.0, 0.1, 1e-6] {
            assert!(!ball.blow_up_indicator(&x, &[1.0, 0.0, 0.0], t).unwrap());
        }
        // |x + t z|² = (1-t)² + t²/4 ≤ 1 iff t ≤ 8/5
        for t in [1e-3, 0.1, 1.5] {
            assert!(ball.blow_up_indicator(&x, &[-1.0, 0.5, 0.0], t).unwrap());
        }
        assert!(!ball.blow_up_indicator(&x, &[-1.0, 0.5, 0.0], 1.7).unwrap());
    }
}
