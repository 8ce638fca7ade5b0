//! Point classification by active constraints.

use super::bouligand::{estimate_directional_derivative, DirectionalDerivative, StepSequence};
use super::{cusp_graph, Domain, Shape};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, frame_with_up, norm, normalized, to_frame, unit};

/// Regularity class of a point together with the data needed to build its sector.
#[derive(Debug, Clone)]
pub enum PointClassification {
    Interior,
    C1Boundary {
        inner_normal: Vec<f64>,
    },
    /// `k ≥ 2` pairwise orthogonal active faces.
    CornerDepthK {
        k: usize,
        inward_normals: Vec<Vec<f64>>,
    },
    /// Lipschitz kink: locally `{s ≥ γ'(w')}` in `frame` (last vector up).
    LcddKink {
        frame: Vec<Vec<f64>>,
        derivative: DirectionalDerivative,
    },
    /// Point where the graph has an infinite one-sided slope.
    Cusp {
        frame: Vec<Vec<f64>>,
        derivative: DirectionalDerivative,
    },
}

impl PointClassification {
    pub fn name(&self) -> &'static str {
        match self {
            PointClassification::Interior => "interior",
            PointClassification::C1Boundary { .. } => "c1_boundary",
            PointClassification::CornerDepthK { .. } => "corner",
            PointClassification::LcddKink { .. } => "lcdd_kink",
            PointClassification::Cusp { .. } => "cusp",
        }
    }
}

enum Face {
    Plane(Vec<f64>),
    Graph,
}

struct Constraint {
    /// Lower bound on the distance to this face.
    slack: f64,
    face: Face,
}

/// Classifies `x` at resolution `tol`.
///
/// A face is active when its slack is at most `tol · 1e-6` and inactive when
/// it is at least `tol`; a slack in between is reported as
/// [`Error::Unresolved`] instead of being guessed.
pub fn classify(domain: &Domain, x: &[f64], tol: f64) -> Result<PointClassification> {
    check_dim(domain.dim(), x.len())?;
    if !(tol > 0.0 && tol < domain.feature_scale()) {
        return Err(Error::Argument(format!(
            "tol {tol} must be positive and below the feature scale {}",
            domain.feature_scale()
        )));
    }
    if !domain.contains_unchecked(x) {
        return Err(Error::OutsideDomain);
    }
    let d = domain.dim();
    let active_tol = tol * 1e-6;
    if let Shape::Cone { half_angle, .. } = domain.shape() {
        if norm(x) <= active_tol {
            let cot = 1.0 / half_angle.tan();
            return Ok(PointClassification::LcddKink {
                frame: identity(d),
                derivative: DirectionalDerivative::new(d - 1, move |v| cot * norm(v)),
            });
        }
    }

    let constraints = constraints(domain, x, active_tol);
    if let Some(c) = constraints
        .iter()
        .find(|c| c.slack > active_tol && c.slack < tol)
    {
        return Err(Error::Unresolved {
            tol,
            reason: format!(
                "a face lies at distance {:e}, inside the tolerance band",
                c.slack
            ),
        });
    }
    let active: Vec<&Constraint> = constraints
        .iter()
        .filter(|c| c.slack <= active_tol)
        .collect();
    if active.is_empty() {
        return Ok(PointClassification::Interior);
    }

    let mut normals = Vec::with_capacity(active.len());
    for c in &active {
        match &c.face {
            Face::Plane(n) => normals.push(n.clone()),
            Face::Graph => match graph_point(domain, x)? {
                PointClassification::C1Boundary { inner_normal } => normals.push(inner_normal),
                cls @ PointClassification::Cusp { .. } => return Ok(cls),
                cls if active.len() == 1 => return Ok(cls),
                _ => return Err(Error::Unsupported("graph kink meeting another face".into())),
            },
        }
    }

    if normals.len() == 1 {
        return Ok(PointClassification::C1Boundary {
            inner_normal: normals.pop().unwrap(),
        });
    }
    let orthogonal = normals
        .iter()
        .enumerate()
        .all(|(i, a)| normals[i + 1..].iter().all(|b| dot(a, b).abs() <= 1e-12));
    if orthogonal {
        return Ok(PointClassification::CornerDepthK {
            k: normals.len(),
            inward_normals: normals,
        });
    }
    wedge(&normals)
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| unit(d, i)).collect()
}

/// Intersection of half-spaces `{n_i · v ≥ 0}` written as an epigraph over
/// the hyperplane orthogonal to the normalized sum of the normals.
fn wedge(normals: &[Vec<f64>]) -> Result<PointClassification> {
    let d = normals[0].len();
    let mut sum = vec![0.0; d];
    for n in normals {
        sum.iter_mut().zip(n).for_each(|(a, b)| *a += b);
    }
    if norm(&sum) < 1e-9 {
        return Err(Error::Unsupported("degenerate wedge".into()));
    }
    let up = normalized(&sum);
    let frame = frame_with_up(&up);
    let mut rows = Vec::with_capacity(normals.len());
    for n in normals {
        let c = to_frame(&frame, n);
        if c[d - 1] <= 1e-9 {
            return Err(Error::Unsupported(
                "wedge is not a graph over its bisector".into(),
            ));
        }
        rows.push((c[..d - 1].to_vec(), c[d - 1]));
    }
    let derivative = DirectionalDerivative::new(d - 1, move |w| {
        rows.iter()
            .map(|(a, b)| -dot(a, w) / b)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(PointClassification::LcddKink { frame, derivative })
}

fn constraints(domain: &Domain, x: &[f64], active_tol: f64) -> Vec<Constraint> {
    let d = domain.dim();
    let plane = |slack: f64, n: Vec<f64>| Constraint {
        slack,
        face: Face::Plane(n),
    };
    let neg = |i: usize| {
        let mut e = unit(d, i);
        e[i] = -1.0;
        e
    };
    let mut out = Vec::new();
    match domain.shape() {
        Shape::Ball { radius } => {
            let r = norm(x);
            let n = if r > 0.0 {
                x.iter().map(|v| -v / r).collect()
            } else {
                unit(d, 0)
            };
            out.push(plane(radius - r, n));
        }
        Shape::Box { edges } => {
            for (i, &a) in edges.iter().enumerate() {
                out.push(plane(x[i], unit(d, i)));
                out.push(plane(a - x[i], neg(i)));
            }
        }
        Shape::OrthantModel { depth, extent } => {
            for i in 0..d {
                let low = if i < *depth { 0.0 } else { -extent };
                out.push(plane(x[i] - low, unit(d, i)));
                out.push(plane(extent - x[i], neg(i)));
            }
        }
        Shape::Cone { half_angle, height } => {
            let r = norm(&x[..d - 1]);
            let (s, c) = half_angle.sin_cos();
            let mut n = vec![0.0; d];
            if r > 0.0 {
                for i in 0..d - 1 {
                    n[i] = -c * x[i] / r;
                }
            }
            n[d - 1] = s;
            out.push(plane(x[d - 1] * s - r * c, normalized(&n)));
            out.push(plane(height - x[d - 1], neg(d - 1)));
        }
        Shape::CuspEpigraph {
            exponent,
            half_width,
            top,
        } => {
            for i in 0..d - 1 {
                out.push(plane(x[i] + half_width, unit(d, i)));
                out.push(plane(half_width - x[i], neg(i)));
            }
            out.push(plane(top - x[d - 1], neg(d - 1)));
            let gap = x[d - 1] - cusp_graph(*exponent, x[0]);
            let slack = if gap <= active_tol {
                gap
            } else {
                cusp_distance(*exponent, *half_width, x[0], x[d - 1])
            };
            out.push(Constraint {
                slack,
                face: Face::Graph,
            });
        }
        Shape::Epigraph {
            gamma,
            lipschitz_bound,
            lower,
            upper,
            top,
            ..
        } => {
            for i in 0..d - 1 {
                out.push(plane(x[i] - lower[i], unit(d, i)));
                out.push(plane(upper[i] - x[i], neg(i)));
            }
            out.push(plane(top - x[d - 1], neg(d - 1)));
            // a vertical gap g keeps a ball of radius g/√(1+L²) above an L-Lipschitz graph
            let gap = x[d - 1] - gamma(&x[..d - 1]);
            let slack = if gap <= active_tol {
                gap
            } else {
                gap / (1.0 + lipschitz_bound * lipschitz_bound).sqrt()
            };
            out.push(Constraint {
                slack,
                face: Face::Graph,
            });
        }
    }
    out
}

/// Euclidean distance from `(a, b)` to the curve `s ↦ (s, |s|^β)`, `|s| ≤ w`.
fn cusp_distance(beta: f64, w: f64, a: f64, b: f64) -> f64 {
    let dist2 = |s: f64| (s - a).powi(2) + (cusp_graph(beta, s) - b).powi(2);
    const GRID: usize = 4000;
    let node = |k: usize| -w + 2.0 * w * k as f64 / GRID as f64;
    let mut best = (dist2(0.0), 0.0, 0.0);
    for k in 0..=GRID {
        let v = dist2(node(k));
        if v < best.0 {
            best = (v, node(k.saturating_sub(1)), node((k + 1).min(GRID)));
        }
    }
    let (mut lo, mut hi) = (best.1, best.2);
    let mut min = best.0;
    if hi > lo {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            let (f1, f2) = (dist2(m1), dist2(m2));
            min = min.min(f1).min(f2);
            if f1 < f2 {
                hi = m2;
            } else {
                lo = m1;
            }
        }
    }
    min.sqrt()
}

/// Classification of a point on the graph face of an epigraph-type domain.
fn graph_point(domain: &Domain, x: &[f64]) -> Result<PointClassification> {
    let d = domain.dim();
    match domain.shape() {
        Shape::CuspEpigraph { exponent, .. } => {
            if x[0] == 0.0 {
                return Ok(PointClassification::Cusp {
                    frame: identity(d),
                    derivative: DirectionalDerivative::new(d - 1, |v| {
                        if v[0] != 0.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        }
                    }),
                });
            }
            let beta = *exponent;
            let mut n = vec![0.0; d];
            n[0] = -beta * x[0].signum() * x[0].abs().powf(beta - 1.0);
            n[d - 1] = 1.0;
            Ok(PointClassification::C1Boundary {
                inner_normal: normalized(&n),
            })
        }
        Shape::Epigraph { gamma, .. } => {
            let steps = StepSequence::for_domain(domain);
            let base = x[..d - 1].to_vec();
            let g0 = gamma(&base);
            let gam = gamma.clone();
            let g = move |w: &[f64]| {
                let y: Vec<f64> = base.iter().zip(w).map(|(a, b)| a + b).collect();
                gam(&y) - g0
            };
            let m = d - 1;
            let mut grad = vec![0.0; m];
            let mut smooth = true;
            for i in 0..m {
                let plus = estimate_directional_derivative(&g, &unit(m, i), &steps)?.value;
                let mut e = unit(m, i);
                e[i] = -1.0;
                let minus = estimate_directional_derivative(&g, &e, &steps)?.value;
                if plus.is_infinite() || minus.is_infinite() {
                    return Ok(cusp_from(g, d, steps));
                }
                grad[i] = plus;
                smooth &= (plus + minus).abs() <= 1e-6 * (1.0 + plus.abs());
            }
            if smooth {
                // off-axis probes catch kinks invisible along coordinate directions
                let mut rng = crate::rng::stream(0x5EC7, d as u64);
                for _ in 0..8 {
                    let v: Vec<f64> = (0..m)
                        .map(|_| {
                            rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
                        })
                        .collect();
                    let v = normalized(&v);
                    let dv = estimate_directional_derivative(&g, &v, &steps)?.value;
                    if !((dv - dot(&grad, &v)).abs() <= 1e-6 * (1.0 + dv.abs())) {
                        smooth = false;
                        break;
                    }
                }
            }
            if smooth {
                let mut n: Vec<f64> = grad.iter().map(|v| -v).collect();
                n.push(1.0);
                return Ok(PointClassification::C1Boundary {
                    inner_normal: normalized(&n),
                });
            }
            Ok(PointClassification::LcddKink {
                frame: identity(d),
                derivative: numeric_derivative(g, d, steps),
            })
        }
        _ => unreachable!("only epigraph shapes have a graph face"),
    }
}

fn numeric_derivative(
    g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    d: usize,
    steps: StepSequence,
) -> DirectionalDerivative {
    DirectionalDerivative::new(d - 1, move |v| {
        estimate_directional_derivative(&g, v, &steps)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    })
}

fn cusp_from(
    g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    d: usize,
    steps: StepSequence,
) -> PointClassification {
    PointClassification::Cusp {
        frame: identity(d),
        derivative: numeric_derivative(g, d, steps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn assert_unit(v: &[f64]) {
        assert!((norm(v) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cube_points() {
        let cube = Domain::unit_cube(3).unwrap();
        assert!(matches!(
            classify(&cube, &[0.5, 0.5, 0.5], 1e-3).unwrap(),
            PointClassification::Interior
        ));
        match classify(&cube, &[0.0, 0.0, 0.0], 1e-3).unwrap() {
            PointClassification::CornerDepthK { k, inward_normals } => {
                assert_eq!(k, 3);
                for (i, n) in inward_normals.iter().enumerate() {
                    assert_eq!(n, &unit(3, i));
                }
            }
            other => panic!("{other:?}"),
        }
        match classify(&cube, &[0.5, 0.5, 1.0], 1e-3).unwrap() {
            PointClassification::C1Boundary { inner_normal } => {
                assert_eq!(inner_normal, vec![0.0, 0.0, -1.0])
            }
            other => panic!("{other:?}"),
        }
        match classify(&cube, &[0.5, 0.0, 0.0], 1e-3).unwrap() {
            PointClassification::CornerDepthK { k, .. } => assert_eq!(k, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tolerance_band_is_unresolved() {
        let cube = Domain::unit_cube(3).unwrap();
        let err = classify(&cube, &[0.5, 0.5, 1e-5], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Unresolved { .. }));
        assert!(matches!(
            classify(&cube, &[1.5, 0.5, 0.5], 1e-3),
            Err(Error::OutsideDomain)
        ));
        assert!(matches!(
            classify(&cube, &[0.5, 0.5, 0.5], 2.0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn ball_boundary_normal() {
        let ball = Domain::ball(3, 1.0).unwrap();
        match classify(&ball, &[1.0, 0.0, 0.0], 1e-3).unwrap() {
            PointClassification::C1Boundary { inner_normal } => {
                assert_unit(&inner_normal);
                assert_eq!(inner_normal, vec![-1.0, 0.0, 0.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cusp_apex_and_flank() {
        let cusp = Domain::cusp(3, 0.5).unwrap();
        assert!(matches!(
            classify(&cusp, &[0.0; 3], 1e-3).unwrap(),
            PointClassification::Cusp { .. }
        ));
        match classify(&cusp, &[0.04, 0.0, 0.2], 1e-3).unwrap() {
            PointClassification::C1Boundary { inner_normal } => {
                assert_unit(&inner_normal);
                // gradient of z - √x at x = 0.04 is (-2.5, 0, 1)
                let expect = normalized(&[-2.5, 0.0, 1.0]);
                for (a, b) in inner_normal.iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-14);
                }
            }
            other => panic!("{other:?}"),
        }
        // distance from (0.5, 0.8) to the curve z = √|s| is below 0.1
        assert!(matches!(
            classify(&cusp, &[0.5, 0.0, 0.8], 0.1),
            Err(Error::Unresolved { .. })
        ));
        assert!(matches!(
            classify(&cusp, &[0.0, 0.0, 1.0], 0.1).unwrap(),
            PointClassification::Interior
        ));
    }

    #[test]
    fn cone_apex_and_rim() {
        let alpha = std::f64::consts::FRAC_PI_4;
        let cone = Domain::cone(3, alpha, 1.0).unwrap();
        match classify(&cone, &[0.0; 3], 1e-3).unwrap() {
            PointClassification::LcddKink { derivative, .. } => {
                assert!((derivative.eval(&[0.6, 0.8]) - 1.0).abs() < 1e-15);
                assert!((derivative.eval(&[1.2, 1.6]) - 2.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        match classify(&cone, &[alpha.tan(), 0.0, 1.0], 1e-3).unwrap() {
            PointClassification::LcddKink { frame, derivative } => {
                // the up vector bisects the two inward normals
                let up = &frame[2];
                let n1 = normalized(&[-1.0, 0.0, 1.0]);
                let n2 = [0.0, 0.0, -1.0];
                assert!((dot(up, &n1) - dot(up, &n2)).abs() < 1e-12);
                for w in [[0.3, -0.1], [-1.0, 0.5], [0.0, 1.0]] {
                    let lam = 2.5;
                    let scaled = [lam * w[0], lam * w[1]];
                    assert!((derivative.eval(&scaled) - lam * derivative.eval(&w)).abs() < 1e-12);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn epigraph_kink_and_smooth_points() {
        let gamma = Arc::new(|y: &[f64]| y[0].abs() + 0.5 * y[1] * y[1]);
        let g = gamma.clone();
        let dom =
            Domain::epigraph(gamma, 2.0, vec![-1.0, -1.0], vec![1.0, 1.0], 3.0, true).unwrap();
        match classify(&dom, &[0.0, 0.2, g(&[0.0, 0.2])], 1e-4).unwrap() {
            PointClassification::LcddKink { derivative, .. } => {
                // γ'(x'; v') = |v_1| + 0.2 v_2
                let v = [-0.6, 0.8];
                assert!((derivative.eval(&v) - (0.6 + 0.16)).abs() < 1e-7);
                let v2 = [-1.8, 2.4];
                assert!((derivative.eval(&v2) - 3.0 * derivative.eval(&v)).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        match classify(&dom, &[0.5, 0.2, g(&[0.5, 0.2])], 1e-4).unwrap() {
            PointClassification::C1Boundary { inner_normal } => {
                let expect = normalized(&[-1.0, -0.2, 1.0]);
                for (a, b) in inner_normal.iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-8);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oblique_box_edges_become_wedges() {
        let normals = vec![unit(2, 0), normalized(&[1.0, 1.0])];
        match wedge(&normals).unwrap() {
            PointClassification::LcddKink { frame, derivative } => {
                for n in &normals {
                    // each face direction lies on the cone boundary
                    let tangent = [n[1], -n[0]];
                    let dirs = [tangent, [-tangent[0], -tangent[1]]];
                    let on_boundary = dirs.iter().any(|t| {
                        let c = to_frame(&frame, t);
                        (c[1] - derivative.eval(&c[..1])).abs() < 1e-12
                    });
                    assert!(on_boundary);
                }
            }
            other => panic!("{other:?}"),
        }
    }
}
