use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::geometry::Domain;
use crate::quadrature::integrate_nested;
use crate::sector_moments::Tensor;

pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
/// Derivative tensor of a given order (≥ 3) at a point.
pub type TensorFn = Arc<dyn Fn(&[f64], usize) -> Tensor + Send + Sync>;

/// User-supplied field; missing first and second derivatives fall back to
/// central differences.
#[derive(Clone)]
pub struct CustomField {
    pub dim: usize,
    pub value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub gradient: Option<GradientFn>,
    pub hessian: Option<HessianFn>,
    pub higher: Option<TensorFn>,
}

/// One monomial `coef · ∏ x_i^{e_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

#[derive(Clone)]
pub enum ScalarField {
    /// `f(x) = a·x`.
    Linear {
        a: Vec<f64>,
    },
    /// `f(x) = ½ xᵀAx + b·x + c` with symmetric `A`, so `Hess f = A`.
    Quadratic {
        a: DMatrix<f64>,
        b: Vec<f64>,
        c: f64,
    },
    /// `f(x) = x_1 + … + x_d`.
    CoordinateSum {
        dim: usize,
    },
    /// Finite sum of monomials; derivatives of every order are exact.
    Polynomial {
        dim: usize,
        terms: Vec<Monomial>,
    },
    Custom(CustomField),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

const FD_STEP: f64 = 1e-5;
const FD_CONSISTENCY: f64 = 1e-5;

impl ScalarField {
    pub fn constant(dim: usize, c: f64) -> ScalarField {
        ScalarField::Quadratic {
            a: DMatrix::zeros(dim, dim),
            b: vec![0.0; dim],
            c,
        }
    }

    pub fn quadratic(a: DMatrix<f64>, b: Vec<f64>, c: f64) -> Result<ScalarField> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::Argument("quadratic field shapes disagree".into()));
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::Argument("quadratic form must be symmetric".into()));
        }
        Ok(ScalarField::Quadratic { a, b, c })
    }

    pub fn polynomial(dim: usize, terms: Vec<Monomial>) -> Result<ScalarField> {
        if terms.iter().any(|m| m.exponents.len() != dim) {
            return Err(Error::Argument(
                "monomial exponent count must equal the dimension".into(),
            ));
        }
        Ok(ScalarField::Polynomial { dim, terms })
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Linear { a } => a.len(),
            ScalarField::Quadratic { b, .. } => b.len(),
            ScalarField::CoordinateSum { dim } | ScalarField::Polynomial { dim, .. } => *dim,
            ScalarField::Custom(c) => c.dim,
        }
    }

    pub fn id(&self) -> String {
        match self {
            ScalarField::Linear { a } => format!("linear{a:?}"),
            ScalarField::Quadratic { .. } => "quadratic".into(),
            ScalarField::CoordinateSum { dim } => format!("coordinate_sum(d={dim})"),
            ScalarField::Polynomial { terms, .. } => format!("polynomial({} terms)", terms.len()),
            ScalarField::Custom(_) => "custom".into(),
        }
    }

    /// Whether all derivatives of order two and higher vanish.
    pub fn is_affine(&self) -> bool {
        match self {
            ScalarField::Linear { .. } | ScalarField::CoordinateSum { .. } => true,
            ScalarField::Quadratic { a, .. } => a.iter().all(|v| *v == 0.0),
            ScalarField::Polynomial { terms, .. } => terms
                .iter()
                .all(|m| m.coef == 0.0 || m.exponents.iter().sum::<u32>() <= 1),
            ScalarField::Custom(_) => false,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Linear { a } => a.iter().zip(x).map(|(a, x)| a * x).sum(),
            ScalarField::Quadratic { a, b, c } => {
                let d = b.len();
                let mut q = 0.0;
                for i in 0..d {
                    let mut row = 0.0;
                    for j in 0..d {
                        row += a[(i, j)] * x[j];
                    }
                    q += x[i] * row;
                }
                0.5 * q + b.iter().zip(x).map(|(b, x)| b * x).sum::<f64>() + c
            }
            ScalarField::CoordinateSum { .. } => x.iter().sum(),
            ScalarField::Polynomial { terms, .. } => terms
                .iter()
                .map(|m| {
                    m.coef
                        * m.exponents
                            .iter()
                            .zip(x)
                            .map(|(&e, &v)| v.powi(e as i32))
                            .product::<f64>()
                })
                .sum(),
            ScalarField::Custom(c) => (c.value)(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ScalarField::Linear { a } => a.clone(),
            ScalarField::Quadratic { a, b, .. } => (0..b.len())
                .map(|i| b[i] + (0..b.len()).map(|j| a[(i, j)] * x[j]).sum::<f64>())
                .collect(),
            ScalarField::CoordinateSum { dim } => vec![1.0; *dim],
            ScalarField::Polynomial { .. } => self.tensor_exact(x, 1).data().to_vec(),
            ScalarField::Custom(c) => match &c.gradient {
                Some(g) => g(x),
                None => fd_gradient(&*c.value, x, FD_STEP),
            },
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        match self {
            ScalarField::Linear { .. } | ScalarField::CoordinateSum { .. } => DMatrix::zeros(d, d),
            ScalarField::Quadratic { a, .. } => a.clone(),
            ScalarField::Polynomial { .. } => {
                let t = self.tensor_exact(x, 2);
                DMatrix::from_fn(d, d, |i, j| t.data()[i * d + j])
            }
            ScalarField::Custom(c) => match &c.hessian {
                Some(h) => h(x),
                None => fd_hessian(self, x, 10.0 * FD_STEP),
            },
        }
    }

    /// Derivative tensor `d^k f(x)` for `0 ≤ k ≤ 4`.
    pub fn derivative_tensor(&self, x: &[f64], order: usize) -> Result<Tensor> {
        check_dim(self.dim(), x.len())?;
        if order > 4 {
            return Err(Error::Argument(format!("derivative order {order} above 4")));
        }
        let d = self.dim();
        match (self, order) {
            (_, 0) => Ok(Tensor::scalar(d, self.value(x))),
            (_, 1) => Ok(Tensor::from_vector(&self.gradient(x))),
            (_, 2) => Ok(Tensor::from_matrix(&self.hessian(x))),
            (ScalarField::Polynomial { .. }, k) => Ok(self.tensor_exact(x, k)),
            (ScalarField::Custom(c), k) => match &c.higher {
                Some(t) => {
                    let t = t(x, k);
                    if t.order() != k || t.dim() != d {
                        return Err(Error::Argument("custom tensor has the wrong shape".into()));
                    }
                    Ok(t)
                }
                None => Err(Error::Argument(format!(
                    "custom field supplies no derivative tensor of order {k}"
                ))),
            },
            (_, k) => Tensor::new(d, k, vec![0.0; d.pow(k as u32)]),
        }
    }

    fn tensor_exact(&self, x: &[f64], order: usize) -> Tensor {
        let ScalarField::Polynomial { dim, terms } = self else {
            unreachable!("exact tensors are only built for polynomials")
        };
        let d = *dim;
        let len = d.pow(order as u32);
        let mut data = vec![0.0; len];
        let mut e = vec![0u32; d];
        for (flat, slot) in data.iter_mut().enumerate() {
            e.iter_mut().for_each(|v| *v = 0);
            let mut f = flat;
            for _ in 0..order {
                e[f % d] += 1;
                f /= d;
            }
            *slot = terms
                .iter()
                .map(|m| {
                    let mut v = m.coef;
                    for i in 0..d {
                        let (p, k) = (m.exponents[i], e[i]);
                        if k > p {
                            return 0.0;
                        }
                        // falling factorial p (p-1) … (p-k+1)
                        v *= (0..k).map(|s| (p - s) as f64).product::<f64>();
                        v *= x[i].powi((p - k) as i32);
                    }
                    v
                })
                .sum();
        }
        Tensor::new(d, order, data).expect("consistent tensor size")
    }

    /// For custom fields without analytic derivatives: central differences
    /// at step `h` and `h/2` must agree to 1e-5 relative.
    pub fn check_finite_differences(&self, x: &[f64]) -> Result<()> {
        let ScalarField::Custom(c) = self else {
            return Ok(());
        };
        if c.gradient.is_none() {
            let g1 = fd_gradient(&*c.value, x, FD_STEP);
            let g2 = fd_gradient(&*c.value, x, 0.5 * FD_STEP);
            consistent(&g1, &g2, "gradient")?;
        }
        if c.hessian.is_none() {
            let h1 = fd_hessian(self, x, 10.0 * FD_STEP);
            let h2 = fd_hessian(self, x, 5.0 * FD_STEP);
            consistent(h1.as_slice(), h2.as_slice(), "hessian")?;
        }
        Ok(())
    }
}

fn consistent(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if diff > FD_CONSISTENCY * scale {
        return Err(Error::Argument(format!(
            "finite-difference {what} not self-consistent (relative gap {:e})",
            diff / scale
        )));
    }
    Ok(())
}

fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let hi = h * x[i].abs().max(1.0);
            y[i] = x[i] + hi;
            let up = f(&y);
            y[i] = x[i] - hi;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * hi)
        })
        .collect()
}

fn fd_hessian(field: &ScalarField, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let mut m = DMatrix::zeros(d, d);
    let mut y = x.to_vec();
    for j in 0..d {
        let hj = h * x[j].abs().max(1.0);
        y[j] = x[j] + hj;
        let up = field.gradient(&y);
        y[j] = x[j] - hj;
        let down = field.gradient(&y);
        y[j] = x[j];
        for i in 0..d {
            m[(i, j)] = (up[i] - down[i]) / (2.0 * hj);
        }
    }
    0.5 * (&m + m.transpose())
}

/// Probability density on a domain.
#[derive(Clone, Debug)]
pub enum DensityField {
    /// `p ≡ value`, normally `1 / volume`.
    Uniform { value: f64 },
    /// `p = shape / normalization`.
    Custom {
        shape: ScalarField,
        normalization: f64,
    },
}

impl DensityField {
    pub fn uniform(domain: &Domain) -> DensityField {
        DensityField::Uniform {
            value: 1.0 / domain.volume(),
        }
    }

    /// Normalizes `shape` over `domain` by iterated quadrature.
    pub fn normalized(shape: ScalarField, domain: &Domain) -> Result<DensityField> {
        check_dim(domain.dim(), shape.dim())?;
        let est = integrate_nested(
            domain.dim(),
            &|p: &[f64]| domain.section(p),
            &|y: &[f64]| shape.value(y),
            1e-10 * domain.volume(),
        );
        if !est.converged {
            return Err(Error::Quadrature {
                estimate: est.value,
                error: est.error,
            });
        }
        if !(est.value > 0.0) {
            return Err(Error::Argument(
                "density shape integrates to a non-positive value".into(),
            ));
        }
        Ok(DensityField::Custom {
            shape,
            normalization: est.value,
        })
    }

    pub fn id(&self) -> String {
        match self {
            DensityField::Uniform { value } => format!("uniform({value})"),
            DensityField::Custom { shape, .. } => format!("custom({})", shape.id()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            DensityField::Uniform { value } => *value,
            DensityField::Custom {
                shape,
                normalization,
            } => shape.value(x) / normalization,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            DensityField::Uniform { .. } => vec![0.0; x.len()],
            DensityField::Custom {
                shape,
                normalization,
            } => shape
                .gradient(x)
                .into_iter()
                .map(|g| g / normalization)
                .collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            DensityField::Uniform { .. } => true,
            DensityField::Custom { shape, .. } => match shape {
                ScalarField::Quadratic { a, b, .. } => {
                    a.iter().all(|v| *v == 0.0) && b.iter().all(|v| *v == 0.0)
                }
                _ => false,
            },
        }
    }

    /// Derivative tensor `d^k p(x)` for `0 ≤ k ≤ 4`.
    pub fn derivative_tensor(&self, x: &[f64], order: usize) -> Result<Tensor> {
        let d = x.len();
        match self {
            DensityField::Uniform { value } => {
                if order == 0 {
                    Ok(Tensor::scalar(d, *value))
                } else {
                    Tensor::new(d, order, vec![0.0; d.pow(order as u32)])
                }
            }
            DensityField::Custom {
                shape,
                normalization,
            } => {
                let t = shape.derivative_tensor(x, order)?;
                Tensor::new(
                    d,
                    order,
                    t.data().iter().map(|v| v / normalization).collect(),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> ScalarField {
        // x + y + z + 0.5 z² + 0.3 z³ + x y²
        ScalarField::polynomial(
            3,
            vec![
                Monomial {
                    coef: 1.0,
                    exponents: vec![1, 0, 0],
                },
                Monomial {
                    coef: 1.0,
                    exponents: vec![0, 1, 0],
                },
                Monomial {
                    coef: 1.0,
                    exponents: vec![0, 0, 1],
                },
                Monomial {
                    coef: 0.5,
                    exponents: vec![0, 0, 2],
                },
                Monomial {
                    coef: 0.3,
                    exponents: vec![0, 0, 3],
                },
                Monomial {
                    coef: 1.0,
                    exponents: vec![1, 2, 0],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let f = cubic();
        let x = [0.2, -0.7, 0.4];
        assert!((f.value(&x) - (0.2 - 0.7 + 0.4 + 0.08 + 0.3 * 0.064 + 0.2 * 0.49)).abs() < 1e-15);
        let g = f.gradient(&x);
        let expect = [1.0 + 0.49, 1.0 + 2.0 * 0.2 * -0.7, 1.0 + 0.4 + 0.9 * 0.16];
        for (a, b) in g.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let h = f.hessian(&x);
        assert!((h[(0, 1)] - 2.0 * -0.7).abs() < 1e-14 && (h[(1, 0)] - h[(0, 1)]).abs() == 0.0);
        assert!((h[(2, 2)] - (1.0 + 1.8 * 0.4)).abs() < 1e-14);
        let t3 = f.derivative_tensor(&x, 3).unwrap();
        // ∂³/∂z³ = 1.8, ∂³/∂x∂y∂y = 2
        assert!((t3.data()[2 * 9 + 2 * 3 + 2] - 1.8).abs() < 1e-14);
        assert!((t3.data()[9 + 3] - 2.0).abs() < 1e-14);
        assert!(f
            .derivative_tensor(&x, 4)
            .unwrap()
            .data()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn finite_differences_agree_with_exact() {
        let exact = cubic();
        let e2 = exact.clone();
        let custom = ScalarField::Custom(CustomField {
            dim: 3,
            value: Arc::new(move |x| e2.value(x)),
            gradient: None,
            hessian: None,
            higher: None,
        });
        let x = [0.3, 0.1, -0.2];
        custom.check_finite_differences(&x).unwrap();
        for (a, b) in custom.gradient(&x).iter().zip(exact.gradient(&x)) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((custom.hessian(&x) - exact.hessian(&x)).amax() < 1e-6);
        assert!(custom.derivative_tensor(&x, 3).is_err());
    }

    #[test]
    fn non_smooth_custom_fails_the_gate() {
        let f = ScalarField::Custom(CustomField {
            dim: 1,
            value: Arc::new(|x| (x[0] * 1e6).sin() * 1e-3),
            gradient: None,
            hessian: None,
            higher: None,
        });
        assert!(f.check_finite_differences(&[0.1]).is_err());
    }

    #[test]
    fn normalized_density_integrates_to_one() {
        let cube = Domain::unit_cube(3).unwrap();
        let shape = ScalarField::Linear {
            a: vec![1.0, 0.0, 0.0],
        };
        let shifted = ScalarField::polynomial(
            3,
            vec![
                Monomial {
                    coef: 1.0,
                    exponents: vec![0, 0, 0],
                },
                Monomial {
                    coef: 1.0,
                    exponents: vec![1, 0, 0],
                },
            ],
        )
        .unwrap();
        let p = DensityField::normalized(shifted, &cube).unwrap();
        assert!((p.value(&[0.5, 0.1, 0.1]) - 1.5 / 1.5).abs() < 1e-12);
        assert!(DensityField::normalized(ScalarField::constant(3, -1.0), &cube).is_err());
        assert_eq!(shape.hessian(&[0.0; 3]), DMatrix::zeros(3, 3));
    }
}
