//! Gamma-family special functions and the constants of the small-bandwidth
//! expansion.
//!
//! Everything is evaluated in the log domain where overflow is possible, so
//! arguments up to 200 stay finite wherever the result itself is representable.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;

/// `Some(n)` when `2x` is a positive integer no larger than 400.
fn half_integer(x: f64) -> Option<u32> {
    let twice = 2.0 * x;
    (twice.fract() == 0.0 && (1.0..=400.0).contains(&twice)).then_some(twice as u32)
}

/// ln Γ at integer and half-integer points by exact product in log form.
fn ln_gamma_half_integer(twice: u32) -> f64 {
    if twice.is_multiple_of(2) {
        // Γ(n) = (n-1)!
        let n = twice / 2;
        (1..n).map(|k| (k as f64).ln()).sum()
    } else {
        // Γ(n + 1/2) = √π ∏_{k<n} (k + 1/2)
        let n = twice / 2;
        0.5 * PI.ln() + (0..n).map(|k| (k as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Natural log of Γ(x) for x > 0.
///
/// Integers and half-integers (the only arguments the expansion constants
/// need) go through exact products; other arguments use a Lanczos series.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if let Some(twice) = half_integer(x) {
        return ln_gamma_half_integer(twice);
    }
    if x < 0.5 {
        // reflection keeps the series in its accurate range
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let base = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * base.ln() - base + series.ln()
}

/// Γ(x) for x > 0; overflows to infinity past x ≈ 171.6.
pub fn gamma(x: f64) -> f64 {
    if let Some(twice) = half_integer(x) {
        if twice <= 200 {
            // direct product keeps full relative precision
            let n = twice / 2;
            return if twice % 2 == 0 {
                (1..n).fold(1.0, |acc, k| acc * k as f64)
            } else {
                (0..n).fold(PI.sqrt(), |acc, k| acc * (k as f64 + 0.5))
            };
        }
    }
    ln_gamma(x).exp()
}

/// Surface area of the unit sphere S^{d-1}: 2π^{d/2}/Γ(d/2).
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1);
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Volume of the unit ball in ℝ^d: π^{d/2}/Γ(d/2 + 1).
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// The expansion constant c_ℓ = Γ((ℓ+1)/2)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfGammaConstant {
    pub ell: u32,
    pub value: f64,
}

pub fn half_gamma_constant(ell: u32) -> Result<HalfGammaConstant> {
    if !(1..=200).contains(&ell) {
        return Err(Error::Argument(format!(
            "ell must lie in [1, 200], got {ell}"
        )));
    }
    Ok(HalfGammaConstant {
        ell,
        value: 0.5 * gamma((ell as f64 + 1.0) / 2.0),
    })
}

/// Shorthand for `half_gamma_constant(ell).value` on indices known to be valid.
pub(crate) fn c(ell: usize) -> f64 {
    half_gamma_constant(ell as u32)
        .expect("expansion index in range")
        .value
}

/// ln of the lower series: γ(s,x) = e^{-x} x^s Σ_n x^n / (s(s+1)…(s+n)).
fn ln_lower_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    -x + s * x.ln() + sum.ln()
}

/// ln Γ(s,x) by the modified Lentz continued fraction, valid for x > s + 1.
fn ln_upper_continued_fraction(s: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    -x + s * x.ln() + h.ln()
}

/// ln Γ(s,x), finite even where Γ(s,x) itself would overflow.
pub fn ln_upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    assert!(s > 0.0 && x >= 0.0, "requires s > 0, x >= 0");
    if x == 0.0 {
        return ln_gamma(s);
    }
    if x > s + 1.0 {
        ln_upper_continued_fraction(s, x)
    } else {
        // Γ(s,x) = Γ(s)(1 - P) with P = γ/Γ(s) bounded away from 1 in this regime
        let lg = ln_gamma(s);
        let p = (ln_lower_series(s, x) - lg).exp();
        lg + (-p).ln_1p()
    }
}

/// Upper incomplete gamma Γ(s,x) = ∫_x^∞ e^{-τ} τ^{s-1} dτ.
///
/// Saturates to 0 when the result underflows.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    ln_upper_incomplete_gamma(s, x).exp()
}

/// ∫_lower^∞ e^{-r²} r^{m+d-1} dr = ½ Γ((m+d)/2, lower²).
pub fn gaussian_radial_moment(m: usize, d: usize, lower: f64) -> f64 {
    assert!(m + d >= 1 && m + d <= 200, "m + d must lie in [1, 200]");
    assert!(lower >= 0.0);
    0.5 * upper_incomplete_gamma((m + d) as f64 / 2.0, lower * lower)
}

/// Bound on the part of the Gauss operator integral lying outside B_{t^η}(x):
/// (|f(x)| μ(M) + ‖f‖₁) t^{-d/2-1} e^{-t^{2η-1}}.
pub fn localization_tail_bound(
    f_at_x: f64,
    total_mass: f64,
    f_l1_norm: f64,
    t: f64,
    eta: f64,
    d: usize,
) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Argument(format!(
            "eta must lie in (0, 1/2), got {eta}"
        )));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Argument(format!("t must lie in (0, 1), got {t}")));
    }
    if !(total_mass > 0.0) || f_l1_norm < 0.0 {
        return Err(Error::Argument(
            "mass must be positive and ‖f‖₁ nonnegative".into(),
        ));
    }
    let amplitude = f_at_x.abs() * total_mass + f_l1_norm;
    if amplitude == 0.0 {
        return Ok(0.0);
    }
    let ln_bound = amplitude.ln() - (d as f64 / 2.0 + 1.0) * t.ln() - t.powf(2.0 * eta - 1.0);
    Ok(ln_bound.exp())
}
