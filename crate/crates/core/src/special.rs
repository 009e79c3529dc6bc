//! Log-gamma, regularized incomplete beta, and Student-t tail routines.
//!
//! The t quantile is the accuracy-critical piece: the expected-confidence
//! criterion multiplies it by a gamma-ratio constant, and reported critical
//! values must reproduce standard four-decimal tables. The quantile inverts
//! the incomplete beta with bisection bracketing followed by Halley
//! refinement.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Natural log of Γ(x) for x > 0.
///
/// Stirling's series once the argument is lifted past 12 by the recurrence
/// Γ(x+1) = xΓ(x); absolute error stays below 1e-11 across the range used
/// here, and differences of nearby arguments cancel cleanly (needed for the
/// gamma-ratio constant at very large degrees of freedom).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < 12.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Asymptotic series coefficients: B_2k / (2k(2k-1)).
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 / 1188.0))));
    Ok((z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift)
}

/// Continued fraction for the regularized incomplete beta (Lentz's method).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 3e-15;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let lbeta = log_gamma(a).unwrap() + log_gamma(b).unwrap() - log_gamma(a + b).unwrap();
    let front = (a * x.ln() + b * (1.0 - x).ln() - lbeta).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn check_df(df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("t distribution requires df >= 1".into()));
    }
    Ok(df as f64)
}

/// Upper-tail probability P(T_df > t).
pub fn t_upper_tail(t: f64, df: usize) -> Result<f64> {
    let v = check_df(df)?;
    let x = v / (v + t * t);
    let p = 0.5 * inc_beta(x, 0.5 * v, 0.5);
    Ok(if t >= 0.0 { p } else { 1.0 - p })
}

/// Two-sided p-value 2·P(T_df > |t|).
pub fn t_two_sided_pvalue(t: f64, df: usize) -> Result<f64> {
    let v = check_df(df)?;
    Ok(inc_beta(v / (v + t * t), 0.5 * v, 0.5))
}

/// Upper-tail critical value: the t with P(T_df > t) = p.
pub fn t_quantile(p: f64, df: usize) -> Result<f64> {
    let v = check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "t_quantile requires upper-tail probability in (0,1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-t_quantile(1.0 - p, df)?);
    }
    // Solve I_x(v/2, 1/2) = 2p for x = v/(v+t²).
    let a = 0.5 * v;
    let b = 0.5;
    let target = 2.0 * p;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut x = 0.5;
    for _ in 0..80 {
        x = 0.5 * (lo + hi);
        if inc_beta(x, a, b) < target {
            lo = x;
        } else {
            hi = x;
        }
    }
    // Halley refinement on f(x) = I_x(a,b) - target. The density is
    // f'(x) = x^(a-1)(1-x)^(b-1)/B(a,b) and f''/f' = (a-1)/x - (b-1)/(1-x).
    let lbeta = log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?;
    for _ in 0..4 {
        if x <= 0.0 || x >= 1.0 {
            break;
        }
        let f = inc_beta(x, a, b) - target;
        let dlog = (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - lbeta;
        let d = dlog.exp();
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let ratio = (a - 1.0) / x - (b - 1.0) / (1.0 - x);
        let denom = 1.0 - 0.5 * f * ratio / d;
        let step = if denom.abs() > 0.25 { f / d / denom } else { f / d };
        let next = x - step;
        if next > 0.0 && next < 1.0 {
            x = next;
        } else {
            break;
        }
    }
    Ok((v * (1.0 - x) / x).sqrt())
}
