//! Design-quality functionals: design variances, the gamma-ratio constant
//! c(g), the expected-confidence-interval (ECI) criterion in its foldover
//! and general forms, and the Bayesian A criterion used for augmentation.
//!
//! The foldover ECI is
//!
//!   c(g) · t_{α/2,g} / m · Σ_j √(v_j / 2)
//!
//! with v_j the j-th diagonal of (HᵀH)⁻¹ and g the rank-based df of the
//! foldover under the chosen model. Its value is the smallest average
//! signal-to-noise ratio the first-stage analysis can reliably detect.

use crate::design::{
    alias_matrix, model_matrix, AugmentedDesign, FactorKind, HalfDesign, ModelOrder, ModelSpec,
};
use crate::dof::foldover_g;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::special::{log_gamma, t_quantile};
use serde::Serialize;

/// Per-factor design variances of a half design: the diagonal of (HᵀH)⁻¹.
pub fn design_variances(h: &HalfDesign) -> Result<Vec<f64>> {
    let gram = h.runs().to_matrix().gram();
    let inv = gram.sym_inverse()?;
    Ok(inv.diagonal())
}

/// The constant c(g) = √(2/g) · Γ((g+1)/2) / Γ(g/2); the mean of σ̂/σ on
/// g df. Increases to 1 as g grows.
pub fn c_constant(g: usize) -> Result<f64> {
    if g == 0 {
        return Err(Error::Domain("c(g) requires g >= 1".into()));
    }
    let gf = g as f64;
    let ln = 0.5 * (2.0 / gf).ln() + log_gamma((gf + 1.0) / 2.0)? - log_gamma(gf / 2.0)?;
    Ok(ln.exp())
}

/// Evaluation report for the ECI criterion.
#[derive(Debug, Clone, Serialize)]
pub struct EciReport {
    /// Half-design variances v_j (diagonal of (HᵀH)⁻¹), length m.
    pub v: Vec<f64>,
    /// Degrees of freedom used for the critical value.
    pub g_used: usize,
    /// c(g).
    pub c_value: f64,
    /// t_{α/2, g}.
    pub t_value: f64,
    /// The criterion value; +∞ when g = 0.
    pub eci: f64,
    /// Average bias contribution from the alias matrix (0 for foldovers).
    pub alias_term: f64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    /// Mean of √(v_j/2); the "average design standard error" of reports.
    pub avg_sqrt_half_v: f64,
    /// Diagnostic attached when the criterion is degenerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// ECI of the foldover generated by a half design (Eq. of the foldover
/// form). g is the exact rank-based df of the foldover under `order`.
pub fn eci_foldover(h: &HalfDesign, alpha: f64, order: ModelOrder) -> Result<EciReport> {
    check_alpha(alpha)?;
    let v = design_variances(h)?;
    let spec = ModelSpec::new(order, h.factors().to_vec());
    let g = foldover_g(h.runs(), &spec)?;
    let avg = v.iter().map(|x| (x / 2.0).sqrt()).sum::<f64>() / v.len() as f64;
    if g == 0 {
        return Ok(EciReport {
            v,
            g_used: 0,
            c_value: f64::NAN,
            t_value: f64::NAN,
            eci: f64::INFINITY,
            alias_term: 0.0,
            alpha,
            tau2: None,
            avg_sqrt_half_v: avg,
            note: Some(
                "g = 0: the design leaves no degrees of freedom for the variance estimator"
                    .into(),
            ),
        });
    }
    let c = c_constant(g)?;
    let t = t_quantile(alpha / 2.0, g)?;
    Ok(EciReport {
        eci: c * t * avg,
        v,
        g_used: g,
        c_value: c,
        t_value: t,
        alias_term: 0.0,
        alpha,
        tau2: None,
        avg_sqrt_half_v: avg,
        note: None,
    })
}

/// General ECI for an arbitrary run matrix: per-factor maximum confidence
/// interval deviation, averaging the alias bias term
/// √(2τ²/π · A_jᵀA_j) and the variance term c(g)·t·√v_j, where v_j and A_j
/// come from the design's X1 and alias matrix (intercept row excluded) and
/// g = n − rank([X1 | X2]).
pub fn eci_general(
    runs: &crate::design::Runs,
    factors: &[FactorKind],
    alpha: f64,
    tau2: f64,
    order: ModelOrder,
) -> Result<EciReport> {
    check_alpha(alpha)?;
    if tau2 < 0.0 {
        return Err(Error::Domain("tau2 must be nonnegative".into()));
    }
    let spec = ModelSpec::new(order, factors.to_vec());
    let mm = model_matrix(runs, &spec);
    let x1tx1_inv = mm.x1.gram_matrix().sym_inverse()?;
    let m = runs.cols();
    // v_j for main effects: skip the intercept diagonal entry.
    let v: Vec<f64> = (1..=m).map(|j| x1tx1_inv[(j, j)]).collect();
    let a = alias_matrix(&mm)?;
    let x = crate::design::full_model_matrix(runs, &spec);
    let g = runs.rows() - x.rank()?;

    let mut alias_sum = 0.0;
    for j in 1..=m {
        let aj_sq: f64 = (0..a.cols()).map(|k| a[(j, k)] * a[(j, k)]).sum();
        alias_sum += (2.0 * tau2 / std::f64::consts::PI * aj_sq).sqrt();
    }
    let alias_term = alias_sum / m as f64;
    let avg_sqrt_v = v.iter().map(|x| x.sqrt()).sum::<f64>() / m as f64;
    // Report the half-design-scale average for comparability with the
    // foldover form: √v_j(full) = √(v_j(half)/2) on pure foldovers.
    let avg_sqrt_half_v = avg_sqrt_v;

    if g == 0 {
        return Ok(EciReport {
            v,
            g_used: 0,
            c_value: f64::NAN,
            t_value: f64::NAN,
            eci: f64::INFINITY,
            alias_term,
            alpha,
            tau2: Some(tau2),
            avg_sqrt_half_v,
            note: Some(
                "g = 0: the design leaves no degrees of freedom for the variance estimator"
                    .into(),
            ),
        });
    }
    let c = c_constant(g)?;
    let t = t_quantile(alpha / 2.0, g)?;
    Ok(EciReport {
        eci: alias_term + c * t * avg_sqrt_v,
        v,
        g_used: g,
        c_value: c,
        t_value: t,
        alias_term,
        alpha,
        tau2: Some(tau2),
        avg_sqrt_half_v,
        note: None,
    })
}

/// `eci_general` applied to the full run matrix of a design.
pub fn eci_general_design(
    design: &AugmentedDesign,
    alpha: f64,
    tau2: f64,
    order: ModelOrder,
) -> Result<EciReport> {
    eci_general(&design.all_runs(), design.factors(), alpha, tau2, order)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// Bayesian A criterion: tr[(XAᵀXA + X0ᵀX0 + K/τ²)⁻¹] where K is zero on
/// the first m+1 diagonal entries (intercept and main effects) and one on
/// the second-order entries. `x0_info` is the information matrix of the
/// base design's full model; `xa` the model matrix of candidate rows (may
/// have zero rows).
pub fn bayes_a(x0_info: &Matrix, xa: &Matrix, tau2: f64, m: usize) -> Result<f64> {
    let p = x0_info.rows();
    if x0_info.cols() != p {
        return Err(Error::Dimension("x0_info must be square".into()));
    }
    if xa.rows() > 0 && xa.cols() != p {
        return Err(Error::Dimension(format!(
            "augmented model matrix has {} columns, information matrix is {p}x{p}",
            xa.cols()
        )));
    }
    if tau2 <= 0.0 {
        return Err(Error::Domain("tau2 must be positive".into()));
    }
    if m + 1 > p {
        return Err(Error::Dimension("m+1 exceeds the model dimension".into()));
    }
    let mut total = x0_info.clone();
    if xa.rows() > 0 {
        let ga = xa.gram();
        for i in 0..p {
            for j in 0..p {
                total[(i, j)] += ga[(i, j)];
            }
        }
    }
    for i in (m + 1)..p {
        total[(i, i)] += 1.0 / tau2;
    }
    Ok(total.sym_inverse()?.trace())
}
