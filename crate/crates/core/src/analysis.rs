//! Two-stage inference for (augmented) foldover designs.
//!
//! Stage A estimates σ² with the pre-selection estimator: the residual
//! variance after projecting the response off the full second-order model
//! space, on the complete design. Stage B runs main-effect t-tests on the
//! zero-aliased foldover subset, with standard errors built from the
//! subset's (X1ᵀX1)⁻¹ and the stage-A variance. Stage C fits every subset
//! of the second-order terms admissible under strong heredity on the full
//! design and ranks them by a selection criterion.
//!
//! Two criteria ship: `mbic`, which scales the residual sum of squares by
//! the pre-selection variance and adds ln(n) per parameter, and plain
//! `bic` = n·ln(RSS/n) + k·ln(n). The reported best model is refit by QR.

use crate::design::{model_matrix, AugmentedDesign, FactorKind, ModelOrder, ModelSpec, Runs, Term};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::special::{t_quantile, t_two_sided_pvalue};
use serde::Serialize;

/// Model-selection criterion for the second stage. Lower is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionCriterion {
    /// RSS/σ̂²_X + penalty·(number of mean parameters). The default penalty
    /// is ln(n). Uses the pre-selection variance, so it needs g ≥ 1.
    Mbic { penalty: Option<f64> },
    /// n·ln(RSS/n) + penalty·(number of mean parameters), default ln(n).
    Bic { penalty: Option<f64> },
}

impl SelectionCriterion {
    pub fn mbic() -> Self {
        SelectionCriterion::Mbic { penalty: None }
    }

    pub fn bic() -> Self {
        SelectionCriterion::Bic { penalty: None }
    }

    /// Parses `mbic`, `bic`, `mbic:pen=<x>`, `bic:pen=<x>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let penalty = match rest {
            None | Some("") => None,
            Some(params) => {
                let mut pen = None;
                for kv in params.split(',') {
                    match kv.split_once('=') {
                        Some(("pen", v)) => {
                            pen = Some(v.parse::<f64>().map_err(|_| {
                                Error::InvalidConfig(format!("bad criterion penalty '{v}'"))
                            })?);
                        }
                        _ => {
                            return Err(Error::InvalidConfig(format!(
                                "unknown criterion parameter '{kv}'"
                            )))
                        }
                    }
                }
                pen
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "mbic" => Ok(SelectionCriterion::Mbic { penalty }),
            "bic" => Ok(SelectionCriterion::Bic { penalty }),
            other => Err(Error::InvalidConfig(format!(
                "unknown criterion '{other}' (expected mbic or bic)"
            ))),
        }
    }

    fn evaluate(&self, rss: f64, n: usize, k_params: usize, sigma2_pre: f64) -> f64 {
        let nf = n as f64;
        match *self {
            SelectionCriterion::Mbic { penalty } => {
                rss / sigma2_pre + penalty.unwrap_or(nf.ln()) * k_params as f64
            }
            SelectionCriterion::Bic { penalty } => {
                nf * (rss.max(1e-300) / nf).ln() + penalty.unwrap_or(nf.ln()) * k_params as f64
            }
        }
    }
}

impl std::fmt::Display for SelectionCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionCriterion::Mbic { penalty: None } => write!(f, "mbic"),
            SelectionCriterion::Mbic { penalty: Some(p) } => write!(f, "mbic:pen={p}"),
            SelectionCriterion::Bic { penalty: None } => write!(f, "bic"),
            SelectionCriterion::Bic { penalty: Some(p) } => write!(f, "bic:pen={p}"),
        }
    }
}

/// Pre-selection variance estimator: projects `y` off the column space of
/// the full model matrix (orthogonal decomposition, not normal equations)
/// and divides the residual sum of squares by g = n − rank(X).
pub fn preselect_sigma2(
    y: &[f64],
    design: &AugmentedDesign,
    order: ModelOrder,
) -> Result<(f64, usize)> {
    let runs = design.all_runs();
    if y.len() != runs.rows() {
        return Err(Error::Dimension(format!(
            "{} responses for {} runs",
            y.len(),
            runs.rows()
        )));
    }
    let spec = design.model_spec(order);
    let x = crate::design::full_model_matrix(&runs, &spec);
    let qr = x.qr_pivot();
    let g = runs.rows() - qr.rank();
    if g == 0 {
        return Err(Error::Analysis(
            "no pre-selection df: rank(X) = n leaves nothing for the variance estimator".into(),
        ));
    }
    let rss = qr.rss(y);
    Ok((rss / g as f64, g))
}

/// One row of the first-stage report.
#[derive(Debug, Clone, Serialize)]
pub struct EffectRow {
    /// 1-based factor index.
    pub factor: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub active: bool,
}

/// First-stage analysis report.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    /// Pre-selection σ̂²_X and its df, from the full design.
    pub sigma2: f64,
    pub sigma: f64,
    pub df: usize,
    pub alpha: f64,
    /// Number of runs in the zero-aliased subset used for estimation.
    pub subset_runs: usize,
    pub effects: Vec<EffectRow>,
    /// 1-based indices of factors with p < alpha.
    pub active: Vec<usize>,
}

/// Rows of the design used for the first stage: the stored foldover base
/// when present; otherwise the maximal sign-paired subset (center runs are
/// self-paired and always join).
pub fn zero_aliased_rows(design: &AugmentedDesign) -> Vec<usize> {
    if design.base().n() > 0 {
        let mut rows: Vec<usize> = design.foldover_row_range().collect();
        // Augmented rows that happen to pair up (or are center runs) also
        // carry zero aliasing; add greedy sign pairs among the extras.
        let extra = design.extra();
        let offset = design.base().n();
        let mut used = vec![false; extra.rows()];
        for i in 0..extra.rows() {
            if used[i] {
                continue;
            }
            if extra.row(i).iter().all(|&e| e == 0) {
                used[i] = true;
                rows.push(offset + i);
                continue;
            }
            for j in i + 1..extra.rows() {
                if used[j] {
                    continue;
                }
                let neg: Vec<i8> = extra.row(i).iter().map(|&e| -e).collect();
                if extra.row(j) == neg.as_slice() {
                    used[i] = true;
                    used[j] = true;
                    rows.push(offset + i);
                    rows.push(offset + j);
                    break;
                }
            }
        }
        rows.sort_unstable();
        rows
    } else {
        Vec::new()
    }
}

/// First-stage main-effect inference. Estimates come from ordinary least
/// squares of the main-effect model on the zero-aliased rows; σ̂²_X and its
/// df come from the full design; standard errors are σ̂_X·√v_j with v_j
/// from the subset's (X1ᵀX1)⁻¹.
pub fn first_stage(y: &[f64], design: &AugmentedDesign, alpha: f64, order: ModelOrder) -> Result<FitReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let (sigma2, df) = preselect_sigma2(y, design, order)?;
    let rows = zero_aliased_rows(design);
    if rows.is_empty() {
        return Err(Error::Analysis("no zero-aliased foldover subset found".into()));
    }
    let all = design.all_runs();
    let m = design.m();
    let sub_rows: Vec<Vec<i8>> = rows.iter().map(|&i| all.row_vec(i)).collect();
    let sub = Runs::from_rows(&sub_rows)?;
    let y_sub: Vec<f64> = rows.iter().map(|&i| y[i]).collect();

    let spec = ModelSpec::new(ModelOrder::MainEffects, design.factors().to_vec());
    let mm = model_matrix(&sub, &spec);
    let x1 = mm.x1.to_matrix();
    let inv = mm.x1.gram_matrix().sym_inverse()?;
    let beta = x1.qr_pivot().solve(&y_sub)?;

    let sigma = sigma2.sqrt();
    let tcrit = t_quantile(alpha / 2.0, df)?;
    let mut effects = Vec::with_capacity(m);
    let mut active = Vec::new();
    for j in 1..=m {
        let est = beta[j];
        let se = sigma * inv[(j, j)].sqrt();
        let t = est / se;
        let p = t_two_sided_pvalue(t, df)?;
        let is_active = p < alpha;
        if is_active {
            active.push(j);
        }
        effects.push(EffectRow {
            factor: j,
            estimate: est,
            std_error: se,
            t,
            p_value: p,
            ci_low: est - tcrit * se,
            ci_high: est + tcrit * se,
            active: is_active,
        });
    }
    Ok(FitReport {
        sigma2,
        sigma,
        df,
        alpha,
        subset_runs: rows.len(),
        effects,
        active,
    })
}

/// A candidate second-stage model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelCandidate {
    /// Included second-order terms (subset of the candidate list).
    pub terms: Vec<Term>,
    /// Whether the model is estimable on the design.
    pub estimable: bool,
    /// Numerical rank of the candidate model matrix.
    pub rank: usize,
    /// Criterion value; absent for inestimable candidates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    /// Coefficients (term, estimate) of the refit model; populated for the
    /// selected best model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<(String, f64)>>,
}

/// Second-stage output: all candidates in (size, lexicographic) order plus
/// the index of the criterion-best estimable one.
#[derive(Debug, Clone, Serialize)]
pub struct SecondStage {
    pub candidate_terms: Vec<Term>,
    pub candidates: Vec<ModelCandidate>,
    pub best: Option<usize>,
    pub criterion: String,
}

/// Candidate second-order terms under strong heredity: every interaction
/// between two active factors, plus the square of every active
/// quadratic-capable factor. `active` holds 1-based factor indices.
pub fn heredity_terms(active: &[usize], factors: &[FactorKind], order: ModelOrder) -> Vec<Term> {
    let mut terms = Vec::new();
    if matches!(order, ModelOrder::TwoFactorInteraction | ModelOrder::FullQuadratic) {
        for (i, &a) in active.iter().enumerate() {
            for &b in active.iter().skip(i + 1) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                terms.push(Term::Interaction(lo - 1, hi - 1));
            }
        }
    }
    if order == ModelOrder::FullQuadratic {
        for &a in active {
            if factors[a - 1] == FactorKind::QuadraticCapable {
                terms.push(Term::Quadratic(a - 1));
            }
        }
    }
    terms.sort();
    terms
}

/// Upper bound on candidate-term count for materializing every subset.
const MAX_ENUMERATED_TERMS: usize = 20;

/// All-subsets second stage: every subset of the candidate terms is fit on
/// the full design with intercept and active main effects always included,
/// and ranked by the criterion. Inestimable subsets are flagged and kept in
/// the listing but excluded from ranking.
pub fn second_stage(
    y: &[f64],
    design: &AugmentedDesign,
    active: &[usize],
    order: ModelOrder,
    criterion: SelectionCriterion,
) -> Result<SecondStage> {
    let candidate_terms = heredity_terms(active, design.factors(), order);
    if candidate_terms.len() > MAX_ENUMERATED_TERMS {
        return Err(Error::Analysis(format!(
            "{} candidate terms give 2^{} subsets; the all-subsets report is capped at \
             {MAX_ENUMERATED_TERMS} terms",
            candidate_terms.len(),
            candidate_terms.len()
        )));
    }
    let mut collected: Vec<(u64, ModelCandidate)> = Vec::new();
    let best = enumerate_subsets(y, design, active, &candidate_terms, order, criterion, |mask, cand| {
        collected.push((mask, cand.clone()));
    })?;

    // (size, lexicographic-by-terms) ordering; masks enumerate in binary
    // order so sort by popcount then mask value (terms are sorted).
    collected.sort_by_key(|(mask, _)| (mask.count_ones(), *mask));
    let best = best.map(|(best_mask, _)| {
        collected.iter().position(|(mask, _)| *mask == best_mask).expect("best mask present")
    });
    let mut candidates: Vec<ModelCandidate> = collected.into_iter().map(|(_, c)| c).collect();

    // Refit the winner by QR for reported coefficients.
    if let Some(bi) = best {
        let terms = candidates[bi].terms.clone();
        let (beta, names) = refit_by_qr(y, design, active, &terms)?;
        candidates[bi].coefficients =
            Some(names.into_iter().zip(beta).map(|(n, b)| (n, b)).collect());
    }
    Ok(SecondStage {
        candidate_terms,
        candidates,
        best,
        criterion: criterion.to_string(),
    })
}

/// Core subset enumerator. Builds the Gram matrix of
/// [1 | active mains | candidate terms] once, then visits every subset with
/// an incrementally extended Cholesky factor: RSS(S) = yᵀy − ‖z(S)‖² with
/// z the progressively transformed Xᵀy. Emits one candidate per subset and
/// returns the best (mask, criterion) among estimable ones. Identical RSS
/// values to the QR route; property-tested against it.
fn enumerate_subsets(
    y: &[f64],
    design: &AugmentedDesign,
    active: &[usize],
    candidate_terms: &[Term],
    order: ModelOrder,
    criterion: SelectionCriterion,
    mut emit: impl FnMut(u64, &ModelCandidate),
) -> Result<Option<(u64, f64)>> {
    let runs = design.all_runs();
    let n = runs.rows();
    if y.len() != n {
        return Err(Error::Dimension(format!("{} responses for {n} runs", y.len())));
    }
    let sigma2_pre = match criterion {
        SelectionCriterion::Mbic { .. } => preselect_sigma2(y, design, order)?.0,
        SelectionCriterion::Bic { .. } => 1.0,
    };

    // Base columns: intercept + active mains; then candidate term columns.
    let mut cols: Vec<Vec<f64>> = Vec::new();
    cols.push(vec![1.0; n]);
    for &a in active {
        cols.push((0..n).map(|i| runs.get(i, a - 1) as f64).collect());
    }
    for t in candidate_terms {
        cols.push((0..n).map(|i| t.eval(runs.row(i)) as f64).collect());
    }
    let kb = 1 + active.len();
    let p = cols.len();
    let mut gram = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for a in 0..p {
        for b in a..p {
            let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(x, z)| x * z).sum();
            gram[a][b] = dot;
            gram[b][a] = dot;
        }
        xty[a] = cols[a].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    let yty: f64 = y.iter().map(|v| v * v).sum();
    let tss: f64 = {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum()
    };

    // Incremental Cholesky over the selected column set.
    let cap = p;
    let mut chol = vec![vec![0.0; cap]; cap]; // lower-triangular rows
    let mut z = vec![0.0; cap];
    let mut selected: Vec<usize> = Vec::with_capacity(cap);
    let tol = 1e-9 * gram.iter().enumerate().map(|(i, r)| r[i]).fold(1.0f64, f64::max);

    // Pushes column `c`; returns false (and does not push) when the new
    // pivot collapses, i.e. the extended set is rank deficient.
    let push_col = |chol: &mut Vec<Vec<f64>>,
                    z: &mut Vec<f64>,
                    selected: &mut Vec<usize>,
                    c: usize|
     -> bool {
        let s = selected.len();
        let mut w = vec![0.0; s];
        for i in 0..s {
            let mut acc = gram[selected[i]][c];
            for k in 0..i {
                acc -= chol[i][k] * w[k];
            }
            w[i] = acc / chol[i][i];
        }
        let mut d = gram[c][c];
        for wi in &w {
            d -= wi * wi;
        }
        if d <= tol {
            return false;
        }
        let diag = d.sqrt();
        let mut zc = xty[c];
        for i in 0..s {
            zc -= w[i] * z[i];
        }
        for (i, wi) in w.into_iter().enumerate() {
            chol[s][i] = wi;
        }
        chol[s][s] = diag;
        z[s] = zc / diag;
        selected.push(c);
        true
    };

    // Base model must be estimable.
    let mut base_ok = true;
    for c in 0..kb {
        if !push_col(&mut chol, &mut z, &mut selected, c) {
            base_ok = false;
            break;
        }
    }
    if !base_ok {
        return Err(Error::Analysis(
            "intercept plus active main effects are not estimable on this design".into(),
        ));
    }

    let t = candidate_terms.len();
    let mut best: Option<(u64, f64)> = None;

    // DFS over terms: at each level decide exclude/include of term `idx`.
    // `singular_from` marks the depth at which a push failed, flagging the
    // whole branch inestimable without refactorization.
    struct Frame {
        idx: usize,
        state: u8, // 0 = visit exclude, 1 = visit include, 2 = unwind
        pushed: bool,
    }
    let mut mask: u64 = 0;
    let mut singular = false;
    let mut singular_depth = 0usize;

    // Recursive closure via explicit stack to keep the borrow checker happy.
    let mut stack: Vec<Frame> = vec![Frame { idx: 0, state: 0, pushed: false }];
    while let Some(frame) = stack.last_mut() {
        let idx = frame.idx;
        if idx == t {
            // Leaf: emit the current subset.
            let rank = selected.len();
            let estimable = !singular;
            let terms: Vec<Term> = (0..t)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| candidate_terms[i])
                .collect();
            let k_params = kb + terms.len();
            let (crit, r2) = if estimable {
                let explained: f64 = z[..rank].iter().map(|v| v * v).sum();
                let rss = (yty - explained).max(0.0);
                let c = criterion.evaluate(rss, n, k_params, sigma2_pre);
                let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
                (Some(c), Some(r2))
            } else {
                (None, None)
            };
            if let Some(c) = crit {
                let better = match best {
                    None => true,
                    Some((_, b)) => c < b,
                };
                if better {
                    best = Some((mask, c));
                }
            }
            emit(
                mask,
                &ModelCandidate {
                    terms,
                    estimable,
                    rank,
                    criterion: crit,
                    r_squared: r2,
                    coefficients: None,
                },
            );
            stack.pop();
            continue;
        }
        match frame.state {
            0 => {
                // Exclude branch.
                frame.state = 1;
                stack.push(Frame { idx: idx + 1, state: 0, pushed: false });
            }
            1 => {
                // Include branch.
                frame.state = 2;
                mask |= 1 << idx;
                if !singular {
                    let ok = push_col(&mut chol, &mut z, &mut selected, kb + idx);
                    frame.pushed = ok;
                    if !ok {
                        singular = true;
                        singular_depth = idx;
                    }
                } else {
                    frame.pushed = false;
                }
                stack.push(Frame { idx: idx + 1, state: 0, pushed: false });
            }
            _ => {
                // Unwind the include branch.
                mask &= !(1 << idx);
                if frame.pushed {
                    selected.pop();
                } else if singular && singular_depth == idx {
                    singular = false;
                }
                stack.pop();
            }
        }
    }
    Ok(best)
}

/// QR refit of intercept + active mains + chosen terms on the full design.
fn refit_by_qr(
    y: &[f64],
    design: &AugmentedDesign,
    active: &[usize],
    terms: &[Term],
) -> Result<(Vec<f64>, Vec<String>)> {
    let runs = design.all_runs();
    let n = runs.rows();
    let mut names = vec!["intercept".to_string()];
    let mut x = Matrix::zeros(n, 1 + active.len() + terms.len());
    for i in 0..n {
        x[(i, 0)] = 1.0;
    }
    for (c, &a) in active.iter().enumerate() {
        names.push(Term::Main(a - 1).to_string());
        for i in 0..n {
            x[(i, c + 1)] = runs.get(i, a - 1) as f64;
        }
    }
    for (c, t) in terms.iter().enumerate() {
        names.push(t.to_string());
        for i in 0..n {
            x[(i, 1 + active.len() + c)] = t.eval(runs.row(i)) as f64;
        }
    }
    let beta = x.qr_pivot().solve(y)?;
    Ok((beta, names))
}

/// Complete augmented analysis: (A) pre-selection variance on the full
/// design, (B) first stage on the zero-aliased subset, (C) all-subsets
/// second stage on the full design conditioned on the stage-B active set.
#[derive(Debug, Clone, Serialize)]
pub struct AugmentedAnalysis {
    pub first: FitReport,
    pub second: SecondStage,
    pub model: ModelOrder,
}

pub fn augmented_analysis(
    y: &[f64],
    design: &AugmentedDesign,
    alpha: f64,
    order: ModelOrder,
    criterion: SelectionCriterion,
) -> Result<AugmentedAnalysis> {
    let first = first_stage(y, design, alpha, order)?;
    let second = second_stage(y, design, &first.active, order, criterion)?;
    Ok(AugmentedAnalysis { first, second, model: order })
}

/// Streaming variant for simulations: returns the stage-1 active set and
/// the terms of the criterion-best stage-2 model without materializing the
/// candidate list.
pub fn detect_effects(
    y: &[f64],
    design: &AugmentedDesign,
    alpha: f64,
    order: ModelOrder,
    criterion: SelectionCriterion,
) -> Result<(Vec<usize>, Vec<Term>)> {
    let first = first_stage(y, design, alpha, order)?;
    let candidate_terms = heredity_terms(&first.active, design.factors(), order);
    let mut best_terms: Vec<Term> = Vec::new();
    let mut best_mask: Option<u64> = None;
    let best = enumerate_subsets(
        y,
        design,
        &first.active,
        &candidate_terms,
        order,
        criterion,
        |_, _| {},
    )?;
    if let Some((mask, _)) = best {
        best_mask = Some(mask);
    }
    if let Some(mask) = best_mask {
        best_terms = (0..candidate_terms.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| candidate_terms[i])
            .collect();
    }
    Ok((first.active, best_terms))
}
