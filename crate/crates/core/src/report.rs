//! Fixed-width text rendering of analysis and evaluation reports, mirroring
//! the table layouts of design-of-experiments write-ups.

use crate::analysis::{AugmentedAnalysis, FitReport, SecondStage};
use crate::criteria::EciReport;
use crate::dof::DofSummary;
use crate::sim::SimResult;

pub fn eci_text(r: &EciReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("ECI            {:>10.4}\n", r.eci));
    s.push_str(&format!("g              {:>10}\n", r.g_used));
    s.push_str(&format!("c(g)           {:>10.5}\n", r.c_value));
    s.push_str(&format!("t(alpha/2, g)  {:>10.5}\n", r.t_value));
    s.push_str(&format!("alias term     {:>10.4}\n", r.alias_term));
    s.push_str(&format!("avg sqrt(v/2)  {:>10.4}\n", r.avg_sqrt_half_v));
    let vs: Vec<String> = r.v.iter().map(|v| format!("{v:.5}")).collect();
    s.push_str(&format!("v_j            [{}]\n", vs.join(", ")));
    if let Some(note) = &r.note {
        s.push_str(&format!("note: {note}\n"));
    }
    s
}

pub fn dof_text(order: &str, d: &DofSummary) -> String {
    format!(
        "{order:<16} f = {:<3} p = {:<3} lack-of-fit = {:<3} g = {:<3}\n",
        d.f, d.p, d.lack_of_fit, d.g
    )
}

pub fn first_stage_text(r: &FitReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "pre-selection sigma = {:.4} (sigma^2 = {:.6}) on {} df; stage-1 subset: {} runs\n\n",
        r.sigma, r.sigma2, r.df, r.subset_runs
    ));
    s.push_str(&format!(
        "{:>6} {:>10} {:>10} {:>8} {:>8} {:>10} {:>10}  {}\n",
        "Factor",
        "Estimate",
        "StdError",
        "T",
        "p-value",
        "CI low",
        "CI high",
        "active"
    ));
    for e in &r.effects {
        s.push_str(&format!(
            "{:>6} {:>10.3} {:>10.3} {:>8.3} {:>8.3} {:>10.3} {:>10.3}  {}\n",
            e.factor,
            e.estimate,
            e.std_error,
            e.t,
            e.p_value,
            e.ci_low,
            e.ci_high,
            if e.active { "*" } else { "" }
        ));
    }
    let act: Vec<String> = r.active.iter().map(|a| a.to_string()).collect();
    s.push_str(&format!(
        "\nactive at alpha = {}: {{{}}}\n",
        r.alpha,
        act.join(", ")
    ));
    s
}

pub fn second_stage_text(r: &SecondStage) -> String {
    let mut s = String::new();
    let names: Vec<String> = r.candidate_terms.iter().map(|t| t.to_string()).collect();
    for n in &names {
        s.push_str(&format!("{n:>7} "));
    }
    s.push_str(&format!("{:>12} {:>8}\n", r.criterion, "R^2"));
    let shown = r.candidates.len().min(64);
    for (i, c) in r.candidates.iter().take(shown).enumerate() {
        for t in &r.candidate_terms {
            let mark = if c.terms.contains(t) { "X" } else { "" };
            s.push_str(&format!("{mark:>7} "));
        }
        match (c.criterion, c.r_squared) {
            (Some(v), Some(r2)) => s.push_str(&format!("{v:>12.3} {r2:>8.3}")),
            _ => s.push_str(&format!("{:>12} {:>8}", "---", "---")),
        }
        if Some(i) == r.best {
            s.push_str("  <- best");
        }
        if !c.estimable {
            s.push_str(&format!("  (not estimable, rank {})", c.rank));
        }
        s.push('\n');
    }
    if r.candidates.len() > shown {
        s.push_str(&format!("… {} more candidates elided\n", r.candidates.len() - shown));
    }
    s
}

pub fn analysis_text(a: &AugmentedAnalysis) -> String {
    let mut s = String::new();
    s.push_str("== First stage ==\n");
    s.push_str(&first_stage_text(&a.first));
    s.push_str("\n== Second stage ==\n");
    s.push_str(&second_stage_text(&a.second));
    if let Some(best) = a.second.best {
        let cand = &a.second.candidates[best];
        let terms: Vec<String> = cand.terms.iter().map(|t| t.to_string()).collect();
        s.push_str(&format!(
            "\nbest model: {{{}}}",
            if terms.is_empty() { "intercept + mains".to_string() } else { terms.join(", ") }
        ));
        if let Some(r2) = cand.r_squared {
            s.push_str(&format!("  R^2 = {r2:.3}"));
        }
        s.push('\n');
        if let Some(coefs) = &cand.coefficients {
            for (name, b) in coefs {
                s.push_str(&format!("  {name:<10} {b:>10.4}\n"));
            }
        }
    }
    s
}

fn rate_cell(r: &Option<crate::sim::Rate>) -> String {
    match r {
        Some(rate) => format!("{:.3}", rate.mean),
        None => "-".to_string(),
    }
}

pub fn sim_text(r: &SimResult) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "", "ME TPR", "ME FPR", "2FI TPR", "2FI FPR", "Q TPR", "Q FPR"
    ));
    s.push_str(&format!(
        "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "rate",
        rate_cell(&r.main_tpr),
        rate_cell(&r.main_fpr),
        rate_cell(&r.tfi_tpr),
        rate_cell(&r.tfi_fpr),
        rate_cell(&r.quad_tpr),
        rate_cell(&r.quad_fpr),
    ));
    s.push_str(&format!(
        "replications: {} used of {} requested; failed fits: {}\n",
        r.reps_used, r.reps_requested, r.failed_fits
    ));
    s
}
