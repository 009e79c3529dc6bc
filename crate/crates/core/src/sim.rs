//! Monte-Carlo power study engine: draw active effects under strong
//! heredity, simulate responses, run the two-stage analysis, and aggregate
//! true/false positive rates per effect class.
//!
//! Effect magnitudes are signal-to-noise ratios: in offset mode
//! |β|/σ = offset + Exp(1); in fixed mode |β|/σ is the class constant.
//! Signs are independent fair coin flips. A main effect is detected by
//! stage-1 significance; an interaction or quadratic is detected when the
//! criterion-best stage-2 model contains it. Replications run on RNG
//! streams derived from (seed, replication index), so results do not
//! depend on the parallel schedule.

use crate::analysis::{detect_effects, SelectionCriterion};
use crate::design::{AugmentedDesign, FactorKind, ModelOrder, Term};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// How effect magnitudes are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectMode {
    /// |β|/σ = sn + Exp(1): the per-class `sn` is a minimum signal-to-noise.
    Offset,
    /// |β|/σ = sn exactly.
    Fixed,
}

/// Per-class counts of active effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveCounts {
    pub main: usize,
    #[serde(rename = "tfi")]
    pub tfi: usize,
    #[serde(default)]
    pub quad: usize,
}

/// Per-class signal-to-noise settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnSettings {
    pub main: f64,
    #[serde(rename = "tfi")]
    pub tfi: f64,
    #[serde(default)]
    pub quad: f64,
}

/// A simulation scenario, as serialized in scenario files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimScenario {
    pub mode: EffectMode,
    pub active: ActiveCounts,
    pub sn: SnSettings,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_reps() -> usize {
    500
}

impl SimScenario {
    pub fn validate(&self, m: usize, factors: &[FactorKind]) -> Result<()> {
        if self.sigma <= 0.0 {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be positive".into()));
        }
        if self.active.main > m {
            return Err(Error::InvalidConfig(format!(
                "{} active main effects for m = {m}",
                self.active.main
            )));
        }
        let max_tfi = self.active.main * self.active.main.saturating_sub(1) / 2;
        if self.active.tfi > max_tfi {
            return Err(Error::InvalidConfig(format!(
                "{} active interactions need more than {} active factors (max {max_tfi})",
                self.active.tfi, self.active.main
            )));
        }
        let quad_capable = factors.iter().filter(|k| **k == FactorKind::QuadraticCapable).count();
        if self.active.quad > self.active.main.min(quad_capable) {
            return Err(Error::InvalidConfig(format!(
                "{} active quadratics exceed active ({}) or quadratic-capable ({quad_capable}) \
                 factors",
                self.active.quad, self.active.main
            )));
        }
        Ok(())
    }
}

/// The drawn truth of one replication.
#[derive(Debug, Clone)]
pub struct Truth {
    /// 1-based active factor indices.
    pub mains: Vec<usize>,
    pub interactions: Vec<Term>,
    pub quadratics: Vec<Term>,
    /// Coefficients aligned with `terms`.
    pub terms: Vec<Term>,
    pub beta: Vec<f64>,
}

/// Coefficient draw. The magnitude is the drawn signal-to-noise value on
/// the default σ = 1 scale; σ itself only scales the noise, so shrinking it
/// toward zero makes detection noiseless.
fn draw_magnitude(mode: EffectMode, sn: f64, rng: &mut ChaCha8Rng) -> f64 {
    let sn_real = match mode {
        EffectMode::Offset => sn + <Exp1 as Distribution<f64>>::sample(&Exp1, rng),
        EffectMode::Fixed => sn,
    };
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    sign * sn_real
}

/// Draws active effects under strong heredity and their coefficients.
/// Active interactions pair active factors; active quadratics square active
/// quadratic-capable factors.
pub fn generate_truth(
    scenario: &SimScenario,
    m: usize,
    factors: &[FactorKind],
    rng: &mut ChaCha8Rng,
) -> Result<Truth> {
    scenario.validate(m, factors)?;
    // Active factors: uniform subset, resampled until it carries enough
    // quadratic-capable members for the requested quadratics.
    let mut all: Vec<usize> = (1..=m).collect();
    let mains: Vec<usize> = loop {
        all.shuffle(rng);
        let cand: Vec<usize> = {
            let mut c = all[..scenario.active.main].to_vec();
            c.sort_unstable();
            c
        };
        let qc = cand.iter().filter(|&&a| factors[a - 1] == FactorKind::QuadraticCapable).count();
        if qc >= scenario.active.quad {
            break cand;
        }
    };

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, &a) in mains.iter().enumerate() {
        for &b in mains.iter().skip(i + 1) {
            pairs.push((a, b));
        }
    }
    pairs.shuffle(rng);
    let mut interactions: Vec<Term> = pairs[..scenario.active.tfi]
        .iter()
        .map(|&(a, b)| Term::Interaction(a - 1, b - 1))
        .collect();
    interactions.sort();

    let mut qc_actives: Vec<usize> = mains
        .iter()
        .copied()
        .filter(|&a| factors[a - 1] == FactorKind::QuadraticCapable)
        .collect();
    qc_actives.shuffle(rng);
    let mut quadratics: Vec<Term> =
        qc_actives[..scenario.active.quad].iter().map(|&a| Term::Quadratic(a - 1)).collect();
    quadratics.sort();

    let mut terms = Vec::new();
    let mut beta = Vec::new();
    for &a in &mains {
        terms.push(Term::Main(a - 1));
        beta.push(draw_magnitude(scenario.mode, scenario.sn.main, rng));
    }
    for &t in &interactions {
        terms.push(t);
        beta.push(draw_magnitude(scenario.mode, scenario.sn.tfi, rng));
    }
    for &t in &quadratics {
        terms.push(t);
        beta.push(draw_magnitude(scenario.mode, scenario.sn.quad, rng));
    }
    Ok(Truth { mains, interactions, quadratics, terms, beta })
}

/// Rate estimate with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rate {
    pub mean: f64,
    pub se: f64,
}

fn rate_of(samples: &[f64]) -> Option<Rate> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let se = (var / n).sqrt();
    Some(Rate { mean, se })
}

/// Per-class detection rates over the replications. `None` where the class
/// has no true (TPR) or no false (FPR) members, matching blank table cells.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub main_tpr: Option<Rate>,
    pub main_fpr: Option<Rate>,
    pub tfi_tpr: Option<Rate>,
    pub tfi_fpr: Option<Rate>,
    pub quad_tpr: Option<Rate>,
    pub quad_fpr: Option<Rate>,
    pub reps_requested: usize,
    pub reps_used: usize,
    pub failed_fits: usize,
}

struct RepOutcome {
    main_tpr: Option<f64>,
    main_fpr: Option<f64>,
    tfi_tpr: Option<f64>,
    tfi_fpr: Option<f64>,
    quad_tpr: Option<f64>,
    quad_fpr: Option<f64>,
}

/// Runs the full protocol: for each replication draw a fresh truth, simulate
/// y = Xβ + σ·ε, run the two-stage analysis, and score detections. Failed
/// fits are counted and excluded, never silently dropped.
pub fn run_simulation(
    design: &AugmentedDesign,
    scenario: &SimScenario,
    alpha: f64,
    criterion: SelectionCriterion,
) -> Result<SimResult> {
    let m = design.m();
    let factors = design.factors().to_vec();
    scenario.validate(m, &factors)?;
    let order = if factors.iter().any(|k| *k == FactorKind::QuadraticCapable) {
        ModelOrder::FullQuadratic
    } else {
        ModelOrder::TwoFactorInteraction
    };
    let runs = design.all_runs();
    let n = runs.rows();
    let quad_capable = factors.iter().filter(|k| **k == FactorKind::QuadraticCapable).count();

    let outcomes: Vec<std::result::Result<RepOutcome, ()>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(rep as u64 + 1);
            let truth = generate_truth(scenario, m, &factors, &mut rng).map_err(|_| ())?;
            let mut y = vec![0.0; n];
            for (i, yi) in y.iter_mut().enumerate() {
                let run = runs.row(i);
                let mut v = 0.0;
                for (t, b) in truth.terms.iter().zip(&truth.beta) {
                    v += t.eval(run) as f64 * b;
                }
                let noise: f64 =
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                *yi = v + scenario.sigma * noise;
            }
            let (active, best_terms) =
                detect_effects(&y, design, alpha, order, criterion).map_err(|_| ())?;

            let detected_mains: HashSet<usize> = active.into_iter().collect();
            let true_mains: HashSet<usize> = truth.mains.iter().copied().collect();
            let detected_tfi: HashSet<Term> = best_terms
                .iter()
                .copied()
                .filter(|t| matches!(t, Term::Interaction(_, _)))
                .collect();
            let detected_quad: HashSet<Term> = best_terms
                .iter()
                .copied()
                .filter(|t| matches!(t, Term::Quadratic(_)))
                .collect();
            let true_tfi: HashSet<Term> = truth.interactions.iter().copied().collect();
            let true_quad: HashSet<Term> = truth.quadratics.iter().copied().collect();

            let class_rate = |detected: &HashSet<Term>, truth_set: &HashSet<Term>, class_size: usize| {
                let tp = detected.intersection(truth_set).count();
                let fp = detected.difference(truth_set).count();
                let n_true = truth_set.len();
                let n_false = class_size - n_true;
                (
                    (n_true > 0).then(|| tp as f64 / n_true as f64),
                    (n_false > 0).then(|| fp as f64 / n_false as f64),
                )
            };

            let main_tp = detected_mains.intersection(&true_mains).count();
            let main_fp = detected_mains.difference(&true_mains).count();
            let n_false_main = m - true_mains.len();
            let (tfi_tpr, tfi_fpr) =
                class_rate(&detected_tfi, &true_tfi, m * (m - 1) / 2);
            let (quad_tpr, quad_fpr) = class_rate(&detected_quad, &true_quad, quad_capable);
            Ok(RepOutcome {
                main_tpr: (!true_mains.is_empty())
                    .then(|| main_tp as f64 / true_mains.len() as f64),
                main_fpr: (n_false_main > 0).then(|| main_fp as f64 / n_false_main as f64),
                tfi_tpr,
                tfi_fpr,
                quad_tpr,
                quad_fpr,
            })
        })
        .collect();

    let failed_fits = outcomes.iter().filter(|o| o.is_err()).count();
    let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let collect = |f: fn(&RepOutcome) -> Option<f64>| -> Vec<f64> {
        ok.iter().filter_map(|o| f(o)).collect()
    };
    Ok(SimResult {
        main_tpr: rate_of(&collect(|o| o.main_tpr)),
        main_fpr: rate_of(&collect(|o| o.main_fpr)),
        tfi_tpr: rate_of(&collect(|o| o.tfi_tpr)),
        tfi_fpr: rate_of(&collect(|o| o.tfi_fpr)),
        quad_tpr: rate_of(&collect(|o| o.quad_tpr)),
        quad_fpr: rate_of(&collect(|o| o.quad_fpr)),
        reps_requested: scenario.reps,
        reps_used: ok.len(),
        failed_fits,
    })
}
