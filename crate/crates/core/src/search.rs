//! Design construction by restricted coordinate exchange over half designs,
//! and Bayesian-A augmentation of an existing foldover.
//!
//! The half design is split into unrestricted rows H_u and restricted rows
//! H_r (center runs plus rows forced to replicate an H_u row). A sweep
//! alternates coordinate exchanges on H_u — mirrored into any H_r rows that
//! replicate the touched row — with row exchanges that re-point each
//! non-center H_r row at a (possibly different) H_u row. Exchanges are
//! accepted only on strict criterion improvement, every start runs on its
//! own RNG stream, and the multi-start reduction is a deterministic argmin
//! with start-index tie-breaking, so results do not depend on thread count.

use crate::criteria::{bayes_a, c_constant, EciReport};
use crate::design::{
    full_model_matrix, AugmentedDesign, FactorKind, FoldoverDesign, HalfDesign, ModelOrder,
    ModelSpec, Runs, Term,
};
use crate::dof::foldover_g;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::special::t_quantile;
use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Minimum criterion decrease for an exchange to be accepted.
const IMPROVEMENT_EPS: f64 = 1e-10;

/// Configuration of the coordinate-exchange search.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Total runs of the foldover design (must be even).
    pub n: usize,
    /// Number of factors.
    pub m: usize,
    pub factors: Vec<FactorKind>,
    /// Center runs in the half design.
    pub n0: usize,
    /// Half-design rows forced to replicate an unrestricted row.
    pub forced_replicates: usize,
    pub alpha: f64,
    pub model: ModelOrder,
    pub n_starts: usize,
    pub seed: u64,
    /// Cap on improvement sweeps per start.
    pub max_sweeps: usize,
}

impl SearchConfig {
    pub fn new(n: usize, m: usize, factors: Vec<FactorKind>) -> SearchConfig {
        SearchConfig {
            n,
            m,
            factors,
            n0: 0,
            forced_replicates: 0,
            alpha: 0.05,
            model: ModelOrder::TwoFactorInteraction,
            n_starts: 1000,
            seed: 0,
            max_sweeps: 50,
        }
    }

    fn half_rows(&self) -> usize {
        self.n / 2
    }

    fn v(&self) -> usize {
        self.half_rows() - self.m
    }

    /// Quadratic-capable factor indexes that get a pinned-zero row when the
    /// model carries quadratic terms.
    fn pinned_factors(&self) -> Vec<usize> {
        if self.model != ModelOrder::FullQuadratic {
            return Vec::new();
        }
        (0..self.m).filter(|&j| self.factors[j] == FactorKind::QuadraticCapable).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be positive".into()));
        }
        if self.factors.len() != self.m {
            return Err(Error::InvalidConfig(format!(
                "{} factor kinds for m = {}",
                self.factors.len(),
                self.m
            )));
        }
        if self.n % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "foldover designs need an even run count; n = {} is odd — generate an even \
                 foldover and add the extra run with `augment`",
                self.n
            )));
        }
        if self.half_rows() < self.m {
            return Err(Error::InvalidConfig(format!(
                "n/2 = {} rows cannot reach rank m = {}",
                self.half_rows(),
                self.m
            )));
        }
        if self.n0 + self.forced_replicates > self.v() {
            return Err(Error::InvalidConfig(format!(
                "n0 + R = {} exceeds the slack v = {}; rank m would be impossible",
                self.n0 + self.forced_replicates,
                self.v()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be positive".into()));
        }
        let unrestricted = self.half_rows() - self.n0 - self.forced_replicates;
        if self.forced_replicates > 0 && unrestricted == 0 {
            return Err(Error::InvalidConfig(
                "forced replicates need at least one unrestricted row to copy".into(),
            ));
        }
        let pinned = self.pinned_factors().len();
        if pinned > unrestricted {
            return Err(Error::InvalidConfig(format!(
                "{pinned} quadratic-capable factors need {pinned} pinned-zero rows but only \
                 {unrestricted} unrestricted rows exist"
            )));
        }
        Ok(())
    }
}

/// Working state of one search start. Row layout: H_u rows first, then the
/// forced-replicate rows, then the center rows.
struct SearchState {
    runs: Runs,
    u_rows: usize,
    /// For each forced-replicate row (offset into the H_r block), the H_u
    /// row it currently copies.
    replicates: Vec<usize>,
    /// Pinned (row, col) positions inside H_u.
    pinned: BTreeSet<(usize, usize)>,
    spec: ModelSpec,
}

impl SearchState {
    fn replicate_row_index(&self, k: usize) -> usize {
        self.u_rows + k
    }

    /// ECI of the foldover of the current half design; `None` when the half
    /// design is rank deficient. Uses the reduced rank identity
    /// g = 2(m+v) − m − rank([1 | X2(H)]) and a per-g critical-value cache.
    fn eci(&self, ct_cache: &mut CtCache) -> Option<f64> {
        let gram = self.runs.to_matrix().gram();
        let inv = gram.sym_inverse().ok()?;
        let g = foldover_g(&self.runs, &self.spec).ok()?;
        let m = self.runs.cols() as f64;
        let avg: f64 =
            inv.diagonal().iter().map(|&v| (v / 2.0).sqrt()).sum::<f64>() / m;
        Some(match ct_cache.get(g) {
            Some(ct) => ct * avg,
            None => f64::INFINITY,
        })
    }
}

/// Cache of c(g)·t(α/2, g) values keyed by g.
struct CtCache {
    alpha: f64,
    values: Vec<Option<Option<f64>>>,
}

impl CtCache {
    fn new(alpha: f64, max_g: usize) -> CtCache {
        CtCache { alpha, values: vec![None; max_g + 1] }
    }

    /// `None` means g = 0 (criterion degenerate).
    fn get(&mut self, g: usize) -> Option<f64> {
        if g == 0 {
            return None;
        }
        if self.values[g].is_none() {
            let ct = c_constant(g)
                .and_then(|c| t_quantile(self.alpha / 2.0, g).map(|t| c * t))
                .ok();
            self.values[g] = Some(ct);
        }
        self.values[g].unwrap()
    }
}

fn exchange_levels(kind: FactorKind, model: ModelOrder) -> &'static [i8] {
    match (kind, model) {
        (FactorKind::QuadraticCapable, ModelOrder::FullQuadratic) => &[-1, 0, 1],
        _ => &[-1, 1],
    }
}

/// Outcome of one search: the half design plus its criterion report.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub half: HalfDesign,
    pub report: EciReport,
    /// Index of the start that produced the winner.
    pub start_index: usize,
}

/// Multi-start restricted coordinate exchange minimizing the foldover ECI.
pub fn coordinate_exchange(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let results: Vec<Option<(f64, Runs, Vec<usize>)>> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|start| run_start(cfg, start as u64))
        .collect();
    let mut best: Option<(f64, usize, &Runs, &Vec<usize>)> = None;
    for (idx, r) in results.iter().enumerate() {
        if let Some((eci, runs, reps)) = r {
            let better = match best {
                None => true,
                Some((b, _, _, _)) => *eci < b,
            };
            if better {
                best = Some((*eci, idx, runs, reps));
            }
        }
    }
    let (_, start_index, runs, _replicates) = best.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "no feasible rank-{} half design found in {} starts; the configuration may be \
             infeasible",
            cfg.m, cfg.n_starts
        ))
    })?;

    // Reassemble the structural bookkeeping and validate the invariants.
    let u_rows = cfg.half_rows() - cfg.n0 - cfg.forced_replicates;
    let forced: Vec<usize> = (0..cfg.forced_replicates).map(|k| u_rows + k).collect();
    let mut pinned = BTreeSet::new();
    for (i, &j) in cfg.pinned_factors().iter().enumerate() {
        pinned.insert((i, j));
    }
    let half = HalfDesign::new(runs.clone(), cfg.factors.clone(), cfg.n0, forced, pinned)?;
    let report = crate::criteria::eci_foldover(&half, cfg.alpha, cfg.model)?;
    Ok(SearchOutcome { half, report, start_index })
}

/// One start: random feasible initial design, then sweeps to convergence.
/// Returns the criterion value, the half design, and the replicate targets.
fn run_start(cfg: &SearchConfig, start: u64) -> Option<(f64, Runs, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start + 1);
    let mut ct_cache = CtCache::new(cfg.alpha, cfg.n);
    let mut state = initial_state(cfg, &mut rng, &mut ct_cache)?;
    let mut current = state.eci(&mut ct_cache)?;

    for _ in 0..cfg.max_sweeps {
        let mut improved = false;

        // Coordinate exchanges over unrestricted rows.
        for row in 0..state.u_rows {
            for col in 0..cfg.m {
                if state.pinned.contains(&(row, col)) {
                    continue;
                }
                let original = state.runs.get(row, col);
                let mirror_rows: Vec<usize> = state
                    .replicates
                    .iter()
                    .enumerate()
                    .filter(|&(_, &target)| target == row)
                    .map(|(k, _)| state.replicate_row_index(k))
                    .collect();
                let mut best_level = original;
                let mut best_val = current;
                for &level in exchange_levels(cfg.factors[col], cfg.model) {
                    if level == original {
                        continue;
                    }
                    state.runs.set(row, col, level);
                    for &mr in &mirror_rows {
                        state.runs.set(mr, col, level);
                    }
                    if let Some(val) = state.eci(&mut ct_cache) {
                        if val < best_val - IMPROVEMENT_EPS {
                            best_val = val;
                            best_level = level;
                        }
                    }
                }
                state.runs.set(row, col, best_level);
                for &mr in &mirror_rows {
                    state.runs.set(mr, col, best_level);
                }
                if best_level != original {
                    current = best_val;
                    improved = true;
                }
            }
        }

        // Row exchanges: re-point each forced replicate at the best H_u row.
        for k in 0..state.replicates.len() {
            let row_idx = state.replicate_row_index(k);
            let original_target = state.replicates[k];
            let mut best_target = original_target;
            let mut best_val = current;
            for target in 0..state.u_rows {
                if target == best_target && target == original_target {
                    continue;
                }
                let row = state.runs.row_vec(target);
                state.runs.set_row(row_idx, &row);
                if let Some(val) = state.eci(&mut ct_cache) {
                    if val < best_val - IMPROVEMENT_EPS {
                        best_val = val;
                        best_target = target;
                    }
                }
            }
            let row = state.runs.row_vec(best_target);
            state.runs.set_row(row_idx, &row);
            state.replicates[k] = best_target;
            if best_target != original_target {
                current = best_val;
                improved = true;
            }
        }

        if !improved {
            break;
        }
    }

    Some((current, state.runs, state.replicates))
}

/// Draws a random feasible initial design: uniform levels over the exchange
/// sets, pinned zeros in place, H_r copying random H_u rows, centers zero.
/// Rejection-sampled until the half design has rank m (capped).
fn initial_state(
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
    ct_cache: &mut CtCache,
) -> Option<SearchState> {
    const MAX_TRIES: usize = 1000;
    let rows = cfg.half_rows();
    let u_rows = rows - cfg.n0 - cfg.forced_replicates;
    let mut pinned = BTreeSet::new();
    for (i, &j) in cfg.pinned_factors().iter().enumerate() {
        pinned.insert((i, j));
    }
    for _ in 0..MAX_TRIES {
        let mut runs = Runs::new(rows, cfg.m, vec![0; rows * cfg.m]).ok()?;
        for r in 0..u_rows {
            for c in 0..cfg.m {
                if pinned.contains(&(r, c)) {
                    continue;
                }
                let levels = exchange_levels(cfg.factors[c], cfg.model);
                runs.set(r, c, *levels.choose(rng).unwrap());
            }
        }
        let replicates: Vec<usize> =
            (0..cfg.forced_replicates).map(|_| rng.random_range(0..u_rows)).collect();
        for (k, &target) in replicates.iter().enumerate() {
            let row = runs.row_vec(target);
            runs.set_row(u_rows + k, &row);
        }
        // Center rows stay all-zero (already initialized).
        let state = SearchState {
            runs,
            u_rows,
            replicates,
            pinned: pinned.clone(),
            spec: ModelSpec::new(cfg.model, cfg.factors.to_vec()),
        };
        if state.eci(ct_cache).is_some() {
            return Some(state);
        }
    }
    None
}

/// Configuration of Bayesian-A augmentation.
#[derive(Debug, Clone)]
pub struct AugmentConfig {
    /// Rows to append.
    pub n_add: usize,
    /// Prior variance on second-order terms.
    pub tau2: f64,
    pub model: ModelOrder,
    pub n_starts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
}

impl AugmentConfig {
    pub fn new(n_add: usize) -> AugmentConfig {
        AugmentConfig {
            n_add,
            tau2: 50.0,
            model: ModelOrder::TwoFactorInteraction,
            n_starts: 100,
            seed: 0,
            max_sweeps: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_add == 0 {
            return Err(Error::InvalidConfig("n_add must be at least 1".into()));
        }
        if self.tau2 <= 0.0 {
            return Err(Error::InvalidConfig("tau2 must be positive".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be positive".into()));
        }
        Ok(())
    }
}

/// Augmentation outcome: the combined design and the criterion minimum.
#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub design: AugmentedDesign,
    pub criterion: f64,
    pub start_index: usize,
}

/// Row of term values for a single candidate run under the full model.
fn model_row(run: &[i8], terms: &[Term]) -> Vec<f64> {
    terms.iter().map(|t| t.eval(run) as f64).collect()
}

/// Bayesian-A criterion for a fixed base information matrix plus candidate
/// extra rows.
fn criterion_for(
    base_info: &Matrix,
    extra: &Runs,
    terms: &[Term],
    tau2: f64,
    m: usize,
) -> Option<f64> {
    let p = base_info.rows();
    let mut xa = Matrix::zeros(extra.rows(), p);
    for i in 0..extra.rows() {
        let row = model_row(extra.row(i), terms);
        for (j, v) in row.iter().enumerate() {
            xa[(i, j)] = *v;
        }
    }
    bayes_a(base_info, &xa, tau2, m).ok()
}

/// Chooses `cfg.n_add` augmentation rows minimizing the Bayesian-A
/// criterion by multi-start coordinate exchange over the extra block. The
/// base foldover rows are never modified. Candidate levels follow the factor
/// kinds (the center level is available for quadratic-capable factors).
pub fn augment(base: &FoldoverDesign, cfg: &AugmentConfig) -> Result<AugmentOutcome> {
    cfg.validate()?;
    let m = base.runs().cols();
    let factors = base.factors().to_vec();
    let spec = ModelSpec::new(cfg.model, factors.clone());
    let mut terms = vec![Term::Intercept];
    terms.extend((0..m).map(Term::Main));
    terms.extend(spec.second_order_terms());
    let base_info = full_model_matrix(base.runs(), &spec).gram();

    let results: Vec<Option<(f64, Runs)>> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(start as u64 + 1);
            augment_start(&base_info, &factors, &terms, cfg, m, &mut rng)
        })
        .collect();

    let mut best: Option<(f64, usize, &Runs)> = None;
    for (idx, r) in results.iter().enumerate() {
        if let Some((val, runs)) = r {
            if best.is_none() || *val < best.unwrap().0 {
                best = Some((*val, idx, runs));
            }
        }
    }
    let (criterion, start_index, extra) = best
        .ok_or_else(|| Error::InvalidConfig("augmentation found no feasible block".into()))?;
    let design = base.clone().augment(extra.clone())?;
    Ok(AugmentOutcome { design, criterion, start_index })
}

fn augment_start(
    base_info: &Matrix,
    factors: &[FactorKind],
    terms: &[Term],
    cfg: &AugmentConfig,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, Runs)> {
    let mut extra = Runs::new(cfg.n_add, m, vec![0; cfg.n_add * m]).ok()?;
    for i in 0..cfg.n_add {
        for j in 0..m {
            extra.set(i, j, *factors[j].levels().choose(rng).unwrap());
        }
    }
    let mut current = criterion_for(base_info, &extra, terms, cfg.tau2, m)?;
    for _ in 0..cfg.max_sweeps {
        let mut improved = false;
        for i in 0..cfg.n_add {
            for j in 0..m {
                let original = extra.get(i, j);
                let mut best_level = original;
                let mut best_val = current;
                for &level in factors[j].levels() {
                    if level == original {
                        continue;
                    }
                    extra.set(i, j, level);
                    if let Some(val) = criterion_for(base_info, &extra, terms, cfg.tau2, m) {
                        if val < best_val - IMPROVEMENT_EPS {
                            best_val = val;
                            best_level = level;
                        }
                    }
                }
                extra.set(i, j, best_level);
                if best_level != original {
                    current = best_val;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Some((current, extra))
}
