//! Degrees-of-freedom accounting for foldover designs.
//!
//! A half design H with rank m and m+v rows generates a foldover whose
//! variance-estimator degrees of freedom split into pure error (from
//! replicated runs) and lack of fit, part of which — the fake factor df —
//! comes from the null space of H and is model independent. The closed-form
//! count:
//!
//!   f = v − n0 − Σ_{g≥1} (n_g − 1)
//!   p = max(0, 2·n0 − 1) + 2·Σ_{g≥1} (n_g − 1)
//!
//! where group g collects rows equal to a representative row or its sign
//! flip, and n0 counts center rows. The exact accounting (`exact_dof`)
//! computes g = n − rank(X) and replicate-based p directly and serves as a
//! rank oracle for the closed form.

use crate::design::{full_model_matrix, AugmentedDesign, HalfDesign, ModelOrder, ModelSpec, Runs};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use serde::Serialize;
use std::collections::HashMap;

/// One group of half-design rows: all rows equal to the representative or
/// its sign flip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    /// First-occurring row of the group, as stored in the design.
    pub representative: Vec<i8>,
    /// Row indices belonging to the group.
    pub rows: Vec<usize>,
}

impl Group {
    pub fn multiplicity(&self) -> usize {
        self.rows.len()
    }
}

/// Partition of a half design into center rows and sign-flip groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    pub n0: usize,
    pub groups: Vec<Group>,
}

impl GroupPartition {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.multiplicity()).collect()
    }

    fn replicate_excess(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity() - 1).sum()
    }
}

/// Sign-canonical form: flip the row so its first nonzero entry is +1.
fn canonical(row: &[i8]) -> Vec<i8> {
    match row.iter().find(|&&e| e != 0) {
        Some(&e) if e < 0 => row.iter().map(|&x| -x).collect(),
        _ => row.to_vec(),
    }
}

/// Buckets the rows of a half design into center rows and groups of rows
/// equal to a shared representative up to sign flip.
pub fn partition_groups(h: &HalfDesign) -> GroupPartition {
    let runs = h.runs();
    let mut n0 = 0;
    let mut index: HashMap<Vec<i8>, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for i in 0..runs.rows() {
        let row = runs.row(i);
        if row.iter().all(|&e| e == 0) {
            n0 += 1;
            continue;
        }
        let key = canonical(row);
        match index.get(&key) {
            Some(&g) => groups[g].rows.push(i),
            None => {
                index.insert(key, groups.len());
                groups.push(Group { representative: row.to_vec(), rows: vec![i] });
            }
        }
    }
    GroupPartition { n0, groups }
}

/// Closed-form fake-factor and pure-error degrees of freedom of the
/// foldover generated by a half design.
pub fn closed_form_dof(h: &HalfDesign) -> (usize, usize) {
    let part = partition_groups(h);
    let v = h.v();
    let excess = part.replicate_excess();
    let f = v - part.n0 - excess;
    let p = if part.n0 > 0 { 2 * part.n0 - 1 } else { 0 } + 2 * excess;
    (f, p)
}

/// Degrees-of-freedom summary for a design under a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DofSummary {
    /// Fake factor df of the foldover base (model independent).
    pub f: usize,
    /// Pure error df from exactly replicated runs.
    pub p: usize,
    /// Lack-of-fit df: g − p.
    pub lack_of_fit: usize,
    /// Total df for the pre-selection variance estimator: n − rank(X).
    pub g: usize,
}

/// Pure-error df by exact replicate counting on a run matrix.
pub fn replicate_pure_error(runs: &Runs) -> usize {
    let mut counts: HashMap<&[i8], usize> = HashMap::new();
    for row in runs.iter_rows() {
        *counts.entry(row).or_insert(0) += 1;
    }
    counts.values().map(|c| c - 1).sum()
}

/// Exact accounting on the final run matrix (augmented rows included):
/// g from the numerical rank of [X1 | X2], p by replicate counting,
/// f from the closed form on the half design. For pure foldovers the
/// g ≥ f + p consistency bound is enforced; a violation means the closed
/// form and the rank oracle disagree and is raised as a diagnostic.
pub fn exact_dof(design: &AugmentedDesign, order: ModelOrder) -> Result<DofSummary> {
    let runs = design.all_runs();
    let spec = design.model_spec(order);
    let x = full_model_matrix(&runs, &spec);
    let rank = x.rank()?;
    let n = runs.rows();
    let g = n - rank;
    let p = replicate_pure_error(&runs);
    if g < p {
        return Err(Error::Analysis(format!(
            "rank oracle inconsistency: g = {g} < pure error df {p}"
        )));
    }
    let (f, _) = closed_form_dof(design.base().half());
    if design.n_augmented() == 0 {
        let (tf, tp) = closed_form_dof(design.base().half());
        if g < tf + tp {
            return Err(Error::Analysis(format!(
                "closed-form df (f={tf}, p={tp}) exceed rank-based g={g}"
            )));
        }
        if p != tp {
            return Err(Error::Analysis(format!(
                "replicate counting gives p={p} but the closed form gives {tp}"
            )));
        }
    }
    Ok(DofSummary { f, p, lack_of_fit: g - p, g })
}

/// g for the foldover of a half design, computed without materializing the
/// 2(m+v)-row model matrix: row operations reduce the foldover's [X1 | X2]
/// to rank(H) + rank([1 | X2(H)]), so
///
///   g = 2(m+v) − rank(H) − rank([1 | X2(H)]).
///
/// Used by the search hot loop; property-tested against `exact_dof`.
pub fn foldover_g(half_runs: &Runs, spec: &ModelSpec) -> Result<usize> {
    let n_half = half_runs.rows();
    let m = half_runs.cols();
    let rank_h = half_runs.to_matrix().rank()?;
    if rank_h < m {
        return Err(Error::InvalidDesign(format!("half design rank {rank_h} < m = {m}")));
    }
    let terms = spec.second_order_terms();
    let mut one_x2 = Matrix::zeros(n_half, 1 + terms.len());
    for i in 0..n_half {
        one_x2[(i, 0)] = 1.0;
        let run = half_runs.row(i);
        for (j, t) in terms.iter().enumerate() {
            one_x2[(i, j + 1)] = t.eval(run) as f64;
        }
    }
    let rank_1x2 = one_x2.rank()?;
    Ok(2 * n_half - rank_h - rank_1x2)
}

/// Orthonormal basis of the null space of Hᵀ, labeled by role: columns
/// aligned with center runs, pure-error contrast columns per group, and the
/// remaining genuine fake-factor columns.
#[derive(Debug, Clone)]
pub struct FakeFactorBasis {
    /// One indicator column per center run.
    pub center: Matrix,
    /// Sign-adjusted contrast columns within replicated/folded groups.
    pub pure_error: Matrix,
    /// f columns orthogonal to everything above; model-free lack of fit.
    pub fake: Matrix,
}

impl FakeFactorBasis {
    /// All v columns side by side.
    pub fn all(&self) -> Matrix {
        self.center.hstack(&self.pure_error).hstack(&self.fake)
    }
}

/// Computes the labeled null-space decomposition of a half design.
pub fn fake_factor_basis(h: &HalfDesign) -> Result<FakeFactorBasis> {
    let runs = h.runs();
    let n = runs.rows();
    let part = partition_groups(h);
    let (f_expected, _) = closed_form_dof(h);

    // Center-run indicator columns.
    let center_rows: Vec<usize> = (0..n)
        .filter(|&i| runs.row(i).iter().all(|&e| e == 0))
        .collect();
    let mut center = Matrix::zeros(n, center_rows.len());
    for (j, &r) in center_rows.iter().enumerate() {
        center[(r, j)] = 1.0;
    }

    // Within-group contrasts. Rows of a group equal s_r · h_g with
    // s_r = ±1; a vector c supported on the group satisfies Hᵀc = 0 iff
    // Σ c_r s_r = 0, so contrasts orthogonal to 1 are carried over via the
    // sign pattern: columns s ∘ (Helmert contrast).
    let mut pe_cols: Vec<Vec<f64>> = Vec::new();
    for grp in &part.groups {
        let k = grp.multiplicity();
        if k < 2 {
            continue;
        }
        let signs: Vec<f64> = grp
            .rows
            .iter()
            .map(|&r| if runs.row(r) == grp.representative.as_slice() { 1.0 } else { -1.0 })
            .collect();
        for j in 1..k {
            // Helmert contrast: (1,…,1,−j,0,…)/√(j(j+1)).
            let norm = (j as f64 * (j as f64 + 1.0)).sqrt();
            let mut col = vec![0.0; n];
            for (pos, &r) in grp.rows.iter().enumerate().take(j) {
                col[r] = signs[pos] / norm;
            }
            col[grp.rows[j]] = -(j as f64) * signs[j] / norm;
            pe_cols.push(col);
        }
    }
    let pe_count = pe_cols.len();
    let pure_error = Matrix::from_fn(n, pe_count, |i, j| pe_cols[j][i]);

    // Null space of Hᵀ: residuals of the identity after projection onto
    // col(H), orthonormalized.
    let qr = runs.to_matrix().qr_pivot();
    let mut null_cols: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let proj = qr.project(&e);
        let resid: Vec<f64> = e.iter().zip(&proj).map(|(a, b)| a - b).collect();
        null_cols.push(resid);
    }
    // Project off the labeled columns, then orthonormalize what is left.
    let mut labeled: Vec<Vec<f64>> = Vec::new();
    for j in 0..center.cols() {
        labeled.push(center.col(j));
    }
    labeled.extend(pe_cols.iter().cloned());
    let mut fake_cols: Vec<Vec<f64>> = Vec::new();
    for mut cand in null_cols {
        for basis in labeled.iter().chain(fake_cols.iter()) {
            let dot: f64 = cand.iter().zip(basis).map(|(a, b)| a * b).sum();
            for (c, b) in cand.iter_mut().zip(basis) {
                *c -= dot * b;
            }
        }
        let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for c in cand.iter_mut() {
                *c /= norm;
            }
            fake_cols.push(cand);
        }
    }
    if fake_cols.len() != f_expected {
        return Err(Error::Analysis(format!(
            "fake-factor basis has {} columns but the closed form expects {f_expected}",
            fake_cols.len()
        )));
    }
    let fake = Matrix::from_fn(n, fake_cols.len(), |i, j| fake_cols[j][i]);
    Ok(FakeFactorBasis { center, pure_error, fake })
}
