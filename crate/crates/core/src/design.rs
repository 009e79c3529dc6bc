//! Design representations: factors, half designs, foldovers, augmented
//! designs, and the derived model matrices.
//!
//! Run matrices keep integer entries over {-1, 0, +1}. Inner products of
//! such columns are formed in integer arithmetic before any conversion to
//! floating point, so exact cancellations (the zero alias blocks a foldover
//! guarantees) survive as exact zeros.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Kind of experimental factor. Two-level factors take settings in {-1, +1};
/// quadratic-capable factors additionally admit the center level 0 and a
/// quadratic model term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorKind {
    TwoLevel,
    QuadraticCapable,
}

impl FactorKind {
    pub fn levels(self) -> &'static [i8] {
        match self {
            FactorKind::TwoLevel => &[-1, 1],
            FactorKind::QuadraticCapable => &[-1, 0, 1],
        }
    }

    pub fn admits(self, level: i8) -> bool {
        self.levels().contains(&level)
    }
}

/// Model order for the second-order framework: main effects only, main
/// effects plus two-factor interactions, or the full quadratic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelOrder {
    MainEffects,
    TwoFactorInteraction,
    FullQuadratic,
}

impl ModelOrder {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "main" | "main-effects" | "me" => Ok(ModelOrder::MainEffects),
            "2fi" | "two-factor-interaction" | "tfi" => Ok(ModelOrder::TwoFactorInteraction),
            "quad" | "quadratic" | "full-quadratic" => Ok(ModelOrder::FullQuadratic),
            other => Err(Error::InvalidConfig(format!(
                "unknown model '{other}' (expected main|2fi|quad)"
            ))),
        }
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelOrder::MainEffects => write!(f, "main-effects"),
            ModelOrder::TwoFactorInteraction => write!(f, "2fi"),
            ModelOrder::FullQuadratic => write!(f, "full-quadratic"),
        }
    }
}

/// Model specification: an order together with the factor kinds. Quadratic
/// columns are generated only for quadratic-capable factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub order: ModelOrder,
    pub factors: Vec<FactorKind>,
}

impl ModelSpec {
    pub fn new(order: ModelOrder, factors: Vec<FactorKind>) -> Self {
        ModelSpec { order, factors }
    }

    pub fn all_two_level(order: ModelOrder, m: usize) -> Self {
        ModelSpec { order, factors: vec![FactorKind::TwoLevel; m] }
    }

    pub fn all_quadratic(order: ModelOrder, m: usize) -> Self {
        ModelSpec { order, factors: vec![FactorKind::QuadraticCapable; m] }
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    fn quad_columns(&self) -> Vec<usize> {
        match self.order {
            ModelOrder::FullQuadratic => (0..self.factors.len())
                .filter(|&j| self.factors[j] == FactorKind::QuadraticCapable)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Second-order terms in the fixed report order: interactions
    /// (1,2),(1,3),…,(m-1,m) lexicographically, then squares of
    /// quadratic-capable factors.
    pub fn second_order_terms(&self) -> Vec<Term> {
        let m = self.factors.len();
        let mut terms = Vec::new();
        if matches!(self.order, ModelOrder::TwoFactorInteraction | ModelOrder::FullQuadratic) {
            for a in 0..m {
                for b in a + 1..m {
                    terms.push(Term::Interaction(a, b));
                }
            }
        }
        for j in self.quad_columns() {
            terms.push(Term::Quadratic(j));
        }
        terms
    }

    /// Total number of model terms, intercept included.
    pub fn term_count(&self) -> usize {
        1 + self.factors.len() + self.second_order_terms().len()
    }
}

/// A model term. Factor indices are 0-based internally; display is 1-based
/// to match the d1, d1d4, d3² naming convention of design reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Intercept,
    Main(usize),
    Interaction(usize, usize),
    Quadratic(usize),
}

impl Term {
    /// Column value of this term for a single run.
    pub fn eval(&self, run: &[i8]) -> i32 {
        match *self {
            Term::Intercept => 1,
            Term::Main(j) => run[j] as i32,
            Term::Interaction(a, b) => run[a] as i32 * run[b] as i32,
            Term::Quadratic(j) => {
                let v = run[j] as i32;
                v * v
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Term::Intercept => write!(f, "intercept"),
            Term::Main(j) => write!(f, "d{}", j + 1),
            Term::Interaction(a, b) => write!(f, "d{}d{}", a + 1, b + 1),
            Term::Quadratic(j) => write!(f, "d{}^2", j + 1),
        }
    }
}

/// Run matrix with entries in {-1, 0, +1}, one run per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Runs {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl Runs {
    pub fn new(rows: usize, cols: usize, entries: Vec<i8>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "run matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| ![-1, 0, 1].contains(*e)) {
            return Err(Error::InvalidDesign(format!("entry {bad} outside {{-1,0,1}}")));
        }
        Ok(Runs { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged run matrix".into()));
        }
        Runs::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i8) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<i8> {
        self.row(i).to_vec()
    }

    pub fn set_row(&mut self, i: usize, row: &[i8]) {
        self.entries[i * self.cols..(i + 1) * self.cols].copy_from_slice(row);
    }

    pub fn negated(&self) -> Runs {
        Runs {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| -e).collect(),
        }
    }

    pub fn stack(&self, other: &Runs) -> Result<Runs> {
        if other.rows > 0 && other.cols != self.cols {
            return Err(Error::Dimension("stack width mismatch".into()));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(Runs { rows: self.rows + other.rows, cols: self.cols, entries })
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) as f64)
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[i8]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Checks every entry against the per-factor level sets.
    pub fn check_levels(&self, factors: &[FactorKind]) -> Result<()> {
        if factors.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{} factor kinds for {} columns",
                factors.len(),
                self.cols
            )));
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !factors[j].admits(self.get(i, j)) {
                    return Err(Error::InvalidDesign(format!(
                        "run {}, factor {}: level {} not allowed for a {:?} factor",
                        i + 1,
                        j + 1,
                        self.get(i, j),
                        factors[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Integer model matrix for a run matrix under a model spec. Columns are the
/// terms in fixed order; entries are exact.
#[derive(Debug, Clone)]
pub struct ModelMatrix {
    pub terms: Vec<Term>,
    rows: usize,
    entries: Vec<i32>,
}

impl ModelMatrix {
    fn build(runs: &Runs, terms: Vec<Term>) -> ModelMatrix {
        let rows = runs.rows();
        let mut entries = Vec::with_capacity(rows * terms.len());
        for i in 0..rows {
            let run = runs.row(i);
            for t in &terms {
                entries.push(t.eval(run));
            }
        }
        ModelMatrix { terms, rows, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.terms.len()
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.entries[i * self.terms.len() + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.terms.len(), |i, j| self.get(i, j) as f64)
    }

    /// Exact integer cross product `selfᵀ · other`.
    pub fn cross(&self, other: &ModelMatrix) -> Vec<Vec<i64>> {
        assert_eq!(self.rows, other.rows);
        let a = self.cols();
        let b = other.cols();
        let mut out = vec![vec![0i64; b]; a];
        for i in 0..self.rows {
            for p in 0..a {
                let v = self.get(i, p) as i64;
                if v == 0 {
                    continue;
                }
                for q in 0..b {
                    out[p][q] += v * other.get(i, q) as i64;
                }
            }
        }
        out
    }

    /// Exact integer Gram matrix as floating point.
    pub fn gram_matrix(&self) -> Matrix {
        let g = self.cross(self);
        Matrix::from_fn(self.cols(), self.cols(), |i, j| g[i][j] as f64)
    }
}

/// First- and second-order model matrices (X1 = [1 | D], X2 = second-order
/// columns) for a run matrix.
pub struct ModelMatrices {
    pub x1: ModelMatrix,
    pub x2: ModelMatrix,
}

/// Builds X1 and X2 for a run matrix under the model spec. X1 is always
/// [1 | D]; X2 holds interactions then squares in the fixed report order
/// (empty under a main-effects spec).
pub fn model_matrix(runs: &Runs, spec: &ModelSpec) -> ModelMatrices {
    let m = runs.cols();
    assert_eq!(spec.m(), m, "model spec arity mismatch");
    let mut x1_terms = vec![Term::Intercept];
    x1_terms.extend((0..m).map(Term::Main));
    ModelMatrices {
        x1: ModelMatrix::build(runs, x1_terms),
        x2: ModelMatrix::build(runs, spec.second_order_terms()),
    }
}

/// Full model matrix [X1 | X2] as floating point.
pub fn full_model_matrix(runs: &Runs, spec: &ModelSpec) -> Matrix {
    let mm = model_matrix(runs, spec);
    if mm.x2.cols() == 0 {
        mm.x1.to_matrix()
    } else {
        mm.x1.to_matrix().hstack(&mm.x2.to_matrix())
    }
}

/// Alias matrix A = (X1ᵀX1)⁻¹ X1ᵀX2. The cross product X1ᵀX2 is exact
/// integer arithmetic, so rows that cancel in a foldover are exactly zero.
pub fn alias_matrix(mm: &ModelMatrices) -> Result<Matrix> {
    let x1tx1 = mm.x1.gram_matrix();
    let inv = x1tx1.sym_inverse()?;
    let cross = mm.x1.cross(&mm.x2);
    let crossm = Matrix::from_fn(mm.x1.cols(), mm.x2.cols(), |i, j| cross[i][j] as f64);
    Ok(inv.matmul(&crossm))
}

/// A half design: the generator of a foldover. Carries the structural
/// bookkeeping the search maintains (center rows, forced replicate rows,
/// zero-pinned coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct HalfDesign {
    entries: Runs,
    factors: Vec<FactorKind>,
    n0: usize,
    forced_replicate_rows: Vec<usize>,
    zero_fixed: BTreeSet<(usize, usize)>,
}

impl HalfDesign {
    /// Validates and wraps a half design. Checks level sets, center-run
    /// count, replicate structure, pinned zeros, and rank m.
    pub fn new(
        entries: Runs,
        factors: Vec<FactorKind>,
        n0: usize,
        forced_replicate_rows: Vec<usize>,
        zero_fixed: BTreeSet<(usize, usize)>,
    ) -> Result<Self> {
        entries.check_levels(&factors)?;
        let m = entries.cols();
        let rows = entries.rows();
        if rows < m {
            return Err(Error::InvalidDesign(format!(
                "half design with {rows} rows cannot have rank {m}"
            )));
        }
        let centers = entries.iter_rows().filter(|r| r.iter().all(|&e| e == 0)).count();
        if centers != n0 {
            return Err(Error::InvalidDesign(format!(
                "declared n0={n0} but found {centers} all-zero rows"
            )));
        }
        for &r in &forced_replicate_rows {
            if r >= rows {
                return Err(Error::InvalidDesign(format!("replicate row index {r} out of range")));
            }
            let row = entries.row(r);
            if row.iter().all(|&e| e == 0) {
                continue;
            }
            let replicated = (0..rows)
                .filter(|&i| i != r && !forced_replicate_rows.contains(&i))
                .any(|i| entries.row(i) == row);
            if !replicated {
                return Err(Error::InvalidDesign(format!(
                    "row {r} is marked as a forced replicate but matches no unrestricted row"
                )));
            }
        }
        for &(r, c) in &zero_fixed {
            if r >= rows || c >= m {
                return Err(Error::InvalidDesign(format!("pinned zero ({r},{c}) out of range")));
            }
            if entries.get(r, c) != 0 {
                return Err(Error::InvalidDesign(format!(
                    "position ({r},{c}) is pinned to 0 but holds {}",
                    entries.get(r, c)
                )));
            }
        }
        let rank = entries.to_matrix().rank()?;
        if rank != m {
            return Err(Error::InvalidDesign(format!(
                "half design rank {rank} < m = {m}"
            )));
        }
        Ok(HalfDesign { entries, factors, n0, forced_replicate_rows, zero_fixed })
    }

    /// Convenience constructor for plain half designs without structural
    /// bookkeeping; n0 is counted from the rows.
    pub fn plain(entries: Runs, factors: Vec<FactorKind>) -> Result<Self> {
        let n0 = entries.iter_rows().filter(|r| r.iter().all(|&e| e == 0)).count();
        HalfDesign::new(entries, factors, n0, Vec::new(), BTreeSet::new())
    }

    pub fn runs(&self) -> &Runs {
        &self.entries
    }

    pub fn factors(&self) -> &[FactorKind] {
        &self.factors
    }

    pub fn m(&self) -> usize {
        self.entries.cols()
    }

    pub fn n_rows(&self) -> usize {
        self.entries.rows()
    }

    /// Null-space dimension v = rows − m.
    pub fn v(&self) -> usize {
        self.entries.rows() - self.entries.cols()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn forced_replicate_rows(&self) -> &[usize] {
        &self.forced_replicate_rows
    }

    pub fn zero_fixed(&self) -> &BTreeSet<(usize, usize)> {
        &self.zero_fixed
    }

    /// Stacks the half design over its negation.
    pub fn foldover(&self) -> FoldoverDesign {
        let runs = self.entries.stack(&self.entries.negated()).expect("same width");
        FoldoverDesign { half: self.clone(), runs }
    }
}

/// A foldover design: the half design stacked over its sign flip.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldoverDesign {
    half: HalfDesign,
    runs: Runs,
}

impl FoldoverDesign {
    pub fn half(&self) -> &HalfDesign {
        &self.half
    }

    pub fn runs(&self) -> &Runs {
        &self.runs
    }

    pub fn n(&self) -> usize {
        self.runs.rows()
    }

    pub fn factors(&self) -> &[FactorKind] {
        self.half.factors()
    }

    /// Appends augmentation rows (which need not fold over).
    pub fn augment(self, extra: Runs) -> Result<AugmentedDesign> {
        if extra.rows() > 0 {
            extra.check_levels(self.half.factors())?;
        }
        Ok(AugmentedDesign { base: self, extra })
    }

    pub fn into_design(self) -> AugmentedDesign {
        let m = self.runs.cols();
        AugmentedDesign { base: self, extra: Runs::new(0, m, Vec::new()).unwrap() }
    }
}

/// A foldover design plus optional augmentation rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDesign {
    base: FoldoverDesign,
    extra: Runs,
}

impl AugmentedDesign {
    pub fn base(&self) -> &FoldoverDesign {
        &self.base
    }

    pub fn extra(&self) -> &Runs {
        &self.extra
    }

    pub fn n_augmented(&self) -> usize {
        self.extra.rows()
    }

    pub fn n(&self) -> usize {
        self.base.n() + self.extra.rows()
    }

    pub fn m(&self) -> usize {
        self.base.runs().cols()
    }

    pub fn factors(&self) -> &[FactorKind] {
        self.base.factors()
    }

    /// Full run matrix: foldover rows then augmentation rows.
    pub fn all_runs(&self) -> Runs {
        self.base.runs().stack(&self.extra).expect("same width")
    }

    /// Row indices of the foldover base within the full run matrix.
    pub fn foldover_row_range(&self) -> std::ops::Range<usize> {
        0..self.base.n()
    }

    pub fn model_spec(&self, order: ModelOrder) -> ModelSpec {
        ModelSpec::new(order, self.base.factors().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn runs_of(rows: &[&[i8]]) -> Runs {
        Runs::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn h1() -> HalfDesign {
        let r = runs_of(&[
            &[1, 1, 1, 1],
            &[-1, 1, -1, 1],
            &[1, -1, -1, 1],
            &[-1, -1, 1, 1],
            &[1, 1, 1, -1],
            &[-1, 1, -1, -1],
            &[1, -1, -1, -1],
            &[-1, -1, 1, -1],
        ]);
        HalfDesign::plain(r, vec![FactorKind::TwoLevel; 4]).unwrap()
    }

    #[test]
    fn foldover_stacks_negation() {
        let d = h1().foldover();
        assert_eq!(d.n(), 16);
        for i in 0..8 {
            for j in 0..4 {
                assert_eq!(d.runs().get(i + 8, j), -d.runs().get(i, j));
            }
        }
    }

    #[test]
    fn degenerate_half_design_rejected() {
        let r = runs_of(&[&[0, 0, 0]]);
        assert!(HalfDesign::plain(r, vec![FactorKind::QuadraticCapable; 3]).is_err());
    }

    #[test]
    fn level_violation_rejected() {
        let r = runs_of(&[&[1, 0], &[-1, 1], &[1, 1]]);
        let err = HalfDesign::plain(r, vec![FactorKind::TwoLevel; 2]).unwrap_err();
        assert!(err.to_string().contains("factor 2"), "{err}");
    }

    #[test]
    fn model_matrix_single_run_2fi() {
        let r = runs_of(&[&[1, 1]]);
        let spec = ModelSpec::all_two_level(ModelOrder::TwoFactorInteraction, 2);
        let mm = model_matrix(&r, &spec);
        assert_eq!(mm.x1.cols(), 3);
        assert_eq!(mm.x2.cols(), 1);
        assert_eq!(mm.x1.get(0, 0), 1);
        assert_eq!(mm.x1.get(0, 1), 1);
        assert_eq!(mm.x2.get(0, 0), 1);
    }

    #[test]
    fn quad_column_count_for_foldover() {
        let d = h1().foldover();
        let spec = ModelSpec::all_quadratic(ModelOrder::FullQuadratic, 4);
        let mm = model_matrix(d.runs(), &spec);
        // C(4,2) interactions + 4 squares
        assert_eq!(mm.x2.cols(), 10);
        // Column sums of D inside X1 cancel exactly.
        for j in 1..mm.x1.cols() {
            let s: i64 = (0..mm.x1.rows()).map(|i| mm.x1.get(i, j) as i64).sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn alias_rows_exactly_zero_for_foldover() {
        let d = h1().foldover();
        let spec = ModelSpec::all_two_level(ModelOrder::TwoFactorInteraction, 4);
        let mm = model_matrix(d.runs(), &spec);
        // Main-effect block of X1ᵀX2 is exactly zero in integer arithmetic.
        let cross = mm.x1.cross(&mm.x2);
        for row in cross.iter().skip(1) {
            assert!(row.iter().all(|&v| v == 0));
        }
        let a = alias_matrix(&mm).unwrap();
        for i in 1..a.rows() {
            for j in 0..a.cols() {
                assert_eq!(a[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn term_display_names() {
        assert_eq!(Term::Main(0).to_string(), "d1");
        assert_eq!(Term::Interaction(0, 3).to_string(), "d1d4");
        assert_eq!(Term::Quadratic(2).to_string(), "d3^2");
    }

    #[test]
    fn second_order_term_order_is_stable() {
        let spec = ModelSpec::new(
            ModelOrder::FullQuadratic,
            vec![FactorKind::TwoLevel, FactorKind::QuadraticCapable, FactorKind::QuadraticCapable],
        );
        let terms = spec.second_order_terms();
        let names: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["d1d2", "d1d3", "d2d3", "d2^2", "d3^2"]);
        assert_eq!(spec.term_count(), 1 + 3 + 5);
    }

    #[test]
    fn forced_replicate_validation() {
        let r = runs_of(&[&[1, 1], &[1, -1], &[-1, 1], &[1, 1]]);
        // Row 3 replicates row 0: fine.
        HalfDesign::new(
            r.clone(),
            vec![FactorKind::TwoLevel; 2],
            0,
            vec![3],
            BTreeSet::new(),
        )
        .unwrap();
        // Row 1 marked as replicate but matches nothing.
        let r2 = runs_of(&[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]]);
        assert!(HalfDesign::new(
            r2,
            vec![FactorKind::TwoLevel; 2],
            0,
            vec![1],
            BTreeSet::new(),
        )
        .is_err());
    }
}
