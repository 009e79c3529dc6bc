//! Direct half-design constructions for two-level problems, organized by
//! the congruence class of n/2 modulo 4. All four schemes start from a
//! normalized Hadamard matrix and are A-optimal within unbiased weighing
//! designs; the options steer how much pure error the foldover inherits.

use crate::design::{FactorKind, HalfDesign, Runs};
use crate::dof::closed_form_dof;
use crate::error::{Error, Result};
use crate::hadamard::hadamard;
use serde::{Deserialize, Serialize};

/// Construction scheme, named after the residue of n/2 mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    C0,
    C1,
    C2,
    C3,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Scheme> {
        match s.to_ascii_uppercase().as_str() {
            "C0" => Ok(Scheme::C0),
            "C1" => Ok(Scheme::C1),
            "C2" => Ok(Scheme::C2),
            "C3" => Ok(Scheme::C3),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }

    pub fn residue(self) -> usize {
        match self {
            Scheme::C0 => 0,
            Scheme::C1 => 1,
            Scheme::C2 => 2,
            Scheme::C3 => 3,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "C{}", self.residue())
    }
}

/// Options steering the construction: which Hadamard columns to keep
/// (0-based, default the first m), extra rows for C1/C2, and the row to
/// delete for C3 (0-based, default the last).
#[derive(Debug, Clone, Default)]
pub struct ConstructOptions {
    pub keep_cols: Option<Vec<usize>>,
    pub add_rows: Vec<Vec<i8>>,
    pub delete_row: Option<usize>,
}

/// A constructed half design together with its closed-form df signature.
#[derive(Debug, Clone)]
pub struct Constructed {
    pub half: HalfDesign,
    pub f: usize,
    pub p: usize,
    pub scheme: Scheme,
}

fn select_columns(h: &[Vec<i8>], m: usize, keep: &Option<Vec<usize>>) -> Result<Vec<Vec<i8>>> {
    let order = h.len();
    let cols: Vec<usize> = match keep {
        Some(cols) => {
            if cols.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "--keep-cols lists {} columns but m = {m}",
                    cols.len()
                )));
            }
            let mut seen = vec![false; order];
            for &c in cols {
                if c >= order {
                    return Err(Error::InvalidConfig(format!(
                        "column {c} out of range for order {order}"
                    )));
                }
                if seen[c] {
                    return Err(Error::InvalidConfig(format!("column {c} repeated")));
                }
                seen[c] = true;
            }
            cols.clone()
        }
        None => (0..m).collect(),
    };
    Ok(h.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect())
}

fn check_pm1_row(row: &[i8], m: usize, what: &str) -> Result<()> {
    if row.len() != m {
        return Err(Error::InvalidConfig(format!(
            "{what} has {} entries but m = {m}",
            row.len()
        )));
    }
    if row.iter().any(|&e| e != 1 && e != -1) {
        return Err(Error::InvalidConfig(format!("{what} must be ±1")));
    }
    Ok(())
}

/// Builds a half design by the scheme matching n/2 mod 4.
///
/// * C0 (n/2 ≡ 0): any m columns of a normalized Hadamard matrix of order n/2.
/// * C1 (n/2 ≡ 1): m columns of order n/2−1, plus one arbitrary ±1 row
///   (default all +1).
/// * C2 (n/2 ≡ 2): m columns of order n/2−2, plus an all-ones row and one
///   balanced ±1 row (counts of +1 and −1 differing by at most one; default
///   first half +1, rest −1).
/// * C3 (n/2 ≡ 3): m columns of order n/2+1 with one row deleted (default
///   the last).
pub fn construct_direct(
    scheme: Scheme,
    n: usize,
    m: usize,
    options: &ConstructOptions,
) -> Result<Constructed> {
    if n % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "direct constructions build foldover designs; n = {n} must be even"
        )));
    }
    let half_n = n / 2;
    if half_n % 4 != scheme.residue() {
        return Err(Error::InvalidConfig(format!(
            "scheme {scheme} needs n/2 ≡ {} (mod 4), got n/2 = {half_n}",
            scheme.residue()
        )));
    }
    if m == 0 || m > half_n {
        return Err(Error::InvalidConfig(format!("m = {m} incompatible with n/2 = {half_n}")));
    }

    let rows: Vec<Vec<i8>> = match scheme {
        Scheme::C0 => {
            let h = hadamard(half_n)?;
            select_columns(&h, m, &options.keep_cols)?
        }
        Scheme::C1 => {
            let h = hadamard(half_n - 1)?;
            let mut rows = select_columns(&h, m, &options.keep_cols)?;
            let added = match options.add_rows.as_slice() {
                [] => vec![1i8; m],
                [row] => row.clone(),
                more => {
                    return Err(Error::InvalidConfig(format!(
                        "C1 adds exactly one row, got {}",
                        more.len()
                    )))
                }
            };
            check_pm1_row(&added, m, "added row")?;
            rows.push(added);
            rows
        }
        Scheme::C2 => {
            if half_n < m + 2 {
                return Err(Error::InvalidConfig(
                    "C2 requires v >= 2 (n/2 >= m + 2)".into(),
                ));
            }
            let h = hadamard(half_n - 2)?;
            let mut rows = select_columns(&h, m, &options.keep_cols)?;
            let balanced = match options.add_rows.as_slice() {
                [] => {
                    let plus = m.div_ceil(2);
                    (0..m).map(|j| if j < plus { 1i8 } else { -1 }).collect()
                }
                [row] => row.clone(),
                more => {
                    return Err(Error::InvalidConfig(format!(
                        "C2 adds an all-ones row plus one balanced row, got {} extra rows",
                        more.len()
                    )))
                }
            };
            check_pm1_row(&balanced, m, "balanced row")?;
            let sum: i32 = balanced.iter().map(|&e| e as i32).sum();
            if sum.abs() > 1 {
                return Err(Error::InvalidConfig(format!(
                    "C2 balanced row must have +1 and −1 counts differing by at most 1 (sum {sum})"
                )));
            }
            rows.push(vec![1i8; m]);
            rows.push(balanced);
            rows
        }
        Scheme::C3 => {
            let h = hadamard(half_n + 1)?;
            let del = options.delete_row.unwrap_or(half_n);
            if del > half_n {
                return Err(Error::InvalidConfig(format!(
                    "delete row {del} out of range for order {}",
                    half_n + 1
                )));
            }
            let kept: Vec<Vec<i8>> = h
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != del)
                .map(|(_, r)| r.clone())
                .collect();
            select_columns(&kept, m, &options.keep_cols)?
        }
    };

    let runs = Runs::from_rows(&rows)?;
    let half = HalfDesign::plain(runs, vec![FactorKind::TwoLevel; m])?;
    let (f, p) = closed_form_dof(&half);
    Ok(Constructed { half, f, p, scheme })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dof::replicate_pure_error;

    fn fold_p(c: &Constructed) -> usize {
        replicate_pure_error(c.half.foldover().runs())
    }

    #[test]
    fn c0_m5_has_no_pure_error() {
        let c = construct_direct(Scheme::C0, 16, 5, &ConstructOptions::default()).unwrap();
        assert_eq!(fold_p(&c), 0);
        assert_eq!(c.p, 0);
        assert_eq!(c.f, 3);
    }

    #[test]
    fn c0_m4_column_deletion_gives_p8() {
        // Keeping the first four columns of the order-8 matrix replicates
        // rows pairwise: half design p = 4, foldover p = 8.
        let c = construct_direct(Scheme::C0, 16, 4, &ConstructOptions::default()).unwrap();
        assert_eq!(replicate_pure_error(c.half.runs()), 4);
        assert_eq!(fold_p(&c), 8);
    }

    #[test]
    fn c1_added_row_controls_pure_error() {
        // Folding over the added row replicates an existing row's negation.
        let opt = ConstructOptions {
            add_rows: vec![vec![-1, -1, 1, 1, -1]],
            ..Default::default()
        };
        let c = construct_direct(Scheme::C1, 18, 5, &opt).unwrap();
        assert_eq!(fold_p(&c), 2);

        let opt = ConstructOptions {
            add_rows: vec![vec![-1, 1, 1, 1, 1]],
            ..Default::default()
        };
        let c = construct_direct(Scheme::C1, 18, 5, &opt).unwrap();
        assert_eq!(fold_p(&c), 0);
    }

    #[test]
    fn c2_examples() {
        let opt = ConstructOptions {
            add_rows: vec![vec![-1, -1, 1, 1, -1]],
            ..Default::default()
        };
        let c = construct_direct(Scheme::C2, 20, 5, &opt).unwrap();
        assert_eq!(fold_p(&c), 4);

        let opt = ConstructOptions {
            add_rows: vec![vec![1, -1, -1, -1, 1]],
            ..Default::default()
        };
        let c = construct_direct(Scheme::C2, 20, 5, &opt).unwrap();
        assert_eq!(fold_p(&c), 2);

        // Unbalanced extra row is rejected.
        let opt = ConstructOptions {
            add_rows: vec![vec![1, 1, 1, 1, -1]],
            ..Default::default()
        };
        assert!(construct_direct(Scheme::C2, 20, 5, &opt).is_err());
    }

    #[test]
    fn c3_matches_order8_truncation() {
        let c = construct_direct(Scheme::C3, 14, 5, &ConstructOptions::default()).unwrap();
        assert_eq!(c.half.n_rows(), 7);
        assert_eq!((c.f, c.p), (2, 0));
        // First seven rows of the printed order-8 selection.
        let h = crate::hadamard::hadamard(8).unwrap();
        for i in 0..7 {
            for j in 0..5 {
                assert_eq!(c.half.runs().get(i, j), h[i][j]);
            }
        }
    }

    #[test]
    fn residue_mismatch_rejected() {
        assert!(construct_direct(Scheme::C0, 14, 5, &ConstructOptions::default()).is_err());
        assert!(construct_direct(Scheme::C3, 16, 5, &ConstructOptions::default()).is_err());
    }
}
