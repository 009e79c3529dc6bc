//! Design file I/O.
//!
//! A design on disk is a pair of files sharing a stem: `<name>.csv` holds
//! the runs (header `f1,…,fm`, one run per row, integer entries −1/0/1) and
//! `<name>.json` holds the structural metadata: factor kinds, the size of
//! the foldover base, center/replicate/pinned-zero bookkeeping of the half
//! design, and generator provenance. Round-trips are bit exact.

use crate::design::{AugmentedDesign, FactorKind, HalfDesign, Runs};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Generator provenance recorded in the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion_value: Option<f64>,
}

/// Metadata sidecar. Row and factor indices are 1-based in the file, matching
/// the `f1…fm` column labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignMeta {
    pub schema: u32,
    pub m: usize,
    pub factors: Vec<FactorKind>,
    /// Rows of the half design (the foldover base has twice this many runs).
    pub half_rows: usize,
    /// Augmented runs appended after the foldover base.
    pub n_augmented: usize,
    pub n0: usize,
    /// 1-based half-design row indices forced to replicate unrestricted rows.
    #[serde(default)]
    pub forced_replicate_rows: Vec<usize>,
    /// 1-based (row, factor) positions of the half design pinned to level 0.
    #[serde(default)]
    pub zero_fixed: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Swaps the extension of a design path: given either the `.csv` or the
/// `.json` side, returns the pair (csv, json).
pub fn design_paths(path: &Path) -> (PathBuf, PathBuf) {
    let csv = path.with_extension("csv");
    let json = path.with_extension("json");
    (csv, json)
}

fn parse_level(field: &str, row: usize, col: usize) -> Result<i8> {
    match field.trim() {
        "-1" => Ok(-1),
        "0" => Ok(0),
        "1" | "+1" => Ok(1),
        other => Err(Error::Parse {
            location: format!("run {}, column f{}", row + 1, col + 1),
            message: format!("expected -1, 0, or 1, got '{other}'"),
        }),
    }
}

/// Reads a runs CSV with header `f1,…,fm`. Returns the run matrix.
pub fn read_runs_csv(path: &Path) -> Result<Runs> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })?
        .clone();
    let m = headers.len();
    for (j, h) in headers.iter().enumerate() {
        let want = format!("f{}", j + 1);
        if h != want {
            return Err(Error::Parse {
                location: format!("{} header", path.display()),
                message: format!("expected column '{want}', found '{h}'"),
            });
        }
    }
    let mut rows: Vec<Vec<i8>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            location: format!("{} run {}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        if rec.len() != m {
            return Err(Error::Parse {
                location: format!("{} run {}", path.display(), i + 1),
                message: format!("expected {m} fields, found {}", rec.len()),
            });
        }
        let mut row = Vec::with_capacity(m);
        for (j, field) in rec.iter().enumerate() {
            row.push(parse_level(field, i, j)?);
        }
        rows.push(row);
    }
    Runs::from_rows(&rows)
}

/// Reads a data CSV with header `f1,…,fm,y`: runs plus a response column.
pub fn read_data_csv(path: &Path) -> Result<(Runs, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })?
        .clone();
    if headers.len() < 2 || headers.iter().next_back() != Some("y") {
        return Err(Error::Parse {
            location: format!("{} header", path.display()),
            message: "expected columns f1,…,fm,y".into(),
        });
    }
    let m = headers.len() - 1;
    for (j, h) in headers.iter().take(m).enumerate() {
        let want = format!("f{}", j + 1);
        if h != want {
            return Err(Error::Parse {
                location: format!("{} header", path.display()),
                message: format!("expected column '{want}', found '{h}'"),
            });
        }
    }
    let mut rows: Vec<Vec<i8>> = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            location: format!("{} run {}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        if rec.len() != m + 1 {
            return Err(Error::Parse {
                location: format!("{} run {}", path.display(), i + 1),
                message: format!("expected {} fields, found {}", m + 1, rec.len()),
            });
        }
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            row.push(parse_level(&rec[j], i, j)?);
        }
        let resp: f64 = rec[m].parse().map_err(|_| Error::Parse {
            location: format!("{} run {}, column y", path.display(), i + 1),
            message: format!("bad response '{}'", &rec[m]),
        })?;
        rows.push(row);
        y.push(resp);
    }
    Ok((Runs::from_rows(&rows)?, y))
}

fn write_runs_csv(path: &Path, runs: &Runs) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })?;
    let header: Vec<String> = (1..=runs.cols()).map(|j| format!("f{j}")).collect();
    wtr.write_record(&header)
        .and_then(|_| {
            for i in 0..runs.rows() {
                let rec: Vec<String> =
                    runs.row(i).iter().map(|e| e.to_string()).collect();
                wtr.write_record(&rec)?;
            }
            wtr.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::Parse { location: path.display().to_string(), message: e.to_string() })?;
    Ok(())
}

/// Writes a design as `<stem>.csv` + `<stem>.json`.
pub fn write_design(path: &Path, design: &AugmentedDesign, provenance: Option<Provenance>) -> Result<()> {
    let (csv_path, json_path) = design_paths(path);
    write_runs_csv(&csv_path, &design.all_runs())?;
    let half = design.base().half();
    let meta = DesignMeta {
        schema: SCHEMA_VERSION,
        m: design.m(),
        factors: design.factors().to_vec(),
        half_rows: half.n_rows(),
        n_augmented: design.n_augmented(),
        n0: half.n0(),
        forced_replicate_rows: half.forced_replicate_rows().iter().map(|r| r + 1).collect(),
        zero_fixed: half.zero_fixed().iter().map(|&(r, c)| (r + 1, c + 1)).collect(),
        provenance,
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&json_path, json)?;
    Ok(())
}

/// Reads a design from either side of the `<stem>.csv` / `<stem>.json` pair,
/// validating runs against the metadata (levels, foldover structure, half
/// design invariants).
pub fn read_design(path: &Path) -> Result<AugmentedDesign> {
    let (csv_path, json_path) = design_paths(path);
    let meta_text = std::fs::read_to_string(&json_path)?;
    let meta: DesignMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        location: json_path.display().to_string(),
        message: e.to_string(),
    })?;
    if meta.schema != SCHEMA_VERSION {
        return Err(Error::Parse {
            location: json_path.display().to_string(),
            message: format!("unsupported schema {} (expected {SCHEMA_VERSION})", meta.schema),
        });
    }
    let runs = read_runs_csv(&csv_path)?;
    design_from_parts(&meta, runs).map_err(|e| match e {
        Error::InvalidDesign(msg) => Error::InvalidDesign(format!(
            "{}: {msg}",
            csv_path.display()
        )),
        other => other,
    })
}

/// Assembles and validates a design from metadata plus the full run matrix.
pub fn design_from_parts(meta: &DesignMeta, runs: Runs) -> Result<AugmentedDesign> {
    if runs.cols() != meta.m {
        return Err(Error::InvalidDesign(format!(
            "metadata declares m = {} but the runs have {} columns",
            meta.m,
            runs.cols()
        )));
    }
    if meta.factors.len() != meta.m {
        return Err(Error::InvalidDesign(format!(
            "metadata lists {} factor kinds for m = {}",
            meta.factors.len(),
            meta.m
        )));
    }
    let fold_rows = 2 * meta.half_rows;
    if runs.rows() != fold_rows + meta.n_augmented {
        return Err(Error::InvalidDesign(format!(
            "expected 2·{} + {} = {} runs, found {}",
            meta.half_rows,
            meta.n_augmented,
            fold_rows + meta.n_augmented,
            runs.rows()
        )));
    }
    // Split into half, mirrored half, and augmentation.
    let half_rows: Vec<Vec<i8>> = (0..meta.half_rows).map(|i| runs.row_vec(i)).collect();
    for i in 0..meta.half_rows {
        let mirrored = runs.row(meta.half_rows + i);
        let expect: Vec<i8> = half_rows[i].iter().map(|&e| -e).collect();
        if mirrored != expect.as_slice() {
            return Err(Error::InvalidDesign(format!(
                "run {} is not the sign flip of run {}: foldover structure broken",
                meta.half_rows + i + 1,
                i + 1
            )));
        }
    }
    let half_runs = Runs::from_rows(&half_rows)?;
    let forced: Vec<usize> = meta
        .forced_replicate_rows
        .iter()
        .map(|&r| {
            r.checked_sub(1).ok_or_else(|| {
                Error::InvalidDesign("forced replicate row indices are 1-based".into())
            })
        })
        .collect::<Result<_>>()?;
    let zero_fixed: BTreeSet<(usize, usize)> = meta
        .zero_fixed
        .iter()
        .map(|&(r, c)| {
            if r == 0 || c == 0 {
                Err(Error::InvalidDesign("zero_fixed positions are 1-based".into()))
            } else {
                Ok((r - 1, c - 1))
            }
        })
        .collect::<Result<_>>()?;
    let half = HalfDesign::new(half_runs, meta.factors.clone(), meta.n0, forced, zero_fixed)?;
    let extra_rows: Vec<Vec<i8>> =
        (fold_rows..runs.rows()).map(|i| runs.row_vec(i)).collect();
    let extra = if extra_rows.is_empty() {
        Runs::new(0, meta.m, Vec::new())?
    } else {
        Runs::from_rows(&extra_rows)?
    };
    half.foldover().augment(extra)
}
