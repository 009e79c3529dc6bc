//! Command-line interface: design generation, direct construction, Hadamard
//! matrices, augmentation, criterion evaluation, degrees-of-freedom reports,
//! two-stage analysis, and power simulation.
//!
//! Human-readable tables go to stdout; `--out` writes machine-readable JSON.
//! Exit codes: 0 success, 1 configuration/validation errors, 2 numerical
//! failures.

use crate::analysis::{augmented_analysis, SelectionCriterion};
use crate::construct::{construct_direct, ConstructOptions, Scheme};
use crate::criteria::{eci_foldover, eci_general_design};
use crate::design::{FactorKind, ModelOrder};
use crate::dof::{exact_dof, closed_form_dof};
use crate::error::{Error, Result};
use crate::hadamard::hadamard;
use crate::io::{design_paths, read_data_csv, read_design, write_design, Provenance};
use crate::report;
use crate::search::{augment, coordinate_exchange, AugmentConfig, SearchConfig};
use crate::sim::{run_simulation, SimScenario};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "foldover",
    version,
    about = "Foldover screening designs for second-order models: construct, evaluate, augment, analyze, simulate"
)]
pub struct Cli {
    /// Worker threads for multi-start search and simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a foldover design minimizing the expected-confidence-interval criterion.
    Generate(GenerateArgs),
    /// Build a half design directly from a Hadamard matrix (schemes C0-C3).
    Construct(ConstructArgs),
    /// Print a normalized Hadamard matrix.
    Hadamard(HadamardArgs),
    /// Append Bayesian-A optimal runs to an existing foldover design.
    Augment(AugmentArgs),
    /// Evaluate the ECI criterion of a design file.
    Evaluate(EvaluateArgs),
    /// Degrees-of-freedom summary of a design file.
    Dof(DofArgs),
    /// Two-stage analysis of experimental data.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo power study of a design under a scenario file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Total runs of the foldover design (even).
    #[arg(long)]
    n: usize,
    /// Number of factors.
    #[arg(long)]
    m: usize,
    /// Center runs in the half design.
    #[arg(long, default_value_t = 0)]
    n0: usize,
    /// Half-design rows forced to replicate an unrestricted row.
    #[arg(long = "R", default_value_t = 0)]
    forced_replicates: usize,
    /// Significance level driving the criterion.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Model: main | 2fi | quad.
    #[arg(long, default_value = "2fi")]
    model: String,
    /// Quadratic-capable factors: "all", "none", or a 1-based list like "3,4".
    #[arg(long = "quad-factors")]
    quad_factors: Option<String>,
    /// Random restarts.
    #[arg(long, default_value_t = 1000)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on improvement sweeps per start.
    #[arg(long, default_value_t = 50)]
    max_sweeps: usize,
    /// Output design stem (writes <out>.csv and <out>.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Scheme: C0 | C1 | C2 | C3 (by n/2 mod 4).
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Extra row for C1, or the balanced row for C2, e.g. "-1,1,1,1,1".
    #[arg(long = "add-row")]
    add_row: Option<String>,
    /// Hadamard columns to keep (1-based), e.g. "1,2,3,5,8".
    #[arg(long = "keep-cols")]
    keep_cols: Option<String>,
    /// Row to delete for C3 (1-based; default the last).
    #[arg(long = "delete-row")]
    delete_row: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HadamardArgs {
    #[arg(long)]
    order: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Design file (either the .csv or .json side).
    #[arg(long)]
    design: PathBuf,
    /// Runs to append.
    #[arg(long = "n-add")]
    n_add: usize,
    /// Prior variance on second-order terms.
    #[arg(long, default_value_t = 50.0)]
    tau2: f64,
    #[arg(long, default_value = "2fi")]
    model: String,
    #[arg(long, default_value_t = 100)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "2fi")]
    model: String,
    /// Prior variance for the general (non-foldover) criterion form.
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DofArgs {
    #[arg(long)]
    design: PathBuf,
    /// Restrict the report to one model (default: all three).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Data CSV: factor columns f1..fm plus a final response column y.
    #[arg(long)]
    data: PathBuf,
    /// Design metadata JSON describing the foldover structure.
    #[arg(long)]
    design: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "2fi")]
    model: String,
    /// Heredity rule for stage-2 candidate terms (strong only).
    #[arg(long, default_value = "strong")]
    heredity: String,
    /// Selection criterion: mbic | bic | mbic:pen=<x> | bic:pen=<x>.
    #[arg(long, default_value = "mbic")]
    criterion: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    design: PathBuf,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Override the scenario's replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "mbic")]
    criterion: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_i8_list(s: &str) -> Result<Vec<i8>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<i8>().map_err(|_| {
                Error::InvalidConfig(format!("bad level '{tok}' (expected -1, 0, or 1)"))
            })
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad index '{tok}'")))
        })
        .collect()
}

fn factor_kinds(m: usize, quad_factors: &Option<String>, model: ModelOrder) -> Result<Vec<FactorKind>> {
    let spec = quad_factors.as_deref().unwrap_or(match model {
        ModelOrder::FullQuadratic => "all",
        _ => "none",
    });
    match spec {
        "all" => Ok(vec![FactorKind::QuadraticCapable; m]),
        "none" => Ok(vec![FactorKind::TwoLevel; m]),
        list => {
            let mut kinds = vec![FactorKind::TwoLevel; m];
            for idx in parse_usize_list(list)? {
                if idx == 0 || idx > m {
                    return Err(Error::InvalidConfig(format!(
                        "--quad-factors index {idx} out of 1..={m}"
                    )));
                }
                kinds[idx - 1] = FactorKind::QuadraticCapable;
            }
            Ok(kinds)
        }
    }
}

fn write_json(out: &Option<PathBuf>, value: &serde_json::Value) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(value).expect("serializable"))?;
    }
    Ok(())
}

/// Runs the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Hadamard(a) => cmd_hadamard(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Dof(a) => cmd_dof(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let model = ModelOrder::parse(&a.model)?;
    let factors = factor_kinds(a.m, &a.quad_factors, model)?;
    let cfg = SearchConfig {
        n: a.n,
        m: a.m,
        factors,
        n0: a.n0,
        forced_replicates: a.forced_replicates,
        alpha: a.alpha,
        model,
        n_starts: a.starts,
        seed: a.seed,
        max_sweeps: a.max_sweeps,
    };
    let outcome = coordinate_exchange(&cfg)?;
    let (f, p) = closed_form_dof(&outcome.half);
    println!(
        "best of {} starts (start {}): ECI = {:.4}, g = {}, (f, p) = ({f}, {p})",
        cfg.n_starts, outcome.start_index, outcome.report.eci, outcome.report.g_used
    );
    print!("{}", report::eci_text(&outcome.report));
    let design = outcome.half.clone().foldover().into_design();
    if let Some(out) = &a.out {
        let prov = Provenance {
            algorithm: Some("coordinate-exchange".into()),
            seed: Some(a.seed),
            criterion: Some(format!("eci@alpha={}", a.alpha)),
            criterion_value: Some(outcome.report.eci),
        };
        write_design(out, &design, Some(prov))?;
        let (csv, json) = design_paths(out);
        println!("wrote {} and {}", csv.display(), json.display());
        let sidecar = out.with_extension("eci.json");
        std::fs::write(
            &sidecar,
            serde_json::to_string_pretty(&outcome.report).expect("serializable"),
        )?;
        println!("wrote {}", sidecar.display());
    }
    Ok(())
}

fn cmd_construct(a: ConstructArgs) -> Result<()> {
    let scheme = Scheme::parse(&a.scheme)?;
    let mut options = ConstructOptions::default();
    if let Some(row) = &a.add_row {
        options.add_rows.push(parse_i8_list(row)?);
    }
    if let Some(cols) = &a.keep_cols {
        let cols = parse_usize_list(cols)?;
        let zero_based: Result<Vec<usize>> = cols
            .into_iter()
            .map(|c| {
                c.checked_sub(1)
                    .ok_or_else(|| Error::InvalidConfig("--keep-cols is 1-based".into()))
            })
            .collect();
        options.keep_cols = Some(zero_based?);
    }
    if let Some(row) = a.delete_row {
        options.delete_row =
            Some(row.checked_sub(1).ok_or_else(|| {
                Error::InvalidConfig("--delete-row is 1-based".into())
            })?);
    }
    let built = construct_direct(scheme, a.n, a.m, &options)?;
    let fold_p = crate::dof::replicate_pure_error(built.half.foldover().runs());
    println!(
        "{} half design: {} runs x {} factors; half (f, p) = ({}, {}); foldover p = {fold_p}",
        built.scheme,
        built.half.n_rows(),
        built.half.m(),
        built.f,
        built.p
    );
    for i in 0..built.half.n_rows() {
        let row: Vec<String> =
            built.half.runs().row(i).iter().map(|e| format!("{e:>2}")).collect();
        println!("  {}", row.join(" "));
    }
    if let Some(out) = &a.out {
        let design = built.half.clone().foldover().into_design();
        let prov = Provenance {
            algorithm: Some(format!("construct-{}", built.scheme)),
            ..Default::default()
        };
        write_design(out, &design, Some(prov))?;
        let (csv, json) = design_paths(out);
        println!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(())
}

fn cmd_hadamard(a: HadamardArgs) -> Result<()> {
    let h = hadamard(a.order)?;
    for row in &h {
        let cells: Vec<String> = row.iter().map(|e| format!("{e:>2}")).collect();
        println!("{}", cells.join(" "));
    }
    write_json(&a.out, &json!({ "order": a.order, "matrix": h }))?;
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let design = read_design(&a.design)?;
    if design.n_augmented() > 0 {
        return Err(Error::InvalidConfig(
            "design already carries augmented runs; augment the foldover base".into(),
        ));
    }
    let model = ModelOrder::parse(&a.model)?;
    let cfg = AugmentConfig {
        n_add: a.n_add,
        tau2: a.tau2,
        model,
        n_starts: a.starts,
        seed: a.seed,
        max_sweeps: 50,
    };
    let outcome = augment(design.base(), &cfg)?;
    println!(
        "appended {} runs; Bayesian-A criterion = {:.6} (start {})",
        a.n_add, outcome.criterion, outcome.start_index
    );
    for i in 0..outcome.design.extra().rows() {
        let row: Vec<String> =
            outcome.design.extra().row(i).iter().map(|e| format!("{e:>2}")).collect();
        println!("  {}", row.join(" "));
    }
    if let Some(out) = &a.out {
        let prov = Provenance {
            algorithm: Some("bayes-a-augment".into()),
            seed: Some(a.seed),
            criterion: Some(format!("bayes-a@tau2={}", a.tau2)),
            criterion_value: Some(outcome.criterion),
        };
        write_design(out, &outcome.design, Some(prov))?;
        let (csv, json) = design_paths(out);
        println!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let design = read_design(&a.design)?;
    let model = ModelOrder::parse(&a.model)?;
    // The foldover criterion scores the foldover base (augmented runs do not
    // enter it); passing --tau2 asks for the general form on the full design.
    let report = match a.tau2 {
        None => eci_foldover(design.base().half(), a.alpha, model)?,
        Some(tau2) => eci_general_design(&design, a.alpha, tau2, model)?,
    };
    print!("{}", report::eci_text(&report));
    write_json(&a.out, &serde_json::to_value(&report).expect("serializable"))?;
    Ok(())
}

fn cmd_dof(a: DofArgs) -> Result<()> {
    let design = read_design(&a.design)?;
    let orders: Vec<ModelOrder> = match &a.model {
        Some(s) => vec![ModelOrder::parse(s)?],
        None => vec![
            ModelOrder::MainEffects,
            ModelOrder::TwoFactorInteraction,
            ModelOrder::FullQuadratic,
        ],
    };
    let mut entries = Vec::new();
    for order in orders {
        let s = exact_dof(&design, order)?;
        print!("{}", report::dof_text(&order.to_string(), &s));
        entries.push(json!({
            "model": order.to_string(),
            "f": s.f, "p": s.p, "lack_of_fit": s.lack_of_fit, "g": s.g,
        }));
    }
    write_json(&a.out, &json!({ "dof": entries }))?;
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    if a.heredity != "strong" {
        return Err(Error::InvalidConfig(format!(
            "only strong heredity is supported, got '{}'",
            a.heredity
        )));
    }
    let (runs, y) = read_data_csv(&a.data)?;
    let meta_text = std::fs::read_to_string(&a.design)?;
    let meta: crate::io::DesignMeta =
        serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
            location: a.design.display().to_string(),
            message: e.to_string(),
        })?;
    let design = crate::io::design_from_parts(&meta, runs)?;
    let model = ModelOrder::parse(&a.model)?;
    let criterion = SelectionCriterion::parse(&a.criterion)?;
    let analysis = augmented_analysis(&y, &design, a.alpha, model, criterion)?;
    print!("{}", report::analysis_text(&analysis));
    write_json(&a.out, &serde_json::to_value(&analysis).expect("serializable"))?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let design = read_design(&a.design)?;
    let text = std::fs::read_to_string(&a.scenario)?;
    let mut scenario: SimScenario = serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: a.scenario.display().to_string(),
        message: e.to_string(),
    })?;
    if let Some(reps) = a.reps {
        scenario.reps = reps;
    }
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let criterion = SelectionCriterion::parse(&a.criterion)?;
    let result = run_simulation(&design, &scenario, a.alpha, criterion)?;
    print!("{}", report::sim_text(&result));
    write_json(&a.out, &serde_json::to_value(&result).expect("serializable"))?;
    Ok(())
}
