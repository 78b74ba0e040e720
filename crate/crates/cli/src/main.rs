//! Command-line front end: run local-causality audits, emit correlation
//! tables, CHSH reports and four-observable joint tables as CSV/JSON.
//!
//! Exit codes: 0 — success and (for `audit`) every declared-expected verdict
//! matched; 1 — verdict mismatch or ineligible model; 2 — malformed input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bellaudit_core::angles::parse_angle_literal;
use bellaudit_core::audit::{AuditOptions, SettingsGrid};
use bellaudit_core::chsh::{chsh_model, chsh_quantum, ChshSpec};
use bellaudit_core::config::resolve_model;
use bellaudit_core::error::Error;
use bellaudit_core::fine::{fine_joint_from_model, fine_marginal_check, PairwiseTargets};
use bellaudit_core::report::{
    audit_csv, audit_json, chsh_csv, chsh_json, correlation_csv, correlation_json,
    correlation_table, fine_csv, fine_json, quantum_csv, quantum_json, quantum_table, run_audit,
    verdict_str, ChshRow,
};
use bellaudit_core::TwoQubitState;

#[derive(Parser)]
#[command(
    name = "bellaudit",
    version,
    about = "Audit beable models of the singlet experiment against Bell's local-causality conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full audit family on a model and report verdicts
    Audit(ModelArgs),
    /// Emit the E(Δ) correlation table for a model next to the oracle
    Correlate(ModelArgs),
    /// Evaluate the CHSH expression for a model and the oracle
    Chsh(SpecArgs),
    /// Build the four-observable joint table and check its marginals
    Fine(SpecArgs),
    /// Dump oracle joint-probability tables over the grid
    Quantum(CommonArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// Grid step in radians; decimal or `p/q pi` (must divide 2π)
    #[arg(long, default_value = "1/18 pi")]
    grid_step: String,

    /// Tolerance for exact-identity checks
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,

    /// Seed recorded in reports and used by randomized sweeps
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file (stdout when omitted); written atomically
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ModelArgs {
    /// Built-in model name or path to a model definition file
    #[arg(long)]
    model: String,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SpecArgs {
    /// Built-in model name or path to a model definition file
    #[arg(long)]
    model: String,

    /// CHSH frame as four comma-separated angles `a,a',b,b'`
    /// (decimal radians or `p/q pi`); defaults to 0,1/2 pi,1/4 pi,3/4 pi
    #[arg(long)]
    spec: Option<String>,

    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Audit(args) => cmd_audit(&args),
        Command::Correlate(args) => cmd_correlate(&args),
        Command::Chsh(args) => cmd_chsh(&args),
        Command::Fine(args) => cmd_fine(&args),
        Command::Quantum(args) => cmd_quantum(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("bellaudit: {err}");
            ExitCode::from(2)
        }
    }
}

fn grid_from(common: &CommonArgs) -> Result<SettingsGrid, Error> {
    let step = parse_angle_literal(&common.grid_step)?;
    SettingsGrid::planar(step)
}

fn options_from(common: &CommonArgs) -> AuditOptions {
    AuditOptions {
        tolerance: common.tolerance,
        ..AuditOptions::default()
    }
}

fn parse_spec(spec: &Option<String>) -> Result<ChshSpec, Error> {
    match spec {
        None => Ok(ChshSpec::optimal()),
        Some(text) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!(
                    "--spec needs four comma-separated angles, got `{text}`"
                )));
            }
            let mut angles = [0.0; 4];
            for (slot, part) in angles.iter_mut().zip(&parts) {
                *slot = parse_angle_literal(part)?;
            }
            Ok(ChshSpec::planar(angles[0], angles[1], angles[2], angles[3]))
        }
    }
}

/// Write the artifact atomically (temp file + rename), or to stdout.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !Path::new(p).as_os_str().is_empty());
            let mut tmp = match dir {
                Some(d) => tempfile::NamedTempFile::new_in(d)?,
                None => tempfile::NamedTempFile::new_in(".")?,
            };
            tmp.write_all(content.as_bytes())?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
            Ok(())
        }
    }
}

fn cmd_audit(args: &ModelArgs) -> Result<ExitCode, Error> {
    let model = resolve_model(&args.model)?;
    let grid = grid_from(&args.common)?;
    let opts = options_from(&args.common);
    let psi = TwoQubitState::singlet();
    let run = run_audit(&model, &psi, &grid, &opts, args.common.seed)?;

    let content = match args.common.format {
        Format::Json => audit_json(&run),
        Format::Csv => audit_csv(&run),
    };
    emit(&args.common.out, &content)?;

    if args.common.out.is_some() {
        for r in &run.reports {
            println!(
                "{:<28} {:<14} max_deviation={}",
                r.condition,
                verdict_str(r.verdict),
                r.max_deviation
            );
        }
        if let Some(note) = &run.printed_sign {
            println!(
                "printed-sign comparison: derived form deviates {} from the oracle, printed form {}",
                note.derived_max_deviation_from_oracle, note.printed_max_deviation_from_oracle
            );
        }
    }

    if run.expectation_mismatches.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "bellaudit: verdicts differ from the declared matrix for `{}`: {}",
            run.model_name,
            run.expectation_mismatches.join(", ")
        );
        Ok(ExitCode::from(1))
    }
}

fn cmd_correlate(args: &ModelArgs) -> Result<ExitCode, Error> {
    let model = resolve_model(&args.model)?;
    let grid = grid_from(&args.common)?;
    let psi = TwoQubitState::singlet();
    let rows = correlation_table(&model, &psi, &grid)?;
    let content = match args.common.format {
        Format::Csv => correlation_csv(&rows),
        Format::Json => correlation_json(model.name(), &rows),
    };
    emit(&args.common.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_chsh(args: &SpecArgs) -> Result<ExitCode, Error> {
    let model = resolve_model(&args.model)?;
    let spec = parse_spec(&args.spec)?;
    let psi = TwoQubitState::singlet();
    let s_model = chsh_model(&model, &psi, &spec)?;
    let s_quantum = chsh_quantum(&psi, &spec);
    let rows = vec![
        ChshRow::new(model.name(), &spec, s_model),
        ChshRow::new("quantum", &spec, s_quantum),
    ];
    let content = match args.common.format {
        Format::Csv => chsh_csv(&rows),
        Format::Json => chsh_json(&rows),
    };
    emit(&args.common.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fine(args: &SpecArgs) -> Result<ExitCode, Error> {
    let model = resolve_model(&args.model)?;
    let spec = parse_spec(&args.spec)?;
    let psi = TwoQubitState::singlet();

    let fj = match fine_joint_from_model(&model, &psi, &spec) {
        Ok(fj) => fj,
        Err(Error::IneligibleModel { model, reason }) => {
            eprintln!("bellaudit: model `{model}` is ineligible: {reason}");
            return Ok(ExitCode::from(1));
        }
        Err(other) => return Err(other),
    };

    let vs_model = fine_marginal_check(&fj, &PairwiseTargets::from_model(&model, &psi, &spec)?);
    let vs_quantum = fine_marginal_check(&fj, &PairwiseTargets::from_quantum(&psi, &spec));

    let content = match args.common.format {
        Format::Csv => fine_csv(&fj),
        Format::Json => fine_json(model.name(), &fj, &vs_model, &vs_quantum),
    };
    emit(&args.common.out, &content)?;

    if args.common.format == Format::Csv {
        println!(
            "marginals vs {}: max total-variation deviation {} (worst table {})",
            vs_model.target, vs_model.max_deviation, vs_model.worst_table
        );
        println!(
            "marginals vs quantum: max total-variation deviation {} (worst table {}) — impossibility witness when > 0.07",
            vs_quantum.max_deviation, vs_quantum.worst_table
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_quantum(common: &CommonArgs) -> Result<ExitCode, Error> {
    let grid = grid_from(common)?;
    let psi = TwoQubitState::singlet();
    let rows = quantum_table(&psi, &grid);
    let content = match common.format {
        Format::Csv => quantum_csv(&rows),
        Format::Json => quantum_json(&rows),
    };
    emit(&common.out, &content)?;
    Ok(ExitCode::SUCCESS)
}
