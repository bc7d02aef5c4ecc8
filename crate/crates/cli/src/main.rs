use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use herald_core::analysis::{
    self, plot_csv, plot_data, sweep, sweep_csv, write_file, RunConfig, SweepKind, Variant, SCHEMA_VERSION,
};
use herald_core::verify::{run_all, Faults};
use herald_core::HeraldError;
use serde_json::json;

const USAGE_EXIT: u8 = 2;
const INVARIANT_EXIT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "herald", version, about = "Exact simulation of heralded Bell and GHZ state generation with multiport splitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scheme from a TOML config and write its JSON and CSV results.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulated and closed-form probabilities over a range of dimensions.
    Sweep {
        /// bell, ghz or chain
        #[arg(long)]
        kind: SweepKind,
        #[arg(long)]
        d_min: Option<u32>,
        #[arg(long)]
        d_max: Option<u32>,
        /// Comma-separated: plain, bell2, sub, inv-sub, sum-sub (default: whole family)
        #[arg(long, value_delimiter = ',')]
        variants: Vec<Variant>,
        /// Multiply subtraction curves by the chance that every subtraction fires at once.
        #[arg(long)]
        one_shot: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a JSON report.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Vec<Fault>,
    },
    /// Data behind one of the probability figures (6, 7, 8 or 9).
    EmitPlotData {
        #[arg(long, value_parser = clap::value_parser!(u32).range(6..=9))]
        figure: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fault {
    PerturbDft,
    Oracle,
}

enum Failure {
    Error(HeraldError),
    Invariant(String),
}

impl From<HeraldError> for Failure {
    fn from(e: HeraldError) -> Self {
        Failure::Error(e)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn simulate(config: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.spec()?;
    let report = analysis::simulate(&spec)?;
    if let Some(p) = &cfg.output.json {
        write_file(p, &report.to_json()?)?;
    }
    let csv = report.summary_csv()?;
    if let Some(p) = &cfg.output.csv {
        write_file(p, &csv)?;
    }
    print!("{csv}");
    if report.invariants_ok() {
        return Ok(());
    }
    let mut why = Vec::new();
    if !report.agrees_with_closed_form {
        why.push(format!("simulated probability differs from the closed form by {:.3e}", report.abs_diff));
    }
    if let Some(f) = report.verification.failures.first() {
        why.push(format!(
            "{} of {} outcomes fail verification (first: {})",
            report.verification.failures.len(),
            report.verification.outcomes_checked,
            f.reason
        ));
    }
    Err(Failure::Invariant(why.join("; ")))
}

fn run_sweep(
    kind: SweepKind,
    d_min: Option<u32>,
    d_max: Option<u32>,
    variants: Vec<Variant>,
    one_shot: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let (lo, hi) = kind.bounds();
    let variants = if variants.is_empty() { kind.variants().to_vec() } else { variants };
    let rows = sweep(kind, d_min.unwrap_or(lo), d_max.unwrap_or(hi), &variants, one_shot)?;
    emit(&sweep_csv(&rows)?, out)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !(r.abs_diff < analysis::AGREEMENT_TOL && r.verified))
        .map(|r| format!("{} d={}", r.curve, r.d))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("rows failing checks: {}", bad.join(", "))))
    }
}

fn verify(out: Option<&Path>, faults: &[Fault]) -> Result<(), Failure> {
    let mut f = Faults::default();
    for fault in faults {
        match fault {
            Fault::PerturbDft => f.perturb_dft = true,
            Fault::Oracle => f.oracle_disagreement = true,
        }
    }
    let summary = run_all(f);
    let text = serde_json::to_string_pretty(&summary).map_err(HeraldError::from)? + "\n";
    emit(&text, out)?;
    if summary.passed {
        Ok(())
    } else {
        let failed: Vec<String> = summary
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({})", c.id, c.name))
            .collect();
        Err(Failure::Invariant(format!("criteria failed: {}", failed.join(", "))))
    }
}

fn emit_plot_data(figure: u32, out: Option<&Path>) -> Result<(), Failure> {
    let rows = plot_data(figure)?;
    emit(&plot_csv(figure, &rows)?, out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", e.to_string().trim_end().to_string(), USAGE_EXIT),
    };
    let result = match cli.command {
        Command::Simulate { config } => simulate(&config),
        Command::Sweep {
            kind,
            d_min,
            d_max,
            variants,
            one_shot,
            out,
        } => run_sweep(kind, d_min, d_max, variants, one_shot, out.as_deref()),
        Command::Verify { out, inject_fault } => verify(out.as_deref(), &inject_fault),
        Command::EmitPlotData { figure, out } => emit_plot_data(figure, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => report(e.category(), e.to_string(), e.exit_code() as u8),
        Err(Failure::Invariant(msg)) => report("invariant", msg, INVARIANT_EXIT),
    }
}

fn report(category: &str, message: String, code: u8) -> ExitCode {
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "category": category, "message": message, "exit_code": code },
    });
    eprintln!("{body}");
    ExitCode::from(code)
}
