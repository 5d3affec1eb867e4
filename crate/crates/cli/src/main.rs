use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand};
use pluri_cli::{run, RunConfig, Suite};
use pluri_core::forms::family_by_name;
use pluri_core::variational::{corner_residual, Method};
use pluri_core::{FieldAssignment, FormParameters, LatticePoint, OrientedCell, TwoForm};

#[derive(Parser)]
#[command(
    name = "pluri",
    version,
    about = "Verification harness for pluri-Lagrangian systems on Q(A_N) and Z^N"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// 1-form family (cross-ratio, mixed, broken); default: both built-ins.
        #[arg(long)]
        family: Option<String>,
        /// Quad system (cross_ratio_all, kdv_all, mixed_trapezoidal); default: all three.
        #[arg(long)]
        system: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, env = "PLURI_SEED", default_value_t = 42)]
        seed: u64,
        /// `builtin` or a JSON file of flowers.
        #[arg(long, default_value = "builtin")]
        corpus: String,
        /// Propagate quad systems in exact rational arithmetic.
        #[arg(long)]
        rational: bool,
        /// Override the pass threshold of single-value suites.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Patch size for quad-implies-corner.
        #[arg(long, default_value_t = 2)]
        extent: usize,
        /// Report path; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Evaluate a 2-form on a cell for a field file.
    Eval {
        #[arg(long)]
        family: String,
        /// JSON field file: {"i,j,...": value, ..., "seed": n}.
        #[arg(long)]
        field: PathBuf,
        /// Parameters as `dir=value` pairs, comma separated.
        #[arg(long, default_value = "")]
        alpha: String,
        /// Cell as JSON, e.g. {"kind":"octahedron","base":[0,0,0,0],"dirs":[0,1,2,3],"sign":1}.
        #[arg(long)]
        cell: String,
        /// Comma-separated vertex for a corner residual on a 3-cell.
        #[arg(long)]
        center: Option<String>,
    },
}

fn parse_alpha(s: &str) -> anyhow::Result<FormParameters> {
    let mut p = FormParameters::default();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (d, v) = item
            .split_once('=')
            .with_context(|| format!("expected dir=value, got {item:?}"))?;
        p.set(d.trim().parse()?, v.trim().parse()?);
    }
    Ok(p)
}

fn eval(
    family: &str,
    field: &PathBuf,
    alpha: &str,
    cell: &str,
    center: Option<&str>,
) -> anyhow::Result<String> {
    let form = TwoForm::new(family_by_name(family)?, parse_alpha(alpha)?);
    let text =
        std::fs::read_to_string(field).with_context(|| format!("reading {}", field.display()))?;
    let field = FieldAssignment::from_json_str(&text)?;
    let cell: OrientedCell = serde_json::from_str(cell).context("parsing --cell")?;
    let mut out = serde_json::Map::new();
    match cell.dimension() {
        2 => {
            out.insert("two_form".into(), form.eval_two_form(&cell, &field)?.into());
        }
        3 => {
            out.insert(
                "exterior_derivative".into(),
                form.exterior_derivative(&cell, &field)?.into(),
            );
            if let Some(c) = center {
                let coords = c
                    .split(',')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .context("parsing --center")?;
                let r = corner_residual(
                    &form,
                    &cell,
                    &LatticePoint::new(coords),
                    &field,
                    Method::Analytic,
                )?;
                out.insert("corner_residual".into(), r.value.into());
            }
        }
        d => bail!("eval expects a triangle or a 3-cell, got a {d}-cell"),
    }
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify {
            suite,
            family,
            system,
            trials,
            seed,
            corpus,
            rational,
            tolerance,
            extent,
            output,
        } => {
            let config = RunConfig {
                suite,
                family,
                system,
                trials,
                seed,
                corpus,
                rational,
                tolerance,
                extent,
            };
            let report = match run(&config) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let json = report.to_json();
            match output {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, json) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{json}"),
            }
            let s = &report.summary;
            eprintln!(
                "{}: {} suites passed, {} failed ({} trials passed, {} failed, {} inconclusive)",
                suite.name(),
                s.suites_passed,
                s.suites_failed,
                s.trials_passed,
                s.trials_failed,
                s.trials_inconclusive
            );
            ExitCode::from(report.exit_code() as u8)
        }
        Command::Eval {
            family,
            field,
            alpha,
            cell,
            center,
        } => match eval(&family, &field, &alpha, &cell, center.as_deref()) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
