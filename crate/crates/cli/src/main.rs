use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hyperminimal_cli::config::{DataSpec, RunConfig, Target};
use hyperminimal_cli::{run_until, sweep, Axis, Stage};

#[derive(Parser)]
#[command(name = "hyperminimal", version, about = "Equivariant minimal surfaces in hyperbolic 3- and 4-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the surface mesh and print its summary.
    MeshInfo(RunArgs),
    /// Holomorphic section spaces of the data bundles.
    Basis(RunArgs),
    /// Solve the Gauss (and Ricci) equations.
    Solve(RunArgs),
    /// Solve and evaluate curvatures, area and identity residuals.
    Invariants(RunArgs),
    /// Full pipeline; prints the moduli descriptor.
    Classify(RunArgs),
    /// Full pipeline; writes the report and exits nonzero unless every check passes.
    Verify(RunArgs),
    /// One run per value of a parameter, with an aggregate CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

/// Every field may come from `--config`; flags override it.
#[derive(Args)]
struct RunArgs {
    /// JSON file holding a full or partial run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    genus: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, value_enum)]
    target: Option<Target>,
    #[arg(long, allow_hyphen_values = true)]
    l: Option<i64>,
    /// zero | basis:INDEX:AMPLITUDE[:theta1|theta2] | random:AMPLITUDE | file:PATH | manufactured:U_STAR
    #[arg(long)]
    data: Option<DataSpec>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    identity_scale: Option<f64>,
    #[arg(long)]
    class_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, String> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                RunConfig::from_json(&text).map_err(|e| e.to_string())?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),*) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set!(genus => genus, resolution => resolution, target => target, l => l, data => data,
             tol => solver.tol, max_iter => solver.max_iter, identity_scale => tolerances.identity_scale,
             class_tol => tolerances.class_tol, seed => seed);
        if self.output_dir.is_some() {
            c.output_dir = self.output_dir.clone();
        }
        Ok(c)
    }
}

fn print(v: &serde_json::Value) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, stage) = match &cli.command {
        Command::MeshInfo(a) => (a, Stage::Mesh),
        Command::Basis(a) => (a, Stage::Basis),
        Command::Solve(a) => (a, Stage::Solve),
        Command::Invariants(a) => (a, Stage::Invariants),
        Command::Classify(a) | Command::Verify(a) => (a, Stage::Classify),
        Command::Sweep { run, .. } => (run, Stage::Classify),
    };
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if let Command::Sweep { axis, values, .. } = &cli.command {
        return match sweep(&config, *axis, values) {
            Ok(out) => {
                print(&json!(out.rows));
                if out.rows.iter().all(|r| r.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }

    let r = run_until(&config, stage).report;
    let body = match &cli.command {
        Command::MeshInfo(_) => json!({ "mesh": r.mesh }),
        Command::Basis(_) => json!({ "bundle_dims": r.bundle_dims }),
        Command::Solve(_) => json!({ "solution": r.solution, "mms_error": r.mms_error }),
        Command::Invariants(_) => json!({ "invariants": r.invariants }),
        Command::Classify(_) => json!({ "moduli": r.moduli }),
        _ => serde_json::to_value(&r).expect("json"),
    };
    print(&body);
    if let Some(f) = &r.failed_at {
        eprintln!("error in {}::{}: {}", f.module, f.operation, f.message);
        return ExitCode::FAILURE;
    }
    if matches!(cli.command, Command::Verify(_)) && !r.passed {
        let failed: Vec<&String> = r.checks.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k).collect();
        eprintln!("failed checks: {failed:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
