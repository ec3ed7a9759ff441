#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use darboux_core::reference::{oracle, ExampleId};
use darboux_core::Error;

mod config;
mod output;
mod scenario;

use config::{Format, Overrides, ScenarioConfig};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Generalized Darboux transformations: add or remove bound states and verify the result.
#[derive(Parser)]
#[command(name = "darboux", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, write profiles and report.json.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the checks of a scenario file and write report.json only.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a catalog example with its own bound-state edit.
    Example {
        id: String,
        /// Parameter overrides such as kappa1=1.5 or c1sq=2.
        #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// List the catalog.
    List,
}

#[derive(Args, Clone)]
struct Flags {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    truncation: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), format: self.format, grid_n: self.grid_n, truncation: self.truncation }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SingularSystem { .. }
        | Error::NonconvergentTail { .. }
        | Error::SingularGamma { .. }
        | Error::NonpositiveGamma { .. }
        | Error::EtaNotPositive { .. }
        | Error::ZeroDenominator(_)
        | Error::OutOfDomain(_)
        | Error::OutOfSupport { .. }
        | Error::LengthMismatch { .. }
        | Error::TooFewPoints { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>, Error> {
    let mut map = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidSpec(format!("parameter {item} is not of the form key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::InvalidSpec(format!("parameter {k} has no numeric value")))?;
        map.insert(k.trim().to_string(), v);
    }
    Ok(map)
}

fn execute(cfg: &ScenarioConfig, write_profiles: bool) -> Result<u8, (u8, String)> {
    let numeric = |e: Error| (exit_code(&e), e.to_string());
    let io = |e: std::io::Error| (EXIT_CONFIG, format!("cannot write output: {e}"));
    let out = scenario::run(cfg, write_profiles && !cfg.verify_only).map_err(numeric)?;
    if let Some(p) = &out.profiles {
        for path in output::write_profiles(&cfg.out_dir, cfg.format, p).map_err(io)? {
            println!("wrote {}", path.display());
        }
    }
    let path = output::write_report(&cfg.out_dir, &out.report).map_err(io)?;
    println!("wrote {}", path.display());
    for c in &out.report.checks {
        let cmp = if c.bound == "max" { "<=" } else { ">" };
        println!(
            "{:<4} {:<40} {:>12.4e} {cmp} {:.1e}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    Ok(if out.report.pass { 0 } else { EXIT_VERIFY })
}

fn list() {
    println!("{:<18} {:<12} {:<36} {:<70} summary", "id", "interval", "default parameters", "covered quantities");
    for id in ExampleId::ALL {
        let p = id.default_params();
        let params: Vec<String> = p.to_map().iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        let covered = oracle(id, &p).map(|b| b.available().join(",")).unwrap_or_default();
        println!("{:<18} {:<12} {:<36} {:<70} {}", id.name(), id.kind().tag(), params.join(" "), covered, id.summary());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => {
            list();
            Ok(0)
        }
        Command::Run { config, flags } | Command::Verify { config, flags } => {
            let verify = matches!(cli.command, Command::Verify { .. });
            ScenarioConfig::load(config, &flags.overrides())
                .map_err(|e| (EXIT_CONFIG, e.to_string()))
                .and_then(|cfg| execute(&cfg, !verify))
        }
        Command::Example { id, params, flags } => id
            .parse::<ExampleId>()
            .and_then(|id| ScenarioConfig::for_example(id, &parse_params(params)?, &flags.overrides()))
            .map_err(|e| (EXIT_CONFIG, e.to_string()))
            .and_then(|cfg| execute(&cfg, true)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
