use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypbsq::commands::{picard_validate, refine_compare, run_scenario, write_picard, write_refine};
use hypbsq::config::{Scenario, ScenarioConfig};
use hypbsq::Error;

#[derive(Parser)]
#[command(name = "hypbsq", version, about = "Characteristic solver for the hyperbolic Boussinesq model")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Integrate one scenario and write series, snapshots and a manifest.
    Run(Common),
    /// Rerun at several refinement factors and compare.
    Refine {
        #[command(flatten)]
        common: Common,
        /// Comma-separated refinement factors (default: refine.levels).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
    },
    /// Compare the evolver with the fixed-point iteration on a short window.
    PicardValidate {
        #[command(flatten)]
        common: Common,
        /// Window length (default: picard.t_window).
        #[arg(long)]
        t_window: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// key=value config file; a run manifest also works.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario defaults to start from (overrides the file's `scenario`).
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(c: &Common) -> Result<ScenarioConfig, Error> {
    let mut text = match &c.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    if let Some(s) = c.scenario {
        text.push_str(&format!("\nscenario={}\n", s.name()));
    }
    for kv in &c.overrides {
        text.push('\n');
        text.push_str(kv);
    }
    let mut cfg = ScenarioConfig::parse(&text)?;
    if let Some(out) = &c.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Run(common) => load(common).and_then(|cfg| {
            let (r, out) = run_scenario(&cfg, &cfg.output.dir)?;
            println!("status={} t={} manifest={}", r.status.reason.name(), r.status.t, out.manifest.display());
            Ok(())
        }),
        Verb::Refine { common, levels } => load(common).and_then(|cfg| {
            let levels = levels.clone().unwrap_or_else(|| cfg.refine.levels.clone());
            let table = refine_compare(&cfg, &levels, cfg.refine.window_end)?;
            write_refine(&cfg.output.dir, &table)?;
            print!("{}", table.to_csv());
            Ok(())
        }),
        Verb::PicardValidate { common, t_window } => load(common).and_then(|cfg| {
            let v = picard_validate(&cfg, t_window.unwrap_or(cfg.picard.t_window))?;
            write_picard(&cfg.output.dir, &v)?;
            print!("{}", v.to_kv());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
