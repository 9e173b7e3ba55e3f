use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slitcorr::config::{parse_config, Engine, Scenario, ScenarioConfig};
use slitcorr::scenario::{run_scenario, RunError};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

/// Correlation experiments with chaotic light behind two double-slit masks.
#[derive(Parser)]
#[command(name = "slitcorr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV tables; the report goes to stdout as JSON.
    Run(Overrides),
    /// Run the acceptance suite; exits with 3 if any criterion fails.
    Selftest(Overrides),
    /// Print the effective configuration as TOML.
    PrintConfig(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration; missing keys take the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig2, fig3a, fig3bc, custom or selftest.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// analytic, montecarlo or both.
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::parse(s).ok_or_else(|| format!("unknown scenario {s:?}"))
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    Engine::parse(s).ok_or_else(|| format!("unknown engine {s:?}"))
}

fn load(o: &Overrides, forced: Option<Scenario>) -> Result<ScenarioConfig, RunError> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = forced.or(o.scenario) {
        cfg.run.scenario = s;
    }
    if let Some(e) = o.engine {
        cfg.run.engine = e;
    }
    if let Some(s) = o.seed {
        cfg.run.seed = s;
    }
    if let Some(n) = o.realizations {
        cfg.run.realizations = n;
    }
    if let Some(p) = &o.out {
        cfg.run.output = p.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) | RunError::Model(_) | RunError::Io(_) => EXIT_USAGE,
        RunError::Speckle(_) | RunError::Correlator(_) | RunError::Fringe(_) => EXIT_NUMERICAL,
    }
}

fn write_tables(dir: &Path, out: &slitcorr::ScenarioOutput) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    for t in &out.tables {
        t.write(dir)?;
    }
    Ok(())
}

fn run(o: &Overrides, forced: Option<Scenario>) -> Result<u8, RunError> {
    let cfg = load(o, forced)?;
    let progress = |msg: &str| eprintln!("{msg}");
    let out = run_scenario(&cfg, &progress)?;
    write_tables(&cfg.run.output, &out)?;
    for c in &out.report.criteria {
        eprintln!("{}", c.line());
    }
    println!("{}", serde_json::to_string_pretty(&out.report).expect("report serializes"));
    let failed = out.report.criteria.iter().any(|c| !c.passed);
    Ok(if failed { EXIT_SELFTEST } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(o) => run(o, None),
        Command::Selftest(o) => run(o, Some(Scenario::Selftest)),
        Command::PrintConfig(o) => load(o, None).map(|cfg| {
            print!("{}", cfg.to_toml());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slitcorr::config::ConfigError;

    #[test]
    fn config_errors_map_to_usage_code() {
        let e = RunError::Config(ConfigError::Invalid {
            field: "setup.z".into(),
            message: "negative".into(),
        });
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }
}
