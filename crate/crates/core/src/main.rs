use clap::{Parser, Subcommand};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use wattshare::config::{parse_config, ExperimentConfig};
use wattshare::energy::build_cost_curve;
use wattshare::harness::{
    cost_curve_csv, equal_load_sweep, rounds, rounds_csv, scenario, scenario_csv, selftest,
    sweep_csv, HarnessError,
};

/// Simulate an energy-saving market between mobile operators.
#[derive(Parser)]
#[command(name = "wattshare", version, about)]
struct Cli {
    /// Experiment config file (key = value lines); defaults apply without it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the load grid step (must divide 1 evenly)
    #[arg(long, global = true)]
    delta_l: Option<f64>,

    /// Override the per-unit transfer energy overhead in watts
    #[arg(long, global = true)]
    e_tr: Option<f64>,

    /// Override the number of operators
    #[arg(long, global = true)]
    mnos: Option<usize>,

    /// Override per-operator loads, comma separated (e.g. 0.9,0.5)
    #[arg(long, global = true, value_delimiter = ',')]
    loads: Option<Vec<f64>>,

    /// Seed for the self-test RNG
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the energy-cost-versus-load curve as CSV
    CostCurve,
    /// Clear one market round at every equal-load point on the grid
    Sweep,
    /// Clear one market round at the configured per-operator loads
    Scenario,
    /// Run a multi-round trace where offloaded load persists
    Rounds,
    /// Audit the market machinery with seeded random instances
    Selftest,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, (String, String)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ("io".to_string(), format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| ("config".to_string(), e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(d) = cli.delta_l {
        cfg.delta_l = d;
    }
    if let Some(e) = cli.e_tr {
        cfg.e_tr_w = e;
    }
    if let Some(n) = cli.mnos {
        cfg.mnos = n;
    }
    if let Some(loads) = &cli.loads {
        cfg.loads = loads.clone();
        if cli.mnos.is_none() && loads.len() >= 2 {
            cfg.mnos = loads.len();
        }
    }
    cfg.validate()
        .map_err(|e| ("config".to_string(), e.to_string()))?;
    Ok(cfg)
}

fn categorize(err: HarnessError) -> (String, String) {
    let cat = match &err {
        HarnessError::Config(_) => "config",
        HarnessError::Energy(_) => "model",
        HarnessError::Market(_) => "market",
    };
    (cat.to_string(), err.to_string())
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), (String, String)> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| ("io".to_string(), format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, (String, String)> {
    if let Command::Selftest = cli.cmd {
        let report = selftest(cli.seed);
        let mut text = report.lines.join("\n");
        text.push('\n');
        emit(&cli.out, &text)?;
        return Ok(report.passed);
    }

    let cfg = load_config(cli)?;
    let model = cfg
        .build_model()
        .map_err(|e| ("model".to_string(), e.to_string()))?;
    let curve = Arc::new(
        build_cost_curve(&model, cfg.delta_l).map_err(|e| ("model".to_string(), e.to_string()))?,
    );

    let text = match cli.cmd {
        Command::CostCurve => cost_curve_csv(&curve),
        Command::Sweep => sweep_csv(&equal_load_sweep(&cfg, &curve).map_err(categorize)?),
        Command::Scenario => {
            let (mnos, out) = scenario(&cfg, &curve).map_err(categorize)?;
            scenario_csv(&mnos, &out)
        }
        Command::Rounds => rounds_csv(&rounds(&cfg, &curve).map_err(categorize)?),
        Command::Selftest => unreachable!(),
    };
    emit(&cli.out, &text)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err((category, message)) => {
            eprintln!("error[{category}]: {message}");
            ExitCode::FAILURE
        }
    }
}
