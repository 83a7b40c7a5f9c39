//! Scenario runner.
//!
//! * `dcwot run scenario.toml` — one deployment, CSV/JSON metrics out.
//! * `dcwot suite scenario.toml` — the same scenario swept across
//!   deployment modes with a shared seed, comparative table out.
//! * `dcwot validate scenario.toml` — schema and topology check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcwot_core::metrics::{export_bundle, reduce_trace, run_suite};
use dcwot_core::scenario::ScenarioConfig;
use dcwot_core::simnet::{build_scenario, DeploymentMode};

#[derive(Parser)]
#[command(name = "dcwot", version, about = "Data-centric WoT experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override every link-loss probability in the scenario.
    #[arg(long)]
    loss: Option<f64>,
    /// Override the number of request rounds per client.
    #[arg(long)]
    rounds: Option<u32>,
    /// Output directory for CSV/JSON exports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the raw NDJSON trace next to the metrics.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and export its metrics.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the scenario under several deployment modes with a shared seed.
    Suite {
        scenario: PathBuf,
        /// Comma-separated modes (default: all four).
        #[arg(long, value_delimiter = ',')]
        modes: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Validate a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn apply_overrides(config: &mut ScenarioConfig, overrides: &Overrides) {
    if let Some(seed) = overrides.seed {
        config.scenario.seed = seed;
    }
    if let Some(loss) = overrides.loss {
        config.topology.loss = loss;
        config.topology.chain_loss = loss;
        config.topology.access_loss = loss;
        config.topology.server_link_loss = loss;
        for link in &mut config.topology.links {
            link.loss = loss;
        }
    }
    if let Some(rounds) = overrides.rounds {
        config.workload.rounds = rounds;
    }
    if let Some(out) = &overrides.out {
        config.output.dir = Some(out.display().to_string());
    }
    if overrides.trace {
        config.output.trace = true;
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, String> {
    ScenarioConfig::from_path(path).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<DeploymentMode, String> {
    DeploymentMode::ALL
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| {
            format!(
                "unknown mode {s:?}; expected one of {}",
                DeploymentMode::ALL.map(|m| m.as_str()).join(", ")
            )
        })
}

fn run_one(config: &ScenarioConfig) -> Result<(), String> {
    let mut sim = build_scenario(config).map_err(|e| e.to_string())?;
    sim.run().map_err(|e| e.to_string())?;
    let trace = sim.take_trace();
    let bundle = reduce_trace(&trace).map_err(|e| e.to_string())?;

    let dir = config
        .output
        .dir
        .clone()
        .unwrap_or_else(|| format!("out/{}-{}", config.scenario.name, config.scenario.mode.as_str()));
    let dir = PathBuf::from(dir);
    export_bundle(&bundle, &dir).map_err(|e| e.to_string())?;
    if config.output.trace {
        let path = dir.join("trace.ndjson");
        let file = std::fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        trace
            .write_ndjson(std::io::BufWriter::new(file))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }

    println!(
        "{} mode={} seed={}: {}/{} retrievals succeeded, server {:.2} responses/round",
        config.scenario.name,
        config.scenario.mode.as_str(),
        config.scenario.seed,
        bundle.total_delivered,
        bundle.total_issued,
        bundle.server_responses_per_round,
    );
    for (client, summary) in &bundle.per_client {
        println!("  {client}: {:.2}% success", summary.success_rate * 100.0);
    }
    println!("metrics written to {}", dir.display());
    Ok(())
}

fn run_suite_cmd(config: &ScenarioConfig, modes: &[String], out: Option<&Path>) -> Result<(), String> {
    let modes: Vec<DeploymentMode> = if modes.is_empty() {
        DeploymentMode::ALL.to_vec()
    } else {
        modes
            .iter()
            .map(|s| parse_mode(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    let (report, bundles) = run_suite(config, &modes).map_err(|e| e.to_string())?;
    print!("{report}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let csv_path = dir.join("suite.csv");
        std::fs::write(&csv_path, report.to_csv()).map_err(|e| format!("{}: {e}", csv_path.display()))?;
        for (mode, bundle) in modes.iter().zip(&bundles) {
            export_bundle(bundle, &dir.join(mode.as_str())).map_err(|e| e.to_string())?;
        }
        println!("suite results written to {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { scenario, overrides } => load(&scenario).and_then(|mut config| {
            apply_overrides(&mut config, &overrides);
            config.validate().map_err(|e| e.to_string())?;
            run_one(&config)
        }),
        Command::Suite { scenario, modes, overrides } => load(&scenario).and_then(|mut config| {
            apply_overrides(&mut config, &overrides);
            config.validate().map_err(|e| e.to_string())?;
            run_suite_cmd(&config, &modes, overrides.out.as_deref())
        }),
        Command::Validate { scenario } => load(&scenario).map(|config| {
            println!(
                "ok: {} ({} nodes, mode {})",
                scenario.display(),
                config.build_topology().map(|t| t.nodes.len()).unwrap_or(0),
                config.scenario.mode.as_str()
            );
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
