use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gamelab::field::{generate_scenario, ScenarioOptions};
use gamelab::game::{GameSource, GameSpec};
use gamelab::harness::{final_configuration, run, sweep, ScenarioConfig};
use gamelab::stability::analyze;
use gamelab::{ConstrainedActionMap, ExperimentConfig, OracleOptions};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gamelab", version, about = "Learning in potential games and multi-robot coverage experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment for every seed of its config.
    Run(RunArgs),
    /// Run several configs over their seeds and aggregate covered worth.
    Sweep(SweepArgs),
    /// Stochastic-stability analysis of a small game.
    Oracle(OracleArgs),
    /// Generate a random worth field.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct Overrides {
    /// Replaces the config's seed list (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Replaces the config's iteration cap.
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment configs (TOML), one per curve.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct OracleArgs {
    /// Game definition (TOML).
    #[arg(long)]
    game: PathBuf,
    /// Perturbation levels, largest first.
    #[arg(long = "epsilon", value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Constant wake-up rate of every player.
    #[arg(long)]
    rate: Option<f64>,
    /// Also write CSV tables and the text report here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    grid: usize,
    #[arg(long, default_value_t = 1)]
    min_components: usize,
    #[arg(long, default_value_t = 5)]
    max_components: usize,
    /// Also write the scenario and its raster here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Scenario(a) => cmd_scenario(a),
    }
}

fn load_config(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    if !o.seeds.is_empty() {
        cfg.seeds = o.seeds.clone();
    }
    if let Some(n) = o.iterations {
        cfg.iterations = n;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let dir = &a.overrides.out_dir;
    fs::create_dir_all(dir)?;
    let label = cfg.label();
    let raster = cfg.field()?.raster();
    write(dir, &format!("{label}_config.toml"), &cfg.to_toml())?;
    write(dir, "field.csv", &raster.to_csv())?;
    let mut summary = Vec::new();
    for &seed in &cfg.seeds {
        let rec = run(&cfg, seed)?;
        let stem = format!("{label}_seed{seed}");
        write(dir, &format!("{stem}.csv"), &rec.to_csv())?;
        write(dir, &format!("{stem}_final.svg"), &final_configuration(&raster, &rec, cfg.coverage.delta))?;
        if !rec.estimates.is_empty() {
            write(dir, &format!("{stem}_estimates.csv"), &rec.estimates_csv())?;
        }
        println!(
            "{label} seed {seed}: {} iterations, final covered worth {:.6} of {:.6}{}, {:.2}s",
            rec.iterations(),
            rec.final_covered(),
            rec.total_mass,
            if rec.steady { " (steady)" } else { "" },
            rec.wall_time.as_secs_f64()
        );
        summary.push(json!({
            "seed": seed,
            "iterations": rec.iterations(),
            "final_covered": rec.final_covered(),
            "total_mass": rec.total_mass,
            "steady": rec.steady,
            "iterations_to_90pct": rec.iterations_to_fraction(0.9),
            "wall_time_s": rec.wall_time.as_secs_f64(),
        }));
    }
    write(dir, &format!("{label}_summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let configs = a.configs.iter().map(|p| load_config(p, &a.overrides)).collect::<Result<Vec<_>>>()?;
    let dir = &a.overrides.out_dir;
    fs::create_dir_all(dir)?;
    let report = sweep(&configs, &[]);
    write(dir, "sweep_bands.csv", &report.bands_csv())?;
    write(dir, "sweep_summary.csv", &report.summary_csv(&configs))?;
    write(dir, "sweep.svg", &report.to_svg())?;
    for b in &report.bands {
        println!(
            "{}: final mean {:.6} [min {:.6}, max {:.6}]",
            b.label,
            b.mean.last().copied().unwrap_or(0.0),
            b.min.last().copied().unwrap_or(0.0),
            b.max.last().copied().unwrap_or(0.0)
        );
    }
    for c in &report.cells {
        if let Err(e) = &c.outcome {
            eprintln!("{} seed {} failed: {e}", configs[c.config].label(), c.seed);
        }
    }
    if report.failures() > 0 {
        bail!("{} of {} runs failed", report.failures(), report.cells.len());
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let text = fs::read_to_string(&a.game).with_context(|| format!("reading {}", a.game.display()))?;
    let spec = GameSpec::from_toml_str(&text)?;
    let (game, source) = spec.build()?;
    let constraints = match &source {
        GameSource::Table => ConstrainedActionMap::complete_for(&game),
        GameSource::Coverage(c) => ConstrainedActionMap::lattice(c.robots, c.grid, 1.5),
    };
    let mut opts = OracleOptions::default();
    if !a.epsilons.is_empty() {
        opts.epsilons = a.epsilons;
    }
    if let Some(t) = a.threshold {
        opts.mass_threshold = t;
    }
    if let Some(r) = a.rate {
        opts.revision_rate = r;
    }
    let report = analyze(&game, &constraints, &opts)?;
    let text = report.render_text();
    print!("{text}");
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        write(dir, "oracle_report.txt", &text)?;
        write(dir, "oracle_states.csv", &report.states_csv())?;
        write(dir, "oracle_transitions.csv", &report.transitions_csv())?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct ScenarioFile {
    grid: usize,
    scenario: ScenarioConfig,
}

fn cmd_scenario(a: ScenarioArgs) -> Result<()> {
    let opts = ScenarioOptions {
        min_components: a.min_components,
        max_components: a.max_components,
        ..ScenarioOptions::default()
    };
    let field = generate_scenario(a.seed, a.grid, &opts)?;
    let file = ScenarioFile {
        grid: a.grid,
        scenario: ScenarioConfig {
            seed: a.seed,
            components: field.components.clone(),
            min_components: a.min_components,
            max_components: a.max_components,
        },
    };
    let text = toml::to_string(&file)?;
    print!("{text}");
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        write(dir, "scenario.toml", &text)?;
        write(dir, "field.csv", &field.raster().to_csv())?;
    }
    Ok(())
}
