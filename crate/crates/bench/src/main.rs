use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sir_bench::{
    load_config, parse_seeds, render_line_plot, render_map, run_fig3, run_fig5, run_fig6, BenchError, BenchResult,
    Result, RunManifest,
};
use sir_core::mapping::{query_spectrum, SpectrumMap};
use sir_core::rf_env::generate_mapping_dataset;
use sir_core::Point;

#[derive(Debug, Parser)]
#[command(name = "sir", version, about = "Spectrum intelligence benchmarks and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Fig3,
    Fig5,
    Fig6,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark sweep and write CSV results, a manifest and optionally an SVG.
    Bench {
        figure: Figure,
        #[arg(long)]
        config: PathBuf,
        /// Seed count `n` (seeds 0..n) or a comma-separated list.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; each runs whole seeds.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        svg: bool,
    },
    /// Dump the raw mapping dataset of the configured scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectrum map tools.
    Map {
        #[command(subcommand)]
        command: MapCommand,
    },
}

#[derive(Debug, Subcommand)]
enum MapCommand {
    /// Print the idle channels at a location.
    Query {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SIR_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bench { figure, config, seeds, out, jobs, svg } => {
            if jobs == 0 {
                return Err(BenchError::Validation("--jobs must be >= 1".into()));
            }
            let cfg = load_config(&config)?;
            let seeds = parse_seeds(&seeds)?;
            fs::create_dir_all(&out)?;
            match figure {
                Figure::Fig3 => {
                    RunManifest::new("fig3", &seeds, &cfg.fig3)?.write(&out.join("manifest.json"))?;
                    let result = run_fig3(&cfg.fig3, &seeds, jobs)?;
                    write_result(&result, &out, "fig3")?;
                    if svg {
                        let doc = render_line_plot(&result, "Level prediction accuracy vs mean active SNR")?;
                        fs::write(out.join("fig3.svg"), doc)?;
                    }
                    report(&result);
                }
                Figure::Fig5 => {
                    let scenario = cfg.mapping_scenario();
                    #[derive(Serialize)]
                    struct Params<'a> {
                        scenario: &'a sir_core::rf_env::ScenarioConfig,
                        fig5: &'a sir_bench::Fig5Params,
                    }
                    let params = Params { scenario: &scenario, fig5: &cfg.fig5 };
                    RunManifest::new("fig5", &seeds, &params)?.write(&out.join("manifest.json"))?;
                    let outcome = run_fig5(&scenario, &cfg.fig5, &seeds, jobs)?;
                    write_result(&outcome.result, &out, "fig5")?;
                    outcome.write_seed_csv(BufWriter::new(File::create(out.join("fig5_seeds.csv"))?))?;
                    if let Some(first) = outcome.runs.iter().flatten().next() {
                        fs::write(out.join("map.toml"), first.map.to_toml()?)?;
                        if svg {
                            let doc = render_map(&first.map, &scenario.pus, Some(&first.dataset))?;
                            fs::write(out.join("fig5.svg"), doc)?;
                        }
                    }
                    if let Some(k) = outcome.median_state_count() {
                        println!("median state count: {k}");
                    }
                    report(&outcome.result);
                }
                Figure::Fig6 => {
                    RunManifest::new("fig6", &seeds, &cfg.fig6)?.write(&out.join("manifest.json"))?;
                    let outcome = run_fig6(&cfg.fig6, &seeds, jobs)?;
                    write_result(&outcome.result, &out, "fig6")?;
                    outcome
                        .agreement
                        .write_csv(BufWriter::new(File::create(out.join("fig6_agreement.csv"))?))?;
                    let traces = out.join("traces");
                    fs::create_dir_all(&traces)?;
                    let mut curves = csv::Writer::from_path(out.join("learning_curves.csv"))?;
                    curves.write_record(["u", "method", "span", "mean_reward"])?;
                    for (u, runs) in &outcome.first_seed {
                        for run in runs {
                            let name = run.method.as_str();
                            let f = File::create(traces.join(format!("trace_u{u}_{name}.csv")))?;
                            run.trace.write_csv(BufWriter::new(f))?;
                            for (span, r) in run.learning_curve.iter().enumerate() {
                                curves.write_record([u.to_string(), name.to_string(), span.to_string(), r.to_string()])?;
                            }
                        }
                    }
                    curves.flush()?;
                    if svg {
                        let doc = render_line_plot(&outcome.result, "Channel selection accuracy vs number of subsets")?;
                        fs::write(out.join("fig6.svg"), doc)?;
                    }
                    report(&outcome.result);
                }
            }
            Ok(())
        }
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let scenario = cfg.scenario.ok_or_else(|| {
                BenchError::Validation(format!("{}: simulate needs a [scenario] table", config.display()))
            })?;
            fs::create_dir_all(&out)?;
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            let dataset = generate_mapping_dataset(&scenario, &mut rng)?;
            dataset.write_csv(BufWriter::new(File::create(out.join("dataset.csv"))?))?;
            RunManifest::new("simulate", &[scenario.seed], &scenario)?.write(&out.join("manifest.json"))?;
            println!(
                "wrote {} samples from {} tracks to {}",
                dataset.sequences.iter().map(Vec::len).sum::<usize>(),
                dataset.sequences.len(),
                out.join("dataset.csv").display()
            );
            Ok(())
        }
        Command::Map { command: MapCommand::Query { map, x, y } } => {
            let text = fs::read_to_string(&map)
                .map_err(|e| BenchError::Validation(format!("{}: cannot read map: {e}", map.display())))?;
            let map = SpectrumMap::from_toml(&text)?;
            let idle = query_spectrum(&map, Point::new(x, y))?;
            let list: Vec<String> = idle.iter().map(|c| c.to_string()).collect();
            println!("idle channels: {}", if list.is_empty() { "none".to_string() } else { list.join(",") });
            Ok(())
        }
    }
}

fn write_result(result: &BenchResult, out: &Path, stem: &str) -> Result<()> {
    result.write_csv(BufWriter::new(File::create(out.join(format!("{stem}.csv")))?))?;
    fs::write(out.join(format!("{stem}.json")), serde_json::to_string_pretty(result)? + "\n")?;
    Ok(())
}

fn report(result: &BenchResult) {
    let missing = result.rows.iter().filter(|r| r.value.is_none()).count();
    println!(
        "{}: {} rows ({} missing) over {} seeds in {:.1}s",
        result.experiment,
        result.rows.len(),
        missing,
        result.seeds.len(),
        result.wall_clock_s
    );
}
