use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use aquadrift_harness::config::ExperimentConfig;
use aquadrift_harness::report;
use aquadrift_harness::runner;

#[derive(Parser)]
#[command(
    name = "aquadrift",
    version,
    about = "Leakage detection experiments on water-network pressure streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Experiment config JSON (defaults to the built-in configuration).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores). Results are independent of this.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Override leak sizes, comma-separated millimeters (e.g. `7,19`).
    #[arg(long, global = true)]
    sizes: Option<String>,

    /// Override displacements, comma-separated days (e.g. `0,2,4`).
    #[arg(long, global = true)]
    displacements: Option<String>,
}

#[derive(Subcommand, Clone, Copy, PartialEq)]
enum Cmd {
    /// Write the scenario corpus (CSV streams + metadata).
    Generate,
    /// Model-loss fold sweep plus the elastic-net relevance profile.
    Modelloss,
    /// Distribution-detector displacement/size sweep.
    Dist,
    /// KS-based leakage localization table.
    Localize,
    /// ShapeDD window-length analysis.
    Shape,
    /// All of the above.
    All,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid {what} entry {s:?}"))
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {path:?}: {e}"))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(sizes) = &cli.sizes {
        cfg.sizes_mm = parse_list(sizes, "--sizes")?;
    }
    if let Some(disp) = &cli.displacements {
        cfg.displacements_days = parse_list(disp, "--displacements")?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(cmd: Cmd, cfg: &ExperimentConfig) -> aquadrift_core::Result<()> {
    let out_dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let started = Instant::now();
    if matches!(cmd, Cmd::Generate | Cmd::All) {
        report::write_scenarios(cfg, &out_dir)?;
        eprintln!("wrote scenarios ({:.1?})", started.elapsed());
    }
    if matches!(cmd, Cmd::Modelloss | Cmd::All) {
        let t = Instant::now();
        let output = runner::run_modelloss(cfg)?;
        report::write_modelloss(&out_dir, &output)?;
        eprintln!("model-loss sweep done ({:.1?})", t.elapsed());
    }
    if matches!(cmd, Cmd::Dist | Cmd::All) {
        let t = Instant::now();
        let output = runner::run_distribution(cfg)?;
        report::write_dist(&out_dir, &output)?;
        eprintln!("distribution sweep done ({:.1?})", t.elapsed());
    }
    if matches!(cmd, Cmd::Localize | Cmd::All) {
        let t = Instant::now();
        let output = runner::run_localization(cfg)?;
        report::write_localize(&out_dir, &output)?;
        eprintln!("localization done ({:.1?})", t.elapsed());
    }
    if matches!(cmd, Cmd::Shape | Cmd::All) {
        let t = Instant::now();
        let output = runner::run_shape(cfg)?;
        report::write_shape(&out_dir, &output)?;
        eprintln!("shape analysis done ({:.1?})", t.elapsed());
    }
    report::write_manifest(&out_dir, cfg, started.elapsed().as_secs_f64())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };

    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(1);
        }
    };

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("config error: --jobs: {e}");
            return ExitCode::from(1);
        }
    }

    match run(cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
