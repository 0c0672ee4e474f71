use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdaccess::pipeline::{self, Command, RunConfig, StageStatus, OUT_DIR_ENV};
use tdaccess::Error;

/// Time-of-day car accessibility, time cartograms and animation frames.
#[derive(Debug, Parser)]
#[command(name = "tdaccess", version)]
struct Cli {
    /// Run configuration (`key = value` lines); defaults apply without one.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; beats both the config file and the environment.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,

    #[arg(long, global = true)]
    workers: Option<String>,

    /// from | to | both
    #[arg(long, global = true)]
    direction: Option<String>,

    /// choropleth | extrusion | cartogram
    #[arg(long, global = true)]
    mode: Option<String>,

    #[arg(long, global = true)]
    seed: Option<String>,

    /// Any configuration key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Generate the synthetic city dataset.
    Synth,
    /// Build the travel-time cube and the free-flow cube.
    Matrix,
    /// Evaluate accessibility per zone and slot.
    Access,
    /// Distort reference layers and report relative areas.
    Cartogram,
    /// Write SVG frames and the animation manifest.
    Render,
    /// Print network length by road class and profile coverage.
    Stats,
    /// Every stage in order.
    All,
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::Synth => Command::Synth,
            Sub::Matrix => Command::Matrix,
            Sub::Access => Command::Access,
            Sub::Cartogram => Command::Cartogram,
            Sub::Render => Command::Render,
            Sub::Stats => Command::Stats,
            Sub::All => Command::All,
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        cfg.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    let flags = [
        ("beta", &cli.beta),
        ("workers", &cli.workers),
        ("direction", &cli.direction),
        ("mode", &cli.mode),
        ("seed", &cli.seed),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &cli.set {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Error::Config {
                field: kv.clone(),
                message: "--set expects KEY=VALUE".into(),
            });
        };
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("ERROR: usage: {first}");
            return ExitCode::from(1);
        }
    };

    let command = cli.command.command();
    let result = build_config(&cli).and_then(|cfg| {
        let reports = pipeline::run(&cfg, command)?;
        Ok((cfg, reports))
    });
    match result {
        Ok((cfg, reports)) => {
            for r in &reports {
                let status = match r.status {
                    StageStatus::Ran => "ran",
                    StageStatus::Skipped => "skipped",
                };
                println!("{}\t{status}", r.stage);
            }
            if command == Command::Stats {
                let path = pipeline::OutputPaths::new(&cfg.out_dir).stats;
                match std::fs::read_to_string(&path) {
                    Ok(text) => print!("{text}"),
                    Err(e) => {
                        eprintln!("ERROR: runtime: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (kind, code) = if e.is_validation() { ("validation", 1) } else { ("runtime", 2) };
            eprintln!("ERROR: {kind}: {}", e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
