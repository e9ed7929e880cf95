use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use forgecot_core::pipeline::{self, AnnotationMode, RunConfig, Verdict};
use forgecot_core::reward::RewardConfig;

mod serve;
mod sim;

#[derive(Parser)]
#[command(name = "forgecot", version, about = "Self-blended forgery data with CoT annotations, rewards and curriculum")]
struct Cli {
    /// Print the JSON schema of the run config file and exit.
    #[arg(long)]
    print_config_schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate forged samples, masks, CoT sidecars and a manifest.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["endpoint", "template"])]
        annotate: Option<String>,
        /// Overrides `generation.workers`.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a manifest's files, invariants and keyword soundness.
    Validate { manifest: PathBuf },
    /// Regenerate rows from stored parameters and compare with the files.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        row: Option<String>,
    },
    /// Serve the scoring protocol over HTTP or standard streams.
    Serve {
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        port: Option<u16>,
        #[arg(long)]
        stdio: bool,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Run config whose `[reward]` section sets lambda and length bounds.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay batch mean rewards through the curriculum controller.
    CurriculumSim {
        #[arg(long)]
        rewards: PathBuf,
        /// Run config whose `[curriculum]` section configures the controller.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV file that receives one row per level change.
        #[arg(long)]
        audit_log: Option<PathBuf>,
    },
    /// Write synthetic portraits and landmark files for demos and tests.
    SynthFixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        size: usize,
    },
}

fn reward_config(path: Option<&PathBuf>) -> Result<RewardConfig> {
    match path {
        None => Ok(RewardConfig::default()),
        Some(p) => Ok(RunConfig::load(p)?.reward),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.print_config_schema {
        println!("{}", serde_json::to_string_pretty(&pipeline::config_schema())?);
        return Ok(ExitCode::SUCCESS);
    }
    let Some(command) = cli.command else {
        bail!("no command given; see --help");
    };
    match command {
        Command::Generate { config, seed, annotate, workers } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(mode) = annotate {
                cfg.annotation.mode = mode.parse::<AnnotationMode>().map_err(anyhow::Error::msg)?;
            }
            if let Some(w) = workers {
                cfg.generation.workers = w;
            }
            let summary = pipeline::generate_dataset(&cfg)?;
            println!(
                "{}",
                serde_json::json!({
                    "manifest": summary.manifest,
                    "requested": {"real": summary.requested.real, "fake": summary.requested.fake},
                    "produced": {"real": summary.produced.real, "fake": summary.produced.fake},
                    "skipped": summary.skipped,
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { manifest } => {
            let report = pipeline::validate_manifest(&manifest)
                .with_context(|| format!("cannot read {}", manifest.display()))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Replay { manifest, row } => {
            let results = pipeline::replay(&manifest, row.as_deref())?;
            let mut bad = false;
            for r in &results {
                bad |= matches!(r.verdict, Verdict::Mismatch { .. } | Verdict::Unreadable { .. });
                println!("{}", serde_json::to_string(r)?);
            }
            Ok(if bad { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Serve { port, stdio, host, config } => {
            let reward = reward_config(config.as_ref())?;
            if stdio {
                serve::stdio(reward)?;
            } else {
                serve::http(&host, port.expect("clap requires --port without --stdio"), reward)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CurriculumSim { rewards, config, audit_log } => {
            let curriculum = match &config {
                Some(p) => RunConfig::load(p)?.curriculum,
                None => Default::default(),
            };
            sim::run(&rewards, curriculum, audit_log)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SynthFixtures { out, count, seed, size } => {
            let paths = forgecot_core::synthetic::write_fixture_set(&out, count, seed, size, size)?;
            println!("wrote {} images under {}", paths.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
