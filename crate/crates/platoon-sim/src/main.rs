use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

use platoon_sim::scenario::{
    self, emit_metrics, emit_summary, load_config, run_scenario, RunSummary, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "platoon-sim",
    version,
    about = "Co-simulated CAM-based vehicle platooning scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes metrics.csv and summary.csv into --out.
    Run {
        /// Scenario config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the CAM generation rate in Hz.
        #[arg(long = "cam-hz")]
        cam_hz: Option<f64>,
        /// Overrides the run duration in seconds.
        #[arg(long = "duration-s")]
        duration_s: Option<f64>,
    },
    /// Run a CAM-rate sweep; writes sweep_summary.csv plus per-run metrics.
    Sweep {
        /// Scenario config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated generation rates in Hz.
        #[arg(long = "cam-hz", value_delimiter = ',', default_values_t = vec![10.0, 5.0, 2.5])]
        cam_hz: Vec<f64>,
        /// Comma-separated run seeds.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3])]
        seeds: Vec<u64>,
    },
}

fn main() {
    let result = match Cli::parse().command {
        Command::Run {
            config,
            out,
            seed,
            cam_hz,
            duration_s,
        } => run_command(&config, &out, seed, cam_hz, duration_s),
        Command::Sweep {
            config,
            out,
            cam_hz,
            seeds,
        } => sweep_command(&config, &out, &cam_hz, &seeds),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_with_overrides(
    config: &Path,
    seed: Option<u64>,
    cam_hz: Option<f64>,
    duration_s: Option<f64>,
) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.set_seed(seed);
    }
    if let Some(hz) = cam_hz {
        cfg.cam_hz = hz;
    }
    if let Some(s) = duration_s {
        anyhow::ensure!(
            s.is_finite() && s >= 0.0,
            "--duration-s must be non-negative"
        );
        cfg.duration = std::time::Duration::from_nanos((s * 1e9).round() as u64);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(s: &RunSummary) {
    println!(
        "cam_hz {} seed {}: {} ticks, CAMs sent {} received {} dropped {} out-of-range {}",
        s.cam_hz,
        s.seed,
        s.ticks,
        s.cams_sent,
        s.cams_received,
        s.cams_dropped,
        s.cams_out_of_range
    );
    for (k, f) in s.followers.iter().enumerate() {
        println!(
            "  follower {}: rms gap error {:.3} m, gap [{:.3}, {:.3}] m, steer std {:.4} rad, lost-track events {}",
            k + 1,
            f.rms_gap_error,
            f.min_gap,
            f.max_gap,
            f.steer_std,
            f.lost_track_events
        );
    }
}

fn run_command(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    cam_hz: Option<f64>,
    duration_s: Option<f64>,
) -> anyhow::Result<()> {
    let cfg = load_with_overrides(config, seed, cam_hz, duration_s)?;
    fs::create_dir_all(out).with_context(|| format!("create {}", out.display()))?;
    let n_followers = cfg.follower_count();
    let (records, summary) = run_scenario(&cfg);
    emit_metrics(&records, n_followers, &out.join("metrics.csv"))?;
    emit_summary(
        std::slice::from_ref(&summary),
        n_followers,
        &out.join("summary.csv"),
    )?;
    print_summary(&summary);
    println!(
        "wrote {} and {}",
        out.join("metrics.csv").display(),
        out.join("summary.csv").display()
    );
    Ok(())
}

/// File tag for a rate: "10", "2.5", ...
fn rate_tag(hz: f64) -> String {
    format!("{hz}")
}

fn sweep_command(config: &Path, out: &Path, cam_hz: &[f64], seeds: &[u64]) -> anyhow::Result<()> {
    anyhow::ensure!(!cam_hz.is_empty(), "--cam-hz needs at least one rate");
    anyhow::ensure!(!seeds.is_empty(), "--seeds needs at least one seed");
    let cfg = load_config(config)?;
    fs::create_dir_all(out).with_context(|| format!("create {}", out.display()))?;
    let n_followers = cfg.follower_count();
    let mut per_run_error = None;
    let summaries = scenario::run_sweep_with(&cfg, cam_hz, seeds, |run_cfg, records, summary| {
        let name = format!(
            "metrics_{}hz_seed{}.csv",
            rate_tag(run_cfg.cam_hz),
            run_cfg.seed
        );
        if let Err(e) = emit_metrics(records, n_followers, &out.join(name)) {
            per_run_error.get_or_insert(e);
        }
        print_summary(summary);
    })?;
    if let Some(e) = per_run_error {
        return Err(e.into());
    }
    emit_summary(&summaries, n_followers, &out.join("sweep_summary.csv"))?;
    println!("wrote {}", out.join("sweep_summary.csv").display());
    Ok(())
}
