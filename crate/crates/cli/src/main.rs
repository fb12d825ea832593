//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use llg_fvem::harness::config::{default_output_dir, Experiment, ExperimentConfig};
use llg_fvem::harness::experiments::{contraction_summary, run, RunArtifacts};

#[derive(Parser)]
#[command(name = "llg-fvem", version, about = "Landau-Lifshitz FVEM/GSPM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution error table.
    Convergence(RunArgs),
    /// Energy history with fixed or moving Dirichlet data.
    Energy(RunArgs),
    /// Blow-up from a smooth bubble.
    Blowup(RunArgs),
    /// Micromagnetic runs with SI material data.
    Micromag(RunArgs),
    /// Contraction of the fixed-point iteration of the implicit scheme.
    PicardCheck(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in preset to start from (ignored when --config is given).
    #[arg(long, short, conflicts_with = "config")]
    preset: Option<String>,
    /// Output directory (default: out/<name>).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Seed for randomized initial perturbations.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied after the config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path, Some(experiment)).map_err(|e| e.to_string())?,
        (None, Some(name)) => ExperimentConfig::preset(name).map_err(|e| e.to_string())?,
        (None, None) => ExperimentConfig::preset(experiment.default_preset()).map_err(|e| e.to_string())?,
    };
    if cfg.experiment != experiment {
        return Err(format!("preset describes a `{}` run, not `{experiment}`", cfg.experiment));
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, found `{o}`"))?;
        cfg.set(k.trim(), v.trim()).map_err(|m| format!("--set {o}: {m}"))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn report(cfg: &ExperimentConfig, art: &RunArtifacts) {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:6.2}")).unwrap_or_else(|| "     -".into());
    if !art.error_table.is_empty() {
        println!(
            "{:>6} {:>11} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}",
            "n", "dt", "Linf", "order", "L2", "order", "H1", "order"
        );
        for r in &art.error_table {
            println!(
                "{:>6} {:>11.3e} {:>11.3e} {} {:>11.3e} {} {:>11.3e} {}",
                r.n,
                r.dt,
                r.linf,
                opt(r.linf_order),
                r.l2,
                opt(r.l2_order),
                r.h1,
                opt(r.h1_order)
            );
        }
    }
    if let (Some(first), Some(last)) = (art.timeseries.first(), art.timeseries.last()) {
        println!("steps: {}  t_end: {:.6e}", last.step, last.t);
        println!("energy: {:.6e} -> {:.6e}", first.energy.total, last.energy.total);
        if let Some(inc) = art.max_energy_increase {
            println!("largest relative energy increase per step: {inc:.3e} (tolerance {:.1e})", cfg.energy_tol);
        }
        let peak = art.timeseries.iter().map(|r| r.grad_linf).fold(0.0, f64::max);
        println!("grad Linf: initial {:.4e}, peak {peak:.4e}, final {:.4e}", first.grad_linf, last.grad_linf);
        println!("m3 at probe center: {:.4}  min m3 in probe disc: {:.4}", last.m3_center, last.min_m3_core);
    }
    for c in contraction_summary(&art.picard, 1e-13) {
        println!(
            "tau {:.3e}: {} iterations, mean ratio {:.4}, max ratio {:.4}",
            c.tau,
            c.iterations,
            c.mean_ratio(),
            c.max_ratio()
        );
    }
    for f in &art.files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Convergence(a) => (Experiment::Convergence, a),
        Command::Energy(a) => (Experiment::Energy, a),
        Command::Blowup(a) => (Experiment::Blowup, a),
        Command::Micromag(a) => (Experiment::Micromag, a),
        Command::PicardCheck(a) => (Experiment::PicardCheck, a),
        Command::Presets => {
            for name in ExperimentConfig::preset_names() {
                let c = ExperimentConfig::preset(name).expect("built-in preset parses");
                println!("{name:<18} {}", c.experiment);
            }
            return ExitCode::SUCCESS;
        }
    };
    let cfg = match load(experiment, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let out = args.out.clone().unwrap_or_else(|| default_output_dir(&cfg));
    match run(&cfg, Some(&out)) {
        Ok(art) => {
            report(&cfg, &art);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
