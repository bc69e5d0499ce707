//! `qrc`: runs reservoir experiments from JSON configs.

use clap::{Args, Parser, Subcommand};
use qrc_core::baselines::{write_lesn_summary_csv, LesnConfig, LesnGrid};
use qrc_core::experiment::{
    generate_dataset, lesn_study, run_experiment, run_validation, write_outputs, ExperimentConfig, ValidateOptions,
};
use qrc_core::signals::TaskKind;
use qrc_core::table::Provenance;
use qrc_core::{QrcError, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "qrc", version, about = "Qubit-oscillator reservoir experiments")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, train and write curves, confusion matrix, features, projection and manifest.
    Run {
        /// Experiment config, or the manifest.json of an earlier run.
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check the simulator against its closed-form oracles.
    Validate {
        #[arg(long)]
        n_fock: Option<usize>,
        #[arg(long)]
        guard_threshold: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        phase_shots: usize,
        #[arg(long, default_value_t = 100_000)]
        parity_shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the input signals of an experiment.
    GenData {
        config: PathBuf,
        /// Shot windows to render for streaming tasks.
        #[arg(long, default_value_t = 1)]
        shots: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Hyperparameter sweep and ensemble of leaky echo-state networks on a static task.
    SweepLesn {
        /// Experiment config; the default spiral task when absent.
        config: Option<PathBuf>,
        /// Reservoir sizes to study.
        #[arg(long, value_delimiter = ',', default_value = "64,32")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Random reservoirs per grid point.
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Reservoirs in the final ensemble.
        #[arg(long, default_value_t = 100)]
        ensemble: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(cfg.output_dir.as_deref().unwrap_or("out"))
}

fn cmd_run(config: &Path, common: &Common) -> Result<()> {
    let cfg = load(config, common)?;
    let start = Instant::now();
    let report = run_experiment(&cfg)?;
    let dir = out_dir(&cfg);
    let written = write_outputs(&report, &dir, start.elapsed().as_secs_f64())?;
    println!("config {} seed {}", report.config_hash, cfg.master_seed);
    for p in &report.curve {
        println!("shots {:>6}  accuracy {:.4}", p.budget, p.accuracy);
    }
    for b in &report.baselines {
        println!("{:?} shots {:>6}  accuracy {:.4}", b.kind, b.point.budget, b.point.accuracy);
    }
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn cmd_validate(opts: &ValidateOptions) -> Result<bool> {
    let checks = run_validation(opts)?;
    for c in &checks {
        println!("{:<20} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn cmd_gen_data(config: &Path, shots: usize, common: &Common) -> Result<()> {
    let cfg = load(config, common)?;
    let dir = out_dir(&cfg);
    let m = generate_dataset(&cfg, &dir, shots)?;
    println!("wrote {} signals to {}", m.signals.len(), dir.display());
    Ok(())
}

fn cmd_sweep_lesn(config: Option<&Path>, sizes: &[usize], depth: usize, trials: usize, ensemble: usize, common: &Common) -> Result<()> {
    let mut cfg = match config {
        Some(p) => load(p, common)?,
        None => {
            let mut c = ExperimentConfig::new(TaskKind::Spiral);
            if let Some(s) = common.seed {
                c.master_seed = s;
            }
            if let Some(o) = &common.out {
                c.output_dir = Some(o.display().to_string());
            }
            c
        }
    };
    cfg.validate()?;
    cfg = cfg.resolved();
    let dir = out_dir(&cfg);
    std::fs::create_dir_all(&dir).map_err(|e| QrcError::io(&dir, e))?;
    let prov = Provenance { config_hash: cfg.config_hash(), master_seed: cfg.master_seed };
    let mut rows = Vec::new();
    let mut best = Vec::new();
    for &r in sizes {
        let base = LesnConfig { r, depth, seed: cfg.master_seed, ..LesnConfig::default() };
        let study = lesn_study(&cfg, &base, &LesnGrid::default(), trials, ensemble)?;
        println!(
            "r {:>3}  validation {:.4}  ensemble mean {:.4}  std {:.4}",
            r, study.validation_accuracy, study.summary.mean_acc, study.summary.std_acc
        );
        best.push(serde_json::json!({
            "r": r,
            "depth": depth,
            "a": study.best.a,
            "gamma": study.best.gamma,
            "w_in": study.best.w_in,
            "rho": study.best.rho,
            "p_s": study.best.p_s,
            "validation_accuracy": study.validation_accuracy,
        }));
        rows.push(study.summary);
    }
    write_lesn_summary_csv(&dir.join("lesn_summary.csv"), Some(&prov), &rows)?;
    let doc = serde_json::json!({ "config_hash": prov.config_hash, "master_seed": prov.master_seed, "best": best });
    let path = dir.join("lesn_best.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("json")).map_err(|e| QrcError::io(&path, e))?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    // usage errors count as configuration errors; clap alone would exit 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Run { config, common } => cmd_run(config, common),
        Command::Validate { n_fock, guard_threshold, phase_shots, parity_shots, seed } => {
            let opts = ValidateOptions {
                n_fock: *n_fock,
                guard_threshold: *guard_threshold,
                phase_shots: *phase_shots,
                parity_shots: *parity_shots,
                seed: *seed,
            };
            match cmd_validate(&opts) {
                Ok(true) => Ok(()),
                Ok(false) => return ExitCode::from(2),
                Err(e) => Err(e),
            }
        }
        Command::GenData { config, shots, common } => cmd_gen_data(config, *shots, common),
        Command::SweepLesn { config, sizes, depth, trials, ensemble, common } => {
            cmd_sweep_lesn(config.as_deref(), sizes, *depth, *trials, *ensemble, common)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
