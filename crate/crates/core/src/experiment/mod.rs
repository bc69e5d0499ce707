//! End-to-end runs: dataset simulation, features at each shot budget,
//! readout training and the artifacts written to an output directory.

mod config;
mod pipeline;
mod validate;

pub use config::{BaselineKind, DatasetSection, ExperimentConfig, ProtocolSection, SignalSection};
pub use pipeline::{
    cavity_only_dataset, deterministic_split, features_at, generate_dataset, lesn_study, linear_raw_dataset, plan_examples, render_signal,
    run_experiment, select_columns, simulate_dataset, simulate_dataset_qubit_only, simulate_example, simulate_qubit_only, split_rows,
    stack, BaselineResult, ExampleSpec, LesnStudy, RunReport, Simulated, Split,
};

pub use validate::{
    check_function_space_rank, check_geometric_phase, check_kerr_revival, check_parity_trajectory, run_validation, CheckResult,
    ValidateOptions,
};

use crate::error::{QrcError, Result};
use crate::learn::write_curve_csv;
use crate::table::{fmt_f64, write_csv_file, Provenance};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    master_seed: u64,
    version: &'static str,
    wall_time_s: f64,
    threads: usize,
    readout_method: String,
    ridge_eps: Option<f64>,
    outputs: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Writes every artifact of a run into `dir` and returns the paths written.
pub fn write_outputs(report: &RunReport, dir: &Path, wall_time_s: f64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| QrcError::io(dir, e))?;
    let prov = Provenance { config_hash: report.config_hash.clone(), master_seed: report.config.master_seed };
    let p = Some(&prov);
    let mut written = Vec::new();

    let path = dir.join("curve.csv");
    write_curve_csv(&path, p, &report.curve)?;
    written.push(path);

    let model = &report.final_outcome.model;
    let conf = &report.final_outcome.test.confusion;
    let mut header = vec!["true".to_string()];
    header.extend(model.classes.iter().cloned());
    let rows: Vec<Vec<String>> = (0..conf.nrows())
        .map(|i| {
            let mut r = vec![model.classes[i].clone()];
            r.extend((0..conf.ncols()).map(|j| conf[(i, j)].to_string()));
            r
        })
        .collect();
    let path = dir.join("confusion.csv");
    write_csv_file(&path, p, &header, &rows)?;
    written.push(path);

    let mut header = strings(&["example", "split", "label"]);
    header.extend(report.config.feature.names());
    let rows: Vec<Vec<String>> = report
        .examples
        .iter()
        .map(|e| {
            let mut r = vec![e.index.to_string(), e.split.as_str().to_string(), e.label.to_string()];
            r.extend(report.final_features.row(e.index).iter().map(|&v| fmt_f64(v)));
            r
        })
        .collect();
    let path = dir.join("features.csv");
    write_csv_file(&path, p, &header, &rows)?;
    written.push(path);

    let mut header = strings(&["example", "label"]);
    header.extend((0..report.projection.ncols()).map(|k| format!("pc{}", k + 1)));
    let rows: Vec<Vec<String>> = report
        .examples
        .iter()
        .map(|e| {
            let mut r = vec![e.index.to_string(), e.label.to_string()];
            r.extend(report.projection.row(e.index).iter().map(|&v| fmt_f64(v)));
            r
        })
        .collect();
    let path = dir.join("svd.csv");
    write_csv_file(&path, p, &header, &rows)?;
    written.push(path);

    if !report.baselines.is_empty() {
        let header = strings(&["baseline", "budget", "accuracy", "n_train", "n_test", "seed"]);
        let rows: Vec<Vec<String>> = report
            .baselines
            .iter()
            .map(|b| {
                let name = serde_json::to_value(b.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let q = &b.point;
                vec![name, q.budget.to_string(), fmt_f64(q.accuracy), q.n_train.to_string(), q.n_test.to_string(), q.seed.to_string()]
            })
            .collect();
        let path = dir.join("baselines.csv");
        write_csv_file(&path, p, &header, &rows)?;
        written.push(path);
    }

    let path = dir.join("model.json");
    model.save_with(&path, p)?;
    written.push(path);

    let mut outputs: Vec<String> = written.iter().filter_map(|w| w.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        config: &report.config,
        config_hash: &report.config_hash,
        master_seed: report.config.master_seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s,
        threads: rayon::current_num_threads(),
        readout_method: format!("{:?}", report.final_outcome.method),
        ridge_eps: report.final_outcome.ridge_eps,
        outputs,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| QrcError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
