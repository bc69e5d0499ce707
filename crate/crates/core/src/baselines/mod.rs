//! Reference models: a leaky echo state network, the oscillator and the qubit
//! used on their own, and a linear classifier on the raw input.

mod ablation;
mod lesn;

pub use ablation::{
    cavity_mean_field, cavity_only_features, cavity_only_samples_per_shot, cavity_only_shot, qubit_only_run, qubit_only_samples_per_shot,
    raw_features,
};
pub use lesn::{
    lesn_accuracy, lesn_build, lesn_ensemble, lesn_run, lesn_static_features, lesn_sweep, write_lesn_summary_csv, Lesn, LesnConfig,
    LesnGrid, LesnSummary,
};
