use super::{BaselineKind, ExperimentConfig};
use crate::baselines::{
    cavity_only_features, cavity_only_samples_per_shot, cavity_only_shot, lesn_ensemble, lesn_sweep, qubit_only_run, raw_features,
    LesnConfig, LesnGrid, LesnSummary,
};
use crate::error::{QrcError, Result};
use crate::features::{moments_from_codes, MomentFeatureSpec};
use crate::fock::C64;
use crate::learn::{fit_and_test, svd_project, CurvePoint, SplitData, TrainOutcome};
use crate::reservoir::{ProtocolConfig, Reservoir};
use crate::seeding::{derive_seed, rng_from, stream};
use crate::signals::{
    gen_filtered_noise, gen_modulated, gen_spiral_example, write_dataset, ComplexSignal, DatasetManifest, LabeledExample,
    ModulationOptions, SpiralOptions, TaskKind,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleSpec {
    pub index: usize,
    /// Class id within the underlying task.
    pub class_id: usize,
    /// Position of the class in the experiment's class list.
    pub label: usize,
    pub seed: u64,
    pub split: Split,
}

/// Examples ordered by class; within a class the training examples come first.
pub fn plan_examples(cfg: &ExperimentConfig) -> Vec<ExampleSpec> {
    let sizes = cfg.dataset_sizes();
    let mut out = Vec::new();
    for (label, class_id) in cfg.class_ids().into_iter().enumerate() {
        for k in 0..sizes.n_train_per_class + sizes.n_test_per_class {
            let index = out.len();
            // seeds depend on the task class id so class subsets reuse signals
            let seed = derive_seed(cfg.master_seed, &[stream::SIGNAL, class_id as u64, k as u64]);
            let split = if k < sizes.n_train_per_class { Split::Train } else { Split::Test };
            out.push(ExampleSpec { index, class_id, label, seed, split });
        }
    }
    out
}

/// Renders the input for one example, long enough for `segments` segments.
pub fn render_signal(cfg: &ExperimentConfig, proto: &ProtocolConfig, ex: &ExampleSpec, segments: usize) -> Result<ComplexSignal> {
    let t = proto.segment_duration();
    let mut rng = rng_from(ex.seed);
    match cfg.task {
        TaskKind::Spiral => {
            let opts = SpiralOptions { segment_duration: t, jitter: cfg.signal.spiral_jitter };
            let point = gen_spiral_example(ex.class_id, &opts, &mut rng).signal.samples()[0];
            Ok(ComplexSignal::constant(point, segments, t).with_meta("spiral", ex.seed))
        }
        TaskKind::Modulation => {
            let dt = t / cfg.samples_per_segment() as f64;
            let symbol_duration = cfg.signal.symbol_duration.unwrap_or(t);
            let needed = segments as f64 * t;
            let n_symbols = ((needed / symbol_duration - 1e-9).ceil() as usize).div_ceil(8).max(1) * 8;
            let sig = gen_modulated(ex.class_id, n_symbols, &ModulationOptions { symbol_duration, dt }, &mut rng)?.signal;
            Ok(sig.with_meta(format!("modulation-{}", ex.class_id), ex.seed))
        }
        TaskKind::FilteredNoise => {
            let dt = t / cfg.samples_per_segment() as f64;
            let n = segments * cfg.samples_per_segment();
            Ok(gen_filtered_noise(ex.class_id, n, dt, &mut rng)?.signal.with_meta(format!("noise-{}", ex.class_id), ex.seed))
        }
    }
}

fn shot_seed(cfg: &ExperimentConfig, ex: &ExampleSpec, shot: usize) -> u64 {
    derive_seed(cfg.master_seed, &[stream::SHOT, ex.class_id as u64, ex.seed, shot as u64])
}

/// Bitstring codes of `n_shots` shots for one example. Shot `s` of a
/// streaming task consumes the segments right after those of shot `s - 1`.
/// Static inputs are sampled from their exact outcome table.
pub fn simulate_example(cfg: &ExperimentConfig, res: &Reservoir, ex: &ExampleSpec, n_shots: usize) -> Result<Vec<u32>> {
    let proto = res.config();
    if proto.m() > 32 {
        return Err(QrcError::Config("more than 32 bits per shot".into()));
    }
    if cfg.task.is_static() {
        let signal = render_signal(cfg, proto, ex, proto.segments_per_shot())?;
        let table = res.exact_distribution(&signal)?;
        return Ok((0..n_shots).map(|s| res.sample_from_table(&table, shot_seed(cfg, ex, s)).code() as u32).collect());
    }
    let signal = render_signal(cfg, proto, ex, n_shots * proto.segments_per_shot())?;
    let per_shot = res.samples_per_shot(signal.dt())?;
    let mut ws = res.workspace();
    (0..n_shots).map(|s| res.shot_with(&signal, s * per_shot, shot_seed(cfg, ex, s), &mut ws).map(|r| r.code() as u32)).collect()
}

/// Qubit-only reservoir codes, drawn the same way.
pub fn simulate_qubit_only(cfg: &ExperimentConfig, proto: &ProtocolConfig, ex: &ExampleSpec, n_shots: usize) -> Result<Vec<u32>> {
    let segs_per_shot = 2 * proto.m();
    let segments = if cfg.task.is_static() { segs_per_shot } else { n_shots * segs_per_shot };
    let signal = render_signal(cfg, proto, ex, segments)?;
    let per_shot = proto.samples_per_segment(signal.dt())? * segs_per_shot;
    (0..n_shots)
        .map(|s| {
            let offset = if cfg.task.is_static() { 0 } else { s * per_shot };
            qubit_only_run(&signal, proto, offset, shot_seed(cfg, ex, s)).map(|r| r.code() as u32)
        })
        .collect()
}

/// Per-example shot codes for a whole dataset.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub examples: Vec<ExampleSpec>,
    pub codes: Vec<Vec<u32>>,
    pub n_classes: usize,
}

pub fn simulate_dataset(cfg: &ExperimentConfig, n_shots: usize) -> Result<Simulated> {
    let res = Reservoir::new(cfg.protocol_config()?)?;
    let examples = plan_examples(cfg);
    let codes = examples.par_iter().map(|ex| simulate_example(cfg, &res, ex, n_shots)).collect::<Result<Vec<_>>>()?;
    Ok(Simulated { examples, codes, n_classes: cfg.class_ids().len() })
}

pub fn simulate_dataset_qubit_only(cfg: &ExperimentConfig, n_shots: usize) -> Result<Simulated> {
    let proto = cfg.protocol_config()?;
    let examples = plan_examples(cfg);
    let codes = examples.par_iter().map(|ex| simulate_qubit_only(cfg, &proto, ex, n_shots)).collect::<Result<Vec<_>>>()?;
    Ok(Simulated { examples, codes, n_classes: cfg.class_ids().len() })
}

/// Moment features from the first `budget` shots of each example.
pub fn features_at(sim: &Simulated, spec: &MomentFeatureSpec, budget: usize) -> Result<DMatrix<f64>> {
    let rows = sim
        .codes
        .par_iter()
        .map(|c| {
            if c.len() < budget {
                return Err(QrcError::Config(format!("budget {budget} exceeds the {} simulated shots", c.len())));
            }
            moments_from_codes(&c[..budget], spec).map(|f| f.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stack(&rows))
}

pub fn stack(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Splits a per-example feature matrix into train and test parts.
pub fn split_rows(x: &DMatrix<f64>, examples: &[ExampleSpec], n_classes: usize) -> SplitData {
    let pick = |s: Split| -> (DMatrix<f64>, Vec<usize>) {
        let idx: Vec<usize> = examples.iter().filter(|e| e.split == s).map(|e| e.index).collect();
        let m = DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)]);
        (m, idx.iter().map(|&i| examples[i].label).collect())
    };
    let (x_train, y_train) = pick(Split::Train);
    let (x_test, y_test) = pick(Split::Test);
    SplitData { x_train, y_train, x_test, y_test, n_classes }
}

/// Keeps the columns whose index is in `cols`.
pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub point: CurvePoint,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub examples: Vec<ExampleSpec>,
    pub curve: Vec<CurvePoint>,
    /// Readout trained at the largest budget.
    pub final_outcome: TrainOutcome,
    /// Features at the largest budget, one row per example.
    pub final_features: DMatrix<f64>,
    pub projection: DMatrix<f64>,
    pub baselines: Vec<BaselineResult>,
}

/// Inputs of the linear baseline, one matrix per budget. A streaming signal
/// is reduced to its time average over the `budget` shot windows it feeds
/// the reservoir, `(Re, Im)`; static inputs are used as is.
pub fn linear_raw_dataset(cfg: &ExperimentConfig, budgets: &[usize]) -> Result<Vec<DMatrix<f64>>> {
    let proto = cfg.protocol_config()?;
    let examples = plan_examples(cfg);
    let max_budget = budgets.iter().copied().max().unwrap_or(0);
    let per_example = examples
        .par_iter()
        .map(|ex| {
            if cfg.task.is_static() {
                let signal = render_signal(cfg, &proto, ex, proto.segments_per_shot())?;
                let f = raw_features(&signal, cfg.task, &proto)?;
                return Ok(vec![f; budgets.len()]);
            }
            let signal = render_signal(cfg, &proto, ex, max_budget * proto.segments_per_shot())?;
            let per_shot = cavity_only_samples_per_shot(&proto, signal.dt())?;
            budgets
                .iter()
                .map(|&b| {
                    let n = b * per_shot;
                    let x = signal.samples().get(..n).ok_or(QrcError::SignalTooShort { needed: n, available: signal.len() })?;
                    let m = x.iter().sum::<C64>() / n as f64;
                    Ok(vec![m.re, m.im])
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
    Ok(per_budget_matrices(&per_example, budgets.len()))
}

fn per_budget_matrices(per_example: &[Vec<Vec<f64>>], n_budgets: usize) -> Vec<DMatrix<f64>> {
    (0..n_budgets)
        .map(|k| DMatrix::from_fn(per_example.len(), per_example.first().map_or(0, |e| e[k].len()), |i, j| per_example[i][k][j]))
        .collect()
}

/// Cavity-only moment features of every example, one matrix per budget.
/// Shot windows follow the same layout as the full reservoir.
pub fn cavity_only_dataset(cfg: &ExperimentConfig, budgets: &[usize]) -> Result<Vec<DMatrix<f64>>> {
    let proto = cfg.protocol_config()?;
    let examples = plan_examples(cfg);
    let max_budget = budgets.iter().copied().max().unwrap_or(0);
    let per_example = examples
        .par_iter()
        .map(|ex| {
            let segments = if cfg.task.is_static() { proto.segments_per_shot() } else { max_budget * proto.segments_per_shot() };
            let signal = render_signal(cfg, &proto, ex, segments)?;
            let per_shot = cavity_only_samples_per_shot(&proto, signal.dt())?;
            let records = (0..max_budget)
                .map(|s| {
                    let offset = if cfg.task.is_static() { 0 } else { s * per_shot };
                    cavity_only_shot(&signal, &proto, offset, shot_seed(cfg, ex, s))
                })
                .collect::<Result<Vec<_>>>()?;
            budgets.iter().map(|&b| cavity_only_features(&records[..b], &proto, &cfg.feature).map(|f| f.values)).collect()
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
    Ok(per_budget_matrices(&per_example, budgets.len()))
}

/// Raw inputs of one shot window, as train/test data.
pub fn deterministic_split(cfg: &ExperimentConfig, kind: BaselineKind) -> Result<SplitData> {
    let proto = cfg.protocol_config()?;
    let examples = plan_examples(cfg);
    let rows = examples
        .par_iter()
        .map(|ex| {
            let signal = render_signal(cfg, &proto, ex, proto.segments_per_shot())?;
            match kind {
                BaselineKind::LinearRaw => raw_features(&signal, cfg.task, &proto),
                _ => Err(QrcError::Config(format!("the {kind:?} baseline is sampled, not deterministic"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(split_rows(&stack(&rows), &examples, cfg.class_ids().len()))
}

fn train_point(d: &SplitData, budget: usize, cfg: &ExperimentConfig) -> Result<(CurvePoint, TrainOutcome)> {
    let o = fit_and_test(&d.x_train, &d.y_train, &d.x_test, &d.y_test, d.n_classes, &cfg.train)?;
    let p = CurvePoint { budget, accuracy: o.test.accuracy, n_train: d.y_train.len(), n_test: d.y_test.len(), seed: cfg.master_seed };
    Ok((p, o))
}

/// Simulates the dataset once at the largest budget, then trains and tests
/// at every budget on prefixes of the same shot records.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let budgets = cfg.budgets();
    let max_budget = *budgets.last().expect("validated");
    let sim = simulate_dataset(&cfg, max_budget)?;
    let mut curve = Vec::new();
    let mut last = None;
    for &b in &budgets {
        let x = features_at(&sim, &cfg.feature, b)?;
        let (p, o) = train_point(&split_rows(&x, &sim.examples, sim.n_classes), b, &cfg)?;
        curve.push(p);
        last = Some((o, x));
    }
    let (final_outcome, final_features) = last.expect("at least one budget");
    let k = 3.min(final_features.ncols()).min(final_features.nrows());
    let projection = svd_project(&final_features, k)?;

    let mut baselines = Vec::new();
    for &kind in &cfg.baselines {
        match kind {
            BaselineKind::LinearRaw => {
                let per_budget = linear_raw_dataset(&cfg, &budgets)?;
                for (&b, x) in budgets.iter().zip(&per_budget) {
                    let d = split_rows(x, &sim.examples, sim.n_classes);
                    baselines.push(BaselineResult { kind, point: train_point(&d, b, &cfg)?.0 });
                }
            }
            BaselineKind::CavityOnly => {
                let per_budget = cavity_only_dataset(&cfg, &budgets)?;
                for (&b, x) in budgets.iter().zip(&per_budget) {
                    let d = split_rows(x, &sim.examples, sim.n_classes);
                    baselines.push(BaselineResult { kind, point: train_point(&d, b, &cfg)?.0 });
                }
            }
            BaselineKind::QubitOnly => {
                let q = simulate_dataset_qubit_only(&cfg, max_budget)?;
                for &b in &budgets {
                    let x = features_at(&q, &cfg.feature, b)?;
                    let d = split_rows(&x, &q.examples, q.n_classes);
                    baselines.push(BaselineResult { kind, point: train_point(&d, b, &cfg)?.0 });
                }
            }
        }
    }
    Ok(RunReport {
        config_hash: cfg.config_hash(),
        config: cfg,
        examples: sim.examples,
        curve,
        final_outcome,
        final_features,
        projection,
        baselines,
    })
}

/// Renders every example of `cfg` over `shots` shot windows and writes them
/// as a signal dataset.
pub fn generate_dataset(cfg: &ExperimentConfig, dir: &std::path::Path, shots: usize) -> Result<DatasetManifest> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let proto = cfg.protocol_config()?;
    let examples = plan_examples(&cfg);
    let segments = if cfg.task.is_static() { proto.segments_per_shot() } else { shots.max(1) * proto.segments_per_shot() };
    let rendered = examples
        .par_iter()
        .map(|ex| render_signal(&cfg, &proto, ex, segments).map(|signal| LabeledExample { signal, class_id: ex.class_id, task: cfg.task }))
        .collect::<Result<Vec<_>>>()?;
    let splits: Vec<&str> = examples.iter().map(|e| e.split.as_str()).collect();
    let manifest = DatasetManifest {
        task: cfg.task,
        classes: cfg.class_ids().iter().map(|c| c.to_string()).collect(),
        master_seed: cfg.master_seed,
        dt: rendered.first().map_or(proto.segment_duration(), |e| e.signal.dt()),
        input_scale: proto.input_scale,
        config_hash: cfg.config_hash(),
        signals: Vec::new(),
    };
    write_dataset(dir, manifest, &rendered, &splits)
}

/// LESN result for one reservoir size.
#[derive(Debug, Clone)]
pub struct LesnStudy {
    pub best: LesnConfig,
    pub validation_accuracy: f64,
    pub accuracies: Vec<f64>,
    pub summary: LesnSummary,
}

/// Sweeps the LESN hyperparameter grid on the raw inputs of a static task,
/// then scores an ensemble of `ensemble` reservoirs at the winning point.
pub fn lesn_study(cfg: &ExperimentConfig, base: &LesnConfig, grid: &LesnGrid, trials: usize, ensemble: usize) -> Result<LesnStudy> {
    if !cfg.task.is_static() {
        return Err(QrcError::Config("the LESN study needs a static task".into()));
    }
    let d = deterministic_split(cfg, BaselineKind::LinearRaw)?;
    let (best, validation_accuracy) = lesn_sweep(base, grid, trials, &d.x_train, &d.y_train, d.n_classes)?;
    let accuracies = lesn_ensemble(&best, ensemble, &d.x_train, &d.y_train, &d.x_test, &d.y_test, d.n_classes)?;
    let summary = LesnSummary::from_accuracies(best.r, best.depth, &accuracies);
    Ok(LesnStudy { best, validation_accuracy, accuracies, summary })
}
