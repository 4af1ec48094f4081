//! Mod-`T` classification probes evaluated under repeated stratified cross-validation.
//!
//! Every probe runs `n_seeds × n_folds` independent fits (3 × 10 by default). Each
//! run's accuracy is measured on its held-out fold; the reported accuracy is the
//! mean over runs and `kappa` is the balanced Cohen's κ of that mean, in percent.

mod circular;
mod data;
mod folds;
mod linear;
mod mlp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use circular::{CircularProbe, DEGENERATE_NORM};
pub use folds::stratified_folds;

use crate::embedding_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use data::{Dataset, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Linear,
    Mlp,
    Circular,
}

impl ProbeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Linear => "linear",
            ProbeKind::Mlp => "mlp",
            ProbeKind::Circular => "circular",
        }
    }

    fn stream_id(self) -> u64 {
        match self {
            ProbeKind::Linear => 1,
            ProbeKind::Mlp => 2,
            ProbeKind::Circular => 3,
        }
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ProbeKind::Linear),
            "mlp" => Ok(ProbeKind::Mlp),
            "circular" => Ok(ProbeKind::Circular),
            other => Err(Error::InvalidArgument(format!("unknown probe kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSettings {
    pub l2: f64,
    pub max_iterations: usize,
    /// Stop once the gradient 2-norm falls below this.
    pub tolerance: f64,
}

impl Default for LinearSettings {
    fn default() -> Self {
        LinearSettings {
            l2: 1e-4,
            max_iterations: 500,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSettings {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for MlpSettings {
    fn default() -> Self {
        MlpSettings {
            hidden: 64,
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-2,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularSettings {
    /// Anchor count `m`; `None` means `m = T`.
    pub anchors: Option<usize>,
    pub temperature: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for CircularSettings {
    fn default() -> Self {
        CircularSettings {
            anchors: None,
            temperature: 0.1,
            epochs: 300,
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub period: usize,
    pub n_seeds: usize,
    /// Seeds used are `base_seed .. base_seed + n_seeds`.
    pub base_seed: u64,
    pub n_folds: usize,
    pub standardize: bool,
    pub linear: LinearSettings,
    pub mlp: MlpSettings,
    pub circular: CircularSettings,
}

impl ProbeConfig {
    pub fn new(kind: ProbeKind, period: usize) -> Self {
        ProbeConfig {
            kind,
            period,
            n_seeds: 3,
            base_seed: 0,
            n_folds: 10,
            standardize: true,
            linear: LinearSettings::default(),
            mlp: MlpSettings::default(),
            circular: CircularSettings::default(),
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_seeds as u64).map(move |s| self.base_seed + s)
    }
}

/// One `(seed, fold)` fit evaluated on its held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub fold: usize,
    pub accuracy: f64,
    pub n_test: usize,
    pub final_loss: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub period: usize,
    pub per_run: Vec<RunRecord>,
    pub accuracy: f64,
    /// Balanced Cohen's κ in percent.
    pub kappa: f64,
    pub config: ProbeConfig,
    pub warnings: Vec<String>,
}

/// Balanced Cohen's κ in percent: `100·(acc − 1/T)/(1 − 1/T)`.
pub fn cohen_kappa(accuracy: f64, period: usize) -> f64 {
    let chance = 1.0 / period as f64;
    100.0 * (accuracy - chance) / (1.0 - chance)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FitStats {
    pub final_loss: f64,
    pub grad_norm: f64,
    #[allow(dead_code)]
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
}

enum Model {
    Linear(linear::LinearModel),
    Mlp(mlp::MlpModel),
    Circular(CircularProbe),
}

impl Model {
    fn predict(&self, x: &[f64]) -> usize {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Mlp(m) => m.predict(x),
            Model::Circular(m) => m.predict(x),
        }
    }
}

struct RunOutput {
    record: RunRecord,
    degenerate: bool,
    model: Model,
    standardizer: Standardizer,
}

fn validate(table: &EmbeddingTable, config: &ProbeConfig) -> Result<()> {
    let t = config.period;
    if t < 2 {
        return Err(Error::InvalidPeriod(t));
    }
    if table.n_tokens() < 2 * t {
        return Err(Error::InvalidArgument(format!(
            "probing needs n_tokens ≥ 2T ({} < {})",
            table.n_tokens(),
            2 * t
        )));
    }
    if config.n_seeds == 0 {
        return Err(Error::InvalidArgument("n_seeds must be positive".into()));
    }
    if config.kind == ProbeKind::Circular {
        let m = config.circular.anchors.unwrap_or(t);
        if m < t {
            return Err(Error::InvalidArgument(format!("{m} anchors cannot label {t} classes")));
        }
    }
    Ok(())
}

fn run_protocol(table: &EmbeddingTable, config: &ProbeConfig) -> Result<(ProbeResult, Vec<RunOutput>)> {
    validate(table, config)?;
    let t = config.period;
    let d = table.dim();
    let labels: Vec<usize> = (0..table.n_tokens()).map(|n| n % t).collect();

    let mut jobs = Vec::new();
    for seed in config.seeds() {
        let folds = stratified_folds(&labels, t, config.n_folds, derive_seed(seed, &[t as u64]))?;
        for fold in 0..config.n_folds {
            jobs.push((seed, fold, folds.clone()));
        }
    }

    let outputs: Vec<RunOutput> = jobs
        .into_par_iter()
        .map(|(seed, fold, folds)| {
            let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| folds[i] != fold);
            let gather = |idx: &[usize]| -> Vec<f64> {
                idx.iter().flat_map(|&i| table.row(i).iter().copied()).collect()
            };
            let train_raw = gather(&train_idx);
            let standardizer = if config.standardize {
                Standardizer::fit(&train_raw, d)
            } else {
                Standardizer::identity(d)
            };
            let train = Dataset {
                x: standardizer.apply(&train_raw),
                y: train_idx.iter().map(|&i| labels[i]).collect(),
                dim: d,
                n_classes: t,
            };
            let mut rng = SplitMix64::new(derive_seed(seed, &[fold as u64, t as u64, config.kind.stream_id()]));
            let (model, stats) = match config.kind {
                ProbeKind::Linear => {
                    let (m, s) = linear::fit(&train, &config.linear);
                    (Model::Linear(m), s)
                }
                ProbeKind::Mlp => {
                    let (m, s) = mlp::fit(&train, &config.mlp, &mut rng);
                    (Model::Mlp(m), s)
                }
                ProbeKind::Circular => {
                    let anchors = config.circular.anchors.unwrap_or(t);
                    let (m, s) = circular::fit(&train, anchors, &config.circular, &mut rng);
                    (Model::Circular(m), s)
                }
            };
            let test_x = standardizer.apply(&gather(&test_idx));
            let correct = test_idx
                .iter()
                .enumerate()
                .filter(|(k, &i)| model.predict(&test_x[k * d..(k + 1) * d]) == labels[i])
                .count();
            RunOutput {
                record: RunRecord {
                    seed,
                    fold,
                    accuracy: correct as f64 / test_idx.len() as f64,
                    n_test: test_idx.len(),
                    final_loss: stats.final_loss,
                    grad_norm: stats.grad_norm,
                    converged: stats.converged,
                },
                degenerate: stats.degenerate,
                model,
                standardizer,
            }
        })
        .collect();

    let per_run: Vec<RunRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    let accuracy = per_run.iter().map(|r| r.accuracy).sum::<f64>() / per_run.len() as f64;
    let mut warnings = Vec::new();
    let unconverged: Vec<&RunRecord> = per_run.iter().filter(|r| !r.converged).collect();
    if !unconverged.is_empty() {
        let worst = unconverged.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
        warnings.push(format!(
            "{} of {} runs stopped before the gradient tolerance (largest final gradient norm {worst:.3e})",
            unconverged.len(),
            per_run.len()
        ));
    }
    let degenerate = outputs.iter().filter(|o| o.degenerate).count();
    if degenerate > 0 {
        warnings.push(format!(
            "{degenerate} runs produced a projection with norm below {DEGENERATE_NORM:e} for some point"
        ));
    }
    let result = ProbeResult {
        kind: config.kind,
        period: t,
        per_run,
        accuracy,
        kappa: cohen_kappa(accuracy, t),
        config: config.clone(),
        warnings,
    };
    Ok((result, outputs))
}

fn with_kind(config: &ProbeConfig, kind: ProbeKind) -> ProbeConfig {
    ProbeConfig {
        kind,
        ..config.clone()
    }
}

/// `T`-class multinomial logistic regression.
pub fn linear_probe(table: &EmbeddingTable, config: &ProbeConfig) -> Result<ProbeResult> {
    run_protocol(table, &with_kind(config, ProbeKind::Linear)).map(|(r, _)| r)
}

/// `d → hidden → T` ReLU network.
pub fn mlp_probe(table: &EmbeddingTable, config: &ProbeConfig) -> Result<ProbeResult> {
    run_protocol(table, &with_kind(config, ProbeKind::Mlp)).map(|(r, _)| r)
}

/// A probe result together with the first run's trained circular map and the
/// unit-circle coordinates it assigns to every token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularOutcome {
    pub result: ProbeResult,
    pub probe: CircularProbe,
    /// Per token: normalized `(x, y)`, `None` where the projection is degenerate.
    pub projections: Vec<Option<[f64; 2]>>,
}

pub fn circular_probe(table: &EmbeddingTable, config: &ProbeConfig) -> Result<CircularOutcome> {
    let (result, outputs) = run_protocol(table, &with_kind(config, ProbeKind::Circular))?;
    let first = outputs.into_iter().next().expect("at least one run");
    let Model::Circular(probe) = first.model else {
        unreachable!("circular protocol yields circular models")
    };
    let d = table.dim();
    let z = first.standardizer.apply(table.values());
    let projections = z.chunks(d).map(|x| probe.normalized(x)).collect();
    Ok(CircularOutcome {
        result,
        probe,
        projections,
    })
}

/// Dispatch on `config.kind`.
pub fn run_probe(table: &EmbeddingTable, config: &ProbeConfig) -> Result<ProbeResult> {
    run_protocol(table, config).map(|(r, _)| r)
}

#[derive(Debug, Serialize)]
pub struct SweepCell {
    pub period: usize,
    pub kind: ProbeKind,
    #[serde(flatten)]
    pub outcome: SweepOutcome,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOutcome {
    Ok(ProbeResult),
    Error(String),
}

impl SweepCell {
    pub fn result(&self) -> Option<&ProbeResult> {
        match &self.outcome {
            SweepOutcome::Ok(r) => Some(r),
            SweepOutcome::Error(_) => None,
        }
    }
}

/// Grid of probes over `periods × kinds`. Failing cells are recorded and the sweep continues.
pub fn probe_sweep(
    table: &EmbeddingTable,
    periods: &[usize],
    kinds: &[ProbeKind],
    base: &ProbeConfig,
) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(periods.len() * kinds.len());
    for &period in periods {
        for &kind in kinds {
            let config = ProbeConfig {
                kind,
                period,
                ..base.clone()
            };
            let outcome = match run_probe(table, &config) {
                Ok(r) => SweepOutcome::Ok(r),
                Err(e) => SweepOutcome::Error(e.to_string()),
            };
            cells.push(SweepCell {
                period,
                kind,
                outcome,
            });
        }
    }
    cells
}
