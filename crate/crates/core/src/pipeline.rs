//! End-to-end training: three passes over the data plus the spectral steps
//! in between.

use std::time::{Duration, Instant};

use crate::corpus::{LabelSet, SparseCorpus};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{assemble_model, SpectralModel};
use crate::moments::{estimate_m2, estimate_raw_q, whitened_third_moment, Estimator};
use crate::spectral::{truncated_eig, whitening_from_eig, WhiteningBasis};
use crate::tensor::SymTensor3;
use crate::tensorpm::{tensor_power_method, PowerConfig, TensorEigs};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub eig_tol: f64,
    /// Lanczos step budget; `None` means 10·D.
    pub eig_max_iter: Option<usize>,
    pub restarts: Option<usize>,
    pub power_iters: usize,
    pub tpm_tol: f64,
    pub seed: u64,
    pub estimator: Estimator,
    pub exec: Exec,
}

impl TrainConfig {
    pub fn new(k: usize) -> Self {
        TrainConfig {
            k,
            eig_tol: 1e-10,
            eig_max_iter: None,
            restarts: None,
            power_iters: 100,
            tpm_tol: 1e-10,
            seed: 42,
            estimator: Estimator::default(),
            exec: Exec::Sequential,
        }
    }

    pub fn power_config(&self) -> PowerConfig {
        PowerConfig {
            restarts: self.restarts.unwrap_or(10 + 2 * self.k),
            iters: self.power_iters,
            tol: self.tpm_tol,
            // separate stream from the eigensolver start vectors
            seed: self.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
        }
    }
}

/// Named stages, used for error reporting and timings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PairMoment,
    Eigen,
    ThirdMoment,
    TensorPower,
    LabelMoment,
    Assemble,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::PairMoment => "pass 1 (pair moment)",
            Stage::Eigen => "eigendecomposition",
            Stage::ThirdMoment => "pass 2 (whitened third moment)",
            Stage::TensorPower => "tensor power method",
            Stage::LabelMoment => "pass 3 (label moment)",
            Stage::Assemble => "model assembly",
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage.name(), self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub passes: usize,
    pub timings: Vec<(Stage, Duration)>,
    pub sigma_1: f64,
    pub sigma_k: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: SpectralModel,
    pub basis: WhiteningBasis,
    pub third_moment: SymTensor3,
    pub eigs: TensorEigs,
    pub report: TrainReport,
}

fn timed<T>(
    stage: Stage,
    timings: &mut Vec<(Stage, Duration)>,
    f: impl FnOnce() -> Result<T>,
) -> std::result::Result<T, StageError> {
    let t0 = Instant::now();
    let out = f().map_err(|source| StageError { stage, source })?;
    timings.push((stage, t0.elapsed()));
    Ok(out)
}

/// Runs the full estimation. The corpus pass counter advances by exactly three.
pub fn train(
    corpus: &SparseCorpus,
    labels: &LabelSet,
    cfg: &TrainConfig,
) -> std::result::Result<TrainOutput, StageError> {
    let early = |source| StageError { stage: Stage::PairMoment, source };
    if labels.n_docs() != corpus.n_docs() {
        return Err(early(Error::Dimension(format!(
            "corpus has {} documents but label set has {}",
            corpus.n_docs(),
            labels.n_docs()
        ))));
    }
    if cfg.k == 0 || cfg.k > corpus.n_words() {
        return Err(early(Error::InvalidArgument(format!(
            "K must be in 1..={} (vocabulary size), got {}",
            corpus.n_words(),
            cfg.k
        ))));
    }
    let passes_before = corpus.passes();
    let mut timings = Vec::new();
    let exec = cfg.exec;

    let m2 = timed(Stage::PairMoment, &mut timings, || estimate_m2(corpus, cfg.estimator, exec))?;
    let max_iter = cfg.eig_max_iter.unwrap_or(10 * corpus.n_words());
    let basis = timed(Stage::Eigen, &mut timings, || {
        let eig = truncated_eig(&m2, cfg.k, cfg.eig_tol, max_iter, cfg.seed)?;
        whitening_from_eig(&eig)
    })?;
    let third = timed(Stage::ThirdMoment, &mut timings, || whitened_third_moment(corpus, &basis, cfg.estimator, exec))?;
    let pcfg = cfg.power_config();
    let eigs = timed(Stage::TensorPower, &mut timings, || tensor_power_method(&third, cfg.k, &pcfg, exec))?;
    let raw_q =
        timed(Stage::LabelMoment, &mut timings, || estimate_raw_q(corpus, labels, &basis, &eigs, cfg.estimator, exec))?;
    let model = timed(Stage::Assemble, &mut timings, || assemble_model(&basis, &eigs, &raw_q))?;

    let lambda_min = eigs.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_max = eigs.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let report = TrainReport {
        passes: corpus.passes() - passes_before,
        timings,
        sigma_1: basis.eig.values[0],
        sigma_k: *basis.eig.values.last().unwrap(),
        lambda_min,
        lambda_max,
    };
    Ok(TrainOutput { model, basis, third_moment: third, eigs, report })
}
