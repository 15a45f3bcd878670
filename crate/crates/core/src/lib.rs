//! Spectral (method-of-moments) estimation for a latent-topic multi-label
//! text model.
//!
//! Every document has one hidden topic `h`; words and labels are drawn
//! independently given `h`. Training makes three passes over a binary
//! document-word matrix: the pair co-occurrence matrix is eigendecomposed
//! to whiten the problem, the whitened third moment is decomposed with the
//! tensor power method, and a final pass over the labels ties label
//! distributions to the recovered topics. Prediction ranks labels by
//! `P[l|d] = Σ_k P[l|h=k] P[h=k|d]`.
//!
//! ```no_run
//! use spectral_labels::{parse_corpus, train, predict_labels, TrainConfig, DEFAULT_SMOOTHING};
//!
//! let file = std::io::BufReader::new(std::fs::File::open("train.txt")?);
//! let (corpus, labels) = parse_corpus(file, true)?;
//! let out = train(&corpus, &labels.unwrap(), &TrainConfig::new(10))?;
//! let ranked = predict_labels(&out.model, corpus.row(0), Some(5), DEFAULT_SMOOTHING)?;
//! println!("{:?}", ranked.ranking);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assign;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod model;
pub mod moments;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod tensor;
pub mod tensorpm;

pub use corpus::{corpus_stats, parse_corpus, write_corpus, LabelSet, MomentScales, SparseCorpus};
pub use error::{Error, Result};
pub use eval::{doc_auc, macro_auc, MetricReport};
pub use exec::Exec;
pub use model::{
    assemble_model, load_model, posterior_topics, predict_labels, save_model, LabelScores, SpectralModel,
    DEFAULT_SMOOTHING,
};
pub use moments::{estimate_m2, estimate_raw_q, whitened_third_moment, Estimator, PairwiseMoment};
pub use pipeline::{train, Stage, StageError, TrainConfig, TrainOutput, TrainReport};
pub use spectral::{dense_eig, truncated_eig, whitening_from_eig, EigPairs, WhiteningBasis};
pub use synth::{
    align_and_error, convergence_experiment, generate_corpus, sample_params, theorem_bounds, BoundInputs, Bounds,
    ConvergenceRow, ExperimentConfig, GroundTruth, RecoveryError,
};
pub use tensor::SymTensor3;
pub use tensorpm::{deflate, tensor_power_method, PowerConfig, TensorEigs};
