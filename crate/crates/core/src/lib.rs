//! Lifelong representation learning over a stream of small tasks.
//!
//! The crate trains a shared feature extractor by minimizing an empirical
//! proxy of per-task generalization error: each arriving task is split into a
//! pseudo-train part that fits a disposable task head and a pseudo-validation
//! part whose loss, with the head frozen, drives gradient updates of the
//! extractor. Alongside the trainer it provides episodic task simulation
//! (labeled pools, N-way/K-shot sampling, synthetic task families) and an
//! evaluation harness measuring transfer to unseen tasks against a
//! no-representation baseline.
//!
//! Module map:
//! - [`numkit`]: dense matrices, losses, seeded randomness
//! - [`representation`]: the feature extractor (identity, linear, two-layer perceptron)
//! - [`heads`]: per-task hypotheses (multinomial logistic, ridge regression)
//! - [`leadr`]: the streaming trainer and the generalization estimator
//! - [`stream`]: pools, partitions, episode samplers, synthetic families
//! - [`eval`]: transfer protocols, metrics, report emission
//! - [`gradcheck`]: finite-difference verification of every gradient path

pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod heads;
pub mod leadr;
pub mod numkit;
pub mod representation;
pub mod stream;

pub use error::{Error, Result};
pub use eval::{EvalProtocol, EvalReport, Metric, SupportPoint};
pub use heads::{HeadFitConfig, Targets, TaskHead, TaskKind};
pub use leadr::{LeadrConfig, SplitPair, SplitScheme, TaskRecord, TrainLog};
pub use numkit::{DenseMatrix, Rng};
pub use representation::{
    ExtractorKind, ExtractorSpec, FeatureExtractor, ForwardTrace, Nonlinearity,
};
pub use stream::{
    LabeledPool, PartitionTag, RegressionFamilySpec, StreamSource, StreamSpec, SynthFamily,
    SyntheticFamilySpec, TaskEpisode,
};
