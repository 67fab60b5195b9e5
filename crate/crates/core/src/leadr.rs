//! The streaming trainer. Each arriving task is split into a pseudo-train
//! part that fits a disposable head and a pseudo-validation part whose loss,
//! with the head frozen, drives plain SGD updates of the shared extractor.
//! Also provides the split-averaged estimator of a task's small-sample
//! generalization error.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::heads::{fit_head, head_loss_and_input_grad, HeadFitConfig, TaskHead};
use crate::numkit::{role, substream_seed, Rng};
use crate::representation::FeatureExtractor;
use crate::stream::TaskEpisode;

/// Trainer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadrConfig {
    /// Pseudo-train size n. `None` uses ceil(m/2) per task. Must satisfy
    /// 0 < n < m so the validation part is never empty.
    pub pseudo_train: Option<usize>,
    /// Representation updates per task, K. Zero disables representation
    /// learning while still fitting heads.
    pub updates_per_task: usize,
    /// SGD learning rate gamma.
    pub learning_rate: f64,
    /// Minibatch size for the validation draws. `None` uses min(32, m - n).
    /// Must not exceed m - n.
    pub minibatch: Option<usize>,
    pub head_cfg: HeadFitConfig,
    /// Root seed; every task gets its own substream derived from it.
    pub seed: u64,
}

impl Default for LeadrConfig {
    fn default() -> Self {
        LeadrConfig {
            pseudo_train: None,
            updates_per_task: 10,
            learning_rate: 0.01,
            minibatch: None,
            head_cfg: HeadFitConfig::default(),
            seed: 0,
        }
    }
}

impl LeadrConfig {
    fn resolve_split_size(&self, m: usize) -> Result<usize> {
        let n = self.pseudo_train.unwrap_or(m.div_ceil(2));
        if n == 0 {
            return Err(Error::Config("pseudo-train size n must be positive".into()));
        }
        if n >= m {
            return Err(Error::Config(format!(
                "pseudo-train size n={n} leaves no validation samples (task has m={m})"
            )));
        }
        Ok(n)
    }

    fn resolve_minibatch(&self, m: usize, n: usize) -> Result<usize> {
        let mb = self.minibatch.unwrap_or_else(|| 32.min(m - n));
        if mb == 0 {
            return Err(Error::Config("minibatch size must be positive".into()));
        }
        if mb > m - n {
            return Err(Error::Config(format!(
                "minibatch size {mb} exceeds the validation part (m - n = {})",
                m - n
            )));
        }
        Ok(mb)
    }

    fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// A pseudo-train/validation split of one task's m-sample. `tr` has size n,
/// `va` is its complement; both are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPair {
    pub tr: Vec<usize>,
    pub va: Vec<usize>,
}

/// Per-task log record.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub ordinal: usize,
    /// Surrogate loss of the fitted head on its own pseudo-train features.
    pub head_loss: f64,
    /// Mean validation loss under the frozen head before the K updates.
    pub va_loss_pre: f64,
    /// Mean validation loss under the frozen head after the K updates.
    pub va_loss_post: f64,
    /// Wall time spent on the task. Excluded from determinism comparisons.
    pub millis: u128,
}

/// Stream-ordered task records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<TaskRecord>,
}

impl TrainLog {
    /// Mean post-update validation loss over records [start, end).
    pub fn mean_va_loss_post(&self, start: usize, end: usize) -> f64 {
        let slice = &self.records[start..end.min(self.records.len())];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().map(|r| r.va_loss_post).sum::<f64>() / slice.len() as f64
    }
}

/// Uniform random n-subset of {0..m-1} as `tr`, complement as `va`.
pub fn split_pseudo(m: usize, n: usize, rng: &mut Rng) -> Result<SplitPair> {
    if n == 0 {
        return Err(Error::Config("split_pseudo: n must be positive".into()));
    }
    if n >= m {
        return Err(Error::Config(format!(
            "split_pseudo: n={n} must be smaller than m={m}"
        )));
    }
    let mut tr = rng.choose_distinct(m, n);
    tr.sort_unstable();
    let mut in_tr = vec![false; m];
    for &i in &tr {
        in_tr[i] = true;
    }
    let va = (0..m).filter(|&i| !in_tr[i]).collect();
    Ok(SplitPair { tr, va })
}

/// Processes one task: samples the split, fits the head on the pseudo-train
/// features through the current extractor, then performs K SGD steps on the
/// extractor against validation minibatches (drawn uniformly with
/// replacement) with the head held fixed throughout.
pub fn process_task(
    f: &mut FeatureExtractor,
    episode: &TaskEpisode,
    cfg: &LeadrConfig,
    rng: &mut Rng,
) -> Result<(TaskHead, TaskRecord)> {
    cfg.validate()?;
    let started = Instant::now();
    let m = episode.len();
    if episode.inputs.cols() != f.input_dim() {
        return Err(Error::Shape(format!(
            "task inputs have {} columns, extractor expects {}",
            episode.inputs.cols(),
            f.input_dim()
        )));
    }
    let n = cfg.resolve_split_size(m)?;
    let minibatch = cfg.resolve_minibatch(m, n)?;
    let split = split_pseudo(m, n, rng)?;

    let tr_inputs = episode.inputs.select_rows(&split.tr);
    let tr_targets = episode.targets.subset(&split.tr);
    let (tr_features, _) = f.forward(&tr_inputs)?;
    let head = fit_head(episode.kind, &tr_features, &tr_targets, &cfg.head_cfg)?;
    let head_loss = head_loss_and_input_grad(&head, &tr_features, &tr_targets)?.0;

    let va_inputs = episode.inputs.select_rows(&split.va);
    let va_targets = episode.targets.subset(&split.va);
    let (va_features, _) = f.forward(&va_inputs)?;
    let va_loss_pre = head_loss_and_input_grad(&head, &va_features, &va_targets)?.0;

    for _ in 0..cfg.updates_per_task {
        let batch: Vec<usize> = (0..minibatch)
            .map(|_| split.va[rng.below(split.va.len())])
            .collect();
        let batch_inputs = episode.inputs.select_rows(&batch);
        let batch_targets = episode.targets.subset(&batch);
        let (batch_features, trace) = f.forward(&batch_inputs)?;
        let (_, grad_features) = head_loss_and_input_grad(&head, &batch_features, &batch_targets)?;
        let (grad_theta, _) = f.backward(&trace, &grad_features)?;
        f.apply_step(&grad_theta, cfg.learning_rate)?;
    }

    let (va_features, _) = f.forward(&va_inputs)?;
    let va_loss_post = head_loss_and_input_grad(&head, &va_features, &va_targets)?.0;

    Ok((
        head,
        TaskRecord {
            ordinal: 0,
            head_loss,
            va_loss_pre,
            va_loss_post,
            millis: started.elapsed().as_millis(),
        },
    ))
}

/// Folds [`process_task`] over the stream in order. Task t draws from the
/// substream (cfg.seed, t), so the result does not depend on logging or on
/// anything outside the stream itself. Heads are discarded after logging;
/// only the extractor and the log persist across tasks.
pub fn train_stream(
    f: &mut FeatureExtractor,
    stream: impl IntoIterator<Item = TaskEpisode>,
    cfg: &LeadrConfig,
) -> Result<TrainLog> {
    train_stream_with(f, stream, cfg, |_, _| Ok(()))
}

/// [`train_stream`] with a per-task observer, called after each task with the
/// updated extractor and the task's record. The trainer streams through
/// episodes one at a time, so the observer is the place to checkpoint or to
/// write log lines incrementally.
pub fn train_stream_with(
    f: &mut FeatureExtractor,
    stream: impl IntoIterator<Item = TaskEpisode>,
    cfg: &LeadrConfig,
    mut on_task: impl FnMut(&FeatureExtractor, &TaskRecord) -> Result<()>,
) -> Result<TrainLog> {
    let mut log = TrainLog::default();
    for (ordinal, episode) in stream.into_iter().enumerate() {
        let mut rng = Rng::new(substream_seed(cfg.seed, role::TRAINER, ordinal as u64));
        let (_head, mut record) = process_task(f, &episode, cfg, &mut rng)
            .map_err(|err| attach_task_ordinal(ordinal, err))?;
        record.ordinal = ordinal;
        on_task(f, &record)?;
        log.records.push(record);
    }
    Ok(log)
}

fn attach_task_ordinal(ordinal: usize, err: Error) -> Error {
    match err {
        Error::Shape(msg) => Error::Shape(format!("task {ordinal}: {msg}")),
        Error::Config(msg) => Error::Config(format!("task {ordinal}: {msg}")),
        Error::Data(msg) => Error::Data(format!("task {ordinal}: {msg}")),
        Error::Numeric(msg) => Error::Numeric(format!("task {ordinal}: {msg}")),
        Error::Metric(msg) => Error::Metric(format!("task {ordinal}: {msg}")),
        other => other,
    }
}

/// How [`estimate_generalization`] averages over splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitScheme {
    /// Every n-subset of the m-sample exactly once. Only valid while
    /// C(m, n) stays at or below 1000.
    Enumerate,
    /// The given number of independent uniform splits.
    MonteCarlo { num_splits: usize },
}

/// Default number of Monte Carlo splits.
pub const DEFAULT_NUM_SPLITS: usize = 10;

/// Estimates a task's small-sample generalization error through a frozen
/// extractor: the average, over pseudo-train/validation splits, of the
/// validation loss of a head fitted on the n pseudo-train samples. The
/// extractor is never mutated here.
pub fn estimate_generalization(
    f: &FeatureExtractor,
    episode: &TaskEpisode,
    n: usize,
    scheme: SplitScheme,
    head_cfg: &HeadFitConfig,
    rng: &mut Rng,
) -> Result<f64> {
    let m = episode.len();
    if n == 0 || n >= m {
        return Err(Error::Config(format!(
            "estimate_generalization: need 0 < n < m, got n={n}, m={m}"
        )));
    }
    // One forward pass serves every split: the extractor is frozen and
    // features are computed row-wise.
    let (features, _) = f.forward(&episode.inputs)?;
    let split_loss = |tr: &[usize], va: &[usize]| -> Result<f64> {
        let head = fit_head(
            episode.kind,
            &features.select_rows(tr),
            &episode.targets.subset(tr),
            head_cfg,
        )?;
        Ok(head_loss_and_input_grad(
            &head,
            &features.select_rows(va),
            &episode.targets.subset(va),
        )?
        .0)
    };
    match scheme {
        SplitScheme::Enumerate => {
            let count = binomial(m, n);
            if count > 1000 {
                return Err(Error::Config(format!(
                    "enumeration over C({m},{n}) = {count} splits exceeds the 1000-split cap; \
                     use Monte Carlo"
                )));
            }
            let mut total = 0.0;
            let mut splits = 0usize;
            let mut tr: Vec<usize> = (0..n).collect();
            loop {
                let va: Vec<usize> = (0..m).filter(|i| !tr.contains(i)).collect();
                total += split_loss(&tr, &va)?;
                splits += 1;
                if !next_combination(&mut tr, m) {
                    break;
                }
            }
            Ok(total / splits as f64)
        }
        SplitScheme::MonteCarlo { num_splits } => {
            if num_splits == 0 {
                return Err(Error::Config(
                    "estimate_generalization: need at least 1 split".into(),
                ));
            }
            let mut total = 0.0;
            for _ in 0..num_splits {
                let split = split_pseudo(m, n, rng)?;
                total += split_loss(&split.tr, &split.va)?;
            }
            Ok(total / num_splits as f64)
        }
    }
}

/// C(m, n), saturating far above the enumeration cap.
fn binomial(m: usize, n: usize) -> u64 {
    let k = n.min(m - n) as u64;
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(m as u64 - i) / (i + 1);
        if acc > 1_000_000 {
            return acc;
        }
    }
    acc
}

/// Advances `indices` to the next n-subset of {0..m-1} in lexicographic
/// order. Returns false after the last one.
fn next_combination(indices: &mut [usize], m: usize) -> bool {
    let n = indices.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if indices[i] < m - n + i {
            indices[i] += 1;
            for j in i + 1..n {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
