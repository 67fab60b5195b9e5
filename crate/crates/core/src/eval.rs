//! Evaluation protocols: few-shot accuracy curves over a stream of unseen
//! test tasks, the single-task baseline, metric primitives (binary AUC,
//! RMSE), a 50/50 multitask protocol for ingested datasets, and report
//! serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heads::{fit_head, predict, HeadFitConfig, Targets, TaskKind};
use crate::leadr::{LeadrConfig, TrainLog};
use crate::numkit::{role, substream_seed, DenseMatrix, Rng};
use crate::representation::{ExtractorKind, ExtractorSpec, FeatureExtractor};
use crate::stream::{sample_support, LabeledPool, PartitionTag, Provenance, TaskEpisode};

/// What a protocol measures per fitted head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Auc,
    Rmse,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Accuracy => write!(f, "accuracy"),
            Metric::Auc => write!(f, "auc"),
            Metric::Rmse => write!(f, "rmse"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "auc" => Ok(Metric::Auc),
            "rmse" => Ok(Metric::Rmse),
            other => Err(Error::Config(format!(
                "unknown metric '{other}', expected accuracy, auc, or rmse"
            ))),
        }
    }
}

/// The lifelong evaluation protocol: a fixed number of fresh test tasks,
/// each measured at several support sizes with several support redraws.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub num_test_tasks: usize,
    /// Classes per test task, C.
    pub ways: usize,
    /// Shots-per-class values to sweep, strictly ascending.
    pub support_sizes: Vec<usize>,
    /// Independent support redraws per task and size.
    pub repeats: usize,
    pub metric: Metric,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            num_test_tasks: 100,
            ways: 5,
            support_sizes: vec![1, 2, 3, 5, 10],
            repeats: 10,
            metric: Metric::Accuracy,
        }
    }
}

impl EvalProtocol {
    fn validate(&self) -> Result<()> {
        if self.ways < 2 {
            return Err(Error::Config(format!(
                "test tasks need at least 2 ways, got {}",
                self.ways
            )));
        }
        if self.support_sizes.is_empty() {
            return Err(Error::Config("support_sizes must not be empty".into()));
        }
        if self.support_sizes[0] == 0 {
            return Err(Error::Config("support sizes must be positive".into()));
        }
        if self.support_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "support sizes must be strictly ascending, got {:?}",
                self.support_sizes
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// One point of an accuracy-vs-support-size curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub support_size: usize,
    /// Mean of the per-task values.
    pub mean: f64,
    /// Population standard deviation across tasks.
    pub std: f64,
    /// One value per test task, itself a mean over the repeats.
    pub per_task: Vec<f64>,
}

/// A full evaluation result: the curve plus enough context to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub metric: Metric,
    pub config: BTreeMap<String, String>,
    pub points: Vec<SupportPoint>,
}

impl EvalReport {
    fn assert_ranges(&self) -> Result<()> {
        for point in &self.points {
            let ok = match self.metric {
                Metric::Accuracy | Metric::Auc => {
                    (0.0..=1.0).contains(&point.mean)
                        && point.per_task.iter().all(|v| (0.0..=1.0).contains(v))
                }
                Metric::Rmse => point.mean >= 0.0 && point.per_task.iter().all(|v| *v >= 0.0),
            };
            if !ok || !point.std.is_finite() || point.std < 0.0 {
                return Err(Error::Metric(format!(
                    "report value out of range for {} at support size {}",
                    self.metric, point.support_size
                )));
            }
        }
        Ok(())
    }
}

fn method_tag(kind: ExtractorKind) -> String {
    match kind {
        ExtractorKind::Identity => "stl".to_string(),
        other => format!("leadr-{other}"),
    }
}

/// Sweeps the protocol's support sizes over fresh test tasks with the
/// extractor frozen. Per task, classes are drawn once and reused across all
/// support sizes and repeats; each (size, repeat) cell redraws a support set
/// from `support_pool`, fits a head on the extracted support features, and
/// measures the metric on every `test_pool` sample of the task's classes.
/// Task t consumes its own RNG substream, so results do not depend on
/// evaluation order. The pools must carry different partition tags; nothing
/// is ever measured on a sample that a head was fitted on.
pub fn evaluate_representation(
    f: &FeatureExtractor,
    support_pool: &LabeledPool,
    test_pool: &LabeledPool,
    protocol: &EvalProtocol,
    head_cfg: &HeadFitConfig,
    rng: &mut Rng,
) -> Result<EvalReport> {
    protocol.validate()?;
    head_cfg.validate()?;
    if support_pool.tag() == test_pool.tag() {
        return Err(Error::Data(format!(
            "support and test pools both carry the '{}' partition tag; \
             evaluation needs disjoint partitions",
            support_pool.tag()
        )));
    }
    if support_pool.dim() != test_pool.dim() {
        return Err(Error::Shape(format!(
            "support pool has {} dims, test pool {}",
            support_pool.dim(),
            test_pool.dim()
        )));
    }
    if support_pool.dim() != f.input_dim() {
        return Err(Error::Shape(format!(
            "pools have {} dims, extractor expects {}",
            support_pool.dim(),
            f.input_dim()
        )));
    }
    if support_pool.num_classes() != test_pool.num_classes() {
        return Err(Error::Data(format!(
            "support pool has {} classes, test pool {}",
            support_pool.num_classes(),
            test_pool.num_classes()
        )));
    }
    if protocol.ways > support_pool.num_classes() {
        return Err(Error::Data(format!(
            "pools have {} classes, protocol wants {}-way tasks",
            support_pool.num_classes(),
            protocol.ways
        )));
    }
    match protocol.metric {
        Metric::Accuracy => {}
        Metric::Auc => {
            if protocol.ways != 2 {
                return Err(Error::Metric(format!(
                    "AUC needs binary tasks, protocol has ways={}",
                    protocol.ways
                )));
            }
        }
        Metric::Rmse => {
            return Err(Error::Metric(
                "the lifelong protocol samples classification tasks; rmse does not apply".into(),
            ));
        }
    }

    let base_seed = rng.next_u64();
    let mut per_task: Vec<Vec<f64>> = vec![Vec::new(); protocol.support_sizes.len()];
    for t in 0..protocol.num_test_tasks {
        let mut task_rng = Rng::new(substream_seed(base_seed, role::EVAL, t as u64));
        let classes = task_rng.choose_distinct(support_pool.num_classes(), protocol.ways);

        let mut test_rows = Vec::new();
        let mut test_labels = Vec::new();
        for (local, &class) in classes.iter().enumerate() {
            let rows = test_pool.class_rows(class);
            if rows.is_empty() {
                return Err(Error::Data(format!(
                    "class {class} has no samples in the {} partition",
                    test_pool.tag()
                )));
            }
            for &r in rows {
                test_rows.push(r);
                test_labels.push(local);
            }
        }
        let (test_features, _) = f.forward(&test_pool.inputs().select_rows(&test_rows))?;

        for (si, &size) in protocol.support_sizes.iter().enumerate() {
            let mut total = 0.0;
            for _ in 0..protocol.repeats {
                let support = sample_support(support_pool, &classes, size, &mut task_rng)?;
                let (support_features, _) = f.forward(&support.inputs)?;
                let head = fit_head(support.kind, &support_features, &support.targets, head_cfg)?;
                total += match protocol.metric {
                    Metric::Accuracy => {
                        let Targets::Classes(pred) = predict(&head, &test_features)? else {
                            return Err(Error::Metric(
                                "classification head produced non-class predictions".into(),
                            ));
                        };
                        let hits = pred
                            .iter()
                            .zip(&test_labels)
                            .filter(|(p, t)| p == t)
                            .count();
                        hits as f64 / test_labels.len() as f64
                    }
                    Metric::Auc => {
                        let logits = head.scores(&test_features)?;
                        let scores: Vec<f64> = (0..logits.rows())
                            .map(|r| logits.get(r, 1) - logits.get(r, 0))
                            .collect();
                        auc_binary(&scores, &test_labels)?
                    }
                    Metric::Rmse => unreachable!("rejected above"),
                };
            }
            per_task[si].push(total / protocol.repeats as f64);
        }
    }

    let points = protocol
        .support_sizes
        .iter()
        .zip(per_task)
        .filter(|(_, values)| !values.is_empty())
        .map(|(&support_size, values)| {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
            SupportPoint {
                support_size,
                mean,
                std: var.sqrt(),
                per_task: values,
            }
        })
        .collect();

    let mut config = BTreeMap::new();
    config.insert("base_seed".into(), base_seed.to_string());
    config.insert("extractor".into(), f.kind().to_string());
    config.insert("input_dim".into(), f.input_dim().to_string());
    config.insert("output_dim".into(), f.output_dim().to_string());
    config.insert("num_test_tasks".into(), protocol.num_test_tasks.to_string());
    config.insert("ways".into(), protocol.ways.to_string());
    config.insert("repeats".into(), protocol.repeats.to_string());
    config.insert(
        "support_sizes".into(),
        protocol
            .support_sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    config.insert("head_iterations".into(), head_cfg.iterations.to_string());
    config.insert("head_step_size".into(), head_cfg.step_size.to_string());
    config.insert("head_l2".into(), head_cfg.l2.to_string());
    config.insert("head_tolerance".into(), head_cfg.tolerance.to_string());

    let report = EvalReport {
        method: method_tag(f.kind()),
        metric: protocol.metric,
        config,
        points,
    };
    report.assert_ranges()?;
    Ok(report)
}

/// The single-task baseline: the same protocol with heads fitted on raw
/// inputs. Identical to [`evaluate_representation`] with an identity
/// extractor, bit for bit, given equal RNG state.
pub fn baseline_stl(
    support_pool: &LabeledPool,
    test_pool: &LabeledPool,
    protocol: &EvalProtocol,
    head_cfg: &HeadFitConfig,
    rng: &mut Rng,
) -> Result<EvalReport> {
    let identity = FeatureExtractor::zeroed(ExtractorSpec::Identity {
        dim: support_pool.dim(),
    })?;
    evaluate_representation(&identity, support_pool, test_pool, protocol, head_cfg, rng)
}

/// Probability that a uniformly chosen positive's score exceeds a uniformly
/// chosen negative's, counting ties as one half (the tie-aware Mann-Whitney
/// statistic via average ranks). Exact: for n below 2^26 every intermediate
/// is a half-integer well inside f64's exact-integer range, so the result
/// equals the all-pairs count bit for bit.
pub fn auc_binary(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Metric(format!(
            "auc labels must be 0 or 1, found {bad}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Metric("auc scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Metric("auc needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; a tie group spanning ranks i+1..=j+1 shares
        // their average, a half-integer.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        let tied_positives = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        positive_rank_sum += avg_rank * tied_positives as f64;
        i = j + 1;
    }
    let u = positive_rank_sum - (positives * (positives + 1)) as f64 / 2.0;
    Ok(u / (positives * negatives) as f64)
}

/// Root mean squared difference.
pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "rmse: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Metric("rmse needs at least one value".into()));
    }
    let total: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((total / pred.len() as f64).sqrt())
}

/// Result of a multitask protocol run: one value per task plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitaskReport {
    pub metric: Metric,
    pub per_task: Vec<f64>,
    pub mean: f64,
}

/// Reads one task per CSV file. The metric pins the task kind: accuracy and
/// AUC read integer class labels, rmse reads real-valued targets from the
/// label column.
pub fn load_multitask_tasks(paths: &[PathBuf], metric: Metric) -> Result<Vec<TaskEpisode>> {
    if paths.is_empty() {
        return Err(Error::Data(
            "multitask run needs at least one task file".into(),
        ));
    }
    let mut tasks = Vec::with_capacity(paths.len());
    for path in paths {
        let episode = match metric {
            Metric::Accuracy | Metric::Auc => {
                let pool = crate::stream::load_pool_csv(path)?;
                if metric == Metric::Auc && pool.num_classes() != 2 {
                    return Err(Error::Metric(format!(
                        "AUC needs binary tasks, {} has {} classes",
                        path.display(),
                        pool.num_classes()
                    )));
                }
                TaskEpisode {
                    kind: TaskKind::Classification {
                        num_classes: pool.num_classes(),
                    },
                    provenance: Provenance {
                        classes: (0..pool.num_classes()).collect(),
                        partition: PartitionTag::Full,
                    },
                    targets: Targets::Classes(pool.labels().to_vec()),
                    inputs: pool.inputs().clone(),
                }
            }
            Metric::Rmse => {
                let (inputs, values) = load_values_csv(path)?;
                TaskEpisode {
                    inputs,
                    targets: Targets::Values(values),
                    kind: TaskKind::Regression,
                    provenance: Provenance {
                        classes: Vec::new(),
                        partition: PartitionTag::Full,
                    },
                }
            }
        };
        tasks.push(episode);
    }
    Ok(tasks)
}

/// The pool CSV layout with a real-valued first column.
fn load_values_csv(path: &Path) -> Result<(DenseMatrix, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file, expected a header row".into(),
    })?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"label") || columns.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header 'label,f0,...', found '{header}'"),
        });
    }
    let dim = columns.len() - 1;
    let mut data = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        for (k, field) in fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid value '{field}'"),
            })?;
            if k == 0 {
                values.push(value);
            } else {
                data.push(value);
            }
        }
    }
    let inputs = DenseMatrix::from_vec(values.len(), dim, data)?;
    Ok((inputs, values))
}

/// Splits every task into a train and a test half. Classification splits are
/// stratified per class; regression splits are plain random. The same seeded
/// split serves both representation training and measurement, so the test
/// halves never leak into training.
pub fn split_multitask_tasks(
    tasks: &[TaskEpisode],
    split_fraction: f64,
    rng: &mut Rng,
) -> Result<Vec<(TaskEpisode, TaskEpisode)>> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    tasks
        .iter()
        .map(|task| split_task(task, split_fraction, rng))
        .collect()
}

fn split_task(
    task: &TaskEpisode,
    fraction: f64,
    rng: &mut Rng,
) -> Result<(TaskEpisode, TaskEpisode)> {
    let m = task.len();
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    match &task.targets {
        Targets::Classes(labels) => {
            let num_classes = match task.kind {
                TaskKind::Classification { num_classes } => num_classes,
                TaskKind::Regression => {
                    return Err(Error::Data("class targets on a regression task".into()))
                }
            };
            for class in 0..num_classes {
                let mut rows: Vec<usize> = (0..m).filter(|&r| labels[r] == class).collect();
                let n = rows.len();
                let take = ((n as f64) * fraction).round() as usize;
                if take == 0 || take == n {
                    return Err(Error::Data(format!(
                        "class {class} has {n} samples, too few for a {fraction} split"
                    )));
                }
                rng.shuffle(&mut rows);
                train_rows.extend_from_slice(&rows[..take]);
                test_rows.extend_from_slice(&rows[take..]);
            }
            train_rows.sort_unstable();
            test_rows.sort_unstable();
        }
        Targets::Values(_) => {
            let mut rows: Vec<usize> = (0..m).collect();
            let take = ((m as f64) * fraction).round() as usize;
            if take == 0 || take == m {
                return Err(Error::Data(format!(
                    "task has {m} samples, too few for a {fraction} split"
                )));
            }
            rng.shuffle(&mut rows);
            train_rows = rows[..take].to_vec();
            test_rows = rows[take..].to_vec();
            train_rows.sort_unstable();
            test_rows.sort_unstable();
        }
    }
    let half = |rows: &[usize], partition: PartitionTag| TaskEpisode {
        inputs: task.inputs.select_rows(rows),
        targets: task.targets.subset(rows),
        kind: task.kind,
        provenance: Provenance {
            classes: task.provenance.classes.clone(),
            partition,
        },
    };
    Ok((
        half(&train_rows, PartitionTag::TaskSupport),
        half(&test_rows, PartitionTag::TaskTest),
    ))
}

/// Measures each task: a head is fitted on the train half (through `f` when
/// given, on raw inputs otherwise) and scored on the test half. The mean is
/// the macro average across tasks.
pub fn multitask_metric_on_splits(
    splits: &[(TaskEpisode, TaskEpisode)],
    metric: Metric,
    head_cfg: &HeadFitConfig,
    f: Option<&FeatureExtractor>,
) -> Result<MultitaskReport> {
    if splits.is_empty() {
        return Err(Error::Data("multitask run needs at least one task".into()));
    }
    let mut per_task = Vec::with_capacity(splits.len());
    for (train, test) in splits {
        let features_of = |inputs: &DenseMatrix| -> Result<DenseMatrix> {
            match f {
                Some(f) => Ok(f.forward(inputs)?.0),
                None => Ok(inputs.clone()),
            }
        };
        let train_features = features_of(&train.inputs)?;
        let test_features = features_of(&test.inputs)?;
        let head = fit_head(train.kind, &train_features, &train.targets, head_cfg)?;
        let value = match metric {
            Metric::Accuracy => {
                let Targets::Classes(pred) = predict(&head, &test_features)? else {
                    return Err(Error::Metric(
                        "classification head produced non-class predictions".into(),
                    ));
                };
                let Targets::Classes(truth) = &test.targets else {
                    return Err(Error::Metric("accuracy needs class targets".into()));
                };
                pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
            }
            Metric::Auc => {
                let logits = head.scores(&test_features)?;
                let scores: Vec<f64> = (0..logits.rows())
                    .map(|r| logits.get(r, 1) - logits.get(r, 0))
                    .collect();
                let Targets::Classes(truth) = &test.targets else {
                    return Err(Error::Metric("auc needs class targets".into()));
                };
                auc_binary(&scores, truth)?
            }
            Metric::Rmse => {
                let Targets::Values(pred) = predict(&head, &test_features)? else {
                    return Err(Error::Metric(
                        "regression head produced non-value predictions".into(),
                    ));
                };
                let Targets::Values(truth) = &test.targets else {
                    return Err(Error::Metric("rmse needs value targets".into()));
                };
                rmse(&pred, truth)?
            }
        };
        per_task.push(value);
    }
    let mean = per_task.iter().sum::<f64>() / per_task.len() as f64;
    Ok(MultitaskReport {
        metric,
        per_task,
        mean,
    })
}

/// Loads, splits, and measures in one call.
pub fn multitask_protocol_run(
    paths: &[PathBuf],
    split_fraction: f64,
    metric: Metric,
    head_cfg: &HeadFitConfig,
    f: Option<&FeatureExtractor>,
    rng: &mut Rng,
) -> Result<MultitaskReport> {
    let tasks = load_multitask_tasks(paths, metric)?;
    let splits = split_multitask_tasks(&tasks, split_fraction, rng)?;
    multitask_metric_on_splits(&splits, metric, head_cfg, f)
}

/// Trains the extractor on the train halves only, cycling through the tasks
/// for the given number of passes.
pub fn multitask_train_representation(
    splits: &[(TaskEpisode, TaskEpisode)],
    f: &mut FeatureExtractor,
    cfg: &LeadrConfig,
    passes: usize,
) -> Result<TrainLog> {
    let episodes: Vec<TaskEpisode> = (0..passes)
        .flat_map(|_| splits.iter().map(|(train, _)| train.clone()))
        .collect();
    crate::leadr::train_stream(f, episodes, cfg)
}

/// Path of the curve file [`emit_report`] writes next to a report.
pub fn curve_path_for(report_path: &Path) -> PathBuf {
    let stem = report_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    report_path.with_file_name(format!("{stem}_curve.csv"))
}

/// Writes the report as sorted-key JSON plus a `support_size,mean,std` curve
/// CSV alongside it. Emission is deterministic: equal reports give byte-equal
/// files, and a write-read cycle preserves every field exactly.
pub fn emit_report(report: &EvalReport, path: &Path) -> Result<()> {
    report.assert_ranges()?;
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Data(format!("report serialization failed: {e}")))?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io_at(path, e))?;
    let mut curve = String::from("support_size,mean,std\n");
    for point in &report.points {
        curve.push_str(&format!(
            "{},{},{}\n",
            point.support_size, point.mean, point.std
        ));
    }
    let curve_path = curve_path_for(path);
    fs::write(&curve_path, curve).map_err(|e| Error::io_at(&curve_path, e))?;
    Ok(())
}

/// Reads a report written by [`emit_report`].
pub fn load_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("report: {e}"),
    })
}
