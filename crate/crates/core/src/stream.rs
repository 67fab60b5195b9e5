//! Environment simulation and data ingestion: labeled pools, three-way
//! disjoint partitioning, N-way/K-shot episode sampling with local
//! relabeling, and synthetic task families with shared low-rank structure.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::heads::{Targets, TaskKind};
use crate::numkit::{role, substream_seed, DenseMatrix, Rng};

/// Which partition a pool (and everything sampled from it) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionTag {
    /// An unpartitioned source pool.
    Full,
    /// Samples reserved for representation training.
    ReprTrain,
    /// Samples test tasks draw their support sets from.
    TaskSupport,
    /// Samples test tasks are measured on.
    TaskTest,
}

impl fmt::Display for PartitionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionTag::Full => write!(f, "full"),
            PartitionTag::ReprTrain => write!(f, "repr_train"),
            PartitionTag::TaskSupport => write!(f, "task_support"),
            PartitionTag::TaskTest => write!(f, "task_test"),
        }
    }
}

/// A classification dataset: inputs with global class labels. Labels are
/// dense in [0, num_classes) and every class has at least one sample.
#[derive(Debug, Clone)]
pub struct LabeledPool {
    inputs: DenseMatrix,
    labels: Vec<usize>,
    num_classes: usize,
    class_rows: Vec<Vec<usize>>,
    tag: PartitionTag,
}

impl LabeledPool {
    pub fn new(inputs: DenseMatrix, labels: Vec<usize>, tag: PartitionTag) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::Data("pool has no samples".into()));
        }
        if inputs.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "pool: {} input rows vs {} labels",
                inputs.rows(),
                labels.len()
            )));
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut class_rows = vec![Vec::new(); num_classes];
        for (row, &label) in labels.iter().enumerate() {
            class_rows[label].push(row);
        }
        if let Some(missing) = class_rows.iter().position(|rows| rows.is_empty()) {
            return Err(Error::Data(format!(
                "label gap: class {missing} has no samples but larger labels exist"
            )));
        }
        Ok(LabeledPool {
            inputs,
            labels,
            num_classes,
            class_rows,
            tag,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Input dimensionality d.
    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn inputs(&self) -> &DenseMatrix {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn tag(&self) -> PartitionTag {
        self.tag
    }

    /// Row indices belonging to one class, ascending.
    pub fn class_rows(&self, class: usize) -> &[usize] {
        &self.class_rows[class]
    }
}

/// Where an episode's samples came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Global class ids behind the episode's local labels, in sampling order.
    /// Empty for regression episodes.
    pub classes: Vec<usize>,
    /// Partition the samples were drawn from.
    pub partition: PartitionTag,
}

/// One task's m-sample. Classification labels are local: the sampled global
/// classes are remapped to 0..C-1 in sampling order, so no label information
/// can transfer between tasks.
#[derive(Debug, Clone)]
pub struct TaskEpisode {
    pub inputs: DenseMatrix,
    pub targets: Targets,
    pub kind: TaskKind,
    pub provenance: Provenance,
}

impl TaskEpisode {
    /// Number of samples m.
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads a pool from CSV. Expected layout: a mandatory header
/// `label,f0,f1,...`, then one sample per row with an integer label followed
/// by decimal feature values.
pub fn load_pool_csv(path: &Path) -> Result<LabeledPool> {
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
    let mut labels = Vec::new();
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
        let label: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid label '{}'", fields[0]),
        })?;
        labels.push(label);
        for field in &fields[1..] {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid feature value '{field}'"),
            })?;
            data.push(value);
        }
    }
    let inputs = DenseMatrix::from_vec(labels.len(), dim, data)?;
    LabeledPool::new(inputs, labels, PartitionTag::Full)
}

/// Writes a pool in the format [`load_pool_csv`] reads. Feature values use
/// the shortest decimal form that round-trips, so a write-read cycle
/// reproduces the pool bit-exactly.
pub fn save_pool_csv(pool: &LabeledPool, path: &Path) -> Result<()> {
    let mut out = String::from("label");
    for j in 0..pool.dim() {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for r in 0..pool.len() {
        out.push_str(&format!("{}", pool.labels()[r]));
        for v in pool.inputs().row(r) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

/// Splits a pool into three disjoint stratified parts covering it exactly.
/// Within each class, sample counts follow the fractions by largest-remainder
/// rounding; the assignment of samples to parts is random.
pub fn partition_pool(
    pool: &LabeledPool,
    fractions: [f64; 3],
    rng: &mut Rng,
) -> Result<(LabeledPool, LabeledPool, LabeledPool)> {
    if fractions.iter().any(|&f| f <= 0.0) {
        return Err(Error::Config(format!(
            "partition fractions must be positive, got {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "partition fractions must sum to 1, got {fractions:?} (sum {total})"
        )));
    }
    let mut part_rows: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for class in 0..pool.num_classes() {
        let mut rows = pool.class_rows(class).to_vec();
        let n = rows.len();
        let mut counts = [0usize; 3];
        let mut remainders = [(0.0, 0usize); 3];
        let mut assigned = 0;
        for i in 0..3 {
            let ideal = fractions[i] * n as f64;
            counts[i] = ideal.floor() as usize;
            remainders[i] = (ideal - counts[i] as f64, i);
            assigned += counts[i];
        }
        // Hand the leftover samples to the largest remainders, lowest
        // partition index first on ties.
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for k in 0..n - assigned {
            counts[remainders[k].1] += 1;
        }
        if counts.contains(&0) {
            return Err(Error::Data(format!(
                "class {class} has {n} samples, too few to give every partition at least one"
            )));
        }
        rng.shuffle(&mut rows);
        let mut offset = 0;
        for i in 0..3 {
            part_rows[i].extend_from_slice(&rows[offset..offset + counts[i]]);
            offset += counts[i];
        }
    }
    let tags = [
        PartitionTag::ReprTrain,
        PartitionTag::TaskSupport,
        PartitionTag::TaskTest,
    ];
    let mut parts = Vec::with_capacity(3);
    for (rows, tag) in part_rows.iter().zip(tags) {
        let inputs = pool.inputs().select_rows(rows);
        let labels = rows.iter().map(|&r| pool.labels()[r]).collect();
        parts.push(LabeledPool::new(inputs, labels, tag)?);
    }
    let task_test = parts.pop().expect("three parts were just built");
    let task_support = parts.pop().expect("three parts were just built");
    let repr_train = parts.pop().expect("three parts were just built");
    Ok((repr_train, task_support, task_test))
}

/// Samples one C-way episode: C distinct global classes chosen uniformly,
/// then `shots` samples per class without replacement, relabeled 0..C-1 in
/// sampling order.
pub fn sample_episode(
    pool: &LabeledPool,
    ways: usize,
    shots: usize,
    rng: &mut Rng,
) -> Result<TaskEpisode> {
    if ways < 2 {
        return Err(Error::Config(format!(
            "an episode needs at least 2 ways, got {ways}"
        )));
    }
    if shots == 0 {
        return Err(Error::Config("an episode needs at least 1 shot".into()));
    }
    if ways > pool.num_classes() {
        return Err(Error::Data(format!(
            "pool has {} classes, episode wants {ways}",
            pool.num_classes()
        )));
    }
    let classes = rng.choose_distinct(pool.num_classes(), ways);
    sample_support(pool, &classes, shots, rng)
}

/// Samples `shots` per class for an already-chosen class list. The episode's
/// local label i corresponds to `classes[i]`.
pub fn sample_support(
    pool: &LabeledPool,
    classes: &[usize],
    shots: usize,
    rng: &mut Rng,
) -> Result<TaskEpisode> {
    let mut rows = Vec::with_capacity(classes.len() * shots);
    let mut labels = Vec::with_capacity(classes.len() * shots);
    for (local, &class) in classes.iter().enumerate() {
        if class >= pool.num_classes() {
            return Err(Error::Data(format!(
                "class {class} outside pool's {} classes",
                pool.num_classes()
            )));
        }
        let candidates = pool.class_rows(class);
        if candidates.len() < shots {
            return Err(Error::Data(format!(
                "class {class} has {} samples in the {} partition, episode wants {shots}",
                candidates.len(),
                pool.tag()
            )));
        }
        for pick in rng.choose_distinct(candidates.len(), shots) {
            rows.push(candidates[pick]);
            labels.push(local);
        }
    }
    Ok(TaskEpisode {
        inputs: pool.inputs().select_rows(&rows),
        targets: Targets::Classes(labels),
        kind: TaskKind::Classification {
            num_classes: classes.len(),
        },
        provenance: Provenance {
            classes: classes.to_vec(),
            partition: pool.tag(),
        },
    })
}

/// A synthetic classification family: class centers live in an r-dimensional
/// latent space and are embedded into d ambient dimensions by a fixed
/// orthonormal map, so a rank-r linear representation suffices for every
/// task the family generates.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFamilySpec {
    pub latent_dim: usize,
    pub ambient_dim: usize,
    pub noise_sigma: f64,
    pub num_global_classes: usize,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl SyntheticFamilySpec {
    fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.ambient_dim == 0 {
            return Err(Error::Config(
                "synthetic family dims must be positive".into(),
            ));
        }
        if self.latent_dim > self.ambient_dim {
            return Err(Error::Config(format!(
                "latent_dim {} exceeds ambient_dim {}",
                self.latent_dim, self.ambient_dim
            )));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if self.num_global_classes == 0 || self.samples_per_class == 0 {
            return Err(Error::Config(
                "synthetic family needs at least one class and one sample per class".into(),
            ));
        }
        Ok(())
    }
}

/// A generated family: the pool plus the ground-truth structure behind it.
#[derive(Debug, Clone)]
pub struct SynthFamily {
    pub pool: LabeledPool,
    /// The d x r orthonormal embedding of the latent space.
    pub embedding: DenseMatrix,
    /// The C x r class centers in latent space.
    pub centers: DenseMatrix,
}

/// Generates the family. Draw order, all from the family seed: class centers
/// (unit Gaussian, row-major), the raw embedding (then orthonormalized by
/// modified Gram-Schmidt), then per-sample ambient noise, samples grouped by
/// class.
pub fn synth_family(spec: &SyntheticFamilySpec) -> Result<SynthFamily> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let (r, d, classes) = (spec.latent_dim, spec.ambient_dim, spec.num_global_classes);
    let mut centers = DenseMatrix::zeros(classes, r);
    for v in centers.data_mut() {
        *v = rng.normal();
    }
    let embedding = orthonormal_columns(d, r, &mut rng)?;
    let total = classes * spec.samples_per_class;
    let mut inputs = DenseMatrix::zeros(total, d);
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for class in 0..classes {
        // Ambient image of this class's center: embedding * center.
        let mut base = vec![0.0; d];
        for (i, b) in base.iter_mut().enumerate() {
            for k in 0..r {
                *b += embedding.get(i, k) * centers.get(class, k);
            }
        }
        for _ in 0..spec.samples_per_class {
            let out = inputs.row_mut(row);
            for (j, b) in base.iter().enumerate() {
                out[j] = b + spec.noise_sigma * rng.normal();
            }
            labels.push(class);
            row += 1;
        }
    }
    Ok(SynthFamily {
        pool: LabeledPool::new(inputs, labels, PartitionTag::Full)?,
        embedding,
        centers,
    })
}

/// The pool of [`synth_family`], for callers that do not need the
/// ground-truth structure.
pub fn synth_pool(spec: &SyntheticFamilySpec) -> Result<LabeledPool> {
    synth_family(spec).map(|family| family.pool)
}

/// Random d x r matrix with orthonormal columns.
fn orthonormal_columns(d: usize, r: usize, rng: &mut Rng) -> Result<DenseMatrix> {
    let mut g = DenseMatrix::zeros(d, r);
    for v in g.data_mut() {
        *v = rng.normal();
    }
    for j in 0..r {
        for k in 0..j {
            let mut dot = 0.0;
            for i in 0..d {
                dot += g.get(i, j) * g.get(i, k);
            }
            for i in 0..d {
                let v = g.get(i, j) - dot * g.get(i, k);
                g.set(i, j, v);
            }
        }
        let mut norm = 0.0;
        for i in 0..d {
            norm += g.get(i, j) * g.get(i, j);
        }
        let norm = norm.sqrt();
        if norm < 1e-12 {
            return Err(Error::Numeric(
                "degenerate random matrix while orthonormalizing".into(),
            ));
        }
        for i in 0..d {
            g.set(i, j, g.get(i, j) / norm);
        }
    }
    Ok(g)
}

/// A synthetic regression family: per task, a random linear functional of the
/// latent code plus observation noise. Inputs share the family's fixed
/// orthonormal embedding, so one linear representation again serves every
/// task.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFamilySpec {
    pub latent_dim: usize,
    pub ambient_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl RegressionFamilySpec {
    fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.ambient_dim == 0 {
            return Err(Error::Config(
                "regression family dims must be positive".into(),
            ));
        }
        if self.latent_dim > self.ambient_dim {
            return Err(Error::Config(format!(
                "latent_dim {} exceeds ambient_dim {}",
                self.latent_dim, self.ambient_dim
            )));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Task source for a stream: a labeled pool to sample episodes from, or a
/// regression family generating tasks on the fly.
#[derive(Debug, Clone)]
pub enum StreamSource {
    Pool(LabeledPool),
    Regression(RegressionFamilySpec),
}

/// Configuration of the task distribution: episode shape, task count, seed,
/// and the source of samples.
#[derive(Debug, Clone)]
pub struct StreamSpec {
    pub ways: usize,
    pub shots: usize,
    pub num_tasks: usize,
    pub seed: u64,
    pub source: StreamSource,
}

/// Eagerly validates the settings, then returns a lazy iterator over episodes.
/// Episode t draws from its own RNG substream, so the sequence does not
/// depend on how far the iterator is consumed elsewhere.
pub fn make_stream(spec: &StreamSpec) -> Result<impl Iterator<Item = TaskEpisode> + '_> {
    if spec.shots == 0 {
        return Err(Error::Config(
            "stream needs at least 1 shot per class".into(),
        ));
    }
    if spec.ways * spec.shots < 2 {
        return Err(Error::Config(
            "stream episodes need at least 2 samples (ways * shots >= 2)".into(),
        ));
    }
    let embedding = match &spec.source {
        StreamSource::Pool(pool) => {
            if spec.ways < 2 {
                return Err(Error::Config(format!(
                    "classification episodes need at least 2 ways, got {}",
                    spec.ways
                )));
            }
            if spec.ways > pool.num_classes() {
                return Err(Error::Data(format!(
                    "pool has {} classes, stream wants {}-way episodes",
                    pool.num_classes(),
                    spec.ways
                )));
            }
            for class in 0..pool.num_classes() {
                if pool.class_rows(class).len() < spec.shots {
                    return Err(Error::Data(format!(
                        "class {class} has {} samples, stream wants {} shots",
                        pool.class_rows(class).len(),
                        spec.shots
                    )));
                }
            }
            None
        }
        StreamSource::Regression(family) => {
            family.validate()?;
            Some(orthonormal_columns(
                family.ambient_dim,
                family.latent_dim,
                &mut Rng::new(substream_seed(family.seed, role::SYNTH, 0)),
            )?)
        }
    };
    Ok((0..spec.num_tasks).map(move |t| {
        let mut rng = Rng::new(substream_seed(spec.seed, role::STREAM, t as u64));
        match &spec.source {
            StreamSource::Pool(pool) => sample_episode(pool, spec.ways, spec.shots, &mut rng)
                .expect("stream spec was validated ahead of iteration"),
            StreamSource::Regression(family) => {
                let g = embedding
                    .as_ref()
                    .expect("regression stream has an embedding");
                sample_regression_episode(family, g, spec.ways * spec.shots, &mut rng)
            }
        }
    }))
}

/// One regression task: y = w . z + noise for a task-specific w, with inputs
/// x = embedding * z for per-sample latent codes z.
fn sample_regression_episode(
    family: &RegressionFamilySpec,
    embedding: &DenseMatrix,
    m: usize,
    rng: &mut Rng,
) -> TaskEpisode {
    let (r, d) = (family.latent_dim, family.ambient_dim);
    let w: Vec<f64> = (0..r).map(|_| rng.normal()).collect();
    let mut inputs = DenseMatrix::zeros(m, d);
    let mut values = Vec::with_capacity(m);
    for row in 0..m {
        let z: Vec<f64> = (0..r).map(|_| rng.normal()).collect();
        let out = inputs.row_mut(row);
        for (i, o) in out.iter_mut().enumerate() {
            for (k, zk) in z.iter().enumerate() {
                *o += embedding.get(i, k) * zk;
            }
        }
        let mut y: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
        y += family.noise_sigma * rng.normal();
        values.push(y);
    }
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
