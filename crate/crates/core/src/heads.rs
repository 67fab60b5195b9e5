//! Per-task hypotheses fitted on extracted features: multinomial logistic
//! regression for classification, ridge regression for scalar regression.
//! A head also exposes the gradient of its loss with respect to its input
//! features, the channel through which the shared representation learns.

use crate::error::{Error, Result};
use crate::numkit::func::{cross_entropy_from_logits, softmax_rows};
use crate::numkit::matrix::{solve, DenseMatrix};

/// What kind of task a head solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Classification { num_classes: usize },
    Regression,
}

/// Task targets: local class indices for classification, scalars for
/// regression.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The targets at the given positions, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Classes(v) => Targets::Classes(indices.iter().map(|&i| v[i]).collect()),
            Targets::Values(v) => Targets::Values(indices.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Optimizer settings for the classification head fit. Regression ignores
/// everything except `l2` (its solution is closed-form).
#[derive(Debug, Clone, PartialEq)]
pub struct HeadFitConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub l2: f64,
    pub tolerance: f64,
}

impl Default for HeadFitConfig {
    fn default() -> Self {
        HeadFitConfig {
            iterations: 500,
            step_size: 0.1,
            l2: 1e-4,
            tolerance: 1e-8,
        }
    }
}

impl HeadFitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("head fit needs at least 1 iteration".into()));
        }
        if self.step_size <= 0.0 {
            return Err(Error::Config(format!(
                "head fit step_size must be positive, got {}",
                self.step_size
            )));
        }
        if self.l2 < 0.0 {
            return Err(Error::Config(format!(
                "head l2 coefficient must be nonnegative, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

/// A fitted task head: a linear map over features. `weights` is C x p for
/// classification and 1 x p for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskHead {
    kind: TaskKind,
    weights: DenseMatrix,
    bias: Vec<f64>,
    l2: f64,
}

impl TaskHead {
    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Feature dimension the head was fitted on.
    pub fn feature_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Raw decision values: logits (m x C) for classification, predictions
    /// (m x 1) for regression.
    pub fn scores(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        if features.cols() != self.feature_dim() {
            return Err(Error::Shape(format!(
                "head expects {} feature columns, got {}",
                self.feature_dim(),
                features.cols()
            )));
        }
        let mut out = features.matmul(&self.weights.transpose())?;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v += *b;
            }
        }
        Ok(out)
    }
}

/// Fits a head on the given features. Classification runs full-batch gradient
/// descent on mean cross-entropy plus `l2` times the squared weight norm
/// (bias unregularized), from zero-initialized parameters, with simple
/// backtracking: the step size is halved whenever a step would increase the
/// loss. Regression solves the ridge normal equations in closed form, again
/// leaving the bias unregularized.
pub fn fit_head(
    kind: TaskKind,
    features: &DenseMatrix,
    targets: &Targets,
    cfg: &HeadFitConfig,
) -> Result<TaskHead> {
    cfg.validate()?;
    if features.rows() == 0 {
        return Err(Error::Data("fit_head: empty training set".into()));
    }
    if features.rows() != targets.len() {
        return Err(Error::Shape(format!(
            "fit_head: {} feature rows vs {} targets",
            features.rows(),
            targets.len()
        )));
    }
    match (kind, targets) {
        (TaskKind::Classification { num_classes }, Targets::Classes(labels)) => {
            fit_classification(num_classes, features, labels, cfg).map(|(head, _)| head)
        }
        (TaskKind::Regression, Targets::Values(values)) => fit_regression(features, values, cfg.l2),
        (TaskKind::Classification { .. }, Targets::Values(_)) => Err(Error::Data(
            "fit_head: classification task given scalar targets".into(),
        )),
        (TaskKind::Regression, Targets::Classes(_)) => Err(Error::Data(
            "fit_head: regression task given class targets".into(),
        )),
    }
}

/// Classification fit returning the per-iteration loss sequence (the accepted
/// loss after each step), which the monotonicity tests inspect.
fn fit_classification(
    num_classes: usize,
    features: &DenseMatrix,
    labels: &[usize],
    cfg: &HeadFitConfig,
) -> Result<(TaskHead, Vec<f64>)> {
    if num_classes < 2 {
        return Err(Error::Config(format!(
            "classification needs at least 2 classes, got {num_classes}"
        )));
    }
    for (i, &label) in labels.iter().enumerate() {
        if label >= num_classes {
            return Err(Error::Label {
                index: i,
                label,
                num_classes,
            });
        }
    }
    let n = features.rows();
    let p = features.cols();
    let mut weights = DenseMatrix::zeros(num_classes, p);
    let mut bias = vec![0.0; num_classes];
    let mut step = cfg.step_size;

    let loss_of = |w: &DenseMatrix, b: &[f64]| -> f64 {
        let mut logits = features.matmul(&w.transpose()).expect("shapes fixed above");
        for r in 0..n {
            for (v, bb) in logits.row_mut(r).iter_mut().zip(b) {
                *v += *bb;
            }
        }
        let ce = cross_entropy_from_logits(&logits, labels).expect("labels validated above");
        let penalty: f64 = w.data().iter().map(|v| v * v).sum();
        ce + cfg.l2 * penalty
    };

    let mut prev = loss_of(&weights, &bias);
    let mut history = vec![prev];
    for _ in 0..cfg.iterations {
        let mut logits = features.matmul(&weights.transpose())?;
        for r in 0..n {
            for (v, b) in logits.row_mut(r).iter_mut().zip(&bias) {
                *v += *b;
            }
        }
        let probs = softmax_rows(&logits);
        // grad_logits = (probs - onehot) / n
        let mut grad_logits = probs;
        for (r, &label) in labels.iter().enumerate() {
            let row = grad_logits.row_mut(r);
            row[label] -= 1.0;
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }
        let mut grad_w = grad_logits.transpose().matmul(features)?;
        for (g, w) in grad_w.data_mut().iter_mut().zip(weights.data()) {
            *g += 2.0 * cfg.l2 * w;
        }
        let mut grad_b = vec![0.0; num_classes];
        for r in 0..n {
            for (g, v) in grad_b.iter_mut().zip(grad_logits.row(r)) {
                *g += *v;
            }
        }

        let (next_w, next_b, new_loss) = loop {
            let mut cand_w = weights.clone();
            for (w, g) in cand_w.data_mut().iter_mut().zip(grad_w.data()) {
                *w -= step * g;
            }
            let mut cand_b = bias.clone();
            for (b, g) in cand_b.iter_mut().zip(&grad_b) {
                *b -= step * g;
            }
            let new_loss = loss_of(&cand_w, &cand_b);
            if new_loss <= prev + 1e-12 || step < 1e-12 {
                break (cand_w, cand_b, new_loss);
            }
            step *= 0.5;
        };
        weights = next_w;
        bias = next_b;
        history.push(new_loss);
        let improvement = prev - new_loss;
        prev = new_loss;
        if improvement < cfg.tolerance {
            break;
        }
    }
    Ok((
        TaskHead {
            kind: TaskKind::Classification { num_classes },
            weights,
            bias,
            l2: cfg.l2,
        },
        history,
    ))
}

/// Ridge regression in closed form. With Z the feature matrix extended by a
/// constant column, solves (Z'Z + n*l2*D) beta = Z'y where D is the identity
/// with a zero in the bias position, which minimizes mean squared error plus
/// l2 times the squared weight norm.
fn fit_regression(features: &DenseMatrix, values: &[f64], l2: f64) -> Result<TaskHead> {
    let n = features.rows();
    let p = features.cols();
    let mut z = DenseMatrix::zeros(n, p + 1);
    for r in 0..n {
        z.row_mut(r)[..p].copy_from_slice(features.row(r));
        z.row_mut(r)[p] = 1.0;
    }
    let zt = z.transpose();
    let mut gram = zt.matmul(&z)?;
    for i in 0..p {
        let v = gram.get(i, i) + n as f64 * l2;
        gram.set(i, i, v);
    }
    let y = DenseMatrix::from_vec(n, 1, values.to_vec())?;
    let rhs = zt.matmul(&y)?;
    let beta = solve(&gram, &rhs)?;
    let weights = DenseMatrix::from_vec(1, p, beta.data()[..p].to_vec())?;
    Ok(TaskHead {
        kind: TaskKind::Regression,
        weights,
        bias: vec![beta.get(p, 0)],
        l2,
    })
}

/// Predicts labels or values. Classification takes the argmax of the logits
/// with ties broken toward the lowest class index.
pub fn predict(head: &TaskHead, features: &DenseMatrix) -> Result<Targets> {
    let scores = head.scores(features)?;
    match head.kind {
        TaskKind::Classification { .. } => {
            let mut labels = Vec::with_capacity(scores.rows());
            for r in 0..scores.rows() {
                let row = scores.row(r);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                labels.push(best);
            }
            Ok(Targets::Classes(labels))
        }
        TaskKind::Regression => Ok(Targets::Values(
            (0..scores.rows()).map(|r| scores.get(r, 0)).collect(),
        )),
    }
}

/// The surrogate loss of a frozen head on the given features, and its
/// gradient with respect to those features. The loss is mean cross-entropy or
/// mean squared error with no regularization term, and no gradient with
/// respect to the head's own parameters is produced: the head is a constant
/// here.
pub fn head_loss_and_input_grad(
    head: &TaskHead,
    features: &DenseMatrix,
    targets: &Targets,
) -> Result<(f64, DenseMatrix)> {
    if features.rows() != targets.len() {
        return Err(Error::Shape(format!(
            "head loss: {} feature rows vs {} targets",
            features.rows(),
            targets.len()
        )));
    }
    if features.rows() == 0 {
        return Err(Error::Data("head loss: empty evaluation set".into()));
    }
    let m = features.rows();
    match (head.kind, targets) {
        (TaskKind::Classification { .. }, Targets::Classes(labels)) => {
            let logits = head.scores(features)?;
            let loss = cross_entropy_from_logits(&logits, labels)?;
            let probs = softmax_rows(&logits);
            let mut grad_logits = probs;
            for (r, &label) in labels.iter().enumerate() {
                let row = grad_logits.row_mut(r);
                row[label] -= 1.0;
                for v in row.iter_mut() {
                    *v /= m as f64;
                }
            }
            let grad_features = grad_logits.matmul(&head.weights)?;
            Ok((loss, grad_features))
        }
        (TaskKind::Regression, Targets::Values(values)) => {
            let pred = head.scores(features)?;
            let mut loss = 0.0;
            let mut grad_features = DenseMatrix::zeros(m, features.cols());
            for (r, &value) in values.iter().enumerate() {
                let diff = pred.get(r, 0) - value;
                loss += diff * diff;
                let scale = 2.0 * diff / m as f64;
                for (g, w) in grad_features.row_mut(r).iter_mut().zip(head.weights.row(0)) {
                    *g = scale * w;
                }
            }
            Ok((loss / m as f64, grad_features))
        }
        (TaskKind::Classification { .. }, Targets::Values(_)) => Err(Error::Data(
            "head loss: classification head given scalar targets".into(),
        )),
        (TaskKind::Regression, Targets::Classes(_)) => Err(Error::Data(
            "head loss: regression head given class targets".into(),
        )),
    }
}
