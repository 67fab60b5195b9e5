//! The shared feature extractor: a parameterized map from inputs to features
//! with forward evaluation, backward evaluation (gradients with respect to
//! parameters and input), plain SGD steps, and a text checkpoint format.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Rng};

/// Hidden-layer activation for the two-layer perceptron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    Tanh,
    Relu,
}

impl Nonlinearity {
    fn apply(self, z: f64) -> f64 {
        match self {
            Nonlinearity::Tanh => z.tanh(),
            Nonlinearity::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation value where possible.
    fn derivative(self, pre: f64, act: f64) -> f64 {
        match self {
            Nonlinearity::Tanh => 1.0 - act * act,
            Nonlinearity::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Tanh => write!(f, "tanh"),
            Nonlinearity::Relu => write!(f, "relu"),
        }
    }
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Nonlinearity::Tanh),
            "relu" => Ok(Nonlinearity::Relu),
            other => Err(Error::Config(format!(
                "unknown nonlinearity '{other}' (expected tanh or relu)"
            ))),
        }
    }
}

/// Extractor architecture tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorKind {
    Identity,
    Linear,
    Mlp2,
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractorKind::Identity => write!(f, "identity"),
            ExtractorKind::Linear => write!(f, "linear"),
            ExtractorKind::Mlp2 => write!(f, "mlp2"),
        }
    }
}

/// Architecture plus dimensions; everything needed to allocate an extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractorSpec {
    /// Passes inputs through unchanged; zero parameters.
    Identity { dim: usize },
    /// Affine map `x W + b` with `W` of shape d x p.
    Linear { input_dim: usize, output_dim: usize },
    /// Two-layer perceptron `act(x W1 + b1) W2 + b2` with hidden width h.
    Mlp2 {
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        nonlinearity: Nonlinearity,
    },
}

/// Default hidden width for the two-layer perceptron.
pub const DEFAULT_HIDDEN_DIM: usize = 64;

impl ExtractorSpec {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ExtractorSpec::Identity { dim } => dim > 0,
            ExtractorSpec::Linear {
                input_dim,
                output_dim,
            } => input_dim > 0 && output_dim > 0,
            ExtractorSpec::Mlp2 {
                input_dim,
                hidden_dim,
                output_dim,
                ..
            } => input_dim > 0 && hidden_dim > 0 && output_dim > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "extractor dimensions must be positive: {self:?}"
            )))
        }
    }

    fn param_len(&self) -> usize {
        match *self {
            ExtractorSpec::Identity { .. } => 0,
            ExtractorSpec::Linear {
                input_dim,
                output_dim,
            } => input_dim * output_dim + output_dim,
            ExtractorSpec::Mlp2 {
                input_dim,
                hidden_dim,
                output_dim,
                ..
            } => input_dim * hidden_dim + hidden_dim + hidden_dim * output_dim + output_dim,
        }
    }
}

/// Cached activations from one forward call. Valid only for the exact
/// (parameters, input) pair that produced it; any parameter step invalidates
/// outstanding traces.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    version: u64,
    input: DenseMatrix,
    hidden_pre: Option<DenseMatrix>,
    hidden_act: Option<DenseMatrix>,
}

/// The shared representation `f`. Owns the flat parameter vector. Mutable
/// only through [`FeatureExtractor::apply_step`]; treat it as frozen during
/// evaluation phases.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    spec: ExtractorSpec,
    params: Vec<f64>,
    version: u64,
}

impl FeatureExtractor {
    /// Allocates an extractor with all parameters zero.
    pub fn zeroed(spec: ExtractorSpec) -> Result<Self> {
        spec.validate()?;
        let len = spec.param_len();
        Ok(FeatureExtractor {
            spec,
            params: vec![0.0; len],
            version: 0,
        })
    }

    /// Allocates an extractor with the given flat parameter vector.
    pub fn with_params(spec: ExtractorSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_len() {
            return Err(Error::Shape(format!(
                "parameter vector of length {} does not match {:?} (expected {})",
                params.len(),
                spec,
                spec.param_len()
            )));
        }
        Ok(FeatureExtractor {
            spec,
            params,
            version: 0,
        })
    }

    /// Allocates and initializes: weights uniform in [-a, a] with
    /// a = sqrt(6 / (fan_in + fan_out)), biases zero. Weight matrices are
    /// drawn in layer order, row-major within a layer.
    pub fn init_params(spec: ExtractorSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let mut params = vec![0.0; spec.param_len()];
        match spec {
            ExtractorSpec::Identity { .. } => {}
            ExtractorSpec::Linear {
                input_dim,
                output_dim,
            } => {
                let a = (6.0 / (input_dim + output_dim) as f64).sqrt();
                for w in params[..input_dim * output_dim].iter_mut() {
                    *w = rng.uniform(-a, a);
                }
            }
            ExtractorSpec::Mlp2 {
                input_dim,
                hidden_dim,
                output_dim,
                ..
            } => {
                let a1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
                for w in params[..input_dim * hidden_dim].iter_mut() {
                    *w = rng.uniform(-a1, a1);
                }
                let a2 = (6.0 / (hidden_dim + output_dim) as f64).sqrt();
                let start = input_dim * hidden_dim + hidden_dim;
                for w in params[start..start + hidden_dim * output_dim].iter_mut() {
                    *w = rng.uniform(-a2, a2);
                }
            }
        }
        FeatureExtractor::with_params(spec, params)
    }

    pub fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }

    pub fn kind(&self) -> ExtractorKind {
        match self.spec {
            ExtractorSpec::Identity { .. } => ExtractorKind::Identity,
            ExtractorSpec::Linear { .. } => ExtractorKind::Linear,
            ExtractorSpec::Mlp2 { .. } => ExtractorKind::Mlp2,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self.spec {
            ExtractorSpec::Identity { dim } => dim,
            ExtractorSpec::Linear { input_dim, .. } => input_dim,
            ExtractorSpec::Mlp2 { input_dim, .. } => input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.spec {
            ExtractorSpec::Identity { dim } => dim,
            ExtractorSpec::Linear { output_dim, .. } => output_dim,
            ExtractorSpec::Mlp2 { output_dim, .. } => output_dim,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Evaluates features row-wise and returns them with the trace the
    /// backward pass needs.
    pub fn forward(&self, x: &DenseMatrix) -> Result<(DenseMatrix, ForwardTrace)> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "forward: input has {} columns, extractor expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        match self.spec {
            ExtractorSpec::Identity { .. } => Ok((
                x.clone(),
                ForwardTrace {
                    version: self.version,
                    input: x.clone(),
                    hidden_pre: None,
                    hidden_act: None,
                },
            )),
            ExtractorSpec::Linear {
                input_dim,
                output_dim,
            } => {
                let (w, b) = self.linear_views(input_dim, output_dim);
                let mut out = x.matmul(&w)?;
                add_row_bias(&mut out, b);
                Ok((
                    out,
                    ForwardTrace {
                        version: self.version,
                        input: x.clone(),
                        hidden_pre: None,
                        hidden_act: None,
                    },
                ))
            }
            ExtractorSpec::Mlp2 {
                input_dim,
                hidden_dim,
                output_dim,
                nonlinearity,
            } => {
                let (w1, b1, w2, b2) = self.mlp2_views(input_dim, hidden_dim, output_dim);
                let mut pre = x.matmul(&w1)?;
                add_row_bias(&mut pre, b1);
                let mut act = pre.clone();
                for v in act.data_mut() {
                    *v = nonlinearity.apply(*v);
                }
                let mut out = act.matmul(&w2)?;
                add_row_bias(&mut out, b2);
                Ok((
                    out,
                    ForwardTrace {
                        version: self.version,
                        input: x.clone(),
                        hidden_pre: Some(pre),
                        hidden_act: Some(act),
                    },
                ))
            }
        }
    }

    /// Backpropagates `grad_out` (the gradient of some scalar with respect to
    /// the features) through the trace, producing the gradient with respect
    /// to the flat parameter vector and with respect to the input.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        grad_out: &DenseMatrix,
    ) -> Result<(Vec<f64>, DenseMatrix)> {
        if trace.version != self.version {
            return Err(Error::StaleTrace);
        }
        let (m, p) = (trace.input.rows(), self.output_dim());
        if grad_out.shape() != (m, p) {
            return Err(Error::Shape(format!(
                "backward: grad_out is {}x{}, expected {}x{}",
                grad_out.rows(),
                grad_out.cols(),
                m,
                p
            )));
        }
        match self.spec {
            ExtractorSpec::Identity { .. } => Ok((Vec::new(), grad_out.clone())),
            ExtractorSpec::Linear {
                input_dim,
                output_dim,
            } => {
                let (w, _) = self.linear_views(input_dim, output_dim);
                let grad_w = trace.input.transpose().matmul(grad_out)?;
                let grad_b = column_sums(grad_out);
                let grad_x = grad_out.matmul(&w.transpose())?;
                let mut grad_theta = Vec::with_capacity(self.params.len());
                grad_theta.extend_from_slice(grad_w.data());
                grad_theta.extend_from_slice(&grad_b);
                Ok((grad_theta, grad_x))
            }
            ExtractorSpec::Mlp2 {
                input_dim,
                hidden_dim,
                output_dim,
                nonlinearity,
            } => {
                let (w1, _, w2, _) = self.mlp2_views(input_dim, hidden_dim, output_dim);
                let pre = trace
                    .hidden_pre
                    .as_ref()
                    .expect("mlp2 trace has hidden_pre");
                let act = trace
                    .hidden_act
                    .as_ref()
                    .expect("mlp2 trace has hidden_act");
                let grad_w2 = act.transpose().matmul(grad_out)?;
                let grad_b2 = column_sums(grad_out);
                let mut grad_hidden = grad_out.matmul(&w2.transpose())?;
                for i in 0..grad_hidden.rows() {
                    for j in 0..grad_hidden.cols() {
                        let d = nonlinearity.derivative(pre.get(i, j), act.get(i, j));
                        grad_hidden.set(i, j, grad_hidden.get(i, j) * d);
                    }
                }
                let grad_w1 = trace.input.transpose().matmul(&grad_hidden)?;
                let grad_b1 = column_sums(&grad_hidden);
                let grad_x = grad_hidden.matmul(&w1.transpose())?;
                let mut grad_theta = Vec::with_capacity(self.params.len());
                grad_theta.extend_from_slice(grad_w1.data());
                grad_theta.extend_from_slice(&grad_b1);
                grad_theta.extend_from_slice(grad_w2.data());
                grad_theta.extend_from_slice(&grad_b2);
                Ok((grad_theta, grad_x))
            }
        }
    }

    /// One plain SGD step: params := params - gamma * grad. Invalidates all
    /// outstanding traces.
    pub fn apply_step(&mut self, grad_theta: &[f64], gamma: f64) -> Result<()> {
        if grad_theta.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "apply_step: gradient length {} vs parameter length {}",
                grad_theta.len(),
                self.params.len()
            )));
        }
        for (p, g) in self.params.iter_mut().zip(grad_theta) {
            *p -= gamma * g;
        }
        self.version += 1;
        Ok(())
    }

    /// Writes a checkpoint. The format is line-oriented text; parameter
    /// values use the shortest decimal form that round-trips, so
    /// save-then-load restores bit-identical parameters.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("leadr-checkpoint v1\n");
        out.push_str(&format!("kind {}\n", self.kind()));
        out.push_str(&format!("input_dim {}\n", self.input_dim()));
        let hidden = match self.spec {
            ExtractorSpec::Mlp2 { hidden_dim, .. } => hidden_dim,
            _ => 0,
        };
        out.push_str(&format!("hidden_dim {hidden}\n"));
        out.push_str(&format!("output_dim {}\n", self.output_dim()));
        let nonlinearity = match self.spec {
            ExtractorSpec::Mlp2 { nonlinearity, .. } => nonlinearity,
            _ => Nonlinearity::Tanh,
        };
        out.push_str(&format!("nonlinearity {nonlinearity}\n"));
        out.push_str(&format!("params {}\n", self.params.len()));
        for v in &self.params {
            out.push_str(&format!("{v}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io_at(path, e))?;
        Ok(())
    }

    /// Reads a checkpoint written by [`FeatureExtractor::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        let mut lines = text.lines().enumerate();
        let mut next_line = |expect: Option<&str>| -> Result<(usize, String)> {
            let (i, line) = lines.next().ok_or(Error::Parse {
                line: 0,
                message: "unexpected end of checkpoint".to_string(),
            })?;
            let lineno = i + 1;
            if let Some(key) = expect {
                let rest = line.strip_prefix(key).and_then(|r| r.strip_prefix(' '));
                match rest {
                    Some(value) => Ok((lineno, value.to_string())),
                    None => Err(Error::Parse {
                        line: lineno,
                        message: format!("expected '{key} <value>', found '{line}'"),
                    }),
                }
            } else {
                Ok((lineno, line.to_string()))
            }
        };
        let (lineno, header) = next_line(None)?;
        if header != "leadr-checkpoint v1" {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unsupported checkpoint header '{header}'"),
            });
        }
        let (_, kind) = next_line(Some("kind"))?;
        let parse_count = |lineno: usize, s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid count '{s}'"),
            })
        };
        let (l, v) = next_line(Some("input_dim"))?;
        let input_dim = parse_count(l, &v)?;
        let (l, v) = next_line(Some("hidden_dim"))?;
        let hidden_dim = parse_count(l, &v)?;
        let (l, v) = next_line(Some("output_dim"))?;
        let output_dim = parse_count(l, &v)?;
        let (l, v) = next_line(Some("nonlinearity"))?;
        let nonlinearity: Nonlinearity = v.parse().map_err(|_| Error::Parse {
            line: l,
            message: format!("invalid nonlinearity '{v}'"),
        })?;
        let (l, v) = next_line(Some("params"))?;
        let count = parse_count(l, &v)?;
        let spec = match kind.as_str() {
            "identity" => ExtractorSpec::Identity { dim: input_dim },
            "linear" => ExtractorSpec::Linear {
                input_dim,
                output_dim,
            },
            "mlp2" => ExtractorSpec::Mlp2 {
                input_dim,
                hidden_dim,
                output_dim,
                nonlinearity,
            },
            other => {
                return Err(Error::Parse {
                    line: 2,
                    message: format!("unknown extractor kind '{other}'"),
                })
            }
        };
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, v) = next_line(None)?;
            let value: f64 = v.parse().map_err(|_| Error::Parse {
                line: l,
                message: format!("invalid parameter value '{v}'"),
            })?;
            params.push(value);
        }
        FeatureExtractor::with_params(spec, params)
    }

    /// Weight and bias views for the linear kind, copied into matrices.
    fn linear_views(&self, d: usize, p: usize) -> (DenseMatrix, &[f64]) {
        let w = DenseMatrix::from_vec(d, p, self.params[..d * p].to_vec())
            .expect("parameter length is validated at construction");
        (w, &self.params[d * p..])
    }

    /// Weight and bias views for the mlp2 kind, copied into matrices.
    fn mlp2_views(
        &self,
        d: usize,
        h: usize,
        p: usize,
    ) -> (DenseMatrix, &[f64], DenseMatrix, &[f64]) {
        let w1_end = d * h;
        let b1_end = w1_end + h;
        let w2_end = b1_end + h * p;
        let w1 = DenseMatrix::from_vec(d, h, self.params[..w1_end].to_vec())
            .expect("parameter length is validated at construction");
        let w2 = DenseMatrix::from_vec(h, p, self.params[b1_end..w2_end].to_vec())
            .expect("parameter length is validated at construction");
        (w1, &self.params[w1_end..b1_end], w2, &self.params[w2_end..])
    }
}

fn add_row_bias(m: &mut DenseMatrix, bias: &[f64]) {
    for r in 0..m.rows() {
        for (v, b) in m.row_mut(r).iter_mut().zip(bias) {
            *v += *b;
        }
    }
}

fn column_sums(m: &DenseMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (s, v) in sums.iter_mut().zip(m.row(r)) {
            *s += *v;
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_input(rng: &mut Rng, m: usize, d: usize) -> DenseMatrix {
        let data = (0..m * d).map(|_| rng.uniform(-2.0, 2.0)).collect();
        DenseMatrix::from_vec(m, d, data).unwrap()
    }

    /// Scalar probe loss: sum of features weighted by a fixed matrix. Its
    /// feature gradient is the weight matrix itself, which makes finite
    /// differences of the composed map easy to take.
    fn probe_loss(f: &FeatureExtractor, x: &DenseMatrix, weights: &DenseMatrix) -> f64 {
        let (features, _) = f.forward(x).unwrap();
        features
            .data()
            .iter()
            .zip(weights.data())
            .map(|(a, b)| a * b)
            .sum()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn max_abs(a: &[f64]) -> f64 {
        a.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn check_gradients(f: &FeatureExtractor, rng: &mut Rng, m: usize) {
        let x = random_input(rng, m, f.input_dim());
        let weights = random_input(rng, m, f.output_dim());
        let (_, trace) = f.forward(&x).unwrap();
        let (grad_theta, grad_x) = f.backward(&trace, &weights).unwrap();

        let step = 1e-5;
        let mut fd_theta = vec![0.0; f.num_params()];
        for i in 0..f.num_params() {
            let mut plus = f.clone();
            let mut delta = vec![0.0; f.num_params()];
            delta[i] = -1.0;
            plus.apply_step(&delta, step).unwrap();
            let mut minus = f.clone();
            delta[i] = 1.0;
            minus.apply_step(&delta, step).unwrap();
            fd_theta[i] =
                (probe_loss(&plus, &x, &weights) - probe_loss(&minus, &x, &weights)) / (2.0 * step);
        }
        let scale = max_abs(&grad_theta).max(max_abs(&fd_theta)).max(1e-9);
        assert!(
            max_abs_diff(&grad_theta, &fd_theta) / scale < 1e-6,
            "parameter gradient mismatch for {:?}",
            f.spec()
        );

        let mut fd_x = vec![0.0; x.data().len()];
        for (i, slot) in fd_x.iter_mut().enumerate() {
            let mut xp = x.clone();
            xp.data_mut()[i] += step;
            let mut xm = x.clone();
            xm.data_mut()[i] -= step;
            *slot = (probe_loss(f, &xp, &weights) - probe_loss(f, &xm, &weights)) / (2.0 * step);
        }
        let scale = max_abs(grad_x.data()).max(max_abs(&fd_x)).max(1e-9);
        assert!(
            max_abs_diff(grad_x.data(), &fd_x) / scale < 1e-6,
            "input gradient mismatch for {:?}",
            f.spec()
        );
    }

    #[test]
    fn identity_forward_is_identity() {
        let f = FeatureExtractor::zeroed(ExtractorSpec::Identity { dim: 4 }).unwrap();
        let mut rng = Rng::new(1);
        let x = random_input(&mut rng, 3, 4);
        let (features, _) = f.forward(&x).unwrap();
        assert_eq!(features, x);
        assert_eq!(f.num_params(), 0);
    }

    #[test]
    fn linear_with_identity_weights_is_identity() {
        let d = 3;
        let mut params = vec![0.0; d * d + d];
        for i in 0..d {
            params[i * d + i] = 1.0;
        }
        let f = FeatureExtractor::with_params(
            ExtractorSpec::Linear {
                input_dim: d,
                output_dim: d,
            },
            params,
        )
        .unwrap();
        let mut rng = Rng::new(2);
        let x = random_input(&mut rng, 5, d);
        let (features, _) = f.forward(&x).unwrap();
        assert_eq!(features, x);
    }

    #[test]
    fn mlp2_all_zero_params_gives_zero_features() {
        let f = FeatureExtractor::zeroed(ExtractorSpec::Mlp2 {
            input_dim: 4,
            hidden_dim: 3,
            output_dim: 2,
            nonlinearity: Nonlinearity::Tanh,
        })
        .unwrap();
        let mut rng = Rng::new(3);
        let x = random_input(&mut rng, 6, 4);
        let (features, _) = f.forward(&x).unwrap();
        assert!(features.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_backward_passes_gradient_through() {
        let f = FeatureExtractor::zeroed(ExtractorSpec::Identity { dim: 3 }).unwrap();
        let mut rng = Rng::new(4);
        let x = random_input(&mut rng, 2, 3);
        let g = random_input(&mut rng, 2, 3);
        let (_, trace) = f.forward(&x).unwrap();
        let (grad_theta, grad_x) = f.backward(&trace, &g).unwrap();
        assert!(grad_theta.is_empty());
        assert_eq!(grad_x, g);
    }

    #[test]
    fn linear_single_sample_weight_gradient_is_outer_product() {
        let (d, p) = (4, 3);
        let mut rng = Rng::new(5);
        let f = FeatureExtractor::init_params(
            ExtractorSpec::Linear {
                input_dim: d,
                output_dim: p,
            },
            &mut rng,
        )
        .unwrap();
        let x = random_input(&mut rng, 1, d);
        let g = random_input(&mut rng, 1, p);
        let (_, trace) = f.forward(&x).unwrap();
        let (grad_theta, _) = f.backward(&trace, &g).unwrap();
        for i in 0..d {
            for j in 0..p {
                let expected = x.get(0, i) * g.get(0, j);
                assert!((grad_theta[i * p + j] - expected).abs() < 1e-12);
            }
        }
        for j in 0..p {
            assert!((grad_theta[d * p + j] - g.get(0, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences_for_all_kinds() {
        let mut rng = Rng::new(6);
        for round in 0..10 {
            let m = 1 + (round % 4);
            let specs = vec![
                ExtractorSpec::Identity { dim: 5 },
                ExtractorSpec::Linear {
                    input_dim: 6,
                    output_dim: 4,
                },
                ExtractorSpec::Mlp2 {
                    input_dim: 7,
                    hidden_dim: 6,
                    output_dim: 5,
                    nonlinearity: Nonlinearity::Tanh,
                },
                ExtractorSpec::Mlp2 {
                    input_dim: 5,
                    hidden_dim: 4,
                    output_dim: 3,
                    nonlinearity: Nonlinearity::Relu,
                },
            ];
            for spec in specs {
                let f = FeatureExtractor::init_params(spec, &mut rng).unwrap();
                check_gradients(&f, &mut rng, m);
            }
        }
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = Rng::new(7);
        let f = FeatureExtractor::init_params(
            ExtractorSpec::Mlp2 {
                input_dim: 4,
                hidden_dim: 5,
                output_dim: 3,
                nonlinearity: Nonlinearity::Tanh,
            },
            &mut rng,
        )
        .unwrap();
        let x = random_input(&mut rng, 3, 4);
        let (a, _) = f.forward(&x).unwrap();
        let (b, _) = f.forward(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stale_trace_is_rejected() {
        let mut rng = Rng::new(8);
        let mut f = FeatureExtractor::init_params(
            ExtractorSpec::Linear {
                input_dim: 3,
                output_dim: 2,
            },
            &mut rng,
        )
        .unwrap();
        let x = random_input(&mut rng, 2, 3);
        let g = random_input(&mut rng, 2, 2);
        let (_, trace) = f.forward(&x).unwrap();
        let grad = vec![0.0; f.num_params()];
        f.apply_step(&grad, 0.1).unwrap();
        assert!(matches!(f.backward(&trace, &g), Err(Error::StaleTrace)));
    }

    #[test]
    fn apply_step_zero_gradient_keeps_params() {
        let mut rng = Rng::new(9);
        let mut f = FeatureExtractor::init_params(
            ExtractorSpec::Linear {
                input_dim: 3,
                output_dim: 3,
            },
            &mut rng,
        )
        .unwrap();
        let before = f.params().to_vec();
        f.apply_step(&vec![0.0; f.num_params()], 0.5).unwrap();
        assert_eq!(f.params(), &before[..]);
    }

    #[test]
    fn apply_step_zero_gamma_keeps_params() {
        let mut rng = Rng::new(10);
        let mut f = FeatureExtractor::init_params(
            ExtractorSpec::Linear {
                input_dim: 2,
                output_dim: 2,
            },
            &mut rng,
        )
        .unwrap();
        let before = f.params().to_vec();
        let grad: Vec<f64> = (0..f.num_params()).map(|i| i as f64).collect();
        f.apply_step(&grad, 0.0).unwrap();
        assert_eq!(f.params(), &before[..]);
    }

    #[test]
    fn apply_step_hand_computed() {
        let mut f = FeatureExtractor::with_params(
            ExtractorSpec::Linear {
                input_dim: 1,
                output_dim: 1,
            },
            vec![1.0, 2.0],
        )
        .unwrap();
        f.apply_step(&[0.5, -0.5], 0.1).unwrap();
        assert_eq!(f.params(), &[0.95, 2.05]);
    }

    #[test]
    fn apply_step_round_trip_restores_params() {
        let mut rng = Rng::new(11);
        let mut f = FeatureExtractor::init_params(
            ExtractorSpec::Mlp2 {
                input_dim: 3,
                hidden_dim: 4,
                output_dim: 2,
                nonlinearity: Nonlinearity::Tanh,
            },
            &mut rng,
        )
        .unwrap();
        let before = f.params().to_vec();
        let grad: Vec<f64> = (0..f.num_params())
            .map(|_| rng.uniform(-1.0, 1.0))
            .collect();
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        f.apply_step(&grad, 0.01).unwrap();
        f.apply_step(&neg, 0.01).unwrap();
        for (a, b) in f.params().iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn init_identity_ignores_rng() {
        let mut rng = Rng::new(12);
        let f =
            FeatureExtractor::init_params(ExtractorSpec::Identity { dim: 3 }, &mut rng).unwrap();
        assert!(f.params().is_empty());
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = ExtractorSpec::Mlp2 {
            input_dim: 5,
            hidden_dim: 4,
            output_dim: 3,
            nonlinearity: Nonlinearity::Tanh,
        };
        let a = FeatureExtractor::init_params(spec.clone(), &mut Rng::new(13)).unwrap();
        let b = FeatureExtractor::init_params(spec, &mut Rng::new(13)).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn init_respects_fan_bound() {
        let mut rng = Rng::new(14);
        let f = FeatureExtractor::init_params(
            ExtractorSpec::Linear {
                input_dim: 4,
                output_dim: 4,
            },
            &mut rng,
        )
        .unwrap();
        let bound = (6.0f64 / 8.0).sqrt();
        for &w in &f.params()[..16] {
            assert!(w.abs() <= bound);
        }
        for &b in &f.params()[16..] {
            assert_eq!(b, 0.0);
        }
    }

    #[test]
    fn init_rejects_zero_dims() {
        let mut rng = Rng::new(15);
        assert!(matches!(
            FeatureExtractor::init_params(
                ExtractorSpec::Linear {
                    input_dim: 0,
                    output_dim: 3
                },
                &mut rng
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("leadr_repr_checkpoint_test");
        std::fs::create_dir_all(&dir).unwrap();
        let mut rng = Rng::new(16);
        let specs = vec![
            ExtractorSpec::Identity { dim: 4 },
            ExtractorSpec::Linear {
                input_dim: 3,
                output_dim: 5,
            },
            ExtractorSpec::Mlp2 {
                input_dim: 6,
                hidden_dim: 4,
                output_dim: 2,
                nonlinearity: Nonlinearity::Relu,
            },
        ];
        for (i, spec) in specs.into_iter().enumerate() {
            let f = FeatureExtractor::init_params(spec, &mut rng).unwrap();
            let path = dir.join(format!("ckpt_{i}.txt"));
            f.save(&path).unwrap();
            let loaded = FeatureExtractor::load(&path).unwrap();
            assert_eq!(loaded.spec(), f.spec());
            assert_eq!(loaded.params(), f.params());
            let bits_a: Vec<u64> = f.params().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = loaded.params().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let dir = std::env::temp_dir().join("leadr_repr_checkpoint_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("garbage.txt");
        std::fs::write(&path, "not a checkpoint\n").unwrap();
        assert!(matches!(
            FeatureExtractor::load(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let f = FeatureExtractor::zeroed(ExtractorSpec::Identity { dim: 3 }).unwrap();
        let x = DenseMatrix::zeros(2, 4);
        assert!(matches!(f.forward(&x), Err(Error::Shape(_))));
    }
}
