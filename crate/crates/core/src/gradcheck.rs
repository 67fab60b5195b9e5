//! Finite-difference verification of the analytic gradients behind the
//! trainer's representation updates: for every extractor kind and head kind,
//! the gradient of the frozen-head validation loss with respect to the
//! extractor parameters (and the inputs) is compared against central
//! differences on seeded random instances.

use crate::error::{Error, Result};
use crate::heads::{
    fit_head, head_loss_and_input_grad, HeadFitConfig, Targets, TaskHead, TaskKind,
};
use crate::numkit::{role, substream_seed, DenseMatrix, Rng};
use crate::representation::{ExtractorSpec, FeatureExtractor, Nonlinearity};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// A case fails once its error exceeds this. The analytic gradients land
/// around 1e-8 relative on double precision, so the margin is four orders of
/// magnitude.
pub const FAIL_TOLERANCE: f64 = 1e-5;

/// Instances per case in the default sweep.
pub const DEFAULT_INSTANCES: usize = 50;

/// Result of one extractor-kind x head-kind case.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckCase {
    pub extractor: String,
    pub head: String,
    pub instances: usize,
    /// Worst scaled max-norm deviation across the case's instances.
    pub max_rel_error: f64,
}

impl CheckCase {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= FAIL_TOLERANCE
    }
}

#[derive(Clone, Copy)]
enum HeadFlavor {
    Classification,
    Regression,
}

/// Runs every extractor-kind x head-kind combination with the given number
/// of seeded instances each and reports the worst relative error per case.
pub fn run_gradcheck(instances: usize, seed: u64) -> Result<Vec<CheckCase>> {
    if instances == 0 {
        return Err(Error::Config("gradcheck needs at least 1 instance".into()));
    }
    let extractors = ["identity", "linear", "mlp2-tanh", "mlp2-relu"];
    let heads = [HeadFlavor::Classification, HeadFlavor::Regression];
    let mut cases = Vec::new();
    for (ei, extractor) in extractors.iter().enumerate() {
        for (hi, &head) in heads.iter().enumerate() {
            let case_index = (ei * heads.len() + hi) as u64;
            let mut worst = 0.0f64;
            for i in 0..instances {
                let instance_seed = substream_seed(seed, role::INIT, case_index << 32 | i as u64);
                let err = check_instance(extractor, head, instance_seed)?;
                worst = worst.max(err);
            }
            cases.push(CheckCase {
                extractor: extractor.to_string(),
                head: match head {
                    HeadFlavor::Classification => "classification".to_string(),
                    HeadFlavor::Regression => "regression".to_string(),
                },
                instances,
                max_rel_error: worst,
            });
        }
    }
    Ok(cases)
}

/// The relative error the checker reports after one partial derivative of an
/// otherwise correct gradient is deliberately corrupted. Must land far above
/// [`FAIL_TOLERANCE`]; anything else means the checker has gone blind.
pub fn corrupted_rel_error(seed: u64) -> Result<f64> {
    let instance = build_instance("mlp2-tanh", HeadFlavor::Classification, seed)?;
    let (mut grad_theta, _, _) = instance.analytic()?;
    let fd = instance.fd_theta()?;
    grad_theta[0] += 1e-3;
    Ok(max_norm_rel_error(&grad_theta, &fd))
}

/// Verifies that the checker itself still catches wrong gradients: one
/// partial derivative is corrupted and the resulting error must exceed the
/// failure tolerance.
pub fn self_test(seed: u64) -> Result<()> {
    let err = corrupted_rel_error(seed)?;
    if err <= FAIL_TOLERANCE {
        return Err(Error::Numeric(format!(
            "gradient checker self-test failed: corrupted partial went undetected (error {err:.3e})"
        )));
    }
    Ok(())
}

struct Instance {
    f: FeatureExtractor,
    head: TaskHead,
    va_inputs: DenseMatrix,
    va_targets: Targets,
}

impl Instance {
    fn loss_with_params(&self, params: Vec<f64>) -> Result<f64> {
        let f = FeatureExtractor::with_params(self.f.spec().clone(), params)?;
        let (features, _) = f.forward(&self.va_inputs)?;
        Ok(head_loss_and_input_grad(&self.head, &features, &self.va_targets)?.0)
    }

    fn loss_with_inputs(&self, inputs: &DenseMatrix) -> Result<f64> {
        let (features, _) = self.f.forward(inputs)?;
        Ok(head_loss_and_input_grad(&self.head, &features, &self.va_targets)?.0)
    }

    fn analytic(&self) -> Result<(Vec<f64>, DenseMatrix, f64)> {
        let (features, trace) = self.f.forward(&self.va_inputs)?;
        let (loss, grad_features) =
            head_loss_and_input_grad(&self.head, &features, &self.va_targets)?;
        let (grad_theta, grad_x) = self.f.backward(&trace, &grad_features)?;
        Ok((grad_theta, grad_x, loss))
    }

    fn fd_theta(&self) -> Result<Vec<f64>> {
        let base = self.f.params();
        let mut fd = vec![0.0; base.len()];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut plus = base.to_vec();
            plus[i] += FD_STEP;
            let mut minus = base.to_vec();
            minus[i] -= FD_STEP;
            *slot =
                (self.loss_with_params(plus)? - self.loss_with_params(minus)?) / (2.0 * FD_STEP);
        }
        Ok(fd)
    }

    fn fd_inputs(&self) -> Result<Vec<f64>> {
        let mut fd = vec![0.0; self.va_inputs.data().len()];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut plus = self.va_inputs.clone();
            plus.data_mut()[i] += FD_STEP;
            let mut minus = self.va_inputs.clone();
            minus.data_mut()[i] -= FD_STEP;
            *slot =
                (self.loss_with_inputs(&plus)? - self.loss_with_inputs(&minus)?) / (2.0 * FD_STEP);
        }
        Ok(fd)
    }
}

fn build_instance(extractor: &str, head: HeadFlavor, seed: u64) -> Result<Instance> {
    let mut rng = Rng::new(seed);
    let d = 1 + rng.below(10);
    let h = 1 + rng.below(8);
    let p = 1 + rng.below(6);
    let c = 2 + rng.below(3);
    let m = 2 + rng.below(7);
    let spec = match extractor {
        "identity" => ExtractorSpec::Identity { dim: d },
        "linear" => ExtractorSpec::Linear {
            input_dim: d,
            output_dim: p,
        },
        "mlp2-tanh" => ExtractorSpec::Mlp2 {
            input_dim: d,
            hidden_dim: h,
            output_dim: p,
            nonlinearity: Nonlinearity::Tanh,
        },
        "mlp2-relu" => ExtractorSpec::Mlp2 {
            input_dim: d,
            hidden_dim: h,
            output_dim: p,
            nonlinearity: Nonlinearity::Relu,
        },
        other => return Err(Error::Config(format!("unknown extractor case '{other}'"))),
    };
    let f = FeatureExtractor::init_params(spec, &mut rng)?;

    let batch = |rng: &mut Rng| -> (DenseMatrix, Targets) {
        let data: Vec<f64> = (0..m * d).map(|_| rng.uniform(-1.5, 1.5)).collect();
        let inputs = DenseMatrix::from_vec(m, d, data).expect("sizes agree");
        let targets = match head {
            HeadFlavor::Classification => Targets::Classes((0..m).map(|_| rng.below(c)).collect()),
            HeadFlavor::Regression => Targets::Values((0..m).map(|_| rng.normal()).collect()),
        };
        (inputs, targets)
    };
    let (fit_inputs, fit_targets) = batch(&mut rng);
    let (va_inputs, va_targets) = batch(&mut rng);

    let kind = match head {
        HeadFlavor::Classification => TaskKind::Classification { num_classes: c },
        HeadFlavor::Regression => TaskKind::Regression,
    };
    let (fit_features, _) = f.forward(&fit_inputs)?;
    let task_head = fit_head(kind, &fit_features, &fit_targets, &HeadFitConfig::default())?;
    Ok(Instance {
        f,
        head: task_head,
        va_inputs,
        va_targets,
    })
}

/// Worst rel error of one instance, across the parameter and input gradients.
fn check_instance(extractor: &str, head: HeadFlavor, seed: u64) -> Result<f64> {
    let instance = build_instance(extractor, head, seed)?;
    let (grad_theta, grad_x, _) = instance.analytic()?;
    let theta_err = max_norm_rel_error(&grad_theta, &instance.fd_theta()?);
    let input_err = max_norm_rel_error(grad_x.data(), &instance.fd_inputs()?);
    Ok(theta_err.max(input_err))
}

/// Largest absolute deviation scaled by the largest gradient magnitude seen
/// on either side, floored so that all-zero gradients compare cleanly.
fn max_norm_rel_error(analytic: &[f64], fd: &[f64]) -> f64 {
    let mut max_dev = 0.0f64;
    let mut max_mag = 1e-9f64;
    for (a, g) in analytic.iter().zip(fd) {
        max_dev = max_dev.max((a - g).abs());
        max_mag = max_mag.max(a.abs()).max(g.abs());
    }
    max_dev / max_mag
}
