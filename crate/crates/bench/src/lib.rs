//! Shared fixtures for the criterion benchmarks: episode and extractor
//! builders sized like the synthetic lifelong scenario.

use leadr_core::stream::Provenance;
use leadr_core::{
    DenseMatrix, ExtractorSpec, FeatureExtractor, Nonlinearity, PartitionTag, Rng, Targets,
    TaskEpisode, TaskKind,
};

/// A classification episode with labels cycling over the classes.
pub fn episode(m: usize, d: usize, classes: usize, seed: u64) -> TaskEpisode {
    let mut rng = Rng::new(seed);
    let data: Vec<f64> = (0..m * d).map(|_| rng.normal()).collect();
    TaskEpisode {
        inputs: DenseMatrix::from_vec(m, d, data).expect("episode shape"),
        targets: Targets::Classes((0..m).map(|i| i % classes).collect()),
        kind: TaskKind::Classification {
            num_classes: classes,
        },
        provenance: Provenance {
            classes: (0..classes).collect(),
            partition: PartitionTag::Full,
        },
    }
}

/// A randomly initialized two-layer perceptron extractor.
pub fn mlp2(d: usize, h: usize, p: usize, seed: u64) -> FeatureExtractor {
    FeatureExtractor::init_params(
        ExtractorSpec::Mlp2 {
            input_dim: d,
            hidden_dim: h,
            output_dim: p,
            nonlinearity: Nonlinearity::Tanh,
        },
        &mut Rng::new(seed),
    )
    .expect("extractor init")
}

/// A random matrix with standard normal entries.
pub fn matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = Rng::new(seed);
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.normal()).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("matrix shape")
}
