//! Flat `key = value` run configuration: file loading, `--set` overrides,
//! typed accessors with documented defaults, and a sorted echo of the fully
//! resolved configuration for reproducibility.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use leadr_core::representation::DEFAULT_HIDDEN_DIM;
use leadr_core::{
    Error, EvalProtocol, ExtractorSpec, HeadFitConfig, LeadrConfig, Metric, Nonlinearity, Result,
    SyntheticFamilySpec,
};

/// Every key the configuration understands, with its default value. An empty
/// default means "unset"; the accessor documents what that falls back to.
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("data.source", "synthetic"),
    ("data.pool_csv", ""),
    ("family.latent_dim", "5"),
    ("family.ambient_dim", "50"),
    ("family.noise_sigma", "0.3"),
    ("family.classes", "20"),
    ("family.samples_per_class", "60"),
    ("family.seed", ""),
    ("partition.fractions", "0.34,0.33,0.33"),
    ("extractor.kind", "mlp2"),
    ("extractor.output_dim", "16"),
    ("extractor.hidden_dim", "64"),
    ("extractor.nonlinearity", "tanh"),
    ("stream.ways", "5"),
    ("stream.shots", "10"),
    ("stream.tasks", "1000"),
    ("train.updates_per_task", "10"),
    ("train.learning_rate", "0.01"),
    ("train.pseudo_train", ""),
    ("train.minibatch", ""),
    ("train.checkpoint_every", "0"),
    ("head.iterations", "500"),
    ("head.step_size", "0.1"),
    ("head.l2", "0.0001"),
    ("head.tolerance", "1e-8"),
    ("eval.tasks", "100"),
    ("eval.ways", "5"),
    ("eval.support_sizes", "1,2,3,5,10"),
    ("eval.repeats", "10"),
    ("eval.metric", "accuracy"),
    ("eval.checkpoint", ""),
    ("gradcheck.instances", "50"),
    ("gradcheck.corrupt", "false"),
    ("simulate.verify", "true"),
];

fn default_of(key: &str) -> Option<&'static str> {
    KNOWN_KEYS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, default)| *default)
}

/// One run's settings: explicit values over the defaults in [`KNOWN_KEYS`].
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

/// Where the training stream's episodes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    PoolCsv(PathBuf),
}

impl RunConfig {
    /// Loads the optional config file, applies `--set key=value` overrides in
    /// order, then the `--seed` flag. Unknown keys are rejected so typos
    /// cannot silently fall back to defaults.
    pub fn load(path: Option<&Path>, seed_flag: Option<u64>, sets: &[String]) -> Result<Self> {
        let mut config = RunConfig::default();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected 'key = value', found '{raw}'"),
                    });
                };
                config
                    .set(key.trim(), value.trim())
                    .map_err(|err| Error::Parse {
                        line: i + 1,
                        message: err.to_string(),
                    })?;
            }
        }
        for assignment in sets {
            let Some((key, value)) = assignment.split_once('=') else {
                return Err(Error::Config(format!(
                    "--set needs KEY=VALUE, got '{assignment}'"
                )));
            };
            config.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = seed_flag {
            config.set("seed", &seed.to_string())?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if default_of(key).is_none() {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// The effective value of a key: the set value, else the default. Empty
    /// values count as unset.
    fn effective(&self, key: &str) -> Result<Option<String>> {
        let value = match self.values.get(key) {
            Some(v) => v.clone(),
            None => default_of(key)
                .ok_or_else(|| Error::Config(format!("unknown config key '{key}'")))?
                .to_string(),
        };
        Ok(if value.is_empty() { None } else { Some(value) })
    }

    fn required(&self, key: &str) -> Result<String> {
        self.effective(key)?
            .ok_or_else(|| Error::Config(format!("config key '{key}' needs a value")))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        let value = self.required(key)?;
        value.parse().map_err(|_| {
            Error::Config(format!(
                "config key '{key}': '{value}' is not a valid {what}"
            ))
        })
    }

    fn parsed_optional<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.effective(key)? {
            None => Ok(None),
            Some(value) => value.parse().map(Some).map_err(|_| {
                Error::Config(format!(
                    "config key '{key}': '{value}' is not a valid {what}"
                ))
            }),
        }
    }

    fn bool_key(&self, key: &str) -> Result<bool> {
        match self.required(key)?.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Config(format!(
                "config key '{key}': '{other}' is not a boolean"
            ))),
        }
    }

    fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let value = self.required(key)?;
        value
            .split(',')
            .map(|part| {
                part.trim().parse().map_err(|_| {
                    Error::Config(format!("config key '{key}': '{part}' is not a valid size"))
                })
            })
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed("seed", "u64 seed")
    }

    pub fn data_source(&self) -> Result<DataSource> {
        match self.required("data.source")?.as_str() {
            "synthetic" => Ok(DataSource::Synthetic),
            "pool" => {
                let path = self.effective("data.pool_csv")?.ok_or_else(|| {
                    Error::Config("data.source = pool needs data.pool_csv".into())
                })?;
                Ok(DataSource::PoolCsv(PathBuf::from(path)))
            }
            other => Err(Error::Config(format!(
                "config key 'data.source': expected synthetic or pool, got '{other}'"
            ))),
        }
    }

    pub fn family_spec(&self) -> Result<SyntheticFamilySpec> {
        let seed = match self.parsed_optional::<u64>("family.seed", "u64 seed")? {
            Some(seed) => seed,
            None => self.seed()?,
        };
        Ok(SyntheticFamilySpec {
            latent_dim: self.parsed("family.latent_dim", "dimension")?,
            ambient_dim: self.parsed("family.ambient_dim", "dimension")?,
            noise_sigma: self.parsed("family.noise_sigma", "number")?,
            num_global_classes: self.parsed("family.classes", "count")?,
            samples_per_class: self.parsed("family.samples_per_class", "count")?,
            seed,
        })
    }

    pub fn partition_fractions(&self) -> Result<[f64; 3]> {
        let value = self.required("partition.fractions")?;
        let parts: Vec<f64> = value
            .split(',')
            .map(|part| {
                part.trim().parse().map_err(|_| {
                    Error::Config(format!(
                        "config key 'partition.fractions': '{part}' is not a number"
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let [a, b, c] = parts[..] else {
            return Err(Error::Config(format!(
                "config key 'partition.fractions' needs exactly 3 values, got {}",
                parts.len()
            )));
        };
        Ok([a, b, c])
    }

    /// The extractor for a given input dimensionality. The identity kind
    /// ignores extractor.output_dim and uses the input dimension.
    pub fn extractor_spec(&self, input_dim: usize) -> Result<ExtractorSpec> {
        match self.required("extractor.kind")?.as_str() {
            "identity" => Ok(ExtractorSpec::Identity { dim: input_dim }),
            "linear" => Ok(ExtractorSpec::Linear {
                input_dim,
                output_dim: self.parsed("extractor.output_dim", "dimension")?,
            }),
            "mlp2" => {
                let hidden_dim = match self.parsed_optional("extractor.hidden_dim", "dimension")? {
                    Some(h) => h,
                    None => DEFAULT_HIDDEN_DIM,
                };
                let nonlinearity: Nonlinearity =
                    self.required("extractor.nonlinearity")?.parse()?;
                Ok(ExtractorSpec::Mlp2 {
                    input_dim,
                    hidden_dim,
                    output_dim: self.parsed("extractor.output_dim", "dimension")?,
                    nonlinearity,
                })
            }
            other => Err(Error::Config(format!(
                "config key 'extractor.kind': expected identity, linear, or mlp2, got '{other}'"
            ))),
        }
    }

    pub fn stream_ways(&self) -> Result<usize> {
        self.parsed("stream.ways", "count")
    }

    pub fn stream_shots(&self) -> Result<usize> {
        self.parsed("stream.shots", "count")
    }

    pub fn stream_tasks(&self) -> Result<usize> {
        self.parsed("stream.tasks", "count")
    }

    pub fn head_cfg(&self) -> Result<HeadFitConfig> {
        Ok(HeadFitConfig {
            iterations: self.parsed("head.iterations", "count")?,
            step_size: self.parsed("head.step_size", "number")?,
            l2: self.parsed("head.l2", "number")?,
            tolerance: self.parsed("head.tolerance", "number")?,
        })
    }

    pub fn leadr_config(&self) -> Result<LeadrConfig> {
        Ok(LeadrConfig {
            pseudo_train: self.parsed_optional("train.pseudo_train", "count")?,
            updates_per_task: self.parsed("train.updates_per_task", "count")?,
            learning_rate: self.parsed("train.learning_rate", "number")?,
            minibatch: self.parsed_optional("train.minibatch", "count")?,
            head_cfg: self.head_cfg()?,
            seed: self.seed()?,
        })
    }

    pub fn checkpoint_every(&self) -> Result<usize> {
        self.parsed("train.checkpoint_every", "count")
    }

    pub fn eval_protocol(&self) -> Result<EvalProtocol> {
        Ok(EvalProtocol {
            num_test_tasks: self.parsed("eval.tasks", "count")?,
            ways: self.parsed("eval.ways", "count")?,
            support_sizes: self.usize_list("eval.support_sizes")?,
            repeats: self.parsed("eval.repeats", "count")?,
            metric: self.required("eval.metric")?.parse::<Metric>()?,
        })
    }

    /// The checkpoint cmd_eval loads: eval.checkpoint when set, otherwise
    /// checkpoint_final.txt inside the output directory.
    pub fn eval_checkpoint(&self, out: &Path) -> Result<PathBuf> {
        Ok(match self.effective("eval.checkpoint")? {
            Some(path) => PathBuf::from(path),
            None => out.join("checkpoint_final.txt"),
        })
    }

    pub fn gradcheck_instances(&self) -> Result<usize> {
        self.parsed("gradcheck.instances", "count")
    }

    pub fn gradcheck_corrupt(&self) -> Result<bool> {
        self.bool_key("gradcheck.corrupt")
    }

    pub fn simulate_verify(&self) -> Result<bool> {
        self.bool_key("simulate.verify")
    }

    /// Every known key with its effective value, one `key = value` line each,
    /// sorted by key. This is what lands in config.resolved.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        for (key, default) in KNOWN_KEYS {
            let value = self.values.get(*key).map_or(*default, |v| v.as_str());
            out.push_str(&format!("{key} = {value}\n"));
        }
        let mut lines: Vec<&str> = out.lines().collect();
        lines.sort_unstable();
        let mut sorted = lines.join("\n");
        sorted.push('\n');
        sorted
    }

    /// Writes config.resolved into the run directory.
    pub fn write_resolved(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("config.resolved");
        fs::write(&path, self.resolved_text()).map_err(|e| Error::io_at(&path, e))?;
        Ok(())
    }
}
