//! End-to-end acceptance checks. Each test prints one verdict line of the
//! form `ACCEPT <n> <label>: PASS|FAIL|SKIP`; run with `-- --nocapture` to
//! see the lines for passing tests too. The synthetic lifelong run behind
//! checks 5 and 6 executes once and is shared by both.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use leadr_core::eval::{
    auc_binary, load_multitask_tasks, multitask_metric_on_splits, multitask_train_representation,
    rmse, split_multitask_tasks,
};
use leadr_core::gradcheck::run_gradcheck;
use leadr_core::heads::{fit_head, head_loss_and_input_grad};
use leadr_core::leadr::{estimate_generalization, process_task};
use leadr_core::numkit::{role, substream_seed};
use leadr_core::stream::Provenance;
use leadr_core::{
    DenseMatrix, ExtractorSpec, FeatureExtractor, HeadFitConfig, LeadrConfig, Metric, Nonlinearity,
    PartitionTag, Rng, SplitScheme, Targets, TaskEpisode, TaskKind,
};

fn verdict(num: usize, label: &str, ok: bool, detail: &str) {
    let line = format!(
        "ACCEPT {num} {label}: {}  ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(ok, "{line}");
}

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("leadr-accept-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

/// Runs the shipped binary and panics with its stderr if it exits nonzero.
fn run_binary(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_leadr"))
        .args(args)
        .output()
        .expect("failed to launch the leadr binary");
    if !out.status.success() {
        panic!(
            "leadr {:?} exited {:?}\nstderr: {}",
            args,
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn toy_classification_episode(m: usize, d: usize, classes: usize, seed: u64) -> TaskEpisode {
    let mut rng = Rng::new(seed);
    let data: Vec<f64> = (0..m * d).map(|_| rng.normal()).collect();
    TaskEpisode {
        inputs: DenseMatrix::from_vec(m, d, data).unwrap(),
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

fn toy_regression_episode(m: usize, d: usize, seed: u64) -> TaskEpisode {
    let mut rng = Rng::new(seed);
    let data: Vec<f64> = (0..m * d).map(|_| rng.normal()).collect();
    let values: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
    TaskEpisode {
        inputs: DenseMatrix::from_vec(m, d, data).unwrap(),
        targets: Targets::Values(values),
        kind: TaskKind::Regression,
        provenance: Provenance {
            classes: Vec::new(),
            partition: PartitionTag::Full,
        },
    }
}

#[test]
fn accept_1_gradient_exactness() {
    let started = Instant::now();
    let cases = run_gradcheck(50, 2026).expect("gradcheck run");
    assert_eq!(cases.len(), 8, "expected 4 extractor kinds x 2 head kinds");
    let worst = cases.iter().map(|c| c.max_rel_error).fold(0.0f64, f64::max);
    let all_tight = cases.iter().all(|c| c.max_rel_error <= 1e-6);

    let dir = scratch_dir("gradcheck");
    run_binary(&["gradcheck", "--out", dir.to_str().unwrap()]);
    let _ = fs::remove_dir_all(&dir);

    let secs = started.elapsed().as_secs_f64();
    verdict(
        1,
        "gradient exactness",
        all_tight && secs < 30.0,
        &format!("8 cases x 50 instances, worst rel err {worst:.2e}, binary exit 0, {secs:.1}s"),
    );
}

/// Average validation loss over every size-n subset of the episode, fitting a
/// head per subset on features extracted once. Independent of the library's
/// enumeration path.
fn brute_force_estimate(
    f: &FeatureExtractor,
    episode: &TaskEpisode,
    n: usize,
    head_cfg: &HeadFitConfig,
) -> f64 {
    let m = episode.len();
    let (features, _) = f.forward(&episode.inputs).unwrap();
    let mut total = 0.0;
    let mut count = 0usize;
    // Lexicographic enumeration of all C(m, n) index subsets.
    let mut tr: Vec<usize> = (0..n).collect();
    loop {
        let va: Vec<usize> = (0..m).filter(|i| !tr.contains(i)).collect();
        let head = fit_head(
            episode.kind,
            &features.select_rows(&tr),
            &episode.targets.subset(&tr),
            head_cfg,
        )
        .unwrap();
        let (loss, _) = head_loss_and_input_grad(
            &head,
            &features.select_rows(&va),
            &episode.targets.subset(&va),
        )
        .unwrap();
        total += loss;
        count += 1;

        // Advance to the next combination, or stop at the last one.
        let mut i = n;
        loop {
            if i == 0 {
                return total / count as f64;
            }
            i -= 1;
            if tr[i] != i + m - n {
                break;
            }
        }
        tr[i] += 1;
        for j in i + 1..n {
            tr[j] = tr[j - 1] + 1;
        }
    }
}

#[test]
fn accept_2_estimator_oracle_equivalence() {
    let head_cfg = HeadFitConfig::default();

    let cls = toy_classification_episode(4, 3, 2, 11);
    let f_cls = FeatureExtractor::init_params(
        ExtractorSpec::Mlp2 {
            input_dim: 3,
            hidden_dim: 4,
            output_dim: 3,
            nonlinearity: Nonlinearity::Tanh,
        },
        &mut Rng::new(5),
    )
    .unwrap();
    let est_cls = estimate_generalization(
        &f_cls,
        &cls,
        2,
        SplitScheme::Enumerate,
        &head_cfg,
        &mut Rng::new(1),
    )
    .unwrap();
    let oracle_cls = brute_force_estimate(&f_cls, &cls, 2, &head_cfg);

    let reg = toy_regression_episode(4, 3, 12);
    let f_reg = FeatureExtractor::zeroed(ExtractorSpec::Identity { dim: 3 }).unwrap();
    let est_reg = estimate_generalization(
        &f_reg,
        &reg,
        2,
        SplitScheme::Enumerate,
        &head_cfg,
        &mut Rng::new(1),
    )
    .unwrap();
    let oracle_reg = brute_force_estimate(&f_reg, &reg, 2, &head_cfg);

    let d_cls = (est_cls - oracle_cls).abs();
    let d_reg = (est_reg - oracle_reg).abs();
    verdict(
        2,
        "estimator oracle equivalence",
        d_cls <= 1e-12 && d_reg <= 1e-12,
        &format!("all 6 splits of m=4, n=2: classification delta {d_cls:.1e}, regression delta {d_reg:.1e}"),
    );
}

#[test]
fn accept_3_update_loop_degeneracies() {
    let episode = toy_classification_episode(8, 4, 2, 21);
    let spec = ExtractorSpec::Mlp2 {
        input_dim: 4,
        hidden_dim: 5,
        output_dim: 3,
        nonlinearity: Nonlinearity::Relu,
    };
    let init = FeatureExtractor::init_params(spec, &mut Rng::new(9)).unwrap();

    // K = 0 must leave every parameter bit untouched.
    let mut f0 = init.clone();
    let cfg0 = LeadrConfig {
        updates_per_task: 0,
        ..LeadrConfig::default()
    };
    let (head0, _) = process_task(&mut f0, &episode, &cfg0, &mut Rng::new(42)).unwrap();
    let theta_fixed = f0.params() == init.params();

    // The identity extractor owns no parameters and its output must stay a
    // verbatim copy of the input after a full K-update pass.
    let mut ident = FeatureExtractor::zeroed(ExtractorSpec::Identity { dim: 4 }).unwrap();
    process_task(
        &mut ident,
        &episode,
        &LeadrConfig::default(),
        &mut Rng::new(42),
    )
    .unwrap();
    let (out, _) = ident.forward(&episode.inputs).unwrap();
    let identity_clean = ident.num_params() == 0 && out.data() == episode.inputs.data();

    // The head is fitted before the updates and frozen through them: running
    // K = 10 from the same state and rng must return the same head as K = 0.
    let mut f10 = init.clone();
    let (head10, _) = process_task(
        &mut f10,
        &episode,
        &LeadrConfig::default(),
        &mut Rng::new(42),
    )
    .unwrap();
    let head_frozen =
        head0.weights().data() == head10.weights().data() && head0.bias() == head10.bias();
    let theta_moved = f10.params() != init.params();

    verdict(
        3,
        "update loop degeneracies",
        theta_fixed && identity_clean && head_frozen && theta_moved,
        &format!(
            "K=0 theta fixed: {theta_fixed}, identity untouched: {identity_clean}, \
             head invariant to K: {head_frozen}, K=10 moves theta: {theta_moved}"
        ),
    );
}

#[test]
fn accept_4_determinism() {
    let dir_a = scratch_dir("det-a");
    let dir_b = scratch_dir("det-b");
    fs::create_dir_all(&dir_a).unwrap();
    let config = dir_a.join("small.conf");
    fs::write(
        &config,
        "seed = 7\n\
         family.classes = 8\n\
         family.samples_per_class = 30\n\
         family.ambient_dim = 12\n\
         family.latent_dim = 3\n\
         extractor.hidden_dim = 16\n\
         extractor.output_dim = 8\n\
         stream.tasks = 40\n\
         stream.shots = 5\n\
         eval.tasks = 10\n\
         eval.support_sizes = 1,3\n\
         eval.repeats = 2\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();

    for dir in [&dir_a, &dir_b] {
        let out = dir.to_str().unwrap();
        run_binary(&["train", "--config", cfg, "--out", out]);
        run_binary(&["eval", "--config", cfg, "--out", out]);
    }

    let mut same = true;
    for name in [
        "checkpoint_final.txt",
        "report_leadr.json",
        "report_stl.json",
        "curves.csv",
    ] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        if a != b {
            same = false;
            println!("ACCEPT 4: {name} differs between reruns");
        }
    }
    let _ = fs::remove_dir_all(&dir_a);
    let _ = fs::remove_dir_all(&dir_b);

    verdict(
        4,
        "determinism",
        same,
        "checkpoint and reports byte-identical across two train+eval runs",
    );
}

struct LifelongRun {
    /// Rows of curves.csv: (support_size, leadr_mean, leadr_std, stl_mean, stl_std).
    curve: Vec<(usize, f64, f64, f64, f64)>,
    va_first_100: f64,
    va_last_100: f64,
    secs: f64,
}

static LIFELONG: OnceLock<LifelongRun> = OnceLock::new();

/// Trains and evaluates the shipped synthetic scenario once, through the real
/// binary, and parses the artifacts.
fn lifelong_run() -> &'static LifelongRun {
    LIFELONG.get_or_init(|| {
        let config = workspace_root().join("configs/synthetic.conf");
        let cfg = config.to_str().unwrap();
        let dir = scratch_dir("lifelong");
        let out = dir.to_str().unwrap();

        let started = Instant::now();
        run_binary(&["train", "--config", cfg, "--out", out]);
        run_binary(&["eval", "--config", cfg, "--out", out]);
        let secs = started.elapsed().as_secs_f64();

        let mut post: Vec<f64> = Vec::new();
        let log = fs::read_to_string(dir.join("train_log.csv")).unwrap();
        for line in log.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            post.push(cols[3].parse().unwrap());
        }
        assert!(
            post.len() >= 200,
            "need at least 200 tasks, got {}",
            post.len()
        );
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;

        let mut curve = Vec::new();
        let curves = fs::read_to_string(dir.join("curves.csv")).unwrap();
        for line in curves.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            curve.push((
                cols[0].parse().unwrap(),
                cols[1].parse().unwrap(),
                cols[2].parse().unwrap(),
                cols[3].parse().unwrap(),
                cols[4].parse().unwrap(),
            ));
        }

        let run = LifelongRun {
            curve,
            va_first_100: mean(&post[..100]),
            va_last_100: mean(&post[post.len() - 100..]),
            secs,
        };
        let _ = fs::remove_dir_all(&dir);
        run
    })
}

#[test]
fn accept_5_synthetic_lifelong_transfer() {
    let run = lifelong_run();
    let sizes: Vec<usize> = run.curve.iter().map(|r| r.0).collect();
    assert_eq!(sizes, [1, 2, 3, 5, 10], "unexpected support sizes");

    let margin_pp = |row: &(usize, f64, f64, f64, f64)| (row.1 - row.3) * 100.0;
    let m1 = margin_pp(&run.curve[0]);
    let m2 = margin_pp(&run.curve[1]);
    let monotone = run.curve.windows(2).all(|w| w[1].1 >= w[0].1 - 0.01);

    verdict(
        5,
        "synthetic lifelong transfer",
        m1 >= 5.0 && m2 >= 5.0 && monotone && run.secs < 600.0,
        &format!(
            "margin +{m1:.2}pp at 1 shot, +{m2:.2}pp at 2 shots, \
             curve non-decreasing within 1pp, {:.0}s",
            run.secs
        ),
    );
}

#[test]
fn accept_6_stream_learning_signal() {
    let run = lifelong_run();
    verdict(
        6,
        "stream learning signal",
        run.va_last_100 < run.va_first_100,
        &format!(
            "post-update va loss {:.4} over first 100 tasks -> {:.4} over last 100",
            run.va_first_100, run.va_last_100
        ),
    );
}

/// Tie-aware pairwise AUC: wins count 1, ties count 1/2, over all
/// positive-negative pairs.
fn auc_pair_oracle(scores: &[f64], labels: &[usize]) -> f64 {
    let mut wins = 0u64;
    let mut ties = 0u64;
    let mut pairs = 0u64;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1;
            } else if scores[i] == scores[j] {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / pairs as f64
}

#[test]
fn accept_7_metric_oracles() {
    let mut rng = Rng::new(7001);
    let mut auc_exact = true;
    for _ in 0..100 {
        let n = 2 + rng.below(60);
        // Scores on a coarse grid so tied values are common.
        let scores: Vec<f64> = (0..n).map(|_| rng.below(9) as f64 / 4.0).collect();
        let mut labels: Vec<usize> = (0..n).map(|i| (i % 2 == 0) as usize).collect();
        rng.shuffle(&mut labels);
        let got = auc_binary(&scores, &labels).unwrap();
        let want = auc_pair_oracle(&scores, &labels);
        if got != want {
            auc_exact = false;
            println!("ACCEPT 7: auc mismatch {got} vs oracle {want}");
        }
    }

    let mut rmse_close = true;
    for _ in 0..100 {
        let n = 1 + rng.below(40);
        let pred: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let target: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let got = rmse(&pred, &target).unwrap();
        let want = (pred
            .iter()
            .zip(&target)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        if (got - want).abs() > 1e-12 {
            rmse_close = false;
            println!("ACCEPT 7: rmse mismatch {got} vs oracle {want}");
        }
    }

    verdict(
        7,
        "metric oracles",
        auc_exact && rmse_close,
        "auc exact on 100 tied instances, rmse within 1e-12 on 100 instances",
    );
}

#[test]
fn accept_8_landmine_transfer() {
    let dir = std::env::var("LEADR_LANDMINE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| workspace_root().join("data/landmine"));
    let mut paths: Vec<PathBuf> = match fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => Vec::new(),
    };
    if paths.is_empty() {
        println!(
            "ACCEPT 8 landmine transfer: SKIP (no task CSVs under {})",
            dir.display()
        );
        return;
    }
    paths.sort();

    let seed = 1u64;
    let head_cfg = HeadFitConfig::default();
    let tasks = load_multitask_tasks(&paths, Metric::Auc).unwrap();
    assert!(
        tasks.iter().all(|t| t.inputs.cols() == 9),
        "landmine tasks must have 9 features"
    );
    let mut rng = Rng::new(substream_seed(seed, role::MULTITASK, 0));
    let splits = split_multitask_tasks(&tasks, 0.5, &mut rng).unwrap();

    let stl = multitask_metric_on_splits(&splits, Metric::Auc, &head_cfg, None).unwrap();

    let mut f = FeatureExtractor::init_params(
        ExtractorSpec::Mlp2 {
            input_dim: 9,
            hidden_dim: 16,
            output_dim: 8,
            nonlinearity: Nonlinearity::Tanh,
        },
        &mut Rng::new(substream_seed(seed, role::INIT, 0)),
    )
    .unwrap();
    let cfg = LeadrConfig {
        seed,
        ..LeadrConfig::default()
    };
    multitask_train_representation(&splits, &mut f, &cfg, 10).unwrap();
    let leadr = multitask_metric_on_splits(&splits, Metric::Auc, &head_cfg, Some(&f)).unwrap();

    let stl_ok = (stl.mean - 0.76).abs() <= 0.03;
    let leadr_ok = (leadr.mean - 0.78).abs() <= 0.03;
    verdict(
        8,
        "landmine transfer",
        stl_ok && leadr_ok,
        &format!(
            "{} tasks: stl macro-auc {:.3} (band 0.76 +/- 0.03), leadr {:.3} (band 0.78 +/- 0.03)",
            splits.len(),
            stl.mean,
            leadr.mean
        ),
    );
}
