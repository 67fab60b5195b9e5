//! The four subcommands: train, eval, gradcheck, simulate. Every command
//! creates its run directory, echoes the fully resolved configuration into
//! it, and writes all artifacts there.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use leadr_core::eval::{baseline_stl, emit_report, evaluate_representation, EvalReport};
use leadr_core::gradcheck::{self, run_gradcheck, CheckCase, FAIL_TOLERANCE};
use leadr_core::leadr::train_stream_with;
use leadr_core::numkit::{role, substream_seed};
use leadr_core::stream::{
    load_pool_csv, make_stream, partition_pool, save_pool_csv, synth_pool, LabeledPool,
    StreamSource, StreamSpec,
};
use leadr_core::{Error, FeatureExtractor, Result, Rng};

use crate::config::{DataSource, RunConfig};

/// Loads or generates the source pool and partitions it into the three
/// disjoint parts. A shared substream of the data seed drives partitioning,
/// so train and eval regenerate identical pools from one config.
fn build_pools(config: &RunConfig) -> Result<(LabeledPool, LabeledPool, LabeledPool)> {
    let (pool, partition_seed) = match config.data_source()? {
        DataSource::Synthetic => {
            let spec = config.family_spec()?;
            (synth_pool(&spec)?, spec.seed)
        }
        DataSource::PoolCsv(path) => (load_pool_csv(&path)?, config.seed()?),
    };
    let fractions = config.partition_fractions()?;
    let mut rng = Rng::new(substream_seed(partition_seed, role::PARTITION, 0));
    partition_pool(&pool, fractions, &mut rng)
}

fn prepare_run_dir(config: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io_at(out, e))?;
    config.write_resolved(out)
}

/// Streams training episodes from the representation-training partition,
/// folds the trainer over them, and writes the log plus checkpoints.
pub fn cmd_train(config: &RunConfig, out: &Path) -> Result<()> {
    prepare_run_dir(config, out)?;
    let started = Instant::now();
    let seed = config.seed()?;
    let (repr_pool, _, _) = build_pools(config)?;
    let extractor_spec = config.extractor_spec(repr_pool.dim())?;
    let mut f = FeatureExtractor::init_params(
        extractor_spec,
        &mut Rng::new(substream_seed(seed, role::INIT, 0)),
    )?;

    let stream_spec = StreamSpec {
        ways: config.stream_ways()?,
        shots: config.stream_shots()?,
        num_tasks: config.stream_tasks()?,
        seed,
        source: StreamSource::Pool(repr_pool),
    };
    let leadr_config = config.leadr_config()?;
    let checkpoint_every = config.checkpoint_every()?;

    let log_path = out.join("train_log.csv");
    let mut log_file = fs::File::create(&log_path).map_err(|e| Error::io_at(&log_path, e))?;
    writeln!(
        log_file,
        "ordinal,head_loss,va_loss_pre,va_loss_post,millis"
    )?;
    let stream = make_stream(&stream_spec)?;
    let log = train_stream_with(&mut f, stream, &leadr_config, |f, record| {
        writeln!(
            log_file,
            "{},{},{},{},{}",
            record.ordinal,
            record.head_loss,
            record.va_loss_pre,
            record.va_loss_post,
            record.millis
        )?;
        if checkpoint_every > 0 && (record.ordinal + 1) % checkpoint_every == 0 {
            f.save(&out.join(format!("checkpoint_{:05}.txt", record.ordinal + 1)))?;
        }
        Ok(())
    })?;
    f.save(&out.join("checkpoint_final.txt"))?;

    let tasks = log.records.len();
    if tasks >= 200 {
        println!(
            "trained {tasks} tasks in {:.1}s; mean post-update va loss {:.4} (first 100) -> {:.4} (last 100)",
            started.elapsed().as_secs_f64(),
            log.mean_va_loss_post(0, 100),
            log.mean_va_loss_post(tasks - 100, tasks),
        );
    } else {
        println!(
            "trained {tasks} tasks in {:.1}s",
            started.elapsed().as_secs_f64()
        );
    }
    println!("checkpoint: {}", out.join("checkpoint_final.txt").display());
    Ok(())
}

/// Evaluates the trained extractor and the single-task baseline under
/// identical seeds and emits both reports plus a combined curve file.
pub fn cmd_eval(config: &RunConfig, out: &Path) -> Result<()> {
    prepare_run_dir(config, out)?;
    let seed = config.seed()?;
    let (_, support_pool, test_pool) = build_pools(config)?;
    let checkpoint = config.eval_checkpoint(out)?;
    let f = FeatureExtractor::load(&checkpoint)?;
    let protocol = config.eval_protocol()?;
    let head_cfg = config.head_cfg()?;

    let eval_seed = substream_seed(seed, role::EVAL, 0);
    let leadr_report = evaluate_representation(
        &f,
        &support_pool,
        &test_pool,
        &protocol,
        &head_cfg,
        &mut Rng::new(eval_seed),
    )?;
    let stl_report = baseline_stl(
        &support_pool,
        &test_pool,
        &protocol,
        &head_cfg,
        &mut Rng::new(eval_seed),
    )?;
    emit_report(&leadr_report, &out.join("report_leadr.json"))?;
    emit_report(&stl_report, &out.join("report_stl.json"))?;
    write_combined_curve(&leadr_report, &stl_report, &out.join("curves.csv"))?;

    for (l, s) in leadr_report.points.iter().zip(&stl_report.points) {
        println!(
            "shots {:>3}: {} {:.4} (std {:.4})  stl {:.4} (std {:.4})  margin {:+.2}pp",
            l.support_size,
            leadr_report.method,
            l.mean,
            l.std,
            s.mean,
            s.std,
            100.0 * (l.mean - s.mean),
        );
    }
    Ok(())
}

fn write_combined_curve(leadr: &EvalReport, stl: &EvalReport, path: &Path) -> Result<()> {
    let mut text = String::from("support_size,leadr_mean,leadr_std,stl_mean,stl_std\n");
    for (l, s) in leadr.points.iter().zip(&stl.points) {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            l.support_size, l.mean, l.std, s.mean, s.std
        ));
    }
    fs::write(path, text).map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

/// Finite-difference verification of every extractor-kind x head-kind
/// gradient path. Returns whether every case passed; with gradcheck.corrupt
/// a deliberately wrong partial derivative is injected and the run must
/// report the failure.
pub fn cmd_gradcheck(config: &RunConfig, out: &Path) -> Result<bool> {
    prepare_run_dir(config, out)?;
    let seed = config.seed()?;
    let mut lines = Vec::new();
    let mut all_passed = true;

    if config.gradcheck_corrupt()? {
        let err = gradcheck::corrupted_rel_error(seed)?;
        let detected = err > FAIL_TOLERANCE;
        lines.push(format!(
            "corrupted-partial self-test  max_rel_error {err:.3e}  ({})",
            if detected {
                "FAIL as intended"
            } else {
                "UNDETECTED"
            }
        ));
        all_passed = false;
    } else {
        gradcheck::self_test(seed)?;
        lines.push("self-test: corrupted partial detected; checker is live".to_string());
        let cases = run_gradcheck(config.gradcheck_instances()?, seed)?;
        for case in &cases {
            lines.push(format_case(case));
            all_passed &= case.passed();
        }
    }

    let mut text = lines.join("\n");
    text.push('\n');
    print!("{text}");
    let report_path = out.join("gradcheck.txt");
    fs::write(&report_path, text).map_err(|e| Error::io_at(&report_path, e))?;
    Ok(all_passed)
}

fn format_case(case: &CheckCase) -> String {
    format!(
        "{:<10} x {:<14}  max_rel_error {:.3e}  ({} instances)  {}",
        case.extractor,
        case.head,
        case.max_rel_error,
        case.instances,
        if case.passed() { "PASS" } else { "FAIL" }
    )
}

/// Materializes the synthetic family as the three partition CSVs and, unless
/// disabled, verifies they are disjoint and cover the pool exactly.
pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<()> {
    prepare_run_dir(config, out)?;
    if config.data_source()? != DataSource::Synthetic {
        return Err(Error::Config(
            "simulate materializes synthetic families; set data.source = synthetic".into(),
        ));
    }
    let spec = config.family_spec()?;
    let pool = synth_pool(&spec)?;
    let fractions = config.partition_fractions()?;
    let mut rng = Rng::new(substream_seed(spec.seed, role::PARTITION, 0));
    let (repr_train, task_support, task_test) = partition_pool(&pool, fractions, &mut rng)?;

    let parts = [
        (&repr_train, "pool_repr_train.csv"),
        (&task_support, "pool_task_support.csv"),
        (&task_test, "pool_task_test.csv"),
    ];
    for (part, name) in parts {
        save_pool_csv(part, &out.join(name))?;
    }

    if config.simulate_verify()? {
        verify_partitions(&pool, &[&repr_train, &task_support, &task_test])?;
        println!(
            "verify ok: partitions disjoint and exhaustive ({} + {} + {} = {} samples)",
            repr_train.len(),
            task_support.len(),
            task_test.len(),
            pool.len()
        );
    }
    for (part, name) in parts {
        println!("{}: {} samples", out.join(name).display(), part.len());
    }
    Ok(())
}

/// The three parts must recombine into the source pool exactly, as a
/// multiset of full rows.
fn verify_partitions(pool: &LabeledPool, parts: &[&LabeledPool]) -> Result<()> {
    let row_key = |pool: &LabeledPool, r: usize| -> Vec<u64> {
        let mut key = vec![pool.labels()[r] as u64];
        key.extend(pool.inputs().row(r).iter().map(|v| v.to_bits()));
        key
    };
    let mut original: Vec<Vec<u64>> = (0..pool.len()).map(|r| row_key(pool, r)).collect();
    let mut recombined: Vec<Vec<u64>> = parts
        .iter()
        .flat_map(|part| {
            (0..part.len())
                .map(|r| row_key(part, r))
                .collect::<Vec<_>>()
        })
        .collect();
    original.sort_unstable();
    recombined.sort_unstable();
    if original != recombined {
        return Err(Error::Data(
            "partition verification failed: parts do not recombine into the pool".into(),
        ));
    }
    Ok(())
}
