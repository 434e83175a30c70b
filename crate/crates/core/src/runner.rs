//! Builds simulations from a configuration and writes their outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, RunDescriptor};
use crate::error::{Error, Result};
use crate::learning::{
    partition_dataset, Dataset, Mlp, NativeTrainer, SurrogateTrainer, Trainer, TrainerKind,
};
use crate::metrics::{self, ExperimentSummary, RunSummary};
use crate::protocol::{run_experiment, RoundRecord, StopCondition};
use crate::resources::{generate_profiles, ClientProfile};
use crate::rng::{labels, RngStream};

/// Client population for a seed; identical across modes and sweep values.
pub fn build_profiles(config: &ExperimentConfig, seed: u64) -> Result<Vec<ClientProfile>> {
    generate_profiles(
        config.protocol.k_total,
        &config.cell,
        &config.ranges,
        &mut RngStream::new(seed, labels::PLACEMENT),
        &mut RngStream::new(seed, labels::PROFILES),
    )
}

fn load_data(config: &ExperimentConfig, seed: u64) -> Result<(Dataset, Dataset)> {
    match (&config.data.train_path, &config.data.test_path) {
        (Some(train), Some(test)) => Ok((Dataset::load(train)?, Dataset::load(test)?)),
        _ => {
            let s = &config.data.synthetic;
            let mut rng = RngStream::new(seed, labels::DATASET);
            Dataset::synthetic_blobs(
                s.n_train + s.n_test,
                s.n_features,
                s.n_classes,
                s.separation,
                &mut rng,
            )?
            .split_at(s.n_train)
        }
    }
}

pub fn build_trainer(
    config: &ExperimentConfig,
    run: &RunDescriptor,
    profiles: &[ClientProfile],
) -> Result<Box<dyn Trainer>> {
    match config.trainer.kind {
        TrainerKind::Surrogate => Ok(Box::new(SurrogateTrainer::new(config.trainer.surrogate)?)),
        TrainerKind::Native => {
            let (train, test) = load_data(config, run.seed)?;
            let partition = partition_dataset(
                &train,
                profiles,
                run.partition,
                config.data.classes_per_client,
                &mut RngStream::new(run.seed, labels::PARTITION),
            )?;
            let arch = Mlp::new(
                train.n_features(),
                &config.trainer.hidden,
                train.n_classes(),
            )?;
            let trainer = NativeTrainer::new(
                arch,
                train,
                test,
                partition,
                config.trainer.spec(config.protocol.budget.epochs_per_round),
                config.trainer.aggregation,
                &mut RngStream::new(run.seed, labels::INIT),
            )?;
            Ok(Box::new(trainer))
        }
    }
}

/// Runs one descriptor to completion and returns its records.
pub fn execute(config: &ExperimentConfig, run: &RunDescriptor) -> Result<Vec<RoundRecord>> {
    let protocol = config.protocol_for(run)?;
    let profiles = build_profiles(config, run.seed)?;
    let mut trainer = build_trainer(config, run, &profiles)?;
    let stop = StopCondition::new(config.target_accuracy, protocol.budget.t_final)?;
    run_experiment(&protocol, &stop, &profiles, trainer.as_mut(), run.seed)
}

#[derive(Debug, Clone, Serialize)]
struct FileHeader<'a> {
    config_hash: &'a str,
    seed: u64,
    run: &'a str,
}

/// JSON-lines records preceded by a header line.
pub fn render_records(records: &[RoundRecord], config_hash: &str, run: &RunDescriptor) -> Vec<u8> {
    let header = FileHeader {
        config_hash,
        seed: run.seed,
        run: &run.name(),
    };
    let mut out =
        serde_json::to_vec(&serde_json::json!({ "header": header })).expect("headers serialize");
    out.push(b'\n');
    crate::protocol::write_records_jsonl(records, &mut out).expect("writing to memory");
    out
}

/// Accuracy curve CSV preceded by a `#` header line.
pub fn render_curve(records: &[RoundRecord], config_hash: &str, run: &RunDescriptor) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(
        out,
        "# config_hash={config_hash} seed={} run={}",
        run.seed,
        run.name()
    )
    .expect("writing to memory");
    metrics::write_curve_csv(records, &mut out).expect("writing to memory");
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub run: String,
    pub seed: u64,
    #[serde(flatten)]
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub descriptor: RunDescriptor,
    pub summary: ExperimentSummary,
    pub runs: Vec<RunRow>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailure {
    pub run: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub thresholds: Vec<f64>,
    pub groups: Vec<GroupSummary>,
}

impl SweepSummary {
    pub fn failures(&self) -> impl Iterator<Item = &RunFailure> {
        self.groups.iter().flat_map(|g| g.failures.iter())
    }
}

/// A descriptor and its records, or the error that stopped it.
pub type RunResult = (RunDescriptor, Result<Vec<RoundRecord>>);

/// Runs every descriptor without touching the filesystem.
pub fn run_all(
    config: &ExperimentConfig,
    parallelism: usize,
) -> Result<(SweepSummary, Vec<RunResult>)> {
    let runs = config.descriptors();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::param("parallelism", e.to_string()))?;
    let results: Vec<RunResult> = pool.install(|| {
        runs.par_iter()
            .map(|run| (*run, execute(config, run)))
            .collect()
    });
    let summary = summarize_sweep(config, &results);
    Ok((summary, results))
}

fn summarize_sweep(config: &ExperimentConfig, results: &[RunResult]) -> SweepSummary {
    let mut groups: BTreeMap<String, (RunDescriptor, Vec<RunRow>, Vec<RunFailure>)> =
        BTreeMap::new();
    let mut order = Vec::new();
    for (run, result) in results {
        let entry = groups.entry(run.group()).or_insert_with(|| {
            order.push(run.group());
            (*run, Vec::new(), Vec::new())
        });
        match result {
            Ok(records) => entry.1.push(RunRow {
                run: run.name(),
                seed: run.seed,
                summary: RunSummary::from_records(records, &config.thresholds),
            }),
            Err(e) => entry.2.push(RunFailure {
                run: run.name(),
                error: e.to_string(),
            }),
        }
    }
    let groups = order
        .into_iter()
        .map(|name| {
            let (descriptor, runs, failures) = groups.remove(&name).expect("group recorded");
            let table: Vec<RunSummary> = runs.iter().map(|r| r.summary.clone()).collect();
            GroupSummary {
                summary: metrics::summarize_table(&table, &config.thresholds),
                group: name,
                descriptor,
                runs,
                failures,
            }
        })
        .collect();
    SweepSummary {
        config_hash: config.hash(),
        seeds: config.seeds.clone(),
        thresholds: config.thresholds.clone(),
        groups,
    }
}

/// Options of a sweep written to disk.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub force: bool,
    pub parallelism: usize,
}

/// Runs the sweep and writes `records-<run>.jsonl`, `curve-<run>.csv` and
/// `summary.json` into the output directory. Refuses an existing directory
/// unless `force` is set. A failing run is reported in the summary and
/// does not stop the others.
pub fn run_to_dir(config: &ExperimentConfig, options: &RunOptions) -> Result<SweepSummary> {
    config.validate()?;
    if options.out_dir.exists() && !options.force {
        return Err(Error::OutputExists(options.out_dir.clone()));
    }
    let (summary, results) = run_all(config, options.parallelism)?;
    fs::create_dir_all(&options.out_dir).map_err(|e| Error::io(&options.out_dir, e))?;
    let hash = &summary.config_hash;
    for (run, result) in &results {
        if let Ok(records) = result {
            let name = run.name();
            write_atomic(
                &options.out_dir.join(format!("records-{name}.jsonl")),
                &render_records(records, hash, run),
            )?;
            write_atomic(
                &options.out_dir.join(format!("curve-{name}.csv")),
                &render_curve(records, hash, run),
            )?;
        }
    }
    let mut json = serde_json::to_vec_pretty(&summary).expect("summaries serialize");
    json.push(b'\n');
    write_atomic(&options.out_dir.join("summary.json"), &json)?;
    Ok(summary)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Mode;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "protocol": {"k_total": 200, "budget": {"t_final": 3600}},
                "seeds": [1, 2],
                "sweep": {"modes": ["fedcs", "fedlim"]}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn writes_every_artifact_with_headers() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let config = small_config();
        let options = RunOptions {
            out_dir: out.clone(),
            force: false,
            parallelism: 2,
        };
        let summary = run_to_dir(&config, &options).unwrap();
        assert_eq!(summary.groups.len(), 2);
        assert_eq!(summary.failures().count(), 0);
        let hash = config.hash();
        for run in config.descriptors() {
            let records =
                fs::read_to_string(out.join(format!("records-{}.jsonl", run.name()))).unwrap();
            let header = records.lines().next().unwrap();
            assert!(header.contains(&hash) && header.contains(&format!("\"seed\":{}", run.seed)));
            let curve = fs::read_to_string(out.join(format!("curve-{}.csv", run.name()))).unwrap();
            assert!(curve.starts_with(&format!("# config_hash={hash} seed={}", run.seed)));
            assert_eq!(
                curve.lines().nth(1).unwrap(),
                "clock_seconds,accuracy,clients_selected"
            );
        }
        let summary_text = fs::read_to_string(out.join("summary.json")).unwrap();
        assert!(summary_text.contains(&hash));
        assert!(fs::read_dir(&out).unwrap().all(|e| !e
            .unwrap()
            .file_name()
            .to_string_lossy()
            .ends_with(".tmp")));
    }

    #[test]
    fn existing_output_needs_force() {
        let dir = tempfile::tempdir().unwrap();
        let options = RunOptions {
            out_dir: dir.path().to_path_buf(),
            force: false,
            parallelism: 1,
        };
        assert!(matches!(
            run_to_dir(&small_config(), &options),
            Err(Error::OutputExists(_))
        ));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
        let forced = RunOptions {
            force: true,
            ..options
        };
        run_to_dir(&small_config(), &forced).unwrap();
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let config = small_config();
        let (a, ra) = run_all(&config, 1).unwrap();
        let (b, rb) = run_all(&config, 4).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        for ((_, x), (_, y)) in ra.iter().zip(&rb) {
            assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
        }
    }

    #[test]
    fn failing_run_is_reported_not_fatal() {
        let mut config = small_config();
        config.trainer.kind = TrainerKind::Native;
        config.data.train_path = Some("/nonexistent/train.csv".into());
        config.data.test_path = Some("/nonexistent/test.csv".into());
        config.sweep.modes = vec![Mode::FedCs];
        let (summary, _) = run_all(&config, 1).unwrap();
        assert_eq!(summary.failures().count(), 2);
    }

    #[test]
    fn native_runs_learn() {
        let config = ExperimentConfig::from_json(
            r#"{
                "protocol": {"k_total": 100, "fraction": 0.2, "budget": {"t_round": 600, "t_final": 3000}},
                "trainer": {"kind": "native"},
                "data": {"synthetic": {"n_train": 2000, "n_test": 500, "n_features": 8, "separation": 1.5}},
                "seeds": [5]
            }"#,
        )
        .unwrap();
        let run = config.descriptors()[0];
        let records = execute(&config, &run).unwrap();
        let last = records.last().unwrap();
        assert!(
            last.accuracy_after > 0.5,
            "accuracy {}",
            last.accuracy_after
        );
    }
}
