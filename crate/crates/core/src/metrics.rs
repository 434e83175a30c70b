//! Post-processing of round records: time of arrival at an accuracy,
//! final accuracy and clients-per-round statistics across runs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::protocol::RoundRecord;
use crate::units::Seconds;

/// Clock of the first record whose accuracy reaches `threshold`.
pub fn time_of_arrival(records: &[RoundRecord], threshold: f64) -> Option<Seconds> {
    records
        .iter()
        .find(|r| r.accuracy_after >= threshold)
        .map(|r| r.clock_after)
}

/// Statistics of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Time of arrival per threshold, in the order the thresholds were given.
    pub toa: Vec<Option<f64>>,
    pub final_accuracy: f64,
    /// Aggregated clients per round over all rounds.
    pub mean_clients_per_round: f64,
    /// Same, counting only rounds that aggregated at least one update.
    pub mean_clients_per_nonempty_round: Option<f64>,
    pub total_clients_selected: usize,
    pub rounds_completed: usize,
}

impl RunSummary {
    pub fn from_records(records: &[RoundRecord], thresholds: &[f64]) -> Self {
        let counts: Vec<f64> = records.iter().map(|r| r.aggregated_count as f64).collect();
        let nonempty: Vec<f64> = counts.iter().copied().filter(|&c| c > 0.0).collect();
        Self {
            toa: thresholds
                .iter()
                .map(|&t| time_of_arrival(records, t).map(Seconds::value))
                .collect(),
            final_accuracy: records.last().map_or(0.0, |r| r.accuracy_after),
            mean_clients_per_round: MeanStd::of(&counts).mean,
            mean_clients_per_nonempty_round: (!nonempty.is_empty())
                .then(|| MeanStd::of(&nonempty).mean),
            total_clients_selected: records.iter().map(|r| r.aggregated_count).sum(),
            rounds_completed: records.len(),
        }
    }
}

/// Mean and population standard deviation.
///
/// Values are sorted and summed as offsets from the smallest one, so the
/// result does not depend on input order and identical values give an
/// exact mean with zero spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let base = sorted[0];
        let mean = base + sorted.iter().map(|v| v - base).sum::<f64>() / n;
        let mut dev: Vec<f64> = sorted.iter().map(|v| (v - mean) * (v - mean)).collect();
        dev.sort_by(f64::total_cmp);
        Self {
            mean,
            std: (dev.iter().sum::<f64>() / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToaSummary {
    pub threshold: f64,
    /// Mean over all runs; absent if any run never reached the threshold.
    pub mean: Option<f64>,
    /// Mean over the runs that did reach it.
    pub mean_successful: Option<f64>,
    pub std_successful: Option<f64>,
    pub successes: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub toa: Vec<ToaSummary>,
    pub final_accuracy: MeanStd,
    pub mean_clients_per_round: MeanStd,
    /// Over runs with at least one non-empty round.
    pub mean_clients_per_nonempty_round: Option<MeanStd>,
    pub total_clients_selected: MeanStd,
    pub rounds_completed: MeanStd,
}

/// Aggregates several runs. Returns the summary and the per-run table in
/// input order.
pub fn summarize<R: AsRef<[RoundRecord]>>(
    runs: &[R],
    thresholds: &[f64],
) -> (ExperimentSummary, Vec<RunSummary>) {
    let table: Vec<RunSummary> = runs
        .iter()
        .map(|r| RunSummary::from_records(r.as_ref(), thresholds))
        .collect();
    (summarize_table(&table, thresholds), table)
}

/// Aggregates already computed per-run statistics.
pub fn summarize_table(table: &[RunSummary], thresholds: &[f64]) -> ExperimentSummary {
    let column =
        |f: &dyn Fn(&RunSummary) -> f64| MeanStd::of(&table.iter().map(f).collect::<Vec<_>>());
    let toa = thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let reached: Vec<f64> = table.iter().filter_map(|r| r.toa[i]).collect();
            let stats = (!reached.is_empty()).then(|| MeanStd::of(&reached));
            ToaSummary {
                threshold,
                mean: stats
                    .filter(|_| reached.len() == table.len())
                    .map(|s| s.mean),
                mean_successful: stats.map(|s| s.mean),
                std_successful: stats.map(|s| s.std),
                successes: reached.len(),
                runs: table.len(),
            }
        })
        .collect();
    let nonempty: Vec<f64> = table
        .iter()
        .filter_map(|r| r.mean_clients_per_nonempty_round)
        .collect();
    ExperimentSummary {
        toa,
        final_accuracy: column(&|r| r.final_accuracy),
        mean_clients_per_round: column(&|r| r.mean_clients_per_round),
        mean_clients_per_nonempty_round: (!nonempty.is_empty()).then(|| MeanStd::of(&nonempty)),
        total_clients_selected: column(&|r| r.total_clients_selected as f64),
        rounds_completed: column(&|r| r.rounds_completed as f64),
    }
}

/// Renders an optional time; unreached thresholds print as `NaN`.
pub fn format_toa(toa: Option<f64>) -> String {
    toa.map_or_else(|| "NaN".to_string(), |t| format!("{t}"))
}

/// Accuracy curve with columns `clock_seconds,accuracy,clients_selected`,
/// where the last column counts aggregated updates.
pub fn write_curve_csv<W: Write>(records: &[RoundRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "clock_seconds,accuracy,clients_selected")?;
    for r in records {
        writeln!(
            out,
            "{},{},{}",
            r.clock_after.value(),
            r.accuracy_after,
            r.aggregated_count
        )?;
    }
    Ok(())
}
