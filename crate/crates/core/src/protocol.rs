//! Round engines for deadline-scheduled, deadline-limited and unlimited
//! federated learning on a simulated clock.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{GlobalModel, Participant, Trainer};
use crate::resources::{realized_times, ClientProfile, FluctuationConfig, TimeBudget};
use crate::rng::{labels, RngStream};
use crate::selection::{greedy_select, Candidate, CandidateSet, Schedule, ThetaTracker};
use crate::units::{ClientId, Seconds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Resource request, greedy scheduling, then scheduled uploads.
    #[serde(rename = "fedcs")]
    FedCs,
    /// Random clients, late uploads discarded at the deadline.
    #[serde(rename = "fedlim")]
    FedLim,
    /// Random clients, the round waits for everyone.
    #[serde(rename = "vanilla")]
    Vanilla,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::FedCs, Mode::FedLim, Mode::Vanilla];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FedCs => "fedcs",
            Mode::FedLim => "fedlim",
            Mode::Vanilla => "vanilla",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("mode", format!("unknown mode {s:?}")))
    }
}

/// What happens when realized times overrun a FedCS schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatePolicy {
    /// The round stretches until the last scheduled upload lands.
    #[default]
    Extend,
    /// The round ends at the deadline; uploads landing later are dropped.
    Discard,
}

/// Model distribution cost charged to the random-selection baselines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineDistribution {
    #[default]
    None,
    /// Multicast at the slowest requested client's rate.
    Multicast,
}

/// Whether an upload that cannot finish by the deadline still occupies
/// the channel in the deadline-limited baseline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateUpload {
    /// The late client is cut off and the channel passes to the next one.
    #[default]
    Release,
    /// The late client keeps uploading and delays everyone behind it.
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub mode: Mode,
    pub k_total: usize,
    pub fraction: f64,
    pub budget: TimeBudget,
    pub fluctuation: FluctuationConfig,
    pub late_policy: LatePolicy,
    pub baseline_distribution: BaselineDistribution,
    pub late_upload: LateUpload,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            mode: Mode::FedCs,
            k_total: 1000,
            fraction: 0.1,
            budget: TimeBudget::default(),
            fluctuation: FluctuationConfig::default(),
            late_policy: LatePolicy::default(),
            baseline_distribution: BaselineDistribution::default(),
            late_upload: LateUpload::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_total == 0 {
            return Err(Error::param("k_total", "must be >= 1"));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::param(
                "fraction",
                format!("must lie in (0, 1], got {}", self.fraction),
            ));
        }
        FluctuationConfig::new(self.fluctuation.r).map_err(|e| e.scoped("fluctuation"))?;
        self.budget.validate().map_err(|e| e.scoped("budget"))
    }

    /// Clients asked to participate each round, `ceil(K * C)`.
    pub fn requested_per_round(&self) -> usize {
        ((self.k_total as f64 * self.fraction).ceil() as usize).clamp(1, self.k_total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopCondition {
    pub target_accuracy: Option<f64>,
    pub t_final: Seconds,
}

impl StopCondition {
    pub fn new(target_accuracy: Option<f64>, t_final: Seconds) -> Result<Self> {
        if let Some(a) = target_accuracy {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::param(
                    "target_accuracy",
                    format!("must lie in (0, 1], got {a}"),
                ));
            }
        }
        Ok(Self {
            target_accuracy,
            t_final,
        })
    }

    pub fn from_budget(budget: &TimeBudget) -> Self {
        Self {
            target_accuracy: None,
            t_final: budget.t_final,
        }
    }
}

/// Outcome of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Clients asked for resource information, ascending.
    pub requested: Vec<ClientId>,
    /// FedCS: the schedule. Baselines: every requested client, in upload order.
    pub selected: Vec<ClientId>,
    /// Clients whose update reached the aggregation, in upload order.
    pub aggregated: Vec<ClientId>,
    /// Time from round start until the last accepted upload plus overheads.
    pub realized_total: Seconds,
    /// How far the clock advanced.
    pub realized_round_duration: Seconds,
    pub clock_after: Seconds,
    pub accuracy_after: f64,
    pub aggregated_count: usize,
}

struct Streams {
    selection: RngStream,
    fluctuation: RngStream,
    upload_order: RngStream,
    training: RngStream,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            selection: RngStream::new(seed, labels::SELECTION),
            fluctuation: RngStream::new(seed, labels::FLUCTUATION),
            upload_order: RngStream::new(seed, labels::UPLOAD_ORDER),
            training: RngStream::new(seed, labels::TRAINING),
        }
    }
}

/// Mutable state of one simulation.
pub struct Simulation<'a> {
    config: ProtocolConfig,
    profiles: &'a [ClientProfile],
    trainer: &'a mut dyn Trainer,
    streams: Streams,
    model: GlobalModel,
    clock: Seconds,
    round: u32,
    accuracy: f64,
}

impl<'a> Simulation<'a> {
    pub fn new(
        config: &ProtocolConfig,
        profiles: &'a [ClientProfile],
        trainer: &'a mut dyn Trainer,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if profiles.len() != config.k_total {
            return Err(Error::param(
                "k_total",
                format!(
                    "{} profiles for k_total = {}",
                    profiles.len(),
                    config.k_total
                ),
            ));
        }
        if let Some((slot, p)) = profiles
            .iter()
            .enumerate()
            .find(|(slot, p)| p.id.slot() != *slot)
        {
            return Err(Error::param(
                "profiles",
                format!("client {} stored at slot {slot}", p.id),
            ));
        }
        let model = trainer.initial_model();
        let accuracy = trainer.accuracy(&model)?;
        Ok(Self {
            config: config.clone(),
            profiles,
            trainer,
            streams: Streams::new(seed),
            model,
            clock: Seconds::ZERO,
            round: 0,
            accuracy,
        })
    }

    pub fn clock(&self) -> Seconds {
        self.clock
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn model(&self) -> &GlobalModel {
        &self.model
    }

    /// Runs one round of the configured mode.
    pub fn step(&mut self) -> Result<RoundRecord> {
        let requested = self.resource_request();
        let realized = self.realize(&requested)?;
        let outcome = match self.config.mode {
            Mode::FedCs => self.fedcs_round(&requested, &realized),
            Mode::FedLim => self.fedlim_round(&realized),
            Mode::Vanilla => self.vanilla_round(&realized),
        };

        if !outcome.aggregated.is_empty() {
            let participants: Vec<Participant> = outcome
                .aggregated
                .iter()
                .map(|id| Participant {
                    id: *id,
                    data_count: self.profiles[id.slot()].data_count,
                })
                .collect();
            let rng = self
                .streams
                .training
                .substream(&format!("round-{}", self.round));
            self.model = self.trainer.train_round(&self.model, &participants, &rng)?;
            self.accuracy = self.trainer.accuracy(&self.model)?;
        }

        self.clock += outcome.duration;
        let record = RoundRecord {
            round: self.round,
            requested: requested.clone(),
            selected: outcome.selected,
            aggregated_count: outcome.aggregated.len(),
            aggregated: outcome.aggregated,
            realized_total: outcome.total,
            realized_round_duration: outcome.duration,
            clock_after: self.clock,
            accuracy_after: self.accuracy,
        };
        self.round += 1;
        Ok(record)
    }

    /// Draws `ceil(K * C)` distinct clients, returned in ascending id order.
    fn resource_request(&mut self) -> Vec<ClientId> {
        let m = self.config.requested_per_round();
        let mut ids: Vec<ClientId> =
            index::sample(&mut self.streams.selection, self.config.k_total, m)
                .into_iter()
                .map(|slot| self.profiles[slot].id)
                .collect();
        ids.sort_unstable();
        ids
    }

    /// Estimated and realized times of every requested client. The
    /// fluctuation draws depend only on the round and the request, so all
    /// modes see the same realizations for the same seed.
    fn realize(&mut self, requested: &[ClientId]) -> Result<Vec<(Candidate, Candidate)>> {
        let mut rng = self
            .streams
            .fluctuation
            .substream(&format!("round-{}", self.round));
        let budget = &self.config.budget;
        requested
            .iter()
            .map(|id| {
                let p = &self.profiles[id.slot()];
                let estimate = Candidate {
                    id: *id,
                    t_ud: crate::resources::estimated_update_time(p, budget),
                    t_ul: crate::resources::estimated_upload_time(p, budget)?,
                    throughput: p.mean_throughput,
                };
                let r = realized_times(p, budget, &self.config.fluctuation, &mut rng)?;
                let realized = Candidate {
                    id: *id,
                    t_ud: r.update,
                    t_ul: r.upload,
                    throughput: r.throughput,
                };
                Ok((estimate, realized))
            })
            .collect()
    }

    fn fedcs_round(
        &mut self,
        requested: &[ClientId],
        realized: &[(Candidate, Candidate)],
    ) -> Outcome {
        let budget = &self.config.budget;
        let estimates = CandidateSet::new(realized.iter().map(|(e, _)| *e).collect())
            .expect("resource request draws distinct clients");
        debug_assert_eq!(estimates.len(), requested.len());
        let schedule = greedy_select(&estimates, budget);
        if schedule.is_empty() {
            return Outcome::idle(budget.t_round);
        }
        let actual: Vec<Candidate> = schedule
            .order
            .iter()
            .map(|id| {
                realized
                    .iter()
                    .find(|(_, r)| r.id == *id)
                    .expect("scheduled client was requested")
                    .1
            })
            .collect();
        let timeline = Schedule::evaluate(actual, budget);
        match self.config.late_policy {
            LatePolicy::Extend => Outcome {
                selected: schedule.order,
                aggregated: timeline.order.clone(),
                total: timeline.total_time,
                duration: timeline.total_time.max(budget.t_round),
            },
            LatePolicy::Discard => {
                let start = budget.t_cs + timeline.dist_time;
                let limit = budget.t_round.value() - budget.t_agg.value();
                let on_time = timeline.theta[1..]
                    .iter()
                    .take_while(|theta| (start + **theta).value() <= limit)
                    .count();
                let aggregated = timeline.order[..on_time].to_vec();
                let total = if on_time == 0 {
                    Seconds::ZERO
                } else {
                    start + timeline.theta[on_time] + budget.t_agg
                };
                Outcome {
                    selected: schedule.order,
                    aggregated,
                    total,
                    duration: budget.t_round,
                }
            }
        }
    }

    fn upload_order(&mut self, realized: &[(Candidate, Candidate)]) -> Vec<Candidate> {
        let mut order: Vec<Candidate> = realized.iter().map(|(_, r)| *r).collect();
        let mut rng = self
            .streams
            .upload_order
            .substream(&format!("round-{}", self.round));
        order.shuffle(&mut rng);
        order
    }

    fn baseline_dist_time(&self, order: &[Candidate]) -> Seconds {
        match self.config.baseline_distribution {
            BaselineDistribution::None => Seconds::ZERO,
            BaselineDistribution::Multicast => {
                crate::selection::dist_time(order, self.config.budget.model_size)
            }
        }
    }

    fn fedlim_round(&mut self, realized: &[(Candidate, Candidate)]) -> Outcome {
        let order = self.upload_order(realized);
        let budget = &self.config.budget;
        let start = budget.t_cs + self.baseline_dist_time(&order);
        let limit = budget.t_round.value() - budget.t_agg.value();
        let mut tracker = ThetaTracker::default();
        let mut aggregated = Vec::new();
        let mut last_finish = None;
        for c in &order {
            let finish = start + tracker.peek(c.t_ud, c.t_ul);
            let on_time = finish.value() <= limit;
            if on_time {
                aggregated.push(c.id);
                last_finish = Some(finish);
            }
            if on_time || self.config.late_upload == LateUpload::Hold {
                tracker.push(c.t_ud, c.t_ul);
            }
        }
        Outcome {
            selected: order.iter().map(|c| c.id).collect(),
            aggregated,
            total: last_finish.map_or(Seconds::ZERO, |f| f + budget.t_agg),
            duration: budget.t_round,
        }
    }

    fn vanilla_round(&mut self, realized: &[(Candidate, Candidate)]) -> Outcome {
        let order = self.upload_order(realized);
        let budget = &self.config.budget;
        let mut tracker = ThetaTracker::default();
        for c in &order {
            tracker.push(c.t_ud, c.t_ul);
        }
        let total = budget.t_cs + self.baseline_dist_time(&order) + tracker.theta() + budget.t_agg;
        let ids: Vec<ClientId> = order.iter().map(|c| c.id).collect();
        Outcome {
            selected: ids.clone(),
            aggregated: ids,
            total,
            duration: total,
        }
    }
}

struct Outcome {
    selected: Vec<ClientId>,
    aggregated: Vec<ClientId>,
    total: Seconds,
    duration: Seconds,
}

impl Outcome {
    fn idle(t_round: Seconds) -> Self {
        Self {
            selected: Vec::new(),
            aggregated: Vec::new(),
            total: Seconds::ZERO,
            duration: t_round,
        }
    }
}

/// Runs rounds until the clock reaches `stop.t_final` or the accuracy
/// after an aggregation reaches the target.
pub fn run_experiment(
    config: &ProtocolConfig,
    stop: &StopCondition,
    profiles: &[ClientProfile],
    trainer: &mut dyn Trainer,
    seed: u64,
) -> Result<Vec<RoundRecord>> {
    let mut sim = Simulation::new(config, profiles, trainer, seed)?;
    let mut records = Vec::new();
    while sim.clock() < stop.t_final {
        let record = sim.step()?;
        let done = stop
            .target_accuracy
            .is_some_and(|t| record.accuracy_after >= t);
        records.push(record);
        if done {
            break;
        }
    }
    Ok(records)
}

/// One round of FedCS.
pub fn run_round_fedcs(sim: &mut Simulation<'_>) -> Result<RoundRecord> {
    sim.step_as(Mode::FedCs)
}

/// One round of the deadline-limited baseline.
pub fn run_round_fedlim(sim: &mut Simulation<'_>) -> Result<RoundRecord> {
    sim.step_as(Mode::FedLim)
}

/// One round without a deadline.
pub fn run_round_vanilla(sim: &mut Simulation<'_>) -> Result<RoundRecord> {
    sim.step_as(Mode::Vanilla)
}

impl Simulation<'_> {
    fn step_as(&mut self, mode: Mode) -> Result<RoundRecord> {
        let configured = std::mem::replace(&mut self.config.mode, mode);
        let record = self.step();
        self.config.mode = configured;
        record
    }
}

/// Writes records as JSON lines.
pub fn write_records_jsonl<W: std::io::Write>(
    records: &[RoundRecord],
    mut out: W,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CellConfig;
    use crate::learning::{SurrogateCurve, SurrogateTrainer};
    use crate::resources::{generate_profiles, ResourceRanges};

    fn profiles(k: usize, seed: u64) -> Vec<ClientProfile> {
        generate_profiles(
            k,
            &CellConfig::default(),
            &ResourceRanges::default(),
            &mut RngStream::new(seed, labels::PLACEMENT),
            &mut RngStream::new(seed, labels::PROFILES),
        )
        .unwrap()
    }

    fn config(mode: Mode, k: usize, t_round: f64) -> ProtocolConfig {
        let mut c = ProtocolConfig {
            mode,
            k_total: k,
            ..ProtocolConfig::default()
        };
        c.budget.t_round = Seconds::new(t_round).unwrap();
        c.budget.t_final = Seconds::new(t_round.max(24_000.0)).unwrap();
        c
    }

    fn surrogate() -> SurrogateTrainer {
        SurrogateTrainer::new(SurrogateCurve::default()).unwrap()
    }

    fn rounds(cfg: &ProtocolConfig, ps: &[ClientProfile], n: usize, seed: u64) -> Vec<RoundRecord> {
        let mut t = surrogate();
        let mut sim = Simulation::new(cfg, ps, &mut t, seed).unwrap();
        (0..n).map(|_| sim.step().unwrap()).collect()
    }

    #[test]
    fn requested_count_rounds_up() {
        let mut c = ProtocolConfig::default();
        assert_eq!(c.requested_per_round(), 100);
        c.k_total = 15;
        c.fraction = 0.1;
        assert_eq!(c.requested_per_round(), 2);
        c.fraction = 1.0;
        assert_eq!(c.requested_per_round(), 15);
    }

    #[test]
    fn fedcs_without_fluctuation_meets_its_schedule() {
        let ps = profiles(1000, 1);
        for rec in rounds(&config(Mode::FedCs, 1000, 180.0), &ps, 20, 1) {
            assert_eq!(rec.aggregated, rec.selected);
            assert!(rec.realized_total.value() <= 180.0);
            assert_eq!(rec.realized_round_duration.value(), 180.0);
            assert_eq!(rec.requested.len(), 100);
            assert!(rec.requested.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn generous_deadline_selects_everyone() {
        let ps = profiles(1000, 2);
        for mode in Mode::ALL {
            for rec in rounds(&config(mode, 1000, 1e6), &ps, 3, 2) {
                assert_eq!(rec.aggregated_count, 100, "{mode:?}");
            }
        }
    }

    #[test]
    fn impossible_deadline_yields_nothing() {
        let ps = profiles(200, 3);
        for mode in [Mode::FedCs, Mode::FedLim] {
            for rec in rounds(&config(mode, 200, 1.0), &ps, 5, 3) {
                assert_eq!(rec.aggregated_count, 0);
                assert_eq!(rec.realized_round_duration.value(), 1.0);
                assert_eq!(rec.accuracy_after, 0.0);
            }
        }
    }

    #[test]
    fn vanilla_waits_for_everyone() {
        let ps = profiles(1000, 4);
        let fedcs = rounds(&config(Mode::FedCs, 1000, 180.0), &ps, 10, 4);
        let vanilla = rounds(&config(Mode::Vanilla, 1000, 180.0), &ps, 10, 4);
        for (a, b) in fedcs.iter().zip(&vanilla) {
            assert_eq!(b.aggregated_count, 100);
            assert_eq!(a.requested, b.requested);
            assert!(b.realized_round_duration >= a.realized_round_duration);
        }
    }

    #[test]
    fn fedlim_hold_never_beats_release() {
        let ps = profiles(1000, 5);
        let release = rounds(&config(Mode::FedLim, 1000, 180.0), &ps, 30, 5);
        let mut held = config(Mode::FedLim, 1000, 180.0);
        held.late_upload = LateUpload::Hold;
        let hold = rounds(&held, &ps, 30, 5);
        for (r, h) in release.iter().zip(&hold) {
            assert_eq!(r.selected, h.selected);
            assert!(h.aggregated_count <= r.aggregated_count);
        }
    }

    #[test]
    fn fedcs_extend_keeps_every_update_under_fluctuation() {
        let ps = profiles(1000, 6);
        let mut c = config(Mode::FedCs, 1000, 180.0);
        c.fluctuation = FluctuationConfig::new(0.2).unwrap();
        let recs = rounds(&c, &ps, 30, 6);
        assert!(recs.iter().all(|r| r.aggregated == r.selected));
        assert!(recs
            .iter()
            .all(|r| r.realized_round_duration.value() >= 180.0));
        assert!(recs.iter().any(|r| r.realized_total.value() > 180.0));

        c.late_policy = LatePolicy::Discard;
        let discard = rounds(&c, &ps, 30, 6);
        for (e, d) in recs.iter().zip(&discard) {
            assert_eq!(e.selected, d.selected);
            assert!(d.aggregated.iter().zip(&e.aggregated).all(|(a, b)| a == b));
            assert!(d.realized_total.value() <= 180.0);
            assert_eq!(d.realized_round_duration.value(), 180.0);
        }
    }

    #[test]
    fn zero_final_deadline_runs_nothing() {
        let ps = profiles(100, 7);
        let mut t = surrogate();
        let stop = StopCondition::new(None, Seconds::ZERO).unwrap();
        let recs = run_experiment(&config(Mode::FedCs, 100, 180.0), &stop, &ps, &mut t, 7).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn stops_at_target_or_deadline() {
        let ps = profiles(1000, 8);
        let cfg = config(Mode::FedCs, 1000, 180.0);
        let stop = StopCondition::new(Some(0.3), cfg.budget.t_final).unwrap();
        let recs = run_experiment(&cfg, &stop, &ps, &mut surrogate(), 8).unwrap();
        let last = recs.last().unwrap();
        assert!(last.accuracy_after >= 0.3 || last.clock_after >= stop.t_final);
        assert!(recs[..recs.len() - 1]
            .iter()
            .all(|r| r.accuracy_after < 0.3));

        let full = run_experiment(
            &cfg,
            &StopCondition::from_budget(&cfg.budget),
            &ps,
            &mut surrogate(),
            8,
        )
        .unwrap();
        assert!(full.windows(2).all(|w| w[0].clock_after < w[1].clock_after));
        let last = full.last().unwrap();
        assert!(last.clock_after.value() >= 24_000.0);
        assert!(last.clock_after.value() - last.realized_round_duration.value() < 24_000.0);
    }

    #[test]
    fn explicit_round_functions_override_mode() {
        let ps = profiles(1000, 9);
        let mut t = surrogate();
        let mut sim = Simulation::new(&config(Mode::FedCs, 1000, 180.0), &ps, &mut t, 9).unwrap();
        let rec = run_round_vanilla(&mut sim).unwrap();
        assert_eq!(rec.aggregated_count, 100);
        let rec = run_round_fedlim(&mut sim).unwrap();
        assert_eq!(rec.realized_round_duration.value(), 180.0);
        let rec = run_round_fedcs(&mut sim).unwrap();
        assert_eq!(rec.round, 2);
    }

    #[test]
    fn mismatched_population_is_rejected() {
        let ps = profiles(10, 10);
        let mut t = surrogate();
        assert!(Simulation::new(&config(Mode::FedCs, 11, 180.0), &ps, &mut t, 0).is_err());
        let mut bad = config(Mode::FedCs, 10, 180.0);
        bad.fraction = 1.5;
        assert!(Simulation::new(&bad, &ps, &mut t, 0).is_err());
    }

    #[test]
    fn records_serialize_one_per_line() {
        let ps = profiles(100, 11);
        let recs = rounds(&config(Mode::FedCs, 100, 180.0), &ps, 3, 11);
        let mut buf = Vec::new();
        write_records_jsonl(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let back: RoundRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, recs[0]);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.as_str())
            );
        }
        assert!("fedavg".parse::<Mode>().is_err());
    }
}
