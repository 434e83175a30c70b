//! C ABI for the simulator.
//!
//! Every function returns a [`FedcsStatus`]; on failure the message is
//! available from [`fedcs_last_error`] on the same thread. Strings handed
//! out by the library are freed with [`fedcs_string_free`], experiments
//! with [`fedcs_experiment_free`]. No function unwinds across the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fedcs_core::config::{ExperimentConfig, RunDescriptor};
use fedcs_core::protocol::{Mode, RoundRecord};
use fedcs_core::resources::TimeBudget;
use fedcs_core::runner::execute;
use fedcs_core::selection::{greedy_select, Candidate, CandidateSet};
use fedcs_core::units::{ClientId, Megabits, MegabitsPerSecond, Seconds};
use fedcs_core::Error;

pub const FEDCS_MODE_FEDCS: u32 = 0;
pub const FEDCS_MODE_FEDLIM: u32 = 1;
pub const FEDCS_MODE_VANILLA: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FedcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    ModelError = 4,
    IoError = 5,
    OutOfRange = 6,
    /// No run has been executed on this experiment yet.
    NotRun = 7,
    Panic = 99,
}

/// Opaque experiment handle.
pub struct FedcsExperiment {
    config: ExperimentConfig,
    records: Option<Vec<RoundRecord>>,
}

/// Outcome of one simulated round.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FedcsRoundSummary {
    pub round: u32,
    pub requested: u32,
    pub selected: u32,
    pub aggregated: u32,
    pub realized_round_duration: f64,
    pub clock_after: f64,
    pub accuracy_after: f64,
}

/// A client's estimated times for one round, in seconds and Mbit/s.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FedcsCandidate {
    /// One-based client id, unique within the array.
    pub id: u32,
    pub t_ud: f64,
    pub t_ul: f64,
    pub throughput: f64,
}

/// Round deadline and fixed costs; `model_size` in Mbit.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FedcsBudget {
    pub t_round: f64,
    pub t_cs: f64,
    pub t_agg: f64,
    pub model_size: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

fn fail(status: FedcsStatus, message: impl Into<String>) -> FedcsStatus {
    set_error(message);
    status
}

fn from_error(err: Error) -> FedcsStatus {
    let status = match &err {
        Error::Parameter { .. } => FedcsStatus::InvalidArgument,
        Error::Config { .. } => FedcsStatus::ConfigError,
        Error::Model(_) => FedcsStatus::ModelError,
        Error::Io { .. } | Error::OutputExists(_) => FedcsStatus::IoError,
    };
    fail(status, err.to_string())
}

/// Runs `body`, turning panics into `Panic` and clearing stale errors on success.
fn guard(body: impl FnOnce() -> FedcsStatus) -> FedcsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(FedcsStatus::Ok) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FedcsStatus::Ok
        }
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(FedcsStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

fn mode_from(raw: u32) -> Option<Mode> {
    match raw {
        FEDCS_MODE_FEDCS => Some(Mode::FedCs),
        FEDCS_MODE_FEDLIM => Some(Mode::FedLim),
        FEDCS_MODE_VANILLA => Some(Mode::Vanilla),
        _ => None,
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn fedcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fedcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        let _ = catch_unwind(|| drop(CString::from_raw(s)));
    }
}

/// The default configuration as pretty-printed JSON. Free with
/// `fedcs_string_free`.
#[no_mangle]
pub extern "C" fn fedcs_default_config_json() -> *mut c_char {
    catch_unwind(|| into_c_string(ExperimentConfig::default().to_json_pretty()))
        .unwrap_or(ptr::null_mut())
}

/// Parses and validates a JSON configuration.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_from_json(
    json: *const c_char,
    out: *mut *mut FedcsExperiment,
) -> FedcsStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(FedcsStatus::NullPointer, "json and out must not be null");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(
                FedcsStatus::InvalidArgument,
                "configuration is not valid UTF-8",
            );
        };
        match ExperimentConfig::from_json(text) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(FedcsExperiment {
                    config,
                    records: None,
                }));
                FedcsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// An experiment with the default configuration.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_default(out: *mut *mut FedcsExperiment) -> FedcsStatus {
    guard(|| {
        if out.is_null() {
            return fail(FedcsStatus::NullPointer, "out must not be null");
        }
        *out = Box::into_raw(Box::new(FedcsExperiment {
            config: ExperimentConfig::default(),
            records: None,
        }));
        FedcsStatus::Ok
    })
}

/// Releases an experiment. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_free(experiment: *mut FedcsExperiment) {
    if !experiment.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(experiment))));
    }
}

/// Runs one simulation with the configured base settings in `mode`
/// (`FEDCS_MODE_*`) and keeps its records on the handle.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_run(
    experiment: *mut FedcsExperiment,
    mode: u32,
    seed: u64,
) -> FedcsStatus {
    guard(|| {
        let Some(exp) = experiment.as_mut() else {
            return fail(FedcsStatus::NullPointer, "experiment must not be null");
        };
        let Some(mode) = mode_from(mode) else {
            return fail(FedcsStatus::InvalidArgument, format!("unknown mode {mode}"));
        };
        let run = RunDescriptor {
            mode,
            t_round: exp.config.protocol.budget.t_round.value(),
            r: exp.config.protocol.fluctuation.r,
            partition: exp.config.data.partition,
            seed,
        };
        match execute(&exp.config, &run) {
            Ok(records) => {
                exp.records = Some(records);
                FedcsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of rounds recorded by the last run.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_round_count(
    experiment: *const FedcsExperiment,
    out: *mut usize,
) -> FedcsStatus {
    guard(|| {
        let (Some(exp), false) = (experiment.as_ref(), out.is_null()) else {
            return fail(
                FedcsStatus::NullPointer,
                "experiment and out must not be null",
            );
        };
        let Some(records) = &exp.records else {
            return fail(FedcsStatus::NotRun, "run the experiment first");
        };
        *out = records.len();
        FedcsStatus::Ok
    })
}

/// Summary of round `index` of the last run.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_round(
    experiment: *const FedcsExperiment,
    index: usize,
    out: *mut FedcsRoundSummary,
) -> FedcsStatus {
    guard(|| {
        let (Some(exp), false) = (experiment.as_ref(), out.is_null()) else {
            return fail(
                FedcsStatus::NullPointer,
                "experiment and out must not be null",
            );
        };
        let Some(records) = &exp.records else {
            return fail(FedcsStatus::NotRun, "run the experiment first");
        };
        let Some(r) = records.get(index) else {
            return fail(
                FedcsStatus::OutOfRange,
                format!("round {index} of {}", records.len()),
            );
        };
        *out = FedcsRoundSummary {
            round: r.round,
            requested: r.requested.len() as u32,
            selected: r.selected.len() as u32,
            aggregated: r.aggregated_count as u32,
            realized_round_duration: r.realized_round_duration.value(),
            clock_after: r.clock_after.value(),
            accuracy_after: r.accuracy_after,
        };
        FedcsStatus::Ok
    })
}

/// All records of the last run as JSON lines. Free with `fedcs_string_free`.
#[no_mangle]
pub unsafe extern "C" fn fedcs_experiment_records_jsonl(
    experiment: *const FedcsExperiment,
    out: *mut *mut c_char,
) -> FedcsStatus {
    guard(|| {
        let (Some(exp), false) = (experiment.as_ref(), out.is_null()) else {
            return fail(
                FedcsStatus::NullPointer,
                "experiment and out must not be null",
            );
        };
        *out = ptr::null_mut();
        let Some(records) = &exp.records else {
            return fail(FedcsStatus::NotRun, "run the experiment first");
        };
        let mut buf = Vec::new();
        fedcs_core::protocol::write_records_jsonl(records, &mut buf).expect("writing to memory");
        *out = into_c_string(String::from_utf8(buf).expect("JSON is UTF-8"));
        FedcsStatus::Ok
    })
}

/// Greedy client selection over `len` candidates.
///
/// Writes the chosen ids in upload order to `out_ids` (capacity at least
/// `len`), their number to `out_count`, and the estimated round time to
/// `out_total`.
#[no_mangle]
pub unsafe extern "C" fn fedcs_greedy_select(
    candidates: *const FedcsCandidate,
    len: usize,
    budget: *const FedcsBudget,
    out_ids: *mut u32,
    out_count: *mut usize,
    out_total: *mut f64,
) -> FedcsStatus {
    guard(|| {
        if (candidates.is_null() && len > 0)
            || budget.is_null()
            || out_count.is_null()
            || out_total.is_null()
        {
            return fail(FedcsStatus::NullPointer, "null argument");
        }
        if out_ids.is_null() && len > 0 {
            return fail(FedcsStatus::NullPointer, "out_ids must not be null");
        }
        let raw = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(candidates, len)
        };
        let b = &*budget;
        let parsed: Result<(Vec<Candidate>, TimeBudget), Error> = (|| {
            let clients = raw
                .iter()
                .map(|c| {
                    Ok(Candidate {
                        id: ClientId::new(c.id)?,
                        t_ud: Seconds::new(c.t_ud)?,
                        t_ul: Seconds::new(c.t_ul)?,
                        throughput: MegabitsPerSecond::new(c.throughput)?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let t_round = Seconds::new(b.t_round)?;
            let budget = TimeBudget {
                t_round,
                t_final: t_round,
                t_cs: Seconds::new(b.t_cs)?,
                t_agg: Seconds::new(b.t_agg)?,
                model_size: Megabits::new(b.model_size)?,
                ..TimeBudget::default()
            };
            budget.validate()?;
            Ok((clients, budget))
        })();
        let (clients, budget) = match parsed {
            Ok(v) => v,
            Err(e) => return from_error(e),
        };
        if clients.iter().any(|c| c.throughput.value() <= 0.0) {
            return fail(FedcsStatus::InvalidArgument, "throughput must be > 0");
        }
        let set = match CandidateSet::new(clients) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let schedule = greedy_select(&set, &budget);
        for (i, id) in schedule.order.iter().enumerate() {
            *out_ids.add(i) = id.get();
        }
        *out_count = schedule.len();
        *out_total = schedule.total_time.value();
        FedcsStatus::Ok
    })
}
