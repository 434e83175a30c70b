//! Deadline-constrained client scheduling.
//!
//! Selected clients upload one after another on the allocated resource
//! blocks while every selected client trains in parallel from the moment
//! the model is delivered. For an upload order `k_1..k_n` the elapsed time
//! until client `k_i` has finished is
//!
//! ```text
//! theta_0 = 0
//! theta_i = T_ud(i) + T_ul(i)
//! T_ud(i) = sum_{j<=i} max(0, t_ud(k_j) - theta_{j-1})
//! T_ul(i) = sum_{j<=i} t_ul(k_j)
//! ```
//!
//! A schedule is feasible when `t_cs + dist + theta_n + t_agg <= t_round`,
//! where `dist = D_m / min theta_k` is the multicast delivery time to the
//! slowest selected client.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources::TimeBudget;
use crate::rng::RngStream;
use crate::units::{ClientId, Megabits, MegabitsPerSecond, Seconds};

/// Largest candidate set the oracle accepts.
pub const ORACLE_MAX_CANDIDATES: usize = 10;
/// Up to this size the oracle tries every ordering of every subset.
pub const ORACLE_EXHAUSTIVE_LIMIT: usize = 8;
const ORACLE_SAMPLED_ORDERS: usize = 32;

/// Resource information a client reports when asked to participate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: ClientId,
    pub t_ud: Seconds,
    pub t_ul: Seconds,
    pub throughput: MegabitsPerSecond,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    clients: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(clients: Vec<Candidate>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &clients {
            if !seen.insert(c.id) {
                return Err(Error::param(
                    "candidates",
                    format!("duplicate client {}", c.id),
                ));
            }
        }
        Ok(Self { clients })
    }

    pub fn clients(&self) -> &[Candidate] {
        &self.clients
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }
}

/// Running evaluation of the elapsed-time recursion; each push is O(1).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThetaTracker {
    update_wait: f64,
    upload_sum: f64,
}

impl ThetaTracker {
    pub fn theta(&self) -> Seconds {
        Seconds::from_raw(self.update_wait + self.upload_sum)
    }

    /// The elapsed time if a client with these times were appended.
    pub fn peek(&self, t_ud: Seconds, t_ul: Seconds) -> Seconds {
        let theta = self.update_wait + self.upload_sum;
        Seconds::from_raw(theta + (t_ud.value() - theta).max(0.0) + t_ul.value())
    }

    pub fn push(&mut self, t_ud: Seconds, t_ul: Seconds) -> Seconds {
        let theta = self.update_wait + self.upload_sum;
        self.update_wait += (t_ud.value() - theta).max(0.0);
        self.upload_sum += t_ul.value();
        self.theta()
    }
}

/// `theta_0..theta_n` for the given upload order.
pub fn elapsed_theta(order: &[Candidate]) -> Vec<Seconds> {
    let mut tracker = ThetaTracker::default();
    std::iter::once(Seconds::ZERO)
        .chain(order.iter().map(|c| tracker.push(c.t_ud, c.t_ul)))
        .collect()
}

/// The deadline constraint, inclusive.
pub fn feasible(schedule_total: Seconds, budget: &TimeBudget) -> bool {
    schedule_total.value() <= budget.t_round.value()
}

/// Multicast delivery time to the slowest selected client; zero when
/// nobody is selected.
pub fn dist_time(selected: &[Candidate], model_size: Megabits) -> Seconds {
    min_throughput(selected).map_or(Seconds::ZERO, |theta| model_size / theta)
}

fn min_throughput(selected: &[Candidate]) -> Option<MegabitsPerSecond> {
    selected
        .iter()
        .map(|c| c.throughput)
        .min_by(|a, b| a.value().total_cmp(&b.value()))
}

fn dist_for(min_theta: f64, model_size: Megabits) -> f64 {
    if min_theta.is_infinite() {
        0.0
    } else {
        model_size.value() / min_theta
    }
}

/// An ordered selection together with its estimated timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub order: Vec<ClientId>,
    pub theta: Vec<Seconds>,
    pub dist_time: Seconds,
    pub total_time: Seconds,
    pub clients: Vec<Candidate>,
}

impl Schedule {
    pub fn empty(budget: &TimeBudget) -> Self {
        Self::evaluate(Vec::new(), budget)
    }

    /// Computes the timeline of `clients` uploaded in the given order.
    pub fn evaluate(clients: Vec<Candidate>, budget: &TimeBudget) -> Self {
        let theta = elapsed_theta(&clients);
        let dist_time = dist_time(&clients, budget.model_size);
        let last = *theta.last().expect("theta has at least theta_0");
        Self {
            order: clients.iter().map(|c| c.id).collect(),
            total_time: budget.t_cs + dist_time + last + budget.t_agg,
            theta,
            dist_time,
            clients,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedules serialize")
    }
}

/// Greedy client selection.
///
/// Repeatedly takes the remaining candidate with the smallest marginal time
/// `dist(S + k) - dist(S) + t_ul(k) + max(0, t_ud(k) - theta)`, removes it
/// from the pool, and keeps it only if the round would still end strictly
/// before the deadline. A rejected candidate is never reconsidered. Ties go
/// to the lower client id.
pub fn greedy_select(candidates: &CandidateSet, budget: &TimeBudget) -> Schedule {
    let mut pool: Vec<Candidate> = candidates.clients().to_vec();
    pool.sort_by_key(|c| c.id);

    let mut selected = Vec::new();
    let mut tracker = ThetaTracker::default();
    let mut min_theta = f64::INFINITY;
    let overhead = budget.overhead().value();

    while !pool.is_empty() {
        let theta = tracker.theta().value();
        let dist_now = dist_for(min_theta, budget.model_size);
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (i, c) in pool.iter().enumerate() {
            let dist_with = dist_for(min_theta.min(c.throughput.value()), budget.model_size);
            let cost = dist_with - dist_now + c.t_ul.value() + (c.t_ud.value() - theta).max(0.0);
            if cost < best_cost {
                best = i;
                best_cost = cost;
            }
        }
        let x = pool.remove(best);
        let new_min = min_theta.min(x.throughput.value());
        let theta_next = tracker.peek(x.t_ud, x.t_ul).value();
        let t = overhead + dist_for(new_min, budget.model_size) + theta_next;
        if t < budget.t_round.value() {
            tracker.push(x.t_ud, x.t_ul);
            min_theta = new_min;
            selected.push(x);
        }
    }
    Schedule::evaluate(selected, budget)
}

/// Maximum-cardinality feasible schedule by enumeration.
///
/// Subset sizes are tried from largest to smallest. Up to
/// [`ORACLE_EXHAUSTIVE_LIMIT`] candidates every ordering is searched in
/// lexicographic id order, so the result is the lexicographically smallest
/// optimal order. Above that limit each subset is tried in
/// earliest-update-first order plus a fixed-seed sample of other orders.
pub fn oracle_select(candidates: &CandidateSet, budget: &TimeBudget) -> Result<Schedule> {
    let n = candidates.len();
    if n > ORACLE_MAX_CANDIDATES {
        return Err(Error::param(
            "candidates",
            format!("oracle accepts at most {ORACLE_MAX_CANDIDATES} candidates, got {n}"),
        ));
    }
    let mut pool: Vec<Candidate> = candidates.clients().to_vec();
    pool.sort_by_key(|c| c.id);

    for size in (1..=n).rev() {
        let found = if n <= ORACLE_EXHAUSTIVE_LIMIT {
            let mut search = OrderSearch {
                pool: &pool,
                budget,
                target: size,
                used: vec![false; n],
                prefix: Vec::with_capacity(size),
            };
            search.descend(ThetaTracker::default(), f64::INFINITY)
        } else {
            sampled_subset_search(&pool, size, budget)
        };
        if let Some(order) = found {
            return Ok(Schedule::evaluate(order, budget));
        }
    }
    Ok(Schedule::empty(budget))
}

struct OrderSearch<'a> {
    pool: &'a [Candidate],
    budget: &'a TimeBudget,
    target: usize,
    used: Vec<bool>,
    prefix: Vec<Candidate>,
}

impl OrderSearch<'_> {
    fn descend(&mut self, tracker: ThetaTracker, min_theta: f64) -> Option<Vec<Candidate>> {
        if self.prefix.len() == self.target {
            return Some(self.prefix.clone());
        }
        for i in 0..self.pool.len() {
            if self.used[i] {
                continue;
            }
            let c = self.pool[i];
            let mut next = tracker;
            next.push(c.t_ud, c.t_ul);
            let next_min = min_theta.min(c.throughput.value());
            let total = self.budget.overhead().value()
                + dist_for(next_min, self.budget.model_size)
                + next.theta().value();
            // theta and dist only grow as clients are appended
            if total > self.budget.t_round.value() {
                continue;
            }
            self.used[i] = true;
            self.prefix.push(c);
            if let Some(found) = self.descend(next, next_min) {
                return Some(found);
            }
            self.prefix.pop();
            self.used[i] = false;
        }
        None
    }
}

fn sampled_subset_search(
    pool: &[Candidate],
    size: usize,
    budget: &TimeBudget,
) -> Option<Vec<Candidate>> {
    let mut rng = RngStream::new(0, "oracle");
    let mut indices: Vec<usize> = (0..size).collect();
    loop {
        let subset: Vec<Candidate> = indices.iter().map(|&i| pool[i]).collect();
        let mut ordered = subset.clone();
        ordered.sort_by(|a, b| {
            a.t_ud
                .value()
                .total_cmp(&b.t_ud.value())
                .then(a.id.cmp(&b.id))
        });
        if feasible(
            Schedule::evaluate(ordered.clone(), budget).total_time,
            budget,
        ) {
            return Some(ordered);
        }
        for _ in 0..ORACLE_SAMPLED_ORDERS {
            ordered.shuffle(&mut rng);
            if feasible(
                Schedule::evaluate(ordered.clone(), budget).total_time,
                budget,
            ) {
                return Some(ordered);
            }
        }
        if !next_combination(&mut indices, pool.len()) {
            return None;
        }
    }
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
