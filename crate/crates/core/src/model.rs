//! Domain types and closed-form performance model.
//!
//! Conventions used throughout the workspace: time in seconds, payloads in
//! bits, link rates in bits/s, computing loads in GFLOP and computing speeds
//! in GFLOPS. A task is offloaded as one or more replicas; the round trip of
//! a replica on vehicle `j` is
//!
//! ```text
//! L = down_bits / down_rate + compute / gflops + up_bits / up_rate
//! ```
//!
//! and the vehicle returns the result in time with probability
//! `P_j(L) = exp(-reliability_rate_j * L)`, an exponential survival curve in
//! the round-trip latency. A task with replica set S fails only if every
//! replica fails, so its unreliability is `U = prod_{j in S} (1 - P_j(L_j))`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::CoreError;

/// One offloadable task: input payload, computing load and result payload,
/// plus the unreliability ceiling the scheduler must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub id: u64,
    /// Arrival timestamp, seconds.
    pub arrival_time: f64,
    /// Computing load, GFLOP. Strictly positive.
    pub compute: f64,
    /// Input payload transmitted to the vehicle, bits.
    pub down_bits: f64,
    /// Result payload transmitted back, bits.
    pub up_bits: f64,
    /// Maximum tolerated unreliability, in (0, 1].
    pub fail_threshold: f64,
}

impl TaskSpec {
    pub fn new(
        id: u64,
        arrival_time: f64,
        compute: f64,
        down_bits: f64,
        up_bits: f64,
        fail_threshold: f64,
    ) -> Result<Self, CoreError> {
        if !(compute > 0.0) || !compute.is_finite() {
            return Err(CoreError::NonPositive { what: "task compute", value: compute });
        }
        if !(down_bits >= 0.0) || !down_bits.is_finite() {
            return Err(CoreError::invalid("down_bits", format!("must be >= 0, got {down_bits}")));
        }
        if !(up_bits >= 0.0) || !up_bits.is_finite() {
            return Err(CoreError::invalid("up_bits", format!("must be >= 0, got {up_bits}")));
        }
        if !(fail_threshold > 0.0 && fail_threshold <= 1.0) {
            return Err(CoreError::invalid(
                "fail_threshold",
                format!("must be in (0, 1], got {fail_threshold}"),
            ));
        }
        if !arrival_time.is_finite() || arrival_time < 0.0 {
            return Err(CoreError::invalid(
                "arrival_time",
                format!("must be a nonnegative time, got {arrival_time}"),
            ));
        }
        Ok(TaskSpec { id, arrival_time, compute, down_bits, up_bits, fail_threshold })
    }
}

/// A compute-capable vehicle as seen by the scheduler.
///
/// `in_progress` is the set of task ids currently assigned to the vehicle and
/// not yet finished (the K_j set used for presumed allocation).
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u64,
    /// Position relative to the ego vehicle, meters.
    pub position: [f64; 2],
    /// Velocity relative to the ego vehicle, m/s.
    pub velocity: [f64; 2],
    /// Computing capacity, GFLOPS. Strictly positive.
    pub capacity: f64,
    /// Decay constant of the reliability curve, 1/s. Strictly positive for
    /// passing-by vehicles; the ego's own record uses 0 (never drives away
    /// from itself, so P = 1 at any latency).
    pub reliability_rate: f64,
    pub in_progress: BTreeSet<u64>,
}

impl VehicleState {
    pub fn new(
        id: u64,
        position: [f64; 2],
        velocity: [f64; 2],
        capacity: f64,
        reliability_rate: f64,
    ) -> Result<Self, CoreError> {
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(CoreError::NonPositive { what: "vehicle capacity", value: capacity });
        }
        if !(reliability_rate > 0.0) || !reliability_rate.is_finite() {
            return Err(CoreError::NonPositive {
                what: "vehicle reliability_rate",
                value: reliability_rate,
            });
        }
        Ok(VehicleState {
            id,
            position,
            velocity,
            capacity,
            reliability_rate,
            in_progress: BTreeSet::new(),
        })
    }

    /// The ego vehicle's own record: local computation is offloading to a
    /// stationary, perfectly reliable vehicle at distance zero.
    pub fn ego(id: u64, capacity: f64) -> Result<Self, CoreError> {
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(CoreError::NonPositive { what: "vehicle capacity", value: capacity });
        }
        Ok(VehicleState {
            id,
            position: [0.0, 0.0],
            velocity: [0.0, 0.0],
            capacity,
            reliability_rate: 0.0,
            in_progress: BTreeSet::new(),
        })
    }

    pub fn distance_from_origin(&self) -> f64 {
        (self.position[0] * self.position[0] + self.position[1] * self.position[1]).sqrt()
    }
}

/// Down/up link rates for one task-vehicle pair, bits/s. Both strictly
/// positive; infinite rates are allowed and model a zero-cost local link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub down_rate: f64,
    pub up_rate: f64,
}

impl LinkRates {
    pub fn new(down_rate: f64, up_rate: f64) -> Result<Self, CoreError> {
        if !(down_rate > 0.0) {
            return Err(CoreError::NonPositive { what: "down_rate", value: down_rate });
        }
        if !(up_rate > 0.0) {
            return Err(CoreError::NonPositive { what: "up_rate", value: up_rate });
        }
        Ok(LinkRates { down_rate, up_rate })
    }

    /// The ego-to-itself link: transmission terms vanish.
    pub fn local() -> Self {
        LinkRates { down_rate: f64::INFINITY, up_rate: f64::INFINITY }
    }
}

/// Binary task-to-vehicle assignment: the set of (task id, vehicle id) pairs
/// with alpha = 1. BTreeSet keeps iteration deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pairs: BTreeSet<(u64, u64)>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn insert(&mut self, task: u64, vehicle: u64) -> bool {
        self.pairs.insert((task, vehicle))
    }

    pub fn contains(&self, task: u64, vehicle: u64) -> bool {
        self.pairs.contains(&(task, vehicle))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.pairs.iter().copied()
    }

    /// Vehicles holding a replica of `task`, ascending.
    pub fn vehicles_for(&self, task: u64) -> Vec<u64> {
        self.pairs
            .range((task, u64::MIN)..=(task, u64::MAX))
            .map(|&(_, v)| v)
            .collect()
    }

    /// Tasks with a replica on `vehicle`, ascending.
    pub fn tasks_for(&self, vehicle: u64) -> Vec<u64> {
        self.pairs.iter().filter(|&&(_, v)| v == vehicle).map(|&(t, _)| t).collect()
    }

    /// Number of replicas of `task`.
    pub fn redundancy(&self, task: u64) -> usize {
        self.pairs.range((task, u64::MIN)..=(task, u64::MAX)).count()
    }
}

impl FromIterator<(u64, u64)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (u64, u64)>>(iter: T) -> Self {
        Assignment { pairs: iter.into_iter().collect() }
    }
}

/// Computing-speed allocation g_{i,j} in GFLOPS keyed by (task, vehicle).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    entries: BTreeMap<(u64, u64), f64>,
}

impl Allocation {
    pub fn new() -> Self {
        Allocation::default()
    }

    pub fn set(&mut self, task: u64, vehicle: u64, gflops: f64) {
        self.entries.insert((task, vehicle), gflops);
    }

    pub fn get(&self, task: u64, vehicle: u64) -> Option<f64> {
        self.entries.get(&(task, vehicle)).copied()
    }

    /// Allocated speed, treating absent pairs as 0.
    pub fn rate(&self, task: u64, vehicle: u64) -> f64 {
        self.get(task, vehicle).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u64, u64), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Total speed handed out by `vehicle`.
    pub fn vehicle_total(&self, vehicle: u64) -> f64 {
        self.entries.iter().filter(|&(&(_, v), _)| v == vehicle).map(|(_, &g)| g).sum()
    }

    /// Checks that no vehicle hands out more than its capacity (within a
    /// relative tolerance for the closed form's rounding).
    pub fn respects_capacities(&self, capacities: &BTreeMap<u64, f64>) -> bool {
        let mut totals: BTreeMap<u64, f64> = BTreeMap::new();
        for (&(_, v), &g) in &self.entries {
            *totals.entry(v).or_insert(0.0) += g;
        }
        totals.iter().all(|(v, &total)| match capacities.get(v) {
            Some(&cap) => total <= cap * (1.0 + 1e-9),
            None => false,
        })
    }
}

/// Round-trip latency of one replica: download + compute + upload, seconds.
///
/// `gflops` is the computing speed granted to this replica. Nonpositive speed
/// or rates are rejected rather than producing infinities, since they signal
/// that the caller asked about an unassigned pair.
pub fn round_trip_latency(
    task: &TaskSpec,
    rates: &LinkRates,
    gflops: f64,
) -> Result<f64, CoreError> {
    if !(gflops > 0.0) {
        return Err(CoreError::NonPositive { what: "allocated gflops", value: gflops });
    }
    if !(rates.down_rate > 0.0) {
        return Err(CoreError::NonPositive { what: "down_rate", value: rates.down_rate });
    }
    if !(rates.up_rate > 0.0) {
        return Err(CoreError::NonPositive { what: "up_rate", value: rates.up_rate });
    }
    Ok(task.down_bits / rates.down_rate + task.compute / gflops + task.up_bits / rates.up_rate)
}

/// Probability that `vehicle` returns a result within latency `latency`:
/// `exp(-reliability_rate * latency)`.
pub fn reliability(vehicle: &VehicleState, latency: f64) -> Result<f64, CoreError> {
    if !(latency >= 0.0) || !latency.is_finite() {
        return Err(CoreError::NegativeLatency { value: latency });
    }
    Ok((-vehicle.reliability_rate * latency).exp())
}

/// Task unreliability over one replica row: probability that every replica
/// misses, `prod (1 - P_j(L_j))`. An empty row cannot succeed and returns 1.
pub fn task_unreliability(row: &[(&VehicleState, f64)]) -> Result<f64, CoreError> {
    let mut u = 1.0;
    for &(vehicle, latency) in row {
        u *= 1.0 - reliability(vehicle, latency)?;
    }
    Ok(u)
}

/// Same product over already-computed per-replica success probabilities.
pub fn unreliability_from_success_probs(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs.into_iter().fold(1.0, |u, p| u * (1.0 - p))
}

/// Total latency objective: sum of replica latencies over the assignment.
/// Every assigned pair must have a latency entry.
pub fn objective_p0(
    assignment: &Assignment,
    latencies: &BTreeMap<(u64, u64), f64>,
) -> Result<f64, CoreError> {
    let mut total = 0.0;
    for (task, vehicle) in assignment.iter() {
        match latencies.get(&(task, vehicle)) {
            Some(&l) => total += l,
            None => return Err(CoreError::MissingLatency { task, vehicle }),
        }
    }
    Ok(total)
}
