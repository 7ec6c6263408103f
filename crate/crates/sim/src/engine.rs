//! Time-slotted task lifecycle engine.
//!
//! Each slot: spawn arrivals, dispatch them through the configured scheduler,
//! refresh every vehicle's capacity split, move bits and FLOPs with residual
//! carry inside the slot, realize outcomes of finished replicas, then move
//! the fleet and replace vehicles that left coverage.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use cave_core::allocator::{optimal_allocation, VehicleTaskLoad};
use cave_core::assigner::{
    evaluate_assignment, pso_assign, swarm_seed, AssignmentProblem, CandidateVehicle,
    InProgressReplica, SwarmConfig,
};
use cave_core::model::{Allocation, Assignment, TaskSpec, VehicleState};
use cave_core::predictor::{Direction, PredictorConfig, RatePredictor};
use cave_core::seeds;

use crate::error::SimError;
use crate::link::link_rate;
use crate::metrics::{build_report, MetricsReport};
use crate::scenario::{ScenarioConfig, SchedulerKind};

/// Vehicles farther than this from the ego are out of coverage and retired.
pub const DEPARTURE_RADIUS_M: f64 = 300.0;
/// Uniform speed range for spawned vehicles, m/s.
pub const SPEED_RANGE_MPS: [f64; 2] = [8.0, 15.0];

const STREAM_ARRIVALS: u64 = 0x41;
const STREAM_FLEET: u64 = 0xF1;
const STREAM_OUTCOMES: u64 = 0x0B;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Down,
    Compute,
    Up,
    Done,
    Failed,
}

/// One copy of a task on one vehicle, walked through the three phases.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub phase: Phase,
    pub remaining_down: f64,
    pub remaining_compute: f64,
    pub remaining_up: f64,
    /// Seconds spent per phase; their sum is the replica's realized latency.
    pub phase_times: [f64; 3],
    /// Physical amounts taken off the remainders, the conservation ledger.
    pub deducted: [f64; 3],
    /// Wall clock at which the replica reached Done.
    pub completion_time: Option<f64>,
    /// Success draw at completion; departures fail outright.
    pub succeeded: Option<bool>,
}

impl Replica {
    fn new(spec: &TaskSpec) -> Replica {
        Replica {
            phase: Phase::Down,
            remaining_down: spec.down_bits,
            remaining_compute: spec.compute,
            remaining_up: spec.up_bits,
            phase_times: [0.0; 3],
            deducted: [0.0; 3],
            completion_time: None,
            succeeded: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.phase, Phase::Done | Phase::Failed)
    }

    pub fn realized_latency(&self) -> f64 {
        self.phase_times.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskOutcome {
    /// At least one replica's draw came up; latency of the fastest such.
    Success { latency: f64 },
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub spec: TaskSpec,
    pub replicas: BTreeMap<u64, Replica>,
    /// Scheduler-side estimate at dispatch, kept for comparison with the
    /// realized value.
    pub predicted_unreliability: f64,
    /// Set once every replica is terminal; None means censored at end of run.
    pub outcome: Option<TaskOutcome>,
    /// Product of per-replica failure probabilities at realized latencies.
    pub realized_unreliability: Option<f64>,
}

/// Cross-checks accumulated during a run. All gaps should sit at floating
/// point noise; anything larger points at a bookkeeping bug.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub replicas_completed: usize,
    /// Max relative gap between deducted work and the payload, over completed
    /// replicas and all three phases.
    pub max_work_gap: f64,
    /// Max over slots and vehicles of (allocated - capacity), GFLOPS.
    pub max_capacity_excess: f64,
    /// Max |(completion - arrival) - sum of phase times| over completed
    /// replicas, seconds.
    pub max_latency_mismatch: f64,
    /// Tasks that ended the run neither terminal nor in flight. Always 0.
    pub dropped_tasks: usize,
}

pub struct SimOutcome {
    pub report: MetricsReport,
    pub audit: AuditReport,
}

/// Draws the slot's arrivals: a Poisson count, then uniform payloads.
pub fn spawn_tasks(
    rng: &mut impl Rng,
    next_id: &mut u64,
    arrival_time: f64,
    intensity: f64,
    slot_dt: f64,
    size_range: [f64; 2],
    compute_range: [f64; 2],
    fail_threshold: f64,
) -> Vec<TaskSpec> {
    let lambda = intensity * slot_dt;
    if lambda <= 0.0 {
        return Vec::new();
    }
    let poisson = Poisson::new(lambda).expect("positive mean");
    let count = poisson.sample(rng) as usize;
    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let down = rng.gen_range(size_range[0]..=size_range[1]);
        let up = rng.gen_range(size_range[0]..=size_range[1]);
        let compute = rng.gen_range(compute_range[0]..=compute_range[1]);
        let id = *next_id;
        *next_id += 1;
        specs.push(
            TaskSpec::new(id, arrival_time, compute, down, up, fail_threshold)
                .expect("validated ranges produce valid specs"),
        );
    }
    specs
}

pub struct Simulation {
    config: ScenarioConfig,
    slot: u64,
    vehicles: BTreeMap<u64, VehicleState>,
    next_vehicle_id: u64,
    next_task_id: u64,
    tasks: BTreeMap<u64, TaskRecord>,
    /// Tasks with at least one replica still moving.
    active_tasks: BTreeSet<u64>,
    predictor: RatePredictor,
    allocation: Allocation,
    arrivals_rng: ChaCha8Rng,
    fleet_rng: ChaCha8Rng,
    outcome_rng: ChaCha8Rng,
    assignment_events: u64,
    audit: AuditReport,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Simulation, SimError> {
        config.validate()?;
        let mut sim = Simulation {
            config: config.clone(),
            slot: 0,
            vehicles: BTreeMap::new(),
            next_vehicle_id: 1,
            next_task_id: 1,
            tasks: BTreeMap::new(),
            active_tasks: BTreeSet::new(),
            predictor: RatePredictor::new(PredictorConfig::default())?,
            allocation: Allocation::new(),
            arrivals_rng: seeds::stream_rng(config.seed, &[STREAM_ARRIVALS]),
            fleet_rng: seeds::stream_rng(config.seed, &[STREAM_FLEET]),
            outcome_rng: seeds::stream_rng(config.seed, &[STREAM_OUTCOMES]),
            assignment_events: 0,
            audit: AuditReport::default(),
        };
        for _ in 0..config.n_vehicles {
            sim.spawn_vehicle();
        }
        Ok(sim)
    }

    pub fn vehicles(&self) -> &BTreeMap<u64, VehicleState> {
        &self.vehicles
    }

    pub fn tasks(&self) -> &BTreeMap<u64, TaskRecord> {
        &self.tasks
    }

    fn spawn_vehicle(&mut self) {
        let id = self.next_vehicle_id;
        self.next_vehicle_id += 1;
        // uniform over the disk, uniform speed and heading
        let u: f64 = self.fleet_rng.gen();
        let radius = self.config.spawn_radius * u.sqrt();
        let angle: f64 = self.fleet_rng.gen_range(0.0..std::f64::consts::TAU);
        let speed: f64 = self.fleet_rng.gen_range(SPEED_RANGE_MPS[0]..=SPEED_RANGE_MPS[1]);
        let heading: f64 = self.fleet_rng.gen_range(0.0..std::f64::consts::TAU);
        let vehicle = VehicleState::new(
            id,
            [radius * angle.cos(), radius * angle.sin()],
            [speed * heading.cos(), speed * heading.sin()],
            self.config.capacity,
            self.config.reliability_rate,
        )
        .expect("validated config produces valid vehicles");
        self.vehicles.insert(id, vehicle);
    }

    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.slot as f64 * self.config.slot_dt;
        let incoming = spawn_tasks(
            &mut self.arrivals_rng,
            &mut self.next_task_id,
            t,
            self.config.arrival_intensity,
            self.config.slot_dt,
            self.config.size_range,
            self.config.compute_range,
            self.config.fail_threshold,
        );
        if !incoming.is_empty() {
            self.dispatch(incoming)?;
        }
        self.reallocate();
        self.transfer_and_compute(t);
        self.move_fleet();
        self.retire_departures();
        self.slot += 1;
        Ok(())
    }

    /// (replicas downloading, replicas uploading) across the whole system;
    /// each direction's band is split over that count.
    fn count_flows(&self) -> (usize, usize) {
        let mut down = 0;
        let mut up = 0;
        for tid in &self.active_tasks {
            for replica in self.tasks[tid].replicas.values() {
                match replica.phase {
                    Phase::Down => down += 1,
                    Phase::Up => up += 1,
                    _ => {}
                }
            }
        }
        (down, up)
    }

    fn refresh_flow_counts(&mut self) {
        let (down, up) = self.count_flows();
        let ids: Vec<u64> = self.vehicles.keys().copied().collect();
        for id in ids {
            self.predictor.set_current_flows(id, Direction::Down, down);
            self.predictor.set_current_flows(id, Direction::Up, up);
        }
    }

    fn in_flight_replicas(&self) -> Vec<InProgressReplica> {
        let mut out = Vec::new();
        for tid in &self.active_tasks {
            for (vid, replica) in &self.tasks[tid].replicas {
                if !replica.is_terminal() {
                    out.push(InProgressReplica {
                        task_id: *tid,
                        vehicle_id: *vid,
                        remaining_down_bits: replica.remaining_down,
                        remaining_compute: replica.remaining_compute,
                        remaining_up_bits: replica.remaining_up,
                    });
                }
            }
        }
        out
    }

    fn dispatch(&mut self, specs: Vec<TaskSpec>) -> Result<(), SimError> {
        self.refresh_flow_counts();
        let candidates: Vec<CandidateVehicle> = self
            .vehicles
            .values()
            .map(|v| CandidateVehicle::from_live(v, &self.predictor))
            .collect();
        let in_flight = self.in_flight_replicas();
        let event = self.assignment_events;
        self.assignment_events += 1;

        let (assignment, predicted) = match self.config.scheduler {
            SchedulerKind::Baseline => self.assign_baseline(&specs, candidates, in_flight)?,
            SchedulerKind::Cave => self.assign_swarm(&specs, candidates, in_flight, event)?,
            SchedulerKind::FpsoMr => {
                // blind to in-flight work: no frozen replicas in the problem
                // and every vehicle presumed idle, only link history kept
                let mut blind = candidates;
                for candidate in &mut blind {
                    candidate.in_progress = 0;
                }
                self.assign_swarm(&specs, blind, Vec::new(), event)?
            }
        };

        for (idx, spec) in specs.into_iter().enumerate() {
            let task_id = spec.id;
            let mut replicas = BTreeMap::new();
            for vid in assignment.vehicles_for(task_id) {
                replicas.insert(vid, Replica::new(&spec));
                if let Some(vehicle) = self.vehicles.get_mut(&vid) {
                    vehicle.in_progress.insert(task_id);
                }
            }
            debug_assert!(!replicas.is_empty(), "every task gets at least one replica");
            self.active_tasks.insert(task_id);
            self.tasks.insert(
                task_id,
                TaskRecord {
                    spec,
                    replicas,
                    predicted_unreliability: predicted[idx],
                    outcome: None,
                    realized_unreliability: None,
                },
            );
        }
        Ok(())
    }

    /// One replica on the vehicle with the fewest unfinished tasks, lowest id
    /// on ties; earlier tasks in the batch count toward the load.
    fn assign_baseline(
        &self,
        specs: &[TaskSpec],
        candidates: Vec<CandidateVehicle>,
        in_flight: Vec<InProgressReplica>,
    ) -> Result<(Assignment, Vec<f64>), SimError> {
        let mut batch_load: BTreeMap<u64, usize> = BTreeMap::new();
        let mut assignment = Assignment::new();
        for spec in specs {
            let chosen = self
                .vehicles
                .values()
                .map(|v| (v.in_progress.len() + batch_load.get(&v.id).copied().unwrap_or(0), v.id))
                .min()
                .expect("fleet is never empty")
                .1;
            assignment.insert(spec.id, chosen);
            *batch_load.entry(chosen).or_insert(0) += 1;
        }
        let problem = AssignmentProblem::new(specs.to_vec(), in_flight, candidates)?;
        let eval = evaluate_assignment(&problem, &assignment);
        Ok((assignment, eval.unreliability))
    }

    fn assign_swarm(
        &self,
        specs: &[TaskSpec],
        candidates: Vec<CandidateVehicle>,
        in_flight: Vec<InProgressReplica>,
        event: u64,
    ) -> Result<(Assignment, Vec<f64>), SimError> {
        let problem = AssignmentProblem::new(specs.to_vec(), in_flight, candidates)?;
        let config = SwarmConfig {
            seed: swarm_seed(self.config.seed, event),
            ..SwarmConfig::default()
        };
        let result = pso_assign(&problem, &config)?;
        Ok((result.assignment, result.predicted_unreliability))
    }

    /// Splits every vehicle's capacity over its unfinished compute work.
    fn reallocate(&mut self) {
        self.allocation = Allocation::new();
        for (vid, vehicle) in &self.vehicles {
            let mut loads: Vec<(u64, f64)> = Vec::new();
            for tid in &vehicle.in_progress {
                let replica = &self.tasks[tid].replicas[vid];
                if !replica.is_terminal() && replica.remaining_compute > 0.0 {
                    loads.push((*tid, replica.remaining_compute));
                }
            }
            if loads.is_empty() {
                continue;
            }
            match self.config.scheduler {
                SchedulerKind::Cave => {
                    let load = VehicleTaskLoad::new(*vid, loads, vehicle.capacity)
                        .expect("remaining work is nonnegative, capacity positive");
                    for (tid, share) in optimal_allocation(&load) {
                        self.allocation.set(tid, *vid, share);
                    }
                }
                SchedulerKind::Baseline | SchedulerKind::FpsoMr => {
                    let share = vehicle.capacity / loads.len() as f64;
                    for (tid, _) in loads {
                        self.allocation.set(tid, *vid, share);
                    }
                }
            }
            let excess = self.allocation.vehicle_total(*vid) - vehicle.capacity;
            if excess > self.audit.max_capacity_excess {
                self.audit.max_capacity_excess = excess;
            }
        }
    }

    /// Moves every active replica forward by one slot under this slot's
    /// rates and capacity split, carrying unused time across phase
    /// boundaries. Replicas finishing the upload get their success draw.
    fn transfer_and_compute(&mut self, t: f64) {
        let dt = self.config.slot_dt;
        let (down_total, up_total) = self.count_flows();

        let mut full_rates: BTreeMap<u64, f64> = BTreeMap::new();
        for (vid, vehicle) in &self.vehicles {
            full_rates.insert(
                *vid,
                link_rate(
                    [0.0, 0.0],
                    vehicle.position,
                    self.config.bandwidth,
                    self.config.tx_power,
                    1,
                ),
            );
        }

        // feed the predictor what the ego could measure this slot
        let mut transmitting_down: BTreeSet<u64> = BTreeSet::new();
        let mut transmitting_up: BTreeSet<u64> = BTreeSet::new();
        for tid in &self.active_tasks {
            for (vid, replica) in &self.tasks[tid].replicas {
                match replica.phase {
                    Phase::Down => {
                        transmitting_down.insert(*vid);
                    }
                    Phase::Up => {
                        transmitting_up.insert(*vid);
                    }
                    _ => {}
                }
            }
        }
        for (&vid, &full) in &full_rates {
            self.predictor.set_current_flows(vid, Direction::Down, down_total);
            self.predictor.set_current_flows(vid, Direction::Up, up_total);
            if transmitting_down.contains(&vid) {
                let sharers = down_total.max(1);
                self.predictor
                    .observe(vid, Direction::Down, t, full / sharers as f64, sharers)
                    .expect("slot times strictly increase");
            }
            if transmitting_up.contains(&vid) {
                let sharers = up_total.max(1);
                self.predictor
                    .observe(vid, Direction::Up, t, full / sharers as f64, sharers)
                    .expect("slot times strictly increase");
            }
        }

        let task_ids: Vec<u64> = self.active_tasks.iter().copied().collect();
        for tid in task_ids {
            let record = self.tasks.get_mut(&tid).expect("active tasks are recorded");
            let mut newly_terminal: Vec<u64> = Vec::new();
            for (&vid, replica) in record.replicas.iter_mut() {
                if replica.is_terminal() {
                    continue;
                }
                let full = full_rates.get(&vid).copied().unwrap_or(0.0);
                let down_rate = full / down_total.max(1) as f64;
                let up_rate = full / up_total.max(1) as f64;
                let gflops = self.allocation.rate(tid, vid);

                let mut t_left = dt;
                while t_left > 0.0 && !replica.is_terminal() {
                    let (remaining, speed, phase_idx) = match replica.phase {
                        Phase::Down => (replica.remaining_down, down_rate, 0),
                        Phase::Compute => (replica.remaining_compute, gflops, 1),
                        Phase::Up => (replica.remaining_up, up_rate, 2),
                        Phase::Done | Phase::Failed => unreachable!(),
                    };
                    if speed <= 0.0 {
                        // stalled, the clock still runs
                        replica.phase_times[phase_idx] += t_left;
                        break;
                    }
                    let needed = remaining / speed;
                    if needed <= t_left {
                        replica.phase_times[phase_idx] += needed;
                        replica.deducted[phase_idx] += remaining;
                        t_left -= needed;
                        match replica.phase {
                            Phase::Down => {
                                replica.remaining_down = 0.0;
                                replica.phase = Phase::Compute;
                            }
                            Phase::Compute => {
                                replica.remaining_compute = 0.0;
                                replica.phase = Phase::Up;
                            }
                            Phase::Up => {
                                replica.remaining_up = 0.0;
                                replica.phase = Phase::Done;
                                replica.completion_time = Some(t + (dt - t_left));
                                let latency = replica.realized_latency();
                                let p = (-self.config.reliability_rate * latency).exp();
                                let draw: f64 = self.outcome_rng.gen();
                                replica.succeeded = Some(draw < p);
                            }
                            Phase::Done | Phase::Failed => unreachable!(),
                        }
                    } else {
                        let amount = speed * t_left;
                        match replica.phase {
                            Phase::Down => replica.remaining_down -= amount,
                            Phase::Compute => replica.remaining_compute -= amount,
                            Phase::Up => replica.remaining_up -= amount,
                            Phase::Done | Phase::Failed => unreachable!(),
                        }
                        replica.deducted[phase_idx] += amount;
                        replica.phase_times[phase_idx] += t_left;
                        t_left = 0.0;
                    }
                }
                if replica.is_terminal() {
                    newly_terminal.push(vid);
                }
            }
            for vid in newly_terminal {
                if let Some(vehicle) = self.vehicles.get_mut(&vid) {
                    vehicle.in_progress.remove(&tid);
                }
            }
            if record.replicas.values().all(Replica::is_terminal) {
                Self::realize_outcome(record, self.config.reliability_rate);
                self.active_tasks.remove(&tid);
            }
        }
    }

    /// Terminal bookkeeping once the last replica lands: the success draws
    /// decide the outcome, and the realized per-replica probabilities are
    /// multiplied into the task's recorded unreliability whatever the draws
    /// said. Replicas that never completed count as certain failures.
    fn realize_outcome(record: &mut TaskRecord, reliability_rate: f64) {
        let mut unreliability = 1.0;
        let mut best: Option<f64> = None;
        for replica in record.replicas.values() {
            let p = match replica.phase {
                Phase::Done => (-reliability_rate * replica.realized_latency()).exp(),
                Phase::Failed => 0.0,
                _ => unreachable!("outcome realized before replicas finished"),
            };
            unreliability *= 1.0 - p;
            if replica.succeeded == Some(true) {
                let latency = replica.realized_latency();
                best = Some(best.map_or(latency, |b: f64| b.min(latency)));
            }
        }
        record.realized_unreliability = Some(unreliability);
        record.outcome = Some(match best {
            Some(latency) => TaskOutcome::Success { latency },
            None => TaskOutcome::Failure,
        });
    }

    fn move_fleet(&mut self) {
        let dt = self.config.slot_dt;
        for vehicle in self.vehicles.values_mut() {
            vehicle.position[0] += vehicle.velocity[0] * dt;
            vehicle.position[1] += vehicle.velocity[1] * dt;
        }
    }

    /// Vehicles beyond coverage take their unfinished replicas down with
    /// them; the fleet is topped back up with fresh ids so density stays
    /// constant.
    fn retire_departures(&mut self) {
        let departed: Vec<u64> = self
            .vehicles
            .values()
            .filter(|v| v.distance_from_origin() > DEPARTURE_RADIUS_M)
            .map(|v| v.id)
            .collect();
        for vid in departed {
            let vehicle = self.vehicles.remove(&vid).expect("departed vehicle exists");
            for tid in vehicle.in_progress {
                let record = self.tasks.get_mut(&tid).expect("in-progress tasks are recorded");
                if let Some(replica) = record.replicas.get_mut(&vid) {
                    if !replica.is_terminal() {
                        replica.phase = Phase::Failed;
                        replica.succeeded = Some(false);
                    }
                }
                if record.replicas.values().all(Replica::is_terminal) {
                    Self::realize_outcome(record, self.config.reliability_rate);
                    self.active_tasks.remove(&tid);
                }
            }
            self.predictor.forget_vehicle(vid);
            self.spawn_vehicle();
        }
    }

    pub fn finish(mut self) -> SimOutcome {
        for record in self.tasks.values() {
            for replica in record.replicas.values() {
                if replica.phase != Phase::Done {
                    continue;
                }
                self.audit.replicas_completed += 1;
                let payloads =
                    [record.spec.down_bits, record.spec.compute, record.spec.up_bits];
                for (deducted, payload) in replica.deducted.iter().zip(payloads) {
                    let gap = (deducted - payload).abs() / payload.max(1.0);
                    if gap > self.audit.max_work_gap {
                        self.audit.max_work_gap = gap;
                    }
                }
                let wall = replica.completion_time.expect("Done replicas are stamped")
                    - record.spec.arrival_time;
                let mismatch = (wall - replica.realized_latency()).abs();
                if mismatch > self.audit.max_latency_mismatch {
                    self.audit.max_latency_mismatch = mismatch;
                }
            }
            let censored = record.replicas.values().any(|r| !r.is_terminal());
            if record.outcome.is_none() && !censored {
                self.audit.dropped_tasks += 1;
            }
        }
        let report = build_report(&self.config, &self.tasks);
        SimOutcome { report, audit: self.audit }
    }
}

pub fn run(config: &ScenarioConfig) -> Result<MetricsReport, SimError> {
    run_with_audit(config).map(|outcome| outcome.report)
}

pub fn run_with_audit(config: &ScenarioConfig) -> Result<SimOutcome, SimError> {
    let mut sim = Simulation::new(config)?;
    for _ in 0..config.n_slots() {
        sim.step()?;
    }
    Ok(sim.finish())
}
