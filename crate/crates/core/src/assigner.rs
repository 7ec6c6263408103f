//! Replica assignment via barrier-penalized binary particle-swarm search.
//!
//! Incoming tasks are mapped to a binary matrix alpha over (task, candidate
//! vehicle). A candidate assignment is scored by the total *predicted*
//! latency of everything the ego has in flight, where predictions use the
//! smoothed link rates shared among planned flows and an equal-split
//! presumption of each vehicle's capacity:
//!
//! ```text
//! J(alpha) = sum_{i in new+in-flight} sum_j alpha_ij * Lhat_ij
//! ```
//!
//! Per-task reliability constraints `Uhat_i <= H_i` are folded in with a
//! logarithmic barrier `-mu * sum_i ln(H_i - Uhat_i)` that walls off the
//! boundary early in the search and fades as `mu` decays. Violating
//! assignments score +inf. The search itself is a standard particle swarm in
//! [0,1]^dim whose positions decode to bits at the 0.5 threshold; particles
//! that decode to a constraint-violating assignment are discarded and
//! resampled instead of moved.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::model::{Assignment, TaskSpec};
use crate::predictor::{Direction, RatePredictor};
use crate::seeds::{self, stream_rng};

/// Scheduler-side snapshot of one candidate vehicle: capacity, reliability
/// decay, current occupancy, and the predicted aggregate link rate with the
/// flow count it is currently split over.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateVehicle {
    pub vehicle_id: u64,
    /// GFLOPS.
    pub capacity: f64,
    /// 1/s.
    pub reliability_rate: f64,
    /// Tasks assigned and unfinished (the equal-split denominator base).
    pub in_progress: usize,
    /// Smoothed aggregate link rate toward the vehicle, bits/s.
    pub down_aggregate: f64,
    /// Flows currently sharing the downlink.
    pub down_flows: usize,
    pub up_aggregate: f64,
    pub up_flows: usize,
}

impl CandidateVehicle {
    /// Builds the snapshot from live scheduler state.
    pub fn from_live(
        vehicle: &crate::model::VehicleState,
        predictor: &RatePredictor,
    ) -> CandidateVehicle {
        CandidateVehicle {
            vehicle_id: vehicle.id,
            capacity: vehicle.capacity,
            reliability_rate: vehicle.reliability_rate,
            in_progress: vehicle.in_progress.len(),
            down_aggregate: predictor.aggregate_estimate(vehicle.id, Direction::Down),
            down_flows: predictor.current_flows(vehicle.id, Direction::Down),
            up_aggregate: predictor.aggregate_estimate(vehicle.id, Direction::Up),
            up_flows: predictor.current_flows(vehicle.id, Direction::Up),
        }
    }

    fn down_rate(&self, extra_tasks: usize) -> f64 {
        self.down_aggregate / (self.down_flows + extra_tasks).max(1) as f64
    }

    fn up_rate(&self, extra_tasks: usize) -> f64 {
        self.up_aggregate / (self.up_flows + extra_tasks).max(1) as f64
    }

    fn presumed_gflops(&self, extra_tasks: usize) -> f64 {
        self.capacity / (self.in_progress + extra_tasks).max(1) as f64
    }

    /// Predicted round trip for a (remaining) workload of `down_bits` /
    /// `compute` / `up_bits` if this vehicle took on `extra_tasks` new tasks.
    pub fn predicted_latency(
        &self,
        down_bits: f64,
        compute: f64,
        up_bits: f64,
        extra_tasks: usize,
    ) -> f64 {
        down_bits / self.down_rate(extra_tasks)
            + compute / self.presumed_gflops(extra_tasks)
            + up_bits / self.up_rate(extra_tasks)
    }

    /// `exp(-rate * latency)`.
    pub fn predicted_reliability(&self, latency: f64) -> f64 {
        (-self.reliability_rate * latency).exp()
    }
}

/// A replica already dispatched and not yet finished. Remaining amounts are
/// what is still to download / compute / upload; its vehicle binding is
/// frozen, but its predicted finish time still depends on how many new tasks
/// the vehicle takes on.
#[derive(Debug, Clone, PartialEq)]
pub struct InProgressReplica {
    pub task_id: u64,
    pub vehicle_id: u64,
    pub remaining_down_bits: f64,
    pub remaining_compute: f64,
    pub remaining_up_bits: f64,
}

/// One assignment decision: the incoming batch, everything in flight, and
/// the known vehicles (all of them; the search itself runs on a reduced
/// candidate subset).
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    pub incoming: Vec<TaskSpec>,
    pub in_progress: Vec<InProgressReplica>,
    pub vehicles: Vec<CandidateVehicle>,
}

impl AssignmentProblem {
    pub fn new(
        incoming: Vec<TaskSpec>,
        in_progress: Vec<InProgressReplica>,
        vehicles: Vec<CandidateVehicle>,
    ) -> Result<Self, CoreError> {
        if vehicles.is_empty() {
            return Err(CoreError::EmptyVehicleSet);
        }
        for r in &in_progress {
            if !vehicles.iter().any(|v| v.vehicle_id == r.vehicle_id) {
                return Err(CoreError::invalid(
                    "in_progress",
                    format!("replica of task {} references unknown vehicle {}", r.task_id, r.vehicle_id),
                ));
            }
            if r.remaining_down_bits < 0.0 || r.remaining_compute < 0.0 || r.remaining_up_bits < 0.0
            {
                return Err(CoreError::invalid("in_progress", "remaining work must be >= 0"));
            }
        }
        Ok(AssignmentProblem { incoming, in_progress, vehicles })
    }

    fn vehicle_index(&self, vehicle_id: u64) -> Option<usize> {
        self.vehicles.iter().position(|v| v.vehicle_id == vehicle_id)
    }

    fn task_index(&self, task_id: u64) -> Option<usize> {
        self.incoming.iter().position(|t| t.id == task_id)
    }
}

/// Swarm search parameters. `candidate_count` bounds the vehicles the search
/// actually considers; `mu0`/`mu_decay` drive the barrier schedule; the
/// positive barrier sign variant adds `+mu ln(H - U)` instead of the standard
/// interior-point `-mu ln(H - U)` and therefore *rewards* running close to
/// the reliability boundary (kept only for comparison runs).
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub v_max: f64,
    pub candidate_count: usize,
    pub mu0: f64,
    pub mu_decay: f64,
    pub barrier_sign_positive: bool,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 30,
            iterations: 100,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            v_max: 0.5,
            candidate_count: 10,
            mu0: 1.0,
            mu_decay: 0.9,
            barrier_sign_positive: false,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.particles == 0 {
            return Err(CoreError::invalid("particles", "must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(CoreError::invalid("iterations", "must be >= 1"));
        }
        if self.candidate_count == 0 {
            return Err(CoreError::invalid("candidate_count", "must be >= 1"));
        }
        if !(self.v_max > 0.0) {
            return Err(CoreError::invalid("v_max", "must be positive"));
        }
        if !(self.mu0 > 0.0) {
            return Err(CoreError::invalid("mu0", "must be positive"));
        }
        if !(self.mu_decay > 0.0 && self.mu_decay <= 1.0) {
            return Err(CoreError::invalid("mu_decay", "must be in (0, 1]"));
        }
        if self.inertia < 0.0 || self.cognitive < 0.0 || self.social < 0.0 {
            return Err(CoreError::invalid("swarm weights", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Ranks vehicles by the predicted single-replica latency of a mean incoming
/// task and keeps the best `n`. Ties break toward the lower vehicle id.
pub fn reduce_candidates(
    vehicles: &[CandidateVehicle],
    incoming: &[TaskSpec],
    n: usize,
) -> Result<Vec<CandidateVehicle>, CoreError> {
    Ok(candidate_ranking(vehicles, incoming, n)?
        .into_iter()
        .map(|i| vehicles[i].clone())
        .collect())
}

fn candidate_ranking(
    vehicles: &[CandidateVehicle],
    incoming: &[TaskSpec],
    n: usize,
) -> Result<Vec<usize>, CoreError> {
    if vehicles.is_empty() {
        return Err(CoreError::EmptyVehicleSet);
    }
    let score = |v: &CandidateVehicle| -> f64 {
        if incoming.is_empty() {
            return v.predicted_latency(0.0, 1.0, 0.0, 1);
        }
        incoming
            .iter()
            .map(|t| v.predicted_latency(t.down_bits, t.compute, t.up_bits, 1))
            .sum::<f64>()
            / incoming.len() as f64
    };
    let mut ranked: Vec<(f64, u64, usize)> = vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| (score(v), v.vehicle_id, i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(n.max(1));
    Ok(ranked.into_iter().map(|(_, _, i)| i).collect())
}

/// Decodes a swarm position to assignment bits at the 0.5 threshold.
pub fn decode_position(position: &[f64]) -> Vec<bool> {
    position.iter().map(|&x| x > 0.5).collect()
}

struct Evaluation {
    /// Total predicted latency of new replicas plus everything in flight.
    total_latency: f64,
    /// `max_i (Uhat_i - H_i)`: <= 0 means every constraint holds, < 0 holds
    /// strictly (required for a finite barrier).
    max_excess: f64,
    /// `sum_i ln(H_i - Uhat_i)`, finite only when max_excess < 0.
    log_margin_sum: f64,
}

struct Evaluator<'a> {
    problem: &'a AssignmentProblem,
    /// Indices into `problem.vehicles` the bit matrix columns refer to.
    search: Vec<usize>,
    /// Scratch: new tasks per vehicle (full vehicle indexing).
    extra: Vec<usize>,
    /// Scratch: per incoming task unreliability.
    unreliability: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a AssignmentProblem, search: Vec<usize>) -> Self {
        let extra = vec![0usize; problem.vehicles.len()];
        let unreliability = vec![1.0f64; problem.incoming.len()];
        Evaluator { problem, search, extra, unreliability }
    }

    fn dim(&self) -> usize {
        self.problem.incoming.len() * self.search.len()
    }

    /// Scores one bit matrix. Fills `self.unreliability` as a side effect.
    fn evaluate(&mut self, bits: &[bool]) -> Evaluation {
        let cols = self.search.len();
        debug_assert_eq!(bits.len(), self.dim());
        self.extra.fill(0);
        for (ti, _) in self.problem.incoming.iter().enumerate() {
            for (si, &vi) in self.search.iter().enumerate() {
                if bits[ti * cols + si] {
                    self.extra[vi] += 1;
                }
            }
        }

        let mut total_latency = 0.0;
        let mut max_excess = f64::NEG_INFINITY;
        let mut log_margin_sum = 0.0;
        for (ti, task) in self.problem.incoming.iter().enumerate() {
            let mut u = 1.0;
            for (si, &vi) in self.search.iter().enumerate() {
                if bits[ti * cols + si] {
                    let v = &self.problem.vehicles[vi];
                    let l = v.predicted_latency(
                        task.down_bits,
                        task.compute,
                        task.up_bits,
                        self.extra[vi],
                    );
                    total_latency += l;
                    u *= 1.0 - v.predicted_reliability(l);
                }
            }
            self.unreliability[ti] = u;
            let excess = u - task.fail_threshold;
            max_excess = max_excess.max(excess);
            log_margin_sum += (-excess).ln();
        }
        for r in &self.problem.in_progress {
            let vi = self
                .problem
                .vehicle_index(r.vehicle_id)
                .expect("validated at problem construction");
            let v = &self.problem.vehicles[vi];
            total_latency += v.predicted_latency(
                r.remaining_down_bits,
                r.remaining_compute,
                r.remaining_up_bits,
                self.extra[vi],
            );
        }
        if self.problem.incoming.is_empty() {
            max_excess = -1.0;
            log_margin_sum = 0.0;
        }
        Evaluation { total_latency, max_excess, log_margin_sum }
    }
}

fn quality(eval: &Evaluation, mu: f64, sign_positive: bool) -> f64 {
    if !(eval.max_excess < 0.0) {
        return f64::INFINITY;
    }
    if mu == 0.0 {
        return eval.total_latency;
    }
    let barrier = mu * eval.log_margin_sum;
    if sign_positive {
        eval.total_latency + barrier
    } else {
        eval.total_latency - barrier
    }
}

fn bits_from_assignment(
    problem: &AssignmentProblem,
    search: &[usize],
    assignment: &Assignment,
) -> Vec<bool> {
    let cols = search.len();
    let mut bits = vec![false; problem.incoming.len() * cols];
    for (task, vehicle) in assignment.iter() {
        let ti = problem
            .task_index(task)
            .unwrap_or_else(|| panic!("assignment references unknown task {task}"));
        let vi = problem
            .vehicle_index(vehicle)
            .unwrap_or_else(|| panic!("assignment references unknown vehicle {vehicle}"));
        let si = search
            .iter()
            .position(|&s| s == vi)
            .unwrap_or_else(|| panic!("assignment references vehicle {vehicle} outside the search set"));
        bits[ti * cols + si] = true;
    }
    bits
}

fn assignment_from_bits(
    problem: &AssignmentProblem,
    search: &[usize],
    bits: &[bool],
) -> Assignment {
    let cols = search.len();
    let mut a = Assignment::new();
    for (ti, task) in problem.incoming.iter().enumerate() {
        for (si, &vi) in search.iter().enumerate() {
            if bits[ti * cols + si] {
                a.insert(task.id, problem.vehicles[vi].vehicle_id);
            }
        }
    }
    a
}

/// Plain (mu = 0) view of one assignment under the prediction model.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentEvaluation {
    /// Predicted latency total, new replicas plus in-flight remainder.
    pub total_latency: f64,
    /// Per incoming task, in `problem.incoming` order.
    pub unreliability: Vec<f64>,
    pub feasible: Vec<bool>,
}

/// Evaluates an explicit assignment over the full vehicle set.
///
/// Panics if the assignment references tasks or vehicles the problem does not
/// know (caller contract).
pub fn evaluate_assignment(
    problem: &AssignmentProblem,
    assignment: &Assignment,
) -> AssignmentEvaluation {
    let search: Vec<usize> = (0..problem.vehicles.len()).collect();
    let mut ev = Evaluator::new(problem, search.clone());
    let bits = bits_from_assignment(problem, &search, assignment);
    let eval = ev.evaluate(&bits);
    let feasible = problem
        .incoming
        .iter()
        .zip(&ev.unreliability)
        .map(|(t, &u)| u <= t.fail_threshold)
        .collect();
    AssignmentEvaluation {
        total_latency: eval.total_latency,
        unreliability: ev.unreliability.clone(),
        feasible,
    }
}

/// Per-task reliability constraint check: `Uhat_i <= H_i` under the
/// prediction model. Panics on unknown ids (caller contract).
pub fn feasibility_check(problem: &AssignmentProblem, assignment: &Assignment) -> Vec<bool> {
    evaluate_assignment(problem, assignment).feasible
}

/// Barrier-penalized objective with the standard interior-point sign:
/// total predicted latency `- mu * sum_i ln(H_i - Uhat_i)`, +inf as soon as
/// any `Uhat_i >= H_i`. With `mu = 0` this is the plain latency objective.
pub fn barrier_objective(problem: &AssignmentProblem, assignment: &Assignment, mu: f64) -> f64 {
    barrier_objective_with_sign(problem, assignment, mu, false)
}

/// Sign-selectable variant; `sign_positive` flips the barrier term to
/// `+mu * sum_i ln(H_i - Uhat_i)` (boundary-rewarding comparison mode).
pub fn barrier_objective_with_sign(
    problem: &AssignmentProblem,
    assignment: &Assignment,
    mu: f64,
    sign_positive: bool,
) -> f64 {
    let search: Vec<usize> = (0..problem.vehicles.len()).collect();
    let mut ev = Evaluator::new(problem, search.clone());
    let bits = bits_from_assignment(problem, &search, assignment);
    let eval = ev.evaluate(&bits);
    quality(&eval, mu, sign_positive)
}

struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    /// Best feasible decode seen by this particle and its quality record.
    pbest: Option<(Vec<bool>, f64)>,
    resampled: bool,
}

/// Swarm state; one `step` = evaluate, resample violators, move survivors.
pub struct Swarm<'a> {
    evaluator: Evaluator<'a>,
    config: SwarmConfig,
    particles: Vec<Particle>,
    iteration: u64,
    /// Historical best by quality record (finite => strictly feasible).
    /// Records keep the barrier weight they were scored under, so this is
    /// the social attractor, not the extraction winner.
    gbest: Option<(Vec<bool>, f64)>,
    /// Terminal weight of the configured schedule, `mu0 * decay^(M-1)`.
    mu_floor: f64,
    /// Historical best re-scored at `mu_floor`: one consistent currency
    /// across the whole run, so an early low-latency decode is not crowded
    /// out by records written while the barrier was still heavy. Extraction
    /// returns this.
    best_floor: Option<(Vec<bool>, f64)>,
    /// Fallback attractor when nothing feasible was seen yet: the decode
    /// with the smallest worst-case constraint excess.
    best_effort: Option<(Vec<bool>, f64)>,
}

const STREAM_INIT: u64 = 1;
const STREAM_MOVE: u64 = 2;
const STREAM_RESAMPLE: u64 = 3;

fn particle_rng(seed: u64, stream: u64, iteration: u64, particle: u64) -> ChaCha8Rng {
    stream_rng(seed, &[stream, iteration, particle])
}

impl<'a> Swarm<'a> {
    pub fn new(problem: &'a AssignmentProblem, config: SwarmConfig) -> Result<Self, CoreError> {
        config.validate()?;
        if problem.incoming.is_empty() {
            return Err(CoreError::EmptyTaskSet);
        }
        let search = candidate_ranking(
            &problem.vehicles,
            &problem.incoming,
            config.candidate_count,
        )?;
        let evaluator = Evaluator::new(problem, search);
        let dim = evaluator.dim();
        let particles = (0..config.particles)
            .map(|pi| {
                let mut rng = particle_rng(config.seed, STREAM_INIT, 0, pi as u64);
                Particle {
                    position: (0..dim).map(|_| rng.gen::<f64>()).collect(),
                    velocity: (0..dim)
                        .map(|_| rng.gen_range(-config.v_max..=config.v_max))
                        .collect(),
                    pbest: None,
                    resampled: false,
                }
            })
            .collect();
        let mu_floor = config.mu0 * config.mu_decay.powf((config.iterations - 1) as f64);
        Ok(Swarm {
            evaluator,
            config,
            particles,
            iteration: 0,
            gbest: None,
            mu_floor,
            best_floor: None,
            best_effort: None,
        })
    }

    /// Best quality record so far (+inf until something feasible appears).
    pub fn best_quality(&self) -> f64 {
        self.gbest.as_ref().map_or(f64::INFINITY, |(_, q)| *q)
    }

    /// One iteration at barrier weight `mu`.
    pub fn step(&mut self, mu: f64) {
        let sign = self.config.barrier_sign_positive;
        // Evaluate everyone and update the records.
        for p in &mut self.particles {
            let bits = decode_position(&p.position);
            let eval = self.evaluator.evaluate(&bits);
            let q = quality(&eval, mu, sign);
            if q.is_finite() {
                match &p.pbest {
                    Some((_, best)) if *best <= q => {}
                    _ => p.pbest = Some((bits.clone(), q)),
                }
                match &self.gbest {
                    Some((_, best)) if *best <= q => {}
                    _ => self.gbest = Some((bits.clone(), q)),
                }
                let qf = quality(&eval, self.mu_floor, sign);
                match &self.best_floor {
                    Some((_, best)) if *best <= qf => {}
                    _ => self.best_floor = Some((bits.clone(), qf)),
                }
            }
            match &self.best_effort {
                Some((_, excess)) if *excess <= eval.max_excess => {}
                _ => self.best_effort = Some((bits.clone(), eval.max_excess)),
            }
            // Violating decodes (excess > 0) are deleted; the boundary itself
            // (excess == 0) passes the check but never enters the records.
            p.resampled = eval.max_excess > 0.0;
        }

        // Resample violators in place of moving them.
        let dim = self.evaluator.dim();
        for (pi, p) in self.particles.iter_mut().enumerate() {
            if !p.resampled {
                continue;
            }
            let mut rng =
                particle_rng(self.config.seed, STREAM_RESAMPLE, self.iteration, pi as u64);
            p.position = (0..dim).map(|_| rng.gen::<f64>()).collect();
            p.velocity = (0..dim)
                .map(|_| rng.gen_range(-self.config.v_max..=self.config.v_max))
                .collect();
            // A feasible personal best survives the reset; an unset one stays
            // unset (pbest is only ever written with finite quality).
        }

        // Velocity/position update toward the binary attractors.
        let gb: Option<&[bool]> = self
            .gbest
            .as_ref()
            .map(|(b, _)| b.as_slice())
            .or_else(|| self.best_effort.as_ref().map(|(b, _)| b.as_slice()));
        for (pi, p) in self.particles.iter_mut().enumerate() {
            if p.resampled {
                continue;
            }
            let mut rng = particle_rng(self.config.seed, STREAM_MOVE, self.iteration, pi as u64);
            let own_bits;
            let pb: &[bool] = match &p.pbest {
                Some((b, _)) => b,
                None => {
                    own_bits = decode_position(&p.position);
                    &own_bits
                }
            };
            let gb = gb.unwrap_or(pb);
            for d in 0..dim {
                let r1 = rng.gen::<f64>();
                let r2 = rng.gen::<f64>();
                let pb_d = if pb[d] { 1.0 } else { 0.0 };
                let gb_d = if gb[d] { 1.0 } else { 0.0 };
                let v = self.config.inertia * p.velocity[d]
                    + self.config.cognitive * r1 * (pb_d - p.position[d])
                    + self.config.social * r2 * (gb_d - p.position[d]);
                p.velocity[d] = v.clamp(-self.config.v_max, self.config.v_max);
                p.position[d] = (p.position[d] + p.velocity[d]).clamp(0.0, 1.0);
            }
        }
        self.iteration += 1;
    }
}

/// Swarm search result. `objective` is the returned assignment's quality at
/// the terminal barrier weight of the schedule (+inf when nothing feasible
/// was found and the result is best-effort); `total_predicted_latency` is
/// its plain mu = 0 objective.
#[derive(Debug, Clone)]
pub struct AssignmentResult {
    pub assignment: Assignment,
    pub feasible: bool,
    pub per_task_feasible: Vec<bool>,
    pub predicted_unreliability: Vec<f64>,
    pub objective: f64,
    pub total_predicted_latency: f64,
    /// Best quality record after each iteration; non-increasing.
    pub trace: Vec<f64>,
}

/// Runs the full search: candidate reduction, `iterations` swarm steps under
/// the decaying barrier, then extraction of the best feasible decode ever
/// seen, judged at the schedule's terminal weight (quality records written
/// under earlier, heavier weights are not comparable across iterations, so
/// extraction re-judges everything in the one currency the run ends on).
/// When no feasible assignment was ever seen, returns the least-violating
/// decode, patched so every task keeps at least one replica, and flags it
/// infeasible.
pub fn pso_assign(
    problem: &AssignmentProblem,
    config: &SwarmConfig,
) -> Result<AssignmentResult, CoreError> {
    let mut swarm = Swarm::new(problem, config.clone())?;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut mu = config.mu0;
    for _ in 0..config.iterations {
        swarm.step(mu);
        trace.push(swarm.best_quality());
        mu *= config.mu_decay;
    }

    let search = swarm.evaluator.search.clone();
    let (mut bits, objective) = match swarm.best_floor {
        Some((bits, q)) => (bits, q),
        None => match swarm.best_effort {
            Some((bits, _)) => (bits, f64::INFINITY),
            None => (vec![false; swarm.evaluator.dim()], f64::INFINITY),
        },
    };

    // Best-effort decodes may leave a task unassigned; give such tasks their
    // single fastest candidate so everything dispatched has a replica.
    let cols = search.len();
    for (ti, task) in problem.incoming.iter().enumerate() {
        if bits[ti * cols..(ti + 1) * cols].iter().any(|&b| b) {
            continue;
        }
        let best = (0..cols)
            .min_by(|&a, &b| {
                let la = problem.vehicles[search[a]].predicted_latency(
                    task.down_bits,
                    task.compute,
                    task.up_bits,
                    1,
                );
                let lb = problem.vehicles[search[b]].predicted_latency(
                    task.down_bits,
                    task.compute,
                    task.up_bits,
                    1,
                );
                la.total_cmp(&lb)
            })
            .expect("search set is nonempty");
        bits[ti * cols + best] = true;
    }

    let assignment = assignment_from_bits(problem, &search, &bits);
    let mut ev = Evaluator::new(problem, search);
    let eval = ev.evaluate(&bits);
    let per_task_feasible: Vec<bool> = problem
        .incoming
        .iter()
        .zip(&ev.unreliability)
        .map(|(t, &u)| u <= t.fail_threshold)
        .collect();
    Ok(AssignmentResult {
        feasible: per_task_feasible.iter().all(|&f| f),
        per_task_feasible,
        predicted_unreliability: ev.unreliability.clone(),
        objective,
        total_predicted_latency: eval.total_latency,
        trace,
        assignment,
    })
}

/// Deterministic seed for the swarm of one assignment event.
pub fn swarm_seed(base: u64, event: u64) -> u64 {
    seeds::derive(base, &[0x5057_4152, event])
}
