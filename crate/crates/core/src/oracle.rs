//! Independent verification oracles.
//!
//! The closed-form allocator and the swarm search both claim optimality of
//! some kind; this module checks those claims through a different route.
//! Allocation is re-solved numerically (pairwise golden-section descent on
//! the capacity simplex, no stationarity conditions involved) and assignment
//! is re-solved exhaustively over every bit matrix. Both are also wired into
//! the CLI so the checks can be run outside the test suite.

use rand::Rng;

use crate::allocator::{kkt_residual, optimal_allocation, VehicleTaskLoad};
use crate::assigner::{
    evaluate_assignment, pso_assign, AssignmentProblem, CandidateVehicle, SwarmConfig,
};
use crate::model::{Assignment, TaskSpec};
use crate::seeds::stream_rng;

/// Summed compute latency `sum c_i / g_i` of a split; pairs with zero load
/// and zero speed contribute nothing.
pub fn allocation_objective(computes: &[f64], split: &[f64]) -> f64 {
    computes
        .iter()
        .zip(split)
        .map(|(&c, &g)| if c == 0.0 { 0.0 } else { c / g })
        .sum()
}

/// Numerically minimizes `sum c_i / g_i` over the simplex
/// `{g >= 0, sum g = capacity}` by exact golden-section line searches on
/// every coordinate pair (mass transfers preserve feasibility by
/// construction). Zero loads receive zero speed. Converges geometrically on
/// this strictly convex objective; `sweeps` bounds the pair passes.
pub fn golden_section_split(computes: &[f64], capacity: f64, sweeps: usize) -> Vec<f64> {
    assert!(capacity > 0.0, "capacity must be positive");
    let n = computes.len();
    let active: Vec<usize> = (0..n).filter(|&i| computes[i] > 0.0).collect();
    let mut split = vec![0.0; n];
    if active.is_empty() {
        return split;
    }
    let share = capacity / active.len() as f64;
    for &i in &active {
        split[i] = share;
    }
    if active.len() == 1 {
        return split;
    }

    // Keeps every active coordinate strictly positive during the search; the
    // optimum is interior so this never binds at convergence.
    let floor = capacity * 1e-12;
    let stop = capacity * 1e-14;
    for _ in 0..sweeps {
        let mut largest_move = 0.0f64;
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                let (i, j) = (active[a], active[b]);
                let (ci, cj) = (computes[i], computes[j]);
                let (gi, gj) = (split[i], split[j]);
                // Transfer t from j to i: minimize ci/(gi+t) + cj/(gj-t).
                let lo = floor - gi;
                let hi = gj - floor;
                if hi <= lo {
                    continue;
                }
                let f = |t: f64| ci / (gi + t) + cj / (gj - t);
                let t = golden_section_min(f, lo, hi, 80);
                split[i] = gi + t;
                split[j] = gj - t;
                largest_move = largest_move.max(t.abs());
            }
        }
        if largest_move < stop {
            break;
        }
    }
    split
}

/// Golden-section search for the minimum of a unimodal `f` on [lo, hi].
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Exhaustive assignment optimum: the feasible bit matrix over the problem's
/// full vehicle set with the smallest plain objective, or None when no
/// feasible assignment exists. Only meant for small instances; panics beyond
/// 24 bits.
pub struct EnumerationBest {
    pub assignment: Assignment,
    pub total_latency: f64,
}

pub fn enumerate_assignments(problem: &AssignmentProblem) -> Option<EnumerationBest> {
    let tasks = problem.incoming.len();
    let vehicles = problem.vehicles.len();
    let dim = tasks * vehicles;
    assert!(dim <= 24, "enumeration oracle is for small instances, got {dim} bits");
    let mut best: Option<EnumerationBest> = None;
    for pattern in 0u32..(1u32 << dim) {
        let mut assignment = Assignment::new();
        for ti in 0..tasks {
            for vi in 0..vehicles {
                if pattern & (1 << (ti * vehicles + vi)) != 0 {
                    assignment
                        .insert(problem.incoming[ti].id, problem.vehicles[vi].vehicle_id);
                }
            }
        }
        let eval = evaluate_assignment(problem, &assignment);
        if !eval.feasible.iter().all(|&f| f) {
            continue;
        }
        if best.as_ref().map_or(true, |b| eval.total_latency < b.total_latency) {
            best = Some(EnumerationBest { assignment, total_latency: eval.total_latency });
        }
    }
    best
}

/// Random per-vehicle load in the ranges the allocation suite covers:
/// 1..=20 tasks, loads in [1, 1e4] GFLOP, capacity in [1e2, 1e5] GFLOPS.
pub fn random_vehicle_load(rng: &mut impl Rng) -> VehicleTaskLoad {
    let n = rng.gen_range(1..=20usize);
    let tasks = (0..n)
        .map(|k| (k as u64, rng.gen_range(1.0..=1e4)))
        .collect();
    let capacity = rng.gen_range(1e2..=1e5);
    VehicleTaskLoad::new(0, tasks, capacity).expect("generated load is valid")
}

/// Random two-task, three-vehicle assignment instance with thresholds and
/// loads chosen so that both single- and double-replica optima occur.
pub fn random_small_problem(seed: u64) -> AssignmentProblem {
    let mut rng = stream_rng(seed, &[0x512E]);
    let tasks = (0..2)
        .map(|i| {
            TaskSpec::new(
                i,
                0.0,
                rng.gen_range(1000.0..=2000.0),
                rng.gen_range(1e4..=1e5),
                rng.gen_range(5e3..=5e4),
                rng.gen_range(0.15..=0.35),
            )
            .expect("generated task is valid")
        })
        .collect();
    let vehicles = (0..3)
        .map(|v| CandidateVehicle {
            vehicle_id: 100 + v,
            capacity: rng.gen_range(4e3..=1.2e4),
            reliability_rate: 1.0,
            in_progress: rng.gen_range(0..=2usize),
            down_aggregate: rng.gen_range(5e6..=5e7),
            down_flows: rng.gen_range(0..=1usize),
            up_aggregate: rng.gen_range(2e6..=2e7),
            up_flows: rng.gen_range(0..=1usize),
        })
        .collect();
    AssignmentProblem::new(tasks, vec![], vehicles).expect("generated problem is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSuiteReport {
    pub cases: usize,
    pub max_stationarity: f64,
    pub max_slack: f64,
    /// Largest relative objective gap between the closed form and the
    /// numerical minimizer.
    pub max_objective_gap: f64,
}

/// Closed form vs numerical minimizer on `cases` random loads.
pub fn run_allocation_suite(seed: u64, cases: usize) -> AllocationSuiteReport {
    let mut report = AllocationSuiteReport {
        cases,
        max_stationarity: 0.0,
        max_slack: 0.0,
        max_objective_gap: 0.0,
    };
    for case in 0..cases {
        let mut rng = stream_rng(seed, &[0xA110C, case as u64]);
        let load = random_vehicle_load(&mut rng);
        let closed = optimal_allocation(&load);
        let (stationarity, slack) =
            kkt_residual(&load, &closed).expect("closed form yields positive speeds");
        report.max_stationarity = report.max_stationarity.max(stationarity);
        report.max_slack = report.max_slack.max(slack);

        let computes: Vec<f64> = load.tasks.iter().map(|&(_, c)| c).collect();
        let closed_split: Vec<f64> = closed.iter().map(|&(_, g)| g).collect();
        let numerical = golden_section_split(&computes, load.capacity, 400);
        let f_closed = allocation_objective(&computes, &closed_split);
        let f_numerical = allocation_objective(&computes, &numerical);
        let gap = (f_numerical - f_closed).abs() / f_numerical.max(f64::MIN_POSITIVE);
        report.max_objective_gap = report.max_objective_gap.max(gap);
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSuiteReport {
    pub cases: usize,
    /// Cases where the swarm landed within the tolerance of the exhaustive
    /// optimum (or correctly reported infeasibility).
    pub within_tolerance: usize,
    /// Cases with no feasible assignment at all.
    pub infeasible_cases: usize,
    pub max_gap: f64,
    /// Feasible-flagged results that do not actually satisfy the per-task
    /// constraint check.
    pub feasible_flag_violations: usize,
    /// Results scoring below the exhaustive optimum (impossible unless the
    /// two evaluations diverge).
    pub lower_bound_violations: usize,
}

/// Swarm search vs exhaustive enumeration on `cases` random 2x3 instances.
pub fn run_assignment_suite(seed: u64, cases: usize, tolerance: f64) -> AssignmentSuiteReport {
    let mut report = AssignmentSuiteReport {
        cases,
        within_tolerance: 0,
        infeasible_cases: 0,
        max_gap: 0.0,
        feasible_flag_violations: 0,
        lower_bound_violations: 0,
    };
    for case in 0..cases {
        let problem = random_small_problem(seed.wrapping_add(case as u64));
        let config = SwarmConfig {
            seed: seed.wrapping_add(1000).wrapping_add(case as u64),
            ..SwarmConfig::default()
        };
        let result = pso_assign(&problem, &config).expect("instance is well formed");
        if result.feasible {
            let recheck = crate::assigner::feasibility_check(&problem, &result.assignment);
            if !recheck.iter().all(|&f| f) {
                report.feasible_flag_violations += 1;
            }
        }
        match enumerate_assignments(&problem) {
            None => {
                report.infeasible_cases += 1;
                if !result.feasible {
                    report.within_tolerance += 1;
                }
            }
            Some(best) => {
                if !result.feasible {
                    continue;
                }
                let gap =
                    (result.total_predicted_latency - best.total_latency) / best.total_latency;
                report.max_gap = report.max_gap.max(gap);
                if gap < -1e-9 {
                    report.lower_bound_violations += 1;
                } else if gap <= tolerance {
                    report.within_tolerance += 1;
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_split_agrees_with_the_closed_form() {
        let computes = vec![100.0, 400.0];
        let split = golden_section_split(&computes, 1e4, 400);
        assert!((split[0] - 10_000.0 / 3.0).abs() < 1e-3, "got {}", split[0]);
        assert!((split[1] - 20_000.0 / 3.0).abs() < 1e-3, "got {}", split[1]);
        let f_num = allocation_objective(&computes, &split);
        let f_closed = (100.0f64.sqrt() + 400.0f64.sqrt()).powi(2) / 1e4;
        assert!((f_num - f_closed).abs() / f_closed < 1e-9);
    }

    #[test]
    fn numerical_split_handles_mixed_and_zero_loads() {
        let computes = vec![0.0, 9000.0, 1.0, 2500.0];
        let capacity = 777.0;
        let split = golden_section_split(&computes, capacity, 400);
        assert_eq!(split[0], 0.0);
        let total: f64 = split.iter().sum();
        assert!((total - capacity).abs() < 1e-6 * capacity);
        let load = VehicleTaskLoad::new(
            0,
            computes.iter().enumerate().map(|(i, &c)| (i as u64, c)).collect(),
            capacity,
        )
        .unwrap();
        let closed: Vec<f64> = optimal_allocation(&load).iter().map(|&(_, g)| g).collect();
        let gap = (allocation_objective(&computes, &split)
            - allocation_objective(&computes, &closed))
        .abs()
            / allocation_objective(&computes, &closed);
        assert!(gap < 1e-8, "relative gap {gap}");
    }

    #[test]
    fn enumeration_bounds_the_swarm_from_below() {
        for seed in 0..10u64 {
            let problem = random_small_problem(seed);
            let config = SwarmConfig { seed: seed ^ 0xBEEF, ..SwarmConfig::default() };
            let result = pso_assign(&problem, &config).unwrap();
            if let Some(best) = enumerate_assignments(&problem) {
                if result.feasible {
                    assert!(
                        result.total_predicted_latency >= best.total_latency - 1e-9,
                        "seed {seed}: swarm {} beat exhaustive {}",
                        result.total_predicted_latency,
                        best.total_latency
                    );
                }
            }
        }
    }

    #[test]
    fn small_suites_pass_cleanly() {
        let alloc = run_allocation_suite(3, 20);
        assert!(alloc.max_stationarity < 1e-6, "stationarity {}", alloc.max_stationarity);
        assert!(alloc.max_slack < 1e-6, "slack {}", alloc.max_slack);
        assert!(alloc.max_objective_gap < 1e-6, "gap {}", alloc.max_objective_gap);

        let assign = run_assignment_suite(3, 10, 0.05);
        assert_eq!(assign.feasible_flag_violations, 0);
        assert_eq!(assign.lower_bound_violations, 0);
        assert!(assign.within_tolerance >= 9, "only {} within", assign.within_tolerance);
    }
}
