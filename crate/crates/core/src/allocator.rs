//! Per-vehicle computing-speed allocation.
//!
//! Fixing an assignment, the per-vehicle subproblem is to split capacity
//! G among the replica loads C_1..C_n so that the summed compute latencies
//! sum_i C_i/g_i are minimal subject to sum_i g_i <= G. The objective is
//! convex and the stationarity conditions give the closed form
//!
//! ```text
//! g_i = sqrt(C_i) * G / sum_k sqrt(C_k)
//! ```
//!
//! with the capacity constraint tight and multiplier
//! `lambda = (sum_k sqrt(C_k) / G)^2`. Zero loads receive zero speed, so
//! replicas that already finished computing drop out when the caller passes
//! remaining loads.

use crate::error::CoreError;

/// Snapshot of one vehicle's replica loads. `tasks` holds (task id, compute
/// load in GFLOP); loads are nonnegative and mid-flight callers pass the
/// *remaining* load.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTaskLoad {
    pub vehicle_id: u64,
    pub tasks: Vec<(u64, f64)>,
    /// Capacity G, GFLOPS. Strictly positive.
    pub capacity: f64,
}

impl VehicleTaskLoad {
    pub fn new(vehicle_id: u64, tasks: Vec<(u64, f64)>, capacity: f64) -> Result<Self, CoreError> {
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(CoreError::NonPositive { what: "vehicle capacity", value: capacity });
        }
        for &(task, c) in &tasks {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(CoreError::invalid(
                    "task compute load",
                    format!("task {task}: must be >= 0, got {c}"),
                ));
            }
        }
        Ok(VehicleTaskLoad { vehicle_id, tasks, capacity })
    }
}

/// Latency-optimal speed split: g_i proportional to sqrt(C_i), exhausting
/// capacity. Returns (task id, GFLOPS) in input order; an empty or all-zero
/// load yields all-zero speeds.
pub fn optimal_allocation(load: &VehicleTaskLoad) -> Vec<(u64, f64)> {
    let root_sum: f64 = load.tasks.iter().map(|&(_, c)| c.sqrt()).sum();
    if root_sum <= 0.0 {
        return load.tasks.iter().map(|&(id, _)| (id, 0.0)).collect();
    }
    load.tasks
        .iter()
        .map(|&(id, c)| (id, c.sqrt() * load.capacity / root_sum))
        .collect()
}

/// First-order optimality residuals of a proposed split: the maximum
/// stationarity defect `max_i |lambda - C_i/g_i^2|` over positive loads and
/// the capacity slackness `|sum_i g_i - G|`. Positive loads must come with
/// positive speeds. An empty load is trivially optimal.
pub fn kkt_residual(
    load: &VehicleTaskLoad,
    allocation: &[(u64, f64)],
) -> Result<(f64, f64), CoreError> {
    if allocation.len() != load.tasks.len() {
        return Err(CoreError::invalid(
            "allocation",
            format!("expected {} entries, got {}", load.tasks.len(), allocation.len()),
        ));
    }
    let root_sum: f64 = load.tasks.iter().map(|&(_, c)| c.sqrt()).sum();
    if root_sum <= 0.0 {
        return Ok((0.0, allocation.iter().map(|&(_, g)| g).sum::<f64>().abs()));
    }
    let lambda = (root_sum / load.capacity).powi(2);
    let mut stationarity: f64 = 0.0;
    let mut total = 0.0;
    for (&(task, c), &(alloc_task, g)) in load.tasks.iter().zip(allocation) {
        if task != alloc_task {
            return Err(CoreError::invalid(
                "allocation",
                format!("entry order mismatch: load task {task} vs allocation task {alloc_task}"),
            ));
        }
        total += g;
        if c > 0.0 {
            if !(g > 0.0) {
                return Err(CoreError::ZeroAllocation { task });
            }
            stationarity = stationarity.max((lambda - c / (g * g)).abs());
        }
    }
    Ok((stationarity, (total - load.capacity).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn load(tasks: Vec<(u64, f64)>, capacity: f64) -> VehicleTaskLoad {
        VehicleTaskLoad::new(7, tasks, capacity).unwrap()
    }

    #[test]
    fn split_follows_square_roots() {
        let l = load(vec![(1, 100.0), (2, 400.0)], 1e4);
        let g = optimal_allocation(&l);
        assert!((g[0].1 - 10_000.0 / 3.0).abs() < 1e-6, "got {}", g[0].1);
        assert!((g[1].1 - 20_000.0 / 3.0).abs() < 1e-6, "got {}", g[1].1);

        let (stat, slack) = kkt_residual(&l, &g).unwrap();
        assert!(stat < 1e-6, "stationarity residual {stat}");
        assert!(slack < 1e-6, "slackness residual {slack}");
    }

    #[test]
    fn equal_split_is_suboptimal_for_unequal_loads() {
        let l = load(vec![(1, 100.0), (2, 400.0)], 1e4);
        let equal = vec![(1, 5000.0), (2, 5000.0)];
        let (stat, slack) = kkt_residual(&l, &equal).unwrap();
        assert!(slack < EPS);
        assert!(stat > 1e-6, "equal split should violate stationarity, residual {stat}");
    }

    #[test]
    fn single_task_takes_the_whole_vehicle() {
        let l = load(vec![(9, 1234.5)], 5e3);
        let g = optimal_allocation(&l);
        assert_eq!(g.len(), 1);
        assert!((g[0].1 - 5e3).abs() < EPS);
    }

    #[test]
    fn equal_loads_split_equally() {
        let l = load(vec![(1, 800.0), (2, 800.0), (3, 800.0), (4, 800.0)], 1e4);
        for (_, g) in optimal_allocation(&l) {
            assert!((g - 2500.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finished_replicas_get_nothing() {
        let l = load(vec![(1, 0.0), (2, 900.0)], 1e4);
        let g = optimal_allocation(&l);
        assert!((g[0].1 - 0.0).abs() < EPS);
        assert!((g[1].1 - 1e4).abs() < EPS);
        let (stat, slack) = kkt_residual(&l, &g).unwrap();
        assert!(stat < 1e-6 && slack < 1e-6);
    }

    #[test]
    fn empty_load_is_trivially_optimal() {
        let l = load(vec![], 1e4);
        assert!(optimal_allocation(&l).is_empty());
        let (stat, slack) = kkt_residual(&l, &[]).unwrap();
        assert!(stat.abs() < EPS && slack.abs() < EPS);
    }

    #[test]
    fn residual_rejects_starved_active_tasks() {
        let l = load(vec![(1, 100.0), (2, 400.0)], 1e4);
        let starved = vec![(1, 0.0), (2, 1e4)];
        assert_eq!(kkt_residual(&l, &starved), Err(CoreError::ZeroAllocation { task: 1 }));
    }

    #[test]
    fn allocation_exhausts_capacity() {
        let l = load(vec![(1, 123.0), (2, 456.0), (3, 789.0)], 7777.0);
        let total: f64 = optimal_allocation(&l).iter().map(|&(_, g)| g).sum();
        assert!((total - 7777.0).abs() < 1e-9 * 7777.0);
    }
}
