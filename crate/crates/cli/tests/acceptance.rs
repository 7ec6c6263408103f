//! Acceptance suite. Each test checks one end-to-end guarantee, prints a
//! single PASS/FAIL line with the measured numbers (visible under
//! `--nocapture` or on failure), and only then asserts, so a failure always
//! shows the full measurement.

use std::fs;
use std::time::{Duration, Instant};

use rand::Rng;

use cave_cli::{cmd_run, cmd_sweep, RunOverrides, EXIT_OK};
use cave_core::assigner::{barrier_objective, evaluate_assignment};
use cave_core::model::{unreliability_from_success_probs, Assignment};
use cave_core::oracle::{random_small_problem, run_allocation_suite, run_assignment_suite};
use cave_core::seeds::stream_rng;
use cave_sim::{run, run_with_audit, ScenarioConfig, SchedulerKind};

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn assert_budget(name: &str, elapsed: Duration, budget: Duration) {
    assert!(
        elapsed <= budget,
        "{name} took {elapsed:.2?}, over the {budget:.2?} budget"
    );
}

#[test]
fn allocation_closed_form_matches_numerical_oracle() {
    let start = Instant::now();
    let report = run_allocation_suite(1, 200);
    let elapsed = start.elapsed();
    let ok = report.max_objective_gap < 1e-6
        && report.max_stationarity < 1e-6
        && report.max_slack < 1e-6;
    println!(
        "acceptance closed-form allocation vs numerical minimizer: {} \
         (200 loads, objective gap {:.2e}, stationarity {:.2e}, slack {:.2e}, {:.2?})",
        verdict(ok),
        report.max_objective_gap,
        report.max_stationarity,
        report.max_slack,
        elapsed
    );
    assert!(ok, "allocation oracle gaps exceeded 1e-6: {report:?}");
    assert_budget("allocation suite", elapsed, Duration::from_secs(10));
}

#[test]
fn swarm_assignment_tracks_exhaustive_enumeration() {
    let start = Instant::now();
    let report = run_assignment_suite(1, 100, 0.05);
    let elapsed = start.elapsed();
    let ok = report.within_tolerance >= 90
        && report.feasible_flag_violations == 0
        && report.lower_bound_violations == 0;
    println!(
        "acceptance swarm vs exhaustive enumeration: {} \
         ({}/100 within 5%, {} infeasible instances, max gap {:.2}%, \
         {} feasibility-flag violations, {} lower-bound violations, {:.2?})",
        verdict(ok),
        report.within_tolerance,
        report.infeasible_cases,
        report.max_gap * 100.0,
        report.feasible_flag_violations,
        report.lower_bound_violations,
        elapsed
    );
    assert!(ok, "assignment suite out of tolerance: {report:?}");
    assert_budget("assignment suite", elapsed, Duration::from_secs(60));
}

#[test]
fn monte_carlo_failure_frequency_matches_product_form() {
    let start = Instant::now();
    // two replicas succeeding with probability 0.9 and 0.8; the task fails
    // only when both do, so the product form gives 0.1 * 0.2 = 0.02
    let expected = unreliability_from_success_probs([0.9, 0.8]);
    let mut rng = stream_rng(3, &[0x3C]);
    let trials = 10_000;
    let mut failures = 0usize;
    for _ in 0..trials {
        let first: f64 = rng.gen();
        let second: f64 = rng.gen();
        if first >= 0.9 && second >= 0.8 {
            failures += 1;
        }
    }
    let frequency = failures as f64 / trials as f64;
    let elapsed = start.elapsed();
    let ok = (frequency - 0.02).abs() <= 0.005 && (expected - 0.02).abs() < 1e-12;
    println!(
        "acceptance two-replica failure frequency: {} \
         (expected {:.4}, observed {:.4} over {} trials, {:.2?})",
        verdict(ok),
        expected,
        frequency,
        trials,
        elapsed
    );
    assert!(ok, "empirical failure frequency {frequency} strayed from {expected}");
    assert_budget("failure frequency", elapsed, Duration::from_secs(5));
}

#[test]
fn sixty_second_run_conserves_work_and_honors_capacity() {
    let start = Instant::now();
    let config = ScenarioConfig { duration: 60.0, seed: 7, ..ScenarioConfig::default() };
    let outcome = run_with_audit(&config).unwrap();
    let elapsed = start.elapsed();
    let audit = &outcome.audit;
    let ok = audit.replicas_completed > 0
        && audit.max_work_gap < 1e-9
        && audit.max_capacity_excess <= 1e-9 * config.capacity
        && audit.max_latency_mismatch < 1e-9
        && audit.dropped_tasks == 0;
    println!(
        "acceptance 60 s conservation audit: {} \
         ({} replicas completed, work gap {:.2e}, capacity excess {:.2e} GFLOPS, \
         latency mismatch {:.2e} s, {} dropped, {:.2?})",
        verdict(ok),
        audit.replicas_completed,
        audit.max_work_gap,
        audit.max_capacity_excess,
        audit.max_latency_mismatch,
        audit.dropped_tasks,
        elapsed
    );
    assert!(ok, "conservation audit failed: {audit:?}");
    assert_budget("conservation audit", elapsed, Duration::from_secs(120));
}

/// Averages the per-run aggregates over seeds 1..=5.
fn seed_average(config: &ScenarioConfig) -> (f64, f64, f64) {
    let mut latency = 0.0;
    let mut under = 0.0;
    let mut redundancy = 0.0;
    for seed in 1..=5 {
        let report = run(&ScenarioConfig { seed, ..config.clone() }).unwrap();
        latency += report.mean_latency_s.expect("runs at these scales always succeed tasks");
        under += report.frac_under_threshold;
        redundancy += report.mean_redundancy;
    }
    (latency / 5.0, under / 5.0, redundancy / 5.0)
}

// Expected to fail at the default scenario: with 10..100 Kbit payloads the
// analytic link moves data in well under a millisecond, so latency is
// compute-bound. Legs (a), (b) and (d) need transmission-heavy operating
// points to separate the schedulers, and leg (c)'s replica counts presuppose
// single replicas being predicted-infeasible at H = 0.2, which a sub-0.223 s
// round trip never is. Each leg still runs and reports its measurement.
#[test]
fn scheduler_comparison_reproduces_expected_trends() {
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();

    let cave = seed_average(&ScenarioConfig::default());
    let baseline = seed_average(&ScenarioConfig {
        scheduler: SchedulerKind::Baseline,
        ..ScenarioConfig::default()
    });
    let fpso = seed_average(&ScenarioConfig {
        scheduler: SchedulerKind::FpsoMr,
        ..ScenarioConfig::default()
    });

    let ordering_ok = cave.0 < fpso.0 && fpso.0 < baseline.0;
    println!(
        "  trend (a) latency ordering cave < fpso_mr < baseline: {} \
         (cave {:.4} s, fpso_mr {:.4} s, baseline {:.4} s)",
        verdict(ordering_ok),
        cave.0,
        fpso.0,
        baseline.0
    );
    if !ordering_ok {
        failures.push(format!(
            "latency ordering: cave {:.4}, fpso_mr {:.4}, baseline {:.4}",
            cave.0, fpso.0, baseline.0
        ));
    }

    let under_ok = cave.1 > baseline.1 && cave.1 > fpso.1 && baseline.1 <= 0.05;
    println!(
        "  trend (b) under-threshold fraction highest for cave, near zero for baseline: {} \
         (cave {:.3}, fpso_mr {:.3}, baseline {:.3})",
        verdict(under_ok),
        cave.1,
        fpso.1,
        baseline.1
    );
    if !under_ok {
        failures.push(format!(
            "under-threshold fractions: cave {:.3}, fpso_mr {:.3}, baseline {:.3}",
            cave.1, fpso.1, baseline.1
        ));
    }

    let redundancy_ok = baseline.2 == 1.0
        && (1.5..=3.5).contains(&cave.2)
        && (1.5..=3.5).contains(&fpso.2);
    println!(
        "  trend (c) redundancy baseline exactly 1, swarm schedulers in [1.5, 3.5]: {} \
         (baseline {:.3}, cave {:.3}, fpso_mr {:.3})",
        verdict(redundancy_ok),
        baseline.2,
        cave.2,
        fpso.2
    );
    if !redundancy_ok {
        failures.push(format!(
            "redundancy: baseline {:.3}, cave {:.3}, fpso_mr {:.3}",
            baseline.2, cave.2, fpso.2
        ));
    }

    // longer horizon for the load sweep to shrink seed noise; the queueing
    // signal at these loads is ~1e-4 s and stays below it regardless
    let mut intensity_latencies = Vec::new();
    for intensity in [10.0, 20.0, 30.0, 40.0] {
        let stats = seed_average(&ScenarioConfig {
            arrival_intensity: intensity,
            duration: 60.0,
            ..ScenarioConfig::default()
        });
        intensity_latencies.push(stats.0);
    }
    let intensity_ok = intensity_latencies.windows(2).all(|w| w[0] <= w[1]);
    println!(
        "  trend (d) cave latency non-decreasing in arrival intensity: {} \
         (10/s {:.4}, 20/s {:.4}, 30/s {:.4}, 40/s {:.4})",
        verdict(intensity_ok),
        intensity_latencies[0],
        intensity_latencies[1],
        intensity_latencies[2],
        intensity_latencies[3]
    );
    if !intensity_ok {
        failures.push(format!("latency vs intensity not monotone: {intensity_latencies:?}"));
    }

    let mut threshold_redundancies = Vec::new();
    for threshold in [0.1, 0.2, 0.3, 0.4] {
        let stats = seed_average(&ScenarioConfig {
            fail_threshold: threshold,
            ..ScenarioConfig::default()
        });
        threshold_redundancies.push(stats.2);
    }
    let threshold_ok = threshold_redundancies.windows(2).all(|w| w[0] > w[1]);
    println!(
        "  trend (e) cave redundancy decreasing in the failure threshold: {} \
         (H 0.1 {:.3}, 0.2 {:.3}, 0.3 {:.3}, 0.4 {:.3})",
        verdict(threshold_ok),
        threshold_redundancies[0],
        threshold_redundancies[1],
        threshold_redundancies[2],
        threshold_redundancies[3]
    );
    if !threshold_ok {
        failures.push(format!(
            "redundancy vs threshold not decreasing: {threshold_redundancies:?}"
        ));
    }

    let elapsed = start.elapsed();
    println!(
        "acceptance scheduler comparison trends: {} ({} of 5 sub-trends hold, {:.2?})",
        verdict(failures.is_empty()),
        5 - failures.len(),
        elapsed
    );
    assert_budget("trend reproduction", elapsed, Duration::from_secs(900));
    assert!(failures.is_empty(), "trends not reproduced: {}", failures.join("; "));
}

#[test]
fn repeated_commands_emit_identical_bytes() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let overrides = RunOverrides { seed: Some(7), duration: Some(3.0), ..Default::default() };
    let run_a = dir.path().join("run_a");
    let run_b = dir.path().join("run_b");
    assert_eq!(cmd_run(None, &run_a, &overrides), EXIT_OK);
    assert_eq!(cmd_run(None, &run_b, &overrides), EXIT_OK);
    let tasks_a = fs::read(run_a.join("tasks.csv")).unwrap();
    let tasks_b = fs::read(run_b.join("tasks.csv")).unwrap();

    let spec_path = dir.path().join("sweep.json");
    fs::write(
        &spec_path,
        r#"{"parameter": "arrival_intensity", "values": [10.0, 20.0], "repetitions": 2,
            "base": {"duration": 1.0, "seed": 100}}"#,
    )
    .unwrap();
    let sweep_a = dir.path().join("sweep_a");
    let sweep_b = dir.path().join("sweep_b");
    assert_eq!(cmd_sweep(&spec_path, &sweep_a), EXIT_OK);
    assert_eq!(cmd_sweep(&spec_path, &sweep_b), EXIT_OK);
    let rows_a = fs::read(sweep_a.join("sweep.csv")).unwrap();
    let rows_b = fs::read(sweep_b.join("sweep.csv")).unwrap();

    let ok = tasks_a == tasks_b && !tasks_a.is_empty() && rows_a == rows_b && !rows_a.is_empty();
    println!(
        "acceptance seeded commands repeat byte-identically: {} \
         (tasks.csv {} bytes, sweep.csv {} bytes, {:.2?})",
        verdict(ok),
        tasks_a.len(),
        rows_a.len(),
        start.elapsed()
    );
    assert!(ok, "repeated invocations diverged");
}

#[test]
fn barrier_penalty_equals_scaled_log_margin_gap() {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut max_excess: f64 = 0.0;
    for seed in 0..60 {
        let problem = random_small_problem(seed);
        let pairs: Vec<(u64, u64)> = problem
            .incoming
            .iter()
            .flat_map(|t| problem.vehicles.iter().map(move |v| (t.id, v.vehicle_id)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let mut assignment = Assignment::new();
            for (bit, &(task, vehicle)) in pairs.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    assignment.insert(task, vehicle);
                }
            }
            let eval = evaluate_assignment(&problem, &assignment);
            let strictly_feasible = problem
                .incoming
                .iter()
                .zip(&eval.unreliability)
                .all(|(t, &u)| u < t.fail_threshold);
            if !strictly_feasible {
                continue;
            }
            let plain = barrier_objective(&problem, &assignment, 0.0);
            let margin_sum: f64 = problem
                .incoming
                .iter()
                .zip(&eval.unreliability)
                .map(|(t, &u)| (t.fail_threshold - u).ln().abs())
                .sum();
            for mu in [0.05, 0.3, 1.0] {
                let penalized = barrier_objective(&problem, &assignment, mu);
                let gap = (penalized - plain).abs();
                let bound = mu * margin_sum + 1e-9;
                checked += 1;
                if gap > bound {
                    violations += 1;
                    max_excess = max_excess.max(gap - bound);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = violations == 0 && checked > 1000;
    println!(
        "acceptance barrier gap bounded by mu-scaled log margins: {} \
         ({} feasible cases checked, {} violations, worst excess {:.2e}, {:.2?})",
        verdict(ok),
        checked,
        violations,
        max_excess,
        elapsed
    );
    assert!(ok, "{violations} of {checked} cases broke the barrier bound");
}
