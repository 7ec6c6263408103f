//! Command implementations behind the `cave` binary: seeded single runs,
//! parameter sweeps over all three schedulers, and the self-check suites
//! comparing the closed-form split and the swarm against independent oracles.
//!
//! Every command returns a POSIX exit code: 0 success, 1 an oracle tolerance
//! was exceeded, 2 bad configuration or usage, 3 I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cave_core::oracle::{run_allocation_suite, run_assignment_suite};
use cave_sim::{run, summary_json, tasks_csv, MetricsReport, ScenarioConfig, SchedulerKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Failures carrying their exit code; `Display` is the user diagnostic.
#[derive(Debug)]
enum CmdError {
    Config(String),
    Io(String),
    Tolerance(String),
}

impl CmdError {
    fn code(&self) -> i32 {
        match self {
            CmdError::Config(_) => EXIT_CONFIG,
            CmdError::Io(_) => EXIT_IO,
            CmdError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Io(m) | CmdError::Tolerance(m) => m,
        }
    }
}

fn finish(result: Result<(), CmdError>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn read_text(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path).map_err(|e| CmdError::Io(format!("reading {}: {e}", path.display())))
}

fn write_text(path: &Path, contents: &str) -> Result<(), CmdError> {
    fs::write(path, contents).map_err(|e| CmdError::Io(format!("writing {}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<(), CmdError> {
    fs::create_dir_all(path)
        .map_err(|e| CmdError::Io(format!("creating {}: {e}", path.display())))
}

/// Command-line overrides applied on top of the loaded scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub scheduler: Option<SchedulerKind>,
    pub duration: Option<f64>,
}

impl RunOverrides {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(scheduler) = self.scheduler {
            config.scheduler = scheduler;
        }
        if let Some(duration) = self.duration {
            config.duration = duration;
        }
    }
}

fn load_scenario(
    config_path: Option<&Path>,
    overrides: &RunOverrides,
) -> Result<ScenarioConfig, CmdError> {
    let mut config = match config_path {
        Some(path) => {
            let text = read_text(path)?;
            ScenarioConfig::from_json(&text).map_err(|e| CmdError::Config(e.to_string()))?
        }
        None => ScenarioConfig::default(),
    };
    overrides.apply(&mut config);
    config.validate().map_err(|e| CmdError::Config(e.to_string()))?;
    Ok(config)
}

/// Runs one scenario and writes `tasks.csv` plus `summary.json` into
/// `out_dir`.
pub fn cmd_run(config_path: Option<&Path>, out_dir: &Path, overrides: &RunOverrides) -> i32 {
    finish(run_inner(config_path, out_dir, overrides))
}

fn run_inner(
    config_path: Option<&Path>,
    out_dir: &Path,
    overrides: &RunOverrides,
) -> Result<(), CmdError> {
    let config = load_scenario(config_path, overrides)?;
    let report = run(&config).map_err(|e| CmdError::Config(e.to_string()))?;
    ensure_dir(out_dir)?;
    write_text(&out_dir.join("tasks.csv"), &tasks_csv(&report.rows))?;
    write_text(&out_dir.join("summary.json"), &summary_json(&report))?;
    println!(
        "{}: {} tasks, mean latency {}, {:.1}% under threshold, mean redundancy {:.2}",
        config.scheduler,
        report.tasks_total,
        report
            .mean_latency_s
            .map(|v| format!("{:.1} ms", v * 1e3))
            .unwrap_or_else(|| "n/a".into()),
        report.frac_under_threshold * 100.0,
        report.mean_redundancy,
    );
    Ok(())
}

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    ArrivalIntensity,
    FailThreshold,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::ArrivalIntensity => "arrival_intensity",
            SweepParameter::FailThreshold => "fail_threshold",
        }
    }

    fn apply(&self, config: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParameter::ArrivalIntensity => config.arrival_intensity = value,
            SweepParameter::FailThreshold => config.fail_threshold = value,
        }
    }
}

/// A sweep: one varied parameter, each value repeated under shifted seeds,
/// every scheduler run on the identical traffic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub repetitions: usize,
    #[serde(default)]
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep values must be nonempty".into());
        }
        if self.repetitions == 0 {
            return Err("repetitions must be >= 1".into());
        }
        self.base.validate().map_err(|e| e.to_string())?;
        for &value in &self.values {
            let mut probe = self.base.clone();
            self.parameter.apply(&mut probe, value);
            probe
                .validate()
                .map_err(|e| format!("value {value} for {}: {e}", self.parameter.as_str()))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
        spec.validate()?;
        Ok(spec)
    }
}

pub const SWEEP_CSV_HEADER: &str =
    "scheduler,param,value,rep,mean_latency_s,p80_latency_s,frac_under_threshold,mean_redundancy";

/// All schedulers, ascending (scheduler, param, value, rep). Serial and
/// parallel execution orders must emit identical files, so rows are keyed,
/// not appended in completion order.
pub fn sweep_rows(spec: &SweepSpec) -> Result<Vec<(String, MetricsReport)>, String> {
    let mut schedulers =
        [SchedulerKind::Baseline, SchedulerKind::Cave, SchedulerKind::FpsoMr];
    schedulers.sort_by_key(|s| s.as_str());
    let mut rows = Vec::new();
    for scheduler in schedulers {
        for &value in &spec.values {
            for rep in 0..spec.repetitions {
                let mut config = spec.base.clone();
                spec.parameter.apply(&mut config, value);
                config.scheduler = scheduler;
                config.seed = spec.base.seed.wrapping_add(rep as u64);
                let report = run(&config).map_err(|e| e.to_string())?;
                let mut line = format!(
                    "{},{},{},{rep},",
                    scheduler.as_str(),
                    spec.parameter.as_str(),
                    trim_float(value),
                );
                match report.mean_latency_s {
                    Some(v) => write!(line, "{v:.6},").unwrap(),
                    None => line.push(','),
                }
                match report.p80_latency_s {
                    Some(v) => write!(line, "{v:.6},").unwrap(),
                    None => line.push(','),
                }
                write!(
                    line,
                    "{:.6},{:.6}",
                    report.frac_under_threshold, report.mean_redundancy
                )
                .unwrap();
                rows.push((line, report));
            }
        }
    }
    Ok(rows)
}

/// Shortest decimal that round-trips, so sweep values read back cleanly.
fn trim_float(value: f64) -> String {
    let mut s = format!("{value}");
    if !s.contains('.') && !s.contains('e') {
        s.push_str(".0");
    }
    s
}

/// Executes the sweep and writes `sweep.csv` into `out_dir`.
pub fn cmd_sweep(sweep_path: &Path, out_dir: &Path) -> i32 {
    finish(sweep_inner(sweep_path, out_dir))
}

fn sweep_inner(sweep_path: &Path, out_dir: &Path) -> Result<(), CmdError> {
    let text = read_text(sweep_path)?;
    let spec = SweepSpec::from_json(&text).map_err(CmdError::Config)?;
    let rows = sweep_rows(&spec).map_err(CmdError::Config)?;
    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    for (line, _) in &rows {
        csv.push_str(line);
        csv.push('\n');
    }
    ensure_dir(out_dir)?;
    write_text(&out_dir.join("sweep.csv"), &csv)?;
    println!(
        "swept {} over {} values x {} reps x 3 schedulers -> {} rows",
        spec.parameter.as_str(),
        spec.values.len(),
        spec.repetitions,
        rows.len()
    );
    Ok(())
}

pub const ALLOCATION_SUITE_CASES: usize = 200;
pub const ASSIGNMENT_SUITE_CASES: usize = 100;
pub const ASSIGNMENT_SUITE_TOLERANCE: f64 = 0.05;
/// Swarm must land within tolerance in at least this many suite cases.
pub const ASSIGNMENT_SUITE_REQUIRED: usize = 90;

/// Runs one of the self-check suites by name, printing gap statistics.
pub fn cmd_oracle(suite: &str) -> i32 {
    finish(oracle_inner(suite))
}

fn oracle_inner(suite: &str) -> Result<(), CmdError> {
    match suite {
        "allocation" => {
            let report = run_allocation_suite(1, ALLOCATION_SUITE_CASES);
            println!(
                "allocation suite: {} cases, max stationarity {:.3e}, max slack {:.3e}, max objective gap {:.3e}",
                report.cases, report.max_stationarity, report.max_slack, report.max_objective_gap
            );
            let ok = report.max_stationarity < 1e-6
                && report.max_slack < 1e-6
                && report.max_objective_gap < 1e-6;
            if ok {
                Ok(())
            } else {
                Err(CmdError::Tolerance("allocation suite exceeded 1e-6 gaps".into()))
            }
        }
        "assignment" => {
            let report =
                run_assignment_suite(1, ASSIGNMENT_SUITE_CASES, ASSIGNMENT_SUITE_TOLERANCE);
            println!(
                "assignment suite: {} cases, {} within {:.0}% of the exhaustive optimum ({} infeasible), max gap {:.3}%, {} flag violations, {} lower-bound violations",
                report.cases,
                report.within_tolerance,
                ASSIGNMENT_SUITE_TOLERANCE * 100.0,
                report.infeasible_cases,
                report.max_gap * 100.0,
                report.feasible_flag_violations,
                report.lower_bound_violations
            );
            let ok = report.within_tolerance >= ASSIGNMENT_SUITE_REQUIRED
                && report.feasible_flag_violations == 0
                && report.lower_bound_violations == 0;
            if ok {
                Ok(())
            } else {
                Err(CmdError::Tolerance(format!(
                    "assignment suite: only {} of {} cases within tolerance",
                    report.within_tolerance, report.cases
                )))
            }
        }
        other => Err(CmdError::Config(format!(
            "unknown oracle suite `{other}` (expected allocation | assignment)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_parses_and_validates() {
        let spec = SweepSpec::from_json(
            r#"{
                "parameter": "arrival_intensity",
                "values": [10.0, 20.0],
                "repetitions": 2,
                "base": {"duration": 1.0, "seed": 5}
            }"#,
        )
        .unwrap();
        assert_eq!(spec.parameter, SweepParameter::ArrivalIntensity);
        assert_eq!(spec.values, vec![10.0, 20.0]);
        assert_eq!(spec.base.seed, 5);

        assert!(SweepSpec::from_json(r#"{"parameter":"fail_threshold","values":[],"repetitions":1}"#).is_err());
        assert!(SweepSpec::from_json(r#"{"parameter":"fail_threshold","values":[0.2],"repetitions":0}"#).is_err());
        // threshold above 1 fails the per-value config validation
        assert!(SweepSpec::from_json(r#"{"parameter":"fail_threshold","values":[1.5],"repetitions":1}"#).is_err());
    }

    #[test]
    fn sweep_rows_are_ordered_and_seeded_per_rep() {
        let spec = SweepSpec {
            parameter: SweepParameter::ArrivalIntensity,
            values: vec![30.0, 10.0],
            repetitions: 2,
            base: ScenarioConfig { duration: 0.5, seed: 100, ..Default::default() },
        };
        let rows = sweep_rows(&spec).unwrap();
        assert_eq!(rows.len(), 12);
        let schedulers: Vec<&str> =
            rows.iter().map(|(l, _)| l.split(',').next().unwrap()).collect();
        let mut sorted = schedulers.clone();
        sorted.sort();
        assert_eq!(schedulers, sorted, "rows not sorted by scheduler");
        // values appear in spec order within a scheduler block, reps inside
        assert!(rows[0].0.starts_with("baseline,arrival_intensity,30.0,0,"));
        assert!(rows[1].0.starts_with("baseline,arrival_intensity,30.0,1,"));
        assert!(rows[2].0.starts_with("baseline,arrival_intensity,10.0,0,"));
        assert_eq!(rows[0].1.seed, 100);
        assert_eq!(rows[1].1.seed, 101);
    }

    #[test]
    fn float_trimming_round_trips() {
        assert_eq!(trim_float(10.0), "10.0");
        assert_eq!(trim_float(0.2), "0.2");
        assert_eq!(trim_float(0.15), "0.15");
    }

    #[test]
    fn unknown_oracle_suite_is_a_usage_error() {
        assert_eq!(cmd_oracle("nonsense"), EXIT_CONFIG);
    }
}
