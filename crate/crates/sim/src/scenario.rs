//! Experiment configuration.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Which scheduler dispatches incoming tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Barrier-penalized swarm assignment plus square-root capacity splits.
    Cave,
    /// One replica on the least-loaded vehicle, equal capacity shares.
    Baseline,
    /// Swarm assignment that ignores in-flight work, equal capacity shares.
    FpsoMr,
}

impl SchedulerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchedulerKind::Cave => "cave",
            SchedulerKind::Baseline => "baseline",
            SchedulerKind::FpsoMr => "fpso_mr",
        }
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "cave" => Ok(SchedulerKind::Cave),
            "baseline" => Ok(SchedulerKind::Baseline),
            "fpso_mr" => Ok(SchedulerKind::FpsoMr),
            other => Err(SimError::invalid(
                "scheduler",
                format!("unknown scheduler `{other}` (expected cave | baseline | fpso_mr)"),
            )),
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full scenario description. Every field has a default so partial JSON
/// configs work; `validate` gates the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Slot length, seconds.
    pub slot_dt: f64,
    /// Simulated horizon, seconds.
    pub duration: f64,
    /// Fleet size, kept constant by respawning departed vehicles.
    pub n_vehicles: usize,
    /// Vehicles spawn uniformly in a disk of this radius, meters.
    pub spawn_radius: f64,
    /// Channel bandwidth per direction, Hz.
    pub bandwidth: f64,
    /// Transmit power, dBm.
    pub tx_power: f64,
    /// Task arrivals per second.
    pub arrival_intensity: f64,
    /// Uniform payload range for each direction, bits.
    pub size_range: [f64; 2],
    /// Uniform compute demand range, GFLOP.
    pub compute_range: [f64; 2],
    /// Per-vehicle compute capacity, GFLOPS.
    pub capacity: f64,
    /// Unreliability ceiling per task.
    pub fail_threshold: f64,
    /// Decay constant of the per-replica success curve, 1/s.
    pub reliability_rate: f64,
    pub scheduler: SchedulerKind,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            slot_dt: 1e-3,
            duration: 30.0,
            n_vehicles: 20,
            spawn_radius: 100.0,
            bandwidth: 1e7,
            tx_power: 20.0,
            arrival_intensity: 20.0,
            size_range: [1e4, 1e5],
            compute_range: [1e3, 2e3],
            capacity: 1e4,
            fail_threshold: 0.2,
            reliability_rate: 1.0,
            scheduler: SchedulerKind::Cave,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        fn positive(field: &'static str, value: f64) -> Result<(), SimError> {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(SimError::invalid(field, format!("must be positive and finite, got {value}")))
            }
        }
        positive("slot_dt", self.slot_dt)?;
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(SimError::invalid("duration", "must be finite and >= 0"));
        }
        if self.n_vehicles == 0 {
            return Err(SimError::invalid("n_vehicles", "need at least one vehicle"));
        }
        positive("spawn_radius", self.spawn_radius)?;
        positive("bandwidth", self.bandwidth)?;
        if !self.tx_power.is_finite() {
            return Err(SimError::invalid("tx_power", "must be finite"));
        }
        if !(self.arrival_intensity >= 0.0 && self.arrival_intensity.is_finite()) {
            return Err(SimError::invalid("arrival_intensity", "must be finite and >= 0"));
        }
        range_ok("size_range", self.size_range, 0.0)?;
        range_ok("compute_range", self.compute_range, f64::MIN_POSITIVE)?;
        positive("capacity", self.capacity)?;
        if !(self.fail_threshold > 0.0 && self.fail_threshold <= 1.0) {
            return Err(SimError::invalid("fail_threshold", "must be in (0, 1]"));
        }
        positive("reliability_rate", self.reliability_rate)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| SimError::invalid("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn n_slots(&self) -> u64 {
        (self.duration / self.slot_dt).round() as u64
    }
}

fn range_ok(field: &'static str, range: [f64; 2], min: f64) -> Result<(), SimError> {
    let [lo, hi] = range;
    if lo.is_finite() && hi.is_finite() && lo >= min && hi >= lo {
        Ok(())
    } else {
        Err(SimError::invalid(field, format!("invalid range [{lo}, {hi}]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_standard_scenario() {
        let c = ScenarioConfig::default();
        assert_eq!(c.slot_dt, 1e-3);
        assert_eq!(c.n_vehicles, 20);
        assert_eq!(c.spawn_radius, 100.0);
        assert_eq!(c.bandwidth, 1e7);
        assert_eq!(c.tx_power, 20.0);
        assert_eq!(c.arrival_intensity, 20.0);
        assert_eq!(c.size_range, [1e4, 1e5]);
        assert_eq!(c.compute_range, [1e3, 2e3]);
        assert_eq!(c.capacity, 1e4);
        assert_eq!(c.fail_threshold, 0.2);
        assert_eq!(c.reliability_rate, 1.0);
        assert_eq!(c.scheduler, SchedulerKind::Cave);
        c.validate().unwrap();
        assert_eq!(c.n_slots(), 30_000);
    }

    #[test]
    fn json_round_trip_preserves_field_names() {
        let c = ScenarioConfig { seed: 42, scheduler: SchedulerKind::FpsoMr, ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        for field in [
            "slot_dt",
            "duration",
            "n_vehicles",
            "spawn_radius",
            "bandwidth",
            "tx_power",
            "arrival_intensity",
            "size_range",
            "compute_range",
            "capacity",
            "fail_threshold",
            "reliability_rate",
            "scheduler",
            "seed",
        ] {
            assert!(text.contains(&format!("\"{field}\"")), "missing {field} in {text}");
        }
        assert!(text.contains("\"fpso_mr\""));
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ScenarioConfig::from_json(r#"{"scheduler":"baseline","seed":7}"#).unwrap();
        assert_eq!(c.scheduler, SchedulerKind::Baseline);
        assert_eq!(c.seed, 7);
        assert_eq!(c.n_vehicles, 20);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut c = ScenarioConfig::default();
        c.slot_dt = 0.0;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::default();
        c.fail_threshold = 1.5;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::default();
        c.size_range = [2e5, 1e4];
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::default();
        c.n_vehicles = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn scheduler_names_parse_both_ways() {
        for kind in [SchedulerKind::Cave, SchedulerKind::Baseline, SchedulerKind::FpsoMr] {
            let s = kind.as_str();
            assert_eq!(s.parse::<SchedulerKind>().unwrap(), kind);
        }
        assert!("pso".parse::<SchedulerKind>().is_err());
    }
}
