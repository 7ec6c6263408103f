//! Link-rate prediction and presumed resource allocation.
//!
//! The ego vehicle cannot know future channel conditions or how a candidate
//! vehicle will split its capacity once more tasks land on it. It therefore
//! predicts: per vehicle and direction it keeps a bounded history of observed
//! transmissions, smooths the implied aggregate link rate with an EWMA, and
//! divides the estimate by the number of flows that would share the link.
//! Capacity is presumed to be split equally among the tasks a vehicle would
//! then hold; the actual split applied later is the optimal one, so the
//! presumption is only a planning device.

use std::collections::BTreeMap;

use crate::error::CoreError;
use crate::model::{LinkRates, VehicleState};

/// Transmission direction on the ego-vehicle link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Up,
}

/// One observed transmission: at `time`, a single flow saw `rate` bits/s
/// while `concurrent_flows` flows shared the link (so the aggregate was
/// `rate * concurrent_flows`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub time: f64,
    pub rate: f64,
    pub concurrent_flows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    /// Ring-buffer capacity per (vehicle, direction).
    pub window: usize,
    /// EWMA retention of history in [0, 1): the smoothed value is
    /// `decay * old + (1 - decay) * new`.
    pub decay: f64,
    /// Aggregate-rate prior used before any sample exists, bits/s.
    pub prior_down_rate: f64,
    pub prior_up_rate: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig { window: 50, decay: 0.3, prior_down_rate: 1e7, prior_up_rate: 1e7 }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.window == 0 {
            return Err(CoreError::invalid("window", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(CoreError::invalid("decay", format!("must be in [0, 1), got {}", self.decay)));
        }
        if !(self.prior_down_rate > 0.0) || !(self.prior_up_rate > 0.0) {
            return Err(CoreError::invalid("prior rates", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct History {
    samples: Vec<RateSample>,
    /// Flows currently in this transmission phase, refreshed by the engine on
    /// phase transitions (samples only arrive while a flow is active).
    current_flows: usize,
}

/// Per-vehicle, per-direction rate history and live flow counts.
#[derive(Debug, Clone)]
pub struct RatePredictor {
    config: PredictorConfig,
    histories: BTreeMap<(u64, Direction), History>,
}

impl RatePredictor {
    pub fn new(config: PredictorConfig) -> Result<Self, CoreError> {
        config.validate()?;
        Ok(RatePredictor { config, histories: BTreeMap::new() })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    /// Records one observed transmission. Timestamps per (vehicle, direction)
    /// must be strictly increasing; the oldest sample falls out once the
    /// window is full.
    pub fn observe(
        &mut self,
        vehicle: u64,
        direction: Direction,
        time: f64,
        rate: f64,
        concurrent_flows: usize,
    ) -> Result<(), CoreError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(CoreError::NonPositive { what: "observed rate", value: rate });
        }
        if concurrent_flows == 0 {
            return Err(CoreError::invalid("concurrent_flows", "observed flow count must be >= 1"));
        }
        let history = self.histories.entry((vehicle, direction)).or_default();
        if let Some(last) = history.samples.last() {
            if time <= last.time {
                return Err(CoreError::OutOfOrderSample { vehicle, last: last.time, time });
            }
        }
        if history.samples.len() == self.config.window {
            history.samples.remove(0);
        }
        history.samples.push(RateSample { time, rate, concurrent_flows });
        history.current_flows = concurrent_flows;
        Ok(())
    }

    /// Refreshes the live flow count without adding a sample (used when a
    /// transmission starts or finishes between observations).
    pub fn set_current_flows(&mut self, vehicle: u64, direction: Direction, flows: usize) {
        self.histories.entry((vehicle, direction)).or_default().current_flows = flows;
    }

    pub fn current_flows(&self, vehicle: u64, direction: Direction) -> usize {
        self.histories.get(&(vehicle, direction)).map_or(0, |h| h.current_flows)
    }

    /// EWMA of the aggregate link rate over the retained window, oldest
    /// first; the prior when no sample exists.
    pub fn aggregate_estimate(&self, vehicle: u64, direction: Direction) -> f64 {
        let prior = match direction {
            Direction::Down => self.config.prior_down_rate,
            Direction::Up => self.config.prior_up_rate,
        };
        let samples = match self.histories.get(&(vehicle, direction)) {
            Some(h) if !h.samples.is_empty() => &h.samples,
            _ => return prior,
        };
        let mut smoothed = samples[0].rate * samples[0].concurrent_flows as f64;
        for s in &samples[1..] {
            let aggregate = s.rate * s.concurrent_flows as f64;
            smoothed = self.config.decay * smoothed + (1.0 - self.config.decay) * aggregate;
        }
        smoothed
    }

    /// Predicted per-flow rates if `planned_extra_flows` more flows join each
    /// direction: the smoothed aggregate divided by everyone sharing it.
    pub fn predict_rates(&self, vehicle: u64, planned_extra_flows: usize) -> LinkRates {
        let per_flow = |direction| {
            let sharers = (self.current_flows(vehicle, direction) + planned_extra_flows).max(1);
            self.aggregate_estimate(vehicle, direction) / sharers as f64
        };
        LinkRates {
            down_rate: per_flow(Direction::Down),
            up_rate: per_flow(Direction::Up),
        }
    }

    /// Drops everything known about a vehicle (it left coverage; its replaced
    /// successor shares nothing with it).
    pub fn forget_vehicle(&mut self, vehicle: u64) {
        self.histories.retain(|&(v, _), _| v != vehicle);
    }

    pub fn sample_count(&self, vehicle: u64, direction: Direction) -> usize {
        self.histories.get(&(vehicle, direction)).map_or(0, |h| h.samples.len())
    }
}

impl Default for RatePredictor {
    fn default() -> Self {
        RatePredictor::new(PredictorConfig::default()).expect("default config is valid")
    }
}

/// Equal-split capacity presumption: the speed each task would get if the
/// vehicle's current `in_progress` set grew by `extra_tasks` (>= 1) and the
/// capacity were split evenly.
pub fn presumed_allocation(vehicle: &VehicleState, extra_tasks: usize) -> Result<f64, CoreError> {
    if extra_tasks == 0 {
        return Err(CoreError::invalid("extra_tasks", "must be >= 1"));
    }
    Ok(vehicle.capacity / (vehicle.in_progress.len() + extra_tasks) as f64)
}
