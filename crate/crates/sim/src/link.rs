//! Analytic direct-link channel between the ego vehicle and a helper.
//!
//! Shannon capacity under a 3.5 GHz urban-microcell path loss with a 7 dB
//! receiver noise figure. The channel is deterministic in the positions; all
//! simultaneous transmissions in one direction split the band equally, so the
//! per-flow rate is the capacity divided by the flow count.

/// Carrier frequency, GHz. Enters only through the path loss intercept.
const CARRIER_GHZ: f64 = 3.5;
/// Thermal noise density, dBm/Hz.
const NOISE_DENSITY_DBM_HZ: f64 = -174.0;
/// Receiver noise figure, dB.
const NOISE_FIGURE_DB: f64 = 7.0;

/// Free-space-like path loss in dB at distance `d` meters, exponent 2.1.
/// Distances under a meter are clamped; the model in unusable that close
/// anyway and the clamp keeps the loss finite.
fn path_loss_db(d: f64) -> f64 {
    let d = d.max(1.0);
    32.4 + 21.0 * d.log10() + 20.0 * CARRIER_GHZ.log10()
}

/// Per-flow data rate in bits/s between `ego_pos` and `vehicle_pos` when
/// `concurrent_flows` transmissions share the direction. Zero flows are
/// treated as one so the result stays usable as "the rate a new flow would
/// get".
pub fn link_rate(
    ego_pos: [f64; 2],
    vehicle_pos: [f64; 2],
    bandwidth_hz: f64,
    tx_power_dbm: f64,
    concurrent_flows: usize,
) -> f64 {
    let d = ((vehicle_pos[0] - ego_pos[0]).powi(2) + (vehicle_pos[1] - ego_pos[1]).powi(2)).sqrt();
    let rx_dbm = tx_power_dbm - path_loss_db(d);
    let noise_dbm = NOISE_DENSITY_DBM_HZ + 10.0 * bandwidth_hz.log10() + NOISE_FIGURE_DB;
    let snr = 10f64.powf((rx_dbm - noise_dbm) / 10.0);
    bandwidth_hz * (1.0 + snr).log2() / concurrent_flows.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: f64 = 1e7;
    const P: f64 = 20.0;

    #[test]
    fn fifty_meter_single_flow_rate_is_frozen() {
        let r = link_rate([0.0, 0.0], [50.0, 0.0], B, P, 1);
        assert!((r - 1.2636930363749877e8).abs() < 1.0, "got {r}");
    }

    #[test]
    fn two_flows_halve_the_rate_exactly() {
        let one = link_rate([0.0, 0.0], [50.0, 0.0], B, P, 1);
        let two = link_rate([0.0, 0.0], [50.0, 0.0], B, P, 2);
        assert_eq!(two, one / 2.0);
    }

    #[test]
    fn sub_meter_distances_clamp_to_one_meter() {
        let near = link_rate([0.0, 0.0], [0.1, 0.0], B, P, 1);
        let at_one = link_rate([0.0, 0.0], [1.0, 0.0], B, P, 1);
        assert_eq!(near, at_one);
        assert!((near - 2.4488801899910727e8).abs() < 1.0);
    }

    #[test]
    fn rate_decreases_with_distance() {
        let mut last = f64::INFINITY;
        for d in [1.0, 10.0, 50.0, 100.0, 200.0, 300.0] {
            let r = link_rate([0.0, 0.0], [d, 0.0], B, P, 1);
            assert!(r < last, "rate not decreasing at d={d}");
            assert!(r > 0.0);
            last = r;
        }
    }

    #[test]
    fn zero_flow_count_behaves_like_one() {
        let a = link_rate([0.0, 0.0], [30.0, 40.0], B, P, 0);
        let b = link_rate([0.0, 0.0], [30.0, 40.0], B, P, 1);
        assert_eq!(a, b);
    }
}
