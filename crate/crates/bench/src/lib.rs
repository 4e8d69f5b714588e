//! Benchmark fixtures shared by the criterion targets.

use passive_net::pipelines::{pi_circuit_system, ButterworthConfig, Geometry, WaveguideConfig};
use passive_net::StateSpaceSystem;

/// The π circuit with the default Butterworth component values.
pub fn default_pi() -> StateSpaceSystem {
    let cfg = ButterworthConfig::default();
    pi_circuit_system(cfg.c1, cfg.c2, cfg.l1).expect("positive components")
}

/// Default waveguide on the two-segment tube with `n` elements.
pub fn waveguide_config(n: usize) -> WaveguideConfig {
    WaveguideConfig { geometry: Geometry::two_segment(), n, ..Default::default() }
}
