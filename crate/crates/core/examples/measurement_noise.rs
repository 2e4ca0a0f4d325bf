//! Gaussian noise on the voltage measurement at two levels.

use zipshape::config::load_scenario;
use zipshape::engine::{compute_metrics, run_scenario};

fn main() -> zipshape::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["noise_low", "noise_high"] {
        let s = load_scenario(&dir.join(format!("{name}.scenario")))?;
        let trace = run_scenario(&s)?;
        let m = compute_metrics(&trace, s.v_star, 0.3)?;
        let sigma = s.noise.as_ref().map_or(0.0, |n| n.power.sqrt());
        println!(
            "{name}: sigma={sigma} V, mean error after 0.3 s = {:.4} V, peak deviation = {:.4} V",
            m.steady_state_error_v, m.peak_deviation_v
        );
    }
    Ok(())
}
