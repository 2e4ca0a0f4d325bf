//! Startup from (6 A, 15 V, 1 A, x_c = -1) with two gain pairs of the energy-shaping law.

use zipshape::config::load_scenario;
use zipshape::engine::{compute_metrics, run_scenario};

fn main() -> zipshape::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["startup", "startup_fast"] {
        let s = load_scenario(&dir.join(format!("{name}.scenario")))?;
        let trace = run_scenario(&s)?;
        let m = compute_metrics(&trace, s.v_star, 0.0)?;
        println!(
            "alpha={:<4} k={:<3} settling={:.4} s overshoot={:.3} V final vc={:.5} V",
            s.controller.alpha,
            s.controller.k,
            m.settling_time_s.unwrap_or(f64::NAN),
            m.overshoot_v,
            trace.last().map_or(f64::NAN, |r| r.vc)
        );
    }
    Ok(())
}
