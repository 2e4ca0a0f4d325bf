//! Load step at 0.2 s handled by the adaptive law and by the RPBC baseline.

use zipshape::config::load_scenario;
use zipshape::engine::{compute_metrics, run_scenario};

fn main() -> zipshape::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["load_step_aesc", "load_step_rpbc"] {
        let s = load_scenario(&dir.join(format!("{name}.scenario")))?;
        let trace = run_scenario(&s)?;
        let m = compute_metrics(&trace, s.v_star, 0.2)?;
        println!(
            "{name}: steady-state error {:+.4} V, peak deviation {:.4} V, settling {}",
            m.steady_state_error_v,
            m.peak_deviation_v,
            m.settling_time_s.map_or("none".into(), |t| format!("{t:.4} s"))
        );
    }
    Ok(())
}
