//! Grid search over PI gains on the startup scenario. Picks the fastest converging pair.

use zipshape::config::load_scenario;
use zipshape::sweep::{tune_pi, PI_GRID_KI, PI_GRID_KP};

fn main() -> zipshape::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/startup.scenario");
    let base = load_scenario(&path)?;
    let result = tune_pi(&base, &PI_GRID_KP, &PI_GRID_KI)?;
    for (kp, ki, m) in &result.candidates {
        match m {
            Some(m) => println!(
                "kp={kp:<5} ki={ki:<5} settling={:.4} s overshoot={:.3}%",
                m.settling_time_s.unwrap_or(f64::NAN),
                m.overshoot_pct
            ),
            None => println!("kp={kp:<5} ki={ki:<5} did not converge"),
        }
    }
    println!(
        "best: kp={} ki={} settling={:.4} s overshoot={:.3}%",
        result.kp,
        result.ki,
        result.metrics.settling_time_s.unwrap_or(f64::NAN),
        result.metrics.overshoot_pct
    );
    Ok(())
}
