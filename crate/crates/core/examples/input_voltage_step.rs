//! Input voltage step 30 -> 35 V under the simplified law with its input-voltage observer.

use zipshape::config::load_scenario;
use zipshape::engine::run_scenario;

fn main() -> zipshape::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/simplified_input_step.scenario");
    let s = load_scenario(&path)?;
    let trace = run_scenario(&s)?;
    for r in trace.iter().filter(|r| r.t >= 0.19).step_by(1000) {
        // d1_hat holds the estimate of E for this controller.
        println!("t={:.3} vc={:.4} mu={:.4} E_hat={:.4}", r.t, r.vc, r.mu, r.d1_hat);
    }
    Ok(())
}
