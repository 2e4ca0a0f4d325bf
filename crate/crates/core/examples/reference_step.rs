//! Reference change 20 -> 18 V at 0.15 s.

use zipshape::config::load_scenario;
use zipshape::engine::run_scenario;

fn main() -> zipshape::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/reference_step.scenario");
    let s = load_scenario(&path)?;
    let trace = run_scenario(&s)?;
    for r in trace.iter().filter(|r| r.t >= 0.14).step_by(500) {
        println!("t={:.3} vc={:.4} i1={:.4}", r.t, r.vc, r.i1);
    }
    Ok(())
}
