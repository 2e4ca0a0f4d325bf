//! Harmonic and constant disturbances switched on one after another, estimated by the
//! observer and compensated by the adaptive law. Prints the estimation error per 50 ms window.

use zipshape::config::load_scenario;
use zipshape::engine::run_scenario;

fn main() -> zipshape::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/staged_disturbances.scenario");
    let s = load_scenario(&path)?;
    let trace = run_scenario(&s)?;
    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9}",
        "t", "|e_d1|", "|e_d2|", "|e_d3|", "|vc-20|"
    );
    for w in trace.chunks((trace.len() / 12).max(1)) {
        let max = |f: &dyn Fn(&zipshape::TraceRecord) -> f64| w.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
        println!(
            "{:>6.3} {:>9.5} {:>9.5} {:>9.5} {:>9.5}",
            w[0].t,
            max(&|r| r.d1_hat - r.d1),
            max(&|r| r.d2_hat - r.d2),
            max(&|r| r.d3_hat - r.d3),
            max(&|r| r.vc - s.v_star)
        );
    }
    Ok(())
}
