//! Builds a scenario from inline TOML, runs it and writes the trace as CSV and SVG.

use std::fs::File;

use zipshape::config::parse_scenario;
use zipshape::engine::{run_scenario, write_trace_csv};
use zipshape::plot::render_svg;

const DOC: &str = r#"
[reference]
v_star = 20.0

[initial]
i1 = 6.0
vc = 15.0
i2 = 1.0
xc = -1.0

[controller]
kind = "aesc"
alpha = 30.0
k = 3.0

[[events]]
t = 0.05
target = "P_actual"
value = 25.0

[sim]
dt = 1e-6
t_end = 0.1
decimate = 20
"#;

fn main() -> zipshape::Result<()> {
    let s = parse_scenario(DOC)?;
    let trace = run_scenario(&s)?;
    let dir = std::env::temp_dir();
    let csv = dir.join("zipshape_example.csv");
    let svg = dir.join("zipshape_example.svg");
    write_trace_csv(File::create(&csv)?, &trace)?;
    std::fs::write(&svg, render_svg(&trace, "P step under AESC"))?;
    println!("{} samples -> {} and {}", trace.len(), csv.display(), svg.display());
    Ok(())
}
