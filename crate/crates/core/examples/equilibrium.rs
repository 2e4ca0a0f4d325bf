//! Operating points over a range of reference voltages, with the domain estimate radius.

use zipshape::stability::domain_radius;
use zipshape::{solve_equilibrium, CircuitParams, DisturbanceVector};

fn main() -> zipshape::Result<()> {
    let p = CircuitParams::NOMINAL;
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "v*", "x1*", "x3*", "mu*", "radius");
    for v_star in [5.0, 10.0, 15.0, 18.0, 20.0, 25.0, 28.0] {
        match solve_equilibrium(v_star, &p, &DisturbanceVector::ZERO) {
            Ok(r) => {
                let radius = domain_radius(v_star, p.r_load, p.p_load).map_or("empty".into(), |v| format!("{v:.3}"));
                println!(
                    "{v_star:>6.1} {:>8.3} {:>8.3} {:>8.4} {radius:>8}",
                    r.x1_star, r.x3_star, r.mu_star
                );
            }
            Err(e) => println!("{v_star:>6.1} {e}"),
        }
    }
    Ok(())
}
