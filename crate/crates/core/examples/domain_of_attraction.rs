//! Samples the estimated domain of attraction and runs a few interior starts plus
//! the startup point, which lies outside the estimate.

use zipshape::config::load_scenario;
use zipshape::engine::{run_scenario, InitialConditions};
use zipshape::reference::static_reference;
use zipshape::stability::{initial_membership, sample_domain, DomainSpec, ErrorState, PointTag};
use zipshape::{DisturbanceVector, PlantState};

fn main() -> zipshape::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/domain.scenario");
    let s = load_scenario(&path)?;
    let reference = static_reference(s.v_star, &s.nominal, &DisturbanceVector::ZERO);
    let spec = DomainSpec {
        alpha: s.controller.alpha,
        k: s.controller.k,
        v_star: s.v_star,
        r_load: s.nominal.r_load,
        p_load: s.nominal.p_load,
    };
    let points = sample_domain(&s.nominal, &reference, &spec, 5, 1)?;
    let mut starts: Vec<InitialConditions> = points
        .iter()
        .filter(|p| p.tag == PointTag::Interior)
        .map(|p| InitialConditions::at(PlantState::new(p.x1, p.x2, p.x3), p.xc))
        .collect();
    starts.push(InitialConditions::startup());

    for ic in starts {
        let err = ErrorState::from_state(&ic.plant, ic.xc, &reference);
        let m = initial_membership(
            &err,
            &s.nominal,
            spec.alpha,
            spec.k,
            spec.v_star,
            spec.r_load,
            spec.p_load,
        )?;
        let mut run = s.clone();
        run.initial = ic.clone();
        let final_vc = run_scenario(&run)?.last().map_or(f64::NAN, |r| r.vc);
        println!(
            "start ({:6.2}, {:6.2}, {:5.2}, {:6.2}) lhs={:6.2} rhs={:5.2} inside={:<5} final vc={final_vc:.4}",
            ic.plant.i1, ic.plant.vc, ic.plant.i2, ic.xc, m.lhs, m.rhs, m.inside
        );
    }
    Ok(())
}
