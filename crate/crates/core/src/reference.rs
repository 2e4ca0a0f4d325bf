//! Desired operating point for a commanded output voltage.
//!
//! Two forms are provided. The static form solves the plant equations with all
//! derivatives set to zero. The dynamic form keeps `x1*` as a state driven by the
//! current-channel equation and derives `x3*` and `mu*` from the voltage-channel
//! balance, including the rate of change of `d2`.

use crate::error::{Error, Result};
use crate::plant::{check_floor, CircuitParams, DisturbanceVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub x1_star: f64,
    pub x2_star: f64,
    pub x3_star: f64,
    pub mu_star: f64,
}

/// Whether the controller integrates `x1*` online or uses the steady-state closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    #[default]
    Static,
    Dynamic,
}

/// Steady-state operating point without the duty-ratio range check.
pub fn static_reference(v_star: f64, nominal: &CircuitParams, d: &DisturbanceVector) -> ReferenceState {
    let x3 = (v_star + d.d3) / nominal.r_line;
    let x1 = v_star / nominal.r_load + nominal.p_load / v_star + nominal.i_load + x3 - d.d2;
    let mu = (nominal.r * x1 + v_star - d.d1) / nominal.e;
    ReferenceState {
        x1_star: x1,
        x2_star: v_star,
        x3_star: x3,
        mu_star: mu,
    }
}

/// Constant equilibrium for `v_star`; fails when the required duty lies outside `[0, 1]`.
pub fn solve_equilibrium(v_star: f64, nominal: &CircuitParams, d: &DisturbanceVector) -> Result<ReferenceState> {
    check_floor(v_star)?;
    let reference = static_reference(v_star, nominal, d);
    if !(0.0..=1.0).contains(&reference.mu_star) {
        return Err(Error::UnreachableReference {
            v_star,
            mu_star: reference.mu_star,
        });
    }
    Ok(reference)
}

/// `dx1*/dt` from the current-channel equation evaluated on the reference.
pub fn reference_derivative(reference: &ReferenceState, nominal: &CircuitParams, d1: f64, mu_star: f64) -> f64 {
    (-nominal.r * reference.x1_star + mu_star * nominal.e - reference.x2_star + d1) / nominal.l1
}

/// `x3*` implied by the voltage-channel balance for a dynamic `x1*`.
pub fn dynamic_x3_star(x1_star: f64, v_star: f64, nominal: &CircuitParams, d2: f64) -> f64 {
    x1_star - v_star / nominal.r_load - nominal.p_load / v_star - nominal.i_load + d2
}

/// Reference duty ratio that keeps `dx2*/dt = 0` while `x1*` moves.
///
/// `d2_rate` is `M2 A2 ζ2`, the derivative of the voltage-channel disturbance.
/// The nominal input voltage is used as divisor.
pub fn mu_star_dynamic(reference: &ReferenceState, nominal: &CircuitParams, d1: f64, d3: f64, d2_rate: f64) -> f64 {
    let CircuitParams {
        l1, l2, r, r_line, e, ..
    } = *nominal;
    let ReferenceState {
        x1_star,
        x2_star,
        x3_star,
        ..
    } = *reference;
    (l1 / e) * (r * x1_star / l1 + x2_star / l1 + x2_star / l2 - r_line * x3_star / l2 - d1 / l1 + d3 / l2 - d2_rate)
}

/// Builds the full dynamic reference from the integrated `x1*`.
pub fn dynamic_reference(
    x1_star: f64,
    v_star: f64,
    nominal: &CircuitParams,
    d: &DisturbanceVector,
    d2_rate: f64,
) -> ReferenceState {
    let mut reference = ReferenceState {
        x1_star,
        x2_star: v_star,
        x3_star: dynamic_x3_star(x1_star, v_star, nominal, d.d2),
        mu_star: 0.0,
    };
    reference.mu_star = mu_star_dynamic(&reference, nominal, d.d1, d.d3, d2_rate);
    reference
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{plant_derivative, PlantState};
    use approx::assert_relative_eq;

    const NOM: CircuitParams = CircuitParams::NOMINAL;

    #[test]
    fn nominal_equilibrium() {
        let r = solve_equilibrium(20.0, &NOM, &DisturbanceVector::ZERO).unwrap();
        assert_relative_eq!(r.x1_star, 7.0, max_relative = 1e-12);
        assert_relative_eq!(r.x3_star, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.mu_star, 21.05 / 30.0, max_relative = 1e-12);
    }

    #[test]
    fn current_disturbance_shifts_x1() {
        let r = solve_equilibrium(20.0, &NOM, &DisturbanceVector::new(0.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(r.x1_star, 6.0, max_relative = 1e-12);
        assert_relative_eq!(r.x3_star, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.mu_star, 20.9 / 30.0, max_relative = 1e-12);
    }

    #[test]
    fn unloaded_converter_only_feeds_line() {
        let p = CircuitParams {
            p_load: 0.0,
            i_load: 0.0,
            r_load: f64::INFINITY,
            ..NOM
        };
        let r = solve_equilibrium(20.0, &p, &DisturbanceVector::ZERO).unwrap();
        assert_relative_eq!(r.x1_star, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.x3_star, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.mu_star, 20.15 / 30.0, max_relative = 1e-12);
    }

    #[test]
    fn step_target_and_unreachable_target() {
        let r = solve_equilibrium(18.0, &NOM, &DisturbanceVector::ZERO).unwrap();
        assert_relative_eq!(r.x3_star, 0.9, max_relative = 1e-12);
        assert_relative_eq!(r.x1_star, 0.9 + 20.0 / 18.0 + 1.0 + 3.6, max_relative = 1e-12);
        assert!((r.mu_star - 0.633_06).abs() < 1e-5);
        assert!(matches!(
            solve_equilibrium(29.9, &NOM, &DisturbanceVector::ZERO),
            Err(Error::UnreachableReference { .. })
        ));
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_the_plant() {
        for d in [DisturbanceVector::ZERO, DisturbanceVector::new(0.3, -0.5, 0.7)] {
            let r = solve_equilibrium(20.0, &NOM, &d).unwrap();
            let dx = plant_derivative(&PlantState::new(r.x1_star, r.x2_star, r.x3_star), r.mu_star, &NOM, &d).unwrap();
            assert!(dx.i1.abs() * NOM.l1 < 1e-12);
            assert!(dx.vc.abs() * NOM.c < 1e-12);
            assert!(dx.i2.abs() * NOM.l2 < 1e-12);
        }
    }

    #[test]
    fn reference_derivative_cases() {
        let eq = solve_equilibrium(20.0, &NOM, &DisturbanceVector::ZERO).unwrap();
        assert!(reference_derivative(&eq, &NOM, 0.0, eq.mu_star).abs() < 1e-9);
        assert_relative_eq!(
            reference_derivative(&eq, &NOM, 1.0, eq.mu_star),
            1.0 / 110e-6,
            max_relative = 1e-9
        );
        let cold = ReferenceState {
            x1_star: 0.0,
            mu_star: 0.0,
            ..eq
        };
        assert_relative_eq!(
            reference_derivative(&cold, &NOM, 0.0, 0.0),
            -20.0 / 110e-6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn dynamic_mu_star_cases() {
        let eq = solve_equilibrium(20.0, &NOM, &DisturbanceVector::ZERO).unwrap();
        assert!((mu_star_dynamic(&eq, &NOM, 0.0, 0.0, 0.0) - eq.mu_star).abs() < 1e-12);
        assert_relative_eq!(
            mu_star_dynamic(&eq, &NOM, 1.0, 0.0, 0.0),
            eq.mu_star - 1.0 / 30.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            mu_star_dynamic(&eq, &NOM, 0.0, 1.0, 0.0),
            eq.mu_star + 1.0 / 30.0,
            max_relative = 1e-12
        );
        assert!((mu_star_dynamic(&eq, &NOM, 0.0, 1.0, 0.0) - 0.735).abs() < 1e-4);
    }

    #[test]
    fn dynamic_reference_agrees_with_static_at_rest() {
        let d = DisturbanceVector::new(0.2, 0.4, -0.3);
        let st = static_reference(20.0, &NOM, &d);
        let dy = dynamic_reference(st.x1_star, 20.0, &NOM, &d, 0.0);
        assert_relative_eq!(dy.x3_star, st.x3_star, max_relative = 1e-12);
        assert_relative_eq!(dy.mu_star, st.mu_star, max_relative = 1e-12);
        assert!(reference_derivative(&dy, &NOM, d.d1, dy.mu_star).abs() < 1e-6);
    }

    #[test]
    fn more_constant_power_needs_more_current_and_duty() {
        let mut last = solve_equilibrium(20.0, &NOM, &DisturbanceVector::ZERO).unwrap();
        for p in [21.0, 25.0, 40.0] {
            let r = solve_equilibrium(20.0, &CircuitParams { p_load: p, ..NOM }, &DisturbanceVector::ZERO).unwrap();
            assert!(r.x1_star > last.x1_star && r.mu_star > last.mu_star);
            last = r;
        }
    }
}
