//! Duty-ratio control laws.
//!
//! * ESC: energy-shaping law with integral state `x_c`, fed with the true disturbances.
//! * AESC: the same law fed with observer estimates.
//! * PI: output-voltage PI baseline with conditional-integration anti-windup.
//! * RPBC: passivity-based baseline that integrates `μ` and needs `di1/dt`.
//! * Simplified AESC: lossless-inductor variant driven by an input-voltage estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{CircuitParams, DisturbanceVector, PlantState};
use crate::reference::{dynamic_reference, static_reference, ReferenceMode, ReferenceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Esc,
    Aesc,
    Pi,
    Rpbc,
    SimplifiedAesc,
}

/// Source of `di1/dt` for the RPBC law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentRate {
    /// Exact model derivative of the simulated plant.
    #[default]
    Model,
    /// First-order difference of consecutive measured samples.
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_kp")]
    pub kp: f64,
    #[serde(default = "default_ki")]
    pub ki: f64,
    #[serde(rename = "Kc", default = "default_kc")]
    pub kc: f64,
    #[serde(rename = "Tc", default = "default_tc")]
    pub tc: f64,
    /// Input voltage in the RPBC set-point term; the nominal `E` when absent.
    #[serde(rename = "E_rpbc", default, skip_serializing_if = "Option::is_none")]
    pub e_rpbc: Option<f64>,
    #[serde(default)]
    pub rpbc_rate: CurrentRate,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Zero-order-hold period of the duty ratio. Continuous update when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<f64>,
}

fn default_alpha() -> f64 {
    10.0
}
fn default_k() -> f64 {
    2.0
}
// Desk-tuned PI defaults; `sweep::tune_pi` searches around them.
fn default_kp() -> f64 {
    0.05
}
fn default_ki() -> f64 {
    20.0
}
fn default_kc() -> f64 {
    600_000.0
}
fn default_tc() -> f64 {
    5000.0
}
fn default_lambda() -> f64 {
    1.5
}
fn default_eta() -> f64 {
    100.0
}

impl ControllerConfig {
    pub fn new(kind: ControllerKind) -> Self {
        Self {
            kind,
            alpha: default_alpha(),
            k: default_k(),
            kp: default_kp(),
            ki: default_ki(),
            kc: default_kc(),
            tc: default_tc(),
            e_rpbc: None,
            rpbc_rate: CurrentRate::Model,
            lambda: default_lambda(),
            eta: default_eta(),
            sample_period: None,
        }
    }

    pub fn esc(alpha: f64, k: f64) -> Self {
        Self {
            alpha,
            k,
            ..Self::new(ControllerKind::Esc)
        }
    }

    pub fn aesc(alpha: f64, k: f64) -> Self {
        Self {
            alpha,
            k,
            ..Self::new(ControllerKind::Aesc)
        }
    }

    pub fn pi(kp: f64, ki: f64) -> Self {
        Self {
            kp,
            ki,
            ..Self::new(ControllerKind::Pi)
        }
    }

    pub fn rpbc(kc: f64, tc: f64) -> Self {
        Self {
            kc,
            tc,
            ..Self::new(ControllerKind::Rpbc)
        }
    }

    pub fn simplified(eta: f64, lambda: f64, alpha: f64, k: f64) -> Self {
        Self {
            eta,
            lambda,
            alpha,
            k,
            ..Self::new(ControllerKind::SimplifiedAesc)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: &[(&str, f64)] = match self.kind {
            ControllerKind::Esc | ControllerKind::Aesc => &[("alpha", self.alpha), ("k", self.k)],
            ControllerKind::SimplifiedAesc => &[
                ("alpha", self.alpha),
                ("k", self.k),
                ("lambda", self.lambda),
                ("eta", self.eta),
            ],
            ControllerKind::Rpbc => &[("Kc", self.kc), ("Tc", self.tc)],
            ControllerKind::Pi => &[],
        };
        for &(key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(bad_gain(key, value, "must be > 0"));
            }
        }
        if self.kind == ControllerKind::Pi {
            for (key, value) in [("kp", self.kp), ("ki", self.ki)] {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(bad_gain(key, value, "must be >= 0"));
                }
            }
        }
        if let Some(e) = self.e_rpbc {
            if !(e > 0.0) {
                return Err(bad_gain("E_rpbc", e, "must be > 0"));
            }
        }
        if let Some(ts) = self.sample_period {
            if !(ts > 0.0) {
                return Err(bad_gain("sample_period", ts, "must be > 0"));
            }
        }
        Ok(())
    }
}

fn bad_gain(key: &str, value: f64, msg: &str) -> Error {
    Error::InvalidScenario {
        key: format!("controller.{key}"),
        msg: format!("{msg} (got {value})"),
        line: None,
    }
}

/// Energy-shaping duty ratio `μ = (α r k / E)[x_c - α L1 (i1 - x1*)] + μ*`, before saturation.
pub fn esc_duty(
    x: &PlantState,
    xc: f64,
    reference: &ReferenceState,
    cfg: &ControllerConfig,
    nominal: &CircuitParams,
) -> f64 {
    let gain = cfg.alpha * nominal.r * cfg.k / nominal.e;
    gain * (xc - cfg.alpha * nominal.l1 * (x.i1 - reference.x1_star)) + reference.mu_star
}

/// `dx_c/dt = -α (vc - v*)`.
pub fn esc_integrator_rate(vc: f64, v_star: f64, alpha: f64) -> f64 {
    -alpha * (vc - v_star)
}

/// How the AESC obtains its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceInput {
    Static {
        v_star: f64,
    },
    /// `x1_star` is the integrated estimate `x̂1*`.
    Dynamic {
        v_star: f64,
        x1_star: f64,
    },
}

impl ReferenceInput {
    pub fn new(mode: ReferenceMode, v_star: f64, x1_star: f64) -> Self {
        match mode {
            ReferenceMode::Static => ReferenceInput::Static { v_star },
            ReferenceMode::Dynamic => ReferenceInput::Dynamic { v_star, x1_star },
        }
    }

    /// Reference built from the disturbances `d` (true or estimated) and `ḋ2`.
    pub fn resolve(&self, nominal: &CircuitParams, d: &DisturbanceVector, d2_rate: f64) -> ReferenceState {
        match *self {
            ReferenceInput::Static { v_star } => static_reference(v_star, nominal, d),
            ReferenceInput::Dynamic { v_star, x1_star } => dynamic_reference(x1_star, v_star, nominal, d, d2_rate),
        }
    }
}

/// Adaptive law: the energy-shaping law evaluated on the reference implied by the
/// estimates `d_hat` and `d2_rate_hat`. Returns the raw duty and that reference.
pub fn aesc_duty(
    x: &PlantState,
    xc: f64,
    reference: &ReferenceInput,
    d_hat: &DisturbanceVector,
    d2_rate_hat: f64,
    cfg: &ControllerConfig,
    nominal: &CircuitParams,
) -> (f64, ReferenceState) {
    let r = reference.resolve(nominal, d_hat, d2_rate_hat);
    (esc_duty(x, xc, &r, cfg, nominal), r)
}

/// PI duty `kp (v* - vc) + ki ∫(v* - vc)`, before saturation.
pub fn pi_duty(vc: f64, v_star: f64, integral: f64, cfg: &ControllerConfig) -> f64 {
    cfg.kp * (v_star - vc) + cfg.ki * integral
}

/// Rate of the PI error integral. Integration stops while the raw output is beyond a
/// duty limit and the error would push it further out.
pub fn pi_integral_rate(vc: f64, v_star: f64, mu_raw: f64) -> f64 {
    let error = v_star - vc;
    if (mu_raw >= 1.0 && error > 0.0) || (mu_raw <= 0.0 && error < 0.0) {
        0.0
    } else {
        error
    }
}

/// Discrete PI update over `dt`; returns `(raw duty, new integral)`.
pub fn pi_step(vc: f64, v_star: f64, integral: f64, dt: f64, cfg: &ControllerConfig) -> (f64, f64) {
    let mu = pi_duty(vc, v_star, integral, cfg);
    (mu, integral + dt * pi_integral_rate(vc, v_star, mu))
}

/// RPBC duty rate `(-Kc [μ - (r x1* + x2*)/E] - E0 di1/dt) / Tc`.
pub fn rpbc_duty_rate(
    mu: f64,
    reference: &ReferenceState,
    i1_dot: f64,
    cfg: &ControllerConfig,
    nominal: &CircuitParams,
) -> f64 {
    let e_set = cfg.e_rpbc.unwrap_or(nominal.e);
    let set_point = (nominal.r * reference.x1_star + reference.x2_star) / e_set;
    (-cfg.kc * (mu - set_point) - nominal.e * i1_dot) / cfg.tc
}

/// Simplified adaptive law with `u = -αλk(α i1 - x_c/L1) - λ i1/L1` and
/// `μ = L1 u / Ê + v*/Ê`, before saturation.
pub fn simplified_aesc_duty(
    x: &PlantState,
    xc: f64,
    e_hat: f64,
    v_star: f64,
    cfg: &ControllerConfig,
    nominal: &CircuitParams,
) -> f64 {
    let (a, l, k, l1) = (cfg.alpha, cfg.lambda, cfg.k, nominal.l1);
    let u = -a * l * k * (a * x.i1 - xc / l1) - l * x.i1 / l1;
    l1 * u / e_hat + v_star / e_hat
}

/// Clamps to `[0, 1]`; the flag is set when clamping changed the value.
pub fn saturate_duty(mu_raw: f64) -> (f64, bool) {
    let mu = mu_raw.clamp(0.0, 1.0);
    (mu, mu != mu_raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::solve_equilibrium;
    use approx::assert_relative_eq;

    const NOM: CircuitParams = CircuitParams::NOMINAL;

    fn eq() -> ReferenceState {
        solve_equilibrium(20.0, &NOM, &DisturbanceVector::ZERO).unwrap()
    }

    #[test]
    fn esc_zero_error_returns_mu_star() {
        let r = eq();
        let x = PlantState::new(7.0, 20.0, 1.0);
        assert_relative_eq!(
            esc_duty(&x, 0.0, &r, &ControllerConfig::esc(10.0, 2.0), &NOM),
            r.mu_star,
            max_relative = 1e-15
        );
    }

    #[test]
    fn esc_substitutions() {
        let r = eq();
        let x = PlantState::new(6.0, 15.0, 1.0);
        let mu = esc_duty(&x, -1.0, &r, &ControllerConfig::esc(10.0, 2.0), &NOM);
        assert_relative_eq!(mu, 0.1 * (-1.0 + 10.0 * 110e-6) + r.mu_star, max_relative = 1e-12);
        assert!((mu - 0.60178).abs() < 1e-5);
        let x = PlantState::new(8.0, 20.0, 1.0);
        let mu = esc_duty(&x, 0.0, &r, &ControllerConfig::esc(30.0, 3.0), &NOM);
        assert!((mu - 0.70019).abs() < 1e-5);
    }

    #[test]
    fn esc_is_affine_with_expected_slopes() {
        let r = eq();
        let cfg = ControllerConfig::esc(10.0, 2.0);
        let h = 1e-3;
        let base = esc_duty(&PlantState::new(6.5, 18.0, 1.0), 0.3, &r, &cfg, &NOM);
        let di1 = esc_duty(&PlantState::new(6.5 + h, 18.0, 1.0), 0.3, &r, &cfg, &NOM) - base;
        let dxc = esc_duty(&PlantState::new(6.5, 18.0, 1.0), 0.3 + h, &r, &cfg, &NOM) - base;
        assert_relative_eq!(di1 / h, -100.0 * 0.15 * 2.0 * 110e-6 / 30.0, max_relative = 1e-6);
        assert_relative_eq!(dxc / h, 10.0 * 0.15 * 2.0 / 30.0, max_relative = 1e-9);
    }

    #[test]
    fn integrator_rates() {
        assert_eq!(esc_integrator_rate(20.0, 20.0, 10.0), 0.0);
        assert_eq!(esc_integrator_rate(15.0, 20.0, 10.0), 50.0);
        assert_eq!(esc_integrator_rate(22.0, 20.0, 15.0), -30.0);
    }

    #[test]
    fn aesc_with_exact_disturbances_is_esc() {
        let d = DisturbanceVector::new(0.3, -0.2, 0.5);
        let cfg = ControllerConfig::aesc(10.0, 2.0);
        let x = PlantState::new(6.7, 19.0, 1.1);
        for input in [
            ReferenceInput::Static { v_star: 20.0 },
            ReferenceInput::Dynamic {
                v_star: 20.0,
                x1_star: 6.9,
            },
        ] {
            let r = input.resolve(&NOM, &d, 0.1);
            let (mu, _) = aesc_duty(&x, 0.2, &input, &d, 0.1, &cfg, &NOM);
            assert_eq!(mu.to_bits(), esc_duty(&x, 0.2, &r, &cfg, &NOM).to_bits());
        }
    }

    #[test]
    fn aesc_static_path() {
        let cfg = ControllerConfig::aesc(10.0, 2.0);
        let input = ReferenceInput::Static { v_star: 20.0 };
        let (mu, _) = aesc_duty(
            &PlantState::new(7.0, 20.0, 1.0),
            0.0,
            &input,
            &DisturbanceVector::ZERO,
            0.0,
            &cfg,
            &NOM,
        );
        assert_relative_eq!(mu, 21.05 / 30.0, max_relative = 1e-12);
        let (mu, r) = aesc_duty(
            &PlantState::new(6.0, 20.0, 1.0),
            0.0,
            &input,
            &DisturbanceVector::new(0.0, 1.0, 0.0),
            0.0,
            &cfg,
            &NOM,
        );
        assert_relative_eq!(r.x1_star, 6.0, max_relative = 1e-12);
        assert_relative_eq!(mu, 20.9 / 30.0, max_relative = 1e-12);
    }

    #[test]
    fn pi_cases() {
        let cfg = ControllerConfig::pi(0.05, 20.0);
        assert_eq!(pi_duty(20.0, 20.0, 0.0, &cfg), 0.0);
        assert_relative_eq!(pi_duty(15.0, 20.0, 0.0, &cfg), 0.25, max_relative = 1e-12);
        let (mu, integral) = pi_step(15.0, 20.0, 0.06, 1e-3, &cfg);
        assert!(mu >= 1.0);
        assert_eq!(integral, 0.06);
        let (_, integral) = pi_step(15.0, 20.0, 0.0, 1e-3, &cfg);
        assert_relative_eq!(integral, 5e-3, max_relative = 1e-12);
        // Saturated high but error pulls back: keep integrating.
        assert_eq!(pi_integral_rate(21.0, 20.0, 1.2), -1.0);
    }

    #[test]
    fn rpbc_cases() {
        let r = eq();
        let cfg = ControllerConfig::rpbc(600_000.0, 5000.0);
        let set_point = (0.15 * r.x1_star + r.x2_star) / 30.0;
        assert_eq!(rpbc_duty_rate(set_point, &r, 0.0, &cfg, &NOM), 0.0);
        assert_relative_eq!(
            rpbc_duty_rate(set_point + 0.01, &r, 0.0, &cfg, &NOM),
            -1.2,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            rpbc_duty_rate(set_point, &r, 1000.0, &cfg, &NOM),
            -6.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn simplified_law() {
        let cfg = ControllerConfig::simplified(100.0, 1.5, 10.0, 1.5);
        assert!(cfg.validate().is_ok());
        let mu = simplified_aesc_duty(&PlantState::new(0.0, 20.0, 0.0), 0.0, 30.0, 20.0, &cfg, &NOM);
        assert_relative_eq!(mu, 20.0 / 30.0, max_relative = 1e-15);
        let mu = simplified_aesc_duty(&PlantState::new(7.0, 20.0, 0.0), 0.0, 30.0, 20.0, &cfg, &NOM);
        let u = -1.5 * 10.0 * 1.5 * 70.0 - 1.5 * 7.0 / 110e-6;
        assert_relative_eq!(mu, 110e-6 * u / 30.0 + 20.0 / 30.0, max_relative = 1e-12);
        assert!((mu - 0.310_892).abs() < 1e-6);
    }

    #[test]
    fn saturation() {
        assert_eq!(saturate_duty(0.5), (0.5, false));
        assert_eq!(saturate_duty(-0.2), (0.0, true));
        assert_eq!(saturate_duty(1.7), (1.0, true));
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::esc(0.0, 2.0).validate().is_err());
        assert!(ControllerConfig::esc(10.0, -1.0).validate().is_err());
        assert!(ControllerConfig::pi(-0.1, 1.0).validate().is_err());
        assert!(ControllerConfig::rpbc(1.0, 0.0).validate().is_err());
        assert!(ControllerConfig::pi(0.0, 0.0).validate().is_ok());
    }
}
