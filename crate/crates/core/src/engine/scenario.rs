use serde::{Deserialize, Serialize};

use crate::controllers::ControllerConfig;
use crate::engine::noise::NoiseSpec;
use crate::error::{Error, Result};
use crate::observer::{gain_stability_check, ExoBank, ObserverGains};
use crate::plant::{CircuitParams, ExoSystem, PlantState};
use crate::reference::{solve_equilibrium, ReferenceMode};
use crate::DisturbanceVector;

/// Quantity changed by a scheduled event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventTarget {
    #[serde(rename = "v_star")]
    VStar,
    #[serde(rename = "E_actual")]
    EActual,
    #[serde(rename = "R_actual")]
    RActual,
    #[serde(rename = "P_actual")]
    PActual,
    #[serde(rename = "i_actual")]
    IActual,
    #[serde(rename = "enable_d1")]
    EnableD1,
    #[serde(rename = "enable_d2")]
    EnableD2,
    #[serde(rename = "enable_d3")]
    EnableD3,
}

/// Step change applied once, before the first integration step whose start time is `>= t`.
/// Enable targets switch the channel on when `value != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub t: f64,
    pub target: EventTarget,
    pub value: f64,
}

impl Event {
    pub fn new(t: f64, target: EventTarget, value: f64) -> Self {
        Self { t, target, value }
    }
}

/// Initial conditions of every integrated quantity that is not derived.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    pub plant: PlantState,
    pub xc: f64,
    /// Starting observer estimates `ζ̂_i(0)`; zero when absent.
    pub zeta_hat: Option<[Vec<f64>; 3]>,
    /// Starting RPBC duty; the RPBC set-point when absent.
    pub mu0: Option<f64>,
    /// Starting input-voltage estimate for the simplified law; nominal `E` when absent.
    pub e_hat: Option<f64>,
}

impl InitialConditions {
    /// `i1 = 6 A`, `vc = 15 V`, `i2 = 1 A`, `x_c = -1`.
    pub fn startup() -> Self {
        Self::at(PlantState::new(6.0, 15.0, 1.0), -1.0)
    }

    pub fn at(plant: PlantState, xc: f64) -> Self {
        Self {
            plant,
            xc,
            zeta_hat: None,
            mu0: None,
            e_hat: None,
        }
    }
}

/// A complete closed-loop simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nominal: CircuitParams,
    pub actual: CircuitParams,
    pub v_star: f64,
    pub reference_mode: ReferenceMode,
    pub initial: InitialConditions,
    pub controller: ControllerConfig,
    pub observer: ObserverGains,
    pub exo: ExoBank,
    /// Whether each generated disturbance acts on the plant from `t = 0`.
    pub exo_enabled: [bool; 3],
    pub dt: f64,
    pub t_end: f64,
    /// Keep one trace record every `decimate` steps.
    pub decimate: usize,
    pub events: Vec<Event>,
    pub noise: Option<NoiseSpec>,
}

impl Scenario {
    /// Nominal circuit, constant-disturbance generators with gain 100 on every
    /// channel, all disturbances off, startup initial condition, 1 µs step, 0.5 s run.
    pub fn nominal(controller: ControllerConfig) -> Self {
        Self {
            nominal: CircuitParams::NOMINAL,
            actual: CircuitParams::NOMINAL,
            v_star: 20.0,
            reference_mode: ReferenceMode::Static,
            initial: InitialConditions::startup(),
            controller,
            observer: ObserverGains::new(vec![100.0], vec![100.0], vec![100.0]),
            exo: [
                ExoSystem::constant(0.0),
                ExoSystem::constant(0.0),
                ExoSystem::constant(0.0),
            ],
            exo_enabled: [false; 3],
            dt: 1e-6,
            t_end: 0.5,
            decimate: 1,
            events: Vec::new(),
            noise: None,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.nominal.validate("params_nominal")?;
        self.actual.validate("params_actual")?;
        self.controller.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("sim.dt", format!("must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(invalid("sim.t_end", format!("must be >= dt (got {})", self.t_end)));
        }
        if self.decimate == 0 {
            return Err(invalid("sim.decimate", "must be >= 1".into()));
        }
        if !(self.v_star > 0.0) {
            return Err(invalid(
                "reference.v_star",
                format!("must be > 0 (got {})", self.v_star),
            ));
        }
        let mut last = f64::NEG_INFINITY;
        for (i, ev) in self.events.iter().enumerate() {
            if ev.t < last {
                return Err(invalid(
                    &format!("events[{i}].t"),
                    "events must be sorted by time".into(),
                ));
            }
            if !(0.0..=self.t_end).contains(&ev.t) {
                return Err(invalid(
                    &format!("events[{i}].t"),
                    format!("must lie in [0, t_end] (got {})", ev.t),
                ));
            }
            last = ev.t;
        }
        if let Some(noise) = &self.noise {
            if !(noise.power >= 0.0 && noise.power.is_finite()) {
                return Err(invalid("noise.power", format!("must be >= 0 (got {})", noise.power)));
            }
        }
        if let Some(zh) = &self.initial.zeta_hat {
            for (ch, (z, e)) in zh.iter().zip(&self.exo).enumerate() {
                if z.len() != e.dim() {
                    return Err(invalid(
                        &format!("initial.zeta_hat{}", ch + 1),
                        format!("expected {} entries", e.dim()),
                    ));
                }
            }
        }
        // Dimension consistency of gains and generators.
        let margins = gain_stability_check(&self.observer, &self.exo)?;
        if self.controller.kind == crate::controllers::ControllerKind::Aesc {
            for (ch, re) in margins.iter().enumerate() {
                if *re >= 0.0 {
                    return Err(Error::ObserverUnstable {
                        channel: ch + 1,
                        max_re: *re,
                    });
                }
            }
        }
        solve_equilibrium(self.v_star, &self.nominal, &DisturbanceVector::ZERO)?;
        Ok(())
    }
}

fn invalid(key: &str, msg: String) -> Error {
    Error::InvalidScenario {
        key: key.to_string(),
        msg,
        line: None,
    }
}
