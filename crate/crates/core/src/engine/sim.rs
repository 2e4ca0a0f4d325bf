//! Fixed-step closed-loop simulator.
//!
//! The integrated vector is laid out as
//!
//! ```text
//! [i1, vc, i2, x_c, μ_rpbc, ζ1.., ζ2.., ζ3.., z1.., z2.., z3.., x̂1*, pi_integral, z_E]
//! ```
//!
//! Slots not used by the selected controller stay constant. `z_E` is the state of
//! the reduced input-voltage observer.

use crate::controllers::{
    aesc_duty, esc_duty, esc_integrator_rate, pi_duty, pi_integral_rate, rpbc_duty_rate, saturate_duty,
    simplified_aesc_duty, ControllerKind, CurrentRate, ReferenceInput,
};
use crate::engine::integrate::rk4_step;
use crate::engine::noise::{inject_noise, Channel};
use crate::engine::scenario::{EventTarget, Scenario};
use crate::engine::trace::TraceRecord;
use crate::error::Result;
use crate::observer::{
    d2_rate_estimate, disturbance_estimate, observer_derivative, simplified_e_observer, ObserverState,
};
use crate::plant::{check_floor, lumped_disturbances, plant_derivative, CircuitParams, DisturbanceVector, PlantState};
use crate::reference::{reference_derivative, solve_equilibrium, static_reference, ReferenceMode, ReferenceState};
use crate::stability::{hd_energy, momentary_condition, ErrorState};

const I1: usize = 0;
const VC: usize = 1;
const I2: usize = 2;
const XC: usize = 3;
const MU: usize = 4;

#[derive(Debug, Clone)]
struct Layout {
    dims: [usize; 3],
    zeta: [usize; 3],
    z: [usize; 3],
    x1_hat: usize,
    pi: usize,
    e_obs: usize,
    len: usize,
}

impl Layout {
    fn new(dims: [usize; 3]) -> Self {
        let mut at = MU + 1;
        let mut zeta = [0; 3];
        for ch in 0..3 {
            zeta[ch] = at;
            at += dims[ch];
        }
        let mut z = [0; 3];
        for ch in 0..3 {
            z[ch] = at;
            at += dims[ch];
        }
        Self {
            dims,
            zeta,
            z,
            x1_hat: at,
            pi: at + 1,
            e_obs: at + 2,
            len: at + 3,
        }
    }

    fn zeta<'a>(&self, y: &'a [f64], ch: usize) -> &'a [f64] {
        &y[self.zeta[ch]..self.zeta[ch] + self.dims[ch]]
    }

    fn z(&self, y: &[f64], ch: usize) -> Vec<f64> {
        y[self.z[ch]..self.z[ch] + self.dims[ch]].to_vec()
    }
}

/// Quantities that change only between steps.
#[derive(Debug, Clone)]
struct Runtime {
    v_star: f64,
    actual: CircuitParams,
    enabled: [bool; 3],
    noise: [f64; 3],
    held: Option<(f64, f64)>,
    i1_rate: f64,
}

/// Controller output and the signals around it at one evaluation point.
#[derive(Debug, Clone, Copy)]
struct Aux {
    mu_raw: f64,
    mu: f64,
    saturated: bool,
    d_true: DisturbanceVector,
    d_hat: DisturbanceVector,
    reference: ReferenceState,
}

struct Simulator<'a> {
    s: &'a Scenario,
    layout: Layout,
}

impl<'a> Simulator<'a> {
    fn new(s: &'a Scenario) -> Self {
        let dims = std::array::from_fn(|ch| s.exo[ch].dim());
        Self {
            s,
            layout: Layout::new(dims),
        }
    }

    fn initial_state(&self, rt: &Runtime) -> Vec<f64> {
        let s = self.s;
        let lay = &self.layout;
        let nom = &s.nominal;
        let x0 = s.initial.plant;
        let mut y = vec![0.0; lay.len];
        y[I1] = x0.i1;
        y[VC] = x0.vc;
        y[I2] = x0.i2;
        y[XC] = s.initial.xc;
        let set_point = static_reference(s.v_star, nom, &DisturbanceVector::ZERO);
        let e_rpbc = s.controller.e_rpbc.unwrap_or(nom.e);
        y[MU] = s
            .initial
            .mu0
            .unwrap_or((nom.r * set_point.x1_star + set_point.x2_star) / e_rpbc);
        for ch in 0..3 {
            y[lay.zeta[ch]..lay.zeta[ch] + lay.dims[ch]].copy_from_slice(s.exo[ch].zeta0());
        }
        let zeta_hat0 = s
            .initial
            .zeta_hat
            .clone()
            .unwrap_or_else(|| std::array::from_fn(|ch| vec![0.0; lay.dims[ch]]));
        let obs = ObserverState::with_estimate(zeta_hat0.clone(), &x0, nom, &s.observer);
        for ch in 0..3 {
            y[lay.z[ch]..lay.z[ch] + lay.dims[ch]].copy_from_slice(&obs.z[ch]);
        }
        let d0 = match s.controller.kind {
            ControllerKind::Esc => DisturbanceVector::new(
                gated(rt.enabled[0], s.exo[0].output(s.exo[0].zeta0())),
                gated(rt.enabled[1], s.exo[1].output(s.exo[1].zeta0())),
                gated(rt.enabled[2], s.exo[2].output(s.exo[2].zeta0())),
            ),
            _ => disturbance_estimate(&zeta_hat0, &s.exo),
        };
        y[lay.x1_hat] = static_reference(s.v_star, nom, &d0).x1_star;
        let e_hat0 = s.initial.e_hat.unwrap_or(nom.e);
        y[lay.e_obs] = e_hat0 - nom.l1 * s.controller.eta * x0.i1;
        y
    }

    fn eval(&self, rt: &Runtime, y: &[f64], dy: Option<&mut [f64]>) -> Result<Aux> {
        let s = self.s;
        let lay = &self.layout;
        let nom = &s.nominal;
        let cfg = &s.controller;
        let x = PlantState::new(y[I1], y[VC], y[I2]);
        check_floor(x.vc)?;
        let meas = PlantState::new(x.i1 + rt.noise[0], x.vc + rt.noise[1], x.i2 + rt.noise[2]);
        check_floor(meas.vc)?;

        let d_exo = DisturbanceVector::new(
            gated(rt.enabled[0], s.exo[0].output(lay.zeta(y, 0))),
            gated(rt.enabled[1], s.exo[1].output(lay.zeta(y, 1))),
            gated(rt.enabled[2], s.exo[2].output(lay.zeta(y, 2))),
        );
        let d2_rate_exo = gated(rt.enabled[1], s.exo[1].output_rate(lay.zeta(y, 1)));

        let obs = ObserverState {
            z: std::array::from_fn(|ch| lay.z(y, ch)),
        };
        let zeta_hat = obs.zeta_hat(&meas, nom, &s.observer);
        let mut d_hat = disturbance_estimate(&zeta_hat, &s.exo);
        let d2_rate_hat = d2_rate_estimate(&zeta_hat, &s.exo);

        // Parametric disturbances are affine in μ, and only d1 depends on it.
        let dp0 = lumped_disturbances(&x, 0.0, nom, &rt.actual)?;
        let d1_slope = lumped_disturbances(&x, 1.0, nom, &rt.actual)?.d1 - dp0.d1;

        let ref_input = ReferenceInput::new(s.reference_mode, rt.v_star, y[lay.x1_hat]);
        let xc = y[XC];
        let nominal_ref = || static_reference(rt.v_star, nom, &DisturbanceVector::ZERO);
        let (mu_raw, reference, d_ctrl) = match cfg.kind {
            ControllerKind::Esc => {
                // Full information: solve μ = esc(d1(μ)) for the μ-dependent part of d1.
                let known = dp0 + d_exo;
                let r0 = ref_input.resolve(nom, &known, d2_rate_exo);
                let mu0 = esc_duty(&meas, xc, &r0, cfg, nom);
                let mu = mu0 / (1.0 + d1_slope / nom.e);
                let full = DisturbanceVector {
                    d1: known.d1 + d1_slope * mu,
                    ..known
                };
                let r = ref_input.resolve(nom, &full, d2_rate_exo);
                (esc_duty(&meas, xc, &r, cfg, nom), r, full)
            }
            ControllerKind::Aesc => {
                let (mu, r) = aesc_duty(&meas, xc, &ref_input, &d_hat, d2_rate_hat, cfg, nom);
                (mu, r, d_hat)
            }
            ControllerKind::Pi => (pi_duty(meas.vc, rt.v_star, y[lay.pi], cfg), nominal_ref(), d_hat),
            ControllerKind::Rpbc => (y[MU], nominal_ref(), d_hat),
            ControllerKind::SimplifiedAesc => {
                let (_, e_hat) = simplified_e_observer(y[lay.e_obs], &meas, 0.0, nom.l1, cfg.eta);
                d_hat.d1 = e_hat;
                (
                    simplified_aesc_duty(&meas, xc, e_hat, rt.v_star, cfg, nom),
                    nominal_ref(),
                    d_hat,
                )
            }
        };
        let (mu_raw, mu) = rt.held.unwrap_or((mu_raw, saturate_duty(mu_raw).0));
        let saturated = saturate_duty(mu_raw).1;

        let d_param = DisturbanceVector {
            d1: dp0.d1 + d1_slope * mu,
            ..dp0
        };
        let d_true = d_param + d_exo;
        let dx = plant_derivative(&x, mu, nom, &d_true)?;

        if let Some(dy) = dy {
            dy[I1] = dx.i1;
            dy[VC] = dx.vc;
            dy[I2] = dx.i2;
            dy[XC] = match cfg.kind {
                ControllerKind::Esc | ControllerKind::Aesc | ControllerKind::SimplifiedAesc => {
                    esc_integrator_rate(meas.vc, rt.v_star, cfg.alpha)
                }
                _ => 0.0,
            };
            dy[MU] = if cfg.kind == ControllerKind::Rpbc {
                let i1_dot = match cfg.rpbc_rate {
                    CurrentRate::Model => dx.i1,
                    CurrentRate::Difference => rt.i1_rate,
                };
                rpbc_duty_rate(y[MU], &reference, i1_dot, cfg, nom)
            } else {
                0.0
            };
            for ch in 0..3 {
                let at = lay.zeta[ch];
                s.exo[ch].rate_into(lay.zeta(y, ch), &mut dy[at..at + lay.dims[ch]]);
            }
            let dz = observer_derivative(&obs, &meas, mu, nom, &s.observer, &s.exo)?;
            for ch in 0..3 {
                dy[lay.z[ch]..lay.z[ch] + lay.dims[ch]].copy_from_slice(&dz[ch]);
            }
            dy[lay.x1_hat] = match (s.reference_mode, cfg.kind) {
                (ReferenceMode::Dynamic, ControllerKind::Esc | ControllerKind::Aesc) => {
                    reference_derivative(&reference, nom, d_ctrl.d1, reference.mu_star)
                }
                _ => 0.0,
            };
            dy[lay.pi] = if cfg.kind == ControllerKind::Pi {
                pi_integral_rate(meas.vc, rt.v_star, mu_raw)
            } else {
                0.0
            };
            dy[lay.e_obs] = if cfg.kind == ControllerKind::SimplifiedAesc {
                simplified_e_observer(y[lay.e_obs], &meas, mu, nom.l1, cfg.eta).0
            } else {
                0.0
            };
        }

        Ok(Aux {
            mu_raw,
            mu,
            saturated,
            d_true,
            d_hat,
            reference,
        })
    }

    fn record(&self, t: f64, y: &[f64], rt: &Runtime, aux: &Aux) -> TraceRecord {
        let nom = &self.s.nominal;
        let x = PlantState::new(y[I1], y[VC], y[I2]);
        let err = ErrorState::from_state(&x, y[XC], &aux.reference);
        TraceRecord {
            t,
            i1: x.i1,
            vc: x.vc,
            i2: x.i2,
            xc: y[XC],
            mu: aux.mu,
            mu_saturated_flag: u8::from(aux.saturated),
            d1: aux.d_true.d1,
            d2: aux.d_true.d2,
            d3: aux.d_true.d3,
            d1_hat: aux.d_hat.d1,
            d2_hat: aux.d_hat.d2,
            d3_hat: aux.d_hat.d3,
            hd: hd_energy(&err, nom, self.s.controller.alpha, self.s.controller.k),
            condition12_ratio: momentary_condition(x.vc, rt.v_star, nom.r_load, nom.p_load).0,
        }
    }
}

fn gated(on: bool, value: f64) -> f64 {
    if on {
        value
    } else {
        0.0
    }
}

fn apply_event(rt: &mut Runtime, s: &Scenario, target: EventTarget, value: f64) -> Result<()> {
    match target {
        EventTarget::VStar => {
            solve_equilibrium(value, &s.nominal, &DisturbanceVector::ZERO)?;
            rt.v_star = value;
        }
        EventTarget::EActual => rt.actual.e = value,
        EventTarget::RActual => rt.actual.r_load = value,
        EventTarget::PActual => rt.actual.p_load = value,
        EventTarget::IActual => rt.actual.i_load = value,
        EventTarget::EnableD1 => rt.enabled[0] = value != 0.0,
        EventTarget::EnableD2 => rt.enabled[1] = value != 0.0,
        EventTarget::EnableD3 => rt.enabled[2] = value != 0.0,
    }
    rt.actual.validate("params_actual")
}

/// Runs the scenario and hands every kept record to `sink` as it is produced.
pub fn run_scenario_with<F: FnMut(&TraceRecord)>(s: &Scenario, mut sink: F) -> Result<()> {
    s.validate()?;
    let sim = Simulator::new(s);
    let mut rt = Runtime {
        v_star: s.v_star,
        actual: s.actual,
        enabled: s.exo_enabled,
        noise: [0.0; 3],
        held: None,
        i1_rate: 0.0,
    };
    let mut y = sim.initial_state(&rt);
    let steps = s.steps();
    let dt = s.dt;
    let mut next_event = 0;
    let mut prev_i1: Option<f64> = None;
    let mut samples_taken = 0u64;

    for k in 0..=steps {
        let t = k as f64 * dt;
        while next_event < s.events.len() && s.events[next_event].t <= t + 1e-9 * dt {
            let ev = s.events[next_event];
            apply_event(&mut rt, s, ev.target, ev.value).map_err(|e| e.at(t))?;
            next_event += 1;
        }
        if let Some(noise) = &s.noise {
            let vals = [y[I1], y[VC], y[I2]];
            for (ch, channel) in Channel::ALL.into_iter().enumerate() {
                rt.noise[ch] = inject_noise(vals[ch], noise, channel, k as u64) - vals[ch];
            }
        }
        if s.controller.rpbc_rate == CurrentRate::Difference {
            let i1_meas = y[I1] + rt.noise[0];
            rt.i1_rate = prev_i1.map_or(0.0, |p| (i1_meas - p) / dt);
            prev_i1 = Some(i1_meas);
        }
        if let Some(ts) = s.controller.sample_period {
            if t + 1e-9 * dt >= samples_taken as f64 * ts {
                rt.held = None;
                let aux = sim.eval(&rt, &y, None).map_err(|e| e.at(t))?;
                rt.held = Some((aux.mu_raw, aux.mu));
                samples_taken += 1;
            }
        }
        if k % s.decimate == 0 || k == steps {
            let aux = sim.eval(&rt, &y, None).map_err(|e| e.at(t))?;
            sink(&sim.record(t, &y, &rt, &aux));
        }
        if k == steps {
            break;
        }
        y = rk4_step(&y, t, dt, |_, ys, dy| sim.eval(&rt, ys, Some(dy)).map(|_| ())).map_err(|e| e.at(t))?;
    }
    Ok(())
}

/// Runs the scenario and collects the decimated trace.
pub fn run_scenario(s: &Scenario) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::with_capacity(s.steps() / s.decimate + 2);
    run_scenario_with(s, |r| out.push(*r))?;
    Ok(out)
}
