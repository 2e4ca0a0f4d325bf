//! Nonlinear disturbance observer for the three lumped disturbances.
//!
//! Each channel `i` uses a linear injection `p_i(x_i) = G_i x_i`, so the observer
//! gain `l_i = ∂p_i/∂x_i` is the constant column `G_i`. With the storage
//! coefficient `κ_i ∈ {L1, C, L2}`:
//!
//! ```text
//! ζ̂_i = z_i + κ_i G_i x_i            d̂_i = M_i ζ̂_i
//! ż_i  = (A_i - G_i M_i) z_i + A_i κ_i G_i x_i - G_i (M_i κ_i G_i x_i + f_i(x, μ))
//! ```
//!
//! where `f_i` is the nominal drift of channel `i`. The estimation error obeys
//! `dζ̃_i/dt = (A_i - G_i M_i) ζ̃_i` independently of the plant trajectory.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plant::{dot, CircuitParams, DisturbanceVector, ExoSystem, PlantState};

/// Generators for `d1`, `d2`, `d3`.
pub type ExoBank = [ExoSystem; 3];

/// Injection gains `G_1`, `G_2`, `G_3`, one column vector per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    pub g: [Vec<f64>; 3],
}

impl ObserverGains {
    pub fn new(g1: Vec<f64>, g2: Vec<f64>, g3: Vec<f64>) -> Self {
        Self { g: [g1, g2, g3] }
    }

    fn check(&self, exo: &ExoBank) -> Result<()> {
        for (ch, (g, e)) in self.g.iter().zip(exo).enumerate() {
            if g.len() != e.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "observer gain G{} has {} entries but exosystem d{} has dimension {}",
                    ch + 1,
                    g.len(),
                    ch + 1,
                    e.dim()
                )));
            }
        }
        Ok(())
    }
}

/// Internal observer states `z_1`, `z_2`, `z_3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub z: [Vec<f64>; 3],
}

fn kappa(nominal: &CircuitParams) -> [f64; 3] {
    [nominal.l1, nominal.c, nominal.l2]
}

fn nominal_drift(x: &PlantState, mu: f64, nominal: &CircuitParams) -> [f64; 3] {
    [
        -nominal.r * x.i1 - x.vc + mu * nominal.e,
        x.i1 - x.vc / nominal.r_load - nominal.p_load / x.vc - nominal.i_load - x.i2,
        x.vc - nominal.r_line * x.i2,
    ]
}

impl ObserverState {
    /// Observer state whose reconstructed `ζ̂_i` equals `zeta_hat[i]` at the measured state `x`.
    pub fn with_estimate(
        zeta_hat: [Vec<f64>; 3],
        x: &PlantState,
        nominal: &CircuitParams,
        gains: &ObserverGains,
    ) -> Self {
        let k = kappa(nominal);
        let xs = x.as_array();
        let z = std::array::from_fn(|ch| {
            zeta_hat[ch]
                .iter()
                .zip(&gains.g[ch])
                .map(|(zh, g)| zh - k[ch] * g * xs[ch])
                .collect()
        });
        Self { z }
    }

    /// Observer state whose estimates start at zero.
    pub fn zero_estimate(x: &PlantState, nominal: &CircuitParams, gains: &ObserverGains) -> Self {
        let zeros = std::array::from_fn(|ch| vec![0.0; gains.g[ch].len()]);
        Self::with_estimate(zeros, x, nominal, gains)
    }

    /// `ζ̂_i = z_i + κ_i G_i x_i`.
    pub fn zeta_hat(&self, x: &PlantState, nominal: &CircuitParams, gains: &ObserverGains) -> [Vec<f64>; 3] {
        let k = kappa(nominal);
        let xs = x.as_array();
        std::array::from_fn(|ch| {
            self.z[ch]
                .iter()
                .zip(&gains.g[ch])
                .map(|(z, g)| z + k[ch] * g * xs[ch])
                .collect()
        })
    }
}

/// Time derivative of the observer states, from the measured state and applied duty.
pub fn observer_derivative(
    obs: &ObserverState,
    x: &PlantState,
    mu: f64,
    nominal: &CircuitParams,
    gains: &ObserverGains,
    exo: &ExoBank,
) -> Result<[Vec<f64>; 3]> {
    crate::plant::check_floor(x.vc)?;
    gains.check(exo)?;
    let k = kappa(nominal);
    let xs = x.as_array();
    let f = nominal_drift(x, mu, nominal);
    Ok(std::array::from_fn(|ch| {
        let (a, g, z) = (&exo[ch], &gains.g[ch], &obs.z[ch]);
        let m = a.output_row();
        // κ p_i(x_i)
        let kp: Vec<f64> = g.iter().map(|gi| k[ch] * gi * xs[ch]).collect();
        let a_z = a.rate(z);
        let a_kp = a.rate(&kp);
        let mz = dot(m, z);
        let injection = dot(m, &kp) + f[ch];
        (0..a.dim())
            .map(|row| a_z[row] - g[row] * mz + a_kp[row] - g[row] * injection)
            .collect()
    }))
}

fn error_matrix(exo: &ExoSystem, g: &[f64]) -> DMatrix<f64> {
    let n = exo.dim();
    DMatrix::from_fn(n, n, |r, c| exo.a(r, c) - g[r] * exo.output_row()[c])
}

/// Largest real part of the eigenvalues of `A_i - G_i M_i` for each channel.
/// Negative values mean the channel's estimation error decays.
pub fn gain_stability_check(gains: &ObserverGains, exo: &ExoBank) -> Result<[f64; 3]> {
    gains.check(exo)?;
    let mut out = [0.0; 3];
    for ch in 0..3 {
        let eig = error_matrix(&exo[ch], &gains.g[ch]).complex_eigenvalues();
        out[ch] = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(out)
}

/// `d̂_i = M_i ζ̂_i`.
pub fn disturbance_estimate(zeta_hat: &[Vec<f64>; 3], exo: &ExoBank) -> DisturbanceVector {
    DisturbanceVector::new(
        exo[0].output(&zeta_hat[0]),
        exo[1].output(&zeta_hat[1]),
        exo[2].output(&zeta_hat[2]),
    )
}

/// Estimated `ḋ2 = M2 A2 ζ̂2`.
pub fn d2_rate_estimate(zeta_hat: &[Vec<f64>; 3], exo: &ExoBank) -> f64 {
    exo[1].output_rate(&zeta_hat[1])
}

/// Reduced observer for the input voltage when the parasitic resistance and the
/// inductance mismatch are neglected: `Ê = z1 + L1 η i1`, `ż1 = η vc - η μ Ê`.
///
/// Returns `(ż1, Ê)`. The estimation error decays at rate `η μ`.
pub fn simplified_e_observer(z1: f64, x: &PlantState, mu: f64, l1: f64, eta: f64) -> (f64, f64) {
    let e_hat = z1 + l1 * eta * x.i1;
    (eta * x.vc - eta * mu * e_hat, e_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rk4_step;
    use crate::plant::{plant_derivative, CircuitParams};

    const NOM: CircuitParams = CircuitParams::NOMINAL;

    fn harmonic_bank() -> ExoBank {
        [
            ExoSystem::harmonic(100.0, [1.0, 0.0], [0.0, 1.0]),
            ExoSystem::constant(1.0),
            ExoSystem::harmonic(100.0, [1.0, 1.0], [0.0, 1.0]),
        ]
    }

    fn harmonic_gains() -> ObserverGains {
        ObserverGains::new(vec![99.0, 20.0], vec![100.0], vec![100.0, 100.0])
    }

    #[test]
    fn paper_gains_are_hurwitz() {
        let re = gain_stability_check(&harmonic_gains(), &harmonic_bank()).unwrap();
        assert!((re[0] + 49.5).abs() < 1e-9);
        assert!((re[1] + 100.0).abs() < 1e-9);
        assert!((re[2] + 100.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_channel_margins() {
        let bank = [
            ExoSystem::constant(0.0),
            ExoSystem::constant(0.0),
            ExoSystem::constant(0.0),
        ];
        let re = gain_stability_check(&ObserverGains::new(vec![100.0], vec![0.0], vec![1.0]), &bank).unwrap();
        assert_eq!(re, [-100.0, 0.0, -1.0]);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let r = gain_stability_check(&ObserverGains::new(vec![1.0], vec![1.0], vec![1.0]), &harmonic_bank());
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn estimate_is_dot_product() {
        let bank = [
            ExoSystem::constant(0.0),
            ExoSystem::constant(0.0),
            ExoSystem::harmonic(1.0, [1.0, 1.0], [0.0, 0.0]),
        ];
        let d = disturbance_estimate(&[vec![0.0], vec![1.0], vec![0.3, 0.7]], &bank);
        assert_eq!(d.d1, 0.0);
        assert_eq!(d.d2, 1.0);
        assert!((d.d3 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_estimate_stays_exact() {
        let bank = harmonic_bank();
        let gains = harmonic_gains();
        let x = PlantState::new(6.0, 15.0, 1.0);
        let zeta: [Vec<f64>; 3] = std::array::from_fn(|i| bank[i].zeta0().to_vec());
        let obs = ObserverState::with_estimate(zeta.clone(), &x, &NOM, &gains);
        let mu = 0.6;
        let d = disturbance_estimate(&zeta, &bank);
        let dx = plant_derivative(&x, mu, &NOM, &d).unwrap();
        let dz = observer_derivative(&obs, &x, mu, &NOM, &gains, &bank).unwrap();
        // dζ̂/dt = ż + κ G ẋ must equal A ζ
        let k = [NOM.l1, NOM.c, NOM.l2];
        let dxs = dx.as_array();
        for ch in 0..3 {
            let expected = bank[ch].rate(&zeta[ch]);
            for row in 0..bank[ch].dim() {
                let got = dz[ch][row] + k[ch] * gains.g[ch][row] * dxs[ch];
                assert!(
                    (got - expected[row]).abs() < 1e-6 * (1.0 + expected[row].abs()),
                    "ch {ch}"
                );
            }
        }
    }

    #[test]
    fn constant_channel_error_decays_exponentially() {
        // Plant held at a consistent trajectory with d2 = 1; only the estimate moves.
        let bank = [
            ExoSystem::constant(0.0),
            ExoSystem::constant(1.0),
            ExoSystem::constant(0.0),
        ];
        let gains = ObserverGains::new(vec![100.0], vec![100.0], vec![100.0]);
        let eq = crate::reference::solve_equilibrium(20.0, &NOM, &DisturbanceVector::new(0.0, 1.0, 0.0)).unwrap();
        let x = PlantState::new(eq.x1_star, eq.x2_star, eq.x3_star);
        let obs = ObserverState::zero_estimate(&x, &NOM, &gains);
        let mut z: Vec<f64> = obs.z.iter().flatten().copied().collect();
        let dt = 1e-5;
        for step in 0..3000 {
            z = rk4_step(&z, step as f64 * dt, dt, |_, zz, out| {
                let st = ObserverState {
                    z: [vec![zz[0]], vec![zz[1]], vec![zz[2]]],
                };
                let dz = observer_derivative(&st, &x, eq.mu_star, &NOM, &gains, &bank)?;
                out[0] = dz[0][0];
                out[1] = dz[1][0];
                out[2] = dz[2][0];
                Ok(())
            })
            .unwrap();
        }
        let st = ObserverState {
            z: [vec![z[0]], vec![z[1]], vec![z[2]]],
        };
        let d_hat = disturbance_estimate(&st.zeta_hat(&x, &NOM, &gains), &bank);
        let expected = (-3.0f64).exp();
        assert!(((1.0 - d_hat.d2) - expected).abs() < 1e-6, "{d_hat:?} {expected}");
        assert!(d_hat.d1.abs() < 1e-9 && d_hat.d3.abs() < 1e-9);
    }

    #[test]
    fn simplified_observer_fixed_point() {
        // μE = vc and Ê = E ⇒ ż1 = 0 while i1 is constant.
        let x = PlantState::new(7.0, 21.0, 1.0);
        let z1 = 30.0 - 110e-6 * 100.0 * 7.0;
        let (dz, e_hat) = simplified_e_observer(z1, &x, 0.7, 110e-6, 100.0);
        assert!((e_hat - 30.0).abs() < 1e-12);
        assert!(dz.abs() < 1e-9);
    }

    #[test]
    fn simplified_observer_error_rate() {
        // Lossless inductor: L1 di1/dt = μE - vc. Error should decay as e^{-ημt}.
        let (l1, eta, mu, e) = (110e-6, 100.0, 0.7, 30.0);
        let vc = 20.0;
        let mut y = vec![7.0, 25.0 - l1 * eta * 7.0]; // i1, z1 ⇒ Ê(0) = 25
        let dt = 1e-5;
        let steps = 1000;
        for _ in 0..steps {
            y = rk4_step(&y, 0.0, dt, |_, s, out| {
                let x = PlantState::new(s[0], vc, 0.0);
                out[0] = (mu * e - vc) / l1;
                out[1] = simplified_e_observer(s[1], &x, mu, l1, eta).0;
                Ok(())
            })
            .unwrap();
        }
        let e_hat = y[1] + l1 * eta * y[0];
        let expected = 5.0 * (-eta * mu * dt * steps as f64).exp();
        assert!(((e - e_hat) - expected).abs() < 1e-6 * 5.0);
    }
}
