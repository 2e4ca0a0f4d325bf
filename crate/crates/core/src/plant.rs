//! Averaged model of the buck converter feeding a ZIP load through a power line.
//!
//! The plant is written against *nominal* parameters; every mismatch between the
//! nominal and the actual circuit is folded into three lumped disturbances:
//!
//! ```text
//! L1 di1/dt = -r i1 + mu E - vc + d1
//! C  dvc/dt = i1 - vc/R - P/vc - i - i2 + d2
//! L2 di2/dt = vc - R2 i2 + d3
//! ```
//!
//! Exogenous disturbances are produced by linear generators `dζ/dt = A ζ`, `d = M ζ`.

use serde::{Deserialize, Serialize};

use crate::engine::rk4_step;
use crate::error::{Error, Result};

/// The CPL term `P / vc` is only evaluated above this voltage.
pub const VC_FLOOR: f64 = 0.1;

/// Circuit parameters. The same type holds both the nominal set known to the
/// controller and the actual set driving the simulated plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// Filter inductance (H).
    #[serde(rename = "L1")]
    pub l1: f64,
    /// Line inductance (H).
    #[serde(rename = "L2")]
    pub l2: f64,
    /// Output capacitance (F).
    #[serde(rename = "C")]
    pub c: f64,
    /// Filter parasitic resistance (Ω).
    pub r: f64,
    /// Line resistance (Ω).
    #[serde(rename = "R2")]
    pub r_line: f64,
    /// Input voltage (V).
    #[serde(rename = "E")]
    pub e: f64,
    /// Constant-impedance load (Ω).
    #[serde(rename = "R")]
    pub r_load: f64,
    /// Constant-power load (W).
    #[serde(rename = "P")]
    pub p_load: f64,
    /// Constant-current load (A).
    #[serde(rename = "i")]
    pub i_load: f64,
}

impl CircuitParams {
    /// Nominal circuit of the reference design: 30 V input, 110 µH / 1200 µF
    /// filter, 20 Ω line and a 5 Ω + 20 W + 1 A load.
    pub const NOMINAL: CircuitParams = CircuitParams {
        l1: 110e-6,
        l2: 110e-6,
        c: 1200e-6,
        r: 0.15,
        r_line: 20.0,
        e: 30.0,
        r_load: 5.0,
        p_load: 20.0,
        i_load: 1.0,
    };

    /// Checks sign constraints. `set` names the parameter block in error messages.
    pub fn validate(&self, set: &str) -> Result<()> {
        // r is allowed to be zero so the lossless practical model can be expressed.
        let strictly_positive = [
            ("L1", self.l1),
            ("L2", self.l2),
            ("C", self.c),
            ("R2", self.r_line),
            ("E", self.e),
            ("R", self.r_load),
        ];
        for (name, value) in strictly_positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(set, name, value, "must be > 0"));
            }
        }
        for (name, value) in [("r", self.r), ("P", self.p_load), ("i", self.i_load)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(invalid(set, name, value, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Nominal-model drift of each channel, without input or disturbance.
    fn drift(&self, x: &PlantState) -> Result<[f64; 3]> {
        check_floor(x.vc)?;
        Ok([
            -self.r * x.i1 - x.vc,
            x.i1 - x.vc / self.r_load - self.p_load / x.vc - self.i_load - x.i2,
            x.vc - self.r_line * x.i2,
        ])
    }
}

fn invalid(set: &str, name: &str, value: f64, msg: &str) -> Error {
    Error::InvalidScenario {
        key: format!("{set}.{name}"),
        msg: format!("{msg} (got {value})"),
        line: None,
    }
}

pub(crate) fn check_floor(vc: f64) -> Result<()> {
    if vc > VC_FLOOR {
        Ok(())
    } else {
        Err(Error::CplSingularity {
            vc,
            floor: VC_FLOOR,
            t: None,
        })
    }
}

/// Physical state: inductor current, capacitor voltage, line current.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub i1: f64,
    pub vc: f64,
    pub i2: f64,
}

impl PlantState {
    pub const fn new(i1: f64, vc: f64, i2: f64) -> Self {
        Self { i1, vc, i2 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.i1, self.vc, self.i2]
    }
}

/// Lumped disturbances acting on the current, voltage and line channels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceVector {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl DisturbanceVector {
    pub const ZERO: DisturbanceVector = DisturbanceVector {
        d1: 0.0,
        d2: 0.0,
        d3: 0.0,
    };

    pub const fn new(d1: f64, d2: f64, d3: f64) -> Self {
        Self { d1, d2, d3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }
}

impl std::ops::Add for DisturbanceVector {
    type Output = DisturbanceVector;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.d1 + rhs.d1, self.d2 + rhs.d2, self.d3 + rhs.d3)
    }
}

/// Linear disturbance generator `dζ/dt = A ζ`, `d = M ζ` of dimension `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoSystem {
    /// Row-major `m × m` generator matrix (1/s).
    a: Vec<f64>,
    /// Output row of length `m`.
    m: Vec<f64>,
    /// Initial internal state.
    zeta0: Vec<f64>,
}

impl ExoSystem {
    pub fn new(a: Vec<Vec<f64>>, m: Vec<f64>, zeta0: Vec<f64>) -> Result<Self> {
        let dim = m.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch("exosystem M must be non-empty".into()));
        }
        if a.len() != dim || a.iter().any(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "exosystem A must be {dim}x{dim} to match M"
            )));
        }
        if zeta0.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "exosystem zeta0 has {} entries, expected {dim}",
                zeta0.len()
            )));
        }
        Ok(Self {
            a: a.into_iter().flatten().collect(),
            m,
            zeta0,
        })
    }

    /// Constant disturbance of the given value: `A = 0`, `M = 1`, `ζ0 = value`.
    pub fn constant(value: f64) -> Self {
        Self {
            a: vec![0.0],
            m: vec![1.0],
            zeta0: vec![value],
        }
    }

    /// Harmonic generator at `omega` rad/s with output row `m`.
    pub fn harmonic(omega: f64, m: [f64; 2], zeta0: [f64; 2]) -> Self {
        Self {
            a: vec![0.0, omega, -omega, 0.0],
            m: m.to_vec(),
            zeta0: zeta0.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn zeta0(&self) -> &[f64] {
        &self.zeta0
    }

    pub fn output_row(&self) -> &[f64] {
        &self.m
    }

    pub fn a_rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.dim()).map(<[f64]>::to_vec).collect()
    }

    pub fn a(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.dim() + col]
    }

    /// `A ζ`, written into `out`.
    pub fn rate_into(&self, zeta: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (row, o) in self.a.chunks(n).zip(out.iter_mut()) {
            *o = dot(row, zeta);
        }
    }

    pub fn rate(&self, zeta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.rate_into(zeta, &mut out);
        out
    }

    /// `M ζ`.
    pub fn output(&self, zeta: &[f64]) -> f64 {
        dot(&self.m, zeta)
    }

    /// `M A ζ`, the time derivative of the generated disturbance.
    pub fn output_rate(&self, zeta: &[f64]) -> f64 {
        let n = self.dim();
        self.a.chunks(n).zip(&self.m).map(|(row, m)| m * dot(row, zeta)).sum()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-hand side of the nominal averaged model with lumped disturbances.
pub fn plant_derivative(x: &PlantState, mu: f64, nominal: &CircuitParams, d: &DisturbanceVector) -> Result<PlantState> {
    let [f1, f2, f3] = nominal.drift(x)?;
    Ok(PlantState {
        i1: (f1 + mu * nominal.e + d.d1) / nominal.l1,
        vc: (f2 + d.d2) / nominal.c,
        i2: (f3 + d.d3) / nominal.l2,
    })
}

/// Disturbances that make the nominal model reproduce the actual circuit exactly.
///
/// Each channel is the nominal residual plus the actual dynamics rescaled by the
/// nominal-over-actual storage coefficient.
pub fn lumped_disturbances(
    x: &PlantState,
    mu: f64,
    nominal: &CircuitParams,
    actual: &CircuitParams,
) -> Result<DisturbanceVector> {
    let nom = nominal.drift(x)?;
    let act = actual.drift(x)?;
    let nom1 = nom[0] + mu * nominal.e;
    let act1 = act[0] + mu * actual.e;
    Ok(DisturbanceVector {
        d1: -nom1 + nominal.l1 * act1 / actual.l1,
        d2: -nom[1] + nominal.c * act[1] / actual.c,
        d3: -nom[2] + nominal.l2 * act[2] / actual.l2,
    })
}

/// Advances an exosystem state by one RK4 step of length `dt` and returns the
/// new state with its output.
pub fn exo_advance(exo: &ExoSystem, zeta: &[f64], dt: f64) -> (Vec<f64>, f64) {
    let next = rk4_step(zeta, 0.0, dt, |_, z, out| {
        exo.rate_into(z, out);
        Ok(())
    })
    .expect("linear exosystem derivative is infallible");
    let d = exo.output(&next);
    (next, d)
}

/// Quadratic storage `½ L1 i1² + ½ C vc² + ½ L2 i2²` (J).
pub fn storage_energy(x: &PlantState, nominal: &CircuitParams) -> f64 {
    0.5 * (nominal.l1 * x.i1 * x.i1 + nominal.c * x.vc * x.vc + nominal.l2 * x.i2 * x.i2)
}

/// Gradient of [`storage_energy`].
pub fn storage_gradient(x: &PlantState, nominal: &CircuitParams) -> [f64; 3] {
    [nominal.l1 * x.i1, nominal.c * x.vc, nominal.l2 * x.i2]
}

/// Evaluates the port-Hamiltonian form `(J - R(x)) ∇H + disturbance + input` and returns
/// its largest component-wise distance from [`plant_derivative`].
pub fn ph_consistency_check(x: &PlantState, mu: f64, nominal: &CircuitParams, d: &DisturbanceVector) -> Result<f64> {
    let direct = plant_derivative(x, mu, nominal, d)?.as_array();
    let CircuitParams {
        l1,
        l2,
        c,
        r,
        r_line,
        e,
        r_load,
        p_load,
        i_load,
    } = *nominal;
    let jr = [
        [-r / (l1 * l1), -1.0 / (c * l1), 0.0],
        [
            1.0 / (c * l1),
            -1.0 / (r_load * c * c) - p_load / (x.vc * x.vc * c * c),
            -1.0 / (c * l2),
        ],
        [0.0, 1.0 / (c * l2), -r_line / (l2 * l2)],
    ];
    let grad = storage_gradient(x, nominal);
    let forcing = [d.d1 / l1, d.d2 / c - i_load / c, d.d3 / l2];
    let input = [mu * e / l1, 0.0, 0.0];
    let residual = (0..3)
        .map(|row| {
            let ph = dot(&jr[row], &grad) + forcing[row] + input[row];
            (ph - direct[row]).abs()
        })
        .fold(0.0, f64::max);
    Ok(residual)
}
