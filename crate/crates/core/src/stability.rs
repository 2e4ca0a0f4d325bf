//! Shaped storage function and the domain-of-attraction estimate built from it.
//!
//! With tracking errors `e = (e1, e2, e3)` and controller state `x_c`:
//!
//! ```text
//! H_d = ½ L1 e1² + ½ C e2² + ½ L2 e3² + (k/2)(α L1 e1 - x_c)²
//! ```
//!
//! `H_d` decreases along the ESC closed loop while `R P / (vc v*) < 1`. Because
//! `|e2| ≤ sqrt(2 H_d / C)`, any initial error with
//! `sqrt(2 H_d(e0) / C) < v* - R P / v*` keeps that condition for all time.

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::plant::{CircuitParams, PlantState};
use crate::reference::ReferenceState;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub xc: f64,
}

impl ErrorState {
    pub fn from_state(x: &PlantState, xc: f64, reference: &ReferenceState) -> Self {
        Self {
            e1: x.i1 - reference.x1_star,
            e2: x.vc - reference.x2_star,
            e3: x.i2 - reference.x3_star,
            xc,
        }
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.e1, self.e2, self.e3, self.xc)
    }
}

/// Shaped storage `H_d` (J).
pub fn hd_energy(err: &ErrorState, nominal: &CircuitParams, alpha: f64, k: f64) -> f64 {
    let w = alpha * nominal.l1 * err.e1 - err.xc;
    0.5 * (nominal.l1 * err.e1 * err.e1 + nominal.c * err.e2 * err.e2 + nominal.l2 * err.e3 * err.e3) + 0.5 * k * w * w
}

/// Hessian of `H_d`, so that `H_d = ½ eᵀ Q e`.
fn hd_hessian(nominal: &CircuitParams, alpha: f64, k: f64) -> Matrix4<f64> {
    let w = Vector4::new(alpha * nominal.l1, 0.0, 0.0, -1.0);
    Matrix4::from_diagonal(&Vector4::new(nominal.l1, nominal.c, nominal.l2, 0.0)) + k * w * w.transpose()
}

/// Ratio `R P / (vc v*)`; the condition holds while the ratio is below one.
pub fn momentary_condition(vc: f64, v_star: f64, r_load: f64, p_load: f64) -> (f64, bool) {
    let ratio = r_load * p_load / (vc * v_star);
    (ratio, ratio < 1.0)
}

/// Right-hand side `v* - R P / v*` of the domain estimate, in volts.
pub fn domain_radius(v_star: f64, r_load: f64, p_load: f64) -> Result<f64> {
    let rp = r_load * p_load;
    if v_star * v_star <= rp {
        return Err(Error::UnreachableDomain {
            v_star_sq: v_star * v_star,
            rp,
        });
    }
    Ok(v_star - rp / v_star)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    /// `sqrt(2 H_d(e0) / C)` (V).
    pub lhs: f64,
    /// `v* - R P / v*` (V).
    pub rhs: f64,
    pub inside: bool,
}

/// Tests an initial error against the domain estimate.
pub fn initial_membership(
    err0: &ErrorState,
    nominal: &CircuitParams,
    alpha: f64,
    k: f64,
    v_star: f64,
    r_load: f64,
    p_load: f64,
) -> Result<Membership> {
    let rhs = domain_radius(v_star, r_load, p_load)?;
    let lhs = (2.0 * hd_energy(err0, nominal, alpha, k) / nominal.c).sqrt();
    Ok(Membership {
        lhs,
        rhs,
        inside: lhs < rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointTag {
    Boundary,
    Interior,
    Trajectory,
}

impl PointTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointTag::Boundary => "boundary",
            PointTag::Interior => "interior",
            PointTag::Trajectory => "trajectory",
        }
    }
}

/// A point in `(i1, vc, i2, x_c)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainPoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub xc: f64,
    pub tag: PointTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub alpha: f64,
    pub k: f64,
    pub v_star: f64,
    pub r_load: f64,
    pub p_load: f64,
}

/// Samples `n` points on the level set `H_d = C rhs² / 2` and `n` points strictly inside it,
/// both uniformly distributed with respect to the ellipsoid's own coordinates.
pub fn sample_domain(
    nominal: &CircuitParams,
    reference: &ReferenceState,
    spec: &DomainSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<DomainPoint>> {
    if n == 0 {
        return Err(Error::InvalidScenario {
            key: "n".into(),
            msg: "sample count must be positive".into(),
            line: None,
        });
    }
    let rhs = domain_radius(spec.v_star, spec.r_load, spec.p_load)?;
    let level = nominal.c * rhs * rhs / 2.0;
    let chol = hd_hessian(nominal, spec.alpha, spec.k)
        .cholesky()
        .ok_or_else(|| Error::DimensionMismatch("H_d Hessian is not positive definite".into()))?;
    // Q = L Lᵀ; e = sqrt(2 c) L⁻ᵀ y maps the unit sphere onto H_d = c.
    let l_t_inv = chol
        .l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::DimensionMismatch("singular Cholesky factor".into()))?;
    let scale = (2.0 * level).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n);
    for tag in [PointTag::Boundary, PointTag::Interior] {
        for _ in 0..n {
            let mut y = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            y /= y.norm();
            if tag == PointTag::Interior {
                let u: f64 = rng.random();
                y *= u.powf(0.25).min(1.0 - 1e-9);
            }
            let e = scale * l_t_inv * y;
            out.push(DomainPoint {
                x1: reference.x1_star + e[0],
                x2: reference.x2_star + e[1],
                x3: reference.x3_star + e[2],
                xc: e[3],
                tag,
            });
        }
    }
    Ok(out)
}

impl DomainPoint {
    pub fn error(&self, reference: &ReferenceState) -> ErrorState {
        ErrorState::from_state(&PlantState::new(self.x1, self.x2, self.x3), self.xc, reference)
    }

    /// Quadratic form check used by tests: `½ eᵀ Q e` must equal [`hd_energy`].
    #[doc(hidden)]
    pub fn hd_via_hessian(&self, reference: &ReferenceState, nominal: &CircuitParams, alpha: f64, k: f64) -> f64 {
        let e = self.error(reference).as_vector();
        0.5 * (e.transpose() * hd_hessian(nominal, alpha, k) * e)[0]
    }
}

/// Writes points as CSV with columns `x1, x2, x3, xc, tag`.
pub fn write_domain_csv<W: std::io::Write>(writer: W, points: &[DomainPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x1", "x2", "x3", "xc", "tag"])?;
    for p in points {
        w.write_record([
            p.x1.to_string(),
            p.x2.to_string(),
            p.x3.to_string(),
            p.xc.to_string(),
            p.tag.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
