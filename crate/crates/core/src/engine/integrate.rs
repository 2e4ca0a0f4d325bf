use crate::error::Result;

/// One classical fourth-order Runge-Kutta step.
///
/// `f(t, y, dy)` writes the derivative of `y` at `t` into `dy`. Any error from a
/// stage evaluation aborts the step.
pub fn rk4_step<F>(y: &[f64], t: f64, dt: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let half = 0.5 * dt;

    f(t, y, &mut k1)?;
    axpy(y, half, &k1, &mut stage);
    f(t + half, &stage, &mut k2)?;
    axpy(y, half, &k2, &mut stage);
    f(t + half, &stage, &mut k3)?;
    axpy(y, dt, &k3, &mut stage);
    f(t + dt, &stage, &mut k4)?;

    let sixth = dt / 6.0;
    Ok((0..n)
        .map(|i| y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn axpy(y: &[f64], h: f64, k: &[f64], out: &mut [f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + h * ki;
    }
}
