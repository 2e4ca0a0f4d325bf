use crate::engine::trace::TraceRecord;
use crate::error::{Error, Result};

/// Settling band as a fraction of the reference.
pub const SETTLING_BAND: f64 = 0.02;
/// Band used to classify a run as converged.
pub const CONVERGENCE_BAND: f64 = 0.005;

/// Step-response metrics of the output voltage over `[t_from, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `max(vc) - v*`, floored at zero.
    pub overshoot_v: f64,
    pub overshoot_pct: f64,
    /// Time from `t_from` after which `|vc - v*| <= 2% v*` for the rest of the trace.
    /// `None` when the trace ends outside the band.
    pub settling_time_s: Option<f64>,
    /// Mean signed error `vc - v*` over the final 10% of the window.
    pub steady_state_error_v: f64,
    /// `max |vc - v*|`.
    pub peak_deviation_v: f64,
}

pub fn compute_metrics(trace: &[TraceRecord], v_star: f64, t_from: f64) -> Result<Metrics> {
    let window: Vec<&TraceRecord> = trace.iter().filter(|r| r.t >= t_from).collect();
    if window.is_empty() {
        return Err(Error::InvalidScenario {
            key: "trace".into(),
            msg: format!("no samples at or after t_from = {t_from}"),
            line: None,
        });
    }
    let max_vc = window.iter().map(|r| r.vc).fold(f64::NEG_INFINITY, f64::max);
    let overshoot_v = (max_vc - v_star).max(0.0);
    let peak_deviation_v = window.iter().map(|r| (r.vc - v_star).abs()).fold(0.0, f64::max);

    let band = SETTLING_BAND * v_star;
    let settling_time_s = match window.iter().rposition(|r| (r.vc - v_star).abs() > band) {
        None => Some(0.0),
        Some(last) if last + 1 < window.len() => Some(window[last + 1].t - t_from),
        Some(_) => None,
    };

    let tail = tail_of(&window);
    let steady_state_error_v = tail.iter().map(|r| r.vc - v_star).sum::<f64>() / tail.len() as f64;

    Ok(Metrics {
        overshoot_v,
        overshoot_pct: 100.0 * overshoot_v / v_star,
        settling_time_s,
        steady_state_error_v,
        peak_deviation_v,
    })
}

fn tail_of<'a>(window: &'a [&'a TraceRecord]) -> &'a [&'a TraceRecord] {
    let t0 = window[0].t;
    let t1 = window[window.len() - 1].t;
    let cut = t1 - 0.1 * (t1 - t0);
    let start = window.iter().position(|r| r.t >= cut).unwrap_or(window.len() - 1);
    &window[start..]
}

/// True when `|vc - v*| < 0.5% v*` over the final 10% of the trace.
pub fn converged(trace: &[TraceRecord], v_star: f64) -> bool {
    if trace.is_empty() {
        return false;
    }
    let all: Vec<&TraceRecord> = trace.iter().collect();
    tail_of(&all)
        .iter()
        .all(|r| (r.vc - v_star).abs() < CONVERGENCE_BAND * v_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(f: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> Vec<TraceRecord> {
        let n = (t_end / dt).round() as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                TraceRecord {
                    t,
                    i1: 0.0,
                    vc: f(t),
                    i2: 0.0,
                    xc: 0.0,
                    mu: 0.0,
                    mu_saturated_flag: 0,
                    d1: 0.0,
                    d2: 0.0,
                    d3: 0.0,
                    d1_hat: 0.0,
                    d2_hat: 0.0,
                    d3_hat: 0.0,
                    hd: 0.0,
                    condition12_ratio: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn constant_trace() {
        let m = compute_metrics(&trace(|_| 20.0, 0.1, 1e-4), 20.0, 0.0).unwrap();
        assert_eq!(
            m,
            Metrics {
                overshoot_v: 0.0,
                overshoot_pct: 0.0,
                settling_time_s: Some(0.0),
                steady_state_error_v: 0.0,
                peak_deviation_v: 0.0
            }
        );
        assert!(converged(&trace(|_| 20.0, 0.1, 1e-4), 20.0));
    }

    #[test]
    fn exponential_decay_from_above() {
        let m = compute_metrics(&trace(|t| 20.0 + 2.0 * (-t / 0.01).exp(), 0.2, 1e-6), 20.0, 0.0).unwrap();
        assert!((m.overshoot_v - 2.0).abs() < 1e-12);
        assert!((m.overshoot_pct - 10.0).abs() < 1e-10);
        let expected = 0.01 * 5f64.ln();
        assert!(
            (m.settling_time_s.unwrap() - expected).abs() < 2e-6,
            "{:?}",
            m.settling_time_s
        );
        assert!((m.peak_deviation_v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn never_settles() {
        let m = compute_metrics(&trace(|t| 20.0 + t * 100.0, 0.1, 1e-3), 20.0, 0.0).unwrap();
        assert_eq!(m.settling_time_s, None);
        assert!(!converged(&trace(|t| 20.0 + t * 100.0, 0.1, 1e-3), 20.0));
    }

    #[test]
    fn table_style_fixture() {
        // 3.5 V above a 20 V reference formats as 17.5 %.
        let m = compute_metrics(&trace(|t| if t < 0.01 { 23.5 } else { 20.0 }, 0.2, 1e-3), 20.0, 0.0).unwrap();
        assert!((m.overshoot_v - 3.5).abs() < 1e-12);
        assert!((m.overshoot_pct - 17.5).abs() < 1e-12);
        assert!((m.settling_time_s.unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn window_and_offset() {
        let m = compute_metrics(&trace(|t| if t < 0.5 { 20.0 } else { 18.3 }, 1.0, 1e-3), 18.0, 0.5).unwrap();
        assert!((m.steady_state_error_v - 0.3).abs() < 1e-9);
        assert!(compute_metrics(&trace(|_| 1.0, 0.1, 1e-3), 1.0, 5.0).is_err());
    }
}
