//! Parameter grids run as independent scenarios.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{scenario_from_table, set_path};
use crate::engine::{compute_metrics, converged, run_scenario, EventTarget, Metrics, Scenario};
use crate::error::{Error, Result};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "ZIPSHAPE_THREADS";

/// One grid dimension: a dotted scenario key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl GridAxis {
    /// Parses `section.key=v1,v2,...`. Numbers become floats (integers for
    /// `sim.decimate` and `noise.seed`), anything else is kept as a string.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, list) = spec
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("grid axis `{spec}` must look like key=v1,v2")))?;
        let key = key.trim().to_string();
        let values: Vec<toml::Value> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| parse_value(&key, v))
            .collect();
        if key.is_empty() || values.is_empty() {
            return Err(Error::Parse(format!("grid axis `{spec}` has no values")));
        }
        Ok(Self { key, values })
    }
}

fn parse_value(key: &str, v: &str) -> toml::Value {
    let integer_key = matches!(key, "sim.decimate" | "noise.seed");
    match (v.parse::<i64>(), v.parse::<f64>()) {
        (Ok(i), _) if integer_key => toml::Value::Integer(i),
        (_, Ok(f)) => toml::Value::Float(f),
        _ => toml::Value::String(v.to_string()),
    }
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub id: usize,
    /// `(key, value)` for every axis, in axis order.
    pub assignments: Vec<(String, String)>,
    pub outcome: std::result::Result<Metrics, String>,
}

/// Cartesian product of the axes; the first axis varies slowest.
pub fn grid_points(axes: &[GridAxis]) -> Result<Vec<Vec<(String, toml::Value)>>> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::Parse("sweep grid is empty".into()));
    }
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Parse(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Voltage reference in force at the end of the run.
pub fn final_v_star(s: &Scenario) -> f64 {
    s.events
        .iter()
        .rfind(|e| e.target == EventTarget::VStar)
        .map_or(s.v_star, |e| e.value)
}

fn evaluate(s: &Scenario, t_from: f64) -> Result<Metrics> {
    let trace = run_scenario(s)?;
    compute_metrics(&trace, final_v_star(s), t_from)
}

/// Runs every grid point over `base` and returns one row per point in grid order.
/// Failures of single points are recorded in their row.
pub fn run_sweep(base: &toml::Table, axes: &[GridAxis], t_from: f64) -> Result<Vec<SweepRow>> {
    let points = grid_points(axes)?;
    with_pool(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(id, point)| {
                let assignments = point.iter().map(|(k, v)| (k.clone(), display(v))).collect();
                let mut table = base.clone();
                let outcome = point
                    .into_iter()
                    .try_for_each(|(k, v)| set_path(&mut table, &k, v))
                    .and_then(|()| scenario_from_table(table, None))
                    .and_then(|s| evaluate(&s, t_from))
                    .map_err(|e| e.to_string());
                SweepRow {
                    id,
                    assignments,
                    outcome,
                }
            })
            .collect()
    })
}

fn display(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes the metrics table. Missing settling times and failed points leave empty cells.
pub fn write_sweep_csv<W: Write>(writer: W, axes: &[GridAxis], rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(axes.iter().map(|a| a.key.clone()));
    header.extend(
        [
            "overshoot_v",
            "overshoot_pct",
            "settling_time_s",
            "steady_state_error_v",
            "peak_deviation_v",
            "error",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.id.to_string()];
        rec.extend(row.assignments.iter().map(|(_, v)| v.clone()));
        match &row.outcome {
            Ok(m) => {
                rec.push(m.overshoot_v.to_string());
                rec.push(m.overshoot_pct.to_string());
                rec.push(m.settling_time_s.map(|t| t.to_string()).unwrap_or_default());
                rec.push(m.steady_state_error_v.to_string());
                rec.push(m.peak_deviation_v.to_string());
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Proportional gains searched by default.
pub const PI_GRID_KP: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.5];
/// Integral gains searched by default.
pub const PI_GRID_KI: [f64; 5] = [5.0, 20.0, 50.0, 100.0, 200.0];

/// Result of the PI grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTuning {
    pub kp: f64,
    pub ki: f64,
    pub metrics: Metrics,
    /// Every candidate as `(kp, ki, metrics)`; `None` when the run failed or did not converge.
    pub candidates: Vec<(f64, f64, Option<Metrics>)>,
}

/// Grid search over PI gains on `base`. Among runs that converge, picks the
/// shortest 2% settling time and breaks ties by smaller overshoot.
pub fn tune_pi(base: &Scenario, kp: &[f64], ki: &[f64]) -> Result<PiTuning> {
    if kp.is_empty() || ki.is_empty() {
        return Err(Error::Parse("PI grid is empty".into()));
    }
    let pairs: Vec<(f64, f64)> = kp.iter().flat_map(|&p| ki.iter().map(move |&i| (p, i))).collect();
    let v_star = final_v_star(base);
    let candidates: Vec<(f64, f64, Option<Metrics>)> = with_pool(|| {
        pairs
            .par_iter()
            .map(|&(p, i)| {
                let mut s = base.clone();
                s.controller.kind = crate::controllers::ControllerKind::Pi;
                s.controller.kp = p;
                s.controller.ki = i;
                let m = run_scenario(&s)
                    .ok()
                    .filter(|trace| converged(trace, v_star))
                    .and_then(|trace| compute_metrics(&trace, v_star, 0.0).ok())
                    .filter(|m| m.settling_time_s.is_some());
                (p, i, m)
            })
            .collect()
    })?;
    let best = candidates
        .iter()
        .filter_map(|(p, i, m)| m.map(|m| (*p, *i, m)))
        .min_by(|a, b| {
            let key = |m: &Metrics| (m.settling_time_s.unwrap_or(f64::INFINITY), m.overshoot_v);
            key(&a.2).partial_cmp(&key(&b.2)).unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or_else(|| Error::InvalidScenario {
            key: "controller".into(),
            msg: "no PI gain pair in the grid converged".into(),
            line: None,
        })?;
    Ok(PiTuning {
        kp: best.0,
        ki: best.1,
        metrics: best.2,
        candidates,
    })
}
