//! TOML scenario files.
//!
//! ```toml
//! [params_nominal]          # optional, defaults to the reference circuit
//! C = 1200e-6
//! [params_actual]           # optional overrides of the nominal values
//! P = 22.0
//! [reference]
//! v_star = 20.0             # V
//! mode = "static"           # or "dynamic"
//! [initial]
//! i1 = 6.0                  # A
//! vc = 15.0                 # V
//! i2 = 1.0                  # A
//! xc = -1.0
//! [controller]
//! kind = "aesc"             # esc | aesc | pi | rpbc | simplified_aesc
//! alpha = 10.0
//! k = 2.0
//! [observer]
//! G1 = [99.0, 20.0]
//! [exosystems.d1]
//! A = [[0.0, 100.0], [-100.0, 0.0]]   # 1/s
//! M = [1.0, 0.0]
//! zeta0 = [0.0, 1.0]
//! enabled = false
//! [[events]]
//! t = 0.2                   # s
//! target = "enable_d1"
//! value = 1.0
//! [noise]                   # optional
//! seed = 7
//! power = 0.0025            # variance per sample
//! targets = ["vc"]
//! [sim]
//! dt = 1e-6                 # s
//! t_end = 0.5               # s
//! decimate = 10
//! ```
//!
//! Unknown keys are rejected. Errors carry the offending key and, where it can be
//! found in the source, its line number.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::ControllerConfig;
use crate::engine::{Event, InitialConditions, NoiseSpec, Scenario};
use crate::error::{Error, Result};
use crate::observer::ObserverGains;
use crate::plant::{CircuitParams, ExoSystem, PlantState};
use crate::reference::ReferenceMode;

/// Partial parameter set; missing entries fall back to a base set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    #[serde(rename = "L1", skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(rename = "L2", skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(rename = "R2", skip_serializing_if = "Option::is_none")]
    pub r_line: Option<f64>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r_load: Option<f64>,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub p_load: Option<f64>,
    #[serde(rename = "i", skip_serializing_if = "Option::is_none")]
    pub i_load: Option<f64>,
}

impl ParamsPatch {
    pub fn apply(&self, base: &CircuitParams) -> CircuitParams {
        CircuitParams {
            l1: self.l1.unwrap_or(base.l1),
            l2: self.l2.unwrap_or(base.l2),
            c: self.c.unwrap_or(base.c),
            r: self.r.unwrap_or(base.r),
            r_line: self.r_line.unwrap_or(base.r_line),
            e: self.e.unwrap_or(base.e),
            r_load: self.r_load.unwrap_or(base.r_load),
            p_load: self.p_load.unwrap_or(base.p_load),
            i_load: self.i_load.unwrap_or(base.i_load),
        }
    }

    pub fn full(p: &CircuitParams) -> Self {
        Self {
            l1: Some(p.l1),
            l2: Some(p.l2),
            c: Some(p.c),
            r: Some(p.r),
            r_line: Some(p.r_line),
            e: Some(p.e),
            r_load: Some(p.r_load),
            p_load: Some(p.p_load),
            i_load: Some(p.i_load),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub v_star: f64,
    #[serde(default)]
    pub mode: ReferenceMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub i1: f64,
    pub vc: f64,
    pub i2: f64,
    #[serde(default)]
    pub xc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_hat1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_hat2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_hat3: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(rename = "G1", default = "default_gain")]
    pub g1: Vec<f64>,
    #[serde(rename = "G2", default = "default_gain")]
    pub g2: Vec<f64>,
    #[serde(rename = "G3", default = "default_gain")]
    pub g3: Vec<f64>,
}

fn default_gain() -> Vec<f64> {
    vec![100.0]
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            g1: default_gain(),
            g2: default_gain(),
            g3: default_gain(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoSection {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub m: Vec<f64>,
    pub zeta0: Vec<f64>,
    #[serde(default)]
    pub enabled: bool,
}

impl Default for ExoSection {
    fn default() -> Self {
        Self {
            a: vec![vec![0.0]],
            m: vec![1.0],
            zeta0: vec![0.0],
            enabled: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoSections {
    #[serde(default)]
    pub d1: ExoSection,
    #[serde(default)]
    pub d2: ExoSection,
    #[serde(default)]
    pub d3: ExoSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_decimate")]
    pub decimate: usize,
}

fn default_dt() -> f64 {
    1e-6
}
fn default_t_end() -> f64 {
    0.5
}
fn default_decimate() -> usize {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_t_end(),
            decimate: default_decimate(),
        }
    }
}

/// Document layout of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub params_nominal: ParamsPatch,
    #[serde(default)]
    pub params_actual: ParamsPatch,
    pub reference: ReferenceSection,
    pub initial: InitialSection,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub exosystems: ExoSections,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub sim: SimSection,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let nominal = self.params_nominal.apply(&CircuitParams::NOMINAL);
        let actual = self.params_actual.apply(&nominal);
        let exo = [&self.exosystems.d1, &self.exosystems.d2, &self.exosystems.d3];
        let mut bank = Vec::with_capacity(3);
        for (ch, e) in exo.iter().enumerate() {
            let sys =
                ExoSystem::new(e.a.clone(), e.m.clone(), e.zeta0.clone()).map_err(|err| Error::InvalidScenario {
                    key: format!("exosystems.d{}", ch + 1),
                    msg: err.to_string(),
                    line: None,
                })?;
            bank.push(sys);
        }
        let bank: [ExoSystem; 3] = bank.try_into().expect("three channels");
        let ini = &self.initial;
        let partial = [&ini.zeta_hat1, &ini.zeta_hat2, &ini.zeta_hat3];
        // Channels left out of a partial override start at zero.
        let zeta_hat = partial
            .iter()
            .any(|z| z.is_some())
            .then(|| std::array::from_fn(|ch| partial[ch].clone().unwrap_or_else(|| vec![0.0; bank[ch].dim()])));
        let scenario = Scenario {
            nominal,
            actual,
            v_star: self.reference.v_star,
            reference_mode: self.reference.mode,
            initial: InitialConditions {
                plant: PlantState::new(ini.i1, ini.vc, ini.i2),
                xc: ini.xc,
                zeta_hat,
                mu0: ini.mu0,
                e_hat: ini.e_hat,
            },
            controller: self.controller,
            observer: ObserverGains::new(self.observer.g1, self.observer.g2, self.observer.g3),
            exo: bank,
            exo_enabled: exo.map(|e| e.enabled),
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            decimate: self.sim.decimate,
            events: self.events,
            noise: self.noise,
        };
        Ok(scenario)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let exo = |ch: usize| ExoSection {
            a: s.exo[ch].a_rows(),
            m: s.exo[ch].output_row().to_vec(),
            zeta0: s.exo[ch].zeta0().to_vec(),
            enabled: s.exo_enabled[ch],
        };
        let zh = |ch: usize| s.initial.zeta_hat.as_ref().map(|z| z[ch].clone());
        Self {
            params_nominal: ParamsPatch::full(&s.nominal),
            params_actual: ParamsPatch::full(&s.actual),
            reference: ReferenceSection {
                v_star: s.v_star,
                mode: s.reference_mode,
            },
            initial: InitialSection {
                i1: s.initial.plant.i1,
                vc: s.initial.plant.vc,
                i2: s.initial.plant.i2,
                xc: s.initial.xc,
                zeta_hat1: zh(0),
                zeta_hat2: zh(1),
                zeta_hat3: zh(2),
                mu0: s.initial.mu0,
                e_hat: s.initial.e_hat,
            },
            controller: s.controller.clone(),
            observer: ObserverSection {
                g1: s.observer.g[0].clone(),
                g2: s.observer.g[1].clone(),
                g3: s.observer.g[2].clone(),
            },
            exosystems: ExoSections {
                d1: exo(0),
                d2: exo(1),
                d3: exo(2),
            },
            events: s.events.clone(),
            noise: s.noise.clone(),
            sim: SimSection {
                dt: s.dt,
                t_end: s.t_end,
                decimate: s.decimate,
            },
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(source: &str) -> Result<Scenario> {
    let table: toml::Table = source
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    scenario_from_table(table, Some(source))
}

/// Builds a scenario from an already parsed TOML table. `source`, when given, is
/// used to attach line numbers to validation errors.
pub fn scenario_from_table(table: toml::Table, source: Option<&str>) -> Result<Scenario> {
    let file: ScenarioFile = ScenarioFile::deserialize(table).map_err(|e| Error::Parse(e.to_string()))?;
    let scenario = file.into_scenario().map_err(|e| anchor(e, source))?;
    scenario.validate().map_err(|e| anchor(e, source))?;
    Ok(scenario)
}

/// Reads a scenario from disk. `.scenario` and `.toml` files are both TOML.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

/// Serializes a scenario with every parameter spelled out.
pub fn to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(&ScenarioFile::from_scenario(s)).map_err(|e| Error::Parse(e.to_string()))
}

/// Adds the source line of `key` to validation errors.
fn anchor(err: Error, source: Option<&str>) -> Error {
    match (err, source) {
        (Error::InvalidScenario { key, msg, line: None }, Some(src)) => {
            let line = locate_key(src, &key);
            Error::InvalidScenario { key, msg, line }
        }
        (err, _) => err,
    }
}

/// Line (1-based) where a dotted key such as `params_nominal.C` or `events[2].t` is
/// written. Falls back to the section header when the key itself is absent.
pub fn locate_key(source: &str, key: &str) -> Option<usize> {
    let (section, leaf) = key.rsplit_once('.')?;
    let (section, index) = match section.split_once('[') {
        Some((name, rest)) => (name, rest.trim_end_matches(']').parse::<usize>().ok()),
        None => (section, None),
    };
    let mut current: Option<String> = None;
    let mut seen = 0usize;
    let mut header_line = None;
    for (no, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            let array = line.starts_with("[[");
            let matches = name == section
                && match index {
                    Some(i) if array => {
                        seen += 1;
                        seen == i + 1
                    }
                    Some(_) => false,
                    None => true,
                };
            if matches {
                header_line = Some(no + 1);
            }
            current = matches.then_some(name);
            continue;
        }
        if current.is_some() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == leaf {
                    return Some(no + 1);
                }
            }
        }
    }
    header_line
}

/// Sets `value` at a dotted `path` inside a TOML table, creating tables on the way.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let leaf = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Parse(format!("empty key `{path}`")))?;
    let mut node = table;
    for p in parts {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("`{p}` in `{path}` is not a table")))?;
    }
    node.insert(leaf.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[reference]
v_star = 20.0

[initial]
i1 = 6.0
vc = 15.0
i2 = 1.0
xc = -1.0

[controller]
kind = "esc"
alpha = 10.0
k = 2.0
"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        let expected = Scenario::nominal(ControllerConfig::esc(10.0, 2.0));
        assert_eq!(s, expected);
    }

    #[test]
    fn round_trip_is_identity() {
        let mut s = parse_scenario(MINIMAL).unwrap();
        s.events
            .push(Event::new(0.2, crate::engine::EventTarget::PActual, 22.0));
        s.noise = Some(NoiseSpec::low(5));
        s.exo[0] = ExoSystem::harmonic(100.0, [1.0, 0.0], [0.0, 1.0]);
        s.observer.g[0] = vec![99.0, 20.0];
        s.initial.zeta_hat = Some([vec![0.1, 0.2], vec![0.0], vec![0.3]]);
        let text = to_toml(&s).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn negative_capacitance_names_key_and_line() {
        let src = format!("{MINIMAL}\n[params_nominal]\nC = -1.0\n");
        let err = parse_scenario(&src).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("params_nominal.C"), "{text}");
        let line = src.lines().position(|l| l.starts_with("C = -1.0")).unwrap() + 1;
        assert!(text.contains(&format!("line {line}")), "{text}");
        assert!(err.is_input_error());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let src = MINIMAL.replace("alpha = 10.0", "alpah = 10.0");
        let err = parse_scenario(&src).unwrap_err();
        assert!(err.to_string().contains("alpah"), "{err}");
        assert!(err.is_input_error());
    }

    #[test]
    fn actual_params_override_nominal() {
        let src = format!("{MINIMAL}\n[params_actual]\nP = 22.0\n");
        let s = parse_scenario(&src).unwrap();
        assert_eq!(s.actual.p_load, 22.0);
        assert_eq!(s.nominal.p_load, 20.0);
        assert_eq!(s.actual.c, s.nominal.c);
    }

    #[test]
    fn event_key_located_in_its_array_entry() {
        let src = "[[events]]\nt = 0.1\n\n[[events]]\nt = 0.2\nvalue = 1\n";
        assert_eq!(locate_key(src, "events[1].t"), Some(5));
        assert_eq!(locate_key(src, "events[0].t"), Some(2));
    }

    #[test]
    fn set_path_creates_tables() {
        let mut t = toml::Table::new();
        set_path(&mut t, "controller.alpha", toml::Value::Float(30.0)).unwrap();
        assert_eq!(t["controller"]["alpha"].as_float(), Some(30.0));
    }
}
