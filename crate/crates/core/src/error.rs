use thiserror::Error;

/// Errors raised by the model, the analysis routines and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// The constant-power term `P / vc` was evaluated at or below the voltage floor.
    #[error("capacitor voltage {vc} V is at or below the CPL floor {floor} V{}", at_time(.t))]
    CplSingularity { vc: f64, floor: f64, t: Option<f64> },

    #[error("reference v* = {v_star} V is unreachable: mu* = {mu_star} is outside [0, 1]")]
    UnreachableReference { v_star: f64, mu_star: f64 },

    #[error("domain estimate is empty: v*^2 = {v_star_sq} must exceed R*P = {rp}")]
    UnreachableDomain { v_star_sq: f64, rp: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("observer channel d{channel} is not Hurwitz (max Re eig = {max_re})")]
    ObserverUnstable { channel: usize, max_re: f64 },

    #[error("invalid scenario: {key}: {msg}{}", at_line(.line))]
    InvalidScenario {
        key: String,
        msg: String,
        line: Option<usize>,
    },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attach the simulation time to a singularity raised deep inside a derivative evaluation.
    pub fn at(self, time: f64) -> Self {
        match self {
            Error::CplSingularity { vc, floor, t: None } => Error::CplSingularity {
                vc,
                floor,
                t: Some(time),
            },
            other => other,
        }
    }

    /// True for errors caused by the input document rather than by the run.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidScenario { .. } | Error::Parse(_) | Error::DimensionMismatch(_)
        )
    }
}

fn at_time(t: &Option<f64>) -> String {
    t.map(|t| format!(" at t = {t:.6} s")).unwrap_or_default()
}

fn at_line(line: &Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;
