//! JSON reports and their CSV companions.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use hankel_core::form::WitnessKind;
use hankel_core::galerkin::{SectionStudy, TrialKind};
use hankel_core::Prediction;
use serde::{Deserialize, Serialize};

use crate::spec::{KernelNode, SCHEMA};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every checked quantity is within tolerance.
    Pass,
    /// Some checked quantity is outside tolerance.
    Fail,
    /// Nothing to check against.
    Info,
    /// The computation itself failed; see `error`.
    Error,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass | Status::Info => 0,
            Status::Fail | Status::Error => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub status: Status,
    pub seed: u64,
    pub spec: KernelNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<Sections>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Residuals>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Witnesses>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The only fields allowed to differ between reruns.
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sections {
    #[serde(flatten)]
    pub study: SectionStudy,
    /// Eigenvalues below `inertia_tol·‖H_N‖` in modulus count as zero.
    pub inertia_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agrees_with_prediction: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub kind: TrialKind,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub rounds: usize,
    pub dimension: usize,
    pub achieved: usize,
    pub target: usize,
    pub gram_eigenvalues: Vec<f64>,
    pub inertia_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub kind: String,
    pub values: Vec<f64>,
    pub max: f64,
    pub tol: f64,
}

impl Residuals {
    pub fn new(kind: &str, values: Vec<f64>, tol: f64) -> Residuals {
        let max = values.iter().fold(0.0f64, |m, &v| if v.is_nan() { f64::NAN } else { m.max(v) });
        Residuals { kind: kind.into(), values, max, tol }
    }

    pub fn within(&self) -> bool {
        self.max <= self.tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    pub kind: WitnessKind,
    pub quotients: Vec<f64>,
    /// Relative tolerance of the quadratures behind each quotient.
    pub quad_rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub runtime_s: f64,
}

/// Wall-clock bookkeeping for one command.
pub struct Clock {
    started: u128,
    t0: Instant,
}

impl Clock {
    pub fn start() -> Clock {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
        Clock { started, t0: Instant::now() }
    }

    pub fn timing(&self) -> Timing {
        Timing { started_unix_ms: self.started, runtime_s: self.t0.elapsed().as_secs_f64() }
    }
}

impl Report {
    pub fn new(command: &str, seed: u64, spec: KernelNode) -> Report {
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            status: Status::Info,
            seed,
            spec,
            prediction: None,
            sections: None,
            certificate: None,
            residuals: None,
            witnesses: None,
            notes: vec![],
            error: None,
            timing: Timing { started_unix_ms: 0, runtime_s: 0.0 },
        }
    }

    /// Stand-in report for a command that could not finish.
    pub fn failed(command: &str, seed: u64, spec: KernelNode, e: &CliError) -> Report {
        Report { status: Status::Error, error: Some(e.to_string()), ..Report::new(command, seed, spec) }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize)]
struct SectionRow {
    n: usize,
    n_minus: usize,
    n_plus: usize,
    min_eig: f64,
    max_eig: f64,
}

pub fn write_sections_csv(path: &Path, st: &SectionStudy) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    for i in 0..st.sizes.len() {
        w.serialize(SectionRow {
            n: st.sizes[i],
            n_minus: st.n_minus[i],
            n_plus: st.n_plus[i],
            min_eig: st.min_eig[i],
            max_eig: st.max_eig[i],
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}
