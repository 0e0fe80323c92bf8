//! Batch runs: a config of explicit cases and perturbation grids, one report
//! per case plus a `summary.csv`.
//!
//! ```json
//! {"schema": "1",
//!  "cases": [{"name": "carleman", "mode": "galerkin",
//!             "spec": {"type": "quasi_carleman", "v0": 1, "q": 1, "alpha": 0}}],
//!  "grids": [{"name": "fdh", "mode": "predict",
//!             "h0": {"type": "quasi_carleman", "v0": 1, "q": 1, "alpha": 0},
//!             "v0": [1, -1], "k": [0.5, 1.5, 2.5], "beta": [1], "rho": [0]}]}
//! ```
//!
//! Grid case `i` perturbs `h0` by `v0 (t+ρ)^k e^{−βt}` and is named
//! `{name}-{i:03}`, looping over `v0`, then `k`, `beta`, `rho`.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::{csv_err, csv_writer, Report, Status};
use crate::run::{self, CertificateArgs, Settings};
use crate::spec::{check_schema, KernelNode};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Predict,
    Identity,
    Factorization,
    Galerkin,
    Certificate,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    pub mode: Mode,
    pub spec: KernelNode,
    #[serde(default)]
    pub target: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub h0: Option<KernelNode>,
    pub v0: Vec<f64>,
    pub k: Vec<f64>,
    #[serde(default = "one")]
    pub beta: Vec<f64>,
    #[serde(default = "zero")]
    pub rho: Vec<f64>,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

fn zero() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema: String,
    #[serde(default)]
    pub cases: Vec<CaseSpec>,
    #[serde(default)]
    pub grids: Vec<GridSpec>,
}

/// A case after grid expansion.
#[derive(Clone, Debug)]
struct Case {
    name: String,
    mode: Mode,
    spec: KernelNode,
    target: Option<usize>,
    params: Option<[f64; 4]>,
}

fn expand(cfg: &SweepConfig) -> Vec<Case> {
    let mut out: Vec<Case> = cfg
        .cases
        .iter()
        .map(|c| Case { name: c.name.clone(), mode: c.mode, spec: c.spec.clone(), target: c.target, params: None })
        .collect();
    for g in &cfg.grids {
        let mut i = 0;
        for &v0 in &g.v0 {
            for &k in &g.k {
                for &beta in &g.beta {
                    for &rho in &g.rho {
                        let v = KernelNode::QuasiCarleman { v0, q: -k, alpha: beta, r: rho };
                        let spec = match &g.h0 {
                            Some(h0) => KernelNode::Sum { parts: vec![h0.clone(), v] },
                            None => v,
                        };
                        out.push(Case {
                            name: format!("{}-{i:03}", g.name),
                            mode: g.mode,
                            spec,
                            target: None,
                            params: Some([v0, k, beta, rho]),
                        });
                        i += 1;
                    }
                }
            }
        }
    }
    out
}

fn validate(cases: &[Case]) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    for c in cases {
        let ok = !c.name.is_empty() && c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch));
        if !ok || c.name.starts_with('.') {
            return Err(CliError::Validation(format!("case name {:?} is not a plain file name", c.name)));
        }
        if c.name == "summary" || !seen.insert(c.name.clone()) {
            return Err(CliError::Validation(format!("duplicate or reserved case name {:?}", c.name)));
        }
        c.spec.kernel().map_err(|e| CliError::Validation(format!("case {}: {e}", c.name)))?;
    }
    Ok(())
}

fn run_case(c: &Case, s: &Settings, samples: usize) -> Result<Report, CliError> {
    match c.mode {
        Mode::Predict => run::predict(&c.spec, s),
        Mode::Identity => run::identity(&c.spec, s, samples),
        Mode::Factorization => run::factorization(&c.spec, s, samples),
        Mode::Galerkin => run::galerkin(&c.spec, s),
        Mode::Certificate => {
            run::certificate(&c.spec, s, &CertificateArgs { target: c.target, ..CertificateArgs::default() })
        }
    }
}

#[derive(Serialize)]
struct SummaryRow {
    name: String,
    mode: Mode,
    status: Status,
    v0: Option<f64>,
    k: Option<f64>,
    beta: Option<f64>,
    rho: Option<f64>,
    predicted_n_minus: Option<String>,
    predicted_n_plus: Option<String>,
    critical_coupling: Option<f64>,
    numerical: Option<String>,
    error: Option<String>,
}

fn summarize(c: &Case, r: &Report) -> SummaryRow {
    let numerical = if let Some(sec) = &r.sections {
        Some(sec.study.verdict.to_string())
    } else if let Some(cert) = &r.certificate {
        Some(format!("{}/{}", cert.achieved, cert.target))
    } else {
        r.residuals.as_ref().map(|res| format!("{:e}", res.max))
    };
    let p = c.params;
    SummaryRow {
        name: c.name.clone(),
        mode: c.mode,
        status: r.status,
        v0: p.map(|p| p[0]),
        k: p.map(|p| p[1]),
        beta: p.map(|p| p[2]),
        rho: p.map(|p| p[3]),
        predicted_n_minus: r.prediction.as_ref().map(|p| p.n_minus.to_string()),
        predicted_n_plus: r.prediction.as_ref().map(|p| p.n_plus.to_string()),
        critical_coupling: r.prediction.as_ref().and_then(|p| p.critical_coupling),
        numerical,
        error: r.error.clone(),
    }
}

/// Runs every case, writes the reports, and returns the worst exit code.
pub fn sweep(config: &Path, out: &Path, s: &Settings, samples: usize) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
    let cfg: SweepConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", config.display())))?;
    check_schema(&cfg.schema)?;
    let cases = expand(&cfg);
    validate(&cases)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    if cases.is_empty() {
        return Ok(0);
    }
    let results: Vec<(Report, u8)> = cases
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let clock = crate::report::Clock::start();
            let settings = Settings { seed: s.seed.wrapping_add(i as u64), ..s.clone() };
            let (mut r, code) = match run_case(c, &settings, samples) {
                Ok(r) => {
                    let code = r.status.exit_code();
                    (r, code)
                }
                Err(e) => (Report::failed(c.mode_name(), settings.seed, c.spec.clone(), &e), e.exit_code()),
            };
            r.timing = clock.timing();
            log::info!("{}: {:?}", c.name, r.status);
            (r, code)
        })
        .collect();
    let mut w = csv_writer(&out.join("summary.csv"))?;
    let mut worst = 0;
    for (c, (r, code)) in cases.iter().zip(&results) {
        r.write(&out.join(format!("{}.json", c.name)))?;
        w.serialize(summarize(c, r)).map_err(csv_err)?;
        worst = worst.max(*code);
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(worst)
}

impl Case {
    fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Predict => "predict",
            Mode::Identity => "verify identity",
            Mode::Factorization => "verify factorization",
            Mode::Galerkin => "verify galerkin",
            Mode::Certificate => "certificate",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_expand_in_order() {
        let cfg: SweepConfig = serde_json::from_str(
            r#"{"schema":"1","grids":[{"name":"g","mode":"predict","v0":[1,-1],"k":[0.5,1.5]}]}"#,
        )
        .unwrap();
        let cases = expand(&cfg);
        let names: Vec<_> = cases.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["g-000", "g-001", "g-002", "g-003"]);
        assert_eq!(cases[2].params, Some([-1.0, 0.5, 1.0, 0.0]));
        validate(&cases).unwrap();
    }

    #[test]
    fn rejects_path_like_names() {
        let spec = KernelNode::QuasiCarleman { v0: 1.0, q: 1.0, alpha: 0.0, r: 0.0 };
        for name in ["../x", "", ".hidden", "summary"] {
            let c = Case { name: name.into(), mode: Mode::Predict, spec: spec.clone(), target: None, params: None };
            assert!(validate(&[c]).is_err(), "{name}");
        }
    }
}
