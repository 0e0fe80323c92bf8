//! The individual commands, as pure functions from a spec to a [`Report`].

use hankel_core::form::{factorization_residual, identity_residual, min_power, spectral_witnesses, WitnessKind};
use hankel_core::galerkin::{certificate_with, section_study, select_kind, TrialKind, MAX_ROUNDS};
use hankel_core::predict::predict_split;
use hankel_core::sigma::{hermitian_eigenvalues, sigma_of_kernel};
use hankel_core::special::{factorial, gamma_real};
use hankel_core::{Error, LogGrid, NegCount, SigmaDistribution, SigmaPart, TestFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::report::{CertificateSummary, Report, Residuals, Sections, Status, Witnesses};
use crate::spec::KernelNode;
use crate::CliError;

/// Settings shared by every command.
#[derive(Clone, Debug)]
pub struct Settings {
    pub sizes: Vec<usize>,
    pub tol: f64,
    pub inertia_tol: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct CertificateArgs {
    pub target: Option<usize>,
    pub eps: f64,
    pub kind: Option<TrialKind>,
    pub rounds: usize,
}

impl Default for CertificateArgs {
    fn default() -> Self {
        CertificateArgs { target: None, eps: hankel_core::galerkin::DEFAULT_EPS, kind: None, rounds: MAX_ROUNDS }
    }
}

pub fn predict(node: &KernelNode, s: &Settings) -> Result<Report, CliError> {
    let (h0, v) = node.split()?;
    let mut r = Report::new("predict", s.seed, node.clone());
    r.prediction = Some(predict_split(&h0, &v)?);
    Ok(r)
}

fn draws(seed: u64, samples: usize, min_power: u32) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| TestFunction::random(&mut rng, min_power)).collect()
}

pub fn identity(node: &KernelNode, s: &Settings, samples: usize) -> Result<Report, CliError> {
    let k = node.kernel()?;
    let m = node.quasi_params().into_iter().map(|(q, r)| min_power(q, r)).max().unwrap_or(0);
    let values = draws(s.seed, samples, m)
        .iter()
        .map(|f| identity_residual(&k, f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = Report::new("verify identity", s.seed, node.clone());
    let res = Residuals::new("identity", values, s.tol);
    r.status = if res.within() { Status::Pass } else { Status::Fail };
    r.residuals = Some(res);
    Ok(r)
}

pub fn factorization(node: &KernelNode, s: &Settings, samples: usize) -> Result<Report, CliError> {
    let grid = LogGrid::default();
    let values = draws(s.seed, samples, 0)
        .iter()
        .map(|f| factorization_residual(f, grid))
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = Report::new("verify factorization", s.seed, node.clone());
    let res = Residuals::new("factorization", values, s.tol);
    r.status = if res.within() { Status::Pass } else { Status::Fail };
    r.residuals = Some(res);
    Ok(r)
}

pub fn galerkin(node: &KernelNode, s: &Settings) -> Result<Report, CliError> {
    let (h0, v) = node.split()?;
    let study = section_study(&node.kernel()?, &s.sizes, s.inertia_tol)?;
    let mut r = Report::new("verify galerkin", s.seed, node.clone());
    match predict_split(&h0, &v) {
        Ok(p) => {
            let agrees = study.verdict.agrees_with(p.n_minus);
            r.status = if agrees { Status::Pass } else { Status::Fail };
            r.sections = Some(Sections { study, inertia_tol: s.inertia_tol, agrees_with_prediction: Some(agrees) });
            r.prediction = Some(p);
        }
        Err(e) if !e.is_numerical() => {
            r.notes.push(format!("no prediction to compare against: {e}"));
            r.sections = Some(Sections { study, inertia_tol: s.inertia_tol, agrees_with_prediction: None });
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}

pub fn witness(node: &KernelNode, s: &Settings, kind: WitnessKind) -> Result<Report, CliError> {
    let quotients = spectral_witnesses(&node.kernel()?, &kind)?;
    let mut r = Report::new("verify witness", s.seed, node.clone());
    r.witnesses = Some(Witnesses { kind, quotients, quad_rel_tol: 1e-12 });
    Ok(r)
}

pub fn certificate(node: &KernelNode, s: &Settings, args: &CertificateArgs) -> Result<Report, CliError> {
    let (h0, v) = node.split()?;
    let mut r = Report::new("certificate", s.seed, node.clone());
    let predicted = predict_split(&h0, &v).ok();
    let target = match (args.target, predicted.as_ref().map(|p| p.n_minus)) {
        (Some(t), _) => t,
        (None, Some(NegCount::Finite(n))) if n > 0 => n,
        _ => return Err(CliError::Validation("no finite positive predicted count; pass --target".into())),
    };
    r.prediction = predicted;
    let kind = args.kind.unwrap_or_else(|| select_kind(&h0, &v));
    match certificate_with(&h0, &v, target, args.eps, kind, args.rounds) {
        Ok(c) => {
            r.status = if c.succeeded() { Status::Pass } else { Status::Fail };
            r.certificate = Some(CertificateSummary {
                kind: c.kind,
                eps: c.params.eps,
                delta: c.params.delta,
                rounds: c.params.rounds,
                dimension: c.dimension(),
                achieved: c.achieved,
                target: c.target,
                gram_eigenvalues: hermitian_eigenvalues(&c.gram)?,
                inertia_tol: s.inertia_tol,
            });
        }
        Err(e @ Error::EpsTooLarge { .. }) => {
            r.status = Status::Fail;
            r.error = Some(e.to_string());
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}

/// One line of the sigma table. Density rows fill `lambda` and `value`;
/// singular parts are listed symbolically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaRow {
    pub kind: &'static str,
    pub lambda: Option<f64>,
    pub value_re: f64,
    pub value_im: f64,
    pub exponent: Option<f64>,
    pub rate: Option<f64>,
    pub order: Option<usize>,
    pub center_re: Option<f64>,
    pub center_im: Option<f64>,
}

impl SigmaRow {
    fn symbolic(kind: &'static str, value: hankel_core::C64, center: hankel_core::C64) -> SigmaRow {
        SigmaRow {
            kind,
            lambda: None,
            value_re: value.re,
            value_im: value.im,
            exponent: None,
            rate: None,
            order: None,
            center_re: Some(center.re),
            center_im: Some(center.im),
        }
    }
}

pub fn sigma_rows(node: &KernelNode, lambda_min: f64, lambda_max: f64, points: usize) -> Result<Vec<SigmaRow>, CliError> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min) || points < 2 {
        return Err(CliError::Validation("need 0 < lambda-min < lambda-max and at least 2 points".into()));
    }
    let sigma = sigma_of_kernel(&node.kernel()?)?;
    let dens = SigmaDistribution {
        parts: sigma.parts.iter().filter(|p| matches!(p, SigmaPart::RegularDensity { .. })).cloned().collect(),
    };
    let mut rows = Vec::new();
    if !dens.parts.is_empty() {
        let ratio = lambda_max / lambda_min;
        for i in 0..points {
            let l = lambda_min * ratio.powf(i as f64 / (points - 1) as f64);
            rows.push(SigmaRow {
                lambda: Some(l),
                center_re: None,
                center_im: None,
                ..SigmaRow::symbolic("density", dens.density(l)?.into(), 0.0.into())
            });
        }
    }
    for p in &sigma.parts {
        match p {
            SigmaPart::RegularDensity { .. } => {}
            SigmaPart::RegularizedPower { c, q, alpha, r, order } => rows.push(SigmaRow {
                exponent: Some(q - 1.0),
                rate: Some(*r),
                order: Some(*order),
                ..SigmaRow::symbolic("regularized_power", (c / gamma_real(*q)?).into(), (*alpha).into())
            }),
            SigmaPart::DeltaCombo { beta, weights, .. } => {
                // weights[j] = p_j (−1)^j j!, so p_j is the coefficient of δ^{(j)}
                for (j, w) in weights.iter().enumerate() {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    rows.push(SigmaRow { order: Some(j), ..SigmaRow::symbolic("delta", w * sign / factorial(j), *beta) });
                }
            }
        }
    }
    Ok(rows)
}
