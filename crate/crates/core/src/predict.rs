//! Closed-form predictions of the negative (and positive) spectral counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, QuasiCarlemanTerm};
use crate::sigma::{sigma_of_kernel, SigmaDistribution, SigmaPart};
use crate::special::{factorial, gamma_real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegCount {
    Finite(usize),
    Infinite,
}

impl std::fmt::Display for NegCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NegCount::Finite(n) => write!(f, "{n}"),
            NegCount::Infinite => write!(f, "infinite"),
        }
    }
}

/// Which theorem a prediction comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Sign of quasi-Carleman kernels.
    HKL,
    /// Regular sign-functions.
    GG,
    /// Critical coupling for `k < 0` perturbations.
    HKC,
    /// Singular perturbations with `k > 0` non-integer.
    FDH,
    /// Finite-rank perturbations.
    FDH1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub n_minus: NegCount,
    pub n_plus: NegCount,
    pub source: Source,
    pub critical_coupling: Option<f64>,
    pub rank: Option<usize>,
}

impl Prediction {
    fn new(n_minus: NegCount, n_plus: NegCount, source: Source) -> Self {
        Prediction { n_minus, n_plus, source, critical_coupling: None, rank: None }
    }
}

/// Counts for `h(t) = (t+r)^{−q} e^{−αt}`; independent of `α` and `r`.
pub fn predict_quasi_carleman(q: f64) -> Result<Prediction> {
    if q == 0.0 || (q < 0.0 && q == q.round()) {
        return Err(Error::IntegerExponent(q));
    }
    if q > 0.0 {
        return Ok(Prediction::new(NegCount::Finite(0), NegCount::Infinite, Source::HKL));
    }
    let n = (-q).floor() as usize;
    Ok(if n % 2 == 0 {
        Prediction::new(NegCount::Infinite, NegCount::Finite(n / 2 + 1), Source::HKL)
    } else {
        Prediction::new(NegCount::Finite(n.div_ceil(2)), NegCount::Infinite, Source::HKL)
    })
}

/// `ν = Γ(−k) e^{−βρ} ess inf_{λ≥β} (λ−β)^{k+1} e^{ρλ} σ₀(λ)`.
pub fn critical_coupling(sigma0: &SigmaDistribution, k: f64, beta: f64, rho: f64) -> Result<f64> {
    if k > -1.0 {
        return Err(Error::Precondition(format!("critical coupling needs k <= -1, got {k}")));
    }
    if k < -1.0 && !(rho > 0.0) {
        return Err(Error::Precondition("k < -1 requires rho > 0".into()));
    }
    if !(beta > 0.0) || rho < 0.0 {
        return Err(Error::Precondition(format!("need beta > 0 and rho >= 0, got beta={beta}, rho={rho}")));
    }
    if sigma0.has_singular_parts() {
        return Err(Error::Precondition("critical coupling needs a density sigma".into()));
    }
    let g = gamma_real(-k)?;
    // σ₀ constant: the infimum of x^{k+1} e^{ρx} is attained at x = −(k+1)/ρ
    if let [SigmaPart::RegularDensity { c, q, alpha, r }] = sigma0.parts[..] {
        if q == 1.0 && r == 0.0 && alpha <= beta {
            let inf = if k == -1.0 { 1.0 } else { (-k - 1.0).powf(k + 1.0) * rho.powf(-k - 1.0) * (-k - 1.0).exp() };
            return Ok(g * c * inf);
        }
    }
    let n = 10_000;
    let (lo, hi) = (1e-8f64, 50.0f64);
    let mut inf = f64::INFINITY;
    for i in 0..n {
        let x = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let v = x.powf(k + 1.0) * (rho * x).exp() * sigma0.density(beta + x)?;
        inf = inf.min(v);
    }
    Ok((g * inf).max(0.0))
}

/// Counts for `H₀ + V` with `v(t) = v₀ (t+ρ)^k e^{−βt}`.
///
/// `v` is given in quasi-Carleman form (`q = −k`, `α = β`, `r = ρ`).
pub fn predict_perturbed(h0: &Kernel, v: &QuasiCarlemanTerm) -> Result<Prediction> {
    let sigma0 = sigma_of_kernel(h0)?;
    if !assumption_hfree(&sigma0) {
        return Err(Error::Assumption("sigma must be a nonnegative locally bounded density on [0, inf)".into()));
    }
    let (v0, k, beta, rho) = (v.v0, -v.q, v.alpha, v.r);
    if !(beta > 0.0) {
        return Err(Error::Precondition(format!("perturbation needs beta > 0, got {beta}")));
    }
    let free = h0.is_zero();
    if k >= 0.0 && k == k.round() {
        let vk = Kernel::perturbation(v0, k, beta, rho)?;
        let mut p = predict_finite_rank(&vk)?;
        if !free {
            p.n_plus = NegCount::Infinite;
        }
        return Ok(p);
    }
    let plus_if_free = |n: NegCount| if free { n } else { NegCount::Infinite };
    if k < 0.0 {
        let mut p = if k > -1.0 {
            if v0 >= 0.0 {
                Prediction::new(NegCount::Finite(0), NegCount::Infinite, Source::HKC)
            } else {
                Prediction::new(NegCount::Infinite, plus_if_free(NegCount::Finite(0)), Source::HKC)
            }
        } else {
            let nu = critical_coupling(&sigma0, k, beta, rho)?;
            let mut p = if v0 >= -nu {
                Prediction::new(NegCount::Finite(0), NegCount::Infinite, Source::HKC)
            } else {
                Prediction::new(NegCount::Infinite, plus_if_free(NegCount::Finite(0)), Source::HKC)
            };
            p.critical_coupling = Some(nu);
            p
        };
        if v0 == 0.0 && free {
            p.n_plus = NegCount::Finite(0);
        }
        return Ok(p);
    }
    if v0 == 0.0 {
        return Ok(Prediction::new(NegCount::Finite(0), plus_if_free(NegCount::Finite(0)), Source::FDH));
    }
    let n = k.floor() as usize;
    let odd = n % 2 == 1;
    let n_minus = match (v0 > 0.0, odd) {
        (true, true) => NegCount::Finite(n.div_ceil(2)),
        (false, false) => NegCount::Finite(n / 2 + 1),
        _ => NegCount::Infinite,
    };
    // V alone follows the sign rule for q = −k
    let hkl = predict_quasi_carleman(-k)?;
    let n_plus = if v0 > 0.0 { hkl.n_plus } else { hkl.n_minus };
    Ok(Prediction::new(n_minus, plus_if_free(n_plus), Source::FDH))
}

/// Counts for a finite-rank kernel `Σ P_m(t) e^{−β_m t}`.
pub fn predict_finite_rank(v: &Kernel) -> Result<Prediction> {
    if !v.is_finite_rank() {
        return Err(Error::Precondition("kernel has non-finite-rank terms".into()));
    }
    let mut n_minus = 0usize;
    let mut rank = 0usize;
    for t in v.finite_terms() {
        let kk = t.degree();
        if t.beta.im == 0.0 {
            rank += kk + 1;
            let p = t.leading().re * factorial(kk);
            n_minus += if kk % 2 == 1 {
                kk.div_ceil(2)
            } else if p > 0.0 {
                kk / 2
            } else {
                kk / 2 + 1
            };
        } else {
            rank += kk + 1;
            if t.beta.im > 0.0 {
                n_minus += kk + 1;
            }
        }
    }
    let mut p = Prediction::new(NegCount::Finite(n_minus), NegCount::Finite(rank - n_minus), Source::FDH1);
    p.rank = Some(rank);
    Ok(p)
}

/// Counts for a kernel on its own: zero, finite-rank, or one quasi-Carleman
/// term with either sign of coupling.
pub fn predict_kernel(k: &Kernel) -> Result<Prediction> {
    if k.is_zero() {
        return Ok(Prediction::new(NegCount::Finite(0), NegCount::Finite(0), Source::HKL));
    }
    if k.is_finite_rank() {
        return predict_finite_rank(k);
    }
    let mut it = k.quasi_terms();
    match (it.next(), it.next(), k.finite_terms().next()) {
        (Some(t), None, None) => {
            let mut p = predict_quasi_carleman(t.q)?;
            if t.v0 < 0.0 {
                std::mem::swap(&mut p.n_minus, &mut p.n_plus);
            }
            Ok(p)
        }
        _ => Err(Error::Precondition("no closed-form count for this combination of terms".into())),
    }
}

/// Counts for `H₀ + V`. A finite-rank `V` keeps its own `N₋` when `σ₀` is an
/// admissible density; a single quasi-Carleman `V` goes through
/// [`predict_perturbed`].
pub fn predict_split(h0: &Kernel, v: &Kernel) -> Result<Prediction> {
    if h0.is_zero() {
        return predict_kernel(v);
    }
    if v.is_zero() {
        return predict_kernel(h0);
    }
    if v.is_finite_rank() {
        if !assumption_hfree(&sigma_of_kernel(h0)?) {
            return Err(Error::Assumption("sigma must be a nonnegative locally bounded density on [0, inf)".into()));
        }
        let mut p = predict_finite_rank(v)?;
        p.n_plus = NegCount::Infinite;
        return Ok(p);
    }
    let mut it = v.quasi_terms();
    match (it.next(), it.next(), v.finite_terms().next()) {
        (Some(t), None, None) => predict_perturbed(h0, t),
        _ => Err(Error::Precondition("perturbation must be finite-rank or a single quasi-Carleman term".into())),
    }
}

/// Whether `σ₀` is a nonnegative density supported in `[0, ∞)`, locally
/// bounded on `(0, ∞)` and `O(λ^{−l})` at 0 with `l < 1`.
pub fn assumption_hfree(sigma0: &SigmaDistribution) -> bool {
    sigma0.parts.iter().all(|p| match *p {
        SigmaPart::RegularDensity { c, q, alpha, .. } => {
            c > 0.0 && alpha >= 0.0 && if alpha == 0.0 { q > 0.0 } else { q >= 1.0 }
        }
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn hkl_examples() {
        assert_eq!(predict_quasi_carleman(0.5).unwrap().n_minus, NegCount::Finite(0));
        let p = predict_quasi_carleman(-0.5).unwrap();
        assert_eq!((p.n_plus, p.n_minus), (NegCount::Finite(1), NegCount::Infinite));
        let p = predict_quasi_carleman(-1.5).unwrap();
        assert_eq!((p.n_minus, p.n_plus), (NegCount::Finite(1), NegCount::Infinite));
        let p = predict_quasi_carleman(-4.2).unwrap();
        assert_eq!(p.n_plus, NegCount::Finite(3));
        assert!(matches!(predict_quasi_carleman(-2.0), Err(Error::IntegerExponent(_))));
    }

    #[test]
    fn kernel_and_split_dispatch() {
        let p = predict_kernel(&Kernel::quasi_carleman(-1.0, 0.5, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((p.n_minus, p.n_plus), (NegCount::Infinite, NegCount::Finite(0)));
        let v = Kernel::finite_rank(vec![re(-1.0)], re(1.0)).unwrap();
        assert_eq!(predict_kernel(&v).unwrap().n_minus, NegCount::Finite(1));
        let p = predict_split(&Kernel::carleman(), &v).unwrap();
        assert_eq!((p.n_minus, p.n_plus), (NegCount::Finite(1), NegCount::Infinite));
        let v = Kernel::perturbation(1.0, 1.5, 1.0, 0.0).unwrap();
        let p = predict_split(&Kernel::carleman(), &v).unwrap();
        assert_eq!((p.n_minus, p.source), (NegCount::Finite(1), Source::FDH));
        // a delta sigma is not an admissible unperturbed operator
        let h0 = Kernel::finite_rank(vec![re(2.0)], re(1.0)).unwrap();
        assert!(matches!(predict_split(&h0, &v), Err(Error::Assumption(_))));
    }

    #[test]
    fn critical_coupling_examples() {
        let c = sigma_of_kernel(&Kernel::carleman()).unwrap();
        for (beta, rho) in [(1.0, 0.0), (0.3, 2.0), (4.0, 1.0)] {
            assert!((critical_coupling(&c, -1.0, beta, rho).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((critical_coupling(&c, -2.0, 1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-12);
        let v = critical_coupling(&c, -3.0, 1.0, 2.0).unwrap();
        assert!((v - 2.0 * std::f64::consts::E.powi(2)).abs() < 1e-11);
        assert!(matches!(critical_coupling(&c, -2.0, 1.0, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn critical_coupling_grid_matches_closed_form() {
        // a scaled Carleman density written as two parts forces the grid path
        let s = SigmaDistribution {
            parts: vec![
                SigmaPart::RegularDensity { c: 0.5, q: 1.0, alpha: 0.0, r: 0.0 },
                SigmaPart::RegularDensity { c: 0.5, q: 1.0, alpha: 0.0, r: 0.0 },
            ],
        };
        let v = critical_coupling(&s, -2.0, 1.0, 1.0).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-5, "{v}");
    }

    #[test]
    fn fdh_examples() {
        let c = Kernel::carleman();
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(1.0, 1.5, 1.0, 0.0)).unwrap();
        assert_eq!((p.n_minus, p.source), (NegCount::Finite(1), Source::FDH));
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(-1.0, 0.5, 1.0, 0.0)).unwrap();
        assert_eq!(p.n_minus, NegCount::Finite(1));
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(1.0, 0.5, 1.0, 0.0)).unwrap();
        assert_eq!(p.n_minus, NegCount::Infinite);
    }

    #[test]
    fn hkc_branches() {
        let c = Kernel::carleman();
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(-0.9, -1.0, 1.0, 1.0)).unwrap();
        assert_eq!((p.n_minus, p.source, p.critical_coupling), (NegCount::Finite(0), Source::HKC, Some(1.0)));
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(-1.1, -1.0, 1.0, 1.0)).unwrap();
        assert_eq!(p.n_minus, NegCount::Infinite);
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(-0.1, -0.5, 1.0, 0.0)).unwrap();
        assert_eq!(p.n_minus, NegCount::Infinite);
    }

    #[test]
    fn integer_k_routes_to_finite_rank() {
        let c = Kernel::carleman();
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!((p.n_minus, p.source), (NegCount::Finite(1), Source::FDH1));
        let p = predict_perturbed(&c, &QuasiCarlemanTerm::perturbation(-1.0, 0.0, 2.0, 0.0)).unwrap();
        assert_eq!(p.n_minus, NegCount::Finite(1));
    }

    #[test]
    fn assumption_violation() {
        let d = Kernel::finite_rank(vec![re(1.0)], re(1.0)).unwrap();
        let v = QuasiCarlemanTerm::perturbation(1.0, 1.5, 1.0, 0.0);
        assert!(matches!(predict_perturbed(&d, &v), Err(Error::Assumption(_))));
    }

    #[test]
    fn finite_rank_examples() {
        let p = predict_finite_rank(&Kernel::finite_rank(vec![re(-1.0)], re(1.0)).unwrap()).unwrap();
        assert_eq!((p.n_minus, p.rank), (NegCount::Finite(1), Some(1)));
        let p = predict_finite_rank(&Kernel::finite_rank(vec![re(0.0), re(1.0)], re(1.0)).unwrap()).unwrap();
        assert_eq!(p.n_minus, NegCount::Finite(1));
        let p = predict_finite_rank(&Kernel::finite_rank(vec![re(1.0)], C64::new(1.0, 1.0)).unwrap()).unwrap();
        assert_eq!((p.n_minus, p.n_plus, p.rank), (NegCount::Finite(1), NegCount::Finite(1), Some(2)));
        let p = predict_finite_rank(&Kernel::zero()).unwrap();
        assert_eq!((p.n_minus, p.rank), (NegCount::Finite(0), Some(0)));
    }

    #[test]
    fn hfree_examples() {
        assert!(assumption_hfree(&sigma_of_kernel(&Kernel::carleman()).unwrap()));
        assert!(assumption_hfree(&sigma_of_kernel(&Kernel::quasi_carleman(1.0, 0.5, 0.0, 0.0).unwrap()).unwrap()));
        assert!(!assumption_hfree(&sigma_of_kernel(&Kernel::quasi_carleman(1.0, 0.5, 1.0, 0.0).unwrap()).unwrap()));
        let d = Kernel::finite_rank(vec![re(1.0)], re(1.0)).unwrap();
        assert!(!assumption_hfree(&sigma_of_kernel(&d).unwrap()));
    }
}
