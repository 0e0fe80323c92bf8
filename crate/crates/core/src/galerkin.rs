//! Laguerre finite sections, inertia with stabilization, and variational
//! trial-span certificates.
//!
//! The Laplace images of the Laguerre functions `e_n(t) = L_n(t) e^{−t/2}`
//! are `μ^n/(λ+½)` with `μ = (λ−½)/(λ+½)`, so the section entries are
//! Hankel: `H_{jk} = m_{j+k}` with `m_n = ⟨σ, μ^n (λ+½)^{−2}⟩ = ∫ σ μ^n dμ`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Classification, FiniteRankTerm, Kernel, QuasiCarlemanTerm};
use crate::predict::{predict_perturbed, NegCount};
use crate::quad::{self, QuadOpts};
use crate::sigma::{
    matrix_inertia, series_switch, sigma_of_kernel, sign_matrix, sign_matrix_tilde, symmetric_eigenvalues,
    Feature, Inertia, SigmaDistribution, SigmaPart, DEFAULT_INERTIA_TOL,
};
use crate::special::{factorial, gamma_real, FunctionSpec, Jet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assembly {
    SigmaPairing,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSection {
    pub size: usize,
    pub matrix: DMatrix<f64>,
    pub kernel: Kernel,
    pub assembly: Assembly,
}

impl FiniteSection {
    /// Exact Carleman section `(1+(−1)^{j+k})/(j+k+1)`.
    pub fn carleman(size: usize) -> FiniteSection {
        let m: Vec<f64> = (0..2 * size).map(carleman_moment).collect();
        FiniteSection { size, matrix: hankel(&m, size), kernel: Kernel::carleman(), assembly: Assembly::ClosedForm }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }
}

fn carleman_moment(n: usize) -> f64 {
    if n % 2 == 0 {
        2.0 / (n as f64 + 1.0)
    } else {
        0.0
    }
}

fn hankel(m: &[f64], size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |j, k| m[j + k])
}

const MOMENT_STEP: f64 = 1.0 / 128.0;
const MOMENT_OPTS: QuadOpts = QuadOpts { abs_tol: 1e-17, rel_tol: 1e-13, max_level: 9 };
const MOMENT_EXTRA: usize = 24;

/// `m_n = ⟨σ, μ^n (λ+½)^{−2}⟩` for `n < count`.
pub fn laguerre_moments(k: &Kernel, count: usize) -> Result<Vec<f64>> {
    let sigma = sigma_of_kernel(k)?;
    sigma_moments(&sigma, count)
}

pub fn sigma_moments(sigma: &SigmaDistribution, count: usize) -> Result<Vec<f64>> {
    let mut total = vec![0.0; count];
    for part in &sigma.parts {
        let m = match *part {
            SigmaPart::RegularDensity { c, q, alpha, r } => density_moments(c, q, alpha, r, count)?,
            SigmaPart::RegularizedPower { c, q, alpha, r, order } => regularized_moments(c, q, alpha, r, order, count)?,
            SigmaPart::DeltaCombo { beta, ref weights, .. } => delta_moments(beta, weights, count)?,
        };
        for (t, v) in total.iter_mut().zip(m) {
            *t += v;
        }
    }
    Ok(total)
}

// Offsets of μ from μ_α and from 1, and λ−α, for α ≥ 0.
fn mu_alpha(alpha: f64) -> (f64, f64) {
    let l = 1.0 / (alpha + 0.5);
    (1.0 - l, l)
}

fn density_moments(c: f64, q: f64, alpha: f64, r: f64, count: usize) -> Result<Vec<f64>> {
    if r == 0.0 && q >= 2.0 {
        return Err(Error::FormDomain(format!(
            "Laguerre entries diverge for q = {q} >= 2 without exponential damping"
        )));
    }
    let kq = c / gamma_real(q)?;
    let (ma, l) = mu_alpha(alpha);
    let rule = quad::tanh_sinh_rule(l, MOMENT_STEP);
    let mut mu = Vec::with_capacity(rule.len());
    let mut wt = Vec::with_capacity(rule.len());
    for &(da, db, w) in &rule {
        let x = da / (l * db);
        let s = kq * x.powf(q - 1.0) * (-r * x).exp();
        if s.is_finite() {
            mu.push(if da <= db { ma + da } else { 1.0 - db });
            wt.push(w * s);
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut pw = wt;
    for _ in 0..count {
        out.push(pw.iter().sum());
        for (p, m) in pw.iter_mut().zip(&mu) {
            *p *= m;
        }
    }
    Ok(out)
}

fn ln_binomial(lnf: &[f64], n: usize, p: usize) -> f64 {
    lnf[n] - lnf[p] - lnf[n - p]
}

fn regularized_moments(c: f64, q: f64, alpha: f64, r: f64, order: usize, count: usize) -> Result<Vec<f64>> {
    if alpha <= 0.0 {
        return Err(Error::Undefinable(format!("alpha = {alpha} with q = {q} < 0")));
    }
    let kq = c / gamma_real(q)?;
    let (ma, l) = mu_alpha(alpha);
    let top = order + MOMENT_EXTRA;
    let zero = C64::new(0.0, 0.0);
    // A(x) = (L(L−x))^{1−q} exp(−r x/(L(L−x))), the density without x^{q−1}
    let x = Jet::variable(zero, top);
    let lx = Jet::constant(zero, C64::new(l, 0.0), top).sub(&x).scale(C64::new(l, 0.0));
    let a_jet = lx.powf(1.0 - q)?.mul(&x.mul(&lx.recip()?).scale(C64::new(-r, 0.0)).exp());
    let a_fn = |x: f64, db: f64| (l * db).powf(1.0 - q) * (-r * x / (l * db)).exp();
    let mut lnf = vec![0.0f64; count.max(top) + 1];
    for i in 1..lnf.len() {
        lnf[i] = lnf[i - 1] + (i as f64).ln();
    }
    let one = (0..count)
        .into_par_iter()
        .map(|n| {
            // jet of (μ_α + x)^n
            let mut bin = vec![zero; top + 1];
            for (p, b) in bin.iter_mut().enumerate().take(n.min(top) + 1) {
                *b = if ma == 0.0 {
                    C64::new(if p == n { 1.0 } else { 0.0 }, 0.0)
                } else {
                    let sign = if ma < 0.0 && (n - p) % 2 == 1 { -1.0 } else { 1.0 };
                    C64::new(sign * (ln_binomial(&lnf, n, p) + (n - p) as f64 * ma.abs().ln()).exp(), 0.0)
                };
            }
            let g = a_jet.mul(&Jet { center: zero, coeffs: bin });
            let gc: Vec<f64> = g.coeffs.iter().map(|z| z.re).collect();
            // switch ladder runs over [0, L] in units of L
            let scaled: Vec<C64> = g.coeffs.iter().enumerate().map(|(p, c)| c * l.powi(p as i32)).collect();
            let xs = l * series_switch(&scaled);
            let mut s: f64 = (order + 1..=top).map(|p| gc[p] * xs.powf(p as f64 + q) / (p as f64 + q)).sum();
            let res = quad::finite(
                |x, _, db| {
                    let mu = if x <= db { ma + x } else { 1.0 - db };
                    let mut t = 0.0;
                    let mut xp = 1.0;
                    for cp in &gc[..=order] {
                        t += cp * xp;
                        xp *= x;
                    }
                    C64::new((a_fn(x, db) * mu.powi(n as i32) - t) * x.powf(q - 1.0), 0.0)
                },
                xs,
                l,
                &[],
                MOMENT_OPTS,
            );
            s += res.value.re;
            s += (0..=order).map(|p| gc[p] * l.powf(p as f64 + q) / (p as f64 + q)).sum::<f64>();
            kq * s
        })
        .collect();
    Ok(one)
}

fn delta_moments(beta: C64, weights: &[C64], count: usize) -> Result<Vec<f64>> {
    let k = weights.len() - 1;
    let lam = Jet::variable(beta, k);
    let half = Jet::constant(beta, C64::new(0.5, 0.0), k);
    let up = lam.add(&half);
    let mu = lam.sub(&half).mul(&up.recip()?);
    let mut cur = up.powi(-2)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v: C64 = weights.iter().zip(&cur.coeffs).map(|(w, c)| w * c).sum();
        out.push(v.re);
        cur = cur.mul(&mu);
    }
    Ok(out)
}

/// The `N×N` section of `k` in the Laguerre basis.
pub fn assemble(k: &Kernel, size: usize) -> Result<FiniteSection> {
    if size == 0 {
        return Err(Error::Precondition("section size must be >= 1".into()));
    }
    if k.classify() != Classification::Bounded {
        log::warn!("assembling a section of a {:?} kernel", k.classify());
    }
    let m = laguerre_moments(k, 2 * size - 1)?;
    Ok(FiniteSection { size, matrix: hankel(&m, size), kernel: k.clone(), assembly: Assembly::SigmaPairing })
}

/// Inertia of a section relative to `tol·‖H‖`.
pub fn section_inertia(s: &FiniteSection, tol: f64) -> Inertia {
    Inertia::from_eigenvalues(&s.eigenvalues(), tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "count", rename_all = "snake_case")]
pub enum Stabilized {
    Finite(usize),
    InfiniteSuspected,
    Undecided,
}

impl Stabilized {
    /// Whether this estimate is consistent with a predicted count.
    pub fn agrees_with(&self, n: NegCount) -> bool {
        matches!((self, n), (Stabilized::Finite(a), NegCount::Finite(b)) if *a == b)
            || matches!((self, n), (Stabilized::InfiniteSuspected, NegCount::Infinite))
    }
}

impl std::fmt::Display for Stabilized {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stabilized::Finite(n) => write!(f, "finite({n})"),
            Stabilized::InfiniteSuspected => write!(f, "infinite-suspected"),
            Stabilized::Undecided => write!(f, "undecided"),
        }
    }
}

/// Per-size section data behind a stabilization verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionStudy {
    pub sizes: Vec<usize>,
    pub n_plus: Vec<usize>,
    pub n_minus: Vec<usize>,
    pub min_eig: Vec<f64>,
    pub max_eig: Vec<f64>,
    pub verdict: Stabilized,
}

pub fn stabilize(counts: &[usize]) -> Stabilized {
    let n = counts.len();
    if n >= 3 && counts[n - 3..].iter().all(|&c| c == counts[n - 1]) {
        Stabilized::Finite(counts[n - 1])
    } else if counts.windows(2).all(|w| w[1] > w[0]) {
        Stabilized::InfiniteSuspected
    } else {
        Stabilized::Undecided
    }
}

pub fn section_study(k: &Kernel, sizes: &[usize], tol: f64) -> Result<SectionStudy> {
    if sizes.len() < 3 {
        return Err(Error::Precondition("stabilization needs at least 3 sizes".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return Err(Error::Precondition("sizes must be positive and increasing".into()));
    }
    let top = *sizes.last().unwrap();
    let m = laguerre_moments(k, 2 * top - 1)?;
    let mut st = SectionStudy {
        sizes: sizes.to_vec(),
        n_plus: vec![],
        n_minus: vec![],
        min_eig: vec![],
        max_eig: vec![],
        verdict: Stabilized::Undecided,
    };
    for &n in sizes {
        let e = symmetric_eigenvalues(&hankel(&m, n));
        let i = Inertia::from_eigenvalues(&e, tol);
        st.n_plus.push(i.n_plus);
        st.n_minus.push(i.n_minus);
        st.min_eig.push(e[0]);
        st.max_eig.push(e[n - 1]);
    }
    st.verdict = stabilize(&st.n_minus);
    Ok(st)
}

/// `N₋` estimate from nested sections; failures of the stabilization rule
/// come back as [`Stabilized::Undecided`], not as errors.
pub fn stabilized_negcount(k: &Kernel, sizes: &[usize]) -> Result<Stabilized> {
    Ok(section_study(k, sizes, DEFAULT_INERTIA_TOL)?.verdict)
}

/// Extreme eigenvalues of the assembled Carleman section.
pub fn carleman_spectrum_study(size: usize) -> Result<(f64, f64)> {
    spectrum_study(&Kernel::carleman(), size)
}

pub fn spectrum_study(k: &Kernel, size: usize) -> Result<(f64, f64)> {
    let e = assemble(k, size)?.eigenvalues();
    Ok((e[0], e[size - 1]))
}

// ---------------------------------------------------------------------------
// certificates

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    GaussianFamily,
    PolynomialWindow,
    Interpolation,
}

/// Parameters of the trial span: `centers` are `A_j` for gaussians, `β` for
/// the window and the interpolation nodes `β_m`; `coefficients` hold `R` for
/// the window and the sign-matrix eigenvectors for interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub eps: f64,
    pub delta: Option<f64>,
    pub centers: Vec<C64>,
    pub coefficients: Vec<Vec<C64>>,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: TrialKind,
    pub params: TrialParams,
    pub gram: DMatrix<C64>,
    pub achieved: usize,
    pub target: usize,
}

impl Certificate {
    pub fn dimension(&self) -> usize {
        self.gram.nrows()
    }

    pub fn succeeded(&self) -> bool {
        self.achieved >= self.target
    }
}

pub const DEFAULT_EPS: f64 = 0.1;
pub const MAX_ROUNDS: usize = 12;

/// Picks the trial construction suited to `v`.
pub fn select_kind(h0: &Kernel, v: &Kernel) -> TrialKind {
    if v.is_finite_rank() {
        return TrialKind::Interpolation;
    }
    let terms: Vec<&QuasiCarlemanTerm> = v.quasi_terms().collect();
    if terms.len() == 1 && v.finite_terms().next().is_none() && terms[0].q < 0.0 {
        if let Ok(p) = predict_perturbed(h0, terms[0]) {
            if matches!(p.n_minus, NegCount::Finite(_)) {
                return TrialKind::PolynomialWindow;
            }
        }
    }
    TrialKind::GaussianFamily
}

/// Certifies `N₋(H₀+V) ≥ target`, shrinking `ε` (and the gaussian spacing)
/// for up to [`MAX_ROUNDS`] rounds.
pub fn certificate(h0: &Kernel, v: &Kernel, target: usize, eps: f64) -> Result<Certificate> {
    certificate_with(h0, v, target, eps, select_kind(h0, v), MAX_ROUNDS)
}

pub fn certificate_with(
    h0: &Kernel,
    v: &Kernel,
    target: usize,
    eps: f64,
    kind: TrialKind,
    rounds: usize,
) -> Result<Certificate> {
    if target == 0 {
        return Err(Error::Precondition("target must be >= 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    let sigma = sigma_of_kernel(&h0.plus(v)?)?;
    let mut best: Option<Certificate> = None;
    let mut eps_r = eps;
    let mut delta = 0.25;
    for round in 0..rounds.max(1) {
        if round > 0 {
            // gaussians alternate δ and ε; the other spans only have ε
            if kind == TrialKind::GaussianFamily && round % 2 == 1 {
                delta *= 0.5;
            } else {
                eps_r *= 0.5;
            }
        }
        let attempt = match kind {
            TrialKind::GaussianFamily => gaussian_family(&sigma, v, target, eps_r, delta),
            TrialKind::PolynomialWindow => polynomial_window(&sigma, v, target, eps_r),
            TrialKind::Interpolation => interpolation(&sigma, v, target, eps_r),
        };
        let mut c = match attempt {
            Ok(c) => c,
            Err(e) if e.is_numerical() => {
                log::debug!("certificate round {round}: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        c.params.rounds = round + 1;
        log::debug!("certificate round {round}: eps {eps_r:.3e}, achieved {}/{}", c.achieved, target);
        if c.succeeded() {
            return Ok(c);
        }
        if best.as_ref().is_none_or(|b| c.achieved > b.achieved) {
            best = Some(c);
        }
    }
    Err(Error::EpsTooLarge { achieved: best.map_or(0, |b| b.achieved), target })
}

fn gram(sigma: &SigmaDistribution, w: &[FunctionSpec], hints: &[Feature]) -> Result<DMatrix<C64>> {
    let n = w.len();
    let conj: Vec<FunctionSpec> = w.iter().map(|f| f.conj()).collect();
    let entries: Vec<Result<C64>> = (0..n * (n + 1) / 2)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = tri_index(idx);
            sigma.pair_product(&(conj[a].clone() * w[b].clone()), hints)
        })
        .collect();
    let mut g = DMatrix::<C64>::zeros(n, n);
    for (idx, e) in entries.into_iter().enumerate() {
        let (a, b) = tri_index(idx);
        let e = e?;
        g[(a, b)] = e;
        g[(b, a)] = e.conj();
    }
    for a in 0..n {
        g[(a, a)].im = 0.0;
    }
    Ok(g)
}

// Row-major enumeration of the upper triangle: (0,0), (0,1), (1,1), (0,2), ...
fn tri_index(idx: usize) -> (usize, usize) {
    let mut b = 0;
    while (b + 1) * (b + 2) / 2 <= idx {
        b += 1;
    }
    (idx - b * (b + 1) / 2, b)
}

fn finish(kind: TrialKind, params: TrialParams, g: DMatrix<C64>, target: usize) -> Result<Certificate> {
    let achieved = matrix_inertia(&g, DEFAULT_INERTIA_TOL)?.n_minus;
    Ok(Certificate { kind, params, gram: g, achieved, target })
}

fn lone_quasi_term(v: &Kernel) -> Result<&QuasiCarlemanTerm> {
    let mut it = v.quasi_terms();
    match (it.next(), it.next(), v.finite_terms().next()) {
        (Some(t), None, None) => Ok(t),
        _ => Err(Error::Precondition("trial construction needs a single quasi-Carleman term in v".into())),
    }
}

/// `w_j = (ελ)^{−1/2} exp(−ln²(λ/A_j)/ε²)`, `A_j = β(1+jδ)`.
pub fn gaussian_trial(a: f64, eps: f64) -> FunctionSpec {
    let l = FunctionSpec::var().ln() - FunctionSpec::real(a.ln());
    FunctionSpec::real(eps.powf(-0.5))
        * FunctionSpec::var().powf(-0.5)
        * (FunctionSpec::real(-1.0 / (eps * eps)) * l.powi(2)).exp()
}

fn gaussian_family(sigma: &SigmaDistribution, v: &Kernel, target: usize, eps: f64, delta: f64) -> Result<Certificate> {
    let beta = lone_quasi_term(v)?.alpha;
    let centers: Vec<f64> = (1..=target).map(|j| beta * (1.0 + j as f64 * delta)).collect();
    let w: Vec<FunctionSpec> = centers.iter().map(|&a| gaussian_trial(a, eps)).collect();
    let hints: Vec<Feature> = centers.iter().map(|&a| Feature::new(a, eps * a)).collect();
    let g = gram(sigma, &w, &hints)?;
    let params = TrialParams {
        eps,
        delta: Some(delta),
        centers: centers.iter().map(|&a| C64::new(a, 0.0)).collect(),
        coefficients: vec![],
        rounds: 0,
    };
    finish(TrialKind::GaussianFamily, params, g, target)
}

/// Basis `(λ−β)^j R(λ−β) exp(−ε^{−2m} ln^{2m}(λ/β))`, `j < [n/2]+1`, where
/// `R` is the degree-`n` truncation of `e^{ρμ/2}` and `2m > n`.
fn polynomial_window(sigma: &SigmaDistribution, v: &Kernel, target: usize, eps: f64) -> Result<Certificate> {
    let t = lone_quasi_term(v)?;
    let (k, beta, rho) = (-t.q, t.alpha, t.r);
    if !(k > 0.0) || k == k.round() {
        return Err(Error::Precondition(format!("polynomial window needs non-integer k > 0, got {k}")));
    }
    let n = k.floor() as usize;
    let m = n / 2 + 1;
    let ell = n / 2 + 1;
    let r: Vec<C64> = (0..=n).map(|i| C64::new((0.5 * rho).powi(i as i32) / factorial(i), 0.0)).collect();
    let window = (FunctionSpec::real(-eps.powi(-2 * m as i32))
        * (FunctionSpec::var().ln() - FunctionSpec::real(beta.ln())).powi(2 * m as i32))
    .exp();
    let w: Vec<FunctionSpec> = (0..ell)
        .map(|j| {
            let mut c = vec![C64::new(0.0, 0.0); j];
            c.extend(&r);
            FunctionSpec::poly(beta, c) * window.clone()
        })
        .collect();
    let hints = [Feature::new(beta, eps * beta)];
    let g = gram(sigma, &w, &hints)?;
    let params = TrialParams {
        eps,
        delta: None,
        centers: vec![C64::new(beta, 0.0)],
        coefficients: vec![r],
        rounds: 0,
    };
    finish(TrialKind::PolynomialWindow, params, g, target)
}

// One interpolation node in the exponential variable.
struct Node {
    kappa: C64,
    order: usize,
    term: FiniteRankTerm,
}

/// `ψ_{k,m} = Q·φ` in `z = −ln λ` with `ψ^{(l)}(κ_m) = δ_{kl}` and vanishing
/// jets of order `K_n` at every other node.
fn interpolant(nodes: &[Node], m: usize, k: usize, eps: f64) -> Result<FunctionSpec> {
    let z = FunctionSpec::var();
    let node = &nodes[m];
    let kappa = node.kappa;
    let mut factors = Vec::new();
    for (i, other) in nodes.iter().enumerate() {
        if i != m {
            factors.push((z.clone() - FunctionSpec::Const(other.kappa)).powi(other.order as i32 + 1));
        }
    }
    let local = if kappa.im == 0.0 {
        (FunctionSpec::real(-1.0 / (eps * eps)) * (z.clone() - FunctionSpec::Const(kappa)).powi(2)).exp()
    } else {
        let s = kappa.im.signum();
        (FunctionSpec::Const(C64::new(0.0, -s / eps)) * (z.clone() - FunctionSpec::Const(kappa))
            - (z.clone() - FunctionSpec::real(kappa.re)).powi(2))
        .exp()
    };
    factors.push(local);
    let phi = FunctionSpec::Product(factors);
    let kk = node.order;
    let pj = phi.jet(kappa, kk)?;
    let mut target = Jet::constant(kappa, C64::new(0.0, 0.0), kk);
    target.coeffs[k] = C64::new(1.0 / factorial(k), 0.0);
    let qj = target.mul(&pj.recip()?);
    Ok(FunctionSpec::poly(kappa, qj.coeffs) * phi)
}

/// `w(λ) = λ^{−1/2} u(−ln λ)`.
fn to_lambda(u: &FunctionSpec) -> FunctionSpec {
    FunctionSpec::var().powf(-0.5) * u.substitute(&-FunctionSpec::var().ln())
}

fn negative_vectors(s: &DMatrix<C64>) -> Vec<Vec<C64>> {
    let e = SymmetricEigen::new(s.clone());
    let scale = e.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..s.nrows())
        .filter(|&i| e.eigenvalues[i] < -DEFAULT_INERTIA_TOL * scale)
        .map(|i| e.eigenvectors.column(i).iter().copied().collect())
        .collect()
}

fn interpolation(sigma: &SigmaDistribution, v: &Kernel, target: usize, eps: f64) -> Result<Certificate> {
    if !v.is_finite_rank() || v.is_zero() {
        return Err(Error::Precondition("interpolation needs a nonzero finite-rank v".into()));
    }
    let mut nodes = Vec::new();
    for t in v.finite_terms() {
        nodes.push(Node { kappa: -t.beta.ln(), order: t.degree(), term: t.clone() });
    }
    let mut trial = Vec::new();
    let mut coefficients = Vec::new();
    let mut hints = Vec::new();
    for m in 0..nodes.len() {
        let node = &nodes[m];
        let beta = node.term.beta;
        let kk = node.order;
        if beta.im < 0.0 {
            continue;
        }
        let psi: Vec<FunctionSpec> = (0..=kk).map(|k| interpolant(&nodes, m, k, eps)).collect::<Result<_>>()?;
        let (s, span) = if beta.im == 0.0 {
            hints.push(Feature::new(beta.re, eps * beta.re));
            (sign_matrix(&node.term.poly, beta)?.entries, psi)
        } else {
            let partner = nodes
                .iter()
                .position(|o| (o.term.beta - beta.conj()).norm() <= 1e-12 * beta.norm())
                .ok_or_else(|| Error::NotSelfAdjoint(format!("no conjugate term for beta = {beta}")))?;
            let mut span = psi;
            for k in 0..=kk {
                span.push(interpolant(&nodes, partner, k, eps)?);
            }
            let c = (-node.kappa.re).exp();
            hints.push(Feature::new(c, 0.5 * c));
            (sign_matrix_tilde(&node.term.poly, beta)?.entries, span)
        };
        for a in negative_vectors(&s) {
            let u = FunctionSpec::Sum(span.iter().zip(&a).map(|(f, &c)| FunctionSpec::Const(c) * f.clone()).collect());
            trial.push(to_lambda(&u));
            coefficients.push(a);
        }
    }
    if trial.is_empty() {
        return Ok(Certificate {
            kind: TrialKind::Interpolation,
            params: TrialParams { eps, delta: None, centers: vec![], coefficients, rounds: 0 },
            gram: DMatrix::zeros(0, 0),
            achieved: 0,
            target,
        });
    }
    let g = gram(sigma, &trial, &hints)?;
    let params = TrialParams {
        eps,
        delta: None,
        centers: nodes.iter().map(|n| n.term.beta).collect(),
        coefficients,
        rounds: 0,
    };
    finish(TrialKind::Interpolation, params, g, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn carleman_two_by_two() {
        let s = assemble(&Kernel::carleman(), 2).unwrap();
        let want = [[2.0, 0.0], [0.0, 2.0 / 3.0]];
        for j in 0..2 {
            for k in 0..2 {
                assert!(close(s.matrix[(j, k)], want[j][k], 1e-12), "{j}{k}: {}", s.matrix[(j, k)]);
            }
        }
    }

    #[test]
    fn carleman_entries_match_closed_form() {
        let s = assemble(&Kernel::carleman(), 32).unwrap();
        let c = FiniteSection::carleman(32);
        assert!((s.matrix - c.matrix).abs().max() < 1e-10);
    }

    #[test]
    fn carleman_deep_moments() {
        let m = laguerre_moments(&Kernel::carleman(), 1023).unwrap();
        for (n, v) in m.iter().enumerate() {
            assert!((v - carleman_moment(n)).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn one_by_one_is_two() {
        let (lo, hi) = carleman_spectrum_study(1).unwrap();
        assert!(close(lo, 2.0, 1e-12) && close(hi, 2.0, 1e-12));
    }

    #[test]
    fn rank_one_exponential() {
        let beta = 1.7;
        let k = Kernel::finite_rank(vec![C64::new(1.0, 0.0)], C64::new(beta, 0.0)).unwrap();
        let s = assemble(&k, 5).unwrap();
        let w = |j: usize| (beta - 0.5f64).powi(j as i32) / (beta + 0.5).powi(j as i32 + 1);
        for j in 0..5 {
            for l in 0..5 {
                assert!(close(s.matrix[(j, l)], w(j) * w(l), 1e-12));
            }
        }
        let i = section_inertia(&s, DEFAULT_INERTIA_TOL);
        assert_eq!((i.n_plus, i.n_minus), (1, 0));
    }

    #[test]
    fn negative_carleman_is_negative() {
        let s = assemble(&Kernel::carleman().scaled(-1.0).unwrap(), 8).unwrap();
        let i = section_inertia(&s, DEFAULT_INERTIA_TOL);
        assert_eq!((i.n_plus, i.n_minus), (0, 8));
    }

    #[test]
    fn half_power_section_inertia() {
        let k = Kernel::quasi_carleman(1.0, -0.5, 1.0, 0.0).unwrap();
        let s = assemble(&k, 4).unwrap();
        assert!((s.matrix.clone() - s.matrix.transpose()).abs().max() < 1e-12);
        let i = section_inertia(&s, DEFAULT_INERTIA_TOL);
        assert_eq!((i.n_plus, i.n_minus, i.n_zero), (1, 3, 0));
    }

    #[test]
    fn exponent_two_without_damping_is_outside_form_domain() {
        let k = Kernel::quasi_carleman(1.0, 2.5, 0.0, 0.0).unwrap();
        assert!(matches!(assemble(&k, 4), Err(Error::FormDomain(_))));
    }

    #[test]
    fn stabilization_rule() {
        assert_eq!(stabilize(&[1, 2, 2, 2]), Stabilized::Finite(2));
        assert_eq!(stabilize(&[1, 2, 3, 4]), Stabilized::InfiniteSuspected);
        assert_eq!(stabilize(&[1, 2, 2, 3]), Stabilized::Undecided);
        assert_eq!(stabilize(&[0, 0, 0]), Stabilized::Finite(0));
    }

    #[test]
    fn zero_kernel_is_finite_zero() {
        assert_eq!(stabilized_negcount(&Kernel::zero(), &[4, 8, 16]).unwrap(), Stabilized::Finite(0));
    }

    #[test]
    fn tri_index_covers_upper_triangle() {
        let got: Vec<_> = (0..6).map(tri_index).collect();
        assert_eq!(got, vec![(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)]);
    }

    #[test]
    fn interpolants_have_unit_jets() {
        let t = |b: f64, k: usize| FiniteRankTerm::real(&vec![1.0; k + 1], b);
        let nodes = vec![
            Node { kappa: C64::new(-(1.0f64.ln()), 0.0), order: 2, term: t(1.0, 2) },
            Node { kappa: C64::new(-(2.0f64.ln()), 0.0), order: 1, term: t(2.0, 1) },
        ];
        for m in 0..2 {
            for k in 0..=nodes[m].order {
                let psi = interpolant(&nodes, m, k, 0.2).unwrap();
                for (i, node) in nodes.iter().enumerate() {
                    let j = psi.jet(node.kappa, node.order).unwrap();
                    for l in 0..=node.order {
                        let want = if i == m && l == k { 1.0 } else { 0.0 };
                        assert!((j.derivative(l) - want).norm() < 1e-10, "m{m} k{k} node{i} l{l}");
                    }
                }
            }
        }
    }

    #[test]
    fn interpolation_certificate_for_t_squared() {
        let v = Kernel::finite_rank(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)], C64::new(1.0, 0.0))
            .unwrap();
        let c = certificate(&Kernel::zero(), &v, 1, DEFAULT_EPS).unwrap();
        assert_eq!(c.kind, TrialKind::Interpolation);
        assert_eq!(c.achieved, 1);
    }
}
