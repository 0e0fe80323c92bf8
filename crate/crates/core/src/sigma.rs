//! Sigma distributions of kernels, their pairings with analytic test
//! functions, sign-matrices of finite-rank kernels and matrix inertia.
//!
//! Pairings are bilinear in the distribution and take the product
//! `φ = w1*·w2`, where `w*(λ) = conj(w(conj λ))`, so that
//! `pair(σ, w, w) = h[f, f]` when `w = Lf`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{FiniteRankTerm, Kernel, Term};
use crate::quad::{self, QuadOpts};
use crate::special::{binomial, factorial, gamma_real, FunctionSpec, Jet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaPart {
    /// `c Γ(q)^{-1} (λ−α)_+^{q−1} e^{−r(λ−α)}`, `q > 0`.
    RegularDensity { c: f64, q: f64, alpha: f64, r: f64 },
    /// Same formula for non-integer `q < 0`, paired by Taylor subtraction of
    /// `order = ⌊|q|⌋ + ...` terms at `α`.
    RegularizedPower { c: f64, q: f64, alpha: f64, r: f64, order: usize },
    /// `Σ_j p_j δ^{(j)}(λ−β)`, the sigma of `P(t) e^{−βt}`.
    ///
    /// `weights[j]` multiplies the Taylor coefficient `φ_j` of the test product
    /// at `β`; `diffop[i]` are the coefficients of `∂^i δ(x−κ)` in the
    /// exponential variable, `κ = −ln β`.
    DeltaCombo { kappa: C64, beta: C64, k: usize, weights: Vec<C64>, diffop: Vec<C64> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SigmaDistribution {
    pub parts: Vec<SigmaPart>,
}

/// A narrow structure of the test product, used to place quadrature breaks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feature {
    pub center: f64,
    pub width: f64,
}

impl Feature {
    pub fn new(center: f64, width: f64) -> Self {
        Feature { center, width }
    }

    fn breaks(&self) -> impl Iterator<Item = f64> + '_ {
        [-12.0, -6.0, -3.0, -1.5, 0.0, 1.5, 3.0, 6.0, 12.0]
            .into_iter()
            .map(move |m| self.center + m * self.width)
    }
}

const PAIR_OPTS: QuadOpts = QuadOpts { abs_tol: 1e-15, rel_tol: 1e-12, max_level: 10 };
const SERIES_EXTRA: usize = 24;

/// x-variable coefficients of `Σ_j p_j β^{−1−j}(1−∂)⋯(j−∂)`.
pub fn delta_diffop(poly: &[C64], beta: C64) -> Vec<C64> {
    let k = poly.len().saturating_sub(1);
    let mut out = vec![C64::new(0.0, 0.0); k + 1];
    // prod holds the coefficients of (1−∂)⋯(j−∂)
    let mut prod = vec![C64::new(1.0, 0.0)];
    for (j, &p) in poly.iter().enumerate() {
        if j > 0 {
            let mut next = vec![C64::new(0.0, 0.0); prod.len() + 1];
            for (i, &c) in prod.iter().enumerate() {
                next[i] += c * j as f64;
                next[i + 1] -= c;
            }
            prod = next;
        }
        let s = p * beta.powi(-(j as i32) - 1);
        for (i, &c) in prod.iter().enumerate() {
            out[i] += s * c;
        }
    }
    out
}

pub(crate) fn delta_part(f: &FiniteRankTerm) -> SigmaPart {
    let weights = f
        .poly
        .iter()
        .enumerate()
        .map(|(j, &p)| p * factorial(j) * if j % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    SigmaPart::DeltaCombo {
        kappa: -f.beta.ln(),
        beta: f.beta,
        k: f.degree(),
        weights,
        diffop: delta_diffop(&f.poly, f.beta),
    }
}

/// The sigma distribution of a kernel.
pub fn sigma_of_kernel(k: &Kernel) -> Result<SigmaDistribution> {
    let mut parts = Vec::new();
    for t in k.terms() {
        match t {
            Term::QuasiCarleman(x) => {
                if !x.is_definable() {
                    return Err(Error::Undefinable(format!("alpha = 0 with q = {} <= 0", x.q)));
                }
                if x.q > 0.0 {
                    parts.push(SigmaPart::RegularDensity { c: x.v0, q: x.q, alpha: x.alpha, r: x.r });
                } else if x.q == x.q.round() {
                    return Err(Error::IntegerExponent(x.q));
                } else {
                    let order = (-x.q).floor() as usize;
                    parts.push(SigmaPart::RegularizedPower { c: x.v0, q: x.q, alpha: x.alpha, r: x.r, order });
                }
            }
            Term::FiniteRank(f) => parts.push(delta_part(f)),
        }
    }
    Ok(SigmaDistribution { parts })
}

impl SigmaDistribution {
    /// Pointwise value of the locally integrable parts at `λ` (regularized
    /// parts contribute their classical value away from `α`).
    pub fn density(&self, lambda: f64) -> Result<f64> {
        let mut s = 0.0;
        for p in &self.parts {
            match *p {
                SigmaPart::RegularDensity { c, q, alpha, r } | SigmaPart::RegularizedPower { c, q, alpha, r, .. } => {
                    if lambda > alpha {
                        let x = lambda - alpha;
                        s += c / gamma_real(q)? * x.powf(q - 1.0) * (-r * x).exp();
                    }
                }
                SigmaPart::DeltaCombo { .. } => {}
            }
        }
        Ok(s)
    }

    pub fn has_singular_parts(&self) -> bool {
        self.parts.iter().any(|p| !matches!(p, SigmaPart::RegularDensity { .. }))
    }

    /// `⟨σ, φ⟩` for an already formed test product.
    pub fn pair_product(&self, phi: &FunctionSpec, hints: &[Feature]) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for p in &self.parts {
            s += pair_part(p, phi, hints)?;
        }
        Ok(s)
    }
}

/// `⟨σ, w1*·w2⟩`.
pub fn sigma_pair(sigma: &SigmaDistribution, w1: &FunctionSpec, w2: &FunctionSpec) -> Result<C64> {
    sigma_pair_with(sigma, w1, w2, &[])
}

/// [`sigma_pair`] with hints about narrow features of the test functions.
pub fn sigma_pair_with(
    sigma: &SigmaDistribution,
    w1: &FunctionSpec,
    w2: &FunctionSpec,
    hints: &[Feature],
) -> Result<C64> {
    let phi = w1.conj() * w2.clone();
    sigma.pair_product(&phi, hints)
}

fn eval_phi(phi: &FunctionSpec, lambda: f64) -> C64 {
    phi.eval_re(lambda).unwrap_or(C64::new(f64::NAN, 0.0))
}

fn offset_breaks(alpha: f64, hints: &[Feature], lo: f64, hi: f64) -> Vec<f64> {
    hints
        .iter()
        .flat_map(|h| h.breaks().collect::<Vec<_>>())
        .map(|b| b - alpha)
        .filter(|&b| b > lo && b < hi)
        .collect()
}

fn check_decay(phi: &FunctionSpec, alpha: f64, q: f64) -> Result<()> {
    let l1 = 1e9 * (1.0 + alpha);
    let l2 = 1e12 * (1.0 + alpha);
    let (a, b) = (eval_phi(phi, l1).norm(), eval_phi(phi, l2).norm());
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InsufficientDecay("test product is not finite at large lambda".into()));
    }
    if a == 0.0 || b == 0.0 {
        return Ok(());
    }
    let p = -(b / a).ln() / (l2 / l1).ln();
    if p <= q + 0.02 {
        return Err(Error::InsufficientDecay(format!(
            "test product decays like lambda^-{p:.3}, density grows like lambda^{:.3}",
            q - 1.0
        )));
    }
    Ok(())
}

fn pair_part(part: &SigmaPart, phi: &FunctionSpec, hints: &[Feature]) -> Result<C64> {
    match *part {
        SigmaPart::RegularDensity { c, q, alpha, r } => {
            if r == 0.0 {
                check_decay(phi, alpha, q)?;
            }
            let kq = c / gamma_real(q)?;
            let mut breaks = vec![1.0];
            breaks.extend(offset_breaks(alpha, hints, 0.0, f64::INFINITY));
            let res = quad::semi_infinite(
                |_, da| eval_phi(phi, alpha + da) * (da.powf(q - 1.0) * (-r * da).exp()),
                0.0,
                &breaks,
                PAIR_OPTS,
            );
            Ok(res.value * kq)
        }
        SigmaPart::RegularizedPower { c, q, alpha, r, order } => {
            let kq = c / gamma_real(q)?;
            Ok(regularized_pairing(phi, q, alpha, r, order, hints)? * kq)
        }
        SigmaPart::DeltaCombo { beta, ref weights, .. } => {
            let jet = phi.jet(beta, weights.len() - 1)?;
            Ok(weights.iter().zip(&jet.coeffs).map(|(w, c)| w * c).sum())
        }
    }
}

/// `∫ (λ−α)_+^{q−1} e^{−r(λ−α)} φ(λ) dλ` in the finite-part sense.
pub fn regularized_pairing(
    phi: &FunctionSpec,
    q: f64,
    alpha: f64,
    r: f64,
    order: usize,
    hints: &[Feature],
) -> Result<C64> {
    let a = C64::new(alpha, 0.0);
    let top = order + SERIES_EXTRA;
    let pj = phi.jet(a, top)?;
    let damp = Jet { center: a, coeffs: (0..=top).map(|p| C64::new((-r).powi(p as i32) / factorial(p), 0.0)).collect() };
    let psi = pj.mul(&damp);
    let xs = series_switch(&psi.coeffs);
    let psi_at = |x: f64| eval_phi(phi, alpha + x) * (-r * x).exp();
    let taylor = |x: f64| {
        let mut s = C64::new(0.0, 0.0);
        let mut xp = 1.0;
        for c in &psi.coeffs[..=order] {
            s += c * xp;
            xp *= x;
        }
        s
    };
    // series remainder on [0, xs]
    let mut total: C64 = (order + 1..=top).map(|p| psi.coeffs[p] * (xs.powf(p as f64 + q) / (p as f64 + q))).sum();
    // direct subtraction on [xs, 1]
    if xs < 1.0 {
        let br = offset_breaks(alpha, hints, xs, 1.0);
        let res = quad::finite(|x, _, _| (psi_at(x) - taylor(x)) * x.powf(q - 1.0), xs, 1.0, &br, PAIR_OPTS);
        total += res.value;
    }
    // plain integral beyond the split and the closed-form polynomial tail
    let mut br = vec![2.0];
    br.extend(offset_breaks(alpha, hints, 1.0, f64::INFINITY));
    let res = quad::semi_infinite(|x, _| psi_at(x) * x.powf(q - 1.0), 1.0, &br, PAIR_OPTS);
    total += res.value;
    for p in 0..=order {
        total -= psi.coeffs[p] / (-(p as f64) - q);
    }
    Ok(total)
}

// Largest x ≤ 1 on a dyadic ladder where the truncated series is converged.
pub(crate) fn series_switch(c: &[C64]) -> f64 {
    let n = c.len() - 1;
    let mut x = 1.0f64;
    for _ in 0..60 {
        let total: f64 = c.iter().enumerate().map(|(p, v)| v.norm() * x.powi(p as i32)).sum();
        let tail = c[n].norm() * x.powi(n as i32) + c[n - 1].norm() * x.powi(n as i32 - 1);
        if tail <= 1e-17 * total || total == 0.0 {
            return x;
        }
        x *= 0.5;
    }
    x
}

/// Eigenvalue counts of a hermitian matrix relative to `tol·‖A‖`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl Inertia {
    pub fn from_eigenvalues(eigs: &[f64], tol: f64) -> Inertia {
        let norm = eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let thr = tol * norm;
        let n_plus = eigs.iter().filter(|&&e| e > thr).count();
        let n_minus = eigs.iter().filter(|&&e| e < -thr).count();
        Inertia { n_plus, n_minus, n_zero: eigs.len() - n_plus - n_minus }
    }
}

pub const DEFAULT_INERTIA_TOL: f64 = 1e-10;

/// Sorted eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e
}

/// Sorted eigenvalues of a complex hermitian matrix via the real embedding
/// `[[Re, −Im], [Im, Re]]`, whose spectrum doubles each eigenvalue.
pub fn hermitian_eigenvalues(a: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Precondition("matrix is not square".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    if defect > 1e-12 * scale {
        return Err(Error::NonHermitian(defect));
    }
    if a.iter().all(|z| z.im == 0.0) {
        return Ok(symmetric_eigenvalues(&a.map(|z| z.re)));
    }
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
        }
    }
    let e = symmetric_eigenvalues(&m);
    Ok(e.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

/// Sylvester inertia of a hermitian matrix.
pub fn matrix_inertia(a: &DMatrix<C64>, tol: f64) -> Result<Inertia> {
    Ok(Inertia::from_eigenvalues(&hermitian_eigenvalues(a)?, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignMatrix {
    pub entries: DMatrix<C64>,
    pub inertia: Inertia,
}

/// `S(P, β)` with `s_v[u,u] = (S J_K(κ)u, J_K(κ̄)u)`.
pub fn sign_matrix(poly: &[C64], beta: C64) -> Result<SignMatrix> {
    if beta.re <= 0.0 {
        return Err(Error::Precondition(format!("Re beta must be > 0, got {beta}")));
    }
    if poly.last().is_none_or(|c| c.norm() == 0.0) {
        return Err(Error::Precondition("polynomial must have a nonzero leading coefficient".into()));
    }
    let k = poly.len() - 1;
    let a = delta_diffop(poly, beta);
    let mut s = DMatrix::<C64>::zeros(k + 1, k + 1);
    for l in 0..=k {
        for m in 0..=(k - l) {
            let i = l + m;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            s[(l, m)] = a[i] * sign * binomial(i, l);
        }
    }
    let inertia = if beta.im == 0.0 && poly.iter().all(|c| c.im == 0.0) {
        matrix_inertia(&s, DEFAULT_INERTIA_TOL)?
    } else {
        // S itself is complex symmetric, not hermitian; report the inertia of
        // the hermitian part for information only.
        let h = (&s + s.adjoint()) * C64::new(0.5, 0.0);
        matrix_inertia(&h, DEFAULT_INERTIA_TOL)?
    };
    Ok(SignMatrix { entries: s, inertia })
}

/// The same matrix obtained by pairing `σ_v` against test functions with
/// unit jets: `u_a = (x−κ̄)^a/a!`, `u_b = (x−κ)^b/b!`, mapped to
/// `w(λ) = λ^{−1/2} u(−ln λ)`.
pub fn sign_matrix_by_pairing(poly: &[C64], beta: C64) -> Result<DMatrix<C64>> {
    let k = poly.len() - 1;
    let kappa = -beta.ln();
    let sigma = SigmaDistribution { parts: vec![delta_part(&FiniteRankTerm::new(poly.to_vec(), beta))] };
    let x = -FunctionSpec::var().ln();
    let w = |center: C64, a: usize| -> FunctionSpec {
        let u = (x.clone() - FunctionSpec::Const(center)).powi(a as i32) * FunctionSpec::real(1.0 / factorial(a));
        FunctionSpec::var().powf(-0.5) * u
    };
    let mut s = DMatrix::<C64>::zeros(k + 1, k + 1);
    for a in 0..=k {
        for b in 0..=k {
            s[(a, b)] = sigma_pair(&sigma, &w(kappa.conj(), a), &w(kappa, b))?;
        }
    }
    Ok(s)
}

/// `[[0, S*], [S, 0]]` for a complex exponent.
pub fn sign_matrix_tilde(poly: &[C64], beta: C64) -> Result<SignMatrix> {
    if beta.im == 0.0 {
        return Err(Error::Precondition("sign_matrix_tilde needs Im beta != 0".into()));
    }
    let s = sign_matrix(poly, beta)?.entries;
    let n = s.nrows();
    let mut t = DMatrix::<C64>::zeros(2 * n, 2 * n);
    let sa = s.adjoint();
    t.view_mut((0, n), (n, n)).copy_from(&sa);
    t.view_mut((n, 0), (n, n)).copy_from(&s);
    let inertia = matrix_inertia(&t, DEFAULT_INERTIA_TOL)?;
    Ok(SignMatrix { entries: t, inertia })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn e0_image() -> FunctionSpec {
        FunctionSpec::shifted(0.5).recip()
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_of_kernel(&Kernel::carleman()).unwrap();
        assert_eq!(s.parts, vec![SigmaPart::RegularDensity { c: 1.0, q: 1.0, alpha: 0.0, r: 0.0 }]);
        for l in [1e-3, 1.0, 40.0] {
            assert!((s.density(l).unwrap() - 1.0).abs() < 1e-15);
        }

        let v = sigma_of_kernel(&Kernel::finite_rank(vec![re(1.0)], re(2.0)).unwrap()).unwrap();
        match &v.parts[0] {
            SigmaPart::DeltaCombo { kappa, diffop, .. } => {
                assert!((kappa - re(-(2.0f64).ln())).norm() < 1e-15);
                assert!((diffop[0] - 0.5).norm() < 1e-15);
            }
            p => panic!("{p:?}"),
        }

        let r = sigma_of_kernel(&Kernel::quasi_carleman(1.0, -0.5, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.parts, vec![SigmaPart::RegularizedPower { c: 1.0, q: -0.5, alpha: 1.0, r: 0.0, order: 0 }]);
        assert!(matches!(
            sigma_of_kernel(&Kernel::quasi_carleman(1.0, -0.5, 0.0, 0.0).unwrap()),
            Err(Error::Undefinable(_))
        ));
    }

    #[test]
    fn pairing_examples() {
        let s = sigma_of_kernel(&Kernel::carleman()).unwrap();
        let v = sigma_pair(&s, &e0_image(), &e0_image()).unwrap();
        assert!((v.re - 2.0).abs() < 1e-12);

        let beta = 1.7;
        let d = sigma_of_kernel(&Kernel::finite_rank(vec![re(1.0)], re(beta)).unwrap()).unwrap();
        let w = FunctionSpec::shifted(0.3).powi(-2);
        let v = sigma_pair(&d, &w, &w).unwrap();
        assert!((v.re - (beta + 0.3f64).powi(-4)).abs() < 1e-15);

        // brute-force oracle: ⟨u^{1/2} e^{-u}, e0⋆e0⟩ = Γ(5/2)/1.5^{5/2}
        let rp = sigma_of_kernel(&Kernel::quasi_carleman(1.0, -0.5, 1.0, 0.0).unwrap()).unwrap();
        let v = sigma_pair(&rp, &e0_image(), &e0_image()).unwrap();
        assert!((v.re - 0.482_400_836_372_178_4).abs() < 1e-10, "{v}");

        let rp = sigma_of_kernel(&Kernel::quasi_carleman(1.0, -1.5, 1.0, 0.0).unwrap()).unwrap();
        let v = sigma_pair(&rp, &e0_image(), &e0_image()).unwrap();
        assert!((v.re - 0.804_001_393_953_630_7).abs() < 1e-10, "{v}");
    }

    #[test]
    fn decay_insufficient_is_reported() {
        let s = sigma_of_kernel(&Kernel::quasi_carleman(1.0, 2.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(matches!(sigma_pair(&s, &e0_image(), &e0_image()), Err(Error::InsufficientDecay(_))));
    }

    #[test]
    fn diffop_expansion() {
        // (1−∂)(2−∂) = 2 − 3∂ + ∂² for t² e^{−t}
        let a = delta_diffop(&[re(0.0), re(0.0), re(1.0)], re(1.0));
        assert_eq!(a, vec![re(2.0), re(-3.0), re(1.0)]);
    }

    #[test]
    fn sign_matrix_examples() {
        let s = sign_matrix(&[re(1.0)], re(2.0)).unwrap();
        assert!((s.entries[(0, 0)] - 0.5).norm() < 1e-15);

        let s = sign_matrix(&[re(0.0), re(0.0), re(1.0)], re(1.0)).unwrap();
        let expect = [[2.0, 3.0, 1.0], [3.0, 2.0, 0.0], [1.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.entries[(i, j)] - expect[i][j]).norm() < 1e-14);
            }
        }
        assert_eq!(s.inertia, Inertia { n_plus: 2, n_minus: 1, n_zero: 0 });

        let s = sign_matrix(&[re(0.0), re(-1.0)], re(1.0)).unwrap();
        assert_eq!(s.inertia, Inertia { n_plus: 1, n_minus: 1, n_zero: 0 });
    }

    #[test]
    fn sign_matrix_routes_agree() {
        let p = [re(0.5), re(-1.0), re(2.0)];
        for beta in [re(1.0), re(0.7), C64::new(1.2, 0.8)] {
            let s = sign_matrix(&p, beta).unwrap().entries;
            let t = sign_matrix_by_pairing(&p, beta).unwrap();
            assert!((&s - &t).norm() < 1e-11 * s.norm(), "{beta}: {s} vs {t}");
        }
    }

    #[test]
    fn tilde_examples() {
        let b = C64::new(1.0, 1.0);
        let t = sign_matrix_tilde(&[re(1.0)], b).unwrap();
        assert!((t.entries[(1, 0)] - 1.0 / b).norm() < 1e-15);
        assert!((t.entries[(0, 1)] - (1.0 / b).conj()).norm() < 1e-15);
        assert_eq!(t.inertia, Inertia { n_plus: 1, n_minus: 1, n_zero: 0 });
        assert!(sign_matrix_tilde(&[re(1.0)], re(1.0)).is_err());
    }

    #[test]
    fn inertia_examples() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(1.0), re(-2.0), re(0.0)]));
        assert_eq!(matrix_inertia(&a, 1e-10).unwrap(), Inertia { n_plus: 1, n_minus: 1, n_zero: 1 });
        let mut b = DMatrix::<C64>::zeros(2, 2);
        b[(0, 1)] = re(1.0);
        assert!(matches!(matrix_inertia(&b, 1e-10), Err(Error::NonHermitian(_))));
    }
}
