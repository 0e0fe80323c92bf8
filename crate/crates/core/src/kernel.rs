//! Kernel descriptions `h(t)` and the boundedness/definability table.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOpts};
use crate::special::{binomial, gamma_real};

/// `v0 · (t + r)^{−q} e^{−αt}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiCarlemanTerm {
    pub v0: f64,
    pub q: f64,
    pub alpha: f64,
    pub r: f64,
}

impl QuasiCarlemanTerm {
    pub fn new(v0: f64, q: f64, alpha: f64, r: f64) -> Self {
        QuasiCarlemanTerm { v0, q, alpha, r }
    }

    /// The perturbation `v0 (t + ρ)^k e^{−βt}`, i.e. `q = −k`.
    pub fn perturbation(v0: f64, k: f64, beta: f64, rho: f64) -> Self {
        QuasiCarlemanTerm { v0, q: -k, alpha: beta, r: rho }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let s = t + self.r;
        if s <= 0.0 && self.q > 0.0 {
            return Err(Error::Domain(format!("(t+r)^(-q) singular at t = {t}")));
        }
        Ok(self.v0 * s.powf(-self.q) * (-self.alpha * t).exp())
    }

    pub fn is_definable(&self) -> bool {
        self.alpha > 0.0 || self.q > 0.0
    }

    /// Shape (coupling ignored) is bounded per the two-case table.
    pub fn is_bounded(&self) -> bool {
        let QuasiCarlemanTerm { q, alpha, r, .. } = *self;
        if alpha > 0.0 {
            r > 0.0 || q <= 1.0
        } else {
            (r > 0.0 && q >= 1.0) || (r == 0.0 && q == 1.0)
        }
    }

    fn integer_nonpositive(&self) -> bool {
        self.q <= 0.0 && self.q == self.q.round()
    }
}

/// `P(t) e^{−βt}` with `poly[j]` the coefficient of `t^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankTerm {
    pub poly: Vec<C64>,
    pub beta: C64,
}

impl FiniteRankTerm {
    pub fn new(poly: Vec<C64>, beta: C64) -> Self {
        FiniteRankTerm { poly, beta }
    }

    pub fn real(poly: &[f64], beta: f64) -> Self {
        FiniteRankTerm { poly: poly.iter().map(|&p| C64::new(p, 0.0)).collect(), beta: C64::new(beta, 0.0) }
    }

    pub fn degree(&self) -> usize {
        self.poly.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        *self.poly.last().unwrap_or(&C64::new(0.0, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.beta.im == 0.0
    }

    pub fn conj(&self) -> Self {
        FiniteRankTerm { poly: self.poly.iter().map(|c| c.conj()).collect(), beta: self.beta.conj() }
    }

    pub fn eval(&self, t: f64) -> C64 {
        let p = self.poly.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c);
        p * (-self.beta * t).exp()
    }

    fn trim(mut self) -> Self {
        while self.poly.len() > 1 && self.leading().norm() == 0.0 {
            self.poly.pop();
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    QuasiCarleman(QuasiCarlemanTerm),
    FiniteRank(FiniteRankTerm),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    Bounded,
    UnboundedPositiveForm,
    IndefiniteForm,
    Undefinable,
}

/// A validated, self-adjoint sum of kernel terms.
///
/// Construction folds integer `q ≤ 0` quasi-Carleman terms with `α > 0` into
/// finite-rank form and merges finite-rank terms sharing an exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    terms: Vec<Term>,
}

const CONJ_TOL: f64 = 1e-12;

impl Kernel {
    pub fn new(terms: Vec<Term>) -> Result<Kernel> {
        let mut qc = Vec::new();
        let mut fr: Vec<FiniteRankTerm> = Vec::new();
        for t in terms {
            match t {
                Term::QuasiCarleman(x) => {
                    if x.r < 0.0 || x.alpha < 0.0 || !(x.q.is_finite() && x.v0.is_finite()) {
                        return Err(Error::Precondition(format!("invalid quasi-Carleman term {x:?}")));
                    }
                    if x.v0 == 0.0 {
                        continue;
                    }
                    if x.alpha > 0.0 && x.integer_nonpositive() {
                        fr.push(expand_integer_power(&x));
                    } else {
                        qc.push(x);
                    }
                }
                Term::FiniteRank(f) => {
                    if f.poly.is_empty() {
                        continue;
                    }
                    if f.beta.re <= 0.0 {
                        return Err(Error::Precondition(format!("Re beta must be > 0, got {}", f.beta)));
                    }
                    fr.push(f);
                }
            }
        }
        let mut merged: Vec<FiniteRankTerm> = Vec::new();
        for f in fr {
            if let Some(m) = merged.iter_mut().find(|m| (m.beta - f.beta).norm() <= CONJ_TOL * f.beta.norm()) {
                if m.poly.len() < f.poly.len() {
                    m.poly.resize(f.poly.len(), C64::new(0.0, 0.0));
                }
                for (a, b) in m.poly.iter_mut().zip(&f.poly) {
                    *a += b;
                }
            } else {
                merged.push(f);
            }
        }
        let mut kept = Vec::new();
        for m in merged {
            let m = m.trim();
            if m.leading().norm() == 0.0 {
                continue;
            }
            kept.push(m);
        }
        for m in &kept {
            let scale = m.poly.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if m.beta.im == 0.0 {
                if m.poly.iter().any(|c| c.im.abs() > CONJ_TOL * scale) {
                    return Err(Error::NotSelfAdjoint(format!("complex polynomial at real beta {}", m.beta.re)));
                }
            } else {
                let c = m.conj();
                let ok = kept.iter().any(|o| {
                    (o.beta - c.beta).norm() <= CONJ_TOL * c.beta.norm()
                        && o.poly.len() == c.poly.len()
                        && o.poly.iter().zip(&c.poly).all(|(a, b)| (a - b).norm() <= CONJ_TOL * scale.max(1e-300))
                });
                if !ok {
                    return Err(Error::NotSelfAdjoint(format!("missing conjugate partner of beta = {}", m.beta)));
                }
            }
        }
        let mut terms: Vec<Term> = qc.into_iter().map(Term::QuasiCarleman).collect();
        terms.extend(kept.into_iter().map(|mut m| {
            if m.beta.im == 0.0 {
                for c in &mut m.poly {
                    c.im = 0.0;
                }
            }
            Term::FiniteRank(m)
        }));
        Ok(Kernel { terms })
    }

    pub fn zero() -> Kernel {
        Kernel { terms: Vec::new() }
    }

    /// `h(t) = 1/t`.
    pub fn carleman() -> Kernel {
        Kernel::quasi_carleman(1.0, 1.0, 0.0, 0.0).expect("valid")
    }

    pub fn quasi_carleman(v0: f64, q: f64, alpha: f64, r: f64) -> Result<Kernel> {
        Kernel::new(vec![Term::QuasiCarleman(QuasiCarlemanTerm::new(v0, q, alpha, r))])
    }

    /// `v0 (t + ρ)^k e^{−βt}`.
    pub fn perturbation(v0: f64, k: f64, beta: f64, rho: f64) -> Result<Kernel> {
        Kernel::new(vec![Term::QuasiCarleman(QuasiCarlemanTerm::perturbation(v0, k, beta, rho))])
    }

    /// `P e^{−βt}`, adding the conjugate partner when `β` is complex.
    pub fn finite_rank(poly: Vec<C64>, beta: C64) -> Result<Kernel> {
        let t = FiniteRankTerm::new(poly, beta);
        let mut terms = vec![Term::FiniteRank(t.clone())];
        if beta.im != 0.0 {
            terms.push(Term::FiniteRank(t.conj()));
        }
        Kernel::new(terms)
    }

    pub fn plus(&self, other: &Kernel) -> Result<Kernel> {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        Kernel::new(t)
    }

    pub fn scaled(&self, s: f64) -> Result<Kernel> {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::QuasiCarleman(q) => Term::QuasiCarleman(QuasiCarlemanTerm { v0: q.v0 * s, ..*q }),
                Term::FiniteRank(f) => {
                    Term::FiniteRank(FiniteRankTerm { poly: f.poly.iter().map(|c| c * s).collect(), beta: f.beta })
                }
            })
            .collect();
        Kernel::new(terms)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn quasi_terms(&self) -> impl Iterator<Item = &QuasiCarlemanTerm> {
        self.terms.iter().filter_map(|t| match t {
            Term::QuasiCarleman(q) => Some(q),
            _ => None,
        })
    }

    pub fn finite_terms(&self) -> impl Iterator<Item = &FiniteRankTerm> {
        self.terms.iter().filter_map(|t| match t {
            Term::FiniteRank(f) => Some(f),
            _ => None,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite_rank(&self) -> bool {
        self.quasi_terms().next().is_none()
    }

    /// Pointwise value; the imaginary residue of conjugate pairs is dropped.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::Domain(format!("kernels are evaluated on t > 0, got {t}")));
        }
        let mut s = C64::new(0.0, 0.0);
        for term in &self.terms {
            match term {
                Term::QuasiCarleman(q) => s += q.eval(t)?,
                Term::FiniteRank(f) => s += f.eval(t),
            }
        }
        debug_assert!(s.im.abs() <= 1e-12 * s.norm().max(1e-300) || s.norm() < 1e-300);
        Ok(s.re)
    }

    pub fn rank(&self) -> Option<usize> {
        if !self.is_finite_rank() {
            return None;
        }
        Some(self.finite_terms().map(|f| f.degree() + 1).sum())
    }

    /// Joins the per-term classes; finite-rank terms never change boundedness.
    pub fn classify(&self) -> Classification {
        self.quasi_terms().map(classify_term).max().unwrap_or(Classification::Bounded)
    }

    /// `∫_t^∞ |h|² < ∞` for every `t > 0`; single quasi-Carleman term only.
    pub fn carleman_condition(&self) -> Result<bool> {
        let qs: Vec<_> = self.quasi_terms().collect();
        if qs.len() != 1 {
            return Err(Error::Precondition("carleman_condition needs exactly one quasi-Carleman term".into()));
        }
        let q = qs[0];
        Ok(q.alpha > 0.0 || q.q > 0.5)
    }
}

fn classify_term(t: &QuasiCarlemanTerm) -> Classification {
    if !t.is_definable() {
        return Classification::Undefinable;
    }
    if t.q < 0.0 {
        return Classification::IndefiniteForm;
    }
    if t.is_bounded() {
        Classification::Bounded
    } else if t.v0 > 0.0 {
        Classification::UnboundedPositiveForm
    } else {
        Classification::IndefiniteForm
    }
}

fn expand_integer_power(x: &QuasiCarlemanTerm) -> FiniteRankTerm {
    let n = (-x.q).round() as usize;
    let poly = (0..=n).map(|j| C64::new(x.v0 * binomial(n, j) * x.r.powi((n - j) as i32), 0.0)).collect();
    FiniteRankTerm { poly, beta: C64::new(x.alpha, 0.0) }
}

/// Numerical Widom test on the sigma density of a `q > 0` term: the measure
/// `M([0,λ))` must be `O(λ)` at both ends, judged by log-log slopes.
pub fn widom_bounded(t: &QuasiCarlemanTerm) -> Result<bool> {
    if t.q <= 0.0 {
        return Err(Error::Precondition("Widom test needs a measure, i.e. q > 0".into()));
    }
    let g = gamma_real(t.q)?;
    // M(λ) = Γ(q)^{-1} ∫_0^{λ−α} x^{q−1} e^{−rx} dx, integrated in y = ln x
    let mass = |lam: f64| -> f64 {
        let top = lam - t.alpha;
        if top <= 0.0 {
            return 0.0;
        }
        let lo = (top * 1e-30).min(1e-30);
        let head = lo.powf(t.q) / t.q;
        let (ya, yb) = (lo.ln(), top.ln());
        let panels = ((yb - ya) / 4.0).ceil().max(1.0) as usize;
        let step = (yb - ya) / panels as f64;
        let mut s = head;
        for p in 0..panels {
            let a = ya + p as f64 * step;
            let r = quad::tanh_sinh(
                |da, _| {
                    let y = a + da;
                    let x = y.exp();
                    C64::new((t.q * y - t.r * x).exp(), 0.0)
                },
                a,
                a + step,
                QuadOpts::default(),
            );
            s += r.value.re;
        }
        s / g
    };
    let slope = |l1: f64, l2: f64| -> Option<f64> {
        let (m1, m2) = (mass(l1), mass(l2));
        if m1 <= 0.0 || m2 <= 0.0 {
            return None;
        }
        Some(((m2 / l2).ln() - (m1 / l1).ln()) / (l2.ln() - l1.ln()))
    };
    let tiny = if t.alpha > 0.0 { t.alpha * 0.5 } else { 1e-9 };
    let at_zero = if t.alpha > 0.0 {
        mass(tiny) == 0.0
    } else {
        slope(1e-12, 1e-9).is_none_or(|s| s >= -0.02)
    };
    let base = 1e6 * (1.0 + t.alpha);
    let at_inf = slope(base, base * 1e3).is_none_or(|s| s <= 0.02);
    Ok(at_zero && at_inf)
}
