//! Complex gamma, Laguerre polynomials and truncated Taylor jets.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
// published digits, kept verbatim
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn pole_check(z: C64) -> Result<()> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(z.re));
    }
    Ok(())
}

/// `ln Γ(z)` on a branch that is continuous away from the negative axis.
///
/// Lanczos (g = 7, nine coefficients) for `Re z ≥ 1/2`, reflection otherwise.
pub fn ln_gamma(z: C64) -> Result<C64> {
    pole_check(z)?;
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        let ls = ln_sin_pi(z);
        return Ok(C64::new(PI.ln(), 0.0) - ls - ln_gamma(C64::new(1.0, 0.0) - z)?);
    }
    let z = z - 1.0;
    let mut a = C64::new(LANCZOS[0], 0.0);
    for (k, &p) in LANCZOS.iter().enumerate().skip(1) {
        a += p / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln())
}

// ln sin(πz) without overflow for large |Im z|.
fn ln_sin_pi(z: C64) -> C64 {
    if z.im.abs() < 20.0 {
        return (z * PI).sin().ln();
    }
    let i = C64::i();
    if z.im > 0.0 {
        // sin(πz) = e^{−iπz}(e^{2iπz} − 1)/(2i), |e^{2iπz}| ≪ 1
        -i * PI * z + ((2.0 * i * PI * z).exp() - 1.0).ln() - (2.0 * i).ln()
    } else {
        ln_sin_pi(z.conj()).conj()
    }
}

/// Complex gamma function, relative error near 1e-14 on moderate arguments.
pub fn gamma(z: C64) -> Result<C64> {
    pole_check(z)?;
    if z.im == 0.0 && z.re > 0.0 && z.re <= 171.0 && z.re == z.re.round() {
        let mut f = 1.0;
        for k in 2..(z.re as u64) {
            f *= k as f64;
        }
        return Ok(C64::new(f, 0.0));
    }
    let g = ln_gamma(z)?.exp();
    Ok(if z.im == 0.0 { C64::new(g.re, 0.0) } else { g })
}

/// Real gamma function.
pub fn gamma_real(x: f64) -> Result<f64> {
    Ok(gamma(C64::new(x, 0.0))?.re)
}

/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Laguerre polynomial `L_n(t)` by the three-term recurrence.
pub fn laguerre(n: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - t;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - t) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal Laguerre function `e_n(t) = L_n(t) e^{−t/2}`.
pub fn laguerre_function(n: usize, t: f64) -> f64 {
    laguerre(n, t) * (-0.5 * t).exp()
}

/// Truncated Taylor expansion: `coeffs[p] = f^{(p)}(center) / p!`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub center: C64,
    pub coeffs: Vec<C64>,
}

impl Jet {
    pub fn constant(center: C64, value: C64, order: usize) -> Jet {
        let mut coeffs = vec![C64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet { center, coeffs }
    }

    /// The identity function `z ↦ z` expanded at `center`.
    pub fn variable(center: C64, order: usize) -> Jet {
        let mut j = Jet::constant(center, center, order);
        if order >= 1 {
            j.coeffs[1] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// `f^{(p)}(center)`.
    pub fn derivative(&self, p: usize) -> C64 {
        self.coeffs[p] * factorial(p)
    }

    /// Evaluates the Taylor polynomial at `center + h`.
    pub fn eval_offset(&self, h: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * h + c)
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet { center: self.center, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Jet { center: self.center, coeffs }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.coeffs.len().min(other.coeffs.len());
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for (k, out) in coeffs.iter_mut().enumerate() {
            for j in 0..=k {
                *out += self.coeffs[j] * other.coeffs[k - j];
            }
        }
        Jet { center: self.center, coeffs }
    }

    fn require_nonzero(&self, what: &str) -> Result<()> {
        if self.coeffs[0].norm() == 0.0 {
            return Err(Error::NonAnalytic(format!("{what} of a jet vanishing at {}", self.center)));
        }
        Ok(())
    }

    pub fn recip(&self) -> Result<Jet> {
        self.require_nonzero("reciprocal")?;
        let f = &self.coeffs;
        let inv = 1.0 / f[0];
        let mut g = vec![C64::new(0.0, 0.0); f.len()];
        g[0] = inv;
        for k in 1..f.len() {
            let s: C64 = (1..=k).map(|j| f[j] * g[k - j]).sum();
            g[k] = -s * inv;
        }
        Ok(Jet { center: self.center, coeffs: g })
    }

    pub fn exp(&self) -> Jet {
        let f = &self.coeffs;
        let mut g = vec![C64::new(0.0, 0.0); f.len()];
        g[0] = f[0].exp();
        for k in 1..f.len() {
            let s: C64 = (1..=k).map(|j| f[j] * g[k - j] * j as f64).sum();
            g[k] = s / k as f64;
        }
        Jet { center: self.center, coeffs: g }
    }

    pub fn ln(&self) -> Result<Jet> {
        self.require_nonzero("logarithm")?;
        let f = &self.coeffs;
        let mut g = vec![C64::new(0.0, 0.0); f.len()];
        g[0] = f[0].ln();
        for k in 1..f.len() {
            let s: C64 = (1..k).map(|j| g[j] * f[k - j] * j as f64).sum();
            g[k] = (f[k] - s / k as f64) / f[0];
        }
        Ok(Jet { center: self.center, coeffs: g })
    }

    /// Principal power `f^a` for real `a`.
    pub fn powf(&self, a: f64) -> Result<Jet> {
        if a == a.round() && a.abs() < 64.0 {
            return self.powi(a as i32);
        }
        self.require_nonzero("non-integer power")?;
        let f = &self.coeffs;
        let mut g = vec![C64::new(0.0, 0.0); f.len()];
        g[0] = f[0].powf(a);
        for k in 1..f.len() {
            let s: C64 = (1..=k).map(|j| f[j] * g[k - j] * (a * j as f64 - (k - j) as f64)).sum();
            g[k] = s / (k as f64 * f[0]);
        }
        Ok(Jet { center: self.center, coeffs: g })
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(self.center, C64::new(1.0, 0.0), self.order());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// `(e^f − 1)/f`, regular where `f` vanishes.
    pub fn exprel(&self) -> Jet {
        let z0 = self.coeffs[0];
        if z0.norm() >= 0.5 {
            let one = Jet::constant(self.center, C64::new(1.0, 0.0), self.order());
            return self.exp().sub(&one).mul(&self.recip().expect("nonzero value"));
        }
        // Taylor coefficients of exprel at z0, then compose with f − z0.
        let order = self.order();
        let e: Vec<C64> = (0..=order)
            .map(|m| {
                let mut s = C64::new(0.0, 0.0);
                let mut zk = C64::new(1.0, 0.0);
                for k in 0..40 {
                    s += zk * (binomial(k + m, m) / factorial(k + m + 1));
                    zk *= z0;
                }
                s
            })
            .collect();
        let mut h = self.clone();
        h.coeffs[0] = C64::new(0.0, 0.0);
        compose(&h, &e)
    }
}

/// `Σ e_m h^m` for a jet `h` with zero constant term.
pub fn compose(h: &Jet, e: &[C64]) -> Jet {
    let order = h.order();
    let mut acc = Jet::constant(h.center, e[e.len() - 1], order);
    for &c in e.iter().rev().skip(1) {
        acc = acc.mul(h);
        acc.coeffs[0] += c;
    }
    acc
}

/// `(e^z − 1)/z` for complex `z`.
pub fn exprel(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let mut s = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for k in 1..30 {
            s += term;
            term *= z / (k + 1) as f64;
        }
        s
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Closed expression tree over a complex variable.
///
/// Only rational, exponential, power and logarithm nodes are allowed, which
/// keeps every jet exact up to rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FunctionSpec {
    Const(C64),
    Var,
    /// `Σ c_k (z − center)^k`.
    Poly { center: C64, coeffs: Vec<C64> },
    Exp(Box<FunctionSpec>),
    Ln(Box<FunctionSpec>),
    Pow(Box<FunctionSpec>, f64),
    Powi(Box<FunctionSpec>, i32),
    Recip(Box<FunctionSpec>),
    Exprel(Box<FunctionSpec>),
    Sum(Vec<FunctionSpec>),
    Product(Vec<FunctionSpec>),
}

impl FunctionSpec {
    pub fn var() -> Self {
        FunctionSpec::Var
    }

    pub fn constant(c: impl Into<C64>) -> Self {
        FunctionSpec::Const(c.into())
    }

    pub fn real(c: f64) -> Self {
        FunctionSpec::Const(C64::new(c, 0.0))
    }

    /// `z + a`.
    pub fn shifted(a: impl Into<C64>) -> Self {
        FunctionSpec::Var + FunctionSpec::Const(a.into())
    }

    pub fn poly(center: impl Into<C64>, coeffs: Vec<C64>) -> Self {
        FunctionSpec::Poly { center: center.into(), coeffs }
    }

    pub fn exp(self) -> Self {
        FunctionSpec::Exp(Box::new(self))
    }

    pub fn ln(self) -> Self {
        FunctionSpec::Ln(Box::new(self))
    }

    pub fn powf(self, a: f64) -> Self {
        FunctionSpec::Pow(Box::new(self), a)
    }

    pub fn powi(self, n: i32) -> Self {
        FunctionSpec::Powi(Box::new(self), n)
    }

    pub fn recip(self) -> Self {
        FunctionSpec::Recip(Box::new(self))
    }

    pub fn exprel(self) -> Self {
        FunctionSpec::Exprel(Box::new(self))
    }

    /// `w*(z) = conj(w(conj z))`.
    pub fn conj(&self) -> Self {
        use FunctionSpec::*;
        match self {
            Const(c) => Const(c.conj()),
            Var => Var,
            Poly { center, coeffs } => {
                Poly { center: center.conj(), coeffs: coeffs.iter().map(|c| c.conj()).collect() }
            }
            Exp(f) => Exp(Box::new(f.conj())),
            Ln(f) => Ln(Box::new(f.conj())),
            Pow(f, a) => Pow(Box::new(f.conj()), *a),
            Powi(f, n) => Powi(Box::new(f.conj()), *n),
            Recip(f) => Recip(Box::new(f.conj())),
            Exprel(f) => Exprel(Box::new(f.conj())),
            Sum(v) => Sum(v.iter().map(|f| f.conj()).collect()),
            Product(v) => Product(v.iter().map(|f| f.conj()).collect()),
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        use FunctionSpec::*;
        Ok(match self {
            Const(c) => *c,
            Var => z,
            Poly { center, coeffs } => {
                let h = z - center;
                coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * h + c)
            }
            Exp(f) => f.eval(z)?.exp(),
            Ln(f) => {
                let v = f.eval(z)?;
                if v.norm() == 0.0 {
                    return Err(Error::NonAnalytic(format!("ln(0) at {z}")));
                }
                v.ln()
            }
            Pow(f, a) => {
                if *a == a.round() && a.abs() < 64.0 {
                    return Ok(powi_c(f.eval(z)?, *a as i32));
                }
                let v = f.eval(z)?;
                if v.norm() == 0.0 {
                    if *a > 0.0 {
                        return Ok(C64::new(0.0, 0.0));
                    }
                    return Err(Error::NonAnalytic(format!("0^{a} at {z}")));
                }
                v.powf(*a)
            }
            Powi(f, n) => {
                let v = f.eval(z)?;
                if *n < 0 && v.norm() == 0.0 {
                    return Err(Error::NonAnalytic(format!("pole at {z}")));
                }
                powi_c(v, *n)
            }
            Recip(f) => {
                let v = f.eval(z)?;
                if v.norm() == 0.0 {
                    return Err(Error::NonAnalytic(format!("1/0 at {z}")));
                }
                1.0 / v
            }
            Exprel(f) => exprel(f.eval(z)?),
            Sum(v) => {
                let mut s = C64::new(0.0, 0.0);
                for f in v {
                    s += f.eval(z)?;
                }
                s
            }
            Product(v) => {
                let mut p = C64::new(1.0, 0.0);
                for f in v {
                    p *= f.eval(z)?;
                    if p.norm() == 0.0 {
                        break;
                    }
                }
                p
            }
        })
    }

    /// Replaces the variable by `inner`, i.e. `self ∘ inner`.
    pub fn substitute(&self, inner: &FunctionSpec) -> FunctionSpec {
        use FunctionSpec::*;
        let b = |f: &FunctionSpec| Box::new(f.substitute(inner));
        match self {
            Const(c) => Const(*c),
            Var => inner.clone(),
            Poly { center, coeffs } => {
                let h = inner.clone() - Const(*center);
                let terms = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| Const(c) * h.clone().powi(k as i32))
                    .collect();
                Sum(terms)
            }
            Exp(f) => Exp(b(f)),
            Ln(f) => Ln(b(f)),
            Pow(f, a) => Pow(b(f), *a),
            Powi(f, n) => Powi(b(f), *n),
            Recip(f) => Recip(b(f)),
            Exprel(f) => Exprel(b(f)),
            Sum(v) => Sum(v.iter().map(|f| f.substitute(inner)).collect()),
            Product(v) => Product(v.iter().map(|f| f.substitute(inner)).collect()),
        }
    }

    /// Real-argument evaluation.
    pub fn eval_re(&self, x: f64) -> Result<C64> {
        self.eval(C64::new(x, 0.0))
    }

    pub fn jet(&self, center: C64, order: usize) -> Result<Jet> {
        use FunctionSpec::*;
        Ok(match self {
            Const(c) => Jet::constant(center, *c, order),
            Var => Jet::variable(center, order),
            Poly { center: c0, coeffs } => {
                let x = Jet::variable(center, order);
                let h = Jet { center, coeffs: x.coeffs.iter().enumerate().map(|(p, &v)| if p == 0 { v - c0 } else { v }).collect() };
                let mut acc = Jet::constant(center, C64::new(0.0, 0.0), order);
                for &c in coeffs.iter().rev() {
                    acc = acc.mul(&h);
                    acc.coeffs[0] += c;
                }
                acc
            }
            Exp(f) => f.jet(center, order)?.exp(),
            Ln(f) => f.jet(center, order)?.ln()?,
            Pow(f, a) => f.jet(center, order)?.powf(*a)?,
            Powi(f, n) => f.jet(center, order)?.powi(*n)?,
            Recip(f) => f.jet(center, order)?.recip()?,
            Exprel(f) => f.jet(center, order)?.exprel(),
            Sum(v) => {
                let mut acc = Jet::constant(center, C64::new(0.0, 0.0), order);
                for f in v {
                    acc = acc.add(&f.jet(center, order)?);
                }
                acc
            }
            Product(v) => {
                let mut acc = Jet::constant(center, C64::new(1.0, 0.0), order);
                for f in v {
                    acc = acc.mul(&f.jet(center, order)?);
                }
                acc
            }
        })
    }
}

fn powi_c(v: C64, n: i32) -> C64 {
    if n < 0 {
        return 1.0 / powi_c(v, -n);
    }
    let mut e = n as u32;
    let mut acc = C64::new(1.0, 0.0);
    let mut sq = v;
    while e > 0 {
        if e & 1 == 1 {
            acc *= sq;
        }
        e >>= 1;
        sq *= sq;
    }
    acc
}

/// Exact truncated Taylor expansion of `fspec` at `center`.
pub fn jet_eval(fspec: &FunctionSpec, center: C64, order: usize) -> Result<Jet> {
    fspec.jet(center, order)
}

impl Add for FunctionSpec {
    type Output = FunctionSpec;
    fn add(self, rhs: FunctionSpec) -> FunctionSpec {
        match (self, rhs) {
            (FunctionSpec::Sum(mut a), FunctionSpec::Sum(b)) => {
                a.extend(b);
                FunctionSpec::Sum(a)
            }
            (FunctionSpec::Sum(mut a), b) => {
                a.push(b);
                FunctionSpec::Sum(a)
            }
            (a, b) => FunctionSpec::Sum(vec![a, b]),
        }
    }
}

impl Mul for FunctionSpec {
    type Output = FunctionSpec;
    fn mul(self, rhs: FunctionSpec) -> FunctionSpec {
        match (self, rhs) {
            (FunctionSpec::Product(mut a), FunctionSpec::Product(b)) => {
                a.extend(b);
                FunctionSpec::Product(a)
            }
            (FunctionSpec::Product(mut a), b) => {
                a.push(b);
                FunctionSpec::Product(a)
            }
            (a, b) => FunctionSpec::Product(vec![a, b]),
        }
    }
}

impl Neg for FunctionSpec {
    type Output = FunctionSpec;
    fn neg(self) -> FunctionSpec {
        FunctionSpec::real(-1.0) * self
    }
}

impl Sub for FunctionSpec {
    type Output = FunctionSpec;
    fn sub(self, rhs: FunctionSpec) -> FunctionSpec {
        self + (-rhs)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FunctionSpec::*;
        match self {
            Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Const(c) => write!(f, "({c})"),
            Var => write!(f, "z"),
            Poly { center, coeffs } => write!(f, "poly[{center}; {} terms]", coeffs.len()),
            Exp(a) => write!(f, "exp({a})"),
            Ln(a) => write!(f, "ln({a})"),
            Pow(a, p) => write!(f, "({a})^{p}"),
            Powi(a, p) => write!(f, "({a})^{p}"),
            Recip(a) => write!(f, "1/({a})"),
            Exprel(a) => write!(f, "exprel({a})"),
            Sum(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(" + "))
            }
            Product(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join("·"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma(c(5.0)).unwrap().re - 24.0).abs() < 1e-12);
        assert!((gamma(c(0.5)).unwrap().re - PI.sqrt()).abs() < 1e-13);
        let g = gamma(C64::new(0.5, 1.0)).unwrap().norm();
        assert!((g - 0.520_590_963_6).abs() < 1e-9, "{g}");
        assert!((g - (PI / PI.cosh()).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_poles() {
        for z in [0.0, -1.0, -7.0] {
            assert_eq!(gamma(c(z)), Err(Error::Pole(z)));
        }
    }

    #[test]
    fn gamma_negative_half_integers() {
        // Γ(−1/2) = −2√π, Γ(−3/2) = 4√π/3
        assert!((gamma_real(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!((gamma_real(-1.5).unwrap() - 4.0 * PI.sqrt() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_large_imaginary() {
        for xi in [30.0, 80.0, 134.0] {
            let g = gamma(C64::new(0.5, xi)).unwrap().norm();
            let expect = (PI.ln() - (PI * xi).cosh().ln()).mul_add(0.5, 0.0).exp();
            assert!(((g - expect) / expect).abs() < 1e-11, "{xi}: {g} vs {expect}");
        }
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre(0, 3.7), 1.0);
        assert_eq!(laguerre(1, 0.0), 1.0);
        assert!((laguerre(2, 1.0) + 0.5).abs() < 1e-15);
        // L_3(t) = 1 − 3t + 3t²/2 − t³/6
        let t: f64 = 2.5;
        let l3 = 1.0 - 3.0 * t + 1.5 * t * t - t.powi(3) / 6.0;
        assert!((laguerre(3, t) - l3).abs() < 1e-13);
    }

    #[test]
    fn jet_examples() {
        let e = FunctionSpec::var().exp().jet(c(0.0), 2).unwrap();
        assert!((e.coeffs[0] - 1.0).norm() < 1e-15);
        assert!((e.coeffs[1] - 1.0).norm() < 1e-15);
        assert!((e.coeffs[2] - 0.5).norm() < 1e-15);

        let f = FunctionSpec::shifted(-0.5) * FunctionSpec::shifted(0.5).powi(-2);
        let j = f.jet(c(1.0), 0).unwrap();
        assert!((j.coeffs[0] - 2.0 / 9.0).norm() < 1e-15);

        let rho = 1.3;
        let r = (FunctionSpec::var() * FunctionSpec::real(rho / 2.0)).exp().jet(c(0.0), 6).unwrap();
        for (p, v) in r.coeffs.iter().enumerate() {
            let expect = (rho / 2.0).powi(p as i32) / factorial(p);
            assert!((v.re - expect).abs() < 1e-15);
        }
        // θ = R e^{−ρμ/2} is flat to the jet order
        let damp = (FunctionSpec::var() * FunctionSpec::real(-rho / 2.0)).exp().jet(c(0.0), 6).unwrap();
        let theta = r.mul(&damp);
        assert!((theta.coeffs[0] - 1.0).norm() < 1e-15);
        for v in &theta.coeffs[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn jet_errors_at_singularities() {
        let f = FunctionSpec::var().recip();
        assert!(matches!(f.jet(c(0.0), 3), Err(Error::NonAnalytic(_))));
        assert!(matches!(FunctionSpec::var().ln().jet(c(0.0), 1), Err(Error::NonAnalytic(_))));
    }

    #[test]
    fn exprel_matches_both_branches() {
        for z in [C64::new(0.3, 0.1), C64::new(-0.49, 0.0), C64::new(1.5, -2.0), C64::new(-4.0, 0.0)] {
            let direct = if z.norm() > 1e-3 { (z.exp() - 1.0) / z } else { c(1.0) };
            assert!((exprel(z) - direct).norm() < 1e-14 * direct.norm().max(1.0));
        }
        // jets straddling the branch switch agree with the division formula,
        // whose p-th coefficient cancels like |z0|^{-p-1}
        for z0 in [0.2f64, 0.7, -0.6] {
            let f = FunctionSpec::var().exprel();
            let j = f.jet(c(z0), 6).unwrap();
            let q = (FunctionSpec::var().exp() - FunctionSpec::real(1.0)) * FunctionSpec::var().recip();
            let k = q.jet(c(z0), 6).unwrap();
            for p in 0..=6 {
                let tol = 1e-14 * z0.abs().powi(-(p as i32) - 1);
                assert!((j.coeffs[p] - k.coeffs[p]).norm() < tol, "{z0} {p}");
            }
        }
    }
}
