//! Both sides of the main identity `⟨h, f̄₁⋆f₂⟩ = ⟨σ, (Lf₁)*(Lf₂)⟩`, and the
//! structural checks built on the quadratic form: dilation covariance and
//! indicator-sequence witnesses.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Term};
use crate::quad::{self, gauss_legendre_64, QuadOpts};
use crate::sigma::{sigma_of_kernel, sigma_pair_with, Feature};
use crate::special::{binomial, factorial, FunctionSpec};
use crate::transform::{laplace_via_mellin, GridFunction, LogGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    /// `coef · t^power · e^{−rate·t}`, `rate > 0`.
    Mono { coef: C64, power: u32, rate: f64 },
    /// `coef · 𝟙_{(a,b)}(t)`.
    Step { coef: C64, a: f64, b: f64 },
}

/// A trial function on `ℝ₊`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Pieces(Vec<Piece>),
    /// Samples `f(e^{x_j})`, linear in `x` between nodes and zero outside.
    Grid(GridFunction),
}

impl TestFunction {
    pub fn zero() -> Self {
        TestFunction::Pieces(Vec::new())
    }

    pub fn exp_poly(coef: impl Into<C64>, power: u32, rate: f64) -> Self {
        TestFunction::Pieces(vec![Piece::Mono { coef: coef.into(), power, rate }])
    }

    /// `𝟙_{(a,b)}`.
    pub fn indicator(a: f64, b: f64) -> Self {
        TestFunction::Pieces(vec![Piece::Step { coef: C64::new(1.0, 0.0), a, b }])
    }

    /// `e_n(t) = L_n(t) e^{−t/2}`.
    pub fn laguerre(n: u32) -> Self {
        let pieces = (0..=n)
            .map(|k| {
                let c = binomial(n as usize, k as usize) / factorial(k as usize) * if k % 2 == 0 { 1.0 } else { -1.0 };
                Piece::Mono { coef: C64::new(c, 0.0), power: k, rate: 0.5 }
            })
            .collect();
        TestFunction::Pieces(pieces)
    }

    /// A seeded draw from `span{t^m e^{−ct}: min_power ≤ m ≤ 5, c ∈ [0.5, 2]}`
    /// with one to three terms and complex coefficients of modulus ≤ 1.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, min_power: u32) -> Self {
        let terms = rng.gen_range(1..=3);
        let pieces = (0..terms)
            .map(|_| Piece::Mono {
                coef: C64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU)),
                power: rng.gen_range(min_power.min(5)..=5),
                rate: rng.gen_range(0.5..2.0),
            })
            .collect();
        TestFunction::Pieces(pieces)
    }

    pub fn plus(&self, other: &TestFunction) -> Result<TestFunction> {
        match (self, other) {
            (TestFunction::Pieces(a), TestFunction::Pieces(b)) => {
                Ok(TestFunction::Pieces(a.iter().chain(b).copied().collect()))
            }
            _ => Err(Error::Precondition("grid test functions do not combine with closed forms".into())),
        }
    }

    pub fn scaled(&self, s: C64) -> TestFunction {
        match self {
            TestFunction::Pieces(p) => TestFunction::Pieces(
                p.iter()
                    .map(|&x| match x {
                        Piece::Mono { coef, power, rate } => Piece::Mono { coef: coef * s, power, rate },
                        Piece::Step { coef, a, b } => Piece::Step { coef: coef * s, a, b },
                    })
                    .collect(),
            ),
            TestFunction::Grid(g) => {
                TestFunction::Grid(GridFunction { grid: g.grid, values: g.values.iter().map(|v| v * s).collect() })
            }
        }
    }

    /// `D(γ)f(t) = γ^{1/2} f(γt)`.
    pub fn dilate(&self, gamma: f64) -> Result<TestFunction> {
        if !(gamma > 0.0) {
            return Err(Error::Precondition(format!("dilation needs gamma > 0, got {gamma}")));
        }
        let s = gamma.sqrt();
        match self {
            TestFunction::Pieces(p) => Ok(TestFunction::Pieces(
                p.iter()
                    .map(|&x| match x {
                        Piece::Mono { coef, power, rate } => {
                            Piece::Mono { coef: coef * s * gamma.powi(power as i32), power, rate: rate * gamma }
                        }
                        Piece::Step { coef, a, b } => Piece::Step { coef: coef * s, a: a / gamma, b: b / gamma },
                    })
                    .collect(),
            )),
            TestFunction::Grid(g) => {
                let mut grid = g.grid;
                grid.x_min -= gamma.ln();
                grid.x_max -= gamma.ln();
                Ok(TestFunction::Grid(GridFunction { grid, values: g.values.iter().map(|v| v * s).collect() }))
            }
        }
    }

    pub fn conj(&self) -> TestFunction {
        match self {
            TestFunction::Pieces(p) => TestFunction::Pieces(
                p.iter()
                    .map(|&x| match x {
                        Piece::Mono { coef, power, rate } => Piece::Mono { coef: coef.conj(), power, rate },
                        Piece::Step { coef, a, b } => Piece::Step { coef: coef.conj(), a, b },
                    })
                    .collect(),
            ),
            TestFunction::Grid(g) => TestFunction::Grid(GridFunction {
                grid: g.grid,
                values: g.values.iter().map(|v| v.conj()).collect(),
            }),
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        match self {
            TestFunction::Pieces(p) => p.iter().map(|x| piece_eval(x, t)).sum(),
            TestFunction::Grid(g) => grid_eval(g, t),
        }
    }

    /// `Lf` as a closed expression in `λ`.
    pub fn laplace(&self) -> Result<FunctionSpec> {
        let TestFunction::Pieces(p) = self else {
            return Err(Error::Precondition("grid test functions have no closed Laplace image".into()));
        };
        let mut terms = Vec::new();
        for x in p {
            terms.push(match *x {
                Piece::Mono { coef, power, rate } => {
                    FunctionSpec::Const(coef * factorial(power as usize))
                        * FunctionSpec::shifted(rate).powi(-(power as i32) - 1)
                }
                Piece::Step { coef, a, b } => {
                    let d = b - a;
                    // c e^{−aλ} (1 − e^{−dλ})/λ without the removable singularity
                    FunctionSpec::Const(coef * d)
                        * (FunctionSpec::real(-a) * FunctionSpec::var()).exp()
                        * (FunctionSpec::real(-d) * FunctionSpec::var()).exprel()
                }
            });
        }
        Ok(if terms.is_empty() { FunctionSpec::real(0.0) } else { FunctionSpec::Sum(terms) })
    }

    /// `‖f‖_{L²(ℝ₊)}`.
    pub fn norm(&self) -> f64 {
        match self {
            TestFunction::Pieces(p) => {
                let mut s = C64::new(0.0, 0.0);
                for x in p {
                    for y in p {
                        s += piece_inner(x, y);
                    }
                }
                s.re.max(0.0).sqrt()
            }
            TestFunction::Grid(g) => {
                // dt = t dx
                let s: f64 = g.values.iter().enumerate().map(|(j, v)| v.norm_sqr() * g.grid.x(j).exp()).sum();
                (s * g.grid.dx()).sqrt()
            }
        }
    }

    /// Narrow structures of `Lf`, used as quadrature hints on the sigma side.
    pub fn laplace_features(&self) -> Vec<Feature> {
        let mut out = Vec::new();
        if let TestFunction::Pieces(p) = self {
            for x in p {
                if let Piece::Step { a, b, .. } = *x {
                    for s in [a, b, b - a] {
                        if s > 0.0 {
                            out.push(Feature::new(1.0 / s, 1.0 / s));
                        }
                    }
                }
            }
        }
        out
    }

    // (vanishing order at 0, decay rate at ∞); order is infinite for pieces
    // supported away from 0 and the rate is infinite for compact support.
    fn envelope(&self) -> (f64, f64) {
        match self {
            TestFunction::Pieces(p) => p.iter().fold((f64::INFINITY, f64::INFINITY), |(o, r), x| match *x {
                Piece::Mono { power, rate, .. } => (o.min(power as f64), r.min(rate)),
                Piece::Step { a, .. } => (if a <= 0.0 { o.min(0.0) } else { o }, r),
            }),
            TestFunction::Grid(g) => {
                let lead = g.values.iter().position(|v| v.norm() > 0.0);
                (if lead == Some(0) { 0.0 } else { f64::INFINITY }, f64::INFINITY)
            }
        }
    }
}

fn piece_eval(p: &Piece, t: f64) -> C64 {
    match *p {
        Piece::Mono { coef, power, rate } => coef * (t.powi(power as i32) * (-rate * t).exp()),
        Piece::Step { coef, a, b } => {
            if t > a && t < b {
                coef
            } else {
                C64::new(0.0, 0.0)
            }
        }
    }
}

fn grid_eval(g: &GridFunction, t: f64) -> C64 {
    if !(t > 0.0) {
        return C64::new(0.0, 0.0);
    }
    let pos = (t.ln() - g.grid.x_min) / g.grid.dx();
    if pos < 0.0 || pos > (g.grid.count - 1) as f64 {
        return C64::new(0.0, 0.0);
    }
    let j = (pos.floor() as usize).min(g.grid.count - 2);
    let w = pos - j as f64;
    g.values[j] * (1.0 - w) + g.values[j + 1] * w
}

// ∫_lo^hi s^m e^{−cs} ds by panels of Gauss–Legendre.
fn gl_moment(m: u32, c: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (xs, ws) = gauss_legendre_64();
    let panels = ((c * (hi - lo)) / 20.0).ceil().clamp(1.0, 64.0) as usize;
    let h = (hi - lo) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (x, w) in xs.iter().zip(ws) {
            let t = a + h * x;
            s += w * h * t.powi(m as i32) * (-c * t).exp();
        }
    }
    s
}

// ⟨x, y⟩ = ∫ conj(x) y.
fn piece_inner(x: &Piece, y: &Piece) -> C64 {
    match (*x, *y) {
        (Piece::Mono { coef: c1, power: m1, rate: r1 }, Piece::Mono { coef: c2, power: m2, rate: r2 }) => {
            let m = (m1 + m2) as usize;
            c1.conj() * c2 * (factorial(m) / (r1 + r2).powi(m as i32 + 1))
        }
        (Piece::Step { coef: c1, a: a1, b: b1 }, Piece::Step { coef: c2, a: a2, b: b2 }) => {
            c1.conj() * c2 * (b1.min(b2) - a1.max(a2)).max(0.0)
        }
        (Piece::Mono { coef: c1, power, rate }, Piece::Step { coef: c2, a, b }) => {
            c1.conj() * c2 * gl_moment(power, rate, a.max(0.0), b)
        }
        (Piece::Step { coef: c1, a, b }, Piece::Mono { coef: c2, power, rate }) => {
            c1.conj() * c2 * gl_moment(power, rate, a.max(0.0), b)
        }
    }
}

/// `f̄₁ ⋆ f₂`, kept as a sum of exactly evaluable pair terms.
#[derive(Clone, Debug)]
pub enum Convolution {
    Pairs(Vec<(Piece, Piece)>),
    Numeric(TestFunction, TestFunction),
}

pub fn laplace_convolution(f1: &TestFunction, f2: &TestFunction) -> Convolution {
    match (f1.conj(), f2) {
        (TestFunction::Pieces(a), TestFunction::Pieces(b)) => {
            Convolution::Pairs(a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect())
        }
        (a, b) => Convolution::Numeric(a, b.clone()),
    }
}

fn pair_conv(x: &Piece, y: &Piece, t: f64) -> C64 {
    if t <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    match (*x, *y) {
        (Piece::Mono { coef: c1, power: a, rate: r1 }, Piece::Mono { coef: c2, power: b, rate: r2 }) => {
            let (a, b) = (a as i32, b as i32);
            let tp = t.powi(a + b + 1);
            if r1 == r2 {
                let beta = factorial(a as usize) * factorial(b as usize) / factorial((a + b + 1) as usize);
                return c1 * c2 * (beta * tp * (-r1 * t).exp());
            }
            // t^{a+b+1} ∫_0^1 x^a (1−x)^b e^{−(x r1 + (1−x) r2) t} dx
            let (xs, ws) = gauss_legendre_64();
            let panels = (((r1 - r2).abs() * t) / 40.0).ceil().clamp(1.0, 64.0) as usize;
            let h = 1.0 / panels as f64;
            let mut s = 0.0;
            for p in 0..panels {
                for (x, w) in xs.iter().zip(ws) {
                    let u = (p as f64 + x) * h;
                    s += w * h * u.powi(a) * (1.0 - u).powi(b) * (-(u * r1 + (1.0 - u) * r2) * t).exp();
                }
            }
            c1 * c2 * (tp * s)
        }
        (Piece::Step { coef: c1, a: a1, b: b1 }, Piece::Step { coef: c2, a: a2, b: b2 }) => {
            c1 * c2 * (b1.min(t - a2) - a1.max(t - b2)).max(0.0)
        }
        (Piece::Mono { coef: c1, power, rate }, Piece::Step { coef: c2, a, b })
        | (Piece::Step { coef: c2, a, b }, Piece::Mono { coef: c1, power, rate }) => {
            let lo = (t - b).max(0.0);
            let hi = (t - a).max(0.0);
            c1 * c2 * gl_moment(power, rate, lo, hi)
        }
    }
}

impl Convolution {
    pub fn eval(&self, t: f64) -> C64 {
        match self {
            Convolution::Pairs(p) => p.iter().map(|(x, y)| pair_conv(x, y, t)).sum(),
            Convolution::Numeric(a, b) => {
                if t <= 0.0 {
                    return C64::new(0.0, 0.0);
                }
                quad::finite(|s, _, _| a.eval(s) * b.eval(t - s), 0.0, t, &[0.5 * t], QuadOpts::default()).value
            }
        }
    }

    fn breaks(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        if let Convolution::Pairs(p) = self {
            for (x, y) in p {
                let ends = |q: &Piece| match *q {
                    Piece::Step { a, b, .. } => vec![a.max(0.0), b],
                    Piece::Mono { .. } => vec![0.0],
                };
                for u in ends(x) {
                    for v in ends(y) {
                        if u + v > 0.0 {
                            out.push(u + v);
                        }
                    }
                }
                if let (Piece::Mono { power: a, rate: r1, .. }, Piece::Mono { power: b, rate: r2, .. }) = (x, y) {
                    let peak = (a + b + 1) as f64 / r1.min(*r2);
                    out.extend([0.25, 1.0, 4.0, 16.0].map(|m| m * peak));
                }
            }
        }
        out
    }
}

fn kernel_singularity(k: &Kernel) -> f64 {
    k.terms()
        .iter()
        .filter_map(|t| match t {
            Term::QuasiCarleman(x) if x.r == 0.0 && x.q > 0.0 => Some(x.q),
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// `⟨h, f̄⋆f⟩` by quadrature against the kernel.
pub fn form_direct(k: &Kernel, f: &TestFunction) -> Result<f64> {
    form_direct_polar(k, f, f).map(|v| v.re)
}

/// `⟨h, f̄₁⋆f₂⟩ = (Hf₂, f₁)`.
pub fn form_direct_polar(k: &Kernel, f1: &TestFunction, f2: &TestFunction) -> Result<C64> {
    let (o1, r1) = f1.envelope();
    let (o2, r2) = f2.envelope();
    let order = o1 + o2 + 1.0;
    let q = kernel_singularity(k);
    if order - q <= -1.0 {
        return Err(Error::Divergence {
            endpoint: "0".into(),
            detail: format!("convolution vanishes like t^{order} against a t^-{q} kernel"),
        });
    }
    let decay = r1.min(r2);
    let growth = k
        .terms()
        .iter()
        .map(|t| match t {
            Term::QuasiCarleman(x) => -x.alpha,
            Term::FiniteRank(v) => -v.beta.re,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if decay.is_finite() && decay <= growth {
        return Err(Error::Divergence {
            endpoint: "infinity".into(),
            detail: format!("convolution decays like e^-{decay}t, kernel grows like e^{growth}t"),
        });
    }
    let conv = laplace_convolution(f1, f2);
    let breaks = conv.breaks();
    let err = std::cell::RefCell::new(None);
    let res = quad::semi_infinite(
        |t, _| match k.eval(t) {
            Ok(h) => conv.eval(t) * h,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        },
        0.0,
        &breaks,
        QuadOpts { abs_tol: 1e-14, rel_tol: 1e-11, max_level: 10 },
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(res.value)
}

/// `⟨σ, |Lf|²⟩`.
pub fn form_sigma(k: &Kernel, f: &TestFunction) -> Result<f64> {
    form_sigma_polar(k, f, f).map(|v| v.re)
}

/// `⟨σ, (Lf₁)*(Lf₂)⟩`.
pub fn form_sigma_polar(k: &Kernel, f1: &TestFunction, f2: &TestFunction) -> Result<C64> {
    if k.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let sigma = sigma_of_kernel(k)?;
    let (w1, w2) = (f1.laplace()?, f2.laplace()?);
    let mut hints = f1.laplace_features();
    hints.extend(f2.laplace_features());
    sigma_pair_with(&sigma, &w1, &w2, &hints)
}

/// `|direct − sigma| / (1 + |direct|)`.
pub fn identity_residual(k: &Kernel, f: &TestFunction) -> Result<f64> {
    let d = form_direct(k, f)?;
    let s = form_sigma(k, f)?;
    Ok((d - s).abs() / (1.0 + d.abs()))
}

/// Relative defect of `h[D(γ)f] = γ^{q−1} h[f]` for `h(t) = t^{−q}`.
pub fn dilation_check(q: f64, f: &TestFunction, gamma: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Precondition(format!("dilation covariance needs q > 0, got {q}")));
    }
    let k = Kernel::quasi_carleman(1.0, q, 0.0, 0.0)?;
    let base = form_sigma(&k, f)?;
    let dil = form_sigma(&k, &f.dilate(gamma)?)?;
    if base == 0.0 {
        return Ok(dil.abs());
    }
    Ok((dil - gamma.powf(q - 1.0) * base).abs() / base.abs())
}

/// `‖L_grid f − Lf‖/‖f‖` where `L_grid` is the Mellin-side Laplace transform
/// and `Lf` the closed form, both measured in the unitary log variable.
pub fn factorization_residual(f: &TestFunction, grid: LogGrid) -> Result<f64> {
    let fg = GridFunction::from_fn(grid, |x| f.eval(x.exp()));
    let out = laplace_via_mellin(&fg)?;
    let lf = f.laplace()?;
    let mut d2 = 0.0;
    let mut n2 = 0.0;
    for j in 0..grid.count {
        let x = grid.x(j);
        let want = lf.eval_re(x.exp())?;
        d2 += (out.values[j] - want).norm_sqr() * x.exp();
        n2 += fg.values[j].norm_sqr() * x.exp();
    }
    Ok((d2 / n2).sqrt())
}

/// Smallest power `m` for which `t^m e^{−ct}` lies in the direct form domain
/// of a kernel with `t^{−q}` behaviour at 0.
pub fn min_power(q: f64, r: f64) -> u32 {
    if r > 0.0 || q <= 0.0 {
        return 0;
    }
    let mut m = 0;
    while 2.0 * m as f64 <= q - 2.0 {
        m += 1;
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    /// `f_n = 𝟙_{(n, n+1)}`, `n = 1..=count`.
    ZeroInSpectrum { count: usize },
    /// `f_l = 𝟙_{(l^{−2}, l^{−1})}` for each `l > 1`.
    Unbounded { ls: Vec<f64> },
}

/// Rayleigh quotients `h[f]/‖f‖²` along indicator sequences, computed on the
/// sigma side.
pub fn spectral_witnesses(k: &Kernel, kind: &WitnessKind) -> Result<Vec<f64>> {
    let fs: Vec<TestFunction> = match kind {
        WitnessKind::ZeroInSpectrum { count } => {
            (1..=*count).map(|n| TestFunction::indicator(n as f64, n as f64 + 1.0)).collect()
        }
        WitnessKind::Unbounded { ls } => {
            if let Some(l) = ls.iter().find(|&&l| !(l > 1.0)) {
                return Err(Error::Precondition(format!("witness scale must exceed 1, got {l}")));
            }
            ls.iter().map(|&l| TestFunction::indicator(l.powi(-2), 1.0 / l)).collect()
        }
    };
    fs.iter()
        .map(|f| {
            let n = f.norm();
            Ok(form_sigma(k, f)? / (n * n))
        })
        .collect()
}
