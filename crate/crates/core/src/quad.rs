//! Double-exponential and Gauss–Legendre quadrature for complex integrands.
//!
//! Integrands receive the distance to both endpoints, so algebraic endpoint
//! singularities like `(λ−α)^{q−1}` can be evaluated without cancellation.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

/// Convergence controls for the double-exponential rules.
#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_level: u32,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { abs_tol: 1e-15, rel_tol: 1e-13, max_level: 10 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub evals: usize,
}

const TS_TMAX: f64 = 6.1;

/// Tanh-sinh on `[a, b]`. `f(da, db)` gets the offsets from `a` and to `b`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, opts: QuadOpts) -> QuadResult
where
    F: Fn(f64, f64) -> C64,
{
    let len = b - a;
    if len <= 0.0 {
        return QuadResult { value: C64::new(0.0, 0.0), error: 0.0, evals: 0 };
    }
    let half = 0.5 * len;
    let mut evals = 0usize;
    let node = |t: f64, evals: &mut usize| -> C64 {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        // distance from the nearer endpoint, computed without cancellation
        let near = len * e / (1.0 + e);
        if near == 0.0 || !near.is_finite() {
            return C64::new(0.0, 0.0);
        }
        let (da, db) = if u < 0.0 { (near, len - near) } else { (len - near, near) };
        let ch = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        *evals += 1;
        let v = f(da, db);
        if v.re.is_finite() && v.im.is_finite() { v * w } else { C64::new(0.0, 0.0) }
    };

    let mut h = 1.0;
    let mut sum = node(0.0, &mut evals);
    let mut k = 1.0;
    while k * h <= TS_TMAX {
        sum += node(k * h, &mut evals) + node(-k * h, &mut evals);
        k += 1.0;
    }
    let mut est = sum * h;
    let mut err = f64::INFINITY;
    for level in 1..=opts.max_level {
        h *= 0.5;
        let mut add = C64::new(0.0, 0.0);
        let mut j = 1.0;
        while j * h <= TS_TMAX {
            add += node(j * h, &mut evals) + node(-j * h, &mut evals);
            j += 2.0;
        }
        sum += add;
        let next = sum * h;
        err = (next - est).norm();
        est = next;
        if level >= 3 && err <= opts.abs_tol.max(opts.rel_tol * est.norm()) {
            break;
        }
    }
    QuadResult { value: est, error: err, evals }
}

/// Exp-sinh on `[a, ∞)`. `f(d)` gets the offset from `a`.
pub fn exp_sinh<F>(f: F, a: f64, opts: QuadOpts) -> QuadResult
where
    F: Fn(f64) -> C64,
{
    let _ = a;
    let mut evals = 0usize;
    let node = |t: f64, evals: &mut usize| -> C64 {
        let u = FRAC_PI_2 * t.sinh();
        if u > 700.0 {
            return C64::new(0.0, 0.0);
        }
        let x = u.exp();
        if x == 0.0 {
            return C64::new(0.0, 0.0);
        }
        *evals += 1;
        let v = f(x);
        let w = FRAC_PI_2 * t.cosh() * x;
        if v.re.is_finite() && v.im.is_finite() { v * w } else { C64::new(0.0, 0.0) }
    };
    let (tlo, thi) = (-6.0, 4.6);
    let mut h = 0.5;
    let mut sum = C64::new(0.0, 0.0);
    let mut t = tlo;
    while t <= thi + 1e-12 {
        sum += node(t, &mut evals);
        t += h;
    }
    let mut est = sum * h;
    let mut err = f64::INFINITY;
    for level in 1..=opts.max_level {
        h *= 0.5;
        let mut add = C64::new(0.0, 0.0);
        let mut t = tlo + h;
        while t <= thi {
            add += node(t, &mut evals);
            t += 2.0 * h;
        }
        sum += add;
        let next = sum * h;
        err = (next - est).norm();
        est = next;
        if level >= 3 && err <= opts.abs_tol.max(opts.rel_tol * est.norm()) {
            break;
        }
    }
    QuadResult { value: est, error: err, evals }
}

/// `∫_a^∞ f(x) dx` over panels cut at `breaks` (values in `(a, ∞)`), with the
/// last panel handled by exp-sinh. `f(x, da)` gets `x` and the offset from `a`
/// (accurate for the first panel).
pub fn semi_infinite<F>(f: F, a: f64, breaks: &[f64], opts: QuadOpts) -> QuadResult
where
    F: Fn(f64, f64) -> C64,
{
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > a && b.is_finite()).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * x.abs().max(1.0));
    let mut total = QuadResult { value: C64::new(0.0, 0.0), error: 0.0, evals: 0 };
    let mut lo = a;
    for (i, &hi) in pts.iter().enumerate() {
        let r = if i == 0 {
            tanh_sinh(|da, _| f(a + da, da), lo, hi, opts)
        } else {
            let l = lo;
            tanh_sinh(|da, _| f(l + da, l + da - a), l, hi, opts)
        };
        accumulate(&mut total, r);
        lo = hi;
    }
    let l = lo;
    let r = exp_sinh(|d| f(l + d, l + d - a), l, opts);
    accumulate(&mut total, r);
    total
}

/// `∫_a^b f` over panels cut at `breaks`; `f(x, da, db)` with accurate offsets
/// from the outer endpoints on the first and last panels.
pub fn finite<F>(f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOpts) -> QuadResult
where
    F: Fn(f64, f64, f64) -> C64,
{
    let mut pts: Vec<f64> = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * x.abs().max(1.0));
    let mut total = QuadResult { value: C64::new(0.0, 0.0), error: 0.0, evals: 0 };
    let n = pts.len() - 1;
    for i in 0..n {
        let (lo, hi) = (pts[i], pts[i + 1]);
        let r = tanh_sinh(
            |da, db| {
                let x = if da <= db { lo + da } else { hi - db };
                let oa = if i == 0 { da } else { x - a };
                let ob = if i == n - 1 { db } else { b - x };
                f(x, oa, ob)
            },
            lo,
            hi,
            opts,
        );
        accumulate(&mut total, r);
    }
    total
}

fn accumulate(total: &mut QuadResult, r: QuadResult) {
    total.value += r.value;
    total.error += r.error;
    total.evals += r.evals;
}

/// Fixed-step tanh-sinh rule on an interval of length `len`, as
/// `(da, db, weight)` triples. Useful when many integrands share one interval.
pub fn tanh_sinh_rule(len: f64, h: f64) -> Vec<(f64, f64, f64)> {
    let half = 0.5 * len;
    let kmax = (TS_TMAX / h).ceil() as i64;
    let mut out = Vec::with_capacity(2 * kmax as usize + 1);
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        let near = len * e / (1.0 + e);
        if near == 0.0 || !near.is_finite() {
            continue;
        }
        let (da, db) = if u < 0.0 { (near, len - near) } else { (len - near, near) };
        let ch = u.cosh();
        out.push((da, db, h * half * FRAC_PI_2 * t.cosh() / (ch * ch)));
    }
    out
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 0.5 * w;
        xs[n - 1 - i] = 0.5 * (1.0 + x);
        ws[n - 1 - i] = 0.5 * w;
    }
    (xs, ws)
}

/// Cached 64-point rule on `[0, 1]`.
pub fn gauss_legendre_64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}
