//! Laplace and Mellin machinery on uniform grids in the logarithmic variable.
//!
//! Conventions. A [`LogGrid`] holds `x_j = x_min + j·dx`, `dx = (x_max − x_min)/count`.
//! Functions of `t` (and the Laplace images they produce) are sampled at
//! `t_j = e^{x_j}`; sign-side data `u(x) = e^{−x/2} w(e^{−x})` live at
//! `λ = e^{−x_j}`. The unitary Fourier transform is
//! `(Φu)(ξ) = (2π)^{−1/2} ∫ u(x) e^{−ixξ} dx`, discretised on the dual grid
//! `ξ_k = (k − count/2)·2π/(count·dx)` as
//! `dx (2π)^{−1/2} e^{−i x_min ξ_k} FFT(u_j (−1)^j)_k`.
//! `U f(x) = e^{x/2} f(e^x)` and `M = ΦU`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOpts};
use crate::special::{gamma, FunctionSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub count: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        LogGrid { x_min: -48.0, x_max: 48.0, count: 4096 }
    }
}

impl LogGrid {
    pub fn new(x_min: f64, x_max: f64, count: usize) -> Result<LogGrid> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Precondition(format!("bad grid range [{x_min}, {x_max}]")));
        }
        if count < 16 || !count.is_power_of_two() {
            return Err(Error::Precondition(format!("grid count must be a power of two >= 16, got {count}")));
        }
        Ok(LogGrid { x_min, x_max, count })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.count as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.x(j)).collect()
    }

    /// `λ_j = e^{−x_j}`.
    pub fn lambdas(&self) -> Vec<f64> {
        self.points().into_iter().map(|x| (-x).exp()).collect()
    }

    /// `t_j = e^{x_j}`.
    pub fn times(&self) -> Vec<f64> {
        self.points().into_iter().map(f64::exp).collect()
    }

    /// The frequency grid of the discrete transform.
    pub fn dual(&self) -> LogGrid {
        let half = PI / self.dx();
        LogGrid { x_min: -half, x_max: half, count: self.count }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: LogGrid,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: LogGrid, values: Vec<C64>) -> Result<GridFunction> {
        if values.len() != grid.count {
            return Err(Error::Precondition(format!("{} values for a grid of {}", values.len(), grid.count)));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: LogGrid) -> GridFunction {
        GridFunction { grid, values: vec![C64::new(0.0, 0.0); grid.count] }
    }

    pub fn from_fn(grid: LogGrid, f: impl Fn(f64) -> C64) -> GridFunction {
        GridFunction { grid, values: grid.points().into_iter().map(f).collect() }
    }

    /// `L²(dx)` norm of the samples.
    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridFunction { grid: self.grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// `Φ` on the grid; the result lives on `grid.dual()`.
pub fn fourier(u: &GridFunction) -> GridFunction {
    let g = u.grid;
    let n = g.count;
    let mut buf: Vec<C64> = u.values.iter().enumerate().map(|(j, &v)| if j % 2 == 0 { v } else { -v }).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let d = g.dual();
    let s = g.dx() / (2.0 * PI).sqrt();
    let values = buf
        .into_iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(s, -g.x_min * d.x(k)))
        .collect();
    GridFunction { grid: d, values }
}

/// `Φ^{−1}`: takes samples on `grid.dual()` back to `grid`.
pub fn inverse_fourier(v: &GridFunction, grid: LogGrid) -> GridFunction {
    let n = grid.count;
    let d = grid.dual();
    let mut buf: Vec<C64> =
        v.values.iter().enumerate().map(|(k, &z)| z * C64::from_polar(1.0, grid.x_min * d.x(k))).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = d.dx() / (2.0 * PI).sqrt();
    let values = buf.into_iter().enumerate().map(|(j, z)| if j % 2 == 0 { z * s } else { -z * s }).collect();
    GridFunction { grid, values }
}

/// `∫_0^∞ e^{−tλ} f(t) dt` by quadrature.
pub fn laplace_point(f: &FunctionSpec, lambda: f64) -> Result<C64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda must be > 0, got {lambda}")));
    }
    let g = |t: f64| f.eval_re(t).map(|v| v * (-t * lambda).exp());
    let mut prev = f64::INFINITY;
    for k in 0..5 {
        let t = 40.0 * (1 << k) as f64 / lambda;
        let v = g(t)?.norm() * t;
        if !v.is_finite() || (v > prev && v > 1e-300) {
            return Err(Error::Divergence {
                endpoint: "infinity".into(),
                detail: format!("|t f(t) e^(-t lambda)| grows at t = {t:.3e}"),
            });
        }
        prev = v;
    }
    let scale = 1.0 / lambda;
    let r = quad::semi_infinite(
        |t, _| g(t).unwrap_or(C64::new(f64::NAN, 0.0)),
        0.0,
        &[scale, 4.0 * scale, 16.0 * scale],
        QuadOpts { abs_tol: 1e-16, rel_tol: 1e-12, max_level: 10 },
    );
    if !(r.value.re.is_finite() && r.value.im.is_finite()) {
        return Err(Error::Divergence { endpoint: "0".into(), detail: "integrand not finite".into() });
    }
    Ok(r.value)
}

/// The same integral for samples `f(e^{x_j})`, by the trapezoid rule in `x`.
pub fn laplace_point_grid(f: &GridFunction, lambda: f64) -> Result<C64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda must be > 0, got {lambda}")));
    }
    let g = f.grid;
    let last = f.values[g.count - 1].norm() * g.x(g.count - 1).exp() * (-lambda * g.x(g.count - 1).exp()).exp();
    if !last.is_finite() || last > 1e-8 * f.max_abs().max(1e-300) {
        return Err(Error::Divergence { endpoint: "infinity".into(), detail: "samples do not decay on the grid".into() });
    }
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let t = g.x(j).exp();
            v * (t * (-lambda * t).exp())
        })
        .sum::<C64>()
        * g.dx())
}

fn check_endpoint_decay(u: &GridFunction, what: &str) -> Result<()> {
    let m = u.max_abs();
    let n = u.values.len();
    let edge = u.values[0].norm().max(u.values[n - 1].norm());
    if m > 0.0 && edge >= 1e-8 * m {
        return Err(Error::InsufficientDecay(format!(
            "{what}: endpoint magnitude {:.2e} of max; widen the grid",
            edge / m
        )));
    }
    Ok(())
}

/// `Γ(1/2 + iξ)` on the dual grid.
fn gamma_half(d: &LogGrid, sign: f64) -> Result<Vec<C64>> {
    (0..d.count).map(|k| gamma(C64::new(0.5, sign * d.x(k)))).collect()
}

/// `L = M^{−1} J Γ M`, with `Γ(1/2+iξ)` multiplication and `J` the reflection.
///
/// `f` holds `f(t_j)`; the result holds `(Lf)(λ)` at `λ = e^{x_j}`.
pub fn laplace_via_mellin(f: &GridFunction) -> Result<GridFunction> {
    let g = f.grid;
    let uf = GridFunction { grid: g, values: f.values.iter().enumerate().map(|(j, &v)| v * (0.5 * g.x(j)).exp()).collect() };
    check_endpoint_decay(&uf, "U f")?;
    let mf = fourier(&uf);
    let d = mf.grid;
    let gam = gamma_half(&d, 1.0)?;
    let n = g.count;
    // ξ_{n−k} = −ξ_k; the k = 0 bin has no mirror and sits in the far tail
    let mut refl = vec![C64::new(0.0, 0.0); n];
    for k in 1..n {
        refl[k] = gam[n - k] * mf.values[n - k];
    }
    let v = inverse_fourier(&GridFunction { grid: d, values: refl }, g);
    let values = v.values.iter().enumerate().map(|(j, &z)| z * (-0.5 * g.x(j)).exp()).collect();
    Ok(GridFunction { grid: g, values })
}

/// Recovers `f` from `u(x) = e^{−x/2} (Lf)(e^{−x})` via `Mf = Γ(1/2+iξ)^{−1} Φu`.
///
/// The result holds `f(t_j)`, `t_j = e^{x_j}`.
pub fn reconstruct(u: &GridFunction) -> Result<GridFunction> {
    let g = u.grid;
    let phi = fourier(u);
    let d = phi.grid;
    let gam = gamma_half(&d, 1.0)?;
    let floor = 1e-13 * phi.max_abs();
    let mut mf: Vec<C64> = phi
        .values
        .iter()
        .zip(&gam)
        .map(|(&p, &gv)| if p.norm() <= floor { C64::new(0.0, 0.0) } else { p / gv })
        .collect();
    let peak = mf.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if !peak.is_finite() {
        return Err(Error::Amplification("Mellin data overflow after division by gamma".into()));
    }
    let band = g.count / 8;
    let edge = mf[..band].iter().chain(&mf[g.count - band..]).fold(0.0f64, |m, v| m.max(v.norm()));
    if peak > 0.0 && edge > 1e-6 * peak {
        return Err(Error::Amplification(format!(
            "Phi u does not decay faster than |Gamma(1/2+i xi)|: edge band at {:.2e} of peak",
            edge / peak
        )));
    }
    for v in mf.iter_mut() {
        if !v.re.is_finite() {
            *v = C64::new(0.0, 0.0);
        }
    }
    let w = inverse_fourier(&GridFunction { grid: d, values: mf }, g);
    let values = w.values.iter().enumerate().map(|(j, &z)| z * (-0.5 * g.x(j)).exp()).collect();
    Ok(GridFunction { grid: g, values })
}

/// `χ̂_n(ξ) = (2√π)^{−1} n e^{−n²ξ²/4}`.
pub fn chi_hat(n: usize, xi: f64) -> f64 {
    let n = n as f64;
    n / (2.0 * PI.sqrt()) * (-n * n * xi * xi / 4.0).exp()
}

/// `T_n = Γ* χ̂_n (Γ*)^{−1}` acting on samples over a frequency grid, where
/// `Γ*` multiplies by `Γ(1/2 − iξ)` and `χ̂_n` convolves.
#[derive(Clone, Debug)]
pub struct Mollifier {
    grid: LogGrid,
    gam: Vec<C64>,
    weights: Vec<f64>,
}

impl Mollifier {
    pub fn new(n: usize, grid: LogGrid) -> Result<Mollifier> {
        if n == 0 {
            return Err(Error::Precondition("mollifier index must be >= 1".into()));
        }
        let gam = gamma_half(&grid, -1.0)?;
        let h = grid.dx();
        let mut weights = Vec::new();
        for m in 0..grid.count {
            let w = chi_hat(n, m as f64 * h) * h;
            // neighbour ratios of Γ are at most e^{π|Δ|/2}
            if m > 0 && w * (PI * m as f64 * h / 2.0).exp() < 1e-18 {
                break;
            }
            weights.push(w);
        }
        Ok(Mollifier { grid, gam, weights })
    }

    fn band(&self, src: &[C64]) -> Vec<C64> {
        let n = src.len();
        let b = self.weights.len() as isize;
        (0..n as isize)
            .map(|k| {
                let lo = (k - b + 1).max(0);
                let hi = (k + b - 1).min(n as isize - 1);
                (lo..=hi).map(|m| src[m as usize] * self.weights[(k - m).unsigned_abs()]).sum()
            })
            .collect()
    }

    pub fn apply(&self, g: &GridFunction) -> GridFunction {
        let h: Vec<C64> = g.values.iter().zip(&self.gam).map(|(v, gv)| v / gv).collect();
        let c = self.band(&h);
        GridFunction { grid: self.grid, values: c.into_iter().zip(&self.gam).map(|(v, gv)| v * gv).collect() }
    }

    pub fn apply_adjoint(&self, g: &GridFunction) -> GridFunction {
        let h: Vec<C64> = g.values.iter().zip(&self.gam).map(|(v, gv)| v * gv.conj()).collect();
        let c = self.band(&h);
        GridFunction { grid: self.grid, values: c.into_iter().zip(&self.gam).map(|(v, gv)| v / gv.conj()).collect() }
    }

    /// Largest of a 30-step power iteration on `T*T` and 200 random ratios.
    pub fn norm_estimate(&self, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = |rng: &mut ChaCha8Rng| {
            let values = (0..self.grid.count).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            GridFunction { grid: self.grid, values }
        };
        let mut best = 0.0f64;
        let mut v = random(&mut rng);
        let mut prev = 0.0;
        for _ in 0..30 {
            let nv = v.norm();
            v.values.iter_mut().for_each(|z| *z /= nv);
            let tv = self.apply(&v);
            let est = tv.norm();
            best = best.max(est);
            if (est - prev).abs() <= 1e-6 * est {
                break;
            }
            prev = est;
            v = self.apply_adjoint(&tv);
        }
        for _ in 0..200 {
            let g = random(&mut rng);
            best = best.max(self.apply(&g).norm() / g.norm());
        }
        best
    }
}

/// `T_n g` for `g` sampled on a frequency grid.
pub fn mollifier_tn(n: usize, g: &GridFunction) -> Result<GridFunction> {
    Ok(Mollifier::new(n, g.grid)?.apply(g))
}

/// `s(x) · Φ^{−1}(v(ξ) f(ξ))`. `f` lives on the frequency grid; the result on
/// the matching `x`-grid.
pub fn sandwiched_apply(
    s: impl Fn(f64) -> C64,
    v: impl Fn(f64) -> C64,
    f: &GridFunction,
) -> GridFunction {
    let d = f.grid;
    let n = d.count;
    let dxi = d.dx();
    let h = 2.0 * PI / (n as f64 * dxi);
    let x_grid = LogGrid { x_min: -h * (n / 2) as f64, x_max: h * (n / 2) as f64, count: n };
    let vf = GridFunction { grid: d, values: f.values.iter().enumerate().map(|(k, &z)| v(d.x(k)) * z).collect() };
    let w = inverse_fourier(&vf, x_grid);
    check_growth(&s, &x_grid);
    let values = w.values.iter().enumerate().map(|(j, &z)| s(x_grid.x(j)) * z).collect();
    GridFunction { grid: x_grid, values }
}

// Warns when s looks super-polynomial: the log-log slope between |x| = X/4
// and |x| = X exceeds 8.
fn check_growth(s: &impl Fn(f64) -> C64, g: &LogGrid) {
    let xe = g.x_max.abs().min(g.x_min.abs());
    if xe <= 4.0 {
        return;
    }
    for sign in [-1.0, 1.0] {
        let (a, b) = (s(sign * xe / 4.0).norm(), s(sign * xe).norm());
        if a > 0.0 && b > 0.0 {
            let k = (b / a).ln() / ((1.0 + xe) / (1.0 + xe / 4.0)).ln();
            if k > 8.0 {
                log::warn!("sandwiched_apply: |s(x)| grows like |x|^{k:.1} near x = {}", sign * xe);
            }
        }
    }
}
