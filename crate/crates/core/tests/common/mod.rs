//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use hankel_core::kernel::{FiniteRankTerm, Term};
use hankel_core::{Kernel, C64};
use rand::Rng;

/// A real polynomial of degree `k` with coefficients in `[−3, 3]` and a
/// leading coefficient of magnitude at least 0.5.
pub fn real_poly<R: Rng>(rng: &mut R, k: usize) -> Vec<C64> {
    let mut p: Vec<C64> = (0..=k).map(|_| C64::new(rng.gen_range(-3.0..3.0), 0.0)).collect();
    let lead = rng.gen_range(0.5..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    p[k] = C64::new(lead, 0.0);
    p
}

fn complex_poly<R: Rng>(rng: &mut R, k: usize) -> Vec<C64> {
    let mut p: Vec<C64> =
        (0..=k).map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
    p[k] = C64::from_polar(rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
    p
}

/// `Σ P_m(t) e^{−β_m t}` with at most two real exponents, at most one
/// conjugate pair, degrees at most 3.
pub fn finite_rank_kernel<R: Rng>(rng: &mut R) -> Kernel {
    loop {
        let m0 = rng.gen_range(0..=2);
        let m1 = rng.gen_range(0..=1);
        if m0 + m1 == 0 {
            continue;
        }
        let mut terms = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        while betas.len() < m0 {
            let b = rng.gen_range(0.5..3.0);
            if betas.iter().all(|&o| (o - b).abs() > 0.3) {
                betas.push(b);
            }
        }
        for &b in &betas {
            let k = rng.gen_range(0..=3);
            terms.push(Term::FiniteRank(FiniteRankTerm::new(real_poly(rng, k), C64::new(b, 0.0))));
        }
        if m1 == 1 {
            let k = rng.gen_range(0..=3);
            let beta = C64::new(rng.gen_range(0.5..2.0), rng.gen_range(0.3..2.0));
            let t = FiniteRankTerm::new(complex_poly(rng, k), beta);
            terms.push(Term::FiniteRank(t.conj()));
            terms.push(Term::FiniteRank(t));
        }
        return Kernel::new(terms).expect("valid finite-rank kernel");
    }
}
