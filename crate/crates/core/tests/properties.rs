//! Property tests for the structural laws each module promises.

mod common;

use std::f64::consts::{PI, TAU};

use hankel_core::form::{form_direct_polar, form_sigma, form_sigma_polar, min_power, Piece};
use hankel_core::galerkin::section_study;
use hankel_core::kernel::{FiniteRankTerm, Term};
use hankel_core::predict::{critical_coupling, predict_finite_rank, predict_perturbed, predict_quasi_carleman};
use hankel_core::sigma::{
    sigma_of_kernel, sigma_pair, sign_matrix, sign_matrix_tilde, DEFAULT_INERTIA_TOL,
};
use hankel_core::special::{gamma, FunctionSpec};
use hankel_core::transform::{fourier, GridFunction, LogGrid};
use hankel_core::{Kernel, NegCount, QuasiCarlemanTerm, TestFunction, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// Expressions analytic near the jet centre used below.
fn expr() -> impl Strategy<Value = FunctionSpec> {
    let leaf = prop_oneof![
        Just(FunctionSpec::var()),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b)| FunctionSpec::constant(c(a, b))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(|a| (FunctionSpec::real(0.3) * a).exp()),
            (1.5..3.0f64).prop_map(|s| FunctionSpec::shifted(s).recip()),
            (1.5..3.0f64, -1.5..1.5f64).prop_map(|(s, p)| FunctionSpec::shifted(s).powf(p)),
            (1.5..3.0f64).prop_map(|s| FunctionSpec::shifted(s).ln()),
        ]
    })
}

fn mono_fn() -> impl Strategy<Value = TestFunction> {
    prop::collection::vec((0.2..1.0f64, 0.0..TAU, 0u32..=3, 0.5..2.0f64), 1..=3).prop_map(|v| {
        TestFunction::Pieces(
            v.into_iter()
                .map(|(m, ph, power, rate)| Piece::Mono { coef: C64::from_polar(m, ph), power, rate })
                .collect(),
        )
    })
}

fn real_poly() -> impl Strategy<Value = Vec<C64>> {
    (0usize..=6, any::<u64>()).prop_map(|(k, seed)| common::real_poly(&mut ChaCha8Rng::seed_from_u64(seed), k))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn jet_product_rule(f in expr(), g in expr(), order in 0usize..=8) {
        let z0 = c(1.3, 0.2);
        let lhs = (f.clone() * g.clone()).jet(z0, order).unwrap();
        let rhs = f.jet(z0, order).unwrap().mul(&g.jet(z0, order).unwrap());
        let scale = rhs.coeffs.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        for (a, b) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn gamma_reflection(x in -4.5..4.5f64, y in -3.0..3.0f64) {
        let z = c(x, y);
        prop_assume!((x - x.round()).abs() > 0.05 || y.abs() > 0.05);
        let lhs = gamma(z).unwrap() * gamma(c(1.0, 0.0) - z).unwrap();
        let rhs = PI / (z * PI).sin();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn self_adjoint_kernels_are_real(seed in any::<u64>(), t in 0.01..20.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = common::finite_rank_kernel(&mut rng);
        let k = v.plus(&Kernel::quasi_carleman(1.3, 0.7, 0.5, 0.2).unwrap()).unwrap();
        let x = k.eval(t).unwrap();
        prop_assert!(x.is_finite());
        // the real-valued combination agrees with summing the complex terms
        let direct: C64 = v.finite_terms().map(|f| f.eval(t)).sum();
        prop_assert!(direct.im.abs() <= 1e-12 * direct.norm().max(1e-300));
    }

    #[test]
    fn sign_matrix_laws(p in real_poly(), beta in 0.3..3.0f64, im in 0.2..1.5f64) {
        let k = p.len() - 1;
        let s = sign_matrix(&p, c(beta, 0.0)).unwrap();
        for l in 0..=k {
            for m in 0..=k {
                if l + m > k {
                    prop_assert!(s.entries[(l, m)].norm() <= 1e-12);
                }
            }
        }
        let (np, nm) = if k % 2 == 1 {
            (k.div_ceil(2), k.div_ceil(2))
        } else if p[k].re > 0.0 {
            (k / 2 + 1, k / 2)
        } else {
            (k / 2, k / 2 + 1)
        };
        prop_assert_eq!((s.inertia.n_plus, s.inertia.n_minus), (np, nm));
        let pc: Vec<C64> = p.iter().map(|z| z + c(0.0, 0.4)).collect();
        let b = c(beta, im);
        let s1 = sign_matrix(&pc, b).unwrap().entries;
        let s2 = sign_matrix(&pc.iter().map(|z| z.conj()).collect::<Vec<_>>(), b.conj()).unwrap().entries;
        let scale = s1.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for (x, y) in s2.iter().zip(s1.adjoint().iter()) {
            prop_assert!((x - y).norm() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn pairing_matches_direct_form(j in 0usize..=4, beta in 0.4..2.5f64, f in mono_fn()) {
        let mut poly = vec![c(0.0, 0.0); j + 1];
        poly[j] = c(1.0, 0.0);
        let k = Kernel::finite_rank(poly, c(beta, 0.0)).unwrap();
        let w = f.laplace().unwrap();
        let s = sigma_pair(&sigma_of_kernel(&k).unwrap(), &w, &w).unwrap();
        let d = form_direct_polar(&k, &f, &f).unwrap();
        prop_assert!((s - d).norm() <= 1e-8 * d.norm().max(1e-12), "{s} vs {d}");
    }

    #[test]
    fn positive_exponents_give_positive_forms(
        q in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0, 3.0]),
        alpha in prop::sample::select(vec![0.0, 1.0]),
        r in prop::sample::select(vec![0.0, 1.0]),
        seed in any::<u64>(),
    ) {
        let k = Kernel::quasi_carleman(1.0, q, alpha, r).unwrap();
        let f = TestFunction::random(&mut ChaCha8Rng::seed_from_u64(seed), min_power(q, r));
        prop_assert!(form_sigma(&k, &f).unwrap() >= -1e-10);
    }

    #[test]
    fn polarized_form_is_hermitian_sesquilinear(
        f in mono_fn(), g in mono_fn(), h in mono_fn(), a in -2.0..2.0f64, b in -2.0..2.0f64,
    ) {
        let k = Kernel::quasi_carleman(1.0, 1.0, 1.0, 0.5).unwrap();
        let fg = form_sigma_polar(&k, &f, &g).unwrap();
        let gf = form_sigma_polar(&k, &g, &f).unwrap();
        prop_assert!((fg - gf.conj()).norm() <= 1e-12 * fg.norm().max(1.0));
        let s = c(a, b);
        let lin = form_sigma_polar(&k, &f, &g.scaled(s).plus(&h).unwrap()).unwrap();
        let want = s * fg + form_sigma_polar(&k, &f, &h).unwrap();
        prop_assert!((lin - want).norm() <= 1e-12 * want.norm().max(1.0));
        let anti = form_sigma_polar(&k, &f.scaled(s), &g).unwrap();
        prop_assert!((anti - s.conj() * fg).norm() <= 1e-12 * fg.norm().max(1.0));
    }

    #[test]
    fn parseval_on_the_grid(a in -5.0..5.0f64, s in 0.3..3.0f64, w in -3.0..3.0f64) {
        let g = LogGrid::new(-30.0, 30.0, 2048).unwrap();
        let u = GridFunction::from_fn(g, |x| C64::from_polar((-(x - a).powi(2) / (2.0 * s * s)).exp(), w * x));
        let p = fourier(&u);
        prop_assert!((p.norm() - u.norm()).abs() <= 1e-10 * u.norm());
    }

    #[test]
    fn indicator_transform(a in 0.0..3.0f64, len in 0.05..4.0f64, lambda in 0.1..10.0f64) {
        let b = a + len;
        let f = TestFunction::indicator(a, b).laplace().unwrap();
        let got = f.eval_re(lambda).unwrap() * lambda;
        let want = (-a * lambda).exp() - (-b * lambda).exp();
        prop_assert!((got.re - want).abs() <= 1e-12 && got.im.abs() <= 1e-12);
    }

    #[test]
    fn sign_inertia_adds_up_to_rank(seed in any::<u64>()) {
        let v = common::finite_rank_kernel(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut plus = 0;
        let mut minus = 0;
        for t in v.finite_terms() {
            if t.beta.im == 0.0 {
                let s = sign_matrix(&t.poly, t.beta).unwrap();
                plus += s.inertia.n_plus;
                minus += s.inertia.n_minus;
            } else if t.beta.im > 0.0 {
                let s = sign_matrix_tilde(&t.poly, t.beta).unwrap();
                plus += s.inertia.n_plus;
                minus += s.inertia.n_minus;
            }
        }
        let p = predict_finite_rank(&v).unwrap();
        prop_assert_eq!(p.n_minus, NegCount::Finite(minus));
        prop_assert_eq!(Some(plus + minus), p.rank);
        prop_assert_eq!(Some(plus + minus), v.rank());
    }

    #[test]
    fn nested_sections_are_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = common::finite_rank_kernel(&mut rng);
        for k in [v.clone(), Kernel::carleman().plus(&v).unwrap()] {
            let st = section_study(&k, &[4, 8, 16, 32], DEFAULT_INERTIA_TOL).unwrap();
            prop_assert!(st.n_minus.windows(2).all(|w| w[1] >= w[0]), "{:?}", st.n_minus);
            // eigenvalues are accurate to ε‖H‖, not relative to themselves
            let norm = st.max_eig.iter().chain(&st.min_eig).fold(0.0f64, |m, e| m.max(e.abs()));
            prop_assert!(st.max_eig.windows(2).all(|w| w[1] >= w[0] - 1e-12 * norm), "{:?}", st.max_eig);
        }
    }
}

#[test]
fn singular_counts_follow_the_sign_law() {
    let mut k = 0.3;
    while k < 4.75 {
        for v0 in [1.0, -1.0] {
            let p = predict_perturbed(&Kernel::carleman(), &QuasiCarlemanTerm::perturbation(v0, k, 1.0, 0.0)).unwrap();
            let hkl = predict_quasi_carleman(-k).unwrap();
            // V alone (as a multiple of the quasi-Carleman kernel) has N₋
            // given by the sign rule; a positive regular H₀ keeps it.
            let alone = if v0 > 0.0 { hkl.n_minus } else { hkl.n_plus };
            assert_eq!(p.n_minus, alone, "k={k} v0={v0}");
        }
        k += 0.2;
    }
}

#[test]
fn critical_coupling_grows_with_rho() {
    let sigma0 = sigma_of_kernel(&Kernel::carleman()).unwrap();
    for k in [-1.5, -2.0, -3.3] {
        let mut last = 0.0;
        for i in 1..=12 {
            let rho = 0.25 * i as f64;
            let nu = critical_coupling(&sigma0, k, 1.0, rho).unwrap();
            assert!(nu >= last - 1e-12, "k={k} rho={rho}: {nu} < {last}");
            last = nu;
        }
    }
}

#[test]
fn finite_rank_terms_of_integer_powers() {
    // (t+1)² e^{−t} expands into a finite-rank kernel of rank 3
    let k = Kernel::perturbation(1.0, 2.0, 1.0, 1.0).unwrap();
    assert!(k.is_finite_rank());
    assert_eq!(k.rank(), Some(3));
    let t = match &k.terms()[0] {
        Term::FiniteRank(t) => t.clone(),
        _ => unreachable!(),
    };
    assert_eq!(t, FiniteRankTerm::real(&[1.0, 2.0, 1.0], 1.0));
}
