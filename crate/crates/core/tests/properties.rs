use fsav_nls::diagnostics::{discrete_mass, error_between_runs};
use fsav_nls::fsav::{apply_a, apply_a_inverse, rank_one_solve, run, PairField, SchemeConfig, Workspace};
use fsav_nls::spectral::{build_symbol, inner_product, Transform};
use fsav_nls::{GridSpec, ModelParams, RealField, SavState};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (2usize..6, 0.5f64..20.0).prop_map(|(e, l)| GridSpec::one_d(-l, l, 1 << e).unwrap()),
        (2usize..4, 0.5f64..5.0).prop_map(|(e, l)| GridSpec::two_d(-l, l, 1 << e).unwrap()),
    ]
}

fn case() -> impl Strategy<Value = (GridSpec, f64, f64, Vec<f64>, Vec<f64>)> {
    (grid_strategy(), 1.01f64..=2.0, 0.1f64..3.0).prop_flat_map(|(g, a, gam)| {
        let n = g.len();
        (Just(g), Just(a), Just(gam), field(n), field(n))
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_is_symmetric((g, a, gam, u, v) in case()) {
        let s = build_symbol(&g, a, gam).unwrap();
        let mut t = Transform::new(&g);
        let du = t.apply_operator(&u, &s).unwrap();
        let dv = t.apply_operator(&v, &s).unwrap();
        let lhs = inner_product(&du, &v, &g).unwrap();
        let rhs = inner_product(&u, &dv, &g).unwrap();
        let scale = inner_product(&du, &du, &g).unwrap().sqrt() * inner_product(&v, &v, &g).unwrap().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale.max(1e-300));
    }

    #[test]
    fn operator_is_negative_semidefinite((g, a, gam, u, _v) in case()) {
        let s = build_symbol(&g, a, gam).unwrap();
        let du = Transform::new(&g).apply_operator(&u, &s).unwrap();
        prop_assert!(inner_product(&du, &u, &g).unwrap() <= 1e-12);
    }

    #[test]
    fn operator_output_is_real((g, a, gam, u, _v) in case()) {
        let s = build_symbol(&g, a, gam).unwrap();
        let (_, residue) = Transform::new(&g).apply_operator_with_residue(&u, &s).unwrap();
        prop_assert!(residue <= 1e-12 * max_abs(&u).max(1.0));
    }

    #[test]
    fn plancherel((g, _a, _gam, u, _v) in case()) {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Transform::new(&g).forward(&mut buf);
        let spectral: f64 = buf.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.len() as f64;
        let physical = inner_product(&u, &u, &g).unwrap() / g.cell_volume();
        prop_assert!((spectral - physical).abs() <= 1e-12 * physical.max(1e-300));
    }

    #[test]
    fn operator_is_linear((g, a, gam, u, v) in case(), c in -3.0f64..3.0) {
        let s = build_symbol(&g, a, gam).unwrap();
        let mut t = Transform::new(&g);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| c * x + y).collect();
        let lhs = t.apply_operator(&combo, &s).unwrap();
        let du = t.apply_operator(&u, &s).unwrap();
        let dv = t.apply_operator(&v, &s).unwrap();
        let rhs: Vec<f64> = du.iter().zip(dv.iter()).map(|(x, y)| c * x + y).collect();
        let scale = max_abs(&rhs).max(max_abs(&lhs)).max(1e-12);
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x - y).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn a_inverse_superposition((g, a, gam, u, v) in case(), tau in 1e-4f64..1.0) {
        let s = build_symbol(&g, a, gam).unwrap();
        let mut ws = Workspace::new(&g);
        let z1 = PairField { p: RealField(u.clone()), q: RealField(v.clone()) };
        let z2 = PairField { p: RealField(v), q: RealField(u) };
        let sum = z1.combine(2.0, &z2, -1.0).unwrap();
        let lhs = apply_a_inverse(&sum, tau, &s, &mut ws).unwrap();
        let r1 = apply_a_inverse(&z1, tau, &s, &mut ws).unwrap();
        let r2 = apply_a_inverse(&z2, tau, &s, &mut ws).unwrap();
        let rhs = r1.combine(2.0, &r2, -1.0).unwrap();
        prop_assert!(lhs.combine(1.0, &rhs, -1.0).unwrap().max_abs() <= 1e-12 * sum.max_abs().max(1e-12));
        let back = apply_a(&lhs, tau, &s, &mut ws).unwrap();
        prop_assert!(back.combine(1.0, &sum, -1.0).unwrap().max_abs() <= 1e-12 * sum.max_abs().max(1e-12));
    }

    #[test]
    fn rank_one_s_is_consistent((g, a, gam, u, v) in case(), tau in 1e-3f64..0.5) {
        let s = build_symbol(&g, a, gam).unwrap();
        let mut ws = Workspace::new(&g);
        let c = PairField { p: RealField(u.clone()), q: RealField(v.clone()) };
        let b = PairField {
            p: RealField(u.iter().map(|x| x * x).collect()),
            q: RealField(v.iter().map(|x| 0.5 * x).collect()),
        };
        let b_r = PairField { p: b.q.clone(), q: RealField(b.p.iter().map(|x| -x).collect()) };
        let sol = rank_one_solve(&c, &b, &b_r, tau, &s, 1e-12, &mut ws).unwrap();
        let direct = b.inner(&sol.z, &g).unwrap();
        prop_assert!((sol.s - direct).abs() <= 1e-10 * sol.s.abs().max(1.0));
        let bb = b.inner(&b, &g).unwrap();
        prop_assert!(sol.chi <= 1e-12 * bb.max(1.0));
        prop_assert!(sol.chi >= -0.5 * bb - 1e-12 * bb.max(1.0));
    }

    #[test]
    fn error_is_a_metric((g, _a, _gam, u, v) in case(), w in field(1), shift in -1.0f64..1.0) {
        let n = g.len();
        let x = PairField { p: RealField(u.clone()), q: RealField(v.clone()) };
        let y = PairField { p: RealField(v.clone()), q: RealField(u.iter().map(|t| t + w[0]).collect()) };
        let z = PairField { p: RealField(u.iter().map(|t| t * shift).collect()), q: RealField::constant(n, shift) };
        let d = |a: &PairField, b: &PairField| error_between_runs(a, &g, b, &g).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-15);
        if x != y {
            prop_assert!(d(&x, &y) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_runs_keep_mass((g, a, gam, u, v) in case(), tau in 1e-3f64..0.1) {
        let mut params = ModelParams::free(&g, a, gam, 0.0).unwrap();
        params.c0 = 1.0;
        let state = SavState::initial(RealField(u), RealField(v), &params, &g).unwrap();
        let m0 = discrete_mass(&state.p, &state.q, &g).unwrap();
        let t_end = 20.0 * tau;
        let out = run(state, &params, &g, &SchemeConfig::new(tau).unwrap(), t_end, 1, &mut []).unwrap();
        let m1 = discrete_mass(&out.state.p, &out.state.q, &g).unwrap();
        prop_assert!(((m1 - m0) / m0).abs() <= 1e-11);
    }
}
