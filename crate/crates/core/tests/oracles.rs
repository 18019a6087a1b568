mod common;

use common::*;
use fsav_nls::diagnostics::{modified_energy, modified_energy_unweighted};
use fsav_nls::fsav::{apply_a, apply_a_inverse, assemble_rhs, rank_one_solve, step_fsav, PairField, SchemeConfig, Workspace};
use fsav_nls::sav::{compute_b, extrapolate, init_w};
use fsav_nls::spectral::{build_symbol, inner_product, Transform};
use fsav_nls::{Axis, GridSpec, ModelParams, RealField, SavState};
use nalgebra::DVector;
use std::f64::consts::PI;

#[test]
fn operator_matches_dense_matrix_1d() {
    let mut r = rng(11);
    for (alpha, gamma) in [(1.7, 1.0), (1.2, 0.4), (2.0, 1.0)] {
        let g = GridSpec::one_d(-3.0, 5.0, 8).unwrap();
        let s = build_symbol(&g, alpha, gamma).unwrap();
        let d = dense_operator(&g, alpha, gamma);
        let mut t = Transform::new(&g);
        for _ in 0..5 {
            let v = random_field(&mut r, 8);
            let fast = t.apply_operator(&v, &s).unwrap();
            let dense = &d * vector(&v);
            assert!(rel_max_diff(&fast, dense.as_slice()) <= 1e-11, "alpha {alpha}");
        }
    }
}

#[test]
fn operator_matches_dense_matrix_2d() {
    let mut r = rng(12);
    let g = GridSpec::new(vec![Axis::new(-2.0, 2.0, 8).unwrap(), Axis::new(0.0, 3.0, 6).unwrap()]).unwrap();
    let s = build_symbol(&g, 1.6, 0.8).unwrap();
    let d = dense_operator(&g, 1.6, 0.8);
    let mut t = Transform::new(&g);
    for _ in 0..5 {
        let v = random_field(&mut r, g.len());
        let fast = t.apply_operator(&v, &s).unwrap();
        assert!(rel_max_diff(&fast, (&d * vector(&v)).as_slice()) <= 1e-11);
    }
}

#[test]
fn mode_two_eigenvalue_at_alpha_one_and_a_half() {
    let g = GridSpec::one_d(-16.0, 16.0, 8).unwrap();
    let ax = g.axis(0);
    assert!((ax.mu - PI / 16.0).abs() < 1e-15);
    let s = build_symbol(&g, 1.5, 1.0).unwrap();
    let expected = -(PI / 8.0).powf(1.5);
    assert!((s.values()[2] - expected).abs() < 1e-14);
    assert_eq!(s.values()[2], s.values()[6]);

    let v = g.sample(|x| (2.0 * ax.mu * (x[0] - ax.x_left)).cos());
    let dv = dense_operator(&g, 1.5, 1.0) * vector(&v);
    for j in 0..8 {
        assert!((dv[j] - expected * v[j]).abs() < 1e-12);
    }
    let fast = Transform::new(&g).apply_operator(&v, &s).unwrap();
    assert!(rel_max_diff(&fast, dv.as_slice()) < 1e-12);
}

#[test]
fn second_order_reduction() {
    let g = GridSpec::one_d(0.0, 2.0 * PI, 64).unwrap();
    let s = build_symbol(&g, 2.0, 1.0).unwrap();
    let u = g.sample(|x| (x[0].cos()).exp() + (3.0 * x[0]).sin());
    let exact = g.sample(|x| {
        let c = x[0].cos();
        c.exp() * (x[0].sin().powi(2) - c) - 9.0 * (3.0 * x[0]).sin()
    });
    let out = Transform::new(&g).apply_operator(&u, &s).unwrap();
    assert!(out.combine(1.0, &exact, -1.0).unwrap().max_abs() <= 1e-10);
}

fn weighted_row(b: &PairField, grid: &GridSpec) -> DVector<f64> {
    stack(b) * grid.cell_volume()
}

#[test]
fn rank_one_solve_matches_dense_direct_solve() {
    let mut r = rng(13);
    for g in [
        GridSpec::one_d(-4.0, 4.0, 8).unwrap(),
        GridSpec::two_d(-1.0, 1.0, 8).unwrap(),
    ] {
        let n = g.len();
        let (alpha, gamma, tau) = (1.7, 1.0, 0.1);
        let s = build_symbol(&g, alpha, gamma).unwrap();
        let d = dense_operator(&g, alpha, gamma);
        let mut ws = Workspace::new(&g);
        for _ in 0..4 {
            let c = random_pair(&mut r, n);
            let b = random_pair(&mut r, n);
            let b_r = PairField {
                p: b.q.clone(),
                q: RealField(b.p.iter().map(|v| -v).collect()),
            };
            let sol = rank_one_solve(&c, &b, &b_r, tau, &s, 1e-12, &mut ws).unwrap();

            let m = dense_a(&d, tau) + stack(&b_r) * weighted_row(&b, &g).transpose() * (0.25 * tau);
            let z = m.lu().solve(&stack(&c)).unwrap();
            assert!(rel_max_diff(stack(&sol.z).as_slice(), z.as_slice()) <= 1e-10);
            let s_dense = weighted_row(&b, &g).dot(&z);
            assert!((sol.s - s_dense).abs() <= 1e-10 * s_dense.abs().max(1.0));
        }
    }
}

#[test]
fn rhs_matches_literal_transcription() {
    let mut r = rng(14);
    for g in [
        GridSpec::one_d(-4.0, 4.0, 8).unwrap(),
        GridSpec::two_d(-2.0, 2.0, 8).unwrap(),
    ] {
        let n = g.len();
        let (alpha, tau) = (1.4, 0.05);
        let s = build_symbol(&g, alpha, 1.0).unwrap();
        let d = dense_operator(&g, alpha, 1.0);
        let mut ws = Workspace::new(&g);
        let z = random_pair(&mut r, n);
        let prev = random_pair(&mut r, n);
        let state = SavState {
            p: z.p.clone(),
            q: z.q.clone(),
            w: 0.7,
            p_prev: prev.p,
            q_prev: prev.q,
            t: 0.0,
            step_index: 3,
        };
        let b1 = random_field(&mut r, n);
        let b2 = random_field(&mut r, n);
        let c = assemble_rhs(&state, &b1, &b2, tau, &s, &mut ws).unwrap();

        let dp = &d * vector(&state.p);
        let dq = &d * vector(&state.q);
        let bracket = inner_product(&b1, &state.p, &g).unwrap() + inner_product(&b2, &state.q, &g).unwrap();
        let c1: Vec<f64> = (0..n)
            .map(|j| state.p[j] - tau / 2.0 * dq[j] - tau * b2[j] * state.w + tau / 4.0 * b2[j] * bracket)
            .collect();
        let c2: Vec<f64> = (0..n)
            .map(|j| state.q[j] + tau / 2.0 * dp[j] + tau * b1[j] * state.w - tau / 4.0 * b1[j] * bracket)
            .collect();
        assert!(rel_max_diff(&c.p, &c1) <= 1e-12);
        assert!(rel_max_diff(&c.q, &c2) <= 1e-12);
    }
}

#[test]
fn a_times_a_inverse_is_identity() {
    let mut r = rng(15);
    for g in [
        GridSpec::one_d(-16.0, 16.0, 64).unwrap(),
        GridSpec::two_d(-8.0, 8.0, 32).unwrap(),
        GridSpec::new(vec![Axis::new(0.0, 1.0, 16).unwrap(), Axis::new(0.0, 2.0, 8).unwrap()]).unwrap(),
    ] {
        let s = build_symbol(&g, 1.9, 1.0).unwrap();
        let mut ws = Workspace::new(&g);
        for tau in [1e-3, 0.1, 10.0] {
            let z = random_pair(&mut r, g.len());
            let y = apply_a_inverse(&z, tau, &s, &mut ws).unwrap();
            let back = apply_a(&y, tau, &s, &mut ws).unwrap();
            assert!(back.combine(1.0, &z, -1.0).unwrap().max_abs() <= 1e-12 * z.max_abs());
        }
    }
}

#[test]
fn a_inverse_matches_dense_a() {
    let mut r = rng(16);
    for g in [GridSpec::one_d(-4.0, 4.0, 8).unwrap(), GridSpec::two_d(-4.0, 4.0, 8).unwrap()] {
        let s = build_symbol(&g, 1.3, 1.0).unwrap();
        let a = dense_a(&dense_operator(&g, 1.3, 1.0), 0.2);
        let mut ws = Workspace::new(&g);
        let z = random_pair(&mut r, g.len());
        let y = apply_a_inverse(&z, 0.2, &s, &mut ws).unwrap();
        let residual = &a * stack(&y) - stack(&z);
        assert!(residual.amax() <= 1e-12 * z.max_abs());
    }
}

#[test]
fn modified_energy_matches_dense_quadratic_form() {
    let mut r = rng(17);
    for g in [GridSpec::one_d(-4.0, 4.0, 8).unwrap(), GridSpec::two_d(-3.0, 3.0, 8).unwrap()] {
        let s = build_symbol(&g, 1.5, 1.2).unwrap();
        let d = dense_operator(&g, 1.5, 1.2);
        let mut t = Transform::new(&g);
        let z = random_pair(&mut r, g.len());
        let state = SavState {
            p_prev: z.p.clone(),
            q_prev: z.q.clone(),
            p: z.p,
            q: z.q,
            w: 0.9,
            t: 0.0,
            step_index: 0,
        };
        let (p, q) = (vector(&state.p), vector(&state.q));
        let form = p.dot(&(&d * &p)) + q.dot(&(&d * &q));
        let h = g.cell_volume();
        let dense = 0.5 * h * form + state.w * state.w;
        let fast = modified_energy(&state, &s, &mut t).unwrap();
        assert!((fast - dense).abs() <= 1e-12 * dense.abs().max(1.0));
        let unweighted = modified_energy_unweighted(&state, &s, &mut t).unwrap();
        let dense_u = 0.5 * form + state.w * state.w / h;
        assert!((unweighted - dense_u).abs() <= 1e-12 * dense_u.abs().max(1.0));
    }
}

#[test]
fn zero_field_energy_is_w_squared() {
    let g = GridSpec::one_d(-4.0, 4.0, 8).unwrap();
    let s = build_symbol(&g, 1.5, 1.0).unwrap();
    let z = RealField::zeros(8);
    let state = SavState {
        p: z.clone(),
        q: z.clone(),
        w: 1.0,
        p_prev: z.clone(),
        q_prev: z,
        t: 0.0,
        step_index: 0,
    };
    assert_eq!(modified_energy(&state, &s, &mut Transform::new(&g)).unwrap(), 1.0);
}

#[test]
fn full_step_matches_dense_coupled_system() {
    // Unknowns (P^{m+1}, Q^{m+1}, w^{m+1}) of the three coupled equations,
    // solved without eliminating w.
    let mut r = rng(18);
    let g = GridSpec::one_d(-3.0, 3.0, 8).unwrap();
    let n = 8;
    let params = ModelParams::new(&g, 1.8, 1.1, 1.5, random_field(&mut r, n), 0.3).unwrap();
    let s = build_symbol(&g, 1.8, 1.1).unwrap();
    let d = dense_operator(&g, 1.8, 1.1);
    let tau = 0.05;
    let now = random_pair(&mut r, n);
    let prev = random_pair(&mut r, n);
    let state = SavState {
        w: init_w(&now.p, &now.q, &params, &g).unwrap(),
        p: now.p,
        q: now.q,
        p_prev: prev.p,
        q_prev: prev.q,
        t: 0.3,
        step_index: 6,
    };
    let (next, _) = step_fsav(&state, &params, &s, &SchemeConfig::new(tau).unwrap(), &mut Workspace::new(&g)).unwrap();

    let pb = extrapolate(&state.p, &state.p_prev).unwrap();
    let qb = extrapolate(&state.q, &state.q_prev).unwrap();
    let (b1, b2) = compute_b(&pb, &qb, &params, &g).unwrap();
    let h = g.cell_volume();
    let size = 2 * n + 1;
    let mut m = nalgebra::DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    let (p0, q0) = (vector(&state.p), vector(&state.q));
    let dp0 = &d * &p0;
    let dq0 = &d * &q0;
    for j in 0..n {
        // (P' - P)/τ = -D(Q'+Q)/2 - B₂(w'+w)/2
        m[(j, j)] = 1.0 / tau;
        for l in 0..n {
            m[(j, n + l)] += 0.5 * d[(j, l)];
        }
        m[(j, 2 * n)] = 0.5 * b2[j];
        rhs[j] = p0[j] / tau - 0.5 * dq0[j] - 0.5 * b2[j] * state.w;
        // (Q' - Q)/τ = D(P'+P)/2 + B₁(w'+w)/2
        m[(n + j, n + j)] = 1.0 / tau;
        for l in 0..n {
            m[(n + j, l)] -= 0.5 * d[(j, l)];
        }
        m[(n + j, 2 * n)] = -0.5 * b1[j];
        rhs[n + j] = q0[j] / tau + 0.5 * dp0[j] + 0.5 * b1[j] * state.w;
        // w' - w = ½(B₁, P' - P) + ½(B₂, Q' - Q)
        m[(2 * n, j)] = -0.5 * h * b1[j];
        m[(2 * n, n + j)] = -0.5 * h * b2[j];
    }
    m[(2 * n, 2 * n)] = 1.0;
    rhs[2 * n] = state.w - 0.5 * h * (b1.iter().zip(state.p.iter()).map(|(a, b)| a * b).sum::<f64>()
        + b2.iter().zip(state.q.iter()).map(|(a, b)| a * b).sum::<f64>());
    let x = m.lu().solve(&rhs).unwrap();
    let mut fast = next.p.to_vec();
    fast.extend_from_slice(&next.q);
    fast.push(next.w);
    assert!(rel_max_diff(&fast, x.as_slice()) <= 1e-10);
}
