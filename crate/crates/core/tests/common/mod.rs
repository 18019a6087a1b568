#![allow(dead_code)]

use fsav_nls::fsav::PairField;
use fsav_nls::{Axis, GridSpec, RealField};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(rng: &mut ChaCha8Rng, n: usize) -> RealField {
    RealField((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

pub fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> PairField {
    PairField {
        p: random_field(rng, n),
        q: random_field(rng, n),
    }
}

/// Dense `γ D^α` along one axis from the interpolation entry formula
/// `-Σ_{k=-N/2}^{N/2} |kμ|^α e^{-ikμ(x_j - x_l)} / (N c_k)`, with `c_k = 2` at
/// `k = ±N/2` and 1 otherwise.
pub fn dense_axis(axis: &Axis, alpha: f64, gamma: f64) -> DMatrix<f64> {
    let n = axis.n;
    let half = n as i64 / 2;
    DMatrix::from_fn(n, n, |j, l| {
        let dx = axis.point(j) - axis.point(l);
        let mut sum = 0.0;
        for k in -half..=half {
            let c = if k.abs() == half { 2.0 } else { 1.0 };
            let kmu = k as f64 * axis.mu;
            sum += kmu.abs().powf(alpha) * (kmu * dx).cos() / (n as f64 * c);
        }
        -gamma * sum
    })
}

/// Dense operator on the flattened grid, `I_y ⊗ D_x + D_y ⊗ I_x` in 2D.
pub fn dense_operator(grid: &GridSpec, alpha: f64, gamma: f64) -> DMatrix<f64> {
    let dx = dense_axis(grid.axis(0), alpha, gamma);
    if grid.dim() == 1 {
        return dx;
    }
    let dy = dense_axis(grid.axis(1), alpha, gamma);
    let ix = DMatrix::<f64>::identity(dx.nrows(), dx.nrows());
    let iy = DMatrix::<f64>::identity(dy.nrows(), dy.nrows());
    iy.kronecker(&dx) + dy.kronecker(&ix)
}

pub fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn stack(z: &PairField) -> DVector<f64> {
    let mut v = z.p.to_vec();
    v.extend_from_slice(&z.q);
    DVector::from_vec(v)
}

pub fn unstack(v: &DVector<f64>) -> PairField {
    let n = v.len() / 2;
    PairField {
        p: RealField(v.rows(0, n).iter().copied().collect()),
        q: RealField(v.rows(n, n).iter().copied().collect()),
    }
}

/// Dense `A = [[I, τ/2 D], [-τ/2 D, I]]`.
pub fn dense_a(d: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let n = d.nrows();
    let mut a = DMatrix::<f64>::identity(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&(d * (0.5 * tau)));
    a.view_mut((n, 0), (n, n)).copy_from(&(d * (-0.5 * tau)));
    a
}

pub fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn ex41_initial(grid: &GridSpec) -> PairField {
    PairField {
        p: grid.sample(|x| (-x[0] * x[0]).exp() * x[0].cos()),
        q: grid.sample(|x| -(-x[0] * x[0]).exp() * x[0].sin()),
    }
}

pub fn ex42_initial(grid: &GridSpec) -> PairField {
    PairField {
        p: grid.sample(|x| 2.0 / std::f64::consts::PI.sqrt() * (-x[0] * x[0] - x[1] * x[1]).exp()),
        q: RealField::zeros(grid.len()),
    }
}
