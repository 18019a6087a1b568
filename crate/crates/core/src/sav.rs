//! Model parameters, the auxiliary energy functional and the nonlinear
//! coupling fields of the scalar auxiliary variable formulation.

use crate::error::{Error, Result};
use crate::grid::{check_same, GridSpec, RealField};

/// Parameters of `i u_t - γ(-Δ)^{α/2} u + (V + β|u|²) u = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Potential sampled at the collocation points.
    pub potential: RealField,
    /// Constant added under every `sqrt(E + c0)`.
    pub c0: f64,
}

impl ModelParams {
    pub fn new(
        grid: &GridSpec,
        alpha: f64,
        gamma: f64,
        beta: f64,
        potential: RealField,
        c0: f64,
    ) -> Result<Self> {
        grid.check_len(potential.len())?;
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (1, 2], got {alpha}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
        }
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c0 must be nonnegative, got {c0}"
            )));
        }
        Ok(Self {
            alpha,
            gamma,
            beta,
            potential,
            c0,
        })
    }

    /// Parameters with `V ≡ 0` and `c0 = 0`.
    pub fn free(grid: &GridSpec, alpha: f64, gamma: f64, beta: f64) -> Result<Self> {
        Self::new(grid, alpha, gamma, beta, RealField::zeros(grid.len()), 0.0)
    }

    pub fn has_potential(&self) -> bool {
        self.potential.iter().any(|&v| v != 0.0)
    }
}

/// Real/imaginary field pair, auxiliary scalar and the previous level needed
/// by the extrapolated midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SavState {
    pub p: RealField,
    pub q: RealField,
    pub w: f64,
    pub p_prev: RealField,
    pub q_prev: RealField,
    pub t: f64,
    pub step_index: usize,
}

impl SavState {
    /// State at `t = 0`. The previous level is set equal to the initial one.
    pub fn initial(p: RealField, q: RealField, params: &ModelParams, grid: &GridSpec) -> Result<Self> {
        let w = init_w(&p, &q, params, grid)?;
        Ok(Self {
            p_prev: p.clone(),
            q_prev: q.clone(),
            p,
            q,
            w,
            t: 0.0,
            step_index: 0,
        })
    }
}

/// Splits samples of `u₀` into `(P, Q) = (Re u₀, Im u₀)`.
pub fn split_initial(re: &[f64], im: &[f64]) -> Result<(RealField, RealField)> {
    check_same(re, im)?;
    Ok((RealField(re.to_vec()), RealField(im.to_vec())))
}

/// Quadrature of `(1/4)∫ β(p²+q²)² + 2V(p²+q²)`.
pub fn compute_e(p: &[f64], q: &[f64], params: &ModelParams, grid: &GridSpec) -> Result<f64> {
    grid.check_len(p.len())?;
    check_same(p, q)?;
    check_same(p, &params.potential)?;
    let sum: f64 = p
        .iter()
        .zip(q)
        .zip(params.potential.iter())
        .map(|((a, b), v)| {
            let rho = a * a + b * b;
            params.beta * rho * rho + 2.0 * v * rho
        })
        .sum();
    Ok(0.25 * grid.cell_volume() * sum)
}

/// `sqrt(E + c0)` after checking it is safely positive.
fn sav_root(p: &[f64], q: &[f64], params: &ModelParams, grid: &GridSpec) -> Result<f64> {
    let value = compute_e(p, q, params, grid)? + params.c0;
    let scale = p
        .iter()
        .zip(q)
        .fold(1.0_f64, |m, (a, b)| m.max(a * a + b * b));
    let threshold = 1e-14 * scale;
    if !(value > threshold) {
        return Err(Error::NonpositiveSavEnergy { value, threshold });
    }
    Ok(value.sqrt())
}

/// Initial auxiliary variable `w = sqrt(E(P, Q) + c0)`.
pub fn init_w(p: &[f64], q: &[f64], params: &ModelParams, grid: &GridSpec) -> Result<f64> {
    sav_root(p, q, params, grid)
}

/// Coupling fields
/// `B₁ = (β(P²+Q²)P + VP)/sqrt(E+c0)`, `B₂ = (β(P²+Q²)Q + VQ)/sqrt(E+c0)`.
pub fn compute_b(
    p: &[f64],
    q: &[f64],
    params: &ModelParams,
    grid: &GridSpec,
) -> Result<(RealField, RealField)> {
    let root = sav_root(p, q, params, grid)?;
    let inv = 1.0 / root;
    let (b1, b2) = p
        .iter()
        .zip(q)
        .zip(params.potential.iter())
        .map(|((&a, &b), &v)| {
            let g = (params.beta * (a * a + b * b) + v) * inv;
            (g * a, g * b)
        })
        .unzip();
    Ok((RealField(b1), RealField(b2)))
}

/// Second-order predictor of the midpoint value, `(3 v_curr - v_prev)/2`.
pub fn extrapolate(v_curr: &[f64], v_prev: &[f64]) -> Result<RealField> {
    check_same(v_curr, v_prev)?;
    Ok(RealField(
        v_curr
            .iter()
            .zip(v_prev)
            .map(|(c, p)| 0.5 * (3.0 * c - p))
            .collect(),
    ))
}
