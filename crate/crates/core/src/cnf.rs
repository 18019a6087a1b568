//! Fully implicit Crank–Nicolson Fourier pseudo-spectral comparator.
//!
//! The step solves
//!
//! ```text
//! i (u^{m+1} - u^m)/τ = -γD u^{m+1/2} - (V + (β/2)(|u^{m+1}|² + |u^m|²)) u^{m+1/2}
//! ```
//!
//! by fixed-point iteration on the nonlinear term. Every iterate costs one
//! constant-coefficient solve with the same `A` as the SAV scheme.

use std::time::Instant;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fsav::{step_count, PairField, Workspace};
use crate::grid::{check_same, GridSpec, RealField};
use crate::sav::ModelParams;
use crate::spectral::{build_symbol, SpectralSymbol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnfConfig {
    pub tau: f64,
    /// Relative l∞ distance between successive iterates that stops the
    /// fixed-point loop.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl CnfConfig {
    pub fn new(tau: f64) -> Result<Self> {
        Self::with_tolerance(tau, 1e-12, 100)
    }

    pub fn with_tolerance(tau: f64, tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(Self {
            tau,
            tolerance,
            max_iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnfStep {
    pub z: PairField,
    pub iterations: usize,
    /// Relative size of the last fixed-point update.
    pub last_update: f64,
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// One CNF step from `(P^m, Q^m)`.
pub fn step_cnf(
    p: &[f64],
    q: &[f64],
    params: &ModelParams,
    symbol: &SpectralSymbol,
    cfg: &CnfConfig,
    ws: &mut Workspace,
) -> Result<CnfStep> {
    symbol.grid().check_len(p.len())?;
    check_same(p, q)?;
    let tau = cfg.tau;
    let half = 0.5 * tau;
    let u_m: Vec<Complex64> = p.iter().zip(q).map(|(&a, &b)| Complex64::new(a, b)).collect();

    // A⁻¹ (1 + iτD/2) u^m
    let mut linear = u_m.clone();
    ws.apply_modal(&mut linear, symbol, |lam| {
        Complex64::new(1.0, half * lam) / Complex64::new(1.0, -half * lam)
    });

    if params.beta == 0.0 && !params.has_potential() {
        return Ok(CnfStep {
            z: unpack(&linear),
            iterations: 1,
            last_update: 0.0,
        });
    }

    let rho_m: Vec<f64> = u_m.iter().map(|z| z.norm_sqr()).collect();
    let mut current = u_m.clone();
    let mut update_buf = vec![Complex64::default(); u_m.len()];
    let mut last_update = f64::INFINITY;
    let i_tau = Complex64::new(0.0, tau);
    for iteration in 1..=cfg.max_iterations {
        for (j, out) in update_buf.iter_mut().enumerate() {
            let g = params.potential[j] + 0.5 * params.beta * (current[j].norm_sqr() + rho_m[j]);
            *out = i_tau * g * 0.5 * (current[j] + u_m[j]);
        }
        ws.solve_a_packed(&mut update_buf, tau, symbol);
        let mut diff = 0.0_f64;
        for (j, cur) in current.iter_mut().enumerate() {
            let next = linear[j] + update_buf[j];
            diff = diff.max((next - *cur).norm());
            *cur = next;
        }
        last_update = diff / max_norm(&current).max(f64::MIN_POSITIVE);
        if last_update <= cfg.tolerance {
            return Ok(CnfStep {
                z: unpack(&current),
                iterations: iteration,
                last_update,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: last_update,
    })
}

fn unpack(buf: &[Complex64]) -> PairField {
    PairField {
        p: RealField(buf.iter().map(|z| z.re).collect()),
        q: RealField(buf.iter().map(|z| z.im).collect()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnfOutcome {
    pub z: PairField,
    pub steps: usize,
    pub total_iterations: usize,
    /// Wall-clock time of the step loop, observer excluded.
    pub wall_secs: f64,
}

/// Runs `T/τ` CNF steps. `observer(step, t, z)` sees step 0, every
/// `stride`-th step and the final step.
pub fn run_cnf<F>(
    z0: PairField,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &CnfConfig,
    t_end: f64,
    stride: usize,
    mut observer: F,
) -> Result<CnfOutcome>
where
    F: FnMut(usize, f64, &PairField) -> Result<()>,
{
    let steps = step_count(t_end, cfg.tau)?;
    grid.check_len(z0.len())?;
    let symbol = build_symbol(grid, params.alpha, params.gamma)?;
    let mut ws = Workspace::new(grid);
    let stride = stride.max(1);
    observer(0, 0.0, &z0)?;
    let mut z = z0;
    let mut total_iterations = 0;
    let mut wall_secs = 0.0;
    for m in 1..=steps {
        let start = Instant::now();
        let step = step_cnf(&z.p, &z.q, params, &symbol, cfg, &mut ws)?;
        wall_secs += start.elapsed().as_secs_f64();
        total_iterations += step.iterations;
        z = step.z;
        if m % stride == 0 || m == steps {
            observer(m, m as f64 * cfg.tau, &z)?;
        }
    }
    Ok(CnfOutcome {
        z,
        steps,
        total_iterations,
        wall_secs,
    })
}
