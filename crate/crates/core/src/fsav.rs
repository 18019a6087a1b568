//! Linearly implicit SAV Crank–Nicolson step.
//!
//! Per step the unknowns `Z = (P, Q)` satisfy
//!
//! ```text
//! A Z + (τ/4) (B̄, Z) B̄_r = C,    A = [[I, (τ/2)D], [-(τ/2)D, I]],
//! ```
//!
//! with `B̄ = (B̄₁, B̄₂)`, `B̄_r = (B̄₂, -B̄₁)`. `A` is diagonal in Fourier
//! space; on the packed field `u = P + iQ` it acts per mode as
//! `1 - iτλ/2`, so `A⁻¹` costs one forward and one inverse transform. The
//! rank-one term is removed with two `A⁻¹` solves and a scalar division.

use std::time::Instant;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{check_same, GridSpec, RealField};
use crate::sav::{compute_b, extrapolate, ModelParams, SavState};
use crate::spectral::{build_symbol, inner_product, SpectralSymbol, Transform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub tau: f64,
    /// Smallest admissible `|1 + τχ/4|`.
    pub denominator_guard: f64,
    /// Evaluate the residual of the rank-one system every step (two extra
    /// transforms).
    pub check_residuals: bool,
}

impl SchemeConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            tau,
            denominator_guard: 1e-12,
            check_residuals: false,
        })
    }
}

/// Stacked `(P, Q)` pair treated as one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairField {
    pub p: RealField,
    pub q: RealField,
}

impl PairField {
    pub fn new(p: RealField, q: RealField) -> Result<Self> {
        check_same(&p, &q)?;
        Ok(Self { p, q })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            p: RealField::zeros(len),
            q: RealField::zeros(len),
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `(X, Y) = (X₁, Y₁) + (X₂, Y₂)` with the grid inner product.
    pub fn inner(&self, other: &PairField, grid: &GridSpec) -> Result<f64> {
        Ok(inner_product(&self.p, &other.p, grid)? + inner_product(&self.q, &other.q, grid)?)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &PairField, b: f64) -> Result<PairField> {
        Ok(PairField {
            p: self.p.combine(a, &other.p, b)?,
            q: self.q.combine(a, &other.q, b)?,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.p.max_abs().max(self.q.max_abs())
    }

    fn pack_into(&self, buf: &mut [Complex64]) {
        for ((z, &a), &b) in buf.iter_mut().zip(self.p.iter()).zip(self.q.iter()) {
            *z = Complex64::new(a, b);
        }
    }

    fn unpack(buf: &[Complex64]) -> PairField {
        PairField {
            p: RealField(buf.iter().map(|z| z.re).collect()),
            q: RealField(buf.iter().map(|z| z.im).collect()),
        }
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub chi: f64,
    pub denominator: f64,
    /// `(B̄, Z^{m+1})`.
    pub s: f64,
    /// `‖A Z + (τ/4)(B̄,Z)B̄_r - C‖∞ / ‖C‖∞`, when requested.
    pub residual: Option<f64>,
    /// Time spent forming the extrapolation and `B̄`.
    pub nonlinear_secs: f64,
    /// Time spent in right-hand-side assembly and the two solves.
    pub solve_secs: f64,
    pub step_secs: f64,
}

/// Transform plans and buffers reused across steps of one run.
pub struct Workspace {
    transform: Transform,
    buf: Vec<Complex64>,
}

impl Workspace {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            transform: Transform::new(grid),
            buf: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn transform(&mut self) -> &mut Transform {
        &mut self.transform
    }

    /// Multiplies each Fourier mode of `data` by `factor(λ_k)`.
    pub(crate) fn apply_modal<F>(&mut self, data: &mut [Complex64], symbol: &SpectralSymbol, factor: F)
    where
        F: Fn(f64) -> Complex64,
    {
        self.transform.forward(data);
        for (z, &lam) in data.iter_mut().zip(symbol.values()) {
            *z *= factor(lam);
        }
        self.transform.inverse(data);
    }

    /// Solves `A x = data` in place on a packed `P + iQ` buffer.
    pub(crate) fn solve_a_packed(&mut self, data: &mut [Complex64], tau: f64, symbol: &SpectralSymbol) {
        let half = 0.5 * tau;
        self.apply_modal(data, symbol, |lam| {
            Complex64::new(1.0, -half * lam).inv()
        });
    }

    fn map_pair<F>(&mut self, z: &PairField, symbol: &SpectralSymbol, factor: F) -> Result<PairField>
    where
        F: Fn(f64) -> Complex64,
    {
        symbol.grid().check_len(z.p.len())?;
        check_same(&z.p, &z.q)?;
        let mut buf = std::mem::take(&mut self.buf);
        z.pack_into(&mut buf);
        self.apply_modal(&mut buf, symbol, factor);
        let out = PairField::unpack(&buf);
        self.buf = buf;
        Ok(out)
    }
}

/// `A⁻¹ Z`, mode by mode: `(1/(1+τ²λ²/4)) [[1, -τλ/2], [τλ/2, 1]]`.
pub fn apply_a_inverse(
    z: &PairField,
    tau: f64,
    symbol: &SpectralSymbol,
    ws: &mut Workspace,
) -> Result<PairField> {
    let half = 0.5 * tau;
    ws.map_pair(z, symbol, |lam| Complex64::new(1.0, -half * lam).inv())
}

/// `A Z`, mode by mode: `[[1, τλ/2], [-τλ/2, 1]]`.
pub fn apply_a(z: &PairField, tau: f64, symbol: &SpectralSymbol, ws: &mut Workspace) -> Result<PairField> {
    let half = 0.5 * tau;
    ws.map_pair(z, symbol, |lam| Complex64::new(1.0, -half * lam))
}

/// Right-hand side `C = (C₁, C₂)` of the linear system for `Z^{m+1}`.
pub fn assemble_rhs(
    state: &SavState,
    b1: &[f64],
    b2: &[f64],
    tau: f64,
    symbol: &SpectralSymbol,
    ws: &mut Workspace,
) -> Result<PairField> {
    let grid = symbol.grid();
    grid.check_len(state.p.len())?;
    check_same(&state.p, &state.q)?;
    check_same(&state.p, b1)?;
    check_same(&state.p, b2)?;
    let (dp, dq) = ws.transform().apply_operator_pair(&state.p, &state.q, symbol)?;
    let g = inner_product(b1, &state.p, grid)? + inner_product(b2, &state.q, grid)?;
    let coupling = tau * state.w - 0.25 * tau * g;
    let half = 0.5 * tau;
    let n = state.p.len();
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    for j in 0..n {
        c1.push(state.p[j] - half * dq[j] - coupling * b2[j]);
        c2.push(state.q[j] + half * dp[j] + coupling * b1[j]);
    }
    Ok(PairField {
        p: RealField(c1),
        q: RealField(c2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSolution {
    pub z: PairField,
    pub chi: f64,
    /// `(B̄, Z)` of the returned solution.
    pub s: f64,
    pub denominator: f64,
}

/// Solves `A Z + (τ/4)(B̄, Z) B̄_r = C`.
pub fn rank_one_solve(
    c: &PairField,
    b: &PairField,
    b_r: &PairField,
    tau: f64,
    symbol: &SpectralSymbol,
    guard: f64,
    ws: &mut Workspace,
) -> Result<RankOneSolution> {
    let grid = symbol.grid();
    check_same(&c.p, &b.p)?;
    check_same(&c.p, &b_r.p)?;
    let y = apply_a_inverse(c, tau, symbol, ws)?;
    let r = apply_a_inverse(b_r, tau, symbol, ws)?;
    let chi = b.inner(&r, grid)?;
    let denominator = 1.0 + 0.25 * tau * chi;
    if !(denominator.abs() >= guard) {
        return Err(Error::SingularDenominator {
            value: denominator.abs(),
            guard,
        });
    }
    let s = b.inner(&y, grid)? / denominator;
    let z = y.combine(1.0, &r, -0.25 * tau * s)?;
    Ok(RankOneSolution {
        z,
        chi,
        s,
        denominator,
    })
}

/// Residual `‖A Z + (τ/4)(B̄, Z) B̄_r - C‖∞ / ‖C‖∞`.
pub fn rank_one_residual(
    z: &PairField,
    c: &PairField,
    b: &PairField,
    b_r: &PairField,
    tau: f64,
    symbol: &SpectralSymbol,
    ws: &mut Workspace,
) -> Result<f64> {
    let az = apply_a(z, tau, symbol, ws)?;
    let s = b.inner(z, symbol.grid())?;
    let lhs = az.combine(1.0, b_r, 0.25 * tau * s)?;
    let diff = lhs.combine(1.0, c, -1.0)?;
    Ok(diff.max_abs() / c.max_abs().max(f64::MIN_POSITIVE))
}

/// Advances the state by one time step.
pub fn step_fsav(
    state: &SavState,
    params: &ModelParams,
    symbol: &SpectralSymbol,
    cfg: &SchemeConfig,
    ws: &mut Workspace,
) -> Result<(SavState, SolveReport)> {
    let grid = symbol.grid();
    let tau = cfg.tau;
    let start = Instant::now();

    let p_bar = extrapolate(&state.p, &state.p_prev)?;
    let q_bar = extrapolate(&state.q, &state.q_prev)?;
    let (b1, b2) = compute_b(&p_bar, &q_bar, params, grid)?;
    let nonlinear_done = Instant::now();

    let c = assemble_rhs(state, &b1, &b2, tau, symbol, ws)?;
    let b_r = PairField {
        p: b2.clone(),
        q: RealField(b1.iter().map(|v| -v).collect()),
    };
    let b = PairField { p: b1, q: b2 };
    let sol = rank_one_solve(&c, &b, &b_r, tau, symbol, cfg.denominator_guard, ws)?;
    let solve_done = Instant::now();

    let residual = if cfg.check_residuals {
        Some(rank_one_residual(&sol.z, &c, &b, &b_r, tau, symbol, ws)?)
    } else {
        None
    };

    // w^{m+1} = w^m + ½(B̄₁, P^{m+1} - P^m) + ½(B̄₂, Q^{m+1} - Q^m)
    let dp = sol.z.p.combine(1.0, &state.p, -1.0)?;
    let dq = sol.z.q.combine(1.0, &state.q, -1.0)?;
    let w = state.w + 0.5 * (inner_product(&b.p, &dp, grid)? + inner_product(&b.q, &dq, grid)?);

    let step_index = state.step_index + 1;
    let next = SavState {
        p_prev: state.p.clone(),
        q_prev: state.q.clone(),
        p: sol.z.p,
        q: sol.z.q,
        w,
        t: step_index as f64 * tau,
        step_index,
    };
    let report = SolveReport {
        chi: sol.chi,
        denominator: sol.denominator,
        s: sol.s,
        residual,
        nonlinear_secs: (nonlinear_done - start).as_secs_f64(),
        solve_secs: (solve_done - nonlinear_done).as_secs_f64(),
        step_secs: start.elapsed().as_secs_f64(),
    };
    Ok((next, report))
}

/// Number of steps `M = T/τ`, rejecting non-integer ratios.
pub fn step_count(t_end: f64, tau: f64) -> Result<usize> {
    let ratio = t_end / tau;
    let m = ratio.round();
    if !(ratio.is_finite() && m >= 1.0) || (ratio - m).abs() > 1e-9 * ratio {
        return Err(Error::NonIntegerStepCount { t_end, tau });
    }
    Ok(m as usize)
}

/// Callback invoked on states during a run.
pub trait Observer {
    fn observe(&mut self, state: &SavState) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&SavState) -> Result<()>,
{
    fn observe(&mut self, state: &SavState) -> Result<()> {
        self(state)
    }
}

/// Summary of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: SavState,
    pub steps: usize,
    /// Wall-clock time of the step loop, observers excluded.
    pub wall_secs: f64,
    pub nonlinear_secs: f64,
    pub solve_secs: f64,
    pub min_denominator: f64,
    pub max_residual: Option<f64>,
}

/// Runs `M = T/τ` steps. Observers see step 0, every `stride`-th step and
/// the final step.
pub fn run(
    state0: SavState,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &SchemeConfig,
    t_end: f64,
    stride: usize,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    let steps = step_count(t_end, cfg.tau)?;
    let symbol = build_symbol(grid, params.alpha, params.gamma)?;
    grid.check_len(state0.p.len())?;
    let stride = stride.max(1);
    let mut ws = Workspace::new(grid);

    for obs in observers.iter_mut() {
        obs.observe(&state0)?;
    }
    let mut state = state0;
    let mut outcome = RunOutcome {
        state: state.clone(),
        steps,
        wall_secs: 0.0,
        nonlinear_secs: 0.0,
        solve_secs: 0.0,
        min_denominator: f64::INFINITY,
        max_residual: None,
    };
    for m in 1..=steps {
        let (next, report) = step_fsav(&state, params, &symbol, cfg, &mut ws)?;
        state = next;
        outcome.wall_secs += report.step_secs;
        outcome.nonlinear_secs += report.nonlinear_secs;
        outcome.solve_secs += report.solve_secs;
        outcome.min_denominator = outcome.min_denominator.min(report.denominator.abs());
        if let Some(r) = report.residual {
            outcome.max_residual = Some(outcome.max_residual.map_or(r, |m: f64| m.max(r)));
        }
        if m % stride == 0 || m == steps {
            for obs in observers.iter_mut() {
                obs.observe(&state)?;
            }
        }
    }
    outcome.state = state;
    Ok(outcome)
}
