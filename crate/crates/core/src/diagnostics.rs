//! Discrete invariants, drift series, run-to-run errors and order tables.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fsav::{Observer, PairField};
use crate::grid::{check_same, GridSpec};
use crate::sav::{compute_e, ModelParams, SavState};
use crate::spectral::{inner_product, SpectralSymbol, Transform};

/// `(P, γD^α P) + (Q, γD^α Q)` with the weighted inner product, evaluated in
/// Fourier space as `(h/N) Σ_k λ_k |û_k|²` for `u = P + iQ`. Never positive.
pub fn dispersion_form(p: &[f64], q: &[f64], symbol: &SpectralSymbol, transform: &mut Transform) -> Result<f64> {
    let grid = symbol.grid();
    grid.check_len(p.len())?;
    check_same(p, q)?;
    let mut buf: Vec<Complex64> = p.iter().zip(q).map(|(&a, &b)| Complex64::new(a, b)).collect();
    transform.forward(&mut buf);
    let sum: f64 = buf
        .iter()
        .zip(symbol.values())
        .map(|(z, lam)| lam * z.norm_sqr())
        .sum();
    Ok(grid.cell_volume() / grid.len() as f64 * sum)
}

/// Modified energy `H = ½[(P, DP) + (Q, DQ)] + w²`, inner products weighted
/// by the cell volume. This is the quantity the SAV step conserves.
pub fn modified_energy(state: &SavState, symbol: &SpectralSymbol, transform: &mut Transform) -> Result<f64> {
    Ok(0.5 * dispersion_form(&state.p, &state.q, symbol, transform)? + state.w * state.w)
}

/// `H / h`: the same invariant written with unweighted quadratic forms,
/// `½(PᵀDP + QᵀDQ) + w²/h`.
pub fn modified_energy_unweighted(
    state: &SavState,
    symbol: &SpectralSymbol,
    transform: &mut Transform,
) -> Result<f64> {
    Ok(modified_energy(state, symbol, transform)? / symbol.grid().cell_volume())
}

/// Discrete analogue of the original Hamiltonian,
/// `½[(P, DP) + (Q, DQ)] + E(P, Q)`. The CNF scheme conserves it; the SAV
/// scheme only approximates it.
pub fn original_energy(
    p: &[f64],
    q: &[f64],
    params: &ModelParams,
    symbol: &SpectralSymbol,
    transform: &mut Transform,
) -> Result<f64> {
    Ok(0.5 * dispersion_form(p, q, symbol, transform)? + compute_e(p, q, params, symbol.grid())?)
}

/// `(P, P) + (Q, Q)`.
pub fn discrete_mass(p: &[f64], q: &[f64], grid: &GridSpec) -> Result<f64> {
    Ok(inner_product(p, p, grid)? + inner_product(q, q, grid)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationSample {
    pub step: usize,
    pub t: f64,
    /// Conserved energy of the scheme (modified energy for SAV runs).
    pub energy: f64,
    pub mass: f64,
    /// Auxiliary variable; NaN for schemes without one.
    pub w: f64,
    /// `E(P, Q)` recomputed from the fields.
    pub sav_energy: f64,
    pub original_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConservationRecord {
    pub samples: Vec<ConservationSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drifts {
    pub rh: Vec<f64>,
    pub rm: Vec<f64>,
}

impl Drifts {
    pub fn max_rh(&self) -> f64 {
        self.rh.iter().fold(0.0, |m: f64, v| m.max(*v))
    }

    pub fn max_rm(&self) -> f64 {
        self.rm.iter().fold(0.0, |m: f64, v| m.max(*v))
    }
}

/// Relative drifts from the first entry of two series.
pub fn relative_drift_series(energy: &[f64], mass: &[f64]) -> Result<Drifts> {
    let (Some(&h0), Some(&m0)) = (energy.first(), mass.first()) else {
        return Ok(Drifts {
            rh: Vec::new(),
            rm: Vec::new(),
        });
    };
    if h0.abs() < 1e-14 {
        return Err(Error::DegenerateReference {
            quantity: "energy",
            value: h0,
        });
    }
    if m0.abs() < 1e-14 {
        return Err(Error::DegenerateReference {
            quantity: "mass",
            value: m0,
        });
    }
    Ok(Drifts {
        rh: energy.iter().map(|h| ((h - h0) / h0).abs()).collect(),
        rm: mass.iter().map(|m| ((m - m0) / m0).abs()).collect(),
    })
}

/// `RH^m = |(H^m - H⁰)/H⁰|`, `RM^m = |(M^m - M⁰)/M⁰|`.
pub fn relative_drifts(record: &ConservationRecord) -> Result<Drifts> {
    let energy: Vec<f64> = record.samples.iter().map(|s| s.energy).collect();
    let mass: Vec<f64> = record.samples.iter().map(|s| s.mass).collect();
    relative_drift_series(&energy, &mass)
}

/// Observer that appends a [`ConservationSample`] per observed SAV state.
pub struct ConservationRecorder {
    params: ModelParams,
    symbol: SpectralSymbol,
    transform: Transform,
    pub record: ConservationRecord,
}

impl ConservationRecorder {
    pub fn new(params: &ModelParams, symbol: &SpectralSymbol) -> Self {
        Self {
            params: params.clone(),
            symbol: symbol.clone(),
            transform: Transform::new(symbol.grid()),
            record: ConservationRecord::default(),
        }
    }

    pub fn sample(&mut self, state: &SavState) -> Result<ConservationSample> {
        let grid = self.symbol.grid();
        let form = dispersion_form(&state.p, &state.q, &self.symbol, &mut self.transform)?;
        let e = compute_e(&state.p, &state.q, &self.params, grid)?;
        Ok(ConservationSample {
            step: state.step_index,
            t: state.t,
            energy: 0.5 * form + state.w * state.w,
            mass: discrete_mass(&state.p, &state.q, grid)?,
            w: state.w,
            sav_energy: e,
            original_energy: 0.5 * form + e,
        })
    }

    /// Sample for a scheme without auxiliary variable; the recorded energy
    /// is the original one.
    pub fn sample_plain(&mut self, step: usize, t: f64, z: &PairField) -> Result<ConservationSample> {
        let grid = self.symbol.grid();
        let form = dispersion_form(&z.p, &z.q, &self.symbol, &mut self.transform)?;
        let e = compute_e(&z.p, &z.q, &self.params, grid)?;
        Ok(ConservationSample {
            step,
            t,
            energy: 0.5 * form + e,
            mass: discrete_mass(&z.p, &z.q, grid)?,
            w: f64::NAN,
            sav_energy: e,
            original_energy: 0.5 * form + e,
        })
    }

    pub fn push_plain(&mut self, step: usize, t: f64, z: &PairField) -> Result<()> {
        let s = self.sample_plain(step, t, z)?;
        self.record.samples.push(s);
        Ok(())
    }
}

impl Observer for ConservationRecorder {
    fn observe(&mut self, state: &SavState) -> Result<()> {
        let s = self.sample(state)?;
        self.record.samples.push(s);
        Ok(())
    }
}

fn max_diff_strided(a: &[f64], b: &[f64], map: impl Fn(usize) -> usize) -> f64 {
    a.iter()
        .enumerate()
        .fold(0.0_f64, |m, (i, v)| m.max((v - b[map(i)]).abs()))
}

/// `‖P_a - P_b‖∞ + ‖Q_a - Q_b‖∞`.
///
/// Runs on identical grids are compared pointwise. When one grid refines
/// the other on the same domain, comparison happens at the coarse points,
/// which are a subset of the fine ones.
pub fn error_between_runs(
    a: &PairField,
    grid_a: &GridSpec,
    b: &PairField,
    grid_b: &GridSpec,
) -> Result<f64> {
    grid_a.check_len(a.len())?;
    grid_b.check_len(b.len())?;
    let (coarse, cgrid, fine, fgrid) = if grid_a.len() <= grid_b.len() {
        (a, grid_a, b, grid_b)
    } else {
        (b, grid_b, a, grid_a)
    };
    let Some(r) = cgrid.refinement_factor(fgrid) else {
        return Err(Error::GridMismatch(
            "grids neither coincide nor embed by an integer refinement".into(),
        ));
    };
    let nx_c = cgrid.axis(0).n;
    let nx_f = fgrid.axis(0).n;
    let map = |i: usize| {
        if cgrid.dim() == 1 {
            i * r
        } else {
            (i / nx_c) * r * nx_f + (i % nx_c) * r
        }
    };
    Ok(max_diff_strided(&coarse.p, &fine.p, map) + max_diff_strided(&coarse.q, &fine.q, map))
}

/// `log₂(e_coarse / e_fine)`.
pub fn convergence_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::NonpositiveError(e_coarse, e_fine));
    }
    Ok((e_coarse / e_fine).log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// First row of a table.
    None,
    Value(f64),
    /// One of the two errors sits at the round-off floor.
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// `τ` or `N`.
    pub param: f64,
    pub error: f64,
    pub order: Order,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Errors at or below this value are treated as round-off.
pub const ERROR_FLOOR: f64 = 1e-13;

impl ConvergenceTable {
    /// Orders from consecutive rows only.
    pub fn from_errors(params: &[f64], errors: &[f64]) -> Self {
        let rows = params
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(i, (&param, &error))| {
                let order = if i == 0 {
                    Order::None
                } else {
                    match convergence_order(errors[i - 1], error) {
                        Ok(o) if errors[i - 1] > ERROR_FLOOR && error > ERROR_FLOOR => Order::Value(o),
                        _ => Order::Floor,
                    }
                };
                ConvergenceRow { param, error, order }
            })
            .collect();
        Self { rows }
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| match r.order {
                Order::Value(o) => Some(o),
                _ => None,
            })
            .collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub scheme: String,
    pub tau: f64,
    pub n: usize,
    pub wall_secs: f64,
    pub steps: usize,
    /// Total fixed-point iterations (equal to `steps` for the SAV scheme,
    /// which performs one linear solve pair per step).
    pub inner_iterations: usize,
    /// Set when the run failed; the row then carries partial data.
    pub failure: Option<String>,
}

impl TimingRecord {
    pub fn per_step_secs(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.wall_secs / self.steps as f64
        }
    }

    pub fn mean_inner_iterations(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.inner_iterations as f64 / self.steps as f64
        }
    }
}
