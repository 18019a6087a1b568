//! Discrete fractional Laplacian as a diagonal Fourier symbol.
//!
//! Transforms follow one convention everywhere: the forward DFT is
//! unnormalized and the inverse carries `1/N` per axis, so
//! `Σ_j |u_j|² = (1/N) Σ_k |û_k|²` with `N` the total point count.
//!
//! Modes use the standard FFT ordering `0, 1, …, N/2-1, -N/2, …, -1`. The
//! single Nyquist slot carries `-γ|Nμ/2|^α`; because the symbol is even this
//! agrees with the split-Nyquist interpolant on real data.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{check_same, GridSpec, RealField};

/// Per-mode eigenvalues of `γ·D^α`, flattened in the same layout as fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSymbol {
    grid: GridSpec,
    alpha: f64,
    gamma: f64,
    axis_values: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// Builds the symbol `λ_k = -γ|kμ|^α` for `1 < α ≤ 2`, `γ > 0`.
pub fn build_symbol(grid: &GridSpec, alpha: f64, gamma: f64) -> Result<SpectralSymbol> {
    build_symbol_with(grid, alpha, gamma, false)
}

/// Same as [`build_symbol`]; `allow_low_order` widens the admissible range
/// of `α` to `(0, 2]` for exploratory runs.
pub fn build_symbol_with(
    grid: &GridSpec,
    alpha: f64,
    gamma: f64,
    allow_low_order: bool,
) -> Result<SpectralSymbol> {
    let lower = if allow_low_order { 0.0 } else { 1.0 };
    if !(alpha > lower && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in ({lower}, 2], got {alpha}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let axis_values: Vec<Vec<f64>> = grid
        .axes()
        .iter()
        .map(|ax| {
            (0..ax.n)
                .map(|slot| {
                    let k = ax.mode_index(slot);
                    if k == 0 {
                        0.0
                    } else {
                        -gamma * (k.unsigned_abs() as f64 * ax.mu).powf(alpha)
                    }
                })
                .collect()
        })
        .collect();
    let values = match axis_values.as_slice() {
        [x] => x.clone(),
        [x, y] => y
            .iter()
            .flat_map(|ly| x.iter().map(move |lx| lx + ly))
            .collect(),
        _ => unreachable!("grid dimension is 1 or 2"),
    };
    Ok(SpectralSymbol {
        grid: grid.clone(),
        alpha,
        gamma,
        axis_values,
        values,
    })
}

impl SpectralSymbol {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Eigenvalues per mode, in FFT slot order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One-dimensional eigenvalues along axis `i`.
    pub fn axis_values(&self, i: usize) -> &[f64] {
        &self.axis_values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// FFT plans plus scratch space for one grid. Not shareable across threads
/// while in use; build one per run.
pub struct Transform {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Option<Arc<dyn Fft<f64>>>,
    inv_y: Option<Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl Transform {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let nx = grid.axis(0).n;
        let fwd_x = planner.plan_fft_forward(nx);
        let inv_x = planner.plan_fft_inverse(nx);
        let (ny, fwd_y, inv_y) = if grid.dim() == 2 {
            let ny = grid.axis(1).n;
            (
                ny,
                Some(planner.plan_fft_forward(ny)),
                Some(planner.plan_fft_inverse(ny)),
            )
        } else {
            (1, None, None)
        };
        let scratch_len = [
            Some(fwd_x.get_inplace_scratch_len()),
            Some(inv_x.get_inplace_scratch_len()),
            fwd_y.as_ref().map(|f| f.get_inplace_scratch_len()),
            inv_y.as_ref().map(|f| f.get_inplace_scratch_len()),
        ]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0);
        let transposed = if ny > 1 {
            vec![Complex64::default(); nx * ny]
        } else {
            Vec::new()
        };
        Self {
            nx,
            ny,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            scratch: vec![Complex64::default(); scratch_len],
            transposed,
            buf: vec![Complex64::default(); nx * ny],
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward DFT, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.fwd_x.process_with_scratch(data, &mut self.scratch);
        if let Some(fwd_y) = &self.fwd_y {
            transpose(data, &mut self.transposed, self.ny, self.nx);
            fwd_y.process_with_scratch(&mut self.transposed, &mut self.scratch);
            transpose(&self.transposed, data, self.nx, self.ny);
        }
    }

    /// Inverse DFT scaled by `1/N`, in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        self.inv_x.process_with_scratch(data, &mut self.scratch);
        if let Some(inv_y) = &self.inv_y {
            transpose(data, &mut self.transposed, self.ny, self.nx);
            inv_y.process_with_scratch(&mut self.transposed, &mut self.scratch);
            transpose(&self.transposed, data, self.nx, self.ny);
        }
        let scale = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Multiplies `data` by the symbol in Fourier space, in place.
    pub fn apply_symbol(&mut self, data: &mut [Complex64], symbol: &SpectralSymbol) {
        self.forward(data);
        for (z, lam) in data.iter_mut().zip(symbol.values()) {
            *z *= lam;
        }
        self.inverse(data);
    }

    /// `γ D^α field`, together with the largest imaginary residue that was
    /// discarded when taking the real part.
    pub fn apply_operator_with_residue(
        &mut self,
        field: &[f64],
        symbol: &SpectralSymbol,
    ) -> Result<(RealField, f64)> {
        symbol.grid().check_len(field.len())?;
        let mut buf = std::mem::take(&mut self.buf);
        for (z, &v) in buf.iter_mut().zip(field) {
            *z = Complex64::new(v, 0.0);
        }
        self.apply_symbol(&mut buf, symbol);
        let residue = buf.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        let out = RealField(buf.iter().map(|z| z.re).collect());
        self.buf = buf;
        Ok((out, residue))
    }

    pub fn apply_operator(&mut self, field: &[f64], symbol: &SpectralSymbol) -> Result<RealField> {
        let (out, residue) = self.apply_operator_with_residue(field, symbol)?;
        debug_assert!(
            residue <= 1e-10 * field.iter().fold(1.0_f64, |m, v| m.max(v.abs())),
            "operator output not real: residue {residue:e}"
        );
        Ok(out)
    }

    /// Applies the operator to two real fields with one complex transform
    /// pair, packing them as `p + i q`.
    pub fn apply_operator_pair(
        &mut self,
        p: &[f64],
        q: &[f64],
        symbol: &SpectralSymbol,
    ) -> Result<(RealField, RealField)> {
        symbol.grid().check_len(p.len())?;
        check_same(p, q)?;
        let mut buf = std::mem::take(&mut self.buf);
        for ((z, &a), &b) in buf.iter_mut().zip(p).zip(q) {
            *z = Complex64::new(a, b);
        }
        self.apply_symbol(&mut buf, symbol);
        let dp = RealField(buf.iter().map(|z| z.re).collect());
        let dq = RealField(buf.iter().map(|z| z.im).collect());
        self.buf = buf;
        Ok((dp, dq))
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// One-off `γ D^α field`; builds its own FFT plans.
pub fn apply_operator(field: &RealField, symbol: &SpectralSymbol) -> Result<RealField> {
    Transform::new(symbol.grid()).apply_operator(field, symbol)
}

/// Discrete inner product `h Σ u_j v_j` (`h_x h_y Σ` in 2D).
pub fn inner_product(u: &[f64], v: &[f64], grid: &GridSpec) -> Result<f64> {
    grid.check_len(u.len())?;
    check_same(u, v)?;
    Ok(grid.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
}
