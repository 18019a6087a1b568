//! Periodic collocation grids and real grid functions.
//!
//! Two-dimensional data is stored row-major with `x` as the fastest-varying
//! axis: the value at `(x_i, y_j)` lives at index `j * nx + i`.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// One periodic axis `[x_left, x_right)` sampled at `n` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub x_left: f64,
    pub x_right: f64,
    pub n: usize,
    /// Mesh spacing `(x_right - x_left) / n`.
    pub h: f64,
    /// Fundamental wavenumber `2π / (x_right - x_left)`.
    pub mu: f64,
}

impl Axis {
    pub fn new(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) || x_right <= x_left {
            return Err(Error::InvalidGrid(format!(
                "domain must satisfy x_left < x_right, got [{x_left}, {x_right}]"
            )));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "mode count must be even and at least 4, got {n}"
            )));
        }
        let length = x_right - x_left;
        Ok(Self {
            x_left,
            x_right,
            n,
            h: length / n as f64,
            mu: 2.0 * PI / length,
        })
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Collocation point `x_j = x_left + j h`; `x_right` is never included.
    pub fn point(&self, j: usize) -> f64 {
        self.x_left + j as f64 * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed mode index for FFT slot `slot`: `0, 1, …, n/2-1, -n/2, …, -1`.
    pub fn mode_index(&self, slot: usize) -> i64 {
        let n = self.n as i64;
        let s = slot as i64;
        if s < n / 2 {
            s
        } else {
            s - n
        }
    }
}

/// A 1D or 2D periodic collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        match axes.len() {
            1 | 2 => Ok(Self { axes }),
            d => Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn one_d(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::new(x_left, x_right, n)?])
    }

    /// Square 2D grid with the same axis in `x` and `y`.
    pub fn two_d(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        let axis = Axis::new(x_left, x_right, n)?;
        Self::new(vec![axis, axis])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    /// Total number of collocation points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h` (1D) or `h_x h_y` (2D).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.h).product()
    }

    /// Coordinates of the point at flat index `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let ax = &self.axes[0];
        match self.axes.get(1) {
            None => [ax.point(idx), 0.0],
            Some(ay) => [ax.point(idx % ax.n), ay.point(idx / ax.n)],
        }
    }

    /// Samples `f` at every collocation point; `f` receives `[x]` or `[x, y]`.
    pub fn sample<F>(&self, f: F) -> RealField
    where
        F: Fn(&[f64]) -> f64,
    {
        let d = self.dim();
        RealField(
            (0..self.len())
                .map(|idx| f(&self.coords(idx)[..d]))
                .collect(),
        )
    }

    /// Ratio `fine.n / self.n` if `fine` refines this grid by an integer
    /// factor on the same domain, so that coarse points embed in fine ones.
    pub fn refinement_factor(&self, fine: &GridSpec) -> Option<usize> {
        if self.dim() != fine.dim() {
            return None;
        }
        let mut factor = None;
        for (c, f) in self.axes.iter().zip(fine.axes.iter()) {
            let same_domain = (c.x_left - f.x_left).abs() <= 1e-12 * c.length()
                && (c.x_right - f.x_right).abs() <= 1e-12 * c.length();
            if !same_domain || f.n % c.n != 0 {
                return None;
            }
            let r = f.n / c.n;
            if *factor.get_or_insert(r) != r {
                return None;
            }
        }
        factor
    }

    pub fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.len(),
                found,
            })
        }
    }
}

/// Real values at the collocation points, stored in grid order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealField(pub Vec<f64>);

impl RealField {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `a * self + b * other`, pointwise.
    pub fn combine(&self, a: f64, other: &RealField, b: f64) -> Result<RealField> {
        check_same(self, other)?;
        Ok(RealField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }
}

impl From<Vec<f64>> for RealField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for RealField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for RealField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub(crate) fn check_same(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        })
    }
}
