//! Uniform collocation grid on the periodic torus `[0, 2*pi)^d`.
//!
//! Modes live on the integer lattice `{-N/2+1, ..., N/2}` per axis; index
//! `i` maps to wavenumber `i` for `i <= N/2` and `i - N` above. The Nyquist
//! index `N/2` represents `+N/2`. Because `-N/2` and `+N/2` alias, odd
//! (first-derivative) symbols use a zeroed Nyquist wavenumber so that real
//! fields stay real under differentiation; even radial symbols such as heat
//! multipliers use the true `|k|^2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const PERIOD: f64 = 2.0 * PI;

/// Grid geometry and wavenumber bookkeeping for one `(d, N)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    shape: [usize; 3],
    ksq_int: Vec<u32>,
}

impl TorusGrid {
    /// Builds a grid with `dim` in `{2, 3}` and `n` a power of two, at least 8.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if n > 1 << 13 {
            return Err(Error::InvalidGrid(format!("points per axis {n} too large")));
        }
        let shape = if dim == 2 { [n, n, 1] } else { [n, n, n] };
        let len = shape[0] * shape[1] * shape[2];
        // Total-mode cap: per-axis bounds alone would admit a 3-d lattice
        // whose index table exceeds memory, so reject before allocating.
        if len > 1 << 26 {
            return Err(Error::InvalidGrid(format!(
                "grid holds {len} modes, more than the 2^26 supported"
            )));
        }
        let mut ksq_int = vec![0u32; len];
        let mut idx = 0usize;
        for ix in 0..shape[0] {
            let kx = Self::index_wavenumber(ix, n);
            for iy in 0..shape[1] {
                let ky = Self::index_wavenumber(iy, n);
                for iz in 0..shape[2] {
                    let kz = if dim == 3 { Self::index_wavenumber(iz, n) } else { 0 };
                    ksq_int[idx] = (kx * kx + ky * ky + kz * kz) as u32;
                    idx += 1;
                }
            }
        }
        Ok(Self { dim, n, shape, ksq_int })
    }

    fn index_wavenumber(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    /// Total number of collocation points (equivalently, stored modes).
    pub fn len(&self) -> usize {
        self.ksq_int.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element of the collocation quadrature, `(2*pi/N)^d`.
    pub fn cell_volume(&self) -> f64 {
        (PERIOD / self.n as f64).powi(self.dim as i32)
    }

    /// Largest integer `|k|^2` on the lattice, `d * (N/2)^2`.
    pub fn max_ksq(&self) -> u32 {
        (self.dim * (self.n / 2) * (self.n / 2)) as u32
    }

    /// Integer `|k|^2` for a linear mode index.
    #[inline]
    pub fn ksq_int(&self, linear: usize) -> u32 {
        self.ksq_int[linear]
    }

    #[inline]
    pub fn ksq(&self, linear: usize) -> f64 {
        f64::from(self.ksq_int[linear])
    }

    pub fn ksq_table(&self) -> &[u32] {
        &self.ksq_int
    }

    /// Signed wavenumbers of a linear mode index; the unused axis of a 2-d
    /// grid reads 0.
    pub fn wavenumbers(&self, linear: usize) -> [i64; 3] {
        let [i0, i1, i2] = self.multi_index(linear);
        [
            Self::index_wavenumber(i0, self.n),
            Self::index_wavenumber(i1, self.n),
            if self.dim == 3 { Self::index_wavenumber(i2, self.n) } else { 0 },
        ]
    }

    /// Wavenumbers with the Nyquist component zeroed, as used by
    /// first-derivative symbols.
    pub fn deriv_wavenumbers(&self, linear: usize) -> [f64; 3] {
        let [i0, i1, i2] = self.multi_index(linear);
        [
            self.deriv_component(i0),
            self.deriv_component(i1),
            if self.dim == 3 { self.deriv_component(i2) } else { 0.0 },
        ]
    }

    #[inline]
    fn deriv_component(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            Self::index_wavenumber(i, self.n) as f64
        }
    }

    #[inline]
    pub fn multi_index(&self, linear: usize) -> [usize; 3] {
        let n12 = self.shape[1] * self.shape[2];
        let i0 = linear / n12;
        let rem = linear % n12;
        [i0, rem / self.shape[2], rem % self.shape[2]]
    }

    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    /// Linear index of the mode conjugate to `linear` (componentwise `-k`
    /// modulo `N`). Real fields carry conjugate coefficients there.
    pub fn conjugate_index(&self, linear: usize) -> usize {
        let idx = self.multi_index(linear);
        let neg = |i: usize| if i == 0 { 0 } else { self.n - i };
        self.linear_index([neg(idx[0]), neg(idx[1]), if self.dim == 3 { neg(idx[2]) } else { 0 }])
    }

    /// Physical coordinates of a collocation point.
    pub fn point(&self, idx: [usize; 3]) -> [f64; 3] {
        let h = PERIOD / self.n as f64;
        [
            idx[0] as f64 * h,
            idx[1] as f64 * h,
            if self.dim == 3 { idx[2] as f64 * h } else { 0.0 },
        ]
    }
}
