//! Fields stored as Fourier coefficients on a [`TorusGrid`], and time traces.
//!
//! A [`FourierField`] holds one coefficient array per component. Real-valued
//! fields satisfy the Hermitian constraint `fhat(-k) = conj(fhat(k))`;
//! constructors that start from physical samples produce it automatically,
//! and self-conjugate modes (zero and Nyquist indices) stay real.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::TorusGrid;

pub(crate) fn check_same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a.dim() != b.dim() || a.n() != b.n() {
        return Err(Error::GridMismatch { left: a.n(), right: b.n() });
    }
    Ok(())
}

/// Vector (or scalar, or generic multi-component) field in coefficient space.
#[derive(Debug, Clone)]
pub struct FourierField {
    grid: Arc<TorusGrid>,
    comps: Vec<Vec<Complex64>>,
    divergence_free: bool,
}

impl FourierField {
    pub fn zero(grid: Arc<TorusGrid>, ncomp: usize) -> Self {
        let len = grid.len();
        Self {
            grid,
            comps: vec![vec![Complex64::default(); len]; ncomp],
            divergence_free: true,
        }
    }

    /// Wraps existing coefficient arrays; every component must have one entry
    /// per grid mode.
    pub fn from_coeffs(grid: Arc<TorusGrid>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "component has {} coefficients, grid has {} modes",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps, divergence_free: false })
    }

    /// Transforms real collocation samples (row-major per component) into
    /// coefficients.
    pub fn from_physical(grid: Arc<TorusGrid>, phys: &[Vec<f64>]) -> Result<Self> {
        let shape = grid.shape();
        let mut comps = Vec::with_capacity(phys.len());
        for samples in phys {
            if samples.len() != grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "component has {} samples, grid has {} points",
                    samples.len(),
                    grid.len()
                )));
            }
            let mut data: Vec<Complex64> =
                samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft::forward(&mut data, shape);
            comps.push(data);
        }
        Self::from_coeffs(grid, comps)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    /// Mutable coefficient access; clears the divergence-free flag because
    /// arbitrary edits cannot be tracked.
    pub fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        self.divergence_free = false;
        &mut self.comps[i]
    }

    pub(crate) fn comps_mut_keep_flags(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    pub fn divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub(crate) fn set_divergence_free(&mut self, v: bool) {
        self.divergence_free = v;
    }

    /// Physical samples of each component (real parts after synthesis).
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        self.to_physical_complex()
            .into_iter()
            .map(|c| c.into_iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn to_physical_complex(&self) -> Vec<Vec<Complex64>> {
        let shape = self.grid.shape();
        self.comps
            .iter()
            .map(|c| {
                let mut data = c.clone();
                fft::inverse(&mut data, shape);
                data
            })
            .collect()
    }

    /// Pointwise Euclidean magnitude over components, sampled on the grid.
    pub fn physical_magnitude(&self) -> Vec<f64> {
        let phys = self.to_physical_complex();
        let mut mag = vec![0.0f64; self.grid.len()];
        for comp in &phys {
            for (m, z) in mag.iter_mut().zip(comp) {
                *m += z.norm_sqr();
            }
        }
        for m in &mut mag {
            *m = m.sqrt();
        }
        mag
    }

    /// Multiplies every component by a radial symbol evaluated at `|k|^2`.
    /// Radial symbols are real and even, so realness and (exact) divergence
    /// freeness survive.
    pub fn apply_radial<F: Fn(f64) -> f64>(&mut self, symbol: F) {
        let table = self.grid.ksq_table();
        for comp in &mut self.comps {
            for (z, &ksq) in comp.iter_mut().zip(table) {
                *z *= symbol(f64::from(ksq));
            }
        }
    }

    /// Same multiplier applied from a precomputed table indexed by integer
    /// `|k|^2`.
    pub fn apply_radial_table(&mut self, values: &[f64]) {
        let table = self.grid.ksq_table();
        for comp in &mut self.comps {
            for (z, &ksq) in comp.iter_mut().zip(table) {
                *z *= values[ksq as usize];
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for comp in &mut self.comps {
            for z in comp.iter_mut() {
                *z *= c;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &FourierField, c: f64) -> Result<()> {
        check_same_grid(&self.grid, &other.grid)?;
        if self.ncomp() != other.ncomp() {
            return Err(Error::InvalidArgument("component counts differ".into()));
        }
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (za, zb) in a.iter_mut().zip(b) {
                *za += c * zb;
            }
        }
        self.divergence_free = self.divergence_free && other.divergence_free;
        Ok(())
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        let mut out = self.clone();
        out.add_scaled(other, -1.0)?;
        Ok(out)
    }

    /// Root sum of squared coefficient magnitudes over all components.
    pub fn coeff_l2(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Sum over modes of the Euclidean coefficient magnitude; an upper bound
    /// for the sup norm of the synthesized field.
    pub fn coeff_l1(&self) -> f64 {
        let len = self.grid.len();
        let mut total = 0.0;
        for m in 0..len {
            let mut sq = 0.0;
            for comp in &self.comps {
                sq += comp[m].norm_sqr();
            }
            total += sq.sqrt();
        }
        total
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn has_nan(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
    }

    /// Projects onto the Hermitian (real-field) subspace by averaging with
    /// the conjugate mirror.
    pub fn hermitian_symmetrize(&mut self) {
        let grid = self.grid.clone();
        for comp in &mut self.comps {
            for m in 0..grid.len() {
                let c = grid.conjugate_index(m);
                if c < m {
                    continue;
                }
                let a = comp[m];
                let b = comp[c];
                if c == m {
                    comp[m] = Complex64::new(a.re, 0.0);
                } else {
                    let avg = 0.5 * (a + b.conj());
                    comp[m] = avg;
                    comp[c] = avg.conj();
                }
            }
        }
    }

    /// Largest deviation from the Hermitian constraint across modes.
    pub fn hermitian_residual(&self) -> f64 {
        let grid = &self.grid;
        let mut worst = 0.0f64;
        for comp in &self.comps {
            for m in 0..grid.len() {
                let c = grid.conjugate_index(m);
                if c < m {
                    continue;
                }
                let r = (comp[m] - comp[c].conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Largest relative divergence residual `|k~ . fhat(k)| / |fhat(k)|`
    /// over modes carrying actual content (derivative wavenumbers, so the
    /// Nyquist component does not contribute). Modes more than ten orders of
    /// magnitude below the largest coefficient are transform noise and are
    /// skipped.
    pub fn max_divergence_residual(&self) -> Result<f64> {
        let d = self.grid.dim();
        if self.ncomp() != d {
            return Err(Error::InvalidArgument(format!(
                "divergence needs {d} components, field has {}",
                self.ncomp()
            )));
        }
        let len = self.grid.len();
        let mut mags = vec![0.0f64; len];
        for comp in &self.comps {
            for (m, z) in mags.iter_mut().zip(comp) {
                *m += z.norm_sqr();
            }
        }
        let floor = 1e-10 * mags.iter().cloned().fold(0.0f64, f64::max).sqrt();
        let mut worst = 0.0f64;
        for m in 0..len {
            let mag = mags[m].sqrt();
            if mag <= floor {
                continue;
            }
            let k = self.grid.deriv_wavenumbers(m);
            let mut dot = Complex64::default();
            for (i, comp) in self.comps.iter().enumerate() {
                dot += Complex64::new(0.0, k[i]) * comp[m];
            }
            worst = worst.max(dot.norm() / mag);
        }
        Ok(worst)
    }
}

/// Rank-2 field with `d*d` components stored row-major: entry `(row, col)`
/// at index `row*d + col`.
#[derive(Debug, Clone)]
pub struct TensorField {
    grid: Arc<TorusGrid>,
    comps: Vec<Vec<Complex64>>,
}

impl TensorField {
    pub fn new(grid: Arc<TorusGrid>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        let d = grid.dim();
        if comps.len() != d * d {
            return Err(Error::InvalidArgument(format!(
                "tensor needs {} components, got {}",
                d * d,
                comps.len()
            )));
        }
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::InvalidArgument("tensor component length mismatch".into()));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn entry(&self, row: usize, col: usize) -> &[Complex64] {
        &self.comps[row * self.grid.dim() + col]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }
}

/// Uniformly gridded-in-time sequence of fields sharing one grid.
#[derive(Debug, Clone)]
pub struct TimeTrace {
    grid: Arc<TorusGrid>,
    times: Vec<f64>,
    fields: Vec<FourierField>,
}

impl TimeTrace {
    /// Times must start at 0, increase strictly, and match the field list.
    pub fn new(times: Vec<f64>, fields: Vec<FourierField>) -> Result<Self> {
        if times.is_empty() || fields.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if times.len() != fields.len() {
            return Err(Error::BadTimeGrid);
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadTimeGrid);
        }
        let grid = fields[0].grid().clone();
        let ncomp = fields[0].ncomp();
        for f in &fields {
            check_same_grid(&grid, f.grid())?;
            if f.ncomp() != ncomp {
                return Err(Error::InvalidArgument("trace fields have mixed component counts".into()));
            }
        }
        Ok(Self { grid, times, fields })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn field(&self, i: usize) -> &FourierField {
        &self.fields[i]
    }

    pub fn fields(&self) -> &[FourierField] {
        &self.fields
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index of the sample at time `t`, which must match a grid point nearly
    /// exactly (relative slack only).
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.end_time().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or(Error::TimeOutOfRange { t, start: 0.0, end: self.end_time() })
    }
}

/// Time trace of rank-2 tensors, the forcing shape taken by the Oseen
/// integral.
#[derive(Debug, Clone)]
pub struct TensorTrace {
    grid: Arc<TorusGrid>,
    times: Vec<f64>,
    tensors: Vec<TensorField>,
}

impl TensorTrace {
    pub fn new(times: Vec<f64>, tensors: Vec<TensorField>) -> Result<Self> {
        if times.is_empty() || tensors.len() != times.len() {
            return Err(Error::BadTimeGrid);
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadTimeGrid);
        }
        let grid = tensors[0].grid().clone();
        for t in &tensors {
            check_same_grid(&grid, t.grid())?;
        }
        Ok(Self { grid, times, tensors })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tensor(&self, i: usize) -> &TensorField {
        &self.tensors[i]
    }
}
