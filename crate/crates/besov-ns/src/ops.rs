//! Exact spectral-multiplier operators and pointwise products.
//!
//! Products are formed in physical space, either at full resolution (the
//! aliased product algebra in which decomposition identities hold exactly)
//! or on a 3/2 zero-padded grid that leaves every retained mode alias-free.
//! Differential symbols use derivative wavenumbers (Nyquist zeroed), heat
//! multipliers use the true `|k|^2`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{check_same_grid, FourierField, TensorField, TimeTrace};
use crate::grid::TorusGrid;

/// How pointwise products are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductMode {
    /// Multiply on the native grid; aliasing folds back consistently.
    Full,
    /// Zero-pad to `3N/2` points per axis before multiplying.
    #[default]
    Dealiased,
}

fn product_shape(grid: &TorusGrid, mode: ProductMode) -> [usize; 3] {
    match mode {
        ProductMode::Full => grid.shape(),
        ProductMode::Dealiased => {
            let m = 3 * grid.n() / 2;
            if grid.dim() == 2 {
                [m, m, 1]
            } else {
                [m, m, m]
            }
        }
    }
}

fn pad_index_map(grid: &TorusGrid, pshape: [usize; 3]) -> Vec<usize> {
    let n = grid.n();
    let mut map = Vec::with_capacity(grid.len());
    for lin in 0..grid.len() {
        let idx = grid.multi_index(lin);
        let mut dest = [0usize; 3];
        for a in 0..3 {
            if pshape[a] == 1 {
                dest[a] = 0;
                continue;
            }
            let i = idx[a];
            let k = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            dest[a] = if k >= 0 { k as usize } else { (pshape[a] as i64 + k) as usize };
        }
        map.push((dest[0] * pshape[1] + dest[1]) * pshape[2] + dest[2]);
    }
    map
}

/// Physical samples of each component on the product grid for `mode`.
fn physical_on_product_grid(f: &FourierField, mode: ProductMode) -> (Vec<Vec<Complex64>>, [usize; 3]) {
    let grid = f.grid();
    let pshape = product_shape(grid, mode);
    let plen = pshape[0] * pshape[1] * pshape[2];
    let map = match mode {
        ProductMode::Full => None,
        ProductMode::Dealiased => Some(pad_index_map(grid, pshape)),
    };
    let comps = (0..f.ncomp())
        .map(|c| {
            let mut data = match &map {
                None => f.component(c).to_vec(),
                Some(map) => {
                    let mut padded = vec![Complex64::default(); plen];
                    for (src, &dst) in f.component(c).iter().zip(map) {
                        padded[dst] = *src;
                    }
                    padded
                }
            };
            fft::inverse(&mut data, pshape);
            data
        })
        .collect();
    (comps, pshape)
}

fn coeffs_from_product_grid(
    mut phys: Vec<Complex64>,
    pshape: [usize; 3],
    grid: &TorusGrid,
    mode: ProductMode,
) -> Vec<Complex64> {
    fft::forward(&mut phys, pshape);
    match mode {
        ProductMode::Full => phys,
        ProductMode::Dealiased => {
            let map = pad_index_map(grid, pshape);
            map.into_iter().map(|src| phys[src]).collect()
        }
    }
}

/// Componentwise pointwise product of two fields with equal component counts.
pub fn pointwise_product(f: &FourierField, g: &FourierField, mode: ProductMode) -> Result<FourierField> {
    check_same_grid(f.grid(), g.grid())?;
    if f.ncomp() != g.ncomp() {
        return Err(Error::InvalidArgument("component counts differ".into()));
    }
    let grid = f.grid().clone();
    let (fp, pshape) = physical_on_product_grid(f, mode);
    let (gp, _) = physical_on_product_grid(g, mode);
    let comps = fp
        .into_iter()
        .zip(gp)
        .map(|(a, b)| {
            let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            coeffs_from_product_grid(prod, pshape, &grid, mode)
        })
        .collect();
    FourierField::from_coeffs(grid, comps)
}

/// Rank-2 tensor with entry `(row, col) = u_row * v_col`, formed pointwise.
pub fn gradient_tensor(u: &FourierField, v: &FourierField, mode: ProductMode) -> Result<TensorField> {
    check_same_grid(u.grid(), v.grid())?;
    let grid = u.grid().clone();
    let d = grid.dim();
    if u.ncomp() != d || v.ncomp() != d {
        return Err(Error::InvalidArgument(format!("tensor product needs {d}-component fields")));
    }
    let (up, pshape) = physical_on_product_grid(u, mode);
    let (vp, _) = physical_on_product_grid(v, mode);
    let mut comps = Vec::with_capacity(d * d);
    for row in 0..d {
        for col in 0..d {
            let prod: Vec<Complex64> =
                up[row].iter().zip(&vp[col]).map(|(x, y)| x * y).collect();
            comps.push(coeffs_from_product_grid(prod, pshape, &grid, mode));
        }
    }
    TensorField::new(grid, comps)
}

/// Divergence over the row index: component `i` is `sum_row i*k_row*M[row,i]`.
pub fn divergence_of_tensor(m: &TensorField) -> FourierField {
    let grid = m.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let mut comps = vec![vec![Complex64::default(); len]; d];
    for lin in 0..len {
        let k = grid.deriv_wavenumbers(lin);
        for (col, out) in comps.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for row in 0..d {
                acc += Complex64::new(0.0, k[row]) * m.entry(row, col)[lin];
            }
            out[lin] = acc;
        }
    }
    FourierField::from_coeffs(grid, comps).expect("component shape is consistent")
}

/// Removes the gradient part mode by mode: `fhat - k (k.fhat)/|k|^2`, with
/// the zero mode (and modes whose derivative wavenumber vanishes) untouched.
pub fn leray_project(f: &FourierField) -> Result<FourierField> {
    let grid = f.grid().clone();
    let d = grid.dim();
    if f.ncomp() != d {
        return Err(Error::InvalidArgument(format!("projection needs {d}-component fields")));
    }
    let len = grid.len();
    let mut comps: Vec<Vec<Complex64>> = (0..d).map(|i| f.component(i).to_vec()).collect();
    for lin in 0..len {
        let k = grid.deriv_wavenumbers(lin);
        let ksq: f64 = k.iter().map(|x| x * x).sum();
        if ksq == 0.0 {
            continue;
        }
        let mut dot = Complex64::default();
        for (i, comp) in comps.iter().enumerate() {
            dot += k[i] * comp[lin];
        }
        let scale = dot / ksq;
        for (i, comp) in comps.iter_mut().enumerate() {
            comp[lin] -= k[i] * scale;
        }
    }
    let mut out = FourierField::from_coeffs(grid, comps)?;
    out.set_divergence_free(true);
    Ok(out)
}

/// Heat semigroup `exp(t*Laplacian)` with unit viscosity; `t >= 0`.
pub fn heat_semigroup(f: &FourierField, t: f64) -> Result<FourierField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("heat semigroup needs t >= 0, got {t}")));
    }
    let mut out = f.clone();
    let table = heat_table(f.grid(), t);
    out.apply_radial_table(&table);
    Ok(out)
}

pub(crate) fn heat_table(grid: &TorusGrid, t: f64) -> Vec<f64> {
    (0..=grid.max_ksq()).map(|ksq| (-f64::from(ksq) * t).exp()).collect()
}

/// Trace of the free heat flow `t -> exp(t*Laplacian) u0` on given times.
pub fn heat_flow_trace(u0: &FourierField, times: Vec<f64>) -> Result<TimeTrace> {
    let fields = times
        .iter()
        .map(|&t| heat_semigroup(u0, t))
        .collect::<Result<Vec<_>>>()?;
    TimeTrace::new(times, fields)
}

/// `P div(u (x) v)`: the projected nonlinearity driving the Oseen integral.
pub fn projected_tensor_divergence(
    u: &FourierField,
    v: &FourierField,
    mode: ProductMode,
) -> Result<FourierField> {
    let tensor = gradient_tensor(u, v, mode)?;
    leray_project(&divergence_of_tensor(&tensor))
}

/// Gradient of a single-component field, `(i k~_1 g, ..., i k~_d g)`.
pub fn gradient_of_scalar(g: &FourierField) -> Result<FourierField> {
    if g.ncomp() != 1 {
        return Err(Error::InvalidArgument("gradient takes a single-component field".into()));
    }
    let grid = g.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let mut comps = vec![vec![Complex64::default(); len]; d];
    for lin in 0..len {
        let k = grid.deriv_wavenumbers(lin);
        for (i, comp) in comps.iter_mut().enumerate() {
            comp[lin] = Complex64::new(0.0, k[i]) * g.component(0)[lin];
        }
    }
    FourierField::from_coeffs(grid, comps)
}

/// The 2-d cellular flow `(cos x sin y, -sin x cos y)`; divergence-free with
/// all energy at `|k|^2 = 2`, so the free heat flow decays it as `exp(-2t)`.
pub fn taylor_green(grid: &Arc<TorusGrid>) -> Result<FourierField> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("the cellular test flow is 2-dimensional".into()));
    }
    let len = grid.len();
    let mut u = vec![0.0f64; len];
    let mut v = vec![0.0f64; len];
    for lin in 0..len {
        let p = grid.point(grid.multi_index(lin));
        u[lin] = p[0].cos() * p[1].sin();
        v[lin] = -p[0].sin() * p[1].cos();
    }
    let mut f = FourierField::from_physical(grid.clone(), &[u, v])?;
    f.set_divergence_free(true);
    Ok(f)
}
