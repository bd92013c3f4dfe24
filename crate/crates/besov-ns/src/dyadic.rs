//! Dyadic frequency decomposition with a smooth radial transition profile.
//!
//! The cutoff `phi` equals 1 on `|xi| <= 1`, vanishes for `|xi| >= 2`, and
//! interpolates with the classical `exp(-1/t)` glue in between. Band `j`
//! multiplies by `psi(k/2^j) = phi(k/2^(j+1)) - phi(k/2^j)`; band `-1` is the
//! low-pass `phi(k)` itself. The top band is closed off as `1 - phi(k/2^J)`
//! so the finite lattice carries an exact partition of unity.
//!
//! Because lattice modes have integer `|k|^2`, every multiplier is tabulated
//! once per distinct `|k|^2`, which keeps families cheap on 3-d grids.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::grid::TorusGrid;

fn glue(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 for `t <= 1`, 0 for `t >= 2`.
pub fn transition_chi(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let a = glue(2.0 - t);
        a / (a + glue(t - 1.0))
    }
}

/// Radial low-pass profile `phi(xi) = chi(|xi|)`.
pub fn phi_profile(xi: f64) -> f64 {
    transition_chi(xi.abs())
}

/// Band profile `psi(xi) = phi(xi/2) - phi(xi)`, supported in `1 < |xi| < 4`.
pub fn psi_profile(xi: f64) -> f64 {
    phi_profile(xi / 2.0) - phi_profile(xi)
}

/// Tabulated dyadic family for one grid.
#[derive(Debug, Clone)]
pub struct DyadicFamily {
    grid: Arc<TorusGrid>,
    jmax: i32,
    /// `phi(|k|/2^j)` for `j in 0..=jmax+1`, indexed by integer `|k|^2`.
    lowpass: Vec<Vec<f64>>,
    /// Band multipliers for `j in -1..=jmax` (index shifted by one).
    bands: Vec<Vec<f64>>,
}

/// Builds the family for `grid`, scanning band occupancy to fix the top index.
pub fn build_dyadic_family(grid: &Arc<TorusGrid>) -> DyadicFamily {
    let max_ksq = grid.max_ksq() as f64;
    // Band j is occupied iff some lattice mode has |k| > 2^j.
    let mut jmax = 0i32;
    while 4.0f64.powi(jmax + 1) < max_ksq {
        jmax += 1;
    }

    let table_len = grid.max_ksq() as usize + 1;
    let mut lowpass = Vec::with_capacity(jmax as usize + 2);
    for j in 0..=jmax + 1 {
        let scale = 2.0f64.powi(j);
        let row: Vec<f64> = (0..table_len)
            .map(|ksq| phi_profile((ksq as f64).sqrt() / scale))
            .collect();
        lowpass.push(row);
    }

    let mut bands = Vec::with_capacity(jmax as usize + 2);
    bands.push(lowpass[0].clone());
    for j in 0..jmax {
        let (lo, hi) = (&lowpass[j as usize], &lowpass[j as usize + 1]);
        bands.push(lo.iter().zip(hi).map(|(a, b)| b - a).collect());
    }
    // Top-band closure: everything the scaled cutoff has not yet covered.
    bands.push(lowpass[jmax as usize].iter().map(|a| 1.0 - a).collect());

    DyadicFamily { grid: grid.clone(), jmax, lowpass, bands }
}

impl DyadicFamily {
    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    /// Largest band index; valid block indices are `-1..=jmax`.
    pub fn jmax(&self) -> i32 {
        self.jmax
    }

    pub fn band_indices(&self) -> impl Iterator<Item = i32> {
        -1..=self.jmax
    }

    /// Multiplier table for band `j`, indexed by integer `|k|^2`.
    pub fn band_profile(&self, j: i32) -> Result<&[f64]> {
        if j < -1 || j > self.jmax {
            return Err(Error::InvalidArgument(format!(
                "band index {j} outside -1..={}",
                self.jmax
            )));
        }
        Ok(&self.bands[(j + 1) as usize])
    }

    /// Frequency block `Delta_j f`; `j = -1` is the base low-pass block.
    pub fn block(&self, f: &FourierField, j: i32) -> Result<FourierField> {
        let profile = self.band_profile(j)?;
        let mut out = f.clone();
        out.apply_radial_table(profile);
        Ok(out)
    }

    /// Low-pass partial sum `S_j f` for `j >= 0`; indices past the top band
    /// return the field unchanged (their cutoff is 1 on the whole lattice).
    pub fn low_pass(&self, f: &FourierField, j: i32) -> Result<FourierField> {
        if j < 0 {
            return Err(Error::InvalidArgument(format!("low-pass index {j} must be >= 0")));
        }
        if j > self.jmax + 1 {
            return Ok(f.clone());
        }
        let mut out = f.clone();
        out.apply_radial_table(&self.lowpass[j as usize]);
        Ok(out)
    }

    /// Sum of all blocks; equals the input up to rounding by the exact
    /// partition of unity.
    pub fn reconstruct(&self, f: &FourierField) -> Result<FourierField> {
        let mut acc = self.block(f, -1)?;
        for j in 0..=self.jmax {
            acc.add_scaled(&self.block(f, j)?, 1.0)?;
        }
        Ok(acc)
    }

    /// CSV dump of every band profile against integer `|k|^2`.
    pub fn profiles_csv(&self) -> String {
        let mut out = String::from("ksq,k");
        for j in self.band_indices() {
            out.push_str(&format!(",band_{j}"));
        }
        out.push('\n');
        for ksq in 0..self.bands[0].len() {
            out.push_str(&format!("{ksq},{}", (ksq as f64).sqrt()));
            for j in self.band_indices() {
                out.push_str(&format!(",{}", self.bands[(j + 1) as usize][ksq]));
            }
            out.push('\n');
        }
        out
    }
}
