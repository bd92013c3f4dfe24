//! Norm evaluators: collocation Lebesgue norms, dyadic Besov norms, mixed
//! time-space (Chemin-Lerner style) norms, weighted sup norms, the heat-flow
//! characterization of negative-regularity Besov norms, and two embedding
//! checks that report measured ratios.
//!
//! Lebesgue norms use the collocation quadrature
//! `((2*pi/N)^d * sum |f(x)|^q)^(1/q)` with the pointwise Euclidean magnitude
//! over components; `q = f64::INFINITY` takes the grid maximum. Time
//! integrals use trapezoid quadrature on the sample grid, with linear
//! interpolation of the integrand at window edges.

use serde::Serialize;

use crate::dyadic::DyadicFamily;
use crate::error::{Error, Result};
use crate::field::{check_same_grid, FourierField, TimeTrace};
use crate::grid::PERIOD;
use crate::ops::heat_semigroup;

/// Smoothness/integrability pair for a Besov norm with infinite summation
/// index: `s` any real, `q` in `[1, inf]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BesovIndex {
    pub s: f64,
    pub q: f64,
}

impl BesovIndex {
    pub fn new(s: f64, q: f64) -> Result<Self> {
        validate_exponent(q)?;
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("smoothness index must be finite, got {s}")));
        }
        Ok(Self { s, q })
    }
}

/// Time-Lebesgue exponent, Besov index, and horizon for a mixed norm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheminLernerIndex {
    pub p: f64,
    pub besov: BesovIndex,
    pub horizon: f64,
}

impl CheminLernerIndex {
    pub fn new(p: f64, besov: BesovIndex, horizon: f64) -> Result<Self> {
        validate_exponent(p)?;
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { p, besov, horizon })
    }
}

fn validate_exponent(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidArgument(format!("Lebesgue exponent must lie in [1, inf], got {q}")));
    }
    Ok(())
}

/// Collocation `L^q` norm of the pointwise magnitude.
pub fn lp_norm(f: &FourierField, q: f64) -> Result<f64> {
    validate_exponent(q)?;
    let mag = f.physical_magnitude();
    if q.is_infinite() {
        return Ok(mag.into_iter().fold(0.0, f64::max));
    }
    let vol = f.grid().cell_volume();
    let sum: f64 = mag.iter().map(|m| m.powf(q)).sum();
    Ok((vol * sum).powf(1.0 / q))
}

/// `max_j 2^(s j) |Delta_j f|_q` over all bands of the family.
pub fn besov_norm(f: &FourierField, idx: BesovIndex, fam: &DyadicFamily) -> Result<f64> {
    check_same_grid(f.grid(), fam.grid())?;
    let mut best = 0.0f64;
    for j in fam.band_indices() {
        let block = fam.block(f, j)?;
        let v = 2.0f64.powf(idx.s * j as f64) * lp_norm(&block, idx.q)?;
        best = best.max(v);
    }
    Ok(best)
}

/// Trapezoid `L^p` norm of sampled nonnegative values over `[t0, t1]`,
/// interpolating linearly at the window edges; `p = inf` takes the sup.
pub(crate) fn windowed_time_norm(times: &[f64], values: &[f64], p: f64, t0: f64, t1: f64) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    debug_assert!(t1 > t0);
    let value_at = |t: f64| -> f64 {
        match times.iter().position(|&s| s >= t) {
            Some(0) => values[0],
            Some(i) => {
                let (ta, tb) = (times[i - 1], times[i]);
                let w = (t - ta) / (tb - ta);
                values[i - 1] * (1.0 - w) + values[i] * w
            }
            None => *values.last().unwrap(),
        }
    };
    if p.is_infinite() {
        let mut sup = value_at(t0).max(value_at(t1));
        for (t, v) in times.iter().zip(values) {
            if *t >= t0 && *t <= t1 {
                sup = sup.max(*v);
            }
        }
        return sup;
    }
    let mut knots: Vec<(f64, f64)> = vec![(t0, value_at(t0))];
    for (t, v) in times.iter().zip(values) {
        if *t > t0 && *t < t1 {
            knots.push((*t, *v));
        }
    }
    knots.push((t1, value_at(t1)));
    let mut acc = 0.0;
    for w in knots.windows(2) {
        let (ta, va) = w[0];
        let (tb, vb) = w[1];
        acc += 0.5 * (va.powf(p) + vb.powf(p)) * (tb - ta);
    }
    acc.powf(1.0 / p)
}

/// Mixed norm `max_j 2^(s j) | |Delta_j u(t)|_q |_{L^p[0,T]}`.
pub fn chemin_lerner_norm(u: &TimeTrace, idx: CheminLernerIndex, fam: &DyadicFamily) -> Result<f64> {
    check_same_grid(u.grid(), fam.grid())?;
    if idx.horizon > u.end_time() * (1.0 + 1e-12) {
        return Err(Error::TimeOutOfRange { t: idx.horizon, start: 0.0, end: u.end_time() });
    }
    let t1 = idx.horizon.min(u.end_time());
    let mut best = 0.0f64;
    for j in fam.band_indices() {
        let series: Vec<f64> = u
            .fields()
            .iter()
            .map(|f| lp_norm(&fam.block(f, j)?, idx.besov.q))
            .collect::<Result<Vec<_>>>()?;
        let time_norm = windowed_time_norm(u.times(), &series, idx.p, 0.0, t1);
        best = best.max(2.0f64.powf(idx.besov.s * j as f64) * time_norm);
    }
    Ok(best)
}

/// `sup_(t>0) t^(mu/2) |u(t)|_inf` over the positive trace samples.
pub fn weighted_sup_norm(u: &TimeTrace, mu: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    let mut seen = false;
    for (i, &t) in u.times().iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        seen = true;
        let v = lp_norm(u.field(i), f64::INFINITY)?;
        sup = sup.max(t.powf(mu / 2.0) * v);
    }
    if !seen {
        return Err(Error::EmptyTrace);
    }
    Ok(sup)
}

/// Number of points in the geometric smoothing-time grid.
pub const HEAT_THETA_POINTS: usize = 32;
/// The grid spans `delta * 2^-HEAT_THETA_SPAN_LOG2` up to `delta`.
pub const HEAT_THETA_SPAN_LOG2: f64 = 20.0;

/// Smoothing times used by [`heat_characterization_norm`].
pub fn heat_theta_grid(delta: f64) -> Vec<f64> {
    (0..HEAT_THETA_POINTS)
        .map(|i| {
            let frac = i as f64 / (HEAT_THETA_POINTS - 1) as f64;
            delta * 2.0f64.powf(-HEAT_THETA_SPAN_LOG2 * (1.0 - frac))
        })
        .collect()
}

/// Heat-flow characterization `sup_theta theta^(s/2) |exp(theta*Lap) f|_q`
/// of the `B^(-s)` norm, taken over a fixed geometric grid in `(0, delta]`.
pub fn heat_characterization_norm(f: &FourierField, s: f64, q: f64, delta: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("smoothing order must be positive, got {s}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    validate_exponent(q)?;
    let mut sup = 0.0f64;
    for theta in heat_theta_grid(delta) {
        let smoothed = heat_semigroup(f, theta)?;
        sup = sup.max(theta.powf(s / 2.0) * lp_norm(&smoothed, q)?);
    }
    Ok(sup)
}

/// Inhomogeneous Sobolev norm `((2 pi)^d sum_k (1+|k|^2)^alpha |fhat|^2)^(1/2)`.
/// The volume factor makes `alpha = 0` agree with the collocation `L^2` norm.
pub fn sobolev_h_norm(f: &FourierField, alpha: f64) -> f64 {
    let grid = f.grid();
    let vol = PERIOD.powi(grid.dim() as i32);
    let mut sum = 0.0f64;
    for m in 0..grid.len() {
        let weight = (1.0 + grid.ksq(m)).powf(alpha);
        let mut sq = 0.0;
        for c in 0..f.ncomp() {
            sq += f.component(c)[m].norm_sqr();
        }
        sum += weight * sq;
    }
    (vol * sum).sqrt()
}

/// Measured data for one multiplicative interpolation check.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub lhs: f64,
    pub factors: Vec<f64>,
    pub exponents: Vec<f64>,
    pub rhs: f64,
    /// `lhs / rhs`; finite whenever the right side is nonzero.
    pub ratio: f64,
}

impl RatioReport {
    fn new(lhs: f64, factors: Vec<f64>, exponents: Vec<f64>) -> Self {
        let rhs = factors
            .iter()
            .zip(&exponents)
            .map(|(f, e)| f.powf(*e))
            .product();
        Self { lhs, factors, exponents, rhs, ratio: lhs / rhs }
    }
}

/// Sobolev/Besov interpolation bound for an intermediate Lebesgue norm:
/// `|f|_q <= C |f|_{H^alpha}^(1-alpha/beta) |f|_{B^(alpha-beta),inf}^(alpha/beta)`
/// with `1/q = (1 - alpha/beta)/2`. Returns the measured sides.
pub fn check_gmo(f: &FourierField, alpha: f64, beta: f64, fam: &DyadicFamily) -> Result<RatioReport> {
    if !(alpha > 0.0 && beta > alpha) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha < beta, got alpha={alpha}, beta={beta}"
        )));
    }
    let theta = 1.0 - alpha / beta;
    let q = 2.0 / theta;
    let lhs = lp_norm(f, q)?;
    let sober = sobolev_h_norm(f, alpha);
    let besov = besov_norm(f, BesovIndex::new(alpha - beta, f64::INFINITY)?, fam)?;
    Ok(RatioReport::new(lhs, vec![sober, besov], vec![theta, alpha / beta]))
}

/// Endpoint interpolation: the sup norm against Besov norms of opposite
/// signs, `|f|_inf <= C |f|_{B^(-r)}^(sigma/(r+sigma)) |f|_{B^sigma}^(r/(r+sigma))`.
pub fn check_interpolation(f: &FourierField, r: f64, sigma: f64, fam: &DyadicFamily) -> Result<RatioReport> {
    if !(r > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need positive indices, got r={r}, sigma={sigma}"
        )));
    }
    let lhs = lp_norm(f, f64::INFINITY)?;
    let lo = besov_norm(f, BesovIndex::new(-r, f64::INFINITY)?, fam)?;
    let hi = besov_norm(f, BesovIndex::new(sigma, f64::INFINITY)?, fam)?;
    Ok(RatioReport::new(
        lhs,
        vec![lo, hi],
        vec![sigma / (r + sigma), r / (r + sigma)],
    ))
}
