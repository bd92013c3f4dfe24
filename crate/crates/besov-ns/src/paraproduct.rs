//! Two-term frequency-interaction splitting of a product and empirical
//! operator-norm estimation for its mapping laws.
//!
//! The splitting is `pi1(f,g) = sum_{j>=-1} S_{j+1}f . Delta_j g` and
//! `pi2(f,g) = sum_{j>=0} S_j f . Delta_j g`, so that
//! `f g = pi1(f,g) + pi2(g,f)` exactly. All products inside the sums run at
//! full resolution on the native grid; the decomposition identity is then
//! exact in the aliased product algebra and serves as a test anchor.

use num_complex::Complex64;

use crate::dyadic::DyadicFamily;
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{check_same_grid, FourierField, TensorField, TimeTrace};
use crate::norms::{
    besov_norm, chemin_lerner_norm, lp_norm, windowed_time_norm, BesovIndex, CheminLernerIndex,
};
use crate::ops::{divergence_of_tensor, leray_project};
use crate::solver::OseenQuadrature;

/// `1/c = 1/a + 1/b` with the usual conventions for infinity.
pub fn combine_exponents(a: f64, b: f64) -> Result<f64> {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let s = inv(a) + inv(b);
    if s > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "exponents {a} and {b} combine to an integrability below 1"
        )));
    }
    if s == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / s)
    }
}

/// Index bookkeeping for one mapping law of the splitting: first factor of
/// low regularity `-sigma1` and integrability `q1` (time exponent `p1`),
/// second factor `(sigma2, q2, p2)`; the image has regularity
/// `sigma2 - sigma1` and the combined integrabilities.
#[derive(Debug, Clone, Copy)]
pub struct ParaproductLawSpec {
    pub sigma1: f64,
    pub sigma2: f64,
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl ParaproductLawSpec {
    pub fn new(sigma1: f64, sigma2: f64, q1: f64, q2: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > sigma1) {
            return Err(Error::InvalidArgument(
                "regularities must satisfy 0 < sigma1 < sigma2".into(),
            ));
        }
        for e in [q1, q2, p1, p2] {
            if !(e >= 1.0) {
                return Err(Error::InvalidArgument(format!("integrability {e} below 1")));
            }
        }
        let spec = Self { sigma1, sigma2, q1, q2, p1, p2 };
        spec.q()?;
        spec.p()?;
        Ok(spec)
    }

    /// Image-space integrability.
    pub fn q(&self) -> Result<f64> {
        combine_exponents(self.q1, self.q2)
    }

    /// Image-space time exponent for the trace variant.
    pub fn p(&self) -> Result<f64> {
        combine_exponents(self.p1, self.p2)
    }
}

fn check_pair(f: &FourierField, g: &FourierField, fam: &DyadicFamily) -> Result<()> {
    check_same_grid(f.grid(), g.grid())?;
    check_same_grid(f.grid(), fam.grid())?;
    if f.ncomp() != g.ncomp() {
        return Err(Error::InvalidArgument(format!(
            "component counts differ: {} vs {}",
            f.ncomp(),
            g.ncomp()
        )));
    }
    Ok(())
}

/// Shared block-sum core: accumulates `lowpass(f, j + shift) . block(g, j)`
/// over bands `j >= start` in physical space, one forward transform at the
/// end per component.
fn block_sum(
    f: &FourierField,
    g: &FourierField,
    fam: &DyadicFamily,
    shift: i32,
    start: i32,
) -> Result<FourierField> {
    check_pair(f, g, fam)?;
    let grid = f.grid().clone();
    let ncomp = f.ncomp();
    let mut acc: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; ncomp];
    for j in fam.band_indices().filter(|&j| j >= start) {
        let sf = fam.low_pass(f, j + shift)?;
        let dg = fam.block(g, j)?;
        let sp = sf.to_physical_complex();
        let dp = dg.to_physical_complex();
        for c in 0..ncomp {
            for (a, (s, d)) in acc[c].iter_mut().zip(sp[c].iter().zip(dp[c].iter())) {
                *a += s * d;
            }
        }
    }
    for comp in &mut acc {
        fft::forward(comp, grid.shape());
    }
    FourierField::from_coeffs(grid, acc)
}

/// Low-times-high interaction: `sum_{j>=-1} S_{j+1}f . Delta_j g`,
/// componentwise.
pub fn pi1(f: &FourierField, g: &FourierField, fam: &DyadicFamily) -> Result<FourierField> {
    block_sum(f, g, fam, 1, -1)
}

/// Strictly-lower-times-high interaction: `sum_{j>=0} S_j f . Delta_j g`,
/// componentwise.
pub fn pi2(f: &FourierField, g: &FourierField, fam: &DyadicFamily) -> Result<FourierField> {
    block_sum(f, g, fam, 0, 0)
}

/// Empirical operator-norm estimate over a corpus.
#[derive(Debug, Clone)]
pub struct LawEstimate {
    pub pi1_max_ratio: f64,
    pub pi2_max_ratio: f64,
    /// Per retained pair: the two ratios.
    pub per_pair: Vec<[f64; 2]>,
    /// Pairs dropped for a vanishing denominator.
    pub skipped: usize,
}

/// Max over the corpus of
/// `besov(pi_k(f,g), (s2-s1, q)) / (besov(f, (-s1, q1)) besov(g, (s2, q2)))`
/// for both splittings.
pub fn estimate_law_constant(
    spec: &ParaproductLawSpec,
    pairs: &[(FourierField, FourierField)],
    fam: &DyadicFamily,
) -> Result<LawEstimate> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    let out_idx = BesovIndex::new(spec.sigma2 - spec.sigma1, spec.q()?)?;
    let f_idx = BesovIndex::new(-spec.sigma1, spec.q1)?;
    let g_idx = BesovIndex::new(spec.sigma2, spec.q2)?;
    let mut est = LawEstimate { pi1_max_ratio: 0.0, pi2_max_ratio: 0.0, per_pair: Vec::new(), skipped: 0 };
    for (f, g) in pairs {
        let den = besov_norm(f, f_idx, fam)? * besov_norm(g, g_idx, fam)?;
        if den <= f64::MIN_POSITIVE {
            est.skipped += 1;
            continue;
        }
        let r1 = besov_norm(&pi1(f, g, fam)?, out_idx, fam)? / den;
        let r2 = besov_norm(&pi2(f, g, fam)?, out_idx, fam)? / den;
        est.pi1_max_ratio = est.pi1_max_ratio.max(r1);
        est.pi2_max_ratio = est.pi2_max_ratio.max(r2);
        est.per_pair.push([r1, r2]);
    }
    if est.per_pair.is_empty() {
        return Err(Error::InvalidArgument("all corpus denominators vanish".into()));
    }
    Ok(est)
}

/// How the first factor of a trace pair is measured in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstFactorTimeNorm {
    /// Blockwise-in-frequency time norm with indices `(p1, (-sigma1, q1))`.
    CheminLerner,
    /// Plain `L^p1` in time of the spatial `L^q1` norm; the image then keeps
    /// regularity `sigma2`.
    LebesgueLebesgue,
}

/// Trace variant of [`estimate_law_constant`]: numerator and second factor
/// in blockwise time norms over `[0, horizon]`. The ratios are horizon-free
/// on time-constant traces, which the calibration suite exploits.
pub fn estimate_law_constant_traces(
    spec: &ParaproductLawSpec,
    pairs: &[(TimeTrace, TimeTrace)],
    fam: &DyadicFamily,
    horizon: f64,
    first: FirstFactorTimeNorm,
) -> Result<LawEstimate> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    let s_out = match first {
        FirstFactorTimeNorm::CheminLerner => spec.sigma2 - spec.sigma1,
        FirstFactorTimeNorm::LebesgueLebesgue => spec.sigma2,
    };
    let out_idx = CheminLernerIndex::new(spec.p()?, BesovIndex::new(s_out, spec.q()?)?, horizon)?;
    let g_idx = CheminLernerIndex::new(spec.p2, BesovIndex::new(spec.sigma2, spec.q2)?, horizon)?;
    let mut est = LawEstimate { pi1_max_ratio: 0.0, pi2_max_ratio: 0.0, per_pair: Vec::new(), skipped: 0 };
    for (fu, gu) in pairs {
        if fu.times() != gu.times() {
            return Err(Error::InvalidArgument("trace pair must share one time grid".into()));
        }
        let f_norm = match first {
            FirstFactorTimeNorm::CheminLerner => chemin_lerner_norm(
                fu,
                CheminLernerIndex::new(spec.p1, BesovIndex::new(-spec.sigma1, spec.q1)?, horizon)?,
                fam,
            )?,
            FirstFactorTimeNorm::LebesgueLebesgue => {
                let vals = fu
                    .fields()
                    .iter()
                    .map(|f| lp_norm(f, spec.q1))
                    .collect::<Result<Vec<_>>>()?;
                windowed_time_norm(fu.times(), &vals, spec.p1, 0.0, horizon)
            }
        };
        let den = f_norm * chemin_lerner_norm(gu, g_idx, fam)?;
        if den <= f64::MIN_POSITIVE {
            est.skipped += 1;
            continue;
        }
        let mut ratios = [0.0f64; 2];
        for (slot, shift_start) in [(0usize, (1, -1)), (1usize, (0, 0))] {
            let fields = (0..fu.len())
                .map(|i| block_sum(fu.field(i), gu.field(i), fam, shift_start.0, shift_start.1))
                .collect::<Result<Vec<_>>>()?;
            let tr = TimeTrace::new(fu.times().to_vec(), fields)?;
            ratios[slot] = chemin_lerner_norm(&tr, out_idx, fam)? / den;
        }
        est.pi1_max_ratio = est.pi1_max_ratio.max(ratios[0]);
        est.pi2_max_ratio = est.pi2_max_ratio.max(ratios[1]);
        est.per_pair.push(ratios);
    }
    if est.per_pair.is_empty() {
        return Err(Error::InvalidArgument("all corpus denominators vanish".into()));
    }
    Ok(est)
}

/// The `d x d` interaction tensor with entries
/// `pi1(u_row, f_col) + pi2(u_row, f_col)`, assembled with shared
/// physical-space stacks per sample.
pub(crate) fn linearized_tensor(
    u: &FourierField,
    f: &FourierField,
    fam: &DyadicFamily,
) -> Result<TensorField> {
    check_same_grid(u.grid(), f.grid())?;
    check_same_grid(u.grid(), fam.grid())?;
    let grid = u.grid().clone();
    let d = grid.dim();
    if u.ncomp() != d || f.ncomp() != d {
        return Err(Error::InvalidArgument("both traces must have d components".into()));
    }
    let bands: Vec<i32> = fam.band_indices().collect();
    // Combined low-pass weights: S_{j+1} + S_j for j >= 0, S_0 alone at -1.
    let mut u_stack = Vec::with_capacity(bands.len());
    for &j in &bands {
        let mut v = fam.low_pass(u, j + 1)?;
        if j >= 0 {
            v.add_scaled(&fam.low_pass(u, j)?, 1.0)?;
        }
        u_stack.push(v.to_physical_complex());
    }
    let f_stack = bands
        .iter()
        .map(|&j| Ok(fam.block(f, j)?.to_physical_complex()))
        .collect::<Result<Vec<_>>>()?;
    let mut comps: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; d * d];
    for b in 0..bands.len() {
        for row in 0..d {
            for col in 0..d {
                let acc = &mut comps[row * d + col];
                let us = &u_stack[b][row];
                let fs = &f_stack[b][col];
                for (a, (x, y)) in acc.iter_mut().zip(us.iter().zip(fs.iter())) {
                    *a += x * y;
                }
            }
        }
    }
    for comp in &mut comps {
        fft::forward(comp, grid.shape());
    }
    TensorField::new(grid, comps)
}

/// The linearized advection operator: the Duhamel heat integral applied to
/// the projected divergence of the interaction tensor, sample by sample on
/// the shared time grid.
pub fn apply_linearized(
    u: &TimeTrace,
    f: &TimeTrace,
    fam: &DyadicFamily,
    quad: &OseenQuadrature,
) -> Result<TimeTrace> {
    check_same_grid(u.grid(), f.grid())?;
    if u.times() != f.times() {
        return Err(Error::InvalidArgument("traces must share one time grid".into()));
    }
    let grid = u.grid().clone();
    let times = u.times().to_vec();
    let mut fields: Vec<Option<FourierField>> = vec![None; times.len()];
    crate::solver::integrate_forcing(
        &grid,
        &times,
        quad,
        |i| {
            let m = linearized_tensor(u.field(i), f.field(i), fam)?;
            leray_project(&divergence_of_tensor(&m))
        },
        |i, out| {
            fields[i] = Some(out);
            Ok(())
        },
    )?;
    TimeTrace::new(times, fields.into_iter().map(|f| f.unwrap()).collect())
}
