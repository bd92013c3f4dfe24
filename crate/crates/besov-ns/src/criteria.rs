//! Experiments that turn the analytical statements into measurable
//! properties of solver runs: short-time regularity of the weighted sup
//! norm, windowed critical norms, a blow-up lower-bound tracker, a
//! two-solve uniqueness contraction experiment, a scalar bootstrap checker,
//! and persistence of the negative-regularity norm.
//!
//! Every experiment returns an [`ExperimentReport`] whose verdicts cite the
//! series or scalar they were judged from. Constants that the underlying
//! inequalities leave implicit come from [`FrozenConstants`].

use serde_json::Value;

use crate::constants::{key, FrozenConstants};
use crate::dyadic::{build_dyadic_family, DyadicFamily};
use crate::error::{Error, Result};
use crate::field::{FourierField, TimeTrace};
use crate::norms::{
    besov_norm, chemin_lerner_norm, lp_norm, windowed_time_norm, BesovIndex, CheminLernerIndex,
};
use crate::report::{ExperimentReport, Provenance};
use crate::solver::{picard_solve, OseenQuadrature, QuadOrder, SolverConfig};

/// Shared experiment parameters: the criticality exponent `r`, an auxiliary
/// regularity `sigma` strictly between `r` and 1, the window sizes swept by
/// windowed quantities, and the blow-up flagging threshold.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionParams {
    pub r: f64,
    pub sigma: f64,
    pub delta_list: Vec<f64>,
    /// Blow-up threshold; `None` derives `1/(4 C^2)` from the frozen
    /// weighted bilinear constant.
    pub epsilon_guess: Option<f64>,
    /// Block integrability of the smoother intersection norm; `None` uses
    /// the dimension (the smallest value the embedding argument allows).
    pub lebesgue_q: Option<f64>,
}

impl Default for CriterionParams {
    fn default() -> Self {
        Self {
            r: 0.5,
            sigma: 0.75,
            delta_list: vec![0.1, 0.05, 0.025],
            epsilon_guess: None,
            lebesgue_q: None,
        }
    }
}

impl CriterionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidArgument(format!("r = {} outside (0, 1]", self.r)));
        }
        if !(self.sigma > self.r && self.sigma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma = {} outside ({}, 1)",
                self.sigma, self.r
            )));
        }
        if self.delta_list.is_empty() || self.delta_list.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidArgument("delta_list must hold positive windows".into()));
        }
        if let Some(q) = self.lebesgue_q {
            if !(q >= 1.0) {
                return Err(Error::InvalidArgument(format!("lebesgue_q = {q} below 1")));
            }
        }
        Ok(())
    }

    /// Flagging threshold: the guess, or `1/(4 C^2)` with `C` the frozen
    /// weighted bilinear constant.
    pub fn epsilon(&self, constants: &FrozenConstants, dim: usize) -> Result<f64> {
        match self.epsilon_guess {
            Some(e) => Ok(e),
            None => {
                let c = constants.get(&key("bilinear_weighted_1r", dim))?;
                Ok(1.0 / (4.0 * c * c))
            }
        }
    }

    fn zq(&self, dim: usize) -> f64 {
        self.lebesgue_q.unwrap_or(dim as f64)
    }

    fn delta_min(&self) -> f64 {
        self.delta_list.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn delta_max(&self) -> f64 {
        self.delta_list.iter().cloned().fold(0.0, f64::max)
    }
}

fn blank_provenance() -> Provenance {
    Provenance::new(Value::Null, None)
}

/// Windowed time-Lebesgue norm of the negative-regularity block norm:
/// the supremum over window starts `0 < t0 < T/2` of the `L^{2/(1-r)}`
/// norm of `t -> besov(u(t), (-r, inf))` over `[t0, t0 + delta]`.
pub fn theta_window(u: &TimeTrace, r: f64, delta: f64, fam: &DyadicFamily) -> Result<f64> {
    let values = besov_series(u, -r, fam)?;
    theta_window_from_series(u.times(), &values, r, delta)
}

/// Series form of [`theta_window`] for synthetic profiles.
pub fn theta_window_from_series(times: &[f64], values: &[f64], r: f64, delta: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, 1]")));
    }
    let end = *times.last().ok_or(Error::EmptyTrace)?;
    if !(delta > 0.0 && delta <= end / 2.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "window {delta} outside (0, {}]",
            end / 2.0
        )));
    }
    let p = if r < 1.0 { 2.0 / (1.0 - r) } else { f64::INFINITY };
    let mut sup = 0.0f64;
    for &t0 in times.iter().filter(|&&t| t > 0.0 && t < end / 2.0) {
        let t1 = (t0 + delta).min(end);
        sup = sup.max(windowed_time_norm(times, values, p, t0, t1));
    }
    Ok(sup)
}

/// `sup over samples 0 < t <= delta` of `t^((mu+1)/2) besov(u(t), (mu, inf))`.
pub fn h_metric(u: &TimeTrace, mu: f64, delta: f64, fam: &DyadicFamily) -> Result<f64> {
    let values = besov_series(u, mu, fam)?;
    h_metric_from_series(u.times(), &values, mu, delta)
}

/// Series form of [`h_metric`].
pub fn h_metric_from_series(times: &[f64], values: &[f64], mu: f64, delta: f64) -> Result<f64> {
    let end = *times.last().ok_or(Error::EmptyTrace)?;
    if !(delta > 0.0 && delta <= end * (1.0 + 1e-12)) {
        return Err(Error::TimeOutOfRange { t: delta, start: 0.0, end });
    }
    let expo = (mu + 1.0) / 2.0;
    let mut sup = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        if t > 0.0 && t <= delta * (1.0 + 1e-12) {
            sup = sup.max(t.powf(expo) * values[i]);
        }
    }
    Ok(sup)
}

fn besov_series(u: &TimeTrace, s: f64, fam: &DyadicFamily) -> Result<Vec<f64>> {
    let idx = BesovIndex::new(s, f64::INFINITY)?;
    u.fields().iter().map(|f| besov_norm(f, idx, fam)).collect()
}

/// Short-time regularity monitor: checks that `sqrt(t) ||u(t)||_inf`
/// decays, decade by decade, as `t` approaches 0.
pub fn regularity_monitor(u: &TimeTrace) -> Result<ExperimentReport> {
    let mut points = Vec::new();
    for (i, &t) in u.times().iter().enumerate() {
        if t > 0.0 {
            points.push((t, t.sqrt() * lp_norm(u.field(i), f64::INFINITY)?));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyTrace);
    }
    // Group by decade of t: decade k covers [10^k, 10^(k+1)).
    let mut decades: std::collections::BTreeMap<i32, (f64, usize)> = std::collections::BTreeMap::new();
    for &(t, v) in &points {
        let k = t.log10().floor() as i32;
        let e = decades.entry(k).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    if decades.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "trace resolves only {} decade(s) of t near 0; at least 2 required",
            decades.len()
        )));
    }
    let averages: Vec<(f64, f64)> = decades
        .iter()
        .map(|(k, (sum, n))| (10.0f64.powi(*k), sum / *n as f64))
        .collect();
    // Strict decay toward 0 over the smallest decades, at most three.
    let window = averages.len().min(3);
    let verdict = averages[..window].windows(2).all(|w| w[0].1 < w[1].1);

    let mut report = ExperimentReport::new("regularity_monitor", blank_provenance());
    report.add_series("sqrt_t_sup_norm", points);
    report.add_series("decade_average", averages);
    report.add_verdict("vanishing_at_zero", "decade_average", verdict)?;
    Ok(report)
}

/// Lower-bound tracker near the end of a (possibly truncated) trace.
pub fn blowup_tracker(u: &TimeTrace, r: f64, epsilon: f64) -> Result<ExperimentReport> {
    let fam = build_dyadic_family(u.grid());
    let values = besov_series(u, -r, &fam)?;
    blowup_tracker_from_series(u.times(), &values, u.end_time(), r, epsilon)
}

/// Series form of [`blowup_tracker`]: takes the norm series
/// `t -> besov(u(t), (-r, inf))` directly, so prescribed synthetic profiles
/// can be injected.
pub fn blowup_tracker_from_series(
    times: &[f64],
    values: &[f64],
    t_star: f64,
    r: f64,
    epsilon: f64,
) -> Result<ExperimentReport> {
    if times.len() != values.len() {
        return Err(Error::InvalidArgument("times and values lengths differ".into()));
    }
    if times.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "{} samples are too few to track a lower bound (need 8)",
            times.len()
        )));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, 1)")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::BadTimeGrid);
    }
    let last = *times.last().unwrap();
    if !(t_star > 0.0 && t_star >= last) {
        return Err(Error::InvalidArgument(format!(
            "t_star = {t_star} before the last sample {last}"
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("norm series must be finite and nonnegative".into()));
    }

    let weight_expo = (1.0 - r) / 2.0;
    let series: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .map(|(&t, &v)| (t, (t_star - t).max(0.0).powf(weight_expo) * v))
        .collect();

    // liminf proxy: the minimum over the last resolved decade of tau = t*-t.
    let tau_min = times
        .iter()
        .filter(|&&t| t_star - t > 0.0)
        .map(|&t| t_star - t)
        .fold(f64::INFINITY, f64::min);
    if !tau_min.is_finite() {
        return Err(Error::InvalidArgument("no sample strictly before t_star".into()));
    }
    let liminf = series
        .iter()
        .filter(|(t, _)| {
            let tau = t_star - t;
            tau > 0.0 && tau <= 10.0 * tau_min * (1.0 + 1e-12)
        })
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min);

    // Trapezoid integral of besov^(2/(1-r)) over [t*/2, last sample].
    let p = 2.0 / (1.0 - r);
    let lo = (t_star / 2.0).max(times[0]);
    let tail_integral = if lo < last {
        windowed_time_norm(times, values, p, lo, last).powf(p)
    } else {
        0.0
    };

    let mut report = ExperimentReport::new("blowup_tracker", blank_provenance());
    report.add_series("lower_bound_series", series);
    report.add_scalar("liminf_last_decade", liminf);
    report.add_scalar("tail_integral", tail_integral);
    report.add_scalar("epsilon", epsilon);
    report.add_scalar("t_star", t_star);
    report.add_verdict("blowup_flagged", "liminf_last_decade", liminf >= epsilon)?;
    Ok(report)
}

/// The intersection norm of the uniqueness argument over `[0, delta]`:
/// `max` of the smoother and the critical blockwise time norms.
pub fn z_norm(u: &TimeTrace, r: f64, q: f64, delta: f64, fam: &DyadicFamily) -> Result<f64> {
    let smooth = chemin_lerner_norm(
        u,
        CheminLernerIndex::new(2.0 / (1.0 + r), BesovIndex::new(1.0 + r, q)?, delta)?,
        fam,
    )?;
    let critical_p = if r < 1.0 { 2.0 / (1.0 - r) } else { f64::INFINITY };
    let critical = chemin_lerner_norm(
        u,
        CheminLernerIndex::new(critical_p, BesovIndex::new(-r, f64::INFINITY)?, delta)?,
        fam,
    )?;
    Ok(smooth.max(critical))
}

/// Refinement depth of the uniqueness experiment (level L halves `dt` and
/// doubles the iteration budget L times).
pub const UNIQUENESS_REFINEMENT_LEVELS: usize = 3;

/// Two solves of the same data under the same second-order quadrature but
/// different iteration budgets (the full budget against half of it),
/// compared in the intersection norm per window, under simultaneous
/// refinement of step and iteration count. Sharing the quadrature scheme
/// cancels the time-discretization error in the difference; what remains is
/// the fixed-point iteration gap, which shrinks superlinearly as the
/// budgets double, so refinement drives the difference down much faster
/// than the step size alone would.
pub fn uniqueness_experiment(
    u0: &FourierField,
    cfg: &SolverConfig,
    params: &CriterionParams,
    constants: &FrozenConstants,
) -> Result<ExperimentReport> {
    params.validate()?;
    let grid = u0.grid().clone();
    let fam = build_dyadic_family(&grid);
    let q = params.zq(grid.dim());
    let mut report = ExperimentReport::new("uniqueness_experiment", blank_provenance());
    for &d in &params.delta_list {
        if d > cfg.t_horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "window {d} exceeds the horizon {}",
                cfg.t_horizon
            )));
        }
    }

    let mut by_level = Vec::new();
    let mut floors = Vec::new();
    let mut z_last = (0.0, 0.0);
    for level in 0..UNIQUENESS_REFINEMENT_LEVELS {
        let scale = 1usize << level;
        let mut cfg_a = cfg.clone();
        cfg_a.dt = cfg.dt / scale as f64;
        cfg_a.n_picard = cfg.n_picard * scale;
        cfg_a.quad = OseenQuadrature { order: QuadOrder::Second, substeps: cfg.quad.substeps };
        cfg_a.tol_fixpoint = 0.0; // spend the full budget so levels are comparable
        let mut cfg_b = cfg_a.clone();
        cfg_b.n_picard = (cfg_a.n_picard / 2).max(1);

        let (u1, u2) = match (picard_solve(u0, &cfg_a), picard_solve(u0, &cfg_b)) {
            (Ok(a), Ok(b)) => (a.trace, b.trace),
            (Err(Error::BlowupSuspected { last_valid_time, .. }), _)
            | (_, Err(Error::BlowupSuspected { last_valid_time, .. })) => {
                report.add_scalar("halted_at_time", last_valid_time);
                report.add_verdict("solves_completed", "halted_at_time", false)?;
                return Ok(report);
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };

        let mut diff_fields = Vec::with_capacity(u1.len());
        for i in 0..u1.len() {
            diff_fields.push(u1.field(i).sub(u2.field(i))?);
        }
        let w = TimeTrace::new(u1.times().to_vec(), diff_fields)?;

        let mut z_by_delta = Vec::new();
        for &delta in &params.delta_list {
            z_by_delta.push((delta, z_norm(&w, params.r, q, delta, &fam)?));
        }
        report.add_series(format!("z_delta_difference_level{level}"), z_by_delta.clone());

        let dmax = params.delta_max();
        let z1 = z_norm(&u1, params.r, q, dmax, &fam)?;
        let z2 = z_norm(&u2, params.r, q, dmax, &fam)?;
        floors.push(1e-12 * (z1 + z2));
        by_level.push((level as f64, z_norm(&w, params.r, q, dmax, &fam)?));
        if level == UNIQUENESS_REFINEMENT_LEVELS - 1 {
            let dmin = params.delta_min();
            z_last = (
                z_norm(&u1, params.r, q, dmin, &fam)?,
                z_norm(&u2, params.r, q, dmin, &fam)?,
            );
        }
    }
    report.add_series("difference_by_level", by_level.clone());
    report.add_scalar("solves_per_level", 2.0);
    report.add_verdict("solves_completed", "solves_per_level", true)?;

    let refinement_ok = by_level.windows(2).enumerate().all(|(i, w)| {
        let (d0, d1) = (w[0].1, w[1].1);
        d1 <= 0.1 * d0 || (d0 <= floors[i] && d1 <= floors[i + 1])
    });
    report.add_verdict("difference_vanishes_with_refinement", "difference_by_level", refinement_ok)?;

    let c = constants.get(&key("uniqueness_contraction_c", grid.dim()))?;
    let factor = c * (z_last.0 + z_last.1);
    report.add_scalar("z_u1_delta_min", z_last.0);
    report.add_scalar("z_u2_delta_min", z_last.1);
    report.add_scalar("contraction_factor", factor);
    report.add_verdict("contraction_below_one", "contraction_factor", factor < 1.0)?;
    Ok(report)
}

/// Stability variant of the two-solve experiment: perturbs the data instead
/// of the numerical method and runs the identical configuration on both.
/// This probes continuity in the data, which is a different question from
/// uniqueness of the mild solution; the two must not be conflated when
/// reading reports.
pub fn stability_experiment(
    u0: &FourierField,
    cfg: &SolverConfig,
    params: &CriterionParams,
    perturbation_l2: f64,
    seed: u64,
) -> Result<ExperimentReport> {
    params.validate()?;
    if !(perturbation_l2 > 0.0) {
        return Err(Error::InvalidArgument("perturbation size must be positive".into()));
    }
    let grid = u0.grid().clone();
    let fam = build_dyadic_family(&grid);
    let q = params.zq(grid.dim());
    let mut noise = crate::corpus::random_field(
        &grid,
        seed,
        crate::corpus::RandomFieldOpts {
            ncomp: grid.dim(),
            divergence_free: true,
            zero_mean: true,
            ..crate::corpus::RandomFieldOpts::default()
        },
    );
    let l2 = noise.coeff_l2();
    if l2 == 0.0 {
        return Err(Error::InvalidArgument("perturbation field degenerated to zero".into()));
    }
    noise.scale(perturbation_l2 / l2);
    let mut v0 = u0.clone();
    v0.add_scaled(&noise, 1.0)?;

    let mut report = ExperimentReport::new("stability_experiment", blank_provenance());
    let (a, b) = match (picard_solve(u0, cfg), picard_solve(&v0, cfg)) {
        (Ok(a), Ok(b)) => (a.trace, b.trace),
        (Err(Error::BlowupSuspected { last_valid_time, .. }), _)
        | (_, Err(Error::BlowupSuspected { last_valid_time, .. })) => {
            report.add_scalar("halted_at_time", last_valid_time);
            report.add_verdict("solves_completed", "halted_at_time", false)?;
            return Ok(report);
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let mut diff_fields = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        diff_fields.push(a.field(i).sub(b.field(i))?);
    }
    let w = TimeTrace::new(a.times().to_vec(), diff_fields)?;
    let mut z_by_delta = Vec::new();
    for &delta in &params.delta_list {
        z_by_delta.push((delta, z_norm(&w, params.r, q, delta, &fam)?));
    }
    let response = params
        .delta_list
        .iter()
        .zip(&z_by_delta)
        .map(|(_, (_, z))| *z)
        .fold(0.0f64, f64::max)
        / perturbation_l2;
    report.add_series("z_delta_difference", z_by_delta);
    report.add_scalar("perturbation_l2", perturbation_l2);
    report.add_scalar("response_ratio", response);
    report.add_scalar("solves_per_level", 2.0);
    report.add_verdict("solves_completed", "solves_per_level", true)?;
    Ok(report)
}

/// Scalar bootstrap argument: under the hypotheses `4AB < 1`, `f(0) <= 2A`,
/// and `f(t) <= A + B f(t)^2` on every sample, the series can never reach
/// `2A`. A failed hypothesis yields a report without the conclusion verdict.
pub fn bootstrap_check(times: &[f64], values: &[f64], a: f64, b: f64) -> Result<ExperimentReport> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::InvalidArgument("need equally many times and values".into()));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument("coefficients must be positive".into()));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("series must be finite and nonnegative".into()));
    }
    let four_ab = 4.0 * a * b;
    let max_f = values.iter().cloned().fold(0.0f64, f64::max);

    let mut report = ExperimentReport::new("bootstrap_check", blank_provenance());
    report.add_series(
        "f",
        times.iter().zip(values).map(|(&t, &v)| (t, v)).collect(),
    );
    report.add_scalar("a", a);
    report.add_scalar("b", b);
    report.add_scalar("four_ab", four_ab);
    report.add_scalar("f_at_zero", values[0]);
    report.add_scalar("max_f", max_f);

    // Hypothesis gate. The self-consistency bound tolerates rounding since
    // the quadratic-root family satisfies it with equality.
    let mut first_bad: i64 = -1;
    for (i, &v) in values.iter().enumerate() {
        let bound = a + b * v * v;
        if v > bound * (1.0 + 1e-9) {
            first_bad = i as i64;
            break;
        }
    }
    let hypotheses = four_ab < 1.0 && values[0] <= 2.0 * a * (1.0 + 1e-12) && first_bad < 0;
    report.add_scalar("first_hypothesis_violation", first_bad as f64);
    report.add_verdict("hypotheses_met", "four_ab", hypotheses)?;
    if !hypotheses {
        return Ok(report);
    }

    let mut first_violation: i64 = -1;
    for (i, &v) in values.iter().enumerate() {
        if v > 2.0 * a * (1.0 + 1e-12) {
            first_violation = i as i64;
            break;
        }
    }
    report.add_scalar("first_violation_index", first_violation as f64);
    report.add_verdict("max_below_2a", "max_f", first_violation < 0)?;
    Ok(report)
}

/// Solves from `u0` and checks that the negative-regularity block norm
/// stays bounded by a frozen multiple of the data norm.
pub fn persistence_check(
    u0: &FourierField,
    cfg: &SolverConfig,
    r: f64,
    constants: &FrozenConstants,
) -> Result<ExperimentReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, 1)")));
    }
    let grid = u0.grid().clone();
    let fam = build_dyadic_family(&grid);
    let idx = BesovIndex::new(-r, f64::INFINITY)?;
    let data_norm = besov_norm(u0, idx, &fam)?;
    let out = picard_solve(u0, cfg)?;
    let series: Vec<(f64, f64)> = out
        .trace
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| Ok((t, besov_norm(out.trace.field(i), idx, &fam)?)))
        .collect::<Result<Vec<_>>>()?;
    let sup = series.iter().map(|(_, v)| *v).fold(0.0f64, f64::max);
    // Upper edge of the frozen envelope: the constant was measured on a
    // finite corpus, so new runs get its regression band.
    let bound = constants.interval(&key("persistence_bound", grid.dim()))?.1;

    let mut report = ExperimentReport::new("persistence_check", blank_provenance());
    report.add_series("besov_minus_r", series);
    report.add_scalar("sup_besov_minus_r", sup);
    report.add_scalar("data_norm", data_norm);
    report.add_scalar("bound_constant", bound);
    report.add_verdict("persistence_bounded", "sup_besov_minus_r", sup <= bound * data_norm + 1e-300)?;
    Ok(report)
}

/// Consistency of the windowed chain on a solver run: the smoothed metrics
/// `h(sigma, delta)` and `h(-r, delta)` against `2 C Theta(delta)` with the
/// frozen chain constants.
pub fn theta_chain_report(
    u: &TimeTrace,
    params: &CriterionParams,
    constants: &FrozenConstants,
) -> Result<ExperimentReport> {
    params.validate()?;
    let fam = build_dyadic_family(u.grid());
    // Upper band edges: corpus-envelope constants tolerate their frozen
    // regression band when judging a new trace.
    let c1 = constants.interval(&key("theta_chain_c1", u.grid().dim()))?.1;
    let c2 = constants.interval(&key("theta_chain_c2", u.grid().dim()))?.1;
    let mut theta_s = Vec::new();
    let mut h_sigma_s = Vec::new();
    let mut h_low_s = Vec::new();
    for &delta in &params.delta_list {
        theta_s.push((delta, theta_window(u, params.r, delta, &fam)?));
        h_sigma_s.push((delta, h_metric(u, params.sigma, delta, &fam)?));
        h_low_s.push((delta, h_metric(u, -params.r, delta, &fam)?));
    }
    let smooth_ok = h_sigma_s
        .iter()
        .zip(&theta_s)
        .all(|((_, h), (_, th))| *h <= 2.0 * c1 * th * (1.0 + 1e-9));
    let low_ok = h_low_s
        .iter()
        .zip(&theta_s)
        .all(|((_, h), (_, th))| *h <= 2.0 * c2 * th * (1.0 + 1e-9));

    let mut report = ExperimentReport::new("theta_chain", blank_provenance());
    report.add_series("theta", theta_s);
    report.add_series("h_sigma", h_sigma_s);
    report.add_series("h_minus_r", h_low_s);
    report.add_verdict("chain_smoothing", "h_sigma", smooth_ok)?;
    report.add_verdict("chain_low", "h_minus_r", low_ok)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::ops::{heat_flow_trace, taylor_green};
    use crate::solver::time_grid;
    use std::sync::Arc;

    fn grid2(n: usize) -> Arc<crate::grid::TorusGrid> {
        Arc::new(crate::grid::TorusGrid::new(2, n).unwrap())
    }

    fn constant_trace(f: &FourierField, t_end: f64, steps: usize) -> TimeTrace {
        let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        TimeTrace::new(times.clone(), vec![f.clone(); times.len()]).unwrap()
    }

    // Oracle: constant integrand makes the windowed norm delta^(1/p) * b.
    #[test]
    fn theta_of_a_constant_trace_is_closed_form() {
        let grid = grid2(16);
        let fam = build_dyadic_family(&grid);
        let f = corpus::random_field(&grid, 1, corpus::RandomFieldOpts::default());
        let u = constant_trace(&f, 1.0, 40);
        let r = 0.5;
        let b = besov_norm(&f, BesovIndex::new(-r, f64::INFINITY).unwrap(), &fam).unwrap();
        for delta in [0.1, 0.25, 0.5] {
            let got = theta_window(&u, r, delta, &fam).unwrap();
            let want = delta.powf((1.0 - r) / 2.0) * b;
            assert!((got - want).abs() < 1e-12 * want, "delta {delta}: {got} vs {want}");
        }
        // Monotone in the window size.
        let a = theta_window(&u, r, 0.1, &fam).unwrap();
        let c = theta_window(&u, r, 0.4, &fam).unwrap();
        assert!(a < c);
    }

    #[test]
    fn h_metric_matches_direct_computation_and_grows_with_window() {
        let grid = grid2(16);
        let fam = build_dyadic_family(&grid);
        let u0 = taylor_green(&grid).unwrap();
        let u = heat_flow_trace(&u0, time_grid(0.01, 0.3)).unwrap();
        let mu = 0.75;
        let delta = 0.2;
        let got = h_metric(&u, mu, delta, &fam).unwrap();
        let mut want = 0.0f64;
        for (i, &t) in u.times().iter().enumerate() {
            if t > 0.0 && t <= delta {
                let b = besov_norm(u.field(i), BesovIndex::new(mu, f64::INFINITY).unwrap(), &fam)
                    .unwrap();
                want = want.max(t.powf((mu + 1.0) / 2.0) * b);
            }
        }
        assert_eq!(got, want);
        assert!(h_metric(&u, mu, 0.3, &fam).unwrap() >= got);
        assert!(h_metric(&u, mu, 0.5, &fam).is_err());
    }

    #[test]
    fn regularity_monitor_accepts_heat_flow_and_rejects_frozen_profiles() {
        let grid = grid2(16);
        let u0 = taylor_green(&grid).unwrap();
        let times = time_grid(1e-2, 0.5);
        let heat = heat_flow_trace(&u0, times.clone()).unwrap();
        let rep = regularity_monitor(&heat).unwrap();
        assert!(rep.verdicts["vanishing_at_zero"].value);

        // A profile scaling exactly like t^(-1/2) keeps the series constant.
        let fields: Vec<FourierField> = times
            .iter()
            .map(|&t| {
                let mut f = u0.clone();
                let t_eff = if t > 0.0 { t } else { times[1] };
                f.scale(t_eff.powf(-0.5));
                f
            })
            .collect();
        let frozen = TimeTrace::new(times.clone(), fields).unwrap();
        let rep2 = regularity_monitor(&frozen).unwrap();
        assert!(!rep2.verdicts["vanishing_at_zero"].value);

        // One decade of resolution is not enough.
        let short_times: Vec<f64> = vec![0.0, 0.011, 0.02, 0.05, 0.09];
        let short = TimeTrace::new(
            short_times.clone(),
            short_times.iter().map(|_| u0.clone()).collect(),
        )
        .unwrap();
        assert!(regularity_monitor(&short).is_err());
    }

    // Oracle: the prescribed-rate profile makes the weighted series exactly
    // constant, so the liminf proxy equals the amplitude.
    #[test]
    fn synthetic_blowup_profiles_recover_the_rate_constant() {
        let t_star = 1.0;
        let times: Vec<f64> = (0..200).map(|i| t_star * i as f64 / 200.0).collect();
        for r in [0.3, 0.6, 0.9] {
            let amp = 0.7;
            let values: Vec<f64> = times
                .iter()
                .map(|&t| amp * (t_star - t).powf(-(1.0 - r) / 2.0))
                .collect();
            let rep =
                blowup_tracker_from_series(&times, &values, t_star, r, amp * 0.5).unwrap();
            let liminf = rep.scalars["liminf_last_decade"];
            assert!((liminf - amp).abs() <= 0.01 * amp, "r={r}: {liminf}");
            assert!(rep.verdicts["blowup_flagged"].value);
            let relaxed =
                blowup_tracker_from_series(&times, &values, t_star, r, amp * 2.0).unwrap();
            assert!(!relaxed.verdicts["blowup_flagged"].value);
        }
    }

    #[test]
    fn blowup_tail_integral_tracks_the_logarithmic_divergence() {
        let t_star = 1.0;
        let r = 0.5;
        let amp = 1.0;
        let p = 2.0 / (1.0 - r);
        let make = |n: usize| -> (Vec<f64>, Vec<f64>) {
            // Samples crowd geometrically toward t*; more samples reach closer.
            let times: Vec<f64> = (0..n)
                .map(|i| t_star * (1.0 - 2.0f64.powf(-(i as f64) * 0.1)))
                .collect();
            let values =
                times.iter().map(|&t| amp * (t_star - t).powf(-(1.0 - r) / 2.0)).collect();
            (times, values)
        };
        let (t1, v1) = make(200);
        let rep1 = blowup_tracker_from_series(&t1, &v1, t_star, r, 0.1).unwrap();
        let tau_last = t_star - t1.last().unwrap();
        let closed_form = amp.powf(p) * ((t_star / 2.0) / tau_last).ln();
        let got = rep1.scalars["tail_integral"];
        assert!(
            (got - closed_form).abs() < 0.05 * closed_form,
            "{got} vs {closed_form}"
        );
        // Sampling closer to t* grows the integral without bound.
        let (t2, v2) = make(400);
        let rep2 = blowup_tracker_from_series(&t2, &v2, t_star, r, 0.1).unwrap();
        assert!(rep2.scalars["tail_integral"] > 1.5 * got);

        assert!(blowup_tracker_from_series(&t1[..5], &v1[..5], t_star, r, 0.1).is_err());
    }

    #[test]
    fn smooth_heat_flow_is_never_flagged() {
        let grid = grid2(16);
        let u0 = taylor_green(&grid).unwrap();
        // Long enough for the exponential decay to dominate the vanishing
        // time weight at the sampling scale.
        let u = heat_flow_trace(&u0, time_grid(5e-3, 2.0)).unwrap();
        let rep = blowup_tracker(&u, 0.5, 0.05).unwrap();
        assert!(!rep.verdicts["blowup_flagged"].value);
        assert!(rep.scalars["liminf_last_decade"] < 0.01);
    }

    #[test]
    fn bootstrap_accepts_the_root_family_and_gates_hypotheses() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        let (a, b) = (1.0f64, 0.2f64); // 4AB = 0.8 < 1
        let root = (1.0 - (1.0 - 4.0 * a * b).sqrt()) / (2.0 * b);
        assert!(root <= 2.0 * a);

        let flat = vec![a; times.len()];
        let rep = bootstrap_check(&times, &flat, a, b).unwrap();
        assert!(rep.verdicts["hypotheses_met"].value);
        assert!(rep.verdicts["max_below_2a"].value);

        let at_root = vec![root; times.len()];
        let rep_root = bootstrap_check(&times, &at_root, a, b).unwrap();
        assert!(rep_root.verdicts["hypotheses_met"].value, "equality case must pass the gate");
        assert!(rep_root.verdicts["max_below_2a"].value);

        // A jump to 3A violates the self-consistency hypothesis when
        // A + B (3A)^2 < 3A, i.e. the gate rejects before any verdict.
        let (a2, b2) = (1.0, 0.05);
        let mut jump = vec![a2; times.len()];
        jump[25] = 3.0 * a2;
        assert!(a2 + b2 * 9.0 * a2 * a2 < 3.0 * a2);
        let rep_jump = bootstrap_check(&times, &jump, a2, b2).unwrap();
        assert!(!rep_jump.verdicts["hypotheses_met"].value);
        assert!(!rep_jump.verdicts.contains_key("max_below_2a"));
        assert_eq!(rep_jump.scalars["first_hypothesis_violation"], 25.0);

        let rep_gate = bootstrap_check(&times, &flat, 1.0, 0.3).unwrap(); // 4AB = 1.2
        assert!(!rep_gate.verdicts["hypotheses_met"].value);
        assert!(!rep_gate.verdicts.contains_key("max_below_2a"));
    }

    #[test]
    fn uniqueness_experiment_on_the_exact_flow_vanishes_identically() {
        let grid = grid2(16);
        let mut u0 = taylor_green(&grid).unwrap();
        u0.scale(0.05);
        let cfg = SolverConfig {
            t_horizon: 0.2,
            dt: 5e-3,
            n_picard: 4,
            quad: OseenQuadrature::default(),
            dealias: true,
            tol_fixpoint: 1e-12,
            disable_nonlinearity: false,
        };
        let params = CriterionParams {
            delta_list: vec![0.2, 0.1, 0.05],
            ..CriterionParams::default()
        };
        let mut consts = FrozenConstants::default();
        consts.set(key("uniqueness_contraction_c", 2), 1.0, 0.2);
        let rep = uniqueness_experiment(&u0, &cfg, &params, &consts).unwrap();
        assert!(rep.verdicts["solves_completed"].value);
        assert!(rep.verdicts["difference_vanishes_with_refinement"].value);
        assert!(rep.verdicts["contraction_below_one"].value);
        // The nonlinearity vanishes for this datum, so the two numerical
        // methods agree to rounding at every level.
        for (_, d) in &rep.series["difference_by_level"] {
            assert!(*d < 1e-10, "difference {d}");
        }
    }

    #[test]
    fn stability_variant_responds_linearly_to_small_perturbations() {
        let grid = grid2(16);
        let mut u0 = taylor_green(&grid).unwrap();
        u0.scale(0.1);
        let cfg = SolverConfig {
            t_horizon: 0.2,
            dt: 5e-3,
            n_picard: 4,
            ..SolverConfig::default()
        };
        let params =
            CriterionParams { delta_list: vec![0.1, 0.05], ..CriterionParams::default() };
        let big = stability_experiment(&u0, &cfg, &params, 1e-3, 11).unwrap();
        let small = stability_experiment(&u0, &cfg, &params, 1e-4, 11).unwrap();
        assert!(big.verdicts["solves_completed"].value);
        let zb = big.series["z_delta_difference"][0].1;
        let zs = small.series["z_delta_difference"][0].1;
        assert!(zs > 0.0 && zs < zb, "{zs} vs {zb}");
        // Same direction, one tenth the size: the response ratio is stable.
        let rb = big.scalars["response_ratio"];
        let rs = small.scalars["response_ratio"];
        assert!((rb - rs).abs() < 0.2 * rb.max(rs), "{rb} vs {rs}");
    }

    #[test]
    fn persistence_series_decays_exactly_on_the_cellular_flow() {
        let grid = grid2(16);
        let u0 = taylor_green(&grid).unwrap();
        let cfg = SolverConfig {
            t_horizon: 0.3,
            dt: 1e-2,
            n_picard: 3,
            quad: OseenQuadrature::default(),
            dealias: true,
            tol_fixpoint: 1e-12,
            disable_nonlinearity: false,
        };
        let mut consts = FrozenConstants::default();
        consts.set(key("persistence_bound", 2), 1.1, 0.2);
        let rep = persistence_check(&u0, &cfg, 0.5, &consts).unwrap();
        assert!(rep.verdicts["persistence_bounded"].value);
        let series = &rep.series["besov_minus_r"];
        let b0 = series[0].1;
        assert!((rep.scalars["data_norm"] - b0).abs() < 1e-12 * b0);
        // Single-shell datum: the norm series is exactly e^(-2t) b0.
        for &(t, v) in series {
            let want = (-2.0 * t).exp() * b0;
            assert!((v - want).abs() < 1e-9 * b0, "t={t}: {v} vs {want}");
        }
        assert_eq!(rep.scalars["sup_besov_minus_r"], b0);

        let zero = FourierField::zero(grid.clone(), 2);
        let rep0 = persistence_check(&zero, &cfg, 0.5, &consts).unwrap();
        assert!(rep0.verdicts["persistence_bounded"].value);
        assert_eq!(rep0.scalars["sup_besov_minus_r"], 0.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let p = CriterionParams { r: 0.0, ..CriterionParams::default() };
        assert!(p.validate().is_err());
        let p = CriterionParams { sigma: 0.4, r: 0.5, ..CriterionParams::default() };
        assert!(p.validate().is_err());
        let p = CriterionParams { delta_list: vec![], ..CriterionParams::default() };
        assert!(p.validate().is_err());
        let mut c = FrozenConstants::default();
        c.set(key("bilinear_weighted_1r", 2), 2.0, 0.2);
        let p = CriterionParams::default();
        let eps = p.epsilon(&c, 2).unwrap();
        assert!((eps - 1.0 / 16.0).abs() < 1e-15);
    }
}
