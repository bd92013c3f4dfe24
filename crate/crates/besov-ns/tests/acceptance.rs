//! Acceptance suite: fourteen numbered end-to-end criteria, one test and
//! one printed pass/fail line each. Tolerances are pinned in the
//! assertions; corpora are seeded from 2000 upward so they never overlap
//! the calibration corpora that froze the constants table.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use besov_ns::calibrate::{
    measure_bernstein_embedding, measure_heat_equiv, measure_paraproduct_law, s_tag,
};
use besov_ns::constants::{key, FrozenConstants};
use besov_ns::corpus::{random_besov_unit, random_field, RandomFieldOpts};
use besov_ns::criteria::{
    blowup_tracker, blowup_tracker_from_series, bootstrap_check, regularity_monitor,
    theta_window, uniqueness_experiment, CriterionParams,
};
use besov_ns::dyadic::build_dyadic_family;
use besov_ns::norms::{check_gmo, lp_norm};
use besov_ns::ops::{
    gradient_of_scalar, heat_semigroup, leray_project, pointwise_product,
    projected_tensor_divergence, taylor_green, ProductMode,
};
use besov_ns::paraproduct::{
    estimate_law_constant_traces, pi1, pi2, FirstFactorTimeNorm, ParaproductLawSpec,
};
use besov_ns::solver::{
    make_initial_field, oseen_apply, picard_solve, InitialFieldKind, OseenQuadrature, QuadOrder,
    SolverConfig,
};
use besov_ns::{FourierField, TimeTrace, TorusGrid};

fn grid2(n: usize) -> Arc<TorusGrid> {
    Arc::new(TorusGrid::new(2, n).unwrap())
}

fn constants() -> FrozenConstants {
    FrozenConstants::load_default().unwrap()
}

/// Prints the one-line verdict for a criterion, then enforces it.
fn conclude(num: u32, label: &str, pass: bool, detail: String) {
    println!(
        "acceptance criterion {num:02} [{label}]: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {num:02} [{label}] failed: {detail}");
}

/// Slope-cycled scalar corpus matching the calibration sweep's diversity.
fn mixed_corpus(grid: &Arc<TorusGrid>, count: usize, base_seed: u64) -> Vec<FourierField> {
    let slopes = [1.0, 1.5, 2.0];
    (0..count)
        .map(|i| {
            random_field(
                grid,
                base_seed + i as u64,
                RandomFieldOpts { slope: slopes[i % slopes.len()], ..RandomFieldOpts::default() },
            )
        })
        .collect()
}

#[test]
fn criterion_01_dyadic_reconstruction_is_exact() {
    let start = Instant::now();
    let grid = grid2(64);
    let fam = build_dyadic_family(&grid);
    let mut worst = 0.0f64;
    for f in mixed_corpus(&grid, 100, 2000) {
        let err = fam.reconstruct(&f).unwrap().sub(&f).unwrap().max_coeff_abs();
        worst = worst.max(err);
    }
    let elapsed = start.elapsed().as_secs_f64();
    conclude(
        1,
        "dyadic reconstruction",
        worst <= 1e-13 && elapsed < 10.0,
        format!("max coefficient error {worst:.3e} (tol 1e-13), {elapsed:.2} s (limit 10 s)"),
    );
}

#[test]
fn criterion_02_product_splitting_identity() {
    let grid = grid2(64);
    let fam = build_dyadic_family(&grid);
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let f = random_field(&grid, 2100 + 2 * i, RandomFieldOpts::default());
        let g = random_field(&grid, 2101 + 2 * i, RandomFieldOpts::default());
        let product = pointwise_product(&f, &g, ProductMode::Full).unwrap();
        let mut split = pi1(&f, &g, &fam).unwrap();
        split.add_scaled(&pi2(&g, &f, &fam).unwrap(), 1.0).unwrap();
        let rel = split.sub(&product).unwrap().max_coeff_abs()
            / product.max_coeff_abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    conclude(
        2,
        "product splitting identity",
        worst <= 1e-12,
        format!("max relative residual {worst:.3e} over 100 pairs (tol 1e-12)"),
    );
}

#[test]
fn criterion_03_heat_semigroup_exactness() {
    let grid = grid2(64);
    let f = random_field(&grid, 2300, RandomFieldOpts { ncomp: 2, ..RandomFieldOpts::default() });
    let (s, t) = (0.13f64, 0.37f64);

    let mut mode_err = 0.0f64;
    let flowed = heat_semigroup(&f, t).unwrap();
    for c in 0..f.ncomp() {
        let (orig, out) = (f.component(c), flowed.component(c));
        for (idx, &a) in orig.iter().enumerate() {
            let want = a * (-grid.ksq(idx) * t).exp();
            let scale = a.norm().max(f64::MIN_POSITIVE);
            mode_err = mode_err.max((out[idx] - want).norm() / scale);
        }
    }

    let two_step = heat_semigroup(&heat_semigroup(&f, s).unwrap(), t).unwrap();
    let one_step = heat_semigroup(&f, s + t).unwrap();
    let comp_err =
        two_step.sub(&one_step).unwrap().max_coeff_abs() / f.max_coeff_abs().max(f64::MIN_POSITIVE);

    conclude(
        3,
        "heat semigroup exactness",
        mode_err <= 1e-14 && comp_err <= 1e-14,
        format!(
            "per-mode decay error {mode_err:.3e}, composition error {comp_err:.3e} (tol 1e-14)"
        ),
    );
}

#[test]
fn criterion_04_divergence_free_projection() {
    let grid = grid2(64);
    let v = random_field(&grid, 2400, RandomFieldOpts { ncomp: 2, ..RandomFieldOpts::default() });

    let once = leray_project(&v).unwrap();
    let twice = leray_project(&once).unwrap();
    let idem =
        twice.sub(&once).unwrap().max_coeff_abs() / once.max_coeff_abs().max(f64::MIN_POSITIVE);

    let scalar = random_field(&grid, 2401, RandomFieldOpts::default());
    let grad = gradient_of_scalar(&scalar).unwrap();
    let killed = leray_project(&grad).unwrap().max_coeff_abs()
        / grad.max_coeff_abs().max(f64::MIN_POSITIVE);

    let tg = taylor_green(&grid).unwrap();
    let projected = projected_tensor_divergence(&tg, &tg, ProductMode::Full).unwrap();
    let tg_residual = projected.max_coeff_abs();

    conclude(
        4,
        "divergence-free projection",
        idem <= 1e-13 && killed <= 1e-13 && tg_residual <= 1e-10,
        format!(
            "idempotence {idem:.3e}, gradient annihilation {killed:.3e} (tol 1e-13), \
             cellular-flow nonlinearity projection {tg_residual:.3e} (tol 1e-10)"
        ),
    );
}

#[test]
fn criterion_05_heat_characterization_equivalence_band() {
    let table = constants();
    let mut worst: Option<String> = None;
    let mut checked = 0usize;
    for &n in &[32usize, 64] {
        let grid = grid2(n);
        for &s in &[0.25f64, 0.5, 0.75] {
            let tag = s_tag(s);
            let (lo_floor, _) = table.interval(&key(&format!("heat_equiv_lo_{tag}"), 2)).unwrap();
            let (_, hi_ceil) = table.interval(&key(&format!("heat_equiv_hi_{tag}"), 2)).unwrap();
            for r in measure_heat_equiv(&grid, s, 100, 2000).unwrap() {
                checked += 1;
                if !(lo_floor <= r && r <= hi_ceil) {
                    worst = Some(format!(
                        "ratio {r:.4} outside [{lo_floor:.4}, {hi_ceil:.4}] at n = {n}, s = {s}"
                    ));
                }
            }
        }
    }
    let pass = worst.is_none();
    conclude(
        5,
        "heat characterization equivalence",
        pass,
        worst.unwrap_or_else(|| format!("all {checked} ratios inside the frozen two-sided bands")),
    );
}

#[test]
fn criterion_06_inequality_constants_stable_across_resolution() {
    let table = constants();
    let spec = ParaproductLawSpec::new(
        0.5,
        0.75,
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
    )
    .unwrap();
    let mut failures = Vec::new();

    for &n in &[32usize, 64, 128] {
        let grid = grid2(n);
        let bern = measure_bernstein_embedding(&grid, 0.5, 2.0, f64::INFINITY, 100, 2000).unwrap();
        if !table.within(&key("bernstein_embedding", 2), bern).unwrap() {
            failures.push(format!("embedding constant {bern:.4} out of band at n = {n}"));
        }
        let (p1, p2) = measure_paraproduct_law(&grid, &spec, 200, 2000).unwrap();
        if !table.within(&key("paraproduct_pi1", 2), p1).unwrap() {
            failures.push(format!("low-high law constant {p1:.4} out of band at n = {n}"));
        }
        if !table.within(&key("paraproduct_pi2", 2), p2).unwrap() {
            failures.push(format!("high-low law constant {p2:.4} out of band at n = {n}"));
        }
    }

    // Time-integrated law constants must not depend on the horizon when the
    // integrand is constant in time: the horizon powers on the two sides
    // cancel exactly under the law's exponent identity.
    let grid = grid2(32);
    let fam = build_dyadic_family(&grid);
    let cl_spec =
        ParaproductLawSpec::new(0.5, 0.75, f64::INFINITY, f64::INFINITY, 4.0, 4.0).unwrap();
    let fields = mixed_corpus(&grid, 8, 2050);
    let mut per_horizon = Vec::new();
    for &horizon in &[0.25f64, 0.5, 1.0] {
        let times: Vec<f64> = (0..=32).map(|i| horizon * i as f64 / 32.0).collect();
        let pairs: Vec<(TimeTrace, TimeTrace)> = (0..4)
            .map(|i| {
                (
                    TimeTrace::new(times.clone(), vec![fields[2 * i].clone(); times.len()])
                        .unwrap(),
                    TimeTrace::new(times.clone(), vec![fields[2 * i + 1].clone(); times.len()])
                        .unwrap(),
                )
            })
            .collect();
        let est = estimate_law_constant_traces(
            &cl_spec,
            &pairs,
            &fam,
            horizon,
            FirstFactorTimeNorm::CheminLerner,
        )
        .unwrap();
        per_horizon.push((est.pi1_max_ratio, est.pi2_max_ratio));
    }
    for later in &per_horizon[1..] {
        let d1 = (later.0 - per_horizon[0].0).abs() / per_horizon[0].0;
        let d2 = (later.1 - per_horizon[0].1).abs() / per_horizon[0].1;
        if d1 > 1e-10 || d2 > 1e-10 {
            failures.push(format!(
                "time-integrated law constant drifted with the horizon: {d1:.2e}, {d2:.2e}"
            ));
        }
    }

    conclude(
        6,
        "inequality constants stable",
        failures.is_empty(),
        if failures.is_empty() {
            "embedding and law constants in band at n = 32, 64, 128; horizon drift <= 1e-10"
                .to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_07_solver_reproduces_the_decaying_cellular_flow() {
    let start = Instant::now();
    let grid = grid2(64);
    let u0 = taylor_green(&grid).unwrap();
    let cfg = SolverConfig {
        t_horizon: 0.5,
        dt: 1e-3,
        quad: OseenQuadrature { order: QuadOrder::Second, substeps: 1 },
        ..SolverConfig::default()
    };
    let out = picard_solve(&u0, &cfg).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in out.trace.times().iter().enumerate() {
        let mut exact = u0.clone();
        exact.scale((-2.0 * t).exp());
        let rel = out.trace.field(i).sub(&exact).unwrap().coeff_l2() / exact.coeff_l2();
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed().as_secs_f64();
    conclude(
        7,
        "solver oracle",
        worst <= 1e-6 && elapsed < 60.0,
        format!("sup-t relative l2 error {worst:.3e} (tol 1e-6), {elapsed:.1} s (limit 60 s)"),
    );
}

#[test]
fn criterion_08_duhamel_quadrature_orders() {
    let grid = grid2(8);
    let idx = grid.linear_index([1, 0, 0]);
    let cidx = grid.conjugate_index(idx);
    let gamma = 3.0f64;
    let lambda = grid.ksq(idx);
    let t_end = 1.0f64;
    let exact = -0.5 * ((-gamma * t_end).exp() - (-lambda * t_end).exp()) / (lambda - gamma);

    let forcing_at = |times: &[f64]| -> TimeTrace {
        let fields = times
            .iter()
            .map(|&s| {
                let mut f = FourierField::zero(grid.clone(), 2);
                let a = Complex64::new(0.5 * (-gamma * s).exp(), 0.0);
                f.component_mut(1)[idx] = a;
                f.component_mut(1)[cidx] = a;
                f
            })
            .collect();
        TimeTrace::new(times.to_vec(), fields).unwrap()
    };

    let mut slopes = Vec::new();
    for order in [QuadOrder::First, QuadOrder::Second] {
        let quad = OseenQuadrature { order, substeps: 1 };
        let mut errs = Vec::new();
        for steps in [16usize, 32, 64, 128] {
            let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
            let out = oseen_apply(&forcing_at(&times), t_end, &quad).unwrap();
            errs.push((out.component(1)[idx].re - exact).abs());
        }
        let fits: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        slopes.push(fits.iter().sum::<f64>() / fits.len() as f64);
    }

    conclude(
        8,
        "duhamel quadrature orders",
        (slopes[0] - 1.0).abs() <= 0.3 && (slopes[1] - 2.0).abs() <= 0.3,
        format!(
            "measured slopes {:.3} (want 1.0 +- 0.3) and {:.3} (want 2.0 +- 0.3)",
            slopes[0], slopes[1]
        ),
    );
}

#[test]
fn criterion_09_two_method_agreement_refines_and_contracts() {
    let table = constants();
    let grid = grid2(32);
    let params = CriterionParams::default();
    let cfg = SolverConfig { t_horizon: 0.2, dt: 2e-3, n_picard: 4, ..SolverConfig::default() };

    let mut data: Vec<(String, FourierField)> = vec![(
        "cellular flow".into(),
        make_initial_field(&grid, &InitialFieldKind::TaylorGreen { amplitude: 0.05 }).unwrap(),
    )];
    for i in 0..3u64 {
        data.push((
            format!("seeded data {i}"),
            make_initial_field(
                &grid,
                &InitialFieldKind::RandomBesov { s: -0.5, seed: 2000 + i, amplitude: 0.05 },
            )
            .unwrap(),
        ));
    }

    let mut failures = Vec::new();
    for (name, u0) in &data {
        let report = uniqueness_experiment(u0, &cfg, &params, &table).unwrap();
        for verdict in
            ["solves_completed", "difference_vanishes_with_refinement", "contraction_below_one"]
        {
            if !report.verdicts[verdict].value {
                failures.push(format!("{name}: {verdict} failed"));
            }
        }
    }
    conclude(
        9,
        "two-method agreement",
        failures.is_empty(),
        if failures.is_empty() {
            "independent discretizations converge to one solution and the fixed-point map \
             contracts on all 4 data sets"
                .to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_10_short_time_regularity_verdicts() {
    let table = constants();
    let grid = grid2(32);
    let fam = build_dyadic_family(&grid);
    let params = CriterionParams::default();
    let threshold = table.get(&key("theta_smallness", 2)).unwrap();
    let delta_min = params.delta_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let cfg = SolverConfig { t_horizon: 0.5, dt: 5e-3, n_picard: 6, ..SolverConfig::default() };

    let mut gated = 0usize;
    let mut failures = Vec::new();
    for i in 0..6u64 {
        let mut u0 =
            leray_project(&random_besov_unit(&grid, -0.5, 2000 + i, &fam).unwrap()).unwrap();
        u0.scale(0.3);
        let out = picard_solve(&u0, &cfg).unwrap();
        let theta = theta_window(&out.trace, params.r, delta_min, &fam).unwrap();
        if theta > threshold {
            continue;
        }
        gated += 1;
        let report = regularity_monitor(&out.trace).unwrap();
        if !report.verdicts["vanishing_at_zero"].value {
            failures.push(format!("run {i} passed the smallness gate but was not judged regular"));
        }
    }

    // Counterexample at the critical rate: u(t) = t^(-1/2) g with u(0) = 0.
    // Times are powers of two and the scales exact binary shifts, so the
    // monitored weighted series is bit-for-bit constant and the strict-decay
    // verdict comes out false deterministically, not by rounding luck.
    let profile =
        random_field(&grid, 2990, RandomFieldOpts { ncomp: 2, ..RandomFieldOpts::default() });
    let mut times = vec![0.0f64];
    let mut fields = vec![FourierField::zero(grid.clone(), 2)];
    for i in (0..=12i32).rev() {
        times.push(0.5 * 0.25f64.powi(i));
        let mut f = profile.clone();
        f.scale(2.0f64.powi(i));
        fields.push(f);
    }
    let counterexample = TimeTrace::new(times, fields).unwrap();
    let ce_report = regularity_monitor(&counterexample).unwrap();
    let ce_rejected = !ce_report.verdicts["vanishing_at_zero"].value;

    let pass = gated > 0 && failures.is_empty() && ce_rejected;
    conclude(
        10,
        "short-time regularity verdicts",
        pass,
        if failures.is_empty() && ce_rejected {
            format!(
                "{gated} of 6 runs passed the window-smallness gate and all were judged \
                 regular; the critical-rate counterexample was rejected"
            )
        } else if !ce_rejected {
            "the critical-rate counterexample was wrongly judged regular".to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_11_blowup_tracker_flags_and_false_positives() {
    let table = constants();
    let grid = grid2(32);
    let fam = build_dyadic_family(&grid);
    let params = CriterionParams::default();
    let epsilon = params.epsilon(&table, 2).unwrap();
    let cfg = SolverConfig { t_horizon: 2.0, dt: 5e-3, n_picard: 6, ..SolverConfig::default() };

    let mut false_positives = Vec::new();
    for i in 0..10u64 {
        let mut u0 =
            leray_project(&random_besov_unit(&grid, -0.5, 2100 + i, &fam).unwrap()).unwrap();
        u0.scale(0.3);
        let out = picard_solve(&u0, &cfg).unwrap();
        let report = blowup_tracker(&out.trace, params.r, epsilon).unwrap();
        if report.verdicts["blowup_flagged"].value {
            false_positives.push(i);
        }
    }

    // Prescribed-rate norm series: the weighted lower-bound functional must
    // recover the amplitude of amp * (t_star - t)^(-(1-r)/2) within 1%.
    let t_star = 1.0f64;
    let mut worst_liminf = 0.0f64;
    for &r in &[0.3f64, 0.6, 0.9] {
        let amp = 0.8f64;
        let times: Vec<f64> =
            (0..400).map(|i| t_star * (1.0 - 2.0f64.powf(-0.1 * i as f64))).collect();
        let values: Vec<f64> =
            times.iter().map(|&t| amp * (t_star - t).powf(-(1.0 - r) / 2.0)).collect();
        let report = blowup_tracker_from_series(&times, &values, t_star, r, epsilon).unwrap();
        let got = report.scalars["liminf_last_decade"];
        worst_liminf = worst_liminf.max((got / amp - 1.0).abs());
    }

    conclude(
        11,
        "blow-up tracker",
        false_positives.is_empty() && worst_liminf <= 0.01,
        format!(
            "false positives on 10 smooth runs: {:?}; worst amplitude recovery error \
             {worst_liminf:.2e} (tol 0.01) at rates 0.3, 0.6, 0.9",
            false_positives
        ),
    );
}

#[test]
fn criterion_12_bootstrap_gate_and_conclusion() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2500);
    let times: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
    let mut failures = Vec::new();

    for case in 0..1000usize {
        let a: f64 = rng.gen_range(0.05..2.0);
        let valid = case % 2 == 0;
        let four_ab: f64 = if valid { rng.gen_range(0.05..0.9) } else { rng.gen_range(1.0..3.0) };
        let b = four_ab / (4.0 * a);

        if valid {
            // The smaller root of b f^2 - f + a x = 0 satisfies the premise
            // with equality and stays below twice the drive.
            let values: Vec<f64> =
                times.iter().map(|&x| (1.0 - (1.0 - four_ab * x).sqrt()) / (2.0 * b)).collect();
            let report = bootstrap_check(&times, &values, a, b).unwrap();
            if !report.verdicts["hypotheses_met"].value {
                failures.push(format!("case {case}: valid instance rejected by the gate"));
            } else if !report.verdicts["max_below_2a"].value {
                failures.push(format!("case {case}: valid instance exceeded twice the drive"));
            }
        } else {
            let values: Vec<f64> = times.iter().map(|&x| a * x).collect();
            let report = bootstrap_check(&times, &values, a, b).unwrap();
            if report.verdicts["hypotheses_met"].value {
                failures.push(format!("case {case}: gate accepted a supercritical instance"));
            }
        }
        if failures.len() > 4 {
            break;
        }
    }

    conclude(
        12,
        "bootstrap gate and conclusion",
        failures.is_empty(),
        if failures.is_empty() {
            "500 root-family instances concluded below twice the drive, \
             500 supercritical instances gate-rejected"
                .to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_13_product_inequality_exponent_bookkeeping() {
    let grid = grid2(64);
    let fam = build_dyadic_family(&grid);
    let table = constants();

    // At weights (1/2, 1) the interpolation exponent is exactly 1/2, so the
    // left side must be the L^4 norm of the probe, bit for bit.
    let probe = random_field(&grid, 2600, RandomFieldOpts::default());
    let report = check_gmo(&probe, 0.5, 1.0, &fam).unwrap();
    let theta = report.exponents[0];
    let q = 2.0 / theta;
    let bookkeeping_ok = q == 4.0 && (report.lhs - lp_norm(&probe, 4.0).unwrap()).abs() == 0.0;

    let (_, ceiling) = table.interval(&key("gmo_ratio", 2)).unwrap();
    let mut worst = 0.0f64;
    for f in mixed_corpus(&grid, 100, 2600) {
        worst = worst.max(check_gmo(&f, 0.5, 1.0, &fam).unwrap().ratio);
    }

    conclude(
        13,
        "product inequality exponents",
        bookkeeping_ok && worst <= ceiling,
        format!(
            "q = {q} (want exactly 4), corpus ratio max {worst:.4} vs frozen ceiling {ceiling:.4}"
        ),
    );
}

#[test]
fn criterion_14_reruns_are_byte_identical() {
    let grid = grid2(32);
    let table = constants();
    let params = CriterionParams::default();
    let cfg = SolverConfig { t_horizon: 0.2, dt: 2e-3, n_picard: 4, ..SolverConfig::default() };
    let u0 = make_initial_field(&grid, &InitialFieldKind::TaylorGreen { amplitude: 0.05 }).unwrap();

    let solve_bytes = || -> Vec<u8> {
        let out = picard_solve(&u0, &cfg).unwrap();
        let mut bytes = Vec::new();
        for f in out.trace.fields() {
            bytes.extend_from_slice(&besov_ns::io::encode_field(f));
        }
        bytes
    };
    let traces_equal = solve_bytes() == solve_bytes();

    let report_json = || -> String {
        let out = picard_solve(&u0, &cfg).unwrap();
        let reg = regularity_monitor(&out.trace).unwrap().canonical_json().unwrap();
        let uni =
            uniqueness_experiment(&u0, &cfg, &params, &table).unwrap().canonical_json().unwrap();
        format!("{reg}{uni}")
    };
    let reports_equal = report_json() == report_json();

    conclude(
        14,
        "determinism",
        traces_equal && reports_equal,
        format!(
            "rerun trace bytes identical: {traces_equal}; rerun report JSON identical \
             outside provenance: {reports_equal}"
        ),
    );
}
