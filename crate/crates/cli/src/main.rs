//! Command-line driver. Every command reads one JSON config file, applies
//! the flag overrides, runs, and writes a report (JSON plus one CSV per
//! series) under the output directory. Exit status: 0 when every verdict
//! passes, 1 when some verdict fails, 2 on usage or configuration errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use besov_ns::config::{exponent_or_inf, ExperimentKind, RunConfig};
use besov_ns::constants::FrozenConstants;
use besov_ns::criteria;
use besov_ns::dyadic::build_dyadic_family;
use besov_ns::error::{Error, Result};
use besov_ns::norms::{
    besov_norm, chemin_lerner_norm, heat_characterization_norm, lp_norm, sobolev_h_norm,
    weighted_sup_norm, BesovIndex, CheminLernerIndex,
};
use besov_ns::ops::{pointwise_product, ProductMode};
use besov_ns::paraproduct::{estimate_law_constant, pi1, pi2};
use besov_ns::report::{ExperimentReport, Provenance};
use besov_ns::solver::{make_initial_field, picard_solve};
use besov_ns::{io, FourierField, TimeTrace};

#[derive(Parser)]
#[command(name = "besov-ns", version, about = "Dyadic analysis and mild-solver experiments on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Split the input field into dyadic bands; report band energies.
    Decompose(CommonArgs),
    /// Evaluate the configured norm battery on the input field or trace.
    Norms(CommonArgs),
    /// Check the product splitting identity and estimate law constants.
    Paraproduct(CommonArgs),
    /// Run the mild solver; write the trace and a run report.
    Solve(CommonArgs),
    /// Run verdict experiments on a saved trace or fresh solves.
    Criteria {
        #[command(flatten)]
        common: CommonArgs,
        /// One of regularity, blowup, uniqueness, stability, persistence,
        /// theta-chain; overrides the config's experiment list.
        #[arg(long)]
        experiment: Option<String>,
    },
    /// Re-measure the constants table and write it out.
    Calibrate(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Decompose(c)
            | Command::Norms(c)
            | Command::Paraproduct(c)
            | Command::Solve(c)
            | Command::Calibrate(c) => c,
            Command::Criteria { common, .. } => common,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let common = cli.command.common();
    let mut cfg = RunConfig::from_path(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Command::Criteria { experiment: Some(name), .. } = &cli.command {
        cfg.experiments = vec![name.parse::<ExperimentKind>()?];
    }
    init_thread_pool(&cfg)?;
    let echo = cfg.echo()?;

    match &cli.command {
        Command::Decompose(_) => cmd_decompose(&cfg, &echo),
        Command::Norms(_) => cmd_norms(&cfg, &echo),
        Command::Paraproduct(_) => cmd_paraproduct(&cfg, &echo),
        Command::Solve(_) => cmd_solve(&cfg, &echo),
        Command::Criteria { .. } => cmd_criteria(&cfg, &echo),
        Command::Calibrate(_) => cmd_calibrate(&cfg, &echo),
    }
}

/// Sizes the global worker pool from the config, capped by
/// BESOV_NS_THREADS when that is set.
fn init_thread_pool(cfg: &RunConfig) -> Result<()> {
    let mut cap = cfg.threads;
    if let Ok(raw) = std::env::var("BESOV_NS_THREADS") {
        let env_cap: usize = raw
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("BESOV_NS_THREADS = {raw:?} is not an integer")))?;
        if env_cap == 0 {
            return Err(Error::InvalidArgument("BESOV_NS_THREADS must be at least 1".into()));
        }
        cap = Some(cap.map_or(env_cap, |c| c.min(env_cap)));
    }
    if let Some(n) = cap {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Container(format!("worker pool: {e}")))?;
    }
    Ok(())
}

/// Stamps provenance, writes the report files, prints verdicts, and says
/// whether every verdict passed.
fn finish(mut report: ExperimentReport, cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    report.provenance = Provenance::new(echo.clone(), Some(cfg.seed));
    report.validate()?;
    for path in report.write_files(&cfg.out_dir)? {
        println!("wrote {}", path.display());
    }
    let mut pass = true;
    for (name, v) in &report.verdicts {
        println!("verdict {}/{} = {}", report.name, name, if v.value { "pass" } else { "FAIL" });
        pass &= v.value;
    }
    Ok(pass)
}

fn placeholder_provenance() -> Provenance {
    Provenance::new(serde_json::Value::Null, None)
}

/// The field a field-consuming command operates on: the container named by
/// `input_field` if set, otherwise the configured initial data.
fn load_or_make_field(cfg: &RunConfig) -> Result<FourierField> {
    match &cfg.input_field {
        Some(path) => io::read_field(path),
        None => {
            let grid = cfg.grid.build()?;
            make_initial_field(&grid, &cfg.initial)
        }
    }
}

fn cmd_decompose(cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    let field = load_or_make_field(cfg)?;
    let fam = build_dyadic_family(field.grid());
    let mut report = ExperimentReport::new("decompose", placeholder_provenance());

    let mut energy = Vec::new();
    let mut band_sup = Vec::new();
    for j in fam.band_indices() {
        let block = fam.block(&field, j)?;
        energy.push((j as f64, block.coeff_l2().powi(2)));
        band_sup.push((j as f64, lp_norm(&block, f64::INFINITY)?));
    }
    report.add_series("band_energy", energy);
    report.add_series("band_sup", band_sup);

    let residual = fam.reconstruct(&field)?.sub(&field)?.max_coeff_abs();
    report.add_scalar("reconstruction_error", residual);
    report.add_verdict("reconstruction_exact", "reconstruction_error", residual <= 1e-13)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let profile_path = cfg.out_dir.join("decompose.profiles.csv");
    std::fs::write(&profile_path, fam.profiles_csv())?;
    println!("wrote {}", profile_path.display());

    finish(report, cfg, echo)
}

fn cmd_norms(cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    let field = load_or_make_field(cfg)?;
    let fam = build_dyadic_family(field.grid());
    let ns = &cfg.norms;
    let mut report = ExperimentReport::new("norms", placeholder_provenance());

    let besov_idx = BesovIndex::new(ns.besov_s, exponent_or_inf(ns.besov_q))?;
    report.add_scalar("lp_norm", lp_norm(&field, exponent_or_inf(ns.lp_p))?);
    report.add_scalar("besov_norm", besov_norm(&field, besov_idx, &fam)?);
    report.add_scalar("sobolev_norm", sobolev_h_norm(&field, ns.sobolev_alpha));
    // The heat characterization applies to negative regularities only: the
    // weight exponent is -besov_s and must be positive.
    if ns.besov_s < 0.0 {
        report.add_scalar(
            "heat_characterization_norm",
            heat_characterization_norm(
                &field,
                -ns.besov_s,
                exponent_or_inf(ns.besov_q),
                ns.theta_delta,
            )?,
        );
    }

    if let Some(manifest) = &cfg.input_trace {
        let (trace, _) = io::read_trace(manifest)?;
        let horizon = trace.end_time();
        let cl_idx =
            CheminLernerIndex::new(exponent_or_inf(ns.lp_p), besov_idx, horizon)?;
        report.add_scalar("chemin_lerner_norm", chemin_lerner_norm(&trace, cl_idx, &fam)?);
        report.add_scalar("weighted_sup_norm", weighted_sup_norm(&trace, 1.0)?);
        let delta = ns.theta_delta.min(horizon / 2.0);
        report.add_scalar("theta_window", criteria::theta_window(&trace, cfg.criteria.r, delta, &fam)?);
        report.add_scalar("theta_window_delta", delta);
    }

    finish(report, cfg, echo)
}

fn cmd_paraproduct(cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    let grid = cfg.grid.build()?;
    let fam = build_dyadic_family(&grid);
    let spec = cfg.paraproduct.law_spec()?;
    let opts = besov_ns::corpus::RandomFieldOpts::default();
    let pairs = besov_ns::corpus::pair_corpus(&grid, cfg.paraproduct.pairs, cfg.seed, opts, opts);

    let mut report = ExperimentReport::new("paraproduct", placeholder_provenance());
    let mut residuals = Vec::new();
    let mut max_residual = 0.0f64;
    for (i, (f, g)) in pairs.iter().enumerate() {
        let product = pointwise_product(f, g, ProductMode::Full)?;
        let mut split = pi1(f, g, &fam)?;
        split.add_scaled(&pi2(g, f, &fam)?, 1.0)?;
        let scale = product.max_coeff_abs().max(f64::MIN_POSITIVE);
        let residual = split.sub(&product)?.max_coeff_abs() / scale;
        residuals.push((i as f64, residual));
        max_residual = max_residual.max(residual);
    }
    report.add_series("identity_residual", residuals);
    report.add_scalar("max_identity_residual", max_residual);
    report.add_verdict("splitting_identity", "max_identity_residual", max_residual <= 1e-12)?;

    let law = estimate_law_constant(&spec, &pairs, &fam)?;
    report.add_series(
        "law_ratio_low_high",
        law.per_pair.iter().enumerate().map(|(i, r)| (i as f64, r[0])).collect(),
    );
    report.add_series(
        "law_ratio_high_low",
        law.per_pair.iter().enumerate().map(|(i, r)| (i as f64, r[1])).collect(),
    );
    report.add_scalar("law_constant_low_high", law.pi1_max_ratio);
    report.add_scalar("law_constant_high_low", law.pi2_max_ratio);
    report.add_scalar("pairs_skipped", law.skipped as f64);

    finish(report, cfg, echo)
}

fn cmd_solve(cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    let grid = cfg.grid.build()?;
    let u0 = make_initial_field(&grid, &cfg.initial)?;
    let mut report = ExperimentReport::new("solve", placeholder_provenance());

    match picard_solve(&u0, &cfg.solver) {
        Ok(out) => {
            let mut diagnostics = BTreeMap::new();
            diagnostics.insert("iterations".to_string(), out.diagnostics.iterations as f64);
            diagnostics
                .insert("data_projected".to_string(), f64::from(out.diagnostics.data_projected));
            if let Some(sigma) = out.diagnostics.sigma.last() {
                diagnostics.insert("final_sigma".to_string(), *sigma);
            }
            let manifest =
                io::write_trace(&out.trace, &cfg.out_dir, "trace", echo.clone(), diagnostics)?;
            println!("wrote {}", manifest.display());

            report.add_series("sup_norm", sup_norm_series(&out.trace)?);
            report.add_series(
                "picard_sigma",
                out.diagnostics.sigma.iter().enumerate().map(|(n, s)| (n as f64, *s)).collect(),
            );
            report.add_scalar("end_time", out.trace.end_time());
            report.add_scalar("iterations", out.diagnostics.iterations as f64);
            report.add_verdict(
                "completed",
                "end_time",
                out.trace.end_time() >= cfg.solver.t_horizon * (1.0 - 1e-12),
            )?;
        }
        Err(Error::BlowupSuspected { last_valid_time, reason, partial }) => {
            log::warn!("solver halted: {reason}");
            let manifest = io::write_trace(
                &partial,
                &cfg.out_dir,
                "trace_partial",
                echo.clone(),
                BTreeMap::new(),
            )?;
            println!("wrote {}", manifest.display());
            report.add_series("sup_norm", sup_norm_series(&partial)?);
            report.add_scalar("end_time", last_valid_time);
            report.add_verdict("completed", "end_time", false)?;
        }
        Err(e) => return Err(e),
    }

    finish(report, cfg, echo)
}

fn sup_norm_series(trace: &TimeTrace) -> Result<Vec<(f64, f64)>> {
    trace
        .times()
        .iter()
        .zip(trace.fields())
        .map(|(&t, f)| Ok((t, lp_norm(f, f64::INFINITY)?)))
        .collect()
}

/// The trace a trace-consuming experiment analyzes: the manifest named by
/// `input_trace` if set, otherwise a fresh solve of the configured data.
fn load_or_solve_trace(cfg: &RunConfig) -> Result<TimeTrace> {
    match &cfg.input_trace {
        Some(manifest) => Ok(io::read_trace(manifest)?.0),
        None => {
            let grid = cfg.grid.build()?;
            let u0 = make_initial_field(&grid, &cfg.initial)?;
            Ok(picard_solve(&u0, &cfg.solver)?.trace)
        }
    }
}

fn cmd_criteria(cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    let constants = match &cfg.constants_path {
        Some(path) => FrozenConstants::from_path(path)?,
        None => FrozenConstants::load_default()?,
    };
    let kinds: Vec<ExperimentKind> = if cfg.experiments.is_empty() {
        vec![ExperimentKind::Regularity, ExperimentKind::Blowup, ExperimentKind::ThetaChain]
    } else {
        cfg.experiments.clone()
    };

    let needs_trace = kinds.iter().any(|k| {
        matches!(k, ExperimentKind::Regularity | ExperimentKind::Blowup | ExperimentKind::ThetaChain)
    });
    let trace = if needs_trace { Some(load_or_solve_trace(cfg)?) } else { None };
    let needs_data = kinds.iter().any(|k| {
        matches!(
            k,
            ExperimentKind::Uniqueness | ExperimentKind::Stability | ExperimentKind::Persistence
        )
    });
    let u0 = if needs_data {
        let grid = cfg.grid.build()?;
        Some(make_initial_field(&grid, &cfg.initial)?)
    } else {
        None
    };

    let dim = cfg.grid.dim;
    let mut all_pass = true;
    for kind in kinds {
        let report = match kind {
            ExperimentKind::Regularity => criteria::regularity_monitor(trace.as_ref().unwrap())?,
            ExperimentKind::Blowup => {
                let epsilon = cfg.criteria.epsilon(&constants, dim)?;
                criteria::blowup_tracker(trace.as_ref().unwrap(), cfg.criteria.r, epsilon)?
            }
            ExperimentKind::ThetaChain => {
                criteria::theta_chain_report(trace.as_ref().unwrap(), &cfg.criteria, &constants)?
            }
            ExperimentKind::Uniqueness => criteria::uniqueness_experiment(
                u0.as_ref().unwrap(),
                &cfg.solver,
                &cfg.criteria,
                &constants,
            )?,
            ExperimentKind::Stability => criteria::stability_experiment(
                u0.as_ref().unwrap(),
                &cfg.solver,
                &cfg.criteria,
                cfg.stability_perturbation,
                cfg.seed,
            )?,
            ExperimentKind::Persistence => criteria::persistence_check(
                u0.as_ref().unwrap(),
                &cfg.solver,
                cfg.criteria.r,
                &constants,
            )?,
        };
        all_pass &= finish(report, cfg, echo)?;
    }
    Ok(all_pass)
}

fn cmd_calibrate(cfg: &RunConfig, echo: &serde_json::Value) -> Result<bool> {
    let (table, mut report) = besov_ns::calibrate::run_calibration(&cfg.calibration, cfg.grid.dim)?;

    let target: PathBuf = cfg
        .constants_path
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("frozen_constants.json"));
    if let Ok(previous) = FrozenConstants::from_path(&target) {
        if !previous.is_empty() {
            let mut all_within = true;
            let mut compared = 0usize;
            for (name, c) in table.iter() {
                if let Ok(within) = previous.within(name, c.value) {
                    all_within &= within;
                    compared += 1;
                }
            }
            report.add_scalar("keys_compared_with_previous", compared as f64);
            report.add_verdict(
                "stable_with_respect_to_previous",
                "keys_compared_with_previous",
                all_within,
            )?;
        }
    }

    if let Some(parent) = target.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    table.save(&target)?;
    println!("wrote {}", target.display());

    finish(report, cfg, echo)
}
