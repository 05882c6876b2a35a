use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ndarray::ArrayView2;
use roblasso::penalty::{lambda_closed_form, select_lambda};
use roblasso::simulation::{run_study, DgpConfig, StudyReport};
use roblasso::{
    confidence_intervals, fit, FitConfig, FitWarning, PenaltyKind, PenaltyRule, PenaltyScale, RegressionData,
};
use serde::Serialize;

use crate::args::{CalibrateArgs, FitArgs, PenaltyArgs, RuleArg, SimulateArgs, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::input::read_table;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct PenaltyInfo {
    rule: &'static str,
    c: Option<f64>,
    mc_level: Option<f64>,
    mc_draws: Option<usize>,
    scale: &'static str,
}

#[derive(Debug, Serialize)]
struct SolverInfo {
    max_iters: usize,
    tol: f64,
}

#[derive(Debug, Serialize)]
struct OutlierEntry {
    index: usize,
    alpha_hat: f64,
}

#[derive(Debug, Serialize)]
struct IntervalEntry {
    lower: f64,
    upper: f64,
}

#[derive(Debug, Serialize)]
struct FitReport {
    schema_version: u32,
    input: String,
    n: usize,
    regressors: Vec<String>,
    beta_hat: Vec<f64>,
    se: Vec<f64>,
    intervals: Vec<IntervalEntry>,
    level: f64,
    sigma_hat: f64,
    lambda_used: f64,
    lambda_effective: f64,
    outliers: Vec<OutlierEntry>,
    iterations: usize,
    converged: bool,
    objective: f64,
    warnings: Vec<String>,
    penalty: PenaltyInfo,
    solver: SolverInfo,
    intercept: bool,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct CalibrationReport {
    schema_version: u32,
    input: String,
    n: usize,
    k: usize,
    calibrated_lambda: f64,
    gaussian_closed_form_lambda: f64,
    c: f64,
    mc_level: f64,
    mc_draws: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct SimulationOutput<'a> {
    schema_version: u32,
    penalty: PenaltyInfo,
    solver: SolverInfo,
    #[serde(flatten)]
    report: &'a StudyReport,
}

fn scale_name(scale: PenaltyScale) -> &'static str {
    match scale {
        PenaltyScale::Concentrated => "concentrated",
        PenaltyScale::JointObjective => "joint-objective",
    }
}

fn rule_name(kind: PenaltyKind) -> &'static str {
    match kind {
        PenaltyKind::Gaussian => "gaussian",
        PenaltyKind::Subgaussian => "subgaussian",
        PenaltyKind::Subexponential => "subexponential",
        PenaltyKind::MonteCarlo => "monte-carlo",
        PenaltyKind::Fixed => "fixed",
    }
}

fn penalty_rule(args: &PenaltyArgs) -> CliResult<PenaltyRule<f64>> {
    let rule = match (args.lambda, args.penalty_rule.unwrap_or(RuleArg::Gaussian)) {
        (Some(v), _) => PenaltyRule::fixed(v),
        (None, RuleArg::Gaussian) => {
            PenaltyRule::gaussian_with_c(args.c.unwrap_or(PenaltyRule::<f64>::DEFAULT_GAUSSIAN_C))
        }
        (None, RuleArg::Subgaussian) => PenaltyRule::subgaussian(args.c.unwrap_or(1.0)),
        (None, RuleArg::Subexponential) => PenaltyRule::subexponential(args.c.unwrap_or(1.0)),
        (None, RuleArg::MonteCarlo) => PenaltyRule::monte_carlo(args.mc_level, args.mc_draws),
    };
    rule.validate()?;
    Ok(rule)
}

fn penalty_info(rule: &PenaltyRule<f64>, scale: PenaltyScale) -> PenaltyInfo {
    let mc = rule.kind == PenaltyKind::MonteCarlo;
    let closed = matches!(
        rule.kind,
        PenaltyKind::Gaussian | PenaltyKind::Subgaussian | PenaltyKind::Subexponential
    );
    PenaltyInfo {
        rule: rule_name(rule.kind),
        c: closed.then_some(rule.c),
        mc_level: mc.then_some(rule.level),
        mc_draws: mc.then_some(rule.draws),
        scale: scale_name(scale),
    }
}

fn fit_config(lambda: f64, solver: &SolverArgs, scale: PenaltyScale) -> CliResult<FitConfig<f64>> {
    let config = FitConfig::new(lambda)
        .with_max_iters(solver.max_iters)
        .with_rel_tol(solver.tol)
        .with_penalty_scale(scale);
    config.validate()?;
    Ok(config)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}").and_then(|_| w.flush())
        }
        None => writeln!(io::stdout(), "{text}"),
    }
    .map_err(|e| CliError::Input(format!("cannot write report: {e}")))
}

fn warning_text(w: &FitWarning) -> String {
    match w {
        FitWarning::DegenerateResidual { iteration } => {
            format!("residual vanished at iteration {iteration}; threshold used the sigma floor")
        }
    }
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::InvalidFlags(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let rule = penalty_rule(&args.penalty)?;
    let scale = PenaltyScale::from(args.penalty.penalty_scale);
    fit_config(1.0, &args.solver, scale)?;

    let table = read_table(&args.input, args.intercept, true)?;
    let y = table.y.expect("response column checked");
    let data = RegressionData::new(table.x, y)?;
    let lambda = select_lambda(&rule, data.x(), args.seed)?;
    let config = fit_config(lambda, &args.solver, scale)?;
    eprintln!(
        "roblasso fit: n = {}, k = {}, lambda = {lambda} ({} rule, {} scale), seed = {}, max_iters = {}, tol = {:e}",
        data.n(),
        data.k(),
        rule_name(rule.kind),
        scale_name(scale),
        args.seed,
        args.solver.max_iters,
        args.solver.tol
    );

    let result = fit(&data, &config)?;
    let inference = confidence_intervals(&data, &result, args.level)?;
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        input: args.input.display().to_string(),
        n: data.n(),
        regressors: table.names,
        beta_hat: result.beta_hat.to_vec(),
        se: inference.std_errors.to_vec(),
        intervals: inference
            .intervals
            .iter()
            .map(|iv| IntervalEntry {
                lower: iv.lower,
                upper: iv.upper,
            })
            .collect(),
        level: args.level,
        sigma_hat: result.sigma_hat,
        lambda_used: lambda,
        lambda_effective: result.lambda_effective,
        outliers: result
            .outlier_indices
            .iter()
            .map(|&i| OutlierEntry {
                index: i,
                alpha_hat: result.alpha_hat[i],
            })
            .collect(),
        iterations: result.iterations_used,
        converged: result.converged,
        objective: result.final_objective(),
        warnings: result.warnings.iter().map(warning_text).collect(),
        penalty: penalty_info(&rule, scale),
        solver: SolverInfo {
            max_iters: args.solver.max_iters,
            tol: args.solver.tol,
        },
        intercept: args.intercept,
        seed: args.seed,
    };
    write_json(&report, args.output.as_deref())
}

fn calibrate_design(args: &CalibrateArgs, x: ArrayView2<'_, f64>) -> CliResult<(f64, f64)> {
    let rule = PenaltyRule::monte_carlo(args.mc_level, args.mc_draws);
    rule.validate()?;
    let closed = lambda_closed_form(&PenaltyRule::gaussian_with_c(args.c), x.nrows())?;
    let calibrated = select_lambda(&rule, x, args.seed)?;
    Ok((calibrated, closed))
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let table = read_table(&args.input, args.intercept, false)?;
    let (n, k) = table.x.dim();
    eprintln!(
        "roblasso calibrate: n = {n}, k = {k}, mc_level = {}, mc_draws = {}, seed = {}, c = {}",
        args.mc_level, args.mc_draws, args.seed, args.c
    );
    let (calibrated, closed) = calibrate_design(args, table.x.view())?;
    println!("calibrated_lambda\tgaussian_closed_form_lambda");
    println!("{calibrated}\t{closed}");
    if let Some(path) = &args.output {
        let report = CalibrationReport {
            schema_version: SCHEMA_VERSION,
            input: args.input.display().to_string(),
            n,
            k,
            calibrated_lambda: calibrated,
            gaussian_closed_form_lambda: closed,
            c: args.c,
            mc_level: args.mc_level,
            mc_draws: args.mc_draws,
            seed: args.seed,
        };
        write_json(&report, Some(path))?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.reps < 2 {
        return Err(CliError::InvalidFlags(format!(
            "--reps must be at least 2 (variance is undefined for one replication), got {}",
            args.reps
        )));
    }
    let rule = penalty_rule(&args.penalty)?;
    if rule.kind == PenaltyKind::MonteCarlo {
        return Err(CliError::InvalidFlags(
            "simulate needs a design-free penalty: use --lambda or a closed-form --penalty-rule".into(),
        ));
    }
    let scale = PenaltyScale::from(args.penalty.penalty_scale);
    let lambda = lambda_closed_form(&rule, args.n)?;
    let config = fit_config(lambda, &args.solver, scale)?;
    let dgp = DgpConfig::new(args.n, args.p, args.seed)
        .with_outlier_scale(args.outlier_scale)
        .with_beta([args.beta[0], args.beta[1]]);
    dgp.validate()?;
    eprintln!(
        "roblasso simulate: n = {}, p = {}, reps = {}, seed = {}, outlier_scale = {}, beta = {:?}, lambda = {lambda} ({} rule, {} scale), max_iters = {}, tol = {:e}",
        args.n,
        args.p,
        args.reps,
        args.seed,
        args.outlier_scale,
        args.beta,
        rule_name(rule.kind),
        scale_name(scale),
        args.solver.max_iters,
        args.solver.tol
    );

    let report = run_study(&dgp, &config, args.reps, args.seed)?;
    eprintln!(
        "roblasso simulate: {} replications in {:.2}s, {} failed",
        report.replications, report.runtime_seconds, report.failures
    );

    match &args.output {
        Some(path) => report.write_table_csv(create(path)?)?,
        None => report.write_table_csv(io::stdout().lock())?,
    }
    if let Some(path) = &args.json {
        let output = SimulationOutput {
            schema_version: SCHEMA_VERSION,
            penalty: penalty_info(&rule, scale),
            solver: SolverInfo {
                max_iters: args.solver.max_iters,
                tol: args.solver.tol,
            },
            report: &report,
        };
        write_json(&output, Some(path))?;
    }
    if let Some(path) = &args.raw {
        report.write_records_csv(create(path)?)?;
    }
    if report.failures > 0 {
        return Err(CliError::ReplicationFailures {
            failures: report.failures,
            requested: args.reps,
        });
    }
    Ok(())
}
