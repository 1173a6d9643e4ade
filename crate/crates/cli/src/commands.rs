use std::f64::consts::PI;

use anyhow::{anyhow, bail, Context, Result};
use ginvkit::constructions::{self, Construction};
use ginvkit::norms::NormSpec;
use ginvkit::solvers::{self, SolverConfig, Target};
use ginvkit::{linalg, Matrix};
use serde_json::json;

use crate::report::{number, Report};
use crate::{matrix_io, ConstructArgs, PinvArgs, SolverFlags};

pub fn parse_norm(text: &str) -> Result<NormSpec> {
    text.parse::<NormSpec>().map_err(|e| anyhow!("{e}"))
}

pub fn solver_config(flags: &SolverFlags) -> SolverConfig {
    SolverConfig {
        lambda: flags.lambda,
        mu: flags.mu,
        max_iter: flags.max_iter,
        tol_primal: flags.tol_primal,
        tol_change: flags.tol_change,
        seed: None,
    }
}

/// Runs the solver for `target`, filling the default `mu` for pginv.
pub fn solve(a: &Matrix, spec: &NormSpec, target: Target, cfg: &SolverConfig) -> Result<solvers::SolveResult> {
    let result = match target {
        Target::Ginv => solvers::admm_ginv(a, spec, cfg),
        Target::Pginv => {
            let cfg = if cfg.mu.is_none() { cfg.clone().with_default_mu(a) } else { cfg.clone() };
            solvers::linearized_admm_pginv(a, spec, &cfg)
        }
    };
    result.map_err(|e| anyhow!("{e}"))
}

fn solver_inputs(report: &mut Report, flags: &SolverFlags) {
    report
        .input("lambda", number(flags.lambda))
        .input("mu", flags.mu.map_or(serde_json::Value::Null, number))
        .input("max_iter", flags.max_iter)
        .input("tol_primal", number(flags.tol_primal))
        .input("tol_change", number(flags.tol_change));
    report.tolerance("tol_primal", flags.tol_primal).tolerance("tol_change", flags.tol_change);
}

/// Returns the report and whether the summary belongs on stderr.
pub fn pinv(args: &PinvArgs) -> Result<(Report, bool)> {
    let a = matrix_io::read_matrix(&args.input)?;
    let spec = parse_norm(&args.norm)?;
    let target: Target = args.target.into();
    let cfg = solver_config(&args.solver);
    let mut report = Report::new("pinv", None);
    report
        .input("input", args.input.display().to_string())
        .input("norm", spec.to_string())
        .input("target", target.to_string())
        .input("shape", json!([a.nrows(), a.ncols()]));
    solver_inputs(&mut report, &args.solver);

    let result = solve(&a, &spec, target, &cfg)?;
    let mpp = linalg::mpp(&a).map_err(|e| anyhow!("{e}"))?;
    let mpp_objective = solvers::objective(&a, &mpp, &spec, target);
    let dominance_tol = 1e-6 * mpp_objective.max(1.0);
    report.tolerance("objective_dominance", dominance_tol);

    report.info("objective", number(result.objective), Some(cfg.tol_change));
    report.info("mpp_objective", number(mpp_objective), None);
    report.info("iterations", result.iterations, None);
    report.flag("converged", result.converged, None);
    report.check("primal_residual", result.primal_residual, cfg.tol_primal, result.primal_residual <= cfg.tol_primal);
    let excess = result.objective - mpp_objective;
    report.check("objective_minus_mpp_objective", excess, dominance_tol, excess <= dominance_tol);

    match &args.output {
        Some(path) => matrix_io::write_matrix(path, &result.x)?,
        None => matrix_io::write_matrix_to(std::io::stdout().lock(), &result.x)?,
    }
    report.finish();
    if let Some(path) = &args.json {
        report.write_json(path)?;
    }
    Ok((report, args.output.is_none()))
}

fn need(value: Option<usize>, flag: &str, name: &str) -> Result<usize> {
    value.ok_or_else(|| anyhow!("{name} needs --{flag}"))
}

pub fn construction_from_args(args: &ConstructArgs) -> Result<Construction> {
    let name = args.name.as_str();
    let mn = || -> Result<(usize, usize)> { Ok((need(args.m, "m", name)?, need(args.n, "n", name)?)) };
    Ok(match name {
        "example41" => Construction::Example41,
        "eta_counterexample" => Construction::EtaCounterexample { eta: args.eta.unwrap_or(0.5) },
        "a1" => mn().map(|(m, n)| Construction::A1 { m, n })?,
        "a2" => mn().map(|(m, n)| Construction::A2 { m, n })?,
        "a3" => mn().map(|(m, n)| Construction::A3 { m, n })?,
        "a4" => {
            let (m, n) = mn()?;
            Construction::A4 { m, n, theta: args.theta.unwrap_or(PI / 6.0) }
        }
        "a5" => mn().map(|(m, n)| Construction::A5 { m, n })?,
        "partial_hadamard" => {
            let n = need(args.n, "n", name)?;
            let rows = match (&args.rows, args.m) {
                (Some(rows), m) => {
                    if let Some(m) = m {
                        if m != rows.len() {
                            bail!("--m {m} disagrees with {} rows in --rows", rows.len());
                        }
                    }
                    rows.clone()
                }
                (None, Some(m)) => (0..m).collect(),
                (None, None) => bail!("partial_hadamard needs --rows or --m"),
            };
            Construction::PartialHadamard { n, rows }
        }
        "dirac_hadamard" => Construction::DiracHadamard { m: need(args.m, "m", name)? },
        "gaussian" => mn().map(|(m, n)| Construction::Gaussian { m, n, seed: args.seed })?,
        "rademacher" => mn().map(|(m, n)| Construction::Rademacher { m, n, seed: args.seed })?,
        other => bail!(
            "unknown construction {other:?}; expected one of {}",
            constructions::NAMES.join(", ")
        ),
    })
}

pub fn construct(args: &ConstructArgs) -> Result<(Report, bool)> {
    let id = construction_from_args(args)?;
    let a = constructions::construct(&id).map_err(|e| anyhow!("{e}"))?;
    let mut report = Report::new("construct", Some(args.seed));
    report.input("name", id.name()).input("params", format!("{id:?}"));
    report.info("shape", json!([a.nrows(), a.ncols()]), None);
    let sigma = linalg::svd(&a).map_err(|e| anyhow!("{e}"))?.singular_values;
    let sigma_min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = linalg::rank_tol(a.nrows(), a.ncols(), sigma.max());
    report.tolerance("rank_tol", tol);
    report.check("sigma_min", sigma_min, tol, sigma_min > tol);
    match &args.output {
        Some(path) => matrix_io::write_matrix(path, &a).with_context(|| "writing matrix")?,
        None => matrix_io::write_matrix_to(std::io::stdout().lock(), &a)?,
    }
    report.finish();
    Ok((report, args.output.is_none()))
}
