//! Verification suites behind `ginvkit verify`.

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Result};
use ginvkit::certificate::{certify_optimality, DEFAULT_TOLERANCE};
use ginvkit::constructions::{self, Construction};
use ginvkit::norms::{self, NormSpec};
use ginvkit::prox;
use ginvkit::solvers::{self, Target};
use ginvkit::{linalg, Matrix};
use rayon::prelude::*;

use crate::commands::{parse_norm, solve, solver_config};
use crate::report::{number, Report};
use crate::{Ensemble, Family, Suite, VerifyArgs};

const INF: f64 = f64::INFINITY;

pub fn run(args: &VerifyArgs) -> Result<Report> {
    let name = match args.suite {
        Suite::MppTable => "verify mpp-table",
        Suite::Unbiasedness => "verify unbiasedness",
        Suite::Sparsity => "verify sparsity",
        Suite::Counterexamples => "verify counterexamples",
        Suite::ProxProperties => "verify prox-properties",
    };
    let mut report = Report::new(name, Some(args.seed));
    report.input("seed", args.seed);
    report
        .input("lambda", number(args.solver.lambda))
        .input("max_iter", args.solver.max_iter)
        .input("tol_primal", number(args.solver.tol_primal))
        .input("tol_change", number(args.solver.tol_change));
    report.tolerance("tol_primal", args.solver.tol_primal);
    match args.suite {
        Suite::MppTable => mpp_table(args, &mut report)?,
        Suite::Unbiasedness => unbiasedness(args, &mut report)?,
        Suite::Sparsity => sparsity(args, &mut report)?,
        Suite::Counterexamples => counterexamples(args, &mut report)?,
        Suite::ProxProperties => prox_properties(args, &mut report)?,
    }
    Ok(report)
}

/// Decorrelated per-trial seed.
fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed.wrapping_add(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn err(e: ginvkit::Error) -> anyhow::Error {
    anyhow!("{e}")
}

fn sample(ensemble: Ensemble, m: usize, n: usize, seed: u64) -> Result<Matrix> {
    let id = match ensemble {
        Ensemble::Gaussian => Construction::Gaussian { m, n, seed },
        Ensemble::Rademacher => Construction::Rademacher { m, n, seed },
    };
    constructions::construct(&id).map_err(err)
}

fn certificate_value(a: &Matrix, spec: &NormSpec, target: Target) -> Result<f64> {
    let x = linalg::mpp(a).map_err(err)?;
    Ok(certify_optimality(a, &x, spec, target).map_err(err)?.value)
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || m >= n {
        bail!("need 1 <= m < n, got m = {m}, n = {n}");
    }
    Ok(())
}

fn mpp_table(args: &VerifyArgs, report: &mut Report) -> Result<()> {
    let (m, n) = (args.m.unwrap_or(3), args.n.unwrap_or(6));
    check_dims(m, n)?;
    if m < 3 {
        bail!("mpp-table needs m >= 3 for the counterexample families");
    }
    let seeds = args.seeds.unwrap_or(3);
    report.input("m", m).input("n", n).input("seeds", seeds);
    report.tolerance("certificate", DEFAULT_TOLERANCE);
    let cfg = solver_config(&args.solver);
    let instances: Vec<Matrix> = (0..seeds as u64)
        .map(|s| sample(Ensemble::Gaussian, m, n, trial_seed(args.seed, s)))
        .collect::<Result<_>>()?;

    // MPP optimal for every full-rank A: first-order certificate.
    let certified: Vec<(NormSpec, Target)> = {
        let mut v = Vec::new();
        for t in [Target::Ginv, Target::Pginv] {
            for p in [1.5, 2.0, 3.0] {
                v.push((NormSpec::Schatten { p }, t));
            }
            for q in [1.0, 2.0, 3.0] {
                v.push((NormSpec::Columnwise { p: 2.0, q }, t));
            }
            v.push((NormSpec::Entrywise { p: 2.0 }, t));
            v.push((NormSpec::Rowwise { p: 2.0, q: 2.0 }, t));
        }
        v.push((NormSpec::Schatten { p: 1.0 }, Target::Ginv));
        v
    };
    for (spec, target) in &certified {
        let mut worst = 0.0_f64;
        for a in &instances {
            worst = worst.max(certificate_value(a, spec, *target)?);
        }
        report.check(
            format!("{target} {spec}: mpp optimal on {seeds} gaussian instances (certificate)"),
            worst,
            DEFAULT_TOLERANCE,
            worst <= DEFAULT_TOLERANCE,
        );
    }

    // MPP optimal where no subdifferential is implemented: the solver must
    // not beat it.
    let compared = [
        (NormSpec::Schatten { p: INF }, Target::Ginv),
        (NormSpec::Schatten { p: INF }, Target::Pginv),
        (NormSpec::Schatten { p: 1.0 }, Target::Pginv),
        (NormSpec::Columnwise { p: 2.0, q: INF }, Target::Ginv),
        (NormSpec::Columnwise { p: 2.0, q: INF }, Target::Pginv),
        (NormSpec::Induced1ToQ { q: 2.0 }, Target::Ginv),
        (NormSpec::Induced1ToQ { q: 2.0 }, Target::Pginv),
    ];
    for (spec, target) in &compared {
        let mut worst = f64::NEG_INFINITY;
        for a in &instances {
            let mpp = linalg::mpp(a).map_err(err)?;
            let reference = solvers::objective(a, &mpp, spec, *target);
            let r = solve(a, spec, *target, &cfg)?;
            worst = worst.max((reference - r.objective) / reference.max(1.0));
        }
        let tol = 1e-6;
        report.check(
            format!("{target} {spec}: solver does not beat the mpp on {seeds} gaussian instances (relative gain)"),
            worst,
            tol,
            worst <= tol,
        );
    }
    report.info("ind:inf->2", "not evaluated: the norm is NP-hard to compute", None);

    // MPP not optimal for some A: counterexample families.
    let fam = |c: Construction| constructions::construct(&c).map_err(err);
    let a1 = fam(Construction::A1 { m, n })?;
    let a2 = fam(Construction::A2 { m, n })?;
    let a3 = fam(Construction::A3 { m, n })?;
    let a4 = fam(Construction::A4 { m, n, theta: PI / 6.0 })?;
    let a5 = fam(Construction::A5 { m, n })?;
    let mut crosses: Vec<(&str, &Matrix, NormSpec, Target)> = Vec::new();
    for p in [1.0, 1.5, 3.0] {
        crosses.push(("a1", &a1, NormSpec::Entrywise { p }, Target::Ginv));
        for q in [1.0, 2.0] {
            crosses.push(("a1", &a1, NormSpec::Columnwise { p, q }, Target::Ginv));
            crosses.push(("a2", &a2, NormSpec::Rowwise { p, q }, Target::Ginv));
        }
    }
    for q in [1.0, 3.0] {
        crosses.push(("a3", &a3, NormSpec::Rowwise { p: 2.0, q }, Target::Ginv));
    }
    for p in [1.0, 3.0] {
        crosses.push(("a4", &a4, NormSpec::Entrywise { p }, Target::Pginv));
        for q in [1.0, 2.0] {
            crosses.push(("a4", &a4, NormSpec::Columnwise { p, q }, Target::Pginv));
        }
        crosses.push(("a5", &a5, NormSpec::Rowwise { p, q: 2.0 }, Target::Pginv));
    }
    for (family, a, spec, target) in crosses {
        let value = certificate_value(a, &spec, target)?;
        report.check(
            format!("{target} {spec}: mpp not optimal on {family} (certificate)"),
            value,
            DEFAULT_TOLERANCE,
            value > DEFAULT_TOLERANCE,
        );
    }
    Ok(())
}

fn unbiasedness(args: &VerifyArgs, report: &mut Report) -> Result<()> {
    let (m, n) = (args.m.unwrap_or(3), args.n.unwrap_or(5));
    check_dims(m, n)?;
    let trials = args.trials.unwrap_or(500);
    if trials < 2 {
        bail!("unbiasedness needs at least 2 trials");
    }
    let spec = parse_norm(args.norm.as_deref().unwrap_or("entrywise:1"))?;
    let target: Target = args.target.into();
    report
        .input("m", m)
        .input("n", n)
        .input("trials", trials)
        .input("norm", spec.to_string())
        .input("target", target.to_string())
        .input("ensemble", format!("{:?}", args.ensemble).to_lowercase());
    let sigmas = 3.0;
    report.tolerance("standard_errors", sigmas);
    let cfg = solver_config(&args.solver);

    let outcomes: Vec<Result<(Matrix, bool, u64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut resamples = 0;
            let a = loop {
                let s = trial_seed(args.seed, t + (resamples << 32));
                match sample(args.ensemble, m, n, s) {
                    Ok(a) => break a,
                    Err(_) if resamples < 16 => resamples += 1,
                    Err(e) => return Err(e),
                }
            };
            let r = solve(&a, &spec, target, &cfg)?;
            Ok((&r.x * &a, r.converged, resamples))
        })
        .collect();
    // Sequential reduction keeps the sums independent of scheduling.
    let mut sum = Matrix::zeros(n, n);
    let mut sum_sq = Matrix::zeros(n, n);
    let (mut nonconverged, mut resampled) = (0usize, 0u64);
    for o in outcomes {
        let (xa, converged, resamples) = o?;
        sum += &xa;
        sum_sq += xa.component_mul(&xa);
        nonconverged += usize::from(!converged);
        resampled += resamples;
    }
    let k = trials as f64;
    let mean = &sum / k;
    let expected = m as f64 / n as f64;
    let (mut diag_z, mut off_z, mut diag_mean) = (0.0_f64, 0.0_f64, 0.0);
    let mut max_off = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let var = ((sum_sq[(i, j)] / k - mean[(i, j)].powi(2)) * k / (k - 1.0)).max(0.0);
            let se = (var / k).sqrt();
            let target_value = if i == j { expected } else { 0.0 };
            let dev = (mean[(i, j)] - target_value).abs();
            let z = if se > 0.0 { dev / se } else if dev <= 1e-12 { 0.0 } else { INF };
            if i == j {
                diag_z = diag_z.max(z);
                diag_mean += mean[(i, j)] / n as f64;
            } else {
                off_z = off_z.max(z);
                max_off = max_off.max(dev);
            }
        }
    }
    report.info("expected_diagonal", number(expected), None);
    report.info("diagonal_mean", number(diag_mean), None);
    report.info("max_abs_offdiagonal_mean", number(max_off), None);
    report.check("max_diagonal_deviation_in_standard_errors", diag_z, sigmas, diag_z <= sigmas);
    report.check("max_offdiagonal_deviation_in_standard_errors", off_z, sigmas, off_z <= sigmas);
    report.info("nonconverged_solves", nonconverged, None);
    report.info("rank_deficient_resamples", resampled, None);
    Ok(())
}

fn sparsity(args: &VerifyArgs, report: &mut Report) -> Result<()> {
    let (m, n) = (args.m.unwrap_or(4), args.n.unwrap_or(8));
    check_dims(m, n)?;
    let seeds = args.seeds.unwrap_or(20);
    report.input("m", m).input("n", n).input("seeds", seeds).input("threshold", number(args.threshold));
    report.tolerance("relative_zero_threshold", args.threshold);
    let spec = NormSpec::Entrywise { p: 1.0 };
    let cfg = solver_config(&args.solver);
    let results: Vec<Result<(usize, f64, f64, bool)>> = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let a = sample(Ensemble::Gaussian, m, n, trial_seed(args.seed, s))?;
            let r = solvers::admm_ginv(&a, &spec, &cfg).map_err(err)?;
            let count = norms::nonzero_census(&r.x, args.threshold * r.x.amax());
            let mpp_l1 = norms::entrywise(&linalg::mpp(&a).map_err(err)?, 1.0);
            Ok((count, r.objective, mpp_l1, r.converged))
        })
        .collect();
    let expected = m * m;
    for (i, res) in results.into_iter().enumerate() {
        let (count, objective, mpp_l1, converged) = res?;
        report.check(
            format!("instance {i}: nonzeros (expected {expected})"),
            count as f64,
            args.threshold,
            count == expected,
        );
        report.info(format!("instance {i}: l1 objective / mpp l1"), number(objective / mpp_l1), None);
        if !converged {
            report.info(format!("instance {i}: converged"), false, None);
        }
    }
    Ok(())
}

/// Whether the MPP is expected to be optimal, or `None` when no claim applies.
fn expected_optimal(family: Family, p: f64, q: f64) -> Option<bool> {
    match family {
        Family::A1 | Family::A2 | Family::A4 => Some(p == 2.0),
        Family::A3 if p == 2.0 => Some(q == 2.0),
        Family::A3 if p == 1.0 && q == 2.0 => Some(true),
        Family::A3 => None,
        Family::A5 if q == 2.0 => Some(p == 2.0),
        Family::A5 => None,
    }
}

fn counterexamples(args: &VerifyArgs, report: &mut Report) -> Result<()> {
    let family = args.family.ok_or_else(|| anyhow!("counterexamples needs --family"))?;
    let (dm, dn) = if family == Family::A1 { (3, 5) } else { (3, 6) };
    let (m, n) = (args.m.unwrap_or(dm), args.n.unwrap_or(dn));
    let p = args.p.unwrap_or(1.0);
    let (id, spec, target, q) = match family {
        Family::A1 => (Construction::A1 { m, n }, NormSpec::Entrywise { p }, Target::Ginv, p),
        Family::A2 => {
            let q = args.q.unwrap_or(2.0);
            (Construction::A2 { m, n }, NormSpec::Rowwise { p, q }, Target::Ginv, q)
        }
        Family::A3 => {
            let q = args.q.unwrap_or(2.0);
            (Construction::A3 { m, n }, NormSpec::Rowwise { p, q }, Target::Ginv, q)
        }
        Family::A4 => {
            let q = args.q.unwrap_or(1.0);
            let theta = args.theta.unwrap_or(PI / 6.0);
            (Construction::A4 { m, n, theta }, NormSpec::Columnwise { p, q }, Target::Pginv, q)
        }
        Family::A5 => {
            let q = args.q.unwrap_or(2.0);
            (Construction::A5 { m, n }, NormSpec::Rowwise { p, q }, Target::Pginv, q)
        }
    };
    let spec = spec.validated().map_err(err)?;
    if !spec.is_convex_valid() {
        bail!("counterexamples needs p, q >= 1, got {spec}");
    }
    report
        .input("family", format!("{family:?}").to_lowercase())
        .input("m", m)
        .input("n", n)
        .input("norm", spec.to_string())
        .input("target", target.to_string());
    report.tolerance("certificate", DEFAULT_TOLERANCE);
    let a = constructions::construct(&id).map_err(err)?;
    let mpp = linalg::mpp(&a).map_err(err)?;
    let mpp_objective = solvers::objective(&a, &mpp, &spec, target);
    let cert = certify_optimality(&a, &mpp, &spec, target).map_err(err)?;
    let expectation = expected_optimal(family, p, q);
    report.info("mpp_objective", number(mpp_objective), None);
    match expectation {
        Some(true) => report.check("mpp certificate (expected to pass)", cert.value, cert.tolerance, cert.passed),
        Some(false) => report.check("mpp certificate (expected to fail)", cert.value, cert.tolerance, !cert.passed),
        None => report.info("mpp certificate (no claim for these exponents)", number(cert.value), Some(cert.tolerance)),
    }

    let exponent = prox::default_exponent(&spec);
    let cfg = solver_config(&args.solver);
    let solvable = prox::is_prox_supported(&spec, exponent)
        || (target == Target::Ginv && matches!(spec, NormSpec::Columnwise { p, .. } if p == 1.0 || p == 2.0));
    if !solvable {
        report.info("solver comparison", "skipped: no prox for this norm", None);
        return Ok(());
    }
    let r = solve(&a, &spec, target, &cfg)?;
    let delta = mpp_objective - r.objective;
    report.info("solver_objective", number(r.objective), Some(cfg.tol_change));
    report.flag("solver converged", r.converged, None);
    match expectation {
        Some(false) => report.check("delta = mpp objective - solver objective (expected > 0)", delta, 0.0, delta > 0.0),
        Some(true) => {
            let tol = 1e-6 * mpp_objective.max(1.0);
            report.check("delta = mpp objective - solver objective (expected <= tol)", delta, tol, delta <= tol)
        }
        None => report.info("delta = mpp objective - solver objective", number(delta), None),
    }
    Ok(())
}

/// Sort-based reference for the ℓ1-ball projection.
fn l1_ball_reference(v: &[f64], r: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= r {
        return v.to_vec();
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let (mut cum, mut theta) = (0.0, 0.0);
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - r) / (j + 1) as f64;
        if uj > t {
            theta = t;
        }
    }
    v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn prox_properties(args: &VerifyArgs, report: &mut Report) -> Result<()> {
    let trials = args.trials.unwrap_or(1000);
    report.input("trials", trials);
    let vec_of = |len: usize, seed: u64, scale: f64| -> Vec<f64> {
        constructions::gaussian(1, len, seed).iter().map(|x| x * scale).collect()
    };
    let (mut moreau, mut l1_gap, mut firm, mut idem, mut variational) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let lambda = 0.7;
    let specs = [
        (NormSpec::Entrywise { p: 1.0 }, 1.0),
        (NormSpec::Entrywise { p: 2.0 }, 2.0),
        (NormSpec::Entrywise { p: INF }, 1.0),
        (NormSpec::Columnwise { p: 2.0, q: 1.0 }, 1.0),
        (NormSpec::Columnwise { p: 2.0, q: 3.0 }, 3.0),
        (NormSpec::Columnwise { p: 1.0, q: INF }, 1.0),
        (NormSpec::Rowwise { p: 2.0, q: 1.0 }, 1.0),
        (NormSpec::Rowwise { p: INF, q: 1.0 }, 1.0),
        (NormSpec::Schatten { p: 1.0 }, 1.0),
        (NormSpec::Spectral, 1.0),
    ];
    for t in 0..trials as u64 {
        let s = trial_seed(args.seed, t);
        let len = 1 + (s % 24) as usize;
        let v = vec_of(len, s, 2.0);
        let w = vec_of(len, s ^ 1, 2.0);
        let scaled: Vec<f64> = v.iter().map(|x| x / lambda).collect();
        for (p, q) in [
            (prox::prox_vec_l1(&v, lambda), prox::project_linf_ball(&scaled, 1.0)),
            (prox::prox_vec_l2(&v, lambda), prox::project_l2_ball(&scaled, 1.0)),
            (prox::prox_vec_linf(&v, lambda), prox::project_l1_ball(&scaled, 1.0)),
        ] {
            for i in 0..len {
                moreau = moreau.max((p[i] + lambda * q[i] - v[i]).abs());
            }
        }
        let r = 0.1 + (s >> 40) as f64 / (1u64 << 24) as f64 * 5.0;
        let proj = prox::project_l1_ball(&v, r);
        l1_gap = l1_gap.max(max_abs_diff(&proj, &l1_ball_reference(&v, r)));
        for op in [prox::project_l1_ball, prox::project_l2_ball, prox::project_linf_ball] {
            let once = op(&v, r);
            idem = idem.max(max_abs_diff(&op(&once, r), &once));
        }
        let vec_ops: [&dyn Fn(&[f64]) -> Vec<f64>; 4] = [
            &|x| prox::prox_vec_l1(x, lambda),
            &|x| prox::prox_vec_l2(x, lambda),
            &|x| prox::prox_vec_linf(x, lambda),
            &|x| prox::prox_vec_l2_power(x, lambda, 1.5),
        ];
        for op in vec_ops {
            let (pv, pw) = (op(&v), op(&w));
            let d2: f64 = pv.iter().zip(&pw).map(|(a, b)| (a - b).powi(2)).sum();
            let inner: f64 = (0..len).map(|i| (pv[i] - pw[i]) * (v[i] - w[i])).sum();
            firm = firm.max(d2 - inner);
        }
        let x = constructions::gaussian(3, 4, s) * 2.0;
        let y = constructions::gaussian(3, 4, s ^ 2) * 2.0;
        for (spec, e) in &specs {
            let px = prox::prox_matrix(&x, spec, *e, lambda).map_err(err)?;
            let py = prox::prox_matrix(&y, spec, *e, lambda).map_err(err)?;
            let d = &px - &py;
            firm = firm.max(d.norm_squared() - d.dot(&(&x - &y)));
        }
        // ⟨V − P(V), Y − P(V)⟩ <= 0 for feasible Y.
        let p = prox::project_colinf1_ball(&x, r);
        let scale = norms::columnwise_mixed(&y, INF, 1.0);
        let feasible = &y * (r / scale.max(r));
        variational = variational.max((&x - &p).dot(&(feasible - &p)));
        idem = idem.max((prox::project_colinf1_ball(&p, r) - &p).amax());
    }
    report.check("moreau_identity_max_error", moreau, 1e-12, moreau <= 1e-12);
    report.check("l1_ball_vs_sort_reference", l1_gap, 1e-12, l1_gap <= 1e-12);
    report.check("projection_idempotence", idem, 1e-12, idem <= 1e-12);
    report.check("firm_nonexpansiveness_slack", firm, 1e-10, firm <= 1e-10);
    report.check("colinf1_variational_inequality", variational, 1e-10, variational <= 1e-10);
    Ok(())
}
