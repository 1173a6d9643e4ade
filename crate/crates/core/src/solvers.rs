//! ADMM solvers for norm-minimizing generalized inverses.
//!
//! `ginv_ν(A) = argmin ‖X‖_ν` and `pginv_ν(A) = argmin ‖XA‖_ν`, both over
//! `X ∈ 𝒢(A)`. The affine constraint enters through its projection and the
//! norm through `prox_{λ‖·‖^e}` with the exponent from
//! [`prox::default_exponent`].

use crate::error::{Error, Result};
use crate::linalg::{self, AffineGinvSet, Matrix};
use crate::norms::{self, NormSpec};
use crate::prox::{self, ProxStep};

/// Window, in iterations, of the relative objective change test.
pub const CHANGE_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Linearized-ADMM step; required by [`linearized_admm_pginv`].
    pub mu: Option<f64>,
    pub max_iter: usize,
    /// Bound on `‖AX − I‖_F` and on the splitting gap `‖X − Z‖_F`.
    pub tol_primal: f64,
    /// Bound on the relative objective change over [`CHANGE_WINDOW`] iterations.
    pub tol_change: f64,
    pub seed: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 1.0,
            mu: None,
            max_iter: 5000,
            tol_primal: 1e-9,
            tol_change: 1e-10,
            seed: None,
        }
    }
}

impl SolverConfig {
    /// Fills `mu` with `0.9 λ / ‖A‖²₂→₂`.
    pub fn with_default_mu(mut self, a: &Matrix) -> Self {
        let s = linalg::spectral_norm(a);
        self.mu = Some(0.9 * self.lambda / (s * s));
        self
    }

    pub fn validate(&self) -> Result<()> {
        ProxStep::new(self.lambda)?;
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_change > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Matrix,
    /// Norm of `X` (ginv) or of `XA` (pginv).
    pub objective: f64,
    pub iterations: usize,
    /// `‖AX − I‖_F`.
    pub primal_residual: f64,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

/// Which quantity the norm is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `‖X‖`.
    Ginv,
    /// `‖XA‖`.
    Pginv,
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ginv" => Ok(Target::Ginv),
            "pginv" => Ok(Target::Pginv),
            other => Err(Error::Config(format!("unknown target {other:?}"))),
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Ginv => "ginv",
            Target::Pginv => "pginv",
        })
    }
}

/// Objective of `x` for the given target.
pub fn objective(a: &Matrix, x: &Matrix, spec: &NormSpec, target: Target) -> f64 {
    match target {
        Target::Ginv => spec.evaluate(x),
        Target::Pginv => spec.evaluate(&(x * a)),
    }
}

fn check_problem(a: &Matrix, spec: &NormSpec, cfg: &SolverConfig) -> Result<f64> {
    if !spec.is_convex_valid() {
        return Err(Error::UnsupportedProx {
            spec: spec.to_string(),
            exponent: prox::default_exponent(spec),
            supported: prox::SUPPORTED_PROX,
        });
    }
    linalg::ensure_finite(a)?;
    cfg.validate()?;
    let (m, n) = a.shape();
    if m > n {
        return Err(Error::UnsupportedShape { rows: m, cols: n });
    }
    let exponent = prox::default_exponent(spec);
    if !prox::is_prox_supported(spec, exponent) {
        return Err(Error::UnsupportedProx {
            spec: spec.to_string(),
            exponent,
            supported: prox::SUPPORTED_PROX,
        });
    }
    Ok(exponent)
}

/// Square invertible input: `𝒢(A)` is the single point `A⁻¹`.
fn square_result(a: &Matrix, spec: &NormSpec, target: Target) -> Result<SolveResult> {
    let x = linalg::mpp(a)?;
    let residual = linalg::inverse_residual(a, &x)?;
    let obj = objective(a, &x, spec, target);
    Ok(SolveResult {
        x,
        objective: obj,
        iterations: 0,
        primal_residual: residual,
        history: vec![IterationRecord { iteration: 0, objective: obj, residual }],
        converged: true,
    })
}

/// Shared stopping rule: feasibility, splitting gap and a flat objective over
/// the last [`CHANGE_WINDOW`] iterations.
fn stopped(cfg: &SolverConfig, history: &[IterationRecord], gap: f64) -> bool {
    let Some(last) = history.last() else {
        return false;
    };
    if history.len() <= CHANGE_WINDOW || last.residual > cfg.tol_primal || gap > cfg.tol_primal {
        return false;
    }
    let earlier = history[history.len() - 1 - CHANGE_WINDOW].objective;
    let scale = last.objective.abs().max(f64::MIN_POSITIVE);
    (last.objective - earlier).abs() / scale <= cfg.tol_change
}

/// Columns of `X` decouple under `col:p,q` for every `q < ∞`, so the
/// minimizer does not depend on `q`; when `col:p,q` has no prox with exponent
/// `q`, `col:p,1` is used for the splitting step.
fn ginv_prox_spec(spec: &NormSpec) -> NormSpec {
    if let NormSpec::Columnwise { p, q } = *spec {
        let e = prox::default_exponent(spec);
        let surrogate = NormSpec::Columnwise { p, q: 1.0 };
        if q.is_finite()
            && spec.is_convex_valid()
            && !prox::is_prox_supported(spec, e)
            && prox::is_prox_supported(&surrogate, 1.0)
        {
            return surrogate;
        }
    }
    spec.clone()
}

/// ADMM for `ginv_ν(A)`:
///
/// ```text
/// X ← A† + N Nᵀ (Z − U)
/// Z ← prox_{λ‖·‖^e}(X + U)
/// U ← U + X − Z
/// ```
///
/// started from `X = Z = A†`, `U = 0`.
pub fn admm_ginv(a: &Matrix, spec: &NormSpec, cfg: &SolverConfig) -> Result<SolveResult> {
    let prox_spec = ginv_prox_spec(spec);
    let exponent = check_problem(a, &prox_spec, cfg)?;
    if a.nrows() == a.ncols() {
        return square_result(a, spec, Target::Ginv);
    }
    let set = AffineGinvSet::new(a)?;
    let mut x = set.mpp.clone();
    let mut z = x.clone();
    let mut u = Matrix::zeros(x.nrows(), x.ncols());
    let mut history = Vec::new();
    let mut converged = false;

    for k in 1..=cfg.max_iter {
        x = set.project(&(&z - &u));
        let xu = &x + &u;
        z = prox::prox_matrix(&xu, &prox_spec, exponent, cfg.lambda)?;
        u = xu - &z;
        let gap = (&x - &z).norm();
        history.push(IterationRecord {
            iteration: k,
            objective: spec.evaluate(&x),
            residual: linalg::inverse_residual(a, &x)?,
        });
        if stopped(cfg, &history, gap) {
            converged = true;
            break;
        }
    }
    finish(x, history, converged)
}

fn finish(x: Matrix, history: Vec<IterationRecord>, converged: bool) -> Result<SolveResult> {
    let last = *history.last().expect("at least one iteration");
    Ok(SolveResult {
        x,
        objective: last.objective,
        iterations: last.iteration,
        primal_residual: last.residual,
        history,
        converged,
    })
}

/// Linearized ADMM for `pginv_ν(A)`:
///
/// ```text
/// X ← A† + N Nᵀ [X − (μ/λ)(XA − Z + U)Aᵀ]
/// Z ← prox_{λ‖·‖^e}(XA + U)
/// U ← U + XA − Z
/// ```
///
/// started from `X = A†`, `Z = A†A`, `U = 0`. Needs `0 < μ ≤ λ/‖A‖²`.
pub fn linearized_admm_pginv(a: &Matrix, spec: &NormSpec, cfg: &SolverConfig) -> Result<SolveResult> {
    let exponent = check_problem(a, spec, cfg)?;
    let step = ProxStep::new(cfg.lambda)?;
    let step = match cfg.mu {
        Some(mu) => step.with_mu(mu)?,
        None => step,
    };
    let mu = step.check_linearized(linalg::spectral_norm(a))?;
    if a.nrows() == a.ncols() {
        return square_result(a, spec, Target::Pginv);
    }
    let set = AffineGinvSet::new(a)?;
    let ratio = mu / cfg.lambda;
    let at = a.transpose();
    let mut x = set.mpp.clone();
    let mut xa = &x * a;
    let mut z = xa.clone();
    let mut u = Matrix::zeros(z.nrows(), z.ncols());
    let mut history = Vec::new();
    let mut converged = false;

    for k in 1..=cfg.max_iter {
        let grad = (&xa - &z + &u) * &at;
        x = set.project(&(&x - grad * ratio));
        xa = &x * a;
        let v = &xa + &u;
        z = prox::prox_matrix(&v, spec, exponent, cfg.lambda)?;
        u = v - &z;
        let gap = (&xa - &z).norm();
        history.push(IterationRecord {
            iteration: k,
            objective: spec.evaluate(&xa),
            residual: linalg::inverse_residual(a, &x)?,
        });
        if stopped(cfg, &history, gap) {
            converged = true;
            break;
        }
    }
    finish(x, history, converged)
}

struct ColumnRun {
    x: Vec<f64>,
    objectives: Vec<f64>,
    residuals: Vec<f64>,
    converged: bool,
}

/// Vector ADMM for `min ‖x‖_p s.t. Ax = eⱼ`, `p ∈ {1, ∞}`.
fn solve_column(
    a: &Matrix,
    set: &AffineGinvSet,
    j: usize,
    p: f64,
    cfg: &SolverConfig,
) -> ColumnRun {
    let n = set.mpp.nrows();
    let base = set.mpp.column(j).clone_owned();
    let nb = &set.nullbasis;
    let e_j = nalgebra::DVector::from_fn(a.nrows(), |i, _| if i == j { 1.0 } else { 0.0 });
    let prox_p = |v: &[f64]| {
        if p == 1.0 {
            prox::prox_vec_l1(v, cfg.lambda)
        } else {
            prox::prox_vec_linf(v, cfg.lambda)
        }
    };
    let mut x = base.clone();
    let mut z = x.clone();
    let mut u = nalgebra::DVector::zeros(n);
    let mut objectives = Vec::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        x = &base + nb * (nb.transpose() * (&z - &u));
        let xu = &x + &u;
        z = nalgebra::DVector::from_vec(prox_p(xu.as_slice()));
        u = xu - &z;
        objectives.push(norms::lp_norm(x.iter().copied(), p));
        residuals.push((a * &x - &e_j).norm());
        let k = objectives.len();
        if k > CHANGE_WINDOW
            && residuals[k - 1] <= cfg.tol_primal
            && (&x - &z).norm() <= cfg.tol_primal
        {
            let now = objectives[k - 1];
            let before = objectives[k - 1 - CHANGE_WINDOW];
            if (now - before).abs() / now.abs().max(f64::MIN_POSITIVE) <= cfg.tol_change {
                converged = true;
                break;
            }
        }
    }
    ColumnRun {
        x: x.iter().copied().collect(),
        objectives,
        residuals,
        converged,
    }
}

/// Column-by-column `ℓp`-minimal inverse. Every `ginv_{col:p,q}` with `q < ∞`
/// has the same minimizer; the reported objective is `Σⱼ ‖xⱼ‖_p`.
pub fn decoupled_column_solve(a: &Matrix, p: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    linalg::ensure_finite(a)?;
    cfg.validate()?;
    if !(p == 1.0 || p == 2.0 || p.is_infinite()) {
        return Err(Error::Config(format!(
            "decoupled column solve supports p in {{1, 2, inf}}, got {p}"
        )));
    }
    let (m, n) = a.shape();
    if m > n {
        return Err(Error::UnsupportedShape { rows: m, cols: n });
    }
    let spec = NormSpec::Columnwise { p, q: 1.0 };
    if p == 2.0 || m == n {
        return square_or_mpp(a, &spec);
    }
    let set = AffineGinvSet::new(a)?;
    let runs: Vec<ColumnRun> = (0..m).map(|j| solve_column(a, &set, j, p, cfg)).collect();

    let mut x = Matrix::zeros(n, m);
    for (j, run) in runs.iter().enumerate() {
        x.column_mut(j).copy_from_slice(&run.x);
    }
    // Shorter runs are padded with their final values.
    let longest = runs.iter().map(|r| r.objectives.len()).max().unwrap_or(0);
    let history = (0..longest)
        .map(|k| {
            let at = |v: &Vec<f64>| v[k.min(v.len() - 1)];
            IterationRecord {
                iteration: k + 1,
                objective: runs.iter().map(|r| at(&r.objectives)).sum(),
                residual: runs
                    .iter()
                    .map(|r| at(&r.residuals).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            }
        })
        .collect::<Vec<_>>();
    let converged = runs.iter().all(|r| r.converged);
    Ok(SolveResult {
        objective: spec.evaluate(&x),
        primal_residual: linalg::inverse_residual(a, &x)?,
        iterations: longest,
        x,
        history,
        converged,
    })
}

fn square_or_mpp(a: &Matrix, spec: &NormSpec) -> Result<SolveResult> {
    let x = linalg::mpp(a)?;
    let residual = linalg::inverse_residual(a, &x)?;
    let obj = spec.evaluate(&x);
    Ok(SolveResult {
        x,
        objective: obj,
        iterations: 0,
        primal_residual: residual,
        history: vec![IterationRecord { iteration: 0, objective: obj, residual }],
        converged: true,
    })
}

/// Minimizer of the Gaussian average-case blowup `(E‖XAu‖_p^p)^{1/p}`,
/// which is `pginv` for the rowwise `(2, p)` norm.
pub fn avg_case_pginv(a: &Matrix, p: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Config(format!(
            "average-case pginv needs 1 <= p < inf, got {p}"
        )));
    }
    let mut cfg = cfg.clone();
    if cfg.mu.is_none() {
        cfg = cfg.with_default_mu(a);
    }
    linearized_admm_pginv(a, &NormSpec::Rowwise { p: 2.0, q: p }, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(m: usize, n: usize, seed: u64) -> Matrix {
        crate::constructions::gaussian(m, n, seed)
    }

    #[test]
    fn square_input_is_its_inverse() {
        let a = Matrix::identity(3, 3);
        for spec in [
            NormSpec::Columnwise { p: 1.0, q: 1.0 },
            NormSpec::Entrywise { p: 2.0 },
            NormSpec::Schatten { p: 1.0 },
        ] {
            let r = admm_ginv(&a, &spec, &SolverConfig::default()).unwrap();
            assert!((r.x - Matrix::identity(3, 3)).norm() < 1e-14);
            assert!(r.converged);
        }
    }

    #[test]
    fn rejects_quasi_norms_and_unsupported_specs() {
        let a = gaussian(2, 4, 1);
        let cfg = SolverConfig::default();
        assert!(matches!(
            admm_ginv(&a, &NormSpec::Columnwise { p: 0.5, q: 1.0 }, &cfg),
            Err(Error::UnsupportedProx { .. })
        ));
        assert!(matches!(
            admm_ginv(&a, &NormSpec::Schatten { p: 3.0 }, &cfg),
            Err(Error::UnsupportedProx { .. })
        ));
    }

    #[test]
    fn pginv_requires_valid_mu() {
        let a = gaussian(2, 4, 2);
        let spec = NormSpec::Rowwise { p: 2.0, q: 2.0 };
        let cfg = SolverConfig::default();
        assert!(matches!(linearized_admm_pginv(&a, &spec, &cfg), Err(Error::Config(_))));
        let s = linalg::spectral_norm(&a);
        let too_big = SolverConfig { mu: Some(2.0 / (s * s)), ..cfg.clone() };
        assert!(matches!(linearized_admm_pginv(&a, &spec, &too_big), Err(Error::Config(_))));
        assert!(linearized_admm_pginv(&a, &spec, &cfg.with_default_mu(&a)).is_ok());
    }

    #[test]
    fn frobenius_admm_recovers_mpp() {
        let a = gaussian(3, 7, 11);
        let r = admm_ginv(&a, &NormSpec::Columnwise { p: 2.0, q: 2.0 }, &SolverConfig::default())
            .unwrap();
        let mpp = linalg::mpp(&a).unwrap();
        assert!((&r.x - &mpp).norm() <= 1e-4 * mpp.norm());
        assert!(r.converged);
    }

    #[test]
    fn columnwise_q_does_not_change_the_ginv() {
        let a = gaussian(3, 6, 21);
        let cfg = SolverConfig { max_iter: 20_000, tol_primal: 1e-10, tol_change: 1e-12, ..SolverConfig::default() };
        let r1 = admm_ginv(&a, &NormSpec::Columnwise { p: 1.0, q: 1.0 }, &cfg).unwrap();
        let r3 = admm_ginv(&a, &NormSpec::Columnwise { p: 1.0, q: 3.0 }, &cfg).unwrap();
        assert_eq!(r1.x, r3.x);
        assert!((r3.objective - norms::columnwise_mixed(&r3.x, 1.0, 3.0)).abs() < 1e-14);
        assert!(linearized_admm_pginv(&a, &NormSpec::Columnwise { p: 1.0, q: 3.0 }, &cfg.with_default_mu(&a)).is_err());
    }

    #[test]
    fn decoupled_p2_is_mpp() {
        let a = gaussian(3, 6, 5);
        let r = decoupled_column_solve(&a, 2.0, &SolverConfig::default()).unwrap();
        assert!((r.x - linalg::mpp(&a).unwrap()).norm() < 1e-10);
        assert!(decoupled_column_solve(&a, 3.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn nonconvergence_is_flagged_not_an_error() {
        let a = gaussian(3, 6, 3);
        let cfg = SolverConfig { max_iter: 3, ..SolverConfig::default() };
        let r = admm_ginv(&a, &NormSpec::Entrywise { p: 1.0 }, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.history.len(), 3);
    }

    #[test]
    fn avg_case_rejects_bad_exponent() {
        let a = gaussian(2, 4, 9);
        assert!(avg_case_pginv(&a, 0.5, &SolverConfig::default()).is_err());
    }
}
