//! First-order optimality certificates over the set of generalized inverses.
//!
//! A feasible `X` minimizes `g` over `𝒢(A)` iff some `G ∈ ∂g(X)` satisfies
//! `NᵀG = 0`, where the columns of `N` span `ker(A)`. For the pginv target,
//! `g(X) = h(XA)` and the condition reads `Nᵀ G Aᵀ = 0` with `G ∈ ∂h(XA)`.
//! The subdifferential is parametrized by its free entries and the smallest
//! residual is found by projected gradient with momentum and restarts.

use crate::error::{Error, Result};
use crate::linalg::{self, AffineGinvSet, Matrix};
use crate::norms::{self, NormSpec};
use crate::solvers::Target;

pub const DEFAULT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    /// Pass threshold on the minimal residual.
    pub tolerance: f64,
    /// Entries with `|v| <= zero_tol · max|V|` are treated as exact zeros.
    pub zero_tol: f64,
    pub max_iter: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions { tolerance: DEFAULT_TOLERANCE, zero_tol: 1e-10, max_iter: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Minimal `‖NᵀG‖_F` (ginv) or `‖NᵀGAᵀ‖_F` (pginv) found.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Number of subgradient entries left free by zeros of the argument.
    pub free_entries: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Constraint {
    /// Every entry in `[-r, r]`.
    Box(f64),
    /// Euclidean norm of the group at most `r`.
    Ball(f64),
}

#[derive(Debug, Clone)]
struct Group {
    entries: Vec<(usize, usize)>,
    constraint: Constraint,
}

/// `∂h(V) = { base + Σ free parts }`, each group ranging over its constraint.
#[derive(Debug, Clone)]
struct Subdifferential {
    base: Matrix,
    groups: Vec<Group>,
}

impl Subdifferential {
    fn transpose(self) -> Self {
        Subdifferential {
            base: self.base.transpose(),
            groups: self
                .groups
                .into_iter()
                .map(|g| Group {
                    entries: g.entries.into_iter().map(|(i, j)| (j, i)).collect(),
                    constraint: g.constraint,
                })
                .collect(),
        }
    }

    fn free_entries(&self) -> usize {
        self.groups.iter().map(|g| g.entries.len()).sum()
    }

    fn project(&self, g: &mut Matrix) {
        for group in &self.groups {
            match group.constraint {
                Constraint::Box(r) => {
                    for &(i, j) in &group.entries {
                        g[(i, j)] = g[(i, j)].clamp(-r, r);
                    }
                }
                Constraint::Ball(r) => {
                    let norm = group.entries.iter().map(|&(i, j)| g[(i, j)].powi(2)).sum::<f64>().sqrt();
                    if norm > r {
                        let s = r / norm;
                        for &(i, j) in &group.entries {
                            g[(i, j)] *= s;
                        }
                    }
                }
            }
        }
    }
}

fn clean(v: &Matrix, zero_tol: f64) -> Matrix {
    let cut = zero_tol * v.amax();
    v.map(|x| if x.abs() <= cut { 0.0 } else { x })
}

fn unsupported(spec: &NormSpec, why: &str) -> Error {
    Error::UnsupportedSubdifferential(format!("{spec}: {why}"))
}

/// Subdifferential of the columnwise `(p, q)` norm, `1 <= p, q < ∞`.
fn columnwise(v: &Matrix, p: f64, q: f64, spec: &NormSpec) -> Result<Subdifferential> {
    let (rows, cols) = v.shape();
    let h = norms::columnwise_mixed(v, p, q);
    let col_norms = norms::column_norms(v, p);
    let mut base = Matrix::zeros(rows, cols);
    let mut groups = Vec::new();
    if h == 0.0 {
        return zero_matrix(rows, cols, p, q, spec);
    }
    for j in 0..cols {
        let f = col_norms[j];
        if f == 0.0 {
            if q > 1.0 {
                continue;
            }
            let entries: Vec<_> = (0..rows).map(|i| (i, j)).collect();
            let constraint = if p == 1.0 {
                Constraint::Box(1.0)
            } else if p == 2.0 {
                Constraint::Ball(1.0)
            } else {
                return Err(unsupported(spec, "zero column with p not in {1, 2}"));
            };
            groups.push(Group { entries, constraint });
            continue;
        }
        let scale = h.powf(1.0 - q) * f.powf(q - p);
        let mut zeros = Vec::new();
        for i in 0..rows {
            let x = v[(i, j)];
            if x == 0.0 {
                if p == 1.0 {
                    zeros.push((i, j));
                }
            } else {
                base[(i, j)] = scale * x.abs().powf(p - 1.0) * x.signum();
            }
        }
        if !zeros.is_empty() {
            groups.push(Group { entries: zeros, constraint: Constraint::Box(scale) });
        }
    }
    Ok(Subdifferential { base, groups })
}

/// Dual unit ball at `V = 0`, for the cases with a separable description.
fn zero_matrix(rows: usize, cols: usize, p: f64, q: f64, spec: &NormSpec) -> Result<Subdifferential> {
    let entries: Vec<_> = (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect();
    let constraint = if p == 1.0 && q == 1.0 {
        Constraint::Box(1.0)
    } else if p == 2.0 && q == 2.0 {
        Constraint::Ball(1.0)
    } else {
        return Err(unsupported(spec, "zero argument"));
    };
    Ok(Subdifferential { base: Matrix::zeros(rows, cols), groups: vec![Group { entries, constraint }] })
}

/// Schatten-p gradient `U diag(σ^{p−1}) Vᵀ / ‖σ‖_p^{p−1}`.
fn schatten(v: &Matrix, p: f64, spec: &NormSpec) -> Result<Subdifferential> {
    let (rows, cols) = v.shape();
    if v.amax() == 0.0 {
        return zero_matrix(rows, cols, 2.0, 2.0, spec).and_then(|s| {
            if p == 2.0 { Ok(s) } else { Err(unsupported(spec, "zero argument")) }
        });
    }
    let svd = v.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let sv = &svd.singular_values;
    let smax = sv.max();
    let cut = linalg::rank_tol(rows, cols, smax);
    let rank = sv.iter().filter(|&&s| s > cut).count();
    if p == 1.0 && rank < rows.min(cols) {
        return Err(unsupported(spec, "nuclear norm at a rank-deficient argument"));
    }
    let total = norms::lp_norm(sv.iter().copied(), p);
    let mut base = Matrix::zeros(rows, cols);
    for k in 0..sv.len() {
        if sv[k] <= cut {
            continue;
        }
        let w = (sv[k] / total).powf(p - 1.0);
        base += u.column(k) * vt.row(k) * w;
    }
    Ok(Subdifferential { base, groups: Vec::new() })
}

fn subdifferential(v: &Matrix, spec: &NormSpec) -> Result<Subdifferential> {
    let spec = spec.clone().validated()?;
    if !spec.is_convex_valid() {
        return Err(unsupported(&spec, "not a norm"));
    }
    let finite = |x: f64| x.is_finite();
    match spec {
        NormSpec::Entrywise { p } if finite(p) => columnwise(v, p, p, &spec),
        NormSpec::Columnwise { p, q } if finite(p) && finite(q) => columnwise(v, p, q, &spec),
        NormSpec::Rowwise { p, q } if finite(p) && finite(q) => {
            Ok(columnwise(&v.transpose(), p, q, &spec)?.transpose())
        }
        NormSpec::Schatten { p } if finite(p) => schatten(v, p, &spec),
        _ => Err(unsupported(&spec, "no closed-form subdifferential implemented")),
    }
}

/// Certificate with default options.
pub fn certify_optimality(a: &Matrix, x: &Matrix, spec: &NormSpec, target: Target) -> Result<CertificateReport> {
    certify_optimality_with(a, x, spec, target, &CertificateOptions::default())
}

pub fn certify_optimality_with(
    a: &Matrix,
    x: &Matrix,
    spec: &NormSpec,
    target: Target,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    linalg::ensure_finite(a)?;
    linalg::ensure_finite(x)?;
    if x.shape() != (a.ncols(), a.nrows()) {
        return Err(Error::ShapeMismatch(format!(
            "X is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            a.ncols(),
            a.nrows()
        )));
    }
    let set = AffineGinvSet::new(a)?;
    let n = &set.nullbasis;
    let argument = match target {
        Target::Ginv => x.clone(),
        Target::Pginv => x * a,
    };
    let sub = subdifferential(&clean(&argument, opts.zero_tol), spec)?;
    let free = sub.free_entries();
    let nt = n.transpose();
    let residual = |g: &Matrix| -> Matrix {
        match target {
            Target::Ginv => &nt * g,
            Target::Pginv => &nt * g * a.transpose(),
        }
    };
    let value_of = |g: &Matrix| residual(g).norm();

    let mut g = sub.base.clone();
    sub.project(&mut g);
    let mut value = value_of(&g);
    let mut iterations = 0;
    if free > 0 && n.ncols() > 0 && value > opts.tolerance {
        let lipschitz = match target {
            Target::Ginv => 2.0,
            Target::Pginv => 2.0 * linalg::spectral_norm(a).powi(2),
        };
        let mask = free_mask(&sub);
        let mut y = g.clone();
        let mut t = 1.0_f64;
        let mut best = value;
        let mut stall_ref = value;
        for k in 1..=opts.max_iter {
            iterations = k;
            let r = residual(&y);
            let mut grad = match target {
                Target::Ginv => n * r * 2.0,
                Target::Pginv => n * r * a * 2.0,
            };
            grad.component_mul_assign(&mask);
            let mut next = &y - grad / lipschitz;
            // Entries outside the free groups stay at the base value.
            next = next.component_mul(&mask) + sub.base.component_mul(&mask.map(|m| 1.0 - m));
            sub.project(&mut next);
            let next_value = value_of(&next);
            if next_value > value {
                // Restart momentum.
                t = 1.0;
                y = g.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + (&next - &g) * ((t - 1.0) / t_next);
            t = t_next;
            g = next;
            value = next_value;
            best = best.min(value);
            if value <= opts.tolerance * 1e-3 {
                break;
            }
            if k % 1000 == 0 {
                if stall_ref - best <= 1e-12 * stall_ref.max(1e-300) {
                    break;
                }
                stall_ref = best;
            }
        }
    }
    Ok(CertificateReport {
        value,
        tolerance: opts.tolerance,
        passed: value <= opts.tolerance,
        free_entries: free,
        iterations,
    })
}

fn free_mask(sub: &Subdifferential) -> Matrix {
    let mut mask = Matrix::zeros(sub.base.nrows(), sub.base.ncols());
    for group in &sub.groups {
        for &(i, j) in &group.entries {
            mask[(i, j)] = 1.0;
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example41() -> Matrix {
        Matrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn frobenius_certifies_mpp() {
        let a = example41();
        let x = linalg::mpp(&a).unwrap();
        let r = certify_optimality(&a, &x, &NormSpec::Entrywise { p: 2.0 }, Target::Ginv).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.free_entries, 0);
    }

    #[test]
    fn shifted_inverse_fails_frobenius() {
        let a = example41();
        let set = AffineGinvSet::new(&a).unwrap();
        let z = Matrix::from_row_slice(1, 2, &[0.5, 0.0]);
        let x = linalg::parametrized_inverse(&set, &z).unwrap();
        let r = certify_optimality(&a, &x, &NormSpec::Entrywise { p: 2.0 }, Target::Ginv).unwrap();
        assert!(!r.passed);
        assert!(r.value > 0.1);
    }

    #[test]
    fn sparse_vertex_certifies_under_l1() {
        // X = [I; 0] for the Dirac-Hadamard matrix; zeros are free in [-1, 1].
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = Matrix::from_row_slice(2, 4, &[1.0, 0.0, s, s, 0.0, 1.0, s, -s]);
        let mut x = Matrix::zeros(4, 2);
        x[(0, 0)] = 1.0;
        x[(1, 1)] = 1.0;
        let r = certify_optimality(&a, &x, &NormSpec::Columnwise { p: 1.0, q: 1.0 }, Target::Ginv).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.free_entries, 6);
    }

    #[test]
    fn unsupported_specs_are_rejected() {
        let a = example41();
        let x = linalg::mpp(&a).unwrap();
        for spec in [NormSpec::Spectral, NormSpec::Induced1ToQ { q: 2.0 }, NormSpec::Entrywise { p: f64::INFINITY }] {
            assert!(matches!(
                certify_optimality(&a, &x, &spec, Target::Ginv),
                Err(Error::UnsupportedSubdifferential(_))
            ));
        }
    }

    #[test]
    fn schatten_gradients_certify_mpp() {
        let a = crate::constructions::gaussian(3, 6, 4);
        let x = linalg::mpp(&a).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            let r = certify_optimality(&a, &x, &NormSpec::Schatten { p }, Target::Ginv).unwrap();
            assert!(r.passed, "p={p}: {r:?}");
        }
        for p in [1.5, 2.0, 3.0] {
            let r = certify_optimality(&a, &x, &NormSpec::Schatten { p }, Target::Pginv).unwrap();
            assert!(r.passed, "pginv p={p}: {r:?}");
        }
    }

    #[test]
    fn shape_is_checked() {
        let a = example41();
        assert!(matches!(
            certify_optimality(&a, &Matrix::zeros(2, 3), &NormSpec::Entrywise { p: 2.0 }, Target::Ginv),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
