//! Proximal operators and norm-ball projections.
//!
//! All proxes are for `λ·f` with the convention
//! `prox_{λf}(v) = argmin_x ½‖v − x‖² + λ f(x)`. Proxes of non-separable
//! norms go through the Moreau decomposition
//! `prox_{λ‖·‖}(v) = v − proj_{‖·‖* ≤ λ}(v)`.

use crate::error::{Error, Result};
use crate::linalg::{AffineGinvSet, Matrix};
use crate::norms::{conjugate_exponent, NormSpec};

/// Scale of a proximal step, plus the optional linearized-ADMM step `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxStep {
    pub lambda: f64,
    pub mu: Option<f64>,
}

impl ProxStep {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(ProxStep { lambda, mu: None })
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
        Ok(ProxStep { mu: Some(mu), ..self })
    }

    /// Checks `0 < μ ≤ λ / ‖A‖²₂→₂`.
    pub fn check_linearized(&self, spectral_norm: f64) -> Result<f64> {
        let mu = self
            .mu
            .ok_or_else(|| Error::Config("linearized ADMM needs a step mu".into()))?;
        let bound = self.lambda / (spectral_norm * spectral_norm);
        if mu > bound * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "mu = {mu} exceeds lambda / ||A||^2 = {bound}"
            )));
        }
        Ok(mu)
    }
}

pub const SUPPORTED_PROX: &str = "entrywise:1 (exp 1); entrywise:2, col:2,2, row:2,2, schatten:2 \
(exp 1 or 2); entrywise:inf (exp 1); col:p,q / row:p,q with q<inf and exponent q for \
p in {1,inf} with q=1, or p=2 with any q>=1; col:q,inf, ind1q:q, row:p,inf, indpinf:p (exp 1) \
with the relevant exponent in {1,2,inf}; schatten:1, schatten:inf, spectral (exp 1)";

/// Soft thresholding, `sign(v) ⊙ (|v| − λ)₊`.
pub fn prox_vec_l1(v: &[f64], lambda: f64) -> Vec<f64> {
    v.iter().map(|&x| soft(x, lambda)).collect()
}

#[inline]
fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn l2(v: &[f64]) -> f64 {
    crate::norms::lp_norm(v.iter().copied(), 2.0)
}

/// Block shrinkage, `max(1 − λ/‖v‖₂, 0) v`.
pub fn prox_vec_l2(v: &[f64], lambda: f64) -> Vec<f64> {
    let nrm = l2(v);
    if nrm <= lambda {
        return vec![0.0; v.len()];
    }
    let scale = 1.0 - lambda / nrm;
    v.iter().map(|x| x * scale).collect()
}

/// `v − proj_{‖·‖₁ ≤ λ}(v)`.
pub fn prox_vec_linf(v: &[f64], lambda: f64) -> Vec<f64> {
    let p = project_l1_ball(v, lambda);
    v.iter().zip(&p).map(|(a, b)| a - b).collect()
}

/// Prox of `λ‖v‖₂^q` for `q ≥ 1`: radial shrinkage of `v` to the length `t`
/// solving `t + λ q t^{q−1} = ‖v‖₂`.
pub fn prox_vec_l2_power(v: &[f64], lambda: f64, q: f64) -> Vec<f64> {
    if q == 1.0 {
        return prox_vec_l2(v, lambda);
    }
    let r = l2(v);
    if r == 0.0 {
        return vec![0.0; v.len()];
    }
    let t = if q == 2.0 {
        r / (1.0 + 2.0 * lambda)
    } else {
        radial_root(r, lambda, q)
    };
    v.iter().map(|x| x * (t / r)).collect()
}

/// Root in `[0, r]` of the increasing map `t ↦ t + λ q t^{q−1} − r`.
fn radial_root(r: f64, lambda: f64, q: f64) -> f64 {
    let h = |t: f64| t + lambda * q * t.powf(q - 1.0) - r;
    let (mut lo, mut hi) = (0.0_f64, r);
    let mut t = r / (1.0 + lambda * q);
    for _ in 0..200 {
        let ht = h(t);
        if ht > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        // Newton step, kept inside the bracket.
        let dh = 1.0 + lambda * q * (q - 1.0) * t.powf(q - 2.0);
        let mut next = t - ht / dh;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * r || hi - lo <= 1e-16 * r {
            return next;
        }
        t = next;
    }
    t
}

/// Euclidean projection onto `{z : ‖z‖₁ ≤ radius}`.
///
/// The threshold is found by randomized-pivot selection (expected linear
/// time); a sort-based search takes over if the selection result fails its
/// consistency check.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let tau = l1_threshold_select(v, radius)
        .filter(|&t| t >= 0.0 && t.is_finite())
        .unwrap_or_else(|| l1_threshold_sorted(v, radius));
    v.iter().map(|&x| soft(x, tau)).collect()
}

/// `τ` with `Σ max(|vᵢ| − τ, 0) = radius`, by pivoting on magnitudes.
fn l1_threshold_select(v: &[f64], radius: f64) -> Option<f64> {
    let mut work: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let (mut lo, mut hi) = (0usize, work.len());
    let mut sum_above = 0.0;
    let mut count_above = 0usize;
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15 ^ (v.len() as u64);
    while lo < hi {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let k = lo + ((state >> 33) as usize) % (hi - lo);
        let pivot = work[k];
        work.swap(k, lo);
        // Partition [lo+1, hi) into values >= pivot (front) and < pivot.
        let mut split = lo + 1;
        let mut s = pivot;
        for i in lo + 1..hi {
            if work[i] >= pivot {
                s += work[i];
                work.swap(i, split);
                split += 1;
            }
        }
        let g = split - lo;
        if (sum_above + s) - (count_above + g) as f64 * pivot < radius {
            sum_above += s;
            count_above += g;
            lo = split;
        } else {
            lo += 1;
            hi = split;
        }
    }
    if count_above == 0 {
        return None;
    }
    Some((sum_above - radius) / count_above as f64)
}

fn l1_threshold_sorted(v: &[f64], radius: f64) -> f64 {
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &ak) in a.iter().enumerate() {
        cum += ak;
        let t = (cum - radius) / (k + 1) as f64;
        if ak > t {
            tau = t;
        } else {
            break;
        }
    }
    tau.max(0.0)
}

pub fn project_l2_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let nrm = l2(v);
    if nrm <= radius {
        return v.to_vec();
    }
    v.iter().map(|x| x * (radius / nrm)).collect()
}

pub fn project_linf_ball(v: &[f64], radius: f64) -> Vec<f64> {
    v.iter().map(|x| x.clamp(-radius, radius)).collect()
}

fn map_columns(m: &Matrix, f: impl Fn(&[f64]) -> Vec<f64>) -> Matrix {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let col: Vec<f64> = m.column(j).iter().copied().collect();
        out.column_mut(j).copy_from_slice(&f(&col));
    }
    out
}

fn map_entries_as_vector(m: &Matrix, f: impl Fn(&[f64]) -> Vec<f64>) -> Matrix {
    Matrix::from_vec(m.nrows(), m.ncols(), f(m.as_slice()))
}

/// Projection onto `{Z : Σⱼ ‖zⱼ‖₂ ≤ radius}`.
pub fn project_col21_ball(m: &Matrix, radius: f64) -> Matrix {
    let norms: Vec<f64> = m.column_iter().map(|c| c.norm()).collect();
    let shrunk = project_l1_ball(&norms, radius);
    let mut out = m.clone();
    for (j, (n, s)) in norms.iter().zip(&shrunk).enumerate() {
        let scale = if *n > 0.0 { s / n } else { 0.0 };
        out.column_mut(j).scale_mut(scale);
    }
    out
}

/// Projection onto `{Z : Σⱼ maxᵢ |zᵢⱼ| ≤ radius}`.
///
/// Every column is clipped at its own level `μⱼ`; the levels share a common
/// removed mass `θ = Σᵢ (|mᵢⱼ| − μⱼ)₊` (columns with `‖mⱼ‖₁ ≤ θ` vanish) and
/// `θ` is fixed by `Σⱼ μⱼ = radius`. The map `θ ↦ Σⱼ μⱼ(θ)` is piecewise
/// linear, so `θ` is located exactly among the sorted breakpoints.
pub fn project_colinf1_ball(m: &Matrix, radius: f64) -> Matrix {
    let col_max: Vec<f64> = m
        .column_iter()
        .map(|c| c.iter().fold(0.0_f64, |a, x| a.max(x.abs())))
        .collect();
    if col_max.iter().sum::<f64>() <= radius {
        return m.clone();
    }

    // Sorted magnitudes and prefix sums per column.
    let cols: Vec<(Vec<f64>, Vec<f64>)> = m
        .column_iter()
        .map(|c| {
            let mut a: Vec<f64> = c.iter().map(|x| x.abs()).collect();
            a.sort_by(|x, y| y.total_cmp(x));
            let mut prefix = Vec::with_capacity(a.len());
            let mut acc = 0.0;
            for x in &a {
                acc += x;
                prefix.push(acc);
            }
            (a, prefix)
        })
        .collect();

    // Clip level of one column for a given removed mass.
    let level = |(a, prefix): &(Vec<f64>, Vec<f64>), theta: f64| -> f64 {
        let total = *prefix.last().unwrap_or(&0.0);
        if theta >= total {
            return 0.0;
        }
        // Largest k with S_k − k a_k ≤ θ, i.e. the top k entries are clipped.
        let mut k = 1;
        while k < a.len() && prefix[k] - (k + 1) as f64 * a[k] <= theta {
            k += 1;
        }
        (prefix[k - 1] - theta) / k as f64
    };
    let budget = |theta: f64| -> f64 { cols.iter().map(|c| level(c, theta)).sum() };

    let mut breakpoints: Vec<f64> = Vec::new();
    for (a, prefix) in &cols {
        for k in 0..a.len() {
            breakpoints.push(prefix[k] - (k + 1) as f64 * a[k]);
        }
        breakpoints.push(*prefix.last().unwrap_or(&0.0));
    }
    breakpoints.retain(|b| *b >= 0.0);
    breakpoints.push(0.0);
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    // budget is non-increasing in θ; find the bracket [b_lo, b_hi] with
    // budget(b_lo) ≥ radius ≥ budget(b_hi).
    let (mut lo, mut hi) = (0usize, breakpoints.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if budget(breakpoints[mid]) >= radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t0, t1) = (breakpoints[lo], breakpoints[hi]);
    let (f0, f1) = (budget(t0), budget(t1));
    let theta = if f0 == f1 {
        t0
    } else {
        t0 + (f0 - radius) * (t1 - t0) / (f0 - f1)
    };

    let mut out = m.clone();
    for (j, c) in cols.iter().enumerate() {
        let mu = level(c, theta);
        for x in out.column_mut(j).iter_mut() {
            *x = x.clamp(-mu, mu);
        }
    }
    out
}

/// Euclidean projection onto `𝒢(A)`: `A† + N Nᵀ V`.
pub fn project_affine_ginv(v: &Matrix, set: &AffineGinvSet) -> Result<Matrix> {
    if v.shape() != set.mpp.shape() {
        return Err(Error::ShapeMismatch(format!(
            "expected {}x{}, got {}x{}",
            set.mpp.nrows(),
            set.mpp.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(set.project(v))
}

/// How a supported `(spec, exponent)` pair is evaluated.
#[derive(Debug, Clone, Copy)]
enum Plan {
    /// `λ‖X‖_F` (exponent 1) or `λ‖X‖²_F` (exponent 2).
    Frobenius { squared: bool },
    /// Column-separable `λ Σⱼ ‖xⱼ‖_p^q`.
    Columns { p: f64, q: f64 },
    /// Row-separable `λ Σᵢ ‖xⁱ‖_p^q`.
    Rows { p: f64, q: f64 },
    /// `λ max-column ‖·‖_p` via the `col(p*, 1)` ball.
    MaxColumn { p: f64 },
    /// `λ max-row ‖·‖_p` via the `row(p*, 1)` ball.
    MaxRow { p: f64 },
    Nuclear,
    SpectralMoreau,
}

fn plan(spec: &NormSpec, exponent: f64) -> Option<Plan> {
    if spec.is_frobenius() {
        return if exponent == 1.0 || exponent == 2.0 {
            Some(Plan::Frobenius { squared: exponent == 2.0 })
        } else {
            None
        };
    }
    let separable = |p: f64, q: f64| -> bool {
        exponent == q && ((q == 1.0 && (p == 1.0 || p.is_infinite())) || (p == 2.0 && q >= 1.0))
    };
    let in_set = |p: f64| p == 1.0 || p == 2.0 || p.is_infinite();
    match *spec {
        NormSpec::Entrywise { p } if p == 1.0 && exponent == 1.0 => {
            Some(Plan::Columns { p: 1.0, q: 1.0 })
        }
        NormSpec::Entrywise { p } if p.is_infinite() && exponent == 1.0 => {
            Some(Plan::MaxColumn { p: f64::INFINITY })
        }
        NormSpec::Columnwise { p, q } if q.is_finite() && separable(p, q) => {
            Some(Plan::Columns { p, q })
        }
        NormSpec::Rowwise { p, q } if q.is_finite() && separable(p, q) => {
            Some(Plan::Rows { p, q })
        }
        NormSpec::Columnwise { p, q } if q.is_infinite() && in_set(p) && exponent == 1.0 => {
            Some(Plan::MaxColumn { p })
        }
        NormSpec::Induced1ToQ { q } if in_set(q) && exponent == 1.0 => Some(Plan::MaxColumn { p: q }),
        NormSpec::Rowwise { p, q } if q.is_infinite() && in_set(p) && exponent == 1.0 => {
            Some(Plan::MaxRow { p })
        }
        NormSpec::InducedPToInf { p } if in_set(p) && exponent == 1.0 => Some(Plan::MaxRow {
            p: conjugate_exponent(p),
        }),
        NormSpec::Schatten { p } if p == 1.0 && exponent == 1.0 => Some(Plan::Nuclear),
        NormSpec::Schatten { p } if p.is_infinite() && exponent == 1.0 => {
            Some(Plan::SpectralMoreau)
        }
        NormSpec::Spectral if exponent == 1.0 => Some(Plan::SpectralMoreau),
        _ => None,
    }
}

/// The exponent the solvers use for `spec`: `q` for separable mixed norms,
/// `2` for Frobenius-type norms and `1` otherwise.
pub fn default_exponent(spec: &NormSpec) -> f64 {
    if spec.is_frobenius() {
        return 2.0;
    }
    match *spec {
        NormSpec::Columnwise { q, .. } | NormSpec::Rowwise { q, .. } if q.is_finite() => q,
        _ => 1.0,
    }
}

pub fn is_prox_supported(spec: &NormSpec, exponent: f64) -> bool {
    spec.is_convex_valid() && plan(spec, exponent).is_some()
}

fn unsupported(spec: &NormSpec, exponent: f64) -> Error {
    Error::UnsupportedProx {
        spec: spec.to_string(),
        exponent,
        supported: SUPPORTED_PROX,
    }
}

/// `argmin_X ½‖M − X‖²_F + λ·‖X‖^exponent` for the supported table.
pub fn prox_matrix(m: &Matrix, spec: &NormSpec, exponent: f64, lambda: f64) -> Result<Matrix> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    if !spec.is_convex_valid() {
        return Err(unsupported(spec, exponent));
    }
    let plan = plan(spec, exponent).ok_or_else(|| unsupported(spec, exponent))?;
    Ok(apply_plan(m, plan, lambda))
}

fn vector_prox(p: f64, q: f64) -> impl Fn(&[f64], f64) -> Vec<f64> {
    move |v: &[f64], lambda: f64| {
        if p == 1.0 {
            prox_vec_l1(v, lambda)
        } else if p.is_infinite() {
            prox_vec_linf(v, lambda)
        } else {
            prox_vec_l2_power(v, lambda, q)
        }
    }
}

fn apply_plan(m: &Matrix, plan: Plan, lambda: f64) -> Matrix {
    match plan {
        Plan::Frobenius { squared: true } => m / (1.0 + 2.0 * lambda),
        Plan::Frobenius { squared: false } => {
            map_entries_as_vector(m, |v| prox_vec_l2(v, lambda))
        }
        Plan::Columns { p, q } => {
            let f = vector_prox(p, q);
            map_columns(m, |c| f(c, lambda))
        }
        Plan::Rows { p, q } => apply_plan(&m.transpose(), Plan::Columns { p, q }, lambda).transpose(),
        Plan::MaxColumn { p } => {
            // Dual ball is col(p*, 1) with radius λ.
            let dual = conjugate_exponent(p);
            let proj = if dual.is_infinite() {
                project_colinf1_ball(m, lambda)
            } else if dual == 2.0 {
                project_col21_ball(m, lambda)
            } else {
                map_entries_as_vector(m, |v| project_l1_ball(v, lambda))
            };
            m - proj
        }
        Plan::MaxRow { p } => {
            apply_plan(&m.transpose(), Plan::MaxColumn { p }, lambda).transpose()
        }
        Plan::Nuclear => singular_value_map(m, |s| prox_vec_l1(s, lambda)),
        Plan::SpectralMoreau => m - singular_value_map(m, |s| project_l1_ball(s, lambda)),
    }
}

/// `U f(σ) Vᵀ` on the thin SVD.
fn singular_value_map(m: &Matrix, f: impl Fn(&[f64]) -> Vec<f64>) -> Matrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let fs = f(&s);
    let mut us = u;
    for (j, x) in fs.iter().enumerate() {
        us.column_mut(j).scale_mut(*x);
    }
    us * v_t
}
