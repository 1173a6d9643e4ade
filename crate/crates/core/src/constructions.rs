//! Named matrix families: worked examples, counterexamples, flat-MPP
//! matrices and seeded random ensembles.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Example41,
    EtaCounterexample { eta: f64 },
    A1 { m: usize, n: usize },
    A2 { m: usize, n: usize },
    A3 { m: usize, n: usize },
    A4 { m: usize, n: usize, theta: f64 },
    A5 { m: usize, n: usize },
    /// Rows `rows` of the `n×n` Sylvester-Hadamard matrix.
    PartialHadamard { n: usize, rows: Vec<usize> },
    DiracHadamard { m: usize },
    Gaussian { m: usize, n: usize, seed: u64 },
    Rademacher { m: usize, n: usize, seed: u64 },
}

pub const DEFAULT_THETA: f64 = PI / 6.0;

pub const NAMES: [&str; 11] = [
    "example41",
    "eta_counterexample",
    "a1",
    "a2",
    "a3",
    "a4",
    "a5",
    "partial_hadamard",
    "dirac_hadamard",
    "gaussian",
    "rademacher",
];

impl Construction {
    pub fn name(&self) -> &'static str {
        match self {
            Construction::Example41 => "example41",
            Construction::EtaCounterexample { .. } => "eta_counterexample",
            Construction::A1 { .. } => "a1",
            Construction::A2 { .. } => "a2",
            Construction::A3 { .. } => "a3",
            Construction::A4 { .. } => "a4",
            Construction::A5 { .. } => "a5",
            Construction::PartialHadamard { .. } => "partial_hadamard",
            Construction::DiracHadamard { .. } => "dirac_hadamard",
            Construction::Gaussian { .. } => "gaussian",
            Construction::Rademacher { .. } => "rademacher",
        }
    }
}

fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

fn check_fat(m: usize, n: usize, min_m: usize, name: &str) -> Result<()> {
    if m < min_m {
        return Err(param(format!("{name} needs m >= {min_m}, got m = {m}")));
    }
    if m >= n {
        return Err(param(format!("{name} needs m < n, got m = {m}, n = {n}")));
    }
    Ok(())
}

/// Builds the named matrix, checking full row rank and, for `a4`/`a5`,
/// that `A†A` equals the designed projection.
pub fn construct(id: &Construction) -> Result<Matrix> {
    let a = match *id {
        Construction::Example41 => Matrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
        Construction::EtaCounterexample { eta } => {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(param(format!("eta must lie in (0, 1), got {eta}")));
            }
            Matrix::from_row_slice(2, 3, &[1.0 / eta, 0.0, 0.0, 0.0, 1.0, 0.0])
        }
        Construction::A1 { m, n } => {
            check_fat(m, n, 1, "a1")?;
            pinv_of(&a1_factor(m, n))?
        }
        Construction::A2 { m, n } => {
            check_fat(m, n, 2, "a2")?;
            pinv_of(&a2_factor(m, n))?
        }
        Construction::A3 { m, n } => {
            check_fat(m, n, 3, "a3")?;
            pinv_of(&a3_factor(m, n))?
        }
        Construction::A4 { m, n, theta } => {
            check_fat(m, n, 2, "a4")?;
            if !(theta > 0.0 && theta < PI / 2.0) || (theta - PI / 4.0).abs() < 1e-12 {
                return Err(param(format!("a4 needs 0 < theta < pi/2 and theta != pi/4, got {theta}")));
            }
            let a = a4_rows(m, n, theta);
            check_projection(&a, &a4_projection(m, n, theta))?;
            a
        }
        Construction::A5 { m, n } => {
            check_fat(m, n, 3, "a5")?;
            let a = a5_rows(m, n);
            check_projection(&a, &a5_projection(m, n))?;
            a
        }
        Construction::PartialHadamard { n, ref rows } => {
            if !n.is_power_of_two() {
                return Err(param(format!("partial_hadamard needs n a power of two, got {n}")));
            }
            let mut seen = vec![false; n];
            for &r in rows {
                if r >= n || seen[r] {
                    return Err(param(format!("row subset must be distinct indices below {n}")));
                }
                seen[r] = true;
            }
            if rows.is_empty() || rows.len() >= n {
                return Err(param(format!("partial_hadamard needs 1 <= m < n rows, got {}", rows.len())));
            }
            let h = hadamard(n)?;
            Matrix::from_fn(rows.len(), n, |i, j| h[(rows[i], j)])
        }
        Construction::DiracHadamard { m } => {
            if !m.is_power_of_two() {
                return Err(param(format!("dirac_hadamard needs m a power of two, got {m}")));
            }
            let h = hadamard(m)? / (m as f64).sqrt();
            let mut a = Matrix::zeros(m, 2 * m);
            a.view_mut((0, 0), (m, m)).fill_with_identity();
            a.view_mut((0, m), (m, m)).copy_from(&h);
            a
        }
        Construction::Gaussian { m, n, seed } => {
            check_fat(m, n, 1, "gaussian")?;
            gaussian(m, n, seed)
        }
        Construction::Rademacher { m, n, seed } => {
            check_fat(m, n, 1, "rademacher")?;
            rademacher(m, n, seed)
        }
    };
    linalg::mpp(&a).map_err(|e| param(format!("{} is not full rank: {e}", id.name())))?;
    Ok(a)
}

fn pinv_of(b: &Matrix) -> Result<Matrix> {
    linalg::mpp(&b.transpose()).map(|x| x.transpose())
}

/// `B = 1ₙ1ₘᵀ + [Iₘ; 0]`; `A₁ = B†`.
pub fn a1_factor(m: usize, n: usize) -> Matrix {
    Matrix::from_fn(n, m, |i, j| if i == j { 2.0 } else { 1.0 })
}

/// `B = 1ₙ1ₘᵀ + C'` with `C' = [Iₘ; (−2, 1, 0, …); (0, …, 0, 1)…]`.
pub fn a2_factor(m: usize, n: usize) -> Matrix {
    let mut c = Matrix::zeros(n, m);
    for i in 0..m {
        c[(i, i)] = 1.0;
    }
    if m < n {
        c[(m, 0)] = -2.0;
        c[(m, 1)] = 1.0;
    }
    for i in m + 1..n {
        c[(i, m - 1)] = 1.0;
    }
    c.add_scalar(1.0)
}

/// `B = 1ₙ1ₘᵀ + C` with `C = [(1, 1, 0, …); Iₘ; (0, …, 0, 1)…]`.
pub fn a3_factor(m: usize, n: usize) -> Matrix {
    let mut c = Matrix::zeros(n, m);
    c[(0, 0)] = 1.0;
    c[(0, 1)] = 1.0;
    for i in 0..m.min(n - 1) {
        c[(i + 1, i)] = 1.0;
    }
    for i in m + 1..n {
        c[(i, m - 1)] = 1.0;
    }
    c.add_scalar(1.0)
}

/// Splits `len` coordinates starting at `offset` into `groups` contiguous
/// nonempty runs.
fn groups(offset: usize, len: usize, groups: usize) -> Vec<std::ops::Range<usize>> {
    let base = len / groups;
    let extra = len % groups;
    let mut start = offset;
    (0..groups)
        .map(|g| {
            let size = base + usize::from(g < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

fn group_rows(a: &mut Matrix, first_row: usize, offset: usize, len: usize, count: usize) {
    for (g, range) in groups(offset, len, count).into_iter().enumerate() {
        let w = 1.0 / (range.len() as f64).sqrt();
        for j in range {
            a[(first_row + g, j)] = w;
        }
    }
}

fn a4_rows(m: usize, n: usize, theta: f64) -> Matrix {
    let mut a = Matrix::zeros(m, n);
    a[(0, 0)] = theta.cos();
    a[(0, 1)] = theta.sin();
    group_rows(&mut a, 1, 2, n - 2, m - 1);
    a
}

fn a5_rows(m: usize, n: usize) -> Matrix {
    let mut a = Matrix::zeros(m, n);
    let (r2, r3) = (2f64.sqrt(), 3f64.sqrt());
    a[(0, 1)] = 1.0 / r2;
    a[(0, 2)] = -1.0 / r2;
    a[(1, 0)] = 1.0 / r3;
    a[(1, 1)] = -1.0 / r3;
    a[(1, 2)] = -1.0 / r3;
    group_rows(&mut a, 2, 3, n - 3, m - 2);
    a
}

fn group_projection(p: &mut Matrix, offset: usize, len: usize, count: usize) {
    for range in groups(offset, len, count) {
        let w = 1.0 / range.len() as f64;
        for i in range.clone() {
            for j in range.clone() {
                p[(i, j)] = w;
            }
        }
    }
}

/// `blockdiag(uuᵀ, P')` with `u = (cos θ, sin θ)` and `P'` a block diagonal
/// of averaging projections over `m − 1` contiguous groups.
pub fn a4_projection(m: usize, n: usize, theta: f64) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    let (c, s) = (theta.cos(), theta.sin());
    p[(0, 0)] = c * c;
    p[(0, 1)] = c * s;
    p[(1, 0)] = c * s;
    p[(1, 1)] = s * s;
    group_projection(&mut p, 2, n - 2, m - 1);
    p
}

/// `blockdiag(I₃ − vvᵀ, P₁)` with `v = (2, 1, 1)/√6` and `P₁` averaging over
/// `m − 2` contiguous groups.
pub fn a5_projection(m: usize, n: usize) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    let v = [2.0, 1.0, 1.0];
    for i in 0..3 {
        for j in 0..3 {
            p[(i, j)] = f64::from(u8::from(i == j)) - v[i] * v[j] / 6.0;
        }
    }
    group_projection(&mut p, 3, n - 3, m - 2);
    p
}

fn check_projection(a: &Matrix, p: &Matrix) -> Result<()> {
    let got = linalg::mpp(a)? * a;
    let err = (&got - p).amax();
    if err > 1e-9 {
        return Err(param(format!("A†A deviates from the target projection by {err:e}")));
    }
    Ok(())
}

/// Sylvester-Hadamard matrix of order `n` (a power of two), entries ±1.
pub fn hadamard(n: usize) -> Result<Matrix> {
    if n == 0 || !n.is_power_of_two() {
        return Err(param(format!("Hadamard order must be a power of two, got {n}")));
    }
    let mut h = Matrix::from_element(1, 1, 1.0);
    while h.nrows() < n {
        let k = h.nrows();
        let mut next = Matrix::zeros(2 * k, 2 * k);
        next.view_mut((0, 0), (k, k)).copy_from(&h);
        next.view_mut((0, k), (k, k)).copy_from(&h);
        next.view_mut((k, 0), (k, k)).copy_from(&h);
        next.view_mut((k, k), (k, k)).copy_from(&(-&h));
        h = next;
    }
    Ok(h)
}

/// Within each column, all entries with `|x| > tol` share one magnitude up
/// to `tol`.
pub fn flatness_check(x: &Matrix, tol: f64) -> bool {
    x.column_iter().all(|col| {
        let mags: Vec<f64> = col.iter().map(|v| v.abs()).filter(|&v| v > tol).collect();
        match (mags.iter().cloned().reduce(f64::min), mags.iter().cloned().reduce(f64::max)) {
            (Some(lo), Some(hi)) => hi - lo <= tol,
            _ => true,
        }
    })
}

/// iid standard normal entries from ChaCha8 seeded with `seed`.
pub fn gaussian(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

/// iid ±1 entries from ChaCha8 seeded with `seed`.
pub fn rademacher(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(m, n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// Random signed permutation `ΠΣ` of order `n`.
pub fn signed_permutation(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut q = Matrix::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        q[(i, j)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    q
}
