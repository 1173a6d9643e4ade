//! Dense linear algebra: SVD, Moore-Penrose pseudoinverse and the affine
//! parametrization `{A† + N Z}` of all generalized inverses of a full-rank
//! fat matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense real matrix. Column-major storage, value semantics.
pub type Matrix = DMatrix<f64>;

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Full singular value decomposition `A = U Σ Vᵀ`.
///
/// `u` is `m×m`, `v` is `n×n` and `singular_values` holds the `min(m, n)`
/// singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub singular_values: DVector<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    /// Rebuilds `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let m = self.u.nrows();
        let n = self.v.nrows();
        let mut sigma = Matrix::zeros(m, n);
        for (i, s) in self.singular_values.iter().enumerate() {
            sigma[(i, i)] = *s;
        }
        &self.u * sigma * self.v.transpose()
    }
}

/// Numerical rank threshold `max(m, n) · ε · σ₁`.
pub fn rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "svd needs a non-empty matrix, got {m}x{n}"
        )));
    }
    ensure_finite(a)?;

    let thin = a.clone().svd(true, true);
    let u_thin = thin.u.expect("requested U");
    let v_thin = thin.v_t.expect("requested Vᵀ").transpose();
    let k = m.min(n);

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| thin.singular_values[j].total_cmp(&thin.singular_values[i]));

    let singular_values = DVector::from_iterator(k, order.iter().map(|&i| thin.singular_values[i]));
    let u_sorted = Matrix::from_fn(m, k, |r, c| u_thin[(r, order[c])]);
    let v_sorted = Matrix::from_fn(n, k, |r, c| v_thin[(r, order[c])]);

    Ok(SvdFactors {
        u: complete_orthonormal(&u_sorted),
        singular_values,
        v: complete_orthonormal(&v_sorted),
    })
}

/// Extends the orthonormal columns of `q` (`n×k`, `k ≤ n`) to an orthogonal
/// `n×n` matrix. The first `k` columns are `q` itself; the remaining ones come
/// from a Householder QR of `q`.
fn complete_orthonormal(q: &Matrix) -> Matrix {
    let (n, k) = q.shape();
    if k == n {
        return q.clone();
    }
    let mut work = q.clone();
    let mut full = Matrix::identity(n, n);
    for j in 0..k {
        let x = work.view((j, j), (n - j, 1)).clone_owned();
        let alpha = x.norm();
        if alpha == 0.0 {
            continue;
        }
        let mut v = x;
        let sign = if v[(0, 0)] >= 0.0 { 1.0 } else { -1.0 };
        v[(0, 0)] += sign * alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 == 0.0 {
            continue;
        }
        // work <- H work on rows j.., full <- full H on columns j..
        let mut rows = work.view_mut((j, 0), (n - j, k));
        let proj = v.transpose() * &rows;
        rows -= (&v * proj) * (2.0 / vnorm2);
        let mut cols = full.view_mut((0, j), (n, n - j));
        let proj = &cols * &v;
        cols -= (proj * v.transpose()) * (2.0 / vnorm2);
    }
    let mut out = Matrix::zeros(n, n);
    out.view_mut((0, 0), (n, k)).copy_from(q);
    out.view_mut((0, k), (n, n - k))
        .copy_from(&full.view((0, k), (n, n - k)));
    out
}

pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, s| acc.max(*s))
}

fn check_full_rank(a: &Matrix, factors: &SvdFactors) -> Result<()> {
    let s = &factors.singular_values;
    let sigma_max = s[0];
    let sigma_min = s[s.len() - 1];
    let tol = rank_tol(a.nrows(), a.ncols(), sigma_max);
    if sigma_min <= tol || sigma_max == 0.0 {
        return Err(Error::RankDeficient { sigma_min, tol });
    }
    Ok(())
}

/// Moore-Penrose pseudoinverse of a full-rank matrix, `V Σ⁻¹ Uᵀ`.
pub fn mpp(a: &Matrix) -> Result<Matrix> {
    let f = svd(a)?;
    check_full_rank(a, &f)?;
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut vs = f.v.columns(0, k).clone_owned();
    for (j, s) in f.singular_values.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(vs * f.u.columns(0, k).transpose())
}

/// The set `𝒢(A) = {mpp + nullbasis · Z}` of generalized inverses of a
/// full-rank fat matrix `A`.
#[derive(Debug, Clone)]
pub struct AffineGinvSet {
    /// `n×m` Moore-Penrose pseudoinverse.
    pub mpp: Matrix,
    /// `n×(n−m)` orthonormal basis of `ker(A)`.
    pub nullbasis: Matrix,
}

impl AffineGinvSet {
    pub fn new(a: &Matrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m >= n {
            return Err(Error::UnsupportedShape { rows: m, cols: n });
        }
        let f = svd(a)?;
        check_full_rank(a, &f)?;
        let mut vs = f.v.columns(0, m).clone_owned();
        for (j, s) in f.singular_values.iter().enumerate() {
            vs.column_mut(j).scale_mut(1.0 / s);
        }
        let mpp = vs * f.u.transpose();
        let nullbasis = f.v.columns(m, n - m).clone_owned();
        Ok(AffineGinvSet { mpp, nullbasis })
    }

    pub fn rows(&self) -> usize {
        self.mpp.ncols()
    }

    pub fn cols(&self) -> usize {
        self.mpp.nrows()
    }

    /// Euclidean projection of an `n×m` matrix onto the set: `A† + N Nᵀ V`.
    pub fn project(&self, v: &Matrix) -> Matrix {
        &self.mpp + &self.nullbasis * (self.nullbasis.transpose() * v)
    }

    /// Coordinates `Z = Nᵀ(X − A†)` of a point of the set.
    pub fn coordinates(&self, x: &Matrix) -> Matrix {
        self.nullbasis.transpose() * (x - &self.mpp)
    }
}

pub fn affine_ginv_set(a: &Matrix) -> Result<AffineGinvSet> {
    AffineGinvSet::new(a)
}

/// `‖AX − I_m‖_F ≤ tol`.
pub fn is_generalized_inverse(a: &Matrix, x: &Matrix, tol: f64) -> Result<bool> {
    Ok(inverse_residual(a, x)? <= tol)
}

/// `‖AX − I_m‖_F`.
pub fn inverse_residual(a: &Matrix, x: &Matrix) -> Result<f64> {
    let (m, n) = a.shape();
    if x.shape() != (n, m) {
        return Err(Error::ShapeMismatch(format!(
            "A is {m}x{n} so X must be {n}x{m}, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok((a * x - Matrix::identity(m, m)).norm())
}

/// `mpp + nullbasis · Z`.
pub fn parametrized_inverse(set: &AffineGinvSet, z: &Matrix) -> Result<Matrix> {
    let k = set.nullbasis.ncols();
    let m = set.rows();
    if z.shape() != (k, m) {
        return Err(Error::ShapeMismatch(format!(
            "Z must be {k}x{m}, got {}x{}",
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(&set.mpp + &set.nullbasis * z)
}
