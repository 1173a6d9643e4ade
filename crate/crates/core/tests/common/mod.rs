// Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use ginvkit::Matrix;

/// Euclidean projection onto the ℓ1 ball by full sorting.
pub fn l1_ball_sort(v: &[f64], r: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= r {
        return v.to_vec();
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - r) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// Projection onto `{t >= 0, Σ t <= r}`.
fn capped_simplex(w: &[f64], r: f64) -> Vec<f64> {
    let clipped: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= r {
        return clipped;
    }
    l1_ball_sort(&clipped, r).into_iter().map(|x| x.max(0.0)).collect()
}

/// Projection onto `{X : Σⱼ maxᵢ |xᵢⱼ| <= r}` solved as a QP in the column
/// caps `t`: `min ½ Σᵢⱼ (|vᵢⱼ| − tⱼ)₊²` over `t >= 0, Σ t <= r`, by FISTA.
pub fn colinf1_ball_qp(v: &Matrix, r: f64) -> Matrix {
    let (rows, cols) = v.shape();
    let caps: Vec<f64> = (0..cols).map(|j| v.column(j).amax()).collect();
    if caps.iter().sum::<f64>() <= r {
        return v.clone();
    }
    let grad = |t: &[f64]| -> Vec<f64> {
        (0..cols)
            .map(|j| -(0..rows).map(|i| (v[(i, j)].abs() - t[j]).max(0.0)).sum::<f64>())
            .collect()
    };
    let step = 1.0 / rows as f64;
    let mut t = capped_simplex(&caps, r);
    let mut y = t.clone();
    let mut k = 1.0_f64;
    for _ in 0..20_000 {
        let g = grad(&y);
        let w: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let next = capped_simplex(&w, r);
        let k_next = 0.5 * (1.0 + (1.0 + 4.0 * k * k).sqrt());
        y = next.iter().zip(&t).map(|(a, b)| a + (k - 1.0) / k_next * (a - b)).collect();
        t = next;
        k = k_next;
    }
    Matrix::from_fn(rows, cols, |i, j| v[(i, j)].signum() * v[(i, j)].abs().min(t[j]))
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Minimal entrywise ℓ1 norm over `{X : AX = I}` by enumerating every basic
/// solution: for each column and each invertible `m×m` column subset `S`,
/// `x_S = A_S⁻¹ eⱼ`.
pub fn l1_vertex_oracle(a: &Matrix) -> (f64, Matrix) {
    let (m, n) = a.shape();
    let mut best_x = Matrix::zeros(n, m);
    let mut total = 0.0;
    let subsets = combinations(n, m);
    for j in 0..m {
        let mut e = nalgebra::DVector::zeros(m);
        e[j] = 1.0;
        let mut best = f64::INFINITY;
        let mut best_col = nalgebra::DVector::zeros(n);
        for s in &subsets {
            let sub = Matrix::from_fn(m, m, |i, k| a[(i, s[k])]);
            let lu = sub.lu();
            if lu.determinant().abs() < 1e-12 {
                continue;
            }
            let xs = lu.solve(&e).unwrap();
            let obj: f64 = xs.iter().map(|x| x.abs()).sum();
            if obj < best {
                best = obj;
                best_col.fill(0.0);
                for (k, &idx) in s.iter().enumerate() {
                    best_col[idx] = xs[k];
                }
            }
        }
        total += best;
        best_x.set_column(j, &best_col);
    }
    (total, best_x)
}

/// Uniform samples in `[-scale, scale]` from a small LCG, for deterministic
/// test data independent of the library's generators.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, scale: f64) -> f64 {
        scale * (2.0 * self.next_f64() - 1.0)
    }

    pub fn vec(&mut self, len: usize, scale: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(scale)).collect()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, scale: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.uniform(scale))
    }
}
