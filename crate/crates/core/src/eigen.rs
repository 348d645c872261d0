//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by implicit-shift QL.
//! Two entry points share the reduction:
//!
//! * [`symmetric_eigen`] returns every eigenpair (QL with rotation accumulation).
//! * [`eigenpairs_below`] returns all eigenvalues but only the eigenvectors
//!   whose eigenvalue lies below a threshold, obtained by inverse iteration on
//!   the tridiagonal matrix. SCSA only needs the handful of negative modes, so
//!   this path avoids the O(M^3) rotation accumulation.

use crate::error::{Result, ScsaError};
use crate::matrix::{dot, norm2, Matrix};

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_QL_ITERATIONS: usize = 50;

/// Accepted asymmetry, relative to `max|A|`, in units of machine epsilon.
const SYMMETRY_SLACK: f64 = 1e6;

/// Full eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector paired with `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }
}

/// Eigenvalues of a symmetric matrix together with the eigenvectors of the
/// eigenvalues strictly below a threshold.
#[derive(Debug, Clone)]
pub struct PartialEigen {
    /// Every eigenvalue, ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors for `eigenvalues[..vectors.len()]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Symmetric tridiagonal matrix: `diag` has length n, `off[i]` couples i and i+1.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                left + self.diag[i].abs() + right
            })
            .fold(0.0, f64::max)
    }
}

/// Householder vectors `H_k = I - beta_k v_k v_k^T`, each acting on indices `k+1..n`.
#[derive(Debug, Clone)]
struct Reflectors {
    items: Vec<(usize, f64, Vec<f64>)>,
}

impl Reflectors {
    /// Maps an eigenvector of the tridiagonal matrix back to the original basis.
    fn apply(&self, y: &mut [f64]) {
        for (start, beta, v) in self.items.iter().rev() {
            let tail = &mut y[*start..];
            let s = beta * dot(v, tail);
            if s != 0.0 {
                for (t, vi) in tail.iter_mut().zip(v) {
                    *t -= s * vi;
                }
            }
        }
    }
}

fn validate(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    if n == 0 {
        return Err(ScsaError::domain("eigensolver input is empty"));
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(ScsaError::domain(
            "eigensolver input has non-finite entries",
        ));
    }
    let scale = a.max_abs();
    let asym = a.asymmetry();
    if asym > SYMMETRY_SLACK * f64::EPSILON * scale {
        return Err(ScsaError::domain(format!(
            "matrix is not symmetric (max asymmetry {asym:e}, max entry {scale:e})"
        )));
    }
    Ok(Matrix::from_fn(n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
}

/// Reduces a symmetric matrix to tridiagonal form, `A = Q T Q^T`.
fn tridiagonalize(mut a: Matrix) -> (Tridiagonal, Reflectors) {
    let n = a.dim();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut items = Vec::with_capacity(n.saturating_sub(2));

    if n == 1 {
        diag[0] = a[(0, 0)];
        return (Tridiagonal { diag, off }, Reflectors { items });
    }

    let mut p = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        diag[k] = a[(k, k)];
        let start = k + 1;
        let x = &a.row(k)[start..];
        let xnorm = norm2(x);
        if xnorm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let alpha = if x[0] > 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let beta = 1.0 / (xnorm * (xnorm + x[0].abs()));
        off[k] = alpha;

        // A' = H A H with p = beta A v, w = p - (beta/2)(p.v) v, A' = A - v w^T - w v^T
        let m = n - start;
        let p = &mut p[..m];
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = beta * dot(&a.row(start + i)[start..], &v);
        }
        let kk = 0.5 * beta * dot(p, &v);
        let w = &mut w[..m];
        for i in 0..m {
            w[i] = p[i] - kk * v[i];
        }
        for i in 0..m {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a.row_mut(start + i)[start..];
            for ((r, vj), wj) in row.iter_mut().zip(&v).zip(w.iter()) {
                *r -= vi * wj + wi * vj;
            }
        }
        items.push((start, beta, v));
    }
    diag[n - 2] = a[(n - 2, n - 2)];
    diag[n - 1] = a[(n - 1, n - 1)];
    off[n - 2] = a[(n - 2, n - 1)];
    (Tridiagonal { diag, off }, Reflectors { items })
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. Eigenvalues are left
/// in `d` (unsorted). When `zt` is given, its rows are rotated along, so that
/// starting from the identity row `i` ends up as the eigenvector for `d[i]`.
fn tridiagonal_ql(d: &mut [f64], off: &[f64], mut zt: Option<&mut Matrix>) -> Result<()> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iterations == MAX_QL_ITERATIONS {
                return Err(ScsaError::NoConvergence {
                    index: l,
                    iterations,
                });
            }
            iterations += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    rotate_rows(z, i, s, c);
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[inline]
fn rotate_rows(z: &mut Matrix, i: usize, s: f64, c: f64) {
    let (zi, zi1) = z.adjacent_rows_mut(i);
    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
        let f = *b;
        *b = s * *a + c * f;
        *a = c * *a - s * f;
    }
}

/// LU factorization with partial pivoting of `T - lambda I` (LAPACK gttrf layout).
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &Tridiagonal, lambda: f64, tiny: f64) -> Self {
        let n = t.dim();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - lambda).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        ShiftedLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Inverse iteration for eigenvectors of `t` at the given ascending eigenvalues.
/// Vectors of eigenvalues closer than `1e-3 ||T||` are kept mutually orthogonal.
fn tridiagonal_eigenvectors(t: &Tridiagonal, eigenvalues: &[f64]) -> Vec<Vec<f64>> {
    let n = t.dim();
    let norm = t.norm_inf().max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-3 * norm;
    let tiny = f64::EPSILON * norm;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
    let mut shifted_prev = f64::NEG_INFINITY;
    let mut cluster_start = 0;

    for (k, &lambda) in eigenvalues.iter().enumerate() {
        if k > 0 && lambda - eigenvalues[k - 1] > cluster_gap {
            cluster_start = k;
        }
        // identical shifts would reproduce the same vector
        let pert = 10.0 * f64::EPSILON * lambda.abs().max(norm);
        let shift = if k > cluster_start && lambda - shifted_prev < pert {
            shifted_prev + pert
        } else {
            lambda
        };
        shifted_prev = shift;

        let lu = ShiftedLu::new(t, shift, tiny);
        let mut x: Vec<f64> = (0..n).map(|j| start_component(j, k)).collect();
        for _ in 0..4 {
            lu.solve(&mut x);
            for prev in &out[cluster_start..k] {
                let c = dot(prev, &x);
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= c * pi;
                }
            }
            let nrm = norm2(&x);
            if nrm == 0.0 || !nrm.is_finite() {
                x = (0..n).map(|j| start_component(j, k + 1)).collect();
                continue;
            }
            for xi in x.iter_mut() {
                *xi /= nrm;
            }
        }
        out.push(x);
    }
    out
}

/// Deterministic, non-degenerate starting vector for inverse iteration.
fn start_component(j: usize, k: usize) -> f64 {
    let h = (j as u64 + 1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((k as u64) << 17);
    0.5 + ((h >> 11) as f64) / ((1u64 << 53) as f64)
}

/// Flip so the largest-magnitude component (first one on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// All eigenpairs of a symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: &Matrix) -> Result<EigenDecomposition> {
    let a = validate(a)?;
    let n = a.dim();
    let (t, reflectors) = tridiagonalize(a);
    let mut d = t.diag.clone();
    let mut zt = Matrix::identity(n);
    tridiagonal_ql(&mut d, &t.off, Some(&mut zt))?;

    let order = sorted_order(&d);
    let mut vectors = Matrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let mut v = zt.row(src).to_vec();
        reflectors.apply(&mut v);
        fix_sign(&mut v);
        for (i, x) in v.into_iter().enumerate() {
            vectors[(i, col)] = x;
        }
    }
    Ok(EigenDecomposition {
        eigenvalues: order.iter().map(|&i| d[i]).collect(),
        eigenvectors: vectors,
    })
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let a = validate(a)?;
    let (t, _) = tridiagonalize(a);
    let mut d = t.diag.clone();
    tridiagonal_ql(&mut d, &t.off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigenvalues(t: &Tridiagonal) -> Result<Vec<f64>> {
    if t.dim() == 0 || t.off.len() + 1 != t.dim() {
        return Err(ScsaError::domain("malformed tridiagonal matrix"));
    }
    let mut d = t.diag.clone();
    tridiagonal_ql(&mut d, &t.off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Every eigenvalue, plus unit eigenvectors for the eigenvalues `< threshold`.
pub fn eigenpairs_below(a: &Matrix, threshold: f64) -> Result<PartialEigen> {
    let a = validate(a)?;
    let (t, reflectors) = tridiagonalize(a);
    let mut d = t.diag.clone();
    tridiagonal_ql(&mut d, &t.off, None)?;
    d.sort_by(f64::total_cmp);
    let count = d.iter().take_while(|&&l| l < threshold).count();
    let mut vectors = tridiagonal_eigenvectors(&t, &d[..count]);
    for v in vectors.iter_mut() {
        reflectors.apply(v);
        let nrm = norm2(v);
        for x in v.iter_mut() {
            *x /= nrm;
        }
        fix_sign(v);
    }
    Ok(PartialEigen {
        eigenvalues: d,
        vectors,
    })
}

/// Number of eigenvalues strictly below `-tol_neg`.
pub fn negative_count(eigenvalues: &[f64], tol_neg: f64) -> usize {
    eigenvalues.iter().filter(|&&l| l < -tol_neg).count()
}

/// Default negativity tolerance, `1e3 * eps * ||A||_inf`.
pub fn default_tol_neg(a: &Matrix) -> f64 {
    1e3 * f64::EPSILON * a.norm_inf()
}
