//! Small dense least squares and a weighted conjugate-gradient solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};

/// Least-squares coefficients for `rows * c ~ rhs` by Householder QR.
/// Columns are scaled to unit norm first; returns `None` for rank deficiency.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = rows.len();
    let n = rows.first()?.len();
    if m < n {
        return None;
    }
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = rhs.to_vec();
    let mut scale = vec![1.0; n];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = sqrt(a.iter().map(|r| r[j] * r[j]).sum::<f64>());
        if norm == 0.0 {
            return None;
        }
        *s = norm;
        for r in a.iter_mut() {
            r[j] /= norm;
        }
    }
    for k in 0..n {
        let norm = sqrt((k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>());
        if norm < 1e-13 {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vn;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vn;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let mut c = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * c[j]).sum();
        c[k] = (b[k] - s) / a[k][k];
    }
    for (cj, s) in c.iter_mut().zip(&scale) {
        *cj /= s;
    }
    Some(c)
}

/// Outcome of [`conjugate_gradient`].
#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG for `M x = b`, `M` self-adjoint positive definite in `<.,.>_w`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    w: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgStats {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| -> f64 { w.iter().zip(a).zip(c).map(|((w, a), c)| w * a * c).sum() };
    let bnorm = sqrt(dot(b, b));
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgStats { iterations: 0, relative_residual: 0.0 };
    }
    let mut mx = vec![0.0; n];
    apply(x, &mut mx);
    let mut r: Vec<f64> = b.iter().zip(&mx).map(|(b, m)| b - m).collect();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut mp = vec![0.0; n];
    let mut res = sqrt(dot(&r, &r)) / bnorm;
    let mut it = 0;
    while res > tol && it < max_iter {
        apply(&p, &mut mp);
        let pmp = dot(&p, &mp);
        if abs(pmp) == 0.0 {
            break;
        }
        let alpha = rz / pmp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * mp[i];
        }
        res = sqrt(dot(&r, &r)) / bnorm;
        it += 1;
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgStats { iterations: it, relative_residual: res }
}
