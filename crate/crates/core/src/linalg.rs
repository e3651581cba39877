//! Small dense linear-algebra helpers on row-major `f64` slices.

use alloc::vec::Vec;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += s * x`
#[inline]
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Elementwise mean of equally sized vectors.
pub fn mean_vector(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; rows.first().map_or(0, Vec::len)];
    for row in rows {
        axpy(1.0, row, &mut out);
    }
    let k = rows.len().max(1) as f64;
    out.iter_mut().for_each(|v| *v /= k);
    out
}

/// Largest `|a_ij - a_ji|` over the matrix.
pub fn asymmetry(a: &[f64], n: usize) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[i * n + j] - a[j * n + i]).abs();
            if diff > worst.0 {
                worst = (diff, i, j);
            }
        }
    }
    worst
}

/// Eigenvalues of a symmetric matrix, sorted in descending order.
///
/// Cyclic Jacobi rotations; deterministic and accurate to roughly machine
/// precision relative to the Frobenius norm. Intended for the small
/// matrices used here (graph Laplacians, feature Gramians).
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m = a.to_vec();
    let frob: f64 = libm::sqrt(m.iter().map(|v| v * v).sum::<f64>());
    if frob == 0.0 {
        return alloc::vec![0.0; n];
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if libm::sqrt(off) <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// Spectral norm of a symmetric matrix: the largest absolute eigenvalue.
pub fn symmetric_spectral_norm(a: &[f64], n: usize) -> f64 {
    symmetric_eigenvalues(a, n)
        .into_iter()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}
