//! Small dense symmetric eigen-solvers.

use crate::scalar::{dot, norm, Real};

/// Jacobi is used up to this dimension, power iteration above.
pub const JACOBI_MAX_DIM: usize = 64;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matching unit eigenvectors.
pub fn jacobi_eigen<T: Real>(a: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |s, x| s + *x * *x)
        .sqrt();
    let tol = T::epsilon() * scale;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() <= tol || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (mrp, mrq) = (m[r][p], m[r][q]);
                    m[r][p] = c * mrp - s * mrq;
                    m[r][q] = s * mrp + c * mrq;
                }
                for r in 0..n {
                    let (mpr, mqr) = (m[p][r], m[q][r]);
                    m[p][r] = c * mpr - s * mqr;
                    m[q][r] = s * mpr + c * mqr;
                }
                for r in 0..n {
                    let (vrp, vrq) = (v[r][p], v[r][q]);
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (values, vectors)
}

fn mat_vec<T: Real>(a: &[Vec<T>], x: &[T]) -> Vec<T> {
    a.iter().map(|row| dot(row, x)).collect()
}

/// Largest eigenvalue of a PSD matrix by power iteration.
pub fn power_iteration<T: Real>(a: &[Vec<T>], tol: T, max_iter: usize) -> T {
    let n = a.len();
    if n == 0 {
        return T::zero();
    }
    // deterministic start with no exact symmetry
    let mut x: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.1) * T::from_usize_lossy(i + 1).sqrt())
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = T::zero();
    for _ in 0..max_iter {
        let y = mat_vec(a, &x);
        let ny = norm(&y);
        if ny == T::zero() {
            return T::zero();
        }
        let next = dot(&x, &y);
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= tol * next.abs().max(T::one()) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// ‖A‖₂ of a symmetric PSD matrix.
pub fn spectral_norm_psd<T: Real>(a: &[Vec<T>]) -> T {
    if a.len() <= JACOBI_MAX_DIM {
        let (vals, _) = jacobi_eigen(a);
        vals.into_iter().fold(T::zero(), |m, v| m.max(v.abs()))
    } else {
        power_iteration(a, T::lit(1e-10), 10_000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let a = vec![vec![0.25, -0.25], vec![-0.25, 0.25]];
        let (vals, vecs) = jacobi_eigen(&a);
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 0.5).abs() < 1e-15);
        for (l, v) in vals.iter().zip(&vecs) {
            let av = mat_vec(&a, v);
            for i in 0..2 {
                assert!((av[i] - l * v[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn power_matches_jacobi() {
        let n = 6;
        let b: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect())
            .collect();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|r| b[r][i] * b[r][j]).sum()).collect())
            .collect();
        let j = spectral_norm_psd(&a);
        let p = power_iteration(&a, 1e-14, 100_000);
        assert!((j - p).abs() < 1e-8 * j);
    }
}
