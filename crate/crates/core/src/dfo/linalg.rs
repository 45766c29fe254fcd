//! Small dense least squares for model fitting.

use crate::scalar::Scalar;

/// Solves `min ‖A x − b‖₂` for a tall or square `A` (row-major, `m ≥ n`)
/// with column equilibration and Householder QR.
///
/// Returns `None` when `A` is numerically rank deficient or any input is not
/// finite.
pub fn lstsq<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if n == 0 || m < n || b.len() != m || a.iter().any(|r| r.len() != n) {
        return None;
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
        return None;
    }

    // column-major copy, each column scaled to unit norm
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect();
    let mut scale = vec![T::one(); n];
    for (j, col) in cols.iter_mut().enumerate() {
        let norm = col.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm == T::zero() {
            return None;
        }
        scale[j] = norm;
        col.iter_mut().for_each(|v| *v = *v / norm);
    }
    let mut rhs = b.to_vec();

    let mut diag = vec![T::zero(); n];
    for k in 0..n {
        let norm = cols[k][k..].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm == T::zero() {
            return None;
        }
        let alpha = if cols[k][k] > T::zero() { -norm } else { norm };
        // v = x − alpha·e1, stored in place
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        diag[k] = alpha;
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for col in cols.iter_mut().skip(k + 1) {
                let dot = v.iter().zip(&col[k..]).fold(T::zero(), |s, (&p, &q)| s + p * q);
                let f = two * dot / vnorm2;
                for (c, &vi) in col[k..].iter_mut().zip(&v) {
                    *c = *c - f * vi;
                }
            }
            let dot = v.iter().zip(&rhs[k..]).fold(T::zero(), |s, (&p, &q)| s + p * q);
            let f = two * dot / vnorm2;
            for (r, &vi) in rhs[k..].iter_mut().zip(&v) {
                *r = *r - f * vi;
            }
        }
    }

    let max_diag = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let tol = T::epsilon().sqrt() * max_diag;
    if diag.iter().any(|d| d.abs() <= tol) {
        return None;
    }

    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s = s - cols[j][i] * x[j];
        }
        x[i] = s / diag[i];
    }
    for (xi, s) in x.iter_mut().zip(&scale) {
        *xi = *xi / *s;
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_system() {
        let a = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.5, 0.125], vec![1.0, 1.0, 0.5]];
        // f(u) = 1 − 3u + 3u² written as c + g u + ½ h u²
        let x = lstsq(&a, &[1.0, 0.25, 1.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], -3.0, epsilon = 1e-12);
        assert_relative_eq!(x[2], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn overdetermined_line_fit() {
        let a: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let b = [1.0, 3.1, 4.9, 7.0, 9.1];
        let x = lstsq(&a, &b).unwrap();
        // normal-equation solution computed by hand: slope 2.01, intercept 1.0
        assert_relative_eq!(x[1], 2.01, epsilon = 1e-12);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_and_bad_input() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(lstsq(&a, &[1.0, 2.0, 3.0]).is_none());
        assert!(lstsq(&[vec![1.0f64]], &[f64::INFINITY]).is_none());
        assert!(lstsq(&[vec![1.0f64, 0.0]], &[1.0]).is_none());
        assert!(lstsq(&[vec![0.0f64], vec![0.0]], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn works_in_f32() {
        let a = vec![vec![2.0f32, 0.0], vec![0.0, 4.0]];
        let x = lstsq(&a, &[2.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0);
        assert_relative_eq!(x[1], 0.5);
    }
}
