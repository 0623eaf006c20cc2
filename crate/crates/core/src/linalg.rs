//! Small dense linear algebra for the 2x2/3x3/4x4 matrices used in the
//! estimator and its inference. Row-major `Vec<f64>` with explicit dimension;
//! everything here is O(n^3) with n <= 4.

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// `a` is n x n row-major. Returns `None` if a pivot is (near) zero.
pub fn solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > 0.0) || !best.is_finite() {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f != 0.0 {
                for c in col..n {
                    m[r * n + c] -= f * m[col * n + c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut v = x[col];
        for c in col + 1..n {
            v -= m[col * n + c] * x[c];
        }
        x[col] = v / m[col * n + col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Matrix inverse via column-wise solves.
pub fn inverse(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for col in 0..n {
        e.fill(0.0);
        e[col] = 1.0;
        let x = solve(n, a, &e)?;
        for r in 0..n {
            inv[r * n + col] = x[r];
        }
    }
    Some(inv)
}

/// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi
/// rotations. Returns `(eigenvalues, eigenvectors)` with eigenvectors in
/// columns, sorted by ascending eigenvalue.
pub fn sym_eigen(n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                off += m[r * n + c] * m[r * n + c];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let evals: Vec<f64> = idx.iter().map(|&i| m[i * n + i]).collect();
    let mut evecs = vec![0.0; n * n];
    for (newc, &oldc) in idx.iter().enumerate() {
        for r in 0..n {
            evecs[r * n + newc] = v[r * n + oldc];
        }
    }
    (evals, evecs)
}

/// Lower Cholesky factor of a symmetric positive definite 2x2 matrix.
pub fn cholesky2(a11: f64, a12: f64, a22: f64) -> Option<[[f64; 2]; 2]> {
    if a11 <= 0.0 {
        return None;
    }
    let l11 = a11.sqrt();
    let l21 = a12 / l11;
    let rem = a22 - l21 * l21;
    if rem <= 0.0 {
        return None;
    }
    Some([[l11, 0.0], [l21, rem.sqrt()]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_inverse_roundtrip() {
        let a = vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let b = vec![1.0, -2.0, 0.7];
        let x = solve(3, &a, &b).unwrap();
        for r in 0..3 {
            let got: f64 = (0..3).map(|c| a[r * 3 + c] * x[c]).sum();
            assert!((got - b[r]).abs() < 1e-12);
        }
        let inv = inverse(3, &a).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let got: f64 = (0..3).map(|k| a[r * 3 + k] * inv[k * 3 + c]).sum();
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve(2, &a, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn jacobi_eigen_diagonalizes() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 4.0];
        let (vals, vecs) = sym_eigen(3, &a);
        // A v = lambda v for each column.
        for j in 0..3 {
            for r in 0..3 {
                let av: f64 = (0..3).map(|c| a[r * 3 + c] * vecs[c * 3 + j]).sum();
                assert!((av - vals[j] * vecs[r * 3 + j]).abs() < 1e-10);
            }
        }
        let trace: f64 = vals.iter().sum();
        assert!((trace - 9.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky2_factors() {
        let l = cholesky2(1.0, 1.5, 4.0).unwrap();
        let r11 = l[0][0] * l[0][0];
        let r12 = l[1][0] * l[0][0];
        let r22 = l[1][0] * l[1][0] + l[1][1] * l[1][1];
        assert!((r11 - 1.0).abs() < 1e-15);
        assert!((r12 - 1.5).abs() < 1e-15);
        assert!((r22 - 4.0).abs() < 1e-15);
        assert!(cholesky2(1.0, 2.5, 4.0).is_none());
    }
}
