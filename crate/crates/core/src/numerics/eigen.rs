//! Cyclic Jacobi eigensolver for real symmetric matrices.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

pub fn sym_eigen(m: &Matrix) -> Result<SymEigen> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let scale = m.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale.max(1.0) {
                return Err(Error::Shape(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }

    let mut a = m.clone();
    // symmetrize away the tolerated asymmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = v.select_cols(&order);
    Ok(SymEigen { values, vectors })
}

/// Applies the Jacobi rotation `Jᵀ A J` zeroing `a[p][q]`, and accumulates `V ← V J`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn random_symmetric(n: usize, rng: &mut SeededRng) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rng.uniform(-2.0, 2.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    fn check_decomposition(m: &Matrix, e: &SymEigen) {
        let n = m.rows();
        for i in 0..n {
            let v = e.vector(i);
            let mv = m.matvec(&v).unwrap();
            for k in 0..n {
                assert!((mv[k] - e.values[i] * v[k]).abs() < 1e-8);
            }
        }
        let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(vtv.max_abs_diff(&Matrix::identity(n)) < 1e-8);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = sym_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        check_decomposition(&Matrix::identity(3), &e);
    }

    #[test]
    fn diagonal_is_sorted_with_permuted_basis() {
        let m = Matrix::from_diag(&[5.0, 2.0, 9.0]);
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values, vec![9.0, 5.0, 2.0]);
        assert_eq!(e.vector(0), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vector(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(e.vector(2), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = SeededRng::new(11);
        for n in [1, 2, 3, 6, 12] {
            let m = random_symmetric(n, &mut rng);
            let e = sym_eigen(&m).unwrap();
            check_decomposition(&m, &e);
            let lambda = Matrix::from_diag(&e.values);
            let rebuilt = e
                .vectors
                .matmul(&lambda)
                .unwrap()
                .matmul(&e.vectors.transpose())
                .unwrap();
            assert!(rebuilt.max_abs_diff(&m) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn two_by_two_matches_characteristic_polynomial() {
        // λ = (a+c)/2 ± sqrt(((a-c)/2)² + b²)
        let mut rng = SeededRng::new(5);
        for _ in 0..50 {
            let (a, b, c) = (rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
            let m = Matrix::from_rows(&[[a, b], [b, c]]).unwrap();
            let e = sym_eigen(&m).unwrap();
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            assert!((e.values[0] - (mid + rad)).abs() < 1e-10);
            assert!((e.values[1] - (mid - rad)).abs() < 1e-10);
        }
    }

    #[test]
    fn three_by_three_roots_satisfy_characteristic_polynomial() {
        let mut rng = SeededRng::new(8);
        for _ in 0..50 {
            let m = random_symmetric(3, &mut rng);
            let e = sym_eigen(&m).unwrap();
            // det(M - λI) by cofactor expansion
            for &l in &e.values {
                let d = |i: usize, j: usize| m[(i, j)] - if i == j { l } else { 0.0 };
                let det = d(0, 0) * (d(1, 1) * d(2, 2) - d(1, 2) * d(2, 1))
                    - d(0, 1) * (d(1, 0) * d(2, 2) - d(1, 2) * d(2, 0))
                    + d(0, 2) * (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0));
                assert!(det.abs() < 1e-9, "det={det}");
            }
        }
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        assert!(matches!(sym_eigen(&Matrix::zeros(2, 3)), Err(Error::Shape(_))));
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&m), Err(Error::Shape(_))));
    }
}
