use super::{Matrix, SymMatrix};
use crate::{Error, Result};

/// Full eigendecomposition of a symmetric matrix. Eigenvalues are sorted in
/// descending order and `vectors` holds the matching orthonormal
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const MAX_SWEEPS: usize = 50;
const SIGN_ZERO_TOL: f64 = 1e-12;

/// Cyclic Jacobi eigendecomposition. Rotations are applied in a fixed
/// row-major order over the upper triangle, so the result is deterministic
/// for a given input. Each returned eigenvector is normalised to have a
/// nonnegative first component larger than `1e-12` in magnitude.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "eigendecomposition requires finite entries".into(),
        ));
    }
    let n = m.dim();
    let mut a = m.data().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    if n > 1 {
        let mut b = d.clone();
        let mut z = vec![0.0; n];
        let off_tol = 1e-13 * (1.0 + m.frob_norm());
        let mut converged = false;

        for sweep in 0..MAX_SWEEPS {
            let mut sm = 0.0;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    sm += a[p * n + q].abs();
                }
            }
            if sm <= off_tol {
                converged = true;
                break;
            }
            let tresh = if sweep < 3 {
                0.2 * sm / (n * n) as f64
            } else {
                0.0
            };
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    let g = 100.0 * apq.abs();
                    // Off-diagonal entries that are negligible against both
                    // diagonal values can be zeroed outright once the sweep
                    // count is past the initial thresholded phase.
                    if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                        a[p * n + q] = 0.0;
                    } else if apq.abs() > tresh {
                        let mut h = d[q] - d[p];
                        let t = if h.abs() + g == h.abs() {
                            apq / h
                        } else {
                            let theta = 0.5 * h / apq;
                            let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                            if theta < 0.0 {
                                -t
                            } else {
                                t
                            }
                        };
                        let c = 1.0 / (1.0 + t * t).sqrt();
                        let s = t * c;
                        let tau = s / (1.0 + c);
                        h = t * apq;
                        z[p] -= h;
                        z[q] += h;
                        d[p] -= h;
                        d[q] += h;
                        a[p * n + q] = 0.0;
                        for j in 0..p {
                            rotate(&mut a, j * n + p, j * n + q, s, tau);
                        }
                        for j in p + 1..q {
                            rotate(&mut a, p * n + j, j * n + q, s, tau);
                        }
                        for j in q + 1..n {
                            rotate(&mut a, p * n + j, q * n + j, s, tau);
                        }
                        for j in 0..n {
                            rotate(&mut v, j * n + p, j * n + q, s, tau);
                        }
                    }
                }
            }
            for i in 0..n {
                b[i] += z[i];
                d[i] = b[i];
                z[i] = 0.0;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "jacobi eigendecomposition did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let mut flip = 1.0;
        for i in 0..n {
            let x = v[i * n + src];
            if x.abs() > SIGN_ZERO_TOL {
                if x < 0.0 {
                    flip = -1.0;
                }
                break;
            }
        }
        for i in 0..n {
            vectors.set(i, col, flip * v[i * n + src]);
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

#[inline(always)]
fn rotate(a: &mut [f64], ij: usize, kl: usize, s: f64, tau: f64) {
    let g = a[ij];
    let h = a[kl];
    a[ij] = g - s * (h + g * tau);
    a[kl] = h + s * (g - h * tau);
}

/// Largest eigenvalue with its eigenvector (same sign convention as
/// `eig_sym`).
pub fn max_eigvec(m: &SymMatrix) -> Result<(f64, Vec<f64>)> {
    let eig = eig_sym(m)?;
    Ok((eig.values[0], eig.vectors.column(0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &EigenDecomposition) -> SymMatrix {
        let n = e.values.len();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|l| e.values[l] * e.vectors.get(i, l) * e.vectors.get(j, l))
                .sum()
        })
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_sym(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e.vectors.get(i, j) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn diagonal_matrix_sorted_descending_with_axis_vectors() {
        let e = eig_sym(&SymMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        let expected_cols = [0usize, 2, 1];
        for (col, &axis) in expected_cols.iter().enumerate() {
            for i in 0..3 {
                let expect = if i == axis { 1.0 } else { 0.0 };
                assert!((e.vectors.get(i, col) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn one_by_one_matrix() {
        let e = eig_sym(&SymMatrix::from_diag(&[-4.5])).unwrap();
        assert_eq!(e.values, vec![-4.5]);
        assert_eq!(e.vectors.get(0, 0), 1.0);
    }

    #[test]
    fn known_two_by_two() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1.
        let m = SymMatrix::from_raw(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = eig_sym(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let s = 0.5_f64.sqrt();
        assert!((e.vectors.get(0, 0) - s).abs() < 1e-14);
        assert!((e.vectors.get(1, 0) - s).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let m = SymMatrix::from_raw(2, vec![1.0, f64::NAN, f64::NAN, 1.0]).unwrap();
        match eig_sym(&m) {
            Err(Error::InvalidInput(_)) => {}
            other => panic!("expected InvalidInput, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_and_orthonormality_on_seeded_matrices() {
        let mut rng = super::super::Rng::new(071_501);
        for round in 0..200 {
            let n = 1 + (round % 50);
            let raw = rng.gauss(n * n);
            let m = SymMatrix::from_raw(n, raw).unwrap();
            let e = eig_sym(&m).unwrap();
            let tol = 1e-10 * (1.0 + m.frob_norm());
            let rec = reconstruct(&e);
            assert!(
                rec.sub(&m).frob_norm() <= tol,
                "reconstruction off at dim {n}"
            );
            for a in 0..n {
                for b in a..n {
                    let dot: f64 = (0..n)
                        .map(|i| e.vectors.get(i, a) * e.vectors.get(i, b))
                        .sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10, "gram off at dim {n}");
                }
            }
            for w in e.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn max_eigvec_of_spiked_matrix() {
        // 4 * z z^T + I with z = (1/sqrt(2), -1/sqrt(2), 0).
        let s = 0.5_f64.sqrt();
        let z = [s, -s, 0.0];
        let m = SymMatrix::from_fn(3, |i, j| {
            4.0 * z[i] * z[j] + if i == j { 1.0 } else { 0.0 }
        });
        let (val, vec) = max_eigvec(&m).unwrap();
        assert!((val - 5.0).abs() < 1e-12);
        // Sign convention makes the first component positive.
        assert!((vec[0] - s).abs() < 1e-12);
        assert!((vec[1] + s).abs() < 1e-12);
        assert!(vec[2].abs() < 1e-12);
    }
}
