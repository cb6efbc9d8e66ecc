use super::{eig_sym, SymMatrix};
use crate::{Error, Result};

/// Euclidean projection onto the probability simplex
/// `{w : w_i >= 0, sum w_i = 1}` by the sort-and-threshold rule. Entries
/// below the water level come out as exact zeros.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidInput(
            "cannot project an empty vector onto the simplex".into(),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "simplex projection requires finite entries".into(),
        ));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = sorted[0] - 1.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Euclidean projection onto the spectrahedron
/// `{Z : Z = Z^T, Z >= 0, tr Z = 1}`: eigendecompose and project the
/// spectrum onto the simplex.
pub fn project_spectrahedron(a: &SymMatrix) -> Result<SymMatrix> {
    let n = a.dim();
    let eig = eig_sym(a)?;
    let w = project_simplex(&eig.values)?;
    let mut data = vec![0.0; n * n];
    for (l, &wl) in w.iter().enumerate() {
        if wl == 0.0 {
            continue;
        }
        let col = eig.vectors.column(l);
        for i in 0..n {
            let ci = wl * col[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut data[i * n..(i + 1) * n];
            for (r, &cj) in row.iter_mut().zip(&col) {
                *r += ci * cj;
            }
        }
    }
    SymMatrix::from_raw(n, data)
}

/// Entrywise soft-thresholding `sign(a) * max(|a| - tau, 0)`.
pub fn soft_threshold(a: &SymMatrix, tau: f64) -> Result<SymMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "soft threshold must be nonnegative, got {tau}"
        )));
    }
    let n = a.dim();
    let data = a
        .data()
        .iter()
        .map(|&x| x.signum() * (x.abs() - tau).max(0.0))
        .collect();
    SymMatrix::from_raw(n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_fixed_points() {
        assert_eq!(project_simplex(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        let w = project_simplex(&[0.3, 0.3, 0.3]).unwrap();
        for v in w {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_clips_dominant_coordinate() {
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn simplex_handles_negative_entries() {
        let w = project_simplex(&[-1.0, -1.0, 3.0]).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn simplex_rejects_empty_and_non_finite() {
        assert!(project_simplex(&[]).is_err());
        assert!(project_simplex(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn simplex_output_sums_to_one() {
        let mut rng = super::super::Rng::new(3);
        for _ in 0..500 {
            let v: Vec<f64> = rng.gauss(7).iter().map(|x| 3.0 * x).collect();
            let w = project_simplex(&v).unwrap();
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrahedron_fixed_points() {
        let p = 4;
        let m = SymMatrix::scaled_identity(p, 1.0 / p as f64);
        let proj = project_spectrahedron(&m).unwrap();
        assert!(proj.sub(&m).frob_norm() < 1e-12);

        let z = [0.6, -0.8];
        let zz = SymMatrix::from_fn(2, |i, j| z[i] * z[j]);
        let proj = project_spectrahedron(&zz).unwrap();
        assert!(proj.sub(&zz).frob_norm() < 1e-12);
    }

    #[test]
    fn spectrahedron_on_diagonal_matrix() {
        let proj = project_spectrahedron(&SymMatrix::from_diag(&[2.0, 0.0])).unwrap();
        assert!((proj.get(0, 0) - 1.0).abs() < 1e-14);
        assert!(proj.get(1, 1).abs() < 1e-14);
        assert!(proj.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn spectrahedron_is_idempotent() {
        let mut rng = super::super::Rng::new(11);
        for round in 0..60 {
            let n = 2 + round % 12;
            let m = SymMatrix::from_raw(n, rng.gauss(n * n)).unwrap();
            let p1 = project_spectrahedron(&m).unwrap();
            let p2 = project_spectrahedron(&p1).unwrap();
            assert!(p2.sub(&p1).frob_norm() <= 1e-9);
            assert!((p1.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let m = SymMatrix::from_raw(2, vec![1.0, -0.2, -0.2, 0.1]).unwrap();
        let out = soft_threshold(&m, 0.3).unwrap();
        assert!((out.get(0, 0) - 0.7).abs() < 1e-15);
        assert_eq!(out.get(0, 1), 0.0);
        assert_eq!(out.get(1, 1), 0.0);

        let id = soft_threshold(&m, 0.0).unwrap();
        assert_eq!(id, m);

        let dead = soft_threshold(&m, 2.0).unwrap();
        assert_eq!(dead.frob_norm(), 0.0);
    }

    #[test]
    fn soft_threshold_rejects_negative_tau() {
        let m = SymMatrix::identity(2);
        assert!(soft_threshold(&m, -0.1).is_err());
        assert!(soft_threshold(&m, f64::NAN).is_err());
    }
}
