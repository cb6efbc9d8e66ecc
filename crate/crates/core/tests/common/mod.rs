//! Reference implementations used to cross-check library results.
//!
//! Everything here is deliberately written against different algorithms
//! than the library (cyclic Jacobi instead of tridiagonal QL, bisection
//! instead of sort-based simplex projection, projected subgradient ascent
//! instead of operator splitting), trading speed for independence.

#![allow(dead_code)]

use spca::numerics::{Rng, SymMatrix};

/// Leading eigenpair by shifted power iteration.
///
/// Shifting by a row-sum bound plus one makes the algebraically largest
/// eigenvalue also the largest in magnitude, so the iteration cannot lock
/// onto a large negative eigenvalue.
pub fn power_iteration(a: &SymMatrix, iters: usize) -> (f64, Vec<f64>) {
    let p = a.dim();
    let shift = (0..p)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        + 1.0;
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    normalize(&mut v);
    for _ in 0..iters {
        let mut w = a.matvec(&v);
        for i in 0..p {
            w[i] += shift * v[i];
        }
        normalize(&mut w);
        v = w;
    }
    let av = a.matvec(&v);
    let lambda: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
    if v[v.iter().position(|x| x.abs() > 1e-12).unwrap_or(0)] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    (lambda, v)
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and eigenvectors as rows of the
/// second component, aligned with the values.
pub fn jacobi_eig(a: &SymMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = a.dim();
    let mut m: Vec<Vec<f64>> = (0..p).map(|i| a.row(i).to_vec()).collect();
    let mut vecs: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = m
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for _sweep in 0..200 {
        let mut off = 0.0_f64;
        for i in 0..p {
            for j in (i + 1)..p {
                off = off.max(m[i][j].abs());
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if m[i][j].abs() < 1e-18 * scale {
                    continue;
                }
                let theta = (m[j][j] - m[i][i]) / (2.0 * m[i][j]);
                let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sgn / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (mik, mjk) = (m[i][k], m[j][k]);
                    m[i][k] = c * mik - s * mjk;
                    m[j][k] = s * mik + c * mjk;
                }
                for k in 0..p {
                    let (mki, mkj) = (m[k][i], m[k][j]);
                    m[k][i] = c * mki - s * mkj;
                    m[k][j] = s * mki + c * mkj;
                }
                for k in 0..p {
                    let (vik, vjk) = (vecs[i][k], vecs[j][k]);
                    vecs[i][k] = c * vik - s * vjk;
                    vecs[j][k] = s * vik + c * vjk;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| m[y][y].partial_cmp(&m[x][x]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let vectors: Vec<Vec<f64>> = order.iter().map(|&i| vecs[i].clone()).collect();
    (values, vectors)
}

/// Euclidean projection onto the probability simplex by bisection on the
/// dual threshold tau, solving sum_i max(v_i - tau, 0) = 1.
pub fn simplex_project_bisect(v: &[f64]) -> Vec<f64> {
    let mass = |tau: f64| -> f64 { v.iter().map(|&x| (x - tau).max(0.0)).sum() };
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Projection onto the spectrahedron via Jacobi eigendecomposition and
/// bisection simplex projection of the spectrum.
pub fn spectrahedron_project_ref(a: &SymMatrix) -> SymMatrix {
    let p = a.dim();
    let (values, vectors) = jacobi_eig(a);
    let w = simplex_project_bisect(&values);
    SymMatrix::from_fn(p, |i, j| {
        (0..p).map(|r| w[r] * vectors[r][i] * vectors[r][j]).sum()
    })
}

/// Exact optimum of the penalized objective over 2x2 spectrahedron points.
///
/// Parametrize Z = [[a, b], [b, 1-a]] with b^2 <= a(1-a). For fixed a the
/// optimal off-diagonal magnitude is either 0 or the boundary value
/// sqrt(a(1-a)) depending on whether |sigma_12| clears the penalty, which
/// reduces the problem to maximizing
///     g(a) = a s11 + (1-a) s22 - rho + c sqrt(a(1-a)),
/// with c = 2 max(|sigma_12| - rho, 0). Setting g'(a) = 0 gives the single
/// interior candidate a = 1/2 + d / (2 sqrt(d^2 + c^2)) with d = s11 - s22;
/// the endpoints a in {0, 1} cover the boundary cases.
pub fn two_by_two_sdp_optimum(sigma: &SymMatrix, rho: f64) -> f64 {
    assert_eq!(sigma.dim(), 2);
    let s11 = sigma.get(0, 0);
    let s22 = sigma.get(1, 1);
    let s12 = sigma.get(0, 1);
    let c = 2.0 * (s12.abs() - rho).max(0.0);
    let d = s11 - s22;
    let g = |a: f64| s11 * a + s22 * (1.0 - a) - rho + c * (a * (1.0 - a)).max(0.0).sqrt();
    let mut best = g(0.0).max(g(1.0));
    if c > 0.0 || d != 0.0 {
        let a_star = 0.5 + d / (2.0 * (d * d + c * c).sqrt());
        best = best.max(g(a_star.clamp(0.0, 1.0)));
    }
    best
}

/// Penalized objective value at a feasible point.
pub fn penalized_objective(sigma: &SymMatrix, z: &SymMatrix, rho: f64) -> f64 {
    sigma.dot(z) - rho * z.l1_mass()
}

/// Best objective found by projected subgradient ascent with geometric
/// step decay and restarts from the incumbent.
///
/// Slow but independent of the operator-splitting solver; on well-scaled
/// instances of dimension around ten it reliably lands within about 1e-6
/// of the optimum.
pub fn subgradient_ascent(sigma: &SymMatrix, rho: f64, rng: &mut Rng) -> f64 {
    let p = sigma.dim();
    let mut incumbent = SymMatrix::scaled_identity(p, 1.0 / p as f64);
    let mut best = penalized_objective(sigma, &incumbent, rho);
    for restart in 0..32 {
        let mut z = if restart % 4 == 3 {
            let mut psi: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
            normalize(&mut psi);
            SymMatrix::from_fn(p, |i, j| psi[i] * psi[j])
        } else {
            incumbent.clone()
        };
        let step0 = 0.5 / 1.5_f64.powi(restart);
        for t in 0..700 {
            let alpha = step0 * 0.99_f64.powi(t);
            let grad = SymMatrix::from_fn(p, |i, j| {
                sigma.get(i, j) - rho * z.get(i, j).signum()
            });
            let moved = z.add(&grad.scale(alpha));
            z = spectrahedron_project_ref(&moved);
            let val = penalized_objective(sigma, &z, rho);
            if val > best {
                best = val;
                incumbent = z.clone();
            }
        }
    }
    best
}

/// Random symmetric matrix with independent standard normal entries on and
/// above the diagonal.
pub fn random_sym(p: usize, rng: &mut Rng) -> SymMatrix {
    let mut m = SymMatrix::zeros(p);
    for i in 0..p {
        for j in i..p {
            m.set_sym(i, j, rng.standard_normal());
        }
    }
    m
}
