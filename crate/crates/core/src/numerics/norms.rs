use super::{eig_sym, Matrix, SymMatrix};
use crate::{Error, Result};

/// Index of an l_p norm appearing in an operator-norm pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormIndex {
    One,
    Two,
    Inf,
}

impl std::fmt::Display for NormIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormIndex::One => write!(f, "1"),
            NormIndex::Two => write!(f, "2"),
            NormIndex::Inf => write!(f, "inf"),
        }
    }
}

/// Induced operator norm `max {  ||A x||_p : ||x||_q = 1 }`.
///
/// Supported pairs: `(1,1)` max column abs-sum, `(inf,inf)` max row
/// abs-sum, `(2,2)` spectral norm, and `(inf,2)` max row l2-norm. Any
/// other pair returns `Unsupported`.
pub fn op_norm(a: &Matrix, p: NormIndex, q: NormIndex) -> Result<f64> {
    use NormIndex::*;
    match (p, q) {
        (One, One) => {
            let mut best = 0.0_f64;
            for j in 0..a.cols() {
                let s: f64 = (0..a.rows()).map(|i| a.get(i, j).abs()).sum();
                best = best.max(s);
            }
            Ok(best)
        }
        (Inf, Inf) => {
            let mut best = 0.0_f64;
            for i in 0..a.rows() {
                let s: f64 = a.row(i).iter().map(|v| v.abs()).sum();
                best = best.max(s);
            }
            Ok(best)
        }
        (Two, Two) => {
            // Work with the smaller Gram matrix of the two.
            let gram = if a.rows() <= a.cols() {
                a.matmul(&a.transpose())?
            } else {
                a.transpose().matmul(a)?
            };
            let sym = SymMatrix::from_matrix(&gram)?;
            let eig = eig_sym(&sym)?;
            Ok(eig.values[0].max(0.0).sqrt())
        }
        (Inf, Two) => {
            let mut best = 0.0_f64;
            for i in 0..a.rows() {
                let s: f64 = a.row(i).iter().map(|v| v * v).sum();
                best = best.max(s.sqrt());
            }
            Ok(best)
        }
        (p, q) => Err(Error::Unsupported(format!(
            "operator norm ({p},{q}) is not provided"
        ))),
    }
}

/// Vector l_p norm for the same index set used by `op_norm`.
pub fn vec_norm(x: &[f64], p: NormIndex) -> f64 {
    match p {
        NormIndex::One => x.iter().map(|v| v.abs()).sum(),
        NormIndex::Two => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormIndex::Inf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Largest absolute entry, `max_ij |a_ij|`.
pub fn elementwise_max_abs(a: &Matrix) -> f64 {
    a.max_abs()
}
