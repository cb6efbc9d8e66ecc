//! Support-recovery decoders: diagonal thresholding and the semidefinite
//! relaxation, plus signed-support extraction and 0-1 scoring.

use serde::{Deserialize, Serialize};

use crate::ensemble::SpikedModel;
use crate::numerics::{eig_sym, SymMatrix};
use crate::sdp::{solve, SolverOptions};
use crate::{Error, Result};

/// A length-p vector over `{-1, 0, +1}` marking sign and membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedSupport(Vec<i8>);

impl SignedSupport {
    pub fn from_vec(values: Vec<i8>) -> Result<Self> {
        if values.iter().any(|&v| v < -1 || v > 1) {
            return Err(Error::InvalidInput(
                "signed support entries must be -1, 0, or +1".into(),
            ));
        }
        Ok(SignedSupport(values))
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> SignedSupport {
        SignedSupport(self.0.iter().map(|&v| -v).collect())
    }
}

/// Signs of `u` with entries of magnitude `<= zero_tol` mapped to zero.
pub fn signed_support(u: &[f64], zero_tol: f64) -> Result<SignedSupport> {
    if !(zero_tol >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "zero tolerance must be nonnegative, got {zero_tol}"
        )));
    }
    Ok(SignedSupport(
        u.iter()
            .map(|&v| {
                if v.abs() > zero_tol {
                    if v > 0.0 {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                }
            })
            .collect(),
    ))
}

/// Method-specific decode diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeDiagnostics {
    Diag {
        /// Gap between the k-th and (k+1)-th largest diagonal entries;
        /// infinite when k = p.
        margin: f64,
    },
    Sdp {
        /// Count of solution eigenvalues above `rank_tol * lambda_max`.
        rank_estimate: usize,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        converged: bool,
        objective: f64,
    },
}

/// Output of either decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Exactly k indices, ascending.
    pub support: Vec<usize>,
    /// Absent for diagonal thresholding, which carries no sign information.
    pub signed: Option<SignedSupport>,
    /// Leading eigenvector of the relaxation solution, when applicable.
    pub z_hat: Option<Vec<f64>>,
    pub diagnostics: DecodeDiagnostics,
}

/// Indices of the k largest values, ties broken toward the lowest index.
/// Returns the chosen indices in ascending order together with the margin
/// between the k-th and (k+1)-th largest values.
fn top_k_indices(values: &[f64], k: usize) -> (Vec<usize>, f64) {
    let p = values.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let margin = if k == p {
        f64::INFINITY
    } else {
        values[order[k - 1]] - values[order[k]]
    };
    let mut support: Vec<usize> = order[..k].to_vec();
    support.sort_unstable();
    (support, margin)
}

/// Selects the k coordinates with the largest diagonal entries of the
/// sample covariance. Carries no sign information.
pub fn diag_threshold_decode(sigma_hat: &SymMatrix, k: usize) -> Result<DecodeResult> {
    let p = sigma_hat.dim();
    if k == 0 || k > p {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    let diag: Vec<f64> = (0..p).map(|i| sigma_hat.get(i, i)).collect();
    let (support, margin) = top_k_indices(&diag, k);
    Ok(DecodeResult {
        support,
        signed: None,
        z_hat: None,
        diagnostics: DecodeDiagnostics::Diag { margin },
    })
}

/// Options for `sdp_decode`; `None` fields fall back to the documented
/// defaults derived from `(k, beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpDecodeOptions {
    /// Solver configuration; default penalty is `beta / (2k)`.
    pub solver: Option<SolverOptions>,
    /// Truncation level for signed-support extraction; default `1/(2*sqrt(k))`,
    /// the magnitude below which a true support entry cannot fall when the
    /// sign-accuracy bound holds.
    pub zero_tol: Option<f64>,
    /// Relative eigenvalue threshold for the rank diagnostic.
    pub rank_tol: f64,
}

impl Default for SdpDecodeOptions {
    fn default() -> Self {
        SdpDecodeOptions {
            solver: None,
            zero_tol: None,
            rank_tol: 1e-6,
        }
    }
}

/// Solves the l1-penalised relaxation and reads the support off the leading
/// eigenvector of the solution: the k largest `|z_i|` form the support, and
/// entries above the truncation level contribute signs. A solve that fails
/// to converge is an error carrying the final residuals.
pub fn sdp_decode(
    sigma_hat: &SymMatrix,
    k: usize,
    beta: f64,
    opts: &SdpDecodeOptions,
) -> Result<DecodeResult> {
    let p = sigma_hat.dim();
    if k == 0 || k > p {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal strength must be positive and finite, got {beta}"
        )));
    }
    if !(opts.rank_tol > 0.0) {
        return Err(Error::InvalidInput("rank_tol must be positive".into()));
    }
    let solver_opts = opts
        .solver
        .clone()
        .unwrap_or_else(|| SolverOptions::with_rho(beta / (2.0 * k as f64)));
    let sol = solve(sigma_hat, &solver_opts)?;
    if !sol.converged {
        return Err(Error::SolverFailed {
            reason: format!("no convergence within {} iterations", sol.iterations),
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
        });
    }

    let eig = eig_sym(&sol.z_matrix)?;
    let lambda_max = eig.values[0];
    let rank_estimate = eig
        .values
        .iter()
        .filter(|&&v| v > opts.rank_tol * lambda_max)
        .count();
    let z_hat = eig.vectors.column(0);

    let magnitudes: Vec<f64> = z_hat.iter().map(|v| v.abs()).collect();
    let (support, _) = top_k_indices(&magnitudes, k);
    let zero_tol = opts
        .zero_tol
        .unwrap_or_else(|| 0.5 / (k as f64).sqrt());
    let signed = signed_support(&z_hat, zero_tol)?;

    Ok(DecodeResult {
        support,
        signed: Some(signed),
        z_hat: Some(z_hat),
        diagnostics: DecodeDiagnostics::Sdp {
            rank_estimate,
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            converged: sol.converged,
            objective: sol.objective,
        },
    })
}

/// What counts as a successful recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// Exact support-set equality.
    Support,
    /// Exact signed-support equality, up to global negation.
    Signed,
}

/// 0-1 scoring of a decode against the generating model.
pub fn score(result: &DecodeResult, truth: &SpikedModel, mode: ScoreMode) -> Result<bool> {
    match mode {
        ScoreMode::Support => Ok(result.support == truth.support()),
        ScoreMode::Signed => {
            let got = result.signed.as_ref().ok_or_else(|| {
                Error::InvalidInput(
                    "signed scoring requires a decoder that produces signs".into(),
                )
            })?;
            if got.len() != truth.p() {
                return Err(Error::InvalidInput(format!(
                    "signed support has length {}, model has dimension {}",
                    got.len(),
                    truth.p()
                )));
            }
            let mut want = vec![0i8; truth.p()];
            for (&i, &s) in truth.support().iter().zip(truth.signs()) {
                want[i] = s;
            }
            let want = SignedSupport(want);
            Ok(*got == want || *got == want.negated())
        }
    }
}
