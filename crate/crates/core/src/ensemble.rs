//! Spiked covariance population model, samplers, and the mixture
//! construction used by the information-theoretic lower bound.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::numerics::{eig_sym, Matrix, Rng, SymMatrix};
use crate::{Error, Result};

/// Covariance of the non-spiked coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseCovariance {
    /// Identity on the off-support block.
    Identity,
    /// Explicit symmetric PSD block of dimension `p - k`.
    ExplicitGamma(SymMatrix),
}

/// Population model `sigma = beta * z z^T + gamma` where `z` has entries
/// `sign / sqrt(k)` on a `k`-element support and zeros elsewhere, and
/// `gamma` is the identity on the support block with `BaseCovariance` on
/// the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedModel {
    p: usize,
    k: usize,
    beta: f64,
    support: Vec<usize>,
    signs: Vec<i8>,
    base: BaseCovariance,
}

impl SpikedModel {
    pub fn new(
        p: usize,
        k: usize,
        beta: f64,
        support: Vec<usize>,
        signs: Vec<i8>,
        base: BaseCovariance,
    ) -> Result<Self> {
        if p == 0 || k == 0 || k > p {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k <= p, got k={k}, p={p}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "signal strength must be positive and finite, got {beta}"
            )));
        }
        if support.len() != k || signs.len() != k {
            return Err(Error::InvalidInput(format!(
                "support and signs must both have length k={k}, got {} and {}",
                support.len(),
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("signs must be +1 or -1".into()));
        }
        let mut paired: Vec<(usize, i8)> = support.into_iter().zip(signs).collect();
        paired.sort_by_key(|&(i, _)| i);
        if paired.iter().any(|&(i, _)| i >= p) {
            return Err(Error::InvalidInput("support index out of range".into()));
        }
        if paired.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("support indices must be distinct".into()));
        }
        if let BaseCovariance::ExplicitGamma(g) = &base {
            if k == p {
                return Err(Error::InvalidInput(
                    "an explicit off-support block needs k < p".into(),
                ));
            }
            if g.dim() != p - k {
                return Err(Error::InvalidInput(format!(
                    "off-support block must be {}x{}, got {}x{}",
                    p - k,
                    p - k,
                    g.dim(),
                    g.dim()
                )));
            }
        }
        let (support, signs) = paired.into_iter().unzip();
        Ok(SpikedModel {
            p,
            k,
            beta,
            support,
            signs,
            base,
        })
    }

    /// Model with a uniformly random support and independent uniform signs,
    /// identity base. Draw order: the support subset, then one sign per
    /// support index in ascending index order.
    pub fn random_support(p: usize, k: usize, beta: f64, rng: &mut Rng) -> Result<Self> {
        if k == 0 || k > p {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k <= p, got k={k}, p={p}"
            )));
        }
        let support = rng.pick_subset(p, k);
        let signs = (0..k).map(|_| rng.uniform_sign()).collect();
        Self::new(p, k, beta, support, signs, BaseCovariance::Identity)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Support indices in ascending order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Signs aligned with `support()`.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn base(&self) -> &BaseCovariance {
        &self.base
    }

    /// The sparse leading component as a dense unit vector.
    pub fn z_star(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.p];
        let scale = 1.0 / (self.k as f64).sqrt();
        for (&i, &s) in self.support.iter().zip(&self.signs) {
            z[i] = f64::from(s) * scale;
        }
        z
    }

    /// Off-support indices in ascending order.
    pub fn complement(&self) -> Vec<usize> {
        let mut mask = vec![true; self.p];
        for &i in &self.support {
            mask[i] = false;
        }
        (0..self.p).filter(|&i| mask[i]).collect()
    }
}

/// Report produced by `validate_assumptions`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `max` row absolute sum of the square root of the off-support block.
    pub sqrt_gamma_inf_norm: f64,
    /// Whether `lambda_max(gamma) <= min(1, lambda_min(gamma) + beta/8)`.
    pub eig_gap_ok: bool,
}

const PSD_TOL: f64 = 1e-10;
const GAP_TOL: f64 = 1e-12;

fn gamma_spectrum(g: &SymMatrix) -> Result<(Vec<f64>, Matrix)> {
    let eig = eig_sym(g)?;
    let min = *eig.values.last().unwrap();
    if min < -PSD_TOL {
        return Err(Error::ModelInvalid(format!(
            "off-support covariance block is not positive semidefinite (eigenvalue {min:.3e})"
        )));
    }
    Ok((eig.values, eig.vectors))
}

fn eig_gap_ok(values: &[f64], beta: f64) -> bool {
    let max = values[0];
    let min = *values.last().unwrap();
    max <= (min + beta / 8.0).min(1.0) + GAP_TOL
}

/// Matrix square root of the off-support block, with eigenvalues in
/// `[-1e-10, 0]` clamped to zero.
fn sqrt_psd(values: &[f64], vectors: &Matrix) -> SymMatrix {
    let d = values.len();
    SymMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|l| values[l].max(0.0).sqrt() * vectors.get(i, l) * vectors.get(j, l))
            .sum()
    })
}

/// Checks positive semidefiniteness of the off-support block and reports
/// the two structural assumptions: the infinity operator norm of its square
/// root (expected O(1), reported rather than enforced) and the eigenvalue
/// gap condition `lambda_max <= min(1, lambda_min + beta/8)`.
pub fn validate_assumptions(model: &SpikedModel) -> Result<AssumptionReport> {
    match &model.base {
        BaseCovariance::Identity => Ok(AssumptionReport {
            sqrt_gamma_inf_norm: 1.0,
            eig_gap_ok: true,
        }),
        BaseCovariance::ExplicitGamma(g) => {
            let (values, vectors) = gamma_spectrum(g)?;
            let root = sqrt_psd(&values, &vectors);
            let mut inf_norm = 0.0_f64;
            for i in 0..root.dim() {
                let s: f64 = root.row(i).iter().map(|v| v.abs()).sum();
                inf_norm = inf_norm.max(s);
            }
            Ok(AssumptionReport {
                sqrt_gamma_inf_norm: inf_norm,
                eig_gap_ok: eig_gap_ok(&values, model.beta),
            })
        }
    }
}

/// Assembles the population covariance `beta z z^T + gamma`. Fails when the
/// off-support block violates the eigenvalue gap assumption.
pub fn build_covariance(model: &SpikedModel) -> Result<SymMatrix> {
    let z = model.z_star();
    let mut sigma = SymMatrix::from_fn(model.p, |i, j| model.beta * z[i] * z[j]);
    for &s in &model.support {
        let v = sigma.get(s, s);
        sigma.set_sym(s, s, v + 1.0);
    }
    match &model.base {
        BaseCovariance::Identity => {
            for i in model.complement() {
                let v = sigma.get(i, i);
                sigma.set_sym(i, i, v + 1.0);
            }
        }
        BaseCovariance::ExplicitGamma(g) => {
            let (values, _) = gamma_spectrum(g)?;
            if !eig_gap_ok(&values, model.beta) {
                return Err(Error::ModelInvalid(format!(
                    "off-support eigenvalue gap violated: lambda_max {:.6} > min(1, lambda_min + beta/8) = {:.6}",
                    values[0],
                    (values[values.len() - 1] + model.beta / 8.0).min(1.0)
                )));
            }
            let off = model.complement();
            for (a, &ia) in off.iter().enumerate() {
                for (b, &ib) in off.iter().enumerate().skip(a) {
                    let v = sigma.get(ia, ib);
                    sigma.set_sym(ia, ib, v + g.get(a, b));
                }
            }
        }
    }
    Ok(sigma)
}

/// A batch of `n` samples, one per row, along with the RNG coordinates the
/// batch was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub data: Matrix,
    pub seed: u64,
    pub stream: u64,
}

/// Draws `n` samples `x = sqrt(beta) v z + sqrt(gamma) g` with `v` standard
/// normal and `g` a standard normal vector. Per sample the draw order is
/// `v` first, then the `p` entries of `g` in index order, so a fresh
/// `(seed, stream)` reproduces the batch exactly.
pub fn sample(model: &SpikedModel, n: usize, rng: &mut Rng) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let p = model.p;
    let seed = rng.seed();
    let stream = rng.stream();
    let z = model.z_star();
    let sqrt_beta = model.beta.sqrt();

    let root = match &model.base {
        BaseCovariance::Identity => None,
        BaseCovariance::ExplicitGamma(g) => {
            let (values, vectors) = gamma_spectrum(g)?;
            Some(sqrt_psd(&values, &vectors))
        }
    };
    let off = model.complement();

    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let v = rng.standard_normal();
        let g = rng.gauss(p);
        match &root {
            None => {
                for i in 0..p {
                    data.push(sqrt_beta * v * z[i] + g[i]);
                }
            }
            Some(root) => {
                let g_off: Vec<f64> = off.iter().map(|&i| g[i]).collect();
                let colored = root.matvec(&g_off);
                let mut x = vec![0.0; p];
                for &s in &model.support {
                    x[s] = sqrt_beta * v * z[s] + g[s];
                }
                for (a, &i) in off.iter().enumerate() {
                    x[i] = colored[a];
                }
                data.extend_from_slice(&x);
            }
        }
    }
    Ok(SampleBatch {
        n,
        data: Matrix::from_vec(n, p, data)?,
        seed,
        stream,
    })
}

/// Empirical second-moment matrix `(1/n) sum_i x^i (x^i)^T` (no mean
/// subtraction; the model is centered by construction).
pub fn sample_covariance(batch: &SampleBatch) -> SymMatrix {
    let n = batch.n;
    let p = batch.data.cols();
    let mut acc = vec![0.0; p * p];
    for r in 0..n {
        let x = batch.data.row(r);
        for i in 0..p {
            let xi = x[i];
            let row = &mut acc[i * p..(i + 1) * p];
            for j in i..p {
                row[j] += xi * x[j];
            }
        }
    }
    let inv = 1.0 / n as f64;
    for i in 0..p {
        for j in i..p {
            let v = acc[i * p + j] * inv;
            acc[i * p + j] = v;
            acc[j * p + i] = v;
        }
    }
    SymMatrix::from_raw(p, acc).expect("accumulator is square")
}

/// Deviation of the sample covariance from the population covariance.
pub fn noise_matrix(batch: &SampleBatch, model: &SpikedModel) -> Result<SymMatrix> {
    if batch.data.cols() != model.p {
        return Err(Error::InvalidInput(format!(
            "batch dimension {} does not match model dimension {}",
            batch.data.cols(),
            model.p
        )));
    }
    Ok(sample_covariance(batch).sub(&build_covariance(model)?))
}

/// Covariance averaged over all k-sets that contain a fixed (k-1)-element
/// core: `I + (beta / (k (p-k+1))) Y`, where `Y` has a `(k-1) x (k-1)`
/// block of `p-k+1`'s, borders of ones, and an identity block on the
/// remaining `p-k+1` coordinates. Used to exhibit a family of nearly
/// indistinguishable spiked models.
pub fn mixture_covariance(p: usize, k: usize, beta: f64) -> Result<SymMatrix> {
    if k == 0 || k >= p {
        return Err(Error::InvalidInput(format!(
            "mixture covariance needs 1 <= k < p, got k={k}, p={p}"
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal strength must be positive and finite, got {beta}"
        )));
    }
    let m = (p - k + 1) as f64;
    let c = beta / (k as f64 * m);
    let core = k - 1;
    Ok(SymMatrix::from_fn(p, |i, j| {
        let y = if i < core && j < core {
            m
        } else if i < core || j < core {
            1.0
        } else if i == j {
            1.0
        } else {
            0.0
        };
        c * y + if i == j { 1.0 } else { 0.0 }
    }))
}

/// Sidecar metadata written next to a sample batch CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BatchMetadata {
    pub p: usize,
    pub k: usize,
    pub beta: f64,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    pub seed: u64,
    pub stream: u64,
    pub n: usize,
    /// File name of the sample CSV, relative to the metadata file.
    pub data: String,
    /// `"identity"` or a path to a CSV holding the off-support block.
    pub base: String,
}

impl BatchMetadata {
    pub fn for_batch(model: &SpikedModel, batch: &SampleBatch, data: String, base: String) -> Self {
        BatchMetadata {
            p: model.p,
            k: model.k,
            beta: model.beta,
            support: model.support.clone(),
            signs: model.signs.clone(),
            seed: batch.seed,
            stream: batch.stream,
            n: batch.n,
            data,
            base,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self)
            .map_err(|e| Error::InvalidInput(format!("cannot serialise metadata: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("bad metadata file: {e}")))
    }
}

/// Writes a batch as CSV with header `x0,x1,...,x{p-1}`, one sample per row.
pub fn write_batch_csv(batch: &SampleBatch, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let p = batch.data.cols();
    let header: Vec<String> = (0..p).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for r in 0..batch.n {
        let row: Vec<String> = batch.data.row(r).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a batch CSV produced by `write_batch_csv`.
pub fn read_batch_csv(path: &Path) -> Result<Matrix> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty sample CSV".into()))??;
    let p = header.split(',').count();
    if !header.starts_with("x0") {
        return Err(Error::InvalidInput(
            "sample CSV must start with an x0,...,x{p-1} header".into(),
        ));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != p {
            return Err(Error::InvalidInput(format!(
                "expected {p} columns, got {}",
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("sample CSV has no rows".into()));
    }
    Matrix::from_rows(&rows)
}
