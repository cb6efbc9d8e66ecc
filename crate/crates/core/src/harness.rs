//! Monte Carlo sweep driver: runs seeded support-recovery trials over a
//! grid of rescaled sample sizes, aggregates success curves with Wilson
//! intervals, and writes CSV outputs plus a plot script.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{
    diag_threshold_decode, score, sdp_decode, DecodeDiagnostics, ScoreMode, SdpDecodeOptions,
};
use crate::ensemble::{sample, sample_covariance, SpikedModel};
use crate::numerics::Rng;
use crate::sdp::SolverOptions;
use crate::theory::ScalingPoint;
use crate::{Error, Result};

/// Which decoder a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Diag,
    Sdp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Diag => "diag",
            Method::Sdp => "sdp",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag" => Ok(Method::Diag),
            "sdp" => Ok(Method::Sdp),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// How the sparsity level is derived from the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparsityRule {
    /// `k = max(1, round(c * ln p))`.
    LogP { c: f64 },
    /// `k = max(1, round(c * sqrt p))`.
    SqrtP { c: f64 },
    /// `k = max(1, round(c * p))`.
    LinearP { c: f64 },
    /// Constant `k`.
    Fixed { k: usize },
}

/// Sparsity for dimension `p` under `rule`, clamped to `p - 2` so that the
/// rescaled sample size stays defined.
pub fn derive_k(p: usize, rule: SparsityRule) -> Result<usize> {
    if p < 3 {
        return Err(Error::InvalidInput(format!(
            "dimension must be at least 3 to leave p - k >= 2, got {p}"
        )));
    }
    let raw = match rule {
        SparsityRule::LogP { c } | SparsityRule::SqrtP { c } | SparsityRule::LinearP { c }
            if !(c > 0.0) || !c.is_finite() =>
        {
            return Err(Error::InvalidInput(format!(
                "sparsity coefficient must be positive, got {c}"
            )));
        }
        SparsityRule::LogP { c } => (c * (p as f64).ln()).round().max(1.0) as usize,
        SparsityRule::SqrtP { c } => (c * (p as f64).sqrt()).round().max(1.0) as usize,
        SparsityRule::LinearP { c } => (c * p as f64).round().max(1.0) as usize,
        SparsityRule::Fixed { k } => {
            if k == 0 {
                return Err(Error::InvalidInput("fixed sparsity must be >= 1".into()));
            }
            k
        }
    };
    Ok(raw.min(p - 2))
}

/// Sample count hitting the requested rescaled sample size:
/// `max(1, round(theta * k^e * ln(p - k)))` with `e = 2` for the diagonal
/// method and `e = 1` for the relaxation.
pub fn derive_n(theta: f64, p: usize, k: usize, method: Method) -> usize {
    let scale = match method {
        Method::Diag => (k * k) as f64,
        Method::Sdp => k as f64,
    };
    (theta * scale * ((p - k) as f64).ln()).round().max(1.0) as usize
}

/// Solver configuration as it appears in sweep config files. A missing
/// penalty falls back to `beta / (2k)` at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol_primal: f64,
    #[serde(default = "default_tol")]
    pub tol_dual: f64,
}

fn default_step() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    20_000
}

fn default_tol() -> f64 {
    1e-7
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: None,
            step: default_step(),
            max_iters: default_max_iters(),
            tol_primal: default_tol(),
            tol_dual: default_tol(),
        }
    }
}

impl SolverConfig {
    fn to_options(&self, beta: f64, k: usize) -> SolverOptions {
        SolverOptions {
            rho: self.rho.unwrap_or(beta / (2.0 * k as f64)),
            step: self.step,
            max_iters: self.max_iters,
            tol_primal: self.tol_primal,
            tol_dual: self.tol_dual,
        }
    }
}

/// Full description of a sweep experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub method: Method,
    pub dims: Vec<usize>,
    pub sparsity_rule: SparsityRule,
    pub beta: f64,
    pub theta_grid: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    /// Defaults to support scoring for the diagonal method and signed
    /// scoring for the relaxation.
    #[serde(default)]
    pub score_mode: Option<ScoreMode>,
    #[serde(default)]
    pub solver_opts: Option<SolverConfig>,
}

impl SweepSpec {
    pub fn effective_score_mode(&self) -> ScoreMode {
        self.score_mode.unwrap_or(match self.method {
            Method::Diag => ScoreMode::Support,
            Method::Sdp => ScoreMode::Signed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("dims must be nonempty".into()));
        }
        if self.theta_grid.is_empty() {
            return Err(Error::Config("theta_grid must be nonempty".into()));
        }
        if self
            .theta_grid
            .iter()
            .any(|t| !(t.is_finite() && *t > 0.0))
        {
            return Err(Error::Config("theta_grid entries must be positive".into()));
        }
        if self.theta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("theta_grid must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        if self.method == Method::Diag && self.effective_score_mode() == ScoreMode::Signed {
            return Err(Error::Config(
                "the diagonal decoder produces no signs; use support scoring".into(),
            ));
        }
        for &p in &self.dims {
            let k = derive_k(p, self.sparsity_rule).map_err(|e| Error::Config(e.to_string()))?;
            for &theta in &self.theta_grid {
                let n = derive_n(theta, p, k, self.method);
                ScalingPoint::new(n, p, k).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Loads and validates a sweep config in TOML form.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: SweepSpec =
        toml::from_str(&text).map_err(|e| Error::Config(format!("bad sweep config: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// One decoded trial, flattened for CSV output. Optional columns apply to
/// only one of the methods and stay empty for the other. `elapsed_ms`
/// times the decode step alone and is the one nondeterministic column.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    /// Rescaled sample size recomputed from the integral `n`, so stored and
    /// derived values agree exactly.
    pub theta: f64,
    pub trial_index: usize,
    pub seed: u64,
    pub stream: u64,
    pub success: bool,
    pub margin: Option<f64>,
    pub rank_estimate: Option<usize>,
    pub iterations: Option<usize>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub converged: Option<bool>,
    pub objective: Option<f64>,
    pub elapsed_ms: f64,
}

struct TrialJob {
    p: usize,
    k: usize,
    n: usize,
    trial_index: usize,
    stream: u64,
}

fn run_trial(spec: &SweepSpec, job: &TrialJob) -> Result<TrialRecord> {
    let mut rng = Rng::with_stream(spec.base_seed, job.stream);
    let model = SpikedModel::random_support(job.p, job.k, spec.beta, &mut rng)?;
    let batch = sample(&model, job.n, &mut rng)?;
    let sigma_hat = sample_covariance(&batch);
    let theta = {
        let point = ScalingPoint::new(job.n, job.p, job.k)?;
        match spec.method {
            Method::Diag => point.theta_dia(),
            Method::Sdp => point.theta_sdp(),
        }
    };

    let mut record = TrialRecord {
        method: spec.method,
        p: job.p,
        k: job.k,
        n: job.n,
        theta,
        trial_index: job.trial_index,
        seed: spec.base_seed,
        stream: job.stream,
        success: false,
        margin: None,
        rank_estimate: None,
        iterations: None,
        primal_residual: None,
        dual_residual: None,
        converged: None,
        objective: None,
        elapsed_ms: 0.0,
    };

    let started = Instant::now();
    match spec.method {
        Method::Diag => {
            let result = diag_threshold_decode(&sigma_hat, job.k)?;
            record.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
            record.success = score(&result, &model, spec.effective_score_mode())?;
            if let DecodeDiagnostics::Diag { margin } = result.diagnostics {
                record.margin = Some(margin);
            }
        }
        Method::Sdp => {
            let cfg = spec.solver_opts.clone().unwrap_or_default();
            let opts = SdpDecodeOptions {
                solver: Some(cfg.to_options(spec.beta, job.k)),
                ..SdpDecodeOptions::default()
            };
            match sdp_decode(&sigma_hat, job.k, spec.beta, &opts) {
                Ok(result) => {
                    record.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
                    record.success = score(&result, &model, spec.effective_score_mode())?;
                    if let DecodeDiagnostics::Sdp {
                        rank_estimate,
                        iterations,
                        primal_residual,
                        dual_residual,
                        converged,
                        objective,
                    } = result.diagnostics
                    {
                        record.rank_estimate = Some(rank_estimate);
                        record.iterations = Some(iterations);
                        record.primal_residual = Some(primal_residual);
                        record.dual_residual = Some(dual_residual);
                        record.converged = Some(converged);
                        record.objective = Some(objective);
                    }
                }
                Err(Error::SolverFailed {
                    iterations,
                    primal_residual,
                    dual_residual,
                    ..
                }) => {
                    record.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
                    record.iterations = Some(iterations);
                    record.primal_residual = Some(primal_residual);
                    record.dual_residual = Some(dual_residual);
                    record.converged = Some(false);
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok(record)
}

/// Runs every (dimension, theta, trial) combination. Each trial gets its
/// own RNG stream indexed by global position, so results do not depend on
/// scheduling; the support subset is drawn first, then the signs, then the
/// samples. Solver nonconvergence marks the trial failed and the sweep
/// continues. Output is sorted by (p, theta, trial_index).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    let mut stream = 0u64;
    for &p in &spec.dims {
        let k = derive_k(p, spec.sparsity_rule)?;
        for &theta in &spec.theta_grid {
            let n = derive_n(theta, p, k, spec.method);
            for trial_index in 0..spec.trials {
                jobs.push(TrialJob {
                    p,
                    k,
                    n,
                    trial_index,
                    stream,
                });
                stream += 1;
            }
        }
    }
    let mut records = jobs
        .par_iter()
        .map(|job| run_trial(spec, job))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        (a.p, a.n, a.trial_index)
            .partial_cmp(&(b.p, b.n, b.trial_index))
            .expect("sort keys are finite")
    });
    Ok(records)
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    const Z: f64 = 1.96;
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = p_hat + z2 / (2.0 * n);
    let radius = Z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - radius) / denom).max(0.0),
        ((center + radius) / denom).min(1.0),
    )
}

/// One summarized grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub method: Method,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub theta: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_ms: f64,
}

/// Groups records by (p, n) and emits one row per grid point, sorted by
/// (p, theta).
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<CurveRow>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to summarize".into()));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.p, r.n)).or_default().push(r);
    }
    Ok(groups
        .into_values()
        .map(|group| {
            let first = group[0];
            let trials = group.len();
            let successes = group.iter().filter(|r| r.success).count();
            let (ci_lo, ci_hi) = wilson_interval(successes, trials);
            let mean_ms =
                group.iter().map(|r| r.elapsed_ms).sum::<f64>() / trials as f64;
            CurveRow {
                method: first.method,
                p: first.p,
                k: first.k,
                n: first.n,
                theta: first.theta,
                trials,
                success_rate: successes as f64 / trials as f64,
                ci_lo,
                ci_hi,
                mean_ms,
            }
        })
        .collect())
}

fn fmt_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub const RECORDS_HEADER: &str = "method,p,k,n,theta,trial_index,seed,stream,success,margin,\
rank_estimate,iterations,primal_residual,dual_residual,converged,objective,elapsed_ms";

/// Writes per-trial records; the nondeterministic timing column is last so
/// the deterministic prefix of each line is directly comparable.
pub fn write_records_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.p,
            r.k,
            r.n,
            r.theta,
            r.trial_index,
            r.seed,
            r.stream,
            r.success,
            fmt_opt(&r.margin),
            fmt_opt(&r.rank_estimate),
            fmt_opt(&r.iterations),
            fmt_opt(&r.primal_residual),
            fmt_opt(&r.dual_residual),
            fmt_opt(&r.converged),
            fmt_opt(&r.objective),
            r.elapsed_ms,
        )?;
    }
    out.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: &str = "method,p,k,n,theta,trials,success_rate,ci_lo,ci_hi,mean_ms";

pub fn write_summary_csv(curves: &[CurveRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SUMMARY_HEADER}")?;
    for c in curves {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            c.method,
            c.p,
            c.k,
            c.n,
            c.theta,
            c.trials,
            c.success_rate,
            c.ci_lo,
            c.ci_hi,
            c.mean_ms,
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back a summary CSV produced by `write_summary_csv`.
pub fn parse_summary_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SUMMARY_HEADER => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "unexpected summary header: {other:?}"
            )));
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::InvalidInput(format!(
                "expected 10 summary fields, got {}",
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|e| Error::InvalidInput(format!("bad count {s:?}: {e}")))
        };
        rows.push(CurveRow {
            method: fields[0].parse()?,
            p: parse_u(fields[1])?,
            k: parse_u(fields[2])?,
            n: parse_u(fields[3])?,
            theta: parse_f(fields[4])?,
            trials: parse_u(fields[5])?,
            success_rate: parse_f(fields[6])?,
            ci_lo: parse_f(fields[7])?,
            ci_hi: parse_f(fields[8])?,
            mean_ms: parse_f(fields[9])?,
        });
    }
    Ok(rows)
}

/// Emits a self-contained Python script that reads exactly the given CSV
/// and renders success-vs-theta curves, one line per dimension.
pub fn write_plot_script(script_path: &Path, csv_path: &Path) -> Result<()> {
    let csv_literal = format!("{:?}", csv_path.display().to_string());
    let script = format!(
        r#"#!/usr/bin/env python3
"""Render success-vs-theta curves from a sweep summary CSV."""
import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV_PATH = {csv_literal}

curves = defaultdict(list)
with open(CSV_PATH, newline="") as fh:
    for row in csv.DictReader(fh):
        curves[int(row["p"])].append(
            (
                float(row["theta"]),
                float(row["success_rate"]),
                float(row["ci_lo"]),
                float(row["ci_hi"]),
            )
        )

fig, ax = plt.subplots(figsize=(7.0, 4.5))
for p in sorted(curves):
    pts = sorted(curves[p])
    theta = [q[0] for q in pts]
    rate = [q[1] for q in pts]
    err_lo = [q[1] - q[2] for q in pts]
    err_hi = [q[3] - q[1] for q in pts]
    ax.errorbar(theta, rate, yerr=[err_lo, err_hi], marker="o", capsize=3, label=f"p={{p}}")

ax.set_xlabel("rescaled sample size")
ax.set_ylabel("empirical success probability")
ax.set_ylim(-0.05, 1.05)
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out_path = os.path.splitext(CSV_PATH)[0] + ".png"
fig.savefig(out_path, dpi=150)
print(f"wrote {{out_path}}")
"#
    );
    std::fs::write(script_path, script)?;
    Ok(())
}

/// Output flavor for `emit_outputs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    PlotScript,
}

/// Writes the summary CSV (`summary.csv`) or the plot script (`plot.py`,
/// referencing that CSV) into `dir`, returning the written path.
pub fn emit_outputs(curves: &[CurveRow], format: OutputFormat, dir: &Path) -> Result<PathBuf> {
    let csv_path = dir.join("summary.csv");
    match format {
        OutputFormat::Csv => {
            write_summary_csv(curves, &csv_path)?;
            Ok(csv_path)
        }
        OutputFormat::PlotScript => {
            let script_path = dir.join("plot.py");
            write_plot_script(&script_path, &csv_path)?;
            Ok(script_path)
        }
    }
}
