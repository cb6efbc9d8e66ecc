//! Command-line interface: simulate sample batches, solve single
//! relaxation instances, certify candidate optima, run phase-transition
//! sweeps, and print theoretical thresholds.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spca::decoders::signed_support;
use spca::ensemble::{
    read_batch_csv, sample, sample_covariance, write_batch_csv, BaseCovariance, BatchMetadata,
    SpikedModel,
};
use spca::harness::{
    emit_outputs, load_sweep_spec, run_sweep, summarize, write_records_csv, OutputFormat,
};
use spca::numerics::{eig_sym, Matrix, Rng, SymMatrix};
use spca::sdp::{
    build_certificate, solve, support_block_eigvec, CertificateMode, SolverOptions,
};
use spca::theory::{fano_threshold, min_samples_info, ScalingPoint};
use spca::{Error, Result};

#[derive(Parser)]
#[command(
    name = "spca",
    version,
    about = "Sparse principal component support recovery: samplers, decoders, certificates, and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strong,
    Rankonly,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample batch from a spiked model and write CSV + metadata.
    Simulate {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// RNG stream, for drawing independent batches under one seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Comma-separated support indices; drawn uniformly when absent.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
        /// Comma-separated signs (+1/-1) aligned with --support.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        signs: Option<Vec<i8>>,
        /// "identity" or a path to a square CSV for the off-support block.
        #[arg(long, default_value = "identity")]
        base: String,
        /// Output CSV path; metadata goes next to it with a .toml extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one relaxation instance from a square covariance CSV.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Optional path for the solution matrix as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build and print the dual certificate for a simulated batch.
    Certify {
        /// Batch metadata TOML written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Penalty; defaults to beta / (2k).
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Run a sweep config and write records, summary, and a plot script.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print rescaled sample sizes and the information-theoretic threshold.
    Bounds {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
}

fn read_square_csv(path: &Path) -> Result<SymMatrix> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no matrix rows",
            path.display()
        )));
    }
    let a = Matrix::from_rows(&rows)?;
    if a.rows() != a.cols() {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = 1.0 + a.max_abs();
    for i in 0..a.rows() {
        for j in (i + 1)..a.cols() {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    SymMatrix::from_matrix(&a)
}

fn write_square_csv(m: &SymMatrix, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for i in 0..m.dim() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(
    p: usize,
    k: usize,
    beta: f64,
    n: usize,
    seed: u64,
    stream: u64,
    support: Option<Vec<usize>>,
    signs: Option<Vec<i8>>,
    base: &str,
    out: &Path,
) -> Result<()> {
    let base_cov = if base == "identity" {
        BaseCovariance::Identity
    } else {
        BaseCovariance::ExplicitGamma(read_square_csv(Path::new(base))?)
    };
    let mut rng = Rng::with_stream(seed, stream);
    let model = match (support, signs) {
        (Some(s), Some(g)) => SpikedModel::new(p, k, beta, s, g, base_cov)?,
        (None, None) => {
            if base_cov != BaseCovariance::Identity {
                return Err(Error::InvalidInput(
                    "an explicit off-support block needs --support and --signs".into(),
                ));
            }
            SpikedModel::random_support(p, k, beta, &mut rng)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "--support and --signs must be given together".into(),
            ));
        }
    };
    let batch = sample(&model, n, &mut rng)?;
    write_batch_csv(&batch, out)?;
    let data_name = out
        .file_name()
        .ok_or_else(|| Error::InvalidInput("output path has no file name".into()))?
        .to_string_lossy()
        .into_owned();
    let meta = BatchMetadata::for_batch(&model, &batch, data_name, base.to_string());
    let meta_path = out.with_extension("toml");
    meta.save(&meta_path)?;
    println!("wrote {}", out.display());
    println!("wrote {}", meta_path.display());
    Ok(())
}

fn cmd_solve(
    input: &Path,
    rho: f64,
    tol: f64,
    max_iters: usize,
    step: f64,
    output: Option<&Path>,
) -> Result<()> {
    let sigma = read_square_csv(input)?;
    let opts = SolverOptions {
        rho,
        step,
        max_iters,
        tol_primal: tol,
        tol_dual: tol,
    };
    let sol = solve(&sigma, &opts)?;
    let eig = eig_sym(&sol.z_matrix)?;
    let rank = eig
        .values
        .iter()
        .filter(|&&v| v > 1e-6 * eig.values[0])
        .count();
    println!("objective: {}", sol.objective);
    println!("iterations: {}", sol.iterations);
    println!("converged: {}", sol.converged);
    println!("primal_residual: {}", sol.primal_residual);
    println!("dual_residual: {}", sol.dual_residual);
    println!("trace: {}", sol.z_matrix.trace());
    println!("rank_estimate: {rank}");
    if let Some(path) = output {
        write_square_csv(&sol.z_matrix, path)?;
        println!("wrote {}", path.display());
    }
    if !sol.converged {
        return Err(Error::SolverFailed {
            reason: format!("no convergence within {} iterations", sol.iterations),
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
        });
    }
    Ok(())
}

fn cmd_certify(input: &Path, mode: ModeArg, rho: Option<f64>) -> Result<()> {
    let meta = BatchMetadata::load(input)?;
    let dir = input.parent().unwrap_or_else(|| Path::new("."));
    let data = read_batch_csv(&dir.join(&meta.data))?;
    if data.rows() != meta.n || data.cols() != meta.p {
        return Err(Error::InvalidInput(format!(
            "data file is {}x{}, metadata says {}x{}",
            data.rows(),
            data.cols(),
            meta.n,
            meta.p
        )));
    }
    let base = if meta.base == "identity" {
        BaseCovariance::Identity
    } else {
        BaseCovariance::ExplicitGamma(read_square_csv(&dir.join(&meta.base))?)
    };
    let model = SpikedModel::new(
        meta.p,
        meta.k,
        meta.beta,
        meta.support.clone(),
        meta.signs.clone(),
        base,
    )?;
    let batch = spca::ensemble::SampleBatch {
        n: meta.n,
        data,
        seed: meta.seed,
        stream: meta.stream,
    };
    let sigma_hat = sample_covariance(&batch);
    let rho = rho.unwrap_or(meta.beta / (2.0 * meta.k as f64));
    let z_hat_s = support_block_eigvec(&sigma_hat, &model, rho)?;
    let cert_mode = match mode {
        ModeArg::Strong => CertificateMode::Strong,
        ModeArg::Rankonly => CertificateMode::RankOnly,
    };
    let cert = build_certificate(&sigma_hat, &model, &z_hat_s, rho, cert_mode)?;
    let zero_tol = 0.5 / (meta.k as f64).sqrt();
    let signed = signed_support(&cert.z_hat, zero_tol)?;
    println!(
        "mode: {}",
        match cert.mode {
            CertificateMode::Strong => "strong",
            CertificateMode::RankOnly => "rankonly",
        }
    );
    println!("rho: {rho}");
    println!("blocks_valid: {}", cert.blocks_valid);
    println!("eigvec_check: {}", cert.eigvec_check);
    println!("max_abs_offblock: {}", cert.max_abs_offblock);
    let signs: Vec<String> = signed.values().iter().map(|v| v.to_string()).collect();
    println!("signed_support: {}", signs.join(","));
    Ok(())
}

fn cmd_sweep(config: &Path, out_dir: &Path) -> Result<()> {
    let spec = load_sweep_spec(config)?;
    std::fs::create_dir_all(out_dir)?;
    let records = run_sweep(&spec)?;
    let curves = summarize(&records)?;
    let records_path = out_dir.join("records.csv");
    write_records_csv(&records, &records_path)?;
    let summary_path = emit_outputs(&curves, OutputFormat::Csv, out_dir)?;
    let plot_path = emit_outputs(&curves, OutputFormat::PlotScript, out_dir)?;
    println!("wrote {}", records_path.display());
    println!("wrote {}", summary_path.display());
    println!("wrote {}", plot_path.display());
    Ok(())
}

fn cmd_bounds(p: usize, k: usize, beta: f64, n: Option<usize>, format: FormatArg) -> Result<()> {
    let fano = fano_threshold(beta)?;
    let min_n = min_samples_info(p, k, beta)?;
    let thetas = match n {
        Some(n) => {
            let s = ScalingPoint::new(n, p, k)?;
            Some((s.theta_dia(), s.theta_sdp()))
        }
        None => None,
    };
    match format {
        FormatArg::Csv => {
            println!("p,k,beta,n,theta_dia,theta_sdp,fano_threshold,min_samples_info");
            let (n_str, dia_str, sdp_str) = match (n, thetas) {
                (Some(n), Some((dia, sdp))) => (n.to_string(), dia.to_string(), sdp.to_string()),
                _ => (String::new(), String::new(), String::new()),
            };
            println!("{p},{k},{beta},{n_str},{dia_str},{sdp_str},{fano},{min_n}");
        }
        FormatArg::Text => {
            if let Some((dia, sdp)) = thetas {
                println!("theta_dia:        {dia}");
                println!("theta_sdp:        {sdp}");
            }
            println!("fano_threshold:   {fano}");
            println!("min_samples_info: {min_n}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            p,
            k,
            beta,
            n,
            seed,
            stream,
            support,
            signs,
            base,
            out,
        } => cmd_simulate(p, k, beta, n, seed, stream, support, signs, &base, &out),
        Command::Solve {
            input,
            rho,
            tol,
            max_iters,
            step,
            output,
        } => cmd_solve(&input, rho, tol, max_iters, step, output.as_deref()),
        Command::Certify { input, mode, rho } => cmd_certify(&input, mode, rho),
        Command::Sweep { config, out_dir } => cmd_sweep(&config, &out_dir),
        Command::Bounds {
            p,
            k,
            beta,
            n,
            format,
        } => cmd_bounds(p, k, beta, n, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SolverFailed { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
