//! Cross-module invariants: properties that tie the ensemble, decoders,
//! solver, and tail-bound layers together on shared instances.

mod common;

use common::random_sym;
use spca::decoders::{diag_threshold_decode, sdp_decode, SdpDecodeOptions};
use spca::ensemble::{build_covariance, SpikedModel};
use spca::numerics::{eig_sym, max_eigvec, Rng};
use spca::sdp::{
    build_certificate, solve, support_block_eigvec, verify_optimality, CertificateMode,
    SolverOptions,
};
use spca::theory::{
    chisq_relative_tail_bound, chisq_survival_even, chisq_tail_counts, chisq_upper_bounds,
    noncentral_chisq_bounds, noncentral_chisq_weakened_bound,
};

#[test]
fn eig_sym_reconstruction_and_orthonormality_hold_broadly() {
    let mut rng = Rng::new(61);
    for trial in 0..1000 {
        let p = 1 + trial % 50;
        let a = random_sym(p, &mut rng);
        let eig = eig_sym(&a).unwrap();
        let scale = 1.0 + eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for j in 1..p {
            assert!(eig.values[j - 1] >= eig.values[j], "values not descending");
        }
        for c in 0..p {
            for c2 in c..p {
                let dot: f64 = (0..p).map(|r| eig.vectors.get(r, c) * eig.vectors.get(r, c2)).sum();
                let want = if c == c2 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-9, "p={p}: columns {c},{c2} not orthonormal");
            }
            let first = (0..p).map(|r| eig.vectors.get(r, c)).find(|v| v.abs() > 1e-9);
            if let Some(first) = first {
                assert!(first > 0.0, "p={p}: sign convention violated in column {c}");
            }
        }
        for i in 0..p {
            for j in i..p {
                let recon: f64 = (0..p)
                    .map(|r| eig.values[r] * eig.vectors.get(i, r) * eig.vectors.get(j, r))
                    .sum();
                assert!(
                    (recon - a.get(i, j)).abs() <= 1e-8 * scale,
                    "p={p}: reconstruction off at ({i}, {j})"
                );
            }
        }
    }
}

#[test]
fn population_spike_is_the_unique_leading_eigenvector() {
    let mut rng = Rng::new(62);
    for &(p, k) in &[(10usize, 2usize), (25, 5), (40, 8), (60, 4)] {
        for beta in [0.5, 1.0, 3.0] {
            let model = SpikedModel::random_support(p, k, beta, &mut rng).unwrap();
            let sigma = build_covariance(&model).unwrap();
            let (lam, v) = max_eigvec(&sigma).unwrap();
            assert!((lam - (1.0 + beta)).abs() <= 1e-9, "leading eigenvalue {lam}");
            let z = model.z_star();
            let dot: f64 = v.iter().zip(&z).map(|(a, b)| a * b).sum();
            assert!(dot.abs() >= 1.0 - 1e-9, "spike misaligned, |dot| = {}", dot.abs());
            let eig = eig_sym(&sigma).unwrap();
            assert!(eig.values[1] <= 1.0 + 1e-9, "second eigenvalue {}", eig.values[1]);
        }
    }
}

#[test]
fn decoders_recover_planted_support_from_population() {
    let mut rng = Rng::new(63);
    for &(p, k) in &[(10usize, 2usize), (25, 5), (40, 8)] {
        for beta in [1.0, 3.0] {
            let model = SpikedModel::random_support(p, k, beta, &mut rng).unwrap();
            let sigma = build_covariance(&model).unwrap();

            let diag = diag_threshold_decode(&sigma, k).unwrap();
            assert_eq!(diag.support, model.support(), "diagonal decoder missed");

            let res = sdp_decode(&sigma, k, beta, &SdpDecodeOptions::default()).unwrap();
            assert_eq!(res.support, model.support(), "relaxation decoder missed");
            let signed = res.signed.as_ref().unwrap();
            let mut want = vec![0i8; p];
            for (idx, sg) in model.support().iter().zip(model.signs()) {
                want[*idx] = *sg;
            }
            let got = signed.values();
            let direct = got.iter().zip(&want).all(|(a, b)| a == b);
            let negated = got.iter().zip(&want).all(|(a, b)| *a == -*b);
            assert!(direct || negated, "signed support mismatch: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn noiseless_certificates_validate_end_to_end() {
    let mut rng = Rng::new(64);
    for &(p, k) in &[(12usize, 3usize), (30, 6), (60, 4)] {
        let beta = 3.0;
        let rho = beta / (2.0 * k as f64);
        let model = SpikedModel::random_support(p, k, beta, &mut rng).unwrap();
        let sigma = build_covariance(&model).unwrap();
        let z_hat_s = support_block_eigvec(&sigma, &model, rho).unwrap();

        for mode in [CertificateMode::Strong, CertificateMode::RankOnly] {
            let cert = build_certificate(&sigma, &model, &z_hat_s, rho, mode).unwrap();
            assert!(cert.blocks_valid, "p={p}: block bound failed in {mode:?}");
            assert!(cert.eigvec_check, "p={p}: eigenvector check failed in {mode:?}");
            assert!(cert.max_abs_offblock <= 1.0 + 1e-9);
        }

        let cert = build_certificate(&sigma, &model, &z_hat_s, rho, CertificateMode::RankOnly)
            .unwrap();
        let sol = solve(&sigma, &SolverOptions::with_rho(rho)).unwrap();
        let report = verify_optimality(&sigma, &sol.z_matrix, rho, &cert).unwrap();
        assert!(report.all_ok(), "p={p}: optimality report {report:?}");
    }
}

#[test]
fn central_bounds_dominate_exact_survival() {
    // The closed-form survival series gives the exact tail for even
    // degrees, so the concentration bounds must sit above it pointwise.
    for &d in &[4usize, 10, 20, 50] {
        for x in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let b = chisq_upper_bounds(d, x).unwrap();
            let t_hi = b.upper_dev / d as f64;
            let tail = chisq_survival_even(d, t_hi).unwrap();
            assert!(
                tail <= b.bound + 1e-12,
                "d={d} x={x}: upper tail {tail} exceeds bound {}",
                b.bound
            );
            let t_lo = -b.lower_dev / d as f64;
            if t_lo > -1.0 {
                let lower_tail = 1.0 - chisq_survival_even(d, t_lo).unwrap();
                assert!(
                    lower_tail <= b.bound + 1e-12,
                    "d={d} x={x}: lower tail {lower_tail} exceeds bound {}",
                    b.bound
                );
            }
        }
    }
    for &d in &[10usize, 20, 50, 100] {
        for x in [0.05, 0.2, 0.45] {
            let (_, bound) = chisq_relative_tail_bound(d, x).unwrap();
            let tail = chisq_survival_even(d, x).unwrap();
            assert!(
                tail <= bound + 1e-12,
                "d={d} x={x}: relative tail {tail} exceeds bound {bound}"
            );
        }
    }
}

#[test]
fn weakened_noncentral_bound_dominates_the_sharp_one() {
    // The weakened form trades a larger threshold for a simpler exponent;
    // at the matching exponent the sharp threshold must come in lower.
    let c = 1.5;
    for &d in &[10usize, 40, 100] {
        for nu_factor in [0.0, 1.0, c] {
            let nu = nu_factor * d as f64;
            for delta in [0.1, 0.3, 0.7] {
                let (thr_weak, bound_weak) =
                    noncentral_chisq_weakened_bound(d, nu, delta, c).unwrap();
                let x = delta * d as f64 / (1.0 + 2.0 * c);
                let sharp = noncentral_chisq_bounds(d, nu, x).unwrap();
                let thr_sharp = (d as f64 + nu) + sharp.upper_dev;
                assert!(
                    thr_sharp <= thr_weak + 1e-9,
                    "d={d} nu={nu} delta={delta}: sharp threshold above weakened"
                );
                assert!((sharp.bound - bound_weak).abs() <= 1e-12, "exponents diverged");
            }
        }
    }
}

#[test]
fn mc_tail_estimates_match_exact_survival() {
    let mut rng = Rng::new(65);
    let d = 6;
    let x = 1.0;
    let b = chisq_upper_bounds(d, x).unwrap();
    let upper = d as f64 + b.upper_dev;
    let lower = d as f64 - b.lower_dev;
    let (hi, lo) = chisq_tail_counts(d, 0.0, upper, lower, 200_000, &mut rng).unwrap();
    assert!(hi.p_hat <= b.bound + 3.0 * hi.std_err);
    assert!(lo.p_hat <= b.bound + 3.0 * lo.std_err);
    let exact = chisq_survival_even(d, b.upper_dev / d as f64).unwrap();
    assert!(
        (hi.p_hat - exact).abs() <= 4.0 * hi.std_err.max(1e-4),
        "MC {} vs exact {exact}",
        hi.p_hat
    );
}

#[test]
fn sweep_streams_are_unique_and_exhaustive() {
    use spca::harness::{run_sweep, Method, SparsityRule, SweepSpec};
    let spec = SweepSpec {
        method: Method::Diag,
        dims: vec![15, 20],
        sparsity_rule: SparsityRule::Fixed { k: 2 },
        beta: 2.0,
        theta_grid: vec![0.5, 2.0],
        trials: 3,
        base_seed: 99,
        score_mode: None,
        solver_opts: None,
    };
    let records = run_sweep(&spec).unwrap();
    assert_eq!(records.len(), 2 * 2 * 3);
    let mut streams: Vec<u64> = records.iter().map(|r| r.stream).collect();
    streams.sort_unstable();
    let want: Vec<u64> = (0..records.len() as u64).collect();
    assert_eq!(streams, want, "streams must enumerate jobs exactly once");
    assert!(records.iter().all(|r| r.seed == 99));
}
