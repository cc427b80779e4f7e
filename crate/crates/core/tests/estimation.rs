//! Large-sample behaviour of the block estimator against the exact second-order
//! statistics of the generating model. Tolerances are five standard errors
//! unless noted.

use granger_core::blockdetect::{assemble, gci, normal_equations, BlockEstimate, OracleSigma, SigmaSource};
use granger_core::model::{
    noncentrality, reduced_prediction_variance, theoretical_correlations, NoiseConfig, SecondOrderStats, VarModel,
};
use granger_core::seqdetect::{SeqConfig, SeqDetector};
use granger_core::simulate::{corrupt, derive_seed, generate};
use granger_core::Complex64;

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn sample_covariance_converges_to_joint_covariance() {
    let m = VarModel::<Complex64>::toy(0.25);
    let noise = NoiseConfig::new(1.0, 0.5).unwrap();
    let n = 100_000;
    let p = corrupt(&generate(&m, n, 1, 100).unwrap(), &noise, 2).unwrap();
    let (phi, _) = normal_equations(&assemble(&p.x, &p.y, 1, n).unwrap());
    let r = SecondOrderStats::new(&m, &noise).unwrap().r_full;
    // entries have variance ~ r_aa r_bb / N <= 2.1^2 / 1e5
    let tol = 5.0 * 2.1 / (n as f64).sqrt();
    for (a, b) in phi.iter().zip(r.iter()) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }
}

#[test]
fn weights_and_residual_variance_are_consistent() {
    let m = VarModel::<Complex64>::toy(0.25);
    let stats = SecondOrderStats::new(&m, &NoiseConfig::noiseless()).unwrap();
    let n = 100_000;
    let p = generate(&m, n, 5, 100).unwrap();
    let est = BlockEstimate::from_samples(&p.x, &p.y, 1, n).unwrap();
    let se_w = (stats.sigma2_phi() * stats.sigma[(0, 0)].re / (n - 1) as f64).sqrt();
    assert!((est.w_y()[0] - Complex64::new(0.25, 0.0)).norm() < 5.0 * se_w);
    // |eta|^2 is unit exponential for complex unit-variance innovations
    assert!((est.sigma2_phi_hat - 1.0).abs() < 5.0 / (n as f64).sqrt());

    let noisy = NoiseConfig::new(0.0, 1.0).unwrap();
    let stats_noisy = SecondOrderStats::new(&m, &noisy).unwrap();
    let q = corrupt(&p, &noisy, 6).unwrap();
    let est_noisy = BlockEstimate::from_samples(&q.x, &q.y, 1, n).unwrap();
    assert!(est_noisy.sigma2_phi_hat > est.sigma2_phi_hat);
    assert!((est_noisy.sigma2_phi_hat - stats_noisy.sigma2_phi()).abs() < 5.0 * 1.1 / (n as f64).sqrt());
}

#[test]
fn statistic_means_match_chi_squared_laws() {
    let trials = 10_000u64;
    let n = 200;
    let null = VarModel::<Complex64>::toy(0.0);
    let t0: Vec<f64> = (0..trials)
        .map(|i| {
            let p = generate(&null, n, derive_seed(11, 0, i), 100).unwrap();
            BlockEstimate::from_samples(&p.x, &p.y, 1, n)
                .unwrap()
                .test_statistic(&SigmaSource::Plugin)
                .unwrap()
        })
        .collect();
    let (m0, se0) = mean_and_se(&t0);
    assert!((m0 - 2.0).abs() < 5.0 * se0, "null mean {m0} +- {se0}");

    let alt = VarModel::<Complex64>::toy(0.1);
    let stats = SecondOrderStats::new(&alt, &NoiseConfig::noiseless()).unwrap();
    let oracle = SigmaSource::Oracle(OracleSigma::from(&stats));
    let t1: Vec<f64> = (0..trials)
        .map(|i| {
            let p = generate(&alt, n, derive_seed(11, 1, i), 100).unwrap();
            BlockEstimate::from_samples(&p.x, &p.y, 1, n)
                .unwrap()
                .test_statistic(&oracle)
                .unwrap()
        })
        .collect();
    let (m1, se1) = mean_and_se(&t1);
    let expected = 2.0 + 2.0 * noncentrality(&stats, n).unwrap();
    assert!(
        (m1 - expected).abs() < 5.0 * se1,
        "alternative mean {m1} +- {se1}, expected {expected}"
    );
}

#[test]
fn gci_approaches_reduced_model_log_ratio() {
    let m = VarModel::<f64>::new(vec![0.3], vec![0.6], vec![0.7], 1.0, 1.0).unwrap();
    let corr = theoretical_correlations(&m, &NoiseConfig::noiseless(), 4).unwrap();
    let expected = (reduced_prediction_variance(&corr).unwrap() / 1.0).ln();
    let n = 200_000;
    let p = generate(&m, n, 8, 100).unwrap();
    let g = gci(&p.x, &p.y, 1, n).unwrap();
    assert!((g - expected).abs() < 0.02, "gci {g} vs {expected}");

    let unrelated = VarModel::<f64>::new(vec![0.3], vec![0.0], vec![0.7], 1.0, 1.0).unwrap();
    let q = generate(&unrelated, n, 9, 100).unwrap();
    assert!(gci(&q.x, &q.y, 1, n).unwrap().abs() < 1e-3);
}

#[test]
fn estimation_error_shrinks_at_root_n() {
    let m = VarModel::<Complex64>::toy(0.25);
    let sizes = [(100usize, 400u64), (1_000, 200), (10_000, 80), (100_000, 40)];
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&(n, trials)| {
            let ms = (0..trials)
                .map(|i| {
                    let p = generate(&m, n, derive_seed(21, n as u64, i), 100).unwrap();
                    let w = BlockEstimate::from_samples(&p.x, &p.y, 1, n).unwrap().w_hat;
                    (w[0].norm_sqr()) + (w[1] - Complex64::new(0.25, 0.0)).norm_sqr()
                })
                .sum::<f64>()
                / trials as f64;
            ((n as f64).ln(), 0.5 * ms.ln())
        })
        .collect();
    let mx = points.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = points.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
}

#[test]
fn rls_inverse_covariance_stays_positive_definite() {
    let m = VarModel::<f64>::new(vec![0.5, -0.2], vec![0.3, 0.1], vec![0.6, 0.1], 1.0, 2.0).unwrap();
    let n = 100_000;
    let p = generate(&m, n, 12, 200).unwrap();
    let mut det = SeqDetector::<f64>::new(SeqConfig::new(2)).unwrap();
    for i in 0..n {
        det.update(p.x[i], p.y[i]).unwrap();
    }
    let pm = det.inverse_covariance();
    assert_eq!(pm, &pm.transpose());
    let min_eig = pm.clone().symmetric_eigenvalues().min();
    assert!(min_eig > 0.0, "{min_eig}");
}
