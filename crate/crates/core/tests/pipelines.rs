//! Cross-module agreement: simulated individual-level data feeding the
//! summary-statistics estimators must line up with the individual-level
//! estimators.

use mrkit::alice::generate_alice;
use mrkit::individual::{first_stage_f, marginal_associations, tsls_estimate, two_sample_summary};
use mrkit::stats::{mc_se, mean};
use mrkit::summary::{ivw_estimate, ratio_estimate, weighted_median_estimate, MedianOptions, RatioSeMode};
use mrkit::types::{AliceConfig, InstrumentDistribution};

fn valid_config(beta: f64, gamma: Vec<f64>, sde: f64, n: u64) -> AliceConfig {
    let p = gamma.len();
    AliceConfig {
        beta,
        gamma,
        psi: vec![0.0; p],
        phi: vec![0.0; p],
        sigma_delta: 1.0,
        sigma_eps: 1.0,
        sigma_delta_eps: sde,
        n1: n,
        n2: n,
        instruments: InstrumentDistribution::StandardNormal,
    }
}

// Feeding marginal associations into IVW approximates 2SLS when instruments
// are independent and strong.
#[test]
fn ivw_on_marginals_tracks_tsls() {
    let cfg = valid_config(0.7, vec![0.5, 0.4, 0.3], 0.4, 2500);
    let mut diffs = Vec::new();
    for rep in 0..40 {
        let data = generate_alice(&cfg, 1, 9000 + rep).unwrap();
        let tsls = tsls_estimate(&data).unwrap().beta_hat;
        let (summary, _) = marginal_associations(&data).unwrap();
        let ivw = ivw_estimate(&summary).unwrap().beta_hat;
        diffs.push(tsls - ivw);
    }
    let m = mean(&diffs);
    assert!(m.abs() <= 3.0 * mc_se(&diffs).max(1e-4), "mean difference {m}");
}

// Single instrument: ratio, IVW, weighted median, and 2SLS-on-marginals all
// coincide.
#[test]
fn single_instrument_estimators_collapse() {
    let cfg = valid_config(-0.4, vec![0.5], 0.3, 500);
    for rep in 0..20 {
        let data = generate_alice(&cfg, 1, 400 + rep).unwrap();
        let tsls = tsls_estimate(&data).unwrap().beta_hat;
        let (summary, _) = marginal_associations(&data).unwrap();
        let ratio = ratio_estimate(&summary.records[0], RatioSeMode::FirstOrder).unwrap().beta_j;
        let ivw = ivw_estimate(&summary).unwrap().beta_hat;
        let median = weighted_median_estimate(
            &summary,
            MedianOptions { bootstrap_reps: 0, ..Default::default() },
        )
        .unwrap()
        .beta_hat;
        assert!((tsls - ratio).abs() <= 1e-10);
        assert!((ivw - ratio).abs() <= 1e-10);
        assert!((median - ratio).abs() <= 1e-10);
    }
}

// The two-sample summary builder produces the split-sample design the
// two-sample estimators expect.
#[test]
fn two_sample_summary_supports_ivw() {
    let cfg = valid_config(0.5, vec![0.3, 0.25, 0.35, 0.2], 0.5, 4000);
    let mut estimates = Vec::new();
    for rep in 0..30 {
        let s1 = generate_alice(&cfg, 1, 7000 + rep).unwrap();
        let s2 = generate_alice(&cfg, 2, 7000 + rep).unwrap();
        let (summary, report) = two_sample_summary(&s1, &s2).unwrap();
        assert!(report.dropped.is_empty());
        assert_eq!(summary.design, mrkit::Design::TwoSample);
        estimates.push(ivw_estimate(&summary).unwrap().beta_hat);
    }
    let m = mean(&estimates);
    // Strong instruments: two-sample IVW is close to the causal effect.
    assert!((m - 0.5).abs() <= 3.0 * mc_se(&estimates) + 0.01, "mean {m}");
}

// The first-stage F grows with the concentration parameter injected by the
// simulation configuration.
#[test]
fn injected_concentration_moves_first_stage_f() {
    let weak = valid_config(0.0, vec![(0.002f64).sqrt(); 5], 0.0, 2000);
    let strong = valid_config(0.0, vec![(0.05f64).sqrt(); 5], 0.0, 2000);
    let mut weak_f = Vec::new();
    let mut strong_f = Vec::new();
    for rep in 0..30 {
        weak_f.push(first_stage_f(&generate_alice(&weak, 1, rep).unwrap()).unwrap().f_statistic);
        strong_f
            .push(first_stage_f(&generate_alice(&strong, 1, rep).unwrap()).unwrap().f_statistic);
    }
    assert!(mean(&weak_f) < mean(&strong_f));
}
