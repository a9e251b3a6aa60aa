//! ALICE-model data generation and the Monte-Carlo engine that checks the
//! weak-instrument bias approximations.
//!
//! The generator draws standardized instruments, correlated structural
//! errors, and builds `D = Z gamma + delta`, `Y = beta D + Z pi + eps`.
//! `theoretical_mean` evaluates the closed-form approximations for the mean
//! of each estimator under valid instruments; `run_bias_experiment` compares
//! them against replicated simulation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::error::{MrError, Result};
use crate::individual::{marginal_associations, ols_estimate, ssiv_estimate, tsls_estimate, two_sample_summary};
use crate::stats::{derive_seed, pairwise_sum};
use crate::summary::ivw_estimate;
use crate::types::{AliceConfig, IndividualDataset, InstrumentDistribution};

/// Draws one sample from the configured model; bit-deterministic under
/// `(seed, sample_index)`.
///
/// Instruments are standardized in distribution: standard normal columns, or
/// centered and scaled Binomial(2, maf) dosages in genotype mode. The
/// `standardized` flag on the result stays false because sample moments are
/// not exactly zero and one.
pub fn generate_alice(config: &AliceConfig, sample_index: u8, seed: u64) -> Result<IndividualDataset> {
    let report = config.validate();
    if !report.is_empty() {
        return Err(MrError::InvalidConfig(report.join("; ")));
    }
    let n = match sample_index {
        1 => config.n1 as usize,
        2 => config.n2 as usize,
        other => {
            return Err(MrError::InvalidConfig(format!("sample index must be 1 or 2, got {other}")))
        }
    };
    let p = config.p();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, sample_index as u64));

    // Column-by-column fill keeps the draw order part of the contract.
    let mut z = DMatrix::zeros(n, p);
    match &config.instruments {
        InstrumentDistribution::StandardNormal => {
            for j in 0..p {
                for i in 0..n {
                    z[(i, j)] = StandardNormal.sample(&mut rng);
                }
            }
        }
        InstrumentDistribution::Genotype { maf } => {
            for j in 0..p {
                let m = maf[j];
                let scale = (2.0 * m * (1.0 - m)).sqrt();
                let p0 = (1.0 - m) * (1.0 - m);
                let p01 = p0 + 2.0 * m * (1.0 - m);
                for i in 0..n {
                    let u: f64 = rng.gen();
                    let dosage = if u < p0 {
                        0.0
                    } else if u < p01 {
                        1.0
                    } else {
                        2.0
                    };
                    z[(i, j)] = (dosage - 2.0 * m) / scale;
                }
            }
        }
    }

    // Bivariate normal errors by Cholesky of the 2x2 covariance.
    let c21 = config.sigma_delta_eps / config.sigma_delta;
    let c22 = (config.sigma_eps * config.sigma_eps - c21 * c21).max(0.0).sqrt();
    let mut delta = DVector::zeros(n);
    let mut eps = DVector::zeros(n);
    for i in 0..n {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        delta[i] = config.sigma_delta * a;
        eps[i] = c21 * a + c22 * b;
    }

    let gamma = DVector::from_vec(config.gamma.clone());
    let pi = DVector::from_vec(config.pi());
    let exposure = &z * &gamma + &delta;
    let outcome = &exposure * config.beta + &z * &pi + &eps;

    Ok(IndividualDataset { outcome, exposure, instruments: z, standardized: false })
}

/// Estimators covered by the bias analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BiasEstimator {
    /// Confounded least squares on sample 1.
    #[serde(rename = "ols")]
    Ols,
    /// One-sample two-stage least squares on sample 1.
    #[serde(rename = "tsls-1s")]
    Tsls1s,
    /// One-sample IVW on sample 1 marginal associations.
    #[serde(rename = "ivw-1s")]
    Ivw1s,
    /// Split-sample IV: first stage in sample 1, outcome stage in sample 2.
    #[serde(rename = "ssiv-2s")]
    Ssiv2s,
    /// Two-sample IVW: exposure side from sample 1, outcome side from sample 2.
    #[serde(rename = "ivw-2s")]
    Ivw2s,
}

impl BiasEstimator {
    pub const ALL: [BiasEstimator; 5] = [
        BiasEstimator::Ols,
        BiasEstimator::Tsls1s,
        BiasEstimator::Ivw1s,
        BiasEstimator::Ssiv2s,
        BiasEstimator::Ivw2s,
    ];

    pub fn is_two_sample(self) -> bool {
        matches!(self, BiasEstimator::Ssiv2s | BiasEstimator::Ivw2s)
    }
}

impl fmt::Display for BiasEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BiasEstimator::Ols => "ols",
            BiasEstimator::Tsls1s => "tsls-1s",
            BiasEstimator::Ivw1s => "ivw-1s",
            BiasEstimator::Ssiv2s => "ssiv-2s",
            BiasEstimator::Ivw2s => "ivw-2s",
        };
        f.write_str(s)
    }
}

impl FromStr for BiasEstimator {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ols" => Ok(BiasEstimator::Ols),
            "tsls-1s" | "tsls" | "2sls" => Ok(BiasEstimator::Tsls1s),
            "ivw-1s" => Ok(BiasEstimator::Ivw1s),
            "ssiv-2s" | "ssiv" => Ok(BiasEstimator::Ssiv2s),
            "ivw-2s" => Ok(BiasEstimator::Ivw2s),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

/// Predicted mean of the estimator under the configured model, valid
/// instruments only.
///
/// The IVW formulas involve the estimated association SEs; those are replaced
/// by their large-sample limits computed from the configuration:
/// `se_Gamma_j^2 ~ Var(e) / n` with `Var(e) = beta^2 s_d^2 + 2 beta s_de +
/// s_e^2`, and `se_gamma_j^2 ~ s_d^2 / n` (treating the other instruments'
/// contribution to the marginal residual as negligible for weak instruments).
pub fn theoretical_mean(config: &AliceConfig, estimator: BiasEstimator) -> Result<f64> {
    if !config.all_valid() {
        return Err(MrError::FormulaPrecondition(
            "bias approximations assume all instruments are valid (pi = 0)".to_string(),
        ));
    }
    let beta = config.beta;
    let p = config.p() as f64;
    let g2 = config.gamma_norm_sq();
    let sd2 = config.sigma_delta * config.sigma_delta;
    let sde = config.sigma_delta_eps;
    let n1 = config.n1 as f64;
    let n2 = config.n2 as f64;
    let var_e = beta * beta * sd2 + 2.0 * beta * sde + config.sigma_eps * config.sigma_eps;

    let value = match estimator {
        BiasEstimator::Ols => beta + sde / (g2 + sd2),
        BiasEstimator::Tsls1s => beta + sde / (n1 * g2 / p + sd2),
        BiasEstimator::Ssiv2s => beta * g2 / (g2 + p * sd2 / n1),
        BiasEstimator::Ivw1s => {
            let se_big2 = var_e / n1;
            let se_gamma2 = sd2 / n1;
            let num: f64 = config.gamma.iter().map(|_| 1.0 / se_big2).sum();
            let den: f64 = config.gamma.iter().map(|g| (g * g + se_gamma2) / se_big2).sum();
            beta + sde / n1 * num / den
        }
        BiasEstimator::Ivw2s => {
            let se_big2 = var_e / n2;
            let se_gamma2 = sd2 / n1;
            let num: f64 = config.gamma.iter().map(|g| g * g / se_big2).sum();
            let den: f64 = config.gamma.iter().map(|g| (g * g + se_gamma2) / se_big2).sum();
            beta * num / den
        }
    };
    Ok(value)
}

/// Predicted deviation of the estimator's mean from the causal effect.
pub fn theoretical_bias(config: &AliceConfig, estimator: BiasEstimator) -> Result<f64> {
    Ok(theoretical_mean(config, estimator)? - config.beta)
}

/// One replicated bias experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasExperimentConfig {
    pub alice: AliceConfig,
    pub estimators: Vec<BiasEstimator>,
    pub replicates: usize,
    pub seed: u64,
}

impl BiasExperimentConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut report = self.alice.validate();
        if self.replicates < 2 {
            report.push("at least 2 replicates required".to_string());
        }
        if self.estimators.is_empty() {
            report.push("at least one estimator required".to_string());
        }
        report
    }
}

/// Summary for one estimator across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: BiasEstimator,
    /// Mean of the estimator over successful replicates.
    pub mean: f64,
    /// Monte-Carlo standard error of that mean.
    pub mc_se: f64,
    /// Closed-form predicted mean; absent when instruments are invalid.
    pub predicted_mean: Option<f64>,
    /// `|mean - predicted| <= max(0.2 |predicted - beta|, 3 mc_se)`.
    pub within_tolerance: Option<bool>,
    pub n_failures: usize,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub replicates: usize,
    pub seed: u64,
    pub beta: f64,
    pub estimators: Vec<EstimatorSummary>,
    /// True when any estimator failed in more than 10% of replicates.
    pub unstable: bool,
}

fn run_estimator(
    estimator: BiasEstimator,
    sample1: &IndividualDataset,
    sample2: Option<&IndividualDataset>,
) -> Result<f64> {
    match estimator {
        BiasEstimator::Ols => Ok(ols_estimate(sample1)?.beta_hat),
        BiasEstimator::Tsls1s => Ok(tsls_estimate(sample1)?.beta_hat),
        BiasEstimator::Ivw1s => {
            let (summary, _) = marginal_associations(sample1)?;
            Ok(ivw_estimate(&summary)?.beta_hat)
        }
        BiasEstimator::Ssiv2s => {
            let s2 = sample2.expect("two-sample estimator requires sample 2");
            Ok(ssiv_estimate(sample1, s2)?.beta_hat)
        }
        BiasEstimator::Ivw2s => {
            let s2 = sample2.expect("two-sample estimator requires sample 2");
            let (summary, _) = two_sample_summary(sample1, s2)?;
            Ok(ivw_estimate(&summary)?.beta_hat)
        }
    }
}

/// Runs the experiment: per replicate, generate sample 1 (and sample 2 when a
/// two-sample estimator is requested), evaluate every requested estimator,
/// then aggregate with order-independent pairwise summation. Replicates run
/// in parallel; each draws from its own derived seed, so the report depends
/// only on the configuration and master seed.
pub fn run_bias_experiment(cfg: &BiasExperimentConfig) -> Result<BiasReport> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(MrError::InvalidConfig(problems.join("; ")));
    }
    let needs_second = cfg.estimators.iter().any(|e| e.is_two_sample());

    let per_replicate: Vec<Vec<Option<f64>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(cfg.seed, rep as u64);
            let sample1 = match generate_alice(&cfg.alice, 1, rep_seed) {
                Ok(s) => s,
                Err(_) => return vec![None; cfg.estimators.len()],
            };
            let sample2 = if needs_second {
                match generate_alice(&cfg.alice, 2, rep_seed) {
                    Ok(s) => Some(s),
                    Err(_) => return vec![None; cfg.estimators.len()],
                }
            } else {
                None
            };
            cfg.estimators
                .iter()
                .map(|&est| run_estimator(est, &sample1, sample2.as_ref()).ok())
                .collect()
        })
        .collect();

    let mut summaries = Vec::with_capacity(cfg.estimators.len());
    let mut unstable = false;
    for (idx, &estimator) in cfg.estimators.iter().enumerate() {
        let values: Vec<f64> =
            per_replicate.iter().filter_map(|row| row[idx]).collect();
        let n_failures = cfg.replicates - values.len();
        if n_failures * 10 > cfg.replicates {
            unstable = true;
        }
        if values.len() < 2 {
            unstable = true;
            summaries.push(EstimatorSummary {
                estimator,
                mean: f64::NAN,
                mc_se: f64::NAN,
                predicted_mean: None,
                within_tolerance: None,
                n_failures,
                n_used: values.len(),
            });
            continue;
        }
        let n = values.len() as f64;
        let mean = pairwise_sum(&values) / n;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let mc_se = (pairwise_sum(&sq) / (n - 1.0) / n).sqrt();
        let predicted_mean = theoretical_mean(&cfg.alice, estimator).ok();
        let within_tolerance = predicted_mean.map(|pred| {
            let tol = (0.2 * (pred - cfg.alice.beta).abs()).max(3.0 * mc_se);
            (mean - pred).abs() <= tol
        });
        summaries.push(EstimatorSummary {
            estimator,
            mean,
            mc_se,
            predicted_mean,
            within_tolerance,
            n_failures,
            n_used: values.len(),
        });
    }

    Ok(BiasReport {
        replicates: cfg.replicates,
        seed: cfg.seed,
        beta: cfg.alice.beta,
        estimators: summaries,
        unstable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mc_se, mean};

    fn config(beta: f64, gamma: Vec<f64>, sde: f64, n1: u64, n2: u64) -> AliceConfig {
        let p = gamma.len();
        AliceConfig {
            beta,
            gamma,
            psi: vec![0.0; p],
            phi: vec![0.0; p],
            sigma_delta: 1.0,
            sigma_eps: 1.0,
            sigma_delta_eps: sde,
            n1,
            n2,
            instruments: InstrumentDistribution::StandardNormal,
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = config(0.5, vec![0.1, 0.2], 0.3, 200, 100);
        let a = generate_alice(&cfg, 1, 42).unwrap();
        let b = generate_alice(&cfg, 1, 42).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.exposure, b.exposure);
        assert_eq!(a.instruments, b.instruments);
        let c = generate_alice(&cfg, 2, 42).unwrap();
        assert_ne!(a.outcome.len(), c.outcome.len());
    }

    #[test]
    fn sample_moments_are_standardized() {
        let n = 50_000u64;
        let cfg = config(0.5, vec![0.1, 0.2, 0.05], 0.3, n, 10);
        let data = generate_alice(&cfg, 1, 7).unwrap();
        let tol = 4.0 / (n as f64).sqrt();
        for j in 0..3 {
            let col = data.instruments.column(j);
            let m = col.mean();
            let var = col.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / (n as f64 - 1.0);
            assert!(m.abs() < tol, "column {j} mean {m}");
            assert!((var - 1.0).abs() < tol, "column {j} variance {var}");
        }
    }

    #[test]
    fn genotype_columns_are_standardized_too() {
        let n = 50_000u64;
        let mut cfg = config(0.5, vec![0.1, 0.2], 0.0, n, 10);
        cfg.instruments = InstrumentDistribution::Genotype { maf: vec![0.3, 0.08] };
        let data = generate_alice(&cfg, 1, 11).unwrap();
        let tol = 4.0 / (n as f64).sqrt();
        for j in 0..2 {
            let col = data.instruments.column(j);
            let m = col.mean();
            let var = col.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / (n as f64 - 1.0);
            assert!(m.abs() < tol);
            assert!((var - 1.0).abs() < 2.0 * tol, "genotype variance {var}");
        }
    }

    #[test]
    fn error_covariance_matches_configuration() {
        let n = 1_000_000u64;
        let sde = 0.5;
        let beta = 0.7;
        let cfg = config(beta, vec![0.1, 0.2], sde, n, 10);
        let data = generate_alice(&cfg, 1, 3).unwrap();
        // Recover the true errors using the known structural coefficients.
        let gamma = DVector::from_vec(cfg.gamma.clone());
        let delta = &data.exposure - &data.instruments * &gamma;
        let eps = &data.outcome - &data.exposure * beta;
        let md = delta.mean();
        let me = eps.mean();
        let cov = delta
            .iter()
            .zip(eps.iter())
            .map(|(d, e)| (d - md) * (e - me))
            .sum::<f64>()
            / (n as f64 - 1.0);
        // sd of the sample covariance is about sqrt((1 + rho^2) / n).
        let tol = 5.0 * ((1.0 + sde * sde) / n as f64).sqrt();
        assert!((cov - sde).abs() < tol, "covariance {cov} vs {sde}");
    }

    #[test]
    fn invalid_covariance_is_rejected() {
        let mut cfg = config(0.5, vec![0.1], 0.0, 100, 100);
        cfg.sigma_delta_eps = 2.0;
        assert!(matches!(generate_alice(&cfg, 1, 0), Err(MrError::InvalidConfig(_))));
    }

    #[test]
    fn tsls_bias_formula_arithmetic() {
        // sde = 0.5, sd = 1, n = 1000, p = 10, |gamma|^2 = 0.01 -> 0.25.
        let g = (0.001f64).sqrt();
        let cfg = config(0.0, vec![g; 10], 0.5, 1000, 1000);
        let bias = theoretical_bias(&cfg, BiasEstimator::Tsls1s).unwrap();
        assert!((bias - 0.25).abs() < 1e-12, "{bias}");
    }

    #[test]
    fn ssiv_expectation_formula_arithmetic() {
        // beta = 1, |gamma|^2 = 0.1, p = 10, sd^2 = 1, n1 = 1000 -> 10/11.
        let g = (0.01f64).sqrt();
        let cfg = config(1.0, vec![g; 10], 0.0, 1000, 1000);
        let mean = theoretical_mean(&cfg, BiasEstimator::Ssiv2s).unwrap();
        assert!((mean - 10.0 / 11.0).abs() < 1e-12, "{mean}");
    }

    #[test]
    fn zero_error_covariance_means_zero_bias() {
        let cfg = config(0.8, vec![0.1; 5], 0.0, 500, 500);
        assert_eq!(theoretical_bias(&cfg, BiasEstimator::Tsls1s).unwrap(), 0.0);
        assert_eq!(theoretical_bias(&cfg, BiasEstimator::Ols).unwrap(), 0.0);
    }

    #[test]
    fn invalid_instruments_reject_the_formulas() {
        let mut cfg = config(0.8, vec![0.1; 5], 0.0, 500, 500);
        cfg.psi[2] = 0.3;
        assert!(matches!(
            theoretical_bias(&cfg, BiasEstimator::Tsls1s),
            Err(MrError::FormulaPrecondition(_))
        ));
    }

    #[test]
    fn strong_instruments_recover_beta_for_every_estimator() {
        let beta = 1.0;
        let g = (3000.0f64 / 3.0).sqrt();
        let cfg = BiasExperimentConfig {
            alice: config(beta, vec![g; 3], 0.5, 2000, 2000),
            estimators: BiasEstimator::ALL.to_vec(),
            replicates: 30,
            seed: 97,
        };
        let report = run_bias_experiment(&cfg).unwrap();
        assert!(!report.unstable);
        for s in &report.estimators {
            assert!(
                (s.mean - beta).abs() <= 3.0 * s.mc_se,
                "{}: mean {} vs beta {beta} (mc se {})",
                s.estimator,
                s.mean,
                s.mc_se
            );
        }
    }

    #[test]
    fn weak_setting_shows_conclusion_five_directions() {
        let beta = 0.5;
        let sde = 0.5;
        let g = (0.005f64 / 10.0).sqrt();
        let cfg = BiasExperimentConfig {
            alice: config(beta, vec![g; 10], sde, 2000, 2000),
            estimators: vec![BiasEstimator::Tsls1s, BiasEstimator::Ssiv2s],
            replicates: 300,
            seed: 5,
        };
        let report = run_bias_experiment(&cfg).unwrap();
        let tsls = &report.estimators[0];
        let ssiv = &report.estimators[1];
        // One-sample 2SLS drifts in the direction of the confounding.
        assert!(tsls.mean - beta > 3.0 * tsls.mc_se, "tsls mean {}", tsls.mean);
        // Split-sample IV attenuates toward zero.
        assert!(ssiv.mean.abs() < beta.abs(), "ssiv mean {}", ssiv.mean);
    }

    #[test]
    fn minimal_two_replicate_run_emits_all_fields() {
        let cfg = BiasExperimentConfig {
            alice: config(0.5, vec![0.3, 0.2], 0.2, 150, 150),
            estimators: BiasEstimator::ALL.to_vec(),
            replicates: 2,
            seed: 1,
        };
        let report = run_bias_experiment(&cfg).unwrap();
        assert_eq!(report.replicates, 2);
        assert_eq!(report.estimators.len(), 5);
        for s in &report.estimators {
            assert!(s.mean.is_finite());
            assert!(s.mc_se.is_finite());
            assert!(s.predicted_mean.is_some());
            assert_eq!(s.n_failures, 0);
        }
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let cfg = BiasExperimentConfig {
            alice: config(0.5, vec![0.3, 0.2], 0.2, 120, 120),
            estimators: vec![BiasEstimator::Tsls1s, BiasEstimator::Ivw1s],
            replicates: 8,
            seed: 33,
        };
        let a = run_bias_experiment(&cfg).unwrap();
        let b = run_bias_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ivw_tracks_tsls_on_strong_independent_instruments() {
        let beta = 0.6;
        let cfg = BiasExperimentConfig {
            alice: config(beta, vec![0.5, 0.4, 0.6], 0.4, 3000, 3000),
            estimators: vec![BiasEstimator::Tsls1s, BiasEstimator::Ivw1s],
            replicates: 40,
            seed: 13,
        };
        let report = run_bias_experiment(&cfg).unwrap();
        let diff = (report.estimators[0].mean - report.estimators[1].mean).abs();
        let band = 3.0 * (report.estimators[0].mc_se + report.estimators[1].mc_se);
        assert!(diff <= band, "tsls vs ivw differ by {diff} (band {band})");
    }

    #[test]
    fn mc_helpers_are_consistent() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!(mc_se(&xs) > 0.0);
    }
}
