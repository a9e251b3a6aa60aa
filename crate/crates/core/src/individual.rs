//! Estimators and diagnostics on individual-level data: OLS, two-stage least
//! squares, the first-stage F statistic, and per-instrument marginal
//! associations.
//!
//! All regressions center variables instead of carrying an intercept column,
//! so the textbook formulas apply verbatim. Linear systems are solved through
//! QR decompositions, never explicit inverses.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MrError, Result};
use crate::stats::two_sided_p;
use crate::types::{
    Design, DiagValue, EstimateResult, IndividualDataset, Method, SnpRecord, SummaryDataset,
};

/// First-stage F statistic below this is flagged as weak.
pub const WEAK_F_THRESHOLD: f64 = 10.0;

fn centered_vector(v: &DVector<f64>) -> DVector<f64> {
    let mean = v.mean();
    v.map(|x| x - mean)
}

fn centered_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.apply(|x| *x -= mean);
    }
    out
}

/// Least squares through QR with a relative rank check on the diagonal of R.
fn qr_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let p = a.ncols();
    if a.nrows() < p {
        return Err(MrError::CollinearInstruments);
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let max_diag = r.diagonal().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max_diag == 0.0 || r.diagonal().iter().any(|x| x.abs() <= 1e-10 * max_diag) {
        return Err(MrError::CollinearInstruments);
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, p).into_owned();
    r.solve_upper_triangular(&rhs).ok_or(MrError::CollinearInstruments)
}

/// Least-squares slope of the outcome on the exposure with homoskedastic SE.
pub fn ols_estimate(data: &IndividualDataset) -> Result<EstimateResult> {
    let n = data.n();
    if n < 2 {
        return Err(MrError::InvalidInput(format!("need at least 2 observations, got {n}")));
    }
    let yc = centered_vector(&data.outcome);
    let dc = centered_vector(&data.exposure);
    let sdd = dc.dot(&dc);
    if !(sdd > 0.0) {
        return Err(MrError::DegenerateExposure);
    }
    let beta = dc.dot(&yc) / sdd;
    let mut result = EstimateResult::new(Method::Ols, beta).with_diag("n", DiagValue::Int(n as i64));
    if n > 2 {
        let rss = (0..n).map(|i| (yc[i] - beta * dc[i]).powi(2)).sum::<f64>();
        let sigma2 = rss / (n as f64 - 2.0);
        result = result.with_wald_ci((sigma2 / sdd).sqrt(), 0.05);
        result.beta_hat = beta;
    }
    Ok(result)
}

struct FirstStage {
    fitted: DVector<f64>,
    fitted_ss: f64,
    sigma2_delta: f64,
    n: usize,
    p: usize,
}

fn first_stage(data: &IndividualDataset) -> Result<FirstStage> {
    let n = data.n();
    let p = data.p();
    if n < p + 2 {
        return Err(MrError::InvalidInput(format!(
            "need at least p + 2 = {} observations, got {n}",
            p + 2
        )));
    }
    let zc = centered_columns(&data.instruments);
    let dc = centered_vector(&data.exposure);
    let gamma = qr_least_squares(&zc, &dc)?;
    let fitted = &zc * &gamma;
    let fitted_ss = fitted.dot(&fitted);
    let resid = &dc - &fitted;
    let mut rss = resid.dot(&resid);
    // An exact fit leaves only rounding residue from the QR solve; anything
    // below squared-epsilon scale relative to the fitted signal is zero.
    if rss <= fitted_ss * 1e-26 {
        rss = 0.0;
    }
    // Degrees of freedom: intercept (absorbed by centering) plus p slopes.
    let sigma2_delta = rss / (n as f64 - p as f64 - 1.0);
    Ok(FirstStage { fitted, fitted_ss, sigma2_delta, n, p })
}

#[derive(Debug, Clone, Copy)]
pub struct TslsOptions {
    /// Heteroskedasticity-robust sandwich SE instead of the classical one.
    pub robust_se: bool,
    pub alpha: f64,
}

impl Default for TslsOptions {
    fn default() -> Self {
        TslsOptions { robust_se: false, alpha: 0.05 }
    }
}

pub fn tsls_estimate(data: &IndividualDataset) -> Result<EstimateResult> {
    tsls_estimate_with(data, TslsOptions::default())
}

/// Two-stage least squares: regress the exposure on the instruments, then the
/// outcome on the fitted exposure. The SE uses second-stage residuals formed
/// with the original exposure.
pub fn tsls_estimate_with(data: &IndividualDataset, opts: TslsOptions) -> Result<EstimateResult> {
    let stage = first_stage(data)?;
    if !(stage.fitted_ss > 0.0) {
        return Err(MrError::NoFirstStageSignal);
    }
    let yc = centered_vector(&data.outcome);
    let dc = centered_vector(&data.exposure);
    let beta = stage.fitted.dot(&yc) / stage.fitted_ss;

    let n = stage.n;
    let resid: DVector<f64> = &yc - &dc * beta;
    let se = if opts.robust_se {
        let meat: f64 =
            (0..n).map(|i| (stage.fitted[i] * resid[i]).powi(2)).sum();
        meat.sqrt() / stage.fitted_ss
    } else {
        let sigma2 = resid.dot(&resid) / (n as f64 - 2.0);
        (sigma2 / stage.fitted_ss).sqrt()
    };

    let f_stat = f_from_stage(&stage);
    Ok(EstimateResult::new(Method::Tsls, beta)
        .with_wald_ci(se, opts.alpha)
        .with_diag("f_statistic", DiagValue::Float(f_stat))
        .with_diag("n", DiagValue::Int(n as i64))
        .with_diag("p", DiagValue::Int(stage.p as i64)))
}

fn f_from_stage(stage: &FirstStage) -> f64 {
    if stage.sigma2_delta == 0.0 {
        f64::INFINITY
    } else {
        stage.fitted_ss / (stage.p as f64 * stage.sigma2_delta)
    }
}

/// First-stage instrument-strength diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstStageDiagnostics {
    /// Joint F statistic of the first-stage regression; infinity when the
    /// first stage fits exactly.
    pub f_statistic: f64,
    /// Noncentrality-style estimate of the concentration parameter
    /// (`p * F - p`).
    pub concentration_estimate: f64,
    pub p: usize,
    pub n: usize,
}

impl FirstStageDiagnostics {
    /// Rule-of-thumb weak-instrument flag (`F < 10`).
    pub fn is_weak(&self) -> bool {
        self.f_statistic < WEAK_F_THRESHOLD
    }
}

pub fn first_stage_f(data: &IndividualDataset) -> Result<FirstStageDiagnostics> {
    let stage = first_stage(data)?;
    let f = f_from_stage(&stage);
    let concentration = if f.is_infinite() {
        f64::INFINITY
    } else {
        (stage.p as f64 * f - stage.p as f64).max(0.0)
    };
    Ok(FirstStageDiagnostics {
        f_statistic: f,
        concentration_estimate: concentration,
        p: stage.p,
        n: stage.n,
    })
}

/// Split-sample IV: instrument-exposure coefficients are fit in the first
/// sample, exposures are predicted in the second sample from its own
/// instruments, and the outcome is regressed on those fitted exposures. The
/// SE treats the fitted exposure as the regressor.
pub fn ssiv_estimate(
    first: &IndividualDataset,
    second: &IndividualDataset,
) -> Result<EstimateResult> {
    if first.p() != second.p() {
        return Err(MrError::InvalidInput(format!(
            "instrument count mismatch: {} vs {}",
            first.p(),
            second.p()
        )));
    }
    let z1c = centered_columns(&first.instruments);
    let d1c = centered_vector(&first.exposure);
    let gamma = qr_least_squares(&z1c, &d1c)?;

    let z2c = centered_columns(&second.instruments);
    let fitted = &z2c * &gamma;
    let fitted_ss = fitted.dot(&fitted);
    if !(fitted_ss > 0.0) {
        return Err(MrError::NoFirstStageSignal);
    }
    let y2c = centered_vector(&second.outcome);
    let beta = fitted.dot(&y2c) / fitted_ss;
    let n2 = second.n();
    let resid = &y2c - &fitted * beta;
    let sigma2 = resid.dot(&resid) / (n2 as f64 - 2.0);
    Ok(EstimateResult::new(Method::Ssiv, beta)
        .with_wald_ci((sigma2 / fitted_ss).sqrt(), 0.05)
        .with_diag("n_first", DiagValue::Int(first.n() as i64))
        .with_diag("n_second", DiagValue::Int(n2 as i64)))
}

/// Columns dropped from a marginal-association pass, with reasons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub dropped: Vec<(usize, String)>,
}

fn simple_regression(zc: &DVector<f64>, target_centered: &DVector<f64>) -> Option<(f64, f64)> {
    let szz = zc.dot(zc);
    if !(szz > 0.0) {
        return None;
    }
    let n = zc.len();
    let slope = zc.dot(target_centered) / szz;
    let rss: f64 = (0..n).map(|i| (target_centered[i] - slope * zc[i]).powi(2)).sum();
    let sigma2 = rss / (n as f64 - 2.0);
    Some((slope, (sigma2 / szz).sqrt()))
}

/// Per-instrument simple regressions of the exposure and the outcome on each
/// instrument column, assembled into a one-sample summary dataset. Synthetic
/// ids `z1..zp` and placeholder alleles are attached. Zero-variance columns
/// are dropped and recorded.
pub fn marginal_associations(data: &IndividualDataset) -> Result<(SummaryDataset, MarginalReport)> {
    marginal_summary(data, data, Design::OneSample)
}

/// Two-sample workflow: exposure-side marginals from `exposure_sample`,
/// outcome-side marginals from `outcome_sample`. Both samples must share the
/// instrument layout.
pub fn two_sample_summary(
    exposure_sample: &IndividualDataset,
    outcome_sample: &IndividualDataset,
) -> Result<(SummaryDataset, MarginalReport)> {
    if exposure_sample.p() != outcome_sample.p() {
        return Err(MrError::InvalidInput(format!(
            "instrument count mismatch: {} vs {}",
            exposure_sample.p(),
            outcome_sample.p()
        )));
    }
    marginal_summary(exposure_sample, outcome_sample, Design::TwoSample)
}

fn marginal_summary(
    exposure_sample: &IndividualDataset,
    outcome_sample: &IndividualDataset,
    design: Design,
) -> Result<(SummaryDataset, MarginalReport)> {
    let p = exposure_sample.p();
    let dc = centered_vector(&exposure_sample.exposure);
    let yc = centered_vector(&outcome_sample.outcome);
    let mut records = Vec::with_capacity(p);
    let mut report = MarginalReport::default();
    for j in 0..p {
        let zc_exp = centered_vector(&exposure_sample.instruments.column(j).into_owned());
        let zc_out = centered_vector(&outcome_sample.instruments.column(j).into_owned());
        let exposure_fit = simple_regression(&zc_exp, &dc);
        let outcome_fit = simple_regression(&zc_out, &yc);
        let (Some((gamma, se_gamma)), Some((big_gamma, se_big))) = (exposure_fit, outcome_fit)
        else {
            report.dropped.push((j, "zero-variance instrument column".to_string()));
            continue;
        };
        let z = if se_gamma > 0.0 { gamma / se_gamma } else { f64::INFINITY };
        records.push(SnpRecord {
            snp_id: format!("z{}", j + 1),
            effect_allele: 'A',
            other_allele: 'G',
            gamma_hat: gamma,
            se_gamma: Some(se_gamma),
            big_gamma_hat: big_gamma,
            se_big_gamma: se_big,
            pval_exposure: two_sided_p(z),
            eaf: None,
            chr: None,
            pos: None,
        });
    }
    if records.is_empty() {
        return Err(MrError::InvalidInput("every instrument column was degenerate".to_string()));
    }
    let mut out = SummaryDataset::new(records, design);
    out.n_exposure = Some(exposure_sample.n() as u64);
    out.n_outcome = Some(outcome_sample.n() as u64);
    Ok((out, report))
}
