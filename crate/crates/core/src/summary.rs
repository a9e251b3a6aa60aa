//! Causal-effect estimators on GWAS summary statistics: per-SNP ratio,
//! inverse-variance weighting, weighted median, mode-based estimation, and
//! Egger regression.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MrError, Result};
use crate::stats::{derive_seed, variance};
use crate::types::{DiagValue, EstimateResult, Method, SnpRecord, SummaryDataset};

/// How the standard error of a ratio estimate is formed.
///
/// The first-order delta method ignores exposure-side noise
/// (`se = se_Gamma / |gamma|`); the second-order form adds
/// `Gamma^2 se_gamma^2 / gamma^4` and requires exposure-side standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioSeMode {
    #[default]
    FirstOrder,
    SecondOrder,
}

/// Per-instrument Wald ratio `Gamma-hat / gamma-hat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub snp_id: String,
    pub beta_j: f64,
    pub se_j: f64,
}

pub fn ratio_estimate(rec: &SnpRecord, mode: RatioSeMode) -> Result<RatioEstimate> {
    if rec.gamma_hat == 0.0 {
        return Err(MrError::NullInstrument);
    }
    let beta_j = rec.big_gamma_hat / rec.gamma_hat;
    let se_j = match mode {
        RatioSeMode::FirstOrder => rec.se_big_gamma / rec.gamma_hat.abs(),
        RatioSeMode::SecondOrder => {
            let se_gamma = rec
                .se_gamma
                .ok_or_else(|| MrError::ExposureSeRequired(rec.snp_id.clone()))?;
            let g2 = rec.gamma_hat * rec.gamma_hat;
            (rec.se_big_gamma * rec.se_big_gamma / g2
                + rec.big_gamma_hat * rec.big_gamma_hat * se_gamma * se_gamma / (g2 * g2))
                .sqrt()
        }
    };
    Ok(RatioEstimate { snp_id: rec.snp_id.clone(), beta_j, se_j })
}

#[derive(Debug, Clone, Copy)]
pub struct IvwOptions {
    /// Inflate the fixed-effect SE by `max(1, sqrt(Q / (p - 1)))` with
    /// Cochran's Q over the ratio estimates.
    pub random_effects: bool,
    pub alpha: f64,
}

impl Default for IvwOptions {
    fn default() -> Self {
        IvwOptions { random_effects: false, alpha: 0.05 }
    }
}

/// Fixed-effect inverse-variance weighted estimator. The same formula serves
/// one- and two-sample inputs; the design label is carried through for
/// interpretation only.
pub fn ivw_estimate(data: &SummaryDataset) -> Result<EstimateResult> {
    ivw_estimate_with(data, IvwOptions::default())
}

pub fn ivw_estimate_with(data: &SummaryDataset, opts: IvwOptions) -> Result<EstimateResult> {
    if data.is_empty() {
        return Err(MrError::InsufficientInstruments { got: 0, need: 1 });
    }
    let mut num = 0.0;
    let mut denom = 0.0;
    for rec in &data.records {
        let v = rec.se_big_gamma * rec.se_big_gamma;
        num += rec.big_gamma_hat * rec.gamma_hat / v;
        denom += rec.gamma_hat * rec.gamma_hat / v;
    }
    if denom == 0.0 {
        return Err(MrError::ZeroDenominator);
    }
    let beta_hat = num / denom;
    let mut se = denom.sqrt().recip();

    if opts.random_effects {
        let p = data.records.iter().filter(|r| r.gamma_hat != 0.0).count();
        if p >= 2 {
            let q: f64 = data
                .records
                .iter()
                .filter(|r| r.gamma_hat != 0.0)
                .map(|r| {
                    let w = r.gamma_hat * r.gamma_hat / (r.se_big_gamma * r.se_big_gamma);
                    let bj = r.big_gamma_hat / r.gamma_hat;
                    w * (bj - beta_hat) * (bj - beta_hat)
                })
                .sum();
            se *= (q / (p as f64 - 1.0)).sqrt().max(1.0);
        }
    }

    Ok(EstimateResult::new(Method::Ivw, beta_hat)
        .with_wald_ci(se, opts.alpha)
        .with_diag("n_instruments_used", DiagValue::Int(data.len() as i64))
        .with_diag("design", DiagValue::Text(data.design.to_string())))
}

/// Quantile of a weighted sample at cumulative-weight midpoints: with records
/// sorted by value and normalized weights `w_j`, the probe points are
/// `p_j = (cum_j - w_j / 2)`, and the quantile interpolates linearly between
/// the two values straddling `tau`.
fn weighted_quantile(sorted: &[(f64, f64)], tau: f64) -> f64 {
    let total: f64 = sorted.iter().map(|(_, w)| w).sum();
    let mut cum = 0.0;
    let mut probes = Vec::with_capacity(sorted.len());
    for (value, w) in sorted {
        let p = (cum + w / 2.0) / total;
        cum += w;
        probes.push((p, *value));
    }
    if tau <= probes[0].0 {
        return probes[0].1;
    }
    if tau >= probes[probes.len() - 1].0 {
        return probes[probes.len() - 1].1;
    }
    for pair in probes.windows(2) {
        let (p0, v0) = pair[0];
        let (p1, v1) = pair[1];
        if tau <= p1 {
            if p1 == p0 {
                return v0;
            }
            return v0 + (v1 - v0) * (tau - p0) / (p1 - p0);
        }
    }
    probes[probes.len() - 1].1
}

#[derive(Debug, Clone, Copy)]
pub struct MedianOptions {
    pub bootstrap_reps: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for MedianOptions {
    fn default() -> Self {
        MedianOptions { bootstrap_reps: 1000, seed: 0, alpha: 0.05 }
    }
}

/// Weighted median of the per-SNP ratio estimates with weights
/// `gamma^2 / se_Gamma^2`, interpolated at the 50% cumulative-weight point.
/// The SE comes from bootstrap over SNP records with caller-supplied seed.
///
/// A single usable record degenerates to its ratio estimate, which keeps the
/// single-instrument collapse identity with the ratio and IVW estimators.
pub fn weighted_median_estimate(
    data: &SummaryDataset,
    opts: MedianOptions,
) -> Result<EstimateResult> {
    let usable: Vec<&SnpRecord> =
        data.records.iter().filter(|r| r.gamma_hat != 0.0).collect();
    if usable.is_empty() {
        return Err(MrError::InsufficientInstruments { got: 0, need: 1 });
    }
    let point = weighted_median_of(&usable);

    let mut result = EstimateResult::new(Method::WeightedMedian, point)
        .with_diag("n_instruments_used", DiagValue::Int(usable.len() as i64));
    if opts.bootstrap_reps > 0 && usable.len() > 1 {
        let mut medians = Vec::with_capacity(opts.bootstrap_reps);
        for rep in 0..opts.bootstrap_reps {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(opts.seed, rep as u64));
            let resample: Vec<&SnpRecord> = (0..usable.len())
                .map(|_| usable[rng.gen_range(0..usable.len())])
                .collect();
            medians.push(weighted_median_of(&resample));
        }
        let se = variance(&medians).sqrt();
        result = result.with_wald_ci(se, opts.alpha);
        result.beta_hat = point;
    }
    Ok(result)
}

fn weighted_median_of(records: &[&SnpRecord]) -> f64 {
    let mut pairs: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let w = r.gamma_hat * r.gamma_hat / (r.se_big_gamma * r.se_big_gamma);
            (r.big_gamma_hat / r.gamma_hat, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    weighted_quantile(&pairs, 0.5)
}

#[derive(Debug, Clone, Copy)]
pub struct ModeOptions {
    /// Multiplier on the Silverman rule-of-thumb bandwidth.
    pub bandwidth_factor: f64,
    pub grid_points: usize,
}

impl Default for ModeOptions {
    fn default() -> Self {
        ModeOptions { bandwidth_factor: 1.0, grid_points: 512 }
    }
}

/// Mode of the Gaussian-kernel-smoothed density of ratio estimates, weighted
/// by inverse first-order delta-method variance.
///
/// Exactly tied ratio estimates are consolidated into weighted point masses
/// first. When any exact ties exist the input is discrete (only noiseless or
/// constructed data produces bit-equal ratios), the weighted spread that
/// drives the Silverman rule collapses, and the estimator returns the
/// heaviest atom directly, smallest value on ties. Continuous inputs take
/// the kernel path: bandwidth `factor * 0.9 * min(sd, IQR/1.34) *
/// n_eff^(-1/5)` on the weighted sample with Kish effective size, argmax over
/// `grid_points` points spanning `[min - 3h, max + 3h]`, ties resolved to the
/// smallest grid point.
pub fn mode_based_estimate(data: &SummaryDataset, opts: ModeOptions) -> Result<EstimateResult> {
    if !(opts.bandwidth_factor > 0.0) {
        return Err(MrError::InvalidConfig("bandwidth factor must be positive".to_string()));
    }
    let usable: Vec<&SnpRecord> =
        data.records.iter().filter(|r| r.gamma_hat != 0.0).collect();
    if usable.len() < 3 {
        return Err(MrError::InsufficientInstruments { got: usable.len(), need: 3 });
    }
    let mut pairs: Vec<(f64, f64)> = usable
        .iter()
        .map(|r| {
            let se = r.se_big_gamma / r.gamma_hat.abs();
            (r.big_gamma_hat / r.gamma_hat, se.powi(-2))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for &(b, w) in &pairs {
        match atoms.last_mut() {
            Some(last) if last.0 == b => last.1 += w,
            _ => atoms.push((b, w)),
        }
    }
    if atoms.len() == 1 {
        let value = atoms[0].0;
        let mut res = EstimateResult::new(Method::ModeBased, value)
            .with_diag("n_instruments_used", DiagValue::Int(pairs.len() as i64));
        res.se = Some(0.0);
        res.ci_lower = Some(value);
        res.ci_upper = Some(value);
        return Ok(res);
    }
    if atoms.len() < pairs.len() {
        let heaviest = atoms
            .iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |best, &(b, w)| {
                if w > best.1 {
                    (b, w)
                } else {
                    best
                }
            })
            .0;
        return Ok(EstimateResult::new(Method::ModeBased, heaviest)
            .with_diag("n_atoms", DiagValue::Int(atoms.len() as i64))
            .with_diag("n_instruments_used", DiagValue::Int(pairs.len() as i64)));
    }

    let total_w: f64 = pairs.iter().map(|(_, w)| w).sum();
    let mu = pairs.iter().map(|(b, w)| b * w).sum::<f64>() / total_w;
    let sd = (pairs.iter().map(|(b, w)| w * (b - mu) * (b - mu)).sum::<f64>() / total_w).sqrt();
    let iqr = weighted_quantile(&pairs, 0.75) - weighted_quantile(&pairs, 0.25);
    let spread = sd.min(iqr / 1.34);
    let n_eff = total_w * total_w / pairs.iter().map(|(_, w)| w * w).sum::<f64>();
    let h = opts.bandwidth_factor * 0.9 * spread * n_eff.powf(-0.2);

    let lo = pairs[0].0 - 3.0 * h;
    let hi = pairs[pairs.len() - 1].0 + 3.0 * h;
    let step = (hi - lo) / (opts.grid_points as f64 - 1.0);
    let mut best_x = lo;
    let mut best_density = f64::NEG_INFINITY;
    for i in 0..opts.grid_points {
        let x = lo + step * i as f64;
        let density: f64 = pairs
            .iter()
            .map(|(b, w)| {
                let z = (x - b) / h;
                w * (-0.5 * z * z).exp()
            })
            .sum();
        if density > best_density {
            best_density = density;
            best_x = x;
        }
    }

    Ok(EstimateResult::new(Method::ModeBased, best_x)
        .with_diag("bandwidth", DiagValue::Float(h))
        .with_diag("grid_lo", DiagValue::Float(lo))
        .with_diag("grid_hi", DiagValue::Float(hi))
        .with_diag("n_instruments_used", DiagValue::Int(pairs.len() as i64)))
}

/// Egger regression slope/intercept with the intercept's standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EggerEstimate {
    pub estimate: EstimateResult,
    pub intercept: f64,
    pub intercept_se: f64,
}

/// Weighted least squares of the outcome associations on the exposure
/// associations with an intercept, weights `1 / se_Gamma^2`. Instrument
/// orientation is normalized so every `gamma >= 0` (flipping the outcome
/// association jointly). The slope estimates the causal effect and the
/// intercept the average directed pleiotropy; SEs carry a multiplicative
/// overdispersion factor `max(1, RSS_w / (p - 2))`.
pub fn egger_estimate(data: &SummaryDataset) -> Result<EggerEstimate> {
    let p = data.len();
    if p < 3 {
        return Err(MrError::InsufficientInstruments { got: p, need: 3 });
    }
    let oriented: Vec<(f64, f64, f64)> = data
        .records
        .iter()
        .map(|r| {
            let flip = if r.gamma_hat < 0.0 { -1.0 } else { 1.0 };
            (flip * r.gamma_hat, flip * r.big_gamma_hat, r.se_big_gamma)
        })
        .collect();

    let (mut sw, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, se) in &oriented {
        let v = se.powi(-2);
        sw += v;
        sx += v * x;
        sxx += v * x * x;
        sy += v * y;
        sxy += v * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det <= 0.0 || sxx - sx * sx / sw <= f64::EPSILON * sxx {
        return Err(MrError::NoStrengthSpread);
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;

    let rss_w: f64 = oriented
        .iter()
        .map(|&(x, y, se)| {
            let r = y - intercept - slope * x;
            r * r / (se * se)
        })
        .sum();
    let scale = (rss_w / (p as f64 - 2.0)).max(1.0);
    let slope_se = (scale * sw / det).sqrt();
    let intercept_se = (scale * sxx / det).sqrt();

    let estimate = EstimateResult::new(Method::Egger, slope)
        .with_wald_ci(slope_se, 0.05)
        .with_diag("intercept", DiagValue::Float(intercept))
        .with_diag("intercept_se", DiagValue::Float(intercept_se))
        .with_diag("n_instruments_used", DiagValue::Int(p as i64));
    Ok(EggerEstimate { estimate, intercept, intercept_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;
    use crate::types::Design;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn rec(id: &str, gamma: f64, se_gamma: f64, big_gamma: f64, se_big: f64) -> SnpRecord {
        SnpRecord {
            snp_id: id.to_string(),
            effect_allele: 'A',
            other_allele: 'G',
            gamma_hat: gamma,
            se_gamma: Some(se_gamma),
            big_gamma_hat: big_gamma,
            se_big_gamma: se_big,
            pval_exposure: 1e-10,
            eaf: None,
            chr: None,
            pos: None,
        }
    }

    fn dataset(records: Vec<SnpRecord>) -> SummaryDataset {
        SummaryDataset::new(records, Design::TwoSample)
    }

    #[test]
    fn ratio_point_values() {
        let r = ratio_estimate(&rec("a", 1.0, 0.1, 2.0, 0.1), RatioSeMode::FirstOrder).unwrap();
        assert_eq!(r.beta_j, 2.0);
        let r = ratio_estimate(&rec("a", 0.5, 0.1, 0.1, 0.1), RatioSeMode::FirstOrder).unwrap();
        assert!((r.beta_j - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ratio_first_order_se() {
        let r = ratio_estimate(&rec("a", 0.5, 0.01, 0.1, 0.02), RatioSeMode::FirstOrder).unwrap();
        assert_eq!(r.se_j, 0.04);
    }

    // Oracle for the delta-method SE: simulate the ratio's sampling spread at
    // large gamma / se_gamma, where exposure-side noise is negligible.
    #[test]
    fn ratio_se_matches_parametric_simulation() {
        let gamma = 0.5;
        let se_gamma = 5e-5;
        let big_gamma = 0.1;
        let se_big = 0.02;
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let noise_g = Normal::new(0.0, se_gamma).unwrap();
        let noise_b = Normal::new(0.0, se_big).unwrap();
        let n = 1_000_000usize;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let g = gamma + noise_g.sample(&mut rng);
                let b = big_gamma + noise_b.sample(&mut rng);
                b / g
            })
            .collect();
        let sd = variance(&draws).sqrt();
        // sd of the sample sd is roughly sd / sqrt(2n).
        let tol = 4.0 * 0.04 / (2.0 * n as f64).sqrt();
        assert!(
            (sd - 0.04).abs() < tol.max(1e-4),
            "simulated sd {sd} vs delta-method 0.04"
        );
    }

    #[test]
    fn ratio_second_order_se_adds_exposure_noise() {
        let record = rec("a", 0.5, 0.02, 0.1, 0.02);
        let first = ratio_estimate(&record, RatioSeMode::FirstOrder).unwrap();
        let second = ratio_estimate(&record, RatioSeMode::SecondOrder).unwrap();
        let expected =
            (0.02f64.powi(2) / 0.25 + 0.01 * 0.02f64.powi(2) / 0.0625).sqrt();
        assert!((second.se_j - expected).abs() < 1e-15);
        assert!(second.se_j > first.se_j);

        let mut no_se = record.clone();
        no_se.se_gamma = None;
        assert!(matches!(
            ratio_estimate(&no_se, RatioSeMode::SecondOrder),
            Err(MrError::ExposureSeRequired(_))
        ));
    }

    #[test]
    fn random_effects_inflate_heterogeneous_ivw() {
        // Two equally weighted instruments with ratios 0 and 2:
        // beta = 1, Q = 4 * 1 + 4 * 1 = 8 over p - 1 = 1.
        let data = dataset(vec![rec("a", 1.0, 0.1, 0.0, 0.5), rec("b", 1.0, 0.1, 2.0, 0.5)]);
        let fixed = ivw_estimate(&data).unwrap();
        let inflated =
            ivw_estimate_with(&data, IvwOptions { random_effects: true, alpha: 0.05 }).unwrap();
        assert!((fixed.beta_hat - 1.0).abs() < 1e-12);
        assert_eq!(inflated.beta_hat, fixed.beta_hat);
        let q: f64 = 8.0;
        let expect = fixed.se.unwrap() * q.sqrt();
        assert!((inflated.se.unwrap() - expect).abs() < 1e-12);

        // Homogeneous ratios leave the fixed-effect SE untouched.
        let homo = dataset(vec![rec("a", 1.0, 0.1, 2.0, 0.5), rec("b", 1.0, 0.1, 2.0, 0.5)]);
        let h_fixed = ivw_estimate(&homo).unwrap();
        let h_re =
            ivw_estimate_with(&homo, IvwOptions { random_effects: true, alpha: 0.05 }).unwrap();
        assert_eq!(h_fixed.se, h_re.se);
    }

    #[test]
    fn null_instrument_errors() {
        let err = ratio_estimate(&rec("a", 0.0, 0.1, 0.1, 0.1), RatioSeMode::FirstOrder);
        assert_eq!(err.unwrap_err(), MrError::NullInstrument);
    }

    #[test]
    fn ivw_single_record_collapses_to_ratio() {
        let record = rec("a", 0.4, 0.05, 0.3, 0.07);
        let data = dataset(vec![record.clone()]);
        let ivw = ivw_estimate(&data).unwrap();
        let ratio = ratio_estimate(&record, RatioSeMode::FirstOrder).unwrap();
        assert!((ivw.beta_hat - ratio.beta_j).abs() < 1e-14);
    }

    #[test]
    fn ivw_symmetric_average() {
        let data = dataset(vec![rec("a", 1.0, 0.1, 1.0, 0.5), rec("b", 1.0, 0.1, 3.0, 0.5)]);
        let ivw = ivw_estimate(&data).unwrap();
        assert!((ivw.beta_hat - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ivw_hand_computed_weighted_sum() {
        // gamma = (1, 1, 2), se_Gamma = 1, Gamma = (1, 3, 4):
        // beta = (1 + 3 + 8) / (1 + 1 + 4) = 2.
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 1.0, 1.0),
            rec("b", 1.0, 0.1, 3.0, 1.0),
            rec("c", 2.0, 0.1, 4.0, 1.0),
        ]);
        let ivw = ivw_estimate(&data).unwrap();
        assert!((ivw.beta_hat - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ivw_zero_denominator() {
        let data = dataset(vec![rec("a", 0.0, 0.1, 1.0, 1.0)]);
        assert_eq!(ivw_estimate(&data).unwrap_err(), MrError::ZeroDenominator);
    }

    #[test]
    fn median_constant_sample() {
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 3.0, 0.5),
            rec("b", 2.0, 0.1, 6.0, 0.4),
            rec("c", 0.5, 0.1, 1.5, 0.3),
        ]);
        let m = weighted_median_estimate(&data, MedianOptions { bootstrap_reps: 0, ..Default::default() })
            .unwrap();
        assert!((m.beta_hat - 3.0).abs() < 1e-12);
    }

    #[test]
    fn median_middle_order_statistic() {
        // Equal weights, ratios (1, 2, 100): the midpoint probe of the second
        // record sits exactly at 1/2.
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 1.0, 1.0),
            rec("b", 1.0, 0.1, 2.0, 1.0),
            rec("c", 1.0, 0.1, 100.0, 1.0),
        ]);
        let m = weighted_median_estimate(&data, MedianOptions { bootstrap_reps: 0, ..Default::default() })
            .unwrap();
        assert!((m.beta_hat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn median_interpolates_between_straddling_ratios() {
        // Ratios (1, 2, 100) with normalized weights (0.1, 0.1, 0.8):
        // probes p = (0.05, 0.15, 0.6); interpolating 0.5 between the last two
        // gives 2 + 98 * (0.35 / 0.45) = 704/9.
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 1.0, f64::sqrt(10.0)),
            rec("b", 1.0, 0.1, 2.0, f64::sqrt(10.0)),
            rec("c", 1.0, 0.1, 100.0, f64::sqrt(10.0 / 8.0)),
        ]);
        let m = weighted_median_estimate(&data, MedianOptions { bootstrap_reps: 0, ..Default::default() })
            .unwrap();
        let expected = 704.0 / 9.0;
        assert!((m.beta_hat - expected).abs() < 1e-9, "{} vs {expected}", m.beta_hat);
    }

    #[test]
    fn mode_point_mass() {
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 1.5, 0.5),
            rec("b", 2.0, 0.1, 3.0, 0.4),
            rec("c", 0.5, 0.1, 0.75, 0.3),
        ]);
        let m = mode_based_estimate(&data, ModeOptions::default()).unwrap();
        assert_eq!(m.beta_hat, 1.5);
        assert_eq!(m.se, Some(0.0));
    }

    #[test]
    fn mode_finds_cluster_and_ignores_outlier() {
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 2.0, 1.0),
            rec("b", 1.0, 0.1, 2.01, 1.0),
            rec("c", 1.0, 0.1, 1.99, 1.0),
            rec("d", 1.0, 0.1, 10.0, 1.0),
        ]);
        let m = mode_based_estimate(&data, ModeOptions::default()).unwrap();
        let h = match m.diagnostics.get("bandwidth") {
            Some(DiagValue::Float(h)) => *h,
            other => panic!("missing bandwidth: {other:?}"),
        };
        assert!((m.beta_hat - 2.0).abs() <= h, "mode {} not within {h} of 2", m.beta_hat);

        // Dense-grid oracle: a 50x finer grid must agree within one coarse step.
        let fine = mode_based_estimate(
            &data,
            ModeOptions { bandwidth_factor: 1.0, grid_points: 512 * 50 },
        )
        .unwrap();
        let coarse_step = {
            let (lo, hi) = match (m.diagnostics.get("grid_lo"), m.diagnostics.get("grid_hi")) {
                (Some(DiagValue::Float(lo)), Some(DiagValue::Float(hi))) => (*lo, *hi),
                _ => panic!("missing grid diagnostics"),
            };
            (hi - lo) / 511.0
        };
        assert!((m.beta_hat - fine.beta_hat).abs() <= coarse_step);
    }

    #[test]
    fn mode_bimodal_tie_takes_smaller() {
        let data = dataset(vec![
            rec("a", 1.0, 0.1, 1.0, 1.0),
            rec("b", 1.0, 0.1, 1.0, 1.0),
            rec("c", 1.0, 0.1, 3.0, 1.0),
            rec("d", 1.0, 0.1, 3.0, 1.0),
        ]);
        let m = mode_based_estimate(&data, ModeOptions::default()).unwrap();
        assert_eq!(m.beta_hat, 1.0, "tie must resolve to the smaller mode");
    }

    #[test]
    fn egger_exact_line_through_origin() {
        let gammas = [0.1, 0.2, 0.3, 0.4];
        let records: Vec<SnpRecord> = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| rec(&format!("s{i}"), g, 0.01, 1.5 * g, 0.05))
            .collect();
        let e = egger_estimate(&dataset(records)).unwrap();
        assert!((e.estimate.beta_hat - 1.5).abs() < 1e-12);
        assert!(e.intercept.abs() < 1e-12);
    }

    #[test]
    fn egger_affine_fit_recovers_constant_pleiotropy() {
        let gammas = [0.1, 0.2, 0.3, 0.4];
        let records: Vec<SnpRecord> = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| rec(&format!("s{i}"), g, 0.01, 1.5 * g + 0.2, 0.05))
            .collect();
        let e = egger_estimate(&dataset(records)).unwrap();
        assert!((e.estimate.beta_hat - 1.5).abs() < 1e-12);
        assert!((e.intercept - 0.2).abs() < 1e-12);
    }

    #[test]
    fn egger_no_spread_errors() {
        let records: Vec<SnpRecord> =
            (0..4).map(|i| rec(&format!("s{i}"), 0.2, 0.01, 0.3, 0.05)).collect();
        assert_eq!(egger_estimate(&dataset(records)).unwrap_err(), MrError::NoStrengthSpread);
    }

    // Under instrument strengths independent of pleiotropy, the Egger slope
    // converges to the causal effect as the instrument count grows.
    #[test]
    fn egger_slope_consistency_monte_carlo() {
        let beta = 0.7;
        let p = 200;
        let reps = 200;
        let mut slopes = Vec::with_capacity(reps);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let strength = Normal::new(0.3, 0.05).unwrap();
        let pleio = Normal::new(0.0, 0.02).unwrap();
        for _ in 0..reps {
            let records: Vec<SnpRecord> = (0..p)
                .map(|i| {
                    let g: f64 = strength.sample(&mut rng);
                    let pi: f64 = pleio.sample(&mut rng);
                    rec(&format!("s{i}"), g, 0.01, beta * g + pi, 0.05)
                })
                .collect();
            slopes.push(egger_estimate(&dataset(records)).unwrap().estimate.beta_hat);
        }
        let m = mean(&slopes);
        let se = (variance(&slopes) / reps as f64).sqrt();
        assert!((m - beta).abs() <= 3.0 * se, "mean slope {m}, beta {beta}, mc se {se}");
    }

    #[test]
    fn scale_equivariance() {
        let base = vec![
            rec("a", 0.3, 0.05, 0.21, 0.04),
            rec("b", -0.2, 0.03, -0.1, 0.05),
            rec("c", 0.5, 0.04, 0.4, 0.06),
        ];
        let c = 3.5;
        let scaled: Vec<SnpRecord> = base
            .iter()
            .map(|r| {
                let mut s = r.clone();
                s.big_gamma_hat *= c;
                s.se_big_gamma *= c;
                s
            })
            .collect();
        let d0 = dataset(base);
        let d1 = dataset(scaled);
        let opts = MedianOptions { bootstrap_reps: 0, ..Default::default() };
        assert!(
            (ivw_estimate(&d1).unwrap().beta_hat - c * ivw_estimate(&d0).unwrap().beta_hat).abs()
                < 1e-12
        );
        assert!(
            (weighted_median_estimate(&d1, opts).unwrap().beta_hat
                - c * weighted_median_estimate(&d0, opts).unwrap().beta_hat)
                .abs()
                < 1e-12
        );
        assert!(
            (egger_estimate(&d1).unwrap().estimate.beta_hat
                - c * egger_estimate(&d0).unwrap().estimate.beta_hat)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn instrument_order_invariance() {
        let records = vec![
            rec("a", 0.3, 0.05, 0.21, 0.04),
            rec("b", -0.2, 0.03, -0.1, 0.05),
            rec("c", 0.5, 0.04, 0.4, 0.06),
            rec("d", 0.25, 0.04, 0.2, 0.03),
        ];
        let mut permuted = records.clone();
        permuted.reverse();
        permuted.swap(0, 2);
        let d0 = dataset(records);
        let d1 = dataset(permuted);
        let (a, b) = (ivw_estimate(&d0).unwrap().beta_hat, ivw_estimate(&d1).unwrap().beta_hat);
        assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
        let opts = MedianOptions { bootstrap_reps: 0, ..Default::default() };
        assert_eq!(
            weighted_median_estimate(&d0, opts).unwrap().beta_hat,
            weighted_median_estimate(&d1, opts).unwrap().beta_hat
        );
        assert_eq!(
            mode_based_estimate(&d0, ModeOptions::default()).unwrap().beta_hat,
            mode_based_estimate(&d1, ModeOptions::default()).unwrap().beta_hat
        );
    }

    #[test]
    fn exact_data_consistency_all_estimators() {
        // Power-of-two strengths keep beta * g / g bitwise exact.
        let beta = -0.8;
        let gammas = [0.25, 0.5, -0.5, 1.0, 2.0];
        let records: Vec<SnpRecord> = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| rec(&format!("s{i}"), g, 0.01, beta * g, 0.05))
            .collect();
        let data = dataset(records.clone());
        assert!((ivw_estimate(&data).unwrap().beta_hat - beta).abs() < 1e-12);
        let opts = MedianOptions { bootstrap_reps: 0, ..Default::default() };
        assert!((weighted_median_estimate(&data, opts).unwrap().beta_hat - beta).abs() < 1e-12);
        assert_eq!(mode_based_estimate(&data, ModeOptions::default()).unwrap().beta_hat, beta);
        assert!((egger_estimate(&data).unwrap().estimate.beta_hat - beta).abs() < 1e-12);
        for r in &records {
            assert!((ratio_estimate(r, RatioSeMode::FirstOrder).unwrap().beta_j - beta).abs() < 1e-12);
        }
    }

    // With plurality-valid noiseless inputs the smoothed mode lands on the
    // true effect within one grid step.
    #[test]
    fn plurality_robustness_of_mode() {
        let beta = 1.2;
        let mut records = Vec::new();
        for i in 0..6 {
            records.push(rec(&format!("v{i}"), 0.3, 0.01, beta * 0.3, 0.05));
        }
        for (i, bad) in [3.0, -2.0, 0.4, 5.0].iter().enumerate() {
            records.push(rec(&format!("x{i}"), 0.3, 0.01, bad * 0.3, 0.05));
        }
        let m = mode_based_estimate(&dataset(records), ModeOptions::default()).unwrap();
        assert!((m.beta_hat - beta).abs() < 1e-12, "{} vs {beta}", m.beta_hat);
    }

    #[test]
    fn median_bootstrap_is_deterministic() {
        let data = dataset(vec![
            rec("a", 0.3, 0.05, 0.21, 0.04),
            rec("b", 0.2, 0.03, 0.1, 0.05),
            rec("c", 0.5, 0.04, 0.4, 0.06),
        ]);
        let opts = MedianOptions { bootstrap_reps: 200, seed: 5, alpha: 0.05 };
        let a = weighted_median_estimate(&data, opts).unwrap();
        let b = weighted_median_estimate(&data, opts).unwrap();
        assert_eq!(a, b);
        assert!(a.se.unwrap() > 0.0);
    }
}
