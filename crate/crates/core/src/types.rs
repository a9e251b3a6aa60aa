//! Shared domain data model: per-SNP summary statistics, individual-level
//! datasets, simulation configuration, and estimator results.
//!
//! All types are immutable after construction and safe to share across
//! threads. Validation reports violations instead of panicking so that file
//! ingestion can surface every problem in one pass.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MrError, Result};

/// Per-variant summary statistics: instrument-exposure and instrument-outcome
/// association estimates with their standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnpRecord {
    pub snp_id: String,
    pub effect_allele: char,
    pub other_allele: char,
    /// Per-allele instrument-exposure association (gamma-hat).
    pub gamma_hat: f64,
    /// Standard error of `gamma_hat`. Real GWAS exports often omit it; methods
    /// that need it refuse to run rather than impute.
    pub se_gamma: Option<f64>,
    /// Per-allele instrument-outcome association (Gamma-hat).
    pub big_gamma_hat: f64,
    /// Standard error of `big_gamma_hat`.
    pub se_big_gamma: f64,
    /// Exposure-association p-value used for instrument relevance filtering.
    pub pval_exposure: f64,
    /// Effect-allele frequency, when reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eaf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chr: Option<String>,
    /// Base-pair position, used for windowed LD comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<u64>,
}

impl SnpRecord {
    /// Strand-ambiguous pairs (A/T, C/G) cannot be oriented without allele
    /// frequencies.
    pub fn is_palindromic(&self) -> bool {
        matches!(
            (self.effect_allele, self.other_allele),
            ('A', 'T') | ('T', 'A') | ('C', 'G') | ('G', 'C')
        )
    }

    pub fn validate_into(&self, report: &mut Vec<String>) {
        if let Some(se) = self.se_gamma {
            if !(se > 0.0) {
                report.push(format!("{}: nonpositive SE for exposure association", self.snp_id));
            }
        }
        if !(self.se_big_gamma > 0.0) {
            report.push(format!("{}: nonpositive SE for outcome association", self.snp_id));
        }
        if !(0.0..=1.0).contains(&self.pval_exposure) {
            report.push(format!("{}: p-value {} outside [0,1]", self.snp_id, self.pval_exposure));
        }
        if self.effect_allele == self.other_allele {
            report.push(format!("{}: effect allele equals other allele", self.snp_id));
        }
        if let Some(eaf) = self.eaf {
            if !(eaf > 0.0 && eaf < 1.0) {
                report.push(format!("{}: allele frequency {} outside (0,1)", self.snp_id, eaf));
            }
        }
        for v in [self.gamma_hat, self.big_gamma_hat] {
            if !v.is_finite() {
                report.push(format!("{}: non-finite association estimate", self.snp_id));
            }
        }
    }
}

/// Whether the exposure and outcome associations come from the same sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    OneSample,
    TwoSample,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::OneSample => f.write_str("one-sample"),
            Design::TwoSample => f.write_str("two-sample"),
        }
    }
}

/// An ordered collection of harmonized per-SNP summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDataset {
    pub records: Vec<SnpRecord>,
    pub design: Design,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_exposure: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_outcome: Option<u64>,
}

impl SummaryDataset {
    pub fn new(records: Vec<SnpRecord>, design: Design) -> Self {
        SummaryDataset { records, design, n_exposure: None, n_outcome: None }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every record carries an exposure-side standard error.
    pub fn has_exposure_ses(&self) -> bool {
        self.records.iter().all(|r| r.se_gamma.is_some())
    }

    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        let mut seen = HashSet::new();
        for rec in &self.records {
            if !seen.insert(rec.snp_id.as_str()) {
                report.push(format!("duplicate id {}", rec.snp_id));
            }
            rec.validate_into(&mut report);
        }
        report
    }
}

/// Individual-level measurements: outcome vector, exposure vector, and the
/// n-by-p instrument matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualDataset {
    pub outcome: DVector<f64>,
    pub exposure: DVector<f64>,
    pub instruments: DMatrix<f64>,
    /// Set only when each instrument column has been sample-standardized to
    /// mean 0 and variance 1 (tolerances 1e-8 and 1e-6).
    pub standardized: bool,
}

impl IndividualDataset {
    pub fn new(
        outcome: DVector<f64>,
        exposure: DVector<f64>,
        instruments: DMatrix<f64>,
        standardized: bool,
    ) -> Result<Self> {
        let data = IndividualDataset { outcome, exposure, instruments, standardized };
        let report = data.validate();
        if report.is_empty() {
            Ok(data)
        } else {
            Err(MrError::InvalidInput(report.join("; ")))
        }
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn p(&self) -> usize {
        self.instruments.ncols()
    }

    /// Sample-standardizes every instrument column (mean 0, variance 1) and
    /// sets the `standardized` flag. Zero-variance columns are rejected.
    pub fn standardize(&self) -> Result<Self> {
        let n = self.instruments.nrows();
        if n < 2 {
            return Err(MrError::InvalidInput("need at least 2 rows to standardize".to_string()));
        }
        let mut instruments = self.instruments.clone();
        for (j, mut col) in instruments.column_iter_mut().enumerate() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n as f64 - 1.0);
            if !(var > 0.0) {
                return Err(MrError::InvalidInput(format!("instrument column {j} has zero variance")));
            }
            let sd = var.sqrt();
            col.apply(|z| *z = (*z - mean) / sd);
        }
        Ok(IndividualDataset {
            outcome: self.outcome.clone(),
            exposure: self.exposure.clone(),
            instruments,
            standardized: true,
        })
    }

    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        let n = self.outcome.len();
        if self.exposure.len() != n || self.instruments.nrows() != n {
            report.push(format!(
                "length mismatch: outcome {}, exposure {}, instrument rows {}",
                n,
                self.exposure.len(),
                self.instruments.nrows()
            ));
        }
        if self.instruments.ncols() == 0 {
            report.push("instrument matrix must have at least one column".to_string());
        }
        if self.standardized && n > 1 {
            for j in 0..self.instruments.ncols() {
                let col = self.instruments.column(j);
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                if mean.abs() > 1e-8 {
                    report.push(format!("column {j} marked standardized but has mean {mean:.3e}"));
                }
                if (var - 1.0).abs() > 1e-6 {
                    report.push(format!("column {j} marked standardized but has variance {var:.6}"));
                }
            }
        }
        report
    }
}

/// Distribution of the simulated instrument columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstrumentDistribution {
    /// Independent standard normal columns (already standardized in
    /// distribution).
    StandardNormal,
    /// Genotype dosages Binomial(2, maf_j), centered and scaled to unit
    /// variance.
    Genotype { maf: Vec<f64> },
}

impl Default for InstrumentDistribution {
    fn default() -> Self {
        InstrumentDistribution::StandardNormal
    }
}

/// Ground-truth structural parameters driving both data simulation and the
/// theoretical bias formulas.
///
/// The outcome model is `Y = beta * D + Z pi + eps` with `pi = psi + phi`,
/// the exposure model is `D = Z gamma + delta`, and the reduced form is
/// `Y = Z Gamma + e` with `Gamma = beta * gamma + pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceConfig {
    /// Constant causal effect of the exposure on the outcome.
    pub beta: f64,
    /// Instrument strengths, one per instrument.
    pub gamma: Vec<f64>,
    /// Direct instrument-outcome effects (exclusion-restriction violations).
    pub psi: Vec<f64>,
    /// Instrument-confounder associations (independence violations).
    pub phi: Vec<f64>,
    /// Standard deviation of the exposure-model error.
    pub sigma_delta: f64,
    /// Standard deviation of the outcome-model error.
    pub sigma_eps: f64,
    /// Covariance of the two errors; nonzero means unmeasured confounding.
    pub sigma_delta_eps: f64,
    /// Sample sizes for the first and second sample.
    pub n1: u64,
    pub n2: u64,
    #[serde(default)]
    pub instruments: InstrumentDistribution,
}

impl AliceConfig {
    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    /// Combined invalidity per instrument: `pi_j = psi_j + phi_j`.
    pub fn pi(&self) -> Vec<f64> {
        self.psi.iter().zip(&self.phi).map(|(a, b)| a + b).collect()
    }

    /// Reduced-form associations `Gamma_j = beta * gamma_j + pi_j`.
    pub fn big_gamma(&self) -> Vec<f64> {
        self.gamma.iter().zip(self.pi()).map(|(g, pi)| self.beta * g + pi).collect()
    }

    pub fn gamma_norm_sq(&self) -> f64 {
        self.gamma.iter().map(|g| g * g).sum()
    }

    pub fn all_valid(&self) -> bool {
        self.pi().iter().all(|&pi| pi == 0.0)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        let p = self.gamma.len();
        if p == 0 {
            report.push("at least one instrument required".to_string());
        }
        if self.psi.len() != p || self.phi.len() != p {
            report.push(format!(
                "gamma/psi/phi length mismatch: {} / {} / {}",
                p,
                self.psi.len(),
                self.phi.len()
            ));
        }
        if !(self.sigma_delta > 0.0) {
            report.push("sigma_delta must be positive".to_string());
        }
        if !(self.sigma_eps > 0.0) {
            report.push("sigma_eps must be positive".to_string());
        }
        if self.sigma_delta_eps.abs() > self.sigma_delta * self.sigma_eps {
            report.push(format!(
                "invalid covariance: |{}| > {} * {}",
                self.sigma_delta_eps, self.sigma_delta, self.sigma_eps
            ));
        }
        if self.n1 == 0 || self.n2 == 0 {
            report.push("sample sizes must be positive".to_string());
        }
        if let InstrumentDistribution::Genotype { maf } = &self.instruments {
            if maf.len() != p {
                report.push(format!("maf length {} does not match p {}", maf.len(), p));
            }
            for (j, &m) in maf.iter().enumerate() {
                if !(m > 0.0 && m <= 0.5) {
                    report.push(format!("maf[{j}] = {m} outside (0, 0.5]"));
                }
            }
        }
        report
    }

    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        if report.is_empty() {
            Ok(self)
        } else {
            Err(MrError::InvalidConfig(report.join("; ")))
        }
    }
}

/// Estimator identity carried on every result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ratio,
    Ivw,
    WeightedMedian,
    ModeBased,
    Egger,
    Ols,
    Tsls,
    Ssiv,
    IvwTwoSample,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Ratio => "ratio",
            Method::Ivw => "ivw",
            Method::WeightedMedian => "weighted-median",
            Method::ModeBased => "mode-based",
            Method::Egger => "egger",
            Method::Ols => "ols",
            Method::Tsls => "tsls",
            Method::Ssiv => "ssiv",
            Method::IvwTwoSample => "ivw-two-sample",
        };
        f.write_str(s)
    }
}

/// A diagnostic value attached to an estimate. Infinite floats serialize as
/// the string `"inf"` so that noiseless simulations survive JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagValue {
    Float(f64),
    Int(i64),
    Text(String),
    IdList(Vec<String>),
}

impl fmt::Display for DiagValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagValue::Float(v) if v.is_infinite() && *v > 0.0 => f.write_str("inf"),
            DiagValue::Float(v) if v.is_infinite() => f.write_str("-inf"),
            DiagValue::Float(v) => write!(f, "{v}"),
            DiagValue::Int(v) => write!(f, "{v}"),
            DiagValue::Text(s) => f.write_str(s),
            DiagValue::IdList(ids) => f.write_str(&ids.join("|")),
        }
    }
}

impl Serialize for DiagValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DiagValue::Float(v) if v.is_finite() => s.serialize_f64(*v),
            DiagValue::Float(v) if *v > 0.0 => s.serialize_str("inf"),
            DiagValue::Float(v) if *v < 0.0 => s.serialize_str("-inf"),
            DiagValue::Float(_) => s.serialize_str("nan"),
            DiagValue::Int(v) => s.serialize_i64(*v),
            DiagValue::Text(t) => s.serialize_str(t),
            DiagValue::IdList(ids) => ids.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for DiagValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::{self, SeqAccess, Visitor};

        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = DiagValue;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, string, or list of strings")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<DiagValue, E> {
                Ok(DiagValue::Float(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<DiagValue, E> {
                Ok(DiagValue::Int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<DiagValue, E> {
                Ok(DiagValue::Int(v as i64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<DiagValue, E> {
                match v {
                    "inf" => Ok(DiagValue::Float(f64::INFINITY)),
                    "-inf" => Ok(DiagValue::Float(f64::NEG_INFINITY)),
                    "nan" => Ok(DiagValue::Float(f64::NAN)),
                    _ => Ok(DiagValue::Text(v.to_string())),
                }
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<DiagValue, A::Error> {
                let mut ids = Vec::new();
                while let Some(s) = seq.next_element::<String>()? {
                    ids.push(s);
                }
                Ok(DiagValue::IdList(ids))
            }
        }
        d.deserialize_any(V)
    }
}

/// Point estimate with uncertainty and method-specific diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub beta_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, DiagValue>,
}

impl EstimateResult {
    pub fn new(method: Method, beta_hat: f64) -> Self {
        EstimateResult {
            method,
            beta_hat,
            se: None,
            ci_lower: None,
            ci_upper: None,
            diagnostics: BTreeMap::new(),
        }
    }

    /// Attaches a symmetric Wald interval at level `1 - alpha`.
    pub fn with_wald_ci(mut self, se: f64, alpha: f64) -> Self {
        let z = crate::stats::normal_quantile(1.0 - alpha / 2.0);
        self.se = Some(se);
        self.ci_lower = Some(self.beta_hat - z * se);
        self.ci_upper = Some(self.beta_hat + z * se);
        self
    }

    pub fn with_diag(mut self, key: &str, value: DiagValue) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        if let Some(se) = self.se {
            if se < 0.0 {
                report.push(format!("{}: negative standard error", self.method));
            }
        }
        if let (Some(lo), Some(hi)) = (self.ci_lower, self.ci_upper) {
            if !(lo <= self.beta_hat && self.beta_hat <= hi) {
                report.push(format!("{}: point estimate outside its interval", self.method));
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> SnpRecord {
        SnpRecord {
            snp_id: id.to_string(),
            effect_allele: 'A',
            other_allele: 'G',
            gamma_hat: 0.1,
            se_gamma: Some(0.01),
            big_gamma_hat: 0.05,
            se_big_gamma: 0.02,
            pval_exposure: 1e-9,
            eaf: None,
            chr: None,
            pos: None,
        }
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let data = SummaryDataset::new(vec![record("rs1"), record("rs1")], Design::TwoSample);
        let report = data.validate();
        assert!(report.iter().any(|v| v.contains("duplicate id")), "{report:?}");
    }

    #[test]
    fn nonpositive_se_is_reported() {
        let mut rec = record("rs1");
        rec.se_gamma = Some(0.0);
        let mut report = Vec::new();
        rec.validate_into(&mut report);
        assert!(report.iter().any(|v| v.contains("nonpositive SE")), "{report:?}");
    }

    #[test]
    fn valid_record_passes() {
        let data = SummaryDataset::new(vec![record("rs1"), record("rs2")], Design::OneSample);
        assert!(data.validate().is_empty());
    }

    #[test]
    fn palindromic_detection() {
        let mut rec = record("rs1");
        rec.effect_allele = 'A';
        rec.other_allele = 'T';
        assert!(rec.is_palindromic());
        rec.other_allele = 'G';
        assert!(!rec.is_palindromic());
    }

    #[test]
    fn alice_derived_quantities() {
        let cfg = AliceConfig {
            beta: 2.0,
            gamma: vec![0.5, 0.25],
            psi: vec![0.0, 0.25],
            phi: vec![0.125, -0.125],
            sigma_delta: 1.0,
            sigma_eps: 1.0,
            sigma_delta_eps: 0.5,
            n1: 100,
            n2: 100,
            instruments: InstrumentDistribution::StandardNormal,
        };
        assert!(cfg.validate().is_empty());
        assert_eq!(cfg.pi(), vec![0.125, 0.125]);
        assert_eq!(cfg.big_gamma(), vec![2.0 * 0.5 + 0.125, 2.0 * 0.25 + 0.125]);
    }

    #[test]
    fn alice_covariance_bound() {
        let cfg = AliceConfig {
            beta: 0.0,
            gamma: vec![0.1],
            psi: vec![0.0],
            phi: vec![0.0],
            sigma_delta: 1.0,
            sigma_eps: 0.5,
            sigma_delta_eps: 0.6,
            n1: 10,
            n2: 10,
            instruments: InstrumentDistribution::StandardNormal,
        };
        assert!(cfg.validate().iter().any(|v| v.contains("invalid covariance")));
    }

    #[test]
    fn standardized_flag_is_checked() {
        let z = DMatrix::from_column_slice(4, 1, &[10.0, 10.0, 10.0, 10.0]);
        let data = IndividualDataset {
            outcome: DVector::zeros(4),
            exposure: DVector::zeros(4),
            instruments: z,
            standardized: true,
        };
        assert!(!data.validate().is_empty());
    }

    #[test]
    fn standardize_satisfies_the_flag_contract() {
        let z = DMatrix::from_column_slice(5, 2, &[1.0, 2.0, 4.0, 8.0, 9.0, -3.0, 0.0, 2.0, 5.0, 1.0]);
        let data = IndividualDataset {
            outcome: DVector::zeros(5),
            exposure: DVector::from_vec(vec![1.0, 0.0, 2.0, 1.0, 3.0]),
            instruments: z,
            standardized: false,
        };
        let std = data.standardize().unwrap();
        assert!(std.standardized);
        assert!(std.validate().is_empty());
    }

    #[test]
    fn infinite_diagnostic_serializes_as_inf() {
        let r = EstimateResult::new(Method::Tsls, 1.0)
            .with_diag("f_statistic", DiagValue::Float(f64::INFINITY));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"f_statistic\":\"inf\""), "{json}");
    }
}
