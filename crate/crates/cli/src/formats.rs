//! File formats: GWAS summary-statistics TSV ingestion with column aliasing,
//! the canonical harmonized TSV, LD matrices (dense or triplet), population
//! JSON, and experiment configuration files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use mrkit::alice::BiasExperimentConfig;
use mrkit::population::CausalPopulation;
use mrkit::select::LdMatrix;
use mrkit::types::{Design, SnpRecord, SummaryDataset};

use crate::error::{CliError, Result};

/// One half of a summary dataset: either the exposure side or the outcome
/// side of a GWAS export.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfRecord {
    pub snp_id: String,
    pub effect_allele: char,
    pub other_allele: char,
    pub beta: f64,
    pub se: f64,
    pub pval: f64,
    pub eaf: Option<f64>,
    pub chr: Option<String>,
    pub pos: Option<u64>,
}

impl HalfRecord {
    /// Strand-ambiguous allele pair (A/T or C/G), flagged at parse time.
    pub fn is_palindromic(&self) -> bool {
        matches!(
            (self.effect_allele, self.other_allele),
            ('A', 'T') | ('T', 'A') | ('C', 'G') | ('G', 'C')
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the file (header is line 1).
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<HalfRecord>,
    pub errors: Vec<RowError>,
}

/// Column-name aliases for common GWAS exports, matched case-insensitively.
const ALIASES: &[(&str, &[&str])] = &[
    ("snp", &["snp", "snp_id", "rsid", "rs_id", "variant_id", "markername", "id"]),
    ("effect_allele", &["effect_allele", "a1", "allele1", "ea", "alt"]),
    ("other_allele", &["other_allele", "a2", "allele2", "oa", "ref", "nea", "non_effect_allele"]),
    ("beta", &["beta", "b", "effect", "effect_size", "beta_hat", "es"]),
    ("se", &["se", "standard_error", "stderr", "sebeta", "se_beta"]),
    ("pval", &["pval", "p", "p_value", "pvalue", "p_val"]),
    ("eaf", &["eaf", "af", "effect_allele_frequency", "freq1", "a1freq"]),
    ("chr", &["chr", "chrom", "chromosome"]),
    ("pos", &["pos", "position", "bp", "base_pair_location"]),
];

const REQUIRED: &[&str] = &["snp", "effect_allele", "other_allele", "beta", "se", "pval"];

/// Parsing options: strict mode aborts on the first malformed row; explicit
/// column overrides take precedence over the alias table.
#[derive(Debug, Clone, Default)]
pub struct FormatSpec {
    pub strict: bool,
    /// Maps a logical field name (e.g. "beta") to the exact header to use.
    pub overrides: BTreeMap<String, String>,
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "NA" | "na" | "NaN" | ".")
}

fn single_allele(raw: &str) -> std::result::Result<char, String> {
    let up = raw.trim().to_ascii_uppercase();
    let mut chars = up.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Ok(c),
        _ => Err(format!("allele {raw:?} is not a single-character code")),
    }
}

fn resolve_columns(
    header: &[String],
    spec: &FormatSpec,
) -> Result<BTreeMap<&'static str, usize>> {
    let lowered: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let mut map = BTreeMap::new();
    for (field, aliases) in ALIASES {
        let idx = if let Some(name) = spec.overrides.get(*field) {
            let want = name.to_ascii_lowercase();
            lowered.iter().position(|h| *h == want)
        } else {
            lowered.iter().position(|h| aliases.contains(&h.as_str()))
        };
        if let Some(i) = idx {
            map.insert(*field, i);
        }
    }
    for field in REQUIRED {
        if !map.contains_key(field) {
            return Err(CliError::Data(format!(
                "missing required column {field:?} (known aliases: {:?})",
                ALIASES.iter().find(|(f, _)| f == field).map(|(_, a)| *a).unwrap_or(&[])
            )));
        }
    }
    Ok(map)
}

/// Parses one side of a summary-statistics TSV. Malformed rows are collected
/// into the error ledger; in strict mode the first malformed row is fatal.
pub fn parse_summary_stats(path: &Path, spec: &FormatSpec) -> Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> =
        reader.headers().map_err(|e| CliError::Data(e.to_string()))?.iter().map(String::from).collect();
    let cols = resolve_columns(&header, spec)?;

    let mut outcome = ParseOutcome::default();
    let mut row_count = 0usize;
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header occupies line 1
        row_count += 1;
        let parsed = row
            .map_err(|e| format!("unreadable row: {e}"))
            .and_then(|record| parse_row(&record, &cols));
        match parsed {
            Ok(rec) => outcome.records.push(rec),
            Err(message) => {
                if spec.strict {
                    return Err(CliError::Data(format!("{}:{line}: {message}", path.display())));
                }
                outcome.errors.push(RowError { line, message });
            }
        }
    }
    if row_count == 0 {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(outcome)
}

fn parse_row(
    record: &csv::StringRecord,
    cols: &BTreeMap<&'static str, usize>,
) -> std::result::Result<HalfRecord, String> {
    let get = |field: &str| -> Option<&str> { cols.get(field).and_then(|&i| record.get(i)) };
    let require = |field: &'static str| -> std::result::Result<&str, String> {
        match get(field) {
            Some(v) if !is_missing(v) => Ok(v),
            _ => Err(format!("missing value for {field}")),
        }
    };
    let number = |field: &'static str| -> std::result::Result<f64, String> {
        let raw = require(field)?;
        raw.parse::<f64>().map_err(|_| format!("unparseable numeric {raw:?} for {field}"))
    };

    let snp_id = require("snp")?.to_string();
    let effect_allele = single_allele(require("effect_allele")?)?;
    let other_allele = single_allele(require("other_allele")?)?;
    if effect_allele == other_allele {
        return Err("effect allele equals other allele".to_string());
    }
    let beta = number("beta")?;
    let se = number("se")?;
    if !(se > 0.0) || !se.is_finite() {
        return Err("nonpositive SE".to_string());
    }
    let pval = number("pval")?;
    if !(0.0..=1.0).contains(&pval) {
        return Err(format!("p-value {pval} outside [0,1]"));
    }
    let eaf = match get("eaf") {
        Some(v) if !is_missing(v) => {
            let parsed =
                v.parse::<f64>().map_err(|_| format!("unparseable numeric {v:?} for eaf"))?;
            if !(parsed > 0.0 && parsed < 1.0) {
                return Err(format!("allele frequency {parsed} outside (0,1)"));
            }
            Some(parsed)
        }
        _ => None,
    };
    let chr = match get("chr") {
        Some(v) if !is_missing(v) => Some(v.to_string()),
        _ => None,
    };
    let pos = match get("pos") {
        Some(v) if !is_missing(v) => {
            Some(v.parse::<u64>().map_err(|_| format!("unparseable position {v:?}"))?)
        }
        _ => None,
    };
    if !beta.is_finite() {
        return Err("non-finite effect size".to_string());
    }
    Ok(HalfRecord { snp_id, effect_allele, other_allele, beta, se, pval, eaf, chr, pos })
}

fn opt_to_na<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "NA".to_string())
}

/// Canonical harmonized TSV: one row per SNP carrying both association
/// sides. Floats print in shortest round-trip form, so write-then-read is
/// lossless.
pub fn write_summary_tsv<W: Write>(data: &SummaryDataset, mut out: W) -> Result<()> {
    writeln!(
        out,
        "snp_id\teffect_allele\tother_allele\tbeta_exposure\tse_exposure\tpval_exposure\tbeta_outcome\tse_outcome\teaf\tchr\tpos"
    )?;
    for r in &data.records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.snp_id,
            r.effect_allele,
            r.other_allele,
            r.gamma_hat,
            opt_to_na(&r.se_gamma),
            r.pval_exposure,
            r.big_gamma_hat,
            r.se_big_gamma,
            opt_to_na(&r.eaf),
            opt_to_na(&r.chr),
            opt_to_na(&r.pos),
        )?;
    }
    Ok(())
}

/// Reads the canonical harmonized TSV back into a dataset.
pub fn read_summary_tsv(path: &Path, design: Design) -> Result<SummaryDataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Data("empty file".to_string()))?;
    let expected = "snp_id\teffect_allele\tother_allele\tbeta_exposure\tse_exposure\tpval_exposure\tbeta_outcome\tse_outcome\teaf\tchr\tpos";
    if header != expected {
        return Err(CliError::Data(format!(
            "unexpected header for harmonized TSV: {header:?}"
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 11 {
            return Err(CliError::Data(format!("line {}: expected 11 fields", i + 2)));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| CliError::Data(format!("line {}: bad number {s:?}", i + 2)))
        };
        let opt_f = |s: &str| -> Result<Option<f64>> {
            if is_missing(s) {
                Ok(None)
            } else {
                parse_f(s).map(Some)
            }
        };
        records.push(SnpRecord {
            snp_id: fields[0].to_string(),
            effect_allele: fields[1].chars().next().unwrap_or('N'),
            other_allele: fields[2].chars().next().unwrap_or('N'),
            gamma_hat: parse_f(fields[3])?,
            se_gamma: opt_f(fields[4])?,
            pval_exposure: parse_f(fields[5])?,
            big_gamma_hat: parse_f(fields[6])?,
            se_big_gamma: parse_f(fields[7])?,
            eaf: opt_f(fields[8])?,
            chr: if is_missing(fields[9]) { None } else { Some(fields[9].to_string()) },
            pos: if is_missing(fields[10]) {
                None
            } else {
                Some(fields[10].parse().map_err(|_| {
                    CliError::Data(format!("line {}: bad position {:?}", i + 2, fields[10]))
                })?)
            },
        });
    }
    Ok(SummaryDataset::new(records, design))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdFormat {
    Auto,
    Dense,
    Triplet,
}

impl std::str::FromStr for LdFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(LdFormat::Auto),
            "dense" => Ok(LdFormat::Dense),
            "triplet" => Ok(LdFormat::Triplet),
            other => Err(format!("unknown LD format {other:?}")),
        }
    }
}

/// Loads an LD correlation matrix.
///
/// Dense: a square TSV whose first row and first column list SNP ids.
/// Triplet: rows of `id_a id_b r` (an optional header is skipped). `universe`
/// supplies ids that must be covered even when absent from a triplet list;
/// unlisted pairs are uncorrelated.
pub fn load_ld(path: &Path, format: LdFormat, universe: &[String]) -> Result<LdMatrix> {
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let dense = match format {
        LdFormat::Auto => lines[0].split('\t').count() != 3,
        LdFormat::Dense => true,
        LdFormat::Triplet => false,
    };
    if dense {
        {
            let header: Vec<&str> = lines[0].split('\t').collect();
            let ids: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
            let n = ids.len();
            if lines.len() != n + 1 {
                return Err(CliError::Data(format!(
                    "dense LD matrix: {} ids but {} data rows",
                    n,
                    lines.len() - 1
                )));
            }
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
            for (i, line) in lines[1..].iter().enumerate() {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != n + 1 {
                    return Err(CliError::Data(format!("dense LD row {} has wrong width", i + 2)));
                }
                if fields[0] != ids[i] {
                    return Err(CliError::Data(format!(
                        "dense LD row label {:?} does not match header order",
                        fields[0]
                    )));
                }
                let mut row = Vec::with_capacity(n);
                for field in &fields[1..] {
                    row.push(
                        field
                            .parse()
                            .map_err(|_| CliError::Data(format!("bad correlation {field:?}")))?,
                    );
                }
                rows.push(row);
            }
            Ok(LdMatrix::from_rows(ids, rows)?)
        }
    } else {
        {
            let mut triplets = Vec::new();
            for (i, line) in lines.iter().enumerate() {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(CliError::Data(format!("triplet row {} needs 3 fields", i + 1)));
                }
                match fields[2].parse::<f64>() {
                    Ok(r) => triplets.push((fields[0].to_string(), fields[1].to_string(), r)),
                    Err(_) if i == 0 => continue, // header row
                    Err(_) => {
                        return Err(CliError::Data(format!(
                            "bad correlation {:?} on row {}",
                            fields[2],
                            i + 1
                        )))
                    }
                }
            }
            let mut ids: Vec<String> = universe.to_vec();
            for (a, b, _) in &triplets {
                if !ids.contains(a) {
                    ids.push(a.clone());
                }
                if !ids.contains(b) {
                    ids.push(b.clone());
                }
            }
            Ok(LdMatrix::from_triplets(ids, &triplets)?)
        }
    }
}

/// Loads a causal population from its JSON document.
pub fn load_population(path: &Path) -> Result<CausalPopulation> {
    let text = fs::read_to_string(path)?;
    let pop: CausalPopulation = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(pop)
}

/// Loads an experiment configuration from TOML or JSON, by file extension.
pub fn load_experiment_config(path: &Path) -> Result<BiasExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let cfg: BiasExperimentConfig = if ext.eq_ignore_ascii_case("toml") {
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
    };
    Ok(cfg)
}
