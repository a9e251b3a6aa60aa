//! Allele harmonization between exposure-side and outcome-side summary
//! statistics.
//!
//! Records join on SNP id. When the outcome's effect allele equals the
//! exposure's other allele (and vice versa) the outcome association flips
//! sign. Strand-ambiguous palindromic variants are dropped by default; with
//! allele frequencies on both sides they can instead be resolved when both
//! frequencies sit conclusively away from one half.

use std::collections::HashMap;

use mrkit::types::{Design, SnpRecord, SummaryDataset};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::formats::HalfRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PalindromicPolicy {
    Drop,
    /// Use effect-allele frequencies when both sides are at least this far
    /// from 0.5.
    EafResolve { threshold: f64 },
}

impl Default for PalindromicPolicy {
    fn default() -> Self {
        PalindromicPolicy::Drop
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Kept,
    Flipped,
    KeptByEaf,
    FlippedByEaf,
    DroppedPalindromic,
    DroppedUnmatched,
    DroppedAlleleMismatch,
}

/// Per-run harmonization accounting. `n_matched = n_flipped + n_unchanged`;
/// allele-incompatible pairs count toward `n_dropped_unmatched`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HarmonizationReport {
    pub n_matched: usize,
    pub n_flipped: usize,
    pub n_unchanged: usize,
    pub n_dropped_ambiguous: usize,
    pub n_dropped_unmatched: usize,
    pub actions: Vec<(String, Action)>,
}

fn is_palindromic(a: char, b: char) -> bool {
    matches!((a, b), ('A', 'T') | ('T', 'A') | ('C', 'G') | ('G', 'C'))
}

enum Alignment {
    AsIs,
    Flip,
    Incompatible,
}

fn textual_alignment(exposure: &HalfRecord, outcome: &HalfRecord) -> Alignment {
    if outcome.effect_allele == exposure.effect_allele
        && outcome.other_allele == exposure.other_allele
    {
        Alignment::AsIs
    } else if outcome.effect_allele == exposure.other_allele
        && outcome.other_allele == exposure.effect_allele
    {
        Alignment::Flip
    } else {
        Alignment::Incompatible
    }
}

/// Joins the two halves into a harmonized dataset. Exposure-side order is
/// preserved for kept records.
pub fn harmonize(
    exposure: &[HalfRecord],
    outcome: &[HalfRecord],
    design: Design,
    policy: PalindromicPolicy,
) -> Result<(SummaryDataset, HarmonizationReport)> {
    let by_id: HashMap<&str, &HalfRecord> =
        outcome.iter().map(|r| (r.snp_id.as_str(), r)).collect();
    let mut report = HarmonizationReport::default();
    let mut records = Vec::new();

    for exp in exposure {
        let mut log = |action: Action| report.actions.push((exp.snp_id.clone(), action));
        let Some(out) = by_id.get(exp.snp_id.as_str()) else {
            report.n_dropped_unmatched += 1;
            log(Action::DroppedUnmatched);
            continue;
        };

        let alignment = textual_alignment(exp, out);
        if matches!(alignment, Alignment::Incompatible) {
            report.n_dropped_unmatched += 1;
            log(Action::DroppedAlleleMismatch);
            continue;
        }

        let palindromic = is_palindromic(exp.effect_allele, exp.other_allele);
        let (flip, action) = if palindromic {
            match policy {
                PalindromicPolicy::Drop => {
                    report.n_dropped_ambiguous += 1;
                    log(Action::DroppedPalindromic);
                    continue;
                }
                PalindromicPolicy::EafResolve { threshold } => {
                    // Textual alignment first, then frequency concordance.
                    let out_eaf_aligned = match (alignment, out.eaf) {
                        (Alignment::AsIs, Some(f)) => Some(f),
                        (Alignment::Flip, Some(f)) => Some(1.0 - f),
                        _ => None,
                    };
                    match (exp.eaf, out_eaf_aligned) {
                        (Some(fe), Some(fo))
                            if (fe - 0.5).abs() > threshold && (fo - 0.5).abs() > threshold =>
                        {
                            let concordant = (fe - 0.5) * (fo - 0.5) > 0.0;
                            let textual_flip = matches!(
                                textual_alignment(exp, out),
                                Alignment::Flip
                            );
                            if concordant {
                                (textual_flip, if textual_flip { Action::FlippedByEaf } else { Action::KeptByEaf })
                            } else {
                                // Opposite strand: the textual alignment is
                                // inverted.
                                (!textual_flip, if textual_flip { Action::KeptByEaf } else { Action::FlippedByEaf })
                            }
                        }
                        _ => {
                            report.n_dropped_ambiguous += 1;
                            log(Action::DroppedPalindromic);
                            continue;
                        }
                    }
                }
            }
        } else {
            match alignment {
                Alignment::AsIs => (false, Action::Kept),
                Alignment::Flip => (true, Action::Flipped),
                Alignment::Incompatible => unreachable!("handled above"),
            }
        };

        report.n_matched += 1;
        if flip {
            report.n_flipped += 1;
        } else {
            report.n_unchanged += 1;
        }
        log(action);
        records.push(SnpRecord {
            snp_id: exp.snp_id.clone(),
            effect_allele: exp.effect_allele,
            other_allele: exp.other_allele,
            gamma_hat: exp.beta,
            se_gamma: Some(exp.se),
            big_gamma_hat: if flip { -out.beta } else { out.beta },
            se_big_gamma: out.se,
            pval_exposure: exp.pval,
            eaf: exp.eaf,
            chr: exp.chr.clone(),
            pos: exp.pos,
        });
    }

    if records.is_empty() {
        return Err(CliError::Data("no overlapping SNPs after harmonization".to_string()));
    }
    Ok((SummaryDataset::new(records, design), report))
}
