//! Valid-instrument selection: LD clumping, relevance thresholding, pairwise
//! validity voting, exact maximum-clique selection, and the resampling-based
//! uniformly valid confidence interval.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MrError, Result};
use crate::stats::{derive_seed, two_sided_p};
use crate::summary::{ivw_estimate_with, IvwOptions};
use crate::types::{SnpRecord, SummaryDataset};

/// Default voting threshold for `p` relevant instruments: the normal
/// quantile bounding all `p^2` directed votes at familywise level 1%
/// (`z_{1 - 0.01 / (2 p^2)}`).
///
/// A valid pair's violation statistic is a centered normal, so the
/// probability that any valid vote is lost stays near 1% regardless of `p`;
/// looser rules such as `sqrt(2 log p)` lose valid votes often enough that
/// the full valid clique rarely survives.
pub fn default_lambda(p: usize) -> f64 {
    let p = p.max(1) as f64;
    crate::stats::normal_quantile(1.0 - 0.01 / (2.0 * p * p))
}

/// Pairwise correlation matrix over SNP ids (values are signed correlations;
/// clumping compares their squares).
#[derive(Debug, Clone)]
pub struct LdMatrix {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    corr: DMatrix<f64>,
}

impl LdMatrix {
    pub fn new(ids: Vec<String>, corr: DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if corr.nrows() != n || corr.ncols() != n {
            return Err(MrError::InvalidInput(format!(
                "LD matrix is {}x{} but there are {n} ids",
                corr.nrows(),
                corr.ncols()
            )));
        }
        for i in 0..n {
            if (corr[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(MrError::InvalidInput(format!("LD diagonal for {} is not 1", ids[i])));
            }
            for j in 0..i {
                if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-9 {
                    return Err(MrError::InvalidInput(format!(
                        "LD matrix asymmetric at ({}, {})",
                        ids[i], ids[j]
                    )));
                }
                if corr[(i, j)].abs() > 1.0 + 1e-9 {
                    return Err(MrError::InvalidInput(format!(
                        "LD correlation out of range at ({}, {})",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        let index = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        Ok(LdMatrix { ids, index, corr })
    }

    /// Identity LD over the given ids (no correlation between variants).
    pub fn identity(ids: Vec<String>) -> Self {
        let n = ids.len();
        LdMatrix::new(ids, DMatrix::identity(n, n)).expect("identity is valid")
    }

    /// Builds a matrix from row-major correlation data.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MrError::InvalidInput(format!("LD rows do not form an {n}x{n} matrix")));
        }
        let corr = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        LdMatrix::new(ids, corr)
    }

    /// Builds a matrix over `ids` from sparse `(id_a, id_b, r)` entries;
    /// unlisted pairs are uncorrelated. Conflicting duplicates are rejected.
    pub fn from_triplets(ids: Vec<String>, triplets: &[(String, String, f64)]) -> Result<Self> {
        let n = ids.len();
        let index: HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut corr = DMatrix::identity(n, n);
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        for (a, b, r) in triplets {
            let (&i, &j) = match (index.get(a.as_str()), index.get(b.as_str())) {
                (Some(i), Some(j)) => (i, j),
                _ => continue, // entries outside the universe are irrelevant
            };
            let key = (i.min(j), i.max(j));
            if let Some(prev) = seen.get(&key) {
                if (prev - r).abs() > 1e-9 {
                    return Err(MrError::InvalidInput(format!(
                        "conflicting LD entries for ({a}, {b})"
                    )));
                }
                continue;
            }
            if i == j {
                if (r - 1.0).abs() > 1e-9 {
                    return Err(MrError::InvalidInput(format!("self-correlation for {a} is not 1")));
                }
                continue;
            }
            seen.insert(key, *r);
            corr[(i, j)] = *r;
            corr[(j, i)] = *r;
        }
        LdMatrix::new(ids, corr)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn lookup(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| MrError::MissingLdEntry(id.to_string()))
    }

    pub fn r(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.corr[(self.lookup(a)?, self.lookup(b)?)])
    }
}

/// Greedy LD clumping: visit SNPs by ascending exposure p-value (ties broken
/// by id) and keep a SNP iff its squared correlation with every already-kept
/// SNP is below the threshold. When a base-pair `window` is given, only
/// comparisons between SNPs on the same chromosome within the window apply.
/// Kept records are returned in their original order.
pub fn ld_clump(
    data: &SummaryDataset,
    ld: &LdMatrix,
    r2_threshold: f64,
    window: Option<u64>,
) -> Result<SummaryDataset> {
    for rec in &data.records {
        ld.lookup(&rec.snp_id)?;
    }
    let mut order: Vec<usize> = (0..data.records.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = &data.records[a];
        let rb = &data.records[b];
        ra.pval_exposure
            .total_cmp(&rb.pval_exposure)
            .then_with(|| ra.snp_id.cmp(&rb.snp_id))
    });

    let comparable = |a: &SnpRecord, b: &SnpRecord| -> bool {
        let Some(w) = window else { return true };
        match (a.pos, b.pos) {
            (Some(pa), Some(pb)) => {
                let same_chr = match (&a.chr, &b.chr) {
                    (Some(ca), Some(cb)) => ca == cb,
                    _ => true,
                };
                same_chr && pa.abs_diff(pb) <= w
            }
            // Without positions the comparison stays in force.
            _ => true,
        }
    };

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let rec = &data.records[i];
        let mut independent = true;
        for &k in &kept {
            let other = &data.records[k];
            if !comparable(rec, other) {
                continue;
            }
            let r = ld.r(&rec.snp_id, &other.snp_id)?;
            if r * r >= r2_threshold {
                independent = false;
                break;
            }
        }
        if independent {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let records = kept.into_iter().map(|i| data.records[i].clone()).collect();
    Ok(SummaryDataset { records, design: data.design, n_exposure: data.n_exposure, n_outcome: data.n_outcome })
}

/// Keeps records with exposure p-value strictly below the threshold, order
/// preserved.
pub fn select_relevant(data: &SummaryDataset, p_threshold: f64) -> Result<SummaryDataset> {
    let records: Vec<SnpRecord> = data
        .records
        .iter()
        .filter(|r| r.pval_exposure < p_threshold)
        .cloned()
        .collect();
    if records.is_empty() {
        return Err(MrError::NoRelevantInstruments);
    }
    Ok(SummaryDataset { records, design: data.design, n_exposure: data.n_exposure, n_outcome: data.n_outcome })
}

/// Mutual-validity votes among relevant instruments: symmetric with a unit
/// diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingMatrix {
    pub ids: Vec<String>,
    /// Exposure associations, used to rank tied cliques by total strength.
    pub strengths: Vec<f64>,
    pub votes: Vec<Vec<bool>>,
    pub lambda: f64,
}

/// Builds the voting matrix. For each instrument `j`, its ratio estimate is
/// treated as the causal effect and every instrument `k` receives the
/// violation estimate `pi_jk = Gamma_k - beta_j * gamma_k`; `k` votes for `j`
/// when `|pi_jk| <= lambda * se(pi_jk)` with the plug-in delta-method SE
/// `sqrt(se_Gamma_k^2 + beta_j^2 se_gamma_k^2)`. Directed votes are combined
/// by logical AND.
pub fn voting_matrix(data: &SummaryDataset, lambda: f64) -> Result<VotingMatrix> {
    if lambda < 0.0 {
        return Err(MrError::InvalidConfig("lambda must be nonnegative".to_string()));
    }
    let p = data.len();
    if p == 0 {
        return Err(MrError::InsufficientInstruments { got: 0, need: 1 });
    }
    let mut se_gamma = Vec::with_capacity(p);
    for rec in &data.records {
        if rec.gamma_hat == 0.0 {
            return Err(MrError::NullInstrument);
        }
        se_gamma
            .push(rec.se_gamma.ok_or_else(|| MrError::ExposureSeRequired(rec.snp_id.clone()))?);
    }
    let betas: Vec<f64> =
        data.records.iter().map(|r| r.big_gamma_hat / r.gamma_hat).collect();

    let directed = |j: usize, k: usize| -> bool {
        let rec_k = &data.records[k];
        let pi = rec_k.big_gamma_hat - betas[j] * rec_k.gamma_hat;
        let se = (rec_k.se_big_gamma * rec_k.se_big_gamma
            + betas[j] * betas[j] * se_gamma[k] * se_gamma[k])
            .sqrt();
        pi.abs() <= lambda * se
    };

    let mut votes = vec![vec![false; p]; p];
    for j in 0..p {
        votes[j][j] = true;
        for k in 0..j {
            let mutual = directed(j, k) && directed(k, j);
            votes[j][k] = mutual;
            votes[k][j] = mutual;
        }
    }
    Ok(VotingMatrix {
        ids: data.records.iter().map(|r| r.snp_id.clone()).collect(),
        strengths: data.records.iter().map(|r| r.gamma_hat).collect(),
        votes,
        lambda,
    })
}

/// Relevant set, selected valid set, and any co-maximal cliques.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub relevant_set: Vec<String>,
    pub valid_set: Vec<String>,
    /// Every maximum clique when the maximum is not unique; empty otherwise.
    pub ties: Vec<Vec<String>>,
    pub threshold_used: f64,
}

// Small fixed-capacity bitset for the clique search.
#[derive(Clone, PartialEq)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn empty(n: usize) -> Self {
        Bits { words: vec![0; n.div_ceil(64)] }
    }
    fn full(n: usize) -> Self {
        let mut b = Bits::empty(n);
        for i in 0..n {
            b.set(i);
        }
        b
    }
    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }
    fn unset(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }
    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits { words: self.words.iter().zip(&o.words).map(|(a, b)| a & b).collect() }
    }
    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
    }
}

/// Bron-Kerbosch with pivoting and a size bound, collecting every maximum
/// clique (all maximum cliques are maximal, and the bound only prunes
/// branches that cannot reach the incumbent size).
fn all_maximum_cliques(adj: &[Bits], n: usize) -> Vec<Vec<usize>> {
    let mut best = 1usize;
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut r: Vec<usize> = Vec::new();
    bron_kerbosch(adj, &mut r, Bits::full(n), Bits::empty(n), &mut best, &mut out);
    out
}

fn bron_kerbosch(
    adj: &[Bits],
    r: &mut Vec<usize>,
    p: Bits,
    x: Bits,
    best: &mut usize,
    out: &mut Vec<Vec<usize>>,
) {
    if r.len() + p.count() < *best {
        return;
    }
    if p.is_empty() && x.is_empty() {
        if r.len() > *best {
            *best = r.len();
            out.clear();
        }
        if r.len() == *best {
            let mut clique = r.clone();
            clique.sort_unstable();
            out.push(clique);
        }
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| p.and(&adj[u]).count())
        .expect("p or x is nonempty");
    let mut p = p;
    let mut x = x;
    let candidates: Vec<usize> = p.iter().filter(|&v| !adj[pivot].contains(v)).collect();
    for v in candidates {
        r.push(v);
        bron_kerbosch(adj, r, p.and(&adj[v]), x.and(&adj[v]), best, out);
        r.pop();
        p.unset(v);
        x.set(v);
    }
}

/// Exact maximum clique of the voting matrix. Among co-maximal cliques the
/// one with the largest total instrument strength (sum of squared exposure
/// associations) wins, then lexicographic id order; all maximum cliques are
/// reported in `ties` when the maximum is not unique.
pub fn max_clique_valid_set(vm: &VotingMatrix) -> SelectionResult {
    let n = vm.ids.len();
    let mut adj: Vec<Bits> = (0..n).map(|_| Bits::empty(n)).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && vm.votes[i][j] {
                adj[i].set(j);
            }
        }
    }
    let cliques = all_maximum_cliques(&adj, n);
    let id_list = |clique: &[usize]| -> Vec<String> {
        clique.iter().map(|&i| vm.ids[i].clone()).collect()
    };
    let strength = |clique: &[usize]| -> f64 {
        clique.iter().map(|&i| vm.strengths[i] * vm.strengths[i]).sum()
    };
    let winner = cliques
        .iter()
        .max_by(|a, b| {
            strength(a)
                .total_cmp(&strength(b))
                .then_with(|| id_list(b).cmp(&id_list(a)))
        })
        .expect("at least one clique exists");

    let ties = if cliques.len() > 1 {
        let mut lists: Vec<Vec<String>> = cliques.iter().map(|c| id_list(c)).collect();
        lists.sort();
        lists
    } else {
        Vec::new()
    };
    SelectionResult {
        relevant_set: vm.ids.clone(),
        valid_set: id_list(winner),
        ties,
        threshold_used: vm.lambda,
    }
}

/// Convenience pipeline: vote with the default threshold and take the
/// maximum clique.
pub fn select_valid_instruments(data: &SummaryDataset, lambda: Option<f64>) -> Result<SelectionResult> {
    let lambda = lambda.unwrap_or_else(|| default_lambda(data.len()));
    let vm = voting_matrix(data, lambda)?;
    Ok(max_clique_valid_set(&vm))
}

#[derive(Debug, Clone, Copy)]
pub struct RobustCiOptions {
    pub alpha: f64,
    /// Total number of resamples including the unperturbed resample 0.
    pub n_resamples: usize,
    /// Voting threshold; default is `sqrt(2 log p)` per resample.
    pub lambda: Option<f64>,
    /// Relevance threshold re-applied to each resample's exposure z-scores.
    pub p_threshold: f64,
    pub seed: u64,
}

impl Default for RobustCiOptions {
    fn default() -> Self {
        RobustCiOptions {
            alpha: 0.05,
            n_resamples: 100,
            lambda: None,
            p_threshold: 5e-8,
            seed: 0,
        }
    }
}

/// Uniformly valid confidence interval for the causal effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustCi {
    pub lower: f64,
    pub upper: f64,
    /// IVW point estimate on the unperturbed selection.
    pub point: f64,
    /// Plug-in Wald interval on the unperturbed selection; always contained
    /// in `[lower, upper]`.
    pub pointwise_lower: f64,
    pub pointwise_upper: f64,
    pub n_resamples: usize,
    pub n_skipped: usize,
    pub selection: SelectionResult,
}

/// Builds the robust interval by rerunning selection on parametric resamples
/// of the associations and taking the union of the per-selection Wald
/// pseudo-intervals.
///
/// Resample 0 uses the observed associations, so the plug-in interval is a
/// member of the union by construction. Each later resample draws
/// `gamma* ~ N(gamma_hat, se_gamma)` and `Gamma* ~ N(Gamma_hat, se_Gamma)`
/// independently across SNPs, re-applies the relevance threshold, votes,
/// takes the maximum clique, and forms the IVW Wald interval from the
/// observed associations restricted to the reselected set. Resamples whose
/// relevant set is empty are skipped and counted; more than half skipped is
/// an error.
pub fn robust_confidence_interval(
    data: &SummaryDataset,
    opts: RobustCiOptions,
) -> Result<RobustCi> {
    if opts.n_resamples == 0 {
        return Err(MrError::InvalidConfig("need at least one resample".to_string()));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(MrError::InvalidConfig("alpha must be in (0,1)".to_string()));
    }
    let p = data.len();
    if p == 0 {
        return Err(MrError::NoRelevantInstruments);
    }
    let mut se_gamma = Vec::with_capacity(p);
    for rec in &data.records {
        se_gamma
            .push(rec.se_gamma.ok_or_else(|| MrError::ExposureSeRequired(rec.snp_id.clone()))?);
    }

    let ivw_on = |indices: &[usize]| -> Result<(f64, f64, f64)> {
        let subset = SummaryDataset {
            records: indices.iter().map(|&i| data.records[i].clone()).collect(),
            design: data.design,
            n_exposure: data.n_exposure,
            n_outcome: data.n_outcome,
        };
        let est = ivw_estimate_with(&subset, IvwOptions { random_effects: false, alpha: opts.alpha })?;
        Ok((est.beta_hat, est.ci_lower.unwrap(), est.ci_upper.unwrap()))
    };

    let run_selection = |gammas: &[f64], big_gammas: &[f64]| -> Option<Vec<usize>> {
        let relevant: Vec<usize> = (0..p)
            .filter(|&j| {
                gammas[j] != 0.0
                    && two_sided_p(gammas[j] / se_gamma[j]) < opts.p_threshold
            })
            .collect();
        if relevant.is_empty() {
            return None;
        }
        let subset = SummaryDataset {
            records: relevant
                .iter()
                .map(|&j| {
                    let mut r = data.records[j].clone();
                    r.gamma_hat = gammas[j];
                    r.big_gamma_hat = big_gammas[j];
                    r
                })
                .collect(),
            design: data.design,
            n_exposure: data.n_exposure,
            n_outcome: data.n_outcome,
        };
        let lambda = opts.lambda.unwrap_or_else(|| default_lambda(relevant.len()));
        let vm = voting_matrix(&subset, lambda).ok()?;
        let selection = max_clique_valid_set(&vm);
        let chosen: Vec<usize> = relevant
            .into_iter()
            .filter(|&j| selection.valid_set.contains(&data.records[j].snp_id))
            .collect();
        Some(chosen)
    };

    // Resample 0: unperturbed. Its full selection detail is kept for the
    // report.
    let observed_gamma: Vec<f64> = data.records.iter().map(|r| r.gamma_hat).collect();
    let base_relevant: Vec<usize> = (0..p)
        .filter(|&j| {
            observed_gamma[j] != 0.0
                && two_sided_p(observed_gamma[j] / se_gamma[j]) < opts.p_threshold
        })
        .collect();
    if base_relevant.is_empty() {
        return Err(MrError::NoRelevantInstruments);
    }
    let selection = {
        let subset = SummaryDataset {
            records: base_relevant.iter().map(|&j| data.records[j].clone()).collect(),
            design: data.design,
            n_exposure: data.n_exposure,
            n_outcome: data.n_outcome,
        };
        let lambda = opts.lambda.unwrap_or_else(|| default_lambda(base_relevant.len()));
        let vm = voting_matrix(&subset, lambda)?;
        max_clique_valid_set(&vm)
    };
    let base_indices: Vec<usize> = base_relevant
        .iter()
        .copied()
        .filter(|&j| selection.valid_set.contains(&data.records[j].snp_id))
        .collect();
    let (point, mut lower, mut upper) = ivw_on(&base_indices)?;
    let (pointwise_lower, pointwise_upper) = (lower, upper);

    let mut n_skipped = 0usize;
    for rep in 1..opts.n_resamples {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(opts.seed, rep as u64));
        let mut gammas = Vec::with_capacity(p);
        let mut bigs = Vec::with_capacity(p);
        for (j, rec) in data.records.iter().enumerate() {
            let g = Normal::new(rec.gamma_hat, se_gamma[j]).unwrap();
            let b = Normal::new(rec.big_gamma_hat, rec.se_big_gamma).unwrap();
            gammas.push(g.sample(&mut rng));
            bigs.push(b.sample(&mut rng));
        }
        match run_selection(&gammas, &bigs) {
            Some(indices) => match ivw_on(&indices) {
                Ok((_, lo, hi)) => {
                    lower = lower.min(lo);
                    upper = upper.max(hi);
                }
                Err(_) => n_skipped += 1,
            },
            None => n_skipped += 1,
        }
    }
    if n_skipped * 2 > opts.n_resamples {
        return Err(MrError::UnstableSelection { skipped: n_skipped, total: opts.n_resamples });
    }

    Ok(RobustCi {
        lower,
        upper,
        point,
        pointwise_lower,
        pointwise_upper,
        n_resamples: opts.n_resamples,
        n_skipped,
        selection,
    })
}
