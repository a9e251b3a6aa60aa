//! Command-line surface for the Mendelian randomization toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mrkit::alice::run_bias_experiment;
use mrkit::estimand::{
    check_assumptions, compute_estimand, compute_estimand_exact, enumerate_compliance,
    usual_iv_estimand, usual_iv_estimand_exact, EstimandKind,
};
use mrkit::select::{
    ld_clump, robust_confidence_interval, select_relevant, select_valid_instruments, LdMatrix,
    RobustCiOptions,
};
use mrkit::summary::{
    egger_estimate, ivw_estimate_with, mode_based_estimate, ratio_estimate,
    weighted_median_estimate, IvwOptions, MedianOptions, ModeOptions, RatioSeMode,
};
use mrkit::types::{Design, DiagValue, EstimateResult, SummaryDataset};

use mrkit_cli::error::{CliError, Result};
use mrkit_cli::formats::{self, FormatSpec, LdFormat, ParseOutcome};
use mrkit_cli::harmonize::{harmonize, PalindromicPolicy};
use mrkit_cli::report;

#[derive(Parser)]
#[command(
    name = "mrkit",
    version,
    about = "Mendelian randomization toolkit: estimators, instrument selection, and bias simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run summary-data estimators on harmonized exposure/outcome files.
    Estimate(EstimateArgs),
    /// Clump, threshold, vote, and report the selected valid instruments.
    SelectIvs(SelectArgs),
    /// Uniformly valid confidence interval via resampled reselection.
    RobustCi(RobustArgs),
    /// Run a simulation experiment from a configuration file.
    Simulate(SimulateArgs),
    /// Check identification assumptions and estimands on a population JSON.
    EstimandCheck(EstimandArgs),
    /// Parse and validate a summary-statistics file without estimating.
    ParseCheck(ParseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignArg {
    OneSample,
    TwoSample,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Design {
        match d {
            DesignArg::OneSample => Design::OneSample,
            DesignArg::TwoSample => Design::TwoSample,
        }
    }
}

#[derive(Args)]
struct SummaryInputArgs {
    /// Exposure-side GWAS summary statistics (TSV).
    #[arg(long)]
    exposure: PathBuf,
    /// Outcome-side GWAS summary statistics (TSV).
    #[arg(long)]
    outcome: PathBuf,
    /// Whether the two sides come from the same sample.
    #[arg(long, value_enum, default_value_t = DesignArg::TwoSample)]
    design: DesignArg,
    /// Abort on the first malformed row instead of collecting row errors.
    #[arg(long)]
    strict: bool,
    /// Resolve palindromic SNPs by allele frequency instead of dropping them.
    #[arg(long)]
    resolve_palindromic_by_eaf: bool,
    /// Distance from 0.5 both frequencies must exceed for resolution.
    #[arg(long, default_value_t = 0.08)]
    eaf_threshold: f64,
    /// Write the harmonized dataset as canonical TSV.
    #[arg(long)]
    harmonized_out: Option<PathBuf>,
    /// Write the harmonization report as JSON.
    #[arg(long)]
    harmonization_report: Option<PathBuf>,
}

impl SummaryInputArgs {
    fn load(&self) -> Result<SummaryDataset> {
        let spec = FormatSpec { strict: self.strict, ..Default::default() };
        let exposure = self.parse_side(&self.exposure, &spec)?;
        let outcome = self.parse_side(&self.outcome, &spec)?;
        let policy = if self.resolve_palindromic_by_eaf {
            PalindromicPolicy::EafResolve { threshold: self.eaf_threshold }
        } else {
            PalindromicPolicy::Drop
        };
        let (data, report) =
            harmonize(&exposure.records, &outcome.records, self.design.into(), policy)?;
        eprintln!(
            "harmonized {} SNPs ({} flipped, {} palindromic dropped, {} unmatched dropped)",
            report.n_matched,
            report.n_flipped,
            report.n_dropped_ambiguous,
            report.n_dropped_unmatched
        );
        if let Some(path) = &self.harmonized_out {
            let mut buf = Vec::new();
            formats::write_summary_tsv(&data, &mut buf)?;
            fs::write(path, buf)?;
        }
        if let Some(path) = &self.harmonization_report {
            fs::write(path, serde_json::to_string_pretty(&report)?)?;
        }
        let problems = data.validate();
        if !problems.is_empty() {
            return Err(CliError::Data(format!(
                "harmonized dataset failed validation: {}",
                problems.join("; ")
            )));
        }
        Ok(data)
    }

    fn parse_side(&self, path: &Path, spec: &FormatSpec) -> Result<ParseOutcome> {
        let outcome = formats::parse_summary_stats(path, spec)?;
        for err in &outcome.errors {
            eprintln!("{}:{}: {}", path.display(), err.line, err.message);
        }
        Ok(outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    All,
    Ivw,
    WeightedMedian,
    ModeBased,
    Egger,
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    SvgForest,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: SummaryInputArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    /// Inflate the IVW standard error by the Cochran-Q overdispersion factor.
    #[arg(long)]
    random_effects: bool,
    /// Add exposure-side noise to ratio standard errors (needs exposure SEs).
    #[arg(long)]
    second_order_se: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates behind the weighted-median standard error.
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    /// Seed for randomized steps; generated and reported when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier on the mode estimator's Silverman bandwidth.
    #[arg(long, default_value_t = 1.0)]
    bandwidth_factor: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LdArgs {
    /// LD matrix file (dense square TSV or id/id/r triplets).
    #[arg(long)]
    ld: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LdFormatArg::Auto)]
    ld_format: LdFormatArg,
    /// Squared-correlation threshold for greedy clumping.
    #[arg(long, default_value_t = 0.01)]
    r2: f64,
    /// Base-pair window restricting LD comparisons.
    #[arg(long)]
    window: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LdFormatArg {
    Auto,
    Dense,
    Triplet,
}

impl From<LdFormatArg> for LdFormat {
    fn from(f: LdFormatArg) -> LdFormat {
        match f {
            LdFormatArg::Auto => LdFormat::Auto,
            LdFormatArg::Dense => LdFormat::Dense,
            LdFormatArg::Triplet => LdFormat::Triplet,
        }
    }
}

impl LdArgs {
    fn clump(&self, data: &SummaryDataset) -> Result<SummaryDataset> {
        let ids: Vec<String> = data.records.iter().map(|r| r.snp_id.clone()).collect();
        let ld = match &self.ld {
            Some(path) => formats::load_ld(path, self.ld_format.into(), &ids)?,
            None => LdMatrix::identity(ids),
        };
        Ok(ld_clump(data, &ld, self.r2, self.window)?)
    }
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: SummaryInputArgs,
    #[command(flatten)]
    ld: LdArgs,
    /// Exposure p-value threshold for instrument relevance.
    #[arg(long, default_value_t = 5e-8)]
    p_threshold: f64,
    /// Voting threshold; defaults to sqrt(2 log p) over the relevant set.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RobustArgs {
    #[command(flatten)]
    input: SummaryInputArgs,
    #[command(flatten)]
    ld: LdArgs,
    #[arg(long, default_value_t = 5e-8)]
    p_threshold: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Number of resamples, including the unperturbed one.
    #[arg(long, default_value_t = 100)]
    resamples: usize,
    /// Seed for the parametric resampling; generated and reported when
    /// omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment configuration (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed recorded in the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report as JSON.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Write the report as CSV; stdout gets CSV when omitted.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EstimandArgs {
    /// Population JSON document.
    #[arg(long)]
    population: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParseArgs {
    /// Summary-statistics TSV to validate.
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let usage_ok =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if usage_ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn configure_threads() {
    if let Ok(value) = std::env::var("MRKIT_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Entropy seed from the process-random hasher; used only when the caller
/// does not pass one, and always echoed into the output.
fn entropy_seed() -> u64 {
    use std::collections::hash_map::RandomState;
    use std::hash::{BuildHasher, Hasher};
    use std::time::{SystemTime, UNIX_EPOCH};
    let mut h = RandomState::new().build_hasher();
    h.write_u128(SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_nanos());
    h.finish()
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::SelectIvs(args) => cmd_select(args),
        Command::RobustCi(args) => cmd_robust(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::EstimandCheck(args) => cmd_estimand_check(args),
        Command::ParseCheck(args) => cmd_parse_check(args),
    }
}

fn require_unit_interval(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be in (0, 1), got {value}")))
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    require_unit_interval("alpha", args.alpha)?;
    let data = args.input.load()?;
    let seed = args.seed.unwrap_or_else(|| {
        let s = entropy_seed();
        eprintln!("generated seed: {s}");
        s
    });
    let se_mode =
        if args.second_order_se { RatioSeMode::SecondOrder } else { RatioSeMode::FirstOrder };

    let mut results: Vec<EstimateResult> = Vec::new();
    let mut run_method = |name: MethodArg| -> Result<()> {
        let outcome: std::result::Result<Vec<EstimateResult>, mrkit::MrError> = match name {
            MethodArg::Ivw => ivw_estimate_with(
                &data,
                IvwOptions { random_effects: args.random_effects, alpha: args.alpha },
            )
            .map(|r| vec![r]),
            MethodArg::WeightedMedian => weighted_median_estimate(
                &data,
                MedianOptions { bootstrap_reps: args.bootstrap, seed, alpha: args.alpha },
            )
            .map(|mut r| {
                r.diagnostics.insert("seed".to_string(), DiagValue::Int(seed as i64));
                vec![r]
            }),
            MethodArg::ModeBased => mode_based_estimate(
                &data,
                ModeOptions { bandwidth_factor: args.bandwidth_factor, grid_points: 512 },
            )
            .map(|r| vec![r]),
            MethodArg::Egger => egger_estimate(&data).map(|e| vec![e.estimate]),
            MethodArg::Ratio => data
                .records
                .iter()
                .map(|rec| {
                    ratio_estimate(rec, se_mode).map(|r| {
                        EstimateResult::new(mrkit::Method::Ratio, r.beta_j)
                            .with_wald_ci(r.se_j, args.alpha)
                            .with_diag("snp_id", DiagValue::Text(r.snp_id))
                    })
                })
                .collect(),
            MethodArg::All => unreachable!("expanded by caller"),
        };
        match outcome {
            Ok(mut rs) => {
                results.append(&mut rs);
                Ok(())
            }
            Err(e) if args.method == MethodArg::All => {
                eprintln!("skipping {name:?}: {e}");
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    };

    match args.method {
        MethodArg::All => {
            for m in [MethodArg::Ivw, MethodArg::WeightedMedian, MethodArg::ModeBased, MethodArg::Egger] {
                run_method(m)?;
            }
        }
        m => run_method(m)?,
    }
    if results.is_empty() {
        return Err(CliError::Numeric("no estimator produced a result".to_string()));
    }

    let mut content = Vec::new();
    match args.format {
        OutputFormat::Csv => report::write_estimates_csv(&results, &mut content)?,
        OutputFormat::Json => report::write_estimates_json(&results, &mut content)?,
        OutputFormat::SvgForest => content.extend_from_slice(report::forest_svg(&results).as_bytes()),
    }
    write_output(args.out.as_deref(), &String::from_utf8_lossy(&content))
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let data = args.input.load()?;
    let clumped = args.ld.clump(&data)?;
    let relevant = select_relevant(&clumped, args.p_threshold)?;
    let selection = select_valid_instruments(&relevant, args.lambda)?;
    let valid_subset = SummaryDataset {
        records: relevant
            .records
            .iter()
            .filter(|r| selection.valid_set.contains(&r.snp_id))
            .cloned()
            .collect(),
        design: relevant.design,
        n_exposure: relevant.n_exposure,
        n_outcome: relevant.n_outcome,
    };
    let ivw = ivw_estimate_with(&valid_subset, IvwOptions::default()).ok();
    let doc = json!({
        "n_input": data.len(),
        "n_after_clumping": clumped.len(),
        "p_threshold": args.p_threshold,
        "selection": selection,
        "ivw_on_valid": ivw,
    });
    write_output(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_robust(args: RobustArgs) -> Result<()> {
    require_unit_interval("alpha", args.alpha)?;
    let data = args.input.load()?;
    let clumped = args.ld.clump(&data)?;
    let seed = args.seed.unwrap_or_else(|| {
        let s = entropy_seed();
        eprintln!("generated seed: {s}");
        s
    });
    let ci = robust_confidence_interval(
        &clumped,
        RobustCiOptions {
            alpha: args.alpha,
            n_resamples: args.resamples,
            lambda: args.lambda,
            p_threshold: args.p_threshold,
            seed,
        },
    )?;
    let doc = json!({ "seed": seed, "alpha": args.alpha, "robust_ci": ci });
    write_output(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = formats::load_experiment_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run_bias_experiment(&cfg)?;
    if let Some(path) = &args.out_json {
        fs::write(path, format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    }
    let mut csv = Vec::new();
    report::write_bias_csv(&report, &mut csv)?;
    match &args.out_csv {
        Some(path) => fs::write(path, &csv)?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    if report.unstable {
        eprintln!("warning: more than 10% of replicates failed for some estimator");
    }
    Ok(())
}

fn cmd_estimand_check(args: EstimandArgs) -> Result<()> {
    let pop = formats::load_population(&args.population)?;
    let problems = pop.validate();
    if !problems.is_empty() {
        let doc = json!({ "valid": false, "violations": problems });
        write_output(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        return Err(CliError::Data("population failed validation".to_string()));
    }

    let exact = pop.n_units() <= mrkit::estimand::EXACT_UNIT_LIMIT;
    let mut estimands = serde_json::Map::new();
    for kind in
        [EstimandKind::Cte, EstimandKind::Att, EstimandKind::Late, EstimandKind::Ate, EstimandKind::UsualIv]
    {
        let entry = match compute_estimand(&pop, kind) {
            Ok(value) => {
                let mut obj = serde_json::Map::new();
                obj.insert("value".to_string(), json!(value));
                if exact {
                    if let Ok(r) = compute_estimand_exact(&pop, kind) {
                        obj.insert("exact".to_string(), json!(r.to_string()));
                    }
                }
                serde_json::Value::Object(obj)
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
        estimands.insert(kind.to_string(), entry);
    }
    let usual_iv = match usual_iv_estimand(&pop) {
        Ok(v) => {
            let exact_str = usual_iv_estimand_exact(&pop).map(|r| r.to_string()).ok();
            json!({ "value": v, "exact": exact_str })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let doc = json!({
        "valid": true,
        "n_units": pop.n_units(),
        "arithmetic": if exact { "exact-rational" } else { "float" },
        "compliance": enumerate_compliance(&pop),
        "assumptions": check_assumptions(&pop),
        "estimands": estimands,
        "usual_iv": usual_iv,
    });
    write_output(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_parse_check(args: ParseArgs) -> Result<()> {
    let spec = FormatSpec { strict: args.strict, ..Default::default() };
    let outcome = formats::parse_summary_stats(&args.file, &spec)?;
    let n_palindromic = outcome.records.iter().filter(|r| r.is_palindromic()).count();
    let doc = json!({
        "file": args.file.display().to_string(),
        "n_records": outcome.records.len(),
        "n_palindromic": n_palindromic,
        "n_errors": outcome.errors.len(),
        "errors": outcome.errors.iter().map(|e| json!({
            "line": e.line,
            "message": e.message,
        })).collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if !outcome.errors.is_empty() {
        return Err(CliError::Data(format!("{} malformed rows", outcome.errors.len())));
    }
    Ok(())
}
