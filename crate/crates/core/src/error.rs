use thiserror::Error;

/// Errors raised by estimators, selection, and simulation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum MrError {
    #[error("null instrument: instrument-exposure association is zero")]
    NullInstrument,
    #[error("zero denominator: all instrument-exposure associations are zero")]
    ZeroDenominator,
    #[error("insufficient instruments: {got} usable, {need} required")]
    InsufficientInstruments { got: usize, need: usize },
    #[error("no strength spread: instrument-exposure associations have zero variance")]
    NoStrengthSpread,
    #[error("degenerate exposure: exposure has zero variance")]
    DegenerateExposure,
    #[error("collinear instruments: instrument matrix is rank deficient")]
    CollinearInstruments,
    #[error("no first-stage signal: fitted exposure has zero variance")]
    NoFirstStageSignal,
    #[error("exposure SEs required: record {0} has no instrument-exposure standard error")]
    ExposureSeRequired(String),
    #[error("missing LD entry for {0}")]
    MissingLdEntry(String),
    #[error("no relevant instruments passed the p-value threshold")]
    NoRelevantInstruments,
    #[error("unstable selection: {skipped} of {total} resamples produced an empty relevant set")]
    UnstableSelection { skipped: usize, total: usize },
    #[error("irrelevant instrument: treatment does not depend on the instrument")]
    IrrelevantInstrument,
    #[error("undefined estimand: {0}")]
    UndefinedEstimand(String),
    #[error("confounder labels required for this check")]
    ConfounderLabelsRequired,
    #[error("formula precondition violated: {0}")]
    FormulaPrecondition(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl MrError {
    /// True for failures of the numeric machinery (as opposed to bad data or
    /// configuration). The CLI maps these onto a distinct exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            MrError::NullInstrument
                | MrError::ZeroDenominator
                | MrError::NoStrengthSpread
                | MrError::DegenerateExposure
                | MrError::CollinearInstruments
                | MrError::NoFirstStageSignal
                | MrError::IrrelevantInstrument
                | MrError::UnstableSelection { .. }
                | MrError::UndefinedEstimand(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, MrError>;
