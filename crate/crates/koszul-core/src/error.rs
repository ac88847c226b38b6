use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate variable `{0}`")]
    DuplicateName(String),
    #[error("`{0}` is a reserved name")]
    ReservedName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("values live on different charts")]
    ChartMismatch,
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("cannot integrate over even variable `{0}`")]
    EvenIntegrationVariable(String),
    #[error("unknown grading `{0}`")]
    UnknownGrading(String),
    #[error("negative power of hbar outside the transform layer")]
    NegativeHbar,
    #[error("not divisible by hbar^{0}")]
    NotDivisible(u32),
    #[error("element is not invertible: {0}")]
    NotInvertible(String),
    #[error("series does not terminate within the truncation window")]
    NotConvergent,
    #[error("wrong chart: {0}")]
    WrongChart(String),
    #[error("momentum variable `{0}` in an argument that must be momentum-free")]
    MomentumInArgument(String),
    #[error("unsupported nesting: {0}")]
    UnsupportedNesting(String),
    #[error("coordinate maps are not mutually inverse: {0}")]
    NotInverse(String),
    #[error("P_inf structure rejected: [[P,P]] = {0}")]
    NotPinf(String),
    #[error("weight mismatch: {0}")]
    WeightMismatch(String),
    #[error("even fiber variable `{0}` is not supported by integral transforms")]
    EvenFiber(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
