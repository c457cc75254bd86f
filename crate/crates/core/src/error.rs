use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("site count {n} too small for hopping range {range} (need N > {min})")]
    TooFewSites { n: usize, range: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reference energy {re}+{im}i lies on the spectrum (margin {margin:e})")]
    ContourDegenerate { re: f64, im: f64, margin: f64 },

    #[error("grid too coarse: phase step {step:.3} rad exceeds pi/2")]
    CoarseGrid { step: f64 },

    #[error("degenerate characteristic polynomial: {0}")]
    DegeneratePolynomial(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("self-consistent momentum did not converge at t = {t}; last iterate {last}")]
    FixedPointDiverged { t: f64, last: f64 },

    #[error("exceptional point inside the wavepacket support at k = {k}")]
    ExceptionalSupport { k: f64 },

    #[error("channel density numerically zero")]
    EmptyChannel,

    #[error("no critical points above prominence {0}")]
    NoPeaks(f64),

    #[error("velocity series never accumulates a distance of {0}")]
    ShortVelocitySeries(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {inner}")]
    Stage { stage: &'static str, inner: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, inner: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
