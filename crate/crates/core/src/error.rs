use thiserror::Error;

/// Errors raised anywhere in the workbench. Variants are grouped by the module
/// that produces them so messages can be traced back to a stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("potentials: {0}")]
    Potential(String),

    #[error("elliptic: parameter m = {0} outside [0, 1)")]
    EllipticParameter(f64),

    #[error("bloch: wavenumber {k} outside the closed Brillouin zone [-{half}, {half}]")]
    OutsideBrillouinZone { k: f64, half: f64 },

    #[error("bloch: eigensolver failed at k = {k}: {detail}")]
    Eigensolver { k: f64, detail: String },

    #[error(
        "bloch: ambiguous multiplicity at k = {k}: relative gap below = {gap_below:e}, above = {gap_above:e}"
    )]
    AmbiguousMultiplicity {
        k: f64,
        gap_below: f64,
        gap_above: f64,
    },

    #[error("bloch: {0}")]
    Carrier(String),

    #[error("cme: no coupling ({0}); gap condition fails")]
    NoCoupling(String),

    #[error("cme: redundant expressions for {name} disagree by {delta:e}")]
    Inconsistent { name: &'static str, delta: f64 },

    #[error("cme: {0}")]
    Cme(String),

    #[error("soliton: {0}")]
    Soliton(String),

    #[error("pnls: {0}")]
    Simulation(String),

    #[error("pnls: non-finite field value at step {step}")]
    NonFinite { step: usize },

    #[error("harness: {0}")]
    Harness(String),

    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
