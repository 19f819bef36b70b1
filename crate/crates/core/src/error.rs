use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kinetic energy {energy_ev} eV gives beta = {beta:.4}, outside the nonrelativistic range (beta < 0.1)")]
    Relativistic { energy_ev: f64, beta: f64 },

    #[error("no phase-matching solution: {0}")]
    NoPhaseMatch(String),

    #[error("mode {mode} recoil is {offset_cells:.3} cells off the momentum grid; increase points_per_recoil")]
    IncommensurateGrid { mode: usize, offset_cells: f64 },

    #[error("electron wavepacket loses {lost_norm:.3e} of its norm outside the momentum grid")]
    WavepacketTruncated { lost_norm: f64 },

    #[error("occupation {0:?} outside the Fock truncation")]
    OccupationOutOfRange(Vec<u8>),

    #[error("state basis does not match the coupling table basis")]
    BasisMismatch,

    #[error("dimension {dim} exceeds the dense-matrix limit {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("reduction criterion failed: delta*T = {value:.3} < {threshold:.3}")]
    CriterionFailed { value: f64, threshold: f64 },

    #[error("integration step size underflow at t = {t:.6e} s (h = {h:.3e} s)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("norm drift {drift:.3e} exceeds the accepted bound {limit:.1e}")]
    NormDrift { drift: f64, limit: f64 },

    #[error("label mapping failed: {0}")]
    Label(String),

    #[error("input not normalized: {0}")]
    NotNormalized(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
