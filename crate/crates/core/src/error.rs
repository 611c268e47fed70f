use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("impedance mismatch: left factor ends at z = {left}, right factor starts at z = {right}")]
    ImpedanceMismatch { left: Complex64, right: Complex64 },

    /// A zero wavenumber or impedance reached a formula that divides by it
    /// (energy exactly at a region's potential).
    #[error("singular input: {0}")]
    SingularInput(&'static str),

    #[error("T11 = 0: bound-state condition, not a scattering state")]
    Resonance,

    #[error("S11 = 0: zero transmission, transfer matrix does not exist")]
    ZeroTransmission,

    /// The wavefunction has a node at the evaluation point, so the impedance diverges.
    #[error("impedance diverges at a wavefunction node")]
    Node,

    #[error("Z = -z_lead: reflection amplitude has a bound-state pole")]
    BoundStatePole,

    #[error("transfer matrix is not unimodular (det = {0})")]
    NotUnimodular(Complex64),

    #[error("energy {energy} lies outside a spectral gap (cos chi = {chi})")]
    OutOfGap { energy: f64, chi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
