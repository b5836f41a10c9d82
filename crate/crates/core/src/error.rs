use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("depth {depth} outside profile range [{lo}, {hi}]")]
    OutOfRange { depth: f64, lo: f64, hi: f64 },

    #[error("derivative of order {requested} requested, only {available} available")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("radicand of `{name}` lies on the branch cut: {value}")]
    BranchCut { name: &'static str, value: Complex64 },

    #[error("spectrum certificate failed: {0}")]
    SpectrumCertificate(String),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("Sylvester spectra overlap (gap {gap:e})")]
    SpectraOverlap { gap: f64 },

    #[error("invalid probe data: {0}")]
    InvalidProbe(String),

    #[error("grid too coarse: {0}")]
    Refinement(String),

    #[error("CFL number {number:.3} exceeds the stability limit")]
    Cfl { number: f64 },

    #[error("time step too coarse for Laplace quadrature: {0}")]
    CoarseQuadrature(String),

    #[error("extrapolation residual {residual:e} exceeds tolerance {tol:e}")]
    Extrapolation { residual: f64, tol: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
