use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("b_j^-4 overflows f64 at j = {index}")]
    Overflow { index: usize },

    #[error("infeasible two-point construction: {0}")]
    InfeasibleConstruction(String),

    #[error("no frequency D <= {j_max} admits a spike of radius {radius} inside the ellipsoid")]
    InfeasibleRadius { radius: f64, j_max: usize },

    #[error("observation X_{index} is zero")]
    DegenerateObservation { index: usize },

    #[error("bandwidth D ∧ M is zero")]
    DegenerateBandwidth,

    #[error("M0 = 0: sigma = {sigma} is too large for this regime")]
    DegenerateBound { sigma: f64 },

    #[error("levels alpha = {alpha}, beta = {beta} require alpha + beta < 1")]
    InvalidLevels { alpha: f64, beta: f64 },

    #[error("invalid bisection bracket: beta({r_lo}) = {beta_lo}, beta({r_hi}) = {beta_hi}, target {target}")]
    Bracketing {
        r_lo: f64,
        r_hi: f64,
        beta_lo: f64,
        beta_hi: f64,
        target: f64,
    },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
