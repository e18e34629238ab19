use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of the gamma function at {0}")]
    Pole(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge after {terms} terms ({what})")]
    NoConvergence { what: &'static str, terms: usize },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("ill-conditioned interpolation: trailing coefficient ratio {ratio:.3e}")]
    IllConditioned { ratio: f64 },
    #[error("series truncated with last term {last_term:.3e} (value {value})")]
    Truncation { value: f64, last_term: f64 },
    #[error("degenerate chain: acceptance rate {0:.4}")]
    DegenerateChain(f64),
}

impl Error {
    /// True for errors caused by bad inputs rather than failed numerics.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Pole(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
