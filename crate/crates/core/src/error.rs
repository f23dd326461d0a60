use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at node ({i}, {j}), component {component}")]
    Sampling { i: usize, j: usize, component: usize },

    #[error("grid mismatch: {left} interior nodes vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("{name} = {value} outside its domain {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("fiber has no interior maximum (B = {b}, A = {a})")]
    NoMaximizer { a: f64, b: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("fit failed: {0}")]
    Fit(String),
}

pub(crate) fn check_open(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value > lo && value < hi {
        Ok(())
    } else {
        Err(Error::Domain { name, value, range })
    }
}
