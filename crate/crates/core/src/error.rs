use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("types must be strictly ascending in theta (violated at type {index})")]
    Ordering { index: usize },

    #[error("total iteration time {time} is not below t_max {t_max}")]
    InfeasibleTime { time: f64, t_max: f64 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("budget infeasible: spend cannot go below {min_spend} but r_max is {r_max}")]
    BudgetInfeasible { min_spend: f64, r_max: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("menu has {items} items but there are {types} types")]
    Alignment { items: usize, types: usize },

    #[error("guard violated: {0}")]
    Guard(String),

    #[error("no reward rate induces any participation")]
    NoParticipation,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
