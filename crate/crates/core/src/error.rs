use thiserror::Error;

use crate::model::WindowShape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid layer: {0}")]
    InvalidLayer(String),

    #[error("invalid array: {0}")]
    InvalidArray(String),

    #[error("invalid window {window}: {reason}")]
    InvalidWindow { window: WindowShape, reason: String },

    #[error("infeasible window {window}: {reason}")]
    InfeasibleWindow { window: WindowShape, reason: String },

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    #[error("oracle budget exceeded: {candidates} candidates > budget {budget}")]
    OracleBudget { candidates: u64, budget: u64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("simulation conflict at ofm[{channel}][{y}][{x}]: {first} vs {second}")]
    OverlapConflict {
        channel: usize,
        y: usize,
        x: usize,
        first: i64,
        second: i64,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("line {line}{}: {message}", field.as_ref().map(|f| format!(", field `{f}`")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<String>,
        message: String,
    },

    #[error("layer `{name}`: {source}")]
    Layer {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }

    pub(crate) fn in_layer(self, name: &str) -> Self {
        Error::Layer {
            name: name.to_owned(),
            source: Box::new(self),
        }
    }
}
