use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Thin-wire approximation does not hold.
    #[error("thin-wire validity: radius {radius:e} m is not below L/20 = {limit:e} m")]
    ThinWire { radius: f64, limit: f64 },

    #[error("iteration did not converge: {what} (residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("singular: {0}")]
    Singular(String),

    #[error("unknown material '{0}'")]
    UnknownMaterial(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("geometry: {0}")]
    Geometry(String),

    /// Mesh would exceed the configured cell budget.
    #[error("cell budget exceeded: {cells} cells requested, budget is {budget}")]
    CellBudget { cells: u64, budget: u64 },

    /// Enumeration would produce too many cavity modes.
    #[error("mode budget exceeded: about {estimate} modes estimated, budget is {budget}")]
    ModeBudget { estimate: u64, budget: u64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("non-finite field value at step {step}")]
    NonFinite { step: usize },

    #[error("energy accounting: radiated {radiated:e} W exceeds accepted {accepted:e} W")]
    EnergyAccounting { radiated: f64, accepted: f64 },

    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error("scene file: {0}")]
    SceneFile(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
