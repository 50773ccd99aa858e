use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("point {re}+{im}i lies outside the region window")]
    OutsideWindow { re: f64, im: f64 },

    #[error("degenerate box or annulus: {0}")]
    DegenerateBox(String),

    #[error("support of {size} sites exceeds the enumeration cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },

    #[error("event specification error: {0}")]
    EventSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("component `{0}` has zero count; ratio is unestimable")]
    Unestimable(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
