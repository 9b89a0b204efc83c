use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("collinear phases: {0}")]
    Collinear(String),
    #[error("theta lies on a Stokes line: {0}")]
    OnStokesLine(String),
    #[error("path from saddle {from} ran into {}", .near.map(|s| format!("saddle {s}")).unwrap_or_else(|| "a Newton failure".into()))]
    PathCollision { from: usize, near: Option<usize> },
    #[error("adjacency graph: {0}")]
    Graph(String),
    #[error("ill-conditioned system (condition number {cond:.3e})")]
    Conditioning { cond: f64 },
    #[error("accuracy not reached: {0}")]
    Accuracy(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Accuracy(_) => 4,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Pole(_) => "pole",
            Error::Validation(_) => "validation",
            Error::Parse(_) => "parse",
            Error::Collinear(_) => "collinear",
            Error::OnStokesLine(_) => "on_stokes_line",
            Error::PathCollision { .. } => "path_collision",
            Error::Graph(_) => "graph",
            Error::Conditioning { .. } => "conditioning",
            Error::Accuracy(_) => "accuracy",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
