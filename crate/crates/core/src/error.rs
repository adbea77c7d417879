use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("ambiguous separation: distance {dist} is positive but below the far-field threshold {threshold}")]
    AmbiguousSeparation { dist: f64, threshold: f64 },
    #[error("no subdivision needed: the domains are far-field")]
    NoSubdivisionNeeded,
    #[error("index {index} out of range {range}")]
    Index { index: usize, range: String },
    #[error("kernel {kernel} is singular at zero distance")]
    SingularEvaluation { kernel: String },
    #[error("non-finite value: {0}")]
    Numerical(String),
    #[error("distribution error: {0}")]
    Distribution(String),
    #[error("linear algebra failure: {0}")]
    LinAlg(String),
    #[error("matrix has zero max-norm")]
    DegenerateNorm,
    #[error("outside the formula's domain: {0}")]
    Domain(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("kernel {kernel}, n = {n}, trial {trial}: {source}")]
    Trial {
        kernel: String,
        n: u64,
        trial: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: refusing to overwrite an existing file")]
    OutputExists { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn index(index: usize, lo: usize, hi: usize) -> Self {
        Error::Index { index, range: format!("[{lo}, {hi}]") }
    }
}
