use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch in {op}: left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    Shape {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("data error at {path}:{line}: {msg}")]
    Data {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("training error: {0}")]
    Train(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for argument problems the parser
    /// can't catch itself, 3 for data problems, 4 for numeric or training
    /// problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Data { .. } | Error::Dataset(_) | Error::Io { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(
    op: &'static str,
    lhs: (usize, usize),
    rhs: (usize, usize),
) -> Error {
    Error::Shape {
        op,
        lhs_rows: lhs.0,
        lhs_cols: lhs.1,
        rhs_rows: rhs.0,
        rhs_cols: rhs.1,
    }
}
