use std::path::PathBuf;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ego {ego}: missing file `{ego}.{suffix}`")]
    MissingFile { ego: NodeId, suffix: &'static str },

    #[error("{}:{line}: {msg}", file.display())]
    Parse { file: PathBuf, line: usize, msg: String },

    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("non-finite value in kernel input")]
    NonFiniteInput,

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("{}: {msg}", path.display())]
    CorruptFile { path: PathBuf, msg: String },

    #[error("no embedding for token `{token}`{context}")]
    MissingEmbedding { token: String, context: String },

    #[error("label row {0} is all zero; softmax targets need at least one positive label")]
    InvalidLabelRow(usize),

    #[error("cannot split {n} instances into {k} folds")]
    TooFewInstances { n: usize, k: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage `{stage}` needs `{missing}`; run `{run_first}` first")]
    MissingStage { stage: &'static str, missing: PathBuf, run_first: &'static str },

    #[error("{}", path.display())]
    Io { path: PathBuf, #[source] source: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { file: file.into(), line, msg: msg.into() }
    }
}
