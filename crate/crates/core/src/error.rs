use thiserror::Error;

/// Broad category of a failure, mirroring how callers are expected to react:
/// validation errors mean the inputs were wrong, state errors mean the call
/// came at the wrong point of a state's lifecycle (e.g. probe already active).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    State,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DfsError {
    #[error("unknown photon `{0}`")]
    UnknownPhoton(String),
    #[error("duplicate photon `{0}`")]
    DuplicatePhoton(String),
    #[error("unknown path `{0}`")]
    UnknownPath(String),
    #[error("coefficients not normalized: |c0|^2 + |c1|^2 = {0}")]
    NotNormalized(f64),
    #[error("registries differ: {0}")]
    RegistryMismatch(String),
    #[error("state leaves the decoherence-free subspace: {0}")]
    OutsideDfs(String),
    #[error("malformed branch structure: {0}")]
    MalformedBranches(String),
    #[error("class {0} has no weight in the current state")]
    EmptyClass(u32),
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("a probe is already attached")]
    ProbeActive,
    #[error("no probe attached")]
    NoProbe,
}

impl DfsError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            DfsError::ProbeActive | DfsError::NoProbe => ErrorKind::State,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, DfsError>;
