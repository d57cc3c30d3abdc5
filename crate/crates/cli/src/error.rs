use std::fmt;

use zsa::affinity::AffinityError;
use zsa::compiler::CompileError;
use zsa::embedding_store::EmbeddingError;
use zsa::evaluation::EvalError;
use zsa::inference::{InferenceError, ReasonerError};
use zsa::ontology::OntologyError;
use zsa::provider::ProviderError;

/// Failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Remote,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            kind: Kind::Usage,
            msg: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            kind: Kind::Data,
            msg: msg.into(),
        }
    }

    fn new(kind: Kind, err: &dyn fmt::Display) -> Self {
        Self {
            kind,
            msg: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => 2,
            Kind::Data => 3,
            Kind::Remote => 4,
        }
    }

    /// Prefixes the message with what was being done.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.msg = format!("{what}: {}", self.msg);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

fn provider_kind(e: &ProviderError) -> Kind {
    if e.is_remote() {
        Kind::Remote
    } else {
        Kind::Data
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        Self::new(provider_kind(&e), &e)
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        let kind = match &e {
            CompileError::Config(_) => Kind::Usage,
            CompileError::Provider { source, .. } => provider_kind(source),
            _ => Kind::Data,
        };
        Self::new(kind, &e)
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        let kind = match &e {
            InferenceError::Config(_) => Kind::Usage,
            InferenceError::Reasoner {
                source: ReasonerError::Remote(_),
                ..
            } => Kind::Remote,
            InferenceError::Provider { source, .. } => provider_kind(source),
            _ => Kind::Data,
        };
        Self::new(kind, &e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Inference { id, source } => {
                CliError::from(source).context(format!("item {id:?}"))
            }
            other => Self::new(Kind::Data, &other),
        }
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        Self::new(Kind::Data, &e)
    }
}

impl From<OntologyError> for CliError {
    fn from(e: OntologyError) -> Self {
        Self::new(Kind::Data, &e)
    }
}

impl From<AffinityError> for CliError {
    fn from(e: AffinityError) -> Self {
        Self::new(Kind::Data, &e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Data, &e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(Kind::Data, &e)
    }
}
