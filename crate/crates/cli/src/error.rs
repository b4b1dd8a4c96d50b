//! Exit-code classification and the machine-readable error document.

use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Marks an error as caused by bad input rather than a failed computation.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct Invalid(pub String);

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Invalid(msg.into()))
}

/// Wraps any displayable error as [`Invalid`].
pub fn as_invalid<E: std::fmt::Display>(e: E) -> anyhow::Error {
    invalid(e.to_string())
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|c| c.is::<Invalid>() || c.is::<serde_json::Error>()) {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorDocument {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    pub causes: Vec<String>,
}

pub fn error_document(err: &anyhow::Error) -> ErrorDocument {
    let code = exit_code(err);
    ErrorDocument {
        kind: if code == EXIT_VALIDATION { "validation" } else { "runtime" },
        exit_code: code,
        message: err.to_string(),
        causes: err.chain().skip(1).map(|c| c.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let e = invalid("bad").context("loading config");
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
        let e = anyhow::anyhow!("boom");
        assert_eq!(exit_code(&e), EXIT_RUNTIME);
        let json = serde_json::from_str::<u32>("x").unwrap_err();
        assert_eq!(exit_code(&anyhow::Error::new(json)), EXIT_VALIDATION);
        let doc = error_document(&invalid("missing field `miners`").context("scenario a"));
        assert_eq!(doc.kind, "validation");
        assert_eq!(doc.causes, vec!["missing field `miners`".to_string()]);
    }
}
