use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One stream element: an opaque, non-empty label. Two tokens are equal
/// exactly when their labels are byte-identical.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

/// Empty labels are rejected at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("token label must be non-empty")]
pub struct EmptyToken;

impl Token {
    pub fn new(label: impl Into<String>) -> Result<Self, EmptyToken> {
        let label = label.into();
        if label.is_empty() {
            Err(EmptyToken)
        } else {
            Ok(Self(label))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}
