//! Versioned on-disk form of learned tables and solved policies: a flat
//! state -> action-value map, shared by Q-tables and the exact solver so a
//! policy can be trained or solved once and evaluated many times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub rate: f64,
    pub age: u64,
    pub q_transmit: f64,
    pub q_verify: f64,
    /// 0 = transmit, 1 = verify.
    pub action: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub version: u32,
    /// "q-table" or "oracle".
    pub kind: String,
    pub max_age: u64,
    pub support: Vec<f64>,
    /// Long-run objective of the policy, when the producer knows it.
    pub gain: Option<f64>,
    pub entries: Vec<StateEntry>,
}

impl PolicyDocument {
    pub fn check_version(&self, expected_kind: &str) -> Result<()> {
        if self.version != DOCUMENT_VERSION {
            return Err(Error::PolicyDocument(format!(
                "version {} (this build reads version {DOCUMENT_VERSION})",
                self.version
            )));
        }
        if self.kind != expected_kind {
            return Err(Error::PolicyDocument(format!(
                "kind `{}` where `{expected_kind}` was expected",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::PolicyDocument(e.to_string()))
    }
}
