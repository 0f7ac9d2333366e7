//! Talking to chat-completion endpoints and turning replies into test
//! classes inside a project checkout.

mod client;
mod extract;
mod place;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::prompting::ModelEntry;

pub use client::{ChatClient, GenerationError, RetryPolicy};
pub use extract::extract_code;
pub use place::{place_test_class, test_class_fqn, PlacementError};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com";
pub const DEFAULT_MAX_RETRIES: u32 = 3;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Everything needed to call one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: String,
    pub temperature: f64,
    pub endpoint_url: String,
    /// Name of the environment variable holding the bearer token. `None`
    /// sends no Authorization header (local endpoints).
    pub api_key_env: Option<String>,
    pub max_retries: u32,
    pub timeout: Duration,
}

impl ModelSpec {
    /// Fill unset per-model fields from campaign-wide defaults.
    pub fn from_entry(entry: &ModelEntry, default_endpoint: &str) -> Self {
        Self {
            model: entry.model.clone(),
            temperature: entry.temperature,
            endpoint_url: entry
                .endpoint
                .clone()
                .unwrap_or_else(|| default_endpoint.to_string()),
            api_key_env: entry.api_key_env.clone(),
            max_retries: entry.max_retries.unwrap_or(DEFAULT_MAX_RETRIES),
            timeout: entry.timeout.map_or(DEFAULT_TIMEOUT, Duration::from_secs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Placed,
    RejectedNoCode,
    RejectedCompile,
    RejectedFailing,
    Green,
}

/// One generation attempt for one focal class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTest {
    pub model: String,
    pub prompt_name: String,
    pub repo_id: String,
    pub focal_fqn: String,
    pub raw_reply: String,
    pub source: Option<String>,
    pub placed_path: Option<PathBuf>,
    pub status: TestStatus,
}

impl GeneratedTest {
    /// Fully qualified name of the placed test class.
    pub fn test_fqn(&self) -> Option<String> {
        self.source.as_deref().and_then(test_class_fqn)
    }
}
