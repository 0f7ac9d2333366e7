//! Campaign configuration (models × prompt templates) and prompt
//! instantiation.
//!
//! The YAML layout is:
//!
//! ```yaml
//! llms:
//! - model: gpt-4-1106-preview
//!   temperature: 0
//! prompts:
//! - name: zero-shot
//!   value:
//!   - role: system
//!     content: ...
//!   - role: user
//!     content: "... {{focal_class}} ..."
//! ```
//!
//! Models may also carry `token_limit`, `endpoint`, `api_key_env`,
//! `max_retries` and `timeout`. A top-level `example` block replaces the
//! bundled few-shot exemplar.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::context::PromptContext;

pub const DEFAULT_TOKEN_LIMIT: u64 = 8192;

/// Template variables. `example_java_class` is the spelling used by the
/// reference few-shot template and means `example_focal_class`.
pub const VARIABLES: &[&str] = &[
    "focal_class",
    "testing_framework",
    "java_version",
    "example_focal_class",
    "example_test_class",
    "example_testing_framework",
    "example_java_version",
    "example_java_class",
];

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{\{(.*?)\}\}").unwrap());

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid campaign YAML: {0}")]
    Yaml(String),
    #[error("prompt {prompt:?}: unsupported role {role:?} (expected system or user)")]
    Role { prompt: String, role: String },
    #[error("duplicate {kind} name {name:?}")]
    Duplicate { kind: &'static str, name: String },
    #[error("prompt {prompt:?}: unknown placeholder {{{{{placeholder}}}}}")]
    UnknownPlaceholder { prompt: String, placeholder: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("prompt {prompt:?} references {{{{{variable}}}}} but the context has no value for it")]
pub struct MissingVariable {
    pub prompt: String,
    pub variable: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model: String,
    pub temperature: f64,
    pub token_limit: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageTemplate {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    #[serde(rename = "value")]
    pub messages: Vec<MessageTemplate>,
}

impl PromptTemplate {
    /// Variables referenced anywhere in the template, in first-use order.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for m in &self.messages {
            for caps in PLACEHOLDER.captures_iter(&m.content) {
                let name = caps.get(1).unwrap().as_str();
                if !seen.contains(&name) {
                    seen.push(name);
                }
            }
        }
        seen
    }
}

/// Few-shot exemplar files, relative to the configuration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleConfig {
    pub focal: PathBuf,
    pub test: PathBuf,
    pub testing_framework: String,
    pub java_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    #[serde(rename = "llms")]
    pub models: Vec<ModelEntry>,
    pub prompts: Vec<PromptTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    llms: Option<Vec<RawModel>>,
    #[serde(default)]
    prompts: Option<Vec<RawPrompt>>,
    #[serde(default)]
    example: Option<ExampleConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    model: String,
    temperature: Option<f64>,
    token_limit: Option<u64>,
    endpoint: Option<String>,
    api_key_env: Option<String>,
    max_retries: Option<u32>,
    timeout: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrompt {
    name: String,
    value: Vec<RawMessage>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMessage {
    role: String,
    content: String,
}

pub fn parse_campaign(text: &str) -> Result<CampaignConfig, ConfigError> {
    let raw: Option<RawConfig> =
        serde_yaml::from_str(text).map_err(|e| ConfigError::Yaml(e.to_string()))?;
    let raw = raw.unwrap_or(RawConfig {
        llms: None,
        prompts: None,
        example: None,
    });

    let mut models = Vec::new();
    let mut model_names = HashSet::new();
    for m in raw.llms.unwrap_or_default() {
        if !model_names.insert(m.model.clone()) {
            return Err(ConfigError::Duplicate {
                kind: "model",
                name: m.model,
            });
        }
        let temperature = m.temperature.unwrap_or(0.0);
        if !(0.0..=2.0).contains(&temperature) {
            return Err(ConfigError::Invalid(format!(
                "model {:?}: temperature {temperature} outside [0, 2]",
                m.model
            )));
        }
        let token_limit = m.token_limit.unwrap_or(DEFAULT_TOKEN_LIMIT);
        if token_limit == 0 {
            return Err(ConfigError::Invalid(format!(
                "model {:?}: token_limit must be positive",
                m.model
            )));
        }
        models.push(ModelEntry {
            model: m.model,
            temperature,
            token_limit,
            endpoint: m.endpoint,
            api_key_env: m.api_key_env,
            max_retries: m.max_retries,
            timeout: m.timeout,
        });
    }

    let mut prompts = Vec::new();
    let mut prompt_names = HashSet::new();
    for p in raw.prompts.unwrap_or_default() {
        if !prompt_names.insert(p.name.clone()) {
            return Err(ConfigError::Duplicate {
                kind: "prompt",
                name: p.name,
            });
        }
        if p.value.is_empty() {
            return Err(ConfigError::Invalid(format!("prompt {:?} has no messages", p.name)));
        }
        let mut messages = Vec::with_capacity(p.value.len());
        for m in p.value {
            let role = match m.role.as_str() {
                "system" => Role::System,
                "user" => Role::User,
                _ => {
                    return Err(ConfigError::Role {
                        prompt: p.name,
                        role: m.role,
                    })
                }
            };
            messages.push(MessageTemplate {
                role,
                content: m.content,
            });
        }
        let template = PromptTemplate {
            name: p.name,
            messages,
        };
        if let Some(bad) = template.variables().into_iter().find(|v| !VARIABLES.contains(v)) {
            return Err(ConfigError::UnknownPlaceholder {
                prompt: template.name.clone(),
                placeholder: bad.to_string(),
            });
        }
        prompts.push(template);
    }

    Ok(CampaignConfig {
        models,
        prompts,
        example: raw.example,
    })
}

pub fn serialize_campaign(config: &CampaignConfig) -> String {
    serde_yaml::to_string(config).expect("campaign config always serializes")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

pub type MessageList = Vec<Message>;

/// Substitute every `{{name}}` with its context value. Values are inserted
/// verbatim and never rescanned.
pub fn instantiate_prompt(
    template: &PromptTemplate,
    ctx: &PromptContext,
) -> Result<MessageList, MissingVariable> {
    let mut values = BTreeMap::new();
    for name in template.variables() {
        let value = ctx.value(name).ok_or_else(|| MissingVariable {
            prompt: template.name.clone(),
            variable: name.to_string(),
        })?;
        values.insert(name, value);
    }
    Ok(template
        .messages
        .iter()
        .map(|m| Message {
            role: m.role,
            content: PLACEHOLDER
                .replace_all(&m.content, |caps: &regex::Captures<'_>| {
                    values[caps.get(1).unwrap().as_str()].to_string()
                })
                .into_owned(),
        })
        .collect())
}

pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> u64;
}

/// ceil(bytes / 4).
#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxCounter;

impl TokenCounter for ApproxCounter {
    fn count(&self, text: &str) -> u64 {
        (text.len() as u64).div_ceil(4)
    }
}

impl<F: Fn(&str) -> u64 + Send + Sync> TokenCounter for F {
    fn count(&self, text: &str) -> u64 {
        self(text)
    }
}

/// Per-model token counters, falling back to [`ApproxCounter`].
#[derive(Clone, Default)]
pub struct CounterRegistry {
    counters: BTreeMap<String, Arc<dyn TokenCounter>>,
}

impl CounterRegistry {
    pub fn register(&mut self, model: impl Into<String>, counter: Arc<dyn TokenCounter>) {
        self.counters.insert(model.into(), counter);
    }

    pub fn for_model(&self, model: &str) -> Arc<dyn TokenCounter> {
        self.counters
            .get(model)
            .cloned()
            .unwrap_or_else(|| Arc::new(ApproxCounter))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("prompt uses {count} tokens, {overflow} over the limit of {limit}")]
pub struct BudgetExceeded {
    pub count: u64,
    pub limit: u64,
    pub overflow: u64,
}

/// Sum of per-message counts; returns the count when within `limit`.
pub fn check_token_budget(
    messages: &[Message],
    limit: u64,
    counter: &dyn TokenCounter,
) -> Result<u64, BudgetExceeded> {
    let count: u64 = messages.iter().map(|m| counter.count(&m.content)).sum();
    if count <= limit {
        Ok(count)
    } else {
        Err(BudgetExceeded {
            count,
            limit,
            overflow: count - limit,
        })
    }
}
