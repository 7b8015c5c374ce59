//! Chat-completion access with prompt templates and record/replay
//! transcripts.

mod gateway;
mod parse;
mod provider;
mod template;
mod transcript;

pub use gateway::{cache_key, CompletionRequest, LlmGateway, LlmMode, TokenBucket};
pub use parse::{extract_source, parse_json_map, parse_triples, Triple};
pub use provider::{
    OpenAiProvider, Provider, ProviderConfig, ProviderError, ProviderRegistry, Script, ScriptRule, ScriptedProvider,
};
pub use template::{render_prompt, TemplateSet};
pub use transcript::{TranscriptEntry, TranscriptStore};
