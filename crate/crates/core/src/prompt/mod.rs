//! Prompt template catalog, LLM client contract, and the corpus expansion
//! pipeline.

mod client;
mod expand;
mod templates;

pub use client::{
    Clock, FixtureDirClient, HttpLlmClient, LlmClient, LlmClientConfig, MockClock, QueueClient,
    RequestCtx, SystemClock, TransportError, API_KEY_ENV,
};
pub use expand::{
    expand_corpus, expand_one, CheckpointStatus, ExpandError, ExpandInput, ExpandOptions,
    ExpansionReport, LlmExchange,
};
pub use templates::{
    render_prompt, template, template_catalog, PromptTemplate, RenderError, Shot, TemplateId,
    TEMPLATE_VERSION,
};
