//! Toolkit for running a reading pipeline over visually compressed text.
//!
//! Long documents are rendered into fixed-geometry page images that cost far
//! fewer visual tokens than the equivalent text tokens. A model endpoint then
//! answers questions over the compressed pages, selectively expanding
//! individual pages back into readable form through a tool protocol. The
//! crate covers everything around the model itself:
//!
//! - [`render`]: deterministic text-to-image pagination with exact
//!   visual-token accounting per encoder profile.
//! - [`ledger`]: per-episode token accounting (ICR/ECR, KV-cache budgets).
//! - [`corpus`]: dataset construction — evidence tracking through
//!   pagination, distractor padding, hardness filtering, synthetic-trace
//!   requests, and loss-mask-annotated conversation export.
//! - [`protocol`]: the tool-call grammar and the multi-turn
//!   select-then-expand episode engine, driven against any chat endpoint.
//! - [`scoring`]: LLM-as-judge verdicts, rewards, selection accuracy,
//!   benchmark aggregation, and judge-agreement statistics.
//! - [`simlab`]: closed-form and Monte-Carlo analysis of when selective
//!   expansion beats direct reading of compressed pages.

pub mod corpus;
pub mod ledger;
pub mod prompts;
pub mod protocol;
pub mod render;
pub mod scoring;
pub mod simlab;
pub mod span;
pub mod synthetic;
