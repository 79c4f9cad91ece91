//! Hardness filtering: samples the base model already answers correctly
//! from compressed pages are easy and excluded from SFT; the rest are hard.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::prompts::DIRECT_ANSWER_SYSTEM_PROMPT;
use crate::protocol::endpoint::{ChatEndpoint, ChatMessage, ChatRequest, ContentPart, Role};
use crate::render::{encode_page_png, PageSet};
use crate::scoring::judge_answer;

use super::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hardness {
    Easy,
    Hard,
    /// Endpoint failure: never silently dropped, surfaced for retry.
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSample {
    pub sample_id: String,
    pub hardness: Hardness,
    pub model_answer: Option<String>,
    pub judge_raw: Option<String>,
    pub error: Option<String>,
}

/// Runs single-turn no-tool inference over the compressed pages and judges
/// the answer: judged correct means easy, incorrect means hard, endpoint
/// failure means unclassified.
pub fn classify_hardness(
    sample: &Sample,
    pages: &PageSet,
    model: &dyn ChatEndpoint,
    judge: &dyn ChatEndpoint,
    temperature: f64,
    max_tokens: u32,
) -> ClassifiedSample {
    let mut parts: Vec<ContentPart> = Vec::new();
    for page in &pages.pages {
        match encode_page_png(&page.raster, page.width, page.height) {
            Ok(png) => parts.push(ContentPart::ImagePng(png)),
            Err(e) => {
                return ClassifiedSample {
                    sample_id: sample.id.clone(),
                    hardness: Hardness::Unclassified,
                    model_answer: None,
                    judge_raw: None,
                    error: Some(e.to_string()),
                }
            }
        }
    }
    parts.push(ContentPart::Text(sample.question.clone()));
    let request = ChatRequest {
        messages: vec![
            ChatMessage::text(Role::System, DIRECT_ANSWER_SYSTEM_PROMPT),
            ChatMessage {
                role: Role::User,
                parts,
            },
        ],
        temperature,
        max_tokens,
    };

    let reply = match model.complete(&request) {
        Ok(reply) => reply,
        Err(e) => {
            return ClassifiedSample {
                sample_id: sample.id.clone(),
                hardness: Hardness::Unclassified,
                model_answer: None,
                judge_raw: None,
                error: Some(e.to_string()),
            }
        }
    };
    // The baseline answer is whatever follows the reasoning, same extraction
    // rule as episode final answers.
    let answer = match crate::protocol::parse_model_turn(&reply) {
        Ok(parsed) => match parsed.action {
            crate::protocol::TurnAction::Answer(a) => a,
            crate::protocol::TurnAction::Expand(_) => reply.clone(),
        },
        Err(_) => reply.clone(),
    };

    match judge_answer(judge, &sample.question, &sample.gold_answers, &answer) {
        Ok(verdict) => ClassifiedSample {
            sample_id: sample.id.clone(),
            hardness: if verdict.correct {
                Hardness::Easy
            } else {
                Hardness::Hard
            },
            model_answer: Some(answer),
            judge_raw: Some(verdict.raw),
            error: None,
        },
        Err(e) => ClassifiedSample {
            sample_id: sample.id.clone(),
            hardness: Hardness::Unclassified,
            model_answer: Some(answer),
            judge_raw: None,
            error: Some(e.to_string()),
        },
    }
}

/// Per-dataset filtering statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub dataset: String,
    pub generated: u64,
    pub hard: u64,
    pub easy: u64,
    pub unclassified: u64,
}

impl FilterReport {
    /// Fraction of generated samples kept as hard, in percent.
    pub fn keep_rate_percent(&self) -> f64 {
        if self.generated == 0 {
            return 0.0;
        }
        100.0 * self.hard as f64 / self.generated as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRlSplit {
    pub sft: Vec<String>,
    pub rl: Vec<String>,
}

/// Seeded 80/20 split: 80% of hard samples go to SFT; the remaining hard
/// samples pool with the easy ones for RL.
pub fn split_sft_rl(hard_ids: &[String], easy_ids: &[String], seed: u64) -> SftRlSplit {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut hard: Vec<String> = hard_ids.to_vec();
    hard.shuffle(&mut rng);
    let cut = hard.len() * 4 / 5;
    let sft = hard[..cut].to_vec();
    let mut rl: Vec<String> = hard[cut..].to_vec();
    rl.extend(easy_ids.iter().cloned());
    rl.shuffle(&mut rng);
    SftRlSplit { sft, rl }
}
