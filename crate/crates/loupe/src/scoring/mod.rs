//! Judging, rewards, selection accuracy, aggregates, and judge-agreement
//! statistics.

mod report;

pub use report::{DatasetReport, RunReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EvidenceMap;
use crate::protocol::endpoint::{ChatEndpoint, ChatMessage, ChatRequest, EndpointError, Role};
use crate::protocol::{EpisodeStatus, Trajectory};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("invalid verdict, reply does not end with [[YES]] or [[NO]]: {0:?}")]
    InvalidVerdict(String),
    #[error("verdict lists have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
}

/// A judge's decision on one answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub correct: bool,
    pub raw: String,
}

/// Derives a verdict from the terminal `[[YES]]`/`[[NO]]` token of the raw
/// judge reply. Anything else is an invalid verdict, surfaced rather than
/// defaulted.
pub fn parse_verdict(raw: &str) -> Result<JudgeVerdict, ScoringError> {
    let trimmed = raw.trim();
    let correct = if trimmed.ends_with("[[YES]]") {
        true
    } else if trimmed.ends_with("[[NO]]") {
        false
    } else {
        return Err(ScoringError::InvalidVerdict(raw.to_string()));
    };
    Ok(JudgeVerdict {
        correct,
        raw: raw.to_string(),
    })
}

/// Fills the judge prompt for one (question, gold answers, model answer)
/// triple.
pub fn judge_request(question: &str, gold_answers: &[String], model_answer: &str) -> String {
    crate::prompts::judge_prompt(question, gold_answers, model_answer)
}

/// Sends one judge request with greedy decoding and parses the verdict.
pub fn judge_answer(
    judge: &dyn ChatEndpoint,
    question: &str,
    gold_answers: &[String],
    model_answer: &str,
) -> Result<JudgeVerdict, ScoringError> {
    let prompt = judge_request(question, gold_answers, model_answer);
    let reply = judge.complete(&ChatRequest {
        messages: vec![ChatMessage::text(Role::User, prompt)],
        temperature: 0.0,
        max_tokens: 64,
    })?;
    parse_verdict(&reply)
}

/// Episode reward weights: answer correctness and the answer-gated tool-use
/// bonus. The weights must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub answer_weight: f64,
    pub tool_weight: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            answer_weight: 0.7,
            tool_weight: 0.3,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if (self.answer_weight + self.tool_weight - 1.0).abs() > 1e-12 {
            return Err(ScoringError::EmptyInput("reward weights must sum to 1.0"));
        }
        Ok(())
    }

    /// `answer_weight * c + tool_weight * c * u`: the tool bonus only pays
    /// when the answer is correct.
    pub fn reward(&self, correct: bool, used_tool: bool) -> f64 {
        let c = if correct { 1.0 } else { 0.0 };
        let u = if used_tool { 1.0 } else { 0.0 };
        self.answer_weight * c + self.tool_weight * c * u
    }
}

/// Episode reward under the default 0.7/0.3 weights.
pub fn reward(correct: bool, used_tool: bool) -> f64 {
    RewardParams::default().reward(correct, used_tool)
}

/// True iff at least one executed expansion selected a ground-truth evidence
/// page (any-hit, deliberately lenient for multi-hop).
pub fn selection_hit(trajectory: &Trajectory, evidence: &EvidenceMap) -> bool {
    trajectory
        .expanded_indices()
        .iter()
        .any(|k| evidence.evidence_pages.contains(k))
}

/// The answer string a judge should see for this trajectory. Answered
/// episodes judge their final answer. With `force_extract`, exhausted
/// budgets are judged on the last turn's post-reasoning text (tool-call
/// blocks stripped), the retroactive-budget methodology.
pub fn judged_answer_text(trajectory: &Trajectory, force_extract: bool) -> Option<String> {
    match trajectory.status {
        EpisodeStatus::Answered => trajectory.final_answer.clone(),
        EpisodeStatus::BudgetExhausted if force_extract => trajectory.forced_answer(),
        _ => None,
    }
}

/// Unweighted arithmetic mean across datasets.
pub fn macro_average(per_dataset_accuracies: &[f64]) -> Result<f64, ScoringError> {
    if per_dataset_accuracies.is_empty() {
        return Err(ScoringError::EmptyInput("macro average of no datasets"));
    }
    Ok(per_dataset_accuracies.iter().sum::<f64>() / per_dataset_accuracies.len() as f64)
}

/// Two-rater agreement on aligned boolean verdict lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub raw_agreement_percent: f64,
    /// Cohen's kappa; undefined when chance agreement is 1 (degenerate
    /// marginals).
    pub kappa: Option<f64>,
}

/// Raw agreement and Cohen's kappa with marginal-product chance agreement.
pub fn agreement_stats(
    verdicts_a: &[bool],
    verdicts_b: &[bool],
) -> Result<AgreementStats, ScoringError> {
    if verdicts_a.len() != verdicts_b.len() {
        return Err(ScoringError::LengthMismatch(
            verdicts_a.len(),
            verdicts_b.len(),
        ));
    }
    let n = verdicts_a.len();
    if n == 0 {
        return Err(ScoringError::EmptyInput("agreement over empty lists"));
    }
    let nf = n as f64;
    let matches = verdicts_a
        .iter()
        .zip(verdicts_b)
        .filter(|(a, b)| a == b)
        .count() as f64;
    let p_o = matches / nf;
    let a_yes = verdicts_a.iter().filter(|v| **v).count() as f64 / nf;
    let b_yes = verdicts_b.iter().filter(|v| **v).count() as f64 / nf;
    let p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
    let kappa = if (1.0 - p_e).abs() < 1e-12 {
        None
    } else {
        Some((p_o - p_e) / (1.0 - p_e))
    };
    Ok(AgreementStats {
        raw_agreement_percent: 100.0 * p_o,
        kappa,
    })
}
