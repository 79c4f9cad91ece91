//! The multi-turn episode state machine.
//!
//! One episode is strictly sequential: the message list sent at turn `t+1`
//! extends the turn-`t` list by exactly the model's reply plus at most one
//! tool message. Episodes never share mutable state, so many can run
//! concurrently against the same endpoint.

use serde::{Deserialize, Serialize};

use crate::ledger::{ExpansionKind, TokenCounter, TokenLedger};
use crate::render::{encode_page_png, EncoderProfile, GlyphMetrics, PageSet};

use super::endpoint::{ChatEndpoint, ChatMessage, ChatRequest, ContentPart, OcrEndpoint, Role};
use super::expand::{ExpandOutcome, ExpandPayload, Expander};
use super::parse::{parse_model_turn, TurnAction};
use super::{EpisodeConfig, ToolCall};

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Answered,
    BudgetExhausted,
    ProtocolError,
}

/// The tool message appended after a model turn, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponseRecord {
    pub kind: ExpansionKind,
    /// Text payload, or the rejection/malformed-call notice. Image payloads
    /// record their dimensions instead.
    pub text: Option<String>,
    pub image_dims: Option<(u32, u32)>,
    pub token_cost: u64,
    /// True when the expansion actually ran (in-range index) and was charged
    /// to the ledger.
    pub executed: bool,
}

/// One model turn plus the engine's response to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTurn {
    /// Verbatim `<think>` contents.
    pub reasoning: String,
    /// The model's reply, exactly as produced.
    pub raw_reply: String,
    pub tool_call: Option<ToolCall>,
    pub tool_response: Option<ToolResponseRecord>,
    /// Tool-call blocks beyond the first, ignored with this count as the
    /// warning.
    pub extra_tool_calls: usize,
    /// Offending substring when the reply had tool tags but no well-formed
    /// block.
    pub malformed: Option<String>,
}

/// Full record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sample_id: String,
    pub turns: Vec<TrajectoryTurn>,
    pub final_answer: Option<String>,
    pub status: EpisodeStatus,
    pub ledger: TokenLedger,
    /// Endpoint failure detail when status is `ProtocolError`.
    pub error: Option<String>,
}

impl Trajectory {
    /// Number of executed (in-range) expansions; equals the ledger's
    /// expansion count.
    pub fn expand_calls(&self) -> usize {
        self.ledger.expansions().len()
    }

    /// 1-based page indices of executed expansions, in order.
    pub fn expanded_indices(&self) -> Vec<usize> {
        self.turns
            .iter()
            .filter(|t| t.tool_response.as_ref().is_some_and(|r| r.executed))
            .filter_map(|t| t.tool_call.map(|c| c.image_index))
            .collect()
    }

    /// The last turn's reply text with think blocks and tool-call blocks
    /// stripped, used for retroactive answer extraction on exhausted
    /// budgets.
    pub fn forced_answer(&self) -> Option<String> {
        let last = self.turns.last()?;
        let tail = match last.raw_reply.rfind("</think>") {
            Some(pos) => &last.raw_reply[pos + "</think>".len()..],
            None => last.raw_reply.as_str(),
        };
        let mut out = String::new();
        let mut rest = tail;
        while let Some(open) = rest.find("<tool_call>") {
            out.push_str(&rest[..open]);
            match rest[open..].find("</tool_call>") {
                Some(close) => rest = &rest[open + close + "</tool_call>".len()..],
                None => {
                    rest = "";
                    break;
                }
            }
        }
        out.push_str(rest);
        Some(out.trim().to_string())
    }
}

/// Everything an episode needs besides the sample itself.
pub struct EpisodeHost<'a> {
    pub endpoint: &'a dyn ChatEndpoint,
    pub ocr: Option<&'a dyn OcrEndpoint>,
    pub counter: &'a dyn TokenCounter,
    pub metrics: &'a dyn GlyphMetrics,
    pub config: EpisodeConfig,
    pub profile: EncoderProfile,
}

impl<'a> EpisodeHost<'a> {
    /// Runs one episode: system prompt + pages + question, then up to
    /// `max_turns` model replies. Each turn expands at most one page. A tool
    /// call on the final turn is recorded but not executed — the budget
    /// reserves the last turn for an answer.
    pub fn run(
        &self,
        sample_id: &str,
        question: &str,
        source_text: &str,
        pages: &PageSet,
    ) -> Trajectory {
        let mut ledger =
            TokenLedger::new(self.counter.count(source_text), pages.total_visual_tokens());
        let mut turns: Vec<TrajectoryTurn> = Vec::new();

        let mut messages = vec![ChatMessage::text(
            Role::System,
            self.config.expand_kind.system_prompt(),
        )];
        let mut user_parts: Vec<ContentPart> = Vec::new();
        for page in &pages.pages {
            match encode_page_png(&page.raster, page.width, page.height) {
                Ok(png) => user_parts.push(ContentPart::ImagePng(png)),
                Err(e) => {
                    return Trajectory {
                        sample_id: sample_id.to_string(),
                        turns,
                        final_answer: None,
                        status: EpisodeStatus::ProtocolError,
                        ledger,
                        error: Some(e.to_string()),
                    }
                }
            }
        }
        user_parts.push(ContentPart::Text(question.to_string()));
        messages.push(ChatMessage {
            role: Role::User,
            parts: user_parts,
        });

        let expander = Expander {
            pages,
            source_text,
            metrics: self.metrics,
            counter: self.counter,
            ocr: self.ocr,
            config: &self.config,
            profile: self.profile,
        };

        for turn_index in 1..=self.config.max_turns {
            let request = ChatRequest {
                messages: messages.clone(),
                temperature: self.config.temperature,
                max_tokens: self.config.max_tokens_per_turn,
            };
            let reply = match self.endpoint.complete(&request) {
                Ok(reply) => reply,
                Err(e) => {
                    return Trajectory {
                        sample_id: sample_id.to_string(),
                        turns,
                        final_answer: None,
                        status: EpisodeStatus::ProtocolError,
                        ledger,
                        error: Some(e.to_string()),
                    }
                }
            };
            messages.push(ChatMessage::text(Role::Assistant, reply.clone()));

            match parse_model_turn(&reply) {
                Ok(parsed) => match parsed.action {
                    TurnAction::Answer(answer) => {
                        turns.push(TrajectoryTurn {
                            reasoning: parsed.reasoning,
                            raw_reply: reply,
                            tool_call: None,
                            tool_response: None,
                            extra_tool_calls: parsed.extra_tool_calls,
                            malformed: None,
                        });
                        return Trajectory {
                            sample_id: sample_id.to_string(),
                            turns,
                            final_answer: Some(answer),
                            status: EpisodeStatus::Answered,
                            ledger,
                            error: None,
                        };
                    }
                    TurnAction::Expand(call) => {
                        let last_turn = turn_index == self.config.max_turns;
                        let tool_response = if last_turn {
                            // No turn left to read the response; the call is
                            // recorded but not executed.
                            None
                        } else {
                            match expander.expand(&call) {
                                Ok(ExpandOutcome::Expanded(resp)) => {
                                    ledger.record_expansion(turn_index, resp.kind, resp.token_cost);
                                    let (text, image_dims, part) = match resp.payload {
                                        ExpandPayload::Text(t) => {
                                            let part = ContentPart::Text(t.clone());
                                            (Some(t), None, part)
                                        }
                                        ExpandPayload::ImagePng { png, width, height } => (
                                            None,
                                            Some((width, height)),
                                            ContentPart::ImagePng(png),
                                        ),
                                    };
                                    messages.push(ChatMessage {
                                        role: Role::Tool,
                                        parts: vec![part],
                                    });
                                    Some(ToolResponseRecord {
                                        kind: resp.kind,
                                        text,
                                        image_dims,
                                        token_cost: resp.token_cost,
                                        executed: true,
                                    })
                                }
                                Ok(ExpandOutcome::Rejected { message }) => {
                                    messages.push(ChatMessage::text(Role::Tool, message.clone()));
                                    Some(ToolResponseRecord {
                                        kind: ExpansionKind::Text,
                                        text: Some(message),
                                        image_dims: None,
                                        token_cost: 0,
                                        executed: false,
                                    })
                                }
                                Err(e) => {
                                    turns.push(TrajectoryTurn {
                                        reasoning: parsed.reasoning,
                                        raw_reply: reply,
                                        tool_call: Some(call),
                                        tool_response: None,
                                        extra_tool_calls: parsed.extra_tool_calls,
                                        malformed: None,
                                    });
                                    return Trajectory {
                                        sample_id: sample_id.to_string(),
                                        turns,
                                        final_answer: None,
                                        status: EpisodeStatus::ProtocolError,
                                        ledger,
                                        error: Some(e.to_string()),
                                    };
                                }
                            }
                        };
                        turns.push(TrajectoryTurn {
                            reasoning: parsed.reasoning,
                            raw_reply: reply,
                            tool_call: Some(call),
                            tool_response,
                            extra_tool_calls: parsed.extra_tool_calls,
                            malformed: None,
                        });
                    }
                },
                Err(parse_err) => {
                    // Malformed tool call: consume the turn and tell the
                    // model what went wrong instead of aborting.
                    let notice = format!(
                        "malformed tool call, expected <tool_call>{{\"name\": ..., \"arguments\": {{\"image\": N}}}}</tool_call>: {}",
                        parse_err.offending
                    );
                    messages.push(ChatMessage::text(Role::Tool, notice.clone()));
                    turns.push(TrajectoryTurn {
                        reasoning: String::new(),
                        raw_reply: reply,
                        tool_call: None,
                        tool_response: Some(ToolResponseRecord {
                            kind: ExpansionKind::Text,
                            text: Some(notice),
                            image_dims: None,
                            token_cost: 0,
                            executed: false,
                        }),
                        extra_tool_calls: 0,
                        malformed: Some(parse_err.offending),
                    });
                }
            }
        }

        Trajectory {
            sample_id: sample_id.to_string(),
            turns,
            final_answer: None,
            status: EpisodeStatus::BudgetExhausted,
            ledger,
            error: None,
        }
    }
}

/// One unit of work for the parallel driver.
pub struct EpisodeJob {
    pub sample_id: String,
    pub question: String,
    pub source_text: String,
    pub pages: PageSet,
}

/// Runs many episodes with a bounded worker pool. Results come back in job
/// order regardless of completion order, so output files are reproducible.
pub fn run_episodes(
    host: &EpisodeHost<'_>,
    jobs: &[EpisodeJob],
    parallelism: usize,
) -> Vec<Trajectory> {
    let parallelism = parallelism.max(1).min(jobs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Trajectory>>> = (0..jobs.len())
        .map(|_| std::sync::Mutex::new(None))
        .collect();

    std::thread::scope(|scope| {
        for _ in 0..parallelism {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let job = &jobs[i];
                let traj = host.run(&job.sample_id, &job.question, &job.source_text, &job.pages);
                *results[i].lock().unwrap() = Some(traj);
            });
        }
    });

    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("episode completed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::CharEstimator;
    use crate::protocol::endpoint::mock::{
        AlwaysExpandEndpoint, AnswerEndpoint, FailingEndpoint, ScriptedEndpoint,
    };
    use crate::render::{render_pages, FontMetrics, RenderPreset};

    fn dejavu() -> FontMetrics {
        FontMetrics::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../assets/fonts/DejaVuSans.ttf"
        ))
        .unwrap()
    }

    fn host<'a>(
        endpoint: &'a dyn ChatEndpoint,
        metrics: &'a FontMetrics,
        counter: &'a CharEstimator,
    ) -> EpisodeHost<'a> {
        EpisodeHost {
            endpoint,
            ocr: None,
            counter,
            metrics,
            config: EpisodeConfig::default(),
            profile: EncoderProfile::default_vit(),
        }
    }

    fn fixture(text: &str) -> (PageSet, FontMetrics, CharEstimator) {
        let font = dejavu();
        let pages = render_pages(text, &RenderPreset::five_x(), &font).unwrap();
        (pages, font, CharEstimator)
    }

    #[test]
    fn one_expand_then_answer() {
        let text = "the races were held in june at the downs";
        let (pages, font, counter) = fixture(text);
        let ep = ScriptedEndpoint::new(vec![
            "<think>Check image 1.</think>\n<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 1}}</tool_call>".into(),
            "<think>The text says june.</think>\njune".into(),
        ]);
        let traj = host(&ep, &font, &counter).run("s1", "When were the races?", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::Answered);
        assert_eq!(traj.final_answer.as_deref(), Some("june"));
        assert_eq!(traj.expand_calls(), 1);
        assert_eq!(traj.ledger.expansions().len(), 1);
        assert_eq!(traj.expanded_indices(), vec![1]);
        // ECR strictly below ICR once a expansion landed.
        assert!(traj.ledger.ecr().unwrap() < traj.ledger.icr().unwrap());
    }

    #[test]
    fn always_expanding_hits_turn_cap() {
        let text = "some page content for the budget test";
        let (pages, font, counter) = fixture(text);
        let ep = AlwaysExpandEndpoint { image: 1 };
        let traj = host(&ep, &font, &counter).run("s2", "q", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::BudgetExhausted);
        assert_eq!(traj.turns.len(), 6);
        // The final turn's call is recorded but not executed: 5 expansions.
        assert_eq!(traj.expand_calls(), 5);
        assert!(traj.turns[5].tool_call.is_some());
        assert!(traj.turns[5].tool_response.is_none());
    }

    #[test]
    fn immediate_answer_keeps_ecr_equal_to_icr() {
        let text = "nothing to expand here";
        let (pages, font, counter) = fixture(text);
        let ep = AnswerEndpoint { text: "42".into() };
        let traj = host(&ep, &font, &counter).run("s3", "q", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::Answered);
        assert_eq!(traj.expand_calls(), 0);
        assert_eq!(traj.ledger.ecr().unwrap(), traj.ledger.icr().unwrap());
    }

    #[test]
    fn out_of_range_expand_consumes_turn_without_ledger_change() {
        let text = "single page";
        let (pages, font, counter) = fixture(text);
        let ep = ScriptedEndpoint::new(vec![
            "<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 99}}</tool_call>"
                .into(),
            "answer".into(),
        ]);
        let traj = host(&ep, &font, &counter).run("s4", "q", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::Answered);
        assert_eq!(traj.expand_calls(), 0);
        let first = &traj.turns[0];
        assert_eq!(
            first.tool_response.as_ref().unwrap().text.as_deref(),
            Some("invalid image index")
        );
        assert!(!first.tool_response.as_ref().unwrap().executed);
    }

    #[test]
    fn malformed_reply_consumes_turn_with_notice() {
        let text = "page body";
        let (pages, font, counter) = fixture(text);
        let ep = ScriptedEndpoint::new(vec![
            "<tool_call>{\"name\": \"read_text\"}</tool_call>".into(),
            "final".into(),
        ]);
        let traj = host(&ep, &font, &counter).run("s5", "q", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::Answered);
        assert_eq!(traj.turns.len(), 2);
        assert!(traj.turns[0].malformed.is_some());
        assert_eq!(traj.expand_calls(), 0);
    }

    #[test]
    fn endpoint_failure_preserves_partial_trajectory() {
        let text = "page body";
        let (pages, font, counter) = fixture(text);
        let ep = FailingEndpoint;
        let traj = host(&ep, &font, &counter).run("s6", "q", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::ProtocolError);
        assert!(traj.error.is_some());
        assert!(traj.final_answer.is_none());
    }

    #[test]
    fn sequential_conditioning_extends_message_list() {
        let text = "the content of the one page in this document";
        let (pages, font, counter) = fixture(text);
        let ep = ScriptedEndpoint::new(vec![
            "<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 1}}</tool_call>"
                .into(),
            "<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 1}}</tool_call>"
                .into(),
            "done".into(),
        ]);
        let traj = host(&ep, &font, &counter).run("s7", "q", text, &pages);
        assert_eq!(traj.status, EpisodeStatus::Answered);
        let shapes = ep.request_shapes();
        assert_eq!(shapes.len(), 3);
        assert_eq!(shapes[0], vec![Role::System, Role::User]);
        assert_eq!(
            shapes[1],
            vec![Role::System, Role::User, Role::Assistant, Role::Tool]
        );
        assert_eq!(
            shapes[2],
            vec![
                Role::System,
                Role::User,
                Role::Assistant,
                Role::Tool,
                Role::Assistant,
                Role::Tool
            ]
        );
        // Repeated expansion of the same page is counted each time.
        assert_eq!(traj.expand_calls(), 2);
    }

    #[test]
    fn parallel_driver_preserves_job_order() {
        let text = "parallel body text";
        let (pages, font, counter) = fixture(text);
        let ep = AnswerEndpoint { text: "ok".into() };
        let host = host(&ep, &font, &counter);
        let jobs: Vec<EpisodeJob> = (0..8)
            .map(|i| EpisodeJob {
                sample_id: format!("job-{i}"),
                question: "q".into(),
                source_text: text.into(),
                pages: pages.clone(),
            })
            .collect();
        let trajectories = run_episodes(&host, &jobs, 4);
        let ids: Vec<&str> = trajectories.iter().map(|t| t.sample_id.as_str()).collect();
        assert_eq!(
            ids,
            (0..8)
                .map(|i| format!("job-{i}"))
                .collect::<Vec<_>>()
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
        );
    }
}
