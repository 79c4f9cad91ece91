//! Chat-completion and OCR endpoint abstractions.
//!
//! The episode engine talks to any endpoint implementing [`ChatEndpoint`].
//! [`HttpEndpoint`] speaks the OpenAI-compatible chat-completions wire shape
//! with interleaved text parts and base64 PNG image parts; the mocks in
//! [`mock`] make the whole pipeline runnable hermetically and
//! deterministically.

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("endpoint http error: {0}")]
    Http(String),
    #[error("endpoint auth error: {0}")]
    Auth(String),
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("scripted endpoint exhausted after {0} replies")]
    ScriptExhausted(usize),
    #[error("endpoint misconfigured: {0}")]
    Misconfigured(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

/// One part of a message: text or an image carried as raw PNG bytes
/// (base64-encoded only at the wire).
#[derive(Debug, Clone, PartialEq)]
pub enum ContentPart {
    Text(String),
    ImagePng(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatMessage {
    pub role: Role,
    pub parts: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn text(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            parts: vec![ContentPart::Text(text.into())],
        }
    }

    /// Concatenation of the message's text parts.
    pub fn text_content(&self) -> String {
        self.parts
            .iter()
            .filter_map(|p| match p {
                ContentPart::Text(t) => Some(t.as_str()),
                ContentPart::ImagePng(_) => None,
            })
            .collect::<Vec<_>>()
            .join("")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// A synchronous chat-completion endpoint returning the assistant's reply
/// text.
pub trait ChatEndpoint: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError>;
}

/// An image-in/text-out OCR endpoint. `image_index` identifies the page for
/// implementations that track context; HTTP implementations ignore it.
pub trait OcrEndpoint: Send + Sync {
    fn extract(&self, image_index: usize, image_png: &[u8]) -> Result<String, EndpointError>;
}

/// OpenAI-compatible chat-completions client.
pub struct HttpEndpoint {
    url: String,
    model: String,
    /// Name of the environment variable holding the bearer token, if any.
    auth_env: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>, model: impl Into<String>, auth_env: Option<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            auth_env,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn bearer(&self) -> Result<Option<String>, EndpointError> {
        match &self.auth_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| EndpointError::Auth(format!("environment variable {var} is not set"))),
        }
    }
}

fn wire_content(parts: &[ContentPart]) -> serde_json::Value {
    let items: Vec<serde_json::Value> = parts
        .iter()
        .map(|part| match part {
            ContentPart::Text(t) => json!({"type": "text", "text": t}),
            ContentPart::ImagePng(png) => {
                let b64 = base64::engine::general_purpose::STANDARD.encode(png);
                json!({
                    "type": "image_url",
                    "image_url": {"url": format!("data:image/png;base64,{b64}")}
                })
            }
        })
        .collect();
    json!(items)
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError> {
        let messages: Vec<serde_json::Value> = request
            .messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": wire_content(&m.parts)}))
            .collect();
        let body = json!({
            "model": self.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": messages,
        });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(token) = self.bearer()? {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| EndpointError::Http(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(EndpointError::Auth(format!("http status {status}")));
        }
        if !status.is_success() {
            return Err(EndpointError::Http(format!("http status {status}")));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| EndpointError::MalformedResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                EndpointError::MalformedResponse("missing choices[0].message.content".into())
            })
    }
}

/// HTTP OCR client: posts `{"image": "<base64 png>"}` and expects
/// `{"text": "..."}`.
pub struct HttpOcrEndpoint {
    url: String,
    auth_env: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpOcrEndpoint {
    pub fn new(url: impl Into<String>, auth_env: Option<String>) -> Self {
        Self {
            url: url.into(),
            auth_env,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl OcrEndpoint for HttpOcrEndpoint {
    fn extract(&self, _image_index: usize, image_png: &[u8]) -> Result<String, EndpointError> {
        let b64 = base64::engine::general_purpose::STANDARD.encode(image_png);
        let mut req = self.client.post(&self.url).json(&json!({"image": b64}));
        if let Some(var) = &self.auth_env {
            let token = std::env::var(var).map_err(|_| {
                EndpointError::Auth(format!("environment variable {var} is not set"))
            })?;
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| EndpointError::Http(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(EndpointError::Http(format!(
                "http status {}",
                resp.status()
            )));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| EndpointError::MalformedResponse(e.to_string()))?;
        value["text"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| EndpointError::MalformedResponse("missing text field".into()))
    }
}

pub mod mock {
    //! Deterministic in-process endpoints for tests and hermetic pipeline
    //! runs.

    use std::collections::VecDeque;
    use std::sync::Mutex;

    use super::*;

    /// Replays a fixed list of replies in order and records the shape of
    /// every request it saw.
    pub struct ScriptedEndpoint {
        replies: Mutex<VecDeque<String>>,
        total: usize,
        shapes: Mutex<Vec<Vec<Role>>>,
    }

    impl ScriptedEndpoint {
        pub fn new(replies: Vec<String>) -> Self {
            Self {
                total: replies.len(),
                replies: Mutex::new(replies.into()),
                shapes: Mutex::new(Vec::new()),
            }
        }

        /// Role sequence of each request received so far.
        pub fn request_shapes(&self) -> Vec<Vec<Role>> {
            self.shapes.lock().unwrap().clone()
        }
    }

    impl ChatEndpoint for ScriptedEndpoint {
        fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError> {
            self.shapes
                .lock()
                .unwrap()
                .push(request.messages.iter().map(|m| m.role).collect());
            self.replies
                .lock()
                .unwrap()
                .pop_front()
                .ok_or(EndpointError::ScriptExhausted(self.total))
        }
    }

    /// Always answers with the same text, no tool use.
    pub struct AnswerEndpoint {
        pub text: String,
    }

    impl ChatEndpoint for AnswerEndpoint {
        fn complete(&self, _request: &ChatRequest) -> Result<String, EndpointError> {
            Ok(format!("<think>Answering directly.</think>\n{}", self.text))
        }
    }

    fn tool_message_count(request: &ChatRequest) -> usize {
        request
            .messages
            .iter()
            .filter(|m| m.role == Role::Tool)
            .count()
    }

    /// Expands one page, then answers. Stateless: the decision depends only
    /// on whether a tool response is already in the conversation, so it is
    /// safe across concurrent episodes.
    pub struct ExpandThenAnswerEndpoint {
        pub image: usize,
        pub answer: String,
    }

    impl ChatEndpoint for ExpandThenAnswerEndpoint {
        fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError> {
            if tool_message_count(request) == 0 {
                Ok(format!(
                    "<think>Image {k} looks relevant; expanding it.</think>\n<tool_call>{{\"name\": \"read_text\", \"arguments\": {{\"image\": {k}}}}}</tool_call>",
                    k = self.image
                ))
            } else {
                Ok(format!(
                    "<think>The expanded text settles it.</think>\n{}",
                    self.answer
                ))
            }
        }
    }

    /// Emits a tool call on every turn, never answering.
    pub struct AlwaysExpandEndpoint {
        pub image: usize,
    }

    impl ChatEndpoint for AlwaysExpandEndpoint {
        fn complete(&self, _request: &ChatRequest) -> Result<String, EndpointError> {
            Ok(format!(
                "<think>Still need more detail.</think>\n<tool_call>{{\"name\": \"read_text\", \"arguments\": {{\"image\": {}}}}}</tool_call>",
                self.image
            ))
        }
    }

    /// Always fails, simulating an unreachable endpoint.
    pub struct FailingEndpoint;

    impl ChatEndpoint for FailingEndpoint {
        fn complete(&self, _request: &ChatRequest) -> Result<String, EndpointError> {
            Err(EndpointError::Http("connection refused".into()))
        }
    }

    /// Judge that always returns the same verdict token.
    pub struct FixedJudge {
        pub yes: bool,
    }

    impl ChatEndpoint for FixedJudge {
        fn complete(&self, _request: &ChatRequest) -> Result<String, EndpointError> {
            Ok(if self.yes { "[[YES]]" } else { "[[NO]]" }.to_string())
        }
    }

    fn section<'a>(prompt: &'a str, open: &str, close: &str) -> Option<&'a str> {
        let start = prompt.find(open)? + open.len();
        let end = prompt[start..].find(close)? + start;
        Some(prompt[start..end].trim())
    }

    /// Judge that answers [[YES]] iff any gold answer is a case-insensitive
    /// substring of the model answer. It parses the judge prompt itself, so
    /// hermetic pipeline runs get meaningful accuracy numbers.
    pub struct SubstringJudge;

    impl ChatEndpoint for SubstringJudge {
        fn complete(&self, request: &ChatRequest) -> Result<String, EndpointError> {
            let prompt = request
                .messages
                .last()
                .map(|m| m.text_content())
                .unwrap_or_default();
            let golds = section(&prompt, "[GOLD ANSWERS]", "[/GOLD ANSWERS]")
                .unwrap_or_default()
                .to_lowercase();
            let answer = section(&prompt, "[MODEL ANSWER]", "[/MODEL ANSWER]")
                .unwrap_or_default()
                .to_lowercase();
            let correct = golds
                .lines()
                .map(str::trim)
                .filter(|g| !g.is_empty())
                .any(|g| answer.contains(g));
            Ok(if correct { "[[YES]]" } else { "[[NO]]" }.to_string())
        }
    }

    /// OCR that echoes back text provided at construction, keyed by page
    /// index. Pages without an entry produce an empty extraction.
    pub struct TableOcr {
        pub texts: Vec<(usize, String)>,
    }

    impl OcrEndpoint for TableOcr {
        fn extract(&self, image_index: usize, _png: &[u8]) -> Result<String, EndpointError> {
            Ok(self
                .texts
                .iter()
                .find(|(k, _)| *k == image_index)
                .map(|(_, t)| t.clone())
                .unwrap_or_default())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_endpoint_replays_and_records() {
        let ep = mock::ScriptedEndpoint::new(vec!["a".into(), "b".into()]);
        let req = ChatRequest {
            messages: vec![ChatMessage::text(Role::User, "hi")],
            temperature: 0.0,
            max_tokens: 16,
        };
        assert_eq!(ep.complete(&req).unwrap(), "a");
        assert_eq!(ep.complete(&req).unwrap(), "b");
        assert!(matches!(
            ep.complete(&req),
            Err(EndpointError::ScriptExhausted(2))
        ));
        assert_eq!(ep.request_shapes().len(), 3);
    }

    #[test]
    fn substring_judge_parses_prompt_sections() {
        let judge = mock::SubstringJudge;
        let prompt = crate::prompts::judge_prompt(
            "Who won?",
            &["Pour Moi".into()],
            "The winner was pour moi.",
        );
        let req = ChatRequest {
            messages: vec![ChatMessage::text(Role::User, prompt)],
            temperature: 0.0,
            max_tokens: 8,
        };
        assert_eq!(judge.complete(&req).unwrap(), "[[YES]]");

        let prompt =
            crate::prompts::judge_prompt("Who won?", &["Pour Moi".into()], "No idea at all.");
        let req = ChatRequest {
            messages: vec![ChatMessage::text(Role::User, prompt)],
            temperature: 0.0,
            max_tokens: 8,
        };
        assert_eq!(judge.complete(&req).unwrap(), "[[NO]]");
    }
}
