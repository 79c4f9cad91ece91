//! Configuration: one TOML file plus flag overrides; flags win. All
//! randomness flows from the single `seed`.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use loupe::ledger::{CharEstimator, TokenCounter, DEFAULT_KV_BYTES_PER_TOKEN};
use loupe::protocol::endpoint::mock;
use loupe::protocol::{ChatEndpoint, EpisodeConfig, ExpandKind, OcrEndpoint};
use loupe::render::{EncoderProfile, FontMetrics, RenderPreset};
use serde::Deserialize;

use crate::{config_err, Cli, CliResult};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub font: Option<PathBuf>,
    pub preset: Option<String>,
    pub profile: Option<String>,
    pub tokenizer: Option<String>,
    pub parallelism: Option<usize>,
    pub turn_cap: Option<u32>,
    pub expand_kind: Option<String>,
    pub zoom_scale: Option<u32>,
    pub max_pixels: Option<u64>,
    pub temperature: Option<f64>,
    pub max_tokens_per_turn: Option<u32>,
    pub kv_bytes_per_token: Option<u64>,
    #[serde(default)]
    pub pad: PadConfig,
    #[serde(default)]
    pub endpoints: EndpointsConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadConfig {
    pub target_min: u64,
    pub target_max: u64,
}

impl Default for PadConfig {
    fn default() -> Self {
        Self {
            target_min: 3_000,
            target_max: 32_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EndpointsConfig {
    pub model: Option<EndpointSpec>,
    pub judge: Option<EndpointSpec>,
    pub ocr: Option<OcrSpec>,
}

/// A chat endpoint: HTTP against an OpenAI-compatible server, or one of the
/// deterministic in-process mocks for hermetic runs.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EndpointSpec {
    Http {
        url: String,
        model: String,
        /// Environment variable holding the bearer token; secrets never
        /// live in the config file.
        #[serde(default)]
        auth_env: Option<String>,
    },
    MockAnswer {
        text: String,
    },
    MockExpandThenAnswer {
        image: usize,
        answer: String,
    },
    MockAlwaysExpand {
        image: usize,
    },
    MockJudgeYes,
    MockJudgeNo,
    /// Judge that checks gold-answer substring containment; useful for
    /// deterministic pipeline smoke runs.
    MockJudgeSubstring,
}

impl EndpointSpec {
    pub fn build(&self) -> Box<dyn ChatEndpoint> {
        match self {
            EndpointSpec::Http {
                url,
                model,
                auth_env,
            } => Box::new(loupe::protocol::endpoint::HttpEndpoint::new(
                url.clone(),
                model.clone(),
                auth_env.clone(),
            )),
            EndpointSpec::MockAnswer { text } => {
                Box::new(mock::AnswerEndpoint { text: text.clone() })
            }
            EndpointSpec::MockExpandThenAnswer { image, answer } => {
                Box::new(mock::ExpandThenAnswerEndpoint {
                    image: *image,
                    answer: answer.clone(),
                })
            }
            EndpointSpec::MockAlwaysExpand { image } => {
                Box::new(mock::AlwaysExpandEndpoint { image: *image })
            }
            EndpointSpec::MockJudgeYes => Box::new(mock::FixedJudge { yes: true }),
            EndpointSpec::MockJudgeNo => Box::new(mock::FixedJudge { yes: false }),
            EndpointSpec::MockJudgeSubstring => Box::new(mock::SubstringJudge),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OcrSpec {
    Http {
        url: String,
        #[serde(default)]
        auth_env: Option<String>,
    },
}

impl OcrSpec {
    pub fn build(&self) -> Box<dyn OcrEndpoint> {
        match self {
            OcrSpec::Http { url, auth_env } => Box::new(
                loupe::protocol::endpoint::HttpOcrEndpoint::new(url.clone(), auth_env.clone()),
            ),
        }
    }
}

/// Fully resolved settings for one invocation.
pub struct Settings {
    pub seed: u64,
    pub font: FontMetrics,
    pub preset: RenderPreset,
    pub profile: EncoderProfile,
    pub parallelism: usize,
    pub episode: EpisodeConfig,
    pub kv_bytes_per_token: u64,
    pub pad_range: RangeInclusive<u64>,
    pub model: Option<EndpointSpec>,
    pub judge: Option<EndpointSpec>,
    pub ocr: Option<OcrSpec>,
}

fn parse_expand_kind(name: &str) -> CliResult<ExpandKind> {
    match name {
        "source-text" | "source_text" => Ok(ExpandKind::SourceText),
        "ocr-text" | "ocr_text" => Ok(ExpandKind::OcrText),
        "image-zoom" | "image_zoom" => Ok(ExpandKind::ImageZoom),
        other => Err(config_err(format!(
            "unknown expand kind {other:?} (expected source-text, ocr-text, or image-zoom)"
        ))),
    }
}

const DEFAULT_FONT_PATHS: &[&str] = &[
    "assets/fonts/DejaVuSans.ttf",
    "../assets/fonts/DejaVuSans.ttf",
    "../../assets/fonts/DejaVuSans.ttf",
];

fn default_font() -> CliResult<FontMetrics> {
    for candidate in DEFAULT_FONT_PATHS {
        if Path::new(candidate).exists() {
            return FontMetrics::load(candidate).map_err(config_err);
        }
    }
    Err(config_err(
        "no font configured and the bundled assets/fonts/DejaVuSans.ttf was not found; pass --font",
    ))
}

impl Settings {
    pub fn load(cli: &Cli) -> CliResult<Self> {
        let file: FileConfig = match &cli.config {
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                toml::from_str(&raw).map_err(|e| config_err(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        if let Some(tok) = &file.tokenizer {
            if tok != "chars4" {
                return Err(config_err(format!(
                    "unknown tokenizer {tok:?} (only \"chars4\" is built in)"
                )));
            }
        }

        let preset_name = cli
            .preset
            .clone()
            .or(file.preset.clone())
            .unwrap_or_else(|| "5x".to_string());
        let preset = RenderPreset::builtin(&preset_name)
            .ok_or_else(|| config_err(format!("unknown preset {preset_name:?}")))?;

        let profile_name = cli
            .profile
            .clone()
            .or(file.profile.clone())
            .unwrap_or_else(|| "default".to_string());
        let profile = EncoderProfile::by_name(&profile_name)
            .ok_or_else(|| config_err(format!("unknown encoder profile {profile_name:?}")))?;

        let font = match cli.font.as_ref().or(file.font.as_ref()) {
            Some(path) => FontMetrics::load(path).map_err(config_err)?,
            None => default_font()?,
        };

        let mut episode = EpisodeConfig {
            max_turns: cli.turn_cap.or(file.turn_cap).unwrap_or(6),
            ..EpisodeConfig::default()
        };
        if let Some(kind) = cli.expand_kind.as_deref().or(file.expand_kind.as_deref()) {
            episode.expand_kind = parse_expand_kind(kind)?;
        }
        if let Some(scale) = file.zoom_scale {
            episode.zoom_scale = scale;
        }
        if let Some(px) = file.max_pixels {
            episode.max_pixels = px;
        }
        if let Some(t) = file.temperature {
            episode.temperature = t;
        }
        if let Some(m) = file.max_tokens_per_turn {
            episode.max_tokens_per_turn = m;
        }
        episode.validate().map_err(config_err)?;

        let parallelism = cli.parallelism.or(file.parallelism).unwrap_or(1);
        if parallelism < 1 {
            return Err(config_err("parallelism must be at least 1"));
        }
        let pad_range = file.pad.target_min..=file.pad.target_max;

        Ok(Settings {
            seed: cli.seed.or(file.seed).unwrap_or(0),
            font,
            preset,
            profile,
            parallelism,
            episode,
            kv_bytes_per_token: file
                .kv_bytes_per_token
                .unwrap_or(DEFAULT_KV_BYTES_PER_TOKEN),
            pad_range,
            model: file.endpoints.model,
            judge: file.endpoints.judge,
            ocr: file.endpoints.ocr,
        })
    }

    /// The configured token counter. Only the documented chars/4 estimator
    /// is built in; external tokenizers inject counts upstream.
    pub fn counter(&self) -> impl TokenCounter {
        CharEstimator
    }

    /// Preset for a prepared record, honoring the preset recorded at
    /// build-data time.
    pub fn preset_for(&self, name: &str) -> CliResult<RenderPreset> {
        RenderPreset::builtin(name)
            .ok_or_else(|| config_err(format!("prepared data references unknown preset {name:?}")))
    }

    pub fn model_endpoint(&self) -> CliResult<Box<dyn ChatEndpoint>> {
        self.model
            .as_ref()
            .map(|spec| spec.build())
            .ok_or_else(|| config_err("no model endpoint configured ([endpoints.model] in config)"))
    }

    pub fn judge_endpoint(&self) -> CliResult<Box<dyn ChatEndpoint>> {
        self.judge
            .as_ref()
            .map(|spec| spec.build())
            .ok_or_else(|| config_err("no judge endpoint configured ([endpoints.judge] in config)"))
    }
}
