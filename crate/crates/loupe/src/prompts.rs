//! System prompts used by the episode engine, trace synthesis, and the
//! judge. These strings are part of the wire contract: tests pin their exact
//! content, so any edit is a protocol change.

/// System prompt for episodes whose expansions return text (source text or
/// OCR text) through the `read_text` tool.
pub const READ_TEXT_SYSTEM_PROMPT: &str = "You are a helpful assistant that answers questions based on rendered text images. You can view the images and use the read_text tool to read the actual text content of any image for detailed analysis.

You have a tool called read_text that reads the text content of any image. To use it:

<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": IMAGE_NUMBER}}</tool_call>

You can call read_text multiple times on different images. Always reason inside <think> and </think> tags before taking any action. If you need more detail from a specific image, call read_text to get its text content. Do not read the entire input --- only read images that are likely relevant. Once you have enough information, provide your final answer.";

/// System prompt for episodes whose expansions return a high-resolution
/// image through the `zoom_in` tool.
pub const ZOOM_IN_SYSTEM_PROMPT: &str = "You are a helpful assistant that answers questions about multi-image documents. You can view low-resolution thumbnail images and use the zoom_in tool to get the original full-resolution image for detailed analysis.

You have a tool called zoom_in that shows the original image at full resolution. Images are numbered starting from 1. To use it:

<tool_call>{\"name\": \"zoom_in\", \"arguments\": {\"image\": IMAGE_NUMBER}}</tool_call>

You can call zoom_in multiple times on different images. Always reason inside <think> and </think> tags before taking any action. First examine the thumbnail images to identify which ones likely contain relevant information, then call zoom_in to get the original full-resolution version. Once you have enough information, provide your final answer.";

/// System prompt handed to the synthesis model that generates training
/// trajectories from ground-truth evidence.
pub const TRACE_GENERATION_SYSTEM_PROMPT: &str = "You generate training data for a document QA model. Output ONLY the requested format with ---RESPONSE{N}--- delimiters. Start your output directly with ---RESPONSE1---. No preamble.

ROLEPLAY CONSTRAINT (CRITICAL): You are roleplaying a model that is solving the question from scratch by investigating the document. The <think> blocks must read as genuine first-person investigation of the image content. NEVER reference these prompt elements inside <think>: \"the answer\", \"the answer key\", \"the provided answer\", \"ground truth\", \"the prompt says/states/mentions/indicates/asks\", \"the question's premise\", \"the task says\", \"training data/example\", \"provided text snippets\", or any phrasing that implies you were told the answer or the correct image in advance. Treat the answer as something you DISCOVER by reading, not something you were given. Do not include \"wait, re-reading\" or \"there seems to be a mismatch\" style self-correction --- write the reasoning as if it landed correctly the first time.

STYLE: Each <think> block is 3--5 sentences. After-zoom reasoning MUST quote or cite specific words/phrases from the tool_response text. Do not fabricate text that isn't in the tool_response.";

/// Judge prompt template; fill with [`judge_prompt`].
pub const JUDGE_PROMPT_TEMPLATE: &str = "You are an expert evaluator. Determine if the model's answer correctly answers the question based on the gold answers.

[QUESTION]
{question}
[/QUESTION]

[GOLD ANSWERS]
{gold_answers}
[/GOLD ANSWERS]

[MODEL ANSWER]
{model_answer}
[/MODEL ANSWER]

Evaluation criteria:
- The answer must convey the same core meaning as the gold answers
- Partial matches should be marked incorrect
- Additional correct information beyond gold answers is acceptable
- Empty or off-topic responses are incorrect
- Minor formatting differences (e.g., \"10:30 pm\" vs \"10:30 p.m.\") should be accepted

Respond with ONLY [[YES]] if the model answer is correct, or [[NO]] if incorrect.";

/// Minimal instruction for single-turn, no-tool baseline inference (used by
/// hardness classification). This prompt is local plumbing, not part of the
/// published protocol.
pub const DIRECT_ANSWER_SYSTEM_PROMPT: &str = "You are a helpful assistant that answers questions based on rendered text images. Read the images and answer the question directly and concisely.";

/// Fills the judge template. Gold answers are joined by newline.
pub fn judge_prompt(question: &str, gold_answers: &[String], model_answer: &str) -> String {
    JUDGE_PROMPT_TEMPLATE
        .replace("{question}", question)
        .replace("{gold_answers}", &gold_answers.join("\n"))
        .replace("{model_answer}", model_answer)
}

/// Prefix line for text tool responses carrying page `k`'s content.
pub fn tool_response_text(image_index: usize, content: &str) -> String {
    format!("Text content of Image {image_index}:\n{content}")
}
