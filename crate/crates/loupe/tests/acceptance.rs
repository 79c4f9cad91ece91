//! Acceptance suite: one test per release criterion, each printing a
//! PASS line when it holds. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see every line).

use std::collections::BTreeSet;

use loupe::corpus::{map_spans_to_pages, pad_with_distractors};
use loupe::ledger::{
    kv_bytes, kv_mib, reduction_percent, CharEstimator, TokenCounter, TokenLedger,
    DEFAULT_KV_BYTES_PER_TOKEN,
};
use loupe::protocol::endpoint::mock::{FixedJudge, ScriptedEndpoint};
use loupe::protocol::{EpisodeConfig, EpisodeHost, EpisodeStatus, ToolName};
use loupe::render::{
    compute_visual_tokens, render_pages, EncoderProfile, FontMetrics, RenderPreset,
};
use loupe::scoring::{judge_answer, macro_average, reward, selection_hit};
use loupe::simlab::{benefit, expected_error, simulate_episodes, sweep, PolicySpec, RegimeCurve};
use loupe::span::CharSpan;
use loupe::synthetic::{distractor_pool, pseudo_english, sample_with_planted_answer};

fn dejavu() -> FontMetrics {
    FontMetrics::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../assets/fonts/DejaVuSans.ttf"
    ))
    .expect("vendored font loads")
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Criterion 1: built-in presets carry the published page dimensions and
/// default-profile visual tokens 72/48/24 in a 3:2:1 ratio.
#[test]
fn c01_preset_geometry() {
    let expected = [
        ("5x", 256u32, 284u32, 72u64),
        ("10x", 192, 252, 48),
        ("15x", 128, 190, 24),
    ];
    let presets = RenderPreset::builtins();
    assert_eq!(presets.len(), 3);
    for (preset, (name, w, h, vt)) in presets.iter().zip(expected) {
        assert_eq!(preset.name, name);
        assert_eq!((preset.page_width, preset.page_height), (w, h));
        preset.validate().unwrap();
        let tokens = compute_visual_tokens(
            preset.page_width,
            preset.page_height,
            &EncoderProfile::default_vit(),
        )
        .unwrap();
        assert_eq!(tokens, vt);
    }
    // 3:2:1.
    assert_eq!(72 % 24, 0);
    assert_eq!((72 / 24, 48 / 24, 24 / 24), (3, 2, 1));
    println!("ACCEPTANCE 1 PASS: preset geometry 256x284/192x252/128x190 with 72/48/24 visual tokens (3:2:1)");
}

/// Criterion 2: encoder formulas — default profile vs the per-axis-rounding
/// profile on the published table rows (90/63/35).
#[test]
fn c02_encoder_formulas() {
    let default = EncoderProfile::default_vit();
    let glm = EncoderProfile::glm();
    let rows = [
        (256u32, 284u32, 72u64, 90u64),
        (192, 252, 48, 63),
        (128, 190, 24, 35),
    ];
    for (w, h, want_default, want_glm) in rows {
        assert_eq!(compute_visual_tokens(w, h, &default).unwrap(), want_default);
        assert_eq!(compute_visual_tokens(w, h, &glm).unwrap(), want_glm);
    }
    println!("ACCEPTANCE 2 PASS: encoder formulas exact (default 72/48/24, GLM 90/63/35)");
}

/// Criterion 3: a synthetic 10,000-token document (injected count) renders
/// to 25±3 pages at 5x with ICR in [5.0, 6.2]; 10x and 15x land within ±15%
/// of 11.0 and 15.4.
#[test]
fn c03_worked_compression_example() {
    let font = dejavu();
    // 10,000 tokens at the documented 4-chars-per-token default estimator.
    let text = pseudo_english(11, 40_000);
    assert_eq!(CharEstimator.count(&text), 10_000);

    let five = render_pages(&text, &RenderPreset::five_x(), &font).unwrap();
    let pages5 = five.page_count() as i64;
    assert!(
        (22..=28).contains(&pages5),
        "5x pages {pages5} outside 25±3"
    );
    let icr5 = TokenLedger::new(10_000, five.total_visual_tokens())
        .icr()
        .unwrap();
    assert!((5.0..=6.2).contains(&icr5), "5x ICR {icr5}");

    let ten = render_pages(&text, &RenderPreset::ten_x(), &font).unwrap();
    let icr10 = TokenLedger::new(10_000, ten.total_visual_tokens())
        .icr()
        .unwrap();
    assert!(
        (icr10 - 11.0).abs() <= 0.15 * 11.0,
        "10x ICR {icr10} outside 11.0±15%"
    );

    let fifteen = render_pages(&text, &RenderPreset::fifteen_x(), &font).unwrap();
    let icr15 = TokenLedger::new(10_000, fifteen.total_visual_tokens())
        .icr()
        .unwrap();
    assert!(
        (icr15 - 15.4).abs() <= 0.15 * 15.4,
        "15x ICR {icr15} outside 15.4±15%"
    );

    println!(
        "ACCEPTANCE 3 PASS: 10k-token doc -> {pages5} pages at 5x (ICR {icr5:.2}), ICR {icr10:.2} at 10x, {icr15:.2} at 15x"
    );
}

/// Criterion 4: KV arithmetic reproduces the published numbers at printed
/// precision.
#[test]
fn c04_kv_arithmetic() {
    let text_20_images = kv_bytes(10_686, DEFAULT_KV_BYTES_PER_TOKEN);
    assert!((kv_mib(text_20_images) - 334.0).abs() <= 0.5);
    let ours_20_images = kv_bytes(2_288, DEFAULT_KV_BYTES_PER_TOKEN);
    assert!((kv_mib(ours_20_images) - 71.0).abs() <= 0.5);
    assert_eq!(kv_mib(ours_20_images), 71.5);
    assert_eq!(round1(reduction_percent(10_686, 2_288).unwrap()), 78.6);
    assert_eq!(round1(reduction_percent(51_273, 8_090).unwrap()), 84.2);
    println!("ACCEPTANCE 4 PASS: KV arithmetic (334 MiB, 71 MiB, 78.6%, 84.2%)");
}

/// Criterion 5: the reward table is exactly {1.0, 0.7, 0.0, 0.0}.
#[test]
fn c05_reward_table() {
    assert_eq!(reward(true, true), 1.0);
    assert_eq!(reward(true, false), 0.7);
    assert_eq!(reward(false, true), 0.0);
    assert_eq!(reward(false, false), 0.0);
    println!("ACCEPTANCE 5 PASS: reward table {{1.0, 0.7, 0.0, 0.0}}");
}

/// Criterion 6: decomposition identity to 1e-12 on 10,000 random policies,
/// and Monte-Carlo at 10^6 trials within 3 binomial sigma of the closed
/// form.
#[test]
fn c06_decomposition_identity_and_monte_carlo() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xB01D);
    let mut max_gap: f64 = 0.0;
    for _ in 0..10_000 {
        let policy = PolicySpec::new(rng.random(), rng.random(), rng.random()).unwrap();
        let d_no: f64 = rng.random();
        let gap = (d_no - expected_error(&policy) - benefit(&policy, d_no)).abs();
        max_gap = max_gap.max(gap);
    }
    assert!(max_gap <= 1e-12, "identity gap {max_gap}");

    let trials = 1_000_000u64;
    for (policy, d_no) in [
        (PolicySpec::new(0.768, 0.1, 0.9).unwrap(), 0.687),
        (PolicySpec::new(0.5, 0.25, 0.75).unwrap(), 0.5),
        (PolicySpec::new(0.95, 0.02, 0.4).unwrap(), 0.2),
    ] {
        let sim = simulate_episodes(&policy, d_no, trials, 2024).unwrap();
        let sigma_no = (d_no * (1.0 - d_no) / trials as f64).sqrt();
        assert!(
            (sim.no_tool_error - d_no).abs() <= 3.0 * sigma_no,
            "no-tool {} vs {d_no}",
            sim.no_tool_error
        );
        let closed = expected_error(&policy);
        let sigma_tool = (closed * (1.0 - closed) / trials as f64).sqrt();
        assert!(
            (sim.with_tool_error - closed).abs() <= 3.0 * sigma_tool,
            "with-tool {} vs {closed}",
            sim.with_tool_error
        );
    }
    println!(
        "ACCEPTANCE 6 PASS: decomposition identity (max gap {max_gap:.2e} over 10k policies) and 10^6-trial Monte-Carlo within 3 sigma"
    );
}

/// Criterion 7: the measured operating points give positive benefit at all
/// three compression rates for any plausible err_hit <= 0.35.
#[test]
fn c07_regime_reproduction() {
    let curve = RegimeCurve {
        rates: vec![5.0, 10.0, 15.0],
        no_tool_error: vec![1.0 - 0.313, 1.0 - 0.210, 1.0 - 0.181],
        selection: vec![0.768, 0.710, 0.521],
    };
    // err_miss = 1.0 is the worst case for the benefit; smaller values only
    // help. Sweep err_hit over the plausible range.
    for err_hit in [0.0, 0.1, 0.2, 0.3, 0.35] {
        let table = sweep(&curve, err_hit, 1.0).unwrap();
        assert!(
            table.rows.iter().all(|r| r.benefit > 0.0),
            "non-positive benefit at err_hit {err_hit}: {:?}",
            table.rows
        );
    }
    println!("ACCEPTANCE 7 PASS: positive benefit at 5x/10x/15x for all err_hit <= 0.35");
}

/// Criterion 8: protocol conformance against scripted endpoints — turn cap
/// at T=6, one expansion per turn, and the single-hop golden trace replay:
/// ToolCall(read_text, 22), a tool response containing "Pour Moi", and a
/// judged-correct final answer.
#[test]
fn c08_protocol_conformance() {
    let font = dejavu();
    let counter = CharEstimator;

    // --- Turn cap at T=6 with an endpoint that never answers. ---
    let doc = pseudo_english(3, 6_000);
    let pages = render_pages(&doc, &RenderPreset::ten_x(), &font).unwrap();
    let always = loupe::protocol::endpoint::mock::AlwaysExpandEndpoint { image: 1 };
    let host = EpisodeHost {
        endpoint: &always,
        ocr: None,
        counter: &counter,
        metrics: &font,
        config: EpisodeConfig::default(),
        profile: EncoderProfile::default_vit(),
    };
    let traj = host.run("cap", "q", &doc, &pages);
    assert_eq!(traj.status, EpisodeStatus::BudgetExhausted);
    assert_eq!(traj.turns.len(), 6);
    assert!(traj.expand_calls() <= 5);

    // --- Exactly one expansion per turn: a double tool-call reply executes
    // only its first block. ---
    let double = ScriptedEndpoint::new(vec![
        "<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 1}}</tool_call><tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 2}}</tool_call>".into(),
        "done".into(),
    ]);
    let host = EpisodeHost {
        endpoint: &double,
        ocr: None,
        counter: &counter,
        metrics: &font,
        config: EpisodeConfig::default(),
        profile: EncoderProfile::default_vit(),
    };
    let traj = host.run("double", "q", &doc, &pages);
    assert_eq!(traj.expand_calls(), 1);
    assert_eq!(traj.expanded_indices(), vec![1]);
    assert_eq!(traj.turns[0].extra_tool_calls, 1);

    // --- Golden single-hop replay on a 29-page document whose page 22
    // carries the Derby evidence. ---
    let preset = RenderPreset::ten_x();
    let filler = pseudo_english(8, 29 * 2_300);
    let probe = render_pages(&filler, &preset, &font).unwrap();
    assert!(probe.page_count() >= 23, "fixture needs at least 23 pages");
    let span22 = probe.pages[21].char_span;
    let evidence_sentence = " The race report lists the winner details, and the winner, Pour Moi, was foaled in Ireland. ";
    let mut evidence_block = String::new();
    while evidence_block.chars().count() + evidence_sentence.chars().count() < span22.len() {
        evidence_block.push_str(evidence_sentence);
    }
    while evidence_block.chars().count() < span22.len() {
        evidence_block.push(' ');
    }
    let document: String = filler
        .chars()
        .take(span22.start)
        .chain(evidence_block.chars())
        .chain(filler.chars().skip(span22.end))
        .collect();
    let pages = render_pages(&document, &preset, &font).unwrap();
    assert_eq!(pages.page_count(), probe.page_count());
    assert!(
        pages.page_text(&document, 22).unwrap().contains("Pour Moi"),
        "page 22 must carry the evidence"
    );

    let reader = ScriptedEndpoint::new(vec![
        "<think>The question asks for the winner of the 2011 race; the compressed overview points at image 22 for the race report.</think>\n<tool_call>{\"name\": \"read_text\", \"arguments\": {\"image\": 22}}</tool_call>".into(),
        "<think>The expanded text names the winner, Pour Moi, directly.</think>\npour moi".into(),
    ]);
    let host = EpisodeHost {
        endpoint: &reader,
        ocr: None,
        counter: &counter,
        metrics: &font,
        config: EpisodeConfig::default(),
        profile: EncoderProfile::default_vit(),
    };
    let traj = host.run(
        "derby",
        "What was the French sounding winner of the 2011 Epsom Derby?",
        &document,
        &pages,
    );
    assert_eq!(traj.status, EpisodeStatus::Answered);
    let call = traj.turns[0].tool_call.unwrap();
    assert_eq!(call.tool_name, ToolName::ReadText);
    assert_eq!(call.image_index, 22);
    let response_text = traj.turns[0]
        .tool_response
        .as_ref()
        .unwrap()
        .text
        .as_deref()
        .unwrap();
    assert!(response_text.starts_with("Text content of Image 22:"));
    assert!(response_text.contains("Pour Moi"));
    assert_eq!(traj.final_answer.as_deref(), Some("pour moi"));

    // Evidence bookkeeping and the mock judge close the loop.
    let marker = document.find("Pour Moi").unwrap();
    let start = document[..marker].chars().count();
    let evidence = map_spans_to_pages(
        "derby",
        &[CharSpan::new(start, start + "Pour Moi".chars().count())],
        &pages,
    )
    .unwrap();
    assert!(evidence.evidence_pages.contains(&22));
    assert!(selection_hit(&traj, &evidence));

    let judge = FixedJudge { yes: true };
    let verdict = judge_answer(
        &judge,
        "What was the French sounding winner of the 2011 Epsom Derby?",
        &["Pour Moi".to_string()],
        traj.final_answer.as_deref().unwrap(),
    )
    .unwrap();
    assert!(verdict.correct);

    // The exported conversation serializes the tool call on image 22.
    let conversation = loupe::corpus::conversation_from_trajectory(
        &traj,
        "What was the French sounding winner of the 2011 Epsom Derby?",
        loupe::protocol::ExpandKind::SourceText,
        None,
        (1..=pages.page_count())
            .map(|k| format!("derby/page_{k:04}.png"))
            .collect(),
    );
    let mut line = Vec::new();
    loupe::corpus::export_sft_dataset(std::slice::from_ref(&conversation), &mut line).unwrap();
    let serialized = String::from_utf8(line).unwrap();
    assert!(serialized.contains("\\\"image\\\": 22"));
    for msg in &conversation.messages {
        assert_eq!(msg.loss, msg.role == "assistant");
    }

    println!("ACCEPTANCE 8 PASS: turn cap T=6, one expansion per turn, golden read_text(22) trace judged correct");
}

/// Criterion 9: evidence soundness on 1,000 generated samples with random
/// spans and seeded distractor padding — every evidence page's slice
/// contains the gold answer, in full agreement with a brute-force
/// per-character oracle.
#[test]
fn c09_evidence_soundness_property() {
    let font = dejavu();
    let counter = CharEstimator;
    let preset = RenderPreset::five_x();
    let pool = distractor_pool(0xD15C, 24, 2_500);

    for i in 0..1_000u64 {
        let hops = 1 + (i % 3) as usize;
        let sample = sample_with_planted_answer(0x5EED + i, &format!("gen-{i}"), 2_000, hops);
        let padded = pad_with_distractors(&sample, &pool, 3_000..=32_000, &counter, 0xFACE + i)
            .unwrap()
            .sample;
        let pages = render_pages(&padded.document, &preset, &font).unwrap();
        let evidence = map_spans_to_pages(&padded.id, &padded.answer_spans, &pages).unwrap();
        assert!(!evidence.evidence_pages.is_empty());

        // Brute-force oracle: per-character page lookup.
        let mut oracle = BTreeSet::new();
        for span in &padded.answer_spans {
            for idx in span.start..span.end {
                for page in &pages.pages {
                    if page.char_span.contains_index(idx) {
                        oracle.insert(page.index);
                    }
                }
            }
        }
        assert_eq!(evidence.evidence_pages, oracle, "sample gen-{i}");

        // Every evidence page's slice contains the gold answer,
        // case-normalized.
        let gold = padded.gold_answers[0].to_lowercase();
        for &k in &evidence.evidence_pages {
            let slice = pages.page_text(&padded.document, k).unwrap().to_lowercase();
            assert!(
                slice.contains(&gold),
                "sample gen-{i}: page {k} does not contain {gold:?}"
            );
        }
    }
    println!(
        "ACCEPTANCE 9 PASS: evidence soundness on 1,000 padded samples, oracle agreement 100%"
    );
}

/// Criterion 10: the published seven-benchmark accuracy row macro-averages
/// to 68.9 at one decimal.
#[test]
fn c10_macro_average() {
    let row = [76.1, 81.5, 69.6, 78.4, 65.5, 48.3, 62.6];
    let avg = macro_average(&row).unwrap();
    assert_eq!(round1(avg), 68.9);
    println!("ACCEPTANCE 10 PASS: macro average of the 5x row is 68.9");
}
