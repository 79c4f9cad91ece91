pub mod build_data;
pub mod filter_hard;
pub mod render;
pub mod report;
pub mod run_episodes;
pub mod score;
pub mod simulate;
pub mod synth_requests;
