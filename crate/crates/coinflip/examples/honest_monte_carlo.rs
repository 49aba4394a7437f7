//! Cross-checks the closed-form honest-abort model against full protocol
//! sessions run through the engine, on a bright configuration where
//! detections arrive within a few pulses.
//!
//!     cargo run --release --example honest_monte_carlo

use coinflip::config::presets;
use coinflip::engine::{run_many, SessionConfig, StrategyKind};
use coinflip::honest::{abort_floor, detection_model, honest_abort};

fn main() {
    let params = presets::bright_bench();
    let model = detection_model(&params);
    println!(
        "per-pulse detection: p_sig = {:.4e}, p_dark = {:.4e}, p_det = {:.4e}",
        model.p_signal, model.p_dark, model.p_det
    );
    println!("abort floor (K → ∞): {:.5}", abort_floor(&params));
    let h = honest_abort(&params);
    println!("closed-form H at K = {}: {:.5}", params.rounds, h);

    let sessions = 200_000u64;
    let cfg = SessionConfig::new(params.clone());
    let stats = run_many(
        StrategyKind::Honest,
        StrategyKind::Honest,
        &cfg,
        2024,
        sessions,
        0,
    )
    .unwrap();
    let f = stats.abort_rate();
    let sigma = (h * (1.0 - h) / sessions as f64).sqrt();
    println!(
        "engine Monte Carlo over {sessions} sessions: {f:.5} (3σ band ±{:.5})",
        3.0 * sigma
    );
    println!("  no-detection aborts: {}", stats.no_detection);
    println!("  outcome mismatches:  {}", stats.outcome_mismatch);
    println!(
        "  accepted coin balance: {} zeros / {} accepted",
        stats.coin_zero, stats.accepted
    );
    println!(
        "  first clicks per detector: D0 = {}, D1 = {} (symmetrized)",
        stats.clicks_d0, stats.clicks_d1
    );
    assert!((f - h).abs() < 3.0 * sigma);
    println!("closed form and Monte Carlo agree within 3σ");
}
