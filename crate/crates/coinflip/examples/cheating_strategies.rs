//! Runs both optimal cheating strategies and compares their empirical
//! success against the analytic bounds.
//!
//! The cheating sender injects the optimal superposition in every pulse
//! and picks her reveal after hearing the receiver's bit; with clean
//! devices her success saturates the closed-form bound. The cheating
//! receiver exploits per-pulse photon numbers with perfect detection; his
//! session-scale statistics stay below the event-decomposition bound.
//!
//!     cargo run --release --example cheating_strategies

use coinflip::bounds::{alice_bound_uniform, bob_bound};
use coinflip::config::presets;
use coinflip::engine::{
    run_cheating_bob_aggregate, run_many, PhotonProfile, SessionConfig, StrategyKind,
};

fn main() {
    // Clean devices, deterministic clicks: the uniform bound is exact.
    let mut params = presets::bright_bench();
    params.dark0 = 0.0;
    params.dark1 = 0.0;
    params.err = 0.0;
    params.eps_b = 0.0;
    params.eps_b_prime = 0.0;
    params.atten_db_per_km = 0.0;
    params.eta0 = 1.0;
    params.eta1 = 1.0;
    params.rounds = 64;

    let sessions = 200_000u64;
    let alice = StrategyKind::CheatingAlicePm { target: 0 };
    let cfg = SessionConfig::for_strategies(params.clone(), &alice, &StrategyKind::Honest);
    let stats = run_many(alice, StrategyKind::Honest, &cfg, 7, sessions, 0).unwrap();
    let success = stats.coin_on_target as f64 / sessions as f64;
    let bound = alice_bound_uniform(params.y).unwrap();
    println!("cheating sender, target 0, y = {}:", params.y);
    println!("  empirical success {success:.5} vs bound {bound:.5} over {sessions} sessions");

    // The photon-aware receiver at the metropolitan operating point.
    let table = presets::table1_15km();
    let bob = bob_bound(table.mu, table.rounds, table.y, table.eps_a).unwrap();
    for (label, profile) in [
        ("vacuum-only sessions ", PhotonProfile::AllVacuum),
        ("single-photon session", PhotonProfile::SinglesOnly),
        ("unrestricted sessions", PhotonProfile::Free),
    ] {
        let agg = run_cheating_bob_aggregate(&table, sessions, profile, 11).unwrap();
        println!(
            "cheating receiver, {label}: success {:.5} (bound {:.5})",
            agg.win_rate(),
            bob.p
        );
    }
    println!(
        "receiver bound decomposition: A2 {:.3}·{:.3} + A4 {:.3}·{:.3} + rest {:.3}·1 = {:.5}",
        bob.breakdown.a2.prob,
        bob.breakdown.a2.bound,
        bob.breakdown.a4.prob,
        bob.breakdown.a4.bound,
        bob.breakdown.rest.prob,
        bob.p
    );
}
