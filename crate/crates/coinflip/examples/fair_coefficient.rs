//! Tuning the state coefficient y so both parties' optimal cheating
//! probabilities coincide, and optimizing (mu, K) jointly against an
//! honest-abort target.
//!
//!     cargo run --release --example fair_coefficient

use coinflip::config::presets;
use coinflip::fairness::{fair_point, optimize_params};

fn main() {
    println!("Fair coefficient at the published operating points:");
    for (name, p) in [
        ("15 km bold", presets::table1_15km()),
        ("15 km alt ", presets::table1_15km_alt()),
        ("25 km bold", presets::table1_25km()),
        ("25 km alt ", presets::table1_25km_alt()),
    ] {
        let fp = fair_point(p.mu, p.rounds, p.eps_a, p.eps_b, p.eps_b_prime).unwrap();
        println!(
            "  {name}: y* = {:.4}   p_A = {:.5}  p_B = {:.5}  |Δ| = {:.1e}",
            fp.y,
            fp.p_alice,
            fp.p_bob,
            (fp.p_alice - fp.p_bob).abs()
        );
    }

    println!();
    println!("Joint (mu, K, y) optimization for an 0.8% abort target:");
    for (name, cfg) in [
        ("15 km", presets::config_15km()),
        ("25 km", presets::config_25km()),
    ] {
        let opt = optimize_params(&cfg.params, &cfg.mu_grid, cfg.target_abort).unwrap();
        println!(
            "  {name}: mu = {:.3e}  K = {}  y = {:.4}  p_fair = {:.5}  gain = {:+.5}",
            opt.mu, opt.rounds, opt.y, opt.p_fair, opt.report.gain
        );
    }
}
