//! Generates the two headline curves as plot-ready CSV files in the
//! current directory: fair cheating probability versus honest-abort
//! probability for both channel lengths, and gain versus channel length
//! at a fixed 0.8% abort probability.
//!
//!     cargo run --release --example figure_curves

use coinflip::config::presets;
use coinflip::fairness::{abort_rows_to_csv, distance_rows_to_csv, sweep_abort, sweep_distance};

fn main() {
    for (name, cfg) in [
        ("15km", presets::config_15km()),
        ("25km", presets::config_25km()),
    ] {
        let rows = sweep_abort(&cfg.params, &cfg.mu_grid, &cfg.abort_sweep).unwrap();
        for row in &rows {
            match &row.outcome {
                Ok(p) => println!(
                    "{name}  H = {:.4}: p_fair = {:.5}  classical = {:.5}  gain = {:+.5}",
                    row.h, p.p_fair, p.p_classical, p.gain
                ),
                Err(e) => println!("{name}  H = {:.4}: infeasible ({e})", row.h),
            }
        }
        let path = format!("cheating_vs_abort_{name}.csv");
        std::fs::write(&path, abort_rows_to_csv(&rows)).unwrap();
        println!("wrote {path}\n");
    }

    let cfg = presets::config_15km();
    let rows = sweep_distance(&cfg, cfg.target_abort).unwrap();
    for row in &rows {
        match &row.outcome {
            Ok(p) => println!(
                "distance {:>4.0} km: gain = {:+.5}  (mu = {:.3e}, K = {})",
                row.km, p.gain, p.mu, p.rounds
            ),
            Err(e) => println!("distance {:>4.0} km: infeasible ({e})", row.km),
        }
    }
    std::fs::write("gain_vs_distance.csv", distance_rows_to_csv(&rows)).unwrap();
    println!("wrote gain_vs_distance.csv");
}
