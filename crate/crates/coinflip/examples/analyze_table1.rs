//! Cheating-probability reports for the four demonstrated operating
//! points: both parties' optimal cheating bounds, the receiver's
//! photon-number event breakdown, the classical benchmark at the model's
//! honest-abort probability, and the gain.
//!
//!     cargo run --example analyze_table1

use coinflip::bounds::CheatReport;
use coinflip::config::presets;

fn main() {
    let columns = [
        ("15 km, mu = 2.0e-3, K = 131000", presets::table1_15km()),
        ("15 km, mu = 2.8e-3, K =  88000", presets::table1_15km_alt()),
        ("25 km, mu = 4.0e-3, K = 174000", presets::table1_25km()),
        ("25 km, mu = 5.0e-3, K = 130000", presets::table1_25km_alt()),
    ];
    for (name, params) in columns {
        let report = CheatReport::analyze(&params).expect("analysis succeeds");
        println!("── {name} (y = {}) ──", params.y);
        println!("  honest abort H     = {:.4}", report.honest_abort);
        println!("  sender bound       = {:.5}", report.p_alice);
        println!("  receiver bound     = {:.5}", report.p_bob);
        println!(
            "    events: A1 {:.3e}·{:.3}  A2 {:.3}·{:.3}  A3 {:.3e}·{:.3}  A4 {:.3}·{:.3}  rest {:.3}·1",
            report.breakdown.a1.prob,
            report.breakdown.a1.bound,
            report.breakdown.a2.prob,
            report.breakdown.a2.bound,
            report.breakdown.a3.prob,
            report.breakdown.a3.bound,
            report.breakdown.a4.prob,
            report.breakdown.a4.bound,
            report.breakdown.rest.prob,
        );
        println!("  p_fair             = {:.5}", report.p_fair);
        println!("  classical bound    = {:.5}", report.p_classical);
        println!("  gain               = {:+.5}", report.gain);
        println!();
    }
    println!("Full JSON of the first column:");
    let report = CheatReport::analyze(&presets::table1_15km()).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}
