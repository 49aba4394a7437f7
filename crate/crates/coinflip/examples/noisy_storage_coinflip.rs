//! The combined protocol for noisy-storage adversaries: a BB84-style
//! prepare stage builds correlated strings, the wait time forces stored
//! state through the depolarizing channel, syndromes and two-universal
//! extractor seeds commit the mask bits, and the reveal stage checks
//! syndromes and same-basis coincidences. Any single tampered bit aborts.
//!
//!     cargo run --example noisy_storage_coinflip

use coinflip::bounded::{run_noisy_storage, CodeParams, NoisyOptions};
use coinflip::config::presets;
use coinflip::engine::{SessionSeeds, SessionVerdict};

fn main() {
    let mut params = presets::bright_bench();
    params.err = 0.0;
    params.dark0 = 0.0;
    params.dark1 = 0.0;
    params.mu = 5.0;
    params.atten_db_per_km = 0.0;
    params.rounds = 32;
    let code = CodeParams::hamming(128).unwrap();
    println!(
        "code: shortened Hamming family, n = {}, {} parity checks, wait Δt = {} tick(s)",
        code.n,
        code.parity.len(),
        code.wait_ticks
    );

    let out = run_noisy_storage(
        &params,
        &code,
        &NoisyOptions::default(),
        SessionSeeds::from_master(9),
        0,
    )
    .unwrap();
    let agreeing = out
        .debug
        .alice_bases
        .iter()
        .zip(&out.debug.bob_bases)
        .filter(|(a, b)| a == b)
        .count();
    println!(
        "prepare stage: 2n = {} pulses at y = 1/2, {} positions share a basis",
        2 * code.n,
        agreeing
    );
    println!(
        "mask bits: sender {} receiver {}",
        out.debug.mask_a, out.debug.mask_b
    );
    println!("honest verdict: {:?}", out.transcript.verdict);
    assert!(matches!(
        out.transcript.verdict,
        SessionVerdict::Accepted { .. }
    ));

    // Tamper one bit of the opened first half: the checks catch it.
    let mut mask = vec![0u8; code.n];
    mask[17] = 1;
    let tampered = run_noisy_storage(
        &params,
        &code,
        &NoisyOptions {
            tamper_x1: Some(mask),
            ..Default::default()
        },
        SessionSeeds::from_master(9),
        0,
    )
    .unwrap();
    println!("tampered opening: {:?}", tampered.transcript.verdict);
    assert!(matches!(
        tampered.transcript.verdict,
        SessionVerdict::Aborted { .. }
    ));
}
