//! The combined protocol for computationally bounded adversaries: both
//! parties commit to the hardcore bit of a secret string through an
//! injective one-way function, the basic protocol runs with the bits
//! masked, and the reveal stage opens everything. A tampered opening is
//! caught and attributed.
//!
//!     cargo run --example commitment_coinflip

use coinflip::bounded::{run_computational, ComputationalOptions, OwfScheme};
use coinflip::config::presets;
use coinflip::engine::{Body, SessionSeeds, SessionVerdict};

fn main() {
    let params = presets::bright_bench();
    let scheme = OwfScheme::standard(2024);
    println!("scheme: modular exponentiation over the published 2048-bit group");
    println!(
        "agreement hash carried in HELLO: {:#018x}",
        scheme.agreement_hash()
    );

    let honest = run_computational(
        &params,
        &scheme,
        &ComputationalOptions::default(),
        SessionSeeds::from_master(5),
        0,
    )
    .unwrap();
    println!("\nhonest session:");
    for entry in &honest.messages {
        match &entry.msg.body {
            Body::Commit { payload, .. } => {
                let image = payload["image"].as_str().unwrap();
                println!("  {} commits f(x) = {}…", entry.from, &image[..24]);
            }
            Body::EncryptedBit { index, masked_bit } => {
                println!(
                    "  {} announces first click {index} with masked bit {masked_bit}",
                    entry.from
                );
            }
            Body::Open { payload } => {
                println!("  {} opens {}", entry.from, summarize(payload));
            }
            Body::Verdict { accept, coin, .. } => {
                println!(
                    "  {} verdict: accept = {accept}, coin = {coin:?}",
                    entry.from
                );
            }
            _ => {}
        }
    }
    println!("verdict: {:?}", honest.verdict);

    // The receiver opens a different string: binding catches it.
    let tampered = run_computational(
        &params,
        &scheme,
        &ComputationalOptions {
            tamper_bob_open_bit: Some(17),
            ..Default::default()
        },
        SessionSeeds::from_master(5),
        0,
    )
    .unwrap();
    println!("\nreceiver opens a flipped bit: {:?}", tampered.verdict);
    assert!(matches!(tampered.verdict, SessionVerdict::Aborted { .. }));
}

fn summarize(payload: &serde_json::Value) -> String {
    match payload.get("x") {
        Some(serde_json::Value::String(x)) => format!("x = {}… plus protocol bits", &x[..16]),
        _ => payload.to_string(),
    }
}
