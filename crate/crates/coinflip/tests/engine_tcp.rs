//! Three-process transport checks: transparency against the in-process
//! runner, handshake refusal, and failure handling when a peer dies.

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use coinflip::config::{params_hash, presets};
use coinflip::engine::tcp::{read_transcript_dir, serve, serve_channel, ServeOptions};
use coinflip::engine::{
    run_session, Body, Role, SessionConfig, SessionSeeds, SessionVerdict, StrategyKind, WireMessage,
};
use coinflip::error::Error;
use coinflip::photonics::SystemParams;

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("coinflip_test_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn opts(role: Role, sessions: u64, seed: u64) -> ServeOptions {
    ServeOptions {
        role,
        listen: None,
        connect: None,
        sessions,
        seed,
        out_dir: None,
        timeout: Duration::from_secs(10),
    }
}

fn spawn_triple(
    params: &SystemParams,
    sessions: u64,
    seeds: (u64, u64, u64),
    out_dir: Option<std::path::PathBuf>,
) -> (
    Result<coinflip::engine::tcp::ServeSummary, Error>,
    Result<coinflip::engine::tcp::ServeSummary, Error>,
    Result<coinflip::engine::tcp::ServeSummary, Error>,
) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    std::thread::scope(|scope| {
        let channel = scope.spawn({
            let params = params.clone();
            let mut o = opts(Role::Channel, sessions, seeds.2);
            o.out_dir = out_dir;
            move || serve_channel(listener, &o, &params, 10_000)
        });
        let alice = scope.spawn({
            let params = params.clone();
            let addr = addr.clone();
            let mut o = opts(Role::Alice, sessions, seeds.0);
            o.connect = Some(addr);
            move || serve(&o, &params, 10_000)
        });
        let bob = scope.spawn({
            let params = params.clone();
            let mut o = opts(Role::Bob, sessions, seeds.1);
            o.connect = Some(addr);
            move || serve(&o, &params, 10_000)
        });
        (
            channel.join().unwrap(),
            alice.join().unwrap(),
            bob.join().unwrap(),
        )
    })
}

#[test]
fn tcp_matches_in_process_bit_for_bit() {
    let params = presets::bright_bench();
    let sessions = 5u64;
    let dir = temp_dir("transparency");
    let (channel, alice, bob) = spawn_triple(&params, sessions, (11, 22, 33), Some(dir.clone()));
    let channel = channel.unwrap();
    let alice = alice.unwrap();
    let bob = bob.unwrap();
    assert_eq!(channel.verdicts, alice.verdicts);
    assert_eq!(channel.verdicts, bob.verdicts);

    // The in-process engine with the same seed triple produces the exact
    // same transcripts.
    let transcripts = read_transcript_dir(&dir).unwrap();
    assert_eq!(transcripts.len(), sessions as usize);
    let seeds = SessionSeeds {
        alice: 11,
        bob: 22,
        channel: 33,
    };
    let cfg = SessionConfig::new(params.clone());
    for (sid, tcp_transcript) in transcripts.iter().enumerate() {
        let local = run_session(
            StrategyKind::Honest,
            StrategyKind::Honest,
            &cfg,
            seeds,
            sid as u64,
        )
        .unwrap();
        assert_eq!(
            tcp_transcript.to_jsonl(),
            local.to_jsonl(),
            "session {sid} differs between transports"
        );
        tcp_transcript.validate_basic().unwrap();
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn honest_coins_over_tcp_are_unbiased() {
    let params = presets::bright_bench();
    let (channel, ..) = spawn_triple(&params, 100, (1, 2, 3), None);
    let verdicts = channel.unwrap().verdicts;
    let coins: Vec<u8> = verdicts.iter().filter_map(|v| v.coin()).collect();
    assert!(!coins.is_empty());
    let zeros = coins.iter().filter(|&&c| c == 0).count() as f64;
    let f = zeros / coins.len() as f64;
    let sigma = (0.25 / coins.len() as f64).sqrt();
    assert!(
        (f - 0.5).abs() < 3.0 * sigma,
        "coin bias {f} over {} coins",
        coins.len()
    );
}

#[test]
fn params_hash_mismatch_is_refused() {
    let params = presets::bright_bench();
    let mut other = params.clone();
    other.mu *= 1.5;
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let (channel, alice, bob) = std::thread::scope(|scope| {
        let channel = scope.spawn({
            let params = params.clone();
            let o = opts(Role::Channel, 1, 3);
            move || serve_channel(listener, &o, &params, 10_000)
        });
        let alice = scope.spawn({
            let params = params.clone();
            let addr = addr.clone();
            let mut o = opts(Role::Alice, 1, 1);
            o.connect = Some(addr);
            move || serve(&o, &params, 10_000)
        });
        let bob = scope.spawn({
            let mut o = opts(Role::Bob, 1, 2);
            o.connect = Some(addr);
            move || serve(&o, &other, 10_000)
        });
        (
            channel.join().unwrap(),
            alice.join().unwrap(),
            bob.join().unwrap(),
        )
    });
    assert!(
        matches!(channel, Err(Error::ParamsMismatch { .. })),
        "channel accepted mismatched parameters: {channel:?}"
    );
    assert!(alice.is_err() && bob.is_err());
}

#[test]
fn dead_receiver_is_a_session_error_not_an_abort() {
    let params = presets::bright_bench();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let dir = temp_dir("killed");
    let (channel, alice) = std::thread::scope(|scope| {
        let channel = scope.spawn({
            let params = params.clone();
            let mut o = opts(Role::Channel, 1, 3);
            o.out_dir = Some(dir.clone());
            move || serve_channel(listener, &o, &params, 10_000)
        });
        let alice = scope.spawn({
            let params = params.clone();
            let addr = addr.clone();
            let mut o = opts(Role::Alice, 1, 1);
            o.connect = Some(addr);
            move || serve(&o, &params, 10_000)
        });
        // A receiver that says hello and dies mid-session.
        scope.spawn({
            let params = params.clone();
            move || {
                let mut stream = TcpStream::connect(&addr).unwrap();
                let hello = WireMessage::new(
                    0,
                    Body::Hello {
                        role: Role::Bob,
                        params_hash: params_hash(&params),
                        protocol: "basic".into(),
                        extra_hash: 0,
                        seed: 2,
                    },
                );
                stream.write_all(hello.encode().as_bytes()).unwrap();
                stream.flush().unwrap();
                // Connection drops here.
            }
        });
        (channel.join().unwrap(), alice.join().unwrap())
    });
    assert!(
        matches!(channel, Err(Error::Session(_))),
        "channel: {channel:?}"
    );
    match alice {
        Err(Error::Session(_)) => {}
        other => panic!("the sender should record a session error, got {other:?}"),
    }
    // The interrupted transcript reads back as incomplete.
    let transcripts = read_transcript_dir(&dir).unwrap();
    assert_eq!(transcripts.len(), 1);
    assert_eq!(transcripts[0].verdict, SessionVerdict::Incomplete);
    let _ = std::fs::remove_dir_all(&dir);
}
