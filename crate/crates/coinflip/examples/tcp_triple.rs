//! Runs the three session roles over real TCP sockets in one process:
//! the channel listens, the parties connect, ten sessions run, and the
//! channel's transcripts are replayed in process to confirm transport
//! transparency.
//!
//!     cargo run --example tcp_triple

use std::net::TcpListener;
use std::time::Duration;

use coinflip::config::presets;
use coinflip::engine::tcp::{read_transcript_dir, serve, serve_channel, ServeOptions};
use coinflip::engine::{replay, Role};

fn main() {
    let params = {
        let mut p = presets::bright_bench();
        p.rounds = 128;
        p
    };
    let sessions = 10u64;
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let out_dir = std::env::temp_dir().join("coinflip_tcp_triple");
    let _ = std::fs::remove_dir_all(&out_dir);
    println!(
        "channel listening on {addr}, transcripts in {}",
        out_dir.display()
    );

    let opts = |role: Role, seed: u64| ServeOptions {
        role,
        listen: None,
        connect: Some(addr.clone()),
        sessions,
        seed,
        out_dir: None,
        timeout: Duration::from_secs(10),
    };

    let (channel, alice, bob) = std::thread::scope(|scope| {
        let channel = scope.spawn(|| {
            let mut o = opts(Role::Channel, 33);
            o.connect = None;
            o.out_dir = Some(out_dir.clone());
            serve_channel(listener, &o, &params, 10_000)
        });
        let alice = scope.spawn(|| serve(&opts(Role::Alice, 11), &params, 10_000));
        let bob = scope.spawn(|| serve(&opts(Role::Bob, 22), &params, 10_000));
        (
            channel.join().unwrap(),
            alice.join().unwrap(),
            bob.join().unwrap(),
        )
    });

    let channel = channel.unwrap();
    let alice = alice.unwrap();
    let bob = bob.unwrap();
    assert_eq!(channel.verdicts, alice.verdicts);
    assert_eq!(channel.verdicts, bob.verdicts);
    for (sid, verdict) in channel.verdicts.iter().enumerate() {
        println!("session {sid}: {verdict:?}");
    }

    // Every transcript the channel wrote replays to itself bit for bit.
    let transcripts = read_transcript_dir(&out_dir).unwrap();
    for t in &transcripts {
        let again = replay(t).unwrap();
        assert_eq!(t.to_jsonl(), again.to_jsonl());
    }
    println!("{} transcripts replayed bit-exactly", transcripts.len());
}
