//! Three-process transport: the channel listens, the two parties connect,
//! and sessions run with exactly the in-process semantics. Routing needs no
//! addressing because the protocol sequence is fixed; the channel knows
//! which peer speaks next and relays party-to-party messages verbatim.
//!
//! Every session re-exchanges HELLO, and all three processes must present
//! the same parameter hash or the session is refused. Transcripts are
//! written incrementally by the channel, so a killed process leaves files
//! without a footer, which readers surface as incomplete.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::Duration;

use crate::config::params_hash;
use crate::error::{Error, Result};
use crate::photonics::{PulseOutcome, SystemParams};
use crate::rng::{Purpose, Rng};

use super::message::{Body, PulseSpec, Role, WireMessage};
use super::transcript::{
    AbortReason, ClickRecord, SessionSeeds, SessionVerdict, Transcript, TranscriptEntry,
    TranscriptHeader,
};
use super::{gate_pulse, StrategyKind};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub role: Role,
    /// Bind address for the channel role.
    pub listen: Option<String>,
    /// Channel address for the party roles.
    pub connect: Option<String>,
    pub sessions: u64,
    pub seed: u64,
    /// Directory for per-session transcripts (channel role only).
    pub out_dir: Option<PathBuf>,
    pub timeout: Duration,
}

#[derive(Debug, Clone)]
pub struct ServeSummary {
    pub role: Role,
    pub verdicts: Vec<SessionVerdict>,
}

struct Peer {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Peer {
    fn new(stream: TcpStream, timeout: Duration) -> Result<Peer> {
        stream.set_read_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        let writer = stream.try_clone()?;
        Ok(Peer {
            reader: BufReader::new(stream),
            writer,
        })
    }

    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        self.writer.write_all(msg.encode().as_bytes())?;
        Ok(())
    }

    fn recv(&mut self) -> Result<WireMessage> {
        let mut line = String::new();
        let n = self.reader.read_line(&mut line).map_err(|e| {
            if e.kind() == std::io::ErrorKind::WouldBlock
                || e.kind() == std::io::ErrorKind::TimedOut
            {
                Error::Session("timed out waiting for a message".into())
            } else {
                Error::Session(format!("read failed: {e}"))
            }
        })?;
        if n == 0 {
            return Err(Error::Session("peer closed the connection".into()));
        }
        WireMessage::decode(&line)
    }
}

/// Runs one endpoint until `sessions` sessions complete (or an error ends
/// the run). The channel role requires `listen`; party roles `connect`.
pub fn serve(opts: &ServeOptions, params: &SystemParams, batch: usize) -> Result<ServeSummary> {
    params.validate()?;
    match opts.role {
        Role::Channel => {
            let addr = opts
                .listen
                .as_deref()
                .ok_or_else(|| Error::Config("channel role needs --listen".into()))?;
            let listener =
                TcpListener::bind(addr).map_err(|e| Error::Session(format!("bind {addr}: {e}")))?;
            serve_channel(listener, opts, params, batch)
        }
        Role::Alice | Role::Bob => {
            let addr = opts
                .connect
                .as_deref()
                .ok_or_else(|| Error::Config("party roles need --connect".into()))?;
            let stream = TcpStream::connect(addr)
                .map_err(|e| Error::Session(format!("connect {addr}: {e}")))?;
            let peer = Peer::new(stream, opts.timeout)?;
            match opts.role {
                Role::Alice => run_alice(peer, opts, params, batch),
                Role::Bob => run_bob(peer, opts, params, batch),
                Role::Channel => unreachable!(),
            }
        }
    }
}

/// Channel role on an already-bound listener (used by tests to pick free
/// ports race-free).
pub fn serve_channel(
    listener: TcpListener,
    opts: &ServeOptions,
    params: &SystemParams,
    batch: usize,
) -> Result<ServeSummary> {
    let our_hash = params_hash(params);
    let mut alice: Option<(Peer, u64)> = None;
    let mut bob: Option<(Peer, u64)> = None;
    for _ in 0..2 {
        let (stream, _) = listener
            .accept()
            .map_err(|e| Error::Session(format!("accept: {e}")))?;
        let mut peer = Peer::new(stream, opts.timeout)?;
        let msg = peer.recv()?;
        let Body::Hello {
            role,
            params_hash: theirs,
            seed,
            ..
        } = msg.body
        else {
            return Err(Error::Session(format!(
                "expected HELLO, got {}",
                msg.body.tag()
            )));
        };
        if theirs != our_hash {
            return Err(Error::ParamsMismatch {
                ours: our_hash,
                theirs,
            });
        }
        match role {
            Role::Alice => alice = Some((peer, seed)),
            Role::Bob => bob = Some((peer, seed)),
            Role::Channel => {
                return Err(Error::Session("a second channel connected".into()));
            }
        }
    }
    let (mut alice, alice_seed) =
        alice.ok_or_else(|| Error::Session("no sender connected".into()))?;
    let (mut bob, bob_seed) = bob.ok_or_else(|| Error::Session("no receiver connected".into()))?;
    let seeds = SessionSeeds {
        alice: alice_seed,
        bob: bob_seed,
        channel: opts.seed,
    };

    let mut verdicts = Vec::new();
    for sid in 0..opts.sessions {
        let verdict = channel_session(
            &mut alice, &mut bob, sid, seeds, opts, params, batch, our_hash,
        )?;
        verdicts.push(verdict);
    }
    Ok(ServeSummary {
        role: Role::Channel,
        verdicts,
    })
}

#[allow(clippy::too_many_arguments)]
fn channel_session(
    alice: &mut Peer,
    bob: &mut Peer,
    sid: u64,
    seeds: SessionSeeds,
    opts: &ServeOptions,
    params: &SystemParams,
    batch: usize,
    our_hash: u64,
) -> Result<SessionVerdict> {
    let k = params.rounds as usize;
    let mut writer = TranscriptWriter::open(opts, sid, seeds, batch, params)?;

    // Per-session HELLO exchange, re-verifying the parameter hash. The
    // first session of a connection doubles as the handshake; the HELLOs
    // received at accept time belong to session 0.
    let (hello_a, hello_b) = if sid == 0 {
        // Already consumed during accept; reconstruct for the transcript.
        let mk = |role: Role, seed: u64| {
            WireMessage::new(
                0,
                Body::Hello {
                    role,
                    params_hash: our_hash,
                    protocol: "basic".into(),
                    extra_hash: 0,
                    seed,
                },
            )
        };
        (mk(Role::Alice, seeds.alice), mk(Role::Bob, seeds.bob))
    } else {
        let a = alice.recv()?;
        let b = bob.recv()?;
        for msg in [&a, &b] {
            let Body::Hello {
                params_hash: theirs,
                ..
            } = msg.body
            else {
                return Err(Error::Session(format!(
                    "expected HELLO, got {}",
                    msg.body.tag()
                )));
            };
            if theirs != our_hash {
                return Err(Error::ParamsMismatch {
                    ours: our_hash,
                    theirs,
                });
            }
        }
        (a, b)
    };
    writer.entry(Role::Alice, Role::Channel, &hello_a)?;
    writer.entry(Role::Bob, Role::Channel, &hello_b)?;
    let ack = WireMessage::new(
        sid,
        Body::Hello {
            role: Role::Channel,
            params_hash: our_hash,
            protocol: "basic".into(),
            extra_hash: 0,
            seed: opts.seed,
        },
    );
    alice.send(&ack)?;
    bob.send(&ack)?;
    writer.entry(Role::Channel, Role::Alice, &ack)?;
    writer.entry(Role::Channel, Role::Bob, &ack)?;

    // Collect the sender's pulses, then the receiver's bases. Draining the
    // sender first keeps both sockets flowing.
    let mut pulses: Vec<PulseSpec> = Vec::with_capacity(k);
    while pulses.len() < k {
        let msg = alice.recv()?;
        writer.entry(Role::Alice, Role::Channel, &msg)?;
        match msg.body {
            Body::PulseBatch {
                pulses: mut chunk, ..
            } => pulses.append(&mut chunk),
            other => {
                return Err(Error::Session(format!(
                    "expected PULSE_BATCH, got {}",
                    other.tag()
                )))
            }
        }
    }
    let mut bases: Vec<u8> = Vec::with_capacity(k);
    while bases.len() < k {
        let msg = bob.recv()?;
        writer.entry(Role::Bob, Role::Channel, &msg)?;
        match msg.body {
            Body::MeasureBases {
                bases: mut chunk, ..
            } => bases.append(&mut chunk),
            other => {
                return Err(Error::Session(format!(
                    "expected MEASURE_BASES, got {}",
                    other.tag()
                )))
            }
        }
    }

    // Physics: scan for the first detection.
    let chan_root = Rng::new(seeds.channel);
    let mut detect_rng = chan_root.stream(sid, Role::Channel.label(), Purpose::Detection);
    let mut clicks: Vec<ClickRecord> = Vec::new();
    let mut first: Option<(u64, PulseOutcome)> = None;
    for i in 0..k {
        let outcome = gate_pulse(params, &pulses[i], bases[i], &mut detect_rng)?;
        if outcome.clicked {
            let index = (i + 1) as u64;
            clicks.push(ClickRecord { index, outcome });
            first = Some((index, outcome));
            break;
        }
    }

    let (j, outcome) = match first {
        None => (0, PulseOutcome::no_click()),
        Some((j, o)) => (j, o),
    };
    let report = WireMessage::new(
        sid,
        Body::FirstClick {
            index: j,
            bit: outcome.outcome_bit,
        },
    );
    bob.send(&report)?;
    writer.entry(Role::Channel, Role::Bob, &report)?;

    // Relay the remaining party-to-party traffic by protocol position.
    let verdict = if j == 0 {
        let v = bob.recv()?;
        alice.send(&v)?;
        writer.entry(Role::Bob, Role::Alice, &v)?;
        verdict_from_message(&v)?
    } else {
        let click = bob.recv()?;
        if !matches!(click.body, Body::FirstClick { .. }) {
            return Err(Error::Session(format!(
                "expected FIRST_CLICK, got {}",
                click.body.tag()
            )));
        }
        alice.send(&click)?;
        writer.entry(Role::Bob, Role::Alice, &click)?;
        let reveal = alice.recv()?;
        if !matches!(reveal.body, Body::Reveal { .. }) {
            return Err(Error::Session(format!(
                "expected REVEAL, got {}",
                reveal.body.tag()
            )));
        }
        bob.send(&reveal)?;
        writer.entry(Role::Alice, Role::Bob, &reveal)?;
        let v = bob.recv()?;
        alice.send(&v)?;
        writer.entry(Role::Bob, Role::Alice, &v)?;
        verdict_from_message(&v)?
    };
    writer.finish(&verdict, &clicks)?;
    Ok(verdict)
}

fn verdict_from_message(msg: &WireMessage) -> Result<SessionVerdict> {
    match &msg.body {
        Body::Verdict {
            accept: true,
            coin: Some(coin),
            ..
        } => Ok(SessionVerdict::Accepted { coin: *coin }),
        Body::Verdict {
            accept: false,
            reason,
            ..
        } => {
            let reason = match reason.as_deref() {
                Some("no_detection") => AbortReason::NoDetection,
                Some("outcome_mismatch") => AbortReason::OutcomeMismatch,
                other => AbortReason::ProtocolViolation {
                    party: Role::Bob,
                    what: format!("unrecognized abort reason {other:?}"),
                },
            };
            Ok(SessionVerdict::Aborted { reason })
        }
        other => Err(Error::Session(format!(
            "expected VERDICT, got {}",
            other.tag()
        ))),
    }
}

fn run_alice(
    mut channel: Peer,
    opts: &ServeOptions,
    params: &SystemParams,
    batch: usize,
) -> Result<ServeSummary> {
    let our_hash = params_hash(params);
    let root = Rng::new(opts.seed);
    let mut verdicts = Vec::new();
    for sid in 0..opts.sessions {
        send_hello(&mut channel, sid, Role::Alice, our_hash, opts.seed)?;
        expect_hello_ack(&mut channel, our_hash)?;

        let mut choice_rng = root.stream(sid, Role::Alice.label(), Purpose::AliceChoices);
        let k = params.rounds as usize;
        let mut choices = Vec::with_capacity(k);
        for _ in 0..k {
            let a = choice_rng.next_bit();
            let c = choice_rng.next_bit();
            choices.push((a, c));
        }
        for (batch_no, chunk) in choices.chunks(batch.max(1)).enumerate() {
            let body = Body::PulseBatch {
                first_index: batch_no as u64 * batch.max(1) as u64 + 1,
                y: params.y,
                pulses: chunk
                    .iter()
                    .map(|&(alpha, c)| PulseSpec::Protocol { alpha, c })
                    .collect(),
            };
            channel.send(&WireMessage::new(sid, body))?;
        }

        // Either the receiver's FIRST_CLICK or a no-detection verdict.
        let msg = channel.recv()?;
        let verdict = match msg.body {
            Body::Verdict { .. } => verdict_from_message(&msg)?,
            Body::FirstClick { index, .. } => {
                if index < 1 || index > params.rounds {
                    return Err(Error::ProtocolViolation {
                        party: "bob".into(),
                        what: format!("first-click index {index} outside [1, {}]", params.rounds),
                    });
                }
                let (alpha, c) = choices[(index - 1) as usize];
                channel.send(&WireMessage::new(sid, Body::Reveal { index, alpha, c }))?;
                verdict_from_message(&channel.recv()?)?
            }
            other => return Err(Error::Session(format!("unexpected {}", other.tag()))),
        };
        verdicts.push(verdict);
    }
    Ok(ServeSummary {
        role: Role::Alice,
        verdicts,
    })
}

fn run_bob(
    mut channel: Peer,
    opts: &ServeOptions,
    params: &SystemParams,
    batch: usize,
) -> Result<ServeSummary> {
    let our_hash = params_hash(params);
    let root = Rng::new(opts.seed);
    let mut verdicts = Vec::new();
    for sid in 0..opts.sessions {
        send_hello(&mut channel, sid, Role::Bob, our_hash, opts.seed)?;
        expect_hello_ack(&mut channel, our_hash)?;

        let mut basis_rng = root.stream(sid, Role::Bob.label(), Purpose::BobBases);
        let mut bit_rng = root.stream(sid, Role::Bob.label(), Purpose::BobBit);
        let k = params.rounds as usize;
        let bases: Vec<u8> = (0..k).map(|_| basis_rng.next_bit()).collect();
        let b = bit_rng.next_bit();
        let batch = batch.max(1);
        for (batch_no, chunk) in bases.chunks(batch).enumerate() {
            let body = Body::MeasureBases {
                first_index: batch_no as u64 * batch as u64 + 1,
                bases: chunk.to_vec(),
            };
            channel.send(&WireMessage::new(sid, body))?;
        }

        let report = channel.recv()?;
        let Body::FirstClick {
            index: j,
            bit: outcome_bit,
        } = report.body
        else {
            return Err(Error::Session(format!(
                "expected click report, got {}",
                report.body.tag()
            )));
        };
        let verdict = if j == 0 {
            let v = Body::Verdict {
                accept: false,
                coin: None,
                reason: Some("no_detection".into()),
            };
            channel.send(&WireMessage::new(sid, v))?;
            SessionVerdict::Aborted {
                reason: AbortReason::NoDetection,
            }
        } else {
            channel.send(&WireMessage::new(
                sid,
                Body::FirstClick { index: j, bit: b },
            ))?;
            let reveal = channel.recv()?;
            let Body::Reveal { index, alpha, c } = reveal.body else {
                return Err(Error::Session(format!(
                    "expected REVEAL, got {}",
                    reveal.body.tag()
                )));
            };
            if index != j {
                // A sender revealing the wrong pulse is a protocol
                // violation attributed to her.
                let v = Body::Verdict {
                    accept: false,
                    coin: None,
                    reason: Some("protocol_violation:alice".into()),
                };
                channel.send(&WireMessage::new(sid, v))?;
                verdicts.push(SessionVerdict::Aborted {
                    reason: AbortReason::ProtocolViolation {
                        party: Role::Alice,
                        what: format!("revealed index {index}, first click was {j}"),
                    },
                });
                continue;
            }
            let beta_j = bases[(j - 1) as usize];
            if alpha == beta_j && outcome_bit != c {
                let v = Body::Verdict {
                    accept: false,
                    coin: None,
                    reason: Some("outcome_mismatch".into()),
                };
                channel.send(&WireMessage::new(sid, v))?;
                SessionVerdict::Aborted {
                    reason: AbortReason::OutcomeMismatch,
                }
            } else {
                let coin = c ^ b;
                let v = Body::Verdict {
                    accept: true,
                    coin: Some(coin),
                    reason: None,
                };
                channel.send(&WireMessage::new(sid, v))?;
                SessionVerdict::Accepted { coin }
            }
        };
        verdicts.push(verdict);
    }
    Ok(ServeSummary {
        role: Role::Bob,
        verdicts,
    })
}

fn send_hello(peer: &mut Peer, sid: u64, role: Role, hash: u64, seed: u64) -> Result<()> {
    peer.send(&WireMessage::new(
        sid,
        Body::Hello {
            role,
            params_hash: hash,
            protocol: "basic".into(),
            extra_hash: 0,
            seed,
        },
    ))
}

fn expect_hello_ack(peer: &mut Peer, our_hash: u64) -> Result<()> {
    let msg = peer.recv()?;
    let Body::Hello {
        params_hash: theirs,
        ..
    } = msg.body
    else {
        return Err(Error::Session(format!(
            "expected HELLO ack, got {}",
            msg.body.tag()
        )));
    };
    if theirs != our_hash {
        return Err(Error::ParamsMismatch {
            ours: our_hash,
            theirs,
        });
    }
    Ok(())
}

/// Incremental transcript writer; sessions killed mid-flight leave a file
/// without a footer.
struct TranscriptWriter {
    file: Option<std::io::BufWriter<std::fs::File>>,
}

impl TranscriptWriter {
    fn open(
        opts: &ServeOptions,
        sid: u64,
        seeds: SessionSeeds,
        batch: usize,
        params: &SystemParams,
    ) -> Result<TranscriptWriter> {
        let Some(dir) = &opts.out_dir else {
            return Ok(TranscriptWriter { file: None });
        };
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("session_{sid:06}.jsonl"));
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header = TranscriptHeader {
            session_id: sid,
            seeds,
            alice_strategy: StrategyKind::Honest,
            bob_strategy: StrategyKind::Honest,
            batch,
            params: params.clone(),
        };
        serde_json::to_writer(&mut file, &header)?;
        file.write_all(b"\n")?;
        file.flush()?;
        Ok(TranscriptWriter { file: Some(file) })
    }

    fn entry(&mut self, from: Role, to: Role, msg: &WireMessage) -> Result<()> {
        if let Some(file) = &mut self.file {
            let entry = TranscriptEntry {
                from,
                to,
                msg: msg.clone(),
            };
            serde_json::to_writer(&mut *file, &entry)?;
            file.write_all(b"\n")?;
            file.flush()?;
        }
        Ok(())
    }

    fn finish(&mut self, verdict: &SessionVerdict, clicks: &[ClickRecord]) -> Result<()> {
        if let Some(file) = &mut self.file {
            let footer = serde_json::json!({ "verdict": verdict, "clicks": clicks });
            serde_json::to_writer(&mut *file, &footer)?;
            file.write_all(b"\n")?;
            file.flush()?;
        }
        Ok(())
    }
}

/// Reads back every transcript in a directory, sorted by file name.
pub fn read_transcript_dir(dir: &std::path::Path) -> Result<Vec<Transcript>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| Transcript::from_jsonl(&std::fs::read_to_string(p)?))
        .collect()
}
