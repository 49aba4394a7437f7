//! Coin flipping for adversaries with noisy quantum storage.
//!
//! A prepare stage sends 2n pulses in the y = 1/2 states (the BB84 set);
//! the sender keeps the bit string X and the receiver the measured string
//! X̃. After the wait time Δt — which forces any hoarded quantum state
//! through the storage noise — the parties commit to extractor bits of
//! their halves by exchanging syndromes, extractor seeds, and the basis
//! halves the other side will need for its consistency checks. The basic
//! protocol then runs with both bits masked, and the reveal stage checks
//! syndromes and same-basis coincidences before the coin is accepted.
//!
//! Index convention: the sender's committed half is the first n positions,
//! the receiver's the last n; the sender therefore reveals her preparation
//! bases for positions 1..n at commit time and the receiver his
//! measurement bases for positions n+1..2n. The prepare stage is modeled
//! lossless, since the protocol needs complete strings on both sides.

use crate::config::params_hash;
use crate::engine::{
    gate_pulse, AbortReason, Body, ClickRecord, PulseSpec, Role, SessionSeeds, SessionVerdict,
    StrategyKind, Transcript, TranscriptEntry, TranscriptHeader, WireMessage,
};
use crate::error::{Error, Result};
use crate::photonics::{PulseOutcome, SystemParams};
use crate::rng::{Purpose, Rng};

use super::code::{extract, syndrome, CodeParams};

/// Fault-injection and determinism knobs for the noisy-storage runner.
#[derive(Debug, Clone, Default)]
pub struct NoisyOptions {
    /// Redraw extractor seeds until both mask bits are zero.
    pub force_zero_masks: bool,
    /// XOR mask applied to the sender's opened first half.
    pub tamper_x1: Option<Vec<u8>>,
    /// XOR mask applied to the receiver's opened second half.
    pub tamper_x2: Option<Vec<u8>>,
    /// Batch size for pulse/basis messages (0 means the default 10^4).
    pub batch: usize,
}

/// Everything the checks saw, exposed for the exhaustive tamper tests.
#[derive(Debug, Clone)]
pub struct NoisyDebug {
    pub alice_bases: Vec<u8>,
    pub bob_bases: Vec<u8>,
    pub x: Vec<u8>,
    pub x_tilde: Vec<u8>,
    pub seed_a: Vec<u8>,
    pub seed_b: Vec<u8>,
    pub mask_a: u8,
    pub mask_b: u8,
}

#[derive(Debug, Clone)]
pub struct NoisyOutcome {
    pub transcript: Transcript,
    pub debug: NoisyDebug,
}

fn bits_json(bits: &[u8]) -> serde_json::Value {
    serde_json::Value::Array(bits.iter().map(|&b| serde_json::Value::from(b)).collect())
}

fn draw_seed(len: usize, rng: &mut Rng) -> Vec<u8> {
    (0..len).map(|_| rng.next_bit()).collect()
}

fn draw_mask_seed(
    half: &[u8],
    len: usize,
    rng: &mut Rng,
    force_zero: bool,
) -> Result<(Vec<u8>, u8)> {
    for _ in 0..64 {
        let seed = draw_seed(len, rng);
        let mask = extract(half, &seed)?;
        if !force_zero || mask == 0 {
            return Ok((seed, mask));
        }
    }
    Err(Error::Numeric(
        "could not find a zero-mask extractor seed in 64 draws".into(),
    ))
}

/// Runs one combined session under the noisy-storage commitment scheme.
pub fn run_noisy_storage(
    params: &SystemParams,
    code: &CodeParams,
    opts: &NoisyOptions,
    seeds: SessionSeeds,
    session_id: u64,
) -> Result<NoisyOutcome> {
    params.validate()?;
    code.validate()?;
    let n = code.n;
    if code.hash_seed_len != n {
        return Err(Error::Domain(
            "extractor seed length must equal the block length".into(),
        ));
    }
    let k = params.rounds;
    if k == 0 {
        return Err(Error::Domain("a session needs at least one round".into()));
    }
    let batch = if opts.batch == 0 { 10_000 } else { opts.batch };
    let hash = params_hash(params);
    let extra_hash = code.agreement_hash();
    let mut messages: Vec<TranscriptEntry> = Vec::new();
    let push = |from: Role, to: Role, body: Body, messages: &mut Vec<TranscriptEntry>| {
        messages.push(TranscriptEntry {
            from,
            to,
            msg: WireMessage::new(session_id, body),
        });
    };

    let hello = |role: Role, seed: u64| Body::Hello {
        role,
        params_hash: hash,
        protocol: "noisy_storage".into(),
        extra_hash,
        seed,
    };
    push(
        Role::Alice,
        Role::Channel,
        hello(Role::Alice, seeds.alice),
        &mut messages,
    );
    push(
        Role::Bob,
        Role::Channel,
        hello(Role::Bob, seeds.bob),
        &mut messages,
    );
    push(
        Role::Channel,
        Role::Alice,
        hello(Role::Channel, seeds.channel),
        &mut messages,
    );
    push(
        Role::Channel,
        Role::Bob,
        hello(Role::Channel, seeds.channel),
        &mut messages,
    );

    // Prepare stage: 2n pulses in the y = 1/2 states, measured losslessly.
    let alice_root = Rng::new(seeds.alice);
    let bob_root = Rng::new(seeds.bob);
    let chan_root = Rng::new(seeds.channel);
    let mut prep_alice = alice_root
        .stream(session_id, Role::Alice.label(), Purpose::Commitment)
        .derive(&[0x70726570]);
    let mut prep_bob = bob_root
        .stream(session_id, Role::Bob.label(), Purpose::Commitment)
        .derive(&[0x70726570]);
    let mut prep_chan = chan_root
        .stream(session_id, Role::Channel.label(), Purpose::Commitment)
        .derive(&[0x70726570]);

    let alice_bases: Vec<u8> = (0..2 * n).map(|_| prep_alice.next_bit()).collect();
    let x: Vec<u8> = (0..2 * n).map(|_| prep_alice.next_bit()).collect();
    let bob_bases: Vec<u8> = (0..2 * n).map(|_| prep_bob.next_bit()).collect();
    let x_tilde: Vec<u8> = (0..2 * n)
        .map(|i| {
            if alice_bases[i] == bob_bases[i] {
                x[i]
            } else {
                prep_chan.next_bit()
            }
        })
        .collect();
    let prep_pulses: Vec<PulseSpec> = (0..2 * n)
        .map(|i| PulseSpec::Protocol {
            alpha: alice_bases[i],
            c: x[i],
        })
        .collect();
    push(
        Role::Alice,
        Role::Channel,
        Body::PulseBatch {
            first_index: 1,
            y: 0.5,
            pulses: prep_pulses,
        },
        &mut messages,
    );
    push(
        Role::Bob,
        Role::Channel,
        Body::MeasureBases {
            first_index: 1,
            bases: bob_bases.clone(),
        },
        &mut messages,
    );

    // Wait time Δt: honest parties hold no quantum state, so the storage
    // barrier has nothing to flush; the tick still advances the protocol.
    let _elapsed_ticks = code.wait_ticks;

    // Commit stage.
    let x1 = &x[..n];
    let x2 = &x[n..];
    let x1_tilde = &x_tilde[..n];
    let x2_tilde = &x_tilde[n..];
    let w = syndrome(x1, code)?;
    let w_tilde = syndrome(x2_tilde, code)?;
    let mut seed_rng_a = alice_root
        .stream(session_id, Role::Alice.label(), Purpose::Commitment)
        .derive(&[0x73656564]);
    let mut seed_rng_b = bob_root
        .stream(session_id, Role::Bob.label(), Purpose::Commitment)
        .derive(&[0x73656564]);
    let (seed_a, mask_a) = draw_mask_seed(x1, n, &mut seed_rng_a, opts.force_zero_masks)?;
    let (seed_b, mask_b) = draw_mask_seed(x2_tilde, n, &mut seed_rng_b, opts.force_zero_masks)?;
    push(
        Role::Alice,
        Role::Bob,
        Body::Commit {
            scheme: "noisy_storage".into(),
            payload: serde_json::json!({
                "w": bits_json(&w),
                "r": bits_json(&seed_a),
                "bases": bits_json(&alice_bases[..n]),
            }),
        },
        &mut messages,
    );
    push(
        Role::Bob,
        Role::Alice,
        Body::Commit {
            scheme: "noisy_storage".into(),
            payload: serde_json::json!({
                "w": bits_json(&w_tilde),
                "r": bits_json(&seed_b),
                "bases": bits_json(&bob_bases[n..]),
            }),
        },
        &mut messages,
    );

    // Encrypt stage: the basic protocol with the masks applied.
    let mut choice_rng = alice_root.stream(session_id, Role::Alice.label(), Purpose::AliceChoices);
    let mut choices: Vec<(u8, u8)> = Vec::with_capacity(k as usize);
    let mut pulses: Vec<PulseSpec> = Vec::with_capacity(k as usize);
    for _ in 0..k {
        let alpha = choice_rng.next_bit();
        let c = choice_rng.next_bit();
        choices.push((alpha, c));
        pulses.push(PulseSpec::Protocol {
            alpha,
            c: c ^ mask_a,
        });
    }
    for (batch_no, chunk) in pulses.chunks(batch).enumerate() {
        push(
            Role::Alice,
            Role::Channel,
            Body::PulseBatch {
                first_index: batch_no as u64 * batch as u64 + 1,
                y: params.y,
                pulses: chunk.to_vec(),
            },
            &mut messages,
        );
    }
    let mut basis_rng = bob_root.stream(session_id, Role::Bob.label(), Purpose::BobBases);
    let mut bit_rng = bob_root.stream(session_id, Role::Bob.label(), Purpose::BobBit);
    let bases: Vec<u8> = (0..k).map(|_| basis_rng.next_bit()).collect();
    let b = bit_rng.next_bit();
    for (batch_no, chunk) in bases.chunks(batch).enumerate() {
        push(
            Role::Bob,
            Role::Channel,
            Body::MeasureBases {
                first_index: batch_no as u64 * batch as u64 + 1,
                bases: chunk.to_vec(),
            },
            &mut messages,
        );
    }
    let mut detect_rng = chan_root.stream(session_id, Role::Channel.label(), Purpose::Detection);
    let mut clicks: Vec<ClickRecord> = Vec::new();
    let mut first: Option<(u64, PulseOutcome)> = None;
    for i in 0..k as usize {
        let outcome = gate_pulse(params, &pulses[i], bases[i], &mut detect_rng)?;
        if outcome.clicked {
            let index = (i + 1) as u64;
            clicks.push(ClickRecord { index, outcome });
            first = Some((index, outcome));
            break;
        }
    }

    let debug = NoisyDebug {
        alice_bases: alice_bases.clone(),
        bob_bases: bob_bases.clone(),
        x: x.clone(),
        x_tilde: x_tilde.clone(),
        seed_a: seed_a.clone(),
        seed_b: seed_b.clone(),
        mask_a,
        mask_b,
    };
    let header = TranscriptHeader {
        session_id,
        seeds,
        alice_strategy: StrategyKind::Honest,
        bob_strategy: StrategyKind::Honest,
        batch,
        params: params.clone(),
    };
    let finish = |messages: Vec<TranscriptEntry>,
                  clicks: Vec<ClickRecord>,
                  verdict: SessionVerdict| NoisyOutcome {
        transcript: Transcript {
            header: header.clone(),
            messages,
            clicks,
            verdict,
        },
        debug: debug.clone(),
    };

    let Some((m, outcome)) = first else {
        push(
            Role::Channel,
            Role::Bob,
            Body::FirstClick { index: 0, bit: 0 },
            &mut messages,
        );
        push(
            Role::Bob,
            Role::Alice,
            Body::Verdict {
                accept: false,
                coin: None,
                reason: Some("no_detection".into()),
            },
            &mut messages,
        );
        return Ok(finish(
            messages,
            clicks,
            SessionVerdict::Aborted {
                reason: AbortReason::NoDetection,
            },
        ));
    };
    push(
        Role::Channel,
        Role::Bob,
        Body::FirstClick {
            index: m,
            bit: outcome.outcome_bit,
        },
        &mut messages,
    );
    push(
        Role::Bob,
        Role::Alice,
        Body::EncryptedBit {
            index: m,
            masked_bit: b ^ mask_b,
        },
        &mut messages,
    );

    // Reveal stage.
    let (alpha_m, c_m) = choices[(m - 1) as usize];
    let mut open_x1: Vec<u8> = x1.to_vec();
    if let Some(mask) = &opts.tamper_x1 {
        for (bit, m) in open_x1.iter_mut().zip(mask) {
            *bit ^= m;
        }
    }
    push(
        Role::Alice,
        Role::Bob,
        Body::Open {
            payload: serde_json::json!({
                "x1": bits_json(&open_x1), "index": m, "alpha": alpha_m, "c": c_m,
            }),
        },
        &mut messages,
    );
    let mut open_x2t: Vec<u8> = x2_tilde.to_vec();
    if let Some(mask) = &opts.tamper_x2 {
        for (bit, m) in open_x2t.iter_mut().zip(mask) {
            *bit ^= m;
        }
    }
    push(
        Role::Bob,
        Role::Alice,
        Body::Open {
            payload: serde_json::json!({ "x2": bits_json(&open_x2t), "b": b }),
        },
        &mut messages,
    );

    // Receiver-side checks: the sender's syndrome, the first-half
    // coincidences at same-basis positions, and the masked outcome (the
    // extractor check: a wrong extractor bit shows up as a deterministic
    // outcome mismatch at the detected pulse).
    let mut abort: Option<(Role, AbortReason)> = None;
    if syndrome(&open_x1, code)? != w {
        abort = Some((
            Role::Bob,
            AbortReason::Check {
                name: "syndrome_x1".into(),
            },
        ));
    } else if (0..n).any(|i| alice_bases[i] == bob_bases[i] && open_x1[i] != x1_tilde[i]) {
        abort = Some((
            Role::Bob,
            AbortReason::Check {
                name: "coincidence_x1".into(),
            },
        ));
    } else {
        let mask_a_opened = extract(&open_x1, &seed_a)?;
        let beta_m = bases[(m - 1) as usize];
        if alpha_m == beta_m && outcome.outcome_bit != c_m ^ mask_a_opened {
            abort = Some((
                Role::Bob,
                AbortReason::Check {
                    name: "extract_mask".into(),
                },
            ));
        }
    }
    // Sender-side checks on the receiver's opening.
    if abort.is_none() {
        if syndrome(&open_x2t, code)? != w_tilde {
            abort = Some((
                Role::Alice,
                AbortReason::Check {
                    name: "syndrome_x2".into(),
                },
            ));
        } else if (0..n).any(|i| alice_bases[n + i] == bob_bases[n + i] && open_x2t[i] != x2[i]) {
            abort = Some((
                Role::Alice,
                AbortReason::Check {
                    name: "coincidence_x2".into(),
                },
            ));
        }
    }

    let verdict = match abort {
        Some((party, reason)) => {
            let name = match &reason {
                AbortReason::Check { name } => name.clone(),
                _ => unreachable!(),
            };
            push(
                party,
                if party == Role::Bob {
                    Role::Alice
                } else {
                    Role::Bob
                },
                Body::Verdict {
                    accept: false,
                    coin: None,
                    reason: Some(format!("check:{name}")),
                },
                &mut messages,
            );
            SessionVerdict::Aborted { reason }
        }
        None => {
            let coin = c_m ^ b;
            push(
                Role::Bob,
                Role::Alice,
                Body::Verdict {
                    accept: true,
                    coin: Some(coin),
                    reason: None,
                },
                &mut messages,
            );
            SessionVerdict::Accepted { coin }
        }
    };
    Ok(finish(messages, clicks, verdict))
}
