//! Coin flipping for computationally bounded adversaries: commit to the
//! hardcore bits of secret strings via an injective one-way function, run
//! the basic protocol with both parties' bits masked by those hardcore
//! bits, then open everything and check.

use crate::config::params_hash;
use crate::engine::{
    gate_pulse, AbortReason, Body, ClickRecord, PulseSpec, Role, SessionSeeds, SessionVerdict,
    StrategyKind, Transcript, TranscriptEntry, TranscriptHeader, WireMessage,
};
use crate::error::{Error, Result};
use crate::photonics::{PulseOutcome, SystemParams};
use crate::rng::{Purpose, Rng};

use super::owf::{hex, owf_commit, owf_verify, OwfScheme};

/// Fault-injection and determinism knobs for the computational runner.
#[derive(Debug, Clone, Default)]
pub struct ComputationalOptions {
    /// Redraw commitment strings until both hardcore bits are zero, so the
    /// encrypt stage coincides with the basic protocol for equal seeds.
    pub force_zero_masks: bool,
    /// Flip this bit of the sender's string at open time.
    pub tamper_alice_open_bit: Option<usize>,
    /// Flip this bit of the receiver's string at open time.
    pub tamper_bob_open_bit: Option<usize>,
    /// Batch size for pulse/basis messages (0 means the default 10^4).
    pub batch: usize,
}

fn draw_masked_input(scheme: &OwfScheme, rng: &mut Rng, force_zero: bool) -> Result<Vec<u8>> {
    for _ in 0..64 {
        let x = scheme.draw_input(rng);
        if !force_zero || scheme.predicate.eval(&x) == 0 {
            return Ok(x);
        }
    }
    Err(Error::Numeric(
        "could not find a zero-mask string in 64 draws".into(),
    ))
}

/// Runs one combined session under the computational commitment scheme.
pub fn run_computational(
    params: &SystemParams,
    scheme: &OwfScheme,
    opts: &ComputationalOptions,
    seeds: SessionSeeds,
    session_id: u64,
) -> Result<Transcript> {
    params.validate()?;
    let k = params.rounds;
    if k == 0 {
        return Err(Error::Domain("a session needs at least one round".into()));
    }
    let batch = if opts.batch == 0 { 10_000 } else { opts.batch };
    let hash = params_hash(params);
    let extra_hash = scheme.agreement_hash();
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
        protocol: "computational".into(),
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

    // Commit stage.
    let alice_root = Rng::new(seeds.alice);
    let bob_root = Rng::new(seeds.bob);
    let mut alice_commit_rng =
        alice_root.stream(session_id, Role::Alice.label(), Purpose::Commitment);
    let mut bob_commit_rng = bob_root.stream(session_id, Role::Bob.label(), Purpose::Commitment);
    let x_a = draw_masked_input(scheme, &mut alice_commit_rng, opts.force_zero_masks)?;
    let x_b = draw_masked_input(scheme, &mut bob_commit_rng, opts.force_zero_masks)?;
    let commit_a = owf_commit(scheme, &x_a)?;
    let commit_b = owf_commit(scheme, &x_b)?;
    let mask_a = scheme.predicate.eval(&x_a);
    let mask_b = scheme.predicate.eval(&x_b);
    push(
        Role::Alice,
        Role::Bob,
        Body::Commit {
            scheme: "owf".into(),
            payload: serde_json::json!({ "image": commit_a.image }),
        },
        &mut messages,
    );
    push(
        Role::Bob,
        Role::Alice,
        Body::Commit {
            scheme: "owf".into(),
            payload: serde_json::json!({ "image": commit_b.image }),
        },
        &mut messages,
    );

    // Encrypt stage: the basic protocol with the sender's bits masked by
    // her hardcore bit.
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

    let chan_root = Rng::new(seeds.channel);
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

    let header = TranscriptHeader {
        session_id,
        seeds,
        alice_strategy: StrategyKind::Honest,
        bob_strategy: StrategyKind::Honest,
        batch,
        params: params.clone(),
    };

    let Some((j, outcome)) = first else {
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
        return Ok(Transcript {
            header,
            messages,
            clicks,
            verdict: SessionVerdict::Aborted {
                reason: AbortReason::NoDetection,
            },
        });
    };
    push(
        Role::Channel,
        Role::Bob,
        Body::FirstClick {
            index: j,
            bit: outcome.outcome_bit,
        },
        &mut messages,
    );
    // The receiver's bit travels masked by his hardcore bit.
    push(
        Role::Bob,
        Role::Alice,
        Body::EncryptedBit {
            index: j,
            masked_bit: b ^ mask_b,
        },
        &mut messages,
    );

    // Reveal stage: both strings open, then the usual abort rule on the
    // unmasked bit.
    let (alpha_j, c_j) = choices[(j - 1) as usize];
    let mut open_a = x_a.clone();
    if let Some(bit) = opts.tamper_alice_open_bit {
        open_a[bit / 8] ^= 1 << (bit % 8);
    }
    push(
        Role::Alice,
        Role::Bob,
        Body::Open {
            payload: serde_json::json!({ "x": hex(&open_a), "index": j, "alpha": alpha_j, "c": c_j }),
        },
        &mut messages,
    );
    let mut open_b = x_b.clone();
    if let Some(bit) = opts.tamper_bob_open_bit {
        open_b[bit / 8] ^= 1 << (bit % 8);
    }
    push(
        Role::Bob,
        Role::Alice,
        Body::Open {
            payload: serde_json::json!({ "x": hex(&open_b), "b": b }),
        },
        &mut messages,
    );

    // Receiver verifies the sender's opening and the masked outcome.
    let verdict = if !owf_verify(scheme, &commit_a, &open_a) {
        push(
            Role::Bob,
            Role::Alice,
            Body::Verdict {
                accept: false,
                coin: None,
                reason: Some("commitment:alice".into()),
            },
            &mut messages,
        );
        SessionVerdict::Aborted {
            reason: AbortReason::Commitment { party: Role::Alice },
        }
    } else {
        let mask_a_opened = scheme.predicate.eval(&open_a);
        let beta_j = bases[(j - 1) as usize];
        if alpha_j == beta_j && outcome.outcome_bit != c_j ^ mask_a_opened {
            push(
                Role::Bob,
                Role::Alice,
                Body::Verdict {
                    accept: false,
                    coin: None,
                    reason: Some("outcome_mismatch".into()),
                },
                &mut messages,
            );
            SessionVerdict::Aborted {
                reason: AbortReason::OutcomeMismatch,
            }
        } else if !owf_verify(scheme, &commit_b, &open_b) {
            // Sender verifies the receiver's opening.
            push(
                Role::Alice,
                Role::Bob,
                Body::Verdict {
                    accept: false,
                    coin: None,
                    reason: Some("commitment:bob".into()),
                },
                &mut messages,
            );
            SessionVerdict::Aborted {
                reason: AbortReason::Commitment { party: Role::Bob },
            }
        } else {
            let coin = c_j ^ b;
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
    Ok(Transcript {
        header,
        messages,
        clicks,
        verdict,
    })
}
