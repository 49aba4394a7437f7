//! Wire protocol: newline-delimited JSON, UTF-8, one message per line.
//!
//! Every line is an envelope with fields `v` (protocol version, always 1),
//! `sid` (session id), `type` (tag) and `payload`. The payload schema per
//! tag is fixed; parties validate what they receive and attribute malformed
//! traffic to its sender.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WIRE_VERSION: u32 = 1;

/// The three session roles. The channel role runs the physics mediator and
/// relays party-to-party messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
    Channel,
}

impl Role {
    pub fn label(&self) -> u64 {
        match self {
            Role::Alice => 1,
            Role::Bob => 2,
            Role::Channel => 3,
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Alice => write!(f, "alice"),
            Role::Bob => write!(f, "bob"),
            Role::Channel => write!(f, "channel"),
        }
    }
}

/// One pulse as the mediator sees it: either an honest protocol state
/// identified by its basis and bit, or an arbitrary qubit by amplitudes
/// (only accepted when the mediator grants raw-state injection).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PulseSpec {
    Protocol { alpha: u8, c: u8 },
    Raw { amp0: f64, amp1: f64 },
}

/// Message bodies, tagged on the wire by `type` with the payload nested
/// under `payload`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Body {
    Hello {
        role: Role,
        params_hash: u64,
        /// Protocol family: "basic", "computational" or "noisy_storage".
        protocol: String,
        /// Hash of any commitment-scheme parameters in use (0 for basic).
        #[serde(default)]
        extra_hash: u64,
        /// The sender's master seed, declared so the mediator can write
        /// replayable transcripts. This engine is a simulation instrument;
        /// the mediator sees every secret by construction.
        #[serde(default)]
        seed: u64,
    },
    /// Sender → channel. State descriptors are visible only to the
    /// mediator; they are never relayed.
    PulseBatch {
        first_index: u64,
        y: f64,
        pulses: Vec<PulseSpec>,
    },
    /// Receiver → channel: measurement bases, batched like the pulses.
    MeasureBases { first_index: u64, bases: Vec<u8> },
    /// Channel → receiver: the first detected pulse and its measured bit
    /// (`index` 0 means nothing was detected). Receiver → sender: the
    /// detected index and the receiver's random bit.
    FirstClick { index: u64, bit: u8 },
    /// Sender → receiver: basis and bit of the detected pulse.
    Reveal { index: u64, alpha: u8, c: u8 },
    Verdict {
        accept: bool,
        coin: Option<u8>,
        reason: Option<String>,
    },
    /// Commit-stage message of the combined protocols.
    Commit {
        scheme: String,
        payload: serde_json::Value,
    },
    /// Receiver → sender in the combined protocols: first measured index
    /// and the masked bit.
    EncryptedBit { index: u64, masked_bit: u8 },
    /// Reveal-stage opening of the combined protocols.
    Open { payload: serde_json::Value },
}

impl Body {
    pub fn tag(&self) -> &'static str {
        match self {
            Body::Hello { .. } => "HELLO",
            Body::PulseBatch { .. } => "PULSE_BATCH",
            Body::MeasureBases { .. } => "MEASURE_BASES",
            Body::FirstClick { .. } => "FIRST_CLICK",
            Body::Reveal { .. } => "REVEAL",
            Body::Verdict { .. } => "VERDICT",
            Body::Commit { .. } => "COMMIT",
            Body::EncryptedBit { .. } => "ENCRYPTED_BIT",
            Body::Open { .. } => "OPEN",
        }
    }
}

/// The wire envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub v: u32,
    pub sid: u64,
    #[serde(flatten)]
    pub body: Body,
}

impl WireMessage {
    pub fn new(sid: u64, body: Body) -> Self {
        WireMessage {
            v: WIRE_VERSION,
            sid,
            body,
        }
    }

    /// One JSON line, newline-terminated.
    pub fn encode(&self) -> String {
        let mut line = serde_json::to_string(self).expect("message serializes");
        line.push('\n');
        line
    }

    pub fn decode(line: &str) -> Result<WireMessage> {
        let msg: WireMessage = serde_json::from_str(line.trim_end())
            .map_err(|e| Error::Session(format!("malformed message: {e}")))?;
        if msg.v != WIRE_VERSION {
            return Err(Error::Session(format!(
                "unsupported protocol version {}",
                msg.v
            )));
        }
        Ok(msg)
    }
}
