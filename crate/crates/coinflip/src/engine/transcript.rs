//! Replayable session transcripts.
//!
//! A transcript is written as JSONL: a header line carrying the seeds,
//! strategies and parameters, one line per message in protocol-canonical
//! order, and a footer line with the verdict and the mediator's click log.
//! Re-running a session from the header reproduces the file byte for byte;
//! a missing footer marks an interrupted session.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonics::{PulseOutcome, SystemParams};
use crate::rng::Rng;

use super::message::{Body, Role, WireMessage};
use super::strategy::StrategyKind;

/// Master seeds of the three roles; per-session streams derive from these
/// and the session id, so one seed triple drives any number of sessions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSeeds {
    pub alice: u64,
    pub bob: u64,
    pub channel: u64,
}

impl SessionSeeds {
    pub fn from_master(seed: u64) -> Self {
        let mut root = Rng::new(seed);
        SessionSeeds {
            alice: root.next_u64(),
            bob: root.next_u64(),
            channel: root.next_u64(),
        }
    }
}

/// Why a session ended without a coin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AbortReason {
    /// Bases agreed and the measured bit disagreed with the revealed bit.
    OutcomeMismatch,
    /// No pulse produced a detection.
    NoDetection,
    /// A party sent something malformed; attributed to that party.
    ProtocolViolation { party: Role, what: String },
    /// A commitment failed to open; attributed to the offender.
    Commitment { party: Role },
    /// A reveal-stage consistency check of the combined protocols failed.
    Check { name: String },
}

/// Final state of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SessionVerdict {
    Accepted {
        coin: u8,
    },
    Aborted {
        reason: AbortReason,
    },
    /// The session never reached a verdict (transport failure, kill).
    Incomplete,
}

impl SessionVerdict {
    pub fn coin(&self) -> Option<u8> {
        match self {
            SessionVerdict::Accepted { coin } => Some(*coin),
            _ => None,
        }
    }
}

/// One transcript message with its direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub from: Role,
    pub to: Role,
    #[serde(flatten)]
    pub msg: WireMessage,
}

/// A recorded click from the mediator's pulse loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub index: u64,
    pub outcome: PulseOutcome,
}

fn default_batch() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub session_id: u64,
    pub seeds: SessionSeeds,
    pub alice_strategy: StrategyKind,
    pub bob_strategy: StrategyKind,
    /// Pulse descriptors and bases per batched message.
    #[serde(default = "default_batch")]
    pub batch: usize,
    pub params: SystemParams,
}

/// Ordered record of one protocol session.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub messages: Vec<TranscriptEntry>,
    /// Mediator-side log of detected pulses, up to and including the first
    /// kept click (undetected pulses are not recorded).
    pub clicks: Vec<ClickRecord>,
    pub verdict: SessionVerdict,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    verdict: SessionVerdict,
    clicks: Vec<ClickRecord>,
}

impl Transcript {
    pub fn session_id(&self) -> u64 {
        self.header.session_id
    }

    /// Serializes to JSONL (header, messages, footer).
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header");
        out.push('\n');
        for entry in &self.messages {
            out.push_str(&serde_json::to_string(entry).expect("entry"));
            out.push('\n');
        }
        let footer = Footer {
            verdict: self.verdict.clone(),
            clicks: self.clicks.clone(),
        };
        out.push_str(&serde_json::to_string(&footer).expect("footer"));
        out.push('\n');
        out
    }

    /// Parses JSONL. A missing footer yields `SessionVerdict::Incomplete`.
    pub fn from_jsonl(text: &str) -> Result<Transcript> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Session("empty transcript".into()))?;
        let header: TranscriptHeader = serde_json::from_str(header_line)
            .map_err(|e| Error::Session(format!("bad transcript header: {e}")))?;
        let mut messages = Vec::new();
        let mut footer: Option<Footer> = None;
        for line in lines {
            if let Ok(entry) = serde_json::from_str::<TranscriptEntry>(line) {
                messages.push(entry);
            } else {
                let f: Footer = serde_json::from_str(line)
                    .map_err(|e| Error::Session(format!("bad transcript line: {e}")))?;
                footer = Some(f);
            }
        }
        let (verdict, clicks) = match footer {
            Some(f) => (f.verdict, f.clicks),
            None => (SessionVerdict::Incomplete, Vec::new()),
        };
        Ok(Transcript {
            header,
            messages,
            clicks,
            verdict,
        })
    }

    /// Structural checks every finished basic-protocol transcript obeys:
    /// exactly one receiver→sender FIRST_CLICK, a REVEAL that references
    /// its index and stays within [1, K], and state descriptors confined
    /// to sender→channel traffic.
    pub fn validate_basic(&self) -> Result<()> {
        let k = self.header.params.rounds;
        let clicks: Vec<&TranscriptEntry> = self
            .messages
            .iter()
            .filter(|e| e.from == Role::Bob && e.to == Role::Alice)
            .filter(|e| matches!(e.msg.body, Body::FirstClick { .. }))
            .collect();
        let aborted_early = matches!(
            self.verdict,
            SessionVerdict::Aborted {
                reason: AbortReason::NoDetection
            } | SessionVerdict::Aborted {
                reason: AbortReason::ProtocolViolation { .. }
            }
        ) || self.verdict == SessionVerdict::Incomplete;
        if clicks.len() != 1 && !aborted_early {
            return Err(Error::Invariant(format!(
                "expected exactly one FIRST_CLICK, found {}",
                clicks.len()
            )));
        }
        if let Some(entry) = clicks.first() {
            let Body::FirstClick { index, .. } = entry.msg.body else {
                unreachable!()
            };
            if index < 1 || index > k {
                return Err(Error::Invariant(format!(
                    "click index {index} outside [1, {k}]"
                )));
            }
            for e in &self.messages {
                if let Body::Reveal { index: ri, .. } = e.msg.body {
                    if ri != index {
                        return Err(Error::Invariant(format!(
                            "reveal references {ri}, first click was {index}"
                        )));
                    }
                }
            }
        }
        for e in &self.messages {
            if matches!(e.msg.body, Body::PulseBatch { .. })
                && !(e.from == Role::Alice && e.to == Role::Channel)
            {
                return Err(Error::Invariant(
                    "state descriptors leaked outside the sender→channel link".into(),
                ));
            }
        }
        Ok(())
    }
}
