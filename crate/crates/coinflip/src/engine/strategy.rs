//! Party strategies.
//!
//! Honest parties follow the protocol with ideal-uniform randomness; the
//! device-deviation allowances ε are analysis inputs, not simulated
//! hardware. The two adversarial strategies implement the optimal attacks
//! the analytic bounds are built around and require explicit mediator
//! cooperation flags, so they can only run in simulation mode.

use serde::{Deserialize, Serialize};

use crate::bounds::{alice_bound_extended, AliceStrategy};
use crate::error::{Error, Result};
use crate::photonics::SystemParams;

/// What a party runs during a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StrategyKind {
    Honest,
    /// Sends the optimal superposition in every pulse and reveals whichever
    /// basis/bit pair forces the target coin given the receiver's bit.
    CheatingAlicePm {
        target: u8,
    },
    /// Exploits knowledge of per-pulse photon numbers and perfect
    /// detection, guessing the encoded bit by an optimal measurement.
    CheatingBobPhotonAware {
        target: u8,
    },
}

impl StrategyKind {
    pub fn is_honest(&self) -> bool {
        matches!(self, StrategyKind::Honest)
    }

    pub fn needs_raw_states(&self) -> bool {
        matches!(self, StrategyKind::CheatingAlicePm { .. })
    }

    pub fn needs_photon_numbers(&self) -> bool {
        matches!(self, StrategyKind::CheatingBobPhotonAware { .. })
    }

    pub fn valid_for_alice(&self) -> bool {
        matches!(
            self,
            StrategyKind::Honest | StrategyKind::CheatingAlicePm { .. }
        )
    }

    pub fn valid_for_bob(&self) -> bool {
        matches!(
            self,
            StrategyKind::Honest | StrategyKind::CheatingBobPhotonAware { .. }
        )
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyKind::Honest => write!(f, "honest"),
            StrategyKind::CheatingAlicePm { target } => write!(f, "cheating_alice_pm({target})"),
            StrategyKind::CheatingBobPhotonAware { target } => {
                write!(f, "cheating_bob_photon_aware({target})")
            }
        }
    }
}

/// The cheating sender's prepared attack: the injected amplitudes and the
/// reveal rule as a function of the receiver's bit.
#[derive(Debug, Clone, Copy)]
pub struct AlicePmPlan {
    pub target: u8,
    pub amplitudes: [f64; 2],
    strategy: AliceStrategy,
}

impl AlicePmPlan {
    /// Optimizes the injected state against the configured deviations. At
    /// ε = 0 this is exactly the |+⟩ (target 0) or |−⟩ (target 1) state.
    pub fn prepare(params: &SystemParams, target: u8) -> Result<AlicePmPlan> {
        if target > 1 {
            return Err(Error::Domain(format!(
                "target bit must be 0 or 1, got {target}"
            )));
        }
        let opt = alice_bound_extended(params.y, params.eps_b, params.eps_b_prime)?;
        let (sy, sn) = (params.y.sqrt(), (1.0 - params.y).sqrt());
        // χ = cos φ |Φ00⟩ + sin φ |Φ01⟩ in the computational basis.
        let (c, s) = (opt.phi.cos(), opt.phi.sin());
        let mut amplitudes = [c * sy + s * sn, c * sn - s * sy];
        if target == 1 {
            // The mirrored objective is optimized by the orthogonal state.
            amplitudes = [amplitudes[1], -amplitudes[0]];
        }
        Ok(AlicePmPlan {
            target,
            amplitudes,
            strategy: opt.strategy,
        })
    }

    /// Basis and bit to reveal after the receiver announces `b`. The bit
    /// forces the coin; the basis choice pairs with the injected state so
    /// that the checked outcome keeps its large Born weight (targeting the
    /// opposite coin value swaps the state for its orthogonal complement
    /// but keeps the same basis rule).
    pub fn reveal(&self, b: u8) -> (u8, u8) {
        let c = b ^ self.target;
        let alpha = match self.strategy {
            AliceStrategy::MatchBasis => b,
            AliceStrategy::SwapBasis => 1 ^ b,
        };
        (alpha, c)
    }
}
