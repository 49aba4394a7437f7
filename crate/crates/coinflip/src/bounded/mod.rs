//! The two combined protocols, layering commit/encrypt/reveal stages
//! around the basic engine: one for computationally bounded adversaries
//! (an injective one-way function hides each party's mask bit) and one for
//! adversaries with noisy quantum storage (syndromes and a two-universal
//! extractor over a prepared string commit the masks, and a wait time
//! forces stored quantum state through a depolarizing channel).
//!
//! Against bounded adversaries the mask bits stay hidden until the reveal
//! stage, so the coin inherits the commit scheme's near-perfect security;
//! against unbounded adversaries everything reduces to the basic protocol.

pub mod code;
pub mod computational;
pub mod noisy;
pub mod owf;

pub use code::{extract, syndrome, CodeParams};
pub use computational::{run_computational, ComputationalOptions};
pub use noisy::{run_noisy_storage, NoisyOptions, NoisyOutcome};
pub use owf::{owf_commit, owf_verify, Commitment, HardcorePredicate, ModExp, OwfScheme};

use crate::rng::Rng;

/// The storage-noise model applied at the Δt barrier: with the configured
/// strength a stored qubit is replaced by the maximally mixed state
/// (realized as a uniformly random basis state, which measures identically).
#[derive(Debug, Clone, Copy)]
pub struct DepolarizingChannel {
    pub strength: f64,
}

impl DepolarizingChannel {
    pub fn apply(&self, amplitudes: [f64; 2], rng: &mut Rng) -> [f64; 2] {
        if rng.bernoulli(self.strength) {
            if rng.next_bit() == 0 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        } else {
            amplitudes
        }
    }
}

/// Anything that might be holding unmeasured quantum state when the wait
/// time elapses. The runners invoke this once between the prepare and
/// commit stages; honest parties hold nothing and inherit the default
/// no-op.
pub trait StorageBarrier {
    fn flush_storage(&mut self, _channel: &DepolarizingChannel, _rng: &mut Rng) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::state_vector;

    struct HoardingAdversary {
        stored: Vec<[f64; 2]>,
    }

    impl StorageBarrier for HoardingAdversary {
        fn flush_storage(&mut self, channel: &DepolarizingChannel, rng: &mut Rng) {
            for amps in self.stored.iter_mut() {
                *amps = channel.apply(*amps, rng);
            }
        }
    }

    #[test]
    fn barrier_degrades_stored_state() {
        // An adversary keeping |Φ00⟩ unmeasured and reading it out in the
        // computational basis afterwards guesses the bit with probability
        // y before the barrier and (1−s)·y + s/2 after.
        let y = 0.9;
        let state = state_vector(0, 0, y).unwrap();
        let channel = DepolarizingChannel { strength: 0.8 };
        let mut rng = Rng::new(77);
        let n = 200_000;
        let mut correct = 0u64;
        for _ in 0..n {
            let mut adv = HoardingAdversary {
                stored: vec![state.amplitudes],
            };
            adv.flush_storage(&channel, &mut rng);
            let w0 = adv.stored[0][0] * adv.stored[0][0];
            if rng.bernoulli(w0) {
                correct += 1;
            }
        }
        let f = correct as f64 / n as f64;
        let expect = (1.0 - channel.strength) * y + channel.strength * 0.5;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (f - expect).abs() < 3.0 * sigma,
            "guess rate {f} vs {expect}"
        );
    }
}
