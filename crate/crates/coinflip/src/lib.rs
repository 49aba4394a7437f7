//! A desk-scale laboratory for quantum coin flipping over lossy photonic
//! channels: an executable two-party protocol engine with a simulated
//! physical layer, and a security analyzer that computes honest-abort and
//! optimal-cheating probabilities under realistic device imperfections.
//!
//! The pieces fit together as follows:
//!
//! - [`qstate`] — exact qubit math for the protocol states: overlaps,
//!   density matrices, and Helstrom discrimination.
//! - [`photonics`] — weak-coherent-pulse source, fiber loss, detector
//!   efficiencies, dark counts, and the symmetrization of losses.
//! - [`honest`] — the honest-abort probability model and its inversion to
//!   a required round count.
//! - [`bounds`] — optimal cheating probabilities for either party, the
//!   classical benchmark, and the gain.
//! - [`fairness`] — fair-coefficient search, (μ, K) optimization, and the
//!   sweep curves.
//! - [`engine`] — runnable state machines for the two parties plus a
//!   physics mediator, over in-process or TCP transports, with replayable
//!   transcripts.
//! - [`bounded`] — the two combined protocols for computationally bounded
//!   and noisy-storage adversaries, layered on the basic engine.
//!
//! Start with the `examples/` directory: each file exercises one of these
//! capabilities end to end.

pub mod bounded;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod fairness;
pub mod honest;
pub mod photonics;
pub mod qstate;
pub mod rng;

pub use bounds::{alice_bound_uniform, bob_bound, classical_bound, gain, CheatReport};
pub use config::Config;
pub use error::{Error, Result};
pub use fairness::{fair_y, optimize_params};
pub use photonics::SystemParams;
