//! Physical-layer model: Poisson photon statistics of the attenuated
//! coherent source, fiber transmission, detector efficiencies, dark counts,
//! and the symmetrization-of-losses procedure.
//!
//! The mean photon number `mu` is defined exiting the sender, so channel
//! loss applies on the single pass to the receiver. Detection is modeled
//! post-symmetrization: both detectors operate at the smaller quantum
//! efficiency and the discarded detector's dark counts are thinned by the
//! same discard probability, since discarding happens per detection event
//! regardless of its origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{overlap_sq, state_vector, ProtocolStateVector};
use crate::rng::Rng;

/// Full physical and device parameter set for one channel configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mean photon number per pulse exiting the sender.
    pub mu: f64,
    /// Number of protocol rounds (pulses per session).
    pub rounds: u64,
    /// State coefficient, in [1/2, 1).
    pub y: f64,
    /// Channel length in km.
    pub channel_km: f64,
    /// Fiber attenuation in dB/km (0.2 is standard single-mode fiber at 1550 nm).
    #[serde(default = "default_atten")]
    pub atten_db_per_km: f64,
    /// Quantum efficiency of detector D0.
    pub eta0: f64,
    /// Quantum efficiency of detector D1.
    pub eta1: f64,
    /// Dark count probability per gate, detector D0.
    pub dark0: f64,
    /// Dark count probability per gate, detector D1.
    pub dark1: f64,
    /// Intrinsic wrong-outcome probability for a signal detection in
    /// matching bases.
    #[serde(default = "default_err")]
    pub err: f64,
    /// Bound on the sender's state-distribution deviation from uniform.
    pub eps_a: f64,
    /// Bound on the receiver's basis/bit-distribution deviation from uniform.
    pub eps_b: f64,
    /// Bound on the residual detector-efficiency-ratio deviation after
    /// symmetrization.
    pub eps_b_prime: f64,
    /// Bound on the deviation of each random-generator output bit.
    #[serde(default)]
    pub eps_q: f64,
}

fn default_atten() -> f64 {
    0.2
}

fn default_err() -> f64 {
    0.01
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.mu >= 0.0) {
            return fail("mu must be >= 0");
        }
        if !(0.5..1.0).contains(&self.y) {
            return fail("y must lie in [1/2, 1)");
        }
        if !(self.channel_km >= 0.0) || !(self.atten_db_per_km >= 0.0) {
            return fail("channel length and attenuation must be >= 0");
        }
        for (name, eta) in [("eta0", self.eta0), ("eta1", self.eta1)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return fail(&format!("{name} must lie in (0, 1]"));
            }
        }
        for (name, d) in [("dark0", self.dark0), ("dark1", self.dark1)] {
            if !(0.0..1.0).contains(&d) {
                return fail(&format!("{name} must lie in [0, 1)"));
            }
        }
        if !(0.0..0.5).contains(&self.err) {
            return fail("err must lie in [0, 1/2)");
        }
        if !(0.0..0.25).contains(&self.eps_a) {
            return fail("eps_a must lie in [0, 1/4)");
        }
        if !(0.0..0.25).contains(&self.eps_b) {
            return fail("eps_b must lie in [0, 1/4)");
        }
        if !(0.0..1.0).contains(&self.eps_b_prime) {
            return fail("eps_b_prime must lie in [0, 1)");
        }
        if !(0.0..0.5).contains(&self.eps_q) {
            return fail("eps_q must lie in [0, 1/2)");
        }
        if self.y + 2.0 * self.eps_a >= 1.0 {
            return fail("y + 2*eps_a must stay below 1");
        }
        Ok(())
    }

    /// End-to-end fiber transmission, 10^(−atten·length/10).
    pub fn transmission(&self) -> f64 {
        channel_transmission(self.channel_km, self.atten_db_per_km)
    }

    pub fn symmetrization(&self) -> Symmetrization {
        symmetrize(self.eta0, self.eta1).expect("validated efficiencies")
    }
}

/// Poisson probability mass μ^i e^{−μ} / i!.
pub fn poisson_pmf(mu: f64, i: u64) -> f64 {
    if mu == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    let mut ln_fact = 0.0;
    for k in 2..=i {
        ln_fact += (k as f64).ln();
    }
    (i as f64 * mu.ln() - mu - ln_fact).exp()
}

/// Fiber transmission for a length in km at a given attenuation in dB/km.
pub fn channel_transmission(channel_km: f64, atten_db_per_km: f64) -> f64 {
    10f64.powf(-atten_db_per_km * channel_km / 10.0)
}

/// Result of symmetrizing the detector losses: events on the
/// higher-efficiency detector are discarded with the stated probability so
/// both effective efficiencies equal `eta_sym`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symmetrization {
    /// Detector index (0 or 1) whose events are discarded.
    pub discard_detector: u8,
    /// Probability of discarding an event on that detector.
    pub discard_prob: f64,
    /// Common effective efficiency, min(eta0, eta1).
    pub eta_sym: f64,
}

impl Symmetrization {
    /// Effective dark-count probabilities per gate after the discard is
    /// applied to the discarded detector's dark events.
    pub fn effective_darks(&self, dark0: f64, dark1: f64) -> (f64, f64) {
        let keep = 1.0 - self.discard_prob;
        match self.discard_detector {
            0 => (dark0 * keep, dark1),
            _ => (dark0, dark1 * keep),
        }
    }
}

/// Discard probability and common efficiency that equalize the detectors.
pub fn symmetrize(eta0: f64, eta1: f64) -> Result<Symmetrization> {
    if !(eta0 > 0.0 && eta1 > 0.0) {
        return Err(Error::Domain(
            "detector efficiencies must be positive".into(),
        ));
    }
    let (hi, lo, det) = if eta0 >= eta1 {
        (eta0, eta1, 0)
    } else {
        (eta1, eta0, 1)
    };
    Ok(Symmetrization {
        discard_detector: det,
        discard_prob: 1.0 - lo / hi,
        eta_sym: lo,
    })
}

/// Outcome of gating one pulse at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseOutcome {
    pub clicked: bool,
    /// Which detector fired; meaningful only when `clicked`.
    pub detector: u8,
    /// Whether the click came from a dark count rather than a photon.
    pub from_dark: bool,
    /// Measured bit; meaningful only when `clicked`.
    pub outcome_bit: u8,
}

impl PulseOutcome {
    pub fn no_click() -> Self {
        PulseOutcome {
            clicked: false,
            detector: 0,
            from_dark: false,
            outcome_bit: 0,
        }
    }
}

/// Simulates one gated pulse: Poisson photon number thinned by the channel,
/// symmetrized detection, Born-rule outcome with matching-basis error, and
/// dark counts. If a signal and a dark event fall in the same gate the
/// signal wins; the probability product is ~1e−10 at in-scope parameters.
pub fn simulate_pulse(
    params: &SystemParams,
    alice_state: &ProtocolStateVector,
    bob_basis: u8,
    rng: &mut Rng,
) -> PulseOutcome {
    let sym = params.symmetrization();
    let arriving_mean = params.mu * params.transmission();
    let photons = rng.poisson(arriving_mean);
    let p_signal_click = 1.0 - (1.0 - sym.eta_sym).powi(photons as i32);
    if photons > 0 && rng.bernoulli(p_signal_click) {
        let meas0 = state_vector(bob_basis, 0, alice_state.y).expect("valid basis state");
        let w0 = overlap_sq(alice_state, &meas0).expect("same y");
        let mut bit = if rng.bernoulli(w0) { 0u8 } else { 1u8 };
        if bob_basis == alice_state.alpha && rng.bernoulli(params.err) {
            bit ^= 1;
        }
        return PulseOutcome {
            clicked: true,
            detector: bit,
            from_dark: false,
            outcome_bit: bit,
        };
    }
    let (d0, d1) = sym.effective_darks(params.dark0, params.dark1);
    let f0 = rng.bernoulli(d0);
    let f1 = rng.bernoulli(d1);
    match (f0, f1) {
        (false, false) => PulseOutcome::no_click(),
        (true, false) => PulseOutcome {
            clicked: true,
            detector: 0,
            from_dark: true,
            outcome_bit: 0,
        },
        (false, true) => PulseOutcome {
            clicked: true,
            detector: 1,
            from_dark: true,
            outcome_bit: 1,
        },
        (true, true) => {
            let bit = rng.next_bit();
            PulseOutcome {
                clicked: true,
                detector: bit,
                from_dark: true,
                outcome_bit: bit,
            }
        }
    }
}

/// Detection counts in the basis/bit agreement table, plus session totals.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCounts {
    /// `cells[basis][bit]` = number of detection events where preparation
    /// and measurement agreed on both basis and bit.
    pub cells: [[u64; 2]; 2],
    pub pulses_sent: u64,
    pub detections: u64,
}

impl DetectionCounts {
    pub fn validate(&self) -> Result<()> {
        let cell_sum: u64 = self.cells.iter().flatten().sum();
        if cell_sum > self.detections || self.detections > self.pulses_sent {
            return Err(Error::Invariant(format!(
                "count ordering violated: cells {cell_sum} <= detections {} <= pulses {}",
                self.detections, self.pulses_sent
            )));
        }
        Ok(())
    }

    /// Parses the CSV layout: header `basis,bit,count`, one row per
    /// (basis, bit) cell, and a final totals row
    /// `totals,<pulses_sent>,<detections>`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut cells = [[None::<u64>; 2]; 2];
        let mut totals = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.eq_ignore_ascii_case("basis,bit,count")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Config(format!(
                    "line {}: expected 3 fields",
                    lineno + 1
                )));
            }
            let parse = |s: &str| -> Result<u64> {
                s.parse::<u64>()
                    .map_err(|_| Error::Config(format!("line {}: bad integer {s:?}", lineno + 1)))
            };
            if fields[0].eq_ignore_ascii_case("totals") {
                totals = Some((parse(fields[1])?, parse(fields[2])?));
            } else {
                let basis = parse(fields[0])? as usize;
                let bit = parse(fields[1])? as usize;
                if basis > 1 || bit > 1 {
                    return Err(Error::Config(format!(
                        "line {}: basis/bit out of range",
                        lineno + 1
                    )));
                }
                cells[basis][bit] = Some(parse(fields[2])?);
            }
        }
        let (pulses_sent, detections) =
            totals.ok_or_else(|| Error::Config("missing totals row".into()))?;
        let mut out = [[0u64; 2]; 2];
        for basis in 0..2 {
            for bit in 0..2 {
                out[basis][bit] = cells[basis][bit].ok_or_else(|| {
                    Error::Config(format!("missing cell for basis {basis}, bit {bit}"))
                })?;
            }
        }
        let counts = DetectionCounts {
            cells: out,
            pulses_sent,
            detections,
        };
        counts.validate()?;
        Ok(counts)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("basis,bit,count\n");
        for basis in 0..2 {
            for bit in 0..2 {
                s.push_str(&format!("{basis},{bit},{}\n", self.cells[basis][bit]));
            }
        }
        s.push_str(&format!(
            "totals,{},{}\n",
            self.pulses_sent, self.detections
        ));
        s
    }
}

/// Ratio of bit-1 to bit-0 agreement counts with no corrections applied.
pub fn raw_bit_ratio(counts: &DetectionCounts) -> Result<f64> {
    let n0 = (counts.cells[0][0] + counts.cells[1][0]) as f64;
    let n1 = (counts.cells[0][1] + counts.cells[1][1]) as f64;
    if n0 == 0.0 {
        return Err(Error::InsufficientData("no bit-0 detections".into()));
    }
    Ok(n1 / n0)
}

/// Estimates the detector efficiency ratio η1/η0 from agreement counts.
///
/// A dark event on detector D_b lands in the agreement cell (β, b) only
/// when it coincides with Bob choosing β, Alice choosing α = β and c = b,
/// i.e. an expected `pulses · dark_b / 8` per cell; these are subtracted.
/// The basis-choice asymmetry is removed by normalizing each basis row to
/// its share of the corrected events. Uncertainty is propagated from the
/// Poisson errors of the corrected cell sums.
pub fn estimate_efficiency_ratio(
    counts: &DetectionCounts,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    counts.validate()?;
    if counts.cells.iter().flatten().any(|&c| c == 0) {
        return Err(Error::InsufficientData(
            "all four agreement cells must be nonzero".into(),
        ));
    }
    let n = counts.pulses_sent as f64;
    let dark_per_cell = [n * params.dark0 / 8.0, n * params.dark1 / 8.0];
    let mut corrected = [[0.0f64; 2]; 2];
    for basis in 0..2 {
        for bit in 0..2 {
            let c = counts.cells[basis][bit] as f64 - dark_per_cell[bit];
            if c <= 0.0 {
                return Err(Error::InsufficientData(format!(
                    "cell ({basis},{bit}) is consistent with dark counts alone"
                )));
            }
            corrected[basis][bit] = c;
        }
    }
    // Basis-choice asymmetry: normalize each basis row by its weight.
    let row: [f64; 2] = [
        corrected[0][0] + corrected[0][1],
        corrected[1][0] + corrected[1][1],
    ];
    let total = row[0] + row[1];
    let mut n0 = 0.0;
    let mut n1 = 0.0;
    for basis in 0..2 {
        let weight = 2.0 * row[basis] / total;
        n0 += corrected[basis][0] / weight;
        n1 += corrected[basis][1] / weight;
    }
    let ratio = n1 / n0;
    let uncertainty = ratio * (1.0 / n0 + 1.0 / n1).sqrt();
    Ok((ratio, uncertainty))
}
