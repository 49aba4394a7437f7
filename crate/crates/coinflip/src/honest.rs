//! Honest-abort probability H: closed-form model, inversion to the required
//! round count, error-rate calibration, and the finite-size deviation bound.
//!
//! The model conditions on the first detected pulse. A session aborts when
//! no pulse at all is detected, or when the first detection is a signal in
//! matching bases that reads out wrong (probability err/2, since mismatched
//! bases never abort), or a dark count that lands in a matching basis with
//! the wrong bit (probability 1/4, dark outcomes being independent of the
//! encoded bit):
//!
//! ```text
//! H = (1 − p_det)^K + (1 − (1 − p_det)^K) · [f_sig·err/2 + f_dark/4]
//! ```

use crate::error::{Error, Result};
use crate::photonics::SystemParams;

/// Per-pulse detection probabilities and the signal/dark split of a click.
#[derive(Debug, Clone, Copy)]
pub struct DetectionModel {
    /// Probability of at least one photon detection, 1 − exp(−μ·T·η_sym).
    pub p_signal: f64,
    /// Probability of a dark count in the gate, with the discarded
    /// detector's darks thinned by the symmetrization discard.
    pub p_dark: f64,
    /// Probability the gate registers anything.
    pub p_det: f64,
    /// Fraction of detections caused by a photon (signal wins ties).
    pub f_signal: f64,
    /// Fraction of detections caused by dark counts alone.
    pub f_dark: f64,
}

/// Closed-form per-pulse detection model for a parameter set.
pub fn detection_model(params: &SystemParams) -> DetectionModel {
    let sym = params.symmetrization();
    let p_signal = -(-params.mu * params.transmission() * sym.eta_sym).exp_m1();
    let (d0, d1) = sym.effective_darks(params.dark0, params.dark1);
    let p_dark = 1.0 - (1.0 - d0) * (1.0 - d1);
    let p_det = 1.0 - (1.0 - p_signal) * (1.0 - p_dark);
    let (f_signal, f_dark) = if p_det > 0.0 {
        (p_signal / p_det, (1.0 - p_signal) * p_dark / p_det)
    } else {
        (0.0, 0.0)
    };
    DetectionModel {
        p_signal,
        p_dark,
        p_det,
        f_signal,
        f_dark,
    }
}

/// Probability that one gated pulse registers a detection.
pub fn per_pulse_detection(params: &SystemParams) -> f64 {
    detection_model(params).p_det
}

/// Abort probability per detected session, the K → ∞ floor of H.
pub fn abort_floor(params: &SystemParams) -> f64 {
    let m = detection_model(params);
    m.f_signal * params.err / 2.0 + m.f_dark / 4.0
}

fn no_detection_prob(p_det: f64, rounds: u64) -> f64 {
    if p_det <= 0.0 {
        return 1.0;
    }
    (rounds as f64 * (-p_det).ln_1p()).exp()
}

/// Honest-abort probability for `params.rounds` pulses.
pub fn honest_abort(params: &SystemParams) -> f64 {
    let m = detection_model(params);
    let floor = m.f_signal * params.err / 2.0 + m.f_dark / 4.0;
    let a = no_detection_prob(m.p_det, params.rounds);
    a + (1.0 - a) * floor
}

/// Smallest round count whose honest-abort probability does not exceed
/// `target`. Fails when the target sits at or below the per-detection floor.
pub fn rounds_for_abort(params: &SystemParams, target: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Domain(format!(
            "target abort probability {target} outside [0,1]"
        )));
    }
    if target >= 1.0 {
        return Ok(1);
    }
    let m = detection_model(params);
    let floor = m.f_signal * params.err / 2.0 + m.f_dark / 4.0;
    if m.p_det <= 0.0 || target <= floor {
        return Err(Error::Infeasible {
            reason: format!("honest abort cannot reach {target} at any round count"),
            floor: if m.p_det <= 0.0 { 1.0 } else { floor },
        });
    }
    let a_target = (target - floor) / (1.0 - floor);
    let mut k = (a_target.ln() / (-m.p_det).ln_1p()).ceil().max(1.0) as u64;
    let with_rounds = |k: u64| {
        let a = no_detection_prob(m.p_det, k);
        a + (1.0 - a) * floor
    };
    while k > 1 && with_rounds(k - 1) <= target {
        k -= 1;
    }
    while with_rounds(k) > target {
        k += 1;
    }
    Ok(k)
}

/// Solves `honest_abort = target` for the error rate at the configured
/// round count, holding everything else fixed. The calibrated value is what
/// analysis reports echo alongside results.
pub fn calibrate_err(params: &SystemParams, target: f64) -> Result<f64> {
    let m = detection_model(params);
    let a = no_detection_prob(m.p_det, params.rounds);
    let dark_floor = a + (1.0 - a) * m.f_dark / 4.0;
    if target <= dark_floor {
        return Err(Error::Infeasible {
            reason: format!(
                "abort target {target} below the zero-error floor at {} rounds",
                params.rounds
            ),
            floor: dark_floor,
        });
    }
    let per_detection = (target - a) / (1.0 - a);
    let err = 2.0 * (per_detection - m.f_dark / 4.0) / m.f_signal;
    if !(0.0..0.5).contains(&err) {
        return Err(Error::Infeasible {
            reason: format!("calibration requires err = {err}, outside [0, 1/2)"),
            floor: dark_floor,
        });
    }
    Ok(err)
}

/// Multiplicative Chernoff tail: an upper bound on the probability that the
/// empirical abort rate over `n_events` sessions exceeds `p + deviation`,
/// exp(−n·δ²·p/(2+δ)) with δ = deviation/p.
pub fn finite_size_bound(n_events: u64, p: f64, deviation: f64) -> f64 {
    assert!(n_events > 0 && p > 0.0 && p < 1.0 && deviation > 0.0);
    let delta = deviation / p;
    (-(n_events as f64) * delta * delta * p / (2.0 + delta)).exp()
}
