//! Parameter search: the fair coefficient y equalizing the two cheating
//! bounds, joint (μ, K) optimization for a target honest-abort probability,
//! and the sweep curves over abort probability and channel length.
//!
//! Everything here is deterministic for a fixed grid; sweeps emit plot-ready
//! CSV with floats at six significant digits.

use crate::bounds::{alice_bound_extended, bob_bound, classical_bound, gain, CheatReport};
use crate::config::{Config, MuGrid};
use crate::error::{Error, Result};
use crate::honest::rounds_for_abort;
use crate::photonics::SystemParams;

/// A solved fair operating point.
#[derive(Debug, Clone, Copy)]
pub struct FairPoint {
    pub y: f64,
    pub p_alice: f64,
    pub p_bob: f64,
    /// The common cheating probability (the larger of the two; they agree
    /// to the bisection tolerance).
    pub p_fair: f64,
}

const Y_EPS: f64 = 1e-9;

/// Finds y with equal sender and receiver cheating bounds by bisection of
/// their difference over (1/2, 1). The sender's bound falls with y while
/// the receiver's rises, so a root is unique when it exists; otherwise the
/// endpoint differences are reported.
pub fn fair_point(
    mu: f64,
    rounds: u64,
    eps_a: f64,
    eps_b: f64,
    eps_b_prime: f64,
) -> Result<FairPoint> {
    let diff = |y: f64| -> Result<(f64, f64, f64)> {
        let a = alice_bound_extended(y, eps_b, eps_b_prime)?.p;
        let b = bob_bound(mu, rounds, y, eps_a)?.p;
        Ok((a - b, a, b))
    };
    let mut lo = 0.5 + Y_EPS;
    let mut hi = 1.0 - 2.0 * eps_a - Y_EPS;
    let (d_lo, ..) = diff(lo)?;
    let (d_hi, ..) = diff(hi)?;
    if d_lo.signum() == d_hi.signum() {
        return Err(Error::Infeasible {
            reason: format!(
                "no fair coefficient: bound difference is {d_lo:.6} at y={lo:.3} and {d_hi:.6} at y={hi:.3}"
            ),
            floor: d_lo.abs().min(d_hi.abs()),
        });
    }
    // d_lo > 0 (sender dominates at y near 1/2); keep that orientation.
    while hi - lo > Y_EPS {
        let mid = 0.5 * (lo + hi);
        let (d_mid, ..) = diff(mid)?;
        if d_mid.signum() == d_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    let (_, p_alice, p_bob) = diff(y)?;
    Ok(FairPoint {
        y,
        p_alice,
        p_bob,
        p_fair: p_alice.max(p_bob),
    })
}

/// The fair coefficient alone.
pub fn fair_y(mu: f64, rounds: u64, eps_a: f64, eps_b: f64, eps_b_prime: f64) -> Result<f64> {
    fair_point(mu, rounds, eps_a, eps_b, eps_b_prime).map(|fp| fp.y)
}

/// A (μ, K, y) operating point selected by the optimizer.
#[derive(Debug, Clone)]
pub struct OptimizedPoint {
    pub mu: f64,
    pub rounds: u64,
    pub y: f64,
    pub p_fair: f64,
    pub report: CheatReport,
}

/// Minimizes the fair cheating probability over the μ grid, choosing for
/// each μ the smallest round count meeting the abort target and the fair
/// coefficient. Grid points whose abort floor exceeds the target are
/// skipped; ties break toward smaller μ (fewer multiphoton pulses).
pub fn optimize_params(
    base: &SystemParams,
    grid: &MuGrid,
    target_h: f64,
) -> Result<OptimizedPoint> {
    grid.validate()?;
    let mut best: Option<OptimizedPoint> = None;
    let mut last_err = None;
    for mu in grid.values() {
        let mut params = base.clone();
        params.mu = mu;
        let rounds = match rounds_for_abort(&params, target_h) {
            Ok(k) => k,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        params.rounds = rounds;
        let fp = match fair_point(mu, rounds, params.eps_a, params.eps_b, params.eps_b_prime) {
            Ok(fp) => fp,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if best.as_ref().map_or(true, |b| fp.p_fair < b.p_fair) {
            params.y = fp.y;
            let report = CheatReport::analyze(&params)?;
            best = Some(OptimizedPoint {
                mu,
                rounds,
                y: fp.y,
                p_fair: fp.p_fair,
                report,
            });
        }
    }
    best.ok_or_else(|| match last_err {
        Some(Error::Infeasible { reason, floor }) => Error::Infeasible {
            reason: format!("every grid point failed; last: {reason}"),
            floor,
        },
        Some(e) => e,
        None => Error::Infeasible {
            reason: "empty mu grid".into(),
            floor: f64::NAN,
        },
    })
}

/// One row of the cheating-versus-abort sweep.
#[derive(Debug, Clone)]
pub struct AbortRow {
    pub h: f64,
    pub outcome: std::result::Result<AbortPoint, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct AbortPoint {
    pub p_fair: f64,
    pub p_classical: f64,
    pub gain: f64,
    pub mu: f64,
    pub rounds: u64,
    pub y: f64,
}

/// Optimizes one row per requested honest-abort probability. Infeasible
/// rows are recorded, not fatal.
pub fn sweep_abort(base: &SystemParams, grid: &MuGrid, h_list: &[f64]) -> Result<Vec<AbortRow>> {
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let p_classical = classical_bound(h)?;
        let outcome = match optimize_params(base, grid, h) {
            Ok(opt) => Ok(AbortPoint {
                p_fair: opt.p_fair,
                p_classical,
                gain: gain(p_classical, opt.p_fair),
                mu: opt.mu,
                rounds: opt.rounds,
                y: opt.y,
            }),
            Err(e) => Err(e.to_string()),
        };
        rows.push(AbortRow { h, outcome });
    }
    Ok(rows)
}

/// One row of the gain-versus-distance sweep.
#[derive(Debug, Clone)]
pub struct DistanceRow {
    pub km: f64,
    pub outcome: std::result::Result<AbortPoint, String>,
}

/// Optimizes one row per channel length at a fixed abort target, using the
/// per-channel error-rate calibration carried by the config.
pub fn sweep_distance(cfg: &Config, target_h: f64) -> Result<Vec<DistanceRow>> {
    let p_classical = classical_bound(target_h)?;
    let mut rows = Vec::with_capacity(cfg.distances_km.len());
    for &km in &cfg.distances_km {
        let mut base = cfg.params.clone();
        base.channel_km = km;
        base.err = cfg.err_for_km(km);
        let outcome = match optimize_params(&base, &cfg.mu_grid, target_h) {
            Ok(opt) => Ok(AbortPoint {
                p_fair: opt.p_fair,
                p_classical,
                gain: gain(p_classical, opt.p_fair),
                mu: opt.mu,
                rounds: opt.rounds,
                y: opt.y,
            }),
            Err(e) => Err(e.to_string()),
        };
        rows.push(DistanceRow { km, outcome });
    }
    Ok(rows)
}

fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// CSV for the abort sweep: `H,p_fair,p_classical,gain,mu,K,y` with floats
/// at six significant digits; infeasible rows are omitted.
pub fn abort_rows_to_csv(rows: &[AbortRow]) -> String {
    let mut out = String::from("H,p_fair,p_classical,gain,mu,K,y\n");
    for row in rows {
        if let Ok(p) = &row.outcome {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig6(row.h),
                sig6(p.p_fair),
                sig6(p.p_classical),
                sig6(p.gain),
                sig6(p.mu),
                p.rounds,
                sig6(p.y)
            ));
        }
    }
    out
}

/// CSV for the distance sweep: `km,gain,p_fair,p_classical,mu,K,y`.
pub fn distance_rows_to_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from("km,gain,p_fair,p_classical,mu,K,y\n");
    for row in rows {
        if let Ok(p) = &row.outcome {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig6(row.km),
                sig6(p.gain),
                sig6(p.p_fair),
                sig6(p.p_classical),
                sig6(p.mu),
                p.rounds,
                sig6(p.y)
            ));
        }
    }
    out
}
