//! Exact qubit-level math for the protocol states.
//!
//! Every state in scope lies in the real span of |0⟩ and |1⟩, so real
//! amplitudes and real symmetric density matrices suffice; complex support
//! is intentionally absent. The states for basis `α` and bit `c` with
//! coefficient `y` are
//!
//! ```text
//! |Φ_{α,0}⟩ = √y |0⟩ + (−1)^α √(1−y) |1⟩
//! |Φ_{α,1}⟩ = √(1−y) |0⟩ − (−1)^α √y |1⟩
//! ```
//!
//! Same-basis states are orthogonal; cross-basis overlaps are governed by
//! `2y−1`, which is what gives the protocol its loss-tolerant structure.

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// A protocol state |Φ_{α,c}⟩ with its defining labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolStateVector {
    /// Basis index.
    pub alpha: u8,
    /// Encoded bit.
    pub c: u8,
    /// State coefficient, in [1/2, 1). The value 1/2 yields the BB84 states.
    pub y: f64,
    /// Coefficients on the computational basis (|0⟩, |1⟩).
    pub amplitudes: [f64; 2],
}

fn check_bit(b: u8, name: &str) -> Result<()> {
    if b > 1 {
        return Err(Error::Domain(format!("{name} must be 0 or 1, got {b}")));
    }
    Ok(())
}

fn check_y(y: f64) -> Result<()> {
    if !(0.5..1.0).contains(&y) {
        return Err(Error::Domain(format!(
            "state coefficient y must lie in [1/2, 1), got {y}"
        )));
    }
    Ok(())
}

/// Builds |Φ_{α,c}⟩ for coefficient `y`.
pub fn state_vector(alpha: u8, c: u8, y: f64) -> Result<ProtocolStateVector> {
    check_bit(alpha, "alpha")?;
    check_bit(c, "c")?;
    check_y(y)?;
    let sign = if alpha == 0 { 1.0 } else { -1.0 };
    let (a, b) = (y.sqrt(), (1.0 - y).sqrt());
    let amplitudes = if c == 0 {
        [a, sign * b]
    } else {
        [b, -sign * a]
    };
    Ok(ProtocolStateVector {
        alpha,
        c,
        y,
        amplitudes,
    })
}

impl ProtocolStateVector {
    pub fn inner(&self, other: &ProtocolStateVector) -> f64 {
        self.amplitudes[0] * other.amplitudes[0] + self.amplitudes[1] * other.amplitudes[1]
    }
}

/// |⟨s1|s2⟩|², the Born weight of one protocol state against another.
pub fn overlap_sq(s1: &ProtocolStateVector, s2: &ProtocolStateVector) -> Result<f64> {
    if (s1.y - s2.y).abs() > NORM_TOL {
        return Err(Error::Domain(format!(
            "overlap between states of different coefficients: y1 = {}, y2 = {}",
            s1.y, s2.y
        )));
    }
    let ip = s1.inner(s2);
    Ok((ip * ip).clamp(0.0, 1.0))
}

/// 2×2 real symmetric density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity(pub(crate) [[f64; 2]; 2]);

/// 4×4 real symmetric density matrix for two-photon (tensor-square) mixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonDensity(pub(crate) [[f64; 4]; 4]);

fn validate_density<const N: usize>(m: &[[f64; N]; N]) -> Result<()> {
    for i in 0..N {
        for j in (i + 1)..N {
            if (m[i][j] - m[j][i]).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    m[i][j], m[j][i]
                )));
            }
        }
    }
    let trace: f64 = (0..N).map(|i| m[i][i]).sum();
    if (trace - 1.0).abs() > NORM_TOL.max(1e-10) {
        return Err(Error::Invariant(format!("density trace {trace} != 1")));
    }
    for ev in sym_eigenvalues(m) {
        if ev < -PSD_TOL {
            return Err(Error::Invariant(format!("negative eigenvalue {ev}")));
        }
    }
    Ok(())
}

impl QubitDensity {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        validate_density(&m)?;
        Ok(QubitDensity(m))
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.0
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        sym_eigenvalues(&self.0)
    }

    pub fn from_pure(s: &ProtocolStateVector) -> Self {
        let [a, b] = s.amplitudes;
        QubitDensity([[a * a, a * b], [a * b, b * b]])
    }
}

impl TwoPhotonDensity {
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        validate_density(&m)?;
        Ok(TwoPhotonDensity(m))
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        self.0
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        sym_eigenvalues(&self.0)
    }
}

/// Mixtures ρ'_c = Σ_α Pr[α|c] |Φ_{α,c}⟩⟨Φ_{α,c}| for a conditional basis
/// distribution. `basis_given_bit[c][α]` is Pr[α|c]; each row must sum to 1.
/// Uniform rows give ρ0 = diag(y, 1−y) and ρ1 = diag(1−y, y).
pub fn honest_mixtures(
    y: f64,
    basis_given_bit: [[f64; 2]; 2],
) -> Result<(QubitDensity, QubitDensity)> {
    check_y(y)?;
    for (c, row) in basis_given_bit.iter().enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Domain(format!(
                "conditional probabilities out of range in row {c}"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "conditional row {c} sums to {s}, expected 1"
            )));
        }
    }
    let mut out = [[[0.0f64; 2]; 2]; 2];
    for c in 0..2u8 {
        for alpha in 0..2u8 {
            let p = basis_given_bit[c as usize][alpha as usize];
            let s = state_vector(alpha, c, y)?;
            let [a, b] = s.amplitudes;
            let m = &mut out[c as usize];
            m[0][0] += p * a * a;
            m[0][1] += p * a * b;
            m[1][0] += p * a * b;
            m[1][1] += p * b * b;
        }
    }
    Ok((QubitDensity(out[0]), QubitDensity(out[1])))
}

/// Two-photon mixtures σ'_c = Σ_α Pr[α|c] (|Φ_{α,c}⟩⟨Φ_{α,c}|)^⊗2.
pub fn two_photon_mixtures(
    y: f64,
    basis_given_bit: [[f64; 2]; 2],
) -> Result<(TwoPhotonDensity, TwoPhotonDensity)> {
    check_y(y)?;
    let mut out = [[[0.0f64; 4]; 4]; 2];
    for c in 0..2u8 {
        for alpha in 0..2u8 {
            let p = basis_given_bit[c as usize][alpha as usize];
            let s = state_vector(alpha, c, y)?;
            let [a, b] = s.amplitudes;
            // Tensor square of the amplitude vector.
            let v = [a * a, a * b, b * a, b * b];
            for i in 0..4 {
                for j in 0..4 {
                    out[c as usize][i][j] += p * v[i] * v[j];
                }
            }
        }
    }
    Ok((TwoPhotonDensity(out[0]), TwoPhotonDensity(out[1])))
}

/// Solves ρ0 = y ξ0 + (1−y) ξ1 and ρ1 = (1−y) ξ0 + y ξ1 for (ξ0, ξ1).
///
/// For the uniform honest mixtures the solution is the pair of computational
/// basis projectors. Fails if the decomposition is not positive.
pub fn xi_decompose(
    rho0: &QubitDensity,
    rho1: &QubitDensity,
    y: f64,
) -> Result<(QubitDensity, QubitDensity)> {
    check_y(y)?;
    let denom = 2.0 * y - 1.0;
    if denom < 1e-9 {
        return Err(Error::Domain(format!(
            "decomposition requires y > 1/2, got {y}"
        )));
    }
    let mut xi0 = [[0.0f64; 2]; 2];
    let mut xi1 = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            xi0[i][j] = (y * rho0.0[i][j] - (1.0 - y) * rho1.0[i][j]) / denom;
            xi1[i][j] = (y * rho1.0[i][j] - (1.0 - y) * rho0.0[i][j]) / denom;
        }
    }
    for m in [&xi0, &xi1] {
        for ev in sym_eigenvalues(m) {
            if ev < -PSD_TOL {
                return Err(Error::Invariant(format!(
                    "xi decomposition produced eigenvalue {ev} < -{PSD_TOL}"
                )));
            }
        }
    }
    Ok((QubitDensity(xi0), QubitDensity(xi1)))
}

/// Optimal two-hypothesis guessing probability (Helstrom):
/// 1/2 + (1/2)‖p·ρA − (1−p)·ρB‖_tr with the trace norm computed as the sum
/// of absolute eigenvalues of the weighted difference.
pub fn helstrom(rho_a: &QubitDensity, rho_b: &QubitDensity, prior_a: f64) -> Result<f64> {
    helstrom_generic(&rho_a.0, &rho_b.0, prior_a)
}

/// Helstrom probability for the two-photon (4×4) case.
pub fn helstrom_two_photon(
    rho_a: &TwoPhotonDensity,
    rho_b: &TwoPhotonDensity,
    prior_a: f64,
) -> Result<f64> {
    helstrom_generic(&rho_a.0, &rho_b.0, prior_a)
}

fn helstrom_generic<const N: usize>(
    a: &[[f64; N]; N],
    b: &[[f64; N]; N],
    prior_a: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&prior_a) {
        return Err(Error::Domain(format!(
            "prior must lie in [0,1], got {prior_a}"
        )));
    }
    for m in [a, b] {
        for i in 0..N {
            for j in (i + 1)..N {
                if (m[i][j] - m[j][i]).abs() > 1e-9 {
                    return Err(Error::Domain("non-symmetric density matrix".into()));
                }
            }
        }
    }
    let mut diff = [[0.0f64; N]; N];
    for i in 0..N {
        for j in 0..N {
            diff[i][j] = prior_a * a[i][j] - (1.0 - prior_a) * b[i][j];
        }
    }
    let trace_norm: f64 = sym_eigenvalues(&diff).iter().map(|e| e.abs()).sum();
    Ok(0.5 + 0.5 * trace_norm)
}

/// Eigenvalues of a real symmetric matrix, ascending. Closed form at N = 2,
/// cyclic Jacobi sweeps otherwise; exact to ~1e-14 at the sizes in scope.
pub(crate) fn sym_eigenvalues<const N: usize>(m: &[[f64; N]; N]) -> [f64; N] {
    let mut evs = [0.0f64; N];
    if N == 2 {
        let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
        let t = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        evs[0] = t - r;
        evs[1] = t + r;
        return evs;
    }
    let mut w = *m;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..N {
            for j in (i + 1)..N {
                off += w[i][j] * w[i][j];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if w[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (w[q][q] - w[p][p]) / (2.0 * w[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let (wkp, wkq) = (w[k][p], w[k][q]);
                    w[k][p] = c * wkp - s * wkq;
                    w[k][q] = s * wkp + c * wkq;
                }
                for k in 0..N {
                    let (wpk, wqk) = (w[p][k], w[q][k]);
                    w[p][k] = c * wpk - s * wqk;
                    w[q][k] = s * wpk + c * wqk;
                }
            }
        }
    }
    for i in 0..N {
        evs[i] = w[i][i];
    }
    evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    evs
}

pub(crate) const UNIFORM_CONDITIONALS: [[f64; 2]; 2] = [[0.5, 0.5], [0.5, 0.5]];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn state_amplitudes_match_definition() {
        let s = state_vector(0, 0, 0.88).unwrap();
        assert!((s.amplitudes[0] - 0.88f64.sqrt()).abs() < 1e-15);
        assert!((s.amplitudes[1] - 0.12f64.sqrt()).abs() < 1e-15);
        assert!((s.amplitudes[0] - 0.93808).abs() < 1e-5);
        assert!((s.amplitudes[1] - 0.34641).abs() < 1e-5);

        // BB84 |−⟩ at y = 1/2.
        let m = state_vector(1, 0, 0.5).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.amplitudes[0] - r).abs() < 1e-5);
        assert!((m.amplitudes[1] + r).abs() < 1e-5);
    }

    #[test]
    fn states_are_normalized_and_same_basis_orthogonal() {
        let mut rng = Rng::new(1);
        for _ in 0..200 {
            let y = 0.5 + 0.5 * rng.next_f64() * 0.999;
            for alpha in 0..2 {
                let s0 = state_vector(alpha, 0, y).unwrap();
                let s1 = state_vector(alpha, 1, y).unwrap();
                assert!((s0.inner(&s0) - 1.0).abs() < 1e-12);
                assert!((s1.inner(&s1) - 1.0).abs() < 1e-12);
                assert!(s0.inner(&s1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn y_domain_is_enforced() {
        assert!(state_vector(0, 0, 0.4).is_err());
        assert!(state_vector(0, 0, 1.0).is_err());
        assert!(state_vector(0, 0, 0.5).is_ok());
        assert!(state_vector(2, 0, 0.8).is_err());
    }

    #[test]
    fn overlap_values() {
        let y = 0.88;
        let a = state_vector(0, 0, y).unwrap();
        let b = state_vector(1, 0, y).unwrap();
        // Cross-basis same-bit overlap is (2y−1)².
        assert!((overlap_sq(&a, &b).unwrap() - 0.5776).abs() < 1e-12);
        // Cross-basis cross-bit overlap is 4y(1−y).
        let c = state_vector(1, 1, y).unwrap();
        assert!((overlap_sq(&a, &c).unwrap() - 4.0 * y * (1.0 - y)).abs() < 1e-12);
        // Any state against itself.
        assert!((overlap_sq(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        // (2y−1)² vanishes at y = 1/2.
        let p = state_vector(0, 0, 0.5).unwrap();
        let q = state_vector(1, 0, 0.5).unwrap();
        assert!(overlap_sq(&p, &q).unwrap() < 1e-12);
        // Mismatched coefficients are rejected.
        let r = state_vector(0, 0, 0.6).unwrap();
        assert!(overlap_sq(&a, &r).is_err());
    }

    #[test]
    fn born_weights_sum_to_one() {
        let mut rng = Rng::new(2);
        for _ in 0..50 {
            let y = 0.5 + 0.499 * rng.next_f64();
            for alpha in 0..2 {
                for c in 0..2 {
                    for beta in 0..2 {
                        let s = state_vector(alpha, c, y).unwrap();
                        let m0 = state_vector(beta, 0, y).unwrap();
                        let m1 = state_vector(beta, 1, y).unwrap();
                        let total = overlap_sq(&s, &m0).unwrap() + overlap_sq(&s, &m1).unwrap();
                        assert!((total - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_mixtures_are_diagonal() {
        let (r0, r1) = honest_mixtures(0.88, UNIFORM_CONDITIONALS).unwrap();
        let e0 = r0.eigenvalues();
        assert!((e0[1] - 0.88).abs() < 1e-12 && (e0[0] - 0.12).abs() < 1e-12);
        assert!(r0.0[0][1].abs() < 1e-12);
        assert!((r1.0[0][0] - 0.12).abs() < 1e-12 && (r1.0[1][1] - 0.88).abs() < 1e-12);

        let (i0, i1) = honest_mixtures(0.5, UNIFORM_CONDITIONALS).unwrap();
        for m in [i0, i1] {
            assert!((m.0[0][0] - 0.5).abs() < 1e-12 && (m.0[1][1] - 0.5).abs() < 1e-12);
            assert!(m.0[0][1].abs() < 1e-12);
        }
    }

    #[test]
    fn skewed_mixtures_keep_unit_trace() {
        let (r0, r1) = honest_mixtures(0.88, [[0.505, 0.495], [0.495, 0.505]]).unwrap();
        assert!((r0.0[0][0] + r0.0[1][1] - 1.0).abs() < 1e-12);
        assert!((r1.0[0][0] + r1.0[1][1] - 1.0).abs() < 1e-12);
        assert!(honest_mixtures(0.88, [[0.6, 0.5], [0.5, 0.5]]).is_err());
    }

    #[test]
    fn mixture_eigenvalues_are_y_and_one_minus_y() {
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let y = 0.5 + 1e-6 + (0.5 - 2e-6) * rng.next_f64();
            let (r0, r1) = honest_mixtures(y, UNIFORM_CONDITIONALS).unwrap();
            for m in [r0, r1] {
                let e = m.eigenvalues();
                assert!((e[1] - y).abs() < 1e-12, "max eigenvalue at y={y}");
                assert!((e[0] - (1.0 - y)).abs() < 1e-12, "min eigenvalue at y={y}");
            }
        }
    }

    #[test]
    fn xi_decomposition_reconstructs() {
        // At y = 0.88 the solution is the pair of basis projectors.
        let (r0, r1) = honest_mixtures(0.88, UNIFORM_CONDITIONALS).unwrap();
        let (x0, x1) = xi_decompose(&r0, &r1, 0.88).unwrap();
        assert!((x0.0[0][0] - 1.0).abs() < 1e-10 && x0.0[1][1].abs() < 1e-10);
        assert!(x1.0[0][0].abs() < 1e-10 && (x1.0[1][1] - 1.0).abs() < 1e-10);

        for y in [0.6, 0.75, 0.9] {
            let (r0, r1) = honest_mixtures(y, UNIFORM_CONDITIONALS).unwrap();
            let (x0, x1) = xi_decompose(&r0, &r1, y).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let rec0 = y * x0.0[i][j] + (1.0 - y) * x1.0[i][j];
                    let rec1 = (1.0 - y) * x0.0[i][j] + y * x1.0[i][j];
                    assert!((rec0 - r0.0[i][j]).abs() < 1e-10);
                    assert!((rec1 - r1.0[i][j]).abs() < 1e-10);
                }
            }
        }

        // Near y = 1 the xi states approach the mixtures themselves.
        let (r0, r1) = honest_mixtures(0.999, UNIFORM_CONDITIONALS).unwrap();
        let (x0, _) = xi_decompose(&r0, &r1, 0.999).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((x0.0[i][j] - r0.0[i][j]).abs() < 5e-3);
            }
        }
    }

    #[test]
    fn xi_decomposition_rejects_non_mixtures() {
        // Mixtures that are too pure for the claimed coefficient make the
        // solution indefinite: diag(a, 1−a) with a < 1−y.
        let (r0, r1) = honest_mixtures(0.95, UNIFORM_CONDITIONALS).unwrap();
        let err = xi_decompose(&r1, &r0, 0.88).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn helstrom_on_single_photon_mixtures_equals_y() {
        let (r0, r1) = honest_mixtures(0.88, UNIFORM_CONDITIONALS).unwrap();
        assert!((helstrom(&r0, &r1, 0.5).unwrap() - 0.88).abs() < 1e-12);

        // Identical hypotheses cannot be told apart.
        assert!((helstrom(&r0, &r0, 0.5).unwrap() - 0.5).abs() < 1e-12);

        let mut rng = Rng::new(4);
        for _ in 0..100 {
            let y = 0.5 + 1e-9 + (0.5 - 2e-9) * rng.next_f64();
            let (a, b) = honest_mixtures(y, UNIFORM_CONDITIONALS).unwrap();
            assert!(
                (helstrom(&a, &b, 0.5).unwrap() - y).abs() < 1e-10,
                "y = {y}"
            );
        }
    }

    #[test]
    fn helstrom_on_two_photon_mixtures_equals_y() {
        let (s0, s1) = two_photon_mixtures(0.88, UNIFORM_CONDITIONALS).unwrap();
        assert!((helstrom_two_photon(&s0, &s1, 0.5).unwrap() - 0.88).abs() < 1e-10);
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let y = 0.5 + 1e-6 + (0.5 - 2e-6) * rng.next_f64();
            let (a, b) = two_photon_mixtures(y, UNIFORM_CONDITIONALS).unwrap();
            assert!(
                (helstrom_two_photon(&a, &b, 0.5).unwrap() - y).abs() < 1e-10,
                "y = {y}"
            );
        }
    }

    #[test]
    fn density_validation() {
        assert!(QubitDensity::new([[0.5, 0.1], [0.1, 0.5]]).is_ok());
        assert!(QubitDensity::new([[0.5, 0.2], [0.1, 0.5]]).is_err());
        assert!(QubitDensity::new([[0.9, 0.0], [0.0, 0.3]]).is_err());
        assert!(QubitDensity::new([[1.2, 0.0], [0.0, -0.2]]).is_err());
        let bad = helstrom_generic(&[[0.5, 0.3], [0.1, 0.5]], &[[0.5, 0.0], [0.0, 0.5]], 0.5);
        assert!(bad.is_err());
    }
}
