//! Commitments from an injective one-way permutation with a Goldreich-Levin
//! style hardcore bit.
//!
//! The default instantiation is modular exponentiation x ↦ g^x mod p over
//! a published 2048-bit safe-prime group: the generator's order vastly
//! exceeds the 256-bit input domain, so the map is injective and neither
//! party can open a commitment to a different string. A hash would not be
//! provably injective. The permutation is pluggable so tests can swap in a
//! cheap mixing permutation for exhaustive checks.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// An injective map on fixed-length bit strings.
pub trait OneWayPermutation: Send + Sync {
    fn name(&self) -> &'static str;
    /// Input length in bytes.
    fn input_len(&self) -> usize;
    fn apply(&self, x: &[u8]) -> Vec<u8>;
}

/// The RFC 3526 2048-bit MODP group modulus (a safe prime), generator 2.
const MODP_2048_HEX: &str = concat!(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74",
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437",
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED",
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05",
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB",
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B",
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718",
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
);

/// x ↦ g^x mod p with x read as a big-endian integer. Injective for inputs
/// shorter than the group order, which a 256-bit domain satisfies with
/// enormous margin.
pub struct ModExp {
    modulus: BigUint,
    generator: BigUint,
    input_len: usize,
}

impl ModExp {
    /// The published 2048-bit group with 32-byte inputs.
    pub fn standard() -> ModExp {
        ModExp {
            modulus: BigUint::parse_bytes(MODP_2048_HEX.as_bytes(), 16).expect("constant parses"),
            generator: BigUint::from(2u8),
            input_len: 32,
        }
    }
}

impl OneWayPermutation for ModExp {
    fn name(&self) -> &'static str {
        "modexp-2048"
    }

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn apply(&self, x: &[u8]) -> Vec<u8> {
        let exp = BigUint::from_bytes_be(x);
        debug_assert!(!self.modulus.is_zero());
        self.generator.modpow(&exp, &self.modulus).to_bytes_be()
    }
}

/// A 16-bit mixing permutation (xorshift-multiply rounds) for exhaustive
/// tests. Trivially invertible, hence not one-way; what the tests need is
/// injectivity and enough diffusion to defeat a linear probe.
pub struct ToyPermutation;

impl OneWayPermutation for ToyPermutation {
    fn name(&self) -> &'static str {
        "toy-16"
    }

    fn input_len(&self) -> usize {
        2
    }

    fn apply(&self, x: &[u8]) -> Vec<u8> {
        let mut v = u16::from_be_bytes([x[0], x[1]]);
        for round in 0..3 {
            v ^= v >> 7;
            v = v.wrapping_mul(0x6B2F | 1).rotate_left(5 + round);
            v ^= v >> 9;
        }
        v.to_be_bytes().to_vec()
    }
}

/// Hardcore predicate h(x) = ⟨x, r⟩ mod 2 against a public random string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardcorePredicate {
    pub mask: Vec<u8>,
}

impl HardcorePredicate {
    pub fn random(len: usize, rng: &mut Rng) -> HardcorePredicate {
        let mut mask = vec![0u8; len];
        rng.fill_bytes(&mut mask);
        HardcorePredicate { mask }
    }

    pub fn eval(&self, x: &[u8]) -> u8 {
        let acc = x
            .iter()
            .zip(self.mask.iter())
            .fold(0u8, |acc, (a, b)| acc ^ (a & b));
        (acc.count_ones() & 1) as u8
    }
}

/// Scheme parameters both parties agree on before the session.
#[derive(Clone)]
pub struct OwfScheme {
    pub perm: Arc<dyn OneWayPermutation>,
    pub predicate: HardcorePredicate,
}

impl OwfScheme {
    /// Default scheme: the 2048-bit group with a predicate string drawn
    /// from the given seed.
    pub fn standard(seed: u64) -> OwfScheme {
        let perm = Arc::new(ModExp::standard());
        let mut rng = Rng::new(seed).derive(&[0x6f77665f]);
        let predicate = HardcorePredicate::random(perm.input_len(), &mut rng);
        OwfScheme { perm, predicate }
    }

    pub fn toy(seed: u64) -> OwfScheme {
        let perm = Arc::new(ToyPermutation);
        let mut rng = Rng::new(seed).derive(&[0x746f79]);
        let predicate = HardcorePredicate::random(perm.input_len(), &mut rng);
        OwfScheme { perm, predicate }
    }

    /// Hash of the agreed parameters, carried in HELLO.
    pub fn agreement_hash(&self) -> u64 {
        let mut text = String::from(self.perm.name());
        for b in &self.predicate.mask {
            text.push_str(&format!("{b:02x}"));
        }
        fnv64(text.as_bytes())
    }

    pub fn draw_input(&self, rng: &mut Rng) -> Vec<u8> {
        let mut x = vec![0u8; self.perm.input_len()];
        rng.fill_bytes(&mut x);
        x
    }
}

pub(crate) fn fnv64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// A commitment to the hardcore bit of a secret string: the image f(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commitment {
    pub scheme: String,
    /// f(x), hex encoded.
    pub image: String,
    pub opened: bool,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unhex(text: &str) -> Result<Vec<u8>> {
    if text.len() % 2 != 0 {
        return Err(Error::Domain("odd-length hex string".into()));
    }
    (0..text.len() / 2)
        .map(|i| {
            u8::from_str_radix(&text[2 * i..2 * i + 2], 16)
                .map_err(|e| Error::Domain(format!("bad hex: {e}")))
        })
        .collect()
}

/// Commits to `x`: publishes f(x), binding h(x) by injectivity.
pub fn owf_commit(scheme: &OwfScheme, x: &[u8]) -> Result<Commitment> {
    if x.len() != scheme.perm.input_len() {
        return Err(Error::Domain(format!(
            "input is {} bytes, scheme wants {}",
            x.len(),
            scheme.perm.input_len()
        )));
    }
    Ok(Commitment {
        scheme: scheme.perm.name().into(),
        image: hex(&scheme.perm.apply(x)),
        opened: false,
    })
}

/// Verifies an opening: the revealed string must map to the committed
/// image. Any single changed bit changes the image, by injectivity.
pub fn owf_verify(scheme: &OwfScheme, commitment: &Commitment, x: &[u8]) -> bool {
    x.len() == scheme.perm.input_len() && hex(&scheme.perm.apply(x)) == commitment.image
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_open_round_trip() {
        let scheme = OwfScheme::standard(7);
        let mut rng = Rng::new(1);
        let x = scheme.draw_input(&mut rng);
        let c = owf_commit(&scheme, &x).unwrap();
        assert!(owf_verify(&scheme, &c, &x));
        let mut tampered = x.clone();
        tampered[5] ^= 0x10;
        assert!(!owf_verify(&scheme, &c, &tampered));
    }

    #[test]
    fn binding_exhaustive_over_all_bit_flips() {
        // Every one of the 256 single-bit modifications at open time is
        // rejected: injectivity means a different preimage has a different
        // image.
        let scheme = OwfScheme::standard(8);
        let mut rng = Rng::new(2);
        let x = scheme.draw_input(&mut rng);
        let c = owf_commit(&scheme, &x).unwrap();
        for bit in 0..(x.len() * 8) {
            let mut flipped = x.clone();
            flipped[bit / 8] ^= 1 << (bit % 8);
            assert!(!owf_verify(&scheme, &c, &flipped), "bit {bit} accepted");
        }
    }

    #[test]
    fn toy_permutation_is_injective() {
        let mut seen = vec![false; 1 << 16];
        let perm = ToyPermutation;
        for v in 0..=u16::MAX {
            let img = perm.apply(&v.to_be_bytes());
            let idx = u16::from_be_bytes([img[0], img[1]]) as usize;
            assert!(!seen[idx], "collision at {v}");
            seen[idx] = true;
        }
    }

    #[test]
    fn hardcore_bit_is_balanced() {
        let scheme = OwfScheme::standard(9);
        let mut rng = Rng::new(3);
        let n = 100_000;
        let mut ones = 0u64;
        for _ in 0..n {
            let x = scheme.draw_input(&mut rng);
            ones += scheme.predicate.eval(&x) as u64;
        }
        let f = ones as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((f - 0.5).abs() < 3.0 * sigma, "h balance {f}");
    }

    /// The exhaustive-search-free distinguisher: a logistic probe over the
    /// image bits must not predict the hardcore bit.
    fn probe_accuracy(scheme: &OwfScheme, samples: usize, seed: u64) -> f64 {
        let mut rng = Rng::new(seed);
        let mut data: Vec<(Vec<f64>, f64)> = Vec::with_capacity(samples);
        let feature_len = scheme
            .perm
            .apply(&vec![0u8; scheme.perm.input_len()])
            .len()
            .max(
                scheme
                    .perm
                    .apply(&vec![0xffu8; scheme.perm.input_len()])
                    .len(),
            )
            * 8;
        for _ in 0..samples {
            let x = scheme.draw_input(&mut rng);
            let image = scheme.perm.apply(&x);
            let mut features = vec![0.0f64; feature_len];
            for (i, byte) in image.iter().enumerate() {
                for bit in 0..8 {
                    if i * 8 + bit < feature_len {
                        features[i * 8 + bit] = if byte >> bit & 1 == 1 { 1.0 } else { -1.0 };
                    }
                }
            }
            data.push((features, scheme.predicate.eval(&x) as f64));
        }
        let train = data.len() / 2;
        let mut w = vec![0.0f64; feature_len];
        let mut b = 0.0f64;
        let rate = 0.05;
        for _epoch in 0..4 {
            for (features, label) in &data[..train] {
                let z: f64 = b + w.iter().zip(features).map(|(w, f)| w * f).sum::<f64>();
                let p = 1.0 / (1.0 + (-z).exp());
                let g = p - label;
                b -= rate * g;
                for (wi, fi) in w.iter_mut().zip(features) {
                    *wi -= rate * g * fi;
                }
            }
        }
        let mut correct = 0usize;
        for (features, label) in &data[train..] {
            let z: f64 = b + w.iter().zip(features).map(|(w, f)| w * f).sum::<f64>();
            let predicted = if z > 0.0 { 1.0 } else { 0.0 };
            if predicted == *label {
                correct += 1;
            }
        }
        correct as f64 / (data.len() - train) as f64
    }

    #[test]
    fn hiding_probe_stays_at_chance_on_toy_scheme() {
        let acc = probe_accuracy(&OwfScheme::toy(4), 100_000, 44);
        let sigma = (0.25 / 50_000f64).sqrt();
        assert!((acc - 0.5).abs() < 3.0 * sigma, "probe accuracy {acc}");
    }

    #[test]
    fn hiding_probe_stays_at_chance_on_default_scheme() {
        // Smaller sample: each image costs a 2048-bit modexp.
        let acc = probe_accuracy(&OwfScheme::standard(5), 2_000, 45);
        let sigma = (0.25 / 1_000f64).sqrt();
        assert!((acc - 0.5).abs() < 3.0 * sigma, "probe accuracy {acc}");
    }
}
