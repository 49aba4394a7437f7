//! Seedable counter-based pseudorandom generator with stream splitting.
//!
//! The generator is SplitMix64: output `i` of a stream with key `k` is
//! `mix64(k + (i+1)*GOLDEN)`, where `mix64` is the usual avalanche function.
//! Because each output depends only on `(key, counter)`, streams can be
//! replayed from their key alone, and independent substreams are derived by
//! folding labels into the key. Sessions split streams by
//! `(session id, party, purpose)` so that concurrent workers never share
//! state and every transcript is reproducible from its seeds.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream purposes, folded into derived keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    AliceChoices = 1,
    BobBases = 2,
    BobBit = 3,
    Photons = 4,
    Detection = 5,
    Commitment = 6,
    Worker = 7,
}

/// A deterministic counter-based random stream.
#[derive(Debug, Clone)]
pub struct Rng {
    key: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            key: mix64(seed ^ GOLDEN),
            counter: 0,
        }
    }

    /// Derives an independent substream keyed by `labels`.
    pub fn derive(&self, labels: &[u64]) -> Rng {
        let mut key = self.key;
        for (i, &label) in labels.iter().enumerate() {
            key = mix64(key ^ label.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
        }
        Rng { key, counter: 0 }
    }

    /// Substream for one party/purpose pair within a session.
    pub fn stream(&self, session: u64, party: u64, purpose: Purpose) -> Rng {
        self.derive(&[session, party, purpose as u64])
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() & 1) as u8
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Rejection sampling to avoid modulo bias.
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Poisson sample by inversion of the exponential product (Knuth).
    /// Adequate for the small means used by the pulse models.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let limit = (-mean).exp();
        let mut k = 0u64;
        let mut prod = self.next_f64();
        while prod > limit {
            k += 1;
            prod *= self.next_f64();
        }
        k
    }

    /// Fills `buf` with random bytes.
    pub fn fill_bytes(&mut self, buf: &mut [u8]) {
        for chunk in buf.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}
