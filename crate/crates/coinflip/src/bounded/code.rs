//! Linear-code syndromes and the two-universal extractor used by the
//! noisy-storage commitments.
//!
//! The code family is a shortened binary Hamming code in systematic form
//! H = [A | I_m]: every column is nonzero, so any single flipped bit
//! changes the syndrome. The extractor is the inner-product family
//! Ext(x, r) = ⟨x, r⟩ mod 2, which collides on distinct inputs for exactly
//! half of the seeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Parameters of the agreed code: block length, parity-check and generator
/// matrices over GF(2), extractor seed length, and the storage wait time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Block length (one committed half; a session prepares 2n pulses).
    pub n: usize,
    /// m×n parity-check matrix, bit per entry.
    pub parity: Vec<Vec<u8>>,
    /// (n−m)×n generator matrix with parity·generatorᵀ = 0.
    pub generator: Vec<Vec<u8>>,
    /// Length of the extractor seed strings in bits.
    pub hash_seed_len: usize,
    /// Wait time Δt in simulated ticks; the storage barrier fires once
    /// after the prepare stage.
    pub wait_ticks: u64,
}

impl CodeParams {
    /// Shortened Hamming-family code of block length `n` (n ≥ 3, even,
    /// since the prepared string splits into equal halves).
    pub fn hamming(n: usize) -> Result<CodeParams> {
        if n < 3 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "block length must be even and >= 4, got {n}"
            )));
        }
        let mut m = 2usize;
        while (1usize << m) - 1 < n {
            m += 1;
        }
        let data_cols = n - m;
        // Data columns: the non-unit Hamming columns (weight >= 2).
        let mut columns: Vec<usize> = Vec::with_capacity(data_cols);
        let mut v = 3usize;
        while columns.len() < data_cols {
            if !v.is_power_of_two() {
                columns.push(v);
            }
            v += 1;
            if v >= (1 << m) {
                return Err(Error::Domain(format!(
                    "block length {n} does not fit a shortened Hamming code with {m} checks"
                )));
            }
        }
        let mut parity = vec![vec![0u8; n]; m];
        for (j, &col) in columns.iter().enumerate() {
            for (i, row) in parity.iter_mut().enumerate() {
                row[j] = ((col >> i) & 1) as u8;
            }
        }
        for i in 0..m {
            parity[i][data_cols + i] = 1;
        }
        // Systematic generator G = [I | Aᵀ].
        let mut generator = vec![vec![0u8; n]; data_cols];
        for (j, row) in generator.iter_mut().enumerate() {
            row[j] = 1;
            for i in 0..m {
                row[data_cols + i] = parity[i][j];
            }
        }
        Ok(CodeParams {
            n,
            parity,
            generator,
            hash_seed_len: n,
            wait_ticks: 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.generator {
            let syn = syndrome(g, self)?;
            if syn.iter().any(|&b| b != 0) {
                return Err(Error::Invariant(
                    "generator row with nonzero syndrome".into(),
                ));
            }
        }
        Ok(())
    }

    /// Hash of the agreed parameters, carried in HELLO.
    pub fn agreement_hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("code serializes");
        super::owf::fnv64(text.as_bytes())
    }

    /// A random codeword (for tests constructing syndrome-preserving
    /// tampers).
    pub fn random_codeword(&self, rng: &mut Rng) -> Vec<u8> {
        let mut word = vec![0u8; self.n];
        for row in &self.generator {
            if rng.next_bit() == 1 {
                for (w, r) in word.iter_mut().zip(row) {
                    *w ^= r;
                }
            }
        }
        word
    }
}

/// Parity-check image of a bit string.
pub fn syndrome(x: &[u8], code: &CodeParams) -> Result<Vec<u8>> {
    if x.len() != code.n {
        return Err(Error::Domain(format!(
            "string length {} != block length {}",
            x.len(),
            code.n
        )));
    }
    Ok(code
        .parity
        .iter()
        .map(|row| row.iter().zip(x).fold(0u8, |acc, (h, b)| acc ^ (h & b)))
        .collect())
}

/// Two-universal extractor: ⟨x, r⟩ mod 2.
pub fn extract(x: &[u8], r: &[u8]) -> Result<u8> {
    if x.len() != r.len() {
        return Err(Error::Domain(format!(
            "extract length mismatch: {} vs {}",
            x.len(),
            r.len()
        )));
    }
    Ok(x.iter().zip(r).fold(0u8, |acc, (a, b)| acc ^ (a & b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_is_consistent() {
        for n in [4usize, 8, 16, 128] {
            let code = CodeParams::hamming(n).unwrap();
            code.validate().unwrap();
            assert_eq!(code.parity[0].len(), n);
        }
        assert!(CodeParams::hamming(7).is_err());
    }

    #[test]
    fn codewords_have_zero_syndrome() {
        let code = CodeParams::hamming(8).unwrap();
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let w = code.random_codeword(&mut rng);
            assert!(syndrome(&w, &code).unwrap().iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn single_bit_flips_change_the_syndrome() {
        let code = CodeParams::hamming(8).unwrap();
        let zero = vec![0u8; 8];
        for i in 0..8 {
            let mut x = zero.clone();
            x[i] = 1;
            let syn = syndrome(&x, &code).unwrap();
            assert!(syn.iter().any(|&b| b != 0), "column {i} is zero");
        }
    }

    #[test]
    fn extractor_basics() {
        let zeros = vec![0u8; 8];
        let mut rng = Rng::new(6);
        for _ in 0..20 {
            let mut r = vec![0u8; 8];
            for b in r.iter_mut() {
                *b = rng.next_bit();
            }
            assert_eq!(extract(&zeros, &r).unwrap(), 0);
        }
        assert!(extract(&zeros, &[0u8; 4]).is_err());
    }

    #[test]
    fn two_universality_exhaustive_at_n8() {
        // For every pair of distinct 8-bit strings, exactly half of the
        // 256 seeds collide the extractor outputs.
        let unpack = |v: usize| -> Vec<u8> { (0..8).map(|i| ((v >> i) & 1) as u8).collect() };
        for x in 0..256usize {
            for other in (x + 1)..256usize {
                let (a, b) = (unpack(x), unpack(other));
                let mut collisions = 0u32;
                for r in 0..256usize {
                    let seed = unpack(r);
                    if extract(&a, &seed).unwrap() == extract(&b, &seed).unwrap() {
                        collisions += 1;
                    }
                }
                assert_eq!(collisions, 128, "pair ({x}, {other})");
            }
        }
    }
}
