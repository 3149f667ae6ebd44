//! Toy-size versions of the mechanisms under analysis: one-time pad,
//! Toeplitz hashing, LFSR keystreams and a polynomial-evaluation MAC.

mod lfsr;
mod mac;
mod toeplitz;

use std::fmt;

pub use lfsr::{lfsr_keystream, window_histogram, Keystream, Lfsr, LfsrSpec};
pub use mac::{mac_epsilon, MacFamily, MAC_BUDGET};
pub use toeplitz::{toeplitz_hash, ToeplitzMatrix, TOEPLITZ_ENUM_MAX_DIAGONALS};

use crate::error::{Error, Result};

/// A bit string. Index 0 is the least significant and first transmitted bit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    /// The low `len` bits of `word`.
    pub fn from_word(word: u64, len: usize) -> Self {
        Bits((0..len).map(|i| i < 64 && (word >> i) & 1 == 1).collect())
    }

    pub fn to_word(&self) -> Option<u64> {
        if self.0.len() > 64 {
            return None;
        }
        Some(self.0.iter().enumerate().fold(0, |w, (i, &b)| w | ((b as u64) << i)))
    }

    /// Parse hex where byte `j` of the string carries bits `8j..8j+8`, low bit
    /// first. Bits beyond `len` must be zero.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        if !hex.len().is_multiple_of(2) || hex.len() / 2 != len.div_ceil(8) {
            return Err(Error::range("hex", format!("`{hex}` does not encode {len} bits")));
        }
        let mut bits = Vec::with_capacity(len);
        for (j, pair) in hex.as_bytes().chunks(2).enumerate() {
            let s = std::str::from_utf8(pair).map_err(|_| Error::range("hex", "non-ascii"))?;
            let byte = u8::from_str_radix(s, 16).map_err(|_| Error::range("hex", format!("bad byte `{s}`")))?;
            for b in 0..8 {
                let bit = (byte >> b) & 1 == 1;
                if 8 * j + b < len {
                    bits.push(bit);
                } else if bit {
                    return Err(Error::range("hex", "nonzero padding bits"));
                }
            }
        }
        Ok(Bits(bits))
    }

    pub fn to_hex(&self) -> String {
        self.0
            .chunks(8)
            .map(|c| {
                let byte = c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i));
                format!("{byte:02x}")
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: other.len() });
        }
        Ok(Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

/// Bit 0 first.
impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::range("bits", format!("unexpected character `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }
}

/// `y_i = x_i xor k_i`.
pub fn otp_encrypt(x: &Bits, k: &Bits) -> Result<Bits> {
    x.xor(k)
}

pub fn otp_decrypt(y: &Bits, k: &Bits) -> Result<Bits> {
    y.xor(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn otp_vectors() {
        assert_eq!(otp_encrypt(&b("0000"), &b("0000")).unwrap(), b("0000"));
        assert_eq!(otp_encrypt(&b("1010"), &b("1111")).unwrap(), b("0101"));
        assert!(otp_encrypt(&b("101"), &b("1111")).is_err());
    }

    #[test]
    fn otp_roundtrip_exhaustive() {
        for x in 0..16 {
            for k in 0..16 {
                let (xb, kb) = (Bits::from_word(x, 4), Bits::from_word(k, 4));
                let y = otp_encrypt(&xb, &kb).unwrap();
                assert_eq!(otp_decrypt(&y, &kb).unwrap(), xb);
            }
        }
    }

    #[test]
    fn otp_ciphertext_uniform_for_each_plaintext() {
        for x in 0..16u64 {
            let mut seen = [0u32; 16];
            for k in 0..16u64 {
                let y = otp_encrypt(&Bits::from_word(x, 4), &Bits::from_word(k, 4)).unwrap();
                seen[y.to_word().unwrap() as usize] += 1;
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn hex_roundtrip() {
        let bits = b("1000000001");
        assert_eq!(bits.to_hex(), "0102");
        assert_eq!(Bits::from_hex("0102", 10).unwrap(), bits);
        assert!(Bits::from_hex("01ff", 10).is_err());
        assert!(Bits::from_hex("01", 10).is_err());
        assert_eq!(Bits::from_word(0b1101, 4).to_string(), "1011");
        assert_eq!(b("1011").to_word(), Some(0b1101));
    }
}
