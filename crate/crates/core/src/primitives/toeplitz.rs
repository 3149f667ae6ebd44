use rand::Rng;

use super::Bits;
use crate::dist::KeyDistribution;
use crate::error::{Error, Result};

/// Largest diagonal count for which the whole family may be enumerated.
pub const TOEPLITZ_ENUM_MAX_DIAGONALS: u32 = 24;

/// An `rows x cols` Toeplitz matrix over GF(2), constant along diagonals:
/// `entry(i, j) = diagonals[i - j + cols - 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ToeplitzMatrix {
    rows: u32,
    cols: u32,
    diagonals: u64,
}

impl ToeplitzMatrix {
    pub fn new(rows: u32, cols: u32, diagonals: u64) -> Result<Self> {
        if rows == 0 || cols == 0 || cols > 63 || rows + cols - 1 > 64 {
            return Err(Error::range("(rows, cols)", format!("({rows}, {cols})")));
        }
        let width = rows + cols - 1;
        if width < 64 && diagonals >> width != 0 {
            return Err(Error::range("diagonals", format!("more than {width} bits")));
        }
        Ok(Self { rows, cols, diagonals })
    }

    pub fn identity(n: u32) -> Result<Self> {
        Self::new(n, n, 1u64 << (n - 1))
    }

    pub fn random<R: Rng + ?Sized>(rows: u32, cols: u32, rng: &mut R) -> Result<Self> {
        let width = rows + cols - 1;
        let diag = if width >= 64 { rng.gen() } else { rng.gen::<u64>() & ((1u64 << width) - 1) };
        Self::new(rows, cols, diag)
    }

    /// Every matrix of the given shape, in diagonal order.
    pub fn family(rows: u32, cols: u32) -> Result<impl Iterator<Item = ToeplitzMatrix>> {
        let width = rows + cols - 1;
        if width > TOEPLITZ_ENUM_MAX_DIAGONALS {
            return Err(Error::BudgetExceeded {
                required: 1u128 << width,
                budget: 1u128 << TOEPLITZ_ENUM_MAX_DIAGONALS,
            });
        }
        Ok((0..1u64 << width).map(move |d| ToeplitzMatrix { rows, cols, diagonals: d }))
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn diagonals(&self) -> u64 {
        self.diagonals
    }

    pub fn entry(&self, i: u32, j: u32) -> bool {
        let idx = i + self.cols - 1 - j;
        (self.diagonals >> idx) & 1 == 1
    }

    /// Row `i` as a column bitmask.
    pub fn row_mask(&self, i: u32) -> u64 {
        // Row i reads diagonals[i + cols - 1 - j] for j = 0..cols, i.e. the
        // window diagonals[i .. i + cols] reversed.
        let window = (self.diagonals >> i) & ((1u64 << self.cols) - 1);
        window.reverse_bits() >> (64 - self.cols)
    }

    /// Product with the input word (bit `j` = input bit `j`).
    pub fn apply_word(&self, x: u64) -> u64 {
        (0..self.rows).fold(0, |acc, i| acc | ((((self.row_mask(i) & x).count_ones() & 1) as u64) << i))
    }

    pub fn rank(&self) -> u32 {
        let mut rows: Vec<u64> = (0..self.rows).map(|i| self.row_mask(i)).collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let bit = 1u64 << col;
            if let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) {
                rows.swap(rank, pivot);
                let p = rows[rank];
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && *row & bit != 0 {
                        *row ^= p;
                    }
                }
                rank += 1;
            }
        }
        rank as u32
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.rows.min(self.cols)
    }

    /// Distribution of the hash output when the input is drawn from `p`.
    pub fn pushforward(&self, p: &KeyDistribution) -> Result<KeyDistribution> {
        if p.n() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols as usize, actual: p.n() as usize });
        }
        p.pushforward(self.rows, |k| self.apply_word(k))
    }
}

pub fn toeplitz_hash(input: &Bits, t: &ToeplitzMatrix) -> Result<Bits> {
    if input.len() != t.cols as usize {
        return Err(Error::DimensionMismatch { expected: t.cols as usize, actual: input.len() });
    }
    let out =
        (0..t.rows).map(|i| (0..t.cols).filter(|&j| t.entry(i, j) && input.get(j as usize)).count() % 2 == 1).collect();
    Ok(Bits::from_bools(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_zero() {
        let id = ToeplitzMatrix::identity(6).unwrap();
        for x in 0..64 {
            assert_eq!(id.apply_word(x), x);
        }
        let t = ToeplitzMatrix::new(4, 8, 0b10_1101_0011).unwrap();
        assert_eq!(toeplitz_hash(&Bits::zeros(8), &t).unwrap(), Bits::zeros(4));
    }

    // Fixture worked by hand. Diagonals (index 0..11) = 1100 1011 010, so with
    // cols = 8 row i is diagonals[i+7], diagonals[i+6], ..., diagonals[i]:
    //   row 0: 1 1 0 1 0 0 1 1
    //   row 1: 0 1 1 0 1 0 0 1
    //   row 2: 1 0 1 1 0 1 0 0
    //   row 3: 0 1 0 1 1 0 1 0
    // Input (bit 0 first) 1 0 1 1 0 0 1 0 selects columns 0, 2, 3, 6, giving
    // row parities 1 1 1 0.
    #[test]
    fn hand_fixture() {
        let diag = Bits::from_hex("d302", 11).unwrap();
        assert_eq!(diag.to_string(), "11001011010");
        let t = ToeplitzMatrix::new(4, 8, diag.to_word().unwrap()).unwrap();
        let row0: String = (0..8).map(|j| if t.entry(0, j) { '1' } else { '0' }).collect();
        assert_eq!(row0, "11010011");
        let x = Bits::from_hex("4d", 8).unwrap();
        assert_eq!(x.to_string(), "10110010");
        let y = toeplitz_hash(&x, &t).unwrap();
        assert_eq!(y.to_string(), "1110");
        assert_eq!(y.to_hex(), "07");
        assert_eq!(t.apply_word(x.to_word().unwrap()), y.to_word().unwrap());
    }

    #[test]
    fn row_masks_match_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let rows = rng.gen_range(1..10);
            let cols = rng.gen_range(1..12);
            let t = ToeplitzMatrix::random(rows, cols, &mut rng).unwrap();
            for i in 0..rows {
                for j in 0..cols {
                    assert_eq!((t.row_mask(i) >> j) & 1 == 1, t.entry(i, j));
                }
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(ToeplitzMatrix::identity(5).unwrap().rank(), 5);
        assert_eq!(ToeplitzMatrix::new(3, 4, 0).unwrap().rank(), 0);
        // All-ones 3x4 matrix has rank 1.
        assert_eq!(ToeplitzMatrix::new(3, 4, 0b11_1111).unwrap().rank(), 1);
    }

    #[test]
    fn shape_errors() {
        assert!(ToeplitzMatrix::new(0, 4, 0).is_err());
        assert!(ToeplitzMatrix::new(2, 2, 0b1000).is_err());
        let t = ToeplitzMatrix::new(2, 3, 1).unwrap();
        assert!(toeplitz_hash(&Bits::zeros(4), &t).is_err());
        assert_eq!(ToeplitzMatrix::family(4, 8).unwrap().count(), 1 << 11);
        assert!(ToeplitzMatrix::family(12, 14).is_err());
    }
}
