use super::Bits;
use crate::error::{Error, Result};

/// Fibonacci LFSR with feedback polynomial `taps`: bit `i` is the coefficient
/// of `x^i`, so `x^4 + x^3 + 1` is `0b1_1001`. The register satisfies
/// `s[t + L] = sum_{i < L} c_i s[t + i]` and outputs `s[t]`; the seed is the
/// first `L` output bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LfsrSpec {
    degree: u32,
    taps: u64,
}

impl LfsrSpec {
    pub fn new(degree: u32, taps: u64) -> Result<Self> {
        if !(1..=63).contains(&degree) {
            return Err(Error::range("degree", format!("{degree}")));
        }
        if taps >> degree != 1 {
            return Err(Error::range("taps", format!("{taps:#x} does not have degree {degree}")));
        }
        if taps & 1 == 0 {
            return Err(Error::range("taps", "constant term must be set (degenerate register)"));
        }
        Ok(Self { degree, taps })
    }

    /// `x^4 + x^3 + 1`, period 15.
    pub fn maximal4() -> Self {
        Self { degree: 4, taps: 0b1_1001 }
    }

    /// `x^8 + x^6 + x^5 + x^4 + 1`, period 255.
    pub fn maximal8() -> Self {
        Self { degree: 8, taps: 0b1_0111_0001 }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> u64 {
        self.taps
    }

    fn mask(&self) -> u64 {
        (1u64 << self.degree) - 1
    }

    fn check_seed(&self, seed: u64) -> Result<()> {
        if seed & !self.mask() != 0 {
            return Err(Error::range("seed", format!("{seed:#x} wider than {} bits", self.degree)));
        }
        Ok(())
    }

    pub fn step(&self, state: u64) -> u64 {
        let fb = ((state & self.taps & self.mask()).count_ones() & 1) as u64;
        (state >> 1) | (fb << (self.degree - 1))
    }

    pub fn state_after(&self, seed: u64, steps: u64) -> u64 {
        (0..steps).fold(seed, |s, _| self.step(s))
    }

    /// Cycle length through `seed`. The constant term makes `step` a
    /// bijection, so every state lies on a cycle.
    pub fn period(&self, seed: u64) -> Result<u64> {
        self.check_seed(seed)?;
        if self.degree > 32 {
            return Err(Error::Unsupported("period walk limited to degree 32".into()));
        }
        let mut s = self.step(seed);
        let mut len = 1;
        while s != seed {
            s = self.step(s);
            len += 1;
        }
        Ok(len)
    }
}

/// Value-semantics register state; copy it to fork a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lfsr {
    spec: LfsrSpec,
    state: u64,
}

impl Lfsr {
    pub fn new(spec: LfsrSpec, seed: u64) -> Result<Self> {
        spec.check_seed(seed)?;
        Ok(Self { spec, state: seed })
    }

    pub fn state(&self) -> u64 {
        self.state
    }
}

impl Iterator for Lfsr {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let out = self.state & 1 == 1;
        self.state = self.spec.step(self.state);
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keystream {
    pub bits: Bits,
    /// The seed was zero, so the stream is constant.
    pub degenerate: bool,
}

pub fn lfsr_keystream(spec: &LfsrSpec, seed: u64, len: usize) -> Result<Keystream> {
    let reg = Lfsr::new(*spec, seed)?;
    Ok(Keystream { bits: Bits::from_bools(reg.take(len).collect()), degenerate: seed == 0 })
}

/// Counts of each `width`-bit pattern at output offset `offset`, over all
/// nonzero seeds. Index = pattern with its first bit as bit 0.
pub fn window_histogram(spec: &LfsrSpec, offset: u64, width: u32) -> Result<Vec<u64>> {
    if spec.degree > 20 || width == 0 || width > spec.degree {
        return Err(Error::range("(degree, width)", format!("({}, {width})", spec.degree)));
    }
    let mut counts = vec![0u64; 1 << width];
    for seed in 1..=spec.mask() {
        let state = spec.state_after(seed, offset);
        // The next `degree` output bits are exactly the state bits.
        counts[(state & ((1 << width) - 1)) as usize] += 1;
    }
    Ok(counts)
}
