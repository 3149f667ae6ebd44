use crate::error::{Error, Result};

/// Work cap (key count x ordered message pairs) for exhaustive epsilon.
pub const MAC_BUDGET: u128 = 1 << 28;

/// Irreducible moduli for GF(2^w), w = 1..=8.
const MODULI: [u32; 8] = [0b11, 0b111, 0b1011, 0x13, 0x25, 0x43, 0x83, 0x11b];

/// Polynomial-evaluation hashing over GF(2^w): key `(a, b)`, message
/// `(m_1, ..., m_l)`, tag `b + sum_i m_i a^i`. Two messages collide on at most
/// `l` values of `a`, which makes the family `l / 2^w`-ASU.
///
/// Keys are packed as `a | b << w`, messages as `m_1 | m_2 << w | ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacFamily {
    field_bits: u32,
    blocks: u32,
    messages: u64,
}

fn gf_mul(mut a: u32, mut b: u32, w: u32) -> u32 {
    let modulus = MODULI[(w - 1) as usize];
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> w & 1 == 1 {
            a ^= modulus;
        }
    }
    acc
}

impl MacFamily {
    pub fn polynomial(field_bits: u32, blocks: u32) -> Result<Self> {
        if !(1..=8).contains(&field_bits) {
            return Err(Error::range("field_bits", format!("{field_bits} not in 1..=8")));
        }
        if blocks == 0 || field_bits * blocks > 32 {
            return Err(Error::range("blocks", format!("{blocks}")));
        }
        Ok(Self { field_bits, blocks, messages: 1 << (field_bits * blocks) })
    }

    /// Restrict the message space to its first `count` messages.
    pub fn with_messages(mut self, count: u64) -> Result<Self> {
        if count == 0 || count > self.messages {
            return Err(Error::range("messages", format!("{count}")));
        }
        self.messages = count;
        Ok(self)
    }

    pub fn field_bits(&self) -> u32 {
        self.field_bits
    }

    pub fn blocks(&self) -> u32 {
        self.blocks
    }

    pub fn key_count(&self) -> u64 {
        1 << (2 * self.field_bits)
    }

    /// Key length in bits.
    pub fn key_bits(&self) -> u32 {
        2 * self.field_bits
    }

    pub fn message_count(&self) -> u64 {
        self.messages
    }

    pub fn tag_count(&self) -> u64 {
        1 << self.field_bits
    }

    /// `blocks / 2^w`, the textbook epsilon of this family.
    pub fn nominal_epsilon(&self) -> f64 {
        self.blocks as f64 / self.tag_count() as f64
    }

    pub fn tag(&self, key: u64, message: u64) -> u32 {
        let w = self.field_bits;
        let mask = (1u64 << w) - 1;
        let a = (key & mask) as u32;
        let b = ((key >> w) & mask) as u32;
        let mut power = a;
        let mut acc = b;
        for i in 0..self.blocks {
            let m = ((message >> (i * w)) & mask) as u32;
            acc ^= gf_mul(m, power, w);
            power = gf_mul(power, a, w);
        }
        acc
    }

    /// Tags indexed `[key * message_count + message]`.
    pub fn tag_table(&self) -> Vec<u32> {
        let mut table = Vec::with_capacity((self.key_count() * self.messages) as usize);
        for k in 0..self.key_count() {
            for m in 0..self.messages {
                table.push(self.tag(k, m));
            }
        }
        table
    }

    /// Error unless an exhaustive substitution search fits the budget.
    pub fn check_budget(&self, budget: u128) -> Result<()> {
        if self.messages < 2 {
            return Err(Error::Unsupported("substitution needs at least two messages".into()));
        }
        let m = self.messages as u128;
        let required = self.key_count() as u128 * m * (m - 1);
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(())
    }
}

/// Exact substitution epsilon under a uniform key:
/// `max over m1 != m2, t1, t2 of P[h(m2) = t2 | h(m1) = t1]`.
pub fn mac_epsilon(family: &MacFamily, budget: u128) -> Result<f64> {
    family.check_budget(budget)?;
    let table = family.tag_table();
    let (keys, msgs, tags) =
        (family.key_count() as usize, family.message_count() as usize, family.tag_count() as usize);
    let mut best = 0.0f64;
    let mut joint = vec![0u32; tags * tags];
    let mut row = vec![0u32; tags];
    for m1 in 0..msgs {
        row.iter_mut().for_each(|c| *c = 0);
        for k in 0..keys {
            row[table[k * msgs + m1] as usize] += 1;
        }
        for m2 in (0..msgs).filter(|&m2| m2 != m1) {
            joint.iter_mut().for_each(|c| *c = 0);
            for k in 0..keys {
                let (t1, t2) = (table[k * msgs + m1] as usize, table[k * msgs + m2] as usize);
                joint[t1 * tags + t2] += 1;
            }
            for t1 in 0..tags {
                if row[t1] == 0 {
                    continue;
                }
                let top = joint[t1 * tags..(t1 + 1) * tags].iter().copied().max().unwrap_or(0);
                best = best.max(top as f64 / row[t1] as f64);
            }
        }
    }
    Ok(best)
}
