//! Counter-example and bound-saturating distributions.
//!
//! Every constructor anchors its special key at `k0`, the all-zero key unless
//! an `_at` variant is used. The known-part / prefix of a key is its first
//! `m` transmitted bits, positions `0..m`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::exact::{add, dyadic, sub, to_f64};
use crate::dist::{
    gather, scatter, Background, ExactDistribution, KeyDistribution, Rational, DENSE_MAX_BITS, EXACT_MAX_BITS,
    SPARSE_MAX_BITS, TOLERANCE,
};
use crate::error::{Error, Result};

/// Default anchor key `k0`.
pub const DEFAULT_ANCHOR: u64 = 0;
/// Largest key length for which a coupling table is materialised.
pub const COUPLING_MAX_BITS: u32 = 10;
/// Largest key length the BER counter-example search enumerates.
pub const BER_SEARCH_MAX_BITS: u32 = 12;

fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Fill a dense table from a per-key class index and per-class values.
fn by_class<T: Clone>(n: u32, values: &[T], class: impl Fn(u64) -> usize) -> Vec<T> {
    (0..1u64 << n).map(|k| values[class(k)].clone()).collect()
}

fn exact_len_check(n: u32) -> Result<()> {
    if n > EXACT_MAX_BITS {
        return Err(Error::range("n", format!("{n} exceeds the exact-mode limit {EXACT_MAX_BITS}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Known-plaintext counter-example

fn kpa_check(n: u32, m: u32, anchor: u64) -> Result<()> {
    if m < 1 || m >= n || n > DENSE_MAX_BITS {
        return Err(Error::range("(n, m)", format!("need 1 <= m < n <= {DENSE_MAX_BITS}, got ({n}, {m})")));
    }
    if anchor >> n != 0 {
        return Err(Error::range("anchor", format!("{anchor} does not fit in {n} bits")));
    }
    Ok(())
}

/// 0: the anchor, 1: shares the anchor's prefix, 2: any other key.
fn kpa_class(m: u32, anchor: u64) -> impl Fn(u64) -> usize {
    let mask = low_mask(m);
    move |k| {
        if k == anchor {
            0
        } else if k & mask == anchor & mask {
            1
        } else {
            2
        }
    }
}

/// `p(k0) = 2^-m`, zero on the rest of `k0`'s prefix class, `2^-n` elsewhere.
/// Its distance from uniform is `2^-m - 2^-n`, yet knowing the prefix of `k0`
/// pins down the whole key.
pub fn kpa_counterexample(n: u32, m: u32) -> Result<KeyDistribution> {
    kpa_counterexample_at(n, m, DEFAULT_ANCHOR)
}

pub fn kpa_counterexample_at(n: u32, m: u32, anchor: u64) -> Result<KeyDistribution> {
    kpa_check(n, m, anchor)?;
    let values = [(-(m as f64)).exp2(), 0.0, (-(n as f64)).exp2()];
    KeyDistribution::dense(n, by_class(n, &values, kpa_class(m, anchor)))
}

pub fn kpa_counterexample_exact(n: u32, m: u32, anchor: u64) -> Result<ExactDistribution> {
    kpa_check(n, m, anchor)?;
    exact_len_check(n)?;
    let values = [dyadic(m)?, Rational::zero(), dyadic(n)?];
    ExactDistribution::new(n, by_class(n, &values, kpa_class(m, anchor)))
}

// ---------------------------------------------------------------------------
// Subset-bound saturation

fn saturating_check(n: u32, subset: &[u32], anchor: u64) -> Result<()> {
    if n == 0 || n > DENSE_MAX_BITS {
        return Err(Error::range("n", format!("{n}")));
    }
    let mut seen = 0u64;
    for &p in subset {
        if p >= n || seen & (1 << p) != 0 {
            return Err(Error::range("subset", format!("{subset:?} for n = {n}")));
        }
        seen |= 1 << p;
    }
    if subset.is_empty() {
        return Err(Error::range("subset", "empty"));
    }
    if anchor >> n != 0 {
        return Err(Error::range("anchor", format!("{anchor}")));
    }
    Ok(())
}

/// Largest `delta` the saturating construction accepts for a subset of size `s`.
pub fn saturating_max_delta(subset_len: u32) -> f64 {
    1.0 - (-(subset_len as f64)).exp2()
}

/// 0: boosted key, 1: same subset value as the target, 2: different subset value.
fn saturating_class(subset: &[u32], anchor: u64) -> impl Fn(u64) -> usize + '_ {
    let target = gather(anchor, subset);
    let boosted = scatter(target, subset);
    move |k| {
        if k == boosted {
            0
        } else if gather(k, subset) == target {
            1
        } else {
            2
        }
    }
}

/// Distribution at distance exactly `delta` from uniform whose best guess of
/// the bits at `subset` succeeds with probability `2^-|subset| + delta`.
///
/// `delta` is added to the smallest key carrying the anchor's subset value and
/// removed evenly from every key with a different subset value.
pub fn saturating_distribution(n: u32, subset: &[u32], delta: f64) -> Result<KeyDistribution> {
    saturating_distribution_at(n, subset, delta, DEFAULT_ANCHOR)
}

pub fn saturating_distribution_at(n: u32, subset: &[u32], delta: f64, anchor: u64) -> Result<KeyDistribution> {
    saturating_check(n, subset, anchor)?;
    let s = subset.len() as u32;
    let max = saturating_max_delta(s);
    if !(0.0..=max + TOLERANCE).contains(&delta) || delta.is_nan() {
        return Err(Error::InfeasibleDelta { requested: delta, max });
    }
    let size = (n as f64).exp2();
    let u = 1.0 / size;
    let others = size - size / (s as f64).exp2();
    let values = [u + delta, u, (u - delta / others).max(0.0)];
    KeyDistribution::dense(n, by_class(n, &values, saturating_class(subset, anchor)))
}

pub fn saturating_distribution_exact(
    n: u32,
    subset: &[u32],
    delta: Rational,
    anchor: u64,
) -> Result<ExactDistribution> {
    saturating_check(n, subset, anchor)?;
    exact_len_check(n)?;
    let s = subset.len() as u32;
    let max = sub(&Rational::one(), &dyadic(s)?)?;
    if delta.is_negative() || delta > max {
        return Err(Error::InfeasibleDelta { requested: to_f64(&delta), max: to_f64(&max) });
    }
    let u = dyadic(n)?;
    // Keys outside the target subset value: 2^n - 2^(n-s).
    let others = Rational::from_integer((1i128 << n) - (1i128 << (n - s)));
    let values = [add(&u, &delta)?, u, sub(&u, &(delta / others))?];
    ExactDistribution::new(n, by_class(n, &values, saturating_class(subset, anchor)))
}

// ---------------------------------------------------------------------------
// Spiked distribution

fn spiked_check(n: u32, l: u32) -> Result<()> {
    if l < 1 || l >= n || n > SPARSE_MAX_BITS {
        return Err(Error::range("(n, l)", format!("need 1 <= l < n <= {SPARSE_MAX_BITS}, got ({n}, {l})")));
    }
    Ok(())
}

/// `p(k0) = 2^-l` with the remaining mass spread evenly over the other keys.
/// Held sparsely above the dense limit.
pub fn spiked_distribution(n: u32, l: u32) -> Result<KeyDistribution> {
    spiked_check(n, l)?;
    let atoms = BTreeMap::from([(DEFAULT_ANCHOR, (-(l as f64)).exp2())]);
    KeyDistribution::from_atoms(n, atoms, Background::Uniform)
}

pub fn spiked_distribution_exact(n: u32, l: u32) -> Result<ExactDistribution> {
    spiked_check(n, l)?;
    exact_len_check(n)?;
    let spike = dyadic(l)?;
    let rest = sub(&Rational::one(), &spike)? / Rational::from_integer((1i128 << n) - 1);
    ExactDistribution::new(n, by_class(n, &[spike, rest], |k| usize::from(k != DEFAULT_ANCHOR)))
}

// ---------------------------------------------------------------------------
// Independent biased bits

/// Independent bits, each equal to the anchor's bit with probability `agree`.
pub fn biased_bits(n: u32, agree: f64) -> Result<KeyDistribution> {
    if !(0.0..=1.0).contains(&agree) {
        return Err(Error::range("agree", format!("{agree}")));
    }
    KeyDistribution::from_fn(n, |k| {
        let flips = (k ^ DEFAULT_ANCHOR).count_ones() as i32;
        (1.0 - agree).powi(flips) * agree.powi(n as i32 - flips)
    })
}

// ---------------------------------------------------------------------------
// Mixture feasibility

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureViolation {
    pub key: u64,
    pub prob: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureFeasibility {
    pub lambda: f64,
    pub feasible: bool,
    /// First violating key in key order.
    pub violation: Option<MixtureViolation>,
}

/// Whether `P = (1 - lambda) U + lambda P'` for some distribution `P'`, i.e.
/// every `p_i` lies in `[(1 - lambda)/N, lambda + (1 - lambda)/N]`.
pub fn mixture_feasibility(p: &KeyDistribution, lambda: f64) -> Result<MixtureFeasibility> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::range("lambda", format!("{lambda}")));
    }
    let lower = (1.0 - lambda) / p.size() as f64;
    let upper = lambda + lower;
    let violates = |x: f64| x < lower - TOLERANCE || x > upper + TOLERANCE;
    let violation = match p.as_dense() {
        Some(v) => v.iter().enumerate().find(|(_, &x)| violates(x)).map(|(k, &x)| (k as u64, x)),
        None => {
            // Sparse: check listed atoms and the shared fill value.
            let runs = sparse_listing(p);
            runs.into_iter().find(|&(_, x)| violates(x))
        }
    };
    Ok(MixtureFeasibility {
        lambda,
        feasible: violation.is_none(),
        violation: violation.map(|(key, prob)| MixtureViolation { key, prob, lower, upper }),
    })
}

/// `(key, prob)` for every distinct situation of a sparse distribution, in key
/// order: each atom plus the first unlisted key standing for the background.
fn sparse_listing(p: &KeyDistribution) -> Vec<(u64, f64)> {
    let file = p.to_file();
    let mut listed: Vec<u64> =
        file.atoms.iter().map(|(s, _)| crate::dist::json::bits_to_key(s, p.n()).expect("own encoding")).collect();
    listed.sort_unstable();
    let mut out: Vec<(u64, f64)> = listed.iter().map(|&k| (k, p.prob(k))).collect();
    let first_free = (0..).find(|k| listed.binary_search(k).is_err()).unwrap_or(0);
    if (first_free as u128) < (1u128 << p.n()) {
        out.push((first_free, p.prob(first_free)));
    }
    out.sort_by_key(|x| x.0);
    out
}

// ---------------------------------------------------------------------------
// Couplings

/// Joint distribution of `(X, Y)` over pairs of `n`-bit keys.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    n: u32,
    /// Row-major `entries[x * N + y]`.
    entries: Vec<f64>,
}

fn coupling_inputs<'a>(p: &'a KeyDistribution, q: &'a KeyDistribution) -> Result<(&'a [f64], &'a [f64])> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch { expected: p.n() as usize, actual: q.n() as usize });
    }
    if p.n() > COUPLING_MAX_BITS {
        return Err(Error::range("n", format!("coupling tables are limited to {COUPLING_MAX_BITS} bits")));
    }
    Ok((p.dense_or_err()?, q.dense_or_err()?))
}

impl CouplingTable {
    /// Validated table; the marginals are not checked here.
    pub fn from_entries(n: u32, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || n > COUPLING_MAX_BITS {
            return Err(Error::range("n", format!("{n}")));
        }
        let size = 1usize << (2 * n);
        if entries.len() != size {
            return Err(Error::DimensionMismatch { expected: size, actual: entries.len() });
        }
        if entries.iter().any(|&e| !e.is_finite() || e < 0.0) {
            return Err(Error::InvalidDistribution("negative coupling entry".into()));
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn entry(&self, x: u64, y: u64) -> f64 {
        self.entries[(x as usize) << self.n | y as usize]
    }

    /// `P(X = Y)`.
    pub fn prob_equal(&self) -> f64 {
        let size = 1u64 << self.n;
        crate::dist::stable_sum((0..size).map(|k| self.entry(k, k)))
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.entries.chunks(1 << self.n).map(|r| crate::dist::stable_sum(r.iter().copied())).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let size = 1usize << self.n;
        (0..size).map(|y| crate::dist::stable_sum(self.entries.iter().skip(y).step_by(size).copied())).collect()
    }

    /// Whether the rows marginalise to `p` and the columns to `q` within `tol`.
    pub fn has_marginals(&self, p: &KeyDistribution, q: &KeyDistribution, tol: f64) -> bool {
        let (Some(a), Some(b)) = (p.as_dense(), q.as_dense()) else { return false };
        let close = |u: &[f64], v: &[f64]| u.len() == v.len() && u.iter().zip(v).all(|(x, y)| (x - y).abs() <= tol);
        close(&self.row_marginal(), a) && close(&self.col_marginal(), b)
    }
}

/// The coupling maximising `P(X = Y)`: diagonal `min(p_i, q_i)`, with the
/// excess masses paired off-diagonal in proportion. `P(X = Y) = 1 - delta(P, Q)`.
pub fn maximal_coupling(p: &KeyDistribution, q: &KeyDistribution) -> Result<CouplingTable> {
    let (a, b) = coupling_inputs(p, q)?;
    let size = a.len();
    let mut entries = vec![0.0; size * size];
    let excess_p: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).collect();
    let excess_q: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x).max(0.0)).collect();
    let mass = crate::dist::stable_sum(excess_p.iter().copied());
    for i in 0..size {
        entries[i * size + i] = a[i].min(b[i]);
    }
    if mass > 0.0 {
        for (i, &ep) in excess_p.iter().enumerate().filter(|(_, &e)| e > 0.0) {
            for (j, &eq) in excess_q.iter().enumerate().filter(|(_, &e)| e > 0.0) {
                entries[i * size + j] += ep * eq / mass;
            }
        }
    }
    CouplingTable::from_entries(p.n(), entries)
}

/// Independent coupling `p(x) q(y)`.
pub fn product_coupling(p: &KeyDistribution, q: &KeyDistribution) -> Result<CouplingTable> {
    let (a, b) = coupling_inputs(p, q)?;
    let entries = a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect();
    CouplingTable::from_entries(p.n(), entries)
}

// ---------------------------------------------------------------------------
// BER counter-example search

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchConfig {
    pub seed: u64,
    /// Maximum number of candidate distributions evaluated.
    pub budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { seed: 0x5eed, budget: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerCounterexample {
    pub dist: KeyDistribution,
    pub distance: f64,
    pub ber: f64,
    /// The claimed lower bound `(1 - d)/2` that `ber` falls below.
    pub claimed_floor: f64,
    pub family: &'static str,
    pub candidates_tried: u64,
}

/// Look for `P` with `delta(P, U) <= d` and optimal BER below `(1 - d)/2`.
///
/// Families tried in order: independent bits biased toward the anchor, mass
/// moved from heavy-weight keys onto the anchor, then seeded random mixtures.
/// `None` means the budget ran out, not that no counter-example exists.
pub fn ber_counterexample_search(n: u32, d: f64, cfg: SearchConfig) -> Result<Option<BerCounterexample>> {
    if n == 0 || n > BER_SEARCH_MAX_BITS {
        return Err(Error::range("n", format!("{n} not in 1..={BER_SEARCH_MAX_BITS}")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::range("d", format!("{d}")));
    }
    let floor = (1.0 - d) / 2.0;
    let mut tried = 0u64;
    let check = |dist: KeyDistribution, family: &'static str, tried: &mut u64| -> Option<BerCounterexample> {
        *tried += 1;
        let distance = dist.distance_to_uniform();
        let ber = dist.optimal_ber();
        (distance <= d + TOLERANCE && ber < floor - TOLERANCE).then_some(BerCounterexample {
            dist,
            distance,
            ber,
            claimed_floor: floor,
            family,
            candidates_tried: *tried,
        })
    };

    const GRID: u32 = 256;
    for step in (1..=GRID).rev() {
        if tried >= cfg.budget {
            return Ok(None);
        }
        let agree = 0.5 + 0.5 * step as f64 / GRID as f64;
        if let Some(hit) = check(biased_bits(n, agree)?, "biased-bits", &mut tried) {
            return Ok(Some(hit));
        }
    }

    for step in (1..=GRID).rev() {
        if tried >= cfg.budget {
            return Ok(None);
        }
        let t = d * step as f64 / GRID as f64;
        if let Some(hit) = check(weight_transfer(n, t)?, "weight-transfer", &mut tried) {
            return Ok(Some(hit));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let size = 1usize << n;
    let uniform = KeyDistribution::uniform(n)?;
    while tried < cfg.budget {
        let heavy = rng.gen_range(1..=size.min(8));
        let mut q = vec![0.0; size];
        for _ in 0..heavy {
            q[rng.gen_range(0..size)] += rng.gen::<f64>() + 1e-3;
        }
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= s);
        let q = KeyDistribution::dense(n, q)?;
        let dq = q.distance_to_uniform();
        if dq <= 0.0 {
            tried += 1;
            continue;
        }
        let lambda = (d / dq * rng.gen::<f64>().max(0.05)).min(1.0);
        if let Some(hit) = check(uniform.mix(&q, lambda)?, "random-mixture", &mut tried) {
            return Ok(Some(hit));
        }
    }
    Ok(None)
}

/// Move mass `t` onto the anchor, taken from the keys furthest from it in
/// Hamming distance (each key gives at most what it holds).
fn weight_transfer(n: u32, t: f64) -> Result<KeyDistribution> {
    let size = 1usize << n;
    let u = 1.0 / size as f64;
    let mut v = vec![u; size];
    let mut order: Vec<usize> = (0..size).filter(|&k| k as u64 != DEFAULT_ANCHOR).collect();
    order.sort_by_key(|&k| (std::cmp::Reverse((k as u64 ^ DEFAULT_ANCHOR).count_ones()), k));
    let mut left = t.min(1.0 - u);
    for k in order {
        if left <= 0.0 {
            break;
        }
        let take = left.min(v[k]);
        v[k] -= take;
        left -= take;
    }
    v[DEFAULT_ANCHOR as usize] += t.min(1.0 - u) - left.max(0.0);
    KeyDistribution::dense(n, v)
}
