//! Brute-force ground truth for small instances, and sweeps that hold the
//! closed-form bounds against it.
//!
//! Everything here enumerates: keys, bit subsets, known parts, hash matrices,
//! message pairs. Work that would exceed a budget is refused or reported as
//! incomplete, never estimated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds;
use crate::constructions::{self, SearchConfig};
use crate::dist::exact::{add, Rational};
use crate::dist::{gather, stable_sum, ExactDistribution, KeyDistribution};
use crate::error::{Error, Result};
use crate::primitives::{mac_epsilon, MacFamily, ToeplitzMatrix};

/// Largest key length for subset and known-part enumeration.
pub const SUBSET_MAX_BITS: u32 = 12;
/// Largest input length for hashing experiments.
pub const LHL_MAX_BITS: u32 = 12;
/// Largest diagonal count for full Toeplitz family enumeration.
pub const LHL_FULL_FAMILY_MAX_DIAGONALS: u32 = 20;
/// Default work cap, in key visits.
pub const DEFAULT_BUDGET: u128 = 1 << 26;

const SLACK_TOL: f64 = 1e-12;

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn small_dense(p: &KeyDistribution, limit: u32) -> Result<&[f64]> {
    if p.n() > limit {
        return Err(Error::range("n", format!("{} exceeds the enumeration limit {limit}", p.n())));
    }
    p.dense_or_err()
}

fn positions_of(mask: u64) -> Vec<u32> {
    (0..64).filter(|i| (mask >> i) & 1 == 1).collect()
}

// ---------------------------------------------------------------------------
// Subsets

/// Optimal guess probability for the bits at `positions`: the largest
/// marginal probability of any value they can take.
pub fn subset_success(probs: &[f64], positions: &[u32]) -> f64 {
    let mut marg = vec![0.0; 1usize << positions.len()];
    for (k, &p) in probs.iter().enumerate() {
        marg[gather(k as u64, positions) as usize] += p;
    }
    marg.into_iter().fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetSuccess {
    pub mask: u64,
    pub size: u32,
    pub success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetReport {
    pub n: u32,
    /// Ordered by size, then mask.
    pub entries: Vec<SubsetSuccess>,
    /// False when the budget cut the enumeration short.
    pub complete: bool,
}

impl SubsetReport {
    pub fn get(&self, mask: u64) -> Option<f64> {
        self.entries.iter().find(|e| e.mask == mask).map(|e| e.success)
    }

    pub fn best_of_size(&self, size: u32) -> Option<f64> {
        self.entries.iter().filter(|e| e.size == size).map(|e| e.success).reduce(f64::max)
    }
}

/// Every bit subset with `1..=max_size` positions.
pub fn exhaustive_subset_success(p: &KeyDistribution, max_size: u32, budget: u128) -> Result<SubsetReport> {
    subsets_in(p, 1, max_size, budget)
}

/// Every bit subset with exactly `size` positions.
pub fn exhaustive_subsets_of_size(p: &KeyDistribution, size: u32, budget: u128) -> Result<SubsetReport> {
    subsets_in(p, size, size, budget)
}

fn subsets_in(p: &KeyDistribution, lo: u32, hi: u32, budget: u128) -> Result<SubsetReport> {
    let probs = small_dense(p, SUBSET_MAX_BITS)?;
    let n = p.n();
    if lo < 1 || hi > n || lo > hi {
        return Err(Error::range("subset size", format!("{lo}..={hi} for n = {n}")));
    }
    let mut masks: Vec<u64> = (1..1u64 << n).filter(|m| (lo..=hi).contains(&m.count_ones())).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    let per = 1u128 << n;
    let affordable = (budget / per).min(masks.len() as u128) as usize;
    let complete = affordable == masks.len();
    masks.truncate(affordable);
    let entries = par_map(&masks, |&mask| SubsetSuccess {
        mask,
        size: mask.count_ones(),
        success: subset_success(probs, &positions_of(mask)),
    });
    Ok(SubsetReport { n, entries, complete })
}

// ---------------------------------------------------------------------------
// Known-plaintext

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KpaEntry {
    /// Known bits packed in `known` order.
    pub k1: u64,
    pub prob: f64,
    /// Best guess of the unknown bits given `k1`.
    pub conditional_p1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KpaReport {
    pub known: Vec<u32>,
    /// Entries with `prob > 0` only.
    pub entries: Vec<KpaEntry>,
    /// `sum_k1 P(k1) p1(K2 | k1)`.
    pub weighted_average: f64,
    pub worst_case: f64,
    pub worst_k1: u64,
}

impl KpaReport {
    /// Total probability of the `k1` values that reveal the rest with certainty.
    pub fn certain_compromise(&self) -> f64 {
        stable_sum(self.entries.iter().filter(|e| e.conditional_p1 >= 1.0 - 1e-12).map(|e| e.prob))
    }
}

pub fn exhaustive_kpa(p: &KeyDistribution, known: &[u32]) -> Result<KpaReport> {
    let probs = small_dense(p, crate::dist::DENSE_MAX_BITS)?;
    check_known(p.n(), known)?;
    let slots = 1usize << known.len();
    let mut mass = vec![0.0; slots];
    let mut top = vec![0.0f64; slots];
    for (k, &x) in probs.iter().enumerate() {
        let k1 = gather(k as u64, known) as usize;
        mass[k1] += x;
        top[k1] = top[k1].max(x);
    }
    let entries: Vec<KpaEntry> = (0..slots)
        .filter(|&k1| mass[k1] > 0.0)
        .map(|k1| KpaEntry { k1: k1 as u64, prob: mass[k1], conditional_p1: (top[k1] / mass[k1]).min(1.0) })
        .collect();
    let (worst_k1, worst_case) =
        entries.iter().map(|e| (e.k1, e.conditional_p1)).fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(KpaReport {
        known: known.to_vec(),
        weighted_average: stable_sum(top.iter().copied()),
        entries,
        worst_case,
        worst_k1,
    })
}

fn check_known(n: u32, known: &[u32]) -> Result<()> {
    let mut seen = 0u64;
    for &pos in known {
        if pos >= n || seen & (1 << pos) != 0 {
            return Err(Error::range("known", format!("{known:?} for n = {n}")));
        }
        seen |= 1 << pos;
    }
    if known.is_empty() || known.len() as u32 >= n {
        return Err(Error::range("known", "need at least one known and one unknown bit"));
    }
    Ok(())
}

/// Exact `(worst conditional p1, weighted average)` for a rational distribution.
pub fn exhaustive_kpa_exact(p: &ExactDistribution, known: &[u32]) -> Result<(Rational, Rational)> {
    check_known(p.n(), known)?;
    let slots = 1usize << known.len();
    let zero = Rational::from_integer(0);
    let mut mass = vec![zero; slots];
    let mut top = vec![zero; slots];
    for (k, x) in p.probs().iter().enumerate() {
        let k1 = gather(k as u64, known) as usize;
        mass[k1] = add(&mass[k1], x)?;
        if *x > top[k1] {
            top[k1] = *x;
        }
    }
    let mut worst = zero;
    let mut avg = zero;
    for k1 in 0..slots {
        if mass[k1] > zero {
            worst = worst.max(top[k1] / mass[k1]);
            avg = add(&avg, &top[k1])?;
        }
    }
    Ok((worst, avg))
}

// ---------------------------------------------------------------------------
// Hashing

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HashFamily {
    Full,
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhlReport {
    pub input_bits: u32,
    pub output_bits: u32,
    /// `l = -log2 p1` of the input.
    pub min_entropy: f64,
    pub family: HashFamily,
    pub matrices: u64,
    pub average_distance: f64,
    pub max_distance: f64,
    /// `2^-(l - m)/2`, unclamped.
    pub bound: f64,
    /// The bound is at least 1 and says nothing.
    pub vacuous: bool,
    pub holds: bool,
    /// Fraction of matrices whose distance is at least `sqrt(average)`.
    pub markov_fraction: f64,
}

pub fn lhl_empirical(p: &KeyDistribution, output_bits: u32, family: HashFamily) -> Result<LhlReport> {
    small_dense(p, LHL_MAX_BITS)?;
    let n = p.n();
    if output_bits == 0 || output_bits > n {
        return Err(Error::range("output_bits", format!("{output_bits} for n' = {n}")));
    }
    let matrices: Vec<ToeplitzMatrix> = match family {
        HashFamily::Full => {
            let width = n + output_bits - 1;
            if width > LHL_FULL_FAMILY_MAX_DIAGONALS {
                return Err(Error::BudgetExceeded {
                    required: 1u128 << width,
                    budget: 1u128 << LHL_FULL_FAMILY_MAX_DIAGONALS,
                });
            }
            ToeplitzMatrix::family(output_bits, n)?.collect()
        }
        HashFamily::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| ToeplitzMatrix::random(output_bits, n, &mut rng)).collect::<Result<_>>()?
        }
    };
    if matrices.is_empty() {
        return Err(Error::range("family", "no matrices"));
    }
    let distances = par_map(&matrices, |t| t.pushforward(p).map(|q| q.distance_to_uniform()));
    let distances: Vec<f64> = distances.into_iter().collect::<Result<_>>()?;
    let average = stable_sum(distances.iter().copied()) / distances.len() as f64;
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    let l = -p.p1().log2();
    let bound = (-(l - output_bits as f64) / 2.0).exp2();
    let gamma = average.sqrt();
    let above = distances.iter().filter(|&&d| gamma > 0.0 && d >= gamma).count();
    Ok(LhlReport {
        input_bits: n,
        output_bits,
        min_entropy: l,
        family,
        matrices: matrices.len() as u64,
        average_distance: average,
        max_distance,
        bound,
        vacuous: bound >= 1.0,
        holds: average <= bound + SLACK_TOL,
        markov_fraction: above as f64 / distances.len() as f64,
    })
}

// ---------------------------------------------------------------------------
// Distinguishing

fn pair<'a>(p0: &'a KeyDistribution, p1: &'a KeyDistribution, prior0: f64) -> Result<(&'a [f64], &'a [f64])> {
    if !(0.0..=1.0).contains(&prior0) {
        return Err(Error::range("prior0", format!("{prior0}")));
    }
    if p0.n() != p1.n() {
        return Err(Error::DimensionMismatch { expected: p0.n() as usize, actual: p1.n() as usize });
    }
    Ok((p0.dense_or_err()?, p1.dense_or_err()?))
}

/// `1/2 + 1/2 sum_i |pi0 P0(i) - pi1 P1(i)|`.
pub fn optimal_distinguisher(p0: &KeyDistribution, p1: &KeyDistribution, prior0: f64) -> Result<f64> {
    let (a, b) = pair(p0, p1, prior0)?;
    let prior1 = 1.0 - prior0;
    let l1 = stable_sum(a.iter().zip(b).map(|(x, y)| (prior0 * x - prior1 * y).abs()));
    Ok(0.5 + 0.5 * l1)
}

/// Success of the explicit MAP rule: on observing `i`, answer H0 iff
/// `pi0 P0(i) >= pi1 P1(i)`.
pub fn bayes_decision_success(p0: &KeyDistribution, p1: &KeyDistribution, prior0: f64) -> Result<f64> {
    let (a, b) = pair(p0, p1, prior0)?;
    let prior1 = 1.0 - prior0;
    let mut correct = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let decide_h0 = prior0 * x >= prior1 * y;
        correct.push(if decide_h0 { prior0 * x } else { prior1 * y });
    }
    Ok(stable_sum(correct))
}

// ---------------------------------------------------------------------------
// Pipeline monotonicity

/// Error-correction step as a deterministic key map.
#[derive(Clone, Debug, PartialEq)]
pub enum EccMap {
    Identity,
    /// `table[k]` is the corrected key for sifted key `k`.
    Table {
        out_bits: u32,
        table: Vec<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonotonicityTriple {
    pub sifted: f64,
    pub corrected: f64,
    pub final_key: f64,
    pub holds: bool,
    /// `p1` unchanged by error correction.
    pub ecc_preserves: bool,
}

pub fn monotonicity_check(p: &KeyDistribution, ecc: &EccMap, pac: &ToeplitzMatrix) -> Result<MonotonicityTriple> {
    small_dense(p, SUBSET_MAX_BITS)?;
    let corrected = match ecc {
        EccMap::Identity => p.clone(),
        EccMap::Table { out_bits, table } => {
            if table.len() as u64 != p.size() {
                return Err(Error::DimensionMismatch { expected: p.size() as usize, actual: table.len() });
            }
            p.pushforward(*out_bits, |k| table[k as usize])?
        }
    };
    let final_key = pac.pushforward(&corrected)?;
    let (a, b, c) = (p.p1(), corrected.p1(), final_key.p1());
    Ok(MonotonicityTriple {
        sifted: a,
        corrected: b,
        final_key: c,
        holds: a <= b + SLACK_TOL && b <= c + SLACK_TOL,
        ecc_preserves: (a - b).abs() <= SLACK_TOL,
    })
}

// ---------------------------------------------------------------------------
// MAC attacks

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MacAttackReport {
    /// Distance of the key distribution from uniform.
    pub epsilon_prime: f64,
    /// Best single forgery with no observed tag.
    pub impersonation: f64,
    /// Largest substitution success after one observed (message, tag).
    pub worst_tag: f64,
    pub worst_message: u64,
    pub worst_tag_value: u32,
    /// Substitution success averaged over the observed tag, for the worst
    /// first message.
    pub average: f64,
    pub average_message: u64,
    /// Per observed tag, for `average_message` (`None` for tags of
    /// probability zero).
    pub per_tag: Vec<Option<f64>>,
}

struct MessageOutcome {
    worst: (f64, u32),
    average: f64,
    per_tag: Vec<Option<f64>>,
    impersonation: f64,
}

pub fn mac_attack_search(family: &MacFamily, key: &KeyDistribution, budget: u128) -> Result<MacAttackReport> {
    family.check_budget(budget)?;
    if key.n() != family.key_bits() {
        return Err(Error::DimensionMismatch { expected: family.key_bits() as usize, actual: key.n() as usize });
    }
    let probs = key.dense_or_err()?;
    let table = family.tag_table();
    let (keys, msgs, tags) =
        (family.key_count() as usize, family.message_count() as usize, family.tag_count() as usize);
    let support: Vec<usize> = (0..keys).filter(|&k| probs[k] > 0.0).collect();

    let first: Vec<usize> = (0..msgs).collect();
    let outcomes = par_map(&first, |&m1| {
        let mut tag_prob = vec![0.0; tags];
        for &k in &support {
            tag_prob[table[k * msgs + m1] as usize] += probs[k];
        }
        let mut best = vec![0.0f64; tags];
        let mut joint = vec![0.0; tags * tags];
        for m2 in (0..msgs).filter(|&m2| m2 != m1) {
            joint.iter_mut().for_each(|x| *x = 0.0);
            for &k in &support {
                let (t1, t2) = (table[k * msgs + m1] as usize, table[k * msgs + m2] as usize);
                joint[t1 * tags + t2] += probs[k];
            }
            for t1 in 0..tags {
                let row = joint[t1 * tags..(t1 + 1) * tags].iter().copied().fold(0.0, f64::max);
                best[t1] = best[t1].max(row);
            }
        }
        let per_tag: Vec<Option<f64>> =
            (0..tags).map(|t| (tag_prob[t] > 0.0).then(|| (best[t] / tag_prob[t]).min(1.0))).collect();
        let worst = per_tag
            .iter()
            .enumerate()
            .filter_map(|(t, v)| v.map(|v| (v, t as u32)))
            .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
        MessageOutcome {
            worst,
            average: stable_sum(best.iter().copied()).min(1.0),
            per_tag,
            impersonation: tag_prob.iter().copied().fold(0.0, f64::max),
        }
    });

    let mut report = MacAttackReport {
        epsilon_prime: key.distance_to_uniform(),
        impersonation: 0.0,
        worst_tag: 0.0,
        worst_message: 0,
        worst_tag_value: 0,
        average: -1.0,
        average_message: 0,
        per_tag: Vec::new(),
    };
    for (m1, o) in outcomes.into_iter().enumerate() {
        report.impersonation = report.impersonation.max(o.impersonation);
        if o.worst.0 > report.worst_tag {
            report.worst_tag = o.worst.0;
            report.worst_message = m1 as u64;
            report.worst_tag_value = o.worst.1;
        }
        if o.average > report.average {
            report.average = o.average;
            report.average_message = m1 as u64;
            report.per_tag = o.per_tag;
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Mixture weight

/// Smallest `lambda` with `P = (1 - lambda) U + lambda P'` for some
/// distribution `P'`.
pub fn min_mixture_weight(p: &KeyDistribution) -> Result<f64> {
    let probs = p.dense_or_err()?;
    let size = probs.len() as f64;
    let u = 1.0 / size;
    let need = probs.iter().map(|&x| (1.0 - size * x).max((x - u) / (1.0 - u))).fold(0.0, f64::max);
    Ok(need.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub instance: String,
    pub bound_value: f64,
    pub true_value: f64,
}

/// Outcome of holding one bound against the oracle on many instances.
/// Slack is `bound - truth` for upper bounds and `truth - bound` for lower
/// bounds, so it is negative exactly on violations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub bound_name: String,
    /// A formula recorded as incorrect; violations are the expected outcome.
    pub flagged: bool,
    pub instances_checked: u64,
    pub min_slack: Option<f64>,
    pub max_slack: Option<f64>,
    pub violations: Vec<Violation>,
    pub seed: u64,
    pub complete: bool,
}

impl VerificationReport {
    pub fn new(name: &str, flagged: bool, seed: u64) -> Self {
        Self {
            bound_name: name.to_string(),
            flagged,
            instances_checked: 0,
            min_slack: None,
            max_slack: None,
            violations: Vec::new(),
            seed,
            complete: true,
        }
    }

    fn slack(&mut self, instance: impl FnOnce() -> String, slack: f64, bound: f64, truth: f64) {
        self.instances_checked += 1;
        self.min_slack = Some(self.min_slack.map_or(slack, |s| s.min(slack)));
        self.max_slack = Some(self.max_slack.map_or(slack, |s| s.max(slack)));
        if slack < -SLACK_TOL {
            self.violations.push(Violation { instance: instance(), bound_value: bound, true_value: truth });
        }
    }

    /// Record a check of `truth <= bound`.
    pub fn upper(&mut self, instance: impl FnOnce() -> String, bound: f64, truth: f64) {
        self.slack(instance, bound - truth, bound, truth);
    }

    /// Record a check of `truth >= bound`.
    pub fn lower(&mut self, instance: impl FnOnce() -> String, bound: f64, truth: f64) {
        self.slack(instance, truth - bound, bound, truth);
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// A flagged formula with at least one confirmed counter-example.
    pub fn refuted(&self) -> bool {
        self.flagged && !self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub random_instances: usize,
    /// Largest key length used.
    pub max_bits: u32,
    /// Multiplies every upper bound and divides every lower bound. Values
    /// below 1 inject faults.
    pub bound_scale: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { seed: 0x5eed, random_instances: 1000, max_bits: 10, bound_scale: 1.0 }
    }
}

/// Random distribution of one of several shapes: flat Dirichlet, skewed
/// powers, a few heavy keys over uniform, or a small perturbation of uniform.
pub fn random_distribution<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Result<KeyDistribution> {
    let size = 1usize << n;
    let dirichlet = |rng: &mut R| -> Vec<f64> { (0..size).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect() };
    let mut w = match rng.gen_range(0..4) {
        0 => dirichlet(rng),
        1 => {
            let k = rng.gen_range(2..10);
            (0..size).map(|_| rng.gen::<f64>().powi(k)).collect()
        }
        2 => {
            let mut w = vec![1.0 / size as f64; size];
            for _ in 0..rng.gen_range(1..=4) {
                w[rng.gen_range(0..size)] += rng.gen::<f64>();
            }
            w
        }
        _ => {
            let lambda = rng.gen::<f64>() * 0.05;
            let d = dirichlet(rng);
            let s: f64 = d.iter().sum();
            d.iter().map(|x| (1.0 - lambda) / size as f64 + lambda * x / s).collect()
        }
    };
    let s = stable_sum(w.iter().copied());
    if s <= 0.0 {
        w = vec![1.0; size];
    }
    let s = stable_sum(w.iter().copied());
    w.iter_mut().for_each(|x| *x /= s);
    KeyDistribution::dense(n, w)
}

/// Named constructed distributions up to `max_bits` (capped at 10).
pub fn constructed_instances(max_bits: u32) -> Result<Vec<(String, KeyDistribution)>> {
    let top = max_bits.min(10);
    let mut out = Vec::new();
    for n in 2..=top {
        for m in 1..n {
            out.push((format!("kpa({n},{m})"), constructions::kpa_counterexample(n, m)?));
            out.push((format!("spiked({n},{m})"), constructions::spiked_distribution(n, m)?));
            let prefix: Vec<u32> = (0..m).collect();
            let delta = constructions::saturating_max_delta(m) / 2.0;
            out.push((
                format!("saturating({n},{m},{delta})"),
                constructions::saturating_distribution(n, &prefix, delta)?,
            ));
        }
        for agree in [0.6, 0.9] {
            out.push((format!("biased({n},{agree})"), constructions::biased_bits(n, agree)?));
        }
        out.push((format!("uniform({n})"), KeyDistribution::uniform(n)?));
    }
    Ok(out)
}

struct Instance {
    name: String,
    dist: KeyDistribution,
    subsets: Vec<u64>,
    known: Vec<u32>,
}

fn sweep_instances(cfg: &SweepConfig) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for (name, dist) in constructed_instances(cfg.max_bits)? {
        let n = dist.n();
        let subsets = if n <= 8 { (1..1u64 << n).collect() } else { random_masks(n, 16, &mut rng) };
        let m = rng.gen_range(1..n);
        out.push(Instance { name, dist, subsets, known: (0..m).collect() });
    }
    for i in 0..cfg.random_instances {
        let n = rng.gen_range(2..=cfg.max_bits.max(2));
        let dist = random_distribution(n, &mut rng)?;
        let subsets = random_masks(n, 4, &mut rng);
        let m = rng.gen_range(1..n);
        out.push(Instance { name: format!("random#{i}(n={n})"), dist, subsets, known: (0..m).collect() });
    }
    Ok(out)
}

fn random_masks<R: Rng>(n: u32, count: usize, rng: &mut R) -> Vec<u64> {
    (0..count).map(|_| rng.gen_range(1..1u64 << n)).collect()
}

/// Check the valid bounds against the oracle on seeded random and every
/// constructed distribution.
pub fn soundness_sweep(cfg: &SweepConfig) -> Result<Vec<VerificationReport>> {
    if cfg.max_bits < 2 || cfg.max_bits > 10 {
        return Err(Error::range("max_bits", format!("{} not in 2..=10", cfg.max_bits)));
    }
    let s = cfg.bound_scale;
    let mut subset = VerificationReport::new("subset-leak", false, cfg.seed);
    let mut kpa = VerificationReport::new("kpa-average", false, cfg.seed);
    let mut markov = VerificationReport::new("individual-markov", false, cfg.seed);
    let mut fano = VerificationReport::new("fano-ber", false, cfg.seed);
    let mut pinsker_lo = VerificationReport::new("pinsker-lower", false, cfg.seed);
    let mut pinsker_hi = VerificationReport::new("pinsker-upper", false, cfg.seed);
    let mut distinguisher = VerificationReport::new("distinguisher-bayes", false, cfg.seed);

    let instances = sweep_instances(cfg)?;
    for inst in &instances {
        let p = &inst.dist;
        let n = p.n();
        let probs = p.dense_or_err()?;
        let delta = p.distance_to_uniform();

        for &mask in &inst.subsets {
            let pos = positions_of(mask);
            let truth = subset_success(probs, &pos);
            let bound = s * bounds::subset_leak_bound(pos.len() as f64, delta);
            subset.upper(|| format!("{} subset {mask:#x}", inst.name), bound, truth);
        }

        let report = exhaustive_kpa(p, &inst.known)?;
        let unknown = (n as usize - inst.known.len()) as f64;
        kpa.upper(
            || format!("{} known {:?}", inst.name, inst.known),
            s * bounds::kpa_average_bound(unknown, delta),
            report.weighted_average,
        );
        if delta > 0.0 {
            // Excess over the uniform conditional success is non-negative
            // with mean at most delta; Markov at gamma = sqrt(delta).
            let floor = (-unknown).exp2();
            let gamma = delta.sqrt();
            let tail = stable_sum(
                report.entries.iter().filter(|e| e.conditional_p1 - floor >= gamma * (1.0 - 1e-9)).map(|e| e.prob),
            );
            markov.upper(
                || format!("{} known {:?}", inst.name, inst.known),
                s * bounds::markov_tail(delta, gamma)?,
                tail,
            );
        }

        let ber = p.optimal_ber();
        let fano_bound = match bounds::fano_ber_bound(n as f64, delta) {
            Ok(b) => b,
            Err(Error::VacuousBound(_)) | Err(Error::OutOfRange { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        fano.lower(|| inst.name.clone(), fano_bound / s, ber);

        let leak = p.information_leak();
        let band = bounds::pinsker_band(delta, n as f64)?;
        pinsker_lo.lower(|| inst.name.clone(), band.lower / s, leak);
        if let Some(upper) = band.upper {
            pinsker_hi.upper(|| inst.name.clone(), s * upper, leak);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd15c);
    for i in 0..cfg.random_instances.max(16) {
        let n = rng.gen_range(1..=6);
        let a = random_distribution(n, &mut rng)?;
        let b = random_distribution(n, &mut rng)?;
        let prior = rng.gen::<f64>();
        let diff = (optimal_distinguisher(&a, &b, prior)? - bayes_decision_success(&a, &b, prior)?).abs();
        distinguisher.upper(|| format!("pair#{i}"), s * 1e-12, diff);
    }

    let mut reports = vec![subset, kpa, markov, fano, pinsker_lo, pinsker_hi, distinguisher];
    reports.push(lhl_sweep(cfg)?);
    reports.extend(mac_sweep(cfg)?);
    Ok(reports)
}

fn lhl_sweep(cfg: &SweepConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("leftover-hash", false, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x115);
    let mut cases: Vec<(String, KeyDistribution)> = Vec::new();
    for i in 0..(cfg.random_instances / 20).max(5) {
        cases.push((format!("random#{i}"), random_distribution(6, &mut rng)?));
    }
    cases.push(("uniform(6)".into(), KeyDistribution::uniform(6)?));
    cases.push(("spiked(6,2)".into(), constructions::spiked_distribution(6, 2)?));
    cases.push(("kpa(6,3)".into(), constructions::kpa_counterexample(6, 3)?));
    for (name, p) in cases {
        for m in 1..=5 {
            let r = lhl_empirical(&p, m, HashFamily::Full)?;
            report.upper(|| format!("{name} m={m}"), cfg.bound_scale * r.bound, r.average_distance);
        }
    }
    Ok(report)
}

fn mac_sweep(cfg: &SweepConfig) -> Result<Vec<VerificationReport>> {
    let family = MacFamily::polynomial(3, 2)?;
    let eps = mac_epsilon(&family, crate::primitives::MAC_BUDGET)?;
    let tags = family.tag_count() as f64;
    let mut avg = VerificationReport::new("mac-average", false, cfg.seed);
    let mut worst = VerificationReport::new("mac-worst-tag", false, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x3ac);
    let bits = family.key_bits();
    let mut keys: Vec<(String, KeyDistribution)> = vec![("uniform".into(), KeyDistribution::uniform(bits)?)];
    for l in 1..bits {
        keys.push((format!("spiked(l={l})"), constructions::spiked_distribution(bits, l)?));
    }
    let u = KeyDistribution::uniform(bits)?;
    for i in 0..(cfg.random_instances / 50).max(4) {
        let q = random_distribution(bits, &mut rng)?;
        let lambda = rng.gen::<f64>() * 0.2;
        keys.push((format!("mixture#{i}"), u.mix(&q, lambda)?));
    }
    for (name, key) in keys {
        let r = mac_attack_search(&family, &key, crate::primitives::MAC_BUDGET)?;
        let b = bounds::mac_bounds(&bounds::MacInputs {
            epsilon: eps,
            epsilon_key: r.epsilon_prime,
            tag_space: tags,
            uses: 1,
            epsilon_tag_key: 0.0,
        })?;
        avg.upper(|| name.clone(), cfg.bound_scale * b.p_s_avg, r.average);
        worst.upper(|| name.clone(), cfg.bound_scale * b.p_s_max, r.worst_tag);
    }
    Ok(vec![avg, worst])
}

/// Search for oracle-confirmed counter-examples to the flagged formulas. A
/// violation here is a refutation.
pub fn refutation_sweep(cfg: &SweepConfig) -> Result<Vec<VerificationReport>> {
    let top = cfg.max_bits.clamp(3, 10);
    let mut per_bit = VerificationReport::new("per-bit-fallacy", true, cfg.seed);
    let mut ber = VerificationReport::new("ber-fallacy", true, cfg.seed);
    let mut failure = VerificationReport::new("failure-probability", true, cfg.seed);

    for n in 3..=top {
        for m in 1..n {
            let p = constructions::kpa_counterexample(n, m)?;
            let d = p.distance_to_uniform();
            let known: Vec<u32> = (0..m).collect();
            let report = exhaustive_kpa(&p, &known)?;
            // Probability that the known part hands Eve the whole key.
            per_bit.upper(
                || format!("kpa({n},{m})"),
                bounds::per_bit_fallacy(d, n as f64),
                report.certain_compromise(),
            );
            failure.upper(|| format!("kpa({n},{m})"), d, min_mixture_weight(&p)?);
        }
        for d in [0.01, 0.05, 0.1, 0.25] {
            let search = SearchConfig { seed: cfg.seed, budget: 20_000 };
            if let Some(hit) =
                constructions::ber_counterexample_search(n.min(constructions::BER_SEARCH_MAX_BITS), d, search)?
            {
                ber.lower(|| format!("{}(n={n}, d={d})", hit.family), hit.claimed_floor, hit.ber);
            }
        }
    }
    Ok(vec![per_bit, ber, failure])
}
