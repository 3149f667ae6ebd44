//! Closed-form bounds on attacker success.
//!
//! Probabilities are clamped into `[0, 1]`; [`BoundResult`] records whether
//! clamping happened. Two formulas are kept only as comparison columns and
//! carry [`Validity::FlaggedIncorrect`]: the independent per-bit failure
//! probability `(d/n)^n` and the BER floor `(1 - d)/2`. Both have refuting
//! instances in [`crate::constructions`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::dist::{binary_entropy, inverse_binary_entropy};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    Valid,
    FlaggedIncorrect,
}

fn clamp01(raw: f64) -> (f64, bool) {
    if raw > 1.0 {
        (1.0, true)
    } else if raw < 0.0 {
        (0.0, true)
    } else {
        (raw, false)
    }
}

fn prob_arg(name: &'static str, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::range(name, format!("{x} not in [0, 1]")));
    }
    Ok(x)
}

/// `2^-|K*| + delta`: best guess of any `|K*|`-bit subsequence.
pub fn subset_leak_bound(subset_len: f64, delta: f64) -> f64 {
    clamp01((-subset_len).exp2() + delta).0
}

/// `2^-(sum of lens) + delta` for several disjoint segments leaked together.
pub fn multi_segment_bound(segment_lens: &[f64], delta: f64) -> f64 {
    subset_leak_bound(segment_lens.iter().sum(), delta)
}

/// Same value as [`subset_leak_bound`], but it only bounds the average over
/// the known part `K1` of the conditional success on the rest.
pub fn kpa_average_bound(subset_len: f64, delta: f64) -> f64 {
    subset_leak_bound(subset_len, delta)
}

/// Markov inequality: `P[Z >= gamma] <= E[Z] / gamma`.
pub fn markov_tail(mean: f64, gamma: f64) -> Result<f64> {
    if mean < 0.0 || gamma <= 0.0 {
        return Err(Error::range("(mean, gamma)", format!("need mean >= 0 and gamma > 0, got ({mean}, {gamma})")));
    }
    Ok(clamp01(mean / gamma).0)
}

/// Individual guarantee from an average `epsilon` after one Markov step:
/// `2 epsilon^(1/2)`.
pub fn individual_guarantee(epsilon: f64) -> Result<f64> {
    Ok(clamp01(2.0 * prob_arg("epsilon", epsilon)?.sqrt()).0)
}

/// Known-plaintext individual guarantee after two Markov steps:
/// `3 epsilon^(1/3)`.
pub fn kpa_individual_guarantee(epsilon: f64) -> Result<f64> {
    Ok(clamp01(3.0 * prob_arg("epsilon", epsilon)?.cbrt()).0)
}

/// Lower bound on the entropy of an `n`-bit key within statistical distance
/// `epsilon` of uniform: `n - 2 eps (n + log2(1/(2 eps)))`.
pub fn entropy_floor(n: f64, epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        return n;
    }
    n - 2.0 * epsilon * (n + (1.0 / (2.0 * epsilon)).log2())
}

/// Lower bound on Eve's per-bit error rate `p_b`: the smaller root of
/// `n H2(p_b) = n - 2 eps (n + log2(1/(2 eps)))`, leakage neglected.
pub fn fano_ber_bound(n: f64, epsilon: f64) -> Result<f64> {
    fano_ber_bound_with_leak(n, epsilon, 0.0)
}

/// [`fano_ber_bound`] with a known mutual information `leak` subtracted from
/// the entropy floor.
pub fn fano_ber_bound_with_leak(n: f64, epsilon: f64, leak: f64) -> Result<f64> {
    if n < 1.0 {
        return Err(Error::range("n", format!("{n}")));
    }
    prob_arg("epsilon", epsilon)?;
    let rhs = entropy_floor(n, epsilon) - leak.max(0.0);
    if rhs <= 0.0 {
        return Err(Error::VacuousBound(format!("entropy floor {rhs} is not positive")));
    }
    inverse_binary_entropy((rhs / n).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PinskerBand {
    pub lower: f64,
    /// `None` when `2 delta > 1` puts `H2(2 delta)` out of domain.
    pub upper: Option<f64>,
}

/// `2 delta^2 <= I_E <= 8 n delta + 2 H2(2 delta)`.
pub fn pinsker_band(delta: f64, n: f64) -> Result<PinskerBand> {
    if delta < 0.0 {
        return Err(Error::range("delta", format!("{delta}")));
    }
    let upper = (2.0 * delta <= 1.0).then(|| 8.0 * n * delta + 2.0 * binary_entropy(2.0 * delta));
    Ok(PinskerBand { lower: 2.0 * delta * delta, upper })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LhlLength {
    /// Output length, zero when infeasible.
    pub bits: u64,
    /// `l - 2 log2(1/d)` before flooring.
    pub raw: f64,
    pub feasible: bool,
}

/// Longest hash output with guaranteed distance `d_target` from an input of
/// min-entropy `l` bits: `floor(l - 2 log2(1/d))`.
pub fn lhl_key_length(l: f64, d_target: f64) -> Result<LhlLength> {
    if l <= 0.0 {
        return Err(Error::range("l", format!("{l}")));
    }
    if !(d_target > 0.0 && d_target <= 1.0) {
        return Err(Error::range("d_target", format!("{d_target} not in (0, 1]")));
    }
    let raw = l - 2.0 * (1.0 / d_target).log2();
    let floored = (raw + 1e-9).floor();
    Ok(LhlLength { bits: floored.max(0.0) as u64, raw, feasible: raw >= -1e-9 })
}

/// Smallest distance the hashing step can certify: `p1(K')^(1/2)`.
pub fn lhl_min_d(p1_input: f64) -> Result<f64> {
    if !(p1_input > 0.0 && p1_input <= 1.0) {
        return Err(Error::range("p1", format!("{p1_input} not in (0, 1]")));
    }
    Ok(p1_input.sqrt())
}

fn qber_arg(qber: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&qber) {
        return Err(Error::range("qber", format!("{qber} not in [0, 0.5)")));
    }
    Ok(qber)
}

/// Parity bits to cover for error correction: `f |K''| H2(QBER)`.
pub fn ecc_leak(sifted_len: f64, qber: f64, f: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&f) {
        return Err(Error::range("f", format!("{f} not in [1, 2]")));
    }
    Ok(f * sifted_len * binary_entropy(qber_arg(qber)?))
}

/// Leak when the sifted key is the information part of a systematic code whose
/// parity digits cross a channel with the same error rate:
/// `|K''| H2 / (1 - H2)`.
pub fn ecc_leak_systematic(sifted_len: f64, qber: f64) -> Result<f64> {
    let h = binary_entropy(qber_arg(qber)?);
    if h >= 1.0 {
        return Err(Error::range("qber", "H2(qber) = 1"));
    }
    Ok(sifted_len * h / (1.0 - h))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MacInputs {
    /// Substitution bound of the hash family under a uniform key.
    pub epsilon: f64,
    /// Distance from uniform of the authentication key.
    pub epsilon_key: f64,
    /// Number of possible tags (cardinality, not bit length).
    pub tag_space: f64,
    pub uses: u64,
    /// Distance from uniform of the key covering the tags over repeated use.
    pub epsilon_tag_key: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MacBounds {
    /// Worst single tag: `eps + eps' |T|`.
    pub p_s_max: f64,
    /// Averaged over tags: `eps + eps'`.
    pub p_s_avg: f64,
    pub p_i_avg: f64,
    /// `eps + m eps''`.
    pub p_s_multiuse: f64,
    /// `1/|T|`: no family does better.
    pub epsilon_floor: f64,
    pub clamped: bool,
}

pub fn mac_bounds(inp: &MacInputs) -> Result<MacBounds> {
    prob_arg("epsilon", inp.epsilon)?;
    prob_arg("epsilon_key", inp.epsilon_key)?;
    prob_arg("epsilon_tag_key", inp.epsilon_tag_key)?;
    if inp.tag_space < 2.0 {
        return Err(Error::range("tag_space", format!("{}", inp.tag_space)));
    }
    if inp.uses < 1 {
        return Err(Error::range("uses", "must be at least 1"));
    }
    let (p_s_max, c1) = clamp01(inp.epsilon + inp.epsilon_key * inp.tag_space);
    let (p_s_avg, c2) = clamp01(inp.epsilon + inp.epsilon_key);
    let (p_s_multiuse, c3) = clamp01(inp.epsilon + inp.uses as f64 * inp.epsilon_tag_key);
    Ok(MacBounds {
        p_s_max,
        p_s_avg,
        p_i_avg: p_s_avg,
        p_s_multiuse,
        epsilon_floor: 1.0 / inp.tag_space,
        clamped: c1 || c2 || c3,
    })
}

/// `M / N`: success of `M` distinct trials against `N` equally likely keys.
pub fn complexity_success(trials: f64, keyspace: f64) -> Result<f64> {
    if !(keyspace > 0.0 && (0.0..=keyspace).contains(&trials)) {
        return Err(Error::range("(M, N)", format!("need 0 <= M <= N, got ({trials}, {keyspace})")));
    }
    Ok(trials / keyspace)
}

/// `(d/n)^n`, the per-bit failure reading. Flagged incorrect.
pub fn per_bit_fallacy(d: f64, n: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    per_bit_fallacy_log2(d, n).exp2()
}

/// `log2` of [`per_bit_fallacy`], usable where the value underflows.
pub fn per_bit_fallacy_log2(d: f64, n: f64) -> f64 {
    if d <= 0.0 {
        return f64::NEG_INFINITY;
    }
    n * (d / n).log2()
}

/// `(1 - d)/2`, the BER floor from the failure-probability reading. Flagged
/// incorrect.
pub fn ber_fallacy_bound(d: f64) -> f64 {
    (1.0 - d) / 2.0
}

/// Whole running-key leak of a non-degenerate keystream generator seeded with
/// `seed_bits` uniform bits: `2^-seed_bits`.
pub fn lfsr_whole_key_leak(seed_bits: u32) -> f64 {
    (-(seed_bits as f64)).exp2()
}

// ---------------------------------------------------------------------------
// Named evaluation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    SubsetLeak,
    MultiSegment,
    KpaAverage,
    MarkovTail,
    IndividualGuarantee,
    KpaIndividualGuarantee,
    FanoBer,
    PinskerBand,
    LhlKeyLength,
    LhlMinD,
    EccLeak,
    EccLeakSystematic,
    MacBounds,
    ComplexitySuccess,
    PerBitFallacy,
    BerFallacy,
    LfsrWholeKey,
}

impl Formula {
    pub const ALL: [Formula; 17] = [
        Formula::SubsetLeak,
        Formula::MultiSegment,
        Formula::KpaAverage,
        Formula::MarkovTail,
        Formula::IndividualGuarantee,
        Formula::KpaIndividualGuarantee,
        Formula::FanoBer,
        Formula::PinskerBand,
        Formula::LhlKeyLength,
        Formula::LhlMinD,
        Formula::EccLeak,
        Formula::EccLeakSystematic,
        Formula::MacBounds,
        Formula::ComplexitySuccess,
        Formula::PerBitFallacy,
        Formula::BerFallacy,
        Formula::LfsrWholeKey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formula::SubsetLeak => "subset-leak",
            Formula::MultiSegment => "multi-segment",
            Formula::KpaAverage => "kpa-average",
            Formula::MarkovTail => "markov-tail",
            Formula::IndividualGuarantee => "individual-guarantee",
            Formula::KpaIndividualGuarantee => "kpa-individual-guarantee",
            Formula::FanoBer => "fano-ber",
            Formula::PinskerBand => "pinsker-band",
            Formula::LhlKeyLength => "lhl-key-length",
            Formula::LhlMinD => "lhl-min-d",
            Formula::EccLeak => "ecc-leak",
            Formula::EccLeakSystematic => "ecc-leak-systematic",
            Formula::MacBounds => "mac-bounds",
            Formula::ComplexitySuccess => "complexity-success",
            Formula::PerBitFallacy => "per-bit-fallacy",
            Formula::BerFallacy => "ber-fallacy",
            Formula::LfsrWholeKey => "lfsr-whole-key",
        }
    }

    /// Parameter names, required unless listed with a default.
    pub fn params(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Formula::SubsetLeak | Formula::KpaAverage => &[("subset_len", None), ("delta", None)],
            Formula::MultiSegment => &[("lens", None), ("delta", None)],
            Formula::MarkovTail => &[("mean", None), ("gamma", None)],
            Formula::IndividualGuarantee | Formula::KpaIndividualGuarantee => &[("epsilon", None)],
            Formula::FanoBer => &[("n", None), ("epsilon", None), ("leak", Some(0.0))],
            Formula::PinskerBand => &[("delta", None), ("n", None)],
            Formula::LhlKeyLength => &[("l", None), ("d", None)],
            Formula::LhlMinD => &[("p1", None)],
            Formula::EccLeak => &[("sifted_len", None), ("qber", None), ("f", Some(1.0))],
            Formula::EccLeakSystematic => &[("sifted_len", None), ("qber", None)],
            Formula::MacBounds => &[
                ("epsilon", None),
                ("epsilon_key", None),
                ("tag_space", None),
                ("uses", Some(1.0)),
                ("epsilon_tag_key", Some(0.0)),
            ],
            Formula::ComplexitySuccess => &[("trials", None), ("keyspace", None)],
            Formula::PerBitFallacy => &[("d", None), ("n", None)],
            Formula::BerFallacy => &[("d", None)],
            Formula::LfsrWholeKey => &[("seed_bits", None)],
        }
    }

    pub fn validity(self) -> Validity {
        match self {
            Formula::PerBitFallacy | Formula::BerFallacy => Validity::FlaggedIncorrect,
            _ => Validity::Valid,
        }
    }

    /// Evaluate with named parameters. Every parameter is a list so segment
    /// lengths can be passed; scalars are one-element lists.
    pub fn evaluate(self, params: &BTreeMap<String, Vec<f64>>) -> Result<BoundResult> {
        for key in params.keys() {
            if !self.params().iter().any(|(name, _)| name == key) {
                return Err(Error::range("parameter", format!("`{key}` is not a parameter of {}", self.name())));
            }
        }
        let get = |name: &'static str| -> Result<f64> {
            match params.get(name) {
                Some(v) if v.len() == 1 => Ok(v[0]),
                Some(_) => Err(Error::range(name, "expected a single value")),
                None => self
                    .params()
                    .iter()
                    .find(|(n, _)| *n == name)
                    .and_then(|(_, d)| *d)
                    .ok_or_else(|| Error::range(name, "missing")),
            }
        };
        let mut inputs = BTreeMap::new();
        for (name, _) in self.params() {
            let v = match params.get(*name) {
                Some(list) if list.len() != 1 => Value::from(list.clone()),
                _ => Value::from(get(name)?),
            };
            inputs.insert(name.to_string(), v);
        }
        let mut extra = BTreeMap::new();
        let (value, clamped) = match self {
            Formula::SubsetLeak | Formula::KpaAverage => clamp01((-get("subset_len")?).exp2() + get("delta")?),
            Formula::MultiSegment => {
                let lens = params.get("lens").ok_or_else(|| Error::range("lens", "missing"))?;
                clamp01((-lens.iter().sum::<f64>()).exp2() + get("delta")?)
            }
            Formula::MarkovTail => {
                let (mean, gamma) = (get("mean")?, get("gamma")?);
                markov_tail(mean, gamma)?;
                clamp01(mean / gamma)
            }
            Formula::IndividualGuarantee => clamp01(2.0 * prob_arg("epsilon", get("epsilon")?)?.sqrt()),
            Formula::KpaIndividualGuarantee => clamp01(3.0 * prob_arg("epsilon", get("epsilon")?)?.cbrt()),
            Formula::FanoBer => {
                let (n, eps) = (get("n")?, get("epsilon")?);
                extra.insert("entropy_floor".into(), entropy_floor(n, eps));
                (fano_ber_bound_with_leak(n, eps, get("leak")?)?, false)
            }
            Formula::PinskerBand => {
                let band = pinsker_band(get("delta")?, get("n")?)?;
                extra.insert("lower".into(), band.lower);
                if let Some(u) = band.upper {
                    extra.insert("upper".into(), u);
                }
                (band.lower, false)
            }
            Formula::LhlKeyLength => {
                let r = lhl_key_length(get("l")?, get("d")?)?;
                extra.insert("raw".into(), r.raw);
                extra.insert("feasible".into(), if r.feasible { 1.0 } else { 0.0 });
                (r.bits as f64, !r.feasible)
            }
            Formula::LhlMinD => (lhl_min_d(get("p1")?)?, false),
            Formula::EccLeak => (ecc_leak(get("sifted_len")?, get("qber")?, get("f")?)?, false),
            Formula::EccLeakSystematic => (ecc_leak_systematic(get("sifted_len")?, get("qber")?)?, false),
            Formula::MacBounds => {
                let uses = get("uses")?;
                if uses < 1.0 || uses.fract() != 0.0 {
                    return Err(Error::range("uses", format!("{uses}")));
                }
                let b = mac_bounds(&MacInputs {
                    epsilon: get("epsilon")?,
                    epsilon_key: get("epsilon_key")?,
                    tag_space: get("tag_space")?,
                    uses: uses as u64,
                    epsilon_tag_key: get("epsilon_tag_key")?,
                })?;
                extra.insert("p_s_max".into(), b.p_s_max);
                extra.insert("p_s_avg".into(), b.p_s_avg);
                extra.insert("p_i_avg".into(), b.p_i_avg);
                extra.insert("p_s_multiuse".into(), b.p_s_multiuse);
                extra.insert("epsilon_floor".into(), b.epsilon_floor);
                (b.p_s_avg, b.clamped)
            }
            Formula::ComplexitySuccess => (complexity_success(get("trials")?, get("keyspace")?)?, false),
            Formula::PerBitFallacy => {
                let (d, n) = (prob_arg("d", get("d")?)?, get("n")?);
                extra.insert("log2_value".into(), per_bit_fallacy_log2(d, n));
                (per_bit_fallacy(d, n), false)
            }
            Formula::BerFallacy => (ber_fallacy_bound(prob_arg("d", get("d")?)?), false),
            Formula::LfsrWholeKey => {
                let bits = get("seed_bits")?;
                if bits < 1.0 || bits.fract() != 0.0 {
                    return Err(Error::range("seed_bits", format!("{bits}")));
                }
                extra.insert("log2_value".into(), -bits);
                (lfsr_whole_key_leak(bits as u32), false)
            }
        };
        Ok(BoundResult { formula: self, value, flag: self.validity(), clamped, inputs, extra })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formula::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::range("formula", format!("unknown formula `{s}`")))
    }
}

/// Output record of a named bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub formula: Formula,
    pub value: f64,
    pub flag: Validity,
    /// The raw value fell outside the formula's range and was clamped.
    pub clamped: bool,
    pub inputs: BTreeMap<String, Value>,
    /// Secondary outputs for formulas with more than one value.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}
