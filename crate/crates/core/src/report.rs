//! Protocol-round accounting and leak projections.
//!
//! Per-block compromise probabilities are handled as `log2` values so that
//! `2^-100000` and `(d/n)^n` stay representable; the linear-scale fields
//! underflow to zero when they must.
//!
//! Projections are expected counts. A report row says how often a block
//! leak is expected on average, which does not rule out a leak in any given
//! round; every row carries that caveat.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const AGE_OF_UNIVERSE_SECONDS: f64 = 4.35e17;

/// Caveat attached to every projection row.
pub const EXPECTATION_CAVEAT: &str = "expected value over many rounds; does not rule out a leak in any single round";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    pub label: String,
    /// Block length `|K_b|` in bits.
    pub block_len: f64,
    /// Statistical distance `d` of one block from uniform.
    pub d_level: f64,
    /// Final key rate in bits per second.
    pub key_rate: f64,
    /// Sifted key length `|K''|`.
    pub sifted_len: f64,
    pub qber: f64,
    /// Error-correction inefficiency `f`.
    pub ecc_factor: f64,
    /// Tag space cardinality of the authentication MAC.
    pub tag_space: f64,
    /// Seed length of the symmetric-cipher baseline.
    pub seed_key_bits: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            label: String::new(),
            block_len: 1e5,
            d_level: 1e-9,
            key_rate: 1e7,
            sifted_len: 1e5,
            qber: 0.0,
            ecc_factor: 1.0,
            tag_space: 32f64.exp2(),
            seed_key_bits: 128,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, v: f64| Err(Error::range(name, format!("{v}")));
        if !(self.block_len >= 1.0) {
            return bad("block_len", self.block_len);
        }
        if !(0.0..=1.0).contains(&self.d_level) {
            return bad("d_level", self.d_level);
        }
        if !(self.key_rate > 0.0 && self.key_rate.is_finite()) {
            return bad("key_rate", self.key_rate);
        }
        if !(self.sifted_len >= 1.0) {
            return bad("sifted_len", self.sifted_len);
        }
        if !(0.0..0.5).contains(&self.qber) {
            return bad("qber", self.qber);
        }
        if !(1.0..=2.0).contains(&self.ecc_factor) {
            return bad("ecc_factor", self.ecc_factor);
        }
        if !(self.tag_space >= 2.0) {
            return bad("tag_space", self.tag_space);
        }
        if self.seed_key_bits == 0 {
            return bad("seed_key_bits", 0.0);
        }
        Ok(())
    }

    pub fn blocks_per_day(&self) -> f64 {
        self.key_rate * SECONDS_PER_DAY / self.block_len
    }
}

/// How a block's compromise probability is derived from `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `2^-n + d`: average guarantee on any segment of the block.
    Average,
    /// Markov step from the average: individual guarantee.
    Individual,
    /// Two Markov steps: individual guarantee under known plaintext.
    KpaIndividual,
    /// `(d/n)^n`. Flagged incorrect.
    PerBitFallacy,
    /// `2^-n`: a perfectly uniform key.
    Uniform,
    /// `2^-seed`: a non-degenerate keystream generator.
    SymmetricCipher,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::PerBitFallacy,
        Model::Average,
        Model::Individual,
        Model::KpaIndividual,
        Model::Uniform,
        Model::SymmetricCipher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Average => "average",
            Model::Individual => "individual",
            Model::KpaIndividual => "kpa-individual",
            Model::PerBitFallacy => "per-bit-fallacy",
            Model::Uniform => "uniform",
            Model::SymmetricCipher => "symmetric-cipher",
        }
    }

    pub fn flagged(self) -> bool {
        self == Model::PerBitFallacy
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::range("model", format!("unknown model `{s}`")))
    }
}

/// Constants in the individual guarantees.
///
/// `Level` uses `d^(1/2)` and `d^(1/3)`, the levels at which the Markov steps
/// are taken; the headline leak figures follow it. `Bound` uses the full
/// `2 d^(1/2)` and `3 d^(1/3)`, which add the failure probability of each
/// Markov step to the level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkovConvention {
    #[default]
    Level,
    Bound,
}

impl MarkovConvention {
    fn coefficient(self, steps: u32) -> f64 {
        match self {
            MarkovConvention::Level => 1.0,
            MarkovConvention::Bound => (steps + 1) as f64,
        }
    }
}

impl std::str::FromStr for MarkovConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level" => Ok(MarkovConvention::Level),
            "bound" => Ok(MarkovConvention::Bound),
            _ => Err(Error::range("convention", format!("unknown convention `{s}`"))),
        }
    }
}

/// `log2(2^a + 2^b)`.
fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// `log2` of the per-block compromise probability, capped at 0.
pub fn per_block_log2(model: Model, params: &ProtocolParams, conv: MarkovConvention) -> f64 {
    let n = params.block_len;
    let d = params.d_level;
    let ld = if d > 0.0 { d.log2() } else { f64::NEG_INFINITY };
    let v = match model {
        Model::Average => log2_add(-n, ld),
        Model::Individual => log2_add(-n, conv.coefficient(1).log2() + ld / 2.0),
        Model::KpaIndividual => log2_add(-n, conv.coefficient(2).log2() + ld / 3.0),
        Model::PerBitFallacy => bounds::per_bit_fallacy_log2(d, n),
        Model::Uniform => -n,
        Model::SymmetricCipher => -(params.seed_key_bits as f64),
    };
    v.min(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeakProjection {
    pub model: Model,
    pub convention: MarkovConvention,
    pub flagged: bool,
    pub blocks_per_day: f64,
    pub per_block_probability: f64,
    pub log2_per_block: f64,
    /// `-log2` of the per-block probability.
    pub security_bits: f64,
    pub expected_block_leaks_per_day: f64,
    pub expected_bit_leaks_per_day: f64,
    /// `log10` of expected block leaks per day, finite even when the linear
    /// value underflows.
    pub log10_block_leaks_per_day: f64,
    pub mean_days_to_leak: f64,
    pub mean_seconds_to_leak: f64,
    pub caveat: &'static str,
}

pub fn leak_projection(params: &ProtocolParams, model: Model, conv: MarkovConvention) -> Result<LeakProjection> {
    params.validate()?;
    let blocks = params.blocks_per_day();
    let lp = per_block_log2(model, params, conv);
    let log2_leaks = blocks.log2() + lp;
    let leaks = log2_leaks.exp2();
    Ok(LeakProjection {
        model,
        convention: conv,
        flagged: model.flagged(),
        blocks_per_day: blocks,
        per_block_probability: lp.exp2(),
        log2_per_block: lp,
        security_bits: -lp,
        expected_block_leaks_per_day: leaks,
        expected_bit_leaks_per_day: leaks * params.block_len,
        log10_block_leaks_per_day: log2_leaks * std::f64::consts::LOG10_2,
        mean_days_to_leak: 1.0 / leaks,
        mean_seconds_to_leak: SECONDS_PER_DAY / leaks,
        caveat: EXPECTATION_CAVEAT,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetRate {
    pub leak_bits: f64,
    /// Rate after deducting the error-correction leak, bits per second.
    pub net_rate: f64,
    pub feasible: bool,
    pub systematic: bool,
}

/// Key rate scaled by `(|K''| - leak_EC) / |K''|`.
pub fn net_key_rate(params: &ProtocolParams, systematic: bool) -> Result<NetRate> {
    params.validate()?;
    let leak = if systematic {
        bounds::ecc_leak_systematic(params.sifted_len, params.qber)?
    } else {
        bounds::ecc_leak(params.sifted_len, params.qber, params.ecc_factor)?
    };
    let kept = params.sifted_len - leak;
    Ok(NetRate {
        leak_bits: leak,
        net_rate: if kept > 0.0 { params.key_rate * kept / params.sifted_len } else { 0.0 },
        feasible: kept > 0.0,
        systematic,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RequiredD {
    /// `None` when the model does not depend on `d`.
    pub d: Option<f64>,
    /// The per-block probability the target allows.
    pub per_block_allowed: f64,
    /// The model's per-block probability when it does not depend on `d`.
    pub per_block_floor: Option<f64>,
    /// The target is met for any `d`.
    pub unconstrained: bool,
    /// The target cannot be met at any `d`.
    pub infeasible: bool,
}

/// Largest `d` with `blocks * per_block(d) <= target`.
pub fn required_d(target: f64, blocks: f64, model: Model, conv: MarkovConvention, block_len: f64) -> Result<RequiredD> {
    if !(target > 0.0) {
        return Err(Error::range("target", format!("{target} must be positive")));
    }
    if !(blocks > 0.0) {
        return Err(Error::range("blocks", format!("{blocks}")));
    }
    if block_len < 1.0 {
        return Err(Error::range("block_len", format!("{block_len}")));
    }
    let floor = (-block_len).exp2();
    let allowed = (target / blocks).min(1.0);
    let base = RequiredD {
        d: None,
        per_block_allowed: allowed,
        per_block_floor: None,
        unconstrained: false,
        infeasible: false,
    };
    if target >= 1.0 {
        return Ok(RequiredD { d: Some(1.0), unconstrained: true, ..base });
    }
    // Invert `floor + c d^(1/power) = allowed`.
    let invert = |power: i32, c: f64| -> RequiredD {
        let room = allowed - floor;
        if room <= 0.0 {
            RequiredD { d: Some(0.0), infeasible: true, ..base }
        } else {
            RequiredD { d: Some((room / c).powi(power).min(1.0)), ..base }
        }
    };
    Ok(match model {
        Model::PerBitFallacy => {
            return Err(Error::Unsupported("per-bit-fallacy is flagged incorrect and is not inverted".into()))
        }
        Model::Average => invert(1, 1.0),
        Model::Individual => invert(2, conv.coefficient(1)),
        Model::KpaIndividual => invert(3, conv.coefficient(2)),
        Model::Uniform => RequiredD { per_block_floor: Some(floor), infeasible: blocks * floor > target, ..base },
        Model::SymmetricCipher => {
            return Err(Error::Unsupported("symmetric-cipher depends on the seed length, not d".into()))
        }
    })
}

/// Prose reference values for a projection, when the inputs match one of the
/// worked numerical points.
pub fn published_reference(params: &ProtocolParams, model: Model) -> Option<&'static str> {
    let near = |a: f64, b: f64| (a / b - 1.0).abs() < 1e-6;
    let theory = near(params.block_len, 1e5) && near(params.d_level, 1e-9) && near(params.key_rate, 1e7);
    let experiment = near(params.block_len, 1e5) && near(params.d_level, 4e-9) && near(params.key_rate, 1.4e5);
    match model {
        Model::Average if theory => Some("one block leak on average every 100 days"),
        Model::Average if near(params.d_level, 1e-9) => Some("only 30 bits of security"),
        Model::Individual if theory => Some("300 blocks per day"),
        Model::KpaIndividual if theory => Some("one block every 10 seconds"),
        Model::Individual if experiment => Some("6 blocks per day"),
        Model::KpaIndividual if experiment => Some("100 blocks per day"),
        Model::SymmetricCipher if params.seed_key_bits == 128 => Some("p1 level ~1e-40"),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub model: Model,
    pub flagged: bool,
    pub per_block_probability: f64,
    pub log2_per_block: f64,
    pub security_bits: f64,
    pub expected_block_leaks_per_day: f64,
    pub expected_bit_leaks_per_day: f64,
    pub mean_days_to_leak: f64,
    /// `None` marks a derived-only cell.
    pub reference: Option<&'static str>,
    pub caveat: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableReport {
    pub convention: MarkovConvention,
    pub rows: Vec<TableRow>,
    pub observations: Vec<String>,
}

/// One row per model for every parameter set.
pub fn table_report(params_list: &[ProtocolParams], conv: MarkovConvention) -> Result<TableReport> {
    if params_list.is_empty() {
        return Err(Error::range("params", "at least one parameter set is required"));
    }
    let mut rows = Vec::new();
    let mut observations = Vec::new();
    for (i, params) in params_list.iter().enumerate() {
        let label = if params.label.is_empty() { format!("set{}", i + 1) } else { params.label.clone() };
        for model in Model::ALL {
            let p = leak_projection(params, model, conv)?;
            rows.push(TableRow {
                label: label.clone(),
                model,
                flagged: p.flagged,
                per_block_probability: p.per_block_probability,
                log2_per_block: p.log2_per_block,
                security_bits: p.security_bits,
                expected_block_leaks_per_day: p.expected_block_leaks_per_day,
                expected_bit_leaks_per_day: p.expected_bit_leaks_per_day,
                mean_days_to_leak: p.mean_days_to_leak,
                reference: published_reference(params, model),
                caveat: p.caveat,
            });
        }
        let avg = -per_block_log2(Model::Average, params, conv);
        observations.push(format!(
            "{label}: d = {:e} gives {:.1} bits of security per block against {} bits for a {}-bit seed",
            params.d_level, avg, params.seed_key_bits, params.seed_key_bits
        ));
    }
    Ok(TableReport { convention: conv, rows, observations })
}

fn sci(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        format!("{x}")
    } else if (1e-3..1e6).contains(&x.abs()) {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

impl TableReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        s.push_str(
            "| set | model | P(block) | security bits | block leaks/day | bit leaks/day | days to leak | reference |\n",
        );
        s.push_str("|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let model = if r.flagged { format!("{} (incorrect)", r.model.name()) } else { r.model.name().to_string() };
            let p = if r.per_block_probability > 0.0 {
                sci(r.per_block_probability)
            } else {
                format!("2^{:.4e}", r.log2_per_block)
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.2} | {} | {} | {} | {} |",
                r.label,
                model,
                p,
                r.security_bits,
                sci(r.expected_block_leaks_per_day),
                sci(r.expected_bit_leaks_per_day),
                sci(r.mean_days_to_leak),
                r.reference.unwrap_or("derived")
            );
        }
        s.push('\n');
        for o in &self.observations {
            let _ = writeln!(s, "- {o}");
        }
        let _ = writeln!(s, "- all leak figures are {EXPECTATION_CAVEAT}");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerBitAnalysis {
    pub per_bit_level: f64,
    pub block_len: f64,
    pub key_rate: f64,
    /// Block distance `d = per_bit_level * block_len`.
    pub d: f64,
    /// Linear accumulation of the per-bit level over the age of the universe.
    pub per_bit_accumulated: f64,
    pub fallacy_log2_per_block: f64,
    /// `log2` of the block-count times the per-block fallacy value over the
    /// age of the universe.
    pub fallacy_log2_accumulated: f64,
    pub projections: Vec<LeakProjection>,
    pub reference_bits_per_day_ciphertext_only: f64,
    pub reference_bits_per_second_kpa: f64,
}

pub fn per_bit_analysis(
    per_bit_level: f64,
    block_len: f64,
    key_rate: f64,
    conv: MarkovConvention,
) -> Result<PerBitAnalysis> {
    let d = per_bit_level * block_len;
    let params = ProtocolParams { block_len, d_level: d, key_rate, sifted_len: block_len, ..Default::default() };
    params.validate()?;
    let fallacy = per_block_log2(Model::PerBitFallacy, &params, conv);
    let blocks_total = key_rate * AGE_OF_UNIVERSE_SECONDS / block_len;
    let projections = [Model::Average, Model::Individual, Model::KpaIndividual]
        .into_iter()
        .map(|m| leak_projection(&params, m, conv))
        .collect::<Result<_>>()?;
    Ok(PerBitAnalysis {
        per_bit_level,
        block_len,
        key_rate,
        d,
        per_bit_accumulated: per_bit_level * key_rate * AGE_OF_UNIVERSE_SECONDS,
        fallacy_log2_per_block: fallacy,
        fallacy_log2_accumulated: blocks_total.log2() + fallacy,
        projections,
        reference_bits_per_day_ciphertext_only: 1e4,
        reference_bits_per_second_kpa: 100.0,
    })
}
