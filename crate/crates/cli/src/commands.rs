use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use keyleak::bounds::{self, Formula};
use keyleak::constructions;
use keyleak::dist::{key_to_bits, rational_to_f64, ExactDistribution};
use keyleak::oracle::{self, EccMap, HashFamily, SweepConfig};
use keyleak::primitives::{
    lfsr_keystream, mac_epsilon, otp_decrypt, otp_encrypt, toeplitz_hash, window_histogram, Bits, LfsrSpec, MacFamily,
    ToeplitzMatrix, MAC_BUDGET,
};
use keyleak::report::{self, Model, ProtocolParams};
use keyleak::{KeyDistribution, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{exact_from_f64, parse_number, parse_rational, parse_u64, Settings};
use crate::output::{cell, Rendered, Table};

/// Outcome of a command: its output and whether a valid bound was violated.
pub struct Outcome {
    pub rendered: Rendered,
    pub violation: bool,
}

impl From<Rendered> for Outcome {
    fn from(rendered: Rendered) -> Self {
        Self { rendered, violation: false }
    }
}

fn load(path: &Path) -> Result<KeyDistribution> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    KeyDistribution::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn rat(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

// ---------------------------------------------------------------------------
// construct

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    /// Spike on one key, its prefix siblings emptied (needs --m)
    Kpa,
    /// Known subset guessable with probability 2^-|S| + delta (needs --subset, --delta)
    Saturating,
    /// One key at 2^-l, the rest flat (needs --l)
    Spiked,
    /// Independent bits agreeing with the anchor with probability --agree
    Biased,
    Uniform,
    /// All mass on the anchor
    Point,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(value_enum)]
    family: Family,
    /// Key length in bits
    #[arg(long)]
    n: u32,
    /// Known-prefix length for `kpa`
    #[arg(long)]
    m: Option<u32>,
    /// Comma-separated bit positions for `saturating`
    #[arg(long, value_delimiter = ',')]
    subset: Vec<u32>,
    /// Distance from uniform for `saturating`: decimal, a/b or 2^-k
    #[arg(long)]
    delta: Option<String>,
    /// Spike exponent for `spiked`
    #[arg(long)]
    l: Option<u32>,
    /// Per-bit agreement probability for `biased`
    #[arg(long, default_value = "0.6")]
    agree: f64,
    /// Anchor key as an integer (bit 0 is the first transmitted bit)
    #[arg(long, default_value = "0", value_parser = parse_u64)]
    anchor: u64,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("this family needs --{flag}"))
}

pub fn construct(a: &ConstructArgs, s: &Settings) -> Result<Outcome> {
    let exact: Option<ExactDistribution> = if s.exact {
        match a.family {
            Family::Kpa => Some(constructions::kpa_counterexample_exact(a.n, need(a.m, "m")?, a.anchor)?),
            Family::Saturating => {
                let delta = parse_rational(&need(a.delta.clone(), "delta")?)?;
                Some(constructions::saturating_distribution_exact(a.n, &a.subset, delta, a.anchor)?)
            }
            Family::Spiked => Some(constructions::spiked_distribution_exact(a.n, need(a.l, "l")?)?),
            _ => None,
        }
    } else {
        None
    };
    let p = match (&exact, a.family) {
        (Some(e), _) => e.to_f64()?,
        (None, Family::Kpa) => constructions::kpa_counterexample_at(a.n, need(a.m, "m")?, a.anchor)?,
        (None, Family::Saturating) => {
            let delta = parse_number(&need(a.delta.clone(), "delta")?)?;
            constructions::saturating_distribution_at(a.n, &a.subset, delta, a.anchor)?
        }
        (None, Family::Spiked) => constructions::spiked_distribution(a.n, need(a.l, "l")?)?,
        (None, Family::Biased) => {
            let b = constructions::biased_bits(a.n, a.agree)?;
            if a.anchor == 0 {
                b
            } else {
                b.pushforward(a.n, |k| k ^ a.anchor)?
            }
        }
        (None, Family::Uniform) => KeyDistribution::uniform(a.n)?,
        (None, Family::Point) => KeyDistribution::point_mass(a.n, a.anchor)?,
    };
    let file = p.to_file();
    let mut table = Table::new(["key", "probability"]);
    for (k, prob) in &file.atoms {
        table.push(vec![k.clone(), prob.to_string()]);
    }
    let mut json = serde_json::to_value(&file)?;
    if let Some(e) = exact {
        let atoms: Vec<Value> = e
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r != Rational::new(0, 1))
            .map(|(k, r)| json!([key_to_bits(k as u64, a.n), rat(r)]))
            .collect();
        // Kept outside the loadable fields so the file still parses.
        json.as_object_mut().expect("object").insert("exact_atoms".into(), Value::Array(atoms));
    }
    let md = format!("n = {}, unlisted keys: {:?}\n\n{}", file.n, file.background, crate::output::markdown(&table));
    Ok(Rendered::json(json).with_table(table).with_markdown(md).into())
}

// ---------------------------------------------------------------------------
// bound

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Formula name; omit with --list
    formula: Option<String>,
    /// `name=value[,value...]`; values accept decimals, a/b and 2^-k
    #[arg(short, long = "param")]
    params: Vec<String>,
    /// List formulas and their parameters
    #[arg(long)]
    list: bool,
}

pub fn bound(a: &BoundArgs) -> Result<Outcome> {
    if a.list || a.formula.is_none() {
        let mut table = Table::new(["formula", "parameters", "flag"]);
        let mut list = Vec::new();
        for f in Formula::ALL {
            let params: Vec<String> = f
                .params()
                .iter()
                .map(|(n, d)| match d {
                    Some(d) => format!("{n}={d}"),
                    None => n.to_string(),
                })
                .collect();
            let flag = serde_json::to_value(f.validity())?;
            table.push(vec![f.name().into(), params.join(" "), cell(&flag)]);
            list.push(json!({"formula": f.name(), "parameters": params, "flag": flag}));
        }
        return Ok(Rendered::json(Value::Array(list)).with_table(table).into());
    }
    let formula: Formula = a.formula.as_deref().unwrap_or_default().parse().map_err(|e| anyhow!("{e}"))?;
    let mut params = BTreeMap::new();
    for p in &a.params {
        let (name, values) = p.split_once('=').ok_or_else(|| anyhow!("parameter `{p}` is not name=value"))?;
        let values = values.split(',').map(parse_number).collect::<Result<Vec<_>>>()?;
        if params.insert(name.trim().to_string(), values).is_some() {
            bail!("parameter `{name}` given twice");
        }
    }
    let r = formula.evaluate(&params)?;
    Ok(Rendered::json(serde_json::to_value(&r)?).into())
}

// ---------------------------------------------------------------------------
// verify

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Seeded random distributions per bound
    #[arg(long)]
    instances: Option<usize>,
    /// Largest key length enumerated (2..=10)
    #[arg(long)]
    max_bits: Option<u32>,
    /// Multiply every valid bound by this factor before checking (fault injection)
    #[arg(long, default_value = "1.0")]
    bound_scale: f64,
}

/// Record `truth <= bound` decided in exact arithmetic.
fn exact_upper(
    r: &mut oracle::VerificationReport,
    instance: impl FnOnce() -> String,
    bound: Rational,
    truth: Rational,
) {
    let (b, t) = (rational_to_f64(&bound), rational_to_f64(&truth));
    let slack = b - t;
    r.instances_checked += 1;
    r.min_slack = Some(r.min_slack.map_or(slack, |x| x.min(slack)));
    r.max_slack = Some(r.max_slack.map_or(slack, |x| x.max(slack)));
    if truth > bound {
        r.violations.push(oracle::Violation { instance: instance(), bound_value: b, true_value: t });
    }
}

fn exact_checks(max_bits: u32, scale: Rational, seed: u64) -> Result<Vec<oracle::VerificationReport>> {
    let mut sat = oracle::VerificationReport::new("subset-leak-exact", false, seed);
    let mut kpa = oracle::VerificationReport::new("kpa-average-exact", false, seed);
    for n in 2..=max_bits.min(10) {
        for s in 1..=n {
            let subset: Vec<u32> = (0..s).collect();
            for j in 1..=6u32 {
                let delta = Rational::new(1, 1i128 << j);
                if rational_to_f64(&delta) > constructions::saturating_max_delta(s) {
                    continue;
                }
                let p = constructions::saturating_distribution_exact(n, &subset, delta, 0)?;
                let bound = (Rational::new(1, 1i128 << s) + p.distance_to_uniform()?) * scale;
                exact_upper(
                    &mut sat,
                    || format!("saturating n={n} s={s} delta=2^-{j}"),
                    bound,
                    p.subset_success(&subset)?,
                );
            }
        }
        for m in 1..n {
            let p = constructions::kpa_counterexample_exact(n, m, 0)?;
            let known: Vec<u32> = (0..m).collect();
            let (_, avg) = oracle::exhaustive_kpa_exact(&p, &known)?;
            let bound = (Rational::new(1, 1i128 << (n - m)) + p.distance_to_uniform()?) * scale;
            exact_upper(&mut kpa, || format!("kpa n={n} m={m}"), bound, avg);
        }
    }
    Ok(vec![sat, kpa])
}

pub fn verify(a: &VerifyArgs, s: &Settings) -> Result<Outcome> {
    if !(a.bound_scale.is_finite() && a.bound_scale > 0.0) {
        bail!("--bound-scale must be positive");
    }
    let cfg = SweepConfig {
        seed: s.seed,
        random_instances: a.instances.or(s.instances).unwrap_or(1000),
        max_bits: a.max_bits.or(s.max_bits).unwrap_or(10),
        bound_scale: a.bound_scale,
    };
    let mut reports = oracle::soundness_sweep(&cfg)?;
    if s.exact {
        let scale = exact_from_f64(a.bound_scale).ok_or_else(|| anyhow!("--bound-scale has no exact value"))?;
        reports.extend(exact_checks(cfg.max_bits, scale, s.seed)?);
    }
    reports.extend(oracle::refutation_sweep(&cfg)?);

    let broken: Vec<&str> =
        reports.iter().filter(|r| !r.flagged && !r.passed()).map(|r| r.bound_name.as_str()).collect();
    let refuted: Vec<&str> = reports.iter().filter(|r| r.refuted()).map(|r| r.bound_name.as_str()).collect();
    let unrefuted: Vec<&str> =
        reports.iter().filter(|r| r.flagged && !r.refuted()).map(|r| r.bound_name.as_str()).collect();
    let mut table = Table::new(["bound", "flagged", "instances", "violations", "min_slack", "status"]);
    for r in &reports {
        let status = match (r.flagged, r.passed()) {
            (false, true) => "holds",
            (false, false) => "VIOLATED",
            (true, false) => "refuted",
            (true, true) => "not refuted",
        };
        table.push(vec![
            r.bound_name.clone(),
            r.flagged.to_string(),
            r.instances_checked.to_string(),
            r.violations.len().to_string(),
            r.min_slack.map(|x| format!("{x:.6e}")).unwrap_or_default(),
            status.into(),
        ]);
    }
    let json = json!({
        "config": cfg,
        "exact": s.exact,
        "violated_valid_bounds": broken,
        "refuted_flagged_bounds": refuted,
        "unrefuted_flagged_bounds": unrefuted,
        "reports": reports,
    });
    let violation = !broken.is_empty();
    Ok(Outcome { rendered: Rendered::json(json).with_table(table), violation })
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Subcommand, Debug)]
pub enum Simulate {
    /// XOR a message with a key of the same length (bit strings, bit 0 first)
    Otp {
        #[arg(long)]
        message: String,
        #[arg(long)]
        key: String,
    },
    /// Multiply an input by a Toeplitz matrix over GF(2)
    Toeplitz {
        #[arg(long)]
        rows: u32,
        #[arg(long)]
        cols: u32,
        /// rows + cols - 1 diagonal bits as hex (byte j holds bits 8j..8j+8, low bit first); random from --seed when omitted
        #[arg(long)]
        diagonals: Option<String>,
        /// Input bits as hex, same layout
        #[arg(long)]
        input: String,
    },
    /// Fibonacci LFSR keystream, period and window balance
    Lfsr {
        #[arg(long, default_value = "8")]
        degree: u32,
        /// Feedback polynomial including the x^degree and constant terms; maximal presets exist for degrees 4 and 8
        #[arg(long, value_parser = parse_u64)]
        taps: Option<u64>,
        #[arg(long, default_value = "1", value_parser = parse_u64)]
        state: u64,
        #[arg(long, default_value = "64")]
        len: usize,
        /// Also count each window pattern of this width over all nonzero seeds
        #[arg(long)]
        window: Option<u32>,
    },
    /// Polynomial-evaluation MAC: exhaustive epsilon and attacks under a key distribution
    Mac {
        #[arg(long, default_value = "4")]
        field_bits: u32,
        #[arg(long, default_value = "2")]
        blocks: u32,
        /// Key distribution file over 2 * field_bits bits (uniform when omitted)
        #[arg(long)]
        key: Option<std::path::PathBuf>,
        /// Use a spiked key with one key at 2^-l instead of a file
        #[arg(long, conflicts_with = "key")]
        spike: Option<u32>,
    },
    /// Empirical leftover-hash check over a Toeplitz family
    Lhl {
        /// Input distribution file
        #[arg(long)]
        input: Option<std::path::PathBuf>,
        /// Uniform input of this many bits instead of a file
        #[arg(long, conflicts_with = "input")]
        uniform: Option<u32>,
        /// Output bits
        #[arg(long)]
        m: u32,
        /// Sample this many matrices instead of the full family
        #[arg(long)]
        sampled: Option<u64>,
    },
    /// Random sifted-corrected-final pipelines: p1 must never decrease
    Pipeline {
        #[arg(long, default_value = "10")]
        n: u32,
        #[arg(long, default_value = "100")]
        trials: usize,
    },
    /// Optimal distinguisher between two distribution files
    Distinguish {
        #[arg(long)]
        h0: std::path::PathBuf,
        #[arg(long)]
        h1: std::path::PathBuf,
        #[arg(long, default_value = "0.5")]
        prior: f64,
    },
}

fn lfsr_spec(degree: u32, taps: Option<u64>) -> Result<LfsrSpec> {
    Ok(match (degree, taps) {
        (_, Some(t)) => LfsrSpec::new(degree, t)?,
        (4, None) => LfsrSpec::maximal4(),
        (8, None) => LfsrSpec::maximal8(),
        _ => bail!("--taps is required for degree {degree}"),
    })
}

pub fn simulate(what: &Simulate, s: &Settings) -> Result<Outcome> {
    let json = match what {
        Simulate::Otp { message, key } => {
            let x: Bits = message.parse()?;
            let k: Bits = key.parse()?;
            let y = otp_encrypt(&x, &k)?;
            let back = otp_decrypt(&y, &k)?;
            json!({"message": x.to_string(), "key": k.to_string(), "ciphertext": y.to_string(), "roundtrip": back == x})
        }
        Simulate::Toeplitz { rows, cols, diagonals, input } => {
            let t = match diagonals {
                Some(h) => {
                    let bits = Bits::from_hex(h, (rows + cols - 1) as usize)?;
                    ToeplitzMatrix::new(*rows, *cols, bits.to_word().ok_or_else(|| anyhow!("matrix too large"))?)?
                }
                None => ToeplitzMatrix::random(*rows, *cols, &mut ChaCha8Rng::seed_from_u64(s.seed))?,
            };
            let x = Bits::from_hex(input, *cols as usize)?;
            let y = toeplitz_hash(&x, &t)?;
            let diag = Bits::from_word(t.diagonals(), (rows + cols - 1) as usize);
            json!({
                "rows": rows, "cols": cols,
                "diagonals": diag.to_string(), "diagonals_hex": diag.to_hex(),
                "rank": t.rank(), "full_rank": t.is_full_rank(),
                "input": x.to_string(), "output": y.to_string(), "output_hex": y.to_hex(),
            })
        }
        Simulate::Lfsr { degree, taps, state, len, window } => {
            let spec = lfsr_spec(*degree, *taps)?;
            let ks = lfsr_keystream(&spec, *state, *len)?;
            let period = if *state == 0 || *degree > 24 { None } else { Some(spec.period(*state)?) };
            let mut j = json!({
                "degree": degree, "taps": format!("{:#x}", spec.taps()), "state": state,
                "keystream": ks.bits.to_string(), "degenerate": ks.degenerate,
                "period": period, "maximal": period == Some((1u64 << degree) - 1),
            });
            if let Some(w) = window {
                let h = window_histogram(&spec, 0, *w)?;
                let nonzero = &h[1..];
                j["window"] = json!({
                    "width": w,
                    "zero_pattern": h[0],
                    "nonzero_min": nonzero.iter().min(),
                    "nonzero_max": nonzero.iter().max(),
                    "balanced": nonzero.iter().all(|&c| c == nonzero[0]),
                });
            }
            j
        }
        Simulate::Mac { field_bits, blocks, key, spike } => {
            let f = MacFamily::polynomial(*field_bits, *blocks)?;
            let eps = mac_epsilon(&f, MAC_BUDGET)?;
            let dist = match (key, spike) {
                (Some(path), _) => load(path)?,
                (None, Some(l)) => constructions::spiked_distribution(f.key_bits(), *l)?,
                (None, None) => KeyDistribution::uniform(f.key_bits())?,
            };
            if dist.n() != f.key_bits() {
                bail!("key distribution has {} bits, the family needs {}", dist.n(), f.key_bits());
            }
            let attack = oracle::mac_attack_search(&f, &dist, MAC_BUDGET)?;
            let b = bounds::mac_bounds(&bounds::MacInputs {
                epsilon: eps,
                epsilon_key: attack.epsilon_prime,
                tag_space: f.tag_count() as f64,
                uses: 1,
                epsilon_tag_key: 0.0,
            })?;
            json!({
                "field_bits": field_bits, "blocks": blocks, "tags": f.tag_count(),
                "epsilon": eps, "nominal_epsilon": f.nominal_epsilon(),
                "attack": attack, "bounds": b,
                "average_within_bound": attack.average <= b.p_s_avg + 1e-12,
                "worst_within_bound": attack.worst_tag <= b.p_s_max + 1e-12,
            })
        }
        Simulate::Lhl { input, uniform, m, sampled } => {
            let p = match (input, uniform) {
                (Some(path), _) => load(path)?,
                (None, Some(n)) => KeyDistribution::uniform(*n)?,
                (None, None) => bail!("give --input or --uniform"),
            };
            let family = match sampled {
                Some(count) => HashFamily::Sampled { count: *count, seed: s.seed },
                None => HashFamily::Full,
            };
            serde_json::to_value(oracle::lhl_empirical(&p, *m, family)?)?
        }
        Simulate::Pipeline { n, trials } => pipeline(*n, *trials, s.seed)?,
        Simulate::Distinguish { h0, h1, prior } => {
            let (p0, p1) = (load(h0)?, load(h1)?);
            let pc = oracle::optimal_distinguisher(&p0, &p1, *prior)?;
            let bayes = oracle::bayes_decision_success(&p0, &p1, *prior)?;
            json!({"prior0": prior, "distance": p0.stat_distance(&p1)?, "optimal_success": pc, "bayes_rule_success": bayes})
        }
    };
    let violation = json.get("average_within_bound") == Some(&Value::Bool(false))
        || json.get("worst_within_bound") == Some(&Value::Bool(false))
        || json.get("holds") == Some(&Value::Bool(false))
        || json.get("violations").and_then(Value::as_u64).is_some_and(|v| v > 0);
    Ok(Outcome { rendered: Rendered::json(json), violation })
}

fn pipeline(n: u32, trials: usize, seed: u64) -> Result<Value> {
    use rand::Rng;
    if !(2..=12).contains(&n) {
        bail!("--n must be in 2..=12");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    let mut ecc_changed = 0u64;
    let mut samples = Vec::new();
    for i in 0..trials {
        let p = oracle::random_distribution(n, &mut rng)?;
        let ecc = if i % 2 == 0 {
            EccMap::Identity
        } else {
            EccMap::Table { out_bits: n, table: (0..1u64 << n).map(|_| rng.gen_range(0..1u64 << n)).collect() }
        };
        let m = rng.gen_range(1..=n);
        let pac = loop {
            let t = ToeplitzMatrix::random(m, n, &mut rng)?;
            if t.is_full_rank() {
                break t;
            }
        };
        let t = oracle::monotonicity_check(&p, &ecc, &pac)?;
        violations += u64::from(!t.holds);
        ecc_changed += u64::from(!t.ecc_preserves);
        if samples.len() < 5 {
            samples.push(json!({"output_bits": m, "triple": t}));
        }
    }
    Ok(
        json!({"n": n, "trials": trials, "seed": seed, "violations": violations, "ecc_raised_p1": ecc_changed, "samples": samples}),
    )
}

// ---------------------------------------------------------------------------
// report

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Human-readable table (same as --format markdown)
    #[arg(long)]
    markdown: bool,
    /// Markov constant convention: `level` (sqrt d, cbrt d) or `bound` (2 sqrt d, 3 cbrt d)
    #[arg(long)]
    markov: Option<String>,
    #[arg(long)]
    label: Option<String>,
    /// Block length in bits
    #[arg(long)]
    block_len: Option<f64>,
    /// Distance of a block from uniform
    #[arg(long = "d")]
    d_level: Option<f64>,
    /// Final key rate in bits per second
    #[arg(long)]
    key_rate: Option<f64>,
    #[arg(long)]
    sifted_len: Option<f64>,
    #[arg(long)]
    qber: Option<f64>,
    #[arg(long)]
    ecc_factor: Option<f64>,
    #[arg(long)]
    seed_key_bits: Option<u32>,
    /// Also solve for the d that meets this many expected block leaks per day
    #[arg(long)]
    target: Option<f64>,
    /// Also analyse a per-bit level over the age of the universe (uses --d as the per-bit level)
    #[arg(long)]
    per_bit: bool,
}

pub fn report(a: &ReportArgs, s: &Settings) -> Result<(Outcome, bool)> {
    let conv = match &a.markov {
        Some(m) => m.parse().map_err(|e| anyhow!("{e}"))?,
        None => s.markov,
    };
    let mut sets = if s.params.is_empty() { vec![ProtocolParams::default()] } else { s.params.clone() };
    for p in &mut sets {
        if let Some(v) = &a.label {
            p.label = v.clone();
        }
        if let Some(v) = a.block_len {
            p.block_len = v;
            if a.sifted_len.is_none() {
                p.sifted_len = v;
            }
        }
        p.d_level = a.d_level.unwrap_or(p.d_level);
        p.key_rate = a.key_rate.unwrap_or(p.key_rate);
        p.sifted_len = a.sifted_len.unwrap_or(p.sifted_len);
        p.qber = a.qber.unwrap_or(p.qber);
        p.ecc_factor = a.ecc_factor.unwrap_or(p.ecc_factor);
        p.seed_key_bits = a.seed_key_bits.unwrap_or(p.seed_key_bits);
        p.validate()?;
    }
    let table = report::table_report(&sets, conv)?;
    let mut net = Vec::new();
    let mut required = Vec::new();
    for p in &sets {
        net.push(json!({
            "label": p.label,
            "standard": report::net_key_rate(p, false)?,
            "systematic": report::net_key_rate(p, true)?,
        }));
        if let Some(t) = a.target {
            for model in [Model::Average, Model::Individual, Model::KpaIndividual] {
                let r = report::required_d(t, p.blocks_per_day(), model, conv, p.block_len)?;
                required.push(json!({"label": p.label, "model": model, "target_per_day": t, "result": r}));
            }
        }
    }
    let mut json = json!({"table": table, "net_rates": net});
    if a.target.is_some() {
        json["required_d"] = Value::Array(required);
    }
    if a.per_bit {
        let p = &sets[0];
        json["per_bit"] = serde_json::to_value(report::per_bit_analysis(p.d_level, p.block_len, p.key_rate, conv)?)?;
    }
    let mut csv = Table::new([
        "set",
        "model",
        "flagged",
        "per_block_probability",
        "log2_per_block",
        "security_bits",
        "expected_block_leaks_per_day",
        "expected_bit_leaks_per_day",
        "mean_days_to_leak",
        "reference",
    ]);
    for r in &table.rows {
        csv.push(vec![
            r.label.clone(),
            r.model.name().into(),
            r.flagged.to_string(),
            format!("{:e}", r.per_block_probability),
            format!("{:.4}", r.log2_per_block),
            format!("{:.4}", r.security_bits),
            format!("{:e}", r.expected_block_leaks_per_day),
            format!("{:e}", r.expected_bit_leaks_per_day),
            format!("{:e}", r.mean_days_to_leak),
            r.reference.unwrap_or("derived").into(),
        ]);
    }
    let rendered = Rendered::json(json).with_table(csv).with_markdown(table.to_markdown());
    Ok((rendered.into(), a.markdown))
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Distribution JSON file
    file: std::path::PathBuf,
    /// Known-prefix length for the known-plaintext check (default n/2)
    #[arg(long)]
    known: Option<u32>,
}

fn check(bound: f64, value: f64, upper: bool, flagged: bool) -> Value {
    let slack = if upper { bound - value } else { value - bound };
    json!({"bound": bound, "value": value, "kind": if upper { "upper" } else { "lower" }, "slack": slack, "holds": slack >= -1e-12, "flagged": flagged})
}

fn unavailable(e: impl std::fmt::Display) -> Value {
    json!({"unavailable": e.to_string()})
}

pub fn analyze(a: &AnalyzeArgs, s: &Settings) -> Result<Outcome> {
    let p = load(&a.file)?;
    let n = p.n();
    let delta = p.distance_to_uniform();
    let p1 = p.p1();
    let leak = p.information_leak();
    let ber = (n <= 24).then(|| p.optimal_ber());
    let nf = n as f64;

    let mut b = serde_json::Map::new();
    b.insert("subset-leak (whole key)".into(), check(bounds::subset_leak_bound(nf, delta), p1, true, false));
    let m = a.known.unwrap_or(n / 2).clamp(1, n.saturating_sub(1).max(1));
    if (2..=oracle::SUBSET_MAX_BITS).contains(&n) {
        let known: Vec<u32> = (0..m).collect();
        let k = oracle::exhaustive_kpa(&p, &known)?;
        b.insert(
            format!("kpa-average (first {m} bits known)"),
            check(bounds::kpa_average_bound((n - m) as f64, delta), k.weighted_average, true, false),
        );
        b.insert(
            format!("per-bit-fallacy (first {m} bits known)"),
            check(bounds::per_bit_fallacy(delta, nf), k.certain_compromise(), true, true),
        );
        b.insert("kpa-worst-case".into(), json!({"value": k.worst_case, "k1": k.worst_k1}));
    }
    match (ber, bounds::fano_ber_bound(nf, delta)) {
        (Some(x), Ok(bound)) => {
            b.insert("fano-ber".into(), check(bound, x, false, false));
        }
        (_, Err(e)) => {
            b.insert("fano-ber".into(), unavailable(e));
        }
        (None, _) => {
            b.insert("fano-ber".into(), unavailable("optimal BER needs a dense distribution"));
        }
    }
    if let Some(x) = ber {
        b.insert("ber-fallacy".into(), check(bounds::ber_fallacy_bound(delta), x, false, true));
    }
    let band = bounds::pinsker_band(delta, nf)?;
    b.insert("pinsker-lower".into(), check(band.lower, leak, false, false));
    match band.upper {
        Some(u) => b.insert("pinsker-upper".into(), check(u, leak, true, false)),
        None => b.insert("pinsker-upper".into(), unavailable("2 delta > 1")),
    };
    b.insert("lhl-min-d".into(), json!({"value": bounds::lhl_min_d(p1)?}));
    let mix = constructions::mixture_feasibility(&p, delta)?;
    b.insert("mixture-at-delta".into(), serde_json::to_value(&mix)?);
    if let Ok(w) = oracle::min_mixture_weight(&p) {
        b.insert("min-mixture-weight".into(), json!({"value": w, "exceeds_delta": w > delta + 1e-12}));
    }

    let mut json = json!({
        "n": n,
        "p1": p1,
        "distance_to_uniform": delta,
        "entropy": p.entropy(),
        "information_leak": leak,
        "min_entropy": -p1.log2(),
        "optimal_ber": ber,
        "top_profile": p.ordered_profile().top(10),
        "bounds": b,
    });
    if s.exact {
        json["exact"] = exact_summary(&p);
    }
    let violation = json["bounds"]
        .as_object()
        .expect("object")
        .values()
        .any(|v| v.get("flagged") == Some(&Value::Bool(false)) && v.get("holds") == Some(&Value::Bool(false)));
    Ok(Outcome { rendered: Rendered::json(json), violation })
}

fn exact_summary(p: &KeyDistribution) -> Value {
    if p.n() > keyleak::dist::EXACT_MAX_BITS {
        return unavailable(format!("exact mode supports up to {} bits", keyleak::dist::EXACT_MAX_BITS));
    }
    let probs: Option<Vec<Rational>> = (0..p.size()).map(|k| exact_from_f64(p.prob(k))).collect();
    let Some(probs) = probs else {
        return unavailable("a probability has no exact binary expansion in range");
    };
    match ExactDistribution::new(p.n(), probs) {
        Ok(e) => match e.distance_to_uniform() {
            Ok(d) => json!({"p1": rat(&e.p1()), "distance_to_uniform": rat(&d)}),
            Err(err) => unavailable(err),
        },
        Err(err) => unavailable(err),
    }
}
