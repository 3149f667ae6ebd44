//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Ground truth that the library also computes (optimal BER, subset marginals,
//! entropy, distances, pushforwards) is recomputed here from the raw
//! probability vectors so that a bug shared by the library's evaluators and
//! its oracle cannot hide.

use std::time::{Duration, Instant};

use keyleak::bounds;
use keyleak::constructions::{
    self, ber_counterexample_search, kpa_counterexample, kpa_counterexample_exact, mixture_feasibility,
    saturating_distribution, saturating_distribution_exact, SearchConfig,
};
use keyleak::oracle::{self, HashFamily};
use keyleak::primitives::{mac_epsilon, MacFamily, ToeplitzMatrix, MAC_BUDGET};
use keyleak::report::{self, MarkovConvention, Model, ProtocolParams};
use keyleak::{KeyDistribution, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// --- independent helpers ----------------------------------------------------

fn probs(p: &KeyDistribution) -> Vec<f64> {
    (0..p.size()).map(|k| p.prob(k)).collect()
}

fn dist_u(v: &[f64]) -> f64 {
    let u = 1.0 / v.len() as f64;
    0.5 * v.iter().map(|x| (x - u).abs()).sum::<f64>()
}

fn entropy(v: &[f64]) -> f64 {
    -v.iter().filter(|&&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

fn ber(v: &[f64], n: u32) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let one: f64 = v.iter().enumerate().filter(|(k, _)| (k >> i) & 1 == 1).map(|(_, x)| x).sum();
        total += one.min(1.0 - one);
    }
    total / n as f64
}

fn best_marginal(v: &[f64], positions: &[u32]) -> f64 {
    let mut m = vec![0.0; 1 << positions.len()];
    for (k, x) in v.iter().enumerate() {
        let mut idx = 0;
        for (j, &p) in positions.iter().enumerate() {
            idx |= ((k >> p) & 1) << j;
        }
        m[idx] += x;
    }
    m.into_iter().fold(0.0, f64::max)
}

fn random_probs(n: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let size = 1usize << n;
    let raw: Vec<f64> = match rng.gen_range(0..3) {
        0 => (0..size).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect(),
        1 => {
            let k = rng.gen_range(2..8);
            (0..size).map(|_| rng.gen::<f64>().powi(k)).collect()
        }
        _ => {
            let eps = rng.gen::<f64>() * 0.1;
            (0..size).map(|_| 1.0 + eps * (rng.gen::<f64>() - 0.5)).collect()
        }
    };
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn within_factor(x: f64, target: f64, factor: f64) -> bool {
    x >= target / factor && x <= target * factor
}

// --- criteria ----------------------------------------------------------------

fn theory_point() -> Outcome {
    let p = ProtocolParams { block_len: 1e5, d_level: 1e-9, key_rate: 1e7, ..Default::default() };
    let lvl = MarkovConvention::Level;
    let avg = report::leak_projection(&p, Model::Average, lvl).unwrap();
    let ind = report::leak_projection(&p, Model::Individual, lvl).unwrap();
    let kpa = report::leak_projection(&p, Model::KpaIndividual, lvl).unwrap();
    let ind_b = report::leak_projection(&p, Model::Individual, MarkovConvention::Bound).unwrap();
    let kpa_b = report::leak_projection(&p, Model::KpaIndividual, MarkovConvention::Bound).unwrap();
    let pass = (30.0..=320.0).contains(&avg.mean_days_to_leak)
        && (100.0..=1000.0).contains(&ind.expected_block_leaks_per_day)
        && (3.0..=32.0).contains(&kpa.mean_seconds_to_leak);
    outcome(
        pass,
        format!(
            "average {:.1} days/leak; individual {:.1}/day; kpa {:.2} s/leak (2-sqrt/3-cbrt constants: {:.1}/day, {:.2} s)",
            avg.mean_days_to_leak,
            ind.expected_block_leaks_per_day,
            kpa.mean_seconds_to_leak,
            ind_b.expected_block_leaks_per_day,
            kpa_b.mean_seconds_to_leak
        ),
    )
}

fn experimental_point() -> Outcome {
    let p = ProtocolParams { block_len: 1e5, d_level: 4e-9, key_rate: 1.4e5, ..Default::default() };
    let ind = report::leak_projection(&p, Model::Individual, MarkovConvention::Level).unwrap();
    let kpa = report::leak_projection(&p, Model::KpaIndividual, MarkovConvention::Level).unwrap();
    let kpa_b = report::leak_projection(&p, Model::KpaIndividual, MarkovConvention::Bound).unwrap();
    let pass = (2.0..=20.0).contains(&ind.expected_block_leaks_per_day)
        && (30.0..=320.0).contains(&kpa.expected_block_leaks_per_day);
    outcome(
        pass,
        format!(
            "individual {:.2}/day; kpa {:.1}/day (3-cbrt constant would give {:.1}/day)",
            ind.expected_block_leaks_per_day, kpa.expected_block_leaks_per_day, kpa_b.expected_block_leaks_per_day
        ),
    )
}

fn required_d() -> Outcome {
    let r = report::required_d(1e-15, 1e7, Model::Individual, MarkovConvention::Level, 1e5).unwrap();
    let d = r.d.unwrap();
    let l = d.log10();
    // Round trip: projecting at the returned d meets the target.
    let per_block = d.sqrt();
    let rt = 1e7 * per_block;
    let pass = (-45.5..=-42.5).contains(&l) && (rt / 1e-15 - 1.0).abs() < 0.01;
    outcome(pass, format!("d = {d:.3e} (log10 {l:.2}); round trip {rt:.3e}"))
}

fn mac_equivalence() -> Outcome {
    let g = bounds::kpa_individual_guarantee(1e-30).unwrap();
    let target = (-32f64).exp2();
    outcome(
        within_factor(g, target, 3.0),
        format!("3 * (1e-30)^(1/3) = {g:.3e} vs 2^-32 = {target:.3e}, ratio {:.2}", g / target),
    )
}

fn saturation() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut exact_ok = true;
    for n in 1..=10u32 {
        for s in 1..=n {
            let subset: Vec<u32> = (0..s).collect();
            for j in 1..=8u32 {
                let delta = (-(j as f64)).exp2();
                if delta > constructions::saturating_max_delta(s) {
                    continue;
                }
                let p = saturating_distribution(n, &subset, delta).unwrap();
                let v = probs(&p);
                let target = (-(s as f64)).exp2() + delta;
                let best = oracle::exhaustive_subsets_of_size(&p, s, oracle::DEFAULT_BUDGET).unwrap();
                assert!(best.complete);
                let own = best_marginal(&v, &subset);
                worst = worst
                    .max((best.best_of_size(s).unwrap() - target).abs())
                    .max((best.get((1u64 << s) - 1).unwrap() - target).abs())
                    .max((own - target).abs());

                let exact = saturating_distribution_exact(n, &subset, Rational::new(1, 1i128 << j), 0).unwrap();
                let want = Rational::new(1, 1i128 << s) + Rational::new(1, 1i128 << j);
                exact_ok &= exact.subset_success(&subset).unwrap() == want;
                exact_ok &= exact.distance_to_uniform().unwrap() == Rational::new(1, 1i128 << j);
                checked += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12 && exact_ok,
        format!("{checked} instances; max |oracle - (2^-s + delta)| = {worst:.2e}; exact equality {exact_ok}"),
    )
}

fn kpa_refutation() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, m) in [(6u32, 3u32), (8, 4), (10, 5)] {
        let known: Vec<u32> = (0..m).collect();
        let exact = kpa_counterexample_exact(n, m, 0).unwrap();
        let (worst, avg) = oracle::exhaustive_kpa_exact(&exact, &known).unwrap();
        let delta = exact.distance_to_uniform().unwrap();
        let bound = Rational::new(1, 1i128 << (n - m)) + delta;

        let p = kpa_counterexample(n, m).unwrap();
        let v = probs(&p);
        // Conditional p1 for the anchor's prefix, computed directly.
        let mass: f64 = v.iter().enumerate().filter(|(k, _)| k & ((1 << m) - 1) == 0).map(|(_, x)| x).sum();
        let direct = v[0] / mass;
        let feas = mixture_feasibility(&p, dist_u(&v)).unwrap();

        let ok = worst == Rational::from_integer(1) && avg <= bound && direct == 1.0 && !feas.feasible;
        pass &= ok;
        parts.push(format!("({n},{m}): worst {worst}, avg {avg} <= {bound}, mixture infeasible {}", !feas.feasible));
    }
    outcome(pass, parts.join("; "))
}

fn fano() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfa40);
    let n = 10u32;
    let mut below = 0;
    let mut nonvacuous = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..1000 {
        let v = random_probs(n, &mut rng);
        let d = dist_u(&v);
        let b = ber(&v, n);
        match bounds::fano_ber_bound(n as f64, d) {
            Ok(bound) => {
                nonvacuous += 1;
                min_slack = min_slack.min(b - bound);
                if b < bound - 1e-12 {
                    below += 1;
                }
            }
            Err(keyleak::Error::VacuousBound(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    // Flagged floor (1 - d)/2 against a searched counter-example.
    let hit = ber_counterexample_search(n, 0.1, SearchConfig::default()).unwrap();
    let refuted = hit.as_ref().map(|h| {
        let v = probs(&h.dist);
        (dist_u(&v) <= 0.1 + 1e-12, ber(&v, n) < bounds::ber_fallacy_bound(0.1))
    });
    let refuted_ok = refuted == Some((true, true));
    let h = hit.unwrap();
    outcome(
        below == 0 && nonvacuous > 0 && refuted_ok,
        format!(
            "{nonvacuous}/1000 non-vacuous, {below} below bound, min slack {min_slack:.3e}; flagged floor {:.3} beaten by {} with BER {:.4} at distance {:.4}",
            h.claimed_floor, h.family, h.ber, h.distance
        ),
    )
}

fn lhl() -> Outcome {
    // l = 8 means p1 = 2^-8 on 8 bits: the input is uniform.
    let p = KeyDistribution::uniform(8).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [2u32, 4, 6] {
        let r = oracle::lhl_empirical(&p, m, HashFamily::Full).unwrap();
        // Independent family average.
        let mut total = 0.0;
        let mut count = 0u64;
        for diag in 0..1u64 << (m + 7) {
            let t = ToeplitzMatrix::new(m, 8, diag).unwrap();
            let mut out = vec![0.0; 1 << m];
            for k in 0..256u64 {
                let mut y = 0usize;
                for i in 0..m {
                    let mut bit = 0;
                    for j in 0..8 {
                        if t.entry(i, j) && (k >> j) & 1 == 1 {
                            bit ^= 1;
                        }
                    }
                    y |= bit << i;
                }
                out[y] += 1.0 / 256.0;
            }
            total += dist_u(&out);
            count += 1;
        }
        let own = total / count as f64;
        let bound = (-((8.0 - m as f64) / 2.0)).exp2();
        let ok = r.average_distance <= bound
            && own <= bound
            && (own - r.average_distance).abs() < 1e-12
            && r.matrices == count;
        pass &= ok;
        parts.push(format!("m={m}: avg {:.4} <= {bound:.4} over {count}", r.average_distance));
    }
    outcome(pass, parts.join("; "))
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3070);
    let n = 10u32;
    let mut bad = 0;
    for trial in 0..1000 {
        let v = random_probs(n, &mut rng);
        let p = KeyDistribution::dense(n, v.clone()).unwrap();
        let ecc = if trial % 2 == 0 {
            oracle::EccMap::Identity
        } else {
            // A random many-to-one correction map onto 10 bits.
            oracle::EccMap::Table { out_bits: n, table: (0..1u64 << n).map(|_| rng.gen_range(0..1u64 << n)).collect() }
        };
        let m = rng.gen_range(1..=n);
        let pac = loop {
            let t = ToeplitzMatrix::random(m, n, &mut rng).unwrap();
            if t.is_full_rank() {
                break t;
            }
        };
        let t = oracle::monotonicity_check(&p, &ecc, &pac).unwrap();
        // Independent pushforwards.
        let corrected: Vec<f64> = match &ecc {
            oracle::EccMap::Identity => v.clone(),
            oracle::EccMap::Table { table, .. } => {
                let mut c = vec![0.0; v.len()];
                for (k, x) in v.iter().enumerate() {
                    c[table[k] as usize] += x;
                }
                c
            }
        };
        let mut fin = vec![0.0; 1 << m];
        for (k, x) in corrected.iter().enumerate() {
            fin[pac.apply_word(k as u64) as usize] += x;
        }
        let mx = |w: &[f64]| w.iter().copied().fold(0.0, f64::max);
        let (a, b, c) = (mx(&v), mx(&corrected), mx(&fin));
        let ok = a <= b + 1e-12 && b <= c + 1e-12 && t.holds && (t.final_key - c).abs() < 1e-12;
        if !ok {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 pipelines, {bad} non-monotone"))
}

fn mac() -> Outcome {
    let family = MacFamily::polynomial(4, 2).unwrap();
    let eps = mac_epsilon(&family, MAC_BUDGET).unwrap();
    let tags = family.tag_count() as f64;
    let u = KeyDistribution::uniform(family.key_bits()).unwrap();
    let ru = oracle::mac_attack_search(&family, &u, MAC_BUDGET).unwrap();
    let mut pass = ru.worst_tag == eps && ru.average == eps;
    let mut parts = vec![format!("eps = {eps}; uniform key p_s = {}", ru.worst_tag)];
    for l in [4u32, 5, 6, 7] {
        let key = constructions::spiked_distribution(family.key_bits(), l).unwrap();
        let eps_prime = dist_u(&probs(&key));
        let r = oracle::mac_attack_search(&family, &key, MAC_BUDGET).unwrap();
        let avg_cap = eps + eps_prime;
        let worst_cap = eps + eps_prime * tags;
        let ok = r.average <= avg_cap + 1e-12 && r.worst_tag <= worst_cap + 1e-12;
        pass &= ok;
        parts.push(format!(
            "spike 2^-{l} (eps' {eps_prime:.4}): avg {:.4} <= {avg_cap:.4}, worst tag {:.4} <= {:.4}",
            r.average,
            r.worst_tag,
            worst_cap.min(1.0)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn table() -> Outcome {
    let t = report::table_report(&[ProtocolParams::default()], MarkovConvention::Level).unwrap();
    let bits = |m: Model| t.rows.iter().find(|r| r.model == m).unwrap().security_bits;
    let avg = bits(Model::Average);
    let lfsr = bits(Model::SymmetricCipher);
    let p = (-lfsr).exp2();
    let decades = (p.log10() - (-40.0)).abs();
    let avg_ok = (avg - 30.0).abs() <= 0.5;
    let lfsr_ok = lfsr == 128.0;
    let order_ok = decades <= 0.5;
    outcome(
        avg_ok && lfsr_ok && order_ok,
        format!(
            "average row {avg:.2} bits [{}]; cipher row {lfsr} bits [{}]; 2^-128 = {p:.2e} is {decades:.2} decades from 1e-40 [{}]",
            ok(avg_ok),
            ok(lfsr_ok),
            ok(order_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISS"
    }
}

fn pinsker() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9145);
    let mut lower_bad = 0;
    let mut upper_bad = 0;
    let mut upper_checked = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let v = random_probs(n, &mut rng);
        let d = dist_u(&v);
        let leak = n as f64 - entropy(&v);
        let band = bounds::pinsker_band(d, n as f64).unwrap();
        if band.lower > leak + 1e-12 {
            lower_bad += 1;
        }
        if let Some(up) = band.upper {
            upper_checked += 1;
            if leak > up + 1e-12 {
                upper_bad += 1;
            }
        }
    }
    outcome(
        lower_bad == 0 && upper_bad == 0,
        format!("1000 instances: {lower_bad} below 2 delta^2, {upper_bad}/{upper_checked} above the upper branch"),
    )
}

/// Criteria that cannot pass as stated.
const KNOWN_SHORTFALLS: &[u32] = &[11];

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, u64, Check); 12] = [
        (1, "theory-point leak projections", 1, theory_point),
        (2, "experimental-point leak projections", 1, experimental_point),
        (3, "required d for 1e-15 per day", 1, required_d),
        (4, "MAC tag-length equivalence", 1, mac_equivalence),
        (5, "subset bound saturation", 120, saturation),
        (6, "known-plaintext refutation", 10, kpa_refutation),
        (7, "Fano BER soundness", 60, fano),
        (8, "leftover hash family average", 300, lhl),
        (9, "p1 monotonicity through the pipeline", 60, monotonicity),
        (10, "MAC bounds with imperfect key", 120, mac),
        (11, "security-bits table", 1, table),
        (12, "Pinsker band", 30, pinsker),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, title, limit, check) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = o.pass && in_time;
        let tag = if pass { "PASS" } else { "FAIL" };
        let time = if in_time { format!("{elapsed:.2?}") } else { format!("{elapsed:.2?} > {limit}s") };
        println!("criterion {id:>2} {tag}: {title} ({time}) -- {}", o.detail);
        if pass {
            passed += 1;
            if KNOWN_SHORTFALLS.contains(&id) {
                println!("             note: criterion {id} was expected to fail and passed");
            }
        } else if !KNOWN_SHORTFALLS.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/12 criteria pass; known shortfalls {KNOWN_SHORTFALLS:?}");
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
