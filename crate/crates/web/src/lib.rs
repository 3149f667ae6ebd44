//! Browser bindings. Each export takes plain numbers and returns a JSON string;
//! errors come back as a thrown string.

use keyleak::bounds;
use keyleak::constructions;
use keyleak::oracle::{self, HashFamily};
use keyleak::report::{self, MarkovConvention, ProtocolParams};
use keyleak::KeyDistribution;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn to_js<E: std::fmt::Display>(e: E) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Leak projection rows for one parameter set.
pub fn leak_table_json(d_level: f64, block_len: f64, key_rate: f64, convention: &str) -> Result<String, String> {
    let conv: MarkovConvention = convention.parse().map_err(|e: keyleak::Error| e.to_string())?;
    let params = ProtocolParams { d_level, block_len, sifted_len: block_len, key_rate, ..Default::default() };
    let t = report::table_report(&[params], conv).map_err(|e| e.to_string())?;
    serde_json::to_string(&t).map_err(|e| e.to_string())
}

/// Profile and attacker figures for a named construction on a small key.
pub fn construction_json(family: &str, n: u32, param: u32, delta: f64) -> Result<String, String> {
    let err = |e: keyleak::Error| e.to_string();
    if n > 12 {
        return Err("the demo enumerates keys of at most 12 bits".into());
    }
    let p = match family {
        "kpa" => constructions::kpa_counterexample(n, param).map_err(err)?,
        "saturating" => {
            let subset: Vec<u32> = (0..param).collect();
            constructions::saturating_distribution(n, &subset, delta).map_err(err)?
        }
        "spiked" => constructions::spiked_distribution(n, param).map_err(err)?,
        "uniform" => KeyDistribution::uniform(n).map_err(err)?,
        other => return Err(format!("unknown family `{other}`")),
    };
    let d = p.distance_to_uniform();
    let m = param.clamp(1, n.saturating_sub(1).max(1));
    let kpa = if n >= 2 {
        let known: Vec<u32> = (0..m).collect();
        let r = oracle::exhaustive_kpa(&p, &known).map_err(err)?;
        Some(json!({
            "known_bits": m,
            "average": r.weighted_average,
            "average_bound": bounds::kpa_average_bound((n - m) as f64, d),
            "worst_case": r.worst_case,
        }))
    } else {
        None
    };
    let out = json!({
        "n": n,
        "p1": p.p1(),
        "uniform_p1": (-(n as f64)).exp2(),
        "distance_to_uniform": d,
        "entropy": p.entropy(),
        "information_leak": p.information_leak(),
        "optimal_ber": p.optimal_ber(),
        "profile": p.ordered_profile().top(32),
        "kpa": kpa,
    });
    Ok(out.to_string())
}

/// Output length against target distance, plus the family average for a
/// uniform `input_bits`-bit input hashed to `output_bits`.
pub fn lhl_json(min_entropy: f64, d_target: f64, input_bits: u32, output_bits: u32) -> Result<String, String> {
    let err = |e: keyleak::Error| e.to_string();
    let len = bounds::lhl_key_length(min_entropy, d_target).map_err(err)?;
    let curve: Vec<_> = (1..=64)
        .map(|k| {
            let d = (-(k as f64) / 2.0).exp2();
            let l = bounds::lhl_key_length(min_entropy, d).map(|r| r.bits).unwrap_or(0);
            json!({"log2_inv_d": k as f64 / 2.0, "bits": l})
        })
        .collect();
    if input_bits > 10 {
        return Err("the empirical check enumerates inputs of at most 10 bits".into());
    }
    let u = KeyDistribution::uniform(input_bits).map_err(err)?;
    let family =
        if input_bits + output_bits > 17 { HashFamily::Sampled { count: 4096, seed: 1 } } else { HashFamily::Full };
    let empirical = oracle::lhl_empirical(&u, output_bits, family).map_err(err)?;
    Ok(json!({"length": len, "curve": curve, "empirical": empirical}).to_string())
}

#[wasm_bindgen]
pub fn leak_table(d_level: f64, block_len: f64, key_rate: f64, convention: &str) -> Result<String, JsValue> {
    leak_table_json(d_level, block_len, key_rate, convention).map_err(to_js)
}

#[wasm_bindgen]
pub fn construction(family: &str, n: u32, param: u32, delta: f64) -> Result<String, JsValue> {
    construction_json(family, n, param, delta).map_err(to_js)
}

#[wasm_bindgen]
pub fn lhl_tradeoff(min_entropy: f64, d_target: f64, input_bits: u32, output_bits: u32) -> Result<String, JsValue> {
    lhl_json(min_entropy, d_target, input_bits, output_bits).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn table_has_six_rows() {
        let v: Value = serde_json::from_str(&leak_table_json(1e-9, 1e5, 1e7, "level").unwrap()).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 6);
        assert!(leak_table_json(1e-9, 1e5, 1e7, "nope").is_err());
    }

    #[test]
    fn construction_figures() {
        let v: Value = serde_json::from_str(&construction_json("kpa", 8, 4, 0.0).unwrap()).unwrap();
        assert_eq!(v["kpa"]["worst_case"], 1.0);
        assert!(v["kpa"]["average"].as_f64() <= v["kpa"]["average_bound"].as_f64());
        assert!(construction_json("kpa", 20, 4, 0.0).is_err());
        assert!(construction_json("other", 4, 1, 0.0).is_err());
    }

    #[test]
    fn lhl_curve() {
        let v: Value = serde_json::from_str(&lhl_json(100.0, (-20f64).exp2(), 8, 4).unwrap()).unwrap();
        assert_eq!(v["length"]["bits"], 60);
        assert_eq!(v["empirical"]["holds"], true);
    }
}
