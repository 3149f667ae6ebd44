//! Frozen values. Each is recomputed here from first principles (hand
//! arithmetic or direct enumeration) before being compared with the library.

use keyleak::bounds::{self, MacInputs};
use keyleak::constructions::{
    biased_bits, kpa_counterexample, maximal_coupling, mixture_feasibility, product_coupling, saturating_distribution,
    spiked_distribution,
};
use keyleak::dist::{binary_entropy, KnownBits};
use keyleak::oracle::{self, EccMap};
use keyleak::primitives::{
    lfsr_keystream, mac_epsilon, window_histogram, Bits, LfsrSpec, MacFamily, ToeplitzMatrix, MAC_BUDGET,
};
use keyleak::report::{self, MarkovConvention, Model, ProtocolParams};
use keyleak::KeyDistribution;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn h2(x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

#[test]
fn kpa_counterexample_two_bits() {
    // Anchor 00 gets 1/2, its sibling 10 (bit 0 = 0, bit 1 = 1) gets 0, the
    // other prefix's keys keep 1/4.
    let p = kpa_counterexample(2, 1).unwrap();
    let v: Vec<f64> = (0..4).map(|k| p.prob(k)).collect();
    assert_eq!(v, [0.5, 0.25, 0.0, 0.25]);
    let mut sorted = v.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(sorted, [0.5, 0.25, 0.25, 0.0]);
    assert_eq!(p.ordered_profile().top(4), sorted);
    // 1/2 (|1/2 - 1/4| + 0 + |0 - 1/4| + 0) = 1/4 = 2^-1 - 2^-2.
    assert_eq!(p.distance_to_uniform(), 0.25);
    let u = KeyDistribution::uniform(2).unwrap();
    assert_eq!(maximal_coupling(&p, &u).unwrap().prob_equal(), 0.75);
    // Product coupling: sum p_i / 4 = 1/4.
    let prod = product_coupling(&p, &u).unwrap().prob_equal();
    assert_eq!(prod, 0.25);
    // Mixture with lambda = 1/4: upper limit 1/4 + 3/16 = 0.4375 < 0.5.
    let f = mixture_feasibility(&p, 0.25).unwrap();
    assert!(!f.feasible);
    let viol = f.violation.unwrap();
    assert_eq!((viol.key, viol.prob, viol.upper), (0, 0.5, 0.4375));
    // Distinguisher at equal priors: 1/2 + 1/2 * 1/4.
    assert_eq!(oracle::optimal_distinguisher(&p, &u, 0.5).unwrap(), 0.625);
}

#[test]
fn kpa_counterexample_conditioning() {
    let p = kpa_counterexample(8, 4).unwrap();
    let anchor = p.conditional(&KnownBits::prefix(4, 0)).unwrap();
    assert_eq!(anchor.p1(), 1.0);
    for k1 in 1..16 {
        let c = p.conditional(&KnownBits::prefix(4, k1)).unwrap();
        assert!((c.p1() - 1.0 / 16.0).abs() < 1e-15 && c.distance_to_uniform() < 1e-15);
    }
    let d = kpa_counterexample(10, 5).unwrap().distance_to_uniform();
    assert!((d - (1.0 / 32.0 - 1.0 / 1024.0)).abs() < 1e-15);
    assert_eq!(kpa_counterexample(6, 3).unwrap().p1(), 0.125);
}

#[test]
fn saturating_examples() {
    let p = saturating_distribution(8, &[0, 1, 2, 3, 4, 5, 6, 7], 1.0 / 16.0).unwrap();
    assert!((p.p1() - (1.0 / 256.0 + 1.0 / 16.0)).abs() < 1e-15);
    assert!((p.distance_to_uniform() - 1.0 / 16.0).abs() < 1e-15);
    let q = saturating_distribution(8, &[0], 0.1).unwrap();
    let zero_mass: f64 = (0..256u64).filter(|k| k & 1 == 0).map(|k| q.prob(k)).sum();
    assert!((zero_mass - 0.6).abs() < 1e-12);
}

#[test]
fn spiked_examples() {
    let p = spiked_distribution(16, 4).unwrap();
    assert_eq!(p.p1(), 1.0 / 16.0);
    // Information leak of a 2^-l spike over a flat background, by hand.
    let (n, l) = (12.0f64, 6.0f64);
    let spike = (-l).exp2();
    let rest = (1.0 - spike) / (n.exp2() - 1.0);
    let h = -spike * spike.log2() - (n.exp2() - 1.0) * rest * rest.log2();
    let q = spiked_distribution(12, 6).unwrap();
    assert!((q.information_leak() - (n - h)).abs() < 1e-9);
    // 2^-6 over I_E/n is about 2.61: outside a factor of 2, frozen as computed.
    let ratio = spike / (q.information_leak() / n);
    assert!((ratio - 2.614).abs() < 0.01, "{ratio}");
}

#[test]
fn biased_bit_examples() {
    let one = biased_bits(1, 0.6).unwrap();
    assert!((one.distance_to_uniform() - 0.1).abs() < 1e-15);
    assert!((one.optimal_ber() - 0.4).abs() < 1e-15);
    assert_eq!(bounds::ber_fallacy_bound(0.2), 0.4);
    assert!(one.optimal_ber() < bounds::ber_fallacy_bound(0.1));
    // Two bits: probabilities .36 .24 .24 .16 against 1/4 each.
    let two = biased_bits(2, 0.6).unwrap();
    let expected = 0.5 * (0.11 + 0.01 + 0.01 + 0.09);
    assert!((two.distance_to_uniform() - expected).abs() < 1e-15);
    assert!((two.optimal_ber() - 0.4).abs() < 1e-15);
}

#[test]
fn binary_entropy_values() {
    assert_eq!(binary_entropy(0.5), 1.0);
    assert!((binary_entropy(0.02) - h2(0.02)).abs() < 1e-15);
    assert!((binary_entropy(0.02) - 0.1414).abs() < 1e-3);
}

#[test]
fn bound_values() {
    assert!((bounds::subset_leak_bound(1e5, 1e-9) - 1e-9).abs() < 1e-20);
    assert_eq!(bounds::subset_leak_bound(8.0, 1.0 / 16.0), 1.0 / 256.0 + 1.0 / 16.0);
    assert!((bounds::multi_segment_bound(&[10.0, 10.0, 10.0], 1e-9) - ((-30f64).exp2() + 1e-9)).abs() < 1e-22);
    assert!(close(bounds::markov_tail(1e-9, 10f64.powf(-4.5)).unwrap(), 10f64.powf(-4.5), 1e-12));
    assert!(close(bounds::individual_guarantee(1e-9).unwrap(), 6.324555e-5, 1e-6));
    assert!(close(bounds::individual_guarantee(1e-44).unwrap(), 2e-22, 1e-12));
    assert!(close(bounds::kpa_individual_guarantee(1e-9).unwrap(), 3e-3, 1e-12));
    assert!(close(bounds::kpa_individual_guarantee(1e-30).unwrap(), 3e-10, 1e-12));
    let band = bounds::pinsker_band(0.1, 10.0).unwrap();
    assert!((band.lower - 0.02).abs() < 1e-15);
    assert!((band.upper.unwrap() - (8.0 + 2.0 * h2(0.2))).abs() < 1e-12);
    let lhl = bounds::lhl_key_length(100.0, (-20f64).exp2()).unwrap();
    assert_eq!((lhl.bits, lhl.feasible), (60, true));
    let edge = bounds::lhl_key_length(40.0, (-20f64).exp2()).unwrap();
    assert_eq!((edge.bits, edge.feasible), (0, true));
    assert_eq!(bounds::lhl_min_d((-100f64).exp2()).unwrap(), (-50f64).exp2());
    assert_eq!(bounds::lhl_min_d((-60f64).exp2()).unwrap(), (-30f64).exp2());
    assert!(close(bounds::complexity_success(2f64.powi(40), 2f64.powi(128)).unwrap(), (-88f64).exp2(), 1e-12));
    assert!((bounds::per_bit_fallacy(0.1, 2.0) - 0.0025).abs() < 1e-15);
    assert_eq!(bounds::lfsr_whole_key_leak(8), 1.0 / 256.0);
    assert!(close(bounds::lfsr_whole_key_leak(128), 2.938735877e-39, 1e-9));
}

#[test]
fn fano_values() {
    // Entropy floor by hand: 10 - 0.02 (10 + log2 50).
    let floor = 10.0 - 0.02 * (10.0 + 50f64.log2());
    assert!((bounds::entropy_floor(10.0, 0.01) - floor).abs() < 1e-12);
    assert!((floor - 9.687).abs() < 1e-3);
    let pb = bounds::fano_ber_bound(10.0, 0.01).unwrap();
    assert!((h2(pb) - floor / 10.0).abs() < 1e-9);
    assert!((pb - 0.3954).abs() < 1e-3, "{pb}");
    let big = bounds::fano_ber_bound(1e5, 1e-9).unwrap();
    assert!(big > 0.49 && big < 0.5);
}

#[test]
fn ecc_and_mac_values() {
    let h = h2(0.02);
    assert!((bounds::ecc_leak(1e5, 0.02, 1.0).unwrap() - 1e5 * h).abs() < 1e-6);
    assert!((bounds::ecc_leak(1e5, 0.02, 1.2).unwrap() - 16_970.0).abs() < 5.0);
    let sys = bounds::ecc_leak_systematic(1e5, 0.02).unwrap();
    assert!((sys - 1e5 * h / (1.0 - h)).abs() < 1e-6);
    assert!((sys - 16_470.0).abs() < 5.0 && sys > 14_140.0);
    let m = bounds::mac_bounds(&MacInputs {
        epsilon: (-32f64).exp2(),
        epsilon_key: 1e-9,
        tag_space: 2f64.powi(32),
        uses: 1,
        epsilon_tag_key: 0.0,
    })
    .unwrap();
    assert!(close(m.p_s_avg, 1e-9 + 2.328e-10, 1e-3));
}

#[test]
fn primitive_fixtures() {
    let x: Bits = "1010".parse().unwrap();
    let k: Bits = "1111".parse().unwrap();
    assert_eq!(keyleak::primitives::otp_encrypt(&x, &k).unwrap().to_string(), "0101");
    let t = ToeplitzMatrix::new(4, 8, Bits::from_hex("d302", 11).unwrap().to_word().unwrap()).unwrap();
    let hashed = keyleak::primitives::toeplitz_hash(&Bits::from_hex("4d", 8).unwrap(), &t).unwrap();
    assert_eq!(hashed.to_string(), "1110");
    let ks = lfsr_keystream(&LfsrSpec::maximal4(), 1, 15).unwrap();
    assert_eq!(ks.bits.to_string(), "100011110101100");
    assert_eq!(LfsrSpec::maximal4().period(1).unwrap(), 15);
    assert_eq!(LfsrSpec::maximal8().period(1).unwrap(), 255);
    // Every window of up to 8 bits is balanced over nonzero patterns.
    for w in 1..=8 {
        let h = window_histogram(&LfsrSpec::maximal8(), 3, w).unwrap();
        assert!(h[1..].iter().all(|&c| c == 1 << (8 - w)));
        assert_eq!(h[0], (1 << (8 - w)) - 1);
    }
    let f = MacFamily::polynomial(4, 2).unwrap();
    assert_eq!(mac_epsilon(&f, MAC_BUDGET).unwrap(), 0.125);
}

#[test]
fn pipeline_on_uniform() {
    let u = KeyDistribution::uniform(8).unwrap();
    let pac = ToeplitzMatrix::new(4, 8, 0b100_0000_1001).unwrap();
    assert!(pac.is_full_rank());
    let t = oracle::monotonicity_check(&u, &EccMap::Identity, &pac).unwrap();
    assert_eq!((t.sifted, t.corrected, t.final_key), (1.0 / 256.0, 1.0 / 256.0, 1.0 / 16.0));
}

#[test]
fn projection_values() {
    let theory = ProtocolParams::default();
    let avg = report::leak_projection(&theory, Model::Average, MarkovConvention::Level).unwrap();
    // 1e7 / 1e5 * 86400 blocks a day at about 1e-9 each.
    assert!(close(avg.expected_block_leaks_per_day, 8.64e-3, 1e-6));
    assert!(close(avg.mean_days_to_leak, 115.74, 1e-4));
    assert!(close(avg.expected_bit_leaks_per_day, avg.expected_block_leaks_per_day * 1e5, 1e-12));
    let net = report::net_key_rate(&ProtocolParams { qber: 0.02, ..theory.clone() }, false).unwrap();
    assert!((net.leak_bits - 14_144.0).abs() < 1.0);
    let sys = report::net_key_rate(&ProtocolParams { qber: 0.02, ..theory.clone() }, true).unwrap();
    assert!(sys.net_rate < net.net_rate);
    let f = report::per_bit_analysis(1e-24, 1e6, 1e6, MarkovConvention::Level).unwrap();
    assert!(f.fallacy_log2_accumulated < -1e6);
    assert!(f.projections.iter().all(|p| p.expected_bit_leaks_per_day > 0.0));
}
