use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::ContinuousCDF;
use skg_core::estimation::{ks_distance, EmpiricalCdf, GaussianCdf};
use skg_core::gaussmodel::ChannelParams;
use skg_core::secbounds::{
    entropy_h, expected_exponent, minimize_exponent, phi, reference_v_ab, sacrifice_length, Criterion,
    EstimatedExponent, EveDistribution,
};

mod common;

use common::{gallager_e0, std_normal, variants};

#[test]
fn phi_is_gallager_function_minus_t() {
    for dist in variants() {
        for &v in &[0.3, 1.0, 2.5] {
            for &t in &[0.02, 0.1, 0.3, 0.5, 0.8] {
                let lhs = phi(&dist, v, t).unwrap();
                let rhs = gallager_e0(&dist, v, t) - t;
                assert!((lhs - rhs).abs() < 1e-6, "{dist:?} v={v} t={t}: {lhs} vs {rhs}");
            }
        }
    }
}

/// Values from an adaptive quadrature of the defining integral, split at the
/// origin. Large `t` makes the integrand nearly `max(Φ, 1 − Φ)`.
#[test]
fn phi_near_one_matches_adaptive_quadrature() {
    let cases = [
        (1.5, 1.0, 0.8, -0.3407824500755345),
        (1.5, 0.3, 0.95, -0.20693155834287075),
        (0.5, 2.0, 0.99, -0.6267693411726397),
    ];
    for (var, v, t, want) in cases {
        let got = phi(&EveDistribution::AnalyticGaussian { variance: var }, v, t).unwrap();
        assert!((got - want).abs() < 1e-9, "var={var} v={v} t={t}: {got} vs {want}");
    }
}

#[test]
fn phi_is_convex_on_the_grid() {
    for dist in variants() {
        for &v in &[0.2, 1.0, 4.0] {
            let ys: Vec<f64> = (1..=49).map(|i| phi(&dist, v, i as f64 * 0.01).unwrap()).collect();
            for w in ys.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-6, "{dist:?} v={v}");
            }
        }
    }
}

#[test]
fn phi_slope_at_zero_is_minus_entropy() {
    for dist in variants() {
        for &v in &[0.2, 1.0, 4.0] {
            let h = 1e-5;
            let slope = (phi(&dist, v, h).unwrap() - phi(&dist, v, 0.0).unwrap()) / h;
            let ent = entropy_h(&dist, v).unwrap();
            assert!((slope + ent).abs() < 1e-4, "{dist:?} v={v}: {slope} vs -{ent}");
        }
    }
}

#[test]
fn exp2_phi_is_nonincreasing_in_v() {
    for dist in variants() {
        for &t in &[0.05, 0.2, 0.45, 0.7] {
            let ys: Vec<f64> = (1..=60)
                .map(|i| phi(&dist, 0.05 * i as f64, t).unwrap().exp2())
                .collect();
            for w in ys.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{dist:?} t={t}");
            }
        }
    }
}

/// Entropy and exponent against Monte-Carlo averages over draws of `Ē′`.
#[test]
fn quadrature_agrees_with_monte_carlo() {
    let n = std_normal();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (sd, v, t) = (1.2f64, 0.8f64, 0.3f64);
    let draws = 1_000_000;
    let (mut sh, mut sh2, mut sp, mut sp2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let x: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        let p = n.cdf(x / v.sqrt());
        let h = if p <= 0.0 || p >= 1.0 { 0.0 } else { -(p * p.log2() + (1.0 - p) * (1.0 - p).log2()) };
        let e = (p.powf(1.0 / (1.0 - t)) + (1.0 - p).powf(1.0 / (1.0 - t))).powf(1.0 - t);
        sh += h;
        sh2 += h * h;
        sp += e;
        sp2 += e * e;
    }
    let k = draws as f64;
    let dist = EveDistribution::AnalyticGaussian { variance: sd * sd };
    let (mh, mp) = (sh / k, sp / k);
    let (seh, sep) = (((sh2 / k - mh * mh) / k).sqrt(), ((sp2 / k - mp * mp) / k).sqrt());
    assert!((entropy_h(&dist, v).unwrap() - mh).abs() < 3.0 * seh);
    assert!((phi(&dist, v, t).unwrap().exp2() - mp).abs() < 3.0 * sep);
}

#[test]
fn bound_exponent_is_linear_in_block_length() {
    let dist = EveDistribution::AnalyticGaussian { variance: 1.5 };
    let e = EstimatedExponent::new(&dist, 1.2, 0.0).unwrap();
    let f = |t: f64| e.at(t);
    let h = entropy_h(&dist, 1.2).unwrap();
    // a rate with four decimals keeps m1 = rate·n exact for every n below
    let rate = ((1.0 - h + 0.1) * 1e4).round() / 1e4;
    let per_bit: Vec<f64> = [10_000usize, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let m1 = (rate * n as f64).round() as usize;
            let c = minimize_exponent(&f, n, m1, Criterion::VariationalDistance).unwrap();
            (c.log2_bound - 3f64.log2()) / n as f64
        })
        .collect();
    assert!(per_bit[0] < 0.0);
    for p in &per_bit[1..] {
        assert!((p - per_bit[0]).abs() < 1e-6 * per_bit[0].abs() + 1e-9, "{per_bit:?}");
    }
}

#[test]
fn sacrifice_length_orders() {
    let e = expected_exponent(&ChannelParams::typical(1.0), 0.2, 100_000, 1e-3, 7.2).unwrap();
    let f = |t: f64| e.at(t);
    let n = 100_000;
    let m: Vec<usize> = [-200.0, -100.0, -40.0, -10.0]
        .iter()
        .map(|&target| sacrifice_length(&f, n, target).unwrap())
        .collect();
    for w in m.windows(2) {
        assert!(w[1] <= w[0], "{m:?}");
    }
    let by_n: Vec<usize> = [20_000usize, 100_000, 500_000]
        .iter()
        .map(|&n| sacrifice_length(&f, n, -40.0).unwrap())
        .collect();
    for w in by_n.windows(2) {
        assert!(w[1] >= w[0], "{by_n:?}");
    }
    // the returned length is the smallest that meets the target
    let m1 = m[2];
    let at = |m1| minimize_exponent(&f, n, m1, Criterion::VariationalDistance).unwrap().log2_bound;
    assert!(at(m1) <= -40.0 && at(m1 - 1) > -40.0);
}

#[test]
fn certificate_edges() {
    let params = ChannelParams::typical(1.0);
    let e = expected_exponent(&params, 0.2, 100_000, 1e-3, reference_v_ab(&params, 0.2)).unwrap();
    let f = |t: f64| e.at(t);
    let n = 50_000;
    let full = minimize_exponent(&f, n, n, Criterion::VariationalDistance).unwrap();
    assert!(full.log2_bound <= 3f64.log2() + 1e-12);
    let mut prev = f64::INFINITY;
    for l in [10_000usize, 100_000, 1_000_000] {
        let e = expected_exponent(&params, 0.2, l, 1e-3, 7.2).unwrap();
        let b = minimize_exponent(&|t| e.at(t), n, 30_000, Criterion::VariationalDistance)
            .unwrap()
            .log2_bound;
        assert!(b <= prev, "l={l}");
        prev = b;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// `|2^{φ[P,v](t)} − 2^{φ[P̂,v](t)}| ≤ 2(1 − 2^{−t})·sup|F_P − F_P̂|` for an
    /// empirical `P̂` drawn from `P`.
    #[test]
    fn exponent_moves_at_most_with_sup_distance(
        sd in 0.2f64..3.0,
        v in 0.05f64..5.0,
        t in 0.01f64..0.99,
        k in 5usize..400,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<f64> = (0..k).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let ks = ks_distance(&GaussianCdf { mean: 0.0, stdev: sd }, &EmpiricalCdf::new(pts.clone()).unwrap());
        let p = phi(&EveDistribution::AnalyticGaussian { variance: sd * sd }, v, t).unwrap().exp2();
        let q = phi(&EveDistribution::PointMasses { points: pts }, v, t).unwrap().exp2();
        prop_assert!((p - q).abs() <= 2.0 * (1.0 - (-t).exp2()) * ks + 1e-9, "{} > {}", (p - q).abs(), ks);
    }

    #[test]
    fn sacrifice_grows_with_stricter_targets(a in 5.0f64..60.0, b in 5.0f64..60.0) {
        let e = expected_exponent(&ChannelParams::typical(1.0), 0.2, 100_000, 1e-3, 7.2).unwrap();
        let f = |t: f64| e.at(t);
        let (loose, strict) = if a < b { (-a, -b) } else { (-b, -a) };
        prop_assert!(sacrifice_length(&f, 20_000, strict).unwrap() >= sacrifice_length(&f, 20_000, loose).unwrap());
    }
}
