//! The Kolmogorov distribution: limiting law of `√l·sup|F_l − F|`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SERIES_TOL: f64 = 1e-12;
const QUANTILE_TOL: f64 = 1e-9;

/// `L(x) = 1 − 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²x²}`.
///
/// For `x < 0.75` the equivalent theta-function form
/// `(√(2π)/x) Σ_{k≥1} e^{−(2k−1)²π²/(8x²)}` is summed instead; each series
/// converges in a handful of terms in its own regime.
pub fn kolmogorov_cdf(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("Kolmogorov cdf needs x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x >= 0.75 {
        let mut sum = 0.0;
        for k in 1..=1000u32 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < SERIES_TOL {
                break;
            }
        }
        Ok((1.0 - 2.0 * sum).clamp(0.0, 1.0))
    } else {
        let mut sum = 0.0;
        let c = PI * PI / (8.0 * x * x);
        for k in 1..=1000u32 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * c).exp();
            sum += term;
            if term < SERIES_TOL * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
                break;
            }
        }
        Ok(((2.0 * PI).sqrt() / x * sum).clamp(0.0, 1.0))
    }
}

/// `L⁻¹(p)` by bisection to an interval width of 1e−9.
pub fn kolmogorov_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("Kolmogorov quantile needs p in (0,1), got {p}")));
    }
    let (mut lo, mut hi) = (0.01, 1.0);
    while kolmogorov_cdf(hi)? < p {
        hi *= 2.0;
    }
    while hi - lo > QUANTILE_TOL {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alternating_50(x: f64) -> f64 {
        let s: f64 = (1..=50)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * x * x).exp()
            })
            .sum();
        1.0 - 2.0 * s
    }

    #[test]
    fn value_at_one() {
        let oracle = alternating_50(1.0);
        let v = kolmogorov_cdf(1.0).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 0.7300).abs() < 1e-4);
    }

    #[test]
    fn series_forms_agree_at_switch() {
        for &x in &[0.6, 0.7, 0.75, 0.8, 0.9] {
            let theta = {
                let c = PI * PI / (8.0 * x * x);
                (2.0 * PI).sqrt() / x * (1..=40).map(|k| {
                    let m = (2 * k - 1) as f64;
                    (-m * m * c).exp()
                }).sum::<f64>()
            };
            assert!((theta - alternating_50(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn small_x_limit() {
        assert!(kolmogorov_cdf(0.1).unwrap() < 1e-30);
        assert!(kolmogorov_cdf(0.0).is_err());
        assert!(kolmogorov_cdf(-1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let q = kolmogorov_quantile(1.0 - 5e-5).unwrap();
        assert!((q - 2.30).abs() < 0.005, "q = {q}");
        for &p in &[0.01, 0.5, 0.95, 0.999] {
            let q = kolmogorov_quantile(p).unwrap();
            assert!((kolmogorov_cdf(q).unwrap() - p).abs() < 1e-8);
        }
        assert!(kolmogorov_quantile(1.0).is_err());
    }
}
