//! Standard normal density, distribution function and quantile.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Density of the standard normal distribution.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Distribution function Φ(x) of the standard normal distribution.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x), accurate for large positive `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of Φ on (0, 1).
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0,1), got {p}")));
    }
    let mut x = if p < 0.5 {
        -SQRT_2 * erfc_inv(2.0 * p)
    } else {
        SQRT_2 * erfc_inv(2.0 * (1.0 - p))
    };
    // one Newton step on whichever tail is better conditioned
    let d = pdf(x);
    if d > 0.0 {
        let resid = if p < 0.5 { cdf(x) - p } else { (1.0 - p) - sf(x) };
        x -= resid / d;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_tails() {
        for &x in &[0.0, 0.3, 1.7, 5.0, 9.0] {
            assert!((cdf(-x) - sf(x)).abs() < 1e-16);
        }
        assert_eq!(cdf(0.0), 0.5);
    }

    #[test]
    fn quantile_roundtrip() {
        for &p in &[1e-12, 1e-5, 0.01, 0.3, 0.5, 0.77, 0.975, 1.0 - 1e-9] {
            let x = quantile(p).unwrap();
            assert!((cdf(x) - p).abs() <= 1e-12 * p.max(1e-3), "p={p}");
        }
        assert!(quantile(0.0).is_err());
        assert!(quantile(1.0).is_err());
        assert!(quantile(f64::NAN).is_err());
    }
}
