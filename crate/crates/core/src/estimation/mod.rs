//! Parameter and distribution estimation from sampled rounds.
//!
//! The first estimation round yields moment estimates of `B` and of the
//! covariance with `A`; the second yields residuals `B − ĉ·A − ê`, whose
//! empirical distribution stands in for Eve's reduced statistic. All
//! confidence intervals use the Gaussian approximation `x̂ ± √var·Z_ε/√l`.

mod ecdf;
mod kolmogorov;

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::ChannelParams;
use crate::normal;

pub use ecdf::{
    gaussian_sup_distance, ks_distance, smooth_cdf, Cdf, EmpiricalCdf, GaussianCdf, SmoothedCdf,
};
pub use kolmogorov::{kolmogorov_cdf, kolmogorov_quantile};

/// Below this sample count the Gaussian approximation of the intervals is
/// questionable.
pub const MIN_RECOMMENDED_SAMPLES: usize = 10_000;

/// Inverse standard normal distribution function.
pub fn gaussian_quantile(p: f64) -> Result<f64> {
    normal::quantile(p)
}

/// Percent point `Z_ε` used for every confidence interval: `Φ⁻¹(1 − ε/2)`,
/// so that `x̂ ± √var·Z_ε/√l` covers with probability `1 − ε`.
pub fn z_epsilon(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    normal::quantile(1.0 - 0.5 * epsilon)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1/2), got {epsilon}")));
    }
    Ok(())
}

/// Symmetric confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn around(center: f64, halfwidth: f64) -> Self {
        Interval {
            lo: center - halfwidth,
            hi: center + halfwidth,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Estimates published after the two estimation rounds.
///
/// `v_hat` is the unbiased variance of `B`; `v_ab_hat` the unbiased variance
/// of `(A − ê_A)(B − ê_B)`; `w_hat` estimates the variance of `(B − e_B)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub e_hat: f64,
    pub v_hat: f64,
    pub c_hat: f64,
    pub v_ab_hat: f64,
    pub w_hat: f64,
    pub l: usize,
    pub epsilon: f64,
    /// Sorted residuals `B̃ − ĉ·Ã − ê`; empty until [`residuals`] runs.
    pub residuals: Vec<f64>,
}

impl EstimateBundle {
    fn z(&self) -> f64 {
        z_epsilon(self.epsilon).expect("epsilon validated at construction")
    }

    pub fn e_interval(&self) -> Interval {
        Interval::around(self.e_hat, self.v_hat.sqrt() * self.z() / (self.l as f64).sqrt())
    }

    pub fn v_interval(&self) -> Interval {
        Interval::around(self.v_hat, self.w_hat.sqrt() * self.z() / (self.l as f64).sqrt())
    }

    pub fn c_interval(&self) -> Interval {
        Interval::around(self.c_hat, self.c_halfwidth())
    }

    /// `√v̂_AB·Z_ε/√l`.
    pub fn c_halfwidth(&self) -> f64 {
        self.v_ab_hat.sqrt() * self.z() / (self.l as f64).sqrt()
    }

    /// Lower confidence limit of the covariance, `ĉ − √v̂_AB·Z_ε/√l`.
    pub fn c_lower(&self) -> f64 {
        self.c_hat - self.c_halfwidth()
    }

    pub fn is_complete(&self) -> bool {
        !self.residuals.is_empty()
    }

    pub fn residual_cdf(&self) -> Result<EmpiricalCdf> {
        EmpiricalCdf::new(self.residuals.clone())
    }
}

/// Moment estimates from the first estimation round of `(a, b)` pairs.
pub fn estimate_moments(samples: &[(f64, f64)], epsilon: f64) -> Result<EstimateBundle> {
    let l = samples.len();
    if l < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: l });
    }
    check_epsilon(epsilon)?;
    let lf = l as f64;
    let e_a = samples.iter().map(|s| s.0).sum::<f64>() / lf;
    let e_hat = samples.iter().map(|s| s.1).sum::<f64>() / lf;
    let v_hat = samples.iter().map(|s| (s.1 - e_hat).powi(2)).sum::<f64>() / (lf - 1.0);
    let c_hat = samples.iter().map(|s| s.0 * (s.1 - e_hat)).sum::<f64>() / lf;
    let w_hat = samples
        .iter()
        .map(|s| ((s.1 - e_hat).powi(2) - v_hat).powi(2))
        .sum::<f64>()
        / (lf - 1.0);
    let prods: Vec<f64> = samples.iter().map(|s| (s.0 - e_a) * (s.1 - e_hat)).collect();
    let mean_prod = prods.iter().sum::<f64>() / lf;
    let v_ab_hat = prods.iter().map(|p| (p - mean_prod).powi(2)).sum::<f64>() / (lf - 1.0);
    Ok(EstimateBundle {
        e_hat,
        v_hat,
        c_hat,
        v_ab_hat,
        w_hat,
        l,
        epsilon,
        residuals: Vec::new(),
    })
}

/// Completes `bundle` with sorted residuals from the second estimation round.
pub fn residuals(samples2: &[(f64, f64)], mut bundle: EstimateBundle) -> Result<EstimateBundle> {
    if samples2.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut r: Vec<f64> = samples2
        .iter()
        .map(|&(a, b)| b - bundle.c_hat * a - bundle.e_hat)
        .collect();
    r.sort_by(f64::total_cmp);
    bundle.residuals = r;
    Ok(bundle)
}

/// Which reduced statistic the estimate of Eve's distribution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EveBranch {
    /// Smoothed residual distribution, an estimate of `E′`.
    Prime,
    /// Raw residual distribution, an estimate of the stronger `E″`.
    DoublePrime,
}

/// Estimate of the distribution function of Eve's reduced statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct EveCdf {
    pub branch: EveBranch,
    pub base: EmpiricalCdf,
    /// Gaussian smoothing width; zero for [`EveBranch::DoublePrime`].
    pub smoothing_stdev: f64,
}

impl EveCdf {
    pub fn smoothed(&self) -> Option<SmoothedCdf> {
        match self.branch {
            EveBranch::Prime => smooth_cdf(&self.base, self.smoothing_stdev).ok(),
            EveBranch::DoublePrime => None,
        }
    }
}

impl Cdf for EveCdf {
    fn cdf(&self, x: f64) -> f64 {
        match self.smoothed() {
            Some(s) => s.cdf(x),
            None => self.base.cdf(x),
        }
    }

    fn left_limit(&self, x: f64) -> f64 {
        match self.branch {
            EveBranch::Prime => self.cdf(x),
            EveBranch::DoublePrime => self.base.left_limit(x),
        }
    }

    fn jumps(&self) -> Option<&[f64]> {
        match self.branch {
            EveBranch::Prime => None,
            EveBranch::DoublePrime => Some(self.base.points()),
        }
    }
}

/// Picks the estimation branch from `q = ĉ²·a_E²/(a_E²+b_E²) − b_B²`: a
/// positive `q` lets the residual distribution be smoothed by `N(0, q)` into
/// an estimate of `E′`; otherwise the raw residuals estimate `E″`.
pub fn estimate_eve_cdf(bundle: &EstimateBundle, params: &ChannelParams) -> Result<EveCdf> {
    let base = bundle.residual_cdf()?;
    let q = bundle.c_hat * bundle.c_hat * params.eve_signal_fraction() - params.b_b * params.b_b;
    Ok(if q > 0.0 {
        EveCdf {
            branch: EveBranch::Prime,
            base,
            smoothing_stdev: q.sqrt(),
        }
    } else {
        EveCdf {
            branch: EveBranch::DoublePrime,
            base,
            smoothing_stdev: 0.0,
        }
    })
}

/// Bound on `sup|F − F̂|` for Eve's estimated distribution, valid with
/// confidence about `1 − 2ε`:
/// `√v̂_AB·Z_ε/(√(2πe)·ĉ·√l) + L⁻¹(1−ε)/√l`.
pub fn ks_error_bound(bundle: &EstimateBundle, epsilon: f64) -> Result<f64> {
    ks_error_bound_from(bundle.v_ab_hat, bundle.c_hat, bundle.l, epsilon)
}

/// [`ks_error_bound`] from raw estimates.
pub fn ks_error_bound_from(v_ab_hat: f64, c_hat: f64, l: usize, epsilon: f64) -> Result<f64> {
    if c_hat == 0.0 || !c_hat.is_finite() {
        return Err(Error::InsufficientCorrelation(c_hat));
    }
    if l == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let z = z_epsilon(epsilon)?;
    let k = kolmogorov_quantile(1.0 - epsilon)?;
    let sl = (l as f64).sqrt();
    Ok(v_ab_hat.sqrt() * z / ((2.0 * PI * E).sqrt() * c_hat.abs() * sl) + k / sl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_are_degenerate() {
        let s = vec![(0.0, 3.5); 10];
        let b = estimate_moments(&s, 0.01).unwrap();
        assert_eq!(b.e_hat, 3.5);
        assert_eq!(b.v_hat, 0.0);
        assert_eq!(b.c_hat, 0.0);
        assert_eq!(b.v_ab_hat, 0.0);
    }

    #[test]
    fn two_sample_arithmetic() {
        let b = estimate_moments(&[(1.0, 2.0), (-1.0, 0.0)], 0.01).unwrap();
        assert_eq!(b.e_hat, 1.0);
        assert_eq!(b.c_hat, 1.0);
        assert_eq!(b.v_hat, 2.0);
    }

    #[test]
    fn argument_checks() {
        assert!(matches!(
            estimate_moments(&[(1.0, 1.0)], 0.01),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(estimate_moments(&[(1.0, 1.0), (0.0, 2.0)], 0.5).is_err());
        assert!(estimate_moments(&[(1.0, 1.0), (0.0, 2.0)], 0.0).is_err());
    }

    fn bundle(c_hat: f64, e_hat: f64) -> EstimateBundle {
        EstimateBundle {
            e_hat,
            v_hat: 1.0,
            c_hat,
            v_ab_hat: 1.0,
            w_hat: 1.0,
            l: 100,
            epsilon: 0.01,
            residuals: vec![],
        }
    }

    #[test]
    fn residual_examples() {
        let b = residuals(&[(2.0, 5.0)], bundle(1.0, 0.0)).unwrap();
        assert_eq!(b.residuals, vec![3.0]);
        let b = residuals(&[(1.0, 2.0)], bundle(2f64.sqrt(), 0.1)).unwrap();
        assert!((b.residuals[0] - (2.0 - 2f64.sqrt() - 0.1)).abs() < 1e-15);
        assert!((b.residuals[0] - 0.4858).abs() < 1e-4);
        let c = 1.7;
        let noiseless: Vec<(f64, f64)> = (0..50).map(|i| {
            let a = i as f64 * 0.125 - 3.0;
            (a, c * a + 0.5)
        }).collect();
        let b = residuals(&noiseless, bundle(c, 0.5)).unwrap();
        assert!(b.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!(residuals(&[], bundle(1.0, 0.0)).is_err());
    }

    #[test]
    fn residuals_sorted() {
        let s = [(0.0, 3.0), (0.0, -1.0), (0.0, 2.0)];
        let b = residuals(&s, bundle(1.0, 0.0)).unwrap();
        assert_eq!(b.residuals, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn quantile_constants() {
        let z = z_epsilon(5e-5).unwrap();
        assert!((z - 4.06).abs() < 0.01, "{z}");
        assert_eq!(gaussian_quantile(0.5).unwrap(), 0.0);
        assert!((gaussian_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-8);
        assert!(gaussian_quantile(1.0).is_err());
    }

    #[test]
    fn eve_branch_selection() {
        let s2 = 2f64.sqrt();
        let params = ChannelParams::new(s2, 1.0, 0.0, s2, 1.0).unwrap();
        let mut b = bundle(s2, 0.0);
        b.residuals = vec![-0.5, 0.1, 0.7];
        let eve = estimate_eve_cdf(&b, &params).unwrap();
        assert_eq!(eve.branch, EveBranch::Prime);
        assert!((eve.smoothing_stdev - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let noisy_bob = ChannelParams::new(s2, 10.0, 0.0, s2, 1.0).unwrap();
        assert_eq!(estimate_eve_cdf(&b, &noisy_bob).unwrap().branch, EveBranch::DoublePrime);

        // ĉ²·a_E²/(a_E²+b_E²) = 1·1/2 = b_B² exactly
        let boundary = ChannelParams::new(1.0, 0.5f64.sqrt(), 0.0, 1.0, 1.0).unwrap();
        let mut b = bundle(1.0, 0.0);
        b.residuals = vec![0.0];
        let eve = estimate_eve_cdf(&b, &boundary).unwrap();
        assert_eq!(eve.branch, EveBranch::DoublePrime);
        assert_eq!(eve.smoothing_stdev, 0.0);
    }

    #[test]
    fn ks_error_bound_plug_in() {
        let (v_ab, c, l, eps) = (7.2f64, 2f64.sqrt(), 500_000usize, 5e-5);
        let z = 4.055626981122;
        let lq = 2.301_807_413;
        let expect = v_ab.sqrt() * z / ((2.0 * PI * E).sqrt() * c * (l as f64).sqrt())
            + lq / (l as f64).sqrt();
        let got = ks_error_bound_from(v_ab, c, l, eps).unwrap();
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
        assert!((got - 5.8885e-3).abs() < 1e-6);

        let far = ks_error_bound_from(v_ab, c, 1 << 40, eps).unwrap();
        assert!(far < 1e-5);
        assert!(ks_error_bound_from(v_ab, 0.0, l, eps).is_err());
    }
}
