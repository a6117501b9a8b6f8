//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use skg_core::secbounds::EveDistribution;

pub fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

pub fn variants() -> Vec<EveDistribution> {
    vec![
        EveDistribution::AnalyticGaussian { variance: 1.5 },
        EveDistribution::PointMasses { points: vec![-2.0, -0.7, -0.1, 0.1, 0.7, 2.0] },
        EveDistribution::GaussianMixture { points: vec![-1.5, -0.2, 0.2, 1.5], stdev: 0.6 },
    ]
}

/// Density (or mass) of each variant on an explicit grid: `(x, weight)` with
/// `Σ weight ≈ 1`. Continuous laws use a trapezoid grid of step `h`.
pub fn discretize(dist: &EveDistribution, h: f64) -> Vec<(f64, f64)> {
    let n = std_normal();
    let grid = |sd: f64, density: &dyn Fn(f64) -> f64, centre_span: f64| {
        let half = centre_span + 14.0 * sd;
        let k = (half / h).ceil() as i64;
        (-k..=k)
            .map(|i| {
                let x = i as f64 * h;
                (x, density(x) * h)
            })
            .collect::<Vec<_>>()
    };
    match dist {
        EveDistribution::AnalyticGaussian { variance } => {
            let sd = variance.sqrt();
            grid(sd, &|x| n.pdf(x / sd) / sd, 0.0)
        }
        EveDistribution::PointMasses { points } => {
            points.iter().map(|&p| (p, 1.0 / points.len() as f64)).collect()
        }
        EveDistribution::GaussianMixture { points, stdev } => {
            let span = points.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            let l = points.len() as f64;
            grid(
                *stdev,
                &|x| points.iter().map(|p| n.pdf((x - p) / stdev)).sum::<f64>() / (l * stdev),
                span,
            )
        }
    }
}

/// Gallager's function for the pair `(B′, Ē′)` with `P(B′=0|x) = Φ(x/√v)`:
/// `log₂ ∫ (Σ_b P(b)·P(x|b)^{1/(1−t)})^{1−t} dx`, from the joint law on a grid.
pub fn gallager_e0(dist: &EveDistribution, v: f64, t: f64) -> f64 {
    let n = std_normal();
    let pts = discretize(dist, 2e-3);
    let joint: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, w)| (n.cdf(x / v.sqrt()) * w, n.sf(x / v.sqrt()) * w))
        .collect();
    let p0: f64 = joint.iter().map(|j| j.0).sum();
    let p1: f64 = joint.iter().map(|j| j.1).sum();
    let r = 1.0 / (1.0 - t);
    let integral: f64 = joint
        .iter()
        .map(|&(j0, j1)| (p0 * (j0 / p0).powf(r) + p1 * (j1 / p1).powf(r)).powf(1.0 - t))
        .sum();
    integral.log2()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}
