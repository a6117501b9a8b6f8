//! Empirical distribution functions, Gaussian smoothing and the
//! Kolmogorov–Smirnov distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// A cumulative distribution function on the real line.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    /// `F(x⁻)`. Equal to `cdf` for continuous distributions.
    fn left_limit(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    /// Jump locations, sorted, for step functions.
    fn jumps(&self) -> Option<&[f64]> {
        None
    }
}

/// Normal distribution function with the given mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCdf {
    pub mean: f64,
    pub stdev: f64,
}

impl GaussianCdf {
    pub fn standard() -> Self {
        GaussianCdf {
            mean: 0.0,
            stdev: 1.0,
        }
    }
}

impl Cdf for GaussianCdf {
    fn cdf(&self, x: f64) -> f64 {
        normal::cdf((x - self.mean) / self.stdev)
    }
}

/// Right-continuous step function `F(x) = #{pᵢ ≤ x}/l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    points: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("empirical cdf points must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `#{pᵢ ≤ x}`.
    pub fn count_le(&self, x: f64) -> usize {
        self.points.partition_point(|&p| p <= x)
    }

    /// `#{pᵢ < x}`.
    pub fn count_lt(&self, x: f64) -> usize {
        self.points.partition_point(|&p| p < x)
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.points.len() as f64
    }

    fn left_limit(&self, x: f64) -> f64 {
        self.count_lt(x) as f64 / self.points.len() as f64
    }

    fn jumps(&self) -> Option<&[f64]> {
        Some(&self.points)
    }
}

/// `𝒢_a[F] = Φ_a * F` for an empirical `F`: the distribution function of the
/// Gaussian mixture `(1/l) Σ N(pᵢ, a²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCdf {
    base: EmpiricalCdf,
    stdev: f64,
}

impl SmoothedCdf {
    pub fn base(&self) -> &EmpiricalCdf {
        &self.base
    }

    pub fn stdev(&self) -> f64 {
        self.stdev
    }

    /// Mixture density `(1/l) Σ φ_a(x − pᵢ)`.
    pub fn density(&self, x: f64) -> f64 {
        let l = self.base.len() as f64;
        self.base
            .points()
            .iter()
            .map(|p| normal::pdf((x - p) / self.stdev))
            .sum::<f64>()
            / (l * self.stdev)
    }
}

impl Cdf for SmoothedCdf {
    fn cdf(&self, x: f64) -> f64 {
        let l = self.base.len() as f64;
        self.base
            .points()
            .iter()
            .map(|p| normal::cdf((x - p) / self.stdev))
            .sum::<f64>()
            / l
    }
}

pub fn smooth_cdf(ecdf: &EmpiricalCdf, a: f64) -> Result<SmoothedCdf> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("smoothing stdev must be > 0, got {a}")));
    }
    Ok(SmoothedCdf {
        base: ecdf.clone(),
        stdev: a,
    })
}

/// `sup_x |F(x) − G(x)|`, evaluated exactly at every jump of either function
/// (value and left limit).
pub fn ks_distance<F: Cdf + ?Sized>(f: &F, g: &EmpiricalCdf) -> f64 {
    let mut d = 0.0f64;
    let pts = g.points();
    let l = pts.len();
    let mut i = 0;
    while i < l {
        // G jumps by (#ties)/l at pts[i]; evaluate directly to handle ties.
        let x = pts[i];
        let mut j = i;
        while j < l && pts[j] == x {
            j += 1;
        }
        let (below, at) = (i as f64 / l as f64, j as f64 / l as f64);
        d = d
            .max((f.cdf(x) - at).abs())
            .max((f.left_limit(x) - below).abs());
        i = j;
    }
    if let Some(jumps) = f.jumps() {
        for &x in jumps {
            d = d
                .max((f.cdf(x) - g.cdf(x)).abs())
                .max((f.left_limit(x) - g.left_limit(x)).abs());
        }
    }
    d
}

/// `sup_x |Φ(x) − Φ(x/a)|` in closed form.
///
/// The difference is extremal where `φ(x) = φ(x/a)/a`, i.e. at
/// `x = a·√(−2 ln a/(1−a²))`; the supremum is the normal mass between that
/// point and `√(−2 ln a/(1−a²))`. Near `a = 1` it behaves as `|a−1|/√(2πe)`.
pub fn gaussian_sup_distance(a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("scale must be > 0, got {a}")));
    }
    if a == 1.0 {
        return Ok(0.0);
    }
    let r = (-2.0 * a.ln() / (1.0 - a * a)).sqrt();
    let (lo, hi) = if a < 1.0 { (a * r, r) } else { (r, a * r) };
    Ok(normal::sf(lo) - normal::sf(hi))
}
