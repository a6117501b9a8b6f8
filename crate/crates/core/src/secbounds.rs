//! Leaked-information bounds for the sign-discretized key.
//!
//! For Eve's reduced statistic with law `P` and Bob's conditional variance
//! `v`, Bob's bit is `0` with probability `Φ(x/√v)` given the statistic `x`.
//! Everything here reduces to integrals of functions of that probability
//! against `P`, which [`BitTable`] discretizes once per `(P, v)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, EmpiricalCdf, EstimateBundle, EveBranch, EveCdf};
use crate::gaussmodel::ChannelParams;
use crate::normal;
use crate::quadrature::{composite_legendre, gauss_legendre, Rule};

const LEGENDRE_NODES: usize = 8;
const TAIL_STDEVS: f64 = 10.0;
/// Halvings of the panel width towards the origin, down to `√v·2^{−16}`.
const GRADED_LEVELS: i32 = 16;
const MAX_NODES: usize = 4_000_000;
const DERIV_STEP: f64 = 1e-6;
const SEARCH_WIDTH: f64 = 1e-6;
const NOISE_FLOOR: f64 = 1e-12;
/// Search domain of the modified-mutual-information criterion.
pub const MI_DOMAIN: (f64, f64) = (1e-4, 1.0 - 1e-4);

/// Law of Eve's reduced statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EveDistribution {
    /// Centred normal law.
    AnalyticGaussian { variance: f64 },
    /// Uniform law on the given points.
    PointMasses { points: Vec<f64> },
    /// `(1/l) Σ N(pᵢ, stdev²)`.
    GaussianMixture { points: Vec<f64>, stdev: f64 },
}

impl EveDistribution {
    /// Law matching an estimated distribution function: the smoothed
    /// residuals for [`EveBranch::Prime`], the raw residuals otherwise.
    pub fn from_eve_cdf(eve: &EveCdf) -> Self {
        match eve.branch {
            EveBranch::Prime => EveDistribution::GaussianMixture {
                points: eve.base.points().to_vec(),
                stdev: eve.smoothing_stdev,
            },
            EveBranch::DoublePrime => EveDistribution::PointMasses {
                points: eve.base.points().to_vec(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EveDistribution::AnalyticGaussian { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::param("variance", "must be finite and > 0"));
                }
            }
            EveDistribution::PointMasses { points } => check_points(points)?,
            EveDistribution::GaussianMixture { points, stdev } => {
                check_points(points)?;
                if !(*stdev > 0.0 && stdev.is_finite()) {
                    return Err(Error::param("stdev", "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("distribution points must be finite".into()));
    }
    Ok(())
}

/// Discretized pair `(P, v)`: node weights with the probabilities
/// `Φ(x/√v)` and `Φ(−x/√v)` of Bob's two bit values at each node.
#[derive(Debug, Clone)]
pub struct BitTable {
    weights: Vec<f64>,
    p0: Vec<f64>,
    p1: Vec<f64>,
}

impl BitTable {
    pub fn new(dist: &EveDistribution, v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param("v", format!("must be finite and > 0, got {v}")));
        }
        dist.validate()?;
        let sv = v.sqrt();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match dist {
            EveDistribution::AnalyticGaussian { variance } => {
                let sd = variance.sqrt();
                let rule = layout(-TAIL_STDEVS * sd, TAIL_STDEVS * sd, sv, 0.5 * sd)?;
                for (x, w) in rule.nodes.into_iter().zip(rule.weights) {
                    weights.push(w * normal::pdf(x / sd) / sd);
                    nodes.push(x);
                }
            }
            EveDistribution::PointMasses { points } => {
                nodes.extend_from_slice(points);
                weights.resize(points.len(), 1.0 / points.len() as f64);
            }
            EveDistribution::GaussianMixture { points, stdev } => {
                let a = *stdev;
                let mut sorted = points.clone();
                sorted.sort_by(f64::total_cmp);
                let (pmin, pmax) = (sorted[0], sorted[sorted.len() - 1]);
                let rule = layout(pmin - TAIL_STDEVS * a, pmax + TAIL_STDEVS * a, sv, 0.5 * a)?;
                let reach = TAIL_STDEVS * a;
                for (x, w) in rule.nodes.into_iter().zip(rule.weights) {
                    let first = sorted.partition_point(|&p| p < x - reach);
                    let last = sorted.partition_point(|&p| p <= x + reach);
                    let dens: f64 = sorted[first..last].iter().map(|p| normal::pdf((x - p) / a)).sum();
                    if dens > 0.0 {
                        weights.push(w * dens);
                        nodes.push(x);
                    }
                }
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(BitTable {
            p0: nodes.iter().map(|x| normal::cdf(x / sv)).collect(),
            p1: nodes.iter().map(|x| normal::sf(x / sv)).collect(),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `H[P, v]` in bits.
    pub fn entropy(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.p0.iter().zip(&self.p1))
            .map(|(w, (&p, &q))| w * (xlog2x(p) + xlog2x(q)))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// `2^{φ[P, v](t)}` for `t ∈ (−1, 1)`.
    pub fn exp2_phi(&self, t: f64) -> f64 {
        let alpha = 1.0 / (1.0 - t);
        self.weights
            .iter()
            .zip(self.p0.iter().zip(&self.p1))
            .map(|(w, (&p, &q))| w * renyi_norm(p, q, alpha))
            .sum()
    }

    /// `φ[P, v](t)`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Domain(format!("phi needs t in [0, 1), got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.exp2_phi(t).log2().min(0.0))
    }
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `(p^α + q^α)^{1/α}`, scaled by the larger argument to stay in range.
fn renyi_norm(p: f64, q: f64, alpha: f64) -> f64 {
    let (m, s) = if p >= q { (p, q) } else { (q, p) };
    if s <= 0.0 {
        return m;
    }
    let u = (alpha * (s / m).ln()).exp();
    m * (u.ln_1p() / alpha).exp()
}

/// Composite Gauss–Legendre rule on `[lo, hi]` for integrands in which
/// `Φ(x/√v)` appears. Panels are at most `0.25·√v` wide where the bit
/// probability moves (`|x| < 12√v`) and at most `coarse` elsewhere. Around the
/// origin they shrink geometrically, since `(Φ^α + (1−Φ)^α)^{1/α}` develops a
/// corner at `x = 0` as `t → 1`.
fn layout(lo: f64, hi: f64, sv: f64, coarse: f64) -> Result<Rule> {
    let mut cuts = vec![lo, hi, 0.0, -12.0 * sv, 12.0 * sv];
    for k in 0..=GRADED_LEVELS {
        let x = sv * (-(k as f64)).exp2();
        cuts.extend([x, -x]);
    }
    cuts.retain(|&c| lo <= c && c <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let base = gauss_legendre(LEGENDRE_NODES);
    let mut rule = Rule { nodes: Vec::new(), weights: Vec::new() };
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inner = a >= -12.0 * sv && b <= 12.0 * sv;
        let width = if inner { coarse.min(0.25 * sv) } else { coarse };
        let panels = ((b - a) / width).ceil().max(1.0) as usize;
        if rule.nodes.len() + panels * LEGENDRE_NODES > MAX_NODES {
            return Err(Error::TooLarge(format!("quadrature would need more than {MAX_NODES} nodes")));
        }
        let r = composite_legendre(a, b, panels, &base);
        rule.nodes.extend(r.nodes);
        rule.weights.extend(r.weights);
    }
    Ok(rule)
}

/// `H[P, v] = E_P[h(Φ(X/√v))]`.
pub fn entropy_h(dist: &EveDistribution, v: f64) -> Result<f64> {
    Ok(BitTable::new(dist, v)?.entropy())
}

/// `φ[P, v](t) = log₂ E_P[(Φ^{1/(1−t)} + (1−Φ)^{1/(1−t)})^{1−t}]`.
pub fn phi(dist: &EveDistribution, v: f64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("phi needs t in [0, 1), got {t}")));
    }
    BitTable::new(dist, v)?.phi(t)
}

/// Shrunk parameter entering the estimated exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrunkParameter {
    /// Lower confidence limit of Bob's conditional variance given `E′`.
    ConditionalVariance(f64),
    /// Lower confidence limit of the covariance, squared into the variance
    /// for the `E″` branch.
    Covariance(f64),
}

/// `φ̂(t)`: the exponent of the estimated law at the shrunk variance,
/// padded for the estimation error of the law:
/// `2^{φ̂(t)} = 2^{φ[P̂, v](t)} + 2(1 − 2^{−t})·δ`.
#[derive(Debug, Clone)]
pub struct EstimatedExponent {
    table: BitTable,
    /// `δ`, the bound on the sup-distance between the true and estimated laws.
    pub padding: f64,
    pub variance: f64,
    pub shrunk: Option<ShrunkParameter>,
}

impl EstimatedExponent {
    pub fn new(dist: &EveDistribution, variance: f64, padding: f64) -> Result<Self> {
        if !(padding >= 0.0 && padding.is_finite()) {
            return Err(Error::param("padding", "must be finite and >= 0"));
        }
        Ok(EstimatedExponent {
            table: BitTable::new(dist, variance)?,
            padding,
            variance,
            shrunk: None,
        })
    }

    pub fn table(&self) -> &BitTable {
        &self.table
    }

    /// `φ̂(t)` for `t ∈ [0, 1)`.
    pub fn at(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let pad = 2.0 * (1.0 - (-t).exp2()) * self.padding;
        (self.table.exp2_phi(t) + pad).log2()
    }

    /// Unpadded `φ[P̂, v](t)`.
    pub fn unpadded(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            self.table.exp2_phi(t).log2()
        }
    }
}

/// Builds `φ̂` from published estimates.
///
/// Prime branch: law of the smoothed residuals at variance
/// `c²·b_E²/(a_E²+b_E²) + b_B²`; double-prime branch: raw residuals at
/// variance `c²`; in both `c = ĉ − √v̂_AB·Z_ε/√l`.
pub fn phi_hat(
    bundle: &EstimateBundle,
    eve: &EveCdf,
    params: &ChannelParams,
    epsilon: f64,
) -> Result<EstimatedExponent> {
    let c_lower = bundle.c_hat.abs() - bundle.c_halfwidth();
    if !(c_lower > 0.0) {
        return Err(Error::InsufficientCorrelation(c_lower));
    }
    let padding = estimation::ks_error_bound(bundle, epsilon)?;
    let dist = EveDistribution::from_eve_cdf(eve);
    let (variance, shrunk) = match eve.branch {
        EveBranch::Prime => {
            let v = c_lower * c_lower * (1.0 - params.eve_signal_fraction()) + params.b_b * params.b_b;
            (v, ShrunkParameter::ConditionalVariance(v))
        }
        EveBranch::DoublePrime => (c_lower * c_lower, ShrunkParameter::Covariance(c_lower)),
    };
    let mut e = EstimatedExponent::new(&dist, variance, padding)?;
    e.shrunk = Some(shrunk);
    Ok(e)
}

/// `φ̂` with every estimate replaced by its expectation under Gaussian
/// injected noise of variance `v_y`: `ĉ = a_B`, Eve's law
/// `N(0, a_B²a_E²/(a_E²+b_E²) + v_Y)`, and the given `v̂_AB`.
pub fn expected_exponent(
    params: &ChannelParams,
    v_y: f64,
    l: usize,
    epsilon: f64,
    v_ab_hat: f64,
) -> Result<EstimatedExponent> {
    params.validate()?;
    if !(v_y >= 0.0 && v_y.is_finite()) {
        return Err(Error::param("v_y", "must be finite and >= 0"));
    }
    let c = params.a_b;
    let c_lower = c - v_ab_hat.sqrt() * estimation::z_epsilon(epsilon)? / (l as f64).sqrt();
    if !(c_lower > 0.0) {
        return Err(Error::InsufficientCorrelation(c_lower));
    }
    let frac = params.eve_signal_fraction();
    let variance = c_lower * c_lower * (1.0 - frac) + params.b_b * params.b_b;
    let padding = estimation::ks_error_bound_from(v_ab_hat, c, l, epsilon)?;
    let dist = EveDistribution::AnalyticGaussian {
        variance: c * c * frac + v_y,
    };
    let mut e = EstimatedExponent::new(&dist, variance, padding)?;
    e.shrunk = Some(ShrunkParameter::ConditionalVariance(variance));
    Ok(e)
}

/// Conservative stand-in for `v̂_AB`: `2c² + v_B` with `c = a_B` and
/// `v_B = Var(B)`. For Gaussian noise the estimator's mean is `c² + v_B`.
pub fn reference_v_ab(params: &ChannelParams, v_y: f64) -> f64 {
    let c2 = params.a_b * params.a_b;
    2.0 * c2 + (c2 + params.b_b * params.b_b + v_y)
}

/// Security criterion certified by a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `I′(K:E|H)`, bound `inf_s 2^{s(n−m₁)+nφ(s)}/s`.
    ModifiedMutualInfo,
    /// `d(K:E|H)`, bound `3·min_{t≤1/2} 2^{t(n−m₁)+nφ(t)}`.
    VariationalDistance,
}

/// A minimized leaked-information bound, in log₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityCertificate {
    pub criterion: Criterion,
    pub s_star: f64,
    pub log2_bound: f64,
    pub n: usize,
    pub m1: usize,
    pub padding: f64,
    pub shrunk: Option<ShrunkParameter>,
}

impl SecurityCertificate {
    pub fn with_estimate(mut self, e: &EstimatedExponent) -> Self {
        self.padding = e.padding;
        self.shrunk = e.shrunk;
        self
    }
}

/// Log₂ of the bound at a given `s`, before minimization.
pub fn log2_bound_at<F: Fn(f64) -> f64>(phi_fn: &F, n: usize, m1: usize, criterion: Criterion, s: f64) -> f64 {
    let g = s * (n as f64 - m1 as f64) + n as f64 * phi_fn(s);
    match criterion {
        Criterion::VariationalDistance => 3f64.log2() + g,
        Criterion::ModifiedMutualInfo => g - s.log2(),
    }
}

/// Minimizes the convex exponent of either criterion.
///
/// Bisection on the sign of a central difference; switches to golden-section
/// search once the difference drops below the rounding floor.
pub fn minimize_exponent<F: Fn(f64) -> f64>(
    phi_fn: &F,
    n: usize,
    m1: usize,
    criterion: Criterion,
) -> Result<SecurityCertificate> {
    if m1 > n {
        return Err(Error::param("m1", format!("must not exceed n = {n}, got {m1}")));
    }
    let (lo, hi) = match criterion {
        Criterion::VariationalDistance => (0.0, 0.5),
        Criterion::ModifiedMutualInfo => MI_DOMAIN,
    };
    let f = |s: f64| -> Result<f64> {
        let v = log2_bound_at(phi_fn, n, m1, criterion, s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(s))
        }
    };
    let (s_star, log2_bound) = convex_argmin(&f, lo, hi)?;
    Ok(SecurityCertificate {
        criterion,
        s_star,
        log2_bound,
        n,
        m1,
        padding: 0.0,
        shrunk: None,
    })
}

fn convex_argmin<F: Fn(f64) -> Result<f64>>(f: &F, lo0: f64, hi0: f64) -> Result<(f64, f64)> {
    let deriv = |x: f64| -> Result<f64> {
        let a = (x - DERIV_STEP).max(lo0);
        let b = (x + DERIV_STEP).min(hi0);
        Ok((f(b)? - f(a)?) / (b - a))
    };
    if deriv(lo0)? >= 0.0 {
        return Ok((lo0, f(lo0)?));
    }
    if deriv(hi0)? <= 0.0 {
        return Ok((hi0, f(hi0)?));
    }
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > SEARCH_WIDTH {
        let mid = 0.5 * (lo + hi);
        let d = deriv(mid)?;
        if d.abs() < NOISE_FLOOR {
            return golden_section(f, lo, hi);
        }
        if d > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

fn golden_section<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > SEARCH_WIDTH {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Smallest `m₁` whose variational-distance bound is at most
/// `2^{target_log2}`, by binary search (the bound does not increase in `m₁`).
pub fn sacrifice_length<F: Fn(f64) -> f64>(phi_fn: &F, n: usize, target_log2: f64) -> Result<usize> {
    let ok = |m1: usize| -> Result<bool> {
        Ok(minimize_exponent(phi_fn, n, m1, Criterion::VariationalDistance)?.log2_bound <= target_log2)
    };
    if !ok(n)? {
        return Err(Error::Unachievable { target: target_log2, n });
    }
    let (mut lo, mut hi) = (0usize, n);
    if ok(0)? {
        return Ok(0);
    }
    // invariant: !ok(lo), ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Asymptotic rates for a Gaussian injected noise of variance `x·b²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalRate {
    pub x: f64,
    pub rate: f64,
    pub mi_ab: f64,
    pub mi_eb: f64,
}

/// Key rate of the symmetric example channel `a_B = a_E = √2·b`,
/// `b_B = b_E = b` with Gaussian `Y` of variance `x·b²`. The rate is the
/// signed difference `mi_ab − mi_eb`; a nonpositive value means no key.
pub fn key_rate_typical(x: f64) -> Result<TypicalRate> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::param("x", format!("must be finite and >= 0, got {x}")));
    }
    let std = EveDistribution::AnalyticGaussian { variance: 1.0 };
    let h_ab = entropy_h(&std, (1.0 + x) / 2.0)?;
    let h_eb = entropy_h(&std, 5.0 / (4.0 + 3.0 * x))?;
    Ok(TypicalRate {
        x,
        rate: h_eb - h_ab,
        mi_ab: 1.0 - h_ab,
        mi_eb: 1.0 - h_eb,
    })
}

/// `I(A; B′)` between Alice's standard normal input and Bob's sign bit,
/// with Bob's noise given by the residual sample: exact over the breakpoints
/// of the resulting step function.
pub fn mutual_info_ab(bundle: &EstimateBundle, eve_raw: &EmpiricalCdf) -> Result<f64> {
    let c = bundle.c_hat.abs();
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InsufficientCorrelation(bundle.c_hat));
    }
    let l = eve_raw.len();
    let lf = l as f64;
    // breakpoints u = −r/|ĉ| in ascending order
    let u: Vec<f64> = eve_raw.points().iter().rev().map(|r| -r / c).collect();
    let n0 = u.iter().map(|&x| normal::sf(x)).sum::<f64>() / lf;
    let mut cond = 0.0;
    let mut prev = normal::cdf(u[0]);
    for k in 1..l {
        let cur = normal::cdf(u[k]);
        cond += (cur - prev) * binary_entropy(k as f64 / lf);
        prev = cur;
    }
    Ok((binary_entropy(n0) - cond).clamp(0.0, 1.0))
}

fn binary_entropy(p: f64) -> f64 {
    xlog2x(p) + xlog2x(1.0 - p)
}

/// Evaluates the bound exponent on a grid of `s`.
pub fn bound_curve<F: Fn(f64) -> f64>(
    phi_fn: &F,
    n: usize,
    m1: usize,
    criterion: Criterion,
    s_grid: &[f64],
) -> Vec<(f64, f64)> {
    s_grid
        .iter()
        .map(|&s| (s, log2_bound_at(phi_fn, n, m1, criterion, s)))
        .collect()
}

/// Writes a rate sweep with header `x,rate,mi_ab,mi_eb`.
pub fn write_rate_csv<W: Write>(w: W, rows: &[TypicalRate]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a bound sweep with header `s,log2_bound`.
pub fn write_bound_csv<W: Write>(w: W, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "log2_bound"])?;
    for (s, b) in rows {
        out.write_record([s.to_string(), b.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal() -> EveDistribution {
        EveDistribution::AnalyticGaussian { variance: 1.0 }
    }

    /// Plain midpoint-rule oracle on a wide fine grid.
    fn midpoint_entropy(var: f64, v: f64) -> f64 {
        let (lo, hi, m) = (-12.0 * var.sqrt(), 12.0 * var.sqrt(), 400_000);
        let h = (hi - lo) / m as f64;
        (0..m)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * h;
                let p = normal::cdf(x / v.sqrt());
                h * normal::pdf(x / var.sqrt()) / var.sqrt() * binary_entropy(p)
            })
            .sum()
    }

    #[test]
    fn entropy_limits() {
        assert!((entropy_h(&std_normal(), 1e12).unwrap() - 1.0).abs() < 1e-4);
        assert!(entropy_h(&std_normal(), 1e-10).unwrap() < 1e-4);
        assert!(entropy_h(&std_normal(), 0.0).is_err());
    }

    #[test]
    fn entropy_matches_midpoint_oracle() {
        for &(var, v) in &[(1.0, 0.6), (1.0, 1e-3), (4.0, 0.01), (0.3, 5.0)] {
            let q = entropy_h(&EveDistribution::AnalyticGaussian { variance: var }, v).unwrap();
            let o = midpoint_entropy(var, v);
            assert!((q - o).abs() < 1e-8, "var={var} v={v}: {q} vs {o}");
        }
    }

    #[test]
    fn phi_basics() {
        let d = std_normal();
        assert_eq!(phi(&d, 0.7, 0.0).unwrap(), 0.0);
        for &t in &[0.1, 0.3, 0.6] {
            assert!((phi(&d, 1e12, t).unwrap() + t).abs() < 1e-5);
            assert!(phi(&d, 0.7, t).unwrap() <= 0.0);
        }
        assert!(phi(&d, 0.7, 1.0).is_err());
        assert!(phi(&d, 0.7, -0.1).is_err());
    }

    #[test]
    fn phi_slope_is_entropy() {
        let d = std_normal();
        let h = 1e-5;
        let fd = -phi(&d, 0.6, h).unwrap() / h;
        assert!((fd - entropy_h(&d, 0.6).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn point_masses_finite_sum() {
        let d = EveDistribution::PointMasses { points: vec![0.0, 1.0] };
        let expect = 0.5 * (1.0 + binary_entropy(normal::cdf(1.0)));
        assert!((entropy_h(&d, 1.0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn mixture_is_average_of_its_components() {
        let pts: Vec<f64> = (0..40).map(|i| ((i * 7919) % 1000) as f64 / 250.0 - 2.0).collect();
        let mix = BitTable::new(&EveDistribution::GaussianMixture { points: pts.clone(), stdev: 0.4 }, 0.8).unwrap();
        let parts: Vec<BitTable> = pts
            .iter()
            .map(|&p| BitTable::new(&EveDistribution::GaussianMixture { points: vec![p], stdev: 0.4 }, 0.8).unwrap())
            .collect();
        let k = pts.len() as f64;
        let h: f64 = parts.iter().map(|b| b.entropy()).sum::<f64>() / k;
        assert!((mix.entropy() - h).abs() < 1e-10);
        for t in [0.3, 0.9] {
            let e: f64 = parts.iter().map(|b| b.exp2_phi(t)).sum::<f64>() / k;
            assert!((mix.exp2_phi(t) - e).abs() < 1e-10);
        }
        let single = BitTable::new(&EveDistribution::GaussianMixture { points: vec![0.0], stdev: 1.3 }, 0.5).unwrap();
        let analytic = BitTable::new(&EveDistribution::AnalyticGaussian { variance: 1.69 }, 0.5).unwrap();
        assert!((single.exp2_phi(0.6) - analytic.exp2_phi(0.6)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_minimization() {
        let zero = |_t: f64| 0.0;
        let c = minimize_exponent(&zero, 10, 5, Criterion::VariationalDistance).unwrap();
        assert_eq!(c.s_star, 0.0);
        assert!((c.log2_bound - 3f64.log2()).abs() < 1e-12);
        assert!(minimize_exponent(&zero, 10, 11, Criterion::VariationalDistance).is_err());
        let nan = |_t: f64| f64::NAN;
        assert!(matches!(
            minimize_exponent(&nan, 10, 5, Criterion::VariationalDistance),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn full_sacrifice_is_below_log3() {
        let table = BitTable::new(&std_normal(), 0.6).unwrap();
        let f = |t: f64| table.exp2_phi(t).log2();
        let c = minimize_exponent(&f, 1_000_000, 1_000_000, Criterion::VariationalDistance).unwrap();
        assert!(c.log2_bound <= 3f64.log2() + 1e-9);
    }

    #[test]
    fn minimizer_finds_quadratic_minimum() {
        let f = |t: f64| 1e-3 * ((t - 0.2).powi(2) - 0.04);
        let c = minimize_exponent(&f, 1000, 1000, Criterion::VariationalDistance).unwrap();
        assert!((c.s_star - 0.2).abs() < 1e-5);
    }

    #[test]
    fn key_rate_point() {
        let r = key_rate_typical(0.2).unwrap();
        assert!((r.mi_ab - 0.372).abs() < 1e-3);
        assert!((r.mi_eb - 0.264).abs() < 1e-3);
        assert!((r.rate - 0.108).abs() < 1e-3);
        assert!(key_rate_typical(2.0 / 3.0).unwrap().rate.abs() < 1e-3);
        // Eve knows the dominant noise term, so she ends up knowing the bit
        let far = key_rate_typical(1e9).unwrap();
        assert!(far.mi_ab < 1e-4 && far.mi_eb > 1.0 - 1e-4);
        assert!(far.rate < -0.99);
        assert!(key_rate_typical(-1.0).is_err());
    }

    fn bundle(c_hat: f64) -> EstimateBundle {
        EstimateBundle {
            e_hat: 0.0,
            v_hat: 3.2,
            c_hat,
            v_ab_hat: 5.2,
            w_hat: 1.0,
            l: 10_000,
            epsilon: 1e-3,
            residuals: vec![],
        }
    }

    #[test]
    fn mutual_info_examples() {
        let zeros = EmpiricalCdf::new(vec![0.0; 10]).unwrap();
        assert!((mutual_info_ab(&bundle(1.3), &zeros).unwrap() - 1.0).abs() < 1e-12);
        assert!(mutual_info_ab(&bundle(0.0), &zeros).is_err());
    }
}
