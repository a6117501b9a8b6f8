//! Channel model for the noise-injecting attack.
//!
//! Alice sends a standard Gaussian symbol `A`. Bob observes
//!
//! ```text
//! B = a_B·A + Y + b_B·X₁ + e_B
//! ```
//!
//! and Eve observes `E = a_E·A + b_E·X₂` together with the injected noise `Y`,
//! which she controls. `X₁`, `X₂` are independent detector noises.
//!
//! Everything Eve learns about `B` from `(E, Y)` is carried by the single
//! statistic `E′ = a_B·a_E/(a_E²+b_E²)·E + Y`; conditioned on it, `B` is
//! Gaussian with mean `E′ + e_B` and variance `v_{B|E′}`.
//!
//! A model where Eve only sees an interfered copy `a_E·A + Y₂ + b_E·X₂` is
//! dominated by this one (Eve can always degrade `(E, Y)` to it), so no
//! separate interference channel is provided.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel constants. `a_e` is the upper bound on Eve's attenuation that Alice
/// and Bob assume; a simulation may use any true value below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    #[serde(rename = "a_B")]
    pub a_b: f64,
    #[serde(rename = "b_B")]
    pub b_b: f64,
    #[serde(rename = "e_B")]
    pub e_b: f64,
    #[serde(rename = "a_E")]
    pub a_e: f64,
    #[serde(rename = "b_E")]
    pub b_e: f64,
}

impl ChannelParams {
    pub fn new(a_b: f64, b_b: f64, e_b: f64, a_e: f64, b_e: f64) -> Result<Self> {
        let p = ChannelParams {
            a_b,
            b_b,
            e_b,
            a_e,
            b_e,
        };
        p.validate()?;
        Ok(p)
    }

    /// The symmetric configuration `a_B = a_E = √2·b`, `b_B = b_E = b`, `e_B = 0`.
    pub fn typical(b: f64) -> Self {
        ChannelParams {
            a_b: 2f64.sqrt() * b,
            b_b: b,
            e_b: 0.0,
            a_e: 2f64.sqrt() * b,
            b_e: b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a_B", self.a_b),
            ("b_B", self.b_b),
            ("e_B", self.e_b),
            ("a_E", self.a_e),
            ("b_E", self.b_e),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.b_b <= 0.0 {
            return Err(Error::param("b_B", "must be > 0"));
        }
        if self.a_e <= 0.0 {
            return Err(Error::param("a_E", "must be > 0"));
        }
        if self.b_e <= 0.0 {
            return Err(Error::param("b_E", "must be > 0"));
        }
        Ok(())
    }

    /// Fraction `a_E²/(a_E²+b_E²)` of Alice's signal visible to Eve.
    pub fn eve_signal_fraction(&self) -> f64 {
        let a2 = self.a_e * self.a_e;
        a2 / (a2 + self.b_e * self.b_e)
    }

    /// `v_{B|E′} = a_B²·b_E²/(a_E²+b_E²) + b_B²`.
    pub fn v_cond(&self) -> f64 {
        self.a_b * self.a_b * (1.0 - self.eve_signal_fraction()) + self.b_b * self.b_b
    }
}

/// Distribution of the injected noise `Y`. All variants have mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { v_y: f64 },
    Mixture { components: Vec<MixtureComponent> },
    Empirical { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub stdev: f64,
}

impl NoiseSpec {
    pub fn gaussian(v_y: f64) -> Result<Self> {
        let n = NoiseSpec::Gaussian { v_y };
        n.validate()?;
        Ok(n)
    }

    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        let n = NoiseSpec::Mixture { components };
        n.validate()?;
        Ok(n)
    }

    /// Builds an empirical noise distribution, shifting the values so their
    /// mean is exactly zero.
    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        let n = NoiseSpec::Empirical { values }.centered();
        n.validate()?;
        Ok(n)
    }

    /// Returns a copy with empirical values re-centred; other variants unchanged.
    pub fn centered(self) -> Self {
        match self {
            NoiseSpec::Empirical { values } if !values.is_empty() => {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                NoiseSpec::Empirical {
                    values: values.into_iter().map(|v| v - mean).collect(),
                }
            }
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gaussian { v_y } => {
                if !(v_y.is_finite() && *v_y >= 0.0) {
                    return Err(Error::param("v_Y", format!("must be finite and >= 0, got {v_y}")));
                }
            }
            NoiseSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::param("components", "mixture needs at least one component"));
                }
                let mut wsum = 0.0;
                let mut mean = 0.0;
                for c in components {
                    if !(c.weight >= 0.0 && c.weight.is_finite()) {
                        return Err(Error::param("weight", "must be finite and >= 0"));
                    }
                    if !(c.stdev >= 0.0 && c.stdev.is_finite() && c.mean.is_finite()) {
                        return Err(Error::param("stdev", "components need finite mean and stdev >= 0"));
                    }
                    wsum += c.weight;
                    mean += c.weight * c.mean;
                }
                if (wsum - 1.0).abs() > 1e-9 {
                    return Err(Error::param("weight", format!("weights sum to {wsum}, not 1")));
                }
                if mean.abs() > 1e-9 {
                    return Err(Error::param("mean", format!("mixture mean is {mean}, not 0")));
                }
            }
            NoiseSpec::Empirical { values } => {
                if values.is_empty() {
                    return Err(Error::param("values", "empirical noise needs at least one value"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("values", "all values must be finite"));
                }
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if mean.abs() > 1e-9 * scale {
                    return Err(Error::param("values", "empirical noise is not centred"));
                }
            }
        }
        Ok(())
    }

    /// Exact second moment `v_Y` of the specified distribution.
    pub fn variance(&self) -> f64 {
        match self {
            NoiseSpec::Gaussian { v_y } => *v_y,
            NoiseSpec::Mixture { components } => components
                .iter()
                .map(|c| c.weight * (c.stdev * c.stdev + c.mean * c.mean))
                .sum(),
            NoiseSpec::Empirical { values } => {
                values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::Gaussian { v_y } => {
                let z: f64 = StandardNormal.sample(rng);
                v_y.sqrt() * z
            }
            NoiseSpec::Mixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = components[components.len() - 1];
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        chosen = *c;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                chosen.mean + chosen.stdev * z
            }
            NoiseSpec::Empirical { values } => values[rng.random_range(0..values.len())],
        }
    }
}

/// One channel use: Alice's symbol, Bob's and Eve's observations and the
/// injected noise value (known to Eve).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSample {
    pub a: f64,
    pub b: f64,
    pub e: f64,
    pub y: f64,
}

impl RoundSample {
    /// Evaluates the channel equations for given draws of `A`, `Y`, `X₁`, `X₂`.
    pub fn from_draws(params: &ChannelParams, a: f64, y: f64, x1: f64, x2: f64) -> Self {
        RoundSample {
            a,
            b: params.a_b * a + y + params.b_b * x1 + params.e_b,
            e: params.a_e * a + params.b_e * x2,
            y,
        }
    }
}

/// Simulates one channel use. Draw order is `A`, `X₁`, `X₂`, then `Y`.
pub fn sample_round<R: Rng + ?Sized>(
    params: &ChannelParams,
    noise: &NoiseSpec,
    rng: &mut R,
) -> RoundSample {
    let a: f64 = StandardNormal.sample(rng);
    let x1: f64 = StandardNormal.sample(rng);
    let x2: f64 = StandardNormal.sample(rng);
    let y = noise.sample(rng);
    RoundSample::from_draws(params, a, y, x1, x2)
}

/// Eve's sufficient statistic for `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveReduced {
    pub e_prime: f64,
    pub v_cond: f64,
    pub mean_offset: f64,
}

pub fn reduce_eprime(params: &ChannelParams, e: f64, y: f64) -> EveReduced {
    let gain = params.a_b * params.a_e / (params.a_e * params.a_e + params.b_e * params.b_e);
    let e_prime = gain * e + y;
    EveReduced {
        e_prime,
        v_cond: params.v_cond(),
        mean_offset: e_prime + params.e_b,
    }
}

/// Squared correlation coefficients of `B` with `A`, `E′` and `E″`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlations {
    pub rho_a_sq: f64,
    pub rho_eprime_sq: f64,
    pub rho_edprime_sq: f64,
}

pub fn rho_squared(params: &ChannelParams, v_y: f64) -> Result<Correlations> {
    if !(v_y >= 0.0 && v_y.is_finite()) {
        return Err(Error::param("v_Y", format!("must be finite and >= 0, got {v_y}")));
    }
    let ab2 = params.a_b * params.a_b;
    let bb2 = params.b_b * params.b_b;
    let v_b = ab2 + v_y + bb2;
    if v_b <= 0.0 {
        return Err(Error::Domain("variance of B is zero".into()));
    }
    Ok(Correlations {
        rho_a_sq: ab2 / v_b,
        rho_eprime_sq: (ab2 * params.eve_signal_fraction() + v_y) / v_b,
        rho_edprime_sq: (v_y + bb2) / v_b,
    })
}

/// Whether Bob's observation is more correlated with Alice than with Eve:
/// `a_B²/v_Y > a_E²/b_E² + 1`.
pub fn advantage_condition(params: &ChannelParams, v_y: f64) -> bool {
    let lhs = params.a_b * params.a_b;
    let rhs = params.a_e * params.a_e / (params.b_e * params.b_e) + 1.0;
    if v_y == 0.0 {
        return lhs > 0.0;
    }
    lhs / v_y > rhs
}

/// Collapses `k` antennas `E_j = a_j·A + b_j·X_j` into one equivalent antenna.
///
/// `Σ E_j/a_j = k·A + noise` with noise variance `Σ (b_j/a_j)²`. The result is
/// rescaled so the attenuation equals the smallest `a_j`; only the ratio
/// `a/b` matters to the security analysis. For `k` identical antennas this
/// yields `(a_E, b_E/√k)`.
pub fn reduce_multi_antenna(antennas: &[(f64, f64)]) -> Result<(f64, f64)> {
    if antennas.is_empty() {
        return Err(Error::param("antennas", "need at least one antenna"));
    }
    let mut noise_var = 0.0;
    let mut a_min = f64::INFINITY;
    for &(a, b) in antennas {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::param("antennas", format!("need a, b > 0, got ({a}, {b})")));
        }
        noise_var += (b / a) * (b / a);
        a_min = a_min.min(a);
    }
    let k = antennas.len() as f64;
    Ok((a_min, a_min * noise_var.sqrt() / k))
}

/// Complex-valued channel with per-term phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexChannel {
    pub a_b: f64,
    pub b_b: f64,
    pub e_b: f64,
    pub a_e: f64,
    pub b_e: f64,
    pub theta_b: f64,
    pub theta_e: f64,
    pub theta_y: f64,
    pub theta_1: f64,
    pub theta_2: f64,
    pub theta_3: f64,
}

/// Real and imaginary parts after de-rotating by Alice's phase on each link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexReduction {
    pub real: ChannelParams,
    pub imag: ChannelParams,
}

/// Rotating `B` by `e^{−iθ_B}` and `E` by `e^{−iθ_E}` turns the complex model
/// into two independent copies of the real model. Circularly symmetric noise
/// is invariant under the rotation, so `θ_Y`, `θ₁`, `θ₂` disappear; only the
/// offset keeps a phase, split as `e_B·cos(θ₃−θ_B)` and `e_B·sin(θ₃−θ_B)`.
pub fn reduce_complex(ch: &ComplexChannel) -> Result<ComplexReduction> {
    for (name, v) in [("a_B", ch.a_b), ("b_B", ch.b_b), ("a_E", ch.a_e), ("b_E", ch.b_e)] {
        if !(v > 0.0) {
            return Err(Error::param(name, "magnitude must be > 0"));
        }
    }
    let phase = ch.theta_3 - ch.theta_b;
    let real = ChannelParams::new(ch.a_b, ch.b_b, ch.e_b * phase.cos(), ch.a_e, ch.b_e)?;
    let imag = ChannelParams::new(ch.a_b, ch.b_b, ch.e_b * phase.sin(), ch.a_e, ch.b_e)?;
    Ok(ComplexReduction { real, imag })
}
