//! End-to-end key agreement: transmission, estimation, reverse
//! reconciliation, privacy amplification and error verification.
//!
//! Both parties run in-process. Everything Alice uses beyond her own symbols
//! passes through the [`Transcript`]; [`alice_replay`] recomputes her key from
//! exactly those two inputs.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation::{self, EstimateBundle, EveCdf};
use crate::gaussmodel::{sample_round, ChannelParams, NoiseSpec};
use crate::hashing::{auth_failure_prob, toeplitz_hash, verification_tag, BitString, ToeplitzSeed};
use crate::reconciliation::{alice_decode, bob_encode, sign_bit, LinearCode, SoftChannel};
use crate::secbounds::{self, Criterion, EstimatedExponent, SecurityCertificate};

/// How the parity-check matrix is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSource {
    /// An `alist` file.
    Alist { path: PathBuf },
    /// A Gallager-style code generated from a fixed seed.
    Gallager {
        n_code: usize,
        col_weight: usize,
        rate: f64,
        seed: u64,
    },
}

impl CodeSource {
    pub fn load(&self) -> Result<LinearCode> {
        match self {
            CodeSource::Alist { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                LinearCode::from_alist(&text)
            }
            CodeSource::Gallager {
                n_code,
                col_weight,
                rate,
                seed,
            } => LinearCode::gallager(*n_code, *col_weight, *rate, &mut ChaCha8Rng::seed_from_u64(*seed)),
        }
    }
}

/// Bits of Alice's decoded word flipped before privacy amplification, to
/// exercise error verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultInjection {
    pub flip_bits: usize,
}

fn default_true() -> bool {
    true
}

fn default_iters() -> usize {
    crate::reconciliation::DEFAULT_MAX_ITERS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Distillation rounds; a multiple of the code length.
    pub n: usize,
    /// Samples in each of the two estimation rounds.
    pub l: usize,
    pub epsilon: f64,
    /// Required log₂ of the variational-distance bound.
    #[serde(rename = "target")]
    pub security_target_log2: f64,
    pub m2: usize,
    pub code: CodeSource,
    /// Authentication key bits, for cost accounting only.
    #[serde(default)]
    pub k_auth: Option<usize>,
    /// Subtract `k_auth` from the reported net key length.
    #[serde(default)]
    pub subtract_auth: bool,
    #[serde(default = "default_true")]
    pub post_selection: bool,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub fault: Option<FaultInjection>,
    /// Keep Eve's `(E, Y)` per round in the outcome.
    #[serde(default)]
    pub record_eve_view: bool,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be >= 1"));
        }
        if self.l < 2 {
            return Err(Error::param("l", "must be >= 2"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::param("epsilon", "must lie in (0, 1/2)"));
        }
        if !(self.security_target_log2 < 0.0) {
            return Err(Error::param("target", "must be negative"));
        }
        if self.m2 == 0 {
            return Err(Error::param("m2", "must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

/// Everything sent over the public channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    /// Coin that selects the two estimation subsets.
    pub sampling_seed: u64,
    /// `(a, b)` of the first and then the second estimation subset, in
    /// sampled order.
    pub estimation_samples: Vec<(f64, f64)>,
    pub e_hat: f64,
    pub v_hat: f64,
    pub c_hat: f64,
    pub v_ab_hat: f64,
    /// One coset representative per code block.
    pub alpha: Vec<BitString>,
    /// Seeds of the privacy-amplification and verification hashes; the
    /// Toeplitz seed bits are drawn from `ChaCha8Rng::seed_from_u64(seed)`.
    pub pa_seed: u64,
    pub verify_seed: u64,
    pub m1: usize,
    pub m2: usize,
    pub bob_tag: BitString,
}

impl Transcript {
    /// SHA-256 of the estimation samples, for records that omit them.
    pub fn samples_digest(&self) -> String {
        let mut h = Sha256::new();
        for (a, b) in &self.estimation_samples {
            h.update(a.to_le_bytes());
            h.update(b.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Why a run ended without a key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum AbortReason {
    PostSelection,
    InsufficientCorrelation { c_lower: f64 },
    CodeRateAboveCapacity { rate: f64, capacity: f64 },
    Unachievable { target: f64 },
    NoKeyLeft { dim: usize, m1: usize, m2: usize },
    CodeMismatch { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Success,
    VerificationFailed,
    /// Tags agreed while the keys differ. Only a simulation can see this.
    UndetectedMismatch,
    Aborted(AbortReason),
}

/// Bounds for both criteria, valid with confidence about `1 − 2ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificatePair {
    pub modified_mutual_info: SecurityCertificate,
    pub variational_distance: SecurityCertificate,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthAccounting {
    pub k_auth: usize,
    pub failure_prob: f64,
    pub net_key_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub status: Status,
    pub alice_key: Option<BitString>,
    pub bob_key: Option<BitString>,
    pub certificates: Option<CertificatePair>,
    pub transcript: Option<Transcript>,
    pub bundle: Option<EstimateBundle>,
    /// Estimated capacity `I(A; B′)`.
    pub capacity: Option<f64>,
    pub auth: Option<AuthAccounting>,
    pub blocks_converged: usize,
    pub blocks: usize,
    pub eve_view: Option<Vec<(f64, f64)>>,
}

impl ProtocolOutcome {
    fn aborted(reason: AbortReason) -> Self {
        ProtocolOutcome {
            status: Status::Aborted(reason),
            alice_key: None,
            bob_key: None,
            certificates: None,
            transcript: None,
            bundle: None,
            capacity: None,
            auth: None,
            blocks_converged: 0,
            blocks: 0,
            eve_view: None,
        }
    }

    pub fn key_len(&self) -> usize {
        match (&self.status, &self.bob_key) {
            (Status::Success, Some(k)) => k.len(),
            _ => 0,
        }
    }
}

/// Index sets of one run: two estimation subsets and the distillation
/// rounds, which together partition `0..n+2l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub est1: Vec<usize>,
    pub est2: Vec<usize>,
    pub distill: Vec<usize>,
}

/// Uniform sampling without replacement from the public coin; distillation
/// rounds keep their time order.
pub fn partition_rounds(total: usize, l: usize, sampling_seed: u64) -> Result<Partition> {
    if 2 * l > total {
        return Err(Error::param("l", format!("2l = {} exceeds {total} rounds", 2 * l)));
    }
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(sampling_seed));
    let mut distill = idx[2 * l..].to_vec();
    distill.sort_unstable();
    Ok(Partition {
        est1: idx[..l].to_vec(),
        est2: idx[l..2 * l].to_vec(),
        distill,
    })
}

/// Advantage check on shrunk estimates: with `v̂_Y = max(0, v̂_B − ĉ² − b_B²)`,
/// accept iff `c²/v̂_Y > a_E²/b_E² + 1` for the lower confidence limit `c`
/// of `|ĉ|`, or `ĉ ≠ 0` when `v̂_Y = 0`.
pub fn post_selection_gate(bundle: &EstimateBundle, params: &ChannelParams) -> bool {
    let c = bundle.c_hat;
    let v_y = (bundle.v_hat - c * c - params.b_b * params.b_b).max(0.0);
    if v_y == 0.0 {
        return c != 0.0;
    }
    let c_lower = c.abs() - bundle.c_halfwidth();
    if c_lower <= 0.0 {
        return false;
    }
    c_lower * c_lower / v_y > (params.a_e / params.b_e).powi(2) + 1.0
}

/// Estimated exponent `φ̂` for published estimates.
pub fn estimated_exponent(bundle: &EstimateBundle, params: &ChannelParams) -> Result<(EveCdf, EstimatedExponent)> {
    let eve = estimation::estimate_eve_cdf(bundle, params)?;
    let e = secbounds::phi_hat(bundle, &eve, params, bundle.epsilon)?;
    Ok((eve, e))
}

/// Certificates under both criteria for the sacrifice length in use.
pub fn certify(exponent: &EstimatedExponent, n: usize, m1: usize, epsilon: f64) -> Result<CertificatePair> {
    let f = |t: f64| exponent.at(t);
    let mi = secbounds::minimize_exponent(&f, n, m1, Criterion::ModifiedMutualInfo)?.with_estimate(exponent);
    let d = secbounds::minimize_exponent(&f, n, m1, Criterion::VariationalDistance)?.with_estimate(exponent);
    Ok(CertificatePair {
        modified_mutual_info: mi,
        variational_distance: d,
        confidence: 1.0 - 2.0 * epsilon,
    })
}

fn seeded_toeplitz(seed: u64, n1: usize, n2: usize) -> Result<ToeplitzSeed> {
    ToeplitzSeed::random(&mut ChaCha8Rng::seed_from_u64(seed), n1, n2)
}

fn concat(blocks: &[BitString]) -> BitString {
    BitString::from_bits(blocks.iter().flat_map(|b| b.iter()))
}

/// Alice's result from her symbols and the transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct AliceView {
    /// Key after privacy amplification, before the tag bits are discarded.
    pub amplified: BitString,
    pub tag_matches: bool,
    pub key: BitString,
    pub blocks_converged: usize,
}

/// Recomputes Alice's key from all her transmitted symbols (`n + 2l` of
/// them, in time order) and the public transcript alone.
pub fn alice_replay(
    alice_symbols: &[f64],
    transcript: &Transcript,
    cfg: &ProtocolConfig,
    code: &LinearCode,
) -> Result<AliceView> {
    alice_side(alice_symbols, transcript, cfg, code, None)
}

fn alice_side(
    alice_symbols: &[f64],
    t: &Transcript,
    cfg: &ProtocolConfig,
    code: &LinearCode,
    fault: Option<&mut dyn FnMut(&mut BitString)>,
) -> Result<AliceView> {
    let total = cfg.n + 2 * cfg.l;
    if alice_symbols.len() != total {
        return Err(Error::LengthMismatch {
            expected: total,
            got: alice_symbols.len(),
        });
    }
    if t.estimation_samples.len() != 2 * cfg.l {
        return Err(Error::LengthMismatch {
            expected: 2 * cfg.l,
            got: t.estimation_samples.len(),
        });
    }
    let part = partition_rounds(total, cfg.l, t.sampling_seed)?;
    let (s1, s2) = t.estimation_samples.split_at(cfg.l);
    let bundle = estimation::residuals(s2, estimation::estimate_moments(s1, cfg.epsilon)?)?;
    let chan = SoftChannel::new(&bundle)?;
    let a: Vec<f64> = part.distill.iter().map(|&i| alice_symbols[i]).collect();
    let mut blocks = Vec::with_capacity(t.alpha.len());
    let mut converged = 0;
    for (k, alpha) in t.alpha.iter().enumerate() {
        let d = alice_decode(code, &a[k * code.n()..(k + 1) * code.n()], alpha, &chan)?;
        converged += d.converged as usize;
        blocks.push(d.codeword);
    }
    let mut word = concat(&blocks);
    if let Some(f) = fault {
        f(&mut word);
    }
    let dim = t.alpha.len() * code.dim();
    let amplified = toeplitz_hash(&seeded_toeplitz(t.pa_seed, cfg.n, dim - t.m1)?, &word)?;
    let tag = verification_tag(&amplified, &seeded_toeplitz(t.verify_seed, dim - t.m1, t.m2)?, t.m2)?;
    let key = amplified.slice(0, amplified.len() - t.m2);
    Ok(AliceView {
        tag_matches: tag == t.bob_tag,
        amplified,
        key,
        blocks_converged: converged,
    })
}

/// Runs both parties over a simulated channel.
pub fn run_protocol<R: Rng + ?Sized>(
    params: &ChannelParams,
    noise: &NoiseSpec,
    cfg: &ProtocolConfig,
    code: &LinearCode,
    rng: &mut R,
) -> Result<ProtocolOutcome> {
    params.validate()?;
    noise.validate()?;
    cfg.validate()?;
    if cfg.n % code.n() != 0 {
        return Ok(ProtocolOutcome::aborted(AbortReason::CodeMismatch {
            detail: format!("n = {} is not a multiple of the code length {}", cfg.n, code.n()),
        }));
    }
    let blocks = cfg.n / code.n();
    let total = cfg.n + 2 * cfg.l;

    // transmission
    let rounds: Vec<_> = (0..total).map(|_| sample_round(params, noise, rng)).collect();
    let eve_view = cfg.record_eve_view.then(|| rounds.iter().map(|r| (r.e, r.y)).collect());

    // estimation
    let sampling_seed: u64 = rng.random();
    let part = partition_rounds(total, cfg.l, sampling_seed)?;
    let pick = |ix: &[usize]| -> Vec<(f64, f64)> { ix.iter().map(|&i| (rounds[i].a, rounds[i].b)).collect() };
    let (s1, s2) = (pick(&part.est1), pick(&part.est2));
    let bundle = estimation::residuals(&s2, estimation::estimate_moments(&s1, cfg.epsilon)?)?;
    let mut outcome = ProtocolOutcome::aborted(AbortReason::PostSelection);
    outcome.bundle = Some(bundle.clone());
    outcome.eve_view = eve_view;
    outcome.blocks = blocks;
    let abort = |mut o: ProtocolOutcome, reason| {
        o.status = Status::Aborted(reason);
        Ok(o)
    };

    if cfg.post_selection && !post_selection_gate(&bundle, params) {
        return abort(outcome, AbortReason::PostSelection);
    }
    let exponent = match estimated_exponent(&bundle, params) {
        Ok((_, e)) => e,
        Err(Error::InsufficientCorrelation(c)) => {
            return abort(outcome, AbortReason::InsufficientCorrelation { c_lower: c });
        }
        Err(e) => return Err(e),
    };
    let capacity = secbounds::mutual_info_ab(&bundle, &bundle.residual_cdf()?)?;
    outcome.capacity = Some(capacity);
    if code.rate() > capacity {
        return abort(
            outcome,
            AbortReason::CodeRateAboveCapacity {
                rate: code.rate(),
                capacity,
            },
        );
    }
    let f = |t: f64| exponent.at(t);
    let m1 = match secbounds::sacrifice_length(&f, cfg.n, cfg.security_target_log2) {
        Ok(m) => m,
        Err(Error::Unachievable { target, .. }) => return abort(outcome, AbortReason::Unachievable { target }),
        Err(e) => return Err(e),
    };
    let dim = blocks * code.dim();
    if m1 + cfg.m2 >= dim {
        return abort(outcome, AbortReason::NoKeyLeft { dim, m1, m2: cfg.m2 });
    }
    outcome.certificates = Some(certify(&exponent, cfg.n, m1, cfg.epsilon)?);

    // Bob: discretize, publish coset representatives, amplify, tag
    let bob_bits: Vec<BitString> = (0..blocks)
        .map(|k| {
            BitString::from_bits(
                part.distill[k * code.n()..(k + 1) * code.n()]
                    .iter()
                    .map(|&i| sign_bit(rounds[i].b, bundle.e_hat)),
            )
        })
        .collect();
    let mut alpha = Vec::with_capacity(blocks);
    let mut codewords = Vec::with_capacity(blocks);
    for bits in &bob_bits {
        let (a, cw) = bob_encode(code, bits)?;
        alpha.push(a);
        codewords.push(cw);
    }
    let pa_seed: u64 = rng.random();
    let verify_seed: u64 = rng.random();
    let bob_amplified = toeplitz_hash(&seeded_toeplitz(pa_seed, cfg.n, dim - m1)?, &concat(&codewords))?;
    let bob_tag = verification_tag(&bob_amplified, &seeded_toeplitz(verify_seed, dim - m1, cfg.m2)?, cfg.m2)?;
    let mut estimation_samples = s1;
    estimation_samples.extend(s2);
    let transcript = Transcript {
        sampling_seed,
        estimation_samples,
        e_hat: bundle.e_hat,
        v_hat: bundle.v_hat,
        c_hat: bundle.c_hat,
        v_ab_hat: bundle.v_ab_hat,
        alpha,
        pa_seed,
        verify_seed,
        m1,
        m2: cfg.m2,
        bob_tag,
    };

    // Alice
    let symbols: Vec<f64> = rounds.iter().map(|r| r.a).collect();
    let alice = match cfg.fault {
        Some(FaultInjection { flip_bits }) => {
            let positions: Vec<usize> = (0..flip_bits).map(|_| rng.random_range(0..cfg.n)).collect();
            let mut flip = |w: &mut BitString| {
                for &p in &positions {
                    w.flip(p);
                }
            };
            alice_side(&symbols, &transcript, cfg, code, Some(&mut flip))?
        }
        None => alice_side(&symbols, &transcript, cfg, code, None)?,
    };
    let bob_key = bob_amplified.slice(0, bob_amplified.len() - cfg.m2);
    outcome.blocks_converged = alice.blocks_converged;
    outcome.status = if !alice.tag_matches {
        Status::VerificationFailed
    } else if alice.key != bob_key {
        Status::UndetectedMismatch
    } else {
        Status::Success
    };
    if let Some(k_auth) = cfg.k_auth {
        let len = bob_key.len();
        outcome.auth = Some(AuthAccounting {
            k_auth,
            failure_prob: auth_failure_prob(cfg.n + cfg.m2, k_auth),
            net_key_len: if cfg.subtract_auth { len.saturating_sub(k_auth) } else { len },
        });
    }
    outcome.alice_key = Some(alice.key);
    outcome.bob_key = Some(bob_key);
    outcome.transcript = Some(transcript);
    Ok(outcome)
}

/// [`run_protocol`] driven by a ChaCha8 stream seeded with `seed`.
pub fn run_seeded(
    params: &ChannelParams,
    noise: &NoiseSpec,
    cfg: &ProtocolConfig,
    code: &LinearCode,
    seed: u64,
) -> Result<ProtocolOutcome> {
    run_protocol(params, noise, cfg, code, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Draws `count` channel uses and returns Alice's and Bob's values.
pub fn sample_pairs(params: &ChannelParams, noise: &NoiseSpec, count: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let r = sample_round(params, noise, &mut rng);
            (r.a, r.b)
        })
        .collect())
}

fn sha256_hex(b: &BitString) -> String {
    let mut h = Sha256::new();
    h.update(b.len().to_le_bytes());
    for w in b.words() {
        h.update(w.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Public part of a transcript for run records: the estimation samples
/// are replaced by their digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub sampling_seed: u64,
    pub estimation_samples_sha256: String,
    pub e_hat: f64,
    pub v_hat: f64,
    pub c_hat: f64,
    pub v_ab_hat: f64,
    pub alpha: Vec<BitString>,
    pub pa_seed: u64,
    pub verify_seed: u64,
    pub m1: usize,
    pub m2: usize,
    pub bob_tag: BitString,
}

impl From<&Transcript> for TranscriptSummary {
    fn from(t: &Transcript) -> Self {
        TranscriptSummary {
            sampling_seed: t.sampling_seed,
            estimation_samples_sha256: t.samples_digest(),
            e_hat: t.e_hat,
            v_hat: t.v_hat,
            c_hat: t.c_hat,
            v_ab_hat: t.v_ab_hat,
            alpha: t.alpha.clone(),
            pa_seed: t.pa_seed,
            verify_seed: t.verify_seed,
            m1: t.m1,
            m2: t.m2,
            bob_tag: t.bob_tag.clone(),
        }
    }
}

/// One run as a JSON document. Raw keys are included only on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config: ProtocolConfig,
    pub status: Status,
    pub key_len: usize,
    pub alice_key_sha256: Option<String>,
    pub bob_key_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alice_key: Option<BitString>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bob_key: Option<BitString>,
    pub capacity: Option<f64>,
    pub certificates: Option<CertificatePair>,
    pub auth: Option<AuthAccounting>,
    pub blocks: usize,
    pub blocks_converged: usize,
    pub transcript: Option<TranscriptSummary>,
}

impl RunRecord {
    pub fn new(seed: u64, cfg: &ProtocolConfig, o: &ProtocolOutcome, emit_keys: bool) -> Self {
        RunRecord {
            seed,
            config: cfg.clone(),
            status: o.status.clone(),
            key_len: o.key_len(),
            alice_key_sha256: o.alice_key.as_ref().map(sha256_hex),
            bob_key_sha256: o.bob_key.as_ref().map(sha256_hex),
            alice_key: o.alice_key.clone().filter(|_| emit_keys),
            bob_key: o.bob_key.clone().filter(|_| emit_keys),
            capacity: o.capacity,
            certificates: o.certificates.clone(),
            auth: o.auth.clone(),
            blocks: o.blocks,
            blocks_converged: o.blocks_converged,
            transcript: o.transcript.as_ref().map(TranscriptSummary::from),
        }
    }
}
