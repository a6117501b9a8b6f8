//! Reverse reconciliation with binary LDPC codes.
//!
//! Bob publishes the coset representative `α` of his sign bits `B′`, so that
//! `B′ ⊕ α` is a codeword; Alice decodes that codeword from her real-valued
//! inputs with sum-product belief propagation.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimation::{Cdf, EmpiricalCdf, EstimateBundle};
use crate::hashing::BitString;
use crate::normal;

/// Channel LLRs are clamped to this magnitude.
pub const LLR_CLAMP: f64 = 40.0;
pub const DEFAULT_MAX_ITERS: usize = 60;

/// A binary linear code given by a sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct LinearCode {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    rank: usize,
    // Row-reduction data for α: `pivots[k]` is the pivot column of reduced
    // row k, and `transform[k]` the combination of original checks forming it.
    pivots: Vec<usize>,
    transform: Vec<Vec<u64>>,
}

impl LinearCode {
    /// Builds the code from the column indices of each parity check.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "block length must be positive"));
        }
        let mut cols = vec![Vec::new(); n];
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Alist(format!("check {r} lists a column twice")));
            }
            for &c in row.iter() {
                if c >= n {
                    return Err(Error::Alist(format!("column {c} out of range in check {r}")));
                }
                cols[c].push(r);
            }
        }
        let (rank, pivots, transform) = eliminate(n, &rows);
        Ok(LinearCode {
            n,
            rows,
            cols,
            rank,
            pivots,
            transform,
        })
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of parity checks.
    pub fn checks(&self) -> usize {
        self.rows.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension `n − rank`.
    pub fn dim(&self) -> usize {
        self.n - self.rank
    }

    pub fn rate(&self) -> f64 {
        self.dim() as f64 / self.n as f64
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Gallager-style construction with column weight `col_weight`: the
    /// checks form `col_weight` bands, each a partition of a random column
    /// permutation into checks of near-equal degree. The design rate is
    /// `1 − col_weight·(checks per band)/n`.
    pub fn gallager<R: Rng + ?Sized>(n: usize, col_weight: usize, rate: f64, rng: &mut R) -> Result<Self> {
        if col_weight == 0 || n == 0 {
            return Err(Error::param("col_weight", "block length and column weight must be positive"));
        }
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::param("rate", format!("must lie in [0, 1), got {rate}")));
        }
        let per_band = ((n as f64 * (1.0 - rate)) / col_weight as f64).round() as usize;
        if per_band == 0 || per_band > n {
            return Err(Error::param("rate", "no valid check count for this rate"));
        }
        let mut rows = Vec::with_capacity(per_band * col_weight);
        let mut perm: Vec<usize> = (0..n).collect();
        for band in 0..col_weight {
            if band > 0 {
                perm.shuffle(rng);
            }
            let mut start = 0;
            for r in 0..per_band {
                let end = (r + 1) * n / per_band;
                rows.push(perm[start..end].to_vec());
                start = end;
            }
        }
        LinearCode::from_rows(n, rows)
    }

    /// Parses the `alist` sparse-matrix format. Zero padding of the index
    /// lists is accepted but not required.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut tok = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Alist(format!("expected an integer, got `{t}`")))
        });
        let mut next = || -> Result<usize> {
            tok.next().unwrap_or_else(|| Err(Error::Alist("unexpected end of data".into())))
        };
        let (n, m) = (next()?, next()?);
        let (_max_col, _max_row) = (next()?, next()?);
        let col_deg: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_>>()?;
        let read_list = |deg: usize, next: &mut dyn FnMut() -> Result<usize>| -> Result<Vec<usize>> {
            let mut out = Vec::with_capacity(deg);
            while out.len() < deg {
                let v = next()?;
                if v != 0 {
                    out.push(v - 1);
                }
            }
            Ok(out)
        };
        let mut col_lists = Vec::with_capacity(n);
        for &d in &col_deg {
            col_lists.push(read_list(d, &mut next)?);
        }
        let mut rows = Vec::with_capacity(m);
        for &d in &row_deg {
            rows.push(read_list(d, &mut next)?);
        }
        // column lists must describe the same matrix
        let mut from_cols = vec![Vec::new(); m];
        for (c, list) in col_lists.iter().enumerate() {
            for &r in list {
                if r >= m {
                    return Err(Error::Alist(format!("row {} out of range in column {c}", r + 1)));
                }
                from_cols[r].push(c);
            }
        }
        for (r, row) in rows.iter().enumerate() {
            let mut a = row.clone();
            a.sort_unstable();
            if a != from_cols[r] {
                return Err(Error::Alist(format!("row {} disagrees with the column lists", r + 1)));
            }
        }
        LinearCode::from_rows(n, rows)
    }

    /// Writes the code in `alist` format with zero-padded index lists.
    pub fn to_alist(&self) -> String {
        let m = self.rows.len();
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} {}", self.n, m);
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for list in &self.cols {
            let mut it = list.iter().map(|r| r + 1).chain(std::iter::repeat(0)).take(max_col);
            let _ = writeln!(s, "{}", join(&mut it));
        }
        for list in &self.rows {
            let mut it = list.iter().map(|c| c + 1).chain(std::iter::repeat(0)).take(max_row);
            let _ = writeln!(s, "{}", join(&mut it));
        }
        s
    }

    pub fn is_codeword(&self, x: &BitString) -> bool {
        x.len() == self.n && self.rows.iter().all(|row| !row_parity(row, x))
    }
}

fn row_parity(row: &[usize], x: &BitString) -> bool {
    row.iter().fold(false, |acc, &c| acc ^ x.get(c))
}

/// Gauss–Jordan elimination of `H` with pivots chosen as the first
/// available row for each column in increasing column order.
fn eliminate(n: usize, rows: &[Vec<usize>]) -> (usize, Vec<usize>, Vec<Vec<u64>>) {
    let m = rows.len();
    let nw = n.div_ceil(64);
    let mw = m.div_ceil(64);
    let mut h: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| {
            let mut w = vec![0u64; nw];
            for &c in row {
                w[c / 64] ^= 1 << (c % 64);
            }
            w
        })
        .collect();
    let mut e: Vec<Vec<u64>> = (0..m)
        .map(|r| {
            let mut w = vec![0u64; mw];
            w[r / 64] = 1 << (r % 64);
            w
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        if rank == m {
            break;
        }
        let (cw, cb) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..m).find(|&r| h[r][cw] & cb != 0) else {
            continue;
        };
        h.swap(rank, p);
        e.swap(rank, p);
        let (hp, ep) = (h[rank].clone(), e[rank].clone());
        for r in 0..m {
            if r != rank && h[r][cw] & cb != 0 {
                for (a, b) in h[r][cw..].iter_mut().zip(&hp[cw..]) {
                    *a ^= b;
                }
                for (a, b) in e[r].iter_mut().zip(&ep) {
                    *a ^= b;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    e.truncate(rank);
    (rank, pivots, e)
}

/// `H·x`.
pub fn syndrome(code: &LinearCode, x: &BitString) -> Result<BitString> {
    if x.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: x.len(),
        });
    }
    Ok(BitString::from_bits(code.rows.iter().map(|row| row_parity(row, x))))
}

/// Deterministic `α(s)` with `H·α(s) = s`, supported on the pivot columns.
pub fn coset_representative(code: &LinearCode, syn: &BitString) -> Result<BitString> {
    if syn.len() != code.checks() {
        return Err(Error::LengthMismatch {
            expected: code.checks(),
            got: syn.len(),
        });
    }
    let sw = syn.words();
    let mut alpha = BitString::zeros(code.n);
    for (k, t) in code.transform.iter().enumerate() {
        let bit = t.iter().zip(sw).fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1 == 1;
        if bit {
            alpha.set(code.pivots[k], true);
        }
    }
    Ok(alpha)
}

/// Bob's sign bit: `0` when `b − ê ≥ 0`.
pub fn sign_bit(b: f64, e_hat: f64) -> bool {
    b - e_hat < 0.0
}

/// Likelihoods of Alice's input given Bob's bit, from the residual
/// distribution: `P(B′ = 0 | A = a) = 1 − F̂((−ĉa)⁻)`.
#[derive(Debug, Clone)]
pub struct SoftChannel {
    c_hat: f64,
    residuals: EmpiricalCdf,
    /// `ln(P(B′=1)/P(B′=0))`, turning posterior odds into likelihood odds.
    prior_shift: f64,
}

impl SoftChannel {
    pub fn new(bundle: &EstimateBundle) -> Result<Self> {
        let c = bundle.c_hat;
        if !(c != 0.0 && c.is_finite()) {
            return Err(Error::InsufficientCorrelation(c));
        }
        let residuals = bundle.residual_cdf()?;
        let n0 = residuals.points().iter().map(|r| normal::cdf(r / c.abs())).sum::<f64>()
            / residuals.len() as f64;
        let n0 = n0.clamp(1e-300, 1.0 - 1e-16);
        Ok(SoftChannel {
            c_hat: c,
            residuals,
            prior_shift: ((1.0 - n0) / n0).ln(),
        })
    }

    pub fn c_hat(&self) -> f64 {
        self.c_hat
    }

    /// `P(B′ = 0 | A = a)`.
    pub fn posterior_zero(&self, a: f64) -> f64 {
        1.0 - self.residuals.left_limit(-self.c_hat * a)
    }
}

/// `ln(W(a′|0)/W(a′|1))` with `a′ = (−1)^flip·a`, clamped to `±LLR_CLAMP`.
pub fn channel_llr(chan: &SoftChannel, a: f64, flip: bool) -> f64 {
    let a = if flip { -a } else { a };
    let p0 = chan.posterior_zero(a);
    let llr = if p0 <= 0.0 {
        -LLR_CLAMP
    } else if p0 >= 1.0 {
        LLR_CLAMP
    } else {
        (p0 / (1.0 - p0)).ln() + chan.prior_shift
    };
    llr.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// Result of belief-propagation decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub codeword: BitString,
    pub converged: bool,
    pub iterations: usize,
}

/// Sum-product decoding with flooding schedule. Positive LLR favours `0`.
pub fn bp_decode(code: &LinearCode, llrs: &[f64], max_iters: usize) -> Result<Decoded> {
    if llrs.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: llrs.len(),
        });
    }
    let hard = |tot: &[f64]| BitString::from_bits(tot.iter().map(|&v| v < 0.0));
    let mut word = hard(llrs);
    if code.is_codeword(&word) {
        return Ok(Decoded {
            codeword: word,
            converged: true,
            iterations: 0,
        });
    }
    // edges grouped by check; var_edges lists each variable's edge ids
    let mut edge_var = Vec::new();
    let mut check_start = vec![0usize];
    for row in &code.rows {
        edge_var.extend_from_slice(row);
        check_start.push(edge_var.len());
    }
    let mut var_edges = vec![Vec::new(); code.n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }
    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| llrs[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut total = llrs.to_vec();
    let mut tanhs = Vec::new();
    let mut prefix = Vec::new();
    for iter in 1..=max_iters {
        for c in 0..code.rows.len() {
            let (s, e) = (check_start[c], check_start[c + 1]);
            tanhs.clear();
            tanhs.extend(v2c[s..e].iter().map(|m| (0.5 * m).tanh()));
            prefix.clear();
            let mut acc = 1.0;
            for t in &tanhs {
                prefix.push(acc);
                acc *= t;
            }
            let mut suffix = 1.0;
            for k in (0..tanhs.len()).rev() {
                let prod = (prefix[k] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                c2v[s + k] = (2.0 * prod.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
                suffix *= tanhs[k];
            }
        }
        for v in 0..code.n {
            let sum: f64 = var_edges[v].iter().map(|&e| c2v[e]).sum();
            total[v] = llrs[v] + sum;
            for &e in &var_edges[v] {
                v2c[e] = (total[v] - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
        }
        word = hard(&total);
        if code.is_codeword(&word) {
            return Ok(Decoded {
                codeword: word,
                converged: true,
                iterations: iter,
            });
        }
    }
    Ok(Decoded {
        codeword: word,
        converged: false,
        iterations: max_iters,
    })
}

/// Outcome of reconciling one code block.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconciled {
    /// `B′ ⊕ α`, Bob's codeword.
    pub bob_codeword: BitString,
    /// Alice's decoded estimate of Bob's codeword.
    pub alice_estimate: BitString,
    /// The public coset representative.
    pub alpha: BitString,
    pub converged: bool,
}

/// Bob's half of one block: the published `α` and his codeword.
pub fn bob_encode(code: &LinearCode, bob_bits: &BitString) -> Result<(BitString, BitString)> {
    let alpha = coset_representative(code, &syndrome(code, bob_bits)?)?;
    let cw = bob_bits.xor(&alpha)?;
    Ok((alpha, cw))
}

/// Alice's half of one block: decodes Bob's codeword from her inputs and
/// the published `α`.
pub fn alice_decode(code: &LinearCode, alice_a: &[f64], alpha: &BitString, chan: &SoftChannel) -> Result<Decoded> {
    if alice_a.len() != code.n || alpha.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: if alice_a.len() != code.n { alice_a.len() } else { alpha.len() },
        });
    }
    let llrs: Vec<f64> = alice_a
        .iter()
        .enumerate()
        .map(|(i, &a)| channel_llr(chan, a, alpha.get(i)))
        .collect();
    bp_decode(code, &llrs, DEFAULT_MAX_ITERS)
}

/// Both halves of reverse reconciliation for one block.
pub fn reconcile(code: &LinearCode, bob_bits: &BitString, alice_a: &[f64], chan: &SoftChannel) -> Result<Reconciled> {
    if bob_bits.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: bob_bits.len(),
        });
    }
    let (alpha, bob_codeword) = bob_encode(code, bob_bits)?;
    let d = alice_decode(code, alice_a, &alpha, chan)?;
    Ok(Reconciled {
        bob_codeword,
        alice_estimate: d.codeword,
        alpha,
        converged: d.converged,
    })
}
