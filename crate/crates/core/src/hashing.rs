//! Toeplitz universal₂ hashing for privacy amplification and key
//! verification.
//!
//! Bits are packed into `u64` words, bit `i` at position `i % 64` of word
//! `i / 64`. The Toeplitz matrix of a seed `s` of length `n1 + n2 − 1` is
//! `T[i][j] = s[i + n1 − 1 − j]`, so `T·x` is the slice `[n1 − 1, n1 − 1 + n2)`
//! of the carry-less product `S(z)·X(z)`; that product is computed with
//! Karatsuba multiplication over GF(2)[z].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bit vector of fixed length. Storage bits past `len` are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = BitString::zeros(0);
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Takes `len` bits from little-endian packed words.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(64),
                got: words.len(),
            });
        }
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Ok(BitString { words, len })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        let words = (0..len.div_ceil(64)).map(|_| rng.random::<u64>()).collect();
        BitString::from_words(words, len).expect("word count matches")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(BitString {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        })
    }

    /// Bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        extract_bits(&self.words, start, len)
    }

    /// Lowercase hex, the first bit as the most significant bit of the first
    /// digit. A final partial digit is padded with zero bits.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        let mut s = hex::encode(bytes);
        s.truncate(self.len.div_ceil(4));
        s
    }

    /// Inverse of [`BitString::to_hex`]; padding bits must be zero.
    pub fn from_hex(s: &str, len: usize) -> Result<BitString> {
        if s.len() != len.div_ceil(4) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(4),
                got: s.len(),
            });
        }
        let padded = if s.len() % 2 == 1 { format!("{s}0") } else { s.to_string() };
        let bytes = hex::decode(padded).map_err(|e| Error::Domain(format!("bad hex: {e}")))?;
        let mut out = BitString::zeros(len);
        for i in 0..bytes.len() * 8 {
            let bit = bytes[i / 8] & (0x80 >> (i % 8)) != 0;
            if i < len {
                out.set(i, bit);
            } else if bit {
                return Err(Error::Domain("nonzero padding bits in hex string".into()));
            }
        }
        Ok(out)
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("BitString", 2)?;
        st.serialize_field("len", &self.len)?;
        st.serialize_field("hex", &self.to_hex())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            len: usize,
            hex: String,
        }
        let r = Repr::deserialize(d)?;
        BitString::from_hex(&r.hex, r.len).map_err(serde::de::Error::custom)
    }
}

fn extract_bits(words: &[u64], start: usize, len: usize) -> BitString {
    let (w0, sh) = (start / 64, start % 64);
    let out: Vec<u64> = (0..len.div_ceil(64))
        .map(|k| {
            let lo = words.get(w0 + k).copied().unwrap_or(0);
            if sh == 0 {
                lo
            } else {
                let hi = words.get(w0 + k + 1).copied().unwrap_or(0);
                (lo >> sh) | (hi << (64 - sh))
            }
        })
        .collect();
    BitString::from_words(out, len).expect("word count matches")
}

/// Seed of a Toeplitz hash from `n1` to `n2` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeedRepr")]
pub struct ToeplitzSeed {
    bits: BitString,
    n1: usize,
    n2: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedRepr {
    bits: BitString,
    n1: usize,
    n2: usize,
}

impl TryFrom<SeedRepr> for ToeplitzSeed {
    type Error = Error;

    fn try_from(r: SeedRepr) -> Result<Self> {
        ToeplitzSeed::new(r.bits, r.n1, r.n2)
    }
}

impl ToeplitzSeed {
    pub fn new(bits: BitString, n1: usize, n2: usize) -> Result<Self> {
        if n2 > n1 {
            return Err(Error::param("n2", format!("output length {n2} exceeds input length {n1}")));
        }
        let expected = (n1 + n2).saturating_sub(1);
        if bits.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: bits.len(),
            });
        }
        Ok(ToeplitzSeed { bits, n1, n2 })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, n1: usize, n2: usize) -> Result<Self> {
        ToeplitzSeed::new(BitString::random(rng, (n1 + n2).saturating_sub(1)), n1, n2)
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }
}

/// `T·x` over GF(2).
pub fn toeplitz_hash(seed: &ToeplitzSeed, input: &BitString) -> Result<BitString> {
    if input.len() != seed.n1 {
        return Err(Error::LengthMismatch {
            expected: seed.n1,
            got: input.len(),
        });
    }
    if seed.n2 == 0 {
        return Ok(BitString::zeros(0));
    }
    let prod = clmul_poly(seed.bits.words(), input.words());
    Ok(extract_bits(&prod, seed.n1 - 1, seed.n2))
}

/// Carry-less 64×64 → 128-bit product using a 4-bit window.
fn clmul64(a: u64, b: u64) -> u128 {
    let mut table = [0u128; 16];
    let a = a as u128;
    for k in 1..16usize {
        table[k] = if k & 1 == 1 {
            table[k - 1] ^ a
        } else {
            table[k >> 1] << 1
        };
    }
    let mut r = 0u128;
    for i in (0..16).rev() {
        r = (r << 4) ^ table[((b >> (4 * i)) & 0xf) as usize];
    }
    r
}

const KARATSUBA_CUTOFF: usize = 24;

/// Carry-less product of two packed polynomials; result has
/// `a.len() + b.len()` words.
fn clmul_poly(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len()];
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let n = short.len();
    let mut padded = vec![0u64; n];
    for (c, chunk) in long.chunks(n).enumerate() {
        padded[..chunk.len()].copy_from_slice(chunk);
        padded[chunk.len()..].fill(0);
        let part = karatsuba(&padded, short);
        for (k, w) in part.into_iter().enumerate() {
            if let Some(o) = out.get_mut(c * n + k) {
                *o ^= w;
            } else {
                debug_assert_eq!(w, 0);
            }
        }
    }
    out
}

/// Equal-length carry-less product, `2·len` words.
fn karatsuba(a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    let mut out = vec![0u64; 2 * n];
    if n <= KARATSUBA_CUTOFF {
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                let p = clmul64(x, y);
                out[i + j] ^= p as u64;
                out[i + j + 1] ^= (p >> 64) as u64;
            }
        }
        return out;
    }
    let m = n / 2;
    let h = n - m;
    let (a0, a1) = a.split_at(m);
    let (b0, b1) = b.split_at(m);
    let z0 = karatsuba(a0, b0);
    let z2 = karatsuba(a1, b1);
    let mut sa = a1.to_vec();
    let mut sb = b1.to_vec();
    for i in 0..m {
        sa[i] ^= a0[i];
        sb[i] ^= b0[i];
    }
    let mut z1 = karatsuba(&sa, &sb);
    for (i, w) in z0.iter().enumerate() {
        z1[i] ^= w;
    }
    for (i, w) in z2.iter().enumerate() {
        z1[i] ^= w;
    }
    for (i, w) in z0.into_iter().enumerate() {
        out[i] ^= w;
    }
    for (i, w) in z2.into_iter().enumerate() {
        out[2 * m + i] ^= w;
    }
    for (i, w) in z1.into_iter().enumerate().take(2 * h) {
        out[m + i] ^= w;
    }
    out
}

/// Largest exhaustive input length for [`collision_probability`].
pub const MAX_EXHAUSTIVE_N1: usize = 12;

/// Fraction of all seeds for which inputs `c` and `c2` collide.
///
/// Hashing is linear, so the seeds that collide are those annihilating
/// `d = c ⊕ c2`; as the map `s ↦ T_s·d` is itself linear in the seed, their
/// fraction is `2^{−rank}`.
pub fn pair_collision_frequency(n1: usize, n2: usize, c: &BitString, c2: &BitString) -> Result<f64> {
    if c.len() != n1 || c2.len() != n1 {
        return Err(Error::LengthMismatch {
            expected: n1,
            got: if c.len() != n1 { c.len() } else { c2.len() },
        });
    }
    if n2 > n1 {
        return Err(Error::param("n2", "must not exceed n1"));
    }
    let d = c.xor(c2)?;
    let seed_len = (n1 + n2).saturating_sub(1);
    if seed_len > 64 {
        return Err(Error::TooLarge(format!("seed length {seed_len} exceeds 64 bits")));
    }
    // row i of the seed map: seed bit k contributes d[i + n1 − 1 − k]
    let rows: Vec<u64> = (0..n2)
        .map(|i| {
            let mut r = 0u64;
            for k in 0..seed_len {
                let j = (i + n1 - 1) as isize - k as isize;
                if j >= 0 && (j as usize) < n1 && d.get(j as usize) {
                    r |= 1 << k;
                }
            }
            r
        })
        .collect();
    Ok((-(gf2_rank(rows) as f64)).exp2())
}

fn gf2_rank(mut rows: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        let mask = 1u64 << bit;
        let Some(p) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (i, r) in rows.iter_mut().enumerate() {
            if i != rank && *r & mask != 0 {
                *r ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// Largest collision frequency over all pairs of distinct `n1`-bit inputs.
pub fn collision_probability(n1: usize, n2: usize) -> Result<f64> {
    if n1 > MAX_EXHAUSTIVE_N1 {
        return Err(Error::TooLarge(format!("n1 = {n1} > {MAX_EXHAUSTIVE_N1}")));
    }
    if n1 == 0 {
        return Err(Error::param("n1", "must be positive"));
    }
    let zero = BitString::zeros(n1);
    let mut worst = 0.0f64;
    for d in 1u64..(1 << n1) {
        let dv = BitString::from_words(vec![d], n1)?;
        worst = worst.max(pair_collision_frequency(n1, n2, &zero, &dv)?);
    }
    Ok(worst)
}

/// `m2`-bit tag of `key` for error verification.
pub fn verification_tag(key: &BitString, seed: &ToeplitzSeed, m2: usize) -> Result<BitString> {
    if m2 > key.len() {
        return Err(Error::param("m2", format!("{m2} exceeds key length {}", key.len())));
    }
    if seed.n1 != key.len() || seed.n2 != m2 {
        return Err(Error::param(
            "seed",
            format!("seed maps {} -> {} bits, need {} -> {m2}", seed.n1, seed.n2, key.len()),
        ));
    }
    toeplitz_hash(seed, key)
}

/// Failure probability `n·2^{1−k}` (at most 1) of authenticating `n` bits
/// with `k` bits of secret key.
pub fn auth_failure_prob(n: usize, k: usize) -> f64 {
    (n as f64 * (1.0 - k as f64).exp2()).min(1.0)
}
