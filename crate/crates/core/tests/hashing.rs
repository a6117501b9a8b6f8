use std::time::Instant;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skg_core::hashing::{collision_probability, toeplitz_hash, BitString, ToeplitzSeed};

fn word(v: u64, len: usize) -> BitString {
    BitString::from_words(vec![v & ((1u64 << len) - 1)], len).unwrap()
}

fn seed(bits: u64, n1: usize, n2: usize) -> ToeplitzSeed {
    ToeplitzSeed::new(word(bits, n1 + n2 - 1), n1, n2).unwrap()
}

/// Every pair of distinct inputs collides for at most a `2^{−n2}` share of
/// seeds, counted by running the hash over the full seed space.
#[test]
fn family_is_universal_exhaustively() {
    for n1 in 1..=8usize {
        for n2 in 1..=n1 {
            let seeds = 1u64 << (n1 + n2 - 1);
            let inputs = 1usize << n1;
            // collisions[x·2^{n1} + y]: seeds under which x and y share a hash
            let mut collisions = vec![0u32; inputs * inputs];
            for s in 0..seeds {
                let sd = seed(s, n1, n2);
                let mut buckets = vec![Vec::new(); 1 << n2];
                for x in 0..inputs {
                    let h = toeplitz_hash(&sd, &word(x as u64, n1)).unwrap().words()[0] as usize;
                    buckets[h].push(x);
                }
                for b in &buckets {
                    for (i, &x) in b.iter().enumerate() {
                        for &y in &b[i + 1..] {
                            collisions[x * inputs + y] += 1;
                        }
                    }
                }
            }
            let worst = u64::from(*collisions.iter().max().unwrap());
            let frac = worst as f64 / seeds as f64;
            assert!(frac <= (-(n2 as f64)).exp2(), "n1={n1} n2={n2}: {frac}");
            assert_eq!(frac, collision_probability(n1, n2).unwrap(), "n1={n1} n2={n2}");
        }
    }
}

#[test]
fn every_seed_bit_matters() {
    for n1 in 1..=8usize {
        for n2 in 1..=n1 {
            let len = n1 + n2 - 1;
            for s in [0u64, 0x5a5a, 0xffff] {
                let base = seed(s, n1, n2);
                for k in 0..len {
                    let flipped = seed(s ^ (1 << k), n1, n2);
                    let differs = (0..1u64 << n1).any(|x| {
                        toeplitz_hash(&base, &word(x, n1)).unwrap() != toeplitz_hash(&flipped, &word(x, n1)).unwrap()
                    });
                    assert!(differs, "n1={n1} n2={n2} bit {k}");
                }
            }
        }
    }
}

#[test]
fn megabit_hash_is_fast_and_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n1, n2) = (1_000_000, 700_000);
    let sd = ToeplitzSeed::random(&mut rng, n1, n2).unwrap();
    let x = BitString::random(&mut rng, n1);
    let y = BitString::random(&mut rng, n1);
    let start = Instant::now();
    let hx = toeplitz_hash(&sd, &x).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "{elapsed:?}");
    let hy = toeplitz_hash(&sd, &y).unwrap();
    let hxy = toeplitz_hash(&sd, &x.xor(&y).unwrap()).unwrap();
    assert_eq!(hxy, hx.xor(&hy).unwrap());
    // spot-check individual output bits against the row definition
    for i in [0usize, 1, 12_345, n2 - 1] {
        let mut bit = false;
        for j in 0..n1 {
            bit ^= sd.bits().get(i + n1 - 1 - j) & x.get(j);
        }
        assert_eq!(hx.get(i), bit, "row {i}");
    }
}

proptest! {
    #[test]
    fn hash_is_linear(n1 in 1usize..300, frac in 0.0f64..1.0, s in any::<u64>()) {
        let n2 = ((n1 as f64 * frac) as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let sd = ToeplitzSeed::random(&mut rng, n1, n2).unwrap();
        let x = BitString::random(&mut rng, n1);
        let y = BitString::random(&mut rng, n1);
        let lhs = toeplitz_hash(&sd, &x.xor(&y).unwrap()).unwrap();
        let rhs = toeplitz_hash(&sd, &x).unwrap().xor(&toeplitz_hash(&sd, &y).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(toeplitz_hash(&sd, &BitString::zeros(n1)).unwrap(), BitString::zeros(n2));
    }
}
