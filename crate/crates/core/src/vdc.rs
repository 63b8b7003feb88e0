//! Van der Corput radical inverse and its nested uniform scramble.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn check_base(base: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::invalid(format!("base must be at least 2, got {base}")));
    }
    Ok(())
}

/// Base-`b` digits of `n`, least significant first.
pub fn digits(base: u32, mut n: u64) -> Vec<u32> {
    let b = base as u64;
    let mut out = Vec::new();
    while n > 0 {
        out.push((n % b) as u32);
        n /= b;
    }
    out
}

/// The `i`-th point (1-based) of the base-`b` van der Corput sequence,
/// i.e. the radical inverse of `i - 1`.
pub fn van_der_corput(base: u32, i: u64) -> Result<f64> {
    check_base(base)?;
    if i == 0 {
        return Err(Error::invalid("van der Corput index is 1-based"));
    }
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut x = 0.0;
    for digit in digits(base, i - 1) {
        x += digit as f64 * scale;
        scale *= inv;
    }
    Ok(x)
}

/// Default digit truncation: 32 for base 2, `ceil(32 / log2 b)` otherwise.
pub fn default_truncation(base: u32) -> usize {
    if base == 2 {
        32
    } else {
        (32.0 / (base as f64).log2()).ceil() as usize
    }
}

/// Cached permutations keyed by `(digit position, digit prefix)`.
type PermutationCache = Mutex<HashMap<(usize, u64), Arc<Vec<u32>>>>;

/// Random digit permutations indexed by digit history.
///
/// The permutation applied to digit `j` depends on the original digits
/// `y_1 .. y_{j-1}`. Each one is drawn uniformly from the `b!` permutations
/// by a generator keyed on `(seed, j, prefix)`, so results do not depend on
/// the order in which prefixes are visited. Drawn permutations are cached.
#[derive(Debug)]
pub struct ScrambleTree {
    base: u32,
    seed: u64,
    identity: bool,
    cache: PermutationCache,
}

impl ScrambleTree {
    pub fn new(base: u32, seed: u64) -> Result<Self> {
        check_base(base)?;
        Ok(ScrambleTree { base, seed, identity: false, cache: Mutex::new(HashMap::new()) })
    }

    /// Every permutation is the identity; scrambling then reduces to
    /// truncating the plain sequence.
    pub fn identity(base: u32) -> Result<Self> {
        let mut t = ScrambleTree::new(base, 0)?;
        t.identity = true;
        Ok(t)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Permutation for digit position `depth` (1-based) after the digit
    /// history encoded as `prefix` (base-`b` value, first digit least
    /// significant).
    pub fn permutation(&self, depth: usize, prefix: u64) -> Arc<Vec<u32>> {
        let mut cache = self.cache.lock().expect("scramble cache poisoned");
        cache
            .entry((depth, prefix))
            .or_insert_with(|| Arc::new(self.draw(depth, prefix)))
            .clone()
    }

    fn draw(&self, depth: usize, prefix: u64) -> Vec<u32> {
        let mut perm: Vec<u32> = (0..self.base).collect();
        if self.identity {
            return perm;
        }
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(depth as u64).to_le_bytes());
        key[16..24].copy_from_slice(&prefix.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        perm.shuffle(&mut rng);
        perm
    }

    pub fn cached_permutations(&self) -> usize {
        self.cache.lock().expect("scramble cache poisoned").len()
    }
}

/// The `i`-th scrambled van der Corput point truncated to `truncation` digits:
/// `sum_j pi_{y_1..y_{j-1}}(y_j) b^{-j}`.
pub fn scrambled_vdc(tree: &ScrambleTree, i: u64, truncation: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::invalid("van der Corput index is 1-based"));
    }
    if truncation == 0 {
        return Err(Error::invalid("truncation must keep at least one digit"));
    }
    let b = tree.base() as u64;
    let mut ys = digits(tree.base(), i - 1);
    if ys.len() > truncation {
        return Err(Error::invalid(format!(
            "index {i} needs {} digits, more than the truncation {truncation}",
            ys.len()
        )));
    }
    ys.resize(truncation, 0);
    let inv = 1.0 / b as f64;
    let mut scale = inv;
    let mut x = 0.0;
    let mut prefix = 0u64;
    let mut weight = 1u64;
    for (j, &y) in ys.iter().enumerate() {
        let perm = tree.permutation(j + 1, prefix);
        x += perm[y as usize] as f64 * scale;
        scale *= inv;
        prefix = prefix.wrapping_add(y as u64 * weight);
        weight = weight.wrapping_mul(b);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Digit-expansion oracle with exact rational arithmetic.
    fn radical_inverse_rational(base: u64, mut n: u64) -> (u64, u64) {
        let (mut num, mut den) = (0u64, 1u64);
        while n > 0 {
            num = num * base + n % base;
            den *= base;
            n /= base;
        }
        (num, den)
    }

    #[test]
    fn base_two_prefix() {
        let got: Vec<f64> = (1..=4).map(|i| van_der_corput(2, i).unwrap()).collect();
        assert_eq!(got, vec![0.0, 0.5, 0.25, 0.75]);
    }

    #[test]
    fn base_three_fifth_point() {
        assert!((van_der_corput(3, 5).unwrap() - 4.0 / 9.0).abs() < 1e-16);
        let (num, den) = radical_inverse_rational(3, 4);
        assert_eq!((num, den), (4, 9));
    }

    #[test]
    fn first_point_is_zero() {
        for b in 2..10 {
            assert_eq!(van_der_corput(b, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_rational_oracle() {
        for b in [2u32, 3, 5, 7] {
            for i in 1..200u64 {
                let (num, den) = radical_inverse_rational(b as u64, i - 1);
                let expected = num as f64 / den as f64;
                assert!((van_der_corput(b, i).unwrap() - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(van_der_corput(1, 3).is_err());
        assert!(van_der_corput(2, 0).is_err());
        let t = ScrambleTree::new(2, 1).unwrap();
        assert!(scrambled_vdc(&t, 0, 8).is_err());
        assert!(scrambled_vdc(&t, 1, 0).is_err());
        assert!(scrambled_vdc(&t, 300, 8).is_err());
    }

    #[test]
    fn identity_scramble_is_truncated_sequence() {
        for b in [2u32, 3, 5] {
            let t = ScrambleTree::identity(b).unwrap();
            let j = default_truncation(b);
            for i in 1..100 {
                assert_eq!(scrambled_vdc(&t, i, j).unwrap(), van_der_corput(b, i).unwrap());
            }
        }
    }

    #[test]
    fn permutations_are_reproducible() {
        let a = ScrambleTree::new(3, 42).unwrap();
        let b = ScrambleTree::new(3, 42).unwrap();
        // visit prefixes in different orders
        let xs: Vec<f64> = (1..50).map(|i| scrambled_vdc(&a, i, 10).unwrap()).collect();
        let ys: Vec<f64> = (1..50).rev().map(|i| scrambled_vdc(&b, i, 10).unwrap()).collect();
        let ys: Vec<f64> = ys.into_iter().rev().collect();
        assert_eq!(xs, ys);
        assert!(a.cached_permutations() > 0);
    }

    #[test]
    fn scrambled_points_permute_elementary_intervals() {
        for seed in 0..20 {
            let t = ScrambleTree::new(2, seed).unwrap();
            for m in 1..=6u32 {
                let n = 1u64 << m;
                let mut slots: Vec<u64> = (1..=n)
                    .map(|i| (scrambled_vdc(&t, i, 32).unwrap() * n as f64).floor() as u64)
                    .collect();
                slots.sort_unstable();
                assert_eq!(slots, (0..n).collect::<Vec<_>>());
            }
        }
        let t = ScrambleTree::new(3, 9).unwrap();
        let n = 27u64;
        let mut slots: Vec<u64> = (1..=n)
            .map(|i| (scrambled_vdc(&t, i, default_truncation(3)).unwrap() * n as f64).floor() as u64)
            .collect();
        slots.sort_unstable();
        assert_eq!(slots, (0..n).collect::<Vec<_>>());
    }
}
