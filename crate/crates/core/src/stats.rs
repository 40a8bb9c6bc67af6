//! Order statistics and seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 1-based nearest rank for quantile `q` over `n` samples: the smallest `k`
/// with `k / n >= q`, at least 1.
pub fn nearest_rank(q: f64, n: usize) -> usize {
    assert!(n > 0, "nearest_rank over empty sample");
    let q = q.clamp(0.0, 1.0);
    let mut k = ((q * n as f64).ceil() as usize).clamp(1, n);
    // ceil(q·n) can land one off when q·n rounds across an integer
    while k > 1 && (k - 1) as f64 / n as f64 >= q {
        k -= 1;
    }
    while k < n && (k as f64 / n as f64) < q {
        k += 1;
    }
    k
}

/// Nearest-rank quantile of an already-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    sorted[nearest_rank(q, sorted.len()) - 1]
}

/// Nearest-rank quantile; `None` for an empty sample. NaNs sort last.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Some(quantile_sorted(&v, q))
}

/// k-th smallest (1-based) by selection, without a full sort.
pub fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *v
}

/// Conventional median: mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `parts` under `seed`. Order of `parts` matters.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(nearest_rank(0.1, 54), 6);
        assert_eq!(nearest_rank(0.1, 30), 3);
        assert_eq!(nearest_rank(0.5, 10), 5);
        assert_eq!(nearest_rank(0.0, 10), 1);
        assert_eq!(nearest_rank(1.0, 10), 10);
        assert_eq!(nearest_rank(0.95, 1024), 973);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    proptest! {
        #[test]
        fn nearest_rank_is_minimal(n in 1usize..5000, q in 0.0f64..=1.0) {
            let k = nearest_rank(q, n);
            prop_assert!(k >= 1 && k <= n);
            if q > 0.0 {
                prop_assert!(k as f64 / n as f64 >= q);
                if k > 1 {
                    prop_assert!(((k - 1) as f64 / n as f64) < q);
                }
            }
        }

        #[test]
        fn selection_matches_sort(mut v in proptest::collection::vec(-1e3f64..1e3, 1..200), q in 0.0f64..=1.0) {
            let sorted_q = quantile(&v, q).unwrap();
            let k = nearest_rank(q, v.len());
            prop_assert_eq!(kth_smallest(&mut v, k), sorted_q);
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, &[0, 1]);
        let b = derive_seed(7, &[1, 0]);
        let c = derive_seed(7, &[0, 1]);
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
