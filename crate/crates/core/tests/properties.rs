use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

use rowprint::addrmap::stock::StockGeometry;
use rowprint::analysis::{jaccard, theoretical_entropy_bits};
use rowprint::dram_sim::flip_probability;
use rowprint::hammering::{sample_chunks, BitFlipDistribution};
use rowprint::matching::{
    js_divergence, overlap_probability, reference_overlap_probability, required_sample_size,
};

fn distribution(max_index: u32) -> impl Strategy<Value = BitFlipDistribution> {
    prop::collection::btree_map(0..max_index, 1u32..100, 1..30)
        .prop_map(|m| BitFlipDistribution::from_sorted_counts(m.into_iter().collect()).unwrap())
}

fn stock() -> impl Strategy<Value = StockGeometry> {
    prop::sample::select(StockGeometry::ALL.to_vec())
}

proptest! {
    #[test]
    fn jsd_is_symmetric_and_bounded(p in distribution(64), q in distribution(64)) {
        let a = js_divergence(&p, &q).unwrap();
        let b = js_divergence(&q, &p).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&a));
        prop_assert!(js_divergence(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn jsd_of_disjoint_supports_is_one(p in distribution(100), q in distribution(100)) {
        let shifted = BitFlipDistribution::from_sorted_counts(
            q.counts().iter().map(|&(i, c)| (i + 1000, c)).collect(),
        ).unwrap();
        prop_assert!((js_divergence(&p, &shifted).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn jsd_ignores_count_scaling(p in distribution(64), k in 2u32..20) {
        let scaled = BitFlipDistribution::from_sorted_counts(
            p.counts().iter().map(|&(i, c)| (i, c * k)).collect(),
        ).unwrap();
        prop_assert!(js_divergence(&p, &scaled).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn merged_counts_add(p in distribution(64), q in distribution(64)) {
        let m = p.merged(&q);
        prop_assert_eq!(m.total(), p.total() + q.total());
        for i in 0..64 {
            prop_assert_eq!(m.count(i), p.count(i) + q.count(i));
        }
    }

    #[test]
    fn mapping_round_trips(s in stock(), raw in any::<u64>()) {
        let m = s.mapping();
        let a = raw & ((1u64 << m.address_width()) - 1);
        let c = m.decompose(a).unwrap();
        prop_assert_eq!(m.compose(&c).unwrap(), a);
        prop_assert!(c.rank < m.ranks() && c.bank < m.banks());
    }

    #[test]
    fn row_conflict_means_same_bank_other_row(s in stock(), x in any::<u64>(), y in any::<u64>()) {
        let m = s.mapping();
        let mask = (1u64 << m.address_width()) - 1;
        let (a, b) = (x & mask, y & mask);
        let (ca, cb) = (m.decompose(a).unwrap(), m.decompose(b).unwrap());
        let expect = (ca.channel, ca.rank, ca.bank) == (cb.channel, cb.rank, cb.bank) && ca.row != cb.row;
        prop_assert_eq!(m.is_row_conflict(a, b).unwrap(), expect);
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(
        a in prop::collection::btree_set(0u64..200, 0..40),
        b in prop::collection::btree_set(0u64..200, 1..40),
    ) {
        let a: Vec<u64> = a.into_iter().collect();
        let b: Vec<u64> = b.into_iter().collect();
        let x = jaccard(&a, &b).unwrap();
        prop_assert_eq!(x, jaccard(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(jaccard(&b, &b).unwrap(), 1.0);
    }

    #[test]
    fn entropy_matches_exact_binomial(n in 1u64..3000, k_frac in 0.0f64..=1.0) {
        let k = (k_frac * n as f64) as u64;
        let mut c = BigUint::one();
        for i in 0..k {
            c = c * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        let exact = if c.bits() < 1000 {
            c.to_f64().unwrap().log2()
        } else {
            let shift = c.bits() - 64;
            (&c >> shift).to_f64().unwrap().log2() + shift as f64
        };
        let h = theoretical_entropy_bits(n, k).unwrap();
        prop_assert!((h - exact).abs() <= 1e-9 * exact.max(1.0), "{} vs {}", h, exact);
        prop_assert!((h - theoretical_entropy_bits(n, n - k).unwrap()).abs() <= 1e-9 * h.max(1.0));
    }

    #[test]
    fn overlap_grows_with_sample(n in 2u64..2000, d_frac in 0.0f64..1.0) {
        let d = 1 + (d_frac * (n - 1) as f64) as u64;
        let p = overlap_probability(n, d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if d < n {
            prop_assert!(overlap_probability(n, d + 1).unwrap() >= p);
        }
        if 2 * d <= n {
            let q = reference_overlap_probability(n, d, d).unwrap();
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_size_shrinks_with_reference(n in 3u64..600, s_frac in 0.0f64..1.0, target in 0.01f64..0.999) {
        let s = 1 + (s_frac * (n - 3) as f64) as u64;
        let d = required_sample_size(n, s, target).unwrap();
        let d_next = required_sample_size(n, s + 1, target).unwrap();
        prop_assert!(d_next <= d);
        prop_assert!(reference_overlap_probability(n, s, d).unwrap() >= target - 1e-12);
        if d > 1 {
            prop_assert!(reference_overlap_probability(n, s, d - 1).unwrap() < target + 1e-12);
        }
    }

    #[test]
    fn sampled_chunks_are_distinct_and_sorted(n in 1u32..2000, d_frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = ((d_frac * n as f64) as u32).max(1);
        let c = sample_chunks(n, d, seed).unwrap();
        prop_assert_eq!(c.len(), d as usize);
        prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(c.iter().all(|&x| x < n));
        prop_assert_eq!(sample_chunks(n, d, seed).unwrap(), c);
    }

    #[test]
    fn flip_probability_is_monotone(s in 1e-9f64..1e-3, a in 1.0f64..1e8, w in 0.0f64..1.0) {
        let p = flip_probability(s, a, w);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(flip_probability(s, a * 2.0, w) >= p);
    }
}
