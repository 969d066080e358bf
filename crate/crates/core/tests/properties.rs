use findscope_core::cascade::{
    constants, covariance, increment_msq, prefix_len, DyadicRational, PrefixLen,
};
use findscope_core::engine::{profile, run_find, FindConfig, Variant};
use findscope_core::pivot::{SplitLaw, SubsampleRule};
use findscope_core::stats::replicate;
use proptest::prelude::*;

fn dyadic() -> impl Strategy<Value = DyadicRational> {
    (1u32..12).prop_flat_map(|level| (0..=(1u64 << level)).prop_map(move |num| DyadicRational::new(num, level).unwrap()))
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::TwoVersion), Just(Variant::ThreeVersion)]
}

proptest! {
    #[test]
    fn split_pmf_is_a_law(n in 1u64..400, half in 0u64..40) {
        let k = (2 * half + 1).min(if n % 2 == 1 { n } else { n - 1 });
        let law = SplitLaw::new(n, k).unwrap();
        let total: f64 = law.support().map(|i| law.pmf(i)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let mean: f64 = law.support().map(|i| i as f64 * law.pmf(i)).sum();
        prop_assert!((mean - (n + 1) as f64 / 2.0).abs() < 1e-7 * n as f64);
        prop_assert!((law.mean() - (n + 1) as f64 / 2.0).abs() < 1e-12 * n as f64);
    }

    #[test]
    fn subsample_size_is_odd_and_fits(n in 1u64..1_000_000, c in 0.1f64..4.0, alpha in 0.05f64..=0.5) {
        let rule = SubsampleRule::new(c, alpha).unwrap();
        let k = rule.k_of(n);
        prop_assert!(k % 2 == 1 && k >= 1 && k <= n);
        if n < 5 {
            prop_assert_eq!(k, 1);
        }
    }

    #[test]
    fn prefix_length_is_ultrametric(s in dyadic(), t in dyadic(), u in dyadic()) {
        let (st, tu, su) = (prefix_len(s, t), prefix_len(t, u), prefix_len(s, u));
        prop_assert!(su >= st.min(tu));
        prop_assert_eq!(st, prefix_len(t, s));
    }

    #[test]
    fn kernel_polarization(s in dyadic(), t in dyadic()) {
        let c = constants(0.5).unwrap();
        let j = prefix_len(s, t);
        let lhs = 2.0 * covariance(PrefixLen::Infinite, &c) - 2.0 * covariance(j, &c);
        prop_assert!((lhs - increment_msq(j, &c)).abs() < 1e-12);
    }

    #[test]
    fn profile_agrees_with_single_runs(n in 1u64..300, seed in any::<u64>(), v in variant(), alpha in 0.1f64..=0.5) {
        let cfg = FindConfig::new(v, SubsampleRule::new(1.0, alpha).unwrap());
        let p = profile(n, &cfg, seed);
        for l in 1..=n {
            prop_assert_eq!(p.count(l), run_find(n, l, &cfg, seed).unwrap());
        }
    }
}

#[test]
fn replicate_ignores_thread_count() {
    let cfg = FindConfig::new(Variant::ThreeVersion, SubsampleRule::new(1.0, 0.5).unwrap());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| replicate(64, |r| profile(500, &cfg, r).counts))
    };
    assert_eq!(run(1), run(4));
}
