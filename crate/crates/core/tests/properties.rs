mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use kernel_rank::geometry::{
    box_probability, classify, kappa, level_count, make_domain_pair, subdivide, InteractionKind, TreeRegion,
};
use kernel_rank::kernels::{evaluate, KernelId};
use kernel_rank::lowrank::{
    assemble, cheb_factorize, eps_rank, eps_rank_with, rank_from_singular_values, realized_r, rel_maxnorm_error,
    RankMethod,
};
use kernel_rank::probmodel::{
    binom_pmf, cov_z_m, terminal_first_moment, conditional_terminal_mean, trinom_pmf, z_cov, z_joint_pmf, z_mean,
    z_pmf, z_var, CountModel, TruncatedCountModel,
};
use kernel_rank::sampling::{derive_seed, realized_counts, sample, Distribution};

fn kind_for(d: usize) -> impl Strategy<Value = InteractionKind> {
    prop_oneof![Just(InteractionKind::FarField), (0..d).prop_map(InteractionKind::SharedSurface)]
}

fn shared(d: usize) -> impl Strategy<Value = InteractionKind> {
    (0..d).prop_map(InteractionKind::SharedSurface)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classify_recovers_constructed_kind(
        (d, kind) in (1usize..=3).prop_flat_map(|d| (Just(d), kind_for(d))),
        side in prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
    ) {
        let (x, y) = make_domain_pair(d, kind, side).unwrap();
        prop_assert_eq!(classify(&x, &y).unwrap(), kind);
    }

    #[test]
    fn tree_tiles_source_with_level_law(
        (d, kind) in (1usize..=3).prop_flat_map(|d| (Just(d), shared(d))),
        n in 1u64..5000,
    ) {
        let (x, y) = make_domain_pair(d, kind, 1.0).unwrap();
        let tree = subdivide(&y, &x, n).unwrap();
        let dp = match kind { InteractionKind::SharedSurface(k) => k, _ => unreachable!() };
        prop_assert_eq!(tree.kappa(), kappa(n, d));
        let mut mass = 0.0;
        for k in 1..=tree.kappa() {
            let level = tree.level(k).unwrap();
            prop_assert_eq!(level.len() as u64, level_count(d, dp, k));
            let q = box_probability(&tree, TreeRegion::Level(k)).unwrap();
            mass += level.len() as f64 * q;
            for cell in level {
                prop_assert!((cell.cube.volume() - q).abs() < 1e-15);
                prop_assert_eq!(classify(&x, &cell.cube).unwrap(), InteractionKind::FarField);
            }
        }
        let qk = box_probability(&tree, TreeRegion::Terminal).unwrap();
        let terminal_volume: f64 = tree.terminal_cells().iter().map(|c| c.cube.volume()).sum();
        prop_assert!((terminal_volume - qk).abs() < 1e-12);
        for cell in tree.terminal_cells() {
            prop_assert_eq!(classify(&x, &cell.cube).unwrap(), kind);
        }
        prop_assert!((mass + qk - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kernels_symmetric_and_translation_invariant(
        code in 0usize..7,
        x in prop::collection::vec(-3.0f64..3.0, 3),
        y in prop::collection::vec(-3.0f64..3.0, 3),
        t in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let id = KernelId::BUILTIN[code].clone();
        let r: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assume!(r > 1e-6);
        let a = evaluate(&id, &x, &y).unwrap();
        let b = evaluate(&id, &y, &x).unwrap();
        prop_assert_eq!(a, b);
        let xt: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + b).collect();
        let yt: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + b).collect();
        let c = evaluate(&id, &xt, &yt).unwrap();
        prop_assert!((a - c).norm() <= 1e-9 * (1.0 + a.norm()));
        if !id.is_complex() {
            prop_assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_partitions(
        (d, kind) in (1usize..=3).prop_flat_map(|d| (Just(d), shared(d))),
        n in 1usize..400,
        seed in any::<u64>(),
    ) {
        let (x, y) = make_domain_pair(d, kind, 1.0).unwrap();
        let a = sample(&y, n, seed, &Distribution::Uniform).unwrap();
        let b = sample(&y, n, seed, &Distribution::Uniform).unwrap();
        prop_assert_eq!(a.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert!(a.iter().all(|p| y.contains_open(p)));
        let tree = subdivide(&y, &x, n as u64).unwrap();
        let counts = realized_counts(&a, &tree).unwrap();
        prop_assert_eq!(counts.total(), n as u64);
        prop_assert_eq!(realized_r(&counts, n as u64), n as u64);
        prop_assert!(realized_r(&counts, 0) == counts.terminal);
    }

    #[test]
    fn eps_rank_monotone_and_bounded(
        seed in any::<u64>(),
        m in 2usize..40,
        n in 2usize..40,
        e1 in -14i32..-1,
        gap in 0i32..6,
    ) {
        let (x, y) = make_domain_pair(1, InteractionKind::SharedSurface(0), 1.0).unwrap();
        let xs = sample(&x, m, derive_seed(seed, &[0]), &Distribution::Uniform).unwrap();
        let ys = sample(&y, n, derive_seed(seed, &[1]), &Distribution::Uniform).unwrap();
        let k = assemble(&KernelId::K1, &xs, &ys).unwrap();
        let small = 10f64.powi(e1 - gap);
        let big = 10f64.powi(e1);
        let rs = eps_rank_with(&k, small, RankMethod::Full).unwrap();
        let rb = eps_rank_with(&k, big, RankMethod::Full).unwrap();
        prop_assert!(rs.eps_rank >= rb.eps_rank);
        prop_assert!(rs.eps_rank <= m.min(n));
        prop_assert!(rs.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let sv = &rs.singular_values;
        let floor = sv[sv.len() - 1] / sv[0] * (1.0 - 1e-12);
        if floor > 0.0 {
            prop_assert_eq!(rank_from_singular_values(sv, floor), m.min(n));
        }
    }

    #[test]
    fn one_dimensional_identities(seed in any::<u64>(), n in 5usize..120) {
        for kind in [InteractionKind::FarField, InteractionKind::SharedSurface(0)] {
            let (x, y) = make_domain_pair(1, kind, 1.0).unwrap();
            let xs = sample(&x, n, derive_seed(seed, &[0]), &Distribution::Uniform).unwrap();
            let ys = sample(&y, n, derive_seed(seed, &[1]), &Distribution::Uniform).unwrap();
            let rank = |id: KernelId| eps_rank(&assemble(&id, &xs, &ys).unwrap(), 1e-12).unwrap().eps_rank;
            prop_assert!(rank(KernelId::K3) <= 2);
            prop_assert_eq!(rank(KernelId::K6), 1);
            prop_assert!(rank(KernelId::K7) <= 2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deflated_and_full_ranks_agree(
        seed in any::<u64>(),
        (d, kind) in (1usize..=2).prop_flat_map(|d| (Just(d), kind_for(d))),
        n in 40usize..160,
        code in 0usize..7,
    ) {
        let (x, y) = make_domain_pair(d, kind, 1.0).unwrap();
        let xs = sample(&x, n, derive_seed(seed, &[0]), &Distribution::Uniform).unwrap();
        let ys = sample(&y, n, derive_seed(seed, &[1]), &Distribution::Uniform).unwrap();
        let k = assemble(&KernelId::BUILTIN[code], &xs, &ys).unwrap();
        let full = eps_rank_with(&k, 1e-12, RankMethod::Full).unwrap();
        let fast = eps_rank(&k, 1e-12).unwrap();
        let s1 = full.singular_values[0];
        // Values within a hair of the threshold may legitimately flip.
        let near = full.singular_values.iter().any(|s| (s / s1 / 1e-12 - 1.0).abs() < 1e-2);
        if !near {
            prop_assert_eq!(full.eps_rank, fast.eps_rank);
        }
    }

    #[test]
    fn cheb_error_decays_with_order(seed in any::<u64>(), code in prop_oneof![Just(0usize), Just(1), Just(4), Just(5)]) {
        let (x, y) = make_domain_pair(1, InteractionKind::FarField, 1.0).unwrap();
        let xs = sample(&x, 60, derive_seed(seed, &[0]), &Distribution::Uniform).unwrap();
        let ys = sample(&y, 60, derive_seed(seed, &[1]), &Distribution::Uniform).unwrap();
        let id = KernelId::BUILTIN[code].clone();
        let k = assemble(&id, &xs, &ys).unwrap();
        let errs: Vec<f64> = [2usize, 4, 6, 8, 10]
            .iter()
            .map(|&o| rel_maxnorm_error(&k, &cheb_factorize(&id, &xs, &y, &ys, o).unwrap()).unwrap())
            .collect();
        for w in errs.windows(2) {
            prop_assert!(w[1] <= w[0] * 1.01 + 1e-14, "{:?}", errs);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmfs_normalize(n in 1u64..300, q in 0.01f64..0.99, p in 0u64..12) {
        let m = CountModel::new(n, q).unwrap();
        let s: f64 = (0..=n).map(|k| binom_pmf(&m, k).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        let z = TruncatedCountModel::new(n, q, p).unwrap();
        let s: f64 = (0..=p).map(|i| z_pmf(&z, i).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trinomial_and_joint_z_normalize(n in 1u64..60, a in 1u32..6, b in 1u32..6, p in 0u64..6) {
        let (q1, q2) = (2f64.powi(-(a as i32)), 2f64.powi(-(b as i32)));
        prop_assume!(q1 + q2 < 1.0);
        let mut s = 0.0;
        for l in 0..=n {
            for m in 0..=n - l {
                s += trinom_pmf(n, q1, q2, l, m).unwrap();
            }
        }
        prop_assert!((s - 1.0).abs() < 1e-12);
        let mut s = 0.0;
        for l in 0..=p {
            for m in 0..=p {
                s += z_joint_pmf(n, q1, q2, p, l, m).unwrap();
            }
        }
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_match_enumeration(
        n in 1u32..=8,
        a in 1usize..4,
        b in 1usize..4,
        p in 0u64..=4,
    ) {
        let (q1, q2) = (common::DYADIC[a], common::DYADIC[b]);
        let z = TruncatedCountModel::new(n as u64, q1, p).unwrap();
        let (mean, var) = common::z_moments(n, q1, p);
        prop_assert!((z_mean(&z) - mean).abs() < 1e-12);
        prop_assert!((z_var(&z) - var).abs() < 1e-12);
        prop_assert!((z_cov(n as u64, q1, q2, p).unwrap() - common::z_cov(n, q1, q2, p)).abs() < 1e-12);
        prop_assert!((cov_z_m(n as u64, q1, q2, p).unwrap() - common::cov_z_m(n, q1, q2, p)).abs() < 1e-12);
    }

    #[test]
    fn conditional_identity(n in 1u64..400, a in 1u32..6, b in 1u32..8, l in 0u64..10) {
        let (qk, qm) = (2f64.powi(-(a as i32)), 2f64.powi(-(b as i32)));
        prop_assume!(qk + qm <= 1.0 && l <= n);
        let lhs = terminal_first_moment(n, qk, qm, l).unwrap();
        let rhs = conditional_terminal_mean(n, qk, qm, l) * binom_pmf(&CountModel::new(n, qk).unwrap(), l).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn complex_kernel_stays_complex() {
    let v = evaluate(&KernelId::K4, &[0.0, 0.0, 0.0], &[std::f64::consts::PI, 0.0, 0.0]).unwrap();
    assert!((v - Complex64::new(-1.0 / std::f64::consts::PI, 0.0)).norm() < 1e-15);
}
