use num::Complex;
use proptest::prelude::*;
use sregular::bounds::{self, BoundsContext, SubsetProfile};
use sregular::catalog;
use sregular::graphs::{check_s_regular, coarsest_equitable_partition, sample_configuration_model};
use sregular::quotient::{quotient_eigen, validate_quotient};
use sregular::treewalks::{brute_force_tree_walks_upto, stieltjes, walk_recurrence, GfEvaluator, Weights};
use sregular::QuotientSpec;

/// `s_ij = t_ij n_j` with symmetric `t` always balances with sizes `n`.
fn balanced_spec() -> impl Strategy<Value = (QuotientSpec, Vec<usize>)> {
    (1usize..=3).prop_flat_map(|k| {
        (prop::collection::vec(1usize..=3, k), prop::collection::vec(0u32..=2, k * k)).prop_map(move |(n, raw)| {
            let t = |i: usize, j: usize| raw[i.min(j) * k + i.max(j)];
            let s = (0..k).map(|i| (0..k).map(|j| t(i, j) * n[j] as u32).collect()).collect();
            (QuotientSpec::new(s).unwrap(), n)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recurrence_matches_tree_oracle((spec, _) in balanced_spec()) {
        let w = Weights::<i64>::integral(&spec).unwrap();
        let table = walk_recurrence(&spec, &w, 8);
        for cell in 0..spec.k() {
            let oracle = brute_force_tree_walks_upto(&spec, &w, cell, 8, 5_000_000).unwrap();
            prop_assert_eq!(table.cell(cell), oracle.as_slice());
        }
    }

    #[test]
    fn quotient_eigenpairs_are_accurate((spec, n) in balanced_spec()) {
        prop_assert!(validate_quotient(&spec).balance.is_some());
        let spec = spec.with_sizes(n).unwrap();
        let q = quotient_eigen(&spec).unwrap();
        prop_assert!(q.max_relative_residual(&spec) < 1e-10);
        prop_assert!(q.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sampled_two_cell_graphs_are_regular(seed in any::<u64>(), half in 15usize..=60) {
        let spec = catalog::two_cell();
        let g = sample_configuration_model(&spec, &[half, half], seed, 10_000).unwrap();
        prop_assert!(check_s_regular(&g, &spec).is_ok());
        let refined = coarsest_equitable_partition(g.graph()).unwrap();
        prop_assert!(check_s_regular(&refined.partition, &refined.quotient).is_ok());
    }

    #[test]
    fn bounds_hold_on_sampled_graphs(seed in any::<u64>(), m in 4usize..=30) {
        let spec = catalog::biregular_2_3();
        let n = vec![3 * m, 2 * m];
        let g = sample_configuration_model(&spec, &n, seed, 10_000).unwrap();
        let ctx = BoundsContext::new(&g, &spec).unwrap();
        let mut rng = sregular::rng::stream(seed, 1);
        let reports = bounds::subset_trial(&ctx, &mut rng, 6).unwrap();
        for r in &reports {
            prop_assert!(r.holds, "{:?}", r);
        }
        let b = ctx.random_profile(&mut rng);
        let c = ctx.random_profile(&mut rng);
        prop_assert!(bounds::eml_tight(&ctx, &b, &c).rhs <= bounds::eml_classic(&ctx, &b, &c).rhs + 1e-12);

        let all = ctx.profile(vec![true; g.n()]).unwrap();
        let expected = bounds::expected_edges(ctx.spec(), &n, &all, &all);
        prop_assert!((expected - 2.0 * g.graph().edge_count() as f64).abs() < 1e-9);

        let ab = bounds::alon_boppana_lower(&spec, &n, bounds::default_ell_range(g.n())).unwrap();
        prop_assert!(ab.check(ctx.lambda_b(), "").holds);
        prop_assert!(ctx.top_eigenvalue_deviation() < 1e-9);
    }

    #[test]
    fn stieltjes_conjugate_symmetry(re in -6.0f64..6.0, im in 0.05f64..3.0) {
        let ev = GfEvaluator::new(&catalog::house_coarse());
        let z = Complex::new(re, im);
        let a = stieltjes(&ev, z).unwrap();
        let b = stieltjes(&ev, z.conj()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y.conj()).norm() < 1e-10);
            prop_assert!(x.im < 0.0);
        }
    }

    #[test]
    fn subset_profiles_are_consistent(mask in prop::collection::vec(any::<bool>(), 12)) {
        let tau: Vec<usize> = (0..12).map(|v| v % 3).collect();
        let p = SubsetProfile::new(mask.clone(), &tau, &[4, 4, 4]).unwrap();
        prop_assert_eq!(p.counts().iter().sum::<usize>(), p.len());
        prop_assert!(p.fractions().iter().all(|&b| (0.0..=1.0).contains(&b)));
        prop_assert_eq!(p.len(), mask.iter().filter(|&&x| x).count());
    }
}

#[test]
fn symmetric_walks_lower_bound_tree_walks() {
    for spec in [QuotientSpec::regular(3), catalog::two_cell(), catalog::house_coarse(), catalog::biregular_2_3()] {
        let table = walk_recurrence(&spec, &Weights::float(&spec), 12);
        for ell in 0..=6 {
            let w = bounds::symmetric_walk_counts(&spec, ell);
            for (cell, wi) in w.iter().enumerate() {
                assert!(*wi <= table.omega(cell, 2 * ell), "cell {cell}, l {ell}");
            }
        }
    }
}
