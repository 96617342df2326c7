use cnnmrf::data::LabelMap;
use cnnmrf::metrics::{aa, confusion, kappa, oa, ConfusionMatrix};
use cnnmrf::mrf::{
    alpha_expansion_traced, expansion_move, max_flow_min_cut, EnergyModel, FlowNetwork, Neighborhood, CONVERGENCE_TOL,
};
use cnnmrf::regularize::{majority_vote_labels, median_filter_labels, WindowSpec};
use cnnmrf::synth::gaussian_abundance_fields;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>, f64)> {
    (1usize..5, 1usize..5, 2usize..5).prop_flat_map(|(h, w, k)| {
        (
            Just(h),
            Just(w),
            Just(k),
            prop::collection::vec(0.0..6.0f64, h * w * k),
            0.0..8.0f64,
        )
    })
}

fn model(h: usize, w: usize, k: usize, unary: Vec<f64>, weight: f64) -> EnergyModel {
    EnergyModel::from_unary(h, w, k, unary, weight, Neighborhood::Four).unwrap()
}

fn argmin_map(m: &EnergyModel, h: usize, w: usize, k: usize) -> LabelMap {
    LabelMap::new(h, w, k, m.unary_argmin()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn expansion_never_raises_cost((h, w, k, unary, weight) in instance()) {
        let m = model(h, w, k, unary, weight);
        let init = argmin_map(&m, h, w, k);
        let (out, trace) = alpha_expansion_traced(&m, &init, 50).unwrap();
        for pair in trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-12);
        }
        prop_assert!(m.cost(out.labels()).unwrap() <= m.cost(init.labels()).unwrap() + 1e-12);
        // converged: no single move improves further
        let base = m.cost(out.labels()).unwrap();
        for alpha in 1..=k as u32 {
            let moved = expansion_move(&m, &out, alpha).unwrap();
            prop_assert!(m.cost(moved.labels()).unwrap() >= base - CONVERGENCE_TOL);
        }
    }

    #[test]
    fn per_pixel_shift_keeps_the_labeling((h, w, k, unary, weight) in instance(), shift in prop::collection::vec(0.0..3.0f64, 16)) {
        let m = model(h, w, k, unary.clone(), weight);
        let shifted: Vec<f64> = unary.iter().enumerate().map(|(i, u)| u + shift[(i / k) % 16]).collect();
        let s = model(h, w, k, shifted, weight);
        let init = argmin_map(&m, h, w, k);
        let a = alpha_expansion_traced(&m, &init, 50).unwrap().0;
        let b = alpha_expansion_traced(&s, &init, 50).unwrap().0;
        prop_assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn flow_equals_returned_cut(n in 2usize..9, arcs in prop::collection::vec((0usize..8, 0usize..8, 0.0..10.0f64), 0..30)) {
        let mut net = FlowNetwork::new(n, 0, n - 1).unwrap();
        for (a, b, c) in arcs {
            if a < n && b < n && a != b {
                net.add_arc(a, b, c).unwrap();
            }
        }
        let cut = max_flow_min_cut(&net).unwrap();
        prop_assert!(cut.source_side[0]);
        prop_assert!(!cut.source_side[n - 1]);
        prop_assert!((net.cut_capacity(&cut.source_side) - cut.flow_value).abs() < 1e-9);
    }

    #[test]
    fn scores_stay_in_range(counts in prop::collection::vec(0u64..20, 9)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let cm = ConfusionMatrix::from_counts(3, counts).unwrap();
        let o = oa(&cm).unwrap();
        prop_assert!((0.0..=1.0).contains(&o));
        prop_assert!((o - cm.trace() as f64 / cm.total() as f64).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&aa(&cm).unwrap()));
        prop_assert!(kappa(&cm).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn identical_maps_score_perfectly(h in 1usize..6, w in 1usize..6, labels in prop::collection::vec(1u32..4, 36)) {
        let map = LabelMap::new(h, w, 3, labels[..h * w].to_vec()).unwrap();
        let cm = confusion(&map, &map, 3).unwrap();
        prop_assert_eq!(oa(&cm).unwrap(), 1.0);
        prop_assert_eq!(aa(&cm).unwrap(), 1.0);
    }

    #[test]
    fn filters_only_emit_window_labels(h in 1usize..7, w in 1usize..7, labels in prop::collection::vec(1u32..5, 49), side in prop::sample::select(vec![3usize, 5, 7])) {
        let map = LabelMap::new(h, w, 4, labels[..h * w].to_vec()).unwrap();
        let win = WindowSpec::new(side).unwrap();
        let lo = *map.labels().iter().min().unwrap();
        let hi = *map.labels().iter().max().unwrap();
        for out in [median_filter_labels(&map, win).unwrap(), majority_vote_labels(&map, win).unwrap()] {
            prop_assert!(out.labels().iter().all(|&l| (lo..=hi).contains(&l)));
            prop_assert!(out.labels().iter().all(|l| map.labels().contains(l)));
        }
    }

    #[test]
    fn constant_maps_are_fixed(h in 1usize..6, w in 1usize..6, label in 1u32..4) {
        let map = LabelMap::new(h, w, 3, vec![label; h * w]).unwrap();
        let win = WindowSpec::new(3).unwrap();
        prop_assert_eq!(median_filter_labels(&map, win).unwrap(), map.clone());
        prop_assert_eq!(majority_vote_labels(&map, win).unwrap(), map);
    }

    #[test]
    fn abundances_are_simplex_points(h in 1usize..12, w in 1usize..12, k in 1usize..6, smooth in 0.5..6.0f64, sharp in 0.1..20.0f64, seed in 0u64..500) {
        let field = gaussian_abundance_fields(h, w, k, smooth, sharp, seed).unwrap();
        for a in field.values().chunks(k) {
            prop_assert!(a.iter().all(|&v| v >= 0.0));
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
