use gergm::diagnostics::{geweke_default, quantile_type7};
use gergm::network::{clamp_to_unit, edge_indices, BOUNDARY_OFFSET};
use gergm::samplers::{gibbs_inverse_cdf, tn_logpdf, TruncatedNormal};
use gergm::statistics::stat_value;
use gergm::transform::{from_restricted, to_restricted};
use gergm::{Family, ObservedNetwork, RestrictedNetwork, StatKind, StatSpec, TransformSpec, Weighting};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = StatKind> {
    prop::sample::select(StatKind::ALL.to_vec())
}

fn network(n: std::ops::Range<usize>) -> impl Strategy<Value = RestrictedNetwork> {
    n.prop_flat_map(|n| prop::collection::vec(0.0f64..=1.0, n * n).prop_map(move |w| RestrictedNetwork::new(n, w).unwrap()))
}

proptest! {
    #[test]
    fn edge_order_round_trips(x in network(2..7)) {
        let edges: Vec<_> = x.edges().collect();
        prop_assert_eq!(edges.len(), x.n() * (x.n() - 1));
        let idx: Vec<_> = edges.iter().map(|&(i, j, _)| (i, j)).collect();
        prop_assert_eq!(idx, edge_indices(x.n()).collect::<Vec<_>>());
        let rebuilt = RestrictedNetwork::from_edges(x.n(), edges.clone()).unwrap();
        prop_assert_eq!(rebuilt.edges().collect::<Vec<_>>(), edges);
    }

    #[test]
    fn clamp_keeps_interior_and_clips_boundary(n in 2usize..6, raw in prop::collection::vec(-1e-12f64..=1.0 + 1e-12, 36)) {
        let w = &raw[..n * n];
        let x = clamp_to_unit(n, w).unwrap();
        for (i, j, v) in x.edges() {
            prop_assert!((BOUNDARY_OFFSET..=1.0 - BOUNDARY_OFFSET).contains(&v));
            let orig = w[i * n + j];
            if (BOUNDARY_OFFSET..=1.0 - BOUNDARY_OFFSET).contains(&orig) {
                prop_assert_eq!(v, orig);
            }
        }
    }

    #[test]
    fn modes_agree_at_alpha_one(x in network(3..6), k in kind(), normalize in any::<bool>()) {
        let vals: Vec<f64> = [Weighting::None, Weighting::Inside, Weighting::Outside]
            .iter()
            .map(|&m| stat_value(&x, &StatSpec::new(k, 1.0, m, normalize).unwrap()))
            .collect();
        prop_assert!((vals[0] - vals[1]).abs() <= 1e-12 * vals[0].abs().max(1.0));
        prop_assert!((vals[0] - vals[2]).abs() <= 1e-12 * vals[0].abs().max(1.0));
    }

    #[test]
    fn outside_weighting_is_power_of_raw(x in network(3..6), k in kind(), alpha in 0.05f64..1.0) {
        let raw = stat_value(&x, &StatSpec::linear(k));
        let out = stat_value(&x, &StatSpec::outside(k, alpha).unwrap());
        prop_assert!((out - raw.powf(alpha)).abs() <= 1e-12 * out.abs().max(1.0));
    }

    #[test]
    fn statistics_are_monotone_in_each_edge(
        x in network(3..6), k in kind(), alpha in 0.1f64..=1.0, inside in any::<bool>(), e in 0usize..30, bump in 0.0f64..0.5,
    ) {
        let n = x.n();
        let (i, j) = edge_indices(n).nth(e % (n * (n - 1))).unwrap();
        let spec = if inside { StatSpec::inside(k, alpha).unwrap() } else { StatSpec::outside(k, alpha).unwrap() };
        let y = RestrictedNetwork::from_fn(n, |a, b| if (a, b) == (i, j) { (x.get(a, b) + bump).min(1.0) } else { x.get(a, b) }).unwrap();
        prop_assert!(stat_value(&y, &spec) >= stat_value(&x, &spec) - 1e-12);
    }

    #[test]
    fn linear_statistics_are_affine_in_each_edge(x in network(3..6), k in kind(), e in 0usize..30) {
        let n = x.n();
        let (i, j) = edge_indices(n).nth(e % (n * (n - 1))).unwrap();
        let at = |w: f64| {
            let y = RestrictedNetwork::from_fn(n, |a, b| if (a, b) == (i, j) { w } else { x.get(a, b) }).unwrap();
            stat_value(&y, &StatSpec::linear(k))
        };
        let second = at(0.9) - 2.0 * at(0.5) + at(0.1);
        prop_assert!(second.abs() < 1e-10 * at(0.9).abs().max(1.0));
    }

    #[test]
    fn transform_round_trips_and_is_increasing(
        vals in prop::collection::vec(-5.0f64..5.0, 6), loc in -2.0f64..2.0, scale in 0.2f64..3.0, cauchy in any::<bool>(),
    ) {
        let family = if cauchy { Family::Cauchy } else { Family::Gaussian };
        let tspec = TransformSpec::intercept(family, 3, loc, scale).unwrap();
        let mut k = 0;
        let y = ObservedNetwork::from_fn(3, |_, _| { k += 1; vals[k - 1] }).unwrap();
        let x = to_restricted(&y, &tspec).unwrap();
        let back = from_restricted(&x, &tspec).unwrap();
        for ((_, _, a), (_, _, b)) in y.edges().zip(back.edges()) {
            let z = (a - loc) / scale;
            if z.abs() < 5.0 {
                prop_assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
            }
        }
        let ys: Vec<f64> = y.edge_vector();
        let xs: Vec<f64> = x.edge_vector();
        for a in 0..6 {
            for b in 0..6 {
                if ys[a] < ys[b] {
                    prop_assert!(xs[a] <= xs[b]);
                }
            }
        }
    }

    #[test]
    fn gibbs_inverse_cdf_is_monotone_in_unit_interval(s in -50.0f64..50.0, u in 0.0f64..1.0, du in 0.0f64..0.5) {
        let a = gibbs_inverse_cdf(s, u);
        let b = gibbs_inverse_cdf(s, (u + du).min(1.0));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn truncated_normal_draws_stay_in_support(mu in -2.0f64..3.0, sigma in 0.01f64..5.0, seed in any::<u64>()) {
        let tn = TruncatedNormal::unit(mu, sigma).unwrap();
        let mut rng = gergm::rng::seeded(seed);
        for _ in 0..20 {
            let w = tn.sample(&mut rng);
            prop_assert!((0.0..=1.0).contains(&w));
            prop_assert!(tn_logpdf(w, mu, sigma).unwrap().is_finite());
        }
    }

    #[test]
    fn geweke_is_affine_invariant(seed in any::<u64>(), a in 0.1f64..10.0, b in -100.0f64..100.0) {
        use rand::Rng;
        let mut rng = gergm::rng::seeded(seed);
        let trace: Vec<f64> = (0..400).map(|_| rng.gen_range(0.0..1.0)).collect();
        let moved: Vec<f64> = trace.iter().map(|v| a * v + b).collect();
        let (z0, z1) = (geweke_default(&trace).unwrap(), geweke_default(&moved).unwrap());
        prop_assert!((z0 - z1).abs() < 1e-8 * z0.abs().max(1.0), "{} vs {}", z0, z1);
    }

    #[test]
    fn type7_quantiles_are_non_decreasing(data in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let qs: Vec<f64> = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&p| quantile_type7(&data, p)).collect();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
    }
}
