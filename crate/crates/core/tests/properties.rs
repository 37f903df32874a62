use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revcurve_core::closeness::{alpha_for_beta, eta, zeta};
use revcurve_core::curves::{offer_curve, quantile_at_price, random_concave_curve};
use revcurve_core::mechanisms::{ap_optimize, ear_optimize};
use revcurve_core::{Agent, AgentModel, Distribution, RevenueCurve};

fn distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.0..5.0f64, 0.1..5.0f64).prop_map(|(a, w)| Distribution::uniform(a, a + w).unwrap()),
        (1.5..200.0f64).prop_map(|h| Distribution::equal_revenue(h).unwrap()),
        (0.2..5.0f64).prop_map(|r| Distribution::exponential(r).unwrap()),
        prop::collection::vec((0.0..10.0f64, 0.05..1.0f64), 1..6).prop_map(|pts| {
            let (v, w): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / total).collect();
            Distribution::discrete(&v, &p).unwrap()
        }),
    ]
}

/// Non-negative piecewise-linear curve through the origin, not necessarily concave.
fn curve() -> impl Strategy<Value = RevenueCurve> {
    prop::collection::vec((0.01..1.0f64, 0.0..3.0f64), 1..8).prop_map(|mut pts| {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
        let mut knots = vec![(0.0, 0.0)];
        knots.extend(pts);
        if knots.last().unwrap().0 < 1.0 {
            let v = knots.last().unwrap().1;
            knots.push((1.0, v * 0.5));
        }
        RevenueCurve::new(knots).unwrap()
    })
}

fn concave_set() -> impl Strategy<Value = Vec<RevenueCurve>> {
    (any::<u64>(), 1..6usize).prop_map(|(seed, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| random_concave_curve(&mut rng, 5)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_demand_round_trips_through_survival(d in distribution(), q in 0.001..0.999f64) {
        let v = d.inverse_demand(q);
        prop_assert!(d.survival(v) >= q - 1e-9);
        // Strictly above V(q) fewer than q of the types remain.
        prop_assert!(d.survival_strict(v) <= q + 1e-9);
    }

    #[test]
    fn survival_is_nonincreasing(d in distribution(), a in 0.0..12.0f64, b in 0.0..12.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.survival(lo) >= d.survival(hi) - 1e-12);
        prop_assert!(d.cdf(lo) <= d.cdf(hi) + 1e-12);
    }

    #[test]
    fn offer_curves_are_nonincreasing(
        values in distribution(),
        budget in 0.05..5.0f64,
        a in 0.0..12.0f64,
        b in 0.0..12.0f64,
        private in any::<bool>(),
    ) {
        let model = if private {
            AgentModel::PrivateBudget { values, budgets: Distribution::uniform(0.0, 2.0 * budget).unwrap() }
        } else {
            AgentModel::PublicBudget { values, budget }
        };
        let offer = offer_curve(&Agent::new("x", model).unwrap()).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(offer.accept_probability(lo) >= offer.accept_probability(hi) - 1e-12);
    }

    #[test]
    fn hull_is_idempotent_concave_and_dominating(c in curve()) {
        let h = c.hull();
        prop_assert!(h.is_concave());
        let again = h.hull();
        prop_assert_eq!(again.knots(), h.knots());
        for k in 0..=64 {
            let q = k as f64 / 64.0;
            prop_assert!(h.eval(q) >= c.eval(q) - 1e-12);
        }
        prop_assert!((h.max_value() - c.max_value()).abs() <= 1e-12);
    }

    #[test]
    fn quantile_at_price_is_the_last_quantile_clearing_the_price(c in curve(), p in 0.01..20.0f64) {
        let h = c.hull();
        let q = quantile_at_price(p, &h);
        if q > 0.0 {
            prop_assert!(h.eval(q) >= q * p * (1.0 - 1e-9));
        }
        if q < 1.0 {
            let beyond = (q + 1e-3).min(1.0);
            prop_assert!(h.eval(beyond) < beyond * p * (1.0 + 1e-9));
        }
    }

    #[test]
    fn closeness_parameters_are_ordered(p in curve(), scale in 1.0..3.0f64) {
        let knots: Vec<(f64, f64)> = p.hull().knots().iter().map(|&(q, v)| (q, v * scale)).collect();
        let r = RevenueCurve::new(knots).unwrap();
        let z = zeta(&p, &r);
        let e = eta(&p, &r);
        prop_assert!(e <= z * (1.0 + 1e-9), "eta {} > zeta {}", e, z);
        let a1 = alpha_for_beta(&p, &r, 1.0).unwrap();
        prop_assert!(z <= a1 * (1.0 + 1e-9), "zeta {} > alpha(1) {}", z, a1);
        for beta in [1.5, 2.0, 4.0] {
            let a = alpha_for_beta(&p, &r, beta).unwrap();
            prop_assert!(z <= a * beta * (1.0 + 1e-9), "zeta {} > alpha {} x beta {}", z, a, beta);
        }
    }

    #[test]
    fn anonymous_pricing_never_beats_the_relaxation(curves in concave_set()) {
        let ap = ap_optimize(&curves).unwrap().revenue;
        let ear = ear_optimize(&curves).unwrap().revenue;
        prop_assert!(ap <= ear * (1.0 + 1e-9) + 1e-12, "AP {} > EAR {}", ap, ear);
    }
}
