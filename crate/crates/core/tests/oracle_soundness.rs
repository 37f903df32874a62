use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revcurve_core::curves::random_concave_curve;
use revcurve_core::mechanisms::ear_optimize;
use revcurve_core::oracle::{
    brute_force_ear, ex_ante_program, ex_ante_revenue_lp, simplex_solve, vertex_enumeration, DiscreteTypeSpace,
    LinearProgram, LpStatus, Sense,
};
use revcurve_core::Distribution;

#[test]
fn simplex_matches_vertex_enumeration_on_two_by_two_spaces() {
    let value_pairs = [[0.5, 1.0], [1.0, 2.0], [0.2, 3.0], [1.0, 1.5]];
    let prob_pairs = [[0.5, 0.5], [0.3, 0.7], [0.9, 0.1]];
    let budget_pairs = [[0.1, 1.0], [0.0, 2.0], [0.5, 0.8], [0.3, f64::INFINITY]];
    let quantiles = [0.0, 0.1, 0.35, 0.6, 0.9, 1.0];
    let mut checked = 0;
    for values in &value_pairs {
        for vp in &prob_pairs {
            for budgets in &budget_pairs {
                for bp in &prob_pairs {
                    let v = Distribution::discrete(values, vp).unwrap();
                    let space = if budgets[1].is_finite() {
                        DiscreteTypeSpace::private_budget(&v, &Distribution::discrete(budgets, bp).unwrap()).unwrap()
                    } else {
                        // An unbounded budget level cannot be a distribution
                        // support point, so pair it with a public budget.
                        DiscreteTypeSpace::public_budget(&v, budgets[0]).unwrap()
                    };
                    for &q in &quantiles {
                        let lp = ex_ante_program(&space, q).unwrap();
                        let simplex = simplex_solve(&lp).unwrap();
                        let exact = vertex_enumeration(&lp);
                        match exact {
                            Some(best) => {
                                assert_eq!(simplex.status, LpStatus::Optimal, "{values:?} {budgets:?} q={q}");
                                assert!(
                                    (simplex.objective - best).abs() <= 1e-9,
                                    "{values:?} {vp:?} {budgets:?} {bp:?} q={q}: simplex {} vs vertices {best}",
                                    simplex.objective
                                );
                            }
                            None => assert_eq!(simplex.status, LpStatus::Infeasible, "{values:?} {budgets:?} q={q}"),
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    assert_eq!(checked, 4 * 3 * 4 * 3 * 6);
}

/// Allocation/payment form for two values and one public budget: IR, IC
/// between the two reports, payments within the budget, mass exactly `q`.
fn direct_program(values: [f64; 2], probs: [f64; 2], budget: f64, q: f64) -> LinearProgram {
    // Variables: x1, x2, p1, p2.
    let mut lp = LinearProgram::new(vec![0.0, 0.0, probs[0], probs[1]]);
    lp.upper = vec![1.0, 1.0, budget, budget];
    for i in 0..2 {
        let mut ir = vec![0.0; 4];
        ir[i] = -values[i];
        ir[2 + i] = 1.0;
        lp.constrain(ir, Sense::Le, 0.0);
        let j = 1 - i;
        let mut ic = vec![0.0; 4];
        ic[j] = values[i];
        ic[2 + j] = -1.0;
        ic[i] = -values[i];
        ic[2 + i] = 1.0;
        lp.constrain(ic, Sense::Le, 0.0);
    }
    lp.constrain(vec![probs[0], probs[1], 0.0, 0.0], Sense::Eq, q);
    lp
}

#[test]
fn threshold_form_agrees_with_direct_mechanism_program() {
    for values in [[0.5, 1.0], [1.0, 2.0], [0.2, 3.0]] {
        for probs in [[0.5, 0.5], [0.3, 0.7], [0.9, 0.1]] {
            for budget in [0.1, 0.4, 0.9, 5.0] {
                let space = DiscreteTypeSpace::public_budget(&Distribution::discrete(&values, &probs).unwrap(), budget)
                    .unwrap();
                for q in [0.05, 0.2, 0.5, 0.8, 1.0] {
                    let direct = vertex_enumeration(&direct_program(values, probs, budget, q)).unwrap();
                    let threshold = ex_ante_revenue_lp(&space, q).unwrap().objective;
                    assert!(
                        (direct - threshold).abs() <= 1e-9,
                        "{values:?} {probs:?} w={budget} q={q}: direct {direct} vs threshold {threshold}"
                    );
                }
            }
        }
    }
}

#[test]
fn water_filling_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ea12);
    let step = 0.01;
    for trial in 0..100 {
        let curves: Vec<_> = (0..3).map(|_| random_concave_curve(&mut rng, 5)).collect();
        let exact = ear_optimize(&curves).unwrap().revenue;
        let grid = brute_force_ear(&curves, step).unwrap();
        let slope = curves.iter().map(|c| c.slope(0.0).abs()).fold(0.0, f64::max);
        assert!(grid <= exact + 1e-12, "trial {trial}: grid {grid} beats water-filling {exact}");
        assert!(exact - grid <= 3.0 * step * slope, "trial {trial}: gap {} exceeds 3·step·slope", exact - grid);
    }
}
