//! End-to-end acceptance checks. Runs without the libtest harness so each
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

use std::f64::consts::E;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revcurve_cli::Fixture;
use revcurve_core::closeness::{agent_closeness, verify_instance, ClosenessReport, OracleConfig};
use revcurve_core::curves::random_concave_curve;
use revcurve_core::mechanisms::{ap_optimize, ap_revenue, ear_optimize, random_price_revenue_public};
use revcurve_core::oracle::{
    brute_force_ear, ex_ante_curve_oracle, ex_ante_program, quantile_grid, simplex_solve, vertex_enumeration,
    DiscreteTypeSpace, LpStatus,
};
use revcurve_core::{Agent, AgentModel, Distribution, RevenueCurve};

const SEED: u64 = 0x0ac1_e5ce;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Reports from every instance verified along the way, for the transfer check.
#[derive(Default)]
struct Ctx {
    reports: Vec<(String, ClosenessReport)>,
    uniform_pair: Option<ClosenessReport>,
}

impl Ctx {
    fn verify(&mut self, name: &str, agents: &[Agent], config: &OracleConfig) -> ClosenessReport {
        let rep = verify_instance(agents, config).unwrap_or_else(|e| panic!("{name}: {e}"));
        self.reports.push((name.to_string(), rep.clone()));
        rep
    }

    fn uniform_pair(&mut self) -> ClosenessReport {
        if self.uniform_pair.is_none() {
            let rep = self.verify("uniform x uniform", &[uniform_budgeted(uniform())], &OracleConfig::default());
            self.uniform_pair = Some(rep);
        }
        self.uniform_pair.clone().unwrap()
    }
}

fn uniform() -> Distribution {
    Distribution::uniform(0.0, 1.0).unwrap()
}

fn uniform_budgeted(budgets: Distribution) -> Agent {
    Agent::new("f", AgentModel::PrivateBudget { values: uniform(), budgets }).unwrap()
}

fn fixture(reference: &str) -> Fixture {
    Fixture::parse(reference, SEED).unwrap_or_else(|e| panic!("{reference}: {e}"))
}

fn linear_e_bound(ctx: &mut Ctx) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let curves: Vec<RevenueCurve> = (0..n).map(|_| random_concave_curve(&mut rng, 5)).collect();
        let ap = ap_optimize(&curves).unwrap().revenue;
        let ear = ear_optimize(&curves).unwrap().revenue;
        worst = worst.max(ear / ap);
    }
    let rep = ctx.verify("uniform-linear:n=2", &fixture("uniform-linear:n=2").agents, &OracleConfig::default());
    let pass = worst <= E + 1e-6 && (rep.ap - 0.38490).abs() <= 1e-4 && (rep.ear_r - 0.5).abs() <= 1e-6;
    verdict(
        pass,
        format!(
            "worst EAR/AP {worst:.4} over 200 sets (seed {SEED:#x}); two uniforms AP {:.5} EAR {:.6} ratio {:.4}",
            rep.ap, rep.ear_r, rep.ratio
        ),
    )
}

fn public_budget_oracle(ctx: &mut Ctx) -> Verdict {
    let values = uniform().discretize(50).unwrap();
    let mut worst = (0.0f64, 0.0, 0.0);
    for w in [0.1, 0.3, 0.7] {
        let space = DiscreteTypeSpace::public_budget(&values, w).unwrap();
        let r = ex_ante_curve_oracle(&space, 33).unwrap();
        let agent = Agent::new("b", AgentModel::PublicBudget { values: values.clone(), budget: w }).unwrap();
        let p = agent.price_posting_curve(OracleConfig::default().price_grid).unwrap();
        let scale = p.max_value();
        for q in quantile_grid(33) {
            let gap = (r.eval(q) - p.eval(q)).abs() / p.eval(q).max(1e-3 * scale);
            if gap > worst.0 {
                worst = (gap, w, q);
            }
        }
        let continuous = Agent::new("b", AgentModel::PublicBudget { values: uniform(), budget: w }).unwrap();
        ctx.verify(&format!("public-budget:w={w}"), &[continuous], &OracleConfig::default());
    }
    verdict(
        worst.0 <= 0.02,
        format!("largest relative gap {:.4} at w={} q={:.4} (limit 0.02)", worst.0, worst.1, worst.2),
    )
}

fn private_budget_concavity(_: &mut Ctx) -> Verdict {
    let cases =
        [("uniform", uniform()), ("truncated exponential", Distribution::exponential_truncated(1.0, 1.0).unwrap())];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, g) in cases {
        let p = uniform_budgeted(g).price_posting_curve(OracleConfig::default().price_grid).unwrap();
        let c = p.max_convexity(2048);
        pass &= c <= 1e-6;
        parts.push(format!("{name} {c:.2e}"));
    }
    verdict(pass, format!("max second difference: {}", parts.join(", ")))
}

fn private_budget_zeta(ctx: &mut Ctx) -> Verdict {
    let rep = ctx.uniform_pair();
    let c = OracleConfig::default();
    verdict(rep.zeta <= 3.05, format!("zeta {:.4} at oracle {}x{}", rep.zeta, c.value_points, c.budget_points))
}

fn private_budget_eta(ctx: &mut Ctx) -> Verdict {
    let rep = ctx.uniform_pair();
    let max_p = rep.agents[0].p.max_value();
    verdict(rep.eta <= 2.05 && (max_p - 0.19245).abs() <= 1e-4, format!("eta {:.4}, max P {max_p:.5}", rep.eta))
}

fn private_budget_kappa(_: &mut Ctx) -> Verdict {
    let kappa = 1.0 / uniform().exceed_mean_probability();
    let a = agent_closeness(
        &uniform_budgeted(uniform()),
        &OracleConfig { betas: vec![kappa + 1.0], ..OracleConfig::default() },
    )
    .unwrap();
    let alpha = a.alphas[0].1;
    verdict(
        (kappa - 2.0).abs() <= 1e-9 && alpha <= 2.0 + kappa + 0.05,
        format!("kappa {kappa:.4}, alpha(3) {alpha:.4} (limit {:.2})", 2.0 + kappa + 0.05),
    )
}

fn random_price_floor(_: &mut Ctx) -> Verdict {
    let u = uniform();
    let mut worst = f64::INFINITY;
    for k in 1..=20 {
        let w = k as f64 * 0.05;
        let m = w.min(0.5);
        worst = worst.min(random_price_revenue_public(&u, w) - 0.5 * m * (1.0 - m));
    }
    let at_one = random_price_revenue_public(&u, 1.0);
    let at_015 = random_price_revenue_public(&u, 0.15);
    let pass = worst >= -1e-8 && (at_one - 1.0 / 6.0).abs() <= 1e-6 && (at_015 - 0.06441).abs() <= 1e-6;
    verdict(
        pass,
        format!(
            "min margin over the lower bound {worst:.3e}; w=1 gives {at_one:.7} (1/6); w=0.15 gives {at_015:.7} vs 0.06441 (w²/2 - w³/3 + w(1-w)²/2 = {:.7})",
            uniform_closed_form(0.15)
        ),
    )
}

/// Random price `r ~ U(0,1)` against a known budget `w <= 1`.
fn uniform_closed_form(w: f64) -> f64 {
    w * w / 2.0 - w.powi(3) / 3.0 + w * (1.0 - w).powi(2) / 2.0
}

fn risk_averse(ctx: &mut Ctx) -> Verdict {
    let f = fixture("risk-equal-revenue:h=100,C=5");
    let rep = ctx.verify(&f.reference, &f.agents, &OracleConfig::default());
    let a = &rep.agents[0];
    let values = Distribution::equal_revenue(100.0).unwrap();
    let giveaway = values.expectation(|v| (v - 5.0).max(0.0));
    let ln20 = 20f64.ln();
    let max_p = a.p.max_value();
    verdict(
        a.zeta <= 2.0 + ln20 + 1e-6 && (giveaway - ln20).abs() <= 1e-6 && (max_p - 1.0).abs() <= 1e-6,
        format!("zeta {:.6} (limit {:.6}), giveaway {giveaway:.6}, max P {max_p:.6}", a.zeta, 2.0 + ln20),
    )
}

fn overpay(ctx: &mut Ctx) -> Verdict {
    let f = fixture("overpay:h=100");
    let half = 0.5 * Distribution::equal_revenue(100.0).unwrap().mean();
    let closed = (1.0 + 100f64.ln()) / 2.0;
    let max_p = f.agents[0].price_posting_curve(OracleConfig::default().price_grid).unwrap().max_value();
    ctx.verify(&f.reference, &f.agents, &OracleConfig::default());
    verdict(
        (half - closed).abs() <= 1e-6 && (max_p - 1.0).abs() <= 1e-6,
        format!("half welfare {half:.6} vs (1+ln 100)/2 = {closed:.6}, max P {max_p:.6}"),
    )
}

fn mhr_fail(ctx: &mut Ctx) -> Verdict {
    let mut ratios = Vec::new();
    let mut last = None;
    for n in [5, 10, 20, 30] {
        let f = fixture(&format!("mhr-fail:n={n}"));
        let rep = ctx.verify(&f.reference, &f.agents, &OracleConfig::default());
        ratios.push(rep.ratio);
        last = Some(rep);
    }
    let rep = last.unwrap();
    let monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    verdict(
        rep.ap <= 2.1 && rep.ear_r >= 3.99 && monotone,
        format!(
            "n=30: AP {:.4}, EAR {:.4} (needs >= 3.99); ratios n=5,10,20,30: {}; {} assumption violations flagged",
            rep.ap,
            rep.ear_r,
            shown.join(", "),
            rep.assumption_violations.len()
        ),
    )
}

fn tightness(ctx: &mut Ctx) -> Verdict {
    let f = fixture("tightness:alpha=2,beta=4");
    let rep = ctx.verify(&f.reference, &f.agents, &OracleConfig::default());
    let rs: Vec<&RevenueCurve> = rep.agents.iter().map(|a| &a.r).collect();
    let ap_r = ap_revenue(&rs, 8.0).revenue;
    let sale = ap_r / 8.0;
    let gap = ap_r / rep.ap;
    verdict(
        ap_r >= 6.0 - 1e-6 && rep.ear_hull_p <= 8.0 / 3.0 + 1e-6 && gap >= 2.25 && (sale - 0.75).abs() <= 1e-9,
        format!(
            "AP(R) at 8 = {ap_r:.6}, sale probability {sale:.6}, EAR(P) {:.6}, AP(P) {:.6}, gap {gap:.4}, eta {:.4}",
            rep.ear_hull_p, rep.ap, rep.eta
        ),
    )
}

fn oracle_soundness(_: &mut Ctx) -> Verdict {
    let value_pairs = [[0.5, 1.0], [1.0, 2.0], [0.2, 3.0], [1.0, 1.5]];
    let prob_pairs = [[0.5, 0.5], [0.3, 0.7], [0.9, 0.1]];
    let budget_pairs = [[0.1, 1.0], [0.0, 2.0], [0.5, 0.8]];
    let mut worst_lp = 0.0f64;
    let mut spaces = 0;
    for values in &value_pairs {
        for vp in &prob_pairs {
            let v = Distribution::discrete(values, vp).unwrap();
            for budgets in &budget_pairs {
                for bp in &prob_pairs {
                    let b = Distribution::discrete(budgets, bp).unwrap();
                    let space = DiscreteTypeSpace::private_budget(&v, &b).unwrap();
                    spaces += 1;
                    for q in [0.0, 0.1, 0.35, 0.6, 0.9, 1.0] {
                        let lp = ex_ante_program(&space, q).unwrap();
                        let s = simplex_solve(&lp).unwrap();
                        match vertex_enumeration(&lp) {
                            Some(best) if s.status == LpStatus::Optimal => {
                                worst_lp = worst_lp.max((s.objective - best).abs())
                            }
                            None if s.status == LpStatus::Infeasible => {}
                            _ => worst_lp = f64::INFINITY,
                        }
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let step = 0.01;
    let mut worst_ear = f64::NEG_INFINITY;
    for _ in 0..100 {
        let curves: Vec<RevenueCurve> = (0..3).map(|_| random_concave_curve(&mut rng, 5)).collect();
        let exact = ear_optimize(&curves).unwrap().revenue;
        let grid = brute_force_ear(&curves, step).unwrap();
        let slope = curves.iter().map(|c| c.slope(0.0).abs()).fold(0.0, f64::max);
        // Positive means outside the allowance, or the grid beating the optimum.
        let excess = if grid > exact + 1e-12 { grid - exact } else { (exact - grid) - 3.0 * step * slope };
        worst_ear = worst_ear.max(excess);
    }
    verdict(
        worst_lp <= 1e-9 && worst_ear <= 0.0,
        format!(
            "{spaces} two-by-two spaces: largest simplex/vertex gap {worst_lp:.2e}; water-filling worst margin {worst_ear:.2e} over 100 instances"
        ),
    )
}

fn transfer_bounds(ctx: &mut Ctx) -> Verdict {
    let failing: Vec<&str> = ctx
        .reports
        .iter()
        .filter(|(_, r)| !(r.ap_transfer_holds && r.ear_transfer_holds))
        .map(|(n, _)| n.as_str())
        .collect();
    verdict(
        !ctx.reports.is_empty() && failing.is_empty(),
        if failing.is_empty() {
            format!("{} verified instances, both transfers hold on all", ctx.reports.len())
        } else {
            format!("{} of {} instances fail: {}", failing.len(), ctx.reports.len(), failing.join(", "))
        },
    )
}

type Criterion = (&'static str, fn(&mut Ctx) -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("linear e-bound", linear_e_bound),
        ("public budget oracle", public_budget_oracle),
        ("private budget concavity", private_budget_concavity),
        ("private budget zeta", private_budget_zeta),
        ("private budget eta", private_budget_eta),
        ("private budget kappa", private_budget_kappa),
        ("random price", random_price_floor),
        ("risk averse", risk_averse),
        ("overpay", overpay),
        ("mhr fail", mhr_fail),
        ("tightness", tightness),
        ("oracle soundness", oracle_soundness),
        ("transfer bounds", transfer_bounds),
    ];
    let mut ctx = Ctx::default();
    let mut failed = 0;
    let start = Instant::now();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| check(&mut ctx))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "criterion {:>2} {name}: {} ({}) [{:.1}s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
