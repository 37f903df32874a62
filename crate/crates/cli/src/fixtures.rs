//! Built-in instances with known expected values.
//!
//! A fixture reference is `name` or `name:params`, where params are
//! comma-separated and either `key=value` or positional in declared order,
//! e.g. `mhr-fail:n=30`, `risk-equal-revenue:100,5`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revcurve_core::closeness::{verify_instance, ClosenessReport, OracleConfig};
use revcurve_core::curves::random_concave_curve;
use revcurve_core::mechanisms::ap_revenue;
use revcurve_core::{Agent, AgentModel, Distribution, RevenueCurve};

use crate::{CliError, Result};

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Asserted for the example by its construction.
    Stated,
    /// Closed form worked out by hand from the construction.
    ClosedForm,
    /// Found by this implementation (grid search or the like), with no
    /// independent reference value.
    Computed,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Stated => "stated",
            Origin::ClosedForm => "closed-form",
            Origin::Computed => "computed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Check {
    Within(f64),
    AtMost,
    AtLeast,
}

impl Check {
    fn holds(self, actual: f64, target: f64) -> bool {
        match self {
            Check::Within(tol) => (actual - target).abs() <= tol,
            Check::AtMost => actual <= target,
            Check::AtLeast => actual >= target,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Within(tol) => write!(f, "±{tol:e}"),
            Check::AtMost => f.write_str("<="),
            Check::AtLeast => f.write_str(">="),
        }
    }
}

/// Quantity an expectation is checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measure {
    /// Largest value of agent `i`'s price-posting curve.
    MaxP(usize),
    /// Largest positive second difference of agent `i`'s price-posting curve
    /// on a 2048 grid, relative to its maximum.
    Convexity(usize),
    /// Optimal anonymous pricing revenue on the agents' own offers.
    Ap,
    /// Ex-ante relaxation on the ex-ante curves.
    Ear,
    /// `Ear / Ap`.
    Ratio,
    Zeta(usize),
    Eta(usize),
    Alpha {
        agent: usize,
        beta: f64,
    },
    /// Agent `i`'s ex-ante curve at `q = 1`.
    RAtOne(usize),
    /// Revenue of always allocating and charging `max(0, v - capacity)`.
    Giveaway {
        agent: usize,
        capacity: f64,
    },
    /// Half of agent `i`'s expected value.
    HalfWelfare(usize),
    /// Anonymous pricing revenue at `price` with the ex-ante curves as bidders.
    ApOnR {
        price: f64,
    },
    /// Probability that someone buys at `price` with the ex-ante curves as bidders.
    SaleOnR {
        price: f64,
    },
    /// Ex-ante relaxation on the hulled price-posting curves.
    EarOnP,
    /// `ApOnR { price } / Ap`.
    ApGap {
        price: f64,
    },
    /// Number of agents outside their class guarantee.
    Violations,
    /// 1 if the instance verifies against its bounds, else 0.
    Verified,
}

impl Measure {
    fn needs_report(self) -> bool {
        !matches!(self, Measure::MaxP(_) | Measure::Convexity(_) | Measure::Giveaway { .. } | Measure::HalfWelfare(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expectation {
    pub label: String,
    pub measure: Measure,
    pub target: f64,
    pub check: Check,
    pub origin: Origin,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub actual: f64,
    pub target: f64,
    pub check: Check,
    pub origin: Origin,
    pub note: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    /// Canonical reference, e.g. `mhr-fail:n=30`.
    pub reference: String,
    pub summary: &'static str,
    pub agents: Vec<Agent>,
    pub expectations: Vec<Expectation>,
}

struct Recipe {
    name: &'static str,
    params: &'static [(&'static str, Option<f64>)],
    summary: &'static str,
}

const RECIPES: &[Recipe] = &[
    Recipe { name: "uniform-linear", params: &[("n", Some(2.0))], summary: "n linear agents with uniform[0,1] values" },
    Recipe {
        name: "equal-revenue",
        params: &[("h", Some(10.0))],
        summary: "one linear agent, equal-revenue values on [1,h]",
    },
    Recipe {
        name: "public-budget",
        params: &[("w", Some(0.3))],
        summary: "one agent, uniform[0,1] values, public budget w",
    },
    Recipe {
        name: "private-uniform-mhr",
        params: &[],
        summary: "one agent, uniform[0,1] values and independent uniform[0,1] budget",
    },
    Recipe {
        name: "mhr-fail",
        params: &[("n", Some(30.0))],
        summary: "agents i=1..n with value i and budget i w.p. 1/i^2, else 0",
    },
    Recipe {
        name: "correlated-fail",
        params: &[("h", Some(100.0))],
        summary: "one agent, value density h/((h-1)v^2) on [1,h], budget 2h-v (curve pair)",
    },
    Recipe {
        name: "risk-equal-revenue",
        params: &[("h", Some(100.0)), ("C", Some(5.0))],
        summary: "one capacitated agent, equal-revenue values on [1,h], capacity C",
    },
    Recipe {
        name: "overpay",
        params: &[("h", Some(100.0))],
        summary: "one capacitated agent, equal-revenue values on [1,h], capacity h",
    },
    Recipe {
        name: "tightness",
        params: &[("alpha", Some(2.0)), ("beta", Some(4.0))],
        summary: "two identical curve-pair agents where the transfer bound is tight",
    },
    Recipe {
        name: "random-concave",
        params: &[("n", Some(3.0))],
        summary: "n agents with random concave curves (P = R) drawn from the scenario seed",
    },
];

/// Every fixture at its default parameters.
pub fn fixtures() -> Vec<Fixture> {
    RECIPES.iter().map(|r| Fixture::parse(r.name, 0).expect("defaults build")).collect()
}

impl Fixture {
    /// Resolves a reference; `seed` drives the randomized fixtures.
    pub fn parse(reference: &str, seed: u64) -> Result<Fixture> {
        let bad = |msg: String| CliError::Fixture(format!("{reference}: {msg}"));
        let (name, args) = match reference.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (reference.trim(), ""),
        };
        let recipe = RECIPES.iter().find(|r| r.name == name).ok_or_else(|| {
            let known: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
            bad(format!("unknown fixture; known fixtures are {}", known.join(", ")))
        })?;
        let mut values: Vec<Option<f64>> = recipe.params.iter().map(|p| p.1).collect();
        if !args.is_empty() {
            for (pos, item) in args.split(',').enumerate() {
                let (slot, raw) = match item.split_once('=') {
                    Some((k, v)) => {
                        let k = k.trim();
                        let slot = recipe
                            .params
                            .iter()
                            .position(|p| p.0 == k)
                            .ok_or_else(|| bad(format!("unknown parameter `{k}`")))?;
                        (slot, v.trim())
                    }
                    None if pos < recipe.params.len() => (pos, item.trim()),
                    None => return Err(bad(format!("too many parameters, expected {}", recipe.params.len()))),
                };
                let v: f64 = raw.parse().map_err(|_| bad(format!("`{raw}` is not a number")))?;
                if !v.is_finite() {
                    return Err(bad(format!("`{raw}` is not finite")));
                }
                values[slot] = Some(v);
            }
        }
        let params: Vec<f64> = values
            .iter()
            .zip(recipe.params)
            .map(|(v, p)| v.ok_or_else(|| bad(format!("missing parameter `{}`", p.0))))
            .collect::<Result<_>>()?;
        let canonical = if recipe.params.is_empty() {
            name.to_string()
        } else {
            let parts: Vec<String> = recipe.params.iter().zip(&params).map(|(p, v)| format!("{}={v}", p.0)).collect();
            format!("{name}:{}", parts.join(","))
        };
        let (agents, expectations) = build(name, &params, seed).map_err(|e| bad(e.to_string()))?;
        Ok(Fixture { reference: canonical, summary: recipe.summary, agents, expectations })
    }

    /// Computes every expectation of the fixture on its own agents.
    pub fn evaluate(&self, config: &OracleConfig) -> Result<Vec<Outcome>> {
        let report = if self.expectations.iter().any(|e| e.measure.needs_report()) {
            Some(verify_instance(&self.agents, config)?)
        } else {
            None
        };
        self.expectations
            .iter()
            .map(|e| {
                let actual = measure(e.measure, &self.agents, report.as_ref(), config)?;
                Ok(Outcome {
                    label: e.label.clone(),
                    actual,
                    target: e.target,
                    check: e.check,
                    origin: e.origin,
                    note: e.note.clone(),
                    pass: e.check.holds(actual, e.target),
                })
            })
            .collect()
    }
}

fn measure(m: Measure, agents: &[Agent], report: Option<&ClosenessReport>, config: &OracleConfig) -> Result<f64> {
    let rep = || report.expect("report computed for report measures");
    let r_curves = || -> Vec<&RevenueCurve> { rep().agents.iter().map(|a| &a.r).collect() };
    Ok(match m {
        Measure::MaxP(i) => agents[i].price_posting_curve(config.price_grid)?.max_value(),
        Measure::Convexity(i) => agents[i].price_posting_curve(config.price_grid)?.max_convexity(2048),
        Measure::Ap => rep().ap,
        Measure::Ear => rep().ear_r,
        Measure::Ratio => rep().ratio,
        Measure::Zeta(i) => rep().agents[i].zeta,
        Measure::Eta(i) => rep().agents[i].eta,
        Measure::Alpha { agent, beta } => {
            let a = &rep().agents[agent];
            a.alphas
                .iter()
                .find(|(b, _)| *b == beta)
                .map(|x| x.1)
                .ok_or_else(|| CliError::Fixture(format!("β={beta} is not among the configured betas")))?
        }
        Measure::RAtOne(i) => rep().agents[i].r.eval(1.0),
        Measure::Giveaway { agent, capacity } => values_of(&agents[agent])?.expectation(|v| (v - capacity).max(0.0)),
        Measure::HalfWelfare(i) => 0.5 * values_of(&agents[i])?.mean(),
        Measure::ApOnR { price } => ap_revenue(&r_curves(), price).revenue,
        Measure::SaleOnR { price } => ap_revenue(&r_curves(), price).revenue / price,
        Measure::EarOnP => rep().ear_hull_p,
        Measure::ApGap { price } => ap_revenue(&r_curves(), price).revenue / rep().ap,
        Measure::Violations => rep().assumption_violations.len() as f64,
        Measure::Verified => f64::from(u8::from(rep().pass())),
    })
}

fn values_of(agent: &Agent) -> Result<&Distribution> {
    agent.values().ok_or_else(|| CliError::Fixture(format!("agent {} has no value distribution", agent.id)))
}

fn expect(label: &str, measure: Measure, target: f64, check: Check, origin: Origin, note: &str) -> Expectation {
    Expectation { label: label.to_string(), measure, target, check, origin, note: note.to_string() }
}

fn count(v: f64, name: &str, min: usize, max: usize) -> std::result::Result<usize, String> {
    if v.fract() != 0.0 || v < min as f64 || v > max as f64 {
        return Err(format!("{name} must be an integer in {min}..={max}, got {v}"));
    }
    Ok(v as usize)
}

type Built = (Vec<Agent>, Vec<Expectation>);

fn build(name: &str, params: &[f64], seed: u64) -> std::result::Result<Built, String> {
    let core = |e: revcurve_core::Error| e.to_string();
    let uniform = || Distribution::uniform(0.0, 1.0).map_err(core);
    use Check::*;
    use Origin::*;
    Ok(match name {
        "uniform-linear" => {
            let n = count(params[0], "n", 1, 64)?;
            let agents = (0..n)
                .map(|i| Agent::linear(format!("u{}", i + 1), uniform()?).map_err(core))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            // Best price solves p^n (n + 1) = 1; each agent serves 1/n in the relaxation.
            let nf = n as f64;
            let price = (1.0 / (nf + 1.0)).powf(1.0 / nf);
            let ap = price * nf / (nf + 1.0);
            let ear = if n == 1 { 0.25 } else { 1.0 - 1.0 / nf };
            let expectations = vec![
                expect(
                    "anonymous pricing revenue",
                    Measure::Ap,
                    ap,
                    Within(1e-6),
                    ClosedForm,
                    "p (1 - p^n) at p = (n+1)^(-1/n)",
                ),
                expect("ex-ante relaxation", Measure::Ear, ear, Within(1e-6), ClosedForm, "n q (1 - q) at q = 1/n"),
                expect("ratio within e", Measure::Ratio, std::f64::consts::E, AtMost, Stated, "linear agents"),
            ];
            (agents, expectations)
        }
        "equal-revenue" => {
            let h = params[0];
            let agent = Agent::linear("er", Distribution::equal_revenue(h).map_err(core)?).map_err(core)?;
            let expectations = vec![
                expect("price-posting maximum", Measure::MaxP(0), 1.0, Within(1e-9), Stated, "every price earns 1"),
                expect("anonymous pricing revenue", Measure::Ap, 1.0, Within(1e-9), Stated, "single agent"),
            ];
            (vec![agent], expectations)
        }
        "public-budget" => {
            let w = params[0];
            let agent = Agent::new("pb", AgentModel::PublicBudget { values: uniform()?, budget: w }).map_err(core)?;
            // Revenue p (1 - p) below the budget, w (1 - p) above it.
            let m = w.min(0.5);
            let expectations = vec![
                expect(
                    "price-posting maximum",
                    Measure::MaxP(0),
                    m * (1.0 - m),
                    Within(1e-6),
                    ClosedForm,
                    "m (1 - m), m = min(w, 1/2)",
                ),
                expect(
                    "alpha at beta 1",
                    Measure::Alpha { agent: 0, beta: 1.0 },
                    1.05,
                    AtMost,
                    Stated,
                    "(1,1)-close up to LP discretization slack",
                ),
                expect("verifies", Measure::Verified, 1.0, Within(0.0), Stated, "ratio within its bounds"),
            ];
            (vec![agent], expectations)
        }
        "private-uniform-mhr" => {
            let agent = Agent::new("pu", AgentModel::PrivateBudget { values: uniform()?, budgets: uniform()? })
                .map_err(core)?;
            // p (1 - p/2)(1 - p) peaks at p = 1 - 1/sqrt(3).
            let p = 1.0 - 1.0 / 3f64.sqrt();
            let max_p = p * (1.0 - p / 2.0) * (1.0 - p);
            let expectations = vec![
                expect(
                    "price-posting maximum",
                    Measure::MaxP(0),
                    max_p,
                    Within(1e-4),
                    ClosedForm,
                    "p (1 - p/2)(1 - p) at p = 1 - 1/sqrt 3",
                ),
                expect("price-posting concavity", Measure::Convexity(0), 1e-6, AtMost, Stated, "MHR budget"),
                expect("zeta", Measure::Zeta(0), 3.05, AtMost, Stated, "3-close for ex-ante optimization, plus slack"),
                expect("eta", Measure::Eta(0), 2.05, AtMost, Stated, "per-unit pricing 2-approximates, plus slack"),
                expect(
                    "alpha at beta 3",
                    Measure::Alpha { agent: 0, beta: 3.0 },
                    4.05,
                    AtMost,
                    Stated,
                    "kappa = 2 gives (2 + kappa, kappa + 1), plus slack",
                ),
                expect("verifies", Measure::Verified, 1.0, Within(0.0), Stated, "ratio within its bounds"),
            ];
            (vec![agent], expectations)
        }
        "mhr-fail" => {
            let n = count(params[0], "n", 1, 200)?;
            let agents = (1..=n)
                .map(|i| {
                    let v = i as f64;
                    let p = 1.0 / (v * v);
                    let budgets = Distribution::discrete(&[0.0, v], &[1.0 - p, p]).map_err(core)?;
                    let values = Distribution::point_mass(v).map_err(core)?;
                    Agent::new(format!("m{i}"), AgentModel::PrivateBudget { values, budgets }).map_err(core)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let harmonic: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
            let expectations = vec![
                expect("anonymous pricing revenue", Measure::Ap, 2.1, AtMost, Computed, "grid search over prices"),
                expect(
                    "ex-ante relaxation",
                    Measure::Ear,
                    harmonic,
                    AtLeast,
                    ClosedForm,
                    "sum of 1/i selling mass 1/i^2 to each agent; needs sum 1/i^2 <= 1",
                ),
                expect(
                    "flagged outside class guarantee",
                    Measure::Violations,
                    1.0,
                    AtLeast,
                    Stated,
                    "no constant budget quantile",
                ),
            ];
            (agents, expectations)
        }
        "correlated-fail" => {
            let h = params[0];
            if !(h > 1.0) {
                return Err(format!("h must exceed 1, got {h}"));
            }
            // q(p) = (h/p - 1)/(h - 1) and the budget never binds below h,
            // so P(q) = h q / (1 + q (h - 1)), concave and rising to 1.
            let n = 512;
            let p: Vec<[f64; 2]> = (0..=n)
                .map(|k| {
                    let q = (k as f64 / n as f64).powi(3);
                    [q, h * q / (1.0 + q * (h - 1.0))]
                })
                .collect();
            // The mechanism charging v - 2ε (or the budget with tiny
            // probability) earns E[v] = h ln h / (h - 1) selling to everyone.
            let r_one = h * h.ln() / (h - 1.0);
            let mut pts: Vec<(f64, f64)> = p.iter().map(|k| (k[0], k[1])).collect();
            pts.last_mut().expect("non-empty").1 = r_one;
            let r = RevenueCurve::new(pts).map_err(core)?.hull();
            let r: Vec<[f64; 2]> = r.knots().iter().map(|k| [k.0, k.1]).collect();
            let agent = Agent::new("cf", AgentModel::Synthetic { p, r }).map_err(core)?;
            let expectations = vec![
                expect(
                    "price-posting maximum",
                    Measure::MaxP(0),
                    1.0,
                    Within(1e-9),
                    ClosedForm,
                    "(h - p)/(h - 1) at p = 1",
                ),
                expect(
                    "ex-ante revenue at q=1",
                    Measure::RAtOne(0),
                    r_one,
                    Within(1e-9),
                    ClosedForm,
                    "h ln h / (h - 1)",
                ),
                expect(
                    "anonymous pricing revenue",
                    Measure::Ap,
                    1.2,
                    AtMost,
                    Computed,
                    "grid search; only O(1) is asserted",
                ),
            ];
            (vec![agent], expectations)
        }
        "risk-equal-revenue" => {
            let (h, c) = (params[0], params[1]);
            let values = Distribution::equal_revenue(h).map_err(core)?;
            let agent = Agent::new("ra", AgentModel::Capacitated { values, capacity: c }).map_err(core)?;
            let expectations = vec![
                expect(
                    "giveaway revenue",
                    Measure::Giveaway { agent: 0, capacity: c },
                    (h / c).ln(),
                    Within(1e-6),
                    Stated,
                    "always allocate, charge max(0, v - C)",
                ),
                expect("price-posting maximum", Measure::MaxP(0), 1.0, Within(1e-6), Stated, "every price earns 1"),
                expect(
                    "zeta",
                    Measure::Zeta(0),
                    2.0 + (h / c).ln() + 1e-6,
                    AtMost,
                    Stated,
                    "two-priced bound 2 + ln(h/C)",
                ),
            ];
            (vec![agent], expectations)
        }
        "overpay" => {
            let h = params[0];
            let values = Distribution::equal_revenue(h).map_err(core)?;
            let agent = Agent::new("op", AgentModel::Capacitated { values, capacity: h }).map_err(core)?;
            let expectations = vec![
                expect(
                    "overpaying mechanism revenue",
                    Measure::HalfWelfare(0),
                    (1.0 + h.ln()) / 2.0,
                    Within(1e-6),
                    ClosedForm,
                    "half the welfare 1 + ln h",
                ),
                expect("price-posting maximum", Measure::MaxP(0), 1.0, Within(1e-6), Stated, "every price earns 1"),
            ];
            (vec![agent], expectations)
        }
        "tightness" => {
            let (alpha, beta) = (params[0], params[1]);
            if !(alpha >= 1.0 && beta > 1.0) {
                return Err(format!("need alpha >= 1 and beta > 1, got alpha={alpha}, beta={beta}"));
            }
            let sb = beta.sqrt();
            let p = vec![[0.0, 0.0], [1.0 / beta, 1.0], [1.0, sb]];
            let r = vec![[0.0, 0.0], [1.0 / sb, alpha * sb], [1.0, alpha * sb]];
            let agents = (1..=2)
                .map(|i| {
                    Agent::new(format!("t{i}"), AgentModel::Synthetic { p: p.clone(), r: r.clone() }).map_err(core)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            // Posting αβ to the R bidders sells 1/sqrt β to each.
            let price = alpha * beta;
            let sale = 1.0 - (1.0 - 1.0 / sb).powi(2);
            // Water-filling on the P hulls: slope β up to 1/β each, then the flat-ish tail.
            let head = (2.0 / beta).min(1.0);
            let tail_slope = (sb - 1.0) / (1.0 - 1.0 / beta);
            let ear_p = beta * head + (1.0 - 2.0 / beta).max(0.0) * tail_slope;
            let expectations = vec![
                expect(
                    "anonymous pricing on R at alpha beta",
                    Measure::ApOnR { price },
                    price * sale - 1e-6,
                    AtLeast,
                    ClosedForm,
                    "two bidders each buying w.p. 1/sqrt beta",
                ),
                expect(
                    "sale probability on R",
                    Measure::SaleOnR { price },
                    sale,
                    Within(1e-9),
                    ClosedForm,
                    "1 - (1 - 1/sqrt beta)^2",
                ),
                expect(
                    "ex-ante relaxation on P",
                    Measure::EarOnP,
                    ear_p + 1e-6,
                    AtMost,
                    ClosedForm,
                    "water-filling on the hulled curves",
                ),
                expect(
                    "gap AP(R)/AP(P)",
                    Measure::ApGap { price },
                    price * sale / ear_p,
                    AtLeast,
                    ClosedForm,
                    "AP(P) <= EAR(P)",
                ),
                expect("eta", Measure::Eta(0), alpha, Within(1e-9), ClosedForm, "max R / max P"),
            ];
            (agents, expectations)
        }
        "random-concave" => {
            let n = count(params[0], "n", 1, 64)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let agents = (0..n)
                .map(|i| {
                    let c = random_concave_curve(&mut rng, 5);
                    let k: Vec<[f64; 2]> = c.knots().iter().map(|k| [k.0, k.1]).collect();
                    Agent::new(format!("rc{}", i + 1), AgentModel::Synthetic { p: k.clone(), r: k }).map_err(core)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let expectations = vec![expect(
                "ratio within e",
                Measure::Ratio,
                std::f64::consts::E + 1e-6,
                AtMost,
                Stated,
                "concave curves",
            )];
            (agents, expectations)
        }
        _ => unreachable!("recipe names are matched above"),
    })
}
