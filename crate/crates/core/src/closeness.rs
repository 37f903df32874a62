//! Closeness parameters between price-posting and ex-ante curves, the bounds
//! they imply, and end-to-end verification of an instance.

use rayon::prelude::*;

use crate::curves::{log_grid, offer_curve, Agent, AgentModel, OfferCurve, RevenueCurve};
use crate::mechanisms::{ap_optimize, ear_optimize, two_priced_upper_curve, PriceTaker};
use crate::oracle::{ex_ante_curve_oracle_at, quantile_grid, DiscreteTypeSpace};
use crate::{Error, Result};

/// The constant `ρ` multiplying the closeness bounds.
pub const RHO: f64 = std::f64::consts::E;
/// Quantiles below this are left out of ratio scans.
pub const MIN_QUANTILE: f64 = 1e-6;
const SCAN_GRID: usize = 4096;

/// Quantiles where a ratio of two piecewise-linear curves can peak inside `[lo, hi]`.
fn scan_points(p: &RevenueCurve, r: &RevenueCurve, lo: f64, hi: f64) -> Vec<f64> {
    let mut qs: Vec<f64> = p.knots().iter().chain(r.knots()).map(|k| k.0).filter(|q| (lo..=hi).contains(q)).collect();
    qs.extend(log_grid(lo, hi, SCAN_GRID));
    qs.extend((0..=SCAN_GRID).map(|k| lo + (hi - lo) * k as f64 / SCAN_GRID as f64));
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    qs
}

/// Smallest `α` with `P(q) >= R(q) / α` on `[MIN_QUANTILE, 1/β]`; infinite if
/// `P` vanishes where `R` is positive.
pub fn alpha_for_beta(p: &RevenueCurve, r: &RevenueCurve, beta: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::InvalidArgument(format!("β must be at least 1, got {beta}")));
    }
    let hi = 1.0 / beta;
    let mut alpha: f64 = 0.0;
    for q in scan_points(p, r, MIN_QUANTILE, hi) {
        let rv = r.eval(q);
        if rv <= 0.0 {
            continue;
        }
        let pv = p.eval(q);
        if pv <= 0.0 {
            return Ok(f64::INFINITY);
        }
        alpha = alpha.max(rv / pv);
    }
    Ok(alpha)
}

/// Smallest `ζ` such that every `R(q)` is matched within `ζ` by `P` at some
/// `q' <= q`: the largest `R(q) / max_{q' <= q} P(q')`.
pub fn zeta(p: &RevenueCurve, r: &RevenueCurve) -> f64 {
    // Peaks of P before the scan window still count.
    let mut running = p.knots().iter().filter(|k| k.0 < MIN_QUANTILE).map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
    let mut zeta: f64 = 0.0;
    let mut check = |q: f64, running: f64| -> bool {
        let rv = r.eval(q);
        if rv <= 0.0 {
            return true;
        }
        if running <= 0.0 {
            return false;
        }
        zeta = zeta.max(rv / running);
        true
    };
    let mut prev: Option<(f64, f64)> = None;
    for q in scan_points(p, r, MIN_QUANTILE, 1.0) {
        let pv = p.eval(q);
        // The running maximum is linear between scan points except where P
        // climbs past an earlier peak; visit that crossing too.
        if let Some((q0, p0)) = prev {
            if p0 < running && pv > running {
                let crossing = q0 + (running - p0) / (pv - p0) * (q - q0);
                if !check(crossing, running) {
                    return f64::INFINITY;
                }
            }
        }
        running = running.max(pv);
        if !check(q, running) {
            return f64::INFINITY;
        }
        prev = Some((q, pv));
    }
    zeta
}

/// `max R / max P`.
pub fn eta(p: &RevenueCurve, r: &RevenueCurve) -> f64 {
    let (mp, mr) = (p.max_value(), r.max_value());
    if mr <= 0.0 {
        return 1.0;
    }
    if mp <= 0.0 {
        return f64::INFINITY;
    }
    mr / mp
}

/// Anonymous-pricing bounds implied by `(α, β)`-closeness and `η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferBounds {
    /// `αβ`.
    pub basic: f64,
    /// `√(αβη)` when `α <= βη`, otherwise `α`.
    pub improved: f64,
}

pub fn transfer_bounds(alpha: f64, beta: f64, eta: f64) -> Result<TransferBounds> {
    for (name, v) in [("α", alpha), ("β", beta), ("η", eta)] {
        if v.is_nan() || v < 1.0 - 1e-9 {
            return Err(Error::InvalidArgument(format!("{name} must be at least 1, got {v}")));
        }
    }
    let (alpha, beta, eta) = (alpha.max(1.0), beta.max(1.0), eta.max(1.0));
    let improved = if alpha <= beta * eta { (alpha * beta * eta).sqrt() } else { alpha };
    Ok(TransferBounds { basic: alpha * beta, improved })
}

/// Agent classes with a closed-form anonymous-pricing guarantee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Table1Model {
    Linear,
    PublicBudget,
    PrivateMhr,
    /// Budget at least its mean with probability `1/κ`.
    PrivateKappa {
        kappa: f64,
    },
    /// `h̄ / C` for capacitated agents.
    RiskAverse {
        value_over_capacity: f64,
    },
}

/// Worst-case ratio of the ex-ante relaxation to anonymous pricing for the class.
pub fn table1_bound(model: Table1Model) -> Result<f64> {
    let e = std::f64::consts::E;
    Ok(match model {
        Table1Model::Linear | Table1Model::PublicBudget => e,
        Table1Model::PrivateMhr => 3.0 * e,
        Table1Model::PrivateKappa { kappa } => {
            if !(kappa >= 1.0) {
                return Err(Error::InvalidArgument(format!("κ must be at least 1, got {kappa}")));
            }
            (2.0 * (2.0 + kappa) * (1.0 + kappa)).sqrt() * e
        }
        Table1Model::RiskAverse { value_over_capacity } => {
            if !(value_over_capacity >= 1.0) {
                return Err(Error::InvalidArgument(format!("h̄/C must be at least 1, got {value_over_capacity}")));
            }
            (2.0 + value_over_capacity.ln()) * e
        }
    })
}

/// Discretization and grids used by [`verify_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub value_points: usize,
    pub budget_points: usize,
    pub quantile_grid: usize,
    pub price_grid: usize,
    pub betas: Vec<f64>,
    /// Private budgets with `κ` above this void the constant-`κ` guarantee.
    pub kappa_max: f64,
    pub lp_slack: f64,
    pub exact_slack: f64,
    pub diagnostic_grid: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            value_points: crate::oracle::DEFAULT_VALUE_POINTS,
            budget_points: crate::oracle::DEFAULT_BUDGET_POINTS,
            quantile_grid: crate::oracle::DEFAULT_QUANTILE_GRID,
            price_grid: crate::curves::DEFAULT_PRICE_GRID,
            betas: vec![1.0, 2.0, 3.0, 4.0],
            kappa_max: 10.0,
            lp_slack: 0.05,
            exact_slack: 1e-6,
            diagnostic_grid: 512,
        }
    }
}

/// Where an agent's ex-ante curve comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExAnteSource {
    /// Concave hull of the price-posting curve (exact for linear agents).
    Hull,
    /// Upper bound from the discretized ex-ante LP.
    LpUpperBound,
    /// Upper bound from the two-priced mechanism analysis.
    TwoPricedUpperBound,
    /// Supplied with the agent.
    Given,
}

impl ExAnteSource {
    pub fn label(self) -> &'static str {
        match self {
            ExAnteSource::Hull => "hull",
            ExAnteSource::LpUpperBound => "lp upper bound",
            ExAnteSource::TwoPricedUpperBound => "two-priced upper bound",
            ExAnteSource::Given => "given",
        }
    }
}

/// A bidder for anonymous pricing: an offer curve or a bare curve.
#[derive(Clone, Debug, PartialEq)]
pub enum Bidder {
    Offer(OfferCurve),
    Curve(RevenueCurve),
}

impl PriceTaker for Bidder {
    fn accept_probability(&self, p: f64) -> f64 {
        match self {
            Bidder::Offer(o) => PriceTaker::accept_probability(o, p),
            Bidder::Curve(c) => PriceTaker::accept_probability(c, p),
        }
    }

    fn knot_prices(&self) -> Vec<f64> {
        match self {
            Bidder::Offer(o) => PriceTaker::knot_prices(o),
            Bidder::Curve(c) => PriceTaker::knot_prices(c),
        }
    }

    fn price_range(&self) -> (f64, f64) {
        match self {
            Bidder::Offer(o) => PriceTaker::price_range(o),
            Bidder::Curve(c) => PriceTaker::price_range(c),
        }
    }
}

/// Curves and parameters of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentCloseness {
    pub id: String,
    pub model: &'static str,
    /// Price-posting curve of the agent's own laws.
    pub p: RevenueCurve,
    /// Price-posting curve the ex-ante curve is compared with (the
    /// discretized laws for LP-backed agents, otherwise `p`).
    pub p_compared: RevenueCurve,
    pub r: RevenueCurve,
    pub source: ExAnteSource,
    /// `(β, α(β))`.
    pub alphas: Vec<(f64, f64)>,
    pub zeta: f64,
    pub eta: f64,
    pub p_concave: bool,
    pub table1: Option<f64>,
    /// Why the closed-form class guarantee does not apply, if it does not.
    pub assumption_violation: Option<String>,
    bidder: Bidder,
    compared_bidder: Bidder,
}

/// Outcome of [`verify_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClosenessReport {
    pub agents: Vec<AgentCloseness>,
    pub betas: Vec<f64>,
    pub rho: f64,
    pub ap_price: f64,
    /// Optimal anonymous pricing on the agents' own offers.
    pub ap: f64,
    /// Anonymous pricing with the ex-ante curves as bidders.
    pub ap_r: f64,
    /// Anonymous pricing on the compared price-posting curves.
    pub ap_compared: f64,
    pub ear_r: f64,
    /// Ex-ante relaxation on the hulls of the compared price-posting curves.
    pub ear_hull_p: f64,
    pub ratio: f64,
    /// Largest per-agent `α(β)` for each reported `β`.
    pub alpha: Vec<f64>,
    pub zeta: f64,
    pub eta: f64,
    /// `ρ · min` over the basic, improved and (for concave curves) `ζ` bounds.
    pub transfer_bound: f64,
    pub table1_bound: Option<f64>,
    pub assumption_violations: Vec<String>,
    pub slack: f64,
    pub pass_transfer: bool,
    pub pass_table1: bool,
    /// `AP(P) >= AP(R) / (αβ)` for every `β` with finite `α`.
    pub ap_transfer_holds: bool,
    /// `EAR(hull P) >= EAR(R) / ζ` when `ζ` is finite.
    pub ear_transfer_holds: bool,
}

impl ClosenessReport {
    pub fn pass(&self) -> bool {
        self.pass_transfer && self.pass_table1
    }

    pub fn lp_backed(&self) -> bool {
        self.agents.iter().any(|a| a.source == ExAnteSource::LpUpperBound)
    }
}

fn model_name(model: &AgentModel) -> &'static str {
    match model {
        AgentModel::Linear { .. } => "linear",
        AgentModel::PublicBudget { .. } => "public-budget",
        AgentModel::PrivateBudget { .. } => "private-budget",
        AgentModel::Capacitated { .. } => "capacitated",
        AgentModel::Synthetic { .. } => "synthetic",
    }
}

/// Builds the curves of one agent and its closeness parameters.
pub fn agent_closeness(agent: &Agent, config: &OracleConfig) -> Result<AgentCloseness> {
    let grid = config.price_grid;
    let (p, bidder) = match &agent.model {
        AgentModel::Synthetic { p, .. } => {
            let c = RevenueCurve::from_pairs(p)?;
            (c.clone(), Bidder::Curve(c))
        }
        _ => {
            let offer = offer_curve(agent)?;
            (crate::curves::price_posting_curve(&offer, grid)?, Bidder::Offer(offer))
        }
    };
    let regular = |values: &crate::Distribution| -> Result<Option<String>> {
        let rep = values.regularity_report(config.diagnostic_grid)?;
        Ok((!rep.regular).then(|| format!("{}: value distribution is not regular", agent.id)))
    };

    let (p_compared, compared_bidder, r, source, table1, violation) = match &agent.model {
        AgentModel::Linear { .. } => {
            let r = p.hull();
            (p.clone(), bidder.clone(), r, ExAnteSource::Hull, Some(table1_bound(Table1Model::Linear)?), None)
        }
        AgentModel::PublicBudget { values, .. } => {
            let (pc, bc, r) = lp_curves(agent, config)?;
            let t = table1_bound(Table1Model::PublicBudget)?;
            (pc, bc, r, ExAnteSource::LpUpperBound, Some(t), regular(values)?)
        }
        AgentModel::PrivateBudget { values, budgets } => {
            let (pc, bc, r) = lp_curves(agent, config)?;
            let mhr = budgets.mhr_report(config.diagnostic_grid)?.mhr;
            let mut violation = regular(values)?;
            let t = if mhr {
                table1_bound(Table1Model::PrivateMhr)?
            } else {
                let kappa = 1.0 / budgets.exceed_mean_probability();
                if kappa > config.kappa_max && violation.is_none() {
                    violation = Some(format!(
                        "{}: budget is not MHR and reaches its mean with probability only 1/{kappa:.4}",
                        agent.id
                    ));
                }
                table1_bound(Table1Model::PrivateKappa { kappa })?
            };
            (pc, bc, r, ExAnteSource::LpUpperBound, Some(t), violation)
        }
        AgentModel::Capacitated { values, capacity } => {
            let h_bar = values.hi();
            let base = if p.is_concave() { p.clone() } else { p.hull() };
            let r = two_priced_upper_curve(&base, *capacity, h_bar, config.quantile_grid.max(2) - 1)?;
            let t = table1_bound(Table1Model::RiskAverse { value_over_capacity: h_bar / capacity })?;
            (p.clone(), bidder.clone(), r, ExAnteSource::TwoPricedUpperBound, Some(t), regular(values)?)
        }
        AgentModel::Synthetic { r, .. } => {
            let r = RevenueCurve::from_pairs(r)?;
            (p.clone(), bidder.clone(), r, ExAnteSource::Given, None, None)
        }
    };

    let alphas =
        config.betas.iter().map(|&b| Ok((b, alpha_for_beta(&p_compared, &r, b)?))).collect::<Result<Vec<_>>>()?;
    Ok(AgentCloseness {
        id: agent.id.clone(),
        model: model_name(&agent.model),
        zeta: zeta(&p_compared, &r),
        eta: eta(&p_compared, &r),
        p_concave: p_compared.is_concave(),
        p,
        p_compared,
        r,
        source,
        alphas,
        table1,
        assumption_violation: violation,
        bidder,
        compared_bidder,
    })
}

/// Price-posting curve and LP curve of the discretized laws.
fn lp_curves(agent: &Agent, config: &OracleConfig) -> Result<(RevenueCurve, Bidder, RevenueCurve)> {
    let discrete_model = match &agent.model {
        AgentModel::PublicBudget { values, budget } => {
            AgentModel::PublicBudget { values: values.discretize(config.value_points)?, budget: *budget }
        }
        AgentModel::PrivateBudget { values, budgets } => AgentModel::PrivateBudget {
            values: values.discretize(config.value_points)?,
            budgets: budgets.discretize(config.budget_points)?,
        },
        _ => unreachable!("only budgeted agents are LP-backed"),
    };
    let discrete = Agent::new(agent.id.clone(), discrete_model)?;
    let offer = offer_curve(&discrete)?;
    let p = crate::curves::price_posting_curve(&offer, config.price_grid)?;
    let space = DiscreteTypeSpace::from_agent(&discrete, config.value_points, config.budget_points)?;
    // Kinks of R̄ sit where P peaks and where positive prices stop selling;
    // the uniform grid alone would cut across them.
    let mut quantiles = quantile_grid(config.quantile_grid);
    quantiles.push(p.max().0);
    quantiles.push(offer.reachable_mass());
    let r = ex_ante_curve_oracle_at(&space, &quantiles)?;
    Ok((p, Bidder::Offer(offer), r))
}

/// Builds every agent's curves, optimizes anonymous pricing and the ex-ante
/// relaxation, and checks the ratio against the closeness and class bounds.
pub fn verify_instance(agents: &[Agent], config: &OracleConfig) -> Result<ClosenessReport> {
    if agents.is_empty() {
        return Err(Error::InvalidArgument("verification needs at least one agent".into()));
    }
    if let Some(b) = config.betas.iter().find(|b| !(**b >= 1.0)) {
        return Err(Error::InvalidArgument(format!("β must be at least 1, got {b}")));
    }
    let per_agent: Vec<AgentCloseness> =
        agents.par_iter().map(|a| agent_closeness(a, config)).collect::<Result<_>>()?;

    let bidders: Vec<&Bidder> = per_agent.iter().map(|a| &a.bidder).collect();
    let compared: Vec<&Bidder> = per_agent.iter().map(|a| &a.compared_bidder).collect();
    let rs: Vec<RevenueCurve> = per_agent.iter().map(|a| a.r.clone()).collect();
    let hulls: Vec<RevenueCurve> = per_agent.iter().map(|a| a.p_compared.hull()).collect();

    let ap = ap_optimize(&bidders)?;
    let ap_compared = ap_optimize(&compared)?.revenue;
    let ap_r = ap_optimize(&rs)?.revenue;
    let ear_r = ear_optimize(&rs)?.revenue;
    let ear_hull_p = ear_optimize(&hulls)?.revenue;
    let ratio = if ap.revenue > 0.0 { ear_r / ap.revenue } else { f64::INFINITY };

    let alpha: Vec<f64> =
        (0..config.betas.len()).map(|k| per_agent.iter().map(|a| a.alphas[k].1).fold(0.0, f64::max)).collect();
    let zeta = per_agent.iter().map(|a| a.zeta).fold(0.0, f64::max);
    let eta = per_agent.iter().map(|a| a.eta).fold(0.0, f64::max);

    let mut transfer: f64 = f64::INFINITY;
    for (k, &beta) in config.betas.iter().enumerate() {
        if alpha[k].is_finite() && eta.is_finite() {
            let t = transfer_bounds(alpha[k].max(1.0), beta, eta.max(1.0))?;
            transfer = transfer.min(t.basic).min(t.improved);
        } else if alpha[k].is_finite() {
            transfer = transfer.min(alpha[k].max(1.0) * beta);
        }
    }
    if per_agent.iter().all(|a| a.p_concave) {
        transfer = transfer.min(zeta.max(1.0));
    }
    let transfer_bound = RHO * transfer;

    let table1_bound =
        per_agent.iter().map(|a| a.table1).collect::<Option<Vec<f64>>>().map(|v| v.into_iter().fold(0.0, f64::max));
    let assumption_violations: Vec<String> = per_agent.iter().filter_map(|a| a.assumption_violation.clone()).collect();

    let lp_backed = per_agent.iter().any(|a| a.source == ExAnteSource::LpUpperBound);
    let slack = if lp_backed { config.lp_slack } else { config.exact_slack };
    let within = |bound: f64| ratio <= bound * (1.0 + slack) || bound.is_infinite();
    let pass_transfer = within(transfer_bound);
    let pass_table1 = match table1_bound {
        Some(b) if assumption_violations.is_empty() => within(b),
        _ => true,
    };

    let scale = ap_r.abs().max(ear_r.abs()).max(1.0);
    let ap_transfer_holds = config
        .betas
        .iter()
        .zip(&alpha)
        .all(|(&beta, &a)| !a.is_finite() || ap_compared >= ap_r / (a.max(1.0) * beta) - 1e-6 * scale);
    let ear_transfer_holds = !zeta.is_finite() || ear_hull_p >= ear_r / zeta.max(1.0) - 1e-6 * scale;

    Ok(ClosenessReport {
        agents: per_agent,
        betas: config.betas.clone(),
        rho: RHO,
        ap_price: ap.price,
        ap: ap.revenue,
        ap_r,
        ap_compared,
        ear_r,
        ear_hull_p,
        ratio,
        alpha,
        zeta,
        eta,
        transfer_bound,
        table1_bound,
        assumption_violations,
        slack,
        pass_transfer,
        pass_table1,
        ap_transfer_holds,
        ear_transfer_holds,
    })
}
