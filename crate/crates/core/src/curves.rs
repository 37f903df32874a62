//! Agents, offer curves and piecewise-linear revenue curves in quantile space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{BudgetDistribution, Distribution, ValueDistribution};
use crate::quadrature::integrate_pieces;
use crate::{Error, Result};

/// Default number of log-spaced prices in a parametric sweep.
pub const DEFAULT_PRICE_GRID: usize = 4096;
/// Tolerance for the budget integral `Δ(p)` when no closed form applies.
pub const DELTA_TOL: f64 = 1e-9;
/// Relative tolerance on dips below a chord when deciding concavity.
pub const CONCAVITY_TOL: f64 = 1e-10;
/// Quantiles closer than this are merged during a sweep.
const MERGE_GAP: f64 = 1e-13;

/// Utility model of a single agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AgentModel {
    Linear {
        values: ValueDistribution,
    },
    /// Known budget `budget`; a buyer takes `min(1, budget / p)` units at per-unit price `p`.
    PublicBudget {
        values: ValueDistribution,
        budget: f64,
    },
    /// Budget drawn independently of the value.
    PrivateBudget {
        values: ValueDistribution,
        budgets: BudgetDistribution,
    },
    /// Utility `min(v x - p, capacity)`; the largest value is the support top of `values`.
    Capacitated {
        values: ValueDistribution,
        capacity: f64,
    },
    /// A curve pair given directly: price-posting `p` and ex-ante `r`.
    Synthetic {
        p: Vec<[f64; 2]>,
        r: Vec<[f64; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agent {
    pub id: String,
    pub model: AgentModel,
}

impl Agent {
    pub fn new(id: impl Into<String>, model: AgentModel) -> Result<Self> {
        let agent = Agent { id: id.into(), model };
        agent.validate()?;
        Ok(agent)
    }

    pub fn linear(id: impl Into<String>, values: ValueDistribution) -> Result<Self> {
        Agent::new(id, AgentModel::Linear { values })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidAgent { id: self.id.clone(), reason };
        match &self.model {
            AgentModel::Linear { values } => values.validate(),
            AgentModel::PublicBudget { values, budget } => {
                values.validate()?;
                if !(budget.is_finite() && *budget > 0.0) {
                    return Err(bad(format!("budget must be positive, got {budget}")));
                }
                Ok(())
            }
            AgentModel::PrivateBudget { values, budgets } => {
                values.validate()?;
                budgets.validate()
            }
            AgentModel::Capacitated { values, capacity } => {
                values.validate()?;
                let top = values.hi();
                if !(capacity.is_finite() && *capacity > 0.0) {
                    return Err(bad(format!("capacity must be positive, got {capacity}")));
                }
                if *capacity > top {
                    return Err(bad(format!("capacity {capacity} exceeds the largest value {top}")));
                }
                Ok(())
            }
            AgentModel::Synthetic { p, r } => {
                let p = RevenueCurve::from_pairs(p)?;
                let r = RevenueCurve::from_pairs(r)?;
                let mut qs: Vec<f64> = p.knots().iter().chain(r.knots()).map(|k| k.0).collect();
                qs.sort_by(f64::total_cmp);
                for q in qs {
                    let (pv, rv) = (p.eval(q), r.eval(q));
                    if rv < pv - 1e-9 * pv.abs().max(1.0) {
                        return Err(bad(format!("ex-ante curve {rv} lies below price-posting curve {pv} at q={q}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Value distribution, if the model has one.
    pub fn values(&self) -> Option<&ValueDistribution> {
        match &self.model {
            AgentModel::Linear { values }
            | AgentModel::PublicBudget { values, .. }
            | AgentModel::PrivateBudget { values, .. }
            | AgentModel::Capacitated { values, .. } => Some(values),
            AgentModel::Synthetic { .. } => None,
        }
    }

    /// Price-posting curve: the sweep of the offer curve, or the given `p` for synthetic agents.
    pub fn price_posting_curve(&self, grid: usize) -> Result<RevenueCurve> {
        match &self.model {
            AgentModel::Synthetic { p, .. } => RevenueCurve::from_pairs(p),
            _ => price_posting_curve(&offer_curve(self)?, grid),
        }
    }
}

/// Offer curve `p -> q(p)` for the non-synthetic models.
#[derive(Clone, Debug, PartialEq)]
pub struct OfferCurve {
    agent_id: String,
    kind: OfferKind,
    knots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
enum OfferKind {
    Linear(ValueDistribution),
    PublicBudget(ValueDistribution, f64),
    PrivateBudget(ValueDistribution, BudgetDistribution),
}

/// Builds the offer curve of an agent. Capacitated agents buy iff `v >= p`,
/// exactly like linear agents.
pub fn offer_curve(agent: &Agent) -> Result<OfferCurve> {
    let (kind, mut knots) = match &agent.model {
        AgentModel::Linear { values } | AgentModel::Capacitated { values, .. } => {
            (OfferKind::Linear(values.clone()), values.breakpoints())
        }
        AgentModel::PublicBudget { values, budget } => {
            let mut k = values.breakpoints();
            k.push(*budget);
            (OfferKind::PublicBudget(values.clone(), *budget), k)
        }
        AgentModel::PrivateBudget { values, budgets } => {
            let mut k = values.breakpoints();
            k.extend(budgets.breakpoints());
            (OfferKind::PrivateBudget(values.clone(), budgets.clone()), k)
        }
        AgentModel::Synthetic { .. } => return Err(Error::NoOfferCurve(agent.id.clone())),
    };
    knots.retain(|p| *p > 0.0 && p.is_finite());
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    Ok(OfferCurve { agent_id: agent.id.clone(), kind, knots })
}

impl OfferCurve {
    pub fn agent_id(&self) -> &str {
        &self.agent_id
    }

    pub fn values(&self) -> &ValueDistribution {
        match &self.kind {
            OfferKind::Linear(f) | OfferKind::PublicBudget(f, _) | OfferKind::PrivateBudget(f, _) => f,
        }
    }

    /// Prices where `q(p)` is not smooth, increasing.
    pub fn knot_prices(&self) -> &[f64] {
        &self.knots
    }

    /// Sale probability at per-unit price `p`; buyers accept at equality.
    pub fn accept_probability(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 1.0;
        }
        let values = self.values();
        self.units(p) * values.survival(p)
    }

    /// Right limit `q(p⁺)`: only buyers with value strictly above `p`.
    pub fn accept_probability_right(&self, p: f64) -> f64 {
        if p < 0.0 {
            return 1.0;
        }
        let values = self.values();
        self.units(p) * values.survival_strict(p)
    }

    /// Expected units bought by an accepting buyer at price `p > 0`.
    fn units(&self, p: f64) -> f64 {
        match &self.kind {
            OfferKind::Linear(_) => 1.0,
            OfferKind::PublicBudget(_, w) => (w / p).min(1.0),
            OfferKind::PrivateBudget(_, g) => (budget_delta(g, p) / p).min(1.0),
        }
    }

    /// `q(0⁺)`: the most mass any positive price sells.
    pub fn reachable_mass(&self) -> f64 {
        let units = match &self.kind {
            OfferKind::Linear(_) | OfferKind::PublicBudget(..) => 1.0,
            OfferKind::PrivateBudget(_, g) => g.survival_strict(0.0),
        };
        units * self.values().survival_strict(0.0)
    }

    /// `p · q(p)`.
    pub fn revenue(&self, p: f64) -> f64 {
        if p <= 0.0 {
            0.0
        } else {
            p * self.accept_probability(p)
        }
    }

    /// Price interval `[V(1 - 1e-6), V(1e-6)]` used by sweeps and searches,
    /// kept strictly positive so it can be log-spaced.
    pub fn price_range(&self) -> (f64, f64) {
        let values = self.values();
        let hi = values.inverse_demand(1e-6).max(values.hi() * (1.0 - 1e-12));
        let lo = values.inverse_demand(1.0 - 1e-6).max(hi * 1e-9);
        (lo, hi)
    }
}

/// `Δ(p) = E[min(p, w)] = ∫₀ᵖ (1 - G(x)) dx`: expected units times price
/// bought by a private-budget buyer at per-unit price `p`, before the value check.
pub fn budget_delta(budgets: &BudgetDistribution, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    match budgets {
        Distribution::Uniform { a, b } => {
            if p <= *a {
                p
            } else if p >= *b {
                0.5 * (a + b)
            } else {
                let span = b - a;
                a + (span * span - (b - p) * (b - p)) / (2.0 * span)
            }
        }
        Distribution::Exponential { rate, .. } => {
            let top = budgets.hi();
            -(-rate * p.min(top)).exp_m1() / rate
        }
        Distribution::EqualRevenue { h } => {
            if p <= 1.0 {
                p
            } else {
                1.0 + p.min(*h).ln()
            }
        }
        Distribution::PointMass { v } => p.min(*v),
        Distribution::Discrete { values, probs } => values.iter().zip(probs).map(|(w, g)| p.min(*w) * g).sum(),
        Distribution::PiecewiseLinearCdf { .. } => budget_delta_quadrature(budgets, p),
    }
}

/// `Δ(p)` by adaptive Simpson on `1 - G`, for any budget law.
pub fn budget_delta_quadrature(budgets: &BudgetDistribution, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    integrate_pieces(|x| budgets.survival_strict(x), 0.0, p, &budgets.breakpoints(), DELTA_TOL)
}

/// Piecewise-linear function on `[0, 1]` given by knots `(q, value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevenueCurve {
    knots: Vec<(f64, f64)>,
    concave: bool,
}

impl RevenueCurve {
    /// Knots must start at `q = 0`, end at `q = 1`, and increase strictly in `q`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidCurve("a curve needs at least two knots".into()));
        }
        if knots.iter().any(|(q, v)| !q.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidCurve("knots must be finite".into()));
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::InvalidCurve(format!(
                "knots must span [0, 1], got [{}, {}]",
                knots[0].0,
                knots[knots.len() - 1].0
            )));
        }
        if let Some(w) = knots.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidCurve(format!("quantiles must increase: {} then {}", w[0].0, w[1].0)));
        }
        let concave = dips(&knots).all(|d| d <= CONCAVITY_TOL * scale(&knots));
        Ok(RevenueCurve { knots, concave })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        RevenueCurve::new(pairs.iter().map(|k| (k[0], k[1])).collect())
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    /// Linear interpolation, `q` clamped to `[0, 1]`; exact at knots.
    pub fn eval(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let k = self.segment(q);
        let (q0, v0) = self.knots[k];
        let (q1, v1) = self.knots[k + 1];
        if q == q1 {
            return v1;
        }
        v0 + (q - q0) / (q1 - q0) * (v1 - v0)
    }

    /// Right derivative; the left derivative at `q = 1`.
    pub fn slope(&self, q: f64) -> f64 {
        let k = self.segment(q.clamp(0.0, 1.0));
        segment_slope(self.knots[k], self.knots[k + 1])
    }

    /// Index `k` of the segment `[q_k, q_{k+1})` containing `q` (the last one for `q = 1`).
    fn segment(&self, q: f64) -> usize {
        let n = self.knots.partition_point(|k| k.0 <= q);
        n.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// `(q, value)` of the maximum, ties going to the largest `q`.
    pub fn max(&self) -> (f64, f64) {
        let top = self.knots.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * top.abs().max(f64::MIN_POSITIVE);
        *self.knots.iter().rev().find(|k| k.1 >= top - tol).expect("curves have knots")
    }

    pub fn max_value(&self) -> f64 {
        self.max().1
    }

    /// Least concave majorant; its knots are a subset of the input knots.
    pub fn hull(&self) -> RevenueCurve {
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(self.knots.len());
        for &pt in &self.knots {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // Drop b unless it lies strictly above the chord from a to pt.
                let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }
        RevenueCurve { knots: hull, concave: true }
    }

    /// Values on `grid + 1` equally spaced quantiles.
    pub fn sample(&self, grid: usize) -> Vec<(f64, f64)> {
        (0..=grid)
            .map(|k| {
                let q = k as f64 / grid as f64;
                (q, self.eval(q))
            })
            .collect()
    }

    /// Same curve with interior knots that lie on the chord of their kept
    /// neighbours removed (within `1e-12` of the curve's scale).
    pub fn simplified(&self) -> RevenueCurve {
        let tol = 1e-12 * scale(&self.knots);
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(self.knots.len());
        for &k in &self.knots {
            if kept.len() >= 2 {
                let (a, b) = (kept[kept.len() - 2], kept[kept.len() - 1]);
                let chord = a.1 + (b.0 - a.0) / (k.0 - a.0) * (k.1 - a.1);
                if (chord - b.1).abs() <= tol {
                    kept.pop();
                }
            }
            kept.push(k);
        }
        RevenueCurve { knots: kept, concave: self.concave }
    }

    /// Segments `(q_start, q_end, slope)` in increasing `q`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.knots.windows(2).map(|w| (w[0].0, w[1].0, segment_slope(w[0], w[1])))
    }

    /// Largest positive second difference on `grid + 1` equally spaced quantiles,
    /// relative to the largest absolute value of the curve.
    pub fn max_convexity(&self, grid: usize) -> f64 {
        let pts = self.sample(grid);
        let scale = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        pts.windows(3).map(|w| w[0].1 - 2.0 * w[1].1 + w[2].1).fold(0.0, f64::max) / scale
    }
}

fn segment_slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

fn scale(knots: &[(f64, f64)]) -> f64 {
    knots.iter().map(|k| k.1.abs()).fold(1.0, f64::max)
}

/// How far each interior knot sits below the chord of its neighbours.
fn dips(knots: &[(f64, f64)]) -> impl Iterator<Item = f64> + '_ {
    knots.windows(3).map(|w| {
        let (a, b, c) = (w[0], w[1], w[2]);
        let chord = a.1 + (b.0 - a.0) / (c.0 - a.0) * (c.1 - a.1);
        chord - b.1
    })
}

/// Sweeps the offer curve over `grid` log-spaced prices, its knot prices, the
/// value quantiles `V(k / grid)` and right limits at value atoms, sorts the
/// points `(q(p), p q(p))` by quantile and keeps the best revenue at each
/// quantile. Mass no positive price can sell is reported at zero revenue.
pub fn price_posting_curve(offer: &OfferCurve, grid: usize) -> Result<RevenueCurve> {
    if grid < 64 {
        return Err(Error::InvalidArgument(format!("price grid must have at least 64 points, got {grid}")));
    }
    let (lo, hi) = offer.price_range();
    let values = offer.values();
    let mut prices = log_grid(lo, hi, grid);
    prices.extend_from_slice(offer.knot_prices());
    prices.extend((1..grid).map(|k| values.inverse_demand(k as f64 / grid as f64)));
    prices.retain(|p| *p > 0.0 && p.is_finite());

    let mut points: Vec<(f64, f64)> = prices
        .iter()
        .map(|&p| {
            let q = offer.accept_probability(p);
            (q, p * q)
        })
        .collect();
    for &(v, _) in values.atoms().iter().filter(|a| a.0 > 0.0) {
        let q = offer.accept_probability_right(v);
        points.push((q, v * q));
    }
    let reachable = offer.reachable_mass();
    points.push((0.0, 0.0));
    points.push((reachable, 0.0));
    points.push((1.0, 0.0));
    if reachable < 1.0 - MERGE_GAP {
        let gap = 1e-9f64.min((1.0 - reachable) / 2.0);
        points.push((reachable + gap, 0.0));
    }
    RevenueCurve::new(upper_points(points))
}

/// Sorts by quantile and merges near-equal quantiles, keeping the larger value.
fn upper_points(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.retain(|p| p.0.is_finite() && p.1.is_finite());
    for p in points.iter_mut() {
        p.0 = p.0.clamp(0.0, 1.0);
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        match out.last_mut() {
            Some(last) if p.0 - last.0 <= MERGE_GAP => {
                // Endpoints must stay exactly at 0 and 1.
                if p.0 == 1.0 {
                    last.0 = 1.0;
                }
                last.1 = last.1.max(p.1);
            }
            _ => out.push(p),
        }
    }
    out
}

/// `n` log-spaced points covering `[lo, hi]`, `0 < lo <= hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 || hi <= lo {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| if k == n - 1 { hi } else { (a + (b - a) * k as f64 / (n - 1) as f64).exp() }).collect()
}

pub fn concave_hull(curve: &RevenueCurve) -> RevenueCurve {
    curve.hull()
}

/// Largest quantile `q ∈ (0, 1]` with `curve(q) >= q p`, or 0 if there is none.
pub fn quantile_at_price(p: f64, curve: &RevenueCurve) -> f64 {
    let knots = curve.knots();
    let gap = |k: &(f64, f64)| k.1 - k.0 * p;
    let tol = |k: &(f64, f64)| 1e-12 * k.1.abs().max(k.0 * p).max(1e-300);
    let last = knots.len() - 1;
    if gap(&knots[last]) >= -tol(&knots[last]) {
        return 1.0;
    }
    for k in (0..last).rev() {
        let g0 = gap(&knots[k]);
        if g0 >= -tol(&knots[k]) {
            let g1 = gap(&knots[k + 1]);
            let (q0, q1) = (knots[k].0, knots[k + 1].0);
            let g0 = g0.max(0.0);
            return q0 + g0 / (g0 - g1) * (q1 - q0);
        }
    }
    0.0
}

/// Sampled Lagrangian curve `(q - λ) V(q)` with its ironed form.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianCurve {
    pub curve: RevenueCurve,
    /// Linear on `[0, q†]` with slope `P_λ'(q†)`, equal to the curve beyond.
    pub hull: RevenueCurve,
    pub q_dagger: f64,
    pub warning: Option<String>,
}

const DERIVATIVE_STEP: f64 = 1e-6;

/// Lagrangian price-posting curve `P_λ(q) = (q - λ) V(q)` (with `P_λ(0) = 0`),
/// sampled on `grid + 1` quantiles, and the smallest root `q†` of
/// `P_λ(q) - q P_λ'(q)`.
pub fn lagrangian_curve(values: &ValueDistribution, lambda: f64, grid: usize) -> Result<LagrangianCurve> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("multiplier must be non-negative, got {lambda}")));
    }
    if grid < 16 {
        return Err(Error::InvalidArgument(format!("quantile grid must have at least 16 cells, got {grid}")));
    }
    let p = |q: f64| if q <= 0.0 { 0.0 } else { (q - lambda) * values.inverse_demand(q) };
    let dp = |q: f64| {
        if q + DERIVATIVE_STEP <= 1.0 {
            (p(q + DERIVATIVE_STEP) - p(q)) / DERIVATIVE_STEP
        } else {
            (p(q) - p(q - DERIVATIVE_STEP)) / DERIVATIVE_STEP
        }
    };
    let tangency = |q: f64| p(q) - q * dp(q);
    let curve = RevenueCurve::new(
        (0..=grid)
            .map(|k| {
                let q = k as f64 / grid as f64;
                (q, p(q))
            })
            .collect(),
    )?;

    let mut warning = None;
    let q_dagger = if lambda == 0.0 {
        0.0
    } else {
        let scan = 4 * grid;
        let mut root = None;
        let mut prev = 0.0;
        for k in 1..=scan {
            let q = k as f64 / scan as f64;
            if tangency(q) >= 0.0 {
                root = Some(bisect(&tangency, prev, q));
                break;
            }
            prev = q;
        }
        root.unwrap_or_else(|| {
            warning = Some(format!("no tangency point for multiplier {lambda}; using q = 1"));
            1.0
        })
    };

    let mut knots = vec![(0.0, 0.0)];
    if q_dagger > 0.0 {
        let slope = dp(q_dagger);
        knots.push((q_dagger, slope * q_dagger));
    }
    knots.extend(curve.knots().iter().filter(|k| k.0 > q_dagger + 1e-12).copied());
    if knots[knots.len() - 1].0 < 1.0 {
        knots.push((1.0, p(1.0)));
    }
    let hull = RevenueCurve::new(knots)?;
    Ok(LagrangianCurve { curve, hull, q_dagger, warning })
}

/// Bisection for a sign change of `f` from negative at `lo` to non-negative at `hi`.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Curve from explicit knots `(q, value)`.
pub fn synthetic_curve(knots: &[(f64, f64)]) -> Result<RevenueCurve> {
    if let Some(k) = knots.iter().find(|k| !(0.0..=1.0).contains(&k.0)) {
        return Err(Error::InvalidCurve(format!("quantile {} lies outside [0, 1]", k.0)));
    }
    RevenueCurve::new(knots.to_vec())
}

/// Random concave curve through the origin with `1..=max_segments` segments,
/// non-negative everywhere. Slopes start in `(0, 4]` and only decrease.
pub fn random_concave_curve<R: Rng + ?Sized>(rng: &mut R, max_segments: usize) -> RevenueCurve {
    let segments = rng.gen_range(1..=max_segments.max(1));
    let mut cuts: Vec<f64> = (0..segments - 1).map(|_| rng.gen_range(0.02..0.98)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut qs = vec![0.0];
    qs.extend(cuts);
    qs.push(1.0);

    let mut slope: f64 = rng.gen_range(0.05..4.0);
    let mut knots = vec![(0.0, 0.0)];
    for w in qs.windows(2) {
        let (_, v) = knots[knots.len() - 1];
        // A negative slope may not push the curve below zero.
        let floor = -v / (w[1] - w[0]);
        let s = slope.max(floor);
        knots.push((w[1], (v + s * (w[1] - w[0])).max(0.0)));
        slope = s - rng.gen_range(0.0..2.0) * s.abs().max(0.1);
    }
    RevenueCurve::new(knots).expect("generated knots are ordered").hull()
}
