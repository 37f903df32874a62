//! Anonymous pricing, the ex-ante relaxation, and single-agent pricing tools.

use rayon::prelude::*;

use crate::curves::{log_grid, quantile_at_price, OfferCurve, RevenueCurve};
use crate::distributions::ValueDistribution;
use crate::quadrature::integrate_pieces;
use crate::{Error, Result};

/// Number of log-spaced candidate prices in [`ap_optimize`].
pub const AP_PRICE_GRID: usize = 4096;
const AP_REFINEMENTS: usize = 64;
const GOLDEN_TOL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-11;

/// Anything that answers a posted per-unit price with a sale probability.
pub trait PriceTaker {
    /// Probability of a sale at price `p`, `Q(p)`.
    fn accept_probability(&self, p: f64) -> f64;
    /// Prices where `Q` has kinks or jumps.
    fn knot_prices(&self) -> Vec<f64>;
    /// Positive price interval worth searching.
    fn price_range(&self) -> (f64, f64);
}

impl PriceTaker for OfferCurve {
    fn accept_probability(&self, p: f64) -> f64 {
        OfferCurve::accept_probability(self, p)
    }

    fn knot_prices(&self) -> Vec<f64> {
        OfferCurve::knot_prices(self).to_vec()
    }

    fn price_range(&self) -> (f64, f64) {
        OfferCurve::price_range(self)
    }
}

/// A revenue curve treated as a bidder: `Q(p)` is the largest quantile whose
/// chord from the origin has slope at least `p`.
impl PriceTaker for RevenueCurve {
    fn accept_probability(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 1.0;
        }
        quantile_at_price(p, self)
    }

    fn knot_prices(&self) -> Vec<f64> {
        self.knots().iter().filter(|k| k.0 > 0.0 && k.1 > 0.0).map(|k| k.1 / k.0).collect()
    }

    fn price_range(&self) -> (f64, f64) {
        let prices = PriceTaker::knot_prices(self);
        let hi = prices.iter().cloned().fold(0.0, f64::max);
        let lo = prices.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi <= 0.0 {
            return (1.0, 1.0);
        }
        (lo.min(hi).max(hi * 1e-9), hi)
    }
}

impl<T: PriceTaker + ?Sized> PriceTaker for &T {
    fn accept_probability(&self, p: f64) -> f64 {
        (**self).accept_probability(p)
    }

    fn knot_prices(&self) -> Vec<f64> {
        (**self).knot_prices()
    }

    fn price_range(&self) -> (f64, f64) {
        (**self).price_range()
    }
}

/// Anonymous posted price and its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ApResult {
    pub price: f64,
    pub win_probabilities: Vec<f64>,
    pub revenue: f64,
}

/// Revenue of posting `p` to every agent: `p (1 - ∏ (1 - Q_i(p)))`.
pub fn ap_revenue<T: PriceTaker>(agents: &[T], p: f64) -> ApResult {
    let win: Vec<f64> = agents.iter().map(|a| a.accept_probability(p).clamp(0.0, 1.0)).collect();
    let none: f64 = win.iter().map(|q| 1.0 - q).product();
    let revenue = if p > 0.0 { p * (1.0 - none) } else { 0.0 };
    ApResult { price: p, win_probabilities: win, revenue }
}

/// Best anonymous price: every knot price and a log grid are evaluated, then
/// golden-section search refines the best local maxima inside their brackets.
pub fn ap_optimize<T: PriceTaker + Sync>(agents: &[T]) -> Result<ApResult> {
    if agents.is_empty() {
        return Err(Error::InvalidArgument("anonymous pricing needs at least one agent".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut prices = Vec::new();
    for a in agents {
        let (l, h) = a.price_range();
        lo = lo.min(l);
        hi = hi.max(h);
        prices.extend(a.knot_prices());
    }
    prices.extend(log_grid(lo, hi, AP_PRICE_GRID));
    prices.retain(|p| *p > 0.0 && p.is_finite());
    prices.sort_by(f64::total_cmp);
    prices.dedup();

    let revenue = |p: f64| ap_revenue(agents, p).revenue;
    let values: Vec<f64> = prices.par_iter().map(|&p| revenue(p)).collect();

    let mut peaks: Vec<usize> = (0..prices.len())
        .filter(|&i| {
            let left = i == 0 || values[i] >= values[i - 1];
            let right = i + 1 == prices.len() || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(AP_REFINEMENTS);

    let refined: Vec<(f64, f64)> = peaks
        .par_iter()
        .map(|&i| {
            let a = prices[i.saturating_sub(1)];
            let b = prices[(i + 1).min(prices.len() - 1)];
            let p = golden_section_max(&revenue, a, b);
            let r = revenue(p);
            if r > values[i] {
                (p, r)
            } else {
                (prices[i], values[i])
            }
        })
        .collect();
    let (mut best_p, mut best_r) = (prices[0], values[0]);
    for (i, &p) in prices.iter().enumerate() {
        if values[i] > best_r {
            best_p = p;
            best_r = values[i];
        }
    }
    for &(p, r) in &refined {
        if r > best_r || (r == best_r && p < best_p) {
            best_p = p;
            best_r = r;
        }
    }
    Ok(ap_revenue(agents, best_p))
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= GOLDEN_TOL * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Optimal ex-ante relaxation on concave curves.
#[derive(Clone, Debug, PartialEq)]
pub struct EarResult {
    pub quantiles: Vec<f64>,
    pub revenue: f64,
    /// Whether the unit supply is used up.
    pub binding: bool,
}

/// Water-filling: repeatedly extends the curve whose next segment has the
/// steepest positive slope until the quantiles sum to one.
pub fn ear_optimize(curves: &[RevenueCurve]) -> Result<EarResult> {
    if let Some(index) = curves.iter().position(|c| !c.is_concave()) {
        return Err(Error::NotConcave { index });
    }
    let segments: Vec<Vec<(f64, f64, f64)>> = curves.iter().map(|c| c.segments().collect()).collect();
    let mut next = vec![0usize; curves.len()];
    let mut quantiles = vec![0.0; curves.len()];
    let mut used = 0.0;
    while used < 1.0 {
        let mut pick: Option<(usize, f64)> = None;
        for (i, segs) in segments.iter().enumerate() {
            if let Some(&(_, _, slope)) = segs.get(next[i]) {
                if slope > 0.0 && pick.is_none_or(|(_, s)| slope > s) {
                    pick = Some((i, slope));
                }
            }
        }
        let Some((i, _)) = pick else { break };
        let (start, end, _) = segments[i][next[i]];
        let take = (end - start).min(1.0 - used);
        if take >= end - start {
            quantiles[i] = end;
            next[i] += 1;
            used += end - start;
        } else {
            quantiles[i] = start + take;
            used = 1.0;
        }
    }
    let revenue = curves.iter().zip(&quantiles).map(|(c, q)| c.eval(*q)).sum();
    Ok(EarResult { quantiles, revenue, binding: used >= 1.0 - 1e-12 })
}

/// Price selling exactly mass `q`: `sup { p : q(p) >= q }` by bisection.
pub fn market_clearing_price(offer: &OfferCurve, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidArgument(format!("mass must lie in (0, 1], got {q}")));
    }
    let reachable = offer.reachable_mass();
    if q > reachable + 1e-12 {
        return Err(Error::UnreachableMass { requested: q, reachable });
    }
    let mut lo = 0.0;
    let mut hi = offer.values().hi().max(f64::MIN_POSITIVE) * (1.0 + 1e-9) + 1e-300;
    if offer.accept_probability(hi) >= q {
        return Ok(hi);
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if offer.accept_probability(mid) >= q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Expected revenue of posting a price `r ~ F` to a public-budget buyer with
/// values `F`: `E[min(r, w) (1 - F(r⁻))]`.
pub fn random_price_revenue_public(values: &ValueDistribution, budget: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    let mut cuts = values.breakpoints();
    cuts.push(budget);
    let atoms: f64 = values.atoms().iter().map(|(r, m)| r.min(budget) * values.survival(*r) * m).sum();
    let continuous = integrate_pieces(
        |r| r.min(budget) * values.survival(r) * values.density(r),
        values.lo(),
        values.hi(),
        &cuts,
        QUAD_TOL,
    );
    atoms + continuous
}

/// Revenue of posting `max(floor, r)` with `r` drawn from the agent's value law.
pub fn random_price_revenue_floor(offer: &OfferCurve, floor: f64) -> f64 {
    let values = offer.values();
    let at_floor = values.cdf(floor) * offer.revenue(floor);
    at_floor + values.expectation_above(|p| offer.revenue(p), floor)
}

/// Revenue-maximizing quantile of a curve and the chord price `P(q) / q`
/// posted there; ties go to the largest quantile.
pub fn myerson_reserve(curve: &RevenueCurve) -> (f64, f64) {
    let (q, v) = curve.max();
    if q <= 0.0 {
        return (0.0, 0.0);
    }
    (v / q, q)
}

/// Allocation rules of a two-priced mechanism on a quantile grid: `x` is the
/// total allocation and `x_c` the part charged `V(q) - C`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPricedAllocation {
    pub grid: Vec<f64>,
    pub x: Vec<f64>,
    pub x_c: Vec<f64>,
}

impl TwoPricedAllocation {
    /// `x = 1[q <= q_hat]`, `x_c = 1[q <= q_prime]` on `n` cell midpoints.
    pub fn threshold(q_hat: f64, q_prime: f64, n: usize) -> Self {
        let grid: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let x = grid.iter().map(|&q| if q <= q_hat { 1.0 } else { 0.0 }).collect();
        let x_c = grid.iter().map(|&q| if q <= q_prime { 1.0 } else { 0.0 }).collect();
        TwoPricedAllocation { grid, x, x_c }
    }

    pub fn ex_ante_mass(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.x.len().max(1) as f64
    }
}

/// Upper bound on a capacitated agent's revenue at ex-ante mass `q_hat`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPricedBound {
    pub q_prime: f64,
    pub p_at_q_prime: f64,
    /// `E[(P')⁺ x]`, `E[(P')⁺ x_c]`, and the bound on `E[(V - C)⁺ x_c]`.
    pub terms: [f64; 3],
    pub total: f64,
    /// `2 + ln(h̄ / C)`.
    pub multiplier: f64,
    /// `P(q') (2 + ln(h̄ / C))`.
    pub bound: f64,
    pub allocation: TwoPricedAllocation,
}

/// Evaluates the three-term bound for a concave price-posting curve `P`,
/// capacity `C <= h̄` and target mass `q_hat`, with `q' = min(Q(m*, P), q_hat)`.
pub fn risk_two_priced_bound(p: &RevenueCurve, capacity: f64, h_bar: f64, q_hat: f64) -> Result<TwoPricedBound> {
    if !(capacity > 0.0) {
        return Err(Error::InvalidArgument(format!("capacity must be positive, got {capacity}")));
    }
    if capacity > h_bar {
        return Err(Error::InvalidArgument(format!("capacity {capacity} exceeds the largest value {h_bar}")));
    }
    if !p.is_concave() {
        return Err(Error::NotConcave { index: 0 });
    }
    let q_hat = q_hat.clamp(0.0, 1.0);
    let (reserve, _) = myerson_reserve(p);
    let q_prime = quantile_at_price(reserve, p).min(q_hat);
    let p_prime = p.eval(q_prime);

    let rising = |upto: f64| -> f64 {
        p.segments().filter(|s| s.2 > 0.0 && s.0 < upto).map(|(a, b, slope)| slope * (b.min(upto) - a)).sum()
    };
    let third = if p_prime > 0.0 {
        let f = |q: f64| {
            let v = if q > 0.0 { h_bar.min(p_prime / q) } else { h_bar };
            (v - capacity).max(0.0)
        };
        let cuts = [p_prime / h_bar, p_prime / capacity];
        integrate_pieces(f, 0.0, 1.0, &cuts, QUAD_TOL)
    } else {
        0.0
    };
    let terms = [rising(q_hat), rising(q_prime), third];
    let multiplier = 2.0 + (h_bar / capacity).ln();
    Ok(TwoPricedBound {
        q_prime,
        p_at_q_prime: p_prime,
        terms,
        total: terms.iter().sum(),
        multiplier,
        bound: p_prime * multiplier,
        allocation: TwoPricedAllocation::threshold(q_hat, q_prime, 1024),
    })
}

/// Curve `q̂ -> total` of [`risk_two_priced_bound`] on `grid + 1` quantiles
/// plus the monopoly quantile.
pub fn two_priced_upper_curve(p: &RevenueCurve, capacity: f64, h_bar: f64, grid: usize) -> Result<RevenueCurve> {
    let mut qs: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    qs.push(myerson_reserve(p).1);
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let knots: Result<Vec<(f64, f64)>> =
        qs.iter().map(|&q| Ok((q, risk_two_priced_bound(p, capacity, h_bar, q)?.total))).collect();
    RevenueCurve::new(knots?)
}
