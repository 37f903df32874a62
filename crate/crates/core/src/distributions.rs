//! Value and budget distributions on bounded, non-negative supports.
//!
//! A buyer with value exactly equal to a posted price accepts it, so the mass
//! accepting price `p` is `1 - F(p⁻)` ([`Distribution::survival`]). The inverse
//! demand is `V(q) = sup { v : 1 - F(v⁻) >= q }`, which sends every quantile of
//! an atom's interval to the atom itself.

use serde::{Deserialize, Serialize};

use crate::quadrature::integrate_pieces;
use crate::{Error, Result};

/// Relative slack used by the regularity and hazard-rate diagnostics.
pub const DIAGNOSTIC_SLACK: f64 = 1e-8;
/// Absolute slack for probability sums.
pub const PROBABILITY_SLACK: f64 = 1e-12;
/// Exponential laws are censored at `EXP_DEFAULT_SPAN / rate` unless told otherwise.
pub const EXP_DEFAULT_SPAN: f64 = 20.0;

const QUAD_TOL: f64 = 1e-12;

/// A probability law on a bounded interval of non-negative reals.
///
/// Serialized as a tagged object, e.g. `{"kind":"uniform","a":0,"b":1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Distribution {
    /// Uniform on `[a, b]`.
    Uniform {
        a: f64,
        b: f64,
    },
    /// `F(v) = 1 - 1/v` on `[1, h)` with an atom of mass `1/h` at `h`.
    EqualRevenue {
        h: f64,
    },
    /// Exponential with the tail beyond `hi` collapsed into an atom at `hi`,
    /// so the hazard rate stays exactly `rate` on `[0, hi)`.
    Exponential {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    PointMass {
        v: f64,
    },
    /// Finite support; `values` strictly increasing.
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    /// CDF interpolated linearly between `(x, F(x))` knots; `x` strictly
    /// increasing, last `F` equal to one, a positive first `F` is an atom.
    PiecewiseLinearCdf {
        knots: Vec<[f64; 2]>,
    },
}

/// Laws used for values.
pub type ValueDistribution = Distribution;
/// Laws used for budgets.
pub type BudgetDistribution = Distribution;

/// Outcome of [`Distribution::regularity_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub regular: bool,
    /// Largest positive second difference of `q V(q)`, relative to the curve maximum.
    pub max_convexity: f64,
    /// Quantile where `max_convexity` occurs.
    pub worst_quantile: f64,
}

/// Outcome of [`Distribution::mhr_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct MhrReport {
    pub mhr: bool,
    /// Largest drop of the hazard rate between consecutive grid points, relative to its maximum.
    pub max_decrease: f64,
    /// Grid points where the density vanishes and the hazard rate says nothing.
    pub indeterminate: Vec<f64>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDistribution(msg.into())
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = Distribution::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn equal_revenue(h: f64) -> Result<Self> {
        let d = Distribution::EqualRevenue { h };
        d.validate()?;
        Ok(d)
    }

    /// Exponential censored at `20 / rate`.
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Distribution::Exponential { rate, hi: None };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential_truncated(rate: f64, hi: f64) -> Result<Self> {
        let d = Distribution::Exponential { rate, hi: Some(hi) };
        d.validate()?;
        Ok(d)
    }

    pub fn point_mass(v: f64) -> Result<Self> {
        let d = Distribution::PointMass { v };
        d.validate()?;
        Ok(d)
    }

    /// Builds a discrete law; values are sorted, duplicates merged and
    /// zero-probability points dropped.
    pub fn discrete(values: &[f64], probs: &[f64]) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(invalid("discrete law needs one probability per value"));
        }
        let mut pairs: Vec<(f64, f64)> = values.iter().zip(probs).map(|(&v, &p)| (v, p)).collect();
        if pairs.iter().any(|(v, p)| !v.is_finite() || !p.is_finite() || *p < 0.0) {
            return Err(invalid("discrete law needs finite values and non-negative probabilities"));
        }
        pairs.retain(|(_, p)| *p > 0.0);
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let d = Distribution::Discrete {
            values: merged.iter().map(|x| x.0).collect(),
            probs: merged.iter().map(|x| x.1).collect(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn piecewise_linear_cdf(knots: Vec<[f64; 2]>) -> Result<Self> {
        let d = Distribution::PiecewiseLinearCdf { knots };
        d.validate()?;
        Ok(d)
    }

    /// Checks the invariants of the law.
    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                    return Err(invalid(format!("uniform needs 0 <= a < b, got a={a}, b={b}")));
                }
            }
            Distribution::EqualRevenue { h } => {
                if !(h.is_finite() && *h >= 1.0) {
                    return Err(invalid(format!("equal-revenue needs h >= 1, got {h}")));
                }
            }
            Distribution::Exponential { rate, hi } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(invalid(format!("exponential needs rate > 0, got {rate}")));
                }
                if let Some(hi) = hi {
                    if !(hi.is_finite() && *hi > 0.0) {
                        return Err(invalid(format!("exponential truncation must be positive, got {hi}")));
                    }
                }
            }
            Distribution::PointMass { v } => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(invalid(format!("point mass needs a finite non-negative value, got {v}")));
                }
            }
            Distribution::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(invalid("discrete law needs matching, non-empty values and probs"));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(invalid("discrete values must be finite and non-negative"));
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("discrete values must be strictly increasing"));
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(invalid("discrete probabilities must be non-negative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROBABILITY_SLACK {
                    return Err(invalid(format!("discrete probabilities sum to {total}, not 1")));
                }
            }
            Distribution::PiecewiseLinearCdf { knots } => {
                if knots.len() < 2 {
                    return Err(invalid("piecewise-linear CDF needs at least two knots"));
                }
                if knots.iter().any(|k| !k[0].is_finite() || !k[1].is_finite()) {
                    return Err(invalid("piecewise-linear CDF knots must be finite"));
                }
                if knots[0][0] < 0.0 {
                    return Err(invalid("piecewise-linear CDF support must be non-negative"));
                }
                if knots.windows(2).any(|w| w[0][0] >= w[1][0] || w[0][1] > w[1][1]) {
                    return Err(invalid("piecewise-linear CDF needs increasing x and non-decreasing F"));
                }
                if knots[0][1] < 0.0 {
                    return Err(invalid("piecewise-linear CDF values must lie in [0, 1]"));
                }
                let last = knots[knots.len() - 1][1];
                if (last - 1.0).abs() > PROBABILITY_SLACK {
                    return Err(invalid(format!("piecewise-linear CDF must end at 1, ends at {last}")));
                }
            }
        }
        Ok(())
    }

    /// Lower end of the support.
    pub fn lo(&self) -> f64 {
        match self {
            Distribution::Uniform { a, .. } => *a,
            Distribution::EqualRevenue { .. } => 1.0,
            Distribution::Exponential { .. } => 0.0,
            Distribution::PointMass { v } => *v,
            Distribution::Discrete { values, .. } => values[0],
            Distribution::PiecewiseLinearCdf { knots } => knots[0][0],
        }
    }

    /// Upper end of the support.
    pub fn hi(&self) -> f64 {
        match self {
            Distribution::Uniform { b, .. } => *b,
            Distribution::EqualRevenue { h } => *h,
            Distribution::Exponential { rate, hi } => hi.unwrap_or(EXP_DEFAULT_SPAN / rate),
            Distribution::PointMass { v } => *v,
            Distribution::Discrete { values, .. } => values[values.len() - 1],
            Distribution::PiecewiseLinearCdf { knots } => knots[knots.len() - 1][0],
        }
    }

    /// Right-continuous CDF `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Distribution::EqualRevenue { h } => {
                if x < 1.0 {
                    0.0
                } else if x >= *h {
                    1.0
                } else {
                    1.0 - 1.0 / x
                }
            }
            Distribution::Exponential { rate, .. } => {
                if x < 0.0 {
                    0.0
                } else if x >= self.hi() {
                    1.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::PointMass { v } => {
                if x >= *v {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Discrete { values, probs } => {
                let n = values.partition_point(|v| *v <= x);
                probs[..n].iter().sum::<f64>().min(1.0)
            }
            Distribution::PiecewiseLinearCdf { knots } => {
                if x < knots[0][0] {
                    0.0
                } else {
                    pw_interp(knots, x)
                }
            }
        }
    }

    /// Left limit `F(x⁻)`: mass strictly below `x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { .. } => self.cdf(x),
            Distribution::EqualRevenue { h } => {
                if x <= 1.0 {
                    0.0
                } else if x > *h {
                    1.0
                } else {
                    1.0 - 1.0 / x
                }
            }
            Distribution::Exponential { rate, .. } => {
                if x <= 0.0 {
                    0.0
                } else if x > self.hi() {
                    1.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::PointMass { v } => {
                if x > *v {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Discrete { values, probs } => {
                let n = values.partition_point(|v| *v < x);
                probs[..n].iter().sum::<f64>().min(1.0)
            }
            Distribution::PiecewiseLinearCdf { knots } => {
                if x <= knots[0][0] {
                    0.0
                } else {
                    pw_interp(knots, x)
                }
            }
        }
    }

    /// Mass accepting a posted price `x`, i.e. `1 - F(x⁻)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Distribution::Exponential { rate, .. } if x > 0.0 && x <= self.hi() => (-rate * x).exp(),
            Distribution::EqualRevenue { h } if x > 1.0 && x <= *h => 1.0 / x,
            _ => 1.0 - self.cdf_left(x),
        }
    }

    /// Mass strictly above `x`, i.e. `1 - F(x)`. Tails of the closed-form
    /// laws are evaluated directly rather than as `1 - F`.
    pub fn survival_strict(&self, x: f64) -> f64 {
        match self {
            Distribution::Exponential { rate, .. } if x >= 0.0 && x < self.hi() => (-rate * x).exp(),
            Distribution::EqualRevenue { h } if x >= 1.0 && x < *h => 1.0 / x,
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Density of the absolutely continuous part (zero at atoms' locations).
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Distribution::EqualRevenue { h } => {
                if x >= 1.0 && x < *h {
                    1.0 / (x * x)
                } else {
                    0.0
                }
            }
            Distribution::Exponential { rate, .. } => {
                if x >= 0.0 && x < self.hi() {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Distribution::PointMass { .. } | Distribution::Discrete { .. } => 0.0,
            Distribution::PiecewiseLinearCdf { knots } => {
                if x < knots[0][0] || x > knots[knots.len() - 1][0] {
                    return 0.0;
                }
                let k = segment_index(knots, x);
                let (x0, f0) = (knots[k][0], knots[k][1]);
                let (x1, f1) = (knots[k + 1][0], knots[k + 1][1]);
                (f1 - f0) / (x1 - x0)
            }
        }
    }

    /// Point masses as `(value, mass)`, increasing in value.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Distribution::Uniform { .. } => Vec::new(),
            Distribution::EqualRevenue { h } => vec![(*h, 1.0 / h)],
            Distribution::Exponential { rate, .. } => {
                let hi = self.hi();
                vec![(hi, (-rate * hi).exp())]
            }
            Distribution::PointMass { v } => vec![(*v, 1.0)],
            Distribution::Discrete { values, probs } => values.iter().copied().zip(probs.iter().copied()).collect(),
            Distribution::PiecewiseLinearCdf { knots } => {
                if knots[0][1] > 0.0 {
                    vec![(knots[0][0], knots[0][1])]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Total mass of the absolutely continuous part.
    pub fn continuous_mass(&self) -> f64 {
        (1.0 - self.atoms().iter().map(|a| a.1).sum::<f64>()).max(0.0)
    }

    /// Points where the CDF or its density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.lo(), self.hi()];
        pts.extend(self.atoms().iter().map(|a| a.0));
        if let Distribution::PiecewiseLinearCdf { knots } = self {
            pts.extend(knots.iter().map(|k| k[0]));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Inverse demand `V(q) = sup { v : 1 - F(v⁻) >= q }`, clamped to `q ∈ [0, 1]`.
    pub fn inverse_demand(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform { a, b } => b - q * (b - a),
            Distribution::EqualRevenue { h } => {
                if q * h <= 1.0 {
                    *h
                } else {
                    1.0 / q
                }
            }
            Distribution::Exponential { rate, .. } => {
                let hi = self.hi();
                if q <= (-rate * hi).exp() {
                    hi
                } else {
                    (-q.ln() / rate).clamp(0.0, hi)
                }
            }
            Distribution::PointMass { v } => *v,
            Distribution::Discrete { values, probs } => {
                let mut upper = 0.0;
                for i in (0..values.len()).rev() {
                    upper += probs[i];
                    if upper >= q - PROBABILITY_SLACK {
                        return values[i];
                    }
                }
                values[0]
            }
            Distribution::PiecewiseLinearCdf { knots } => {
                let t = 1.0 - q;
                let last = knots.len() - 1;
                match knots.iter().rposition(|k| k[1] <= t) {
                    None => knots[0][0],
                    Some(k) if k == last => knots[last][0],
                    Some(k) => {
                        let (x0, f0) = (knots[k][0], knots[k][1]);
                        let (x1, f1) = (knots[k + 1][0], knots[k + 1][1]);
                        x0 + (t - f0) / (f1 - f0) * (x1 - x0)
                    }
                }
            }
        }
    }

    /// `E[g(X)]`, atoms summed exactly and the continuous part integrated numerically.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.expectation_above(g, f64::NEG_INFINITY)
    }

    /// `E[g(X) 1{X > t}]`.
    pub fn expectation_above<G: Fn(f64) -> f64>(&self, g: G, t: f64) -> f64 {
        let atoms: f64 = self.atoms().iter().filter(|(v, _)| *v > t).map(|(v, m)| g(*v) * m).sum();
        if self.continuous_mass() <= 0.0 {
            return atoms;
        }
        let lo = self.lo().max(t);
        let hi = self.hi();
        let mut cuts = self.breakpoints();
        cuts.push(t);
        atoms + integrate_pieces(|x| g(x) * self.density(x), lo, hi, &cuts, QUAD_TOL * hi.max(1.0))
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x)
    }

    /// `Pr[X >= E[X]]`.
    pub fn exceed_mean_probability(&self) -> f64 {
        let mean = self.mean();
        // Quadrature puts the mean within ~1e-12 of its true value; snap onto an
        // atom sitting that close so point masses report exactly one.
        let snapped =
            self.atoms().iter().map(|a| a.0).find(|v| (v - mean).abs() <= 1e-10 * v.abs().max(1.0)).unwrap_or(mean);
        self.survival(snapped)
    }

    /// Checks concavity of `q V(q)` on `grid_size + 1` equally spaced quantiles.
    pub fn regularity_report(&self, grid_size: usize) -> Result<RegularityReport> {
        if grid_size < 16 {
            return Err(Error::InvalidArgument(format!(
                "regularity grid must have at least 16 cells, got {grid_size}"
            )));
        }
        if self.lo() == self.hi() {
            return Ok(RegularityReport { regular: true, max_convexity: 0.0, worst_quantile: 0.0 });
        }
        let revenue: Vec<f64> = (0..=grid_size)
            .map(|k| {
                let q = k as f64 / grid_size as f64;
                q * self.inverse_demand(q)
            })
            .collect();
        let scale = revenue.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst = 0.0;
        let mut worst_q = 0.0;
        for k in 1..grid_size {
            let second = revenue[k - 1] - 2.0 * revenue[k] + revenue[k + 1];
            if second > worst {
                worst = second;
                worst_q = k as f64 / grid_size as f64;
            }
        }
        let max_convexity = worst / scale;
        Ok(RegularityReport { regular: max_convexity <= DIAGNOSTIC_SLACK, max_convexity, worst_quantile: worst_q })
    }

    /// Samples the hazard rate `g / (1 - G)` at cell midpoints and checks it is non-decreasing.
    pub fn mhr_report(&self, grid_size: usize) -> Result<MhrReport> {
        if grid_size < 2 {
            return Err(Error::InvalidArgument(format!("hazard grid must have at least 2 cells, got {grid_size}")));
        }
        let (lo, hi) = (self.lo(), self.hi());
        let mut indeterminate = Vec::new();
        let mut hazards = Vec::with_capacity(grid_size);
        if hi > lo {
            for k in 0..grid_size {
                let w = lo + (k as f64 + 0.5) * (hi - lo) / grid_size as f64;
                let density = self.density(w);
                let tail = self.survival_strict(w);
                if density <= 0.0 || tail <= 0.0 {
                    indeterminate.push(w);
                    continue;
                }
                hazards.push(density / tail);
            }
        }
        if hazards.is_empty() {
            return Ok(MhrReport { mhr: false, max_decrease: 0.0, indeterminate });
        }
        let scale = hazards.iter().cloned().fold(0.0, f64::max);
        let max_drop = hazards.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        let max_decrease = max_drop / scale;
        Ok(MhrReport { mhr: max_decrease <= DIAGNOSTIC_SLACK && indeterminate.is_empty(), max_decrease, indeterminate })
    }

    /// Finite approximation: every atom is kept and the continuous part is
    /// split into `n - #atoms` equal-mass cells represented by their quantile
    /// midpoints.
    pub fn discretize(&self, n: usize) -> Result<Distribution> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("discretization needs n >= 2, got {n}")));
        }
        let atoms = self.atoms();
        let continuous = self.continuous_mass();
        let mut points: Vec<(f64, f64)> = atoms.clone();
        if continuous > PROBABILITY_SLACK {
            // Quantile intervals occupied by atoms, in increasing quantile order.
            let mut occupied: Vec<(f64, f64)> = atoms.iter().map(|(v, m)| (self.survival_strict(*v), *m)).collect();
            occupied.sort_by(|a, b| a.0.total_cmp(&b.0));
            let cells = n.saturating_sub(atoms.len()).max(1);
            let cell_mass = continuous / cells as f64;
            for j in 0..cells {
                let mut q = (j as f64 + 0.5) * cell_mass;
                for (start, len) in &occupied {
                    if q >= *start {
                        q += len;
                    } else {
                        break;
                    }
                }
                points.push((self.inverse_demand(q), cell_mass));
            }
        }
        let values: Vec<f64> = points.iter().map(|p| p.0).collect();
        let probs: Vec<f64> = points.iter().map(|p| p.1).collect();
        let total: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        Distribution::discrete(&values, &probs)
    }
}

fn segment_index(knots: &[[f64; 2]], x: f64) -> usize {
    let n = knots.partition_point(|k| k[0] <= x);
    n.saturating_sub(1).min(knots.len() - 2)
}

fn pw_interp(knots: &[[f64; 2]], x: f64) -> f64 {
    let last = knots.len() - 1;
    if x >= knots[last][0] {
        return 1.0;
    }
    let k = segment_index(knots, x);
    let (x0, f0) = (knots[k][0], knots[k][1]);
    let (x1, f1) = (knots[k + 1][0], knots[k + 1][1]);
    f0 + (x - x0) / (x1 - x0) * (f1 - f0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cdf_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.cdf(0.3), 0.3, 1e-15));
        let er = Distribution::equal_revenue(10.0).unwrap();
        assert!(close(er.cdf(2.0), 0.5, 1e-15));
        assert_eq!(er.cdf(10.0), 1.0);
        assert!(close(er.cdf_left(10.0), 0.9, 1e-15));
        assert_eq!(er.cdf(0.5), 0.0);
    }

    #[test]
    fn inverse_demand_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.inverse_demand(0.3), 0.7, 1e-15));
        let er = Distribution::equal_revenue(10.0).unwrap();
        assert_eq!(er.inverse_demand(0.05), 10.0);
        assert_eq!(er.inverse_demand(0.1), 10.0);
        assert!(close(er.inverse_demand(0.5), 2.0, 1e-15));
        let d = Distribution::discrete(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!(d.inverse_demand(0.5), 2.0);
        assert_eq!(d.inverse_demand(0.50001), 1.0);
        assert_eq!(d.inverse_demand(1.0), 1.0);
        assert_eq!(d.inverse_demand(0.0), 2.0);
    }

    #[test]
    fn piecewise_linear_cdf_matches_uniform() {
        let pw = Distribution::piecewise_linear_cdf(vec![[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]).unwrap();
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!(close(pw.cdf(x), u.cdf(x), 1e-15));
            assert!(close(pw.inverse_demand(x), u.inverse_demand(x), 1e-12));
        }
        assert!(close(pw.mean(), 0.5, 1e-10));
    }

    #[test]
    fn piecewise_linear_cdf_with_leading_atom() {
        let pw = Distribution::piecewise_linear_cdf(vec![[1.0, 0.25], [3.0, 1.0]]).unwrap();
        assert_eq!(pw.atoms(), vec![(1.0, 0.25)]);
        assert_eq!(pw.cdf_left(1.0), 0.0);
        assert_eq!(pw.cdf(1.0), 0.25);
        assert_eq!(pw.inverse_demand(0.9), 1.0);
        assert!(close(pw.inverse_demand(0.375), 2.0, 1e-12));
    }

    #[test]
    fn regularity_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(u.regularity_report(256).unwrap().regular);
        let er = Distribution::equal_revenue(10.0).unwrap();
        assert!(er.regularity_report(256).unwrap().regular);
        let two = Distribution::discrete(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        let rep = two.regularity_report(256).unwrap();
        assert!(!rep.regular);
        assert!(close(rep.worst_quantile, 0.5, 1.0 / 256.0));
        assert!(u.regularity_report(8).is_err());
        let pm = Distribution::point_mass(3.0).unwrap();
        assert!(pm.regularity_report(16).unwrap().regular);
    }

    // Oracle: P(q) = q V(q) on the two-point law is 2q up to q = 1/2 and q
    // afterwards; its second difference at the grid point just past 1/2 is
    // (1/2 - 1) + ... > 0. Enumerate it directly.
    #[test]
    fn two_point_law_has_convex_kink_by_enumeration() {
        let n = 64;
        let p = |q: f64| if q <= 0.5 { 2.0 * q } else { q };
        let worst = (1..n)
            .map(|k| {
                let h = 1.0 / n as f64;
                let q = k as f64 * h;
                p(q - h) - 2.0 * p(q) + p(q + h)
            })
            .fold(f64::MIN, f64::max);
        assert!(worst > 0.4);
    }

    #[test]
    fn mhr_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(u.mhr_report(200).unwrap().mhr);
        let e = Distribution::exponential_truncated(1.0, 10.0).unwrap();
        let rep = e.mhr_report(200).unwrap();
        assert!(rep.mhr, "{rep:?}");
        let er = Distribution::equal_revenue(10.0).unwrap();
        let rep = er.mhr_report(200).unwrap();
        assert!(!rep.mhr);
        // hazard 1/v drops from ~1 to ~0.1 across [1, 10)
        assert!(rep.max_decrease > 0.0);
        let d = Distribution::discrete(&[0.0, 2.0], &[0.75, 0.25]).unwrap();
        let rep = d.mhr_report(10).unwrap();
        assert!(!rep.mhr);
        assert_eq!(rep.indeterminate.len(), 10);
    }

    #[test]
    fn exceed_mean_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.exceed_mean_probability(), 0.5, 1e-10));
        let e = Distribution::exponential_truncated(1.0, 60.0).unwrap();
        assert!(close(e.exceed_mean_probability(), (-1f64).exp(), 1e-9));
        let pm = Distribution::point_mass(2.0).unwrap();
        assert_eq!(pm.exceed_mean_probability(), 1.0);
        let d = Distribution::discrete(&[0.0, 3.0], &[1.0 - 1.0 / 9.0, 1.0 / 9.0]).unwrap();
        assert!(close(d.exceed_mean_probability(), 1.0 / 9.0, 1e-15));
    }

    #[test]
    fn exponential_hazard_stays_flat_in_the_far_tail() {
        let e = Distribution::exponential(1.0).unwrap();
        let rep = e.mhr_report(512).unwrap();
        assert!(rep.mhr, "{rep:?}");
        assert!(rep.max_decrease < 1e-12);
        assert_eq!(e.survival_strict(19.0), (-19.0f64).exp());
    }

    #[test]
    fn discretize_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let d = u.discretize(2).unwrap();
        assert_eq!(d, Distribution::Discrete { values: vec![0.25, 0.75], probs: vec![0.5, 0.5] });

        let pm = Distribution::point_mass(3.0).unwrap();
        for n in [2, 5, 40] {
            assert_eq!(pm.discretize(n).unwrap(), Distribution::Discrete { values: vec![3.0], probs: vec![1.0] });
        }

        // Oracle: the atom (10, 0.1) occupies quantiles [0, 0.1]; the three
        // continuous cells of mass 0.3 have quantile midpoints 0.25, 0.55,
        // 0.85, i.e. values 1/0.25, 1/0.55, 1/0.85.
        let er = Distribution::equal_revenue(10.0).unwrap();
        let Distribution::Discrete { values, probs } = er.discretize(4).unwrap() else { panic!() };
        let expect_v = [1.0 / 0.85, 1.0 / 0.55, 4.0, 10.0];
        let expect_p = [0.3, 0.3, 0.3, 0.1];
        for k in 0..4 {
            assert!(close(values[k], expect_v[k], 1e-12), "{values:?}");
            assert!(close(probs[k], expect_p[k], 1e-12));
        }
        assert!(u.discretize(1).is_err());
    }

    #[test]
    fn discretized_mean_error_shrinks() {
        let e = Distribution::exponential(1.0).unwrap();
        let mean = e.mean();
        let err = |n| (e.discretize(n).unwrap().mean() - mean).abs();
        assert!(err(200) < err(20));
        assert!(err(200) < 0.05);
    }

    #[test]
    fn validation_errors() {
        assert!(Distribution::uniform(1.0, 0.0).is_err());
        assert!(Distribution::equal_revenue(0.5).is_err());
        assert!(Distribution::discrete(&[1.0, 2.0], &[0.5, 0.6]).is_err());
        assert!(Distribution::discrete(&[1.0], &[0.5, 0.5]).is_err());
        assert!(Distribution::piecewise_linear_cdf(vec![[0.0, 0.0], [1.0, 0.9]]).is_err());
        assert!(Distribution::Discrete { values: vec![2.0, 1.0], probs: vec![0.5, 0.5] }.validate().is_err());
    }

    #[test]
    fn discrete_constructor_merges_and_sorts() {
        let d = Distribution::discrete(&[2.0, 1.0, 2.0, 5.0], &[0.25, 0.25, 0.5, 0.0]).unwrap();
        assert_eq!(d, Distribution::Discrete { values: vec![1.0, 2.0], probs: vec![0.25, 0.75] });
    }
}
