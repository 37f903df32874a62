//! Brute-force and linear-programming oracles.
//!
//! The ex-ante LP works on a finite product type space. For each budget level
//! it enforces value incentive compatibility (monotone allocation with the
//! discrete Myerson payments) and the budget cap, but nothing across budget
//! levels, so for private budgets it gives an upper bound `R̄(q)` on the
//! ex-ante revenue curve.
//!
//! The allocation at budget level `j` is written as increments `d_kj >= 0` at
//! the thresholds `t_0 = 0, t_1 = v_1, ..., t_m = v_m`: type `i` gets
//! `x_ij = Σ_{k<=i} d_kj` and pays `Σ_{1<=k<=i} t_k d_kj`. The `t_0` column is
//! an allocation the lowest type receives for free, i.e. an information rent
//! `v_1 d_0j` it keeps; without it exact ex-ante masses that no positive price
//! reaches (zero budgets) would be infeasible.

use rayon::prelude::*;

use crate::curves::{Agent, AgentModel, RevenueCurve};
use crate::distributions::Distribution;
use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 1_000_000;
/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

/// Default oracle discretization.
pub const DEFAULT_VALUE_POINTS: usize = 60;
pub const DEFAULT_BUDGET_POINTS: usize = 20;
pub const DEFAULT_QUANTILE_GRID: usize = 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize c·x` subject to the constraints and `lower <= x <= upper`.
/// Lower bounds must be finite; upper bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Non-negative variables with no upper bound.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Two-phase dense tableau simplex: largest reduced cost pricing, falling back
/// to Bland's rule after a run of degenerate pivots.
pub fn simplex_solve(lp: &LinearProgram) -> Result<SimplexSolution> {
    let n = lp.objective.len();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} variables but {} lower and {} upper bounds",
            n,
            lp.lower.len(),
            lp.upper.len()
        )));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint {i} has {} coefficients for {n} variables",
                c.coeffs.len()
            )));
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Lp(format!("constraint {i} has non-finite data")));
        }
    }
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(Error::Lp("objective has non-finite coefficients".into()));
    }
    if lp.lower.iter().any(|l| !l.is_finite()) || lp.upper.iter().any(|u| u.is_nan()) {
        return Err(Error::Lp("lower bounds must be finite".into()));
    }
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| u < l) {
        return Ok(SimplexSolution { status: LpStatus::Infeasible, x: lp.lower.clone(), objective: f64::NAN });
    }

    // Shift to x' = x - lower >= 0 and turn finite upper bounds into rows.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            let shift: f64 = c.coeffs.iter().zip(&lp.lower).map(|(a, l)| a * l).sum();
            (c.coeffs.clone(), c.sense, c.rhs - shift)
        })
        .collect();
    for j in 0..n {
        if lp.upper[j].is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Sense::Le, lp.upper[j] - lp.lower[j]));
        }
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|a| *a = -*a);
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let width = n + slacks + artificials;
    let mut tab = Tableau::new(m, width);
    let first_artificial = n + slacks;
    let (mut s, mut a) = (n, first_artificial);
    for (r, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        tab.row_mut(r)[..n].copy_from_slice(coeffs);
        tab.set_rhs(r, *rhs);
        match sense {
            Sense::Le => {
                tab.set(r, s, 1.0);
                tab.basis[r] = s;
                s += 1;
            }
            Sense::Ge => {
                tab.set(r, s, -1.0);
                tab.set(r, a, 1.0);
                tab.basis[r] = a;
                s += 1;
                a += 1;
            }
            Sense::Eq => {
                tab.set(r, a, 1.0);
                tab.basis[r] = a;
                a += 1;
            }
        }
    }

    let scale = rows.iter().map(|r| r.2.abs()).fold(1.0, f64::max);
    if artificials > 0 {
        let mut cost = vec![0.0; width];
        cost[first_artificial..].iter_mut().for_each(|c| *c = -1.0);
        tab.price_out(&cost);
        match tab.run(width)? {
            LpStatus::Optimal => {}
            other => return Err(Error::Lp(format!("phase one ended {other:?}"))),
        }
        if tab.objective() < -1e-9 * scale {
            return Ok(SimplexSolution { status: LpStatus::Infeasible, x: lp.lower.clone(), objective: f64::NAN });
        }
        tab.evict_artificials(first_artificial);
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    tab.price_out(&cost);
    let status = tab.run(first_artificial)?;
    let mut x = lp.lower.clone();
    for r in 0..m {
        let b = tab.basis[r];
        if b < n {
            x[b] += tab.rhs(r).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SimplexSolution { status, x, objective })
}

/// Row-major tableau with the reduced-cost row stored last.
struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(rows: usize, width: usize) -> Self {
        Tableau { rows, width, data: vec![0.0; (rows + 1) * (width + 1)], basis: vec![0; rows] }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.data[r * s..(r + 1) * s]
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.stride() + c]
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let s = self.stride();
        self.data[r * s + c] = v;
    }

    fn rhs(&self, r: usize) -> f64 {
        self.get(r, self.width)
    }

    fn set_rhs(&mut self, r: usize, v: f64) {
        let w = self.width;
        self.set(r, w, v);
    }

    /// Objective value of the current basis (stored negated in the cost row).
    fn objective(&self) -> f64 {
        -self.rhs(self.rows)
    }

    /// Writes reduced costs `c_j - c_B B⁻¹ a_j` for the current basis.
    fn price_out(&mut self, cost: &[f64]) {
        let (m, w) = (self.rows, self.width);
        let mut z = vec![0.0; w + 1];
        z[..w].copy_from_slice(cost);
        for r in 0..m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (c, zc) in z.iter_mut().enumerate() {
                    *zc -= cb * self.get(r, c);
                }
            }
        }
        self.row_mut(m).copy_from_slice(&z);
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let s = self.stride();
        let inv = 1.0 / self.get(pr, pc);
        for v in self.row_mut(pr) {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[pr * s..(pr + 1) * s].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.get(r, pc);
            if f != 0.0 {
                let row = &mut self.data[r * s..(r + 1) * s];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Maximizes, letting only columns `< allowed` enter. Entering columns
    /// follow the largest reduced cost until pivots stop making progress, then
    /// Bland's rule takes over, which cannot cycle.
    fn run(&mut self, allowed: usize) -> Result<LpStatus> {
        let mut stalled = 0usize;
        for _ in 0..MAX_PIVOTS {
            let m = self.rows;
            let entering = if stalled < STALL_LIMIT {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..allowed {
                    let d = self.get(m, c);
                    if d > COST_EPS && best.is_none_or(|(_, b)| d > b) {
                        best = Some((c, d));
                    }
                }
                best.map(|b| b.0)
            } else {
                (0..allowed).find(|&c| self.get(m, c) > COST_EPS)
            };
            let Some(pc) = entering else {
                return Ok(LpStatus::Optimal);
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..m {
                let a = self.get(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    best = match best {
                        Some((br, brow)) if ratio > br || (ratio == br && self.basis[r] > self.basis[brow]) => {
                            Some((br, brow))
                        }
                        _ => Some((ratio, r)),
                    };
                }
            }
            match best {
                None => return Ok(LpStatus::Unbounded),
                Some((ratio, pr)) => {
                    if ratio * self.get(m, pc) > 0.0 {
                        stalled = 0;
                    } else {
                        stalled += 1;
                    }
                    self.pivot(pr, pc)
                }
            }
        }
        Err(Error::Lp(format!("no convergence after {MAX_PIVOTS} pivots")))
    }

    /// Pivots zero-valued artificial variables out of the basis where possible.
    fn evict_artificials(&mut self, first_artificial: usize) {
        for r in 0..self.rows {
            if self.basis[r] >= first_artificial {
                if let Some(c) = (0..first_artificial).find(|&c| self.get(r, c).abs() > 1e-9) {
                    self.pivot(r, c);
                }
            }
        }
    }
}

/// Utility model of a discrete type space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceModel {
    Linear,
    PublicBudget,
    PrivateBudget,
}

/// Finite product law over values and budgets.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTypeSpace {
    values: Vec<f64>,
    value_probs: Vec<f64>,
    budgets: Vec<f64>,
    budget_probs: Vec<f64>,
    model: SpaceModel,
}

fn discrete_parts(d: &Distribution) -> Result<(Vec<f64>, Vec<f64>)> {
    match d {
        Distribution::Discrete { values, probs } => Ok((values.clone(), probs.clone())),
        Distribution::PointMass { v } => Ok((vec![*v], vec![1.0])),
        _ => Err(Error::InvalidArgument("type spaces need discrete laws; discretize first".into())),
    }
}

impl DiscreteTypeSpace {
    /// Linear agents: a single budget level at `+∞`.
    pub fn linear(values: &Distribution) -> Result<Self> {
        let (values, value_probs) = discrete_parts(values)?;
        Self::build(values, value_probs, vec![f64::INFINITY], vec![1.0], SpaceModel::Linear)
    }

    pub fn public_budget(values: &Distribution, budget: f64) -> Result<Self> {
        let (values, value_probs) = discrete_parts(values)?;
        Self::build(values, value_probs, vec![budget], vec![1.0], SpaceModel::PublicBudget)
    }

    pub fn private_budget(values: &Distribution, budgets: &Distribution) -> Result<Self> {
        let (values, value_probs) = discrete_parts(values)?;
        let (budgets, budget_probs) = discrete_parts(budgets)?;
        Self::build(values, value_probs, budgets, budget_probs, SpaceModel::PrivateBudget)
    }

    /// Discretizes an agent's laws to `value_points × budget_points` types.
    pub fn from_agent(agent: &Agent, value_points: usize, budget_points: usize) -> Result<Self> {
        match &agent.model {
            AgentModel::Linear { values } => Self::linear(&values.discretize(value_points)?),
            AgentModel::PublicBudget { values, budget } => {
                Self::public_budget(&values.discretize(value_points)?, *budget)
            }
            AgentModel::PrivateBudget { values, budgets } => {
                Self::private_budget(&values.discretize(value_points)?, &budgets.discretize(budget_points)?)
            }
            AgentModel::Capacitated { .. } | AgentModel::Synthetic { .. } => Err(Error::InvalidAgent {
                id: agent.id.clone(),
                reason: "the ex-ante oracle covers linear and budgeted agents only".into(),
            }),
        }
    }

    fn build(
        values: Vec<f64>,
        value_probs: Vec<f64>,
        budgets: Vec<f64>,
        budget_probs: Vec<f64>,
        model: SpaceModel,
    ) -> Result<Self> {
        let check = |xs: &[f64], ps: &[f64], what: &str| -> Result<()> {
            if xs.is_empty() || xs.len() != ps.len() {
                return Err(Error::DimensionMismatch(format!("{what}: {} points, {} masses", xs.len(), ps.len())));
            }
            if xs.windows(2).any(|w| w[0] >= w[1]) || xs.iter().any(|x| x.is_nan() || *x < 0.0) {
                return Err(Error::InvalidArgument(format!("{what} must be non-negative and strictly increasing")));
            }
            if ps.iter().any(|p| !(*p > 0.0)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("{what} masses must be positive and sum to 1")));
            }
            Ok(())
        };
        check(&values, &value_probs, "values")?;
        check(&budgets, &budget_probs, "budgets")?;
        Ok(DiscreteTypeSpace { values, value_probs, budgets, budget_probs, model })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_probs(&self) -> &[f64] {
        &self.value_probs
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn budget_probs(&self) -> &[f64] {
        &self.budget_probs
    }

    pub fn model(&self) -> SpaceModel {
        self.model
    }
}

/// Optimal single-agent mechanism on a discrete space at a fixed ex-ante mass.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `allocations[i][j]` for value `i`, budget `j`.
    pub allocations: Vec<Vec<f64>>,
    pub payments: Vec<Vec<f64>>,
    /// Utility kept by the lowest value at each budget level.
    pub rents: Vec<f64>,
    pub objective: f64,
    pub quantile: f64,
}

/// The threshold-form program behind [`ex_ante_revenue_lp`]. Variable
/// `j * (m + 1) + k` is the allocation increment at threshold `k` for budget
/// `j`, where threshold 0 is price 0 and threshold `k >= 1` is value `k - 1`.
pub fn ex_ante_program(space: &DiscreteTypeSpace, q: f64) -> Result<LinearProgram> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("ex-ante mass must lie in [0, 1], got {q}")));
    }
    let (m, nb) = (space.values.len(), space.budgets.len());
    let thresholds = thresholds(space);
    // survival[k] = Pr[value index >= k], with threshold 0 reaching everyone.
    let mut survival = vec![0.0; m + 1];
    let mut acc = 0.0;
    for i in (0..m).rev() {
        acc += space.value_probs[i];
        survival[i + 1] = acc;
    }
    survival[0] = 1.0;

    let var = |k: usize, j: usize| j * (m + 1) + k;
    let nvars = (m + 1) * nb;
    let mut objective = vec![0.0; nvars];
    let mut mass = vec![0.0; nvars];
    for j in 0..nb {
        for k in 0..=m {
            objective[var(k, j)] = space.budget_probs[j] * thresholds[k] * survival[k];
            mass[var(k, j)] = space.budget_probs[j] * survival[k];
        }
    }
    let mut lp = LinearProgram::new(objective);
    for j in 0..nb {
        let mut cap = vec![0.0; nvars];
        (0..=m).for_each(|k| cap[var(k, j)] = 1.0);
        lp.constrain(cap, Sense::Le, 1.0);
        if space.budgets[j].is_finite() {
            let mut budget = vec![0.0; nvars];
            (0..=m).for_each(|k| budget[var(k, j)] = thresholds[k]);
            lp.constrain(budget, Sense::Le, space.budgets[j]);
        }
    }
    lp.constrain(mass, Sense::Eq, q);
    Ok(lp)
}

fn thresholds(space: &DiscreteTypeSpace) -> Vec<f64> {
    std::iter::once(0.0).chain(space.values.iter().copied()).collect()
}

/// Maximizes expected payment at ex-ante sale probability exactly `q`.
pub fn ex_ante_revenue_lp(space: &DiscreteTypeSpace, q: f64) -> Result<LpSolution> {
    let lp = ex_ante_program(space, q)?;
    let (m, nb) = (space.values.len(), space.budgets.len());
    let thresholds = thresholds(space);
    let var = |k: usize, j: usize| j * (m + 1) + k;
    let sol = simplex_solve(&lp)?;

    let mut allocations = vec![vec![0.0; nb]; m];
    let mut payments = vec![vec![0.0; nb]; m];
    let mut rents = vec![0.0; nb];
    if sol.status == LpStatus::Optimal {
        for j in 0..nb {
            let (mut x, mut pay) = (sol.x[var(0, j)], 0.0);
            rents[j] = thresholds[1] * x;
            for i in 0..m {
                let d = sol.x[var(i + 1, j)];
                x += d;
                pay += thresholds[i + 1] * d;
                allocations[i][j] = x;
                payments[i][j] = pay;
            }
        }
    }
    Ok(LpSolution { status: sol.status, allocations, payments, rents, objective: sol.objective, quantile: q })
}

/// `R̄` on `grid` equally spaced quantiles `k / (grid - 1)`, solved in parallel.
pub fn ex_ante_curve_oracle(space: &DiscreteTypeSpace, grid: usize) -> Result<RevenueCurve> {
    if grid < 8 {
        return Err(Error::InvalidArgument(format!("oracle grid needs at least 8 quantiles, got {grid}")));
    }
    ex_ante_curve_oracle_at(space, &quantile_grid(grid))
}

/// `k / (grid - 1)` for `k = 0..grid`, ending exactly at 1.
pub fn quantile_grid(grid: usize) -> Vec<f64> {
    (0..grid).map(|k| if k + 1 == grid { 1.0 } else { k as f64 / (grid - 1).max(1) as f64 }).collect()
}

/// `R̄` at the given quantiles (0 and 1 are always included).
pub fn ex_ante_curve_oracle_at(space: &DiscreteTypeSpace, quantiles: &[f64]) -> Result<RevenueCurve> {
    let mut qs: Vec<f64> = quantiles.iter().copied().filter(|q| (0.0..=1.0).contains(q)).collect();
    qs.extend([0.0, 1.0]);
    qs.sort_by(f64::total_cmp);
    qs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let knots: Result<Vec<(f64, f64)>> = qs
        .into_par_iter()
        .map(|q| {
            let sol = ex_ante_revenue_lp(space, q)?;
            match sol.status {
                LpStatus::Optimal => Ok((q, sol.objective)),
                status => Err(Error::Lp(format!("ex-ante LP at q={q} ended {status:?}"))),
            }
        })
        .collect();
    RevenueCurve::new(knots?)
}

/// Price-posting curve of a discrete space: the points `(q(p), p q(p))` at
/// every value price, with the model's units-per-buyer rule.
pub fn discrete_price_posting_points(space: &DiscreteTypeSpace) -> Vec<(f64, f64)> {
    let m = space.values.len();
    (0..m)
        .map(|i| {
            let p = space.values[i];
            let above: f64 = space.value_probs[i..].iter().sum();
            let units: f64 = if p <= 0.0 {
                1.0
            } else {
                space.budgets.iter().zip(&space.budget_probs).map(|(w, g)| g * (w / p).min(1.0)).sum()
            };
            let q = above * units;
            (q, p * q)
        })
        .collect()
}

/// Grid EAR: `max Σ curve_i(q_i)` over multiples of `step` with `Σ q_i <= 1`,
/// for at most three curves.
pub fn brute_force_ear(curves: &[RevenueCurve], step: f64) -> Result<f64> {
    if curves.is_empty() || curves.len() > 3 {
        return Err(Error::InvalidArgument(format!("grid EAR takes one to three curves, got {}", curves.len())));
    }
    if !(step > 0.0 && step <= 0.01) {
        return Err(Error::InvalidArgument(format!("grid step must lie in (0, 0.01], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    let sample = |c: &RevenueCurve| -> Vec<f64> { (0..=n).map(|k| c.eval(k as f64 / n as f64)).collect() };
    // best[k]: best value of the last curve using at most k grid cells.
    let prefix_max = |v: Vec<f64>| -> Vec<f64> {
        let mut out = v;
        for k in 1..out.len() {
            out[k] = out[k].max(out[k - 1]);
        }
        out
    };
    let last = prefix_max(sample(&curves[curves.len() - 1]));
    Ok(match curves.len() {
        1 => last[n],
        2 => {
            let a = sample(&curves[0]);
            (0..=n).map(|i| a[i] + last[n - i]).fold(f64::NEG_INFINITY, f64::max)
        }
        _ => {
            let a = sample(&curves[0]);
            let b = sample(&curves[1]);
            let mut best = f64::NEG_INFINITY;
            for i in 0..=n {
                for j in 0..=n - i {
                    best = best.max(a[i] + b[j] + last[n - i - j]);
                }
            }
            best
        }
    })
}

/// Reference solver for tiny programs: the best objective over every basic
/// feasible point, or `None` if there is none. Assumes a bounded region.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ineqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        match c.sense {
            Sense::Le => ineqs.push((c.coeffs.clone(), c.rhs)),
            Sense::Ge => ineqs.push((c.coeffs.iter().map(|a| -a).collect(), -c.rhs)),
            Sense::Eq => eqs.push((c.coeffs.clone(), c.rhs)),
        }
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = -1.0;
        ineqs.push((e.clone(), -lp.lower[i]));
        if lp.upper[i].is_finite() {
            e[i] = 1.0;
            ineqs.push((e, lp.upper[i]));
        }
    }
    let need = n.checked_sub(eqs.len())?;
    let mut best: Option<f64> = None;
    let mut chosen = Vec::with_capacity(need);
    combinations(ineqs.len(), need, 0, &mut chosen, &mut |pick| {
        let rows: Vec<&(Vec<f64>, f64)> = eqs.iter().chain(pick.iter().map(|&i| &ineqs[i])).collect();
        let Some(x) = solve_square(&rows) else { return };
        let feasible = eqs.iter().all(|(a, b)| (dot(a, &x) - b).abs() <= 1e-9)
            && ineqs.iter().all(|(a, b)| dot(a, &x) <= b + 1e-9);
        if feasible {
            let value = dot(&lp.objective, &x);
            best = Some(best.map_or(value, |b| b.max(value)));
        }
    });
    best
}

fn combinations(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        combinations(n, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
