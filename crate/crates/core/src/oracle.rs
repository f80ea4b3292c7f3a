//! Exhaustive grid search over allocations.
//!
//! These routines only evaluate rates and compare; they share no code with
//! the closed-form solvers or the learned policy, and serve as ground truth
//! for both. Grids are uniform and include both end points. Work is split
//! across threads by `κ` index, and the reduction always keeps the smallest
//! global index among equal values, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RsmaError};
use crate::rates::{
    common_rate_unchecked, full_report_unchecked, private_rate_unchecked, Allocation, Impropriety, RateReport, Scenario,
};
use std::f64::consts::LN_2;

/// Relative slack on the power budget so that grid points lying on the budget
/// plane are not lost to rounding.
const BUDGET_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_kappa: usize,
    pub n_pc: usize,
    pub n_p1: usize,
    pub n_p2: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_kappa: 201, n_pc: 101, n_p1: 101, n_p2: 101 }
    }
}

impl GridSpec {
    /// Dense grids used by `--verify`.
    pub fn verify() -> Self {
        Self { n_kappa: 801, n_pc: 401, n_p1: 401, n_p2: 401 }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.n_kappa, self.n_pc, self.n_p1, self.n_p2].iter().any(|&n| n < 2) {
            return Err(RsmaError::Domain(format!("every grid needs at least 2 points: {self:?}")));
        }
        Ok(())
    }
}

#[inline]
fn node(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        lo
    } else if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Best allocation found on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub alloc: Allocation,
    pub value: f64,
    pub report: RateReport,
    /// Largest objective change to any axis neighbour of the best node: a
    /// local Lipschitz estimate times the grid step.
    pub resolution_bound: f64,
}

type Index4 = [usize; 4];

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    index: Index4,
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => {
            if y.value > x.value || (y.value == x.value && y.index < x.index) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    }
}

struct Axes {
    spec: GridSpec,
    kappa: (f64, f64),
    tau: f64,
    budget: f64,
}

impl Axes {
    fn full(scenario: &Scenario, spec: &GridSpec) -> Self {
        Self { spec: *spec, kappa: (0.0, 1.0), tau: scenario.tau_sic(), budget: scenario.power_budget() }
    }

    fn pinned(scenario: &Scenario, spec: &GridSpec, kappa: f64) -> Self {
        Self { spec: GridSpec { n_kappa: 1, ..*spec }, kappa: (kappa, kappa), ..Self::full(scenario, spec) }
    }

    fn point(&self, i: Index4) -> (f64, f64, f64, f64) {
        let s = &self.spec;
        (
            node(self.kappa.0, self.kappa.1, s.n_kappa, i[0]),
            node(self.tau, self.budget, s.n_pc, i[1]),
            node(0.0, self.budget, s.n_p1, i[2]),
            node(0.0, self.budget, s.n_p2, i[3]),
        )
    }

    fn len(&self, axis: usize) -> usize {
        let s = &self.spec;
        [s.n_kappa, s.n_pc, s.n_p1, s.n_p2][axis]
    }
}

/// Scans the 4-D grid. `objective` returns `None` for points violating a
/// rate constraint; budget infeasibility is filtered here.
fn scan(axes: &Axes, objective: impl Fn(f64, f64, f64, f64) -> Option<f64> + Sync) -> Option<Candidate> {
    let limit = axes.budget * (1.0 + BUDGET_SLACK);
    (0..axes.spec.n_kappa)
        .into_par_iter()
        .map(|ik| {
            let mut best = None;
            for ipc in 0..axes.spec.n_pc {
                for i1 in 0..axes.spec.n_p1 {
                    let (kappa, p_c, p1, _) = axes.point([ik, ipc, i1, 0]);
                    if p_c + p1 > limit {
                        break;
                    }
                    for i2 in 0..axes.spec.n_p2 {
                        let p2 = node(0.0, axes.budget, axes.spec.n_p2, i2);
                        if p_c + p1 + p2 > limit {
                            break;
                        }
                        if let Some(value) = objective(kappa, p_c, p1, p2) {
                            best = better(best, Some(Candidate { value, index: [ik, ipc, i1, i2] }));
                        }
                    }
                }
            }
            best
        })
        .reduce(|| None, better)
}

fn resolution_bound(axes: &Axes, index: Index4, value: f64, f: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for axis in 0..4 {
        let mut worst: f64 = 0.0;
        for delta in [-1i64, 1] {
            let j = index[axis] as i64 + delta;
            if j < 0 || j as usize >= axes.len(axis) {
                continue;
            }
            let mut nb = index;
            nb[axis] = j as usize;
            let (k, pc, p1, p2) = axes.point(nb);
            worst = worst.max((f(k, pc, p1, p2) - value).abs());
        }
        total += worst;
    }
    total
}

fn finish(
    scenario: &Scenario,
    axes: &Axes,
    best: Option<Candidate>,
    f: impl Fn(f64, f64, f64, f64) -> f64,
) -> Result<GridOptimum> {
    let best = best.ok_or_else(|| RsmaError::Infeasible("no grid point satisfies the constraints".into()))?;
    let (kappa, p_c, p1, p2) = axes.point(best.index);
    let alloc = Allocation::new(p_c, p1, p2, Impropriety::new(kappa)?)?;
    let report = full_report_unchecked(scenario, p_c, p1, p2, kappa);
    let resolution_bound = resolution_bound(axes, best.index, best.value, f);
    Ok(GridOptimum { alloc, value: best.value, report, resolution_bound })
}

/// Maximizes `R_tot` on the grid subject to both minimum private rates, the
/// SIC floor, the budget and `κ ∈ [0, 1]`. Ties go to the lexicographically
/// smallest `(κ, p_c, p1, p2)`.
pub fn grid_sum_rate(scenario: &Scenario, spec: &GridSpec) -> Result<GridOptimum> {
    grid_sum_rate_restricted(scenario, spec, false)
}

/// [`grid_sum_rate`] with `κ` optionally pinned to 0 (proper signaling only).
pub fn grid_sum_rate_restricted(scenario: &Scenario, spec: &GridSpec, proper_only: bool) -> Result<GridOptimum> {
    spec.validate()?;
    let axes = if proper_only { Axes::pinned(scenario, spec, 0.0) } else { Axes::full(scenario, spec) };
    let r_min = scenario.r_min();
    let best = scan(&axes, |k, pc, p1, p2| {
        let rep = full_report_unchecked(scenario, pc, p1, p2, k);
        (rep.r1 >= r_min && rep.r2 >= r_min).then_some(rep.r_tot)
    });
    finish(scenario, &axes, best, |k, pc, p1, p2| full_report_unchecked(scenario, pc, p1, p2, k).r_tot)
}

/// Maximizes `R_1 + R_2` on the grid subject to the SIC floor, the budget and `κ ∈ [0, 1]`.
pub fn grid_private(scenario: &Scenario, spec: &GridSpec) -> Result<GridOptimum> {
    spec.validate()?;
    private_scan(scenario, &Axes::full(scenario, spec))
}

/// [`grid_private`] with `κ` held at a fixed value.
pub fn grid_private_at_kappa(scenario: &Scenario, spec: &GridSpec, kappa: Impropriety) -> Result<GridOptimum> {
    spec.validate()?;
    private_scan(scenario, &Axes::pinned(scenario, spec, kappa.value()))
}

fn private_scan(scenario: &Scenario, axes: &Axes) -> Result<GridOptimum> {
    let l = scenario.lambda();
    let (g1, g2) = (scenario.channel.gamma1(), scenario.channel.gamma2());
    let objective = |k: f64, pc: f64, p1: f64, p2: f64| {
        private_rate_unchecked(g1, p1, p2, pc, l, k) + private_rate_unchecked(g2, p2, p1, pc, l, k)
    };
    let best = scan(axes, |k, pc, p1, p2| Some(objective(k, pc, p1, p2)));
    finish(scenario, axes, best, objective)
}

/// Best `(κ, p_c)` of the common-rate problem at fixed private powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonGridOptimum {
    pub kappa: f64,
    pub p_c: f64,
    /// `R_{c,2}` at the best node (equal to `R_c` since `Γ1 >= Γ2`).
    pub rc: f64,
    /// Bound on how far the true optimum can lie above `rc`.
    pub resolution_bound: f64,
    /// Best feasible value in every `κ` column (`None` if the column is empty).
    pub columns: Vec<Option<f64>>,
}

/// 2-D search over `κ ∈ [0, 1]` and `p_c ∈ [τ_SIC, D]`, `D = P − p1 − p2`,
/// with both minimum private rates enforced exactly.
pub fn grid_common(scenario: &Scenario, p1: f64, p2: f64, spec: &GridSpec) -> Result<CommonGridOptimum> {
    spec.validate()?;
    let d = scenario.power_budget() - p1 - p2;
    let tau = scenario.tau_sic();
    if d < tau {
        return Err(RsmaError::Infeasible(format!("D = {d} is below tau_sic = {tau}")));
    }
    let l = scenario.lambda();
    let (g1, g2) = (scenario.channel.gamma1(), scenario.channel.gamma2());
    let r_min = scenario.r_min();
    let n_pc = spec.n_pc;

    let columns: Vec<Option<(f64, usize)>> = (0..spec.n_kappa)
        .into_par_iter()
        .map(|ik| {
            let k = node(0.0, 1.0, spec.n_kappa, ik);
            let mut best: Option<(f64, usize)> = None;
            for ipc in 0..n_pc {
                let pc = node(tau, d, n_pc, ipc);
                let ok = private_rate_unchecked(g1, p1, p2, pc, l, k) >= r_min
                    && private_rate_unchecked(g2, p2, p1, pc, l, k) >= r_min;
                if ok {
                    let v = common_rate_unchecked(g2, pc, p1, p2, k);
                    if best.is_none_or(|(bv, _)| v > bv) {
                        best = Some((v, ipc));
                    }
                }
            }
            best
        })
        .collect();

    let (ik, (rc, ipc)) = columns
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (i, c)))
        .fold(None, |acc: Option<(usize, (f64, usize))>, x| match acc {
            Some(a) if a.1 .0 >= x.1 .0 => Some(a),
            _ => Some(x),
        })
        .ok_or_else(|| RsmaError::Infeasible("no grid point satisfies the constraints".into()))?;

    // p_c direction: R_{c,2} has slope at most Γ2 / (C2 ln 2).
    let c2 = (p1 + p2) * g2 + 1.0;
    let pc_step = if n_pc > 1 { (d - tau) / (n_pc - 1) as f64 } else { 0.0 };
    let pc_term = g2 / (c2 * LN_2) * pc_step;
    // κ direction: the steepest change between neighbouring column optima
    // around the winner, doubled to cover a peak inside the cell.
    let lo = ik.saturating_sub(2);
    let hi = (ik + 2).min(spec.n_kappa - 1);
    let mut kappa_term: f64 = 0.0;
    for i in lo..hi {
        match (columns[i], columns[i + 1]) {
            (Some(a), Some(b)) => kappa_term = kappa_term.max((a.0 - b.0).abs()),
            // A column boundary next to the winner: the feasible set starts or
            // ends inside the cell; bound by the winner's own magnitude change.
            _ => kappa_term = kappa_term.max(pc_term),
        }
    }
    Ok(CommonGridOptimum {
        kappa: node(0.0, 1.0, spec.n_kappa, ik),
        p_c: node(tau, d, n_pc, ipc),
        rc,
        resolution_bound: 2.0 * (kappa_term + pc_term),
        columns: columns.into_iter().map(|c| c.map(|(v, _)| v)).collect(),
    })
}
