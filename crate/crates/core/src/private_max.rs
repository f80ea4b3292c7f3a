//! Private sum-rate maximization.
//!
//! Both private rates strictly increase with `κ` whenever the residual is
//! non-zero, and decrease with `p_c` at `κ = 1`, so the optimum sits at
//! `κ = 1, p_c = τ_SIC`. What remains is a one-dimensional split of
//! `P' = P − τ_SIC` between the private streams.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RsmaError};
use crate::rates::{
    full_report, private_rate_dpc, private_rate_power_gradient, private_rate_unchecked, Allocation, Impropriety,
    Scenario,
};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const PRESCAN_POINTS: usize = 65;
const FALLBACK_POINTS: usize = 4097;

/// How the power split was located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitSearch {
    /// Golden-section search refined by bisection on the stationarity condition.
    GoldenSection,
    /// The objective was not unimodal on the pre-scan; dense grid plus refinement.
    GridFallback,
    /// No private power to distribute.
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivateMaxSolution {
    pub alloc: Allocation,
    /// `R_1 + R_2` at `alloc`.
    pub objective: f64,
    /// `|d(R_1+R_2)/dp_1|` along `p_1 + p_2 = P'` for an interior split; for a
    /// boundary split, the amount by which the derivative points outward (0 when
    /// the active-constraint sign condition holds).
    pub kkt_residual: f64,
    pub search: SplitSearch,
}

/// Maximizes `R_1 + R_2` subject to `p_c >= τ_SIC`, the power budget and `κ ∈ [0, 1]`.
pub fn solve(scenario: &Scenario) -> Result<PrivateMaxSolution> {
    solve_with_kappa(scenario, Impropriety::MAXIMAL)
}

/// Same reduced problem with the impropriety pinned to `kappa` (`κ = 0` gives
/// the proper-signaling baseline). The common power stays at `τ_SIC`.
pub fn solve_with_kappa(scenario: &Scenario, kappa: Impropriety) -> Result<PrivateMaxSolution> {
    let p_c = scenario.tau_sic();
    let budget = scenario.power_budget() - p_c;
    if budget < 0.0 {
        return Err(RsmaError::Infeasible(format!(
            "tau_sic = {} exceeds the power budget {}",
            p_c,
            scenario.power_budget()
        )));
    }
    let split = SplitObjective { scenario, kappa: kappa.value(), p_c, budget };
    if budget == 0.0 {
        let alloc = Allocation::new(p_c, 0.0, 0.0, kappa)?;
        return Ok(PrivateMaxSolution { alloc, objective: 0.0, kkt_residual: 0.0, search: SplitSearch::Trivial });
    }

    let (p1, search) = split.maximize();
    let p2 = (budget - p1).max(0.0);
    let alloc = Allocation::new(p_c, p1, p2, kappa)?;
    let objective = full_report(scenario, &alloc)?.private_sum();
    Ok(PrivateMaxSolution { alloc, objective, kkt_residual: split.kkt_residual(p1), search })
}

/// `R_1 + R_2` as a function of `p_1` with `p_2 = P' − p_1`.
struct SplitObjective<'a> {
    scenario: &'a Scenario,
    kappa: f64,
    p_c: f64,
    budget: f64,
}

impl SplitObjective<'_> {
    fn value(&self, p1: f64) -> f64 {
        let p2 = (self.budget - p1).max(0.0);
        let l = self.scenario.lambda();
        let g1 = self.scenario.channel.gamma1();
        let g2 = self.scenario.channel.gamma2();
        private_rate_unchecked(g1, p1, p2, self.p_c, l, self.kappa)
            + private_rate_unchecked(g2, p2, p1, self.p_c, l, self.kappa)
    }

    /// Derivative along the budget line.
    fn slope(&self, p1: f64) -> f64 {
        let p2 = (self.budget - p1).max(0.0);
        let l = self.scenario.lambda();
        let (d11, d12) = private_rate_power_gradient(self.scenario.channel.gamma1(), p1, p2, self.p_c, l, self.kappa);
        let (d22, d21) = private_rate_power_gradient(self.scenario.channel.gamma2(), p2, p1, self.p_c, l, self.kappa);
        // dR1/dp1 − dR1/dp2 + dR2/dp1 − dR2/dp2
        d11 - d12 + d21 - d22
    }

    fn kkt_residual(&self, p1: f64) -> f64 {
        let g = self.slope(p1);
        if p1 <= 0.0 {
            g.max(0.0)
        } else if p1 >= self.budget {
            (-g).max(0.0)
        } else {
            g.abs()
        }
    }

    fn maximize(&self) -> (f64, SplitSearch) {
        let step = self.budget / (PRESCAN_POINTS - 1) as f64;
        let scan: Vec<f64> = (0..PRESCAN_POINTS).map(|i| self.value(i as f64 * step)).collect();
        let (search, lo, hi) = if count_local_maxima(&scan) > 1 {
            let fine = self.budget / (FALLBACK_POINTS - 1) as f64;
            let best = (0..FALLBACK_POINTS)
                .map(|i| (i, self.value(i as f64 * fine)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
                .0;
            let lo = best.saturating_sub(1) as f64 * fine;
            let hi = ((best + 1) as f64 * fine).min(self.budget);
            (SplitSearch::GridFallback, lo, hi)
        } else {
            (SplitSearch::GoldenSection, 0.0, self.budget)
        };
        let interior = self.refine(golden_section(|x| self.value(x), lo, hi, 1e-12 * self.budget));
        let mut best = interior;
        let mut best_val = self.value(interior);
        // Boundaries win only when strictly better, so ties go to the interior point.
        for edge in [0.0, self.budget] {
            let v = self.value(edge);
            if v > best_val {
                best = edge;
                best_val = v;
            }
        }
        (best, search)
    }

    /// Polishes a golden-section estimate by bisection on the slope, provided a
    /// sign change can be bracketed around it.
    fn refine(&self, x0: f64) -> f64 {
        let mut h = 1e-6 * self.budget;
        let (mut lo, mut hi) = ((x0 - h).max(0.0), (x0 + h).min(self.budget));
        while !(self.slope(lo) > 0.0 && self.slope(hi) < 0.0) {
            h *= 4.0;
            if h > self.budget {
                return x0;
            }
            lo = (x0 - h).max(0.0);
            hi = (x0 + h).min(self.budget);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        if self.value(mid) >= self.value(x0) {
            mid
        } else {
            x0
        }
    }
}

fn count_local_maxima(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .count()
}

/// Golden-section maximization of `f` on `[lo, hi]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        }
        if x1 >= x2 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Numerically evaluated directional derivatives of `R_1 + R_2` at an allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Witness {
    /// `∂(R_1+R_2)/∂κ` by central (or one-sided at the box edge) differences.
    pub d_obj_d_kappa: f64,
    /// `∂(R_1+R_2)/∂p_c` at `κ = 1` from the analytic derivative.
    pub d_obj_d_pc_at_max_impropriety: f64,
}

impl Theorem1Witness {
    pub fn kappa_sign(&self) -> f64 {
        sign(self.d_obj_d_kappa)
    }

    pub fn pc_sign(&self) -> f64 {
        sign(self.d_obj_d_pc_at_max_impropriety)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Evaluates the two monotonicity facts behind the closed-form optimum at `alloc`.
pub fn theorem1_witness(scenario: &Scenario, alloc: &Allocation) -> Result<Theorem1Witness> {
    let l = scenario.lambda();
    let g1 = scenario.channel.gamma1();
    let g2 = scenario.channel.gamma2();
    let (p_c, p1, p2) = (alloc.p_c, alloc.p1, alloc.p2);
    // Validates the allocation.
    full_report(scenario, alloc)?;
    let obj = |k: f64| private_rate_unchecked(g1, p1, p2, p_c, l, k) + private_rate_unchecked(g2, p2, p1, p_c, l, k);

    let k = alloc.kappa.value();
    let h = 1e-6;
    let (lo, hi) = ((k - h).max(0.0), (k + h).min(1.0));
    let d_obj_d_kappa = (obj(hi) - obj(lo)) / (hi - lo);

    let (d1, _) = private_rate_dpc(g1, p1, p2, p_c, l, 1.0)?;
    let (d2, _) = private_rate_dpc(g2, p2, p1, p_c, l, 1.0)?;
    Ok(Theorem1Witness { d_obj_d_kappa, d_obj_d_pc_at_max_impropriety: d1 + d2 })
}
