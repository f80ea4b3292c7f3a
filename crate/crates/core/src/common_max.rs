//! Common-rate maximization at fixed private powers.
//!
//! With `(p1, p2)` fixed, user 2 limits the common rate, so the objective is
//! `R_{c,2}(κ, p_c)`: increasing in `p_c`, decreasing in `κ`. Each private rate
//! decreases in `p_c`, so `R_k >= R_min` reads `p_c <= p_c^{(k)}(κ)`, where
//! `p_c^{(k)}` is the non-negative root of a quadratic whose leading
//! coefficient shrinks as `κ` grows. Along a binding curve the objective is
//! monotone in `κ` with the sign of a closed-form indicator, which yields the
//! piecewise optimum implemented in [`solve`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, RsmaError};
use crate::rates::{full_report, private_rate_unchecked, Allocation, Impropriety, RateReport, Scenario, User};

/// Discriminants down to this value are treated as zero.
const DISCRIMINANT_GUARD: f64 = -1e-12;
/// Slack on `κ²` before an inversion is declared out of range.
const KAPPA_SQ_SLACK: f64 = 1e-12;
/// Slack on the non-binding user's rate constraint.
const RATE_SLACK: f64 = 1e-9;

/// SINR threshold `S = 2^{2 R_min} − 1` equivalent to `R_k >= R_min`.
pub fn rate_threshold(r_min: f64) -> f64 {
    (2.0 * r_min * std::f64::consts::LN_2).exp_m1()
}

/// Coefficients of `b1 p_c² + b2 p_c + b3 = 0`, the condition `R_k = R_min`
/// for the binding user `k`. The quadratic is `S·den − num` of the private
/// rate, so `R_k >= R_min` exactly where it is non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCoeffs {
    pub s: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub binding_user: User,
}

impl QuadraticCoeffs {
    pub fn eval(&self, p_c: f64) -> f64 {
        (self.b1 * p_c + self.b2) * p_c + self.b3
    }

    pub fn scale(&self) -> f64 {
        self.b1.abs().max(self.b2.abs()).max(self.b3.abs())
    }
}

fn check_private_powers(p1: f64, p2: f64) -> Result<()> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(p.is_finite() && p >= 0.0) {
            return Err(domain(format!("{name} must be finite and non-negative, got {p}")));
        }
    }
    Ok(())
}

/// `(Γ_k, p_k, p_{j≠k})` of user `k`.
fn user_terms(scenario: &Scenario, p1: f64, p2: f64, user: User) -> (f64, f64, f64) {
    match user {
        User::One => (scenario.channel.gamma1(), p1, p2),
        User::Two => (scenario.channel.gamma2(), p2, p1),
    }
}

pub fn quad_coeffs(
    scenario: &Scenario,
    p1: f64,
    p2: f64,
    binding_user: User,
    kappa: Impropriety,
) -> Result<QuadraticCoeffs> {
    check_private_powers(p1, p2)?;
    let lambda = scenario.lambda();
    let s = rate_threshold(scenario.r_min());
    if lambda == 0.0 {
        return Err(RsmaError::DegenerateRegime("perfect SIC: the private rate does not depend on p_c"));
    }
    if s == 0.0 {
        return Err(RsmaError::DegenerateRegime("zero rate threshold: the constraint never binds"));
    }
    let (g, pk, pj) = user_terms(scenario, p1, p2, binding_user);
    let l2 = lambda * lambda;
    let k = kappa.value();
    let x0 = pj * g + 1.0;
    Ok(QuadraticCoeffs {
        s,
        b1: s * l2 * l2 * g * g * (1.0 - k * k),
        // The linear term pairs S with the interference floor and the own
        // private power, because d(num)/dp_c = 2λ²Γ_k·p_kΓ_k.
        b2: 2.0 * l2 * g * (s * x0 - pk * g),
        b3: s * x0 * x0 - pk * g * (pk * g + 2.0 * pj * g + 2.0),
        binding_user,
    })
}

/// Largest common power at which the binding user still meets `R_min`.
///
/// Returns `f64::INFINITY` when the quadratic has no positive root because the
/// constraint holds for every `p_c` (possible only as `κ → 1`). Fails with
/// [`RsmaError::NoPositiveRoot`] when the user misses `R_min` already at
/// `p_c = 0` (`b3 > 0`).
pub fn pc_of_kappa(coeffs: &QuadraticCoeffs) -> Result<f64> {
    let QuadraticCoeffs { b1, b2, b3, .. } = *coeffs;
    if b3 > 0.0 {
        return Err(RsmaError::NoPositiveRoot);
    }
    if b3 == 0.0 {
        return Ok(0.0);
    }
    let mut disc = b2 * b2 - 4.0 * b1 * b3;
    if disc < 0.0 {
        if disc < DISCRIMINANT_GUARD * coeffs.scale().powi(2) {
            return Err(RsmaError::NoPositiveRoot);
        }
        disc = 0.0;
    }
    let sq = disc.sqrt();
    if b2 >= 0.0 {
        // Cancellation-free form; reduces to −b3/b2 when b1 = 0.
        Ok(-2.0 * b3 / (b2 + sq))
    } else if b1 > 0.0 {
        Ok((-b2 + sq) / (2.0 * b1))
    } else {
        Ok(f64::INFINITY)
    }
}

/// Squared circularity coefficient at which the binding user meets `R_min`
/// exactly with common power `p_c`.
pub fn kappa_of_pc(scenario: &Scenario, p1: f64, p2: f64, binding_user: User, p_c: f64) -> Result<f64> {
    check_private_powers(p1, p2)?;
    if !(p_c.is_finite() && p_c > 0.0) {
        return Err(domain(format!("p_c must be positive, got {p_c}")));
    }
    let lambda = scenario.lambda();
    let s = rate_threshold(scenario.r_min());
    if lambda == 0.0 || s == 0.0 {
        return Err(RsmaError::DegenerateRegime("inversion needs lambda > 0 and R_min > 0"));
    }
    let (g, pk, pj) = user_terms(scenario, p1, p2, binding_user);
    let l4 = lambda.powi(4);
    let x = lambda * lambda * p_c * g + pj * g + 1.0;
    let kappa_sq = x * x / (l4 * p_c * p_c * g * g)
        - pk * (2.0 * lambda * lambda * p_c * g + pk * g + 2.0 * pj * g + 2.0) / (s * l4 * p_c * p_c * g);
    if !(-KAPPA_SQ_SLACK..=1.0 + KAPPA_SQ_SLACK).contains(&kappa_sq) {
        return Err(RsmaError::KappaOutOfRange(kappa_sq));
    }
    Ok(kappa_sq.clamp(0.0, 1.0))
}

/// Sign indicator of `dR_{c,2}/dκ` along the binding curve of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityIndicator {
    pub case: User,
    pub value: f64,
    /// `C_2 = (p1 + p2)Γ_2 + 1`, the proper-interference floor of user 2's
    /// common-stream decoding.
    pub c: f64,
}

/// Substituting the binding curve into `R_{c,2}` leaves an expression affine
/// in `p_c(κ)`; its slope, up to a positive factor, is returned here.
///
/// * binding user 2: `S λ² C_2 + p_2 Γ_2 − S(p_1 Γ_2 + 1)`
/// * binding user 1: `S λ² Γ_1 C_2 + p_1 Γ_1 Γ_2 − S(p_2 Γ_1 + 1) Γ_2`
pub fn monotonicity(scenario: &Scenario, p1: f64, p2: f64, case: User) -> MonotonicityIndicator {
    let s = rate_threshold(scenario.r_min());
    let l2 = scenario.lambda().powi(2);
    let g1 = scenario.channel.gamma1();
    let g2 = scenario.channel.gamma2();
    let c = (p1 + p2) * g2 + 1.0;
    let value = match case {
        User::Two => s * l2 * c + p2 * g2 - s * (p1 * g2 + 1.0),
        User::One => s * l2 * g1 * c + p1 * g1 * g2 - s * (p2 * g1 + 1.0) * g2,
    };
    MonotonicityIndicator { case, value, c }
}

/// Which piece of the optimum fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Indicator positive and the `κ = 1` root fits the budget: `κ* = 1`.
    MaxImpropriety,
    /// Indicator positive, the `κ = 1` root exceeds the budget: `p_c* = D`
    /// and `κ*` makes the binding curve pass through `D`.
    BudgetLimited,
    /// Indicator non-positive: `κ* = 0` on the binding curve.
    Proper,
    /// Indicator non-positive but the `κ = 0` root lies below `τ_SIC`:
    /// `p_c* = τ_SIC` with the smallest `κ` that keeps the binding user at `R_min`.
    SicFloor,
    /// No rate constraint binds inside the budget: `κ* = 0, p_c* = D`.
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommonMaxSolution {
    /// `None` for [`Branch::Unconstrained`].
    pub binding_user: Option<User>,
    pub kappa_star: Impropriety,
    pub p_c_star: f64,
    /// `R_{c,2}` at the optimum.
    pub rc: f64,
    pub branch: Branch,
    pub report: RateReport,
}

impl CommonMaxSolution {
    pub fn allocation(&self, p1: f64, p2: f64) -> Allocation {
        Allocation { p_c: self.p_c_star, p1, p2, kappa: self.kappa_star }
    }
}

fn meets(scenario: &Scenario, p1: f64, p2: f64, p_c: f64, kappa: f64, user: User, slack: f64) -> bool {
    let (g, pk, pj) = user_terms(scenario, p1, p2, user);
    private_rate_unchecked(g, pk, pj, p_c, scenario.lambda(), kappa) >= scenario.r_min() - slack
}

/// Maximizes the common rate subject to both minimum private rates, the SIC
/// power floor and the budget, for fixed private powers with `p1 + p2 < P`.
///
/// Returns [`RsmaError::Infeasible`] when no `(κ, p_c)` satisfies every constraint.
pub fn solve(scenario: &Scenario, p1: f64, p2: f64) -> Result<CommonMaxSolution> {
    check_private_powers(p1, p2)?;
    let d = scenario.power_budget() - p1 - p2;
    let tau = scenario.tau_sic();
    if d < tau {
        return Err(RsmaError::Infeasible(format!(
            "private powers leave {d} for the common stream, below tau_sic = {tau}"
        )));
    }
    let finish = |binding_user, kappa: f64, p_c: f64, branch| -> Result<CommonMaxSolution> {
        let kappa_star = Impropriety::new(kappa.clamp(0.0, 1.0))?;
        let alloc = Allocation::new(p_c, p1, p2, kappa_star)?;
        let report = full_report(scenario, &alloc)?;
        Ok(CommonMaxSolution { binding_user, kappa_star, p_c_star: p_c, rc: report.rc2, branch, report })
    };

    // The objective's unconstrained maximum over the box is (κ, p_c) = (0, D).
    if meets(scenario, p1, p2, d, 0.0, User::One, 0.0) && meets(scenario, p1, p2, d, 0.0, User::Two, 0.0) {
        return finish(None, 0.0, d, Branch::Unconstrained);
    }
    if scenario.lambda() == 0.0 || rate_threshold(scenario.r_min()) == 0.0 {
        // Private rates no longer depend on (κ, p_c): (0, D) was the only candidate.
        return Err(RsmaError::Infeasible("private powers cannot meet R_min".into()));
    }

    let mut best: Option<CommonMaxSolution> = None;
    // Case 2 first so that an exact tie keeps the weak user's case.
    for user in [User::Two, User::One] {
        let Some((kappa, p_c, branch)) = case_candidate(scenario, p1, p2, user, d)? else {
            continue;
        };
        if !meets(scenario, p1, p2, p_c, kappa, user.other(), RATE_SLACK) {
            continue;
        }
        let sol = finish(Some(user), kappa, p_c, branch)?;
        if best.as_ref().is_none_or(|b| sol.rc > b.rc) {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| RsmaError::Infeasible("no binding case admits a feasible (kappa, p_c)".into()))
}

/// Optimum along the binding curve of `user`, or `None` when that curve does
/// not cross the feasible power window `[τ_SIC, D]`.
fn case_candidate(scenario: &Scenario, p1: f64, p2: f64, user: User, d: f64) -> Result<Option<(f64, f64, Branch)>> {
    let tau = scenario.tau_sic();
    let proper = quad_coeffs(scenario, p1, p2, user, Impropriety::PROPER)?;
    let maximal = quad_coeffs(scenario, p1, p2, user, Impropriety::MAXIMAL)?;
    let (root0, root1) = match (pc_of_kappa(&proper), pc_of_kappa(&maximal)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(RsmaError::NoPositiveRoot), _) | (_, Err(RsmaError::NoPositiveRoot)) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    if root0 > d || root1 < tau {
        return Ok(None);
    }
    let indicator = monotonicity(scenario, p1, p2, user);
    let (kappa, p_c, branch) = if indicator.value > 0.0 {
        if root1 <= d {
            (1.0, root1, Branch::MaxImpropriety)
        } else {
            let (g, _, _) = user_terms(scenario, p1, p2, user);
            let kappa_sq = 1.0 + (proper.b2 * d + proper.b3) / (proper.s * scenario.lambda().powi(4) * g * g * d * d);
            (kappa_sq.clamp(0.0, 1.0).sqrt(), d, Branch::BudgetLimited)
        }
    } else {
        (0.0, root0, Branch::Proper)
    };
    if p_c >= tau {
        return Ok(Some((kappa, p_c, branch)));
    }
    if tau == 0.0 {
        return Ok(Some((kappa, 0.0, branch)));
    }
    // Raising p_c to the floor requires the binding curve to move up, i.e. a larger κ.
    match kappa_of_pc(scenario, p1, p2, user, tau) {
        Ok(kappa_sq) => Ok(Some((kappa_sq.sqrt().max(kappa), tau, Branch::SicFloor))),
        Err(RsmaError::KappaOutOfRange(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Best common power and rate at a fixed `κ`: the largest `p_c <= D` meeting
/// both rate constraints, or `None` if even `p_c = τ_SIC` violates one.
pub fn best_at_kappa(scenario: &Scenario, p1: f64, p2: f64, kappa: Impropriety) -> Result<Option<(f64, f64)>> {
    check_private_powers(p1, p2)?;
    let d = scenario.power_budget() - p1 - p2;
    let tau = scenario.tau_sic();
    if d < tau {
        return Ok(None);
    }
    let mut cap = d;
    for user in [User::One, User::Two] {
        let limit = match quad_coeffs(scenario, p1, p2, user, kappa) {
            Ok(coeffs) => match pc_of_kappa(&coeffs) {
                Ok(r) => r,
                Err(RsmaError::NoPositiveRoot) => return Ok(None),
                Err(e) => return Err(e),
            },
            Err(RsmaError::DegenerateRegime(_)) => {
                if meets(scenario, p1, p2, 0.0, kappa.value(), user, 0.0) {
                    f64::INFINITY
                } else {
                    return Ok(None);
                }
            }
            Err(e) => return Err(e),
        };
        cap = cap.min(limit);
    }
    if cap < tau {
        return Ok(None);
    }
    let alloc = Allocation::new(cap, p1, p2, kappa)?;
    Ok(Some((cap, full_report(scenario, &alloc)?.rc2)))
}
