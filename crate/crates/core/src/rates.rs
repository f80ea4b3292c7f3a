//! Achievable rates of the two-user downlink with an improper common stream.
//!
//! Every rate is in bits per channel use and carries the `1/2 log2` prefactor
//! of improper signaling. Powers are linear and normalized by the noise
//! variance through the channel-to-noise ratios `Γ_k = |h_k|² / σ²`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, RsmaError};

/// Smallest denominator accepted before a rate is declared undefined.
const DENOMINATOR_FLOOR: f64 = 1e-300;

/// One of the two users. `One` is always the stronger user after ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn other(self) -> Self {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    /// 1-based label.
    pub fn index(self) -> u8 {
        match self {
            User::One => 1,
            User::Two => 2,
        }
    }
}

fn check_finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and non-negative, got {v}")))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Channel-to-noise ratios of both users, ordered so that `gamma1 >= gamma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    gamma1: f64,
    gamma2: f64,
    /// `true` when the caller's user labels were exchanged to restore the ordering.
    swapped: bool,
}

impl ChannelParams {
    /// Builds the channel from two CNRs given in the caller's labelling. If the
    /// first is weaker the pair is swapped and the swap is recorded.
    pub fn new(gamma_a: f64, gamma_b: f64) -> Result<Self> {
        for (name, g) in [("gamma1", gamma_a), ("gamma2", gamma_b)] {
            if !(g.is_finite() && g > 0.0) {
                return Err(domain(format!("{name} must be finite and positive, got {g}")));
            }
        }
        let swapped = gamma_a < gamma_b;
        let (gamma1, gamma2) = if swapped { (gamma_b, gamma_a) } else { (gamma_a, gamma_b) };
        Ok(Self { gamma1, gamma2, swapped })
    }

    /// CNRs from channel magnitudes `|h_k|` and the noise variance.
    pub fn from_gains(h1: f64, h2: f64, noise_var: f64) -> Result<Self> {
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(domain(format!("noise variance must be positive, got {noise_var}")));
        }
        Self::new(h1 * h1 / noise_var, h2 * h2 / noise_var)
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn gamma(&self, user: User) -> f64 {
        match user {
            User::One => self.gamma1,
            User::Two => self.gamma2,
        }
    }

    pub fn swapped(&self) -> bool {
        self.swapped
    }

    /// Maps an internal (ordered) user back to the caller's original label.
    pub fn original_label(&self, user: User) -> User {
        if self.swapped {
            user.other()
        } else {
            user
        }
    }
}

/// Residual fraction `λ` of the common stream left after SIC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SicModel {
    lambda: f64,
}

impl SicModel {
    pub fn new(lambda: f64) -> Result<Self> {
        check_unit("lambda", lambda)?;
        Ok(Self { lambda })
    }

    pub fn perfect() -> Self {
        Self { lambda: 0.0 }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Circularity coefficient `κ = |σ̃²| / σ²` of the common stream.
/// `0` is proper signaling, `1` is maximally improper.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Impropriety(f64);

impl Impropriety {
    pub const PROPER: Self = Self(0.0);
    pub const MAXIMAL: Self = Self(1.0);

    pub fn new(kappa: f64) -> Result<Self> {
        check_unit("kappa", kappa)?;
        Ok(Self(kappa))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Impropriety {
    type Error = RsmaError;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Impropriety> for f64 {
    fn from(k: Impropriety) -> f64 {
        k.0
    }
}

/// A decision point `(p_c, p1, p2, κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub p_c: f64,
    pub p1: f64,
    pub p2: f64,
    pub kappa: Impropriety,
}

impl Allocation {
    pub fn new(p_c: f64, p1: f64, p2: f64, kappa: Impropriety) -> Result<Self> {
        check_finite_nonneg("p_c", p_c)?;
        check_finite_nonneg("p1", p1)?;
        check_finite_nonneg("p2", p2)?;
        Ok(Self { p_c, p1, p2, kappa })
    }

    pub fn total_power(&self) -> f64 {
        self.p_c + self.p1 + self.p2
    }

    pub fn private_power(&self, user: User) -> f64 {
        match user {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }
}

/// Full system description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub channel: ChannelParams,
    pub sic: SicModel,
    power_budget: f64,
    tau_sic: f64,
    r_min: f64,
}

impl Scenario {
    pub fn new(channel: ChannelParams, sic: SicModel, power_budget: f64, tau_sic: f64, r_min: f64) -> Result<Self> {
        if !(power_budget.is_finite() && power_budget > 0.0) {
            return Err(domain(format!("power budget must be positive, got {power_budget}")));
        }
        if !(tau_sic.is_finite() && (0.0..=power_budget).contains(&tau_sic)) {
            return Err(domain(format!("tau_sic must lie in [0, P = {power_budget}], got {tau_sic}")));
        }
        check_finite_nonneg("r_min", r_min)?;
        Ok(Self { channel, sic, power_budget, tau_sic, r_min })
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn tau_sic(&self) -> f64 {
        self.tau_sic
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn lambda(&self) -> f64 {
        self.sic.lambda()
    }

    /// Copy with a different power budget.
    pub fn with_power_budget(&self, power_budget: f64) -> Result<Self> {
        Self::new(self.channel, self.sic, power_budget, self.tau_sic, self.r_min)
    }

    pub fn with_r_min(&self, r_min: f64) -> Result<Self> {
        Self::new(self.channel, self.sic, self.power_budget, self.tau_sic, r_min)
    }

    pub fn with_sic(&self, sic: SicModel) -> Self {
        Self { sic, ..*self }
    }

    /// `true` when the allocation satisfies `p_c >= τ_SIC` and the power budget.
    pub fn admits(&self, alloc: &Allocation) -> bool {
        alloc.p_c >= self.tau_sic && alloc.total_power() <= self.power_budget
    }
}

/// All rates at one allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r1: f64,
    pub r2: f64,
    pub rc1: f64,
    pub rc2: f64,
    pub rc: f64,
    pub r_tot: f64,
}

impl RateReport {
    pub fn private(&self, user: User) -> f64 {
        match user {
            User::One => self.r1,
            User::Two => self.r2,
        }
    }

    pub fn private_sum(&self) -> f64 {
        self.r1 + self.r2
    }

    /// Total minimum-rate shortfall `Σ_k max(R_min − R_k, 0)`.
    pub fn violation(&self, r_min: f64) -> f64 {
        (r_min - self.r1).max(0.0) + (r_min - self.r2).max(0.0)
    }
}

/// Intermediate quantities of the common-power derivative of a private rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeParts {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub u: f64,
}

fn check_private_args(gamma_k: f64, p_k: f64, p_j: f64, p_c: f64, lambda: f64, kappa: f64) -> Result<()> {
    if !(gamma_k.is_finite() && gamma_k > 0.0) {
        return Err(domain(format!("gamma_k must be finite and positive, got {gamma_k}")));
    }
    check_finite_nonneg("p_k", p_k)?;
    check_finite_nonneg("p_j", p_j)?;
    check_finite_nonneg("p_c", p_c)?;
    check_unit("lambda", lambda)?;
    check_unit("kappa", kappa)
}

/// Private rate of user `k` with own power `p_k`, interfering private power
/// `p_j` and a residual common stream of power `λ² p_c` and impropriety `κ`.
pub fn private_rate(gamma_k: f64, p_k: f64, p_j: f64, p_c: f64, lambda: f64, kappa: f64) -> Result<f64> {
    check_private_args(gamma_k, p_k, p_j, p_c, lambda, kappa)?;
    let den = private_denominator(gamma_k, p_j, p_c, lambda, kappa);
    if den.is_nan() || den < DENOMINATOR_FLOOR {
        return Err(domain(format!("private-rate denominator {den} is not positive")));
    }
    Ok(private_rate_unchecked(gamma_k, p_k, p_j, p_c, lambda, kappa))
}

#[inline]
fn private_denominator(gamma_k: f64, p_j: f64, p_c: f64, lambda: f64, kappa: f64) -> f64 {
    let l2 = lambda * lambda;
    let x = l2 * p_c * gamma_k + p_j * gamma_k + 1.0;
    let c = l2 * kappa * p_c * gamma_k;
    x * x - c * c
}

/// [`private_rate`] without argument validation, for inner loops over
/// inputs that are already known to be valid.
#[inline]
pub fn private_rate_unchecked(gamma_k: f64, p_k: f64, p_j: f64, p_c: f64, lambda: f64, kappa: f64) -> f64 {
    let l2 = lambda * lambda;
    let num = p_k * gamma_k * (2.0 * l2 * p_c * gamma_k + p_k * gamma_k + 2.0 * p_j * gamma_k + 2.0);
    let den = private_denominator(gamma_k, p_j, p_c, lambda, kappa);
    0.5 * (num / den).ln_1p() / LN_2
}

/// Common-stream rate decodable by user `k`.
pub fn common_rate_k(gamma_k: f64, p_c: f64, p1: f64, p2: f64, kappa: f64) -> Result<f64> {
    if !(gamma_k.is_finite() && gamma_k > 0.0) {
        return Err(domain(format!("gamma_k must be finite and positive, got {gamma_k}")));
    }
    check_finite_nonneg("p_c", p_c)?;
    check_finite_nonneg("p1", p1)?;
    check_finite_nonneg("p2", p2)?;
    check_unit("kappa", kappa)?;
    Ok(common_rate_unchecked(gamma_k, p_c, p1, p2, kappa))
}

#[inline]
pub fn common_rate_unchecked(gamma_k: f64, p_c: f64, p1: f64, p2: f64, kappa: f64) -> f64 {
    let base = (p1 + p2) * gamma_k + 1.0;
    let t = p_c * gamma_k / base;
    // ((p_c + p1 + p2)Γ + 1)² − κ² p_c² Γ², divided by base², equals (1 + t)² − κ² t².
    let ratio_minus_one = t * (2.0 + t - kappa * kappa * t);
    0.5 * ratio_minus_one.ln_1p() / LN_2
}

/// Evaluates every rate at `alloc`.
pub fn full_report(scenario: &Scenario, alloc: &Allocation) -> Result<RateReport> {
    let lambda = scenario.lambda();
    let kappa = alloc.kappa.value();
    let g1 = scenario.channel.gamma1();
    let g2 = scenario.channel.gamma2();
    let r1 = private_rate(g1, alloc.p1, alloc.p2, alloc.p_c, lambda, kappa)?;
    let r2 = private_rate(g2, alloc.p2, alloc.p1, alloc.p_c, lambda, kappa)?;
    let rc1 = common_rate_k(g1, alloc.p_c, alloc.p1, alloc.p2, kappa)?;
    let rc2 = common_rate_k(g2, alloc.p_c, alloc.p1, alloc.p2, kappa)?;
    let rc = rc1.min(rc2);
    Ok(RateReport { r1, r2, rc1, rc2, rc, r_tot: r1 + r2 + rc })
}

/// [`full_report`] for allocations already known to be valid.
#[inline]
pub fn full_report_unchecked(scenario: &Scenario, p_c: f64, p1: f64, p2: f64, kappa: f64) -> RateReport {
    let lambda = scenario.lambda();
    let g1 = scenario.channel.gamma1();
    let g2 = scenario.channel.gamma2();
    let r1 = private_rate_unchecked(g1, p1, p2, p_c, lambda, kappa);
    let r2 = private_rate_unchecked(g2, p2, p1, p_c, lambda, kappa);
    let rc1 = common_rate_unchecked(g1, p_c, p1, p2, kappa);
    let rc2 = common_rate_unchecked(g2, p_c, p1, p2, kappa);
    let rc = rc1.min(rc2);
    RateReport { r1, r2, rc1, rc2, rc, r_tot: r1 + r2 + rc }
}

/// Analytic derivative of [`private_rate`] with respect to `p_c`, together
/// with its building blocks. The sign is carried by `a2 − a1·a3`.
pub fn private_rate_dpc(
    gamma_k: f64,
    p_k: f64,
    p_j: f64,
    p_c: f64,
    lambda: f64,
    kappa: f64,
) -> Result<(f64, DerivativeParts)> {
    check_private_args(gamma_k, p_k, p_j, p_c, lambda, kappa)?;
    let l2 = lambda * lambda;
    let g = gamma_k;
    let x = l2 * p_c * g + p_j * g + 1.0;
    let a1 = 2.0 * l2 * p_c * g + p_k * g + 2.0 * p_j * g + 2.0;
    let a2 = x * x - l2 * l2 * kappa * kappa * p_c * p_c * g * g;
    if a2.is_nan() || a2 < DENOMINATOR_FLOOR {
        return Err(domain(format!("private-rate denominator {a2} is not positive")));
    }
    let a3 = x - l2 * kappa * kappa * p_c * g;
    let u = 1.0 + p_k * g * a1 / a2;
    let derivative = l2 * p_k * g * g * (a2 - a1 * a3) / (u * a2 * a2 * LN_2);
    Ok((derivative, DerivativeParts { a1, a2, a3, u }))
}

/// Partial derivatives of a private rate with respect to the user's own power
/// and the interfering private power, `(∂R_k/∂p_k, ∂R_k/∂p_j)`.
pub(crate) fn private_rate_power_gradient(
    gamma_k: f64,
    p_k: f64,
    p_j: f64,
    p_c: f64,
    lambda: f64,
    kappa: f64,
) -> (f64, f64) {
    // R_k = ½ log2(((x + p_kΓ)² − c²) / (x² − c²)) with x = λ²p_cΓ + p_jΓ + 1, c = λ²κp_cΓ.
    let l2 = lambda * lambda;
    let g = gamma_k;
    let x = l2 * p_c * g + p_j * g + 1.0;
    let c = l2 * kappa * p_c * g;
    let y = x + p_k * g;
    let num = y * y - c * c;
    let den = x * x - c * c;
    let d_own = y * g / (num * LN_2);
    let d_other = (y * g / num - x * g / den) / LN_2;
    (d_own, d_other)
}
