//! The sum-rate problem seen as a contextual bandit: the state describes the
//! system, an action is an allocation, and the reward is the penalized sum rate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rates::{full_report, Allocation, ChannelParams, Impropriety, RateReport, Scenario, SicModel};

/// Number of state features: `(Γ1, Γ2, λ, τ, σ², P)`.
pub const STATE_DIM: usize = 6;

/// Squashed policy output, one entry per controllable quantity
/// `(p_c, private fraction, split, κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawAction([f64; 4]);

impl RawAction {
    pub fn new(a: [f64; 4]) -> Result<Self> {
        if a.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(domain(format!("raw action entries must lie in [-1, 1], got {a:?}")));
        }
        Ok(Self(a))
    }

    /// Builds an action from policy output; a 3-entry slice pins `κ = 0`.
    pub fn from_policy(a: &[f64]) -> Result<Self> {
        match *a {
            [a1, a2, a3] => Self::new([a1, a2, a3, -1.0]),
            [a1, a2, a3, a4] => Self::new([a1, a2, a3, a4]),
            _ => Err(crate::RsmaError::ShapeMismatch { expected: 4, got: a.len() }),
        }
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }
}

/// `R_tot − ψ Σ_k max(R_min − R_k, 0)`.
pub fn reward(scenario: &Scenario, alloc: &Allocation, psi: f64) -> Result<f64> {
    let report = full_report(scenario, alloc)?;
    Ok(reward_from_report(&report, scenario.r_min(), psi))
}

pub fn reward_from_report(report: &RateReport, r_min: f64, psi: f64) -> f64 {
    report.r_tot - psi * report.violation(r_min)
}

/// Maps a raw action onto the feasible set. The result always satisfies
/// `p_c ≥ τ`, `p_c + p1 + p2 ≤ P` and `κ ∈ [0, 1]` in floating point.
pub fn action_to_allocation(raw: &RawAction, scenario: &Scenario) -> Allocation {
    let [a1, a2, a3, a4] = raw.0;
    let unit = |a: f64| ((a + 1.0) / 2.0).clamp(0.0, 1.0);
    let budget = scenario.power_budget();
    let tau = scenario.tau_sic();
    let p_c = (tau + unit(a1) * (budget - tau)).clamp(tau, budget);
    let share = unit(a2) * (budget - p_c);
    let p1 = unit(a3) * share;
    let mut p2 = (share - p1).max(0.0);
    while p_c + p1 + p2 > budget && p2 > 0.0 {
        p2 = p2.next_down().max(0.0);
    }
    Allocation { p_c, p1, p2, kappa: Impropriety::new(unit(a4)).expect("unit interval") }
}

/// Fixed affine standardization `(x − offset) / scale` of the state features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateScaler {
    pub offset: [f64; STATE_DIM],
    pub scale: [f64; STATE_DIM],
}

impl StateScaler {
    /// Maps each `[lo, hi]` range onto `[−1, 1]`; point ranges are centred only.
    pub fn from_ranges(ranges: [(f64, f64); STATE_DIM]) -> Self {
        let mut offset = [0.0; STATE_DIM];
        let mut scale = [1.0; STATE_DIM];
        for (i, (lo, hi)) in ranges.into_iter().enumerate() {
            offset[i] = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            scale[i] = if half > 0.0 { half } else { 1.0 };
        }
        Self { offset, scale }
    }

    pub fn normalize(&self, raw: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
        std::array::from_fn(|i| (raw[i] - self.offset[i]) / self.scale[i])
    }

    pub fn denormalize(&self, z: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
        std::array::from_fn(|i| z[i] * self.scale[i] + self.offset[i])
    }
}

/// Unnormalized features of a scenario. CNRs already absorb the noise
/// variance, so the σ² slot is 1.
pub fn raw_features(scenario: &Scenario) -> [f64; STATE_DIM] {
    [
        scenario.channel.gamma1(),
        scenario.channel.gamma2(),
        scenario.lambda(),
        scenario.tau_sic(),
        1.0,
        scenario.power_budget(),
    ]
}

/// Source of training scenarios.
pub trait ScenarioSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng) -> Scenario;
    fn scaler(&self) -> StateScaler;
}

/// Always the same scenario.
#[derive(Debug, Clone, Copy)]
pub struct FixedScenario(pub Scenario);

impl ScenarioSampler for FixedScenario {
    fn sample(&mut self, _rng: &mut ChaCha8Rng) -> Scenario {
        self.0
    }

    fn scaler(&self) -> StateScaler {
        let f = raw_features(&self.0);
        StateScaler::from_ranges(std::array::from_fn(|i| (f[i], f[i])))
    }
}

/// Independent uniform draws of the CNRs, λ and the power budget (in dB).
#[derive(Debug, Clone, Copy)]
pub struct UniformSampler {
    pub gamma1: (f64, f64),
    pub gamma2: (f64, f64),
    pub lambda: (f64, f64),
    pub power_db: (f64, f64),
    pub tau_sic: f64,
    pub r_min: f64,
}

impl UniformSampler {
    fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    }
}

impl ScenarioSampler for UniformSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng) -> Scenario {
        let g1 = Self::draw(rng, self.gamma1);
        let g2 = Self::draw(rng, self.gamma2);
        let lambda = Self::draw(rng, self.lambda);
        let p = 10f64.powf(Self::draw(rng, self.power_db) / 10.0).max(self.tau_sic);
        Scenario::new(
            ChannelParams::new(g1, g2).expect("positive CNR range"),
            SicModel::new(lambda).expect("lambda range in [0, 1]"),
            p,
            self.tau_sic,
            self.r_min,
        )
        .expect("sampler ranges produce valid scenarios")
    }

    fn scaler(&self) -> StateScaler {
        // Channel ordering may swap the users, so both CNR slots share one range.
        let g = (self.gamma1.0.min(self.gamma2.0), self.gamma1.1.max(self.gamma2.1));
        let p = |db: f64| 10f64.powf(db / 10.0);
        StateScaler::from_ranges([
            g,
            g,
            self.lambda,
            (self.tau_sic, self.tau_sic),
            (1.0, 1.0),
            (p(self.power_db.0), p(self.power_db.1)),
        ])
    }
}
