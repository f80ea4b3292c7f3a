//! Sweep execution and CSV output.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use rsma_core::oracle::{
    grid_common, grid_private, grid_private_at_kappa, grid_sum_rate_restricted, CommonGridOptimum,
};
use rsma_core::sac::{evaluate_policy, reward_from_report, train_agent, Checkpoint, FixedScenario};
use rsma_core::{
    common_max, full_report, private_max, Allocation, ChannelParams, Impropriety, RateReport, RsmaError, Scenario,
    SicModel,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Signaling, Solver, SweepVariable};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Slack for comparing a solver against a grid it should dominate.
const DOMINANCE_SLACK: f64 = 1e-9;
/// Fraction of the grid optimum a learned policy must reach.
const SAC_RATIO: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// The allocation was produced but misses a minimum rate.
    RateViolation,
    /// No allocation exists.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Point,
    Curve,
    Star,
}

/// One CSV row. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub solver: &'static str,
    pub row_kind: RowKind,
    pub signaling: &'static str,
    pub sweep_variable: &'static str,
    pub sweep_value: Option<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda: f64,
    pub power_budget: f64,
    pub tau_sic: f64,
    pub r_min: f64,
    pub kappa_fixed: Option<f64>,
    pub status: Status,
    pub p_c: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub kappa: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub rc1: Option<f64>,
    pub rc2: Option<f64>,
    pub rc: Option<f64>,
    pub r_tot: Option<f64>,
    pub objective: Option<f64>,
    pub oracle: Option<f64>,
    pub oracle_bound: Option<f64>,
    pub oracle_ok: Option<bool>,
}

impl SweepRow {
    fn set_solution(&mut self, alloc: &Allocation, report: &RateReport, objective: f64) {
        self.p_c = Some(alloc.p_c);
        self.p1 = Some(alloc.p1);
        self.p2 = Some(alloc.p2);
        self.kappa = Some(alloc.kappa.value());
        self.r1 = Some(report.r1);
        self.r2 = Some(report.r2);
        self.rc1 = Some(report.rc1);
        self.rc2 = Some(report.rc2);
        self.rc = Some(report.rc);
        self.r_tot = Some(report.r_tot);
        self.objective = Some(objective);
    }

    fn set_oracle(&mut self, oracle: f64, bound: f64, ok: bool) {
        self.oracle = Some(oracle);
        self.oracle_bound = Some(bound);
        self.oracle_ok = Some(ok);
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write one checkpoint per SAC row into this directory.
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Job {
    index: usize,
    signaling: Signaling,
    lambda: f64,
    r_min: f64,
    sweep_value: Option<f64>,
    /// κ values to evaluate; `None` entries let the solver choose.
    kappas: Vec<Option<f64>>,
}

fn axis<T: Clone>(list: &[T], fallback: T) -> Vec<T> {
    if list.is_empty() {
        vec![fallback]
    } else {
        list.to_vec()
    }
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let lambdas = axis(&cfg.series.lambdas, cfg.scenario.lambda);
    let r_mins = axis(&cfg.series.r_mins, cfg.scenario.r_min);
    let kappas: Vec<Option<f64>> = axis(&cfg.series.kappas.iter().map(|&k| Some(k)).collect::<Vec<_>>(), None);
    let sweep: Vec<Option<f64>> = match &cfg.sweep {
        None => vec![None],
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
    };
    let grouped = cfg.solver == Solver::CommonMax;
    let mut out = Vec::new();
    for &signaling in &cfg.series.signaling {
        for &lambda in &lambdas {
            for &r_min in &r_mins {
                for &sweep_value in &sweep {
                    let mut push = |kappas: Vec<Option<f64>>| {
                        out.push(Job { index: out.len(), signaling, lambda, r_min, sweep_value, kappas })
                    };
                    if grouped {
                        push(kappas.clone());
                    } else {
                        for &k in &kappas {
                            push(vec![k]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// The scenario and the swept κ (if κ is the sweep axis) for a job.
fn scenario_of(cfg: &ExperimentConfig, job: &Job) -> Result<(Scenario, Option<f64>), CliError> {
    let sc = &cfg.scenario;
    let (mut h1, mut lambda, mut power, mut tau, mut r_min) =
        (sc.h1, job.lambda, sc.power_budget, sc.tau_sic, job.r_min);
    let mut kappa = None;
    if let (Some(sw), Some(v)) = (&cfg.sweep, job.sweep_value) {
        let x = sw.linear(v);
        match sw.variable {
            SweepVariable::Snr => power = x,
            SweepVariable::Lambda => lambda = x,
            SweepVariable::RMin => r_min = x,
            SweepVariable::TauSic => tau = x,
            SweepVariable::Kappa => kappa = Some(x),
            SweepVariable::H1 => h1 = x,
        }
    }
    let channel = ChannelParams::from_gains(h1, sc.h2, sc.noise_var)?;
    let scenario = Scenario::new(channel, SicModel::new(lambda)?, power, tau, r_min)?;
    Ok((scenario, kappa))
}

fn impropriety(k: f64) -> Result<Impropriety, CliError> {
    Impropriety::new(k).map_err(|e| CliError::Config(e.to_string()))
}

fn status_of(report: &RateReport, r_min: f64) -> Status {
    if report.violation(r_min) > 0.0 {
        Status::RateViolation
    } else {
        Status::Ok
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    opts: &'a RunOptions,
    job: &'a Job,
    scenario: Scenario,
}

impl Ctx<'_> {
    fn row(&self, kind: RowKind, kappa_fixed: Option<f64>) -> SweepRow {
        let s = &self.scenario;
        SweepRow {
            schema_version: SCHEMA_VERSION,
            experiment: self.cfg.experiment.id(),
            solver: self.cfg.solver.id(),
            row_kind: kind,
            signaling: self.job.signaling.id(),
            sweep_variable: self.cfg.sweep.as_ref().map_or("", |s| s.variable.id()),
            sweep_value: self.job.sweep_value,
            gamma1: s.channel.gamma1(),
            gamma2: s.channel.gamma2(),
            lambda: s.lambda(),
            power_budget: s.power_budget(),
            tau_sic: s.tau_sic(),
            r_min: s.r_min(),
            kappa_fixed,
            status: Status::Infeasible,
            p_c: None,
            p1: None,
            p2: None,
            kappa: None,
            r1: None,
            r2: None,
            rc1: None,
            rc2: None,
            rc: None,
            r_tot: None,
            objective: None,
            oracle: None,
            oracle_bound: None,
            oracle_ok: None,
        }
    }

    fn pgs(&self) -> bool {
        self.job.signaling == Signaling::Pgs
    }

    /// The κ a row is pinned to: PGS forces 0, then the sweep, then the series.
    fn pinned(&self, swept: Option<f64>, series: Option<f64>) -> Option<f64> {
        if self.pgs() {
            Some(0.0)
        } else {
            swept.or(series)
        }
    }
}

fn infeasible_or<T>(r: Result<T, RsmaError>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(RsmaError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run_eval(ctx: &Ctx, kappa: Option<f64>) -> Result<SweepRow, CliError> {
    let a = ctx.cfg.allocation.as_ref().ok_or_else(|| CliError::Config("missing [allocation]".into()))?;
    let k = kappa.unwrap_or(a.kappa);
    let alloc = Allocation::new(a.p_c, a.p1, a.p2, impropriety(k)?).map_err(|e| CliError::Config(e.to_string()))?;
    let report = full_report(&ctx.scenario, &alloc)?;
    let mut row = ctx.row(RowKind::Point, kappa);
    row.set_solution(&alloc, &report, report.r_tot);
    row.status =
        if ctx.scenario.admits(&alloc) { status_of(&report, ctx.scenario.r_min()) } else { Status::Infeasible };
    Ok(row)
}

fn run_private(ctx: &Ctx, kappa: Option<f64>) -> Result<SweepRow, CliError> {
    let s = &ctx.scenario;
    let mut row = ctx.row(RowKind::Point, kappa);
    let sol = match kappa {
        Some(k) => private_max::solve_with_kappa(s, impropriety(k)?),
        None => private_max::solve(s),
    };
    let Some(sol) = infeasible_or(sol)? else { return Ok(row) };
    let report = full_report(s, &sol.alloc)?;
    row.set_solution(&sol.alloc, &report, sol.objective);
    row.status = Status::Ok;
    if ctx.cfg.verify {
        let g = match kappa {
            Some(k) => grid_private_at_kappa(s, &ctx.cfg.grid, impropriety(k)?)?,
            None => grid_private(s, &ctx.cfg.grid)?,
        };
        let ok = sol.objective >= g.value - DOMINANCE_SLACK
            && sol.objective <= g.value + g.resolution_bound + DOMINANCE_SLACK;
        row.set_oracle(g.value, g.resolution_bound, ok);
    }
    Ok(row)
}

/// Grid column whose node coincides with `k`.
fn column_at(grid: &CommonGridOptimum, k: f64) -> Option<Option<f64>> {
    let n = grid.columns.len();
    let pos = k * (n - 1) as f64;
    let i = pos.round();
    ((pos - i).abs() <= 1e-9).then(|| grid.columns[i as usize])
}

fn run_common(ctx: &Ctx, swept: Option<f64>) -> Result<Vec<SweepRow>, CliError> {
    let s = &ctx.scenario;
    let (p1, p2) = ctx.cfg.common.ok_or_else(|| CliError::Config("missing [common]".into()))?;
    let grid = if ctx.cfg.verify { infeasible_or(grid_common(s, p1, p2, &ctx.cfg.common_grid))? } else { None };
    let mut rows = Vec::new();

    let curve_kappas: Vec<f64> = match (swept, ctx.pgs()) {
        (Some(k), false) => vec![k],
        (_, true) => vec![0.0],
        (None, false) => ctx.job.kappas.iter().flatten().copied().collect(),
    };
    for k in curve_kappas {
        let mut row = ctx.row(RowKind::Curve, Some(k));
        if let Some((p_c, _)) = common_max::best_at_kappa(s, p1, p2, impropriety(k)?)? {
            let alloc = Allocation::new(p_c, p1, p2, impropriety(k)?)?;
            let report = full_report(s, &alloc)?;
            row.set_solution(&alloc, &report, report.rc2);
            row.status = Status::Ok;
            if let Some(g) = &grid {
                if let Some(col) = column_at(g, k) {
                    let ok =
                        col.is_none_or(|c| report.rc2 >= c - DOMINANCE_SLACK && report.rc2 <= c + g.resolution_bound);
                    row.set_oracle(col.unwrap_or(f64::NAN), g.resolution_bound, ok);
                }
            }
        } else if let Some(col) = grid.as_ref().and_then(|g| column_at(g, k)) {
            row.oracle = col;
            row.oracle_ok = Some(col.is_none());
        }
        rows.push(row);
    }

    if swept.is_none() && !ctx.pgs() {
        let mut row = ctx.row(RowKind::Star, None);
        if let Some(sol) = infeasible_or(common_max::solve(s, p1, p2))? {
            row.set_solution(&sol.allocation(p1, p2), &sol.report, sol.rc);
            row.status = Status::Ok;
            if ctx.cfg.verify {
                match &grid {
                    Some(g) => {
                        let ok = sol.rc >= g.rc - DOMINANCE_SLACK && sol.rc <= g.rc + g.resolution_bound;
                        row.set_oracle(g.rc, g.resolution_bound, ok);
                    }
                    None => row.oracle_ok = Some(false),
                }
            }
        } else if ctx.cfg.verify {
            row.oracle_ok = Some(grid.is_none());
        }
        rows.push(row);
    }
    Ok(rows)
}

fn run_sac(ctx: &Ctx) -> Result<SweepRow, CliError> {
    let s = &ctx.scenario;
    let mut config = ctx.cfg.sac.clone();
    config.seed = ctx.cfg.seed.wrapping_add(ctx.job.index as u64);
    config.pgs = ctx.pgs();
    let psi = config.psi;
    let (agent, _) = train_agent(&mut FixedScenario(*s), config)?;
    if let Some(dir) = &ctx.opts.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
        Checkpoint::of(&agent).save(&dir.join(format!("row-{:04}.json", ctx.job.index)))?;
    }
    let (alloc, report) = evaluate_policy(&agent.policy(), s)?;
    let mut row = ctx.row(RowKind::Point, ctx.pgs().then_some(0.0));
    let objective = reward_from_report(&report, s.r_min(), psi);
    row.set_solution(&alloc, &report, objective);
    row.status = status_of(&report, s.r_min());
    if ctx.cfg.verify {
        match infeasible_or(grid_sum_rate_restricted(s, &ctx.cfg.grid, ctx.pgs()))? {
            Some(g) => row.set_oracle(g.value, g.resolution_bound, objective >= SAC_RATIO * g.value),
            None => row.oracle_ok = Some(false),
        }
    }
    Ok(row)
}

fn run_oracle(ctx: &Ctx) -> Result<SweepRow, CliError> {
    let mut row = ctx.row(RowKind::Point, ctx.pgs().then_some(0.0));
    if let Some(g) = infeasible_or(grid_sum_rate_restricted(&ctx.scenario, &ctx.cfg.grid, ctx.pgs()))? {
        row.set_solution(&g.alloc, &g.report, g.value);
        row.oracle_bound = Some(g.resolution_bound);
        row.status = Status::Ok;
    }
    Ok(row)
}

fn run_job(cfg: &ExperimentConfig, opts: &RunOptions, job: &Job) -> Result<Vec<SweepRow>, CliError> {
    let (scenario, swept) = scenario_of(cfg, job)?;
    let ctx = Ctx { cfg, opts, job, scenario };
    let series = job.kappas.first().copied().flatten();
    match cfg.solver {
        Solver::Eval => Ok(vec![run_eval(&ctx, ctx.pinned(swept, series))?]),
        Solver::PrivateMax => Ok(vec![run_private(&ctx, ctx.pinned(swept, series))?]),
        Solver::CommonMax => run_common(&ctx, swept),
        Solver::Sac => Ok(vec![run_sac(&ctx)?]),
        Solver::Oracle => Ok(vec![run_oracle(&ctx)?]),
    }
}

/// Evaluates every sweep point, in parallel, and returns rows in sweep order:
/// signaling, then λ, then `R_min`, then the sweep axis, then κ.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<SweepRow>, CliError> {
    let kappa_axis = cfg.sweep.as_ref().is_some_and(|s| s.variable == SweepVariable::Kappa);
    if (kappa_axis || !cfg.series.kappas.is_empty()) && matches!(cfg.solver, Solver::Sac | Solver::Oracle) {
        return Err(CliError::Config(format!(
            "the {} solver chooses kappa itself; remove the kappa axis",
            cfg.solver.id()
        )));
    }
    let results: Vec<Result<Vec<SweepRow>, CliError>> = jobs(cfg).par_iter().map(|j| run_job(cfg, opts, j)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        return Err(CliError::Internal("no rows to write".into()));
    }
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))
}
