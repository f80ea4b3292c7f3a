//! Experiment configuration files.
//!
//! A config is a TOML file. Every key is optional: values missing from the
//! file are taken from the preset named by `experiment` (`custom` when absent),
//! and unknown keys are rejected.

use std::path::{Path, PathBuf};

use rsma_core::oracle::GridSpec;
use rsma_core::sac::SacConfig;
use serde::Deserialize;

use crate::error::CliError;
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Custom,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Eval,
    PrivateMax,
    CommonMax,
    Sac,
    Oracle,
}

impl Solver {
    pub fn id(self) -> &'static str {
        match self {
            Self::Eval => "eval",
            Self::PrivateMax => "private-max",
            Self::CommonMax => "common-max",
            Self::Sac => "sac",
            Self::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// Total power in the units given by `scale`.
    Snr,
    Lambda,
    RMin,
    TauSic,
    Kappa,
    H1,
}

impl SweepVariable {
    pub fn id(self) -> &'static str {
        match self {
            Self::Snr => "snr",
            Self::Lambda => "lambda",
            Self::RMin => "r_min",
            Self::TauSic => "tau_sic",
            Self::Kappa => "kappa",
            Self::H1 => "h1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signaling {
    Igs,
    Pgs,
}

impl Signaling {
    pub fn id(self) -> &'static str {
        match self {
            Self::Igs => "igs",
            Self::Pgs => "pgs",
        }
    }
}

// ---- file layer: everything optional ----

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub solver: Option<Solver>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub verify: Option<bool>,
    pub pgs: Option<bool>,
    pub scenario: Option<ScenarioFile>,
    pub sweep: Option<SweepFile>,
    pub series: Option<SeriesFile>,
    pub allocation: Option<AllocationFile>,
    pub common: Option<CommonFile>,
    pub sac: Option<toml::Table>,
    pub grid: Option<GridFile>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub noise_var: Option<f64>,
    pub lambda: Option<f64>,
    pub power_budget: Option<f64>,
    pub snr_db: Option<f64>,
    pub tau_sic: Option<f64>,
    pub r_min: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub variable: Option<SweepVariable>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub scale: Option<Scale>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesFile {
    pub lambdas: Option<Vec<f64>>,
    pub r_mins: Option<Vec<f64>>,
    pub kappas: Option<Vec<f64>>,
    pub signaling: Option<Vec<Signaling>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationFile {
    pub p_c: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonFile {
    pub p1: Option<f64>,
    pub p2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub n_kappa: Option<usize>,
    pub n_pc: Option<usize>,
    pub n_p1: Option<usize>,
    pub n_p2: Option<usize>,
}

fn pick<T>(user: Option<T>, base: Option<T>) -> Option<T> {
    user.or(base)
}

macro_rules! overlay_section {
    ($user:expr, $base:expr, $ty:ident { $($f:ident),* }) => {
        match ($user, $base) {
            (None, b) => b,
            (u, None) => u,
            (Some(u), Some(b)) => Some($ty { $($f: pick(u.$f, b.$f)),* }),
        }
    };
}

impl ConfigFile {
    /// `self` wins over `base`, key by key.
    pub fn overlay(self, base: ConfigFile) -> ConfigFile {
        let sac = match (self.sac, base.sac) {
            (None, b) => b,
            (u, None) => u,
            (Some(u), Some(mut b)) => {
                b.extend(u);
                Some(b)
            }
        };
        ConfigFile {
            experiment: pick(self.experiment, base.experiment),
            solver: pick(self.solver, base.solver),
            seed: pick(self.seed, base.seed),
            out: pick(self.out, base.out),
            verify: pick(self.verify, base.verify),
            pgs: pick(self.pgs, base.pgs),
            scenario: overlay_section!(
                self.scenario,
                base.scenario,
                ScenarioFile { h1, h2, noise_var, lambda, power_budget, snr_db, tau_sic, r_min }
            ),
            sweep: overlay_section!(self.sweep, base.sweep, SweepFile { variable, start, stop, points, scale }),
            series: overlay_section!(self.series, base.series, SeriesFile { lambdas, r_mins, kappas, signaling }),
            allocation: overlay_section!(self.allocation, base.allocation, AllocationFile { p_c, p1, p2, kappa }),
            common: overlay_section!(self.common, base.common, CommonFile { p1, p2 }),
            sac,
            grid: overlay_section!(self.grid, base.grid, GridFile { n_kappa, n_pc, n_p1, n_p2 }),
        }
    }
}

// ---- resolved layer ----

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub h1: f64,
    pub h2: f64,
    pub noise_var: f64,
    pub lambda: f64,
    pub power_budget: f64,
    pub tau_sic: f64,
    pub r_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub scale: Scale,
    /// Axis values as written (dB when `scale = "db"`).
    pub values: Vec<f64>,
}

impl Sweep {
    /// The axis value converted to the linear quantity it sets.
    pub fn linear(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Db => 10f64.powf(v / 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub lambdas: Vec<f64>,
    pub r_mins: Vec<f64>,
    /// Empty means κ is optimized.
    pub kappas: Vec<f64>,
    pub signaling: Vec<Signaling>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSpec {
    pub p_c: f64,
    pub p1: f64,
    pub p2: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub solver: Solver,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub verify: bool,
    pub scenario: ScenarioSpec,
    pub sweep: Option<Sweep>,
    pub series: Series,
    pub allocation: Option<AllocationSpec>,
    pub common: Option<(f64, f64)>,
    pub sac: SacConfig,
    /// Grid for the 4-D oracles (sum rate and private rate).
    pub grid: GridSpec,
    /// Grid for the 2-D common-rate oracle.
    pub common_grid: GridSpec,
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

/// Uniform grid including both end points.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        n => {
            (0..n).map(|i| if i + 1 == n { stop } else { start + (stop - start) * i as f64 / (n - 1) as f64 }).collect()
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self, CliError> {
        let experiment = file.experiment.unwrap_or(Experiment::Custom);
        let f = file.overlay(presets::preset(experiment));

        let sc = f.scenario.unwrap_or_default();
        check(sc.power_budget.is_none() || sc.snr_db.is_none(), || {
            "set at most one of `scenario.power_budget` and `scenario.snr_db`".into()
        })?;
        let power_budget = match (sc.power_budget, sc.snr_db) {
            (Some(p), _) => p,
            (None, Some(db)) => 10f64.powf(db / 10.0),
            (None, None) => 10.0,
        };
        let scenario = ScenarioSpec {
            h1: sc.h1.unwrap_or(1.0),
            h2: sc.h2.unwrap_or(1.0),
            noise_var: sc.noise_var.unwrap_or(1.0),
            lambda: sc.lambda.unwrap_or(0.5),
            power_budget,
            tau_sic: sc.tau_sic.unwrap_or(1.0),
            r_min: sc.r_min.unwrap_or(0.0),
        };
        for (key, v) in
            [("scenario.h1", scenario.h1), ("scenario.h2", scenario.h2), ("scenario.noise_var", scenario.noise_var)]
        {
            check(v.is_finite() && v > 0.0, || format!("`{key}` must be positive, got {v}"))?;
        }

        let sweep = match f.sweep {
            None => None,
            Some(s) => {
                let variable = require(s.variable, "sweep.variable")?;
                let start = require(s.start, "sweep.start")?;
                let stop = require(s.stop, "sweep.stop")?;
                let points = require(s.points, "sweep.points")?;
                check(points >= 1, || "`sweep.points` must be at least 1".into())?;
                check(start.is_finite() && stop.is_finite(), || "sweep bounds must be finite".into())?;
                let scale = s.scale.unwrap_or(Scale::Linear);
                check(scale == Scale::Linear || variable == SweepVariable::Snr, || {
                    "`sweep.scale = \"db\"` applies only to `variable = \"snr\"`".into()
                })?;
                Some(Sweep { variable, scale, values: linspace(start, stop, points) })
            }
        };

        let sr = f.series.unwrap_or_default();
        let pgs = f.pgs.unwrap_or(false);
        let mut series = Series {
            lambdas: sr.lambdas.unwrap_or_default(),
            r_mins: sr.r_mins.unwrap_or_default(),
            kappas: sr.kappas.unwrap_or_default(),
            signaling: sr.signaling.unwrap_or_else(|| vec![Signaling::Igs]),
        };
        if pgs {
            series.signaling = vec![Signaling::Pgs];
        }
        check(!series.signaling.is_empty(), || "`series.signaling` must not be empty".into())?;
        if let Some(sw) = &sweep {
            let clash = match sw.variable {
                SweepVariable::Lambda => !series.lambdas.is_empty(),
                SweepVariable::RMin => !series.r_mins.is_empty(),
                SweepVariable::Kappa => !series.kappas.is_empty(),
                _ => false,
            };
            check(!clash, || format!("`sweep.variable = \"{}\"` conflicts with its series list", sw.variable.id()))?;
        }
        for k in &series.kappas {
            check((0.0..=1.0).contains(k), || format!("series kappa {k} is outside [0, 1]"))?;
        }

        let allocation = match f.allocation {
            None => None,
            Some(a) => Some(AllocationSpec {
                p_c: require(a.p_c, "allocation.p_c")?,
                p1: require(a.p1, "allocation.p1")?,
                p2: require(a.p2, "allocation.p2")?,
                kappa: a.kappa.unwrap_or(0.0),
            }),
        };
        let common = match f.common {
            None => None,
            Some(c) => Some((require(c.p1, "common.p1")?, require(c.p2, "common.p2")?)),
        };

        let mut sac: SacConfig = match f.sac {
            None => SacConfig::default(),
            Some(t) => t.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("[sac]: {e}")))?,
        };
        let seed = f.seed.unwrap_or(0);
        sac.seed = seed;
        sac.validate().map_err(|e| CliError::Config(format!("[sac]: {e}")))?;

        let verify = f.verify.unwrap_or(false);
        let g = f.grid.unwrap_or_default();
        let base = GridSpec::default();
        let grid = GridSpec {
            n_kappa: g.n_kappa.unwrap_or(base.n_kappa),
            n_pc: g.n_pc.unwrap_or(base.n_pc),
            n_p1: g.n_p1.unwrap_or(base.n_p1),
            n_p2: g.n_p2.unwrap_or(base.n_p2),
        };
        grid.validate().map_err(|e| CliError::Config(format!("[grid]: {e}")))?;
        let dense = GridSpec::verify();
        let common_grid = GridSpec {
            n_kappa: g.n_kappa.unwrap_or(if verify { dense.n_kappa } else { base.n_kappa }),
            n_pc: g.n_pc.unwrap_or(if verify { dense.n_pc } else { base.n_pc }),
            ..grid
        };

        let solver = f.solver.unwrap_or(Solver::Eval);
        check(solver != Solver::Eval || allocation.is_some(), || {
            "the eval solver needs an [allocation] section".into()
        })?;
        check(solver != Solver::CommonMax || common.is_some(), || {
            "the common-max solver needs a [common] section with p1 and p2".into()
        })?;

        Ok(Self {
            experiment,
            solver,
            seed,
            out: f.out,
            verify,
            scenario,
            sweep,
            series,
            allocation,
            common,
            sac,
            grid,
            common_grid,
        })
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn parse_config(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
