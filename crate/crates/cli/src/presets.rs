//! Built-in experiment presets. `configs/` holds the same values as files.

use crate::config::{
    CommonFile, ConfigFile, Experiment, Scale, ScenarioFile, SeriesFile, Signaling, Solver, SweepFile, SweepVariable,
};

/// Short SAC budget: small networks, 80 episodes, no bootstrapping.
fn reduced_sac() -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("hidden_sizes".into(), toml::Value::Array(vec![64.into(), 64.into()]));
    t.insert("batch_size".into(), 64.into());
    t.insert("episodes".into(), 80.into());
    t.insert("gamma_discount".into(), 0.0.into());
    t
}

fn snr_sweep(points: usize) -> SweepFile {
    SweepFile {
        variable: Some(SweepVariable::Snr),
        start: Some(0.0),
        stop: Some(30.0),
        points: Some(points),
        scale: Some(Scale::Db),
    }
}

pub fn preset(experiment: Experiment) -> ConfigFile {
    match experiment {
        Experiment::Custom => ConfigFile::default(),
        Experiment::Fig1 => ConfigFile {
            solver: Some(Solver::PrivateMax),
            scenario: Some(ScenarioFile { h1: Some(5.0), tau_sic: Some(1.0), ..Default::default() }),
            sweep: Some(snr_sweep(16)),
            series: Some(SeriesFile {
                lambdas: Some(vec![0.1, 0.3, 0.5, 1.0]),
                kappas: Some(vec![0.0, 1.0]),
                ..Default::default()
            }),
            ..Default::default()
        },
        Experiment::Fig2 => ConfigFile {
            solver: Some(Solver::CommonMax),
            scenario: Some(ScenarioFile {
                h1: Some(2.0),
                tau_sic: Some(2.0),
                power_budget: Some(20.0),
                ..Default::default()
            }),
            series: Some(SeriesFile {
                lambdas: Some(vec![0.3, 0.6, 1.0]),
                r_mins: Some(vec![0.2, 0.5]),
                kappas: Some((0..=10).map(|i| i as f64 / 10.0).collect()),
                ..Default::default()
            }),
            common: Some(CommonFile { p1: Some(1.7), p2: Some(1.7) }),
            ..Default::default()
        },
        Experiment::Fig3 => ConfigFile {
            solver: Some(Solver::Sac),
            scenario: Some(ScenarioFile { h1: Some(2.0), tau_sic: Some(1.0), ..Default::default() }),
            sweep: Some(snr_sweep(7)),
            series: Some(SeriesFile {
                lambdas: Some(vec![0.3, 0.6, 1.0]),
                r_mins: Some(vec![0.2, 0.5]),
                signaling: Some(vec![Signaling::Igs, Signaling::Pgs]),
                ..Default::default()
            }),
            sac: Some(reduced_sac()),
            ..Default::default()
        },
        Experiment::Fig4 => ConfigFile {
            solver: Some(Solver::Sac),
            scenario: Some(ScenarioFile { h1: Some(2.0), tau_sic: Some(1.0), r_min: Some(0.2), ..Default::default() }),
            sweep: Some(snr_sweep(7)),
            series: Some(SeriesFile {
                lambdas: Some(vec![0.3, 0.6, 1.0]),
                signaling: Some(vec![Signaling::Igs]),
                ..Default::default()
            }),
            sac: Some(reduced_sac()),
            ..Default::default()
        },
    }
}
