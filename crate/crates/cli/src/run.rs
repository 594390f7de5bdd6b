//! Runs a scenario: integrate, write CSV files, evaluate checks, write the report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use thermoflock_core::analysis::{deviation_sequences, DeviationReport};
use thermoflock_core::diagnostics::records;
use thermoflock_core::{DiagnosticsRecord, Dynamics, Model, Trajectory};

use crate::checks::{self, CheckResult, Status};
use crate::error::CliError;
use crate::output::{deviation_csv, diagnostics_csv, trajectory_csv};
use crate::scenario::{CheckName, Scenario};

pub const REPORT_FILE: &str = "report.txt";
pub const DEVIATION_FILE: &str = "deviation.csv";

pub fn trajectory_file(model: Model) -> String {
    format!("trajectory_{}.csv", model.name())
}

pub fn diagnostics_file(model: Model) -> String {
    format!("diagnostics_{}.csv", model.name())
}

/// One model's integrated run together with its diagnostics.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub trajectory: Trajectory,
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub runs: Vec<ModelRun>,
    pub results: Vec<CheckResult>,
    pub report: String,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.status == Status::Fail).count()
    }

    /// 0 when every check passed or was skipped, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        u8::from(self.failures() > 0)
    }

    pub fn run(&self, model: Model) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.trajectory.dynamics.model == model)
    }
}

fn integrate_one(scenario: &Scenario, model: Model) -> Result<ModelRun, CliError> {
    let dynamics = Dynamics::new(model, scenario.topology.clone(), scenario.t0);
    let wrap = |source| CliError::Integration { model, source };
    let trajectory = dynamics.integrate(&scenario.initial, &scenario.config).map_err(wrap)?;
    let records = records(&trajectory).map_err(wrap)?;
    Ok(ModelRun { trajectory, records })
}

/// Integrates every model of the scenario, concurrently when there are two.
pub fn integrate_models(scenario: &Scenario) -> Result<Vec<ModelRun>, CliError> {
    let models = scenario.models();
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = models
            .iter()
            .map(|&m| s.spawn(move || integrate_one(scenario, m)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("integration thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

fn evaluate(scenario: &Scenario, runs: &[ModelRun]) -> Result<Vec<CheckResult>, CliError> {
    let mut results = Vec::new();
    for &check in &scenario.checks {
        if check == CheckName::Deviation {
            let (pb, kb) = pair(runs).expect("deviation check requires both models");
            let report = DeviationReport::from_trajectories(pb.trajectory.clone(), kb.trajectory.clone())
                .map_err(|source| CliError::Integration {
                    model: Model::Pbcs,
                    source,
                })?;
            results.push(checks::deviation(&report));
            continue;
        }
        for run in runs {
            let traj = &run.trajectory;
            results.push(match check {
                CheckName::Conservation => checks::conservation(traj, &run.records),
                CheckName::Entropy => checks::entropy(traj, &run.records),
                CheckName::Envelope => checks::envelope(traj),
                CheckName::Nonmonotonicity => checks::nonmonotonicity(traj),
                CheckName::Oracle => checks::oracle(traj),
                CheckName::Deviation => unreachable!(),
            });
        }
    }
    Ok(results)
}

fn pair(runs: &[ModelRun]) -> Option<(&ModelRun, &ModelRun)> {
    let find = |m| runs.iter().find(|r| r.trajectory.dynamics.model == m);
    Some((find(Model::Pbcs)?, find(Model::Kbcs)?))
}

fn report_text(scenario: &Scenario, results: &[CheckResult]) -> String {
    let s = scenario;
    let models: Vec<_> = s.models().iter().map(|m| m.name()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", s.name);
    let _ = writeln!(out, "models: {}", models.join(", "));
    let _ = writeln!(out, "particles: {}, dimension: {}", s.initial.n(), s.initial.d());
    let _ = writeln!(out, "T0 = {:.16e}", s.t0.value());
    let _ = writeln!(
        out,
        "integrator: {}, dt = {}, t_end = {}, record_every = {}",
        s.config.scheme, s.config.dt, s.config.t_end, s.config.record_every
    );
    out.push('\n');
    for r in results {
        let _ = writeln!(out, "{r}");
    }
    let count = |st| results.iter().filter(|r| r.status == st).count();
    let _ = writeln!(
        out,
        "\n{} passed, {} failed, {} skipped",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Skip)
    );
    out
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

/// Runs the scenario and writes its output files into `out_dir`, which is
/// created if missing.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutput, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let runs = integrate_models(scenario)?;
    let mut files = Vec::new();
    for run in &runs {
        let model = run.trajectory.dynamics.model;
        write_file(out_dir, &trajectory_file(model), &trajectory_csv(&run.trajectory), &mut files)?;
        write_file(out_dir, &diagnostics_file(model), &diagnostics_csv(&run.records), &mut files)?;
    }
    if let Some((pb, kb)) = pair(&runs) {
        let dev = deviation_sequences(&pb.trajectory, &kb.trajectory).map_err(|source| CliError::Integration {
            model: Model::Pbcs,
            source,
        })?;
        write_file(out_dir, DEVIATION_FILE, &deviation_csv(&pb.trajectory.times, &dev), &mut files)?;
    }
    let results = evaluate(scenario, &runs)?;
    let report = report_text(scenario, &results);
    write_file(out_dir, REPORT_FILE, &report, &mut files)?;
    Ok(RunOutput {
        runs,
        results,
        report,
        files,
    })
}
