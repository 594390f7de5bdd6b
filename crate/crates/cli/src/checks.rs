//! Verification passes run against integrated trajectories.

use std::fmt;

use thermoflock_core::analysis::{
    closed_form_kbcs_uniform, detect_nonmonotonicity, flow_rate_of_increment, DeviationReport, PerParticle,
};
use thermoflock_core::diagnostics::{
    entropy_increment, envelope_check, fit_envelope_constant, DiagnosticsRecord, Envelope, Functional,
    ENVELOPE_TOL,
};
use thermoflock_core::integrate::state_distance;
use thermoflock_core::{Model, Topology, Trajectory};

use crate::scenario::CheckName;

/// Largest admissible drift of `|Σu|`, `|Σx|` and `|mean energy − T0|`.
pub const CONSERVATION_TOL: f64 = 1e-10;
/// Relative agreement between finite-difference `dS/dt` and `Σ`.
pub const ENTROPY_FD_TOL: f64 = 1e-6;
/// Records with `Σ` below this count as equilibrium for the finite-difference test.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// At most this many records are probed by finite differences.
pub const FD_SAMPLES: usize = 200;
/// Sup-norm agreement with the closed-form KB-CS solution.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: CheckName,
    pub model: Option<Model>,
    pub status: Status,
    pub summary: String,
}

impl CheckResult {
    fn new(check: CheckName, model: Option<Model>, pass: bool, summary: String) -> Self {
        let status = if pass { Status::Pass } else { Status::Fail };
        Self {
            check,
            model,
            status,
            summary,
        }
    }

    fn skip(check: CheckName, model: Option<Model>, summary: impl Into<String>) -> Self {
        Self {
            check,
            model,
            status: Status::Skip,
            summary: summary.into(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.model {
            Some(m) => write!(f, "[{}] {}/{}: {}", self.status, self.check, m, self.summary),
            None => write!(f, "[{}] {}: {}", self.status, self.check, self.summary),
        }
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

pub fn conservation(traj: &Trajectory, records: &[DiagnosticsRecord]) -> CheckResult {
    let mom = max_of(records.iter().map(|r| r.mom_residual));
    let energy = max_of(records.iter().map(|r| r.energy_residual));
    let centroid = max_of(records.iter().map(|r| r.centroid_residual));
    let worst = mom.max(energy).max(centroid);
    CheckResult::new(
        CheckName::Conservation,
        Some(traj.dynamics.model),
        worst <= CONSERVATION_TOL,
        format!(
            "max |sum u| = {mom:.2e}, max |mean energy - T0| = {energy:.2e}, max |sum x| = {centroid:.2e} (tol {CONSERVATION_TOL:.0e})"
        ),
    )
}

pub fn entropy(traj: &Trajectory, records: &[DiagnosticsRecord]) -> CheckResult {
    let model = Some(traj.dynamics.model);
    let decreases = records.windows(2).filter(|w| w[1].entropy < w[0].entropy).count();
    let min_sigma = records.iter().map(|r| r.sigma).fold(f64::INFINITY, f64::min);
    let stride = records.len().div_ceil(FD_SAMPLES).max(1);
    let mut worst_rel: f64 = 0.0;
    let mut probed = 0;
    for (k, (state, rec)) in traj.states.iter().zip(records).enumerate() {
        if k % stride != 0 || rec.sigma < SIGMA_FLOOR {
            continue;
        }
        match flow_rate_of_increment(&traj.dynamics, state, entropy_increment) {
            Ok(fd) => worst_rel = worst_rel.max(((fd - rec.sigma) / rec.sigma).abs()),
            Err(e) => {
                return CheckResult::new(
                    CheckName::Entropy,
                    model,
                    false,
                    format!("finite-difference probe failed at t = {}: {e}", rec.t),
                )
            }
        }
        probed += 1;
    }
    let pass = decreases == 0 && min_sigma >= 0.0 && worst_rel <= ENTROPY_FD_TOL;
    CheckResult::new(
        CheckName::Entropy,
        model,
        pass,
        format!(
            "S decreases at {decreases} records, min Sigma = {min_sigma:.3e}, worst |FD dS/dt - Sigma|/Sigma = {worst_rel:.2e} over {probed} records with Sigma >= {SIGMA_FLOOR:.0e} (tol {ENTROPY_FD_TOL:.0e})"
        ),
    )
}

pub fn envelope(traj: &Trajectory) -> CheckResult {
    let dynamics = &traj.dynamics;
    let model = Some(dynamics.model);
    let initial = traj.initial();
    let n = initial.n();
    let result = |pass: bool, summary: String| CheckResult::new(CheckName::Envelope, model, pass, summary);
    match (dynamics.model, &dynamics.topology) {
        (Model::Kbcs, topology) => {
            let mut parts = Vec::new();
            let mut pass = true;
            for f in [Functional::V, Functional::E] {
                let env = match Envelope::flocking(topology, initial, dynamics.t0, f) {
                    Ok(env) => env,
                    Err(e) => return result(false, e.to_string()),
                };
                let r = envelope_check(traj, &env, f, ENVELOPE_TOL);
                pass &= r.holds();
                parts.push(format!("max {}/bound = {:.9}", f.name(), r.max_ratio));
            }
            let kind = match topology {
                Topology::ConstantSymmetric(_) => "exponential, rate = min weight",
                Topology::Metric { .. } => "metric-weight envelope with Lambda0",
            };
            result(pass, format!("{} ({kind}, tol {ENVELOPE_TOL:.0e})", parts.join(", ")))
        }
        (Model::Pbcs, top) if top.is_uniform() => {
            let env = Envelope::exponential(1.0 / n as f64, initial_norm(traj, Functional::V));
            let env = match env {
                Ok(env) => env,
                Err(e) => return result(false, e.to_string()),
            };
            let r = envelope_check(traj, &env, Functional::V, ENVELOPE_TOL);
            result(
                r.holds(),
                format!("max V/(V0 e^(-t/n)) = {:.9} (tol {ENVELOPE_TOL:.0e})", r.max_ratio),
            )
        }
        (Model::Pbcs, top @ Topology::ConstantSymmetric(_)) => {
            let rate = top.min_weight(initial).unwrap_or(0.0);
            let cv = fit_envelope_constant(traj, rate, Functional::V);
            let ce = fit_envelope_constant(traj, rate, Functional::E);
            result(
                true,
                format!("fitted C with V <= C V0 e^(-a t): {cv:.4}, E <= C E0 e^(-a t): {ce:.4} (a = {rate}; informational)"),
            )
        }
        (Model::Pbcs, Topology::Metric { .. }) => CheckResult::skip(
            CheckName::Envelope,
            model,
            "no decay envelope is available for PB-CS with metric weights",
        ),
    }
}

/// Rounds grid times so that `0.1 * 37` prints as `3.7`.
fn tidy(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn initial_norm(traj: &Trajectory, f: Functional) -> f64 {
    f.eval(traj.initial(), traj.dynamics.t0)
}

pub fn nonmonotonicity(traj: &Trajectory) -> CheckResult {
    let model = Some(traj.dynamics.model);
    let mut parts = Vec::new();
    for f in [PerParticle::Speed, PerParticle::Energy, PerParticle::Temperature] {
        match detect_nonmonotonicity(traj, f) {
            Ok(flags) if flags.is_empty() => parts.push(format!("{}: none", f.name())),
            Ok(flags) => {
                let list: Vec<String> = flags
                    .iter()
                    .map(|m| format!("particle {} rises on [{}, {}]", m.particle + 1, tidy(m.start), tidy(m.end)))
                    .collect();
                parts.push(format!("{}: {}", f.name(), list.join("; ")))
            }
            Err(e) => return CheckResult::skip(CheckName::Nonmonotonicity, model, e.to_string()),
        }
    }
    CheckResult::new(CheckName::Nonmonotonicity, model, true, parts.join(" | "))
}

pub fn oracle(traj: &Trajectory) -> CheckResult {
    let model = Some(traj.dynamics.model);
    if traj.dynamics.model != Model::Kbcs || !traj.dynamics.topology.is_uniform() {
        return CheckResult::skip(CheckName::Oracle, model, "closed form applies to KB-CS with unit weights");
    }
    let mut worst: f64 = 0.0;
    for (t, s) in traj.iter() {
        match closed_form_kbcs_uniform(traj.initial(), traj.dynamics.t0, t) {
            Ok(exact) => worst = worst.max(state_distance(s, &exact)),
            Err(e) => return CheckResult::new(CheckName::Oracle, model, false, e.to_string()),
        }
    }
    CheckResult::new(
        CheckName::Oracle,
        model,
        worst <= ORACLE_TOL,
        format!("sup-norm distance to closed form = {worst:.2e} (tol {ORACLE_TOL:.0e})"),
    )
}

pub fn deviation(report: &DeviationReport) -> CheckResult {
    let (dx, du, de) = report.terminal();
    let common = format!(
        "eps = {:.3e}, sup |du| = {:.3e}, sup |dE| = {:.3e}, fitted C_u = {:.4}, C_E = {:.4}, terminal (x, u, E) = ({dx:.2e}, {du:.2e}, {de:.2e})",
        report.epsilon,
        report.sup_velocity_deviation(),
        report.sup_energy_deviation(),
        report.c_u,
        report.c_e
    );
    match report.bounded {
        Some(bounded) => CheckResult::new(
            CheckName::Deviation,
            None,
            bounded,
            format!("e^(a t/2)-weighted deviations bounded: {bounded}; {common}"),
        ),
        None => {
            let why = if report.admissible {
                "initial data are not small"
            } else {
                "initial data are inadmissible"
            };
            CheckResult::skip(CheckName::Deviation, None, format!("bound check skipped, {why}; {common}"))
        }
    }
}
