//! CSV serialization. Numbers carry 17 significant digits, which is enough
//! to reproduce every `f64` exactly.

use thermoflock_core::analysis::DeviationSequences;
use thermoflock_core::{DiagnosticsRecord, Trajectory};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = f64>) {
    let row: Vec<String> = cells.into_iter().map(num).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

/// Column names for a per-particle vector quantity: `u1, u2, …` when
/// `d = 1`, `u1_1, u1_2, …, u2_1, …` otherwise.
fn vector_columns(prefix: &str, n: usize, d: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(n * d);
    for a in 1..=n {
        if d == 1 {
            cols.push(format!("{prefix}{a}"));
        } else {
            cols.extend((1..=d).map(|k| format!("{prefix}{a}_{k}")));
        }
    }
    cols
}

/// `t,x…,u…,T…`, one row per record.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let (n, d) = (traj.initial().n(), traj.initial().d());
    let mut header = vec!["t".to_string()];
    header.extend(vector_columns("x", n, d));
    header.extend(vector_columns("u", n, d));
    header.extend((1..=n).map(|a| format!("T{a}")));
    let mut out = header.join(",") + "\n";
    for (t, s) in traj.iter() {
        let cells = std::iter::once(t)
            .chain(s.positions().iter().copied())
            .chain(s.velocities().iter().copied())
            .chain(s.temperatures().iter().copied());
        push_row(&mut out, cells);
    }
    out
}

pub const DIAGNOSTICS_HEADER: &str = "t,X,V,E,S,Sigma,mom_res,energy_res,minT";

/// Diagnostics rows; `Sigma` is `dS/dt` for `S = (1/n) Σ ln T_α`.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for r in records {
        push_row(
            &mut out,
            [r.t, r.x, r.v, r.e, r.entropy, r.sigma, r.mom_residual, r.energy_residual, r.min_temp],
        );
    }
    out
}

/// `t,dx…,du…,dE…` with per-particle max-norm gaps between PB-CS and KB-CS.
pub fn deviation_csv(times: &[f64], dev: &DeviationSequences) -> String {
    let n = dev.du.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    for prefix in ["dx", "du", "dE"] {
        header.extend((1..=n).map(|a| format!("{prefix}{a}")));
    }
    let mut out = header.join(",") + "\n";
    for (k, t) in times.iter().enumerate() {
        let cells = std::iter::once(*t)
            .chain(dev.dx[k].iter().copied())
            .chain(dev.du[k].iter().copied())
            .chain(dev.de[k].iter().copied());
        push_row(&mut out, cells);
    }
    out
}
