//! Compiled-in scenarios reproducing the numerical experiments.

use crate::scenario::{
    CheckName, InitialSpec, IntegratorSpec, ModelChoice, Rows, ScenarioFile, T0Mode, TopologySpec,
};

pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
}

pub const BUILTINS: [Builtin; 6] = [
    Builtin {
        name: "case-a",
        description: "three particles, unit weights, one cold particle (T = 3, 0.01, 3)",
    },
    Builtin {
        name: "case-b-1",
        description: "four particles, two strongly coupled pairs, u = (2, 1.1, -1.1, -2)",
    },
    Builtin {
        name: "case-b-2",
        description: "four particles, two strongly coupled pairs, u = (1, 2, -1, -2)",
    },
    Builtin {
        name: "prop52",
        description: "PB-CS velocity variance grows initially: u = (4, 3, -7), T = (2, 1, 1)",
    },
    Builtin {
        name: "prop53",
        description: "PB-CS energy variance grows initially: u = (1, -2, 1), T = (2, 1, 1)",
    },
    Builtin {
        name: "uniform-oracle",
        description: "case-a data under KB-CS, compared with the closed-form solution",
    },
];

pub fn list_builtins() -> &'static [Builtin] {
    &BUILTINS
}

fn uniform(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect()
}

fn case_b_matrix() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 100.0, 1.0, 1.0],
        vec![100.0, 0.0, 1.0, 1.0],
        vec![1.0, 1.0, 0.0, 100.0],
        vec![1.0, 1.0, 100.0, 0.0],
    ]
}

fn explicit(x: &[f64], u: &[f64], temp: &[f64]) -> InitialSpec {
    InitialSpec {
        x: Some(Rows::Scalars(x.to_vec())),
        u: Some(Rows::Scalars(u.to_vec())),
        temperature: Some(temp.to_vec()),
        random: None,
    }
}

fn rk4(dt: f64, t_end: f64, record_every: usize) -> IntegratorSpec {
    IntegratorSpec {
        scheme: "rk4".into(),
        dt,
        t_end,
        record_every,
    }
}

const CASE_A_X: [f64; 3] = [0.2108, -0.3500, 0.1392];
const CASE_A_U: [f64; 3] = [1.0, 2.0, -3.0];
const CASE_A_T: [f64; 3] = [3.0, 0.01, 3.0];
const CASE_B_X: [f64; 4] = [0.3709, -0.1899, 0.2992, -0.4802];
const CASE_B_T: [f64; 4] = [1.0, 0.1, 1.0, 1.0];

pub fn builtin(name: &str) -> Option<ScenarioFile> {
    use CheckName::*;
    let description = BUILTINS.iter().find(|b| b.name == name)?.description;
    let (model, checks, topology, initial, integrator) = match name {
        "case-a" => (
            ModelChoice::Both,
            vec![Conservation, Entropy, Envelope, Nonmonotonicity],
            uniform(3),
            explicit(&CASE_A_X, &CASE_A_U, &CASE_A_T),
            rk4(1e-3, 10.0, 10),
        ),
        "case-b-1" => (
            ModelChoice::Both,
            vec![Conservation, Entropy, Envelope, Nonmonotonicity],
            case_b_matrix(),
            explicit(&CASE_B_X, &[2.0, 1.1, -1.1, -2.0], &CASE_B_T),
            rk4(1e-4, 1.0, 10),
        ),
        "case-b-2" => (
            ModelChoice::Both,
            vec![Conservation, Entropy, Envelope, Deviation, Nonmonotonicity],
            case_b_matrix(),
            explicit(&CASE_B_X, &[1.0, 2.0, -1.0, -2.0], &CASE_B_T),
            rk4(1e-4, 1.0, 10),
        ),
        "prop52" => (
            ModelChoice::Pbcs,
            vec![Conservation, Entropy, Envelope, Nonmonotonicity],
            vec![vec![0.0, 200.0, 1.0], vec![200.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            explicit(&[-0.5, 0.0, 0.5], &[4.0, 3.0, -7.0], &[2.0, 1.0, 1.0]),
            rk4(1e-4, 1.0, 10),
        ),
        "prop53" => (
            ModelChoice::Pbcs,
            vec![Conservation, Entropy, Envelope, Nonmonotonicity],
            vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            explicit(&[-0.5, 0.0, 0.5], &[1.0, -2.0, 1.0], &[2.0, 1.0, 1.0]),
            rk4(1e-3, 5.0, 10),
        ),
        "uniform-oracle" => (
            ModelChoice::Kbcs,
            vec![Conservation, Entropy, Envelope, Oracle],
            uniform(3),
            explicit(&CASE_A_X, &CASE_A_U, &CASE_A_T),
            rk4(1e-3, 10.0, 10),
        ),
        _ => return None,
    };
    Some(ScenarioFile {
        name: Some(name.to_string()),
        description: Some(description.to_string()),
        model,
        t0: T0Mode::Derive,
        checks,
        topology: TopologySpec::Matrix(topology),
        initial,
        integrator,
    })
}
