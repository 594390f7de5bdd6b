use std::fs;
use std::path::Path;
use std::process::Command;

use thermoflock_cli::builtins::{builtin, list_builtins};
use thermoflock_cli::run::{diagnostics_file, trajectory_file, DEVIATION_FILE, REPORT_FILE};
use thermoflock_cli::scenario::{CheckName, Scenario, ScenarioFile};
use thermoflock_cli::{load_with, run, CliError, Overrides, Status};
use thermoflock_core::{Model, Scheme};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thermoflock"))
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn short(name: &str) -> Scenario {
    let overrides = Overrides {
        t_end: Some(0.2),
        ..Overrides::default()
    };
    load_with(&format!("builtin:{name}"), &overrides).unwrap()
}

#[test]
fn case_a_conservation_and_entropy_pass() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        checks: Some(vec![CheckName::Conservation, CheckName::Entropy]),
        ..Overrides::default()
    };
    let scenario = load_with("builtin:case-a", &overrides).unwrap();
    let out = run(&scenario, dir.path()).unwrap();
    assert_eq!(out.exit_code(), 0);
    assert_eq!(out.results.len(), 4);
    assert!(out.results.iter().all(|r| r.status == Status::Pass));
    let report = read(dir.path(), REPORT_FILE);
    assert!(report.contains("[PASS] conservation/pbcs: max |sum u| = "));
    assert!(report.contains("[PASS] entropy/kbcs"));
    assert!(report.contains("4 passed, 0 failed, 0 skipped"));
    for model in Model::ALL {
        let traj = read(dir.path(), &trajectory_file(model));
        assert!(traj.starts_with("t,x1,x2,x3,u1,u2,u3,T1,T2,T3\n"));
        assert_eq!(traj.lines().count(), 1 + 1001);
        let diag = read(dir.path(), &diagnostics_file(model));
        assert!(diag.starts_with("t,X,V,E,S,Sigma,mom_res,energy_res,minT\n"));
    }
}

#[test]
fn case_b_2_writes_deviation_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&short("case-b-2"), dir.path()).unwrap();
    let dev = read(dir.path(), DEVIATION_FILE);
    let mut lines = dev.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,dx1,dx2,dx3,dx4,du1,du2,du3,du4,dE1,dE2,dE3,dE4"
    );
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!(first.iter().all(|&v| v == 0.0));
    let last: Vec<f64> = dev.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!(last[5] > 0.0, "u_1 trajectories should differ");
    let deviation = out.results.iter().find(|r| r.check == CheckName::Deviation).unwrap();
    assert_eq!(deviation.status, Status::Skip);
}

#[test]
fn single_model_writes_no_deviation_table() {
    let dir = tempfile::tempdir().unwrap();
    run(&short("prop53"), dir.path()).unwrap();
    assert!(!dir.path().join(DEVIATION_FILE).exists());
    assert!(dir.path().join(trajectory_file(Model::Pbcs)).exists());
    assert!(!dir.path().join(trajectory_file(Model::Kbcs)).exists());
}

#[test]
fn unwritable_output_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let err = run(&short("case-a"), &blocker.join("out")).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert_eq!(err.exit_code(), 2);

    let status = bin()
        .args(["run", "builtin:case-a", "--t-end", "0.1", "--out"])
        .arg(blocker.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn builtin_round_trips_through_toml() {
    for b in list_builtins() {
        let file = builtin(b.name).unwrap();
        let text = file.to_toml();
        let reloaded = ScenarioFile::from_toml(&text, "memory").unwrap();
        assert_eq!(reloaded, file, "{}", b.name);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case-b-1.toml");
    fs::write(&path, builtin("case-b-1").unwrap().to_toml()).unwrap();
    let overrides = Overrides {
        t_end: Some(0.2),
        ..Overrides::default()
    };
    let from_file = load_with(path.to_str().unwrap(), &overrides).unwrap();
    let from_builtin = load_with("builtin:case-b-1", &overrides).unwrap();
    assert_eq!(from_file, from_builtin);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&from_file, &a).unwrap();
    run(&from_builtin, &b).unwrap();
    for model in Model::ALL {
        for name in [trajectory_file(model), diagnostics_file(model)] {
            assert_eq!(read(&a, &name), read(&b, &name), "{name}");
        }
    }
    assert_eq!(read(&a, DEVIATION_FILE), read(&b, DEVIATION_FILE));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short("case-a");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out_a = run(&scenario, &a).unwrap();
    let out_b = run(&scenario, &b).unwrap();
    assert_eq!(out_a.report, out_b.report);
    for (pa, pb) in out_a.files.iter().zip(&out_b.files) {
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{}", pa.display());
    }
}

#[test]
fn csv_values_reload_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&short("prop52"), dir.path()).unwrap();
    let traj = &out.run(Model::Pbcs).unwrap().trajectory;
    let text = read(dir.path(), &trajectory_file(Model::Pbcs));
    for (line, (t, s)) in text.lines().skip(1).zip(traj.iter()) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0], t);
        assert_eq!(&cells[1..4], s.positions());
        assert_eq!(&cells[4..7], s.velocities());
        assert_eq!(&cells[7..10], s.temperatures());
    }
}

#[test]
fn random_initial_data_need_a_seed_for_checks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("random.toml");
    fs::write(
        &path,
        r#"
model = "kbcs"
checks = ["conservation"]

[topology]
metric = 0.25

[initial]
random = { n = 4, d = 2 }

[integrator]
dt = 0.01
t_end = 1.0
"#,
    )
    .unwrap();
    let source = path.to_str().unwrap();
    match load_with(source, &Overrides::default()) {
        Err(CliError::Invalid { field, .. }) => assert_eq!(field, "initial.random.seed"),
        other => panic!("expected a seed error, got {other:?}"),
    }
    let seeded = Overrides {
        seed: Some(11),
        ..Overrides::default()
    };
    let a = load_with(source, &seeded).unwrap();
    let b = load_with(source, &seeded).unwrap();
    assert_eq!(a.initial, b.initial);
    assert_eq!(a.initial.d(), 2);
    let out = run(&a, &dir.path().join("out")).unwrap();
    assert_eq!(out.exit_code(), 0);
    let header = read(&dir.path().join("out"), &trajectory_file(Model::Kbcs));
    assert!(header.starts_with("t,x1_1,x1_2,x2_1"));
}

#[test]
fn overrides_replace_scenario_settings() {
    let overrides = Overrides {
        model: Some(thermoflock_cli::scenario::ModelChoice::Kbcs),
        dt: Some(0.01),
        t_end: Some(2.0),
        scheme: Some(Scheme::ExplicitEuler),
        checks: Some(vec![CheckName::Oracle, CheckName::Oracle]),
        seed: None,
    };
    let s = load_with("builtin:case-a", &overrides).unwrap();
    assert_eq!(s.models(), [Model::Kbcs]);
    assert_eq!(s.config.scheme, Scheme::ExplicitEuler);
    assert_eq!((s.config.dt, s.config.t_end), (0.01, 2.0));
    assert_eq!(s.checks, [CheckName::Oracle]);
}

#[test]
fn cli_lists_and_shows_builtins() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["case-a", "case-b-1", "case-b-2", "prop52", "prop53", "uniform-oracle"]);

    let out = bin().args(["show", "prop52"]).output().unwrap();
    assert!(out.status.success());
    let file = ScenarioFile::from_toml(&String::from_utf8(out.stdout).unwrap(), "stdout").unwrap();
    assert_eq!(file, builtin("prop52").unwrap());

    let out = bin().args(["show", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = |sub: &str| dir.path().join(sub);

    let ok = bin()
        .args(["run", "builtin:uniform-oracle", "--t-end", "1", "--out"])
        .arg(out("ok"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8(ok.stdout).unwrap().contains("[PASS] oracle/kbcs"));

    let failed = bin()
        .args(["run", "builtin:uniform-oracle", "--t-end", "1", "--scheme", "euler", "--dt", "0.01"])
        .args(["--check", "oracle", "--out"])
        .arg(out("fail"))
        .output()
        .unwrap();
    assert_eq!(failed.status.code(), Some(1));
    assert!(String::from_utf8(failed.stdout).unwrap().contains("[FAIL] oracle/kbcs"));

    let blown = bin()
        .args(["run", "builtin:case-a", "--model", "pbcs", "--scheme", "euler", "--dt", "0.05", "--out"])
        .arg(out("blown"))
        .output()
        .unwrap();
    assert_eq!(blown.status.code(), Some(3));
    let err = String::from_utf8(blown.stderr).unwrap();
    assert!(err.contains("t = "), "{err}");

    let missing = bin().args(["run", "/nonexistent/scenario.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let unknown = bin().args(["run", "builtin:case-z"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));

    let bad_flag = bin().args(["run", "builtin:case-a", "--check", "vibes"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn invalid_files_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let base = |topology: &str, t0: &str| {
        format!(
            "model = \"pbcs\"\n{t0}\n[topology]\n{topology}\n[initial]\nx = [0.5, -0.5]\nu = [1.0, -1.0]\nT = [1.0, 2.0]\n[integrator]\ndt = 0.01\nt_end = 1.0\n"
        )
    };

    let asym = write("asym.toml", &base("matrix = [[0, 1], [2, 0]]", ""));
    match load_with(&asym, &Overrides::default()) {
        Err(e @ CliError::Invalid { field: "topology", .. }) => assert!(e.to_string().contains("symmetric"), "{e}"),
        other => panic!("{other:?}"),
    }

    // the data give T0 = ((1 + 1/2) + (2 + 1/2))/2 = 2
    let t0 = write("t0.toml", &base("matrix = [[0, 1], [1, 0]]", "t0 = { fixed = 2.5 }"));
    assert!(matches!(load_with(&t0, &Overrides::default()), Err(CliError::T0Mismatch { .. })));
    let fixed = write("fixed.toml", &base("matrix = [[0, 1], [1, 0]]", "t0 = { fixed = 2.0 }"));
    assert_eq!(load_with(&fixed, &Overrides::default()).unwrap().t0.value(), 2.0);

    let typo = write("typo.toml", &base("matrix = [[0, 1], [1, 0]]", "modle = \"kbcs\""));
    match load_with(&typo, &Overrides::default()) {
        Err(e @ CliError::Parse { .. }) => {
            let msg = e.to_string();
            assert!(msg.contains("modle") && msg.contains("line"), "{msg}");
        }
        other => panic!("{other:?}"),
    }

    let size = write("size.toml", &base("matrix = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]", ""));
    assert!(matches!(
        load_with(&size, &Overrides::default()),
        Err(CliError::Invalid { field: "topology", .. })
    ));

    let dev = write("dev.toml", &base("matrix = [[0, 1], [1, 0]]", "checks = [\"deviation\"]"));
    assert!(matches!(
        load_with(&dev, &Overrides::default()),
        Err(CliError::Invalid { field: "checks", .. })
    ));
}
