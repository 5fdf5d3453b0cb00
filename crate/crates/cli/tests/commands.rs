use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn novikov(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_novikov"));
    cmd.args(args)
        .env_remove("NOVIKOV_OUT")
        .env_remove("NOVIKOV_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const SMALL_GX: &str = "scenario.kind = \"gx\"\ngrid.n_points = 64\n\
                        sim.dt = 0.01\nsim.t_end = 0.1\noutput.dir = \"small\"\n";

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.toml", SMALL_GX);
    let run = tmp.path().join("run");
    let out = novikov(&["simulate", arg(&cfg), "--out", arg(&run)], &[]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("termination: t_end"));
    for name in ["manifest.json", "monitors.csv", "snapshot_final.csv"] {
        assert!(run.join(name).is_file(), "{name}");
    }
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"reason\": \"t_end\""), "{manifest}");
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.toml", SMALL_GX);
    let root = tmp.path().join("root");
    let out = novikov(&["simulate", arg(&cfg)], &[("NOVIKOV_OUT", &root)]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(root.join("small/manifest.json").is_file());
}

#[test]
fn emit_plots_splits_the_monitors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.toml", SMALL_GX);
    let run = tmp.path().join("run");
    assert_eq!(
        code(&novikov(&["simulate", arg(&cfg), "--out", arg(&run)], &[])),
        0
    );
    let out = novikov(&["emit-plots", arg(&run)], &[]);
    assert_eq!(code(&out), 0, "{out:?}");
    let linf = fs::read_to_string(run.join("plots/linf_max.csv")).unwrap();
    assert!(linf.starts_with("time,linf_max"), "{linf}");
    assert_eq!(linf.lines().count(), 3);
}

#[test]
fn capped_run_is_a_normal_exit_with_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cap.toml",
        "scenario.kind = \"gx\"\ngrid.n_points = 256\nsim.dt = 0.001\nsim.t_end = 20.0\n\
         sim.monitor_stride = 5\nsim.blowup_linf_cap = 1.5\ninitial.family = \"sine\"\n\
         initial.m_center = [0.0]\ninitial.n_center = [0.0]\n",
    );
    let run = tmp.path().join("run");
    let out = novikov(&["simulate", arg(&cfg), "--out", arg(&run)], &[]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("blowup_suspected"), "{text}");
    assert!(text.contains("LinfCap"), "{text}");
}

#[test]
fn configuration_problems_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", "grid.n_points = 7\nsim.dtt = 1\n");
    let out = novikov(&["simulate", arg(&bad)], &[]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("grid.n_points") && err.contains("sim.dtt"),
        "{err}"
    );

    let missing = tmp.path().join("absent.toml");
    assert_eq!(code(&novikov(&["simulate", arg(&missing)], &[])), 2);

    let good = write_config(tmp.path(), "g.toml", SMALL_GX);
    let out = novikov(
        &["simulate", arg(&good), "--out", arg(&tmp.path().join("r"))],
        &[("NOVIKOV_THREADS", Path::new("zero"))],
    );
    assert_eq!(code(&out), 2);

    let out = novikov(&["peakon-check", arg(&good)], &[]);
    assert_eq!(code(&out), 2, "{out:?}");
}

#[test]
fn numerical_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "nan.toml",
        "scenario.kind = \"gx\"\ngrid.n_points = 64\nsim.dt = 0.5\nsim.t_end = 50.0\n\
         sim.blowup_linf_cap = 1e308\ninitial.m_amp = [50.0]\ninitial.n_amp = [-50.0]\n",
    );
    let run = tmp.path().join("run");
    let out = novikov(&["simulate", arg(&cfg), "--out", arg(&run)], &[]);
    assert_eq!(code(&out), 3, "{out:?}");
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    assert!(manifest.contains("NaN"), "{manifest}");
}

#[test]
fn unwritable_output_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.toml", SMALL_GX);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = novikov(
        &["simulate", arg(&cfg), "--out", arg(&blocker.join("sub"))],
        &[],
    );
    assert_eq!(code(&out), 4, "{out:?}");
}

#[test]
fn peakon_check_reports_speed_and_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        "scenario.kind = \"periodic_peakon\"\ngrid.n_points = 256\ngrid.length = 1.0\n\
         sim.dt = 0.0005\nsim.t_end = 0.2\npeakon.p = [1.0]\npeakon.q = [1.0]\n\
         peakon.x0 = 0.5\npeakon.sigma_cells = 4.0\n",
    );
    let run = tmp.path().join("run");
    let out = novikov(&["peakon-check", arg(&cfg), "--out", arg(&run)], &[]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("measured speed: 1."), "{text}");
    assert!(run.join("peakon_check.json").is_file());
}

#[test]
fn verify_on_a_scenario_writes_its_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "scenario.kind = \"case1\"\ngrid.n_points = 128\nsim.dt = 0.001\nsim.t_end = 0.2\n\
         initial.m_width = [2.0]\ninitial.n_width = [2.0]\n",
    );
    let dir = tmp.path().join("v");
    let out = novikov(&["verify", arg(&cfg), "--out", arg(&dir)], &[]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = stdout(&out);
    assert!(
        text.lines().filter(|l| l.contains("N/A")).count() >= 5,
        "{text}"
    );
    assert!(dir.join("verify_report.json").is_file());
}
