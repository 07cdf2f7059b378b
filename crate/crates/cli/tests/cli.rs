use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn afcm(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_afcm"));
    cmd.args(args).env_remove("AFCM_SEED");
    if let Some(s) = seed {
        cmd.env("AFCM_SEED", s);
    }
    cmd.output().expect("spawn afcm")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const TINY: &str = "problem = \"poisson_one_peak\"
seed = 3
nx = 2
ny = 1
J = 30
qx = 10
qy = 10
K = 1
m = 2000
L = 3
eval_resolution = 21
density_resolution = 9
";

#[test]
fn lists_every_problem() {
    let out = afcm(&["list-problems"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["poisson_one_peak", "poisson_two_peaks", "poisson_line", "poisson_line_sharp", "burgers", "heat_peak"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "a.toml", "problem = \"poisson_three_peaks\"\n");
    assert_eq!(afcm(&["run", &unknown], None).status.code(), Some(1));
    let bad = write_config(dir.path(), "b.toml", "tau = 2.0\n");
    assert_eq!(afcm(&["run", &bad], None).status.code(), Some(1));
    assert_eq!(afcm(&["run", "/nonexistent/afcm.toml"], None).status.code(), Some(1));
    assert_eq!(afcm(&["frobnicate"], None).status.code(), Some(1));

    let ok = write_config(dir.path(), "c.toml", TINY);
    assert_eq!(afcm(&["run", &ok], Some("not-a-number")).status.code(), Some(1));
}

#[test]
fn solver_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // far more features than collocation rows
    let cfg = write_config(dir.path(), "u.toml", "nx = 1\nny = 1\nJ = 300\nqx = 4\nqy = 4\ngamma = 1.0\nK = 0\n");
    let out = afcm(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_artifacts_and_export_field_samples_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.toml", &format!("{TINY}output = \"out\"\n"));
    let out = afcm(&["run", &cfg], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("out");

    let errors = fs::read_to_string(run.join("errors.csv")).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines[0], "iteration,linf,l2");
    assert_eq!(lines.len(), 3);
    assert!(!errors.contains('\r'));
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells[0], "0");
    // scientific notation with ten significant digits
    let mantissa = cells[1].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 11, "{}", cells[1]);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["problem"], "poisson_one_peak");
    assert_eq!(report["seed"], 3);
    for k in 0..=1 {
        for f in ["density.csv", "points.csv", "gammas.csv"] {
            assert!(run.join(format!("state/k{k}/{f}")).is_file(), "k{k}/{f}");
        }
    }

    let run_dir = run.to_str().unwrap();
    let out = afcm(&["export-field", run_dir, "--window", "-0.5,-0.5,0.5,0.5", "--resolution", "7"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let field = fs::read_to_string(run.join("field.csv")).unwrap();
    assert_eq!(field.lines().next(), Some("x,y,value,grad_norm"));
    assert_eq!(field.lines().count(), 1 + 49);

    let outside = afcm(&["export-field", run_dir, "--window", "0,0,3,1"], None);
    assert_eq!(outside.status.code(), Some(1));
    let missing = afcm(&["export-field", dir.path().to_str().unwrap()], None);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn seed_environment_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.toml", &format!("{TINY}output = \"a\"\n"));
    let b = write_config(dir.path(), "b.toml", &format!("{TINY}output = \"b\"\n"));
    assert!(afcm(&["run", &a], Some("99")).status.success());
    assert!(afcm(&["run", &b], None).status.success());
    let report = |d: &str| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.path().join(d).join("report.json")).unwrap()).unwrap()
    };
    assert_eq!(report("a")["seed"], 99);
    assert_eq!(report("b")["seed"], 3);
    assert_ne!(
        fs::read(dir.path().join("a/errors.csv")).unwrap(),
        fs::read(dir.path().join("b/errors.csv")).unwrap()
    );
}
