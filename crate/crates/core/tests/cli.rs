use std::path::Path;
use std::process::{Command, Output};

use deo::runner::CSV_HEADER;

fn deo(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_deo"));
    cmd.args(args).env_remove("DEO_OUT_DIR").env("RUST_LOG", "off");
    if let Some(dir) = out_dir {
        cmd.env("DEO_OUT_DIR", dir);
    }
    cmd.output().expect("spawn deo")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_to_stdout() {
    let o = deo(&["run", "--landscape", "monkey", "--steps", "25"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 25);
    assert!(stderr(&o).contains("\"status\": \"ok\""));
}

#[test]
fn run_with_out_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("saddle.csv");
    let o = deo(
        &["run", "--landscape", "quadratic", "--lambdas", "1,-1", "--steps", "40", "--f", "4", "--oracle", "--out"],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "--out needs a value");
    let o = deo(
        &[
            "run", "--landscape", "quadratic", "--lambdas", "1,-1", "--steps", "40", "--f", "4", "--oracle",
            "--out", csv.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 40);
    for (i, row) in rows.iter().enumerate() {
        let t = i as u64 + 1;
        assert_eq!(row[10].parse::<u64>().unwrap(), t + t / 4);
        assert_eq!(row[9], if t.is_multiple_of(4) { "1" } else { "0" });
        assert!(!row[11].is_empty(), "oracle alignment present at step {t}");
    }
    let summary = read_json(&csv.with_extension("json"));
    assert_eq!(summary["total_grad_evals"], 50);
    assert_eq!(summary["oracle"]["lambda_min"], -1.0);
    assert_eq!(summary["config"]["f"], 4);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = deo(&["run", "--landscape", "rosenbrock", "--opt", "adamw", "--steps", "5", "--seed", "7"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("adamw-rosenbrock-s7.csv").is_file());
    assert!(dir.path().join("adamw-rosenbrock-s7.json").is_file());
}

#[test]
fn config_errors_exit_two_with_one_line() {
    for (args, field) in [
        (vec!["run", "--alpha", "-1"], "alpha"),
        (vec!["run", "--opt", "sophia"], "opt"),
        (vec!["run", "--steps", "0"], "steps"),
        (vec!["run", "--f", "0"], "f"),
        (vec!["run", "--sign", "sideways"], "sign"),
        (vec!["run", "--no-such-flag", "1"], "args"),
        (vec!["compare", "--opts", ""], "opts"),
    ] {
        let o = deo(&args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.contains(field), "{args:?}: {err}");
        assert!(stdout(&o).is_empty());
    }
    let err = stderr(&deo(&["run", "--opt", "sophia"], None));
    for name in ["sgd", "adam", "adamw", "deo-sgd", "deo-adam", "deo-adamw"] {
        assert!(err.contains(name));
    }
}

#[test]
fn divergence_exits_three_and_keeps_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("blowup.csv");
    let o = deo(
        &["run", "--landscape", "rosenbrock", "--opt", "sgd", "--lr", "10", "--steps", "50", "--out", csv.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    let summary = read_json(&csv.with_extension("json"));
    assert_eq!(summary["status"], "numeric_failure");
    let failed = summary["failed_step"].as_u64().unwrap();
    let rows = std::fs::read_to_string(&csv).unwrap().lines().count() as u64 - 1;
    assert_eq!(rows, failed - 1);
    assert!(stderr(&o).contains(&format!("step {failed}:")));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "# saddle\nlandscape = quadratic\nlambdas = 2,-0.5\nsteps = 12\nopt = deo-sgd\n").unwrap();
    let o = deo(&["run", "--config", file.to_str().unwrap(), "--steps", "7"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().nth(1).unwrap().starts_with("1,deo-sgd,"));
    std::fs::write(&file, "stepz = 3\n").unwrap();
    let o = deo(&["run", "--config", file.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepz"));
}

#[test]
fn compare_merges_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cmp.csv");
    let o = deo(
        &["compare", "--opts", "adam,deo-adam", "--landscape", "rosenbrock", "--steps", "30", "--out", csv.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(names.len(), 60);
    assert!(names[..30].iter().all(|n| *n == "adam"));
    assert!(names[30..].iter().all(|n| *n == "deo-adam"));
    let table = stderr(&o);
    assert!(table.contains("adam") && table.contains("deo-adam"));
    let summaries = read_json(&csv.with_extension("json"));
    assert_eq!(summaries.as_array().unwrap().len(), 2);

    let o = deo(&["compare", "--opts", "adam,sgd", "--steps", "5"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("compare.csv").is_file());
}

#[test]
fn compare_rejects_mismatched_members() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cfg");
    let b = dir.path().join("b.cfg");
    std::fs::write(&a, "landscape = monkey\nsteps = 10\n").unwrap();
    std::fs::write(&b, "landscape = monkey\nsteps = 11\n").unwrap();
    let o = deo(&["compare", "--config", a.to_str().unwrap(), "--config", b.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("steps"));
}

#[test]
fn dataset_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("moons.csv");
    let o = deo(&["dataset", "--seed", "3", "--n", "64", "--out", data.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,label"));
    assert_eq!(text.lines().count(), 65);
    let o = deo(
        &["run", "--landscape", "mlp", "--data-file", data.to_str().unwrap(), "--steps", "20", "--batch-size", "16"],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 21);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["run", "--landscape", "mlp", "--steps", "60", "--opt", "deo-adam", "--seed", "4"];
    let a = deo(&args, None);
    let b = deo(&args, None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
