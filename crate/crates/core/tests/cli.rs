use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dgtime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgtime")).args(args).output().expect("dgtime runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn last_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).lines().last().unwrap_or_default().to_string()
}

#[test]
fn converge_writes_tables_and_confirms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "degree = 1\np = 2\nn_list = 4, 8, 16\n");
    let out_dir = dir.path().join("out");
    let out = dgtime(&["converge", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(last_line(&out), "CONFIRMED");
    let csv = fs::read_to_string(out_dir.join("converge.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("degree,p,N,tau,error"));
    assert_eq!(csv.lines().count(), 4);
    assert!(out_dir.join("converge_exactness.csv").exists());
}

#[test]
fn identical_seeds_give_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_list = 8, 16, 32\nensemble = 3\np = 2\nkind = diagonal\ndimension = 5\neigen_min = 1\neigen_max = 100\n");
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = dgtime(&["mr-sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "11"]);
        assert!(matches!(out.status.code(), Some(0 | 1)));
        tables.push(fs::read(out_dir.join("mr-sweep.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn failing_criterion_is_named_and_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_list = 16, 32, 64\nlocality_n = 64\n");
    let out = dgtime(&["green", "--config", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(last_line(&out), "FAILED locality slope");
}

#[test]
fn invalid_configurations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    for (cmd, text) in [("converge", "n_list = 16, 8\n"), ("mr-sweep", "degree = 0\n"), ("green", "degree = 0\n"), ("rational", "c = 2\n")] {
        let cfg = write_config(dir.path(), text);
        let out = dgtime(&[cmd, "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd} accepted {text:?}");
        assert!(!out_dir.exists());
    }
}
