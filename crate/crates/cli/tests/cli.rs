use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn netwhittle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netwhittle")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> PathBuf {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const ER_VAR1: &str = r#"
seed = 3
[graph]
kind = "erdos_renyi"
p = 30
[process]
kind = "var1"
rho = 0.5
[data]
n = 1000
"#;

#[test]
fn gen_writes_documented_files_deterministically() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "er.toml", ER_VAR1);
    let run = ok(&netwhittle(tmp.path(), &["--config", "er.toml", "--name", "a", "gen"]));
    let files = ["L_star.csv", "edges.csv", "graph.json", "X.csv", "Y.csv", "config.resolved.toml", "MANIFEST"];
    for f in files {
        assert!(tmp.path().join(&run).join(f).is_file(), "missing {f}");
    }
    let y = fs::read_to_string(tmp.path().join(&run).join("Y.csv")).unwrap();
    assert_eq!(y.lines().count(), 1001);
    assert!(y.starts_with("t,y1,y2,"));

    let again = ok(&netwhittle(tmp.path(), &["--config", "er.toml", "--name", "b", "gen"]));
    for f in &files[..5] {
        let a = fs::read(tmp.path().join(&run).join(f)).unwrap();
        let b = fs::read(tmp.path().join(&again).join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn resolved_config_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "er.toml", ER_VAR1);
    let first = tmp.path().join(ok(&netwhittle(tmp.path(), &["--config", "er.toml", "--name", "orig", "gen"])));
    let echo = first.join("config.resolved.toml");
    let text = fs::read_to_string(&echo).unwrap();
    assert!(text.contains("target_degree = 4"), "defaults not materialized:\n{text}");
    let replay = write(tmp.path(), "replay.toml", &text.replace("name = \"orig\"", "name = \"replay\""));
    let second = tmp.path().join(ok(&netwhittle(tmp.path(), &["--config", replay.to_str().unwrap(), "gen"])));
    let strip = |p: &Path| {
        fs::read_to_string(p.join("MANIFEST"))
            .unwrap()
            .lines()
            .filter(|l| !l.ends_with("config.resolved.toml"))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn missing_graph_section_is_config_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[data]\nn = 100\n");
    let out = netwhittle(tmp.path(), &["--config", "c.toml", "gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph"));
}

#[test]
fn unknown_config_key_is_config_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", "[graph]\nkind = \"chain\"\np = 4\nwidth = 2\n");
    let out = netwhittle(tmp.path(), &["--config", "c.toml", "gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn huge_fixed_lambda_gives_empty_support() {
    let tmp = TempDir::new().unwrap();
    let run = ok(&netwhittle(tmp.path(), &["--graph", "chain:p=6:2", "--n", "500", "fit", "--lambda", "1e9"]));
    let report = json(&tmp.path().join(&run).join("report.json"));
    assert_eq!(report["support"].as_array().unwrap().len(), 0);
    let metrics = json(&tmp.path().join(&run).join("metrics.json"));
    assert_eq!(metrics["tp"], 0);
    assert_eq!(metrics["fn"], 5);
}

#[test]
fn corrupt_panel_is_data_error_with_line() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.csv", "t,y1,y2\n1,0.1,0.2\n2,0.3,oops\n");
    let out = netwhittle(tmp.path(), &["fit", "--panel", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn fit_reads_generated_panel_and_truth() {
    let tmp = TempDir::new().unwrap();
    let gen = ok(&netwhittle(tmp.path(), &["--graph", "chain:p=6:1", "--n", "4000", "--seed", "4", "gen"]));
    let gen = tmp.path().join(gen);
    let panel = gen.join("Y.csv");
    let truth = gen.join("L_star.csv");
    let from_files = ok(&netwhittle(
        tmp.path(),
        &[
            "--name",
            "files",
            "--seed",
            "4",
            "fit",
            "--panel",
            panel.to_str().unwrap(),
            "--truth",
            truth.to_str().unwrap(),
        ],
    ));
    let direct = ok(&netwhittle(
        tmp.path(),
        &["--name", "direct", "--graph", "chain:p=6:1", "--n", "4000", "--seed", "4", "fit"],
    ));
    let a = json(&tmp.path().join(&from_files).join("metrics.json"));
    let b = json(&tmp.path().join(&direct).join("metrics.json"));
    assert_eq!(a, b);
    assert!(tmp.path().join(&direct).join("ebic.csv").is_file());
    let f = a["f_score"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
    assert_eq!(a["fn"], 0, "every chain edge should be found at n = 4000: {a}");
}

#[test]
fn sweep_writes_one_aggregate_row_per_grid_point() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "s.toml",
        r#"
[graph]
kind = "erdos_renyi"
p = 30
seed = 1
[sweep]
grid = [200.0, 400.0, 800.0, 1600.0, 3200.0]
trials = 10
[estimation.lambda]
kind = "fixed"
lambda = 0.05
"#,
    );
    let run = tmp.path().join(ok(&netwhittle(tmp.path(), &["--config", "s.toml", "sweep", "--compare", "baseline"])));
    assert_eq!(csv_rows(&run.join("rows.csv")).len(), 50);
    let agg = csv_rows(&run.join("aggregate.csv"));
    assert_eq!(agg.len(), 5);
    let header = csv::Reader::from_path(run.join("aggregate.csv")).unwrap().headers().unwrap().clone();
    assert!(header.iter().any(|h| h == "baseline_f_mean"));
}

#[test]
fn sweep_over_processes_tags_outputs() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path().join(ok(&netwhittle(
        tmp.path(),
        &["--graph", "chain:p=5", "sweep", "--processes", "iid,var1,varma22", "--trials", "2"],
    )));
    for p in ["iid", "var1", "varma22"] {
        assert!(run.join(format!("aggregate_{p}.csv")).is_file(), "{p}");
    }
}

#[test]
fn path_has_one_row_per_lambda() {
    let tmp = TempDir::new().unwrap();
    let run =
        tmp.path().join(ok(&netwhittle(tmp.path(), &["--graph", "chain:p=8:1", "--n", "2000", "path", "--k", "20"])));
    let rows = csv_rows(&run.join("path.csv"));
    assert_eq!(rows.len(), 20);
    let summary = json(&run.join("path_summary.json"));
    let frac = summary["warm_start_nonincreasing_frac"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&frac));
}

#[test]
fn diagnose_reports_chain_incoherence() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path().join(ok(&netwhittle(tmp.path(), &["--graph", "chain:p=8", "--n", "4000", "diagnose"])));
    let report = json(&run.join("theory.json"));
    let alpha = report["alpha"].as_f64().unwrap();
    // D − A + 0.1·I on the 8-node path violates incoherence.
    assert!((alpha - (-2.779961340872999)).abs() < 1e-9, "alpha {alpha}");
    assert_eq!(report["p"], 8);
    assert_eq!(report["kappa_holds"], false);
}

#[test]
fn diagnose_on_well_conditioned_graph_file() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "path.csv", "i,j\n0,1\n1,2\n2,3\n");
    write(tmp.path(), "d.toml", "[graph]\nkind = \"file\"\nfile = \"path.csv\"\nepsilon = 2.0\n[data]\nn = 4000\n");
    let run = tmp.path().join(ok(&netwhittle(tmp.path(), &["--config", "d.toml", "diagnose"])));
    let alpha = json(&run.join("theory.json"))["alpha"].as_f64().unwrap();
    assert!((alpha - 0.30303030303030276).abs() < 1e-9, "alpha {alpha}");
}

#[test]
fn baseline_runs_and_scores() {
    let tmp = TempDir::new().unwrap();
    let run =
        tmp.path().join(ok(&netwhittle(tmp.path(), &["--graph", "grid_chain:p=12:1", "--n", "2000", "baseline"])));
    let m = json(&run.join("metrics.json"));
    assert!(m["f_score"].as_f64().is_some());
    assert!(run.join("l_hat.csv").is_file());
}

#[test]
fn threads_flag_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let args = |name: &'static str, threads: &'static str| {
        ["--graph", "chain:p=5", "--name", name, "--threads", threads, "sweep", "--trials", "3"]
    };
    let one = tmp.path().join(ok(&netwhittle(tmp.path(), &args("one", "1"))));
    let two = tmp.path().join(ok(&netwhittle(tmp.path(), &args("two", "2"))));
    assert_eq!(fs::read(one.join("rows.csv")).unwrap(), fs::read(two.join("rows.csv")).unwrap());
}

#[test]
fn bad_flag_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let out = netwhittle(tmp.path(), &["fit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}
