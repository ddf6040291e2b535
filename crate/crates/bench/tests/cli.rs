use std::process::{Command, Output};

use aemsim::{read_json, Status};

fn aemsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aemsim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV rows without the trailing `wall_ms` column.
fn rows_without_time(s: &str) -> Vec<String> {
    s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn sort_passes_and_prints_the_csv_header() {
    let o = aemsim(&["sort", "--n", "4096", "--m", "256", "--b", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algo,n,M,B,omega,lambda,dist,seed,block_reads,block_writes,cost,bound_reads,bound_writes,pass,wall_ms"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..8], ["mergesort", "4096", "256", "16", "8", "1", "uniform", "1"]);
    assert_eq!(row[13], "true");
}

#[test]
fn one_row_per_grid_point() {
    let o = aemsim(&[
        "sweep", "--algo", "mergesort", "--n", "1024,2048,4096", "--m", "256", "--b", "16", "--omega", "4,16",
        "--lambda", "1,auto", "--dist", "uniform,sorted", "--seed", "1,2,3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1 + 3 * 2 * 2 * 2 * 3);
}

#[test]
fn reports_are_reproducible_apart_from_timing() {
    let args = ["sweep", "--algo", "samplesort", "--n", "8192", "--m", "256", "--b", "16", "--seed", "4,5"];
    let a = aemsim(&args);
    let b = aemsim(&args);
    assert_eq!(rows_without_time(&stdout(&a)), rows_without_time(&stdout(&b)));
}

#[test]
fn write_inefficient_fixture_fails_the_bound() {
    let o = aemsim(&["sort", "--algo", "double-write-mergesort", "--n", "65536"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",false,"));
}

#[test]
fn json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = aemsim(&["matmul", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let reports = read_json(&text).unwrap();
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!((r.n, r.m, r.b), (64, 256, 8));
    assert_eq!((r.block_reads, r.block_writes), (4096, 512));
    assert_eq!(r.status, Status::Pass);
    assert!(text.contains("\"schema_version\": 1"));
}

#[test]
fn config_errors_exit_with_4() {
    // B larger than M
    let o = aemsim(&["sort", "--m", "16", "--b", "32"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).lines().nth(1).unwrap().contains("error"));

    for bad in [
        vec!["sort", "--dist", "bimodal"],
        vec!["sort", "--algo", "quicksort"],
        vec!["matmul", "--algo", "mergesort"],
        vec!["sort", "--lambda", "0.5"],
        vec!["sort", "--mode", "lenient"],
        vec!["frobnicate"],
    ] {
        let o = aemsim(&bad);
        assert_eq!(o.status.code(), Some(4), "{bad:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn some_config_errors_in_a_larger_grid_do_not_fail_the_run() {
    let o = aemsim(&["sweep", "--algo", "mergesort", "--n", "2048", "--m", "16,256", "--b", "32"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.contains(",error,"));
}

#[test]
fn lambda_subcommand_shows_the_admissibility_test() {
    let o = aemsim(&["lambda", "--n", "1048576", "--m", "1024", "--b", "32", "--omega", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("chosen lambda ="));
    let last = out.lines().last().unwrap();
    assert!(last.ends_with("2, 4, 8"), "{last}");
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(aemsim(&["--help"]).status.code(), Some(0));
}
