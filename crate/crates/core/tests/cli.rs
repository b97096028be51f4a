use std::path::Path;
use std::process::{Command, Output};

use alpn_socp::cone::soc_residual;
use alpn_socp::io::{read_instance_file, read_report, write_instance};
use alpn_socp::oracle::analytic_cases;

fn alpn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alpn")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_k3_case_file() {
    let dir = tempfile::tempdir().unwrap();
    let case = analytic_cases().into_iter().find(|c| c.name == "k3").unwrap();
    let inst = dir.path().join("k3.json");
    let out = dir.path().join("report.json");
    let log = dir.path().join("log.csv");
    write_instance(&case.instance, &inst).unwrap();
    let res = alpn(&["solve", p(&inst), "--out", p(&out), "--log", p(&log)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_report(&out).unwrap();
    assert_eq!(report.status, "optimal");
    assert!((report.objective - std::f64::consts::SQRT_2).abs() <= 1e-4);
    let csv = std::fs::read_to_string(&log).unwrap();
    assert_eq!(csv.lines().count(), report.iterations + 1);
}

#[test]
fn csv_format_flag() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json");
    let out = dir.path().join("r.csv");
    assert_eq!(
        alpn(&["generate", "--m", "4", "--dims", "3x2", "--seed", "2", "--out", p(&inst)]).status.code(),
        Some(0)
    );
    let res = alpn(&["solve", p(&inst), "--out", p(&out), "--format", "csv-log"]);
    assert_eq!(res.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("k,gamma,zeta,b_dist,cuts_total,qp_inner_iters\n"));
}

#[test]
fn malformed_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let res = alpn(&["solve", p(&bad)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!res.stderr.is_empty());
    assert_eq!(alpn(&["solve", p(&dir.path().join("missing.json"))]).status.code(), Some(1));
    assert_eq!(alpn(&["solve"]).status.code(), Some(1));
    assert_eq!(alpn(&["generate", "--m", "3", "--dims", "4y2", "--out", "x.json"]).status.code(), Some(1));
    assert_eq!(alpn(&["solve", p(&bad), "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(alpn(&["--help"]).status.code(), Some(0));
}

#[test]
fn iteration_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("hard.json");
    alpn(&["generate", "--m", "5", "--dims", "5x4", "--seed", "3", "--out", p(&inst)]);
    let res = alpn(&["solve", p(&inst), "--max-iter", "1"]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn generate_contract() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        assert_eq!(
            alpn(&["generate", "--m", "10", "--dims", "1x20", "--seed", "7", "--out", p(path)]).status.code(),
            Some(0)
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let file = read_instance_file(&a).unwrap();
    let inst = file.to_instance().unwrap();
    let prov = file.provenance.unwrap();
    assert_eq!(prov.seed, 7);
    let x = nalgebra::DVector::from_vec(prov.x_tilde);
    assert!((inst.a() * &x - inst.b()).amax() <= 1e-12);
    assert!(x.iter().all(|&t| t > 0.0));

    let c = dir.path().join("c.json");
    alpn(&["generate", "--dims", "5x4", "--m", "3", "--out", p(&c)]);
    let file = read_instance_file(&c).unwrap();
    assert_eq!(file.dims, vec![5, 5, 5, 5]);
    let inst = file.to_instance().unwrap();
    assert_eq!(inst.n(), 20);
    let xt = file.provenance.unwrap().x_tilde;
    for i in 0..4 {
        assert!(soc_residual(&xt[inst.cone().range(i)]) < 0.0);
    }
}

fn strip_time(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 5).map(|(_, s)| s.to_string()).collect())
        .collect()
}

#[test]
fn bench_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let grid = "10:1x20;10:2x10;6:3x2,1x2";
    let res = alpn(&["bench", "--grid", grid, "--reps", "10", "--seed", "1", "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = strip_time(&text);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][2], "1x20");
    assert_eq!(rows[3][2], "3x2+1x2");
    // columns without time: m,n,dims,reps,ok,iter,h0,h1,failures
    assert!(rows[1][5].parse::<f64>().unwrap() <= 10.0);
    assert_eq!(rows[2][6], rows[2][7]);

    let stdout = alpn(&["bench", "--grid", grid, "--reps", "10", "--seed", "1"]);
    assert_eq!(strip_time(&String::from_utf8(stdout.stdout).unwrap()), rows);

    let single = Command::new(env!("CARGO_BIN_EXE_alpn"))
        .args(["bench", "--grid", grid, "--reps", "10", "--seed", "1"])
        .env("ALPN_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(strip_time(&String::from_utf8(single.stdout).unwrap()), rows);
}
