use std::process::{Command, Output};

fn nfvsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfvsim"))
        .args(args)
        .env_remove("NFVSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &[&str] = &["--trials", "400", "--p", "0.05", "--q", "0.01,0.1", "--k", "30"];

#[test]
fn sweep_writes_fixed_csv_schema() {
    let out = nfvsim(&[&["sweep"], SMALL].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,p,q,estimator,trials,p_err,ci_halfwidth,detection_mode,seed"
    );
    let rows: Vec<&str> = lines.collect();
    // 2 schemes x 2 q x 2 default estimators
    assert_eq!(rows.len(), 8);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 9, "{row}");
        let p_err: f64 = fields[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&p_err));
        assert_eq!(fields[7], "genie");
        assert_eq!(fields[8], "1");
    }
}

#[test]
fn flags_override_config_file_and_workers_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.cfg");
    std::fs::write(&config, "# small sweep\nschemes = coded\ntrials = 300\nseed = 5\nk = 30\nq = 0.02\nestimators = exact, fullmc\n").unwrap();
    let cfg = config.to_str().unwrap();
    let a = nfvsim(&["sweep", "--config", cfg, "--seed", "9", "--workers", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    assert!(text.lines().skip(1).all(|l| l.starts_with("coded,") && l.ends_with(",9")), "{text}");
    let b = Command::new(env!("CARGO_BIN_EXE_nfvsim"))
        .args(["sweep", "--config", cfg, "--seed", "9"])
        .env("NFVSIM_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_to_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = nfvsim(&[&["sweep", "--output", path.to_str().unwrap()], SMALL].concat());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 9);
    let json = nfvsim(&[&["sweep", "--format", "json"], SMALL].concat());
    let first = stdout(&json);
    assert!(first.lines().next().unwrap().starts_with('{'));
}

#[test]
fn partial_sweep_exits_with_code_2() {
    let out = nfvsim(&[
        "sweep", "--schemes", "coded", "--servers", "4", "--estimators", "exact,paper", "--trials", "200",
        "--k", "30", "--q", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains(",exact,"));
    assert!(text.contains("# partial: 1 of 2 points failed"));
}

#[test]
fn bad_config_is_an_error() {
    let out = nfvsim(&["sweep", "--set", "bogus=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let out = nfvsim(&["sweep", "--q", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mfr_reports_witness() {
    let out = nfvsim(&["mfr", "diversity"]);
    assert_eq!(stdout(&out), "scheme diversity\nmfr 1\nwitness {1}\n");
    let out = nfvsim(&["mfr", "coded"]);
    assert!(stdout(&out).contains("mfr 2\n"));
    let out = nfvsim(&["mfr", "matrix:1011/0111"]);
    assert!(stdout(&out).contains("mfr 2\n"), "{}", stdout(&out));
}

#[test]
fn encode_decode_round_trip() {
    let out = nfvsim(&["encode", "--bits", "1000000"]);
    assert_eq!(stdout(&out).trim(), "11101111000111");
    let out = nfvsim(&["decode", "--bits", "11101111000111"]);
    assert_eq!(stdout(&out).trim(), "1000000");
    // one flipped bit is corrected
    let out = nfvsim(&["decode", "--bits", "11101101000111"]);
    assert_eq!(stdout(&out).trim(), "1000000");
    let tail = nfvsim(&["encode", "--bits", "1", "--termination", "zero-tail"]);
    assert_eq!(stdout(&tail).trim(), "11101111000111");
}

#[test]
fn design_with_supplied_f_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("f.csv");
    let copy = dir.path().join("f_out.csv");
    std::fs::write(&table, "d,f\n1,0.02\n2,0.02\n").unwrap();
    let out = nfvsim(&[
        "design", "--f-table", table.to_str().unwrap(), "--f-table-out", copy.to_str().unwrap(), "--top", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().next().unwrap().contains("\"min_dist\":2"));
    assert_eq!(std::fs::read_to_string(copy).unwrap(), "d,f\n1,0.02\n2,0.02\n");
}

#[test]
fn design_measures_f_when_no_table_given() {
    let out = nfvsim(&["design", "--trials", "300", "--k", "30", "--top", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1);
}
