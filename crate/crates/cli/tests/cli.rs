use std::path::Path;
use std::process::{Command, Output};

fn fsskit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsskit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run fsskit")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn trivial_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsskit(&["verify", "--config", "trivial-n3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("verify.json"))).unwrap();
    assert_eq!(report["certificates_pass"], true);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn huge_a_fails_the_contraction_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsskit(&["verify", "--config", "huge-a"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
    let csv = read(&dir.path().join("verify.csv"));
    assert!(csv.lines().any(|l| l.starts_with("contraction") && l.contains(",false,")));

    let o = fsskit(&["fss", "--config", "huge-a"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read(&dir.path().join("failures.csv")).lines().count(), 2);
}

#[test]
fn expdecay_n2_golden_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsskit(&["verify", "--config", "expdecay-n2", "--jobs", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("verify.csv"));
    let ids = column(&csv, "id");
    for want in ["propagator alpha=0", "contraction bound_V2", "integral residual (fss)", "perturbation detected", "threshold alpha=4"] {
        assert!(ids.iter().any(|i| i == want), "missing row {want}");
    }
    let kinds = column(&csv, "kind");
    let pass = column(&csv, "pass");
    assert!(kinds.iter().zip(&pass).filter(|(k, _)| *k == "certificate").all(|(_, p)| p == "true"));
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let src = fsskit::catalog::source("trivial-n3").unwrap().replace("\"schema\": 1", "\"schema\": 2");
    std::fs::write(&bad, src).unwrap();
    let o = fsskit(&["fss", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = fsskit(&["fss", "--config", "trivial-n3", "--tol-override", "residual"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = fsskit(&["fss", "--config", "no-such-scenario"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_does_not_depend_on_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(fsskit(&["fss", "--config", "expdecay-block", "--jobs", "1"], a.path()).status.success());
    assert!(fsskit(&["fss", "--config", "expdecay-block", "--jobs", "5"], b.path()).status.success());
    for f in ["fss_columns.csv", "fss_values.csv", "fss_residuals.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let header = read(&a.path().join("fss_values.csv")).lines().next().unwrap().to_string();
    assert_eq!(header, "alpha,lambda_re,lambda_im,region,j,k,x,y_re,y_im");
}

#[test]
fn theta_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fsskit(&["sweep-theta", "--config", "trivial-n3"], dir.path()).status.success());
    let vals = column(&read(&dir.path().join("sweep_theta.csv")), "value");
    assert!(!vals.is_empty() && vals.iter().all(|v| v.parse::<f64>().unwrap() == 0.0));

    let cfg = dir.path().join("decades.json");
    let mut s = fsskit::catalog::load("expdecay-n2").unwrap();
    s.alphas = vec![0.0];
    s.plan.rays = vec![std::f64::consts::FRAC_PI_4];
    s.plan.radii = vec![1.0, 10.0, 100.0, 1000.0];
    std::fs::write(&cfg, serde_json::to_string(&s).unwrap()).unwrap();
    assert!(fsskit(&["sweep-theta", "--config", cfg.to_str().unwrap()], dir.path()).status.success());
    let vals: Vec<f64> = column(&read(&dir.path().join("sweep_theta.csv")), "value").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(vals.len(), 4);
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
}

#[test]
fn pencil_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsskit(&["sturm", "--config", "pencil-sigma"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let reports: serde_json::Value = serde_json::from_str(&read(&dir.path().join("sturm_reports.json"))).unwrap();
    assert!(reports.as_array().unwrap().iter().all(|r| r["pass"] == true));
    assert!(fsskit(&["fss", "--config", "pencil-p0"], dir.path()).status.success());
}
