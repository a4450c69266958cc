use std::process::Command;

fn l1sub() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l1sub"))
}

#[test]
fn solve_ode_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("profile.csv");
    let status = l1sub()
        .args(["solve-ode", "--alpha", "0.4", "--sigma", "0.8", "--r", "2", "--M", "64", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "m,t_m,U_m,u_exact,error,bound_E,bound_E_tilde");
    assert_eq!(lines.count(), 65);
}

#[test]
fn solve_pde_from_config_and_quasilinear() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(&cfg, "problem = \"test-b\"\nalpha = 0.5\nscheme = \"imex1\"\nN = 63\nmesh = { M = 16, r = 3.0 }\n").unwrap();
    let out = dir.path().join("e.csv");
    assert!(l1sub()
        .args(["solve-pde", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 18);

    let table = dir.path().join("table.csv");
    assert!(l1sub()
        .args(["solve-quasilinear", "--alpha", "0.7", "--M", "16", "--N", "31", "--out"])
        .arg(&table)
        .status()
        .unwrap()
        .success());
    assert!(std::fs::read_to_string(&table).unwrap().starts_with("m,t_m,max_U"));
}

#[test]
fn convergence_and_verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rates = dir.path().join("rates.csv");
    let ok = l1sub()
        .args(["convergence", "--problem", "test-a", "--alpha", "0.4", "--r", "1", "--M", "64", "--levels", "3", "--rates"])
        .arg(&rates)
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("overall rate"));
    assert_eq!(std::fs::read_to_string(&rates).unwrap().lines().count(), 3);

    let verify = l1sub()
        .args(["verify", "--suite", "comparison", "--trials", "100", "--seed", "3"])
        .output()
        .unwrap();
    assert!(verify.status.success());
    assert!(String::from_utf8_lossy(&verify.stdout).starts_with("PASS comparison"));

    // invalid input is reported with a nonzero exit code
    let bad = l1sub().args(["solve-ode", "--alpha", "1.5", "--out", "x.csv"]).output().unwrap();
    assert!(!bad.status.success());
    let bad_ladder = l1sub()
        .args(["convergence", "--problem", "fisher-kolmogorov", "--scheme", "imex1", "--M", "8", "--levels", "2"])
        .output()
        .unwrap();
    assert!(!bad_ladder.status.success());
}
