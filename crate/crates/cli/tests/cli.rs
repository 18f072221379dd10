use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn avm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avm")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn out_arg(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

#[test]
fn timeseries_writes_csv_and_meta() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "ts.csv");
    let o = avm(&["timeseries", "--p", "0.3", "--t-end", "2", "--sample-interval", "1", "--mode", "both", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(Path::new(&out));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,gamma,source,p,kappa,replicate,mode"));
    // three samples for each of full, pde-matched and closed-form
    assert_eq!(lines.count(), 9);
    assert!(csv.contains(",ode,") && csv.contains(",analytic,") && csv.contains(",pde-matched\n"));

    let meta: toml::Table = read(Path::new(&format!("{out}.meta.toml"))).parse().unwrap();
    assert_eq!(meta["command"].as_str(), Some("timeseries"));
    assert_eq!(meta["t-end"].as_float(), Some(2.0));
    assert_eq!(meta["k-max"].as_integer(), Some(60));
    assert_eq!(meta["modes"].as_array().unwrap().len(), 2);
}

#[test]
fn abm_output_is_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let out = out_arg(&dir, name);
        let o = avm(&[
            "abm", "--p", "0.4", "--n", "400", "--replicates", "3", "--t-end", "5", "--seed", seed, "--out", &out,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (read(Path::new(&out)), read(Path::new(&format!("{out}.summary.csv"))))
    };
    let a = run("a.csv", "11");
    let b = run("b.csv", "11");
    let c = run("c.csv", "12");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    assert!(a.1.starts_with("replicate,final_gamma,components,all_consensus\n"));
    assert_eq!(a.1.lines().count(), 4);
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "kappa = 3.0\np-range = \"0.1:0.3:0.1\"\nt-end = 1.0\nmode = \"pde-matched\"\n").unwrap();
    let out = out_arg(&dir, "scan.csv");
    let o = avm(&["scan", "--config", config.to_str().unwrap(), "--t-end", "0.5", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = read(Path::new(&out));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "p,gamma_ode_final,gamma_analytic_star,status");
    assert_eq!(rows.len(), 4);
    // γ* = (3 − 1.1/0.9)/2 at p = 0.1
    let star: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((star - (3.0 - 1.1 / 0.9) / 2.0).abs() < 1e-15);

    let meta: toml::Table = read(Path::new(&format!("{out}.meta.toml"))).parse().unwrap();
    assert_eq!(meta["t-end"].as_float(), Some(0.5));
    assert_eq!(meta["kappa"].as_float(), Some(3.0));
    assert_eq!(meta["modes"].as_array().unwrap()[0].as_str(), Some("pde-matched"));
}

#[test]
fn stdout_when_no_out_path() {
    let o = avm(&["pc-curve", "--kappa", "1", "--t-end", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, "kappa,pc_analytic,pc_ode,status\n1.0000000000000000e0,0.0000000000000000e0,nan,no-bracket:active-at-pmax\n");
}

#[test]
fn invalid_configuration_exits_1() {
    let dir = TempDir::new().unwrap();
    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "kapa = 4.0\n").unwrap();
    let cases: [&[&str]; 6] = [
        &["timeseries", "--p", "1.5"],
        &["scan", "--p-range", "0.5:0.1:0.1"],
        &["abm", "--p", "0.2", "--p-range", "0:1:0.1"],
        &["abm", "--p-range", "0:0.2:0.1", "--t-end", "1"],
        &["timeseries", "--mode", "half"],
        &["timeseries", "--config", bad_config.to_str().unwrap()],
    ];
    for args in cases {
        let o = avm(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn numerical_failure_exits_2() {
    let o = avm(&["timeseries", "--dt", "2", "--t-end", "100"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical failure"));
}

#[test]
fn help_exits_0() {
    let o = avm(&["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("pc-curve"));
}
