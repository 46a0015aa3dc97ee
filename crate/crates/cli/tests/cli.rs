use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-limits"))
        .args(args)
        .current_dir(dir)
        .env("STOKES_THREADS", "2")
        .output()
        .expect("binary runs")
}

const MOEBIUS: &str = r#"
[family]
kind = "map"
k = 1
shape = "moebius"
roots = { bivariate = [[[0.0, 0.0], [-1.0, 0.0]], [], [[1.0, 0.0]]] }
radius = 0.155

[eps]
list = [[-1e-3, 0.0], [-5e-4, 0.0]]

[numerics]
precision = "double-double"
"#;

#[test]
fn rays_for_k2_prints_four_arguments() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(&["rays", "--k", "2"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let args: Vec<f64> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(args.len(), 4);
    for (i, a) in args.iter().enumerate() {
        let want = std::f64::consts::FRAC_PI_4 * (2 * i + 1) as f64;
        assert!((a - want).abs() < 1e-15);
    }
}

#[test]
fn rays_stream_as_json() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(&["rays", "--k", "3", "--format", "json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["imaginary"].as_array().unwrap().len(), 6);
}

#[test]
fn bad_flags_and_missing_config_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["rays", "--nope"], d.path()).status.code(), Some(1));
    assert_eq!(bin(&["rays", "--k", "2", "--format", "xml"], d.path()).status.code(), Some(1));
    assert_eq!(bin(&["sweep"], d.path()).status.code(), Some(1));
    assert_eq!(bin(&["--help"], d.path()).status.code(), Some(0));
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, MOEBIUS.replace("radius = 0.155", "radius = 0.155\nradus = 1")).unwrap();
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("radus"));
}

#[test]
fn moebius_sweep_writes_csv_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("m.toml");
    std::fs::write(&cfg, MOEBIUS).unwrap();
    let out = d.path().join("m.csv");
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let abs = header.iter().position(|h| *h == "abs_c").unwrap();
    let mut n = 0;
    for l in lines {
        let v: f64 = l.split(',').nth(abs).unwrap().parse().unwrap();
        assert!(v < 1e-7, "{l}");
        n += 1;
    }
    assert_eq!(n, 2 * 2 * 6);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("m.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "sweep");
    assert_eq!(m["numerics"]["precision"], "double-double");
    assert!(m["stages"].as_array().unwrap().iter().any(|s| s["name"] == "abel"));
    let before = std::fs::read(&out).unwrap();
    bin(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], d.path());
    assert_eq!(before, std::fs::read(&out).unwrap());
}

#[test]
fn real_roots_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("r.toml");
    std::fs::write(&cfg, MOEBIUS.replace("[[-1e-3, 0.0], [-5e-4, 0.0]]", "[[1e-3, 0.0], [5e-4, 0.0]]")).unwrap();
    let out = d.path().join("r.csv");
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nondegenerate"));
    assert!(!out.exists());
}

#[test]
fn flag_overrides_reach_the_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("g.toml");
    std::fs::write(
        &cfg,
        "[family]\nkind = \"germ\"\nk = 1\nnum = [[0.0, 0.0], [1.0, 0.0], [0.0, 6.283185307179586], [0.3, 0.0]]\nradius = 0.1\n[numerics]\norder = 6\n",
    )
    .unwrap();
    let out = d.path().join("inv.json");
    let args = ["invariant", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--tol", "1e-9"];
    assert_eq!(bin(&args, d.path()).status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("inv.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["numerics"]["tol"].as_f64(), Some(1e-9));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
}
