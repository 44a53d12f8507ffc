use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CANONICAL: &str = r#"{
  "s": {"kind": "tanh", "gain": 3.0},
  "r": {"kind": "tanh", "gain": -3.0},
  "u": {"kind": "affine", "slope": 1.0},
  "gamma": 0.2, "ebar": 0.5, "tau_x": 1.0, "tau_e": 1.0
}"#;

fn fsoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsoe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn setup() -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.json", CANONICAL);
    let cfg = cfg.to_str().unwrap().to_string();
    (dir, cfg)
}

/// Header plus numeric rows; blank cells become `None`.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(String::from)
        .collect::<Vec<_>>();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
        .collect();
    for r in &rows {
        assert_eq!(r.len(), header.len());
    }
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn equilibria_counts() {
    let (dir, cfg) = setup();
    for (beta, expected) in [("0.24", 5), ("0.25", 1), ("0.7", 1)] {
        let out = dir.path().join(format!("eq_{beta}.csv"));
        let o = fsoe(&[
            "equilibria",
            &cfg,
            "--beta",
            beta,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (header, rows) = read_csv(&out);
        assert_eq!(header.join(","), "beta,p_star,e_star,trace,det,stability");
        assert_eq!(rows.len(), expected, "beta {beta}");
        if beta == "0.7" {
            assert_eq!(rows[0][5], "StableFocus");
        }
    }
}

#[test]
fn simulate_cycle_and_collapse() {
    let (dir, cfg) = setup();
    let range_after = |beta: &str, t_from: f64| {
        let out = dir.path().join(format!("sim_{beta}.csv"));
        let o = fsoe(&[
            "simulate",
            &cfg,
            "--beta",
            beta,
            "--t-end",
            "500",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let (h, rows) = read_csv(&out);
        assert_eq!(h.join(","), "t,p,e");
        let ps: Vec<f64> = rows
            .iter()
            .filter(|r| num(&r[0]) >= t_from)
            .map(|r| num(&r[1]))
            .collect();
        ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ps.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    assert!(range_after("0.59", 300.0) > 1e-2);
    assert!(range_after("0.61", 300.0) < 1e-3);

    let out = dir.path().join("zero.csv");
    let o = fsoe(&[
        "simulate",
        &cfg,
        "--beta",
        "0.5",
        "--p0",
        "0",
        "--e0",
        "0",
        "--t-end",
        "10",
        "--method",
        "rk4",
        "--step",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| num(&r[1]) == 0.0 && num(&r[2]) == 0.0));
}

#[test]
fn diagram_points_and_round_trip() {
    let (dir, cfg) = setup();
    let prefix = dir.path().join("full");
    let o = fsoe(&[
        "diagram",
        &cfg,
        "--steps",
        "500",
        "--jobs",
        "2",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, pts) = read_csv(&dir.path().join("full_points.csv"));
    assert_eq!(h.join(","), "beta,kind,detection,omega0,coefficient");
    let count = |kind: &str| {
        pts.iter()
            .filter(|r| r[1] == kind && r[2] == "Numeric")
            .count()
    };
    assert_eq!(count("Pitchfork"), 1);
    assert_eq!(count("Fold"), 2);
    assert_eq!(count("Hopf"), 1);
    let fold = pts.iter().find(|r| r[1] == "Fold").unwrap();
    assert!(num(&fold[0]) > 0.24 && num(&fold[0]) < 0.25);

    let (h, rows) = read_csv(&dir.path().join("full_diagram.csv"));
    assert_eq!(
        h.join(","),
        "beta,branch_id,p_star,e_star,trace,det,stability,cycle_p_min,cycle_p_max,cycle_period"
    );
    let cyc = col(&h, "cycle_period");
    let with_cycle = |b: f64| {
        rows.iter()
            .filter(|r| (num(&r[0]) - b).abs() < 1e-3)
            .any(|r| !r[cyc].is_empty())
    };
    assert!(with_cycle(0.59) && with_cycle(0.3) && !with_cycle(0.65));

    // same input, same bytes
    let again = dir.path().join("again");
    let o = fsoe(&[
        "diagram",
        &cfg,
        "--steps",
        "500",
        "--jobs",
        "1",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for suffix in ["_diagram.csv", "_points.csv"] {
        let a = std::fs::read(format!("{}{suffix}", prefix.display())).unwrap();
        let b = std::fs::read(format!("{}{suffix}", again.display())).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn diagram_quiet_range_and_bad_grid() {
    let (dir, cfg) = setup();
    let prefix = dir.path().join("quiet");
    let o = fsoe(&[
        "diagram",
        &cfg,
        "--beta-min",
        "0.7",
        "--beta-max",
        "0.9",
        "--steps",
        "41",
        "--cycles",
        "off",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, pts) = read_csv(&dir.path().join("quiet_points.csv"));
    assert!(pts.is_empty());
    let o = fsoe(&[
        "diagram",
        &cfg,
        "--steps",
        "1",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn portrait_runs() {
    let (dir, cfg) = setup();
    let out = dir.path().join("portrait.csv");
    let o = fsoe(&[
        "portrait",
        &cfg,
        "--beta",
        "0.24",
        "--grid",
        "5",
        "--t-end",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&out);
    assert_eq!(h.join(","), "run_id,t,p,e");
    let mut finals: Vec<f64> = Vec::new();
    for id in 0..25 {
        let last = rows
            .iter()
            .filter(|r| r[0] == id.to_string())
            .next_back()
            .unwrap();
        finals.push(num(&last[2]));
    }
    let mut limits: Vec<f64> = Vec::new();
    for p in finals {
        if !limits.iter().any(|q| (q - p).abs() < 1e-3) {
            limits.push(p);
        }
    }
    assert!(limits.len() >= 2, "{limits:?}");

    let o = fsoe(&[
        "portrait",
        &cfg,
        "--beta",
        "0.61",
        "--grid",
        "5",
        "--t-end",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&out);
    for id in 0..25 {
        let last = rows
            .iter()
            .filter(|r| r[0] == id.to_string())
            .next_back()
            .unwrap();
        assert!(num(&last[2]).abs() < 1e-2 && num(&last[3]).abs() < 1e-1);
    }

    let o = fsoe(&[
        "portrait",
        &cfg,
        "--beta",
        "0.5",
        "--grid",
        "1",
        "--t-end",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&out);
    assert!(rows.iter().all(|r| r[0] == "0"));
    assert_eq!(num(&rows[0][2]), 0.0);
    assert_eq!(num(&rows[0][3]), 0.0);
}

#[test]
fn verify_outcomes() {
    let (dir, cfg) = setup();
    let o = fsoe(&["verify", &cfg]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(text.contains("fold pair"));

    let bad = write(
        dir.path(),
        "unshifted.json",
        &CANONICAL.replace(r#""slope": 1.0}"#, r#""slope": 1.0, "offset": 0.0}"#),
    );
    let o = fsoe(&["verify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let weak = write(
        dir.path(),
        "weak.json",
        &CANONICAL.replace(r#""gain": 3.0"#, r#""gain": 0.5"#),
    );
    let o = fsoe(&["verify", weak.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("N/A") && text.contains("amplifier condition violated"));
}

#[test]
fn network_runs() {
    let (dir, cfg) = setup();
    let graph = write(
        dir.path(),
        "tri.json",
        r#"{"n": 3, "edges": [[0,1],[1,2],[0,2]]}"#,
    );
    let out = dir.path().join("net.csv");
    let o = fsoe(&[
        "network",
        &cfg,
        "--graph",
        graph.to_str().unwrap(),
        "--beta",
        "0.59",
        "--x0",
        "consensus:0.5",
        "--sync-error",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out);
    assert_eq!(h.join(","), "t,x_0,x_1,x_2,e,sync_error");
    assert!(rows.iter().all(|r| num(&r[5]) <= 1e-9));

    let weak = write(
        dir.path(),
        "weak.json",
        &CANONICAL.replace(r#""gain": 3.0"#, r#""gain": 0.5"#),
    );
    let o = fsoe(&[
        "network",
        weak.to_str().unwrap(),
        "--graph",
        graph.to_str().unwrap(),
        "--beta",
        "0",
        "--x0",
        "random:42",
        "--t-end",
        "200",
        "--sync-error",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&out);
    assert!(num(&rows.last().unwrap()[5]) < 1e-6);
    assert!(num(&rows[0][5]) > 1e-2);

    let o = fsoe(&[
        "network",
        &cfg,
        "--graph",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = fsoe(&["network", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let (dir, _) = setup();
    let typo = write(
        dir.path(),
        "typo.json",
        &CANONICAL.replace("\"ebar\"", "\"e_bar\""),
    );
    assert_eq!(
        fsoe(&["equilibria", typo.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        fsoe(&["equilibria", dir.path().join("none.json").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let (_keep, cfg) = setup();
    assert_eq!(
        fsoe(&["equilibria", &cfg, "--beta", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(fsoe(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    let (_keep, cfg) = setup();
    let o = fsoe(&[
        "simulate", &cfg, "--beta", "0.5", "--tol", "1e-300", "--t-end", "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
