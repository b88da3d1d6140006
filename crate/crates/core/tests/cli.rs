use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sigmak::cli::{
    read_field_csv, EXIT_DATA, EXIT_DIVERGED, EXIT_FAIL, EXIT_UNSUPPORTED, EXIT_USAGE,
};
use sigmak::nonlinear::{picard_solve, reconstruct_u};
use sigmak::psi::parse;
use sigmak::{GridSpec, Mode, SolverConfig};

fn sigmak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigmak"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn first_json(out: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(out).lines().next().unwrap()).unwrap()
}

const HEADLINE: [&str; 10] = [
    "--n", "3", "--k", "2", "--mode", "hessian", "--psi", "-1 + x1", "--eps", "0.1",
];

fn solve_into(dir: &Path, grid: &str) -> (Output, std::path::PathBuf, std::path::PathBuf) {
    let field = dir.join("field.csv");
    let report = dir.join("report.json");
    let mut args = vec!["solve"];
    args.extend(HEADLINE);
    args.extend([
        "--grid",
        grid,
        "--out-field",
        field.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
    ]);
    (sigmak(&args), field, report)
}

#[test]
fn mu_examples() {
    let out = sigmak(&["mu", "--n", "3", "--k", "2", "--M", "-1"]);
    assert_eq!(code(&out), 0);
    let v = first_json(&out);
    let mu: Vec<f64> = serde_json::from_value(v["mu"].clone()).unwrap();
    let s = 2f64.sqrt();
    for (got, want) in mu.iter().zip([s, s, -0.75 * s]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!((v["margin"].as_f64().unwrap() - s / 4.0).abs() < 1e-12);

    let out = sigmak(&["mu", "--n", "3", "--k", "2", "--M", "3", "--convex"]);
    assert_eq!(code(&out), 0);
    let mu: Vec<f64> = serde_json::from_value(first_json(&out)["mu"].clone()).unwrap();
    assert!(mu.iter().all(|m| (m - 1.0).abs() < 1e-12), "{mu:?}");

    let out = sigmak(&["mu", "--n", "3", "--k", "3", "--M", "-1"]);
    assert_eq!(code(&out), EXIT_UNSUPPORTED);
    assert!(stderr(&out).contains("unsupported"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&sigmak(&[])), EXIT_USAGE);
    assert_eq!(code(&sigmak(&["mu", "--n", "3"])), EXIT_USAGE);
    assert_eq!(code(&sigmak(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&sigmak(&["--help"])), 0);

    let out = sigmak(&[
        "solve", "--n", "3", "--k", "2", "--mode", "hessian", "--psi", "x1 +",
    ]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(stderr(&out).contains("offset 4"), "{}", stderr(&out));

    let out = sigmak(&[
        "solve", "--n", "3", "--k", "2", "--mode", "sideways", "--psi", "1",
    ]);
    assert_eq!(code(&out), EXIT_USAGE);

    let out = Command::new(env!("CARGO_BIN_EXE_sigmak"))
        .args(["mu", "--n", "3", "--k", "2", "--M", "1"])
        .env("SIGMAK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), EXIT_USAGE);
}

#[test]
fn unsupported_regime_in_solve() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("f.csv");
    let out = sigmak(&[
        "solve",
        "--n",
        "2",
        "--k",
        "2",
        "--mode",
        "curvature",
        "--psi",
        "-1",
        "--out-field",
        field.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), EXIT_UNSUPPORTED);
    assert!(!field.exists());
}

#[test]
fn divergence_suggests_smaller_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("f.csv");
    let report = dir.path().join("r.json");
    let out = sigmak(&[
        "solve",
        "--n",
        "2",
        "--k",
        "1",
        "--mode",
        "curvature",
        "--psi",
        "1 + 30*x1^2",
        "--eps",
        "2",
        "--grid",
        "9",
        "--out-field",
        field.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), EXIT_DIVERGED);
    assert!(stderr(&out).contains("epsilon = 1") || stderr(&out).contains("--eps 1"));
}

#[test]
fn solve_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (out, field, report) = solve_into(dir.path(), "21");
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["converged"], true);
    assert_eq!(rep["n"], 3);
    assert_eq!(rep["mode"], "hessian");

    let text = fs::read_to_string(&field).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "x1,x2,x3,xt1,xt2,xt3,w,u,residual"
    );
    assert_eq!(text.lines().count(), 1 + 21 * 21 * 21);

    // Values written by the binary match an in-process solve bit for bit.
    let cfg = SolverConfig::seeded(
        2,
        Mode::Hessian,
        parse("-1 + x1", 3).unwrap(),
        0.1,
        GridSpec::new(3, 21).unwrap(),
    )
    .unwrap();
    let (w, _) = picard_solve(&cfg).unwrap();
    let u = reconstruct_u(&w, &cfg).unwrap();
    let table = read_field_csv(&field, 3).unwrap();
    for (p, row) in table.rows.iter().enumerate() {
        assert_eq!(row[6].to_bits(), w.values()[p].to_bits());
        assert_eq!(row[7].to_bits(), u.values()[p].to_bits());
        let x = cfg.grid.coords(p);
        assert_eq!(&row[..3], &x[..]);
        assert_eq!(&row[3..6], &cfg.physical_coords(p)[..]);
    }

    let mut args = vec!["verify", "--field", field.to_str().unwrap()];
    args.extend(HEADLINE);
    args.extend(["--grid", "21"]);
    let out = sigmak(&args);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let v = first_json(&out);
    assert_eq!(v["passed"], true);
    assert!(stdout(&out).contains("--grid 41"));

    // Wrong k: the field does not solve the sigma_1 equation.
    let mut wrong = args.clone();
    let k = wrong.iter().position(|a| *a == "--k").unwrap();
    wrong[k + 1] = "1";
    assert_eq!(code(&sigmak(&wrong)), EXIT_FAIL);

    // Truncated and garbled files.
    let lines: Vec<&str> = text.lines().collect();
    let truncated = dir.path().join("truncated.csv");
    fs::write(&truncated, lines[..100].join("\n")).unwrap();
    let mut t = args.clone();
    t[2] = truncated.to_str().unwrap();
    assert_eq!(code(&sigmak(&t)), EXIT_DATA);

    let garbled = dir.path().join("garbled.csv");
    fs::write(&garbled, text.replacen("e-", "e-x", 1)).unwrap();
    t[2] = garbled.to_str().unwrap();
    assert_eq!(code(&sigmak(&t)), EXIT_DATA);

    let headerless = dir.path().join("headerless.csv");
    fs::write(&headerless, lines[1..].join("\n")).unwrap();
    t[2] = headerless.to_str().unwrap();
    assert_eq!(code(&sigmak(&t)), EXIT_DATA);
}

#[test]
fn config_file_runs_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("f.csv");
    let report = dir.path().join("r.json");
    let cfg = dir.path().join("run.json");
    let doc = serde_json::json!({
        "n": 2, "k": 1, "mode": "curvature", "psi": "0.5 + x1*x2",
        "epsilon": 0.1, "grid": 11, "max_iter": 30, "tol": 1e-10,
        "out_field": field, "out_report": report,
    });
    fs::write(&cfg, doc.to_string()).unwrap();
    let out = sigmak(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(field.exists() && report.exists());
    let out = sigmak(&[
        "verify",
        "--field",
        field.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    let mut bad = doc.clone();
    bad["seed"] = serde_json::json!(3);
    fs::write(&cfg, bad.to_string()).unwrap();
    let out = sigmak(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(stderr(&out).contains("seed"));

    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(
        code(&sigmak(&["solve", "--config", cfg.to_str().unwrap()])),
        EXIT_USAGE
    );
}

#[test]
fn expand_check_is_deterministic() {
    let a = sigmak(&[
        "expand-check",
        "--n",
        "3",
        "--k",
        "2",
        "--trials",
        "1",
        "--seed",
        "7",
    ]);
    let b = sigmak(&[
        "expand-check",
        "--n",
        "3",
        "--k",
        "2",
        "--trials",
        "1",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);

    let out = sigmak(&[
        "expand-check",
        "--n",
        "4",
        "--k",
        "2",
        "--trials",
        "100",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(stdout(&out).matches("PASS").count(), 5);

    let out = sigmak(&["expand-check", "--n", "2", "--k", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("SKIP"));
    assert_eq!(stdout(&out).matches("PASS").count(), 4);

    assert_eq!(
        code(&sigmak(&["expand-check", "--n", "3", "--k", "4"])),
        EXIT_USAGE
    );
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let field = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_sigmak"))
            .args([
                "solve", "--n", "2", "--k", "1", "--mode", "hessian", "--psi", "1 + x2",
            ])
            .args(["--grid", "15", "--out-field", field.to_str().unwrap()])
            .args(["--out-report", dir.path().join("r.json").to_str().unwrap()])
            .env("SIGMAK_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read(field).unwrap()
    };
    assert_eq!(run("1", "a.csv"), run("4", "b.csv"));
}
