use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mlasso::cli::{parse_table, RunRecord};

fn mlasso(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlasso"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MLASSO_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

const SMALL: [&str; 6] = [
    "--points",
    "300",
    "--levels",
    "2",
    "--preset",
    "uniform(0.01)",
];

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["run", "--function", "f3", "--out", out.to_str().unwrap()];
    args.extend(SMALL);
    let res = mlasso(&args, dir.path());
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let stdout = String::from_utf8(res.stdout).unwrap();
    let rows = parse_table(&stdout).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].method, "mlasso");
    assert_eq!(rows[0].l0.len(), 2);

    for suffix in [
        "report.csv",
        "coefficients.txt",
        "support.svg",
        "surface.pgm",
        "report.json",
    ] {
        assert_eq!(files_with_suffix(&out, suffix).len(), 1, "{suffix}");
    }
    let json = fs::read_to_string(&files_with_suffix(&out, "report.json")[0]).unwrap();
    let record: RunRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(record.report.l0, rows[0].l0);
    assert_eq!(record.report.iterations, rows[0].iterations);
    let svg = fs::read_to_string(&files_with_suffix(&out, "support.svg")[0]).unwrap();
    assert_eq!(
        svg.matches("<rect").count(),
        rows[0].l0.iter().sum::<usize>()
    );
    let pgm = fs::read(&files_with_suffix(&out, "surface.pgm")[0]).unwrap();
    assert!(pgm.starts_with(b"P5\n50 50\n255\n"));
    assert_eq!(pgm.len(), b"P5\n50 50\n255\n".len() + 2500);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# small run\nfunction = f2\npoints = 250\nlevels = 2\nlambda = 0.05\nmethod = lsq\n",
    )
    .unwrap();
    let res = mlasso(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--method",
            "aglasso",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rows = parse_table(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(rows[0].method, "aglasso");
    let json =
        fs::read_to_string(&files_with_suffix(&dir.path().join("o"), "report.json")[0]).unwrap();
    assert!(
        json.contains("\"points\": 250") || json.contains("\"points\":250"),
        "{json}"
    );
}

#[test]
fn environment_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--function", "f4"];
    args.extend(SMALL);
    let res = Command::new(env!("CARGO_BIN_EXE_mlasso"))
        .args(&args)
        .current_dir(dir.path())
        .env("MLASSO_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert_eq!(
        files_with_suffix(&dir.path().join("from-env"), "report.csv").len(),
        1
    );
    assert!(!dir.path().join("mlasso-out").exists());
}

#[test]
fn scattered_file_input_has_no_rms() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    let mut state = 1u32;
    for _ in 0..200 {
        let mut next = || {
            state = state.wrapping_mul(1_103_515_245).wrapping_add(12_345);
            (state >> 8) as f64 / (1u32 << 24) as f64 * 2.0 - 1.0
        };
        let (x, y) = (next(), next());
        text += &format!("{x} {y} {}\n", x * x - 0.5 * y);
    }
    let input = dir.path().join("pts.xyz");
    fs::write(&input, text).unwrap();
    let res = mlasso(
        &[
            "run",
            "--input",
            input.to_str().unwrap(),
            "--levels",
            "2",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.lines().nth(1).unwrap().contains(",nan,"), "{stdout}");
    let rows = parse_table(&stdout).unwrap();
    assert_eq!(rows[0].rms, None);
    assert!(rows[0].error < 0.05);
}

#[test]
fn compare_writes_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["compare", "--function", "f1", "--out", "o"];
    args.extend(SMALL);
    let res = mlasso(&args, dir.path());
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let out = dir.path().join("o");
    let tables = files_with_suffix(&out, "compare.csv");
    assert_eq!(tables.len(), 1);
    let rows = parse_table(&fs::read_to_string(&tables[0]).unwrap()).unwrap();
    let methods: Vec<_> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["mlasso", "lsq", "aglasso"]);
    assert_eq!(files_with_suffix(&out, "report.json").len(), 3);
    let total = |m: &str| {
        rows.iter()
            .find(|r| r.method == m)
            .unwrap()
            .l0
            .iter()
            .sum::<usize>()
    };
    assert!(total("lsq") > total("mlasso"));
}

#[test]
fn invalid_settings_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--function", "f9"],
        vec!["run", "--levels", "0"],
        vec!["run", "--lambda", "0.1,0.2", "--levels", "3"],
        vec!["run", "--preset", "u-shape(0.001,0.01)"],
        vec!["run", "--input", "missing.xyz"],
    ] {
        let res = mlasso(&args, dir.path());
        assert!(!res.status.success(), "{args:?} should fail");
        let stderr = String::from_utf8_lossy(&res.stderr);
        assert!(stderr.starts_with("error: "), "{args:?}: {stderr}");
        assert!(res.stdout.is_empty());
    }
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "points = 100\nnot_a_key = 1\n").unwrap();
    let res = mlasso(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("not_a_key"));
    assert!(!dir.path().join("mlasso-out").exists());
}
