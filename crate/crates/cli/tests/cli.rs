use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twisted"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twisted-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Data rows of a CSV written with a provenance block.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn validate_gauss_config() {
    let out = scratch("validate");
    let cfg = configs().join("validate.toml");
    let res = run(&["validate", "--config", cfg.to_str().unwrap()], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("validation.json"))).unwrap();
    assert!(json["margin"].as_f64().unwrap() > 0.0);
    assert_eq!(json["provenance"]["kind"], "validate");
    assert_eq!(json["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn failed_validation_reports_json_error() {
    let dir = scratch("invalid");
    // z ↦ 2z expands the disc
    std::fs::write(
        dir.join("system.toml"),
        "[domain]\ncenter = [1.0, 0.0]\nradius = 1.5\n\n[[branches]]\nkind = \"mobius\"\n\
         a = [2.0, 0.0]\nb = [0.0, 0.0]\nc = [0.0, 0.0]\nd = [1.0, 0.0]\n",
    )
    .unwrap();
    std::fs::write(dir.join("exp.toml"), "kind = \"validate\"\nsystem = \"system.toml\"\n").unwrap();
    let res = run(&["run", "--config", dir.join("exp.toml").to_str().unwrap()], &dir.join("out"));
    assert!(!res.status.success());
    let stderr = String::from_utf8_lossy(&res.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    let json: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(json["error"]["kind"], "validation_failed");
}

#[test]
fn missing_kind_is_a_config_error() {
    let out = scratch("nokind");
    let res = run(&["run"], &out);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("\"kind\":\"config\""));
}

#[test]
fn conflicting_kind_rejected() {
    let out = scratch("conflict");
    let res = run(&["validate", "--kind", "limit"], &out);
    assert!(!res.status.success());
}

#[test]
fn example6_count_column() {
    let out = scratch("example6");
    let res = run(&["example6"], &out);
    assert!(res.status.success());
    let rows = data_rows(&read(&out.join("example6_counts.csv")));
    let row = rows
        .iter()
        .find(|r| r[0].parse::<f64>().unwrap() == 1.0 && r[1].parse::<f64>().unwrap() == 12.0)
        .expect("row for (1, 12)");
    let want = (((25.0 * 12.0 - 162.0) / 162.0f64).asin() - ((25.0 * 1.0 - 162.0) / 162.0f64).asin())
        / std::f64::consts::PI;
    assert!((row[2].parse::<f64>().unwrap() - want).abs() <= 1e-15);

    let moments = data_rows(&read(&out.join("example6_moments.csv")));
    assert_eq!(moments[0][0], "1");
    assert!((moments[0][1].parse::<f64>().unwrap() - 162.0 / 25.0).abs() <= 1e-12);
}

#[test]
fn moments_smoke() {
    let out = scratch("moments");
    let res = run(&["moments", "--trials", "2", "--n", "4"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let records = read(&out.join("records_N4.jsonl"));
    let lines: Vec<&str> = records.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("provenance"));
    let rec: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(rec["N"], 4);
    assert!(out.join("moment_report_N4.json").exists());
    assert_eq!(data_rows(&read(&out.join("moments_N4.csv"))).len(), 3);
}

#[test]
fn too_few_trials_fail() {
    let out = scratch("onetrial");
    let res = run(&["moments", "--trials", "1", "--n", "4"], &out);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("too_few_samples"));
}

#[test]
fn simulate_is_reproducible_across_runs_and_thread_counts() {
    let a = scratch("sim-a");
    let b = scratch("sim-b");
    let args = ["simulate", "--n", "4", "--n", "8", "--trials", "3", "--L", "16", "--seed", "11"];
    assert!(run(&args, &a).status.success());
    let mut with_threads: Vec<&str> = args.to_vec();
    with_threads.extend(["--threads", "2"]);
    assert!(run(&with_threads, &b).status.success());
    for name in ["spectra_N4.csv", "spectra_N8.csv", "weyl_summary.json"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name}");
    }
    let rows = data_rows(&read(&a.join("spectra_N8.csv")));
    assert_eq!(rows.len(), 3 * 8 * 16);
    assert_eq!(rows[0].len(), 7);
}

#[test]
fn flags_override_config() {
    let dir = scratch("override");
    std::fs::write(dir.join("exp.toml"), "kind = \"moments\"\nN = [4]\ntrials = 3\nseed = 5\n").unwrap();
    let out = dir.join("out");
    let res = run(&["run", "--config", dir.join("exp.toml").to_str().unwrap(), "--n", "6", "--seed", "7"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("records_N6.jsonl").exists());
    assert!(!out.join("records_N4.jsonl").exists());
    assert!(read(&out.join("moments_N6.csv")).contains("# seed: 7"));
}

#[test]
fn assemble_writes_containers() {
    let out = scratch("assemble");
    let res = run(&["assemble", "--L", "12"], &out);
    assert!(res.status.success());
    let bytes = std::fs::read(out.join("M_1.ttmx")).unwrap();
    assert_eq!(&bytes[..4], b"TTMX");
    assert_eq!(bytes.len(), 24 + 16 * 12 * 12);
    let meta: serde_json::Value = serde_json::from_str(&read(&out.join("M_1.json"))).unwrap();
    assert_eq!(meta["L"], 12);
    assert!(meta["tail_bound"].as_f64().unwrap() >= 0.0);
    assert_eq!(data_rows(&read(&out.join("H.csv"))).len(), 4);
}

#[test]
fn limit_outputs() {
    let out = scratch("limit");
    let res = run(&["limit", "--L", "12"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("tau_moments.json"))).unwrap();
    assert_eq!(json["moments"].as_array().unwrap().len(), 4);
    assert_eq!(json["hankel_positive"], true);
    let hist = data_rows(&read(&out.join("cayley_histogram.csv")));
    let total: usize = hist.iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    // radius 3 ball in F² has 53 words
    assert_eq!(total, 53 * 12);
}
