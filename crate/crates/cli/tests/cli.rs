use std::process::{Command, Output};

use effcap::channels::{composite_pdf, mean_snr};
use effcap::grid::canonical_channel;
use effcap::mixfit::MixtureModel;

const CANONICAL: &str =
    r#"{"alpha":2.0,"eta":0.5,"mu":1.0,"b":2.0,"omega":1.0,"format":"format1"}"#;

fn effcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effcap"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&effcap(&["--help"])), 0);
    let v = effcap(&["--version"]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&effcap(&["frobnicate"])), 64);
    assert_eq!(
        code(&effcap(&["fit", "--channel", CANONICAL, "--family", "xyz"])),
        64
    );
    let bad = effcap(&["fit", "--channel", "{\"alpha\": 2, "]);
    assert_eq!(code(&bad), 64);
    assert!(
        stderr(&bad).contains("invalid channel JSON"),
        "{}",
        stderr(&bad)
    );
    let missing = effcap(&["fit", "--channel", "/no/such/file.json"]);
    assert_eq!(code(&missing), 64);
    let out_of_range = effcap(&[
        "fit",
        "--channel",
        &CANONICAL.replace("\"mu\":1.0", "\"mu\":-1.0"),
    ]);
    assert_eq!(code(&out_of_range), 64);
}

#[test]
fn loose_target_gives_order_one() {
    let o = effcap(&["fit", "--channel", CANONICAL, "--mse-target", "1e30"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model = MixtureModel::from_json(stdout(&o).trim()).unwrap();
    assert_eq!(model.order(), 1);
    assert!(stderr(&o).contains("order: 1"));
    assert!(stderr(&o).contains("mse<=1e30: true"));
}

#[test]
fn reachable_target_reports_success() {
    let o = effcap(&["fit", "--channel", CANONICAL, "--mse-target", "1e-4"]);
    assert_eq!(code(&o), 0);
    let report = stderr(&o);
    assert!(report.contains("mse<=1e-4: true"), "{report}");
    assert!(report.contains("wall_time_s:"));
}

#[test]
fn unreachable_target_is_degraded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.json");
    let o = effcap(&[
        "--out",
        out.to_str().unwrap(),
        "fit",
        "--channel",
        CANONICAL,
        "--max-order",
        "3",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("warning"));
    let model = MixtureModel::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(model.order() <= 3);
}

#[test]
fn mog_fit_from_stdin_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.json");
    std::fs::write(&path, CANONICAL).unwrap();
    let o = effcap(&[
        "--seed",
        "5",
        "fit",
        "--channel",
        path.to_str().unwrap(),
        "--family",
        "mog",
        "--mse-target",
        "1e-2",
        "--mog-samples",
        "20000",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(matches!(
        MixtureModel::from_json(stdout(&o).trim()).unwrap(),
        MixtureModel::Mog(_)
    ));
}

#[test]
fn validate_rejects_few_samples() {
    let o = effcap(&["validate", "--channel", CANONICAL, "--mc-samples", "10"]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("1000"));
}

#[test]
fn validate_fails_on_disagreement() {
    let o = effcap(&[
        "validate",
        "--channel",
        CANONICAL,
        "--a",
        "0,1",
        "--mc-samples",
        "20000",
        "--max-order",
        "1",
        "--mog-samples",
        "20000",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.starts_with("A,mg,mog,numeric_exact,monte_carlo,monte_carlo_stderr,max_gap,status\n")
    );
    assert!(text.contains("ergodic(θ→0)"));
    assert!(text.contains("FAIL"));
    assert!(stderr(&o).contains("overall: FAIL"));
}

#[test]
fn pdf_dump_exact_column() {
    let o = effcap(&[
        "pdf-dump",
        "--channel",
        CANONICAL,
        "--which",
        "exact",
        "--from",
        "1e-7",
        "--to",
        "60",
        "--points",
        "4000",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["gamma", "exact"]);
    assert_eq!(rows.len(), 4000);
    let integral: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[1][1] + w[0][1]))
        .sum();
    assert!((integral - 1.0).abs() < 1e-3, "{integral}");
}

#[test]
fn pdf_dump_mg_matches_exact_at_mode() {
    let p = canonical_channel();
    let gbar = mean_snr(&p).unwrap();
    // Locate the mode of the exact density on a fine log grid.
    let mode = (0..4000)
        .map(|i| gbar * 10f64.powf(-3.0 + 5.0 * i as f64 / 3999.0))
        .max_by(|a, b| {
            composite_pdf(*a, &p)
                .unwrap()
                .total_cmp(&composite_pdf(*b, &p).unwrap())
        })
        .unwrap();
    let at = format!("{mode}");
    let hi = format!("{}", mode * 2.0);
    let o = effcap(&[
        "pdf-dump",
        "--channel",
        CANONICAL,
        "--which",
        "mg,exact",
        "--from",
        &at,
        "--to",
        &hi,
        "--points",
        "2",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["gamma", "exact", "mg"]);
    assert!((rows[0][1] - rows[0][2]).abs() < 1e-3, "{:?}", rows[0]);
}

#[test]
fn sweep_spec_errors() {
    assert_eq!(code(&effcap(&["sweep", "{\"channel\": 3}"])), 64);
    let spec = format!(
        r#"{{"channel":{CANONICAL},"sweep_variable":"mean_snr_db","range":{{"start":0,"stop":5,"steps":1}},"qos":{{"a":1}},"methods":["mg"]}}"#
    );
    assert_eq!(code(&effcap(&["sweep", &spec])), 64);
    let mc = spec
        .replace(r#""steps":1"#, r#""steps":2"#)
        .replace(r#"["mg"]"#, r#"["monte_carlo"],"mc_samples":999"#);
    assert_eq!(code(&effcap(&["sweep", &mc])), 64);
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    let spec = format!(
        r#"{{"channel":{CANONICAL},"sweep_variable":"mean_snr_db","range":{{"start":-5,"stop":25,"steps":13}},"qos":{{"a":1}},"methods":["monte_carlo","mg"],"mc_samples":200000,"seed":9}}"#
    );
    let o = effcap(&["--out", out.to_str().unwrap(), "sweep", &spec]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header, ["x", "mg", "monte_carlo", "monte_carlo_stderr"]);
    assert_eq!(rows.len(), 13);
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 3.0 * r[3], "{r:?}");
    }
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig.csv.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["fits"][0]["family"], "mg");
    assert!(meta["fits"][0]["order"].as_u64().unwrap() >= 1);
}

#[test]
fn sweep_seed_flag_overrides_spec() {
    let spec = format!(
        r#"{{"channel":{CANONICAL},"sweep_variable":"theta","range":{{"start":0,"stop":1,"steps":2}},"qos":{{"mean_snr_db":0}},"methods":["monte_carlo"],"mc_samples":5000,"seed":1}}"#
    );
    let a = effcap(&["--quiet", "sweep", &spec]);
    let b = effcap(&["--quiet", "--seed", "1", "sweep", &spec]);
    let c = effcap(&["--quiet", "--seed", "2", "sweep", &spec]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert!(a.stderr.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).lines().nth(1).unwrap().starts_with("0,"));
}
