use std::path::PathBuf;
use std::process::{Command, Output};

use koszul_cli::emit::read_json;
use koszul_core::report::Status;

fn koszul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_koszul"))
        .args(args)
        .env_remove("KOSZUL_WINDOW")
        .output()
        .unwrap()
}

fn standard() -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/standard.kz");
    p.to_str().unwrap().to_string()
}

fn scratch(name: &str, text: &str) -> String {
    let p = std::env::temp_dir().join(format!("koszul-{}-{name}.kz", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ordpoiss_passes_on_the_constant_bivector() {
    let out = koszul(&[
        "check",
        &standard(),
        "--suite",
        "ordpoiss",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let reports = read_json(&stdout(&out)).unwrap();
    let a: Vec<_> = reports
        .iter()
        .filter(|r| r.check.starts_with("ordpoiss/A/"))
        .collect();
    assert!(!a.is_empty());
    assert!(a
        .iter()
        .all(|r| r.status == Status::Pass && r.witness.is_none()));
}

#[test]
fn corrupted_bivector_fails_with_witness() {
    let file = scratch(
        "corrupt",
        "[chart space]\nx1 = even\nx2 = even\nx3 = even\n\n\
         [fixture A]\nchart = space\nP = x1*xs1*xs2 + x2*xs2*xs3 + x3*xs1*xs3\n",
    );
    let out = koszul(&["check", &file, "--suite", "ordpoiss", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let reports = read_json(&stdout(&out)).unwrap();
    let failed: Vec<_> = reports
        .iter()
        .filter(|r| r.status == Status::Fail)
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].check, "ordpoiss/A/certify");
    assert!(failed[0].witness.as_deref().unwrap().contains("[[P,P]]"));

    let text = koszul(&["check", &file, "--suite", "ordpoiss"]);
    assert!(stdout(&text).contains("[[P,P]]"));
}

#[test]
fn dualdo_is_byte_identical_across_runs() {
    let args = [
        "check",
        &standard(),
        "--suite",
        "dualdo",
        "--seed",
        "1",
        "--no-timing",
        "--format",
        "json",
    ];
    let (a, b) = (koszul(&args), koszul(&args));
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    let std = standard();
    assert_eq!(
        koszul(&["check", &std, "--suite", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(koszul(&["check", "/nonexistent.kz"]).status.code(), Some(2));
    assert_eq!(koszul(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(koszul(&["eval", &std, "xs1^2"]).status.code(), Some(2));

    let pass = koszul(&["eval", &std, "xs1*xs2 + xs2*xs1"]);
    assert_eq!(pass.status.code(), Some(0));
    assert_eq!(stdout(&pass), "0\n");
    let hb = koszul(&["eval", &std, "hbar^2 * x1"]);
    assert_eq!(stdout(&hb), "x1*hbar^2\n");
}

#[test]
fn report_reemits_and_sets_exit_code() {
    let one_fail = scratch(
        "reports",
        r#"[{"check":"x/y","status":"fail","witness":"1 vs 0","seed":1,"window":8,"millis":0}]"#,
    );
    let out = koszul(&["report", &one_fail]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("1 vs 0"));

    let empty = scratch("empty", "[]");
    let out = koszul(&["report", &empty, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "[]\n");
}

#[test]
fn window_flag_and_environment() {
    let std = standard();
    let out = Command::new(env!("CARGO_BIN_EXE_koszul"))
        .args(["check", &std, "--suite", "fourier", "--format", "json"])
        .env("KOSZUL_WINDOW", "5")
        .output()
        .unwrap();
    let reports = read_json(&stdout(&out)).unwrap();
    assert!(reports.iter().all(|r| r.window == 5));
    let out = koszul(&[
        "check", &std, "--suite", "fourier", "--window", "6", "--seed", "9", "--format", "json",
    ]);
    let reports = read_json(&stdout(&out)).unwrap();
    assert!(reports.iter().all(|r| r.window == 6 && r.seed == 9));
}
