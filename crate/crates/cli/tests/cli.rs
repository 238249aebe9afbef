use std::path::PathBuf;
use std::process::{Command, Output};

fn spec(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name).to_string_lossy().into_owned()
}

fn delaystab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaystab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("delaystab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn certify_example_at_one_hundredth() {
    let o = delaystab(&["certify", &spec("modulated.json")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("8.32 < 8.4"), "{out}");
    assert!(out.contains("verdict: Certified"));
}

#[test]
fn certify_example_at_two_hundredths_fails() {
    let o = delaystab(&["certify", &spec("modulated_tau_0_02.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("9.64 >= 7.8"));
}

#[test]
fn invalid_specs_exit_two_with_field() {
    let o = delaystab(&["certify", &spec("malformed_row.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("A: row 2"), "{}", stdout(&o));
    let o = delaystab(&["certify", &spec("unknown_field.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("tua"));
    let o = delaystab(&["certify", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(delaystab(&["certify", &spec("modulated.json"), "--norm", "max"]).status.code(), Some(2));
    assert_eq!(delaystab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_reports_closed_form() {
    let o = delaystab(&["sweep", &spec("modulated.json")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("tau* = 0.010416666667"), "{out}");
    assert!(out.contains("1/96"));

    let o = delaystab(&["sweep", &spec("scalar_family_a2.json"), "--criterion", "c41"]);
    assert!(stdout(&o).contains("tau* = 0.500000000000"));

    let o = delaystab(&["sweep", &spec("uncertifiable.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("tau* = 0.000000000000"));
}

#[test]
fn criterion_mismatch_is_invalid() {
    let o = delaystab(&["certify", &spec("modulated.json"), "--criterion", "c35"]);
    assert_eq!(o.status.code(), Some(2));
    let o = delaystab(&["sweep", &spec("modulated.json"), "--criterion", "c42"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_family() {
    for (d, winner) in [(4, "P51"), (16, "tie"), (25, "C41")] {
        let o = delaystab(&["compare", &spec(&format!("scalar_family_d{d}.json"))]);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.contains(&format!("larger threshold: {winner}")), "d = {d}: {out}");
    }
    assert_eq!(delaystab(&["compare", &spec("missing_a1.json")]).status.code(), Some(2));
}

#[test]
fn simulate_zero_history_writes_zero_csv() {
    let csv = tmp("zero.csv");
    let o = delaystab(&["simulate", &spec("zero_history.json"), "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,x3,x4,norm_inf"));
    let mut rows = 0;
    for line in lines {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 501);
}

#[test]
fn simulate_nonlinear_example_decays() {
    let o = delaystab(&["simulate", &spec("state_modulated.json")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.contains("decayed = true")).count() == 2, "{out}");
}

#[test]
fn simulate_without_block_is_invalid() {
    assert_eq!(delaystab(&["simulate", &spec("uncertifiable.json")]).status.code(), Some(2));
}

#[test]
fn run_records_are_reproducible() {
    let (a, b) = (tmp("a.json"), tmp("b.json"));
    let first = delaystab(&["certify", &spec("modulated.json"), "--out", a.to_str().unwrap()]);
    let second = delaystab(&["certify", &spec("modulated.json"), "--record", b.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ra, rb);
    let v: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(v["command"], "certify");
    assert_eq!(v["result"]["verdict"], "Certified");
    assert!(v["tolerances"]["blowup_norm"].is_number());
}

#[test]
fn every_bundled_spec_honours_the_exit_contract() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = delaystab(&["certify", path.to_str().unwrap()]);
        let code = o.status.code().unwrap();
        assert!((0..=2).contains(&code), "{}: {code}", path.display());
        let negative = path.file_name().unwrap().to_str().unwrap();
        if negative.starts_with("malformed") || negative.starts_with("unknown") {
            assert_eq!(code, 2, "{negative}");
        }
    }
}
