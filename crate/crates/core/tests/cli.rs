use std::path::PathBuf;
use std::process::{Command, Output};

fn deck(name: &str) -> String {
    format!("{}/decks/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn approxlie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_approxlie")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn default_deck_verifies_every_generator() {
    let o = approxlie(&["verify-symmetries", "--deck", &deck("default")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("12/12 PASS"));
}

#[test]
fn corrupted_generator_fails_with_its_residual() {
    let o = approxlie(&["verify-symmetries", "--deck", &deck("corrupted_xi8")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("eps^1 [continuity] 1: y"), "{}", stdout(&o));
}

#[test]
fn configuration_errors_exit_two() {
    for (cmd, name) in [
        ("verify-symmetries", "unknown_generator"),
        ("sweep", "empty_eps"),
        ("sweep", "bad_region"),
    ] {
        let o = approxlie(&[cmd, "--deck", &deck(name)]);
        assert_eq!(o.status.code(), Some(2), "{cmd} {name}");
        assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));
    }
    assert_eq!(approxlie(&["determining", "--generator", "xi10"]).status.code(), Some(2));
    assert_eq!(approxlie(&["sweep", "--precision", "quad"]).status.code(), Some(2));
}

#[test]
fn determining_output() {
    let o = approxlie(&["determining", "--generator", "xi6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["xi6"].is_object());
    let o = approxlie(&["determining", "--deck", &deck("literal"), "--format", "json"]);
    assert_eq!(stdout(&o), golden("literal_determining.json"));
}

#[test]
fn subalgebra_generators_pass() {
    let o = approxlie(&["verify-symmetries", "--deck", &deck("symmetry_subalgebras")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("8/8 PASS"));
}

#[test]
fn golden_reports() {
    let o = approxlie(&["verify-symmetries", "--format", "csv"]);
    assert_eq!(stdout(&o), golden("default_symmetries.csv"));
    let o = approxlie(&["sweep", "--deck", &deck("control"), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("control_sweep.csv"));
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_approxlie"))
            .args(["sweep", "--deck", &deck("numeric_families"), "--format", "json"])
            .env("APPROXLIE_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, run("4").stdout);
    assert!(serde_json::from_slice::<serde_json::Value>(&one.stdout).is_ok());
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn sweep_reports_the_out_of_band_family() {
    let o = approxlie(&["sweep"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL BVP_MUD")), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    let o = approxlie(&["sweep", "--strict-band", "1.9,2.3"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn out_flag_writes_the_report() {
    let path: PathBuf = std::env::temp_dir().join(format!("approxlie-cli-{}.json", std::process::id()));
    let o = approxlie(&["verify-solutions", "--deck", &deck("numeric_families"), "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(!v.to_string().is_empty());
}
