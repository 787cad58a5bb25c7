use std::path::PathBuf;
use std::process::{Command, Output};

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distinguish")).args(args).output().expect("binary runs")
}

fn model(name: &str) -> String {
    models().join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("distinguish-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn decide_exit_codes() {
    let yes = run(&["decide", "dist", &model("disjoint_supports.pt"), "S"]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(stdout(&yes).trim(), "YES");
    let no = run(&["decide", "dist", &model("coin_pair.pt"), "S"]);
    assert_eq!(no.status.code(), Some(1));
    assert!(stdout(&no).starts_with("NO"));
    let q = run(&["decide", "clone", &model("b92.pt"), "S"]);
    assert_eq!(q.status.code(), Some(1));
}

#[test]
fn input_errors_exit_2() {
    let missing = run(&["decide", "dist", &model("coin_pair.pt"), "Nope"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = scratch("bad.pt");
    std::fs::write(&bad, "backend finstoch\nsystem A dim 2\nstate p : A = [1, 0\n").unwrap();
    let o = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":4:") || err.contains(":3:"), "{err}");
    assert!(err.contains("syntax"), "{err}");
}

#[test]
fn synthesized_certificates_verify() {
    let file = model("programmer.pt");
    let cert = scratch("prog.pt");
    let o = run(&["synth", "programmer", &file, "S", "G", "-o", cert.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = run(&["verify", "cert", &file, cert.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!(stdout(&v).starts_with("PASS programmer"));

    let file = model("qutrit_mixed.pt");
    let cert = scratch("side.pt");
    assert_eq!(run(&["decide", "sideinfo", &file, "S", "-o", cert.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["verify", "cert", &file, cert.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn certificate_for_another_family_fails() {
    let cert = scratch("flag.pt");
    let o = run(&["decide", "dist", &model("disjoint_supports.pt"), "S", "-o", cert.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = run(&["verify", "cert", &model("three_components.pt"), cert.to_str().unwrap()]);
    assert_ne!(v.status.code(), Some(0));
}

#[test]
fn eval_prints_declaration() {
    let o = run(&["eval", &model("cnot.pt"), "flip_then_copy"]);
    assert_eq!(stdout(&o).trim(), "state flip_then_copy : A*A = [0, 0, 0, 1]");
}

#[test]
fn graph_and_iid_outputs() {
    let g = stdout(&run(&["graph", "confusability", &model("three_components.pt"), "S"]));
    assert!(g.starts_with("graph confusability {"));
    assert!(g.contains("\"r0\" -- \"r1\";"));
    assert!(!g.contains("\"r2\" --"));
    let csv = stdout(&run(&["iid", &model("iid_coins.pt"), "S", "--n-max", "3"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,eps,bound");
    assert!(lines[1].starts_with("1,1/4,"));
    assert!(lines[3].starts_with("3,5/32,"));
}

#[test]
fn measure_and_resend_report() {
    let o = run(&["verify", "noinfo", &model("b92.pt"), "mr", "zero", "plus"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("disturbance plus 0.500000000000"));
    assert!(out.contains("information 0.500000000000"));
}

#[test]
fn check_reports_every_file() {
    for entry in std::fs::read_dir(models()).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&["check", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", path.display());
    }
}

#[test]
fn suite_agrees() {
    let o = run(&["suite", "--count", "30", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("copiable agrees 30/30"));
}
