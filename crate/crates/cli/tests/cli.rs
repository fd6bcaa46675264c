use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn cloak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloak")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn listing() -> String {
    repo("corpus/listing1.cloak").display().to_string()
}

fn bad_source(dir: &Path) -> String {
    let path = dir.join("bad.cloak");
    fs::write(&path, "contract C {\n    uint @all x;\n    function f(uint @me v) public {\n        x = v;\n    }\n}\n").unwrap();
    path.display().to_string()
}

#[test]
fn compile_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = cloak(&["-i", &listing(), "-o", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    let mut names: Vec<String> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["policy.json", "service.sol", "summary.json", "verifier.sol"]);
    assert!(text(&out.stdout).contains("function biddingProcure: kind=mpt"));

    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    let keys: Vec<&str> = summary.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["contract", "functions", "hashes"]);
    let f = summary["functions"][0].as_object().unwrap();
    let fkeys: Vec<&str> = f.keys().map(String::as_str).collect();
    assert_eq!(fkeys, ["check_time_us", "codegen_time_us", "kind", "name"]);
    let hkeys: Vec<&str> = summary["hashes"].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(hkeys, ["policy", "runtime", "service", "verifier"]);
}

#[test]
fn recompiling_is_byte_identical_and_leaves_no_temporaries() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let read_all = || ["policy.json", "service.sol", "verifier.sol"].map(|f| fs::read(tmp.path().join(f)).unwrap());
    assert_eq!(code(&cloak(&["-i", &listing(), "-o", dir])), 0);
    let first = read_all();
    assert_eq!(code(&cloak(&["-i", &listing(), "-o", dir])), 0);
    assert_eq!(first, read_all());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 4);
}

#[test]
fn check_only_prints_policy_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cloak(&["-t", "-i", &listing()]);
    assert_eq!(code(&out), 0);
    let policy: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(policy["contract"], "SupplyChain");
    assert_eq!(policy["functions"][0]["kind"], "mpt");
    // -o is accepted but unused
    let out = cloak(&["-t", "-i", &listing(), "-o", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn debug_shows_timing_and_hashes() {
    let out = cloak(&["-t", "--debug", "-i", &listing()]);
    assert_eq!(code(&out), 0);
    let err = text(&out.stderr);
    let line = err.lines().find(|l| l.starts_with("function biddingProcure:")).unwrap();
    assert!(line.contains("kind=mpt owners={") && line.contains("class:p") && line.contains(" time="), "{line}");
    for h in ["verifier", "service", "policy", "runtime"] {
        assert!(err.lines().any(|l| l.starts_with(&format!("hash {h}=")) && l.len() == 6 + h.len() + 64), "{h}");
    }
}

#[test]
fn diagnostics_exit_one_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = bad_source(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = cloak(&["-i", &bad, "-o", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = text(&out.stderr);
    assert!(err.starts_with(&format!("{bad}:4:13: error[ImplicitFlow]:")), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn solc_mode_ignores_annotations() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = bad_source(tmp.path());
    // the leak is an annotation error, so the plain check passes
    let out = cloak(&["-s", "-i", &bad]);
    assert_eq!(code(&out), 0, "{}", text(&out.stderr));
    assert!(!text(&out.stdout).contains('@'));
    let out = cloak(&["--solc", "-i", &listing(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let plain = fs::read_to_string(tmp.path().join("listing1.sol")).unwrap();
    assert!(plain.contains("function biddingProcure") && !plain.contains("!p"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&cloak(&["-s", "-t", "-i", &listing()])), 2);
    assert_eq!(code(&cloak(&["-o", "/tmp/unused"])), 2);
    assert_eq!(code(&cloak(&["-i", &listing()])), 2);
    assert_eq!(code(&cloak(&["-i", "/no/such/file.cloak", "-t"])), 2);
    assert_eq!(code(&cloak(&["--bogus"])), 2);
    assert_eq!(code(&cloak(&["demo"])), 2);
}

#[test]
fn demo_runs_bundled_scenarios() {
    let out = cloak(&["demo", repo("scenarios/bidding.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", text(&out.stdout));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("winner=B"));
    assert!(stdout.lines().last().unwrap().starts_with("final root "));
    let out = cloak(&["demo", repo("scenarios/tampered.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("BadSignature"));
}

#[test]
fn demo_mismatch_and_missing_file() {
    assert_eq!(code(&cloak(&["demo", "/no/such/scenario.json"])), 2);
    let tmp = tempfile::tempdir().unwrap();
    let original = fs::read_to_string(repo("scenarios/bidding.json")).unwrap();
    let wrong = original.replacen("\"winner\": \"B\"", "\"winner\": \"C\"", 1);
    assert_ne!(wrong, original);
    let path = tmp.path().join("wrong.json");
    fs::write(&path, wrong.replace("../corpus/", &format!("{}/", repo("corpus").display()))).unwrap();
    let out = cloak(&["demo", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("FAIL"));
}
