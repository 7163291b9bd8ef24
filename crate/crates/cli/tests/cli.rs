use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mdclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn seal(dir: &TempDir, mode: &str, message: &[u8], sequence: &str, name: &str) -> PathBuf {
    let msg = path(dir, &format!("{name}.bin"));
    std::fs::write(&msg, message).unwrap();
    let out = path(dir, name);
    let r = mdclab(&[
        "seal", "--mode", mode, "--width", "16", "--key-hex", "0badc0de", "--aux-key-hex", "77",
        "--sequence", sequence, "--in", s(&msg), "--out", s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    out
}

fn open(container: &Path, out: Option<&Path>) -> Output {
    let mut args = vec!["open", "--key-hex", "0badc0de", "--aux-key-hex", "77", "--in", s(container)];
    if let Some(out) = out {
        args.extend(["--out", s(out)]);
    }
    mdclab(&args)
}

const MESSAGE: [u8; 10] = [0x12, 0x34, 0x56, 0x78, 0x9a, 0xbc, 0xde, 0xf0, 0x0f, 0xf0];

#[test]
fn seal_then_open_round_trips() {
    let dir = TempDir::new().unwrap();
    for mode in ["pes-pcbc", "iobc", "epbc"] {
        let c = seal(&dir, mode, &MESSAGE, "3", "c.mdc");
        let back = path(&dir, "back.bin");
        let r = open(&c, Some(&back));
        assert_eq!(code(&r), 0);
        assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), "accept");
        assert_eq!(std::fs::read(&back).unwrap(), MESSAGE);
    }
}

#[test]
fn tampered_final_block_is_rejected() {
    let dir = TempDir::new().unwrap();
    let c = seal(&dir, "iobc", &MESSAGE, "0", "c.mdc");
    let mut bytes = std::fs::read(&c).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&c, bytes).unwrap();
    let r = open(&c, None);
    assert_eq!(code(&r), 2);
    assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), "reject");
}

#[test]
fn malformed_inputs_are_format_errors() {
    let dir = TempDir::new().unwrap();
    let c = seal(&dir, "epbc", &MESSAGE, "0", "c.mdc");
    let bytes = std::fs::read(&c).unwrap();
    std::fs::write(&c, &bytes[..bytes.len() - 1]).unwrap();
    assert_eq!(code(&open(&c, None)), 4);
    std::fs::write(&c, &bytes[..8]).unwrap();
    assert_eq!(code(&open(&c, None)), 4);

    let odd = path(&dir, "odd.bin");
    std::fs::write(&odd, [1, 2, 3]).unwrap();
    let r = mdclab(&[
        "seal", "--mode", "iobc", "--width", "16", "--key-hex", "01", "--in", s(&odd), "--out",
        s(&path(&dir, "x.mdc")),
    ]);
    assert_eq!(code(&r), 4);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&mdclab(&["bogus"])), 3);
    assert_eq!(code(&mdclab(&["attack", "--mode", "epbc", "--attack", "iv-reuse"])), 3);
    assert_eq!(code(&mdclab(&["attack", "--mode", "iobc", "--attack", "splice", "--trials", "0"])), 3);
    assert_eq!(code(&mdclab(&["attack", "--mode", "iobc", "--attack", "splice", "--j", "2"])), 3);
    assert_eq!(code(&mdclab(&["--help"])), 0);
}

#[test]
fn forged_pes_insert_opens() {
    let dir = TempDir::new().unwrap();
    let c = seal(&dir, "pes-pcbc", &MESSAGE, "9", "c.mdc");
    let forged = path(&dir, "forged.mdc");
    // P_3 is the third 2-byte block of the message.
    let r = mdclab(&[
        "forge", "--attack", "pes-insert", "--in", s(&c), "--j", "3", "--known-hex", "9abc",
        "--out", s(&forged),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(code(&open(&forged, None)), 0);

    let sidecar: Value =
        serde_json::from_slice(&std::fs::read(path(&dir, "forged.mdc.json")).unwrap()).unwrap();
    assert_eq!(sidecar["schema"], 1);
    assert_eq!(sidecar["attack"], "pes-insert");
    assert_eq!(sidecar["blocks"], 8);
    assert_eq!(sidecar["predicted_success"]["exact"], "1");
}

#[test]
fn forged_iv_reuse_opens() {
    let dir = TempDir::new().unwrap();
    let other = [0xaa, 0xbb, 0x01, 0x02, 0x03, 0x04];
    let c = seal(&dir, "iobc", &MESSAGE, "4", "c.mdc");
    let c2 = seal(&dir, "iobc", &other, "4", "c2.mdc");
    let forged = path(&dir, "forged.mdc");
    let r = mdclab(&[
        "forge", "--attack", "iv-reuse", "--in", s(&c), "--in2", s(&c2), "--known-hex", "5678",
        "0102", "--out", s(&forged),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(code(&open(&forged, None)), 0);
}

fn attack_json(extra: &[&str]) -> String {
    let mut args = vec!["attack", "--format", "json"];
    args.extend(extra);
    let r = mdclab(&args);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    String::from_utf8(r.stdout).unwrap()
}

#[test]
fn seeded_experiments_are_byte_identical() {
    let args = ["--mode", "epbc", "--attack", "epbc-guess", "--width", "16", "--trials", "300", "--seed", "0x2a"];
    let a = attack_json(&args);
    let b = attack_json(&args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let c = attack_json(&seq);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["config"]["seed"], 42);
    assert!(v["queries"]["max"].as_u64().unwrap() <= 37);
}

#[test]
fn shortening_experiment_within_band() {
    let out = attack_json(&["--mode", "iobc", "--attack", "iobc-shorten", "--k", "5", "--trials", "10000"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["params"]["blocks"], 13);
    assert_eq!(v["within_band"], true);
}

fn analyze(args: &[&str]) -> Value {
    let mut all = vec!["analyze"];
    all.extend(args);
    all.extend(["--format", "json"]);
    let r = mdclab(&all);
    assert_eq!(code(&r), 0);
    serde_json::from_slice(&r.stdout).unwrap()
}

#[test]
fn analysis_reports() {
    let order = analyze(&["order", "--widths", "64"]);
    assert_eq!(order["rows"][0]["order"], 1023);
    let fixed = analyze(&["fixed-point", "--widths", "64", "--k", "341"]);
    assert_eq!(fixed["rows"][0]["log2_fraction"], -22);
    let guess = analyze(&["guess-space", "--widths", "64"]);
    assert_eq!(guess["rows"][0]["candidates"], "15033173");
    let table = analyze(&["pair-table"]);
    assert_eq!(table["all_match"], true);
    assert_eq!(table["rows"].as_array().unwrap().len(), 15);
    assert_eq!(analyze(&["binomial-bound"])["all_strict"], true);
    let flaw = analyze(&["di-flaw"]);
    assert_eq!(flaw["rows"][0]["difference"], "01");
    assert_eq!(flaw["rows"][0]["min_size"], 2);
}
