use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rp")).args(args).output().expect("rp runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write(dir: &TempDir, name: &str, data: &[u8]) -> String {
    let p = path(dir, name);
    std::fs::write(&p, data).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn compress_then_decompress() {
    let dir = TempDir::new().unwrap();
    let data = b"how much wood would a woodchuck chuck if a woodchuck could chuck wood".repeat(20);
    let input = write(&dir, "in.txt", &data);
    let archive = path(&dir, "in.rp");
    let back = path(&dir, "back.txt");

    let o = rp(&["c", &input, &archive]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.starts_with(&format!("n={} ", data.len())), "{line}");
    assert!(line.contains(" rate=") && line.contains(" peak_bytes="));
    assert!(std::fs::metadata(&archive).unwrap().len() < data.len() as u64);

    let o = rp(&["d", &archive, &back]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&back).unwrap(), data);
}

#[test]
fn oracle_writes_the_same_archive() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", b"abracadabra abracadabra cadabra");
    let (a, b) = (path(&dir, "a.rp"), path(&dir, "b.rp"));
    assert!(rp(&["c", &input, &a]).status.success());
    assert!(rp(&["c", "--oracle", &input, &b]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn trace_lists_every_rule() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", b"abracadabra");
    let out = path(&dir, "out.rp");
    let o = rp(&["c", "--trace", &input, &out]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines, ["2\t97\t98\t256", "2\t114\t97\t257", "2\t256\t257\t258"]);
}

#[test]
fn stats_table_and_json() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", &b"to be or not to be, ".repeat(50));
    let archive = path(&dir, "in.rp");
    assert!(rp(&["c", &input, &archive]).status.success());

    let o = rp(&["stats", &archive]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d\tM\tplain\tlower bound\trp\trate (%)"));
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(row.len(), 6);
    assert!(row[5].parse::<f64>().unwrap() > 0.0);

    let o = rp(&["stats", "--json", &archive]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 1000);
    assert_eq!(v["d"].as_u64().unwrap().to_string(), row[0]);
    assert!(v["M"].as_u64().unwrap() >= 1);
    assert!(v["lower_bound_bits"].as_f64().unwrap() > 0.0);

    let o = rp(&["c", "--json", &input, &archive]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["seconds"].as_f64().is_some() && v["peak_bytes"].as_u64().unwrap() > 0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", b"abcabc");
    let out = path(&dir, "out.rp");

    // usage errors
    assert_eq!(rp(&[]).status.code(), Some(1));
    assert_eq!(rp(&["x"]).status.code(), Some(1));
    assert_eq!(rp(&["c", "--epsilon", "0", &input, &out]).status.code(), Some(1));
    assert_eq!(rp(&["c", "--epsilon", "1.5", &input, &out]).status.code(), Some(1));
    assert_eq!(rp(&["--help"]).status.code(), Some(0));

    // data errors
    let missing = path(&dir, "missing");
    assert_eq!(rp(&["c", &missing, &out]).status.code(), Some(2));
    let empty = write(&dir, "empty", b"");
    assert_eq!(rp(&["c", &empty, &out]).status.code(), Some(2));
    let junk = write(&dir, "junk.rp", b"not an archive");
    let o = rp(&["d", &junk, &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("rp: "));

    assert!(rp(&["c", &input, &out]).status.success());
    let mut bytes = std::fs::read(&out).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    let bad = write(&dir, "bad.rp", &bytes);
    assert_eq!(rp(&["d", &bad, &path(&dir, "x")]).status.code(), Some(2));
    assert_eq!(rp(&["stats", &bad]).status.code(), Some(2));
    assert!(!Path::new(&path(&dir, "x")).exists());
}

#[test]
fn epsilon_does_not_change_small_outputs() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", &b"mississippi river ".repeat(30));
    let (a, b) = (path(&dir, "a.rp"), path(&dir, "b.rp"));
    assert!(rp(&["c", "--epsilon", "0.05", &input, &a]).status.success());
    assert!(rp(&["c", "--epsilon", "1", &input, &b]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
