//! Replays the checked-in fuzz seeds. Seeds named `invalid_*` must be
//! rejected, every other seed must parse.

use std::path::PathBuf;

use njsm::cli_io::{parse_config_str, read_jump_log, read_ndjson, read_trajectory_binary};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn check(target: &str, parse: impl Fn(&[u8]) -> bool) {
    for (name, data) in seeds(target) {
        let ok = parse(&data);
        assert_eq!(ok, !name.starts_with("invalid_"), "{target}/{name}");
    }
}

fn text(data: &[u8]) -> &str {
    std::str::from_utf8(data).unwrap()
}

#[test]
fn config_seeds() {
    check("parse_config", |d| parse_config_str(text(d)).is_ok());
}

#[test]
fn binary_trajectory_seeds() {
    check("read_trajectory_binary", |d| match read_trajectory_binary(d) {
        Ok(t) => t.samples.iter().all(|s| t.state(s).is_ok()),
        Err(_) => false,
    });
}

#[test]
fn ndjson_seeds() {
    check("read_ndjson", |d| read_ndjson(text(d)).is_ok());
}

#[test]
fn jump_log_seeds() {
    check("read_jump_log", |d| read_jump_log(text(d)).is_ok());
}
