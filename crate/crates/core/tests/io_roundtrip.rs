use std::path::Path;
use std::process::Command;

use njsm::cli_io::{
    encode_binary, ensemble, read_ndjson, read_trajectory_binary, run, write_trajectory, Format, RunManifest,
};
use njsm::integrator::{simulate, Integrator, SampleKind, SimConfig};
use njsm::jump_noise::NoiseSpec;
use sha2::{Digest, Sha256};

fn noisy() -> SimConfig {
    SimConfig {
        cutoff: 4,
        horizon: 0.05,
        noise: NoiseSpec {
            rate: 200.0,
            ..NoiseSpec::default()
        },
        ..SimConfig::default()
    }
}

#[test]
fn ndjson_energy_matches_recomputation_from_binary_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = noisy();
    let traj = simulate(&cfg).unwrap();
    assert!(!traj.jumps.is_empty());
    let bin = dir.path().join("t.bin");
    let nd = dir.path().join("t.ndjson");
    write_trajectory(&traj, &bin, Format::Binary).unwrap();
    write_trajectory(&traj, &nd, Format::Ndjson).unwrap();

    let stored = read_trajectory_binary(&std::fs::read(&bin).unwrap()).unwrap();
    let records = read_ndjson(&std::fs::read_to_string(&nd).unwrap()).unwrap();
    assert_eq!(stored.samples.len(), records.len());
    let mut integ = Integrator::new(&cfg).unwrap();
    for (s, r) in stored.samples.iter().zip(&records) {
        assert_eq!(s.time, r.t);
        assert_eq!(s.kind, r.kind);
        assert_eq!(r.is_jump, s.kind == SampleKind::PostJump);
        let state = stored.state(s).unwrap();
        let e = integ.evaluate(&state, s.time).unwrap().ledger.energy();
        let want = r.ledger.energy();
        assert!((e - want).abs() <= 1e-12 * want.abs().max(1.0), "t = {}: {e} vs {want}", s.time);
        // NDJSON coefficients are the same bits as the binary ones
        let v: Vec<[f64; 2]> = s.velocity.iter().map(|c| [c.re, c.im]).collect();
        assert_eq!(r.velocity.as_ref().unwrap(), &v);
    }
}

#[test]
fn binary_reencodes_identically() {
    let traj = simulate(&noisy()).unwrap();
    let bytes = encode_binary(&traj).unwrap();
    let stored = read_trajectory_binary(&bytes).unwrap();
    for (a, b) in traj.samples.iter().zip(&stored.samples) {
        let st = a.state.as_ref().unwrap();
        assert_eq!(&stored.state(b).unwrap().velocity, &st.velocity);
        assert_eq!(&stored.state(b).unwrap().director, &st.director);
    }
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "cutoff = 3\nhorizon = 0.02\n[noise]\nrate = 100.0\n";

fn check_manifest(out: &Path, command: &str) -> RunManifest {
    let m = RunManifest::read(out.join("manifest.json")).unwrap();
    assert_eq!(m.command, command);
    assert!(m.finished >= m.started);
    assert!(!m.outputs.is_empty());
    for o in &m.outputs {
        let data = std::fs::read(&o.path).unwrap();
        assert_eq!(data.len() as u64, o.bytes);
        assert_eq!(hex::encode(Sha256::digest(&data)), o.sha256, "{}", o.path);
    }
    m
}

#[test]
fn cli_commands_write_checksummed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("sim");
    let code = run(["njsm", "--config", &cfg, "--out", out.to_str().unwrap(), "--format", "binary", "simulate"]);
    assert_eq!(code, 0);
    let m = check_manifest(&out, "simulate");
    assert_eq!(m.config.cutoff, 3);
    let stored = read_trajectory_binary(&std::fs::read(out.join("trajectory.bin")).unwrap()).unwrap();
    assert_eq!(stored.basis.cutoff(), 3);

    let out = dir.path().join("ops");
    let code = run(["njsm", "--config", &cfg, "--out", out.to_str().unwrap(), "verify-operators", "--samples", "8"]);
    assert_eq!(code, 0);
    check_manifest(&out, "verify-operators");
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_njsm");
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(exe).args(["simulate", "--no-such-flag"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let bad = write_config(dir.path(), "dt = -1.0\n");
    let status = Command::new(exe)
        .args(["--config", &bad, "--out"])
        .arg(dir.path().join("x"))
        .arg("simulate")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let good = write_config(dir.path(), SMALL);
    let status = Command::new(exe)
        .args(["--config", &good, "--out"])
        .arg(dir.path().join("y"))
        .arg("simulate")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn ensemble_stats_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut files = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let code = run([
            "njsm", "--config", &cfg, "--out", out.to_str().unwrap(), "--paths", "40", "--workers", workers, "ensemble",
        ]);
        assert_eq!(code, 0);
        check_manifest(&out, "ensemble");
        files.push((std::fs::read(out.join("stats.json")).unwrap(), std::fs::read(out.join("paths.ndjson")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn mean_jump_count_is_poisson() {
    let cfg = SimConfig {
        cutoff: 2,
        horizon: 0.1,
        noise: NoiseSpec {
            rate: 30.0,
            ..NoiseSpec::default()
        },
        ..SimConfig::default()
    };
    let n = 400;
    let r = ensemble(&cfg, n, 4).unwrap();
    let lt = cfg.noise.rate * cfg.horizon;
    let sigma = (lt / n as f64).sqrt();
    assert!((r.stats.mean_jumps - lt).abs() <= 4.0 * sigma, "{} vs {lt}", r.stats.mean_jumps);
    assert!(r.stats.moments.is_some());
}
