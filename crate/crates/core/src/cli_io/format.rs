//! Trajectory files.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic      4 bytes  "NJSM"
//! version    u32      1
//! dim        u32
//! cutoff     u32
//! n_samples  u64
//! per sample:
//!   time     f64
//!   kind     u32      0 grid, 1 pre-jump, 2 post-jump
//!   velocity (n-1)((2K+1)^n - 1) x (re f64, im f64), basis order
//!   director n (2K+1)^n x (re f64, im f64), basis order
//! ```
//!
//! NDJSON holds one object per sample with the energy ledger and, on request,
//! the coefficients as `[re, im]` pairs. The jump log is NDJSON of jump records.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::{EnergyLedger, JumpRecord, SampleKind, State, Trajectory};
use crate::spectral_basis::{build_basis, Basis, DirectorState, SpectralVelocity};

pub const MAGIC: &[u8; 4] = b"NJSM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Ndjson,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Ndjson => "ndjson",
            Format::Binary => "bin",
        }
    }
}

/// One written file as listed in the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub format: String,
    pub bytes: u64,
    pub sha256: String,
}

impl ManifestEntry {
    pub fn for_bytes(path: &Path, format: &str, data: &[u8]) -> Self {
        ManifestEntry {
            path: path.display().to_string(),
            format: format.to_string(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        }
    }
}

pub(crate) fn write_file(path: &Path, format: &str, data: &[u8]) -> Result<ManifestEntry> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(data).map_err(|e| Error::io(path, e))?;
    Ok(ManifestEntry::for_bytes(path, format, data))
}

fn kind_code(kind: SampleKind) -> u32 {
    match kind {
        SampleKind::Grid => 0,
        SampleKind::PreJump => 1,
        SampleKind::PostJump => 2,
    }
}

/// Binary encoding of a trajectory with stored states.
pub fn encode_binary(traj: &Trajectory) -> Result<Vec<u8>> {
    let b = &traj.basis;
    let per_sample = 12 + 16 * (b.velocity_len() + b.director_len());
    let mut out = Vec::with_capacity(24 + per_sample * traj.samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(b.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(b.cutoff() as u32).to_le_bytes());
    out.extend_from_slice(&(traj.samples.len() as u64).to_le_bytes());
    for s in &traj.samples {
        let state = s.state.as_ref().ok_or(Error::MissingStates)?;
        out.extend_from_slice(&s.time.to_le_bytes());
        out.extend_from_slice(&kind_code(s.kind).to_le_bytes());
        for c in state.velocity.coeffs().iter().chain(state.director.coeffs()) {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    Ok(out)
}

/// A decoded binary trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTrajectory {
    pub basis: Arc<Basis>,
    pub samples: Vec<StoredSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredSample {
    pub time: f64,
    pub kind: SampleKind,
    pub velocity: Vec<Complex64>,
    pub director: Vec<Complex64>,
}

impl StoredTrajectory {
    pub fn state(&self, s: &StoredSample) -> Result<State> {
        Ok(State {
            velocity: SpectralVelocity::from_coeffs(&self.basis, s.velocity.clone())?,
            director: DirectorState::from_coeffs(&self.basis, s.director.clone())?,
        })
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }
}

pub fn read_trajectory_binary(data: &[u8]) -> Result<StoredTrajectory> {
    let mut r = Reader { data, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = r.u32()? as usize;
    let cutoff = r.u32()? as usize;
    let n = r.u64()?;
    let basis = build_basis(dim, cutoff)?;
    let per_sample = 12 + 16 * (basis.velocity_len() + basis.director_len());
    let rest = (data.len() - r.pos) as u64;
    if rest != n.saturating_mul(per_sample as u64) {
        return Err(Error::Format(format!(
            "{n} samples of {per_sample} bytes do not match the {rest} bytes present"
        )));
    }
    let mut samples = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let time = r.f64()?;
        let kind = match r.u32()? {
            0 => SampleKind::Grid,
            1 => SampleKind::PreJump,
            2 => SampleKind::PostJump,
            k => return Err(Error::Format(format!("unknown sample kind {k}"))),
        };
        samples.push(StoredSample {
            time,
            kind,
            velocity: r.complex(basis.velocity_len())?,
            director: r.complex(basis.director_len())?,
        });
    }
    Ok(StoredTrajectory { basis, samples })
}

/// One NDJSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdjsonRecord {
    pub t: f64,
    pub kind: SampleKind,
    /// Value right after a jump.
    pub is_jump: bool,
    #[serde(flatten)]
    pub ledger: EnergyLedger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub director: Option<Vec<[f64; 2]>>,
}

fn pairs(c: &[Complex64]) -> Vec<[f64; 2]> {
    c.iter().map(|z| [z.re, z.im]).collect()
}

pub fn encode_ndjson(traj: &Trajectory, include_coeffs: bool) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for s in &traj.samples {
        let (velocity, director) = match (&s.state, include_coeffs) {
            (Some(st), true) => (Some(pairs(st.velocity.coeffs())), Some(pairs(st.director.coeffs()))),
            _ => (None, None),
        };
        let rec = NdjsonRecord {
            t: s.time,
            kind: s.kind,
            is_jump: s.kind == SampleKind::PostJump,
            ledger: s.ledger,
            velocity,
            director,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn parse_lines<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Format(format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn read_ndjson(text: &str) -> Result<Vec<NdjsonRecord>> {
    parse_lines(text)
}

pub fn encode_jump_log(jumps: &[JumpRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for j in jumps {
        serde_json::to_writer(&mut out, j)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_jump_log(text: &str) -> Result<Vec<JumpRecord>> {
    parse_lines(text)
}

/// Write `traj` to `path`; NDJSON includes coefficients when states are stored.
pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>, format: Format) -> Result<ManifestEntry> {
    let path = path.as_ref();
    let data = match format {
        Format::Ndjson => encode_ndjson(traj, traj.config.store_states)?,
        Format::Binary => encode_binary(traj)?,
    };
    write_file(path, format.extension(), &data)
}

pub fn write_jump_log(jumps: &[JumpRecord], path: impl AsRef<Path>) -> Result<ManifestEntry> {
    write_file(path.as_ref(), "jumps.ndjson", &encode_jump_log(jumps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{simulate, SimConfig};
    use crate::jump_noise::NoiseSpec;

    fn traj() -> Trajectory {
        simulate(&SimConfig {
            cutoff: 3,
            horizon: 0.02,
            noise: NoiseSpec {
                rate: 200.0,
                ..NoiseSpec::default()
            },
            ..SimConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let t = traj();
        let bytes = encode_binary(&t).unwrap();
        let back = read_trajectory_binary(&bytes).unwrap();
        assert_eq!(back.samples.len(), t.samples.len());
        for (a, b) in back.samples.iter().zip(&t.samples) {
            let st = back.state(a).unwrap();
            assert_eq!(a.time.to_bits(), b.time.to_bits());
            assert_eq!(a.kind, b.kind);
            assert_eq!(&st, b.state.as_ref().unwrap());
        }
    }

    #[test]
    fn empty_trajectory_is_header_only() {
        let mut t = traj();
        t.samples.clear();
        let bytes = encode_binary(&t).unwrap();
        assert_eq!(bytes.len(), 24);
        assert!(read_trajectory_binary(&bytes).unwrap().samples.is_empty());
    }

    #[test]
    fn corrupt_binary_rejected() {
        let bytes = encode_binary(&traj()).unwrap();
        assert!(read_trajectory_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_trajectory_binary(&bad).is_err());
        let mut huge = bytes[..24].to_vec();
        huge[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(read_trajectory_binary(&huge).is_err());
    }

    #[test]
    fn ndjson_round_trip_is_bitwise() {
        let t = traj();
        let text = String::from_utf8(encode_ndjson(&t, true).unwrap()).unwrap();
        let recs = read_ndjson(&text).unwrap();
        assert_eq!(recs.len(), t.samples.len());
        for (r, s) in recs.iter().zip(&t.samples) {
            assert_eq!(r.ledger, s.ledger);
            let v = r.velocity.as_ref().unwrap();
            let st = s.state.as_ref().unwrap();
            assert!(v.iter().zip(st.velocity.coeffs()).all(|(p, c)| p[0] == c.re && p[1] == c.im));
        }
        let log = String::from_utf8(encode_jump_log(&t.jumps).unwrap()).unwrap();
        assert_eq!(read_jump_log(&log).unwrap(), t.jumps);
    }
}
