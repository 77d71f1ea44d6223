//! Bit-stable artifacts: comma-separated diagnostic series (text) and
//! self-describing "FHKS" snapshots (binary, little-endian).

use crate::domain::{DomainSpec, GridField, SymbolMode};
use crate::error::{FhksError, Result};
use crate::evolution::{SimState, Trajectory};
use std::fmt::Write as _;
use std::io::{Read as _, Write as _};
use std::path::Path;

/// Formats a real with 17 significant digits so read-back is exact.
fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders the per-step diagnostics as CSV text; `levels` names the entropy
/// residual columns. Lines end with a single newline.
pub fn render_series(traj: &Trajectory, levels: &[f64]) -> String {
    let mut out = String::new();
    out.push_str("t,mass,u_min,u_max,c_min,c_max,viscous_energy_cum");
    for (i, _) in levels.iter().enumerate() {
        let _ = write!(out, ",entropy_residual_{i}");
    }
    out.push('\n');
    for rec in &traj.diagnostics {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_real(rec.t),
            fmt_real(rec.mass),
            fmt_real(rec.u_min),
            fmt_real(rec.u_max),
            fmt_real(rec.c_min),
            fmt_real(rec.c_max),
            fmt_real(rec.viscous_cum),
        );
        for r in &rec.entropy_residuals {
            let _ = write!(out, ",{}", fmt_real(*r));
        }
        out.push('\n');
    }
    out
}

pub fn write_series(traj: &Trajectory, levels: &[f64], path: &Path) -> Result<()> {
    std::fs::write(path, render_series(traj, levels)).map_err(|e| FhksError::io(path, e))
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"FHKS";
pub const SNAPSHOT_VERSION: u16 = 1;

/// Serializes one state: magic, version, symbol mode, dimension, per-axis
/// (length, cells), t, then u and c cell values as little-endian f64.
pub fn encode_snapshot(state: &SimState) -> Vec<u8> {
    let dom = state.u.domain();
    let mut buf = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.push(match dom.symbol_mode() {
        SymbolMode::Discrete => 0,
        SymbolMode::Continuum => 1,
    });
    buf.push(dom.dimension() as u8);
    for axis in 0..dom.dimension() {
        buf.extend_from_slice(&dom.lengths()[axis].to_le_bytes());
        buf.extend_from_slice(&(dom.cells()[axis] as u64).to_le_bytes());
    }
    buf.extend_from_slice(&state.t.to_le_bytes());
    for &v in state.u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &v in state.chemo.c.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn write_snapshot(state: &SimState, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| FhksError::io(path, e))?;
    file.write_all(&encode_snapshot(state))
        .map_err(|e| FhksError::io(path, e))
}

/// A decoded snapshot: the stored time and both cell fields.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridField,
    pub c: GridField,
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let mut cur = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .map_err(|_| FhksError::SnapshotFormat("truncated header".into()))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(FhksError::SnapshotFormat(format!(
            "bad magic {magic:?}, expected {SNAPSHOT_MAGIC:?}"
        )));
    }
    let read_u16 = |cur: &mut std::io::Cursor<&[u8]>| -> Result<u16> {
        let mut b = [0u8; 2];
        cur.read_exact(&mut b)
            .map_err(|_| FhksError::SnapshotFormat("truncated header".into()))?;
        Ok(u16::from_le_bytes(b))
    };
    let version = read_u16(&mut cur)?;
    if version != SNAPSHOT_VERSION {
        return Err(FhksError::SnapshotFormat(format!(
            "version {version} unsupported (this build reads version {SNAPSHOT_VERSION})"
        )));
    }
    let read_u8 = |cur: &mut std::io::Cursor<&[u8]>| -> Result<u8> {
        let mut b = [0u8; 1];
        cur.read_exact(&mut b)
            .map_err(|_| FhksError::SnapshotFormat("truncated header".into()))?;
        Ok(b[0])
    };
    let symbol_mode = match read_u8(&mut cur)? {
        0 => SymbolMode::Discrete,
        1 => SymbolMode::Continuum,
        m => {
            return Err(FhksError::SnapshotFormat(format!(
                "unknown symbol mode tag {m}"
            )))
        }
    };
    let dim = read_u8(&mut cur)? as usize;
    let read_f64 = |cur: &mut std::io::Cursor<&[u8]>| -> Result<f64> {
        let mut b = [0u8; 8];
        cur.read_exact(&mut b)
            .map_err(|_| FhksError::SnapshotFormat("truncated payload".into()))?;
        Ok(f64::from_le_bytes(b))
    };
    let read_u64 = |cur: &mut std::io::Cursor<&[u8]>| -> Result<u64> {
        let mut b = [0u8; 8];
        cur.read_exact(&mut b)
            .map_err(|_| FhksError::SnapshotFormat("truncated header".into()))?;
        Ok(u64::from_le_bytes(b))
    };
    let mut lengths = Vec::with_capacity(dim);
    let mut cells = Vec::with_capacity(dim);
    for _ in 0..dim {
        lengths.push(read_f64(&mut cur)?);
        cells.push(read_u64(&mut cur)? as usize);
    }
    let domain = DomainSpec::new(lengths, cells, symbol_mode)?;
    let t = read_f64(&mut cur)?;
    let n = domain.total_cells();
    let read_field = |cur: &mut std::io::Cursor<&[u8]>| -> Result<GridField> {
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            vals.push(read_f64(cur)?);
        }
        GridField::new(vals, &domain)
    };
    let u = read_field(&mut cur)?;
    let c = read_field(&mut cur)?;
    if cur.position() != bytes.len() as u64 {
        return Err(FhksError::SnapshotFormat(format!(
            "{} trailing bytes",
            bytes.len() as u64 - cur.position()
        )));
    }
    Ok(Snapshot { t, u, c })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| FhksError::io(path, e))?;
    decode_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemo::EllipticLaw;
    use crate::config::{make_initial_data, Preset};
    use crate::domain::build_basis;
    use crate::evolution::{run, SimConfig};
    use crate::fractional::FracParams;
    use std::sync::Arc;

    fn sample_state(n: usize) -> SimState {
        let dom = DomainSpec::line(1.0, n, SymbolMode::Discrete).unwrap();
        let basis = Arc::new(build_basis(&dom));
        let u0 = make_initial_data(Preset::Bump, &dom);
        SimState::initial(
            &u0,
            &basis,
            EllipticLaw::Fractional(FracParams::new(0.4, 0.0).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn snapshot_round_trip_bitwise() {
        let state = sample_state(32);
        let bytes = encode_snapshot(&state);
        let snap = decode_snapshot(&bytes).unwrap();
        assert_eq!(snap.t.to_bits(), state.t.to_bits());
        for (a, b) in snap.u.values().iter().zip(state.u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in snap.c.values().iter().zip(state.chemo.c.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(snap.u.domain(), state.u.domain());
    }

    #[test]
    fn snapshot_size_arithmetic() {
        // 1D, N = 4: header = 4 + 2 + 1 + 1 + (8 + 8) + 8 = 32, payload 2*4*8
        let bytes = encode_snapshot(&sample_state(4));
        assert_eq!(bytes.len(), 32 + 2 * 4 * 8);
    }

    #[test]
    fn snapshot_version_mismatch() {
        let mut bytes = encode_snapshot(&sample_state(8));
        bytes[4] = 99;
        let err = decode_snapshot(&bytes).unwrap_err();
        assert!(err.to_string().contains("version 99"), "{err}");
    }

    #[test]
    fn snapshot_bad_magic_and_truncation() {
        let mut bytes = encode_snapshot(&sample_state(8));
        bytes[0] = b'X';
        assert!(decode_snapshot(&bytes).is_err());
        let bytes = encode_snapshot(&sample_state(8));
        assert!(decode_snapshot(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn series_header_only_for_empty_trajectory() {
        let traj = Trajectory {
            snapshots: vec![],
            diagnostics: vec![],
        };
        let text = render_series(&traj, &[0.25, 0.5]);
        assert_eq!(
            text,
            "t,mass,u_min,u_max,c_min,c_max,viscous_energy_cum,entropy_residual_0,entropy_residual_1\n"
        );
    }

    #[test]
    fn series_constant_mass_column() {
        let dom = DomainSpec::line(1.0, 32, SymbolMode::Discrete).unwrap();
        let basis = Arc::new(build_basis(&dom));
        let cfg = SimConfig::new(FracParams::new(0.4, 0.0).unwrap(), 1e-3, 0.05).unwrap();
        let traj = run(&make_initial_data(Preset::Bump, &dom), &basis, &cfg, &[]).unwrap();
        let text = render_series(&traj, &cfg.diag_levels);
        let masses: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap())
            .collect();
        assert!(!masses.is_empty());
        for m in &masses {
            assert_eq!(*m, masses[0], "mass column drifted in printed digits");
        }
    }

    #[test]
    fn series_rendering_is_deterministic() {
        let dom = DomainSpec::line(1.0, 32, SymbolMode::Discrete).unwrap();
        let basis = Arc::new(build_basis(&dom));
        let cfg = SimConfig::new(FracParams::new(0.4, 0.0).unwrap(), 1e-3, 0.05).unwrap();
        let u0 = make_initial_data(Preset::Bump, &dom);
        let a = render_series(&run(&u0, &basis, &cfg, &[]).unwrap(), &cfg.diag_levels);
        let b = render_series(&run(&u0, &basis, &cfg, &[]).unwrap(), &cfg.diag_levels);
        assert_eq!(a, b);
    }

    #[test]
    fn file_io_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let state = sample_state(16);
        let path = dir.path().join("state.fhks");
        write_snapshot(&state, &path).unwrap();
        let snap = read_snapshot(&path).unwrap();
        assert_eq!(snap.u.values(), state.u.values());
    }
}
