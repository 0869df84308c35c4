//! Diagnostics tables and binary field snapshots.
//!
//! Snapshot layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `NLCF` |
//! | 1 | version (1) |
//! | 1 | dim |
//! | 4 | n (u32) |
//! | 8 | box length (f64) |
//! | 1 | velocity components |
//! | 1 | director components |
//! | 8 each | u values then d values (f64) |
//!
//! Values of one field are stored point by point in row-major order, with the
//! components of each point adjacent.

use std::io::{Read, Write};
use std::path::Path;

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::monitor::DiagnosticsRecord;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"NLCF";
pub const SNAPSHOT_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 8 + 1 + 1;

/// Writes a header row and one row per record; `{:e}` formatting keeps the
/// shortest representation that parses back to the same float.
pub fn write_diagnostics_to(records: &[DiagnosticsRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let table_err = |e: csv::Error| Error::Table(e.to_string());
    w.write_record(DiagnosticsRecord::HEADER)
        .map_err(table_err)?;
    for r in records {
        w.write_record(r.to_array().iter().map(|v| format!("{v:e}")))
            .map_err(table_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_diagnostics_to(records, std::io::BufWriter::new(file))
}

pub fn read_diagnostics_from(input: impl Read) -> Result<Vec<DiagnosticsRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(|e| Error::Table(e.to_string()))?;
    if headers.iter().ne(DiagnosticsRecord::HEADER) {
        return Err(Error::Table(format!(
            "unexpected header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(|e| Error::Table(e.to_string()))?;
        let mut vals = [0.0; 13];
        for (slot, cell) in vals.iter_mut().zip(row.iter()) {
            *slot = cell
                .trim()
                .parse()
                .map_err(|_| Error::Table(format!("row {}: cannot parse {cell:?}", line + 1)))?;
        }
        out.push(DiagnosticsRecord::from_array(vals));
    }
    Ok(out)
}

pub fn read_diagnostics(path: impl AsRef<Path>) -> Result<Vec<DiagnosticsRecord>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_diagnostics_from(std::io::BufReader::new(file))
}

/// Encodes a state in the snapshot layout. The time is not stored.
pub fn encode_snapshot(s: &State) -> Vec<u8> {
    let g = s.grid();
    let np = g.npoints();
    let (cu, cd) = (s.u.components(), s.d.components());
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * np * (cu + cd));
    buf.extend_from_slice(&SNAPSHOT_MAGIC);
    buf.push(SNAPSHOT_VERSION);
    buf.push(g.dim() as u8);
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&g.length().to_le_bytes());
    buf.push(cu as u8);
    buf.push(cd as u8);
    for f in [&s.u, &s.d] {
        for p in 0..np {
            for c in 0..f.components() {
                buf.extend_from_slice(&f.component(c)[p].to_le_bytes());
            }
        }
    }
    buf
}

fn read_field(grid: Grid, comps: usize, bytes: &[u8]) -> Result<Field> {
    let np = grid.npoints();
    let mut values = vec![0.0; np * comps];
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let (p, c) = (i / comps, i % comps);
        values[c * np + p] = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    Field::from_values(grid, comps, values)
}

/// Decodes a snapshot; the returned state has `t = 0`.
pub fn decode_snapshot(bytes: &[u8]) -> Result<State> {
    let bad = |m: String| Error::Snapshot(m);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    if bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("bad magic bytes".into()));
    }
    if bytes[4] != SNAPSHOT_VERSION {
        return Err(bad(format!("unsupported version {}", bytes[4])));
    }
    let dim = bytes[5] as usize;
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let length = f64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes"));
    let (cu, cd) = (bytes[18] as usize, bytes[19] as usize);
    let grid = Grid::new(dim, n, length).map_err(|e| bad(format!("bad grid: {e}")))?;
    let np = grid.npoints();
    let expected = HEADER_LEN + 8 * np * (cu + cd);
    if bytes.len() != expected {
        return Err(bad(format!(
            "expected {expected} bytes for the declared shape, found {}",
            bytes.len()
        )));
    }
    let split = HEADER_LEN + 8 * np * cu;
    let u = read_field(grid, cu, &bytes[HEADER_LEN..split])?;
    let d = read_field(grid, cd, &bytes[split..])?;
    State::new(0.0, u, d).map_err(|e| bad(e.to_string()))
}

pub fn write_snapshot(s: &State, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), encode_snapshot(s))?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<State> {
    decode_snapshot(&std::fs::read(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{make_initial, Params};

    fn record(t: f64) -> DiagnosticsRecord {
        let mut v = [0.0; 13];
        for (i, x) in v.iter_mut().enumerate() {
            *x = (t + 1.0) / (i as f64 + 3.0) + 1e-17 * i as f64;
        }
        v[0] = t;
        DiagnosticsRecord::from_array(v)
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_diagnostics_to(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,kinetic,dirichlet,visc_dissip,tension_dissip,grad_d_l4,vort_bmo,\
             criterion_value,h3_u,h4_d,H_sup,div_max,unit_max_dev\n"
        );
    }

    #[test]
    fn table_round_trip_is_exact() {
        let recs: Vec<_> = [0.0, 0.1, 1.0 / 3.0].map(record).to_vec();
        let mut buf = Vec::new();
        write_diagnostics_to(&recs, &mut buf).unwrap();
        assert_eq!(read_diagnostics_from(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn table_with_wrong_header_is_rejected() {
        let text = "t,kinetic\n0,1\n";
        assert!(matches!(
            read_diagnostics_from(text.as_bytes()),
            Err(Error::Table(_))
        ));
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = Grid::new(3, 16, 3.5).unwrap();
        let s = make_initial("random_smooth", &Params::new(), 2, g).unwrap();
        let back = decode_snapshot(&encode_snapshot(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn snapshot_is_point_major() {
        let g = Grid::periodic(2, 8).unwrap();
        let s = make_initial("helical", &Params::new(), 0, g).unwrap();
        let bytes = encode_snapshot(&s);
        let start = HEADER_LEN + 8 * 2 * g.npoints();
        let x1 = f64::from_le_bytes(bytes[start + 24..start + 32].try_into().unwrap());
        assert_eq!(x1, s.d.component(0)[1]);
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let g = Grid::periodic(2, 8).unwrap();
        let s = make_initial("constant", &Params::new(), 0, g).unwrap();
        let good = encode_snapshot(&s);
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(decode_snapshot(&magic), Err(Error::Snapshot(_))));
        let mut version = good.clone();
        version[4] = 9;
        assert!(matches!(decode_snapshot(&version), Err(Error::Snapshot(_))));
        assert!(matches!(
            decode_snapshot(&good[..good.len() - 1]),
            Err(Error::Snapshot(_))
        ));
        assert!(matches!(
            decode_snapshot(&good[..7]),
            Err(Error::Snapshot(_))
        ));
    }
}
