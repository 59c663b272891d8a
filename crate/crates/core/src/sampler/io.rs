//! Binary dump of a measurement problem `(config, A, y)`.
//!
//! All fields are little-endian, 8 bytes each:
//!
//! | offset | field                                   |
//! |--------|-----------------------------------------|
//! | 0      | magic `b"SEGSRMAT"`                     |
//! | 8      | format version (u64, currently 1)       |
//! | 16     | bandwidth_hz (f64)                      |
//! | 24     | pulse_width_s (f64)                     |
//! | 32     | receive_time_s (f64)                    |
//! | 40     | downsample_ratio R (u64)                |
//! | 48     | segment_pulses S (u64)                  |
//! | 56     | slide_pulses W (u64)                    |
//! | 64     | rows (u64)                              |
//! | 72     | cols (u64)                              |
//! | 80     | rows*cols entries of A, row-major (f64) |
//! | ...    | y length (u64, 0 when absent)           |
//! | ...    | y entries (f64)                         |
//!
//! A file with all config scalars set to zero carries a bare matrix (used by
//! the `rip` subcommand for arbitrary inputs).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::radar::RadarConfig;

pub const MAGIC: &[u8; 8] = b"SEGSRMAT";
pub const VERSION: u64 = 1;

/// Contents of a dump file.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDump {
    pub config: Option<RadarConfig>,
    pub matrix: DMatrix<f64>,
    pub y: Option<Vec<f64>>,
}

pub fn write_dump<W: Write>(mut out: W, dump: &MatrixDump) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let (b, tp, t, r, s, w) = match &dump.config {
        Some(c) => {
            (c.bandwidth_hz, c.pulse_width_s, c.receive_time_s, c.downsample_ratio as u64, c.segment_pulses as u64, c.slide_pulses as u64)
        }
        None => (0.0, 0.0, 0.0, 0, 0, 0),
    };
    for v in [b, tp, t] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in [r, s, w, dump.matrix.nrows() as u64, dump.matrix.ncols() as u64] {
        out.write_all(&v.to_le_bytes())?;
    }
    for i in 0..dump.matrix.nrows() {
        for j in 0..dump.matrix.ncols() {
            out.write_all(&dump.matrix[(i, j)].to_le_bytes())?;
        }
    }
    let y = dump.y.as_deref().unwrap_or(&[]);
    out.write_all(&(y.len() as u64).to_le_bytes())?;
    for v in y {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(inp: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    inp.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(inp: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(inp)?))
}

pub fn read_dump<R: Read>(mut inp: R) -> Result<MatrixDump> {
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic).map_err(|e| Error::Format(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u64(&mut inp)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (b, tp, t) = (read_f64(&mut inp)?, read_f64(&mut inp)?, read_f64(&mut inp)?);
    let (r, s, w) = (read_u64(&mut inp)?, read_u64(&mut inp)?, read_u64(&mut inp)?);
    let rows = read_u64(&mut inp)? as usize;
    let cols = read_u64(&mut inp)? as usize;
    let config = if b == 0.0 { None } else { Some(RadarConfig::new(b, tp, t, r as usize, s as usize, w as usize)?) };
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(read_f64(&mut inp)?);
    }
    let matrix = DMatrix::from_row_slice(rows, cols, &data);
    let ylen = read_u64(&mut inp)? as usize;
    let y = if ylen == 0 {
        None
    } else {
        let mut y = Vec::with_capacity(ylen);
        for _ in 0..ylen {
            y.push(read_f64(&mut inp)?);
        }
        Some(y)
    };
    if let Some(c) = &config {
        if rows != c.m || cols != c.n {
            return Err(Error::Format(format!("matrix {rows}x{cols} does not match config {}x{}", c.m, c.n)));
        }
    }
    Ok(MatrixDump { config, matrix, y })
}

pub fn save(path: &Path, dump: &MatrixDump) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_dump(std::io::BufWriter::new(f), dump)
}

pub fn load(path: &Path) -> Result<MatrixDump> {
    let f = std::fs::File::open(path)?;
    read_dump(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::lfm_waveform;
    use crate::sampler::{build_measurement_matrix, make_chipping};
    use proptest::prelude::*;

    #[test]
    fn round_trip_problem() {
        let c = RadarConfig::new(10e6, 0.9e-6, 5.4e-6, 3, 3, 1).unwrap();
        let a = build_measurement_matrix(&c, &lfm_waveform(&c), &make_chipping(&c, 3)).unwrap();
        let dump = MatrixDump { config: Some(c), matrix: a.entries, y: Some((0..18).map(|i| i as f64 / 7.0).collect()) };
        let mut buf = Vec::new();
        write_dump(&mut buf, &dump).unwrap();
        assert_eq!(buf.len(), 80 + 18 * 45 * 8 + 8 + 18 * 8);
        assert_eq!(read_dump(&buf[..]).unwrap(), dump);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_dump(&b"NOTAFILE"[..]), Err(Error::Format(_))));
        assert!(matches!(read_dump(&b"SEG"[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn bare_matrix_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let m = DMatrix::from_fn(rows, cols, |i, j| ((seed ^ (i * 31 + j) as u64) % 1000) as f64 / 3.0 - 100.0);
            let dump = MatrixDump { config: None, matrix: m, y: None };
            let mut buf = Vec::new();
            write_dump(&mut buf, &dump).unwrap();
            prop_assert_eq!(read_dump(&buf[..]).unwrap(), dump);
        }
    }
}
