//! Binary state snapshots.
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes | content                              |
//! |-------|--------------------------------------|
//! | 4     | magic `"KPI3"`                       |
//! | 2     | format version, `u16` = 1            |
//! | 1     | flags, bit 0 = mean-zero in x        |
//! | 8×3   | `u64` grid sizes `nx, ny1, ny2`      |
//! | 8     | `f64` transverse period λ            |
//! | 8     | `f64` dispersion exponent α          |
//! | rest  | row-major `f64` physical samples     |
//!
//! Snapshots carry physical samples, so a write → read round trip goes
//! through one forward/inverse transform pair and reproduces coefficients
//! to rounding (not bit-for-bit); repeated writes of the same field are
//! byte-identical.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array3;

use crate::domain::{DomainSpec, Grid};
use crate::error::{Error, Result};
use crate::field::SpectralField;

const MAGIC: &[u8; 4] = b"KPI3";
const VERSION: u16 = 1;
const FLAG_MEAN_ZERO: u8 = 0b0000_0001;
/// Refuse to allocate for absurd headers (corrupt or hostile files).
const MAX_SAMPLES: u64 = 1 << 31;

/// Serialize the physical samples of `field` with their domain header.
pub fn write_snapshot(out: &mut impl Write, field: &SpectralField<f64>) -> Result<()> {
    let grid = field.grid();
    let (nx, ny1, ny2) = grid.shape();
    let mut flags = 0u8;
    let scale = 1.0 + field.max_coeff_modulus();
    if field.mean_zero_defect() <= 1e-12 * scale {
        flags |= FLAG_MEAN_ZERO;
    }
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[flags])?;
    for n in [nx, ny1, ny2] {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    out.write_all(&grid.lambda().to_le_bytes())?;
    out.write_all(&grid.alpha().to_le_bytes())?;
    for v in field.to_physical().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Convenience wrapper writing to a fresh file.
pub fn write_snapshot_file(path: &Path, field: &SpectralField<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(&mut out, field)?;
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize>(input: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::MalformedFile(format!("truncated while reading {what}"))
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

/// Deserialize a snapshot, rebuilding its grid from the header.  A field
/// flagged mean-zero is re-projected after the transform so the property
/// holds exactly despite rounding in the stored samples.
pub fn read_snapshot(input: &mut impl Read) -> Result<SpectralField<f64>> {
    let magic = read_array::<4>(input, "magic")?;
    if &magic != MAGIC {
        return Err(Error::MalformedFile(format!(
            "bad magic {:02x?}, expected \"KPI3\"",
            magic
        )));
    }
    let version = u16::from_le_bytes(read_array::<2>(input, "version")?);
    if version != VERSION {
        return Err(Error::MalformedFile(format!(
            "unsupported snapshot version {version}, expected {VERSION}"
        )));
    }
    let flags = read_array::<1>(input, "flags")?[0];
    let mut sizes = [0u64; 3];
    for (s, what) in sizes.iter_mut().zip(["nx", "ny1", "ny2"]) {
        *s = u64::from_le_bytes(read_array::<8>(input, what)?);
    }
    let total = sizes.iter().try_fold(1u64, |acc, &s| {
        acc.checked_mul(s).filter(|&t| t <= MAX_SAMPLES)
    });
    let Some(total) = total else {
        return Err(Error::MalformedFile(format!(
            "grid sizes {sizes:?} overflow the sample budget"
        )));
    };
    let lambda = f64::from_le_bytes(read_array::<8>(input, "lambda")?);
    let alpha = f64::from_le_bytes(read_array::<8>(input, "alpha")?);
    let spec = DomainSpec::new(
        lambda,
        alpha,
        sizes[0] as usize,
        sizes[1] as usize,
        sizes[2] as usize,
    )?;
    let grid: Arc<Grid<f64>> = Grid::new(spec)?;
    let mut samples = Vec::with_capacity(total as usize);
    for _ in 0..total {
        samples.push(f64::from_le_bytes(read_array::<8>(input, "samples")?));
    }
    let mut trailer = [0u8; 1];
    if input.read(&mut trailer)? != 0 {
        return Err(Error::MalformedFile(
            "trailing bytes after the sample payload".into(),
        ));
    }
    let array = Array3::from_shape_vec(
        (sizes[0] as usize, sizes[1] as usize, sizes[2] as usize),
        samples,
    )
    .map_err(|e| Error::MalformedFile(format!("sample reshape: {e}")))?;
    let mut field = SpectralField::from_physical(&grid, &array)?;
    if flags & FLAG_MEAN_ZERO != 0 {
        field.project_mean_zero();
    }
    Ok(field)
}

/// Convenience wrapper reading from a file.
pub fn read_snapshot_file(path: &Path) -> Result<SpectralField<f64>> {
    read_snapshot(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}
