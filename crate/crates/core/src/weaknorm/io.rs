use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ProfilePoint, QuotientSpectrum, SpectrumEntry};

/// Writes the spectrum as little-endian `(f64 value, f64 weight)` records,
/// nonzero entries in spectrum order, then one `(0, zero_weight)` record if
/// any zero quotients were compacted.
pub fn write_spectrum_binary(spectrum: &QuotientSpectrum, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let zero = (spectrum.zero_count > 0).then_some(SpectrumEntry {
        value: 0.0,
        weight: spectrum.zero_weight,
    });
    for e in spectrum.entries.iter().chain(zero.iter()) {
        out.write_all(&e.value.to_le_bytes())?;
        out.write_all(&e.weight.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the records written by [`write_spectrum_binary`].
pub fn read_spectrum_binary(path: impl AsRef<Path>) -> Result<Vec<SpectrumEntry>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::InvalidParameter(format!(
            "spectrum file length {} is not a multiple of 16",
            bytes.len()
        )));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    Ok(bytes
        .chunks_exact(16)
        .map(|c| SpectrumEntry {
            value: f(&c[..8]),
            weight: f(&c[8..]),
        })
        .collect())
}

/// Writes `value,lambda_p_W` rows.
pub fn write_profile_csv(profile: &[ProfilePoint], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value", "lambda_p_W"])?;
    for pt in profile {
        w.write_record([pt.value.to_string(), pt.lambda_p_w.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
