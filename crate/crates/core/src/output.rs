//! Helpers shared by every file writer: atomic replacement, schema headers
//! and dB formatting.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::secrecy::to_db;

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// First line of every CSV file.
pub fn schema_line(schema: &str) -> String {
    format!("# schema: {schema}\n")
}

/// A dB value rounded to two decimals for CSV output.
pub fn db2(value_db: f64) -> String {
    if value_db.is_finite() {
        let s = format!("{value_db:.2}");
        if s == "-0.00" {
            "0.00".into()
        } else {
            s
        }
    } else if value_db.is_nan() {
        "nan".into()
    } else if value_db > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Linear power as a rounded dB string.
pub fn lin_db2(linear: f64) -> String {
    db2(to_db(linear))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_rounding() {
        assert_eq!(db2(-4.256), "-4.26");
        assert_eq!(db2(-0.001), "0.00");
        assert_eq!(db2(12.345_6), "12.35");
        assert_eq!(db2(f64::NEG_INFINITY), "-inf");
        assert_eq!(lin_db2(0.1), "-10.00");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
