//! On-disk formats for maps and sweep traces.
//!
//! CSV artifacts carry a `#`-prefixed header block with the dB convention
//! and reproducibility metadata (resolved config hash and seed), then one
//! column-name line, then data rows. Floats are printed with the shortest
//! round-trip representation, so identical inputs produce byte-identical
//! files. Writes go through a temp file and a rename: partial outputs are
//! never left behind.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::EsrError;
use crate::spectrum::{SpectrumMap, SweepTrace};
use crate::Result;

/// dB convention stamped into every artifact header.
pub const DB_CONVENTION: &str = "20*log10(|S21|)";
const TRACE_MAGIC: &str = "esr-trace v1";
const MAP_MAGIC: &str = "esr-map v1";

/// Reproducibility metadata embedded in artifact headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Hex digest of the resolved configuration ("none" when absent).
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn none() -> Self {
        Provenance {
            config_hash: "none".into(),
            seed: None,
        }
    }
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header_block(magic: &str, prov: &Provenance, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    s.push_str(&format!("# {magic}\n"));
    s.push_str(&format!("# db_convention: {DB_CONVENTION}\n"));
    s.push_str(&format!("# config_hash: {}\n", prov.config_hash));
    match prov.seed {
        Some(seed) => s.push_str(&format!("# seed: {seed}\n")),
        None => s.push_str("# seed: none\n"),
    }
    for (k, v) in extra {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s
}

/// Serializes a sweep trace (columns `b_tesla,s21_db`).
pub fn trace_to_csv(trace: &SweepTrace, prov: &Provenance) -> String {
    let mut s = header_block(
        TRACE_MAGIC,
        prov,
        &[(
            "mode_frequency_hz",
            format!("{}", trace.mode_frequency_hz),
        )],
    );
    s.push_str("b_tesla,s21_db\n");
    for (b, v) in trace.b_points_t.iter().zip(&trace.s21_db) {
        s.push_str(&format!("{b},{v}\n"));
    }
    s
}

pub fn write_trace_csv(path: &Path, trace: &SweepTrace, prov: &Provenance) -> Result<()> {
    write_atomic(path, trace_to_csv(trace, prov).as_bytes())
}

/// Serializes a map (columns `b_tesla,freq_hz,s21_db`, B-major).
pub fn map_to_csv(map: &SpectrumMap, mode_frequency_hz: f64, prov: &Provenance) -> String {
    let mut s = header_block(
        MAP_MAGIC,
        prov,
        &[("mode_frequency_hz", format!("{mode_frequency_hz}"))],
    );
    s.push_str("b_tesla,freq_hz,s21_db\n");
    for (row, b) in map.b_axis_t.iter().enumerate() {
        for (col, f) in map.f_axis_hz.iter().enumerate() {
            s.push_str(&format!("{b},{f},{}\n", map.s21_db[(row, col)]));
        }
    }
    s
}

pub fn write_map_csv(
    path: &Path,
    map: &SpectrumMap,
    mode_frequency_hz: f64,
    prov: &Provenance,
) -> Result<()> {
    write_atomic(path, map_to_csv(map, mode_frequency_hz, prov).as_bytes())
}

/// Parses a sweep-trace CSV, refusing files whose header block or column
/// line does not match the schema.
pub fn trace_from_csv(text: &str, source: &str) -> Result<(SweepTrace, Provenance)> {
    let mut lines = text.lines().peekable();

    let first = lines
        .next()
        .ok_or_else(|| EsrError::schema(source, "empty file"))?;
    if first.trim() != format!("# {TRACE_MAGIC}") {
        return Err(EsrError::schema(
            source,
            format!("missing `# {TRACE_MAGIC}` magic line"),
        ));
    }

    let mut mode_frequency_hz: Option<f64> = None;
    let mut config_hash = "none".to_string();
    let mut seed: Option<u64> = None;
    let mut column_line: Option<&str> = None;
    for line in lines.by_ref() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "mode_frequency_hz" => {
                        let f = f64::from_str(value).map_err(|_| {
                            EsrError::schema(source, "mode_frequency_hz is not a number")
                        })?;
                        mode_frequency_hz = Some(f);
                    }
                    "config_hash" => config_hash = value.to_string(),
                    "seed" => {
                        if value != "none" {
                            seed = Some(u64::from_str(value).map_err(|_| {
                                EsrError::schema(source, "seed is not an integer")
                            })?);
                        }
                    }
                    "db_convention" if value != DB_CONVENTION => {
                        return Err(EsrError::schema(
                            source,
                            format!("unexpected db_convention `{value}`"),
                        ));
                    }
                    _ => {}
                }
            }
        } else {
            column_line = Some(trimmed);
            break;
        }
    }

    let mode_frequency_hz = mode_frequency_hz
        .ok_or_else(|| EsrError::schema(source, "missing `# mode_frequency_hz:` header"))?;
    let columns =
        column_line.ok_or_else(|| EsrError::schema(source, "missing column header line"))?;
    if columns != "b_tesla,s21_db" {
        return Err(EsrError::schema(
            source,
            format!("expected columns `b_tesla,s21_db`, found `{columns}`"),
        ));
    }

    let mut b_points = Vec::new();
    let mut s21 = Vec::new();
    for (k, line) in lines.enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let b = parts
            .next()
            .and_then(|v| f64::from_str(v.trim()).ok())
            .ok_or_else(|| EsrError::schema(source, format!("bad b_tesla on data row {k}")))?;
        let v = parts
            .next()
            .and_then(|v| f64::from_str(v.trim()).ok())
            .ok_or_else(|| EsrError::schema(source, format!("bad s21_db on data row {k}")))?;
        if parts.next().is_some() {
            return Err(EsrError::schema(
                source,
                format!("too many columns on data row {k}"),
            ));
        }
        b_points.push(b);
        s21.push(v);
    }

    let trace = SweepTrace {
        mode_frequency_hz,
        b_points_t: b_points,
        s21_db: s21,
        seed,
        source: source.to_string(),
    };
    trace.validate()?;
    Ok((
        trace,
        Provenance {
            config_hash,
            seed,
        },
    ))
}

pub fn read_trace_csv(path: &Path) -> Result<(SweepTrace, Provenance)> {
    let text = fs::read_to_string(path)?;
    trace_from_csv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> SweepTrace {
        SweepTrace {
            mode_frequency_hz: 4.546e8,
            b_points_t: vec![0.0, 4e-4, 8e-4, 1.2e-3],
            s21_db: vec![-0.1, -0.2, -3.5, -0.15],
            seed: Some(7),
            source: "unit".into(),
        }
    }

    #[test]
    fn trace_roundtrip() {
        let trace = sample_trace();
        let prov = Provenance {
            config_hash: "abc123".into(),
            seed: Some(7),
        };
        let text = trace_to_csv(&trace, &prov);
        let (back, prov2) = trace_from_csv(&text, "mem").unwrap();
        assert_eq!(back.mode_frequency_hz, trace.mode_frequency_hz);
        assert_eq!(back.b_points_t, trace.b_points_t);
        assert_eq!(back.s21_db, trace.s21_db);
        assert_eq!(prov2.config_hash, "abc123");
        assert_eq!(prov2.seed, Some(7));
    }

    #[test]
    fn schema_rejections() {
        let trace = sample_trace();
        let prov = Provenance::none();
        let good = trace_to_csv(&trace, &prov);

        let no_magic = good.replacen("# esr-trace v1", "# something", 1);
        assert!(trace_from_csv(&no_magic, "mem").is_err());

        let no_mode = good.replacen("# mode_frequency_hz", "# other_key", 1);
        assert!(trace_from_csv(&no_mode, "mem").is_err());

        let bad_columns = good.replacen("b_tesla,s21_db", "b,s21", 1);
        assert!(trace_from_csv(&bad_columns, "mem").is_err());

        let bad_convention = good.replacen(DB_CONVENTION, "10*log10", 1);
        assert!(trace_from_csv(&bad_convention, "mem").is_err());
    }

    #[test]
    fn atomic_write_creates_parents_and_no_tmp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        write_trace_csv(&path, &sample_trace(), &Provenance::none()).unwrap();
        assert!(path.exists());
        assert!(!path.with_extension("tmp~").exists());
        let (back, _) = read_trace_csv(&path).unwrap();
        assert_eq!(back.b_points_t.len(), 4);
    }
}
