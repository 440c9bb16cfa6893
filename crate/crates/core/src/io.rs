//! Field files: a JSON header next to a raw little-endian `(re, im)` f64 payload.
//!
//! `write_field(base, ..)` produces `base.json` and `base.bin`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisRole, SampledField};
use crate::grid::{AxisSpec, GridSpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format_version: u32,
    pub axes: Vec<AxisSpec>,
    pub axis_roles: Vec<AxisRole>,
    /// Payload file name, relative to the header.
    pub data: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_id: Option<String>,
}

pub fn header_path(base: &Path) -> PathBuf {
    with_suffix(base, "json")
}

pub fn data_path(base: &Path) -> PathBuf {
    with_suffix(base, "bin")
}

fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Strips a trailing `.json` or `.bin` so either file can name the field.
pub fn field_base(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("bin") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

pub fn encode_values(values: &[Complex64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    bytes
}

pub fn decode_values(bytes: &[u8]) -> Option<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(16) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect(),
    )
}

/// Writes `base.json` and `base.bin`; returns both paths.
pub fn write_field(base: &Path, f: &SampledField, window_id: Option<&str>) -> Result<[PathBuf; 2]> {
    let hp = header_path(base);
    let dp = data_path(base);
    let header = FieldHeader {
        format_version: FORMAT_VERSION,
        axes: f.grid().axes.clone(),
        axis_roles: f.roles().to_vec(),
        data: dp
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        window_id: window_id.map(str::to_owned),
    };
    if let Some(parent) = hp.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(&dp).map_err(|e| Error::io(&dp, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_values(f.values()))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&dp, e))?;
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&hp, text + "\n").map_err(|e| Error::io(&hp, e))?;
    Ok([hp, dp])
}

pub fn read_header(path: &Path) -> Result<FieldHeader> {
    let hp = header_path(&field_base(path));
    let text = fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?;
    let header: FieldHeader = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: hp.clone(),
        reason: e.to_string(),
    })?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format {
            path: hp,
            reason: format!("unsupported format version {}", header.format_version),
        });
    }
    Ok(header)
}

/// Reads a field given either of its two files or their common base path.
pub fn read_field(path: &Path) -> Result<(SampledField, FieldHeader)> {
    let base = field_base(path);
    let header = read_header(&base)?;
    let hp = header_path(&base);
    let bad = |reason: String| Error::Format {
        path: hp.clone(),
        reason,
    };
    let grid = GridSpec::new(header.axes.clone()).map_err(|e| bad(e.to_string()))?;
    let dp = hp
        .parent()
        .map(|p| p.join(&header.data))
        .unwrap_or_else(|| PathBuf::from(&header.data));
    let bytes = fs::read(&dp).map_err(|e| Error::io(&dp, e))?;
    let values = decode_values(&bytes).ok_or_else(|| bad("payload length is not a multiple of 16 bytes".into()))?;
    let field = SampledField::new(grid, values, header.axis_roles.clone()).map_err(|e| bad(e.to_string()))?;
    Ok((field, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(vec![AxisSpec::new(2.5, 8).unwrap(), AxisSpec::new(1.0, 4).unwrap()]).unwrap();
        let f = SampledField::from_fn(g, |x| Complex64::new(x[0].sin(), x[1] * 0.1)).unwrap();
        let base = dir.path().join("sub").join("f");
        write_field(&base, &f, Some("abc")).unwrap();
        let (g2, h) = read_field(&header_path(&base)).unwrap();
        assert_eq!(g2, f);
        assert_eq!(h.window_id.as_deref(), Some("abc"));
    }

    #[test]
    fn malformed_payload_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(vec![AxisSpec::new(1.0, 4).unwrap()]).unwrap();
        let f = SampledField::zeros(g, vec![AxisRole::Space]);
        let base = dir.path().join("z");
        write_field(&base, &f, None).unwrap();
        fs::write(data_path(&base), [0u8; 20]).unwrap();
        assert!(matches!(read_field(&base), Err(Error::Format { .. })));
        assert!(matches!(
            read_field(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
