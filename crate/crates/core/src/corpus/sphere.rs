//! NIST SPHERE reader and writer (16-bit linear PCM only).
//!
//! A SPHERE file starts with an ASCII header: the magic line `NIST_1A`, a line
//! holding the header size in bytes (1024 in TIMIT), then `key -type value`
//! lines terminated by `end_head`. The PCM body follows the header.

use std::collections::BTreeMap;

use thiserror::Error;

use super::Audio;

pub const MAGIC: &str = "NIST_1A";
const DEFAULT_HEADER_BYTES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SphereError {
    #[error("missing NIST_1A magic")]
    BadMagic,
    #[error("header field {field}: {reason}")]
    Field { field: String, reason: String },
    #[error("header declares {declared} bytes but file has only {available}")]
    TruncatedHeader { declared: usize, available: usize },
    #[error("sample_count declares {expected} samples but body holds {actual_bytes} bytes ({bytes_per_sample} bytes/sample)")]
    LengthMismatch {
        expected: usize,
        actual_bytes: usize,
        bytes_per_sample: usize,
    },
}

fn field_err(field: &str, reason: impl Into<String>) -> SphereError {
    SphereError::Field {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    /// `01` in the header.
    Little,
    /// `10` in the header.
    Big,
}

impl ByteOrder {
    fn code(self) -> &'static str {
        match self {
            ByteOrder::Little => "01",
            ByteOrder::Big => "10",
        }
    }
}

/// Parsed `key -type value` header fields.
#[derive(Debug, Clone, Default)]
pub struct SphereHeader {
    pub header_bytes: usize,
    pub fields: BTreeMap<String, String>,
}

impl SphereHeader {
    fn int(&self, key: &str) -> Result<Option<i64>, SphereError> {
        match self.fields.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<i64>()
                .map(Some)
                .map_err(|_| field_err(key, format!("expected integer, got {v:?}"))),
        }
    }

    fn required_int(&self, key: &str) -> Result<i64, SphereError> {
        self.int(key)?.ok_or_else(|| field_err(key, "missing"))
    }
}

pub fn is_sphere(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC.as_bytes())
}

pub fn parse_header(bytes: &[u8]) -> Result<SphereHeader, SphereError> {
    if !is_sphere(bytes) {
        return Err(SphereError::BadMagic);
    }
    let mut lines = bytes.split(|&b| b == b'\n');
    let magic = lines.next().unwrap_or_default();
    if trim_ascii(magic) != MAGIC.as_bytes() {
        return Err(SphereError::BadMagic);
    }
    let size_line = lines.next().ok_or_else(|| field_err("header_size", "missing"))?;
    let size_text = std::str::from_utf8(trim_ascii(size_line)).map_err(|_| field_err("header_size", "not ASCII"))?;
    let header_bytes: usize = size_text
        .parse()
        .map_err(|_| field_err("header_size", format!("expected integer, got {size_text:?}")))?;
    if header_bytes > bytes.len() {
        return Err(SphereError::TruncatedHeader {
            declared: header_bytes,
            available: bytes.len(),
        });
    }

    let mut header = SphereHeader {
        header_bytes,
        fields: BTreeMap::new(),
    };
    let mut terminated = false;
    let head = &bytes[..header_bytes];
    for raw in head.split(|&b| b == b'\n').skip(2) {
        let line = std::str::from_utf8(trim_ascii(raw)).map_err(|_| field_err("header", "not ASCII"))?;
        if line.is_empty() {
            continue;
        }
        if line == "end_head" {
            terminated = true;
            break;
        }
        let mut parts = line.splitn(3, char::is_whitespace);
        let key = parts.next().unwrap_or_default();
        let kind = parts.next().unwrap_or_default();
        if !kind.starts_with('-') {
            return Err(field_err(key, format!("malformed type tag {kind:?}")));
        }
        let value = parts.next().unwrap_or_default().trim();
        header.fields.insert(key.to_string(), value.to_string());
    }
    if !terminated {
        return Err(field_err("end_head", "terminator not found inside header"));
    }
    Ok(header)
}

fn trim_ascii(bytes: &[u8]) -> &[u8] {
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(bytes.len());
    let end = bytes
        .iter()
        .rposition(|b| !b.is_ascii_whitespace())
        .map_or(start, |p| p + 1);
    &bytes[start..end]
}

/// Decodes a SPHERE file into samples scaled to `[-1, 1)` by `1/32768`.
pub fn parse_sphere(bytes: &[u8]) -> Result<Audio, SphereError> {
    let header = parse_header(bytes)?;

    let coding = header.fields.get("sample_coding").map(String::as_str).unwrap_or("pcm");
    if coding != "pcm" {
        return Err(field_err("sample_coding", format!("unsupported coding {coding:?}")));
    }
    let width = header.int("sample_n_bytes")?.unwrap_or(2);
    if width != 2 {
        return Err(field_err("sample_n_bytes", format!("unsupported width {width}")));
    }
    if let Some(channels) = header.int("channel_count")? {
        if channels != 1 {
            return Err(field_err(
                "channel_count",
                format!("unsupported channel count {channels}"),
            ));
        }
    }
    let order = match header.fields.get("sample_byte_format").map(String::as_str) {
        Some("01") => ByteOrder::Little,
        Some("10") => ByteOrder::Big,
        Some(other) => return Err(field_err("sample_byte_format", format!("unsupported value {other:?}"))),
        None => return Err(field_err("sample_byte_format", "missing")),
    };
    let rate = header.required_int("sample_rate")?;
    if rate <= 0 || rate > u32::MAX as i64 {
        return Err(field_err("sample_rate", format!("out of range: {rate}")));
    }
    let count = header.required_int("sample_count")?;
    let count = usize::try_from(count).map_err(|_| field_err("sample_count", "negative"))?;

    let body = &bytes[header.header_bytes..];
    if body.len() != count * 2 {
        return Err(SphereError::LengthMismatch {
            expected: count,
            actual_bytes: body.len(),
            bytes_per_sample: 2,
        });
    }
    let samples = body
        .chunks_exact(2)
        .map(|pair| {
            let raw = match order {
                ByteOrder::Little => i16::from_le_bytes([pair[0], pair[1]]),
                ByteOrder::Big => i16::from_be_bytes([pair[0], pair[1]]),
            };
            f64::from(raw) / 32768.0
        })
        .collect();
    Ok(Audio {
        sample_rate: rate as u32,
        samples,
    })
}

/// Quantizes `samples` (clamped to the 16-bit range) and writes a SPHERE file.
pub fn emit_sphere(audio: &Audio, order: ByteOrder) -> Vec<u8> {
    let header = format!(
        "{MAGIC}\n   {DEFAULT_HEADER_BYTES}\n\
         sample_count -i {}\n\
         sample_rate -i {}\n\
         channel_count -i 1\n\
         sample_byte_format -s2 {}\n\
         sample_n_bytes -i 2\n\
         sample_coding -s3 pcm\n\
         sample_sig_bits -i 16\n\
         end_head\n",
        audio.samples.len(),
        audio.sample_rate,
        order.code()
    );
    let mut out = header.into_bytes();
    out.resize(DEFAULT_HEADER_BYTES, b' ');
    for &s in &audio.samples {
        let q = quantize(s);
        match order {
            ByteOrder::Little => out.extend_from_slice(&q.to_le_bytes()),
            ByteOrder::Big => out.extend_from_slice(&q.to_be_bytes()),
        }
    }
    out
}

pub(crate) fn quantize(sample: f64) -> i16 {
    (sample * 32768.0)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(fields: &str) -> Vec<u8> {
        let mut h = format!("NIST_1A\n   1024\n{fields}end_head\n").into_bytes();
        h.resize(1024, b' ');
        h
    }

    #[test]
    fn zero_signal() {
        let mut bytes =
            header("sample_count -i 4\nsample_rate -i 16000\nsample_byte_format -s2 01\nsample_n_bytes -i 2\n");
        bytes.extend_from_slice(&[0; 8]);
        let audio = parse_sphere(&bytes).unwrap();
        assert_eq!(audio.sample_rate, 16000);
        assert_eq!(audio.samples, vec![0.0; 4]);
    }

    #[test]
    fn little_endian_half_scale() {
        let mut bytes = header("sample_count -i 1\nsample_rate -i 16000\nsample_byte_format -s2 01\n");
        bytes.extend_from_slice(&[0x00, 0x40]);
        assert_eq!(parse_sphere(&bytes).unwrap().samples, vec![0.5]);
    }

    #[test]
    fn big_endian_half_scale() {
        let mut bytes = header("sample_count -i 1\nsample_rate -i 8000\nsample_byte_format -s2 10\n");
        bytes.extend_from_slice(&[0x40, 0x00]);
        let audio = parse_sphere(&bytes).unwrap();
        assert_eq!(audio.samples, vec![0.5]);
        assert_eq!(audio.sample_rate, 8000);
    }

    #[test]
    fn short_body_is_length_mismatch() {
        let mut bytes = header("sample_count -i 100\nsample_rate -i 16000\nsample_byte_format -s2 01\n");
        bytes.extend_from_slice(&[0; 100]);
        match parse_sphere(&bytes) {
            Err(SphereError::LengthMismatch {
                expected, actual_bytes, ..
            }) => {
                assert_eq!(expected, 100);
                assert_eq!(actual_bytes, 100);
            }
            other => panic!("expected length mismatch, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        assert_eq!(parse_sphere(b"RIFF....").unwrap_err(), SphereError::BadMagic);
        assert_eq!(parse_sphere(b"").unwrap_err(), SphereError::BadMagic);
    }

    #[test]
    fn unsupported_coding_names_field() {
        let mut bytes = header(
            "sample_count -i 0\nsample_rate -i 16000\nsample_byte_format -s2 01\nsample_coding -s26 pcm,embedded-shorten-v2.00\n",
        );
        bytes.truncate(1024);
        match parse_sphere(&bytes) {
            Err(SphereError::Field { field, .. }) => assert_eq!(field, "sample_coding"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unsupported_width_names_field() {
        let bytes = header("sample_count -i 0\nsample_rate -i 16000\nsample_byte_format -s2 01\nsample_n_bytes -i 1\n");
        match parse_sphere(&bytes) {
            Err(SphereError::Field { field, .. }) => assert_eq!(field, "sample_n_bytes"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_terminator() {
        let mut bytes = b"NIST_1A\n   1024\nsample_count -i 0\n".to_vec();
        bytes.resize(1024, b' ');
        assert!(matches!(parse_sphere(&bytes), Err(SphereError::Field { field, .. }) if field == "end_head"));
    }

    #[test]
    fn truncated_header() {
        let bytes = b"NIST_1A\n   1024\nend_head\n".to_vec();
        assert!(matches!(
            parse_sphere(&bytes),
            Err(SphereError::TruncatedHeader { declared: 1024, .. })
        ));
    }
}
