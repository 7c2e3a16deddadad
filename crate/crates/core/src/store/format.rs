//! Store, dictionary and definition files.
//!
//! Binary layout (all three kinds share it):
//!
//! ```text
//! embstore 1\n                  magic and format version
//! kind "store"\n                "store" | "dictionary" | "definition"
//! dim 512\n
//! count 3\n
//! normalized true\n
//! center false\n
//! label "..."\n                 definition only (JSON string)
//! base_text "..."\n             definition only (JSON string)
//! history [...]\n               definition only (JSON array, one line)
//! end\n
//! [dim x f32 LE]                center vector, when center is true
//! count x { u32 LE byte length, UTF-8 text, dim x f32 LE }
//! ```
//!
//! Header values are JSON literals. Files that do not start with the magic
//! line are read as plain text: one entry per line, the text, a tab, then
//! whitespace-separated decimals. Blank lines and lines starting with `#`
//! are skipped. Plain-text files cannot carry a center.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingStore, StoreError};
use crate::concepts::{ConceptDictionary, ConceptError, UNIT_NORM_EXACT, UNIT_NORM_SLACK};
use crate::refine::FeedbackAdjustment;
use crate::vectormath::VectorError;

pub const FORMAT_MAGIC: &str = "embstore";
pub const FORMAT_VERSION: u32 = 1;

/// A refined class definition as handed to a downstream detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitionRecord {
    pub label: String,
    pub base_text: String,
    /// Adjustments in application order; entry `i` produced iteration `i + 1`.
    pub history: Vec<FeedbackAdjustment>,
    pub embedding: Vec<f32>,
}

impl DefinitionRecord {
    pub fn embedding_f64(&self) -> Vec<f64> {
        self.embedding.iter().map(|&v| f64::from(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Store,
    Dictionary,
    Definition,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Store => "store",
            Kind::Dictionary => "dictionary",
            Kind::Definition => "definition",
        }
    }
}

#[derive(Debug, Default)]
struct Header {
    kind: Option<String>,
    dim: Option<usize>,
    count: Option<usize>,
    normalized: Option<bool>,
    center: Option<bool>,
    label: Option<String>,
    base_text: Option<String>,
    history: Option<Vec<FeedbackAdjustment>>,
}

struct RawFile {
    header: Header,
    center: Option<Vec<f32>>,
    entries: Vec<(String, Vec<f32>)>,
}

fn header_line(out: &mut Vec<u8>, key: &str, value: &impl Serialize) {
    out.extend_from_slice(key.as_bytes());
    out.push(b' ');
    // serializing plain data to a Vec cannot fail
    out.extend_from_slice(&serde_json::to_vec(value).expect("serializable header value"));
    out.push(b'\n');
}

fn push_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode(
    kind: Kind,
    dim: usize,
    normalized: bool,
    center: Option<&[f32]>,
    extra: &[(&str, serde_json::Value)],
    entries: &[(&str, &[f32])],
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("{FORMAT_MAGIC} {FORMAT_VERSION}\n").as_bytes());
    header_line(&mut out, "kind", &kind.name());
    header_line(&mut out, "dim", &dim);
    header_line(&mut out, "count", &entries.len());
    header_line(&mut out, "normalized", &normalized);
    header_line(&mut out, "center", &center.is_some());
    for (k, v) in extra {
        header_line(&mut out, k, v);
    }
    out.extend_from_slice(b"end\n");
    if let Some(c) = center {
        push_f32s(&mut out, c.iter().copied());
    }
    for (text, values) in entries {
        let bytes = text.as_bytes();
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(bytes);
        push_f32s(&mut out, values.iter().copied());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| StoreError::parse("unexpected end of file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn line(&mut self) -> Result<&'a str, StoreError> {
        let rest = &self.buf[self.pos..];
        let n = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| StoreError::parse("unterminated header line"))?;
        let line = std::str::from_utf8(&rest[..n])
            .map_err(|_| StoreError::parse("header is not UTF-8"))?;
        self.pos += n + 1;
        Ok(line)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, StoreError> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| StoreError::parse("dimension overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

fn json_value<T: for<'de> Deserialize<'de>>(key: &str, raw: &str) -> Result<T, StoreError> {
    serde_json::from_str(raw).map_err(|e| StoreError::parse(format!("header {key}: {e}")))
}

fn decode_binary(buf: &[u8]) -> Result<RawFile, StoreError> {
    let mut cur = Cursor { buf, pos: 0 };
    let magic = cur.line()?;
    let version = magic
        .strip_prefix(FORMAT_MAGIC)
        .map(str::trim)
        .ok_or_else(|| StoreError::parse("missing magic line"))?;
    if version != FORMAT_VERSION.to_string() {
        return Err(StoreError::parse(format!("unsupported format version {version:?}")));
    }
    let mut h = Header::default();
    loop {
        let line = cur.line()?;
        if line == "end" {
            break;
        }
        let (key, raw) = line
            .split_once(' ')
            .ok_or_else(|| StoreError::parse(format!("malformed header line {line:?}")))?;
        let dup = match key {
            "kind" => h.kind.replace(json_value(key, raw)?).is_some(),
            "dim" => h.dim.replace(json_value(key, raw)?).is_some(),
            "count" => h.count.replace(json_value(key, raw)?).is_some(),
            "normalized" => h.normalized.replace(json_value(key, raw)?).is_some(),
            "center" => h.center.replace(json_value(key, raw)?).is_some(),
            "label" => h.label.replace(json_value(key, raw)?).is_some(),
            "base_text" => h.base_text.replace(json_value(key, raw)?).is_some(),
            "history" => h.history.replace(json_value(key, raw)?).is_some(),
            other => return Err(StoreError::parse(format!("unknown header key {other:?}"))),
        };
        if dup {
            return Err(StoreError::parse(format!("repeated header key {key:?}")));
        }
    }
    let dim = h.dim.ok_or_else(|| StoreError::parse("header lacks dim"))?;
    let count = h.count.ok_or_else(|| StoreError::parse("header lacks count"))?;
    if dim == 0 {
        return Err(StoreError::parse("dim must be positive"));
    }
    let center = if h.center.unwrap_or(false) {
        Some(cur.f32s(dim)?)
    } else {
        None
    };
    let mut entries = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len_bytes = cur.take(4)?;
        let len = u32::from_le_bytes([len_bytes[0], len_bytes[1], len_bytes[2], len_bytes[3]]) as usize;
        let text = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| StoreError::parse("entry text is not UTF-8"))?
            .to_owned();
        entries.push((text, cur.f32s(dim)?));
    }
    if cur.pos != buf.len() {
        return Err(StoreError::parse(format!(
            "{} trailing bytes after {count} entries",
            buf.len() - cur.pos
        )));
    }
    Ok(RawFile {
        header: h,
        center,
        entries,
    })
}

fn decode_plain(buf: &[u8]) -> Result<RawFile, StoreError> {
    let text = std::str::from_utf8(buf).map_err(|_| StoreError::parse("file is neither binary store nor UTF-8 text"))?;
    let mut entries = Vec::new();
    let mut dim = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, values) = line
            .split_once('\t')
            .ok_or_else(|| StoreError::parse(format!("line {}: expected text, a tab, then values", n + 1)))?;
        let values = values
            .split_whitespace()
            .map(|v| v.parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| StoreError::parse(format!("line {}: {e}", n + 1)))?;
        if values.is_empty() {
            return Err(StoreError::parse(format!("line {}: no values", n + 1)));
        }
        dim.get_or_insert(values.len());
        entries.push((label.trim().to_owned(), values));
    }
    let dim = dim.ok_or_else(|| StoreError::parse("no entries"))?;
    Ok(RawFile {
        header: Header {
            dim: Some(dim),
            count: Some(entries.len()),
            ..Header::default()
        },
        center: None,
        entries,
    })
}

fn decode(buf: &[u8], expected: Kind) -> Result<RawFile, StoreError> {
    let raw = if buf.starts_with(format!("{FORMAT_MAGIC} ").as_bytes()) {
        decode_binary(buf)?
    } else if expected == Kind::Definition {
        return Err(StoreError::parse("definition files must use the binary layout"));
    } else {
        decode_plain(buf)?
    };
    if let Some(kind) = &raw.header.kind {
        if kind != expected.name() {
            return Err(StoreError::parse(format!(
                "expected a {} file, found kind {kind:?}",
                expected.name()
            )));
        }
    }
    Ok(raw)
}

fn read(path: &Path) -> Result<Vec<u8>, StoreError> {
    std::fs::read(path).map_err(|e| StoreError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    std::fs::write(path, bytes).map_err(|e| StoreError::io(path, e))
}

pub fn encode_store(store: &EmbeddingStore) -> Vec<u8> {
    let entries: Vec<(&str, &[f32])> = store.entries().collect();
    encode(Kind::Store, store.dim, store.normalized, None, &[], &entries)
}

pub fn decode_store(buf: &[u8]) -> Result<EmbeddingStore, StoreError> {
    let raw = decode(buf, Kind::Store)?;
    if raw.center.is_some() {
        return Err(StoreError::parse("embedding stores cannot carry a center"));
    }
    let dim = raw.header.dim.unwrap_or_default();
    EmbeddingStore::from_entries(dim, raw.header.normalized.unwrap_or(false), raw.entries)
}

pub fn load_store(path: impl AsRef<Path>) -> Result<EmbeddingStore, StoreError> {
    decode_store(&read(path.as_ref())?)
}

pub fn save_store(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<(), StoreError> {
    write(path.as_ref(), &encode_store(store))
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// Writes the dictionary in single precision.
pub fn encode_dictionary(dict: &ConceptDictionary) -> Vec<u8> {
    let vectors: Vec<Vec<f32>> = dict.vectors().iter().map(|v| to_f32(v)).collect();
    let entries: Vec<(&str, &[f32])> = dict
        .labels()
        .iter()
        .map(String::as_str)
        .zip(vectors.iter().map(Vec::as_slice))
        .collect();
    let center = dict.center().map(to_f32);
    encode(Kind::Dictionary, dict.dim(), true, center.as_deref(), &[], &entries)
}

/// Reads a dictionary. Vectors off unit norm by more than single-precision
/// rounding (but within the load slack) are renormalized and rounded back to
/// single precision, so a decoded dictionary re-encodes bit for bit.
pub fn decode_dictionary(buf: &[u8]) -> Result<ConceptDictionary, StoreError> {
    let raw = decode(buf, Kind::Dictionary)?;
    let dim = raw.header.dim.unwrap_or_default();
    let mut labels = Vec::with_capacity(raw.entries.len());
    let mut vectors = Vec::with_capacity(raw.entries.len());
    for (label, values) in raw.entries {
        if values.len() != dim {
            return Err(StoreError::DimInconsistent {
                text: label,
                expected: dim,
                found: values.len(),
            });
        }
        let wide = widen(&values);
        let norm = wide.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_SLACK {
            return Err(ConceptError::NonUnitConcept { label, norm }.into());
        }
        let wide = if (norm - 1.0).abs() > UNIT_NORM_EXACT {
            widen(&to_f32(&wide.iter().map(|x| x / norm).collect::<Vec<_>>()))
        } else {
            wide
        };
        labels.push(label);
        vectors.push(wide);
    }
    let center = raw.center.as_deref().map(widen);
    Ok(ConceptDictionary::new(labels, vectors, center)?)
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<ConceptDictionary, StoreError> {
    decode_dictionary(&read(path.as_ref())?)
}

pub fn save_dictionary(dict: &ConceptDictionary, path: impl AsRef<Path>) -> Result<(), StoreError> {
    write(path.as_ref(), &encode_dictionary(dict))
}

pub fn encode_definition(def: &DefinitionRecord) -> Vec<u8> {
    let extra = [
        ("label", serde_json::Value::from(def.label.clone())),
        ("base_text", serde_json::Value::from(def.base_text.clone())),
        (
            "history",
            serde_json::to_value(&def.history).expect("serializable history"),
        ),
    ];
    encode(
        Kind::Definition,
        def.embedding.len(),
        true,
        None,
        &extra,
        &[(def.label.as_str(), def.embedding.as_slice())],
    )
}

pub fn decode_definition(buf: &[u8]) -> Result<DefinitionRecord, StoreError> {
    let raw = decode(buf, Kind::Definition)?;
    let h = raw.header;
    let label = h.label.ok_or_else(|| StoreError::parse("definition lacks label"))?;
    let base_text = h.base_text.ok_or_else(|| StoreError::parse("definition lacks base_text"))?;
    let history = h.history.unwrap_or_default();
    let mut entries = raw.entries.into_iter();
    let (text, embedding) = match (entries.next(), entries.next()) {
        (Some(e), None) => e,
        _ => return Err(StoreError::parse("definition must hold exactly one entry")),
    };
    if text != label {
        return Err(StoreError::parse(format!(
            "definition entry {text:?} does not match label {label:?}"
        )));
    }
    if embedding.iter().any(|v| !v.is_finite()) {
        return Err(VectorError::NonFinite(0).into());
    }
    Ok(DefinitionRecord {
        label,
        base_text,
        history,
        embedding,
    })
}

pub fn load_definition(path: impl AsRef<Path>) -> Result<DefinitionRecord, StoreError> {
    decode_definition(&read(path.as_ref())?)
}

pub fn save_definition(def: &DefinitionRecord, path: impl AsRef<Path>) -> Result<(), StoreError> {
    write(path.as_ref(), &encode_definition(def))
}
