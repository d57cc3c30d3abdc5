//! EEF1 binary embedding files and the JSON debugging mirror.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "EEF1" | u32 version = 1 | u32 dim | u32 count
//! count x ( u32 label_len | label bytes (UTF-8) | dim x f32 )
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{normalize, Embedding, EmbeddingError, LabelEmbeddingSet, Result, UNIT_NORM_TOLERANCE};
use crate::text::canonical_label;

pub const EEF1_MAGIC: &[u8; 4] = b"EEF1";
pub const EEF1_VERSION: u32 = 1;
pub const EEF1_HEADER_LEN: usize = 16;

/// A decoded set plus the number of vectors that had to be re-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedEmbeddings {
    pub set: LabelEmbeddingSet<f32>,
    pub renormalized: usize,
}

fn format_err(msg: impl Into<String>) -> EmbeddingError {
    EmbeddingError::Format(msg.into())
}

fn u32_len(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| format_err(format!("{what} {n} exceeds u32")))
}

pub fn encode_eef1(set: &LabelEmbeddingSet<f32>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(EEF1_HEADER_LEN + set.len() * (8 + 4 * set.dim()));
    out.extend_from_slice(EEF1_MAGIC);
    out.extend_from_slice(&EEF1_VERSION.to_le_bytes());
    out.extend_from_slice(&u32_len(set.dim(), "dim")?.to_le_bytes());
    out.extend_from_slice(&u32_len(set.len(), "entry count")?.to_le_bytes());
    for (label, e) in set.iter() {
        out.extend_from_slice(&u32_len(label.len(), "label length")?.to_le_bytes());
        out.extend_from_slice(label.as_bytes());
        for v in e.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or_else(|| format_err(format!("truncated payload reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Decodes a complete EEF1 buffer. Trailing bytes are rejected.
pub fn decode_eef1(bytes: &[u8]) -> Result<LoadedEmbeddings> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != EEF1_MAGIC {
        return Err(format_err(format!("bad magic {magic:?}")));
    }
    let version = r.u32("version")?;
    if version != EEF1_VERSION {
        return Err(format_err(format!("unsupported EEF1 version {version}")));
    }
    let dim = r.u32("dim")? as usize;
    if dim == 0 {
        return Err(format_err("dim must be positive"));
    }
    let count = r.u32("entry count")? as usize;
    let mut builder = SetBuilder::new(dim);
    for i in 0..count {
        let len = r.u32("label length")? as usize;
        let raw = r.take(len, "label")?;
        let label = std::str::from_utf8(raw)
            .map_err(|e| format_err(format!("entry {i}: label is not UTF-8: {e}")))?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            values.push(r.f32("vector")?);
        }
        builder.push(label, values)?;
    }
    if r.pos != bytes.len() {
        return Err(format_err(format!(
            "{} trailing bytes after {count} entries",
            bytes.len() - r.pos
        )));
    }
    Ok(builder.finish())
}

/// Shared validation for both file encodings.
struct SetBuilder {
    set: LabelEmbeddingSet<f32>,
    renormalized: usize,
}

impl SetBuilder {
    fn new(dim: usize) -> Self {
        Self {
            set: LabelEmbeddingSet::new(dim),
            renormalized: 0,
        }
    }

    fn push(&mut self, label: &str, values: Vec<f32>) -> Result<()> {
        let label = canonical_label(label);
        if values.len() != self.set.dim() {
            return Err(format_err(format!(
                "{label:?}: dim mismatch, expected {}, got {}",
                self.set.dim(),
                values.len()
            )));
        }
        let e = Embedding::new(values).map_err(|e| format_err(format!("{label:?}: {e}")))?;
        let e = if (e.norm() - 1.0).abs() > UNIT_NORM_TOLERANCE {
            self.renormalized += 1;
            normalize(&e).map_err(|err| format_err(format!("{label:?}: {err}")))?
        } else {
            e
        };
        self.set.insert(&label, e).map_err(|err| match err {
            EmbeddingError::DuplicateLabel(l) => format_err(format!("duplicate label {l:?}")),
            EmbeddingError::EmptyLabel => format_err("empty label"),
            other => other,
        })
    }

    fn finish(self) -> LoadedEmbeddings {
        if self.renormalized > 0 {
            warn!("re-normalized {} embedding(s) on load", self.renormalized);
        }
        LoadedEmbeddings {
            set: self.set,
            renormalized: self.renormalized,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonMirror {
    dim: usize,
    entries: Vec<JsonEntry>,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    label: String,
    values: Vec<f32>,
}

pub fn encode_json_mirror(set: &LabelEmbeddingSet<f32>) -> Result<String> {
    let doc = JsonMirror {
        dim: set.dim(),
        entries: set
            .iter()
            .map(|(label, e)| JsonEntry {
                label: label.to_string(),
                values: e.values().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| format_err(e.to_string()))
}

pub fn decode_json_mirror(text: &str) -> Result<LoadedEmbeddings> {
    let doc: JsonMirror =
        serde_json::from_str(text).map_err(|e| format_err(format!("invalid JSON mirror: {e}")))?;
    if doc.dim == 0 {
        return Err(format_err("dim must be positive"));
    }
    let mut builder = SetBuilder::new(doc.dim);
    for entry in doc.entries {
        builder.push(&entry.label, entry.values)?;
    }
    Ok(builder.finish())
}

/// Reads an EEF1 file, or its JSON mirror when the content starts with `{`.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<LoadedEmbeddings> {
    let bytes = fs::read(path.as_ref())?;
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        let text = std::str::from_utf8(&bytes).map_err(|e| format_err(e.to_string()))?;
        decode_json_mirror(text)
    } else {
        decode_eef1(&bytes)
    }
}

pub fn save_embeddings(set: &LabelEmbeddingSet<f32>, path: impl AsRef<Path>) -> Result<PathBuf> {
    let bytes = encode_eef1(set)?;
    fs::write(path.as_ref(), bytes)?;
    Ok(path.as_ref().to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabelEmbeddingSet<f32> {
        LabelEmbeddingSet::from_entries(
            2,
            [
                ("fire", Embedding::unit(vec![3.0f32, 4.0]).unwrap()),
                ("smoke", Embedding::unit(vec![1.0f32, 0.0]).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_set_is_header_only() {
        let bytes = encode_eef1(&LabelEmbeddingSet::new(8)).unwrap();
        assert_eq!(bytes.len(), EEF1_HEADER_LEN);
        assert_eq!(&bytes[..4], b"EEF1");
        assert_eq!(&bytes[4..], &[1, 0, 0, 0, 8, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn exact_bytes_for_one_entry() {
        let set = LabelEmbeddingSet::from_entries(
            2,
            [("ab", Embedding::unit(vec![1.0f32, 0.0]).unwrap())],
        )
        .unwrap();
        let bytes = encode_eef1(&set).unwrap();
        let mut expected = b"EEF1".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0, b'a', b'b']);
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&0.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn empty_file_round_trip() {
        let loaded = decode_eef1(&encode_eef1(&LabelEmbeddingSet::new(4)).unwrap()).unwrap();
        assert!(loaded.set.is_empty());
        assert_eq!(loaded.set.dim(), 4);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_eef1(&sample()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            decode_eef1(&bytes),
            Err(EmbeddingError::Format(_))
        ));
    }

    #[test]
    fn truncated_and_trailing() {
        let bytes = encode_eef1(&sample()).unwrap();
        for cut in [3, 10, EEF1_HEADER_LEN + 2, bytes.len() - 1] {
            assert!(matches!(
                decode_eef1(&bytes[..cut]),
                Err(EmbeddingError::Format(_))
            ));
        }
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            decode_eef1(&longer),
            Err(EmbeddingError::Format(_))
        ));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = encode_eef1(&sample()).unwrap();
        bytes[4] = 2;
        assert!(matches!(
            decode_eef1(&bytes),
            Err(EmbeddingError::Format(_))
        ));
    }

    #[test]
    fn duplicate_label_is_format_error() {
        let mut bytes = encode_eef1(&sample()).unwrap();
        // rename "smoke" to "fire " which canonicalizes onto the first label
        let pos = bytes.windows(5).position(|w| w == b"smoke").unwrap();
        bytes[pos..pos + 5].copy_from_slice(b"fire ");
        assert!(
            matches!(decode_eef1(&bytes), Err(EmbeddingError::Format(m)) if m.contains("duplicate"))
        );
    }

    #[test]
    fn off_unit_vectors_are_renormalized() {
        let mut bytes = b"EEF1".to_vec();
        bytes.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, b'x']);
        bytes.extend_from_slice(&3.0f32.to_le_bytes());
        bytes.extend_from_slice(&4.0f32.to_le_bytes());
        let loaded = decode_eef1(&bytes).unwrap();
        assert_eq!(loaded.renormalized, 1);
        assert_eq!(loaded.set.lookup("x").unwrap().values(), &[0.6f32, 0.8]);
    }

    #[test]
    fn zero_vector_in_file_is_rejected() {
        let mut bytes = b"EEF1".to_vec();
        bytes.extend_from_slice(&[1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, b'x']);
        bytes.extend_from_slice(&0.0f32.to_le_bytes());
        assert!(matches!(
            decode_eef1(&bytes),
            Err(EmbeddingError::Format(_))
        ));
    }

    #[test]
    fn json_mirror_round_trip_and_validation() {
        let set = sample();
        let text = encode_json_mirror(&set).unwrap();
        assert_eq!(decode_json_mirror(&text).unwrap().set, set);

        let raw = r#"{"dim": 2, "entries": [{"label": "a", "values": [0.0, 2.0]}]}"#;
        let loaded = decode_json_mirror(raw).unwrap();
        assert_eq!(loaded.renormalized, 1);
        assert_eq!(loaded.set.lookup("a").unwrap().values(), &[0.0f32, 1.0]);

        let bad = r#"{"dim": 3, "entries": [{"label": "a", "values": [0.0, 2.0]}]}"#;
        assert!(matches!(
            decode_json_mirror(bad),
            Err(EmbeddingError::Format(_))
        ));
    }

    #[test]
    fn file_round_trip_detects_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample();
        let bin = dir.path().join("set.eef1");
        save_embeddings(&set, &bin).unwrap();
        assert_eq!(load_embeddings(&bin).unwrap().set, set);
        let json = dir.path().join("set.json");
        fs::write(&json, encode_json_mirror(&set).unwrap()).unwrap();
        assert_eq!(load_embeddings(&json).unwrap().set, set);
        assert!(matches!(
            load_embeddings(dir.path().join("missing")),
            Err(EmbeddingError::Io(_))
        ));
    }
}
