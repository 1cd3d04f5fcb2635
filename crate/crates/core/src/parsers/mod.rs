//! Format-specific transcript readers.
//!
//! Every reader turns the raw bytes of one transcription file into a
//! [`ParsedDocument`]: a format-neutral list of tiers, each holding
//! time-anchored annotations with fully resolved millisecond boundaries.
//! Nothing is merged, normalised or dropped here beyond what the source
//! format itself implies; that happens in [`crate::unify`].

mod cha;
mod eaf;
mod exb;
mod textgrid;
pub mod time;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cha::parse_cha;
pub use eaf::parse_eaf;
pub use exb::parse_exb;
pub use textgrid::parse_textgrid;

/// Bytes of a file inspected by [`detect_format`].
pub const DETECT_HEAD_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Format {
    Eaf,
    Cha,
    TextGrid,
    Exb,
}

impl Format {
    fn from_extension(path: &Path) -> Option<Format> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "eaf" => Some(Format::Eaf),
            "cha" => Some(Format::Cha),
            "textgrid" => Some(Format::TextGrid),
            "exb" => Some(Format::Exb),
            _ => None,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Eaf => "EAF",
            Format::Cha => "CHA",
            Format::TextGrid => "TEXTGRID",
            Format::Exb => "EXB",
        })
    }
}

/// Position of an annotation inside a [`ParsedDocument`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotationRef {
    pub tier: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub begin_ms: i64,
    pub end_ms: i64,
    /// Verbatim annotation content.
    pub text: String,
    #[serde(default)]
    pub participant_hint: String,
    /// Annotation this one depends on (ELAN reference annotations, CHAT
    /// dependent tiers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<AnnotationRef>,
    /// Set when the source carried no timing and the span was assigned.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub untimed: bool,
}

impl RawAnnotation {
    pub fn new(begin_ms: i64, end_ms: i64, text: impl Into<String>) -> Self {
        RawAnnotation {
            begin_ms,
            end_ms,
            text: text.into(),
            participant_hint: String::new(),
            parent: None,
            untimed: false,
        }
    }

    pub fn with_participant(mut self, participant: impl Into<String>) -> Self {
        self.participant_hint = participant.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTier {
    pub tier_id: String,
    #[serde(default)]
    pub participant: String,
    #[serde(default)]
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_tier: Option<String>,
    pub annotations: Vec<RawAnnotation>,
}

impl RawTier {
    pub fn new(tier_id: impl Into<String>) -> Self {
        RawTier {
            tier_id: tier_id.into(),
            participant: String::new(),
            category: String::new(),
            parent_tier: None,
            annotations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDocument {
    pub source_id: String,
    pub format: Format,
    pub tiers: Vec<RawTier>,
    #[serde(default)]
    pub media_refs: Vec<String>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl ParsedDocument {
    pub fn new(source_id: impl Into<String>, format: Format) -> Self {
        ParsedDocument {
            source_id: source_id.into(),
            format,
            tiers: Vec::new(),
            media_refs: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn tier_index(&self, tier_id: &str) -> Option<usize> {
        self.tiers.iter().position(|t| t.tier_id == tier_id)
    }

    pub fn annotation(&self, r: AnnotationRef) -> Option<&RawAnnotation> {
        self.tiers.get(r.tier)?.annotations.get(r.index)
    }

    pub fn annotation_count(&self) -> usize {
        self.tiers.iter().map(|t| t.annotations.len()).sum()
    }

    /// Checks the structural invariants every reader guarantees.
    pub fn validate(&self) -> Result<()> {
        if self.source_id.is_empty() {
            return Err(Error::InvalidConfig("document source_id is empty".into()));
        }
        let mut seen = HashSet::new();
        for tier in &self.tiers {
            if !seen.insert(tier.tier_id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate tier id {}", tier.tier_id)));
            }
        }
        for tier in &self.tiers {
            if let Some(parent) = &tier.parent_tier {
                if !seen.contains(parent.as_str()) {
                    return Err(Error::DanglingTierRef {
                        tier: tier.tier_id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
            for a in &tier.annotations {
                if a.begin_ms < 0 || a.begin_ms > a.end_ms {
                    return Err(Error::InvertedSpan {
                        tier: tier.tier_id.clone(),
                        begin_ms: a.begin_ms,
                        end_ms: a.end_ms,
                    });
                }
                if let Some(p) = a.parent {
                    if self.annotation(p).is_none() {
                        return Err(Error::InvalidConfig(format!(
                            "annotation on tier {} has an out-of-range parent",
                            tier.tier_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Picks the reader for a file from its first bytes, using the extension
/// only to break ties between content rules.
pub fn detect_format(path: &Path, head: &[u8]) -> Result<Format> {
    let head = &head[..head.len().min(DETECT_HEAD_LEN)];
    let text = decode_lossy(head);
    let mut matches = Vec::new();
    if text.contains("<ANNOTATION_DOCUMENT") {
        matches.push(Format::Eaf);
    }
    if text.contains("<basic-transcription") {
        matches.push(Format::Exb);
    }
    if text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with('@'))
    {
        matches.push(Format::Cha);
    }
    if text.contains("File type = \"ooTextFile\"") || text.contains("\"TextGrid\"") {
        matches.push(Format::TextGrid);
    }
    match matches.as_slice() {
        [] => Err(Error::UnknownFormat(path.to_path_buf())),
        [only] => Ok(*only),
        several => {
            let by_ext = Format::from_extension(path);
            Ok(by_ext
                .filter(|f| several.contains(f))
                .unwrap_or(several[0]))
        }
    }
}

/// Parses `bytes` with the reader for `format`.
pub fn parse_bytes(bytes: &[u8], format: Format, source_id: &str) -> Result<ParsedDocument> {
    let doc = match format {
        Format::Eaf => parse_eaf(bytes, source_id)?,
        Format::Cha => parse_cha(bytes, source_id)?,
        Format::TextGrid => parse_textgrid(bytes, source_id)?,
        Format::Exb => parse_exb(bytes, source_id)?,
    };
    doc.validate()?;
    Ok(doc)
}

/// Reads, detects and parses one file. The source id is the file stem.
pub fn parse_file(path: &Path) -> Result<ParsedDocument> {
    let bytes = std::fs::read(path)?;
    let format = detect_format(path, &bytes)?;
    parse_bytes(&bytes, format, &source_id_for(path))
}

pub fn source_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "source".to_string())
}

/// Decodes a text file, honouring UTF-8 and UTF-16 byte-order marks.
pub(crate) fn decode_text(bytes: &[u8]) -> Result<String> {
    match bytes {
        [0xFF, 0xFE, rest @ ..] => decode_utf16(rest, u16::from_le_bytes),
        [0xFE, 0xFF, rest @ ..] => decode_utf16(rest, u16::from_be_bytes),
        [0xEF, 0xBB, 0xBF, rest @ ..] => {
            String::from_utf8(rest.to_vec()).map_err(|e| Error::Encoding(e.to_string()))
        }
        _ => String::from_utf8(bytes.to_vec()).map_err(|e| Error::Encoding(e.to_string())),
    }
}

fn decode_utf16(bytes: &[u8], unit: fn([u8; 2]) -> u16) -> Result<String> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Encoding("odd number of bytes in UTF-16 text".into()));
    }
    let units: Vec<u16> = bytes.chunks_exact(2).map(|c| unit([c[0], c[1]])).collect();
    String::from_utf16(&units).map_err(|e| Error::Encoding(e.to_string()))
}

fn decode_lossy(head: &[u8]) -> String {
    match head {
        [0xFF, 0xFE, rest @ ..] | [0xFE, 0xFF, rest @ ..] => {
            let le = head[0] == 0xFF;
            let units: Vec<u16> = rest
                .chunks_exact(2)
                .map(|c| if le { u16::from_le_bytes([c[0], c[1]]) } else { u16::from_be_bytes([c[0], c[1]]) })
                .collect();
            String::from_utf16_lossy(&units)
        }
        [0xEF, 0xBB, 0xBF, rest @ ..] => String::from_utf8_lossy(rest).into_owned(),
        _ => String::from_utf8_lossy(head).into_owned(),
    }
}

/// Makes tier ids unique by suffixing repeats with `#2`, `#3`, ...
pub(crate) fn unique_tier_id(existing: &[RawTier], wanted: &str) -> String {
    if !existing.iter().any(|t| t.tier_id == wanted) {
        return wanted.to_string();
    }
    (2..)
        .map(|k| format!("{wanted}#{k}"))
        .find(|id| !existing.iter().any(|t| &t.tier_id == id))
        .expect("unbounded suffix search")
}

/// File name component of a media URL or path, e.g. `file:///a/b/conv01.wav` -> `conv01.wav`.
pub(crate) fn media_file_name(url: &str) -> String {
    let trimmed = url.trim().trim_end_matches(['/', '\\']);
    trimmed
        .rsplit(['/', '\\'])
        .next()
        .unwrap_or(trimmed)
        .to_string()
}
