//! Utterance cleaning and word segmentation.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UNK;

static ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(#[0-9]{1,7}|#[xX][0-9a-fA-F]{1,6}|amp|lt|gt|quot|apos|nbsp);").unwrap());
static XML_TAG: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"<!--.*?-->|<!\[CDATA\[|\]\]>|</?[A-Za-z][A-Za-z0-9_:.-]*(?:\s+[A-Za-z_:][A-Za-z0-9_:.-]*\s*=\s*(?:"[^"]*"|'[^']*'))*\s*/?>"#,
    )
    .unwrap()
});
static CHAT_EVENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|\s)&=([^\s\[\]]+)").unwrap());
static DOUBLE_PAREN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(\(([^()\[\]]+)\)\)").unwrap());
static CANONICAL_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\[[a-z0-9_]+\]$").unwrap());

/// How non-verbal markers are rewritten into bracketed tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagPolicy {
    /// Raw marker -> canonical tag such as `[laugh]`. Markers match whole
    /// whitespace-delimited stretches of text.
    pub canonical_map: BTreeMap<String, String>,
    /// Also bracket unmapped CHAT `&=event` and `((event))` markers.
    pub bracket_unknown: bool,
}

impl Default for TagPolicy {
    fn default() -> Self {
        let pairs = [
            ("((laughs))", "[laugh]"),
            ("((laughter))", "[laugh]"),
            ("(laughs)", "[laugh]"),
            ("[laughs]", "[laugh]"),
            ("[laughter]", "[laugh]"),
            ("&=laughs", "[laugh]"),
            ("&=laugh", "[laugh]"),
            ("((breath))", "[breath]"),
            ("((breathes))", "[breath]"),
            ("&=breathes", "[breath]"),
            ("&=inhales", "[breath]"),
            ("((coughs))", "[cough]"),
            ("&=coughs", "[cough]"),
            ("[cough]", "[cough]"),
        ];
        TagPolicy {
            canonical_map: pairs.iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect(),
            bracket_unknown: true,
        }
    }
}

impl TagPolicy {
    /// No marker rewriting at all.
    pub fn none() -> Self {
        TagPolicy { canonical_map: BTreeMap::new(), bracket_unknown: false }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.canonical_map {
            if k.trim().is_empty() {
                return Err(Error::InvalidConfig("empty marker in tag map".into()));
            }
            if !CANONICAL_TAG.is_match(v) {
                return Err(Error::InvalidConfig(format!(
                    "canonical tag {v:?} for {k:?} is not a bracketed lowercase ASCII token"
                )));
            }
        }
        Ok(())
    }

    fn apply_map(&self, s: &str) -> String {
        let mut entries: Vec<(String, &str)> = self
            .canonical_map
            .iter()
            .map(|(k, v)| (collapse_ws(k), v.as_str()))
            .filter(|(k, v)| !k.is_empty() && k != v)
            .collect();
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        let mut out = s.to_string();
        for (key, value) in entries {
            out = replace_delimited(&out, &key, value);
        }
        out
    }
}

/// Replaces occurrences of `key` bounded by whitespace or the string ends.
fn replace_delimited(s: &str, key: &str, value: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut last = 0;
    for (i, _) in s.match_indices(key) {
        if i < last {
            continue;
        }
        let before_ok = s[..i].chars().next_back().is_none_or(char::is_whitespace);
        let after_ok = s[i + key.len()..].chars().next().is_none_or(char::is_whitespace);
        if before_ok && after_ok {
            out.push_str(&s[last..i]);
            out.push_str(value);
            last = i + key.len();
        }
    }
    out.push_str(&s[last..]);
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn decode_entities(s: &str) -> String {
    ENTITY
        .replace_all(s, |c: &Captures| {
            let name = &c[1];
            let decoded = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ => {
                    let code = if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        name[1..].parse().ok()
                    };
                    code.filter(|&c| c != 0).and_then(char::from_u32)
                }
            };
            decoded.map(String::from).unwrap_or_else(|| c[0].to_string())
        })
        .into_owned()
}

fn bracket_unknown_markers(s: &str) -> String {
    let s = CHAT_EVENT.replace_all(s, |c: &Captures| format!("{}[{}]", &c[1], c[2].to_lowercase()));
    DOUBLE_PAREN
        .replace_all(&s, |c: &Captures| {
            let inner = c[1].trim().to_lowercase();
            if inner.is_empty() {
                c[0].to_string()
            } else {
                format!("[{}]", inner.split_whitespace().collect::<Vec<_>>().join("_"))
            }
        })
        .into_owned()
}

fn clean_once(s: &str, tags: &TagPolicy) -> String {
    let s = decode_entities(s);
    let s = XML_TAG.replace_all(&s, " ");
    let s = collapse_ws(&s);
    let s = tags.apply_map(&s);
    let s = if tags.bracket_unknown { bracket_unknown_markers(&s) } else { s };
    collapse_ws(&s)
}

/// Cleans one utterance: decodes XML entities, strips residual markup,
/// collapses whitespace and rewrites non-verbal markers. Text in any
/// script is otherwise left alone. Returns an empty string when nothing
/// remains; callers substitute [`UNK`].
pub fn normalize_utterance_text(raw: &str, tags: &TagPolicy) -> String {
    let mut current = raw.to_string();
    // Each pass only shortens or rewrites markers; a fixpoint comes quickly.
    for _ in 0..8 {
        let next = clean_once(&current, tags);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Like [`normalize_utterance_text`] but never returns an empty string.
pub fn normalize_or_unk(raw: &str, tags: &TagPolicy) -> String {
    let s = normalize_utterance_text(raw, tags);
    if s.is_empty() {
        UNK.to_string()
    } else {
        s
    }
}

/// Splits an utterance into word tokens.
pub trait Segmenter: Send + Sync {
    fn segment(&self, text: &str) -> Vec<String>;
}

impl<F> Segmenter for F
where
    F: Fn(&str) -> Vec<String> + Send + Sync,
{
    fn segment(&self, text: &str) -> Vec<String> {
        self(text)
    }
}

/// Whitespace segmentation with edge punctuation stripped. Bracketed tags
/// such as `[laugh]` stay whole; word-internal apostrophes and hyphens
/// survive because only token edges are trimmed.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceSegmenter;

impl Segmenter for WhitespaceSegmenter {
    fn segment(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .filter_map(|piece| {
                let t = piece.trim_matches(|c: char| !c.is_alphanumeric() && c != '[' && c != ']');
                let t = if t.len() >= 2 && t.starts_with('[') && t.ends_with(']') {
                    t
                } else {
                    t.trim_matches(|c: char| !c.is_alphanumeric())
                };
                (!t.is_empty()).then(|| t.to_string())
            })
            .collect()
    }
}

pub fn tokenize(utterance: &str, segmenter: &dyn Segmenter, lowercase: bool) -> Vec<String> {
    let tokens = segmenter.segment(utterance);
    if lowercase {
        tokens.into_iter().map(|t| t.to_lowercase()).collect()
    } else {
        tokens
    }
}

pub fn is_bracketed_tag(token: &str) -> bool {
    token.len() >= 2 && token.starts_with('[') && token.ends_with(']')
}
