//! CHAT (`.cha`) reader.
//!
//! Main lines (`*SPK:`) become annotations on one tier per speaker code,
//! dependent lines (`%xxx:`) go to one tier per dependent-tier code and
//! point back at the utterance they follow. Timing comes from NAK-delimited
//! `begin_end` bullets.

use super::{decode_text, AnnotationRef, Format, ParsedDocument, RawAnnotation, RawTier};
use crate::error::{Error, Result};

const BULLET: char = '\u{15}';

/// One logical line after continuation lines have been folded in.
struct Line {
    number: usize,
    text: String,
}

pub fn parse_cha(bytes: &[u8], source_id: &str) -> Result<ParsedDocument> {
    let text = decode_text(bytes)?;
    let lines = logical_lines(&text);
    if !lines.iter().any(|l| l.text.trim_end() == "@Begin") {
        return Err(Error::MissingHeader);
    }

    let mut doc = ParsedDocument::new(source_id, Format::Cha);
    let mut last_timed_end: i64 = 0;
    let mut last_main: Option<AnnotationRef> = None;
    let mut orphans = 0usize;
    let mut untimed = 0usize;

    for line in lines {
        let l = line.text.as_str();
        if let Some(header) = l.strip_prefix('@') {
            if header.trim_end() == "End" {
                break;
            }
            read_header(header, &mut doc);
        } else if let Some(rest) = l.strip_prefix('*') {
            let Some((code, content)) = rest.split_once(':') else {
                continue;
            };
            let code = code.trim();
            let (content, timing) = strip_bullets(content, line.number)?;
            let (begin, end, flagged) = match timing {
                Some((b, e)) => {
                    last_timed_end = e;
                    (b, e, false)
                }
                None => {
                    untimed += 1;
                    (last_timed_end, last_timed_end, true)
                }
            };
            let tier = tier_for(&mut doc, code, "main");
            doc.tiers[tier].participant = code.to_string();
            let mut ann = RawAnnotation::new(begin, end, content).with_participant(code);
            ann.untimed = flagged;
            doc.tiers[tier].annotations.push(ann);
            last_main = Some(AnnotationRef { tier, index: doc.tiers[tier].annotations.len() - 1 });
        } else if let Some(rest) = l.strip_prefix('%') {
            let Some((code, content)) = rest.split_once(':') else {
                continue;
            };
            let Some(parent) = last_main else {
                orphans += 1;
                continue;
            };
            let parent_ann = doc.annotation(parent).expect("parent exists").clone();
            let (content, _) = strip_bullets(content, line.number)?;
            let tier = tier_for(&mut doc, &format!("%{}", code.trim()), "dependent");
            doc.tiers[tier].annotations.push(RawAnnotation {
                begin_ms: parent_ann.begin_ms,
                end_ms: parent_ann.end_ms,
                text: content,
                participant_hint: parent_ann.participant_hint.clone(),
                parent: Some(parent),
                untimed: parent_ann.untimed,
            });
        }
    }

    if untimed > 0 {
        doc.metadata.insert("untimed_utterances".into(), untimed.to_string());
    }
    if orphans > 0 {
        doc.metadata.insert("orphan_dependent_lines".into(), orphans.to_string());
    }
    Ok(doc)
}

fn logical_lines(text: &str) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.starts_with('\t') {
            if let Some(prev) = out.last_mut() {
                let trimmed_len = prev.text.trim_end().len();
                prev.text.truncate(trimmed_len);
                prev.text.push(' ');
                prev.text.push_str(raw.trim());
                continue;
            }
        }
        if raw.trim().is_empty() {
            continue;
        }
        out.push(Line { number: i + 1, text: raw.to_string() });
    }
    out
}

fn read_header(header: &str, doc: &mut ParsedDocument) {
    let Some((key, value)) = header.split_once(':') else {
        return;
    };
    let key = key.trim();
    let value = value.trim();
    match key {
        "ID" => {
            let speaker = value.split('|').nth(2).unwrap_or("").trim();
            doc.metadata.insert(format!("ID.{speaker}"), value.to_string());
        }
        "Media" => {
            if let Some(name) = value.split(',').next().map(str::trim).filter(|n| !n.is_empty()) {
                doc.media_refs.push(name.to_string());
            }
            doc.metadata.insert(key.to_string(), value.to_string());
        }
        _ => {
            doc.metadata
                .entry(key.to_string())
                .and_modify(|v| {
                    v.push('\n');
                    v.push_str(value);
                })
                .or_insert_with(|| value.to_string());
        }
    }
}

fn tier_for(doc: &mut ParsedDocument, tier_id: &str, category: &str) -> usize {
    if let Some(i) = doc.tier_index(tier_id) {
        return i;
    }
    let mut tier = RawTier::new(tier_id);
    tier.category = category.to_string();
    doc.tiers.push(tier);
    doc.tiers.len() - 1
}

/// Removes every time bullet from `content`. Returns the remaining text
/// (leading tab and trailing whitespace dropped) and the span from the first
/// bullet's begin to the last bullet's end.
fn strip_bullets(content: &str, line: usize) -> Result<(String, Option<(i64, i64)>)> {
    let content = content.strip_prefix('\t').unwrap_or(content);
    let mut text = String::with_capacity(content.len());
    let mut span: Option<(i64, i64)> = None;
    let mut rest = content;
    while let Some(open) = rest.find(BULLET) {
        text.push_str(&rest[..open]);
        let after = &rest[open + BULLET.len_utf8()..];
        let close = after.find(BULLET).ok_or_else(|| Error::MalformedTimeBullet {
            line,
            bullet: after.to_string(),
        })?;
        let (b, e) = parse_bullet(&after[..close], line)?;
        span = Some(match span {
            Some((b0, _)) => (b0, e),
            None => (b, e),
        });
        rest = &after[close + BULLET.len_utf8()..];
    }
    text.push_str(rest);
    let text = text.trim_end().to_string();
    Ok((text, span))
}

fn parse_bullet(body: &str, line: usize) -> Result<(i64, i64)> {
    let malformed = || Error::MalformedTimeBullet { line, bullet: body.to_string() };
    // Plain `begin_end`, or the older `%snd:"file"_begin_end` form.
    let mut fields = body.rsplit('_');
    let end = fields.next().ok_or_else(malformed)?;
    let begin = fields.next().ok_or_else(malformed)?;
    let begin: i64 = begin.trim().parse().map_err(|_| malformed())?;
    let end: i64 = end.trim().parse().map_err(|_| malformed())?;
    if begin < 0 || begin > end {
        return Err(malformed());
    }
    Ok((begin, end))
}
