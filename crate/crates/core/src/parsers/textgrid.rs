//! Praat `.TextGrid` reader.
//!
//! Long and short text forms carry the same sequence of values; the long
//! form only adds `key =` labels and `[k]:` item markers. The reader
//! therefore tokenises both into one stream of strings, numbers and flags
//! and walks that stream, which makes the two forms equivalent by
//! construction.

use super::time::seconds_literal_to_ms;
use super::{decode_text, unique_tier_id, Format, ParsedDocument, RawAnnotation, RawTier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Str(String),
    /// Numeric literal kept verbatim for exact ms conversion.
    Num(String),
    Flag(String),
}

pub fn parse_textgrid(bytes: &[u8], source_id: &str) -> Result<ParsedDocument> {
    let text = decode_text(bytes)?;
    let tokens = tokenize(&text)?;
    let mut stream = Stream { tokens: &tokens, pos: 0 };

    if stream.string("file type")? != "ooTextFile" {
        return Err(malformed("not an ooTextFile"));
    }
    if stream.string("object class")? != "TextGrid" {
        return Err(malformed("object class is not TextGrid"));
    }
    stream.number("xmin")?;
    stream.number("xmax")?;

    let mut doc = ParsedDocument::new(source_id, Format::TextGrid);
    let has_tiers = match stream.peek() {
        Some(Token::Flag(f)) => {
            let f = f.clone();
            stream.pos += 1;
            f == "exists"
        }
        _ => true,
    };
    if !has_tiers {
        return Ok(doc);
    }
    let n_tiers = stream.count("tier count")?;
    let mut skipped = 0usize;
    for _ in 0..n_tiers {
        let class = stream.string("tier class")?;
        let name = stream.string("tier name")?;
        stream.number("tier xmin")?;
        stream.number("tier xmax")?;
        let n = stream.count("item count")?;
        match class.as_str() {
            "IntervalTier" => {
                let mut tier = RawTier::new(unique_tier_id(&doc.tiers, &name));
                tier.participant = name.clone();
                tier.category = class.clone();
                let mut prev_end: Option<i64> = None;
                for index in 1..=n {
                    let begin = stream.ms("interval xmin")?;
                    let end = stream.ms("interval xmax")?;
                    let label = stream.string("interval text")?;
                    if end < begin {
                        return Err(Error::InvertedSpan { tier: tier.tier_id.clone(), begin_ms: begin, end_ms: end });
                    }
                    if let Some(prev) = prev_end {
                        if begin < prev - 1 {
                            return Err(Error::NonMonotoneIntervals {
                                tier: tier.tier_id.clone(),
                                index,
                                begin_ms: begin,
                                prev_end_ms: prev,
                            });
                        }
                    }
                    prev_end = Some(end);
                    if !label.trim().is_empty() {
                        tier.annotations.push(RawAnnotation::new(begin, end, label).with_participant(&name));
                    }
                }
                doc.tiers.push(tier);
            }
            "TextTier" | "PointTier" => {
                for _ in 0..n {
                    stream.number("point time")?;
                    stream.string("point mark")?;
                }
                skipped += 1;
            }
            other => return Err(malformed(&format!("unknown tier class {other:?}"))),
        }
    }
    doc.metadata.insert("skipped_point_tiers".into(), skipped.to_string());
    Ok(doc)
}

fn malformed(msg: &str) -> Error {
    Error::MalformedTextGrid(msg.to_string())
}

struct Stream<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl Stream<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<&Token> {
        let t = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| malformed(&format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn string(&mut self, what: &str) -> Result<String> {
        match self.next(what)? {
            Token::Str(s) => Ok(s.clone()),
            other => Err(malformed(&format!("expected {what} string, found {other:?}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<String> {
        match self.next(what)? {
            Token::Num(s) => Ok(s.clone()),
            other => Err(malformed(&format!("expected {what} number, found {other:?}"))),
        }
    }

    fn ms(&mut self, what: &str) -> Result<i64> {
        let lit = self.number(what)?;
        seconds_literal_to_ms(&lit).ok_or_else(|| malformed(&format!("bad {what} {lit:?}")))
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let lit = self.number(what)?;
        lit.parse().map_err(|_| malformed(&format!("bad {what} {lit:?}")))
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => {
                            if matches!(chars.peek(), Some((_, '"'))) {
                                chars.next();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some((_, ch)) => s.push(ch),
                        None => return Err(malformed("unterminated string")),
                    }
                }
                tokens.push(Token::Str(s));
            }
            '<' => {
                chars.next();
                let mut s = String::new();
                for (_, ch) in chars.by_ref() {
                    if ch == '>' {
                        break;
                    }
                    s.push(ch);
                }
                tokens.push(Token::Flag(s));
            }
            '[' => {
                // item index such as `[3]` or `[]` in the long form
                for (_, ch) in chars.by_ref() {
                    if ch == ']' {
                        break;
                    }
                }
            }
            '!' => {
                for (_, ch) in chars.by_ref() {
                    if ch == '\n' {
                        break;
                    }
                }
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut end = start;
                while let Some(&(i, ch)) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || matches!(ch, '.' | '-' | '+') {
                        end = i + ch.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Num(text[start..end].to_string()));
            }
            c if c.is_alphabetic() || c == '_' => {
                // labels such as `xmin`, `intervals:` or `tiers?`
                while let Some(&(_, ch)) = chars.peek() {
                    if ch.is_alphanumeric() || matches!(ch, '_' | '?' | ':') {
                        chars.next();
                    } else {
                        break;
                    }
                }
            }
            _ => {
                chars.next();
            }
        }
    }
    Ok(tokens)
}
