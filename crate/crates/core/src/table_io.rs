//! Tab-separated interchange format for [`CorpusTable`].
//!
//! ```text
//! # corpus_id: <id>
//! # language: <code>
//! begin<TAB>end<TAB>participant<TAB>utterance<TAB>source<TAB>uid<TAB>utterance_raw[<TAB>extra...]
//! 0<TAB>840<TAB>A<TAB>yeah .<TAB>conv01.wav<TAB>conv01_000000<TAB>yeah .
//! ```
//!
//! UTF-8, LF line endings. Tab, newline, carriage return and backslash
//! inside fields are written as `\t`, `\n`, `\r` and `\\`. Extra columns
//! follow in alphabetical order; an empty cell means the turn has no value
//! for that column. On reading, only the five core columns are required.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CorpusTable, Turn, CORE_COLUMNS, ID_COLUMNS};

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn table_to_string(table: &CorpusTable) -> String {
    let extras = table.extra_columns();
    let mut out = String::new();
    out.push_str(&format!("# corpus_id: {}\n", escape_field(&table.corpus_id)));
    out.push_str(&format!("# language: {}\n", escape_field(&table.language)));
    let header: Vec<String> = CORE_COLUMNS
        .iter()
        .chain(ID_COLUMNS.iter())
        .map(|c| c.to_string())
        .chain(extras.iter().map(|e| escape_field(e)))
        .collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for t in table.turns() {
        let mut row = vec![
            t.begin_ms.to_string(),
            t.end_ms.to_string(),
            escape_field(&t.participant),
            escape_field(&t.utterance),
            escape_field(&t.source),
            escape_field(&t.uid),
            escape_field(&t.utterance_raw),
        ];
        row.extend(extras.iter().map(|e| escape_field(t.extra.get(e).map_or("", String::as_str))));
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

pub fn write_table(table: &CorpusTable, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(table_to_string(table).as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Parses a table. `default_corpus_id` is used when the file carries no
/// `# corpus_id:` line.
pub fn table_from_str(text: &str, default_corpus_id: &str) -> Result<CorpusTable> {
    let mut corpus_id = default_corpus_id.to_string();
    let mut language = String::new();
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));

    let header = loop {
        let Some((_, line)) = lines.next() else {
            return Err(Error::SchemaMismatch("no header row".into()));
        };
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some((k, v)) = meta.split_once(": ").or_else(|| meta.split_once(':')) {
                match k.trim() {
                    "corpus_id" => corpus_id = unescape_field(v),
                    "language" => language = unescape_field(v),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        break line;
    };

    let columns: Vec<String> = header.split('\t').map(unescape_field).collect();
    let position = |name: &str| columns.iter().position(|c| c == name);
    let mut core = [0usize; 5];
    for (slot, name) in core.iter_mut().zip(CORE_COLUMNS) {
        *slot = position(name).ok_or_else(|| Error::SchemaMismatch(format!("missing column {name:?}")))?;
    }
    let uid_col = position("uid");
    let raw_col = position("utterance_raw");
    let extra_cols: Vec<(usize, &String)> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !CORE_COLUMNS.contains(&c.as_str()) && !ID_COLUMNS.contains(&c.as_str()))
        .collect();

    let mut turns = Vec::new();
    for (number, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns.len() {
            return Err(Error::TableParse {
                line: number,
                msg: format!("{} fields, header has {}", fields.len(), columns.len()),
            });
        }
        let int = |i: usize| -> Result<i64> {
            fields[i].parse().map_err(|_| Error::TableParse {
                line: number,
                msg: format!("{:?} is not an integer millisecond value", fields[i]),
            })
        };
        let utterance = unescape_field(fields[core[3]]);
        let uid = match uid_col {
            Some(c) => unescape_field(fields[c]),
            None => format!("{corpus_id}_{:06}", turns.len()),
        };
        let mut extra = BTreeMap::new();
        for &(c, name) in &extra_cols {
            let v = unescape_field(fields[c]);
            if !v.is_empty() {
                extra.insert(name.clone(), v);
            }
        }
        turns.push(Turn {
            uid,
            begin_ms: int(core[0])?,
            end_ms: int(core[1])?,
            participant: unescape_field(fields[core[2]]),
            utterance_raw: raw_col.map(|c| unescape_field(fields[c])).unwrap_or_else(|| utterance.clone()),
            utterance,
            source: unescape_field(fields[core[4]]),
            extra,
        });
    }
    CorpusTable::new(corpus_id, language, turns)
}

pub fn read_table(path: &Path) -> Result<CorpusTable> {
    let text = fs::read_to_string(path)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    table_from_str(&text, &stem)
}
