//! The unified turn table: one row per participant turn.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Content marker for turns whose annotation is missing or empty.
pub const UNK: &str = "[unk]";

/// Core columns, in file order.
pub const CORE_COLUMNS: [&str; 5] = ["begin", "end", "participant", "utterance", "source"];

/// Columns written after the core ones that back [`Turn`] fields.
pub const ID_COLUMNS: [&str; 2] = ["uid", "utterance_raw"];

pub const EXTRA_UNTIMED: &str = "untimed";
pub const EXTRA_TRANSLATION: &str = "translation";
pub const EXTRA_ORIGINAL_SCRIPT: &str = "original_script";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub uid: String,
    pub begin_ms: i64,
    pub end_ms: i64,
    pub participant: String,
    pub utterance: String,
    pub utterance_raw: String,
    pub source: String,
    /// Additional per-turn layers. Empty values are never stored.
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

impl Turn {
    pub fn new(
        uid: impl Into<String>,
        begin_ms: i64,
        end_ms: i64,
        participant: impl Into<String>,
        utterance: impl Into<String>,
        source: impl Into<String>,
    ) -> Self {
        let utterance = utterance.into();
        Turn {
            uid: uid.into(),
            begin_ms,
            end_ms,
            participant: participant.into(),
            utterance_raw: utterance.clone(),
            utterance,
            source: source.into(),
            extra: BTreeMap::new(),
        }
    }

    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.begin_ms
    }

    pub fn is_unk(&self) -> bool {
        self.utterance == UNK
    }

    pub fn is_untimed(&self) -> bool {
        self.extra.get(EXTRA_UNTIMED).is_some_and(|v| v == "1")
    }

    /// Sets an extra layer; an empty value removes the key.
    pub fn set_extra(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let (key, value) = (key.into(), value.into());
        if value.is_empty() {
            self.extra.remove(&key);
        } else {
            self.extra.insert(key, value);
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidTurn(format!("{}: {msg}", self.uid)));
        if self.uid.is_empty() {
            return Err(Error::InvalidTurn("empty uid".into()));
        }
        if self.begin_ms < 0 {
            return bad("negative begin");
        }
        if self.begin_ms > self.end_ms {
            return bad("begin after end");
        }
        if self.participant.is_empty() {
            return bad("empty participant");
        }
        if self.utterance.is_empty() {
            return bad("empty utterance");
        }
        if let Some(k) = self
            .extra
            .keys()
            .find(|k| k.is_empty() || CORE_COLUMNS.contains(&k.as_str()) || ID_COLUMNS.contains(&k.as_str()))
        {
            return bad(&format!("extra key {k:?} is reserved"));
        }
        Ok(())
    }
}

/// Replaces the utterance with `romanize(utterance)` and keeps the first
/// pre-romanisation value under `original_script`.
pub fn transliterate(mut turn: Turn, romanize: impl Fn(&str) -> String) -> Turn {
    if !turn.extra.contains_key(EXTRA_ORIGINAL_SCRIPT) {
        turn.set_extra(EXTRA_ORIGINAL_SCRIPT, turn.utterance.clone());
    }
    turn.utterance = romanize(&turn.utterance);
    if turn.utterance.is_empty() {
        turn.utterance = UNK.to_string();
    }
    turn
}

/// Default transliterator: leaves text unchanged.
pub fn identity_romanizer(s: &str) -> String {
    s.to_string()
}

/// Turns from one or more recordings, kept sorted by
/// `(source, begin, end, participant, uid)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTable {
    pub corpus_id: String,
    pub language: String,
    turns: Vec<Turn>,
}

impl CorpusTable {
    pub fn new(corpus_id: impl Into<String>, language: impl Into<String>, mut turns: Vec<Turn>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(turns.len());
        for t in &mut turns {
            t.extra.retain(|_, v| !v.is_empty());
            t.check()?;
            if !seen.insert(t.uid.clone()) {
                return Err(Error::DuplicateUid(t.uid.clone()));
            }
        }
        turns.sort_by(|a, b| {
            (&a.source, a.begin_ms, a.end_ms, &a.participant, &a.uid)
                .cmp(&(&b.source, b.begin_ms, b.end_ms, &b.participant, &b.uid))
        });
        Ok(CorpusTable { corpus_id: corpus_id.into(), language: language.into(), turns })
    }

    pub fn concat(corpus_id: impl Into<String>, language: impl Into<String>, tables: Vec<CorpusTable>) -> Result<Self> {
        let turns = tables.into_iter().flat_map(|t| t.turns).collect();
        CorpusTable::new(corpus_id, language, turns)
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn into_turns(self) -> Vec<Turn> {
        self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Names present in any turn's extra map, alphabetically.
    pub fn extra_columns(&self) -> Vec<String> {
        let names: BTreeSet<&String> = self.turns.iter().flat_map(|t| t.extra.keys()).collect();
        names.into_iter().cloned().collect()
    }

    /// Contiguous runs of turns sharing a source, in table order.
    pub fn by_source(&self) -> impl Iterator<Item = &[Turn]> {
        self.turns.chunk_by(|a, b| a.source == b.source)
    }

    /// Applies `f` to every turn and re-validates the result.
    pub fn map_turns(self, f: impl FnMut(Turn) -> Turn) -> Result<Self> {
        let turns = self.turns.into_iter().map(f).collect();
        CorpusTable::new(self.corpus_id, self.language, turns)
    }
}
