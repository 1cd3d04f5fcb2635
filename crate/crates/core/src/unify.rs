//! Conversion of parsed documents into the unified turn table.

use std::collections::HashMap;
use std::fmt;

use glob::Pattern;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CorpusTable, Turn, EXTRA_TRANSLATION, EXTRA_UNTIMED};
use crate::parsers::{AnnotationRef, ParsedDocument, RawTier};
use crate::text::{normalize_or_unk, normalize_utterance_text, TagPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TierRole {
    Utterance,
    Translation,
    Ignore,
    /// Stored in the turn's extra map under the given column name.
    Extra(String),
}

impl TryFrom<String> for TierRole {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.as_str() {
            "utterance" => Ok(TierRole::Utterance),
            "translation" => Ok(TierRole::Translation),
            "ignore" => Ok(TierRole::Ignore),
            other => match other.strip_prefix("extra:") {
                Some(name) if !name.is_empty() => Ok(TierRole::Extra(name.to_string())),
                _ => Err(format!("unknown tier role {other:?}")),
            },
        }
    }
}

impl From<TierRole> for String {
    fn from(r: TierRole) -> String {
        r.to_string()
    }
}

impl fmt::Display for TierRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TierRole::Utterance => f.write_str("utterance"),
            TierRole::Translation => f.write_str("translation"),
            TierRole::Ignore => f.write_str("ignore"),
            TierRole::Extra(name) => write!(f, "extra:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRule {
    pub pattern: String,
    pub role: TierRole,
}

impl RoleRule {
    pub fn new(pattern: impl Into<String>, role: TierRole) -> Self {
        RoleRule { pattern: pattern.into(), role }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantSource {
    #[default]
    TierAttribute,
    TierIdPrefix,
}

/// Which tiers hold utterances and what the others contribute.
///
/// A tier's role is the role of the first `role_map` rule whose glob
/// matches its id or category. Tiers matching no rule but matching an
/// `include_patterns` glob are utterance tiers when they are top-level and
/// ignored when they depend on another tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TierMapConfig {
    pub include_patterns: Vec<String>,
    pub role_map: Vec<RoleRule>,
    pub participant_from: ParticipantSource,
    /// Adds `tier` and `tier_category` extra columns.
    pub tier_columns: bool,
}

impl Default for TierMapConfig {
    fn default() -> Self {
        TierMapConfig {
            include_patterns: vec!["*".into()],
            role_map: vec![
                RoleRule::new("%eng", TierRole::Translation),
                RoleRule::new("%*", TierRole::Ignore),
            ],
            participant_from: ParticipantSource::TierAttribute,
            tier_columns: false,
        }
    }
}

struct CompiledMap<'a> {
    include: Vec<Pattern>,
    rules: Vec<(Pattern, &'a TierRole)>,
}

impl TierMapConfig {
    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<CompiledMap<'_>> {
        let pat = |p: &str| Pattern::new(p).map_err(|e| Error::InvalidConfig(format!("bad tier pattern {p:?}: {e}")));
        let include = self.include_patterns.iter().map(|p| pat(p)).collect::<Result<Vec<_>>>()?;
        let rules = self
            .role_map
            .iter()
            .map(|r| Ok((pat(&r.pattern)?, &r.role)))
            .collect::<Result<Vec<_>>>()?;
        if include.is_empty() && !rules.iter().any(|(_, r)| **r == TierRole::Utterance) {
            return Err(Error::InvalidConfig(
                "tier map needs an include pattern or a rule with role utterance".into(),
            ));
        }
        Ok(CompiledMap { include, rules })
    }
}

impl CompiledMap<'_> {
    /// `None` when no pattern mentions the tier at all.
    fn role(&self, tier: &RawTier) -> Option<TierRole> {
        let hit = |p: &Pattern| p.matches(&tier.tier_id) || (!tier.category.is_empty() && p.matches(&tier.category));
        if let Some((_, role)) = self.rules.iter().find(|(p, _)| hit(p)) {
            return Some((*role).clone());
        }
        if self.include.iter().any(hit) {
            return Some(if tier.parent_tier.is_none() { TierRole::Utterance } else { TierRole::Ignore });
        }
        None
    }
}

/// A translation or extra-layer annotation that lined up with no turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnmatchedAnnotation {
    pub source_id: String,
    pub tier_id: String,
    pub role: TierRole,
    pub begin_ms: i64,
    pub end_ms: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unified {
    pub table: CorpusTable,
    /// Rows for the sidecar file; never part of the turn table.
    pub unmatched: Vec<UnmatchedAnnotation>,
}

/// Builds the turn table for one document. See [`unify_detailed`] for the
/// sidecar of unmatched translations.
pub fn unify(doc: &ParsedDocument, cfg: &TierMapConfig, tags: &TagPolicy) -> Result<CorpusTable> {
    unify_detailed(doc, cfg, tags).map(|u| u.table)
}

pub fn unify_detailed(doc: &ParsedDocument, cfg: &TierMapConfig, tags: &TagPolicy) -> Result<Unified> {
    let map = cfg.compile()?;
    tags.validate()?;
    let roles: Vec<Option<TierRole>> = doc.tiers.iter().map(|t| map.role(t)).collect();
    if roles.iter().all(Option::is_none) {
        return Err(Error::EmptySelection(doc.source_id.clone()));
    }
    if !roles.iter().any(|r| r.as_ref() == Some(&TierRole::Utterance)) {
        return Err(Error::NoUtteranceTier);
    }

    let source = doc.media_refs.first().cloned().unwrap_or_else(|| doc.source_id.clone());

    struct Pending {
        at: AnnotationRef,
        turn: Turn,
    }
    let mut pending: Vec<Pending> = Vec::new();
    for (t, tier) in doc.tiers.iter().enumerate() {
        if roles[t].as_ref() != Some(&TierRole::Utterance) {
            continue;
        }
        for (i, ann) in tier.annotations.iter().enumerate() {
            let participant = participant_for(tier, &ann.participant_hint, cfg.participant_from);
            let mut turn = Turn::new(String::new(), ann.begin_ms, ann.end_ms, participant, "", source.clone());
            turn.utterance = normalize_or_unk(&ann.text, tags);
            turn.utterance_raw = ann.text.clone();
            if ann.untimed {
                turn.set_extra(EXTRA_UNTIMED, "1");
            }
            if cfg.tier_columns {
                turn.set_extra("tier", tier.tier_id.clone());
                turn.set_extra("tier_category", tier.category.clone());
            }
            pending.push(Pending { at: AnnotationRef { tier: t, index: i }, turn });
        }
    }

    pending.sort_by(|a, b| {
        (a.turn.begin_ms, a.turn.end_ms, &a.turn.participant, a.at.tier, a.at.index)
            .cmp(&(b.turn.begin_ms, b.turn.end_ms, &b.turn.participant, b.at.tier, b.at.index))
    });
    let width = 6.max(pending.len().to_string().len());
    for (n, p) in pending.iter_mut().enumerate() {
        p.turn.uid = format!("{}_{:0width$}", doc.source_id, n);
    }

    let by_ref: HashMap<AnnotationRef, usize> = pending.iter().enumerate().map(|(n, p)| (p.at, n)).collect();
    let mut unmatched = Vec::new();
    for (t, tier) in doc.tiers.iter().enumerate() {
        let column = match &roles[t] {
            Some(TierRole::Translation) => EXTRA_TRANSLATION.to_string(),
            Some(TierRole::Extra(name)) => name.clone(),
            _ => continue,
        };
        let parent_tier = tier.parent_tier.as_deref().and_then(|p| doc.tier_index(p));
        for ann in &tier.annotations {
            let target = match ann.parent {
                Some(p) => by_ref.get(&p).copied(),
                None => parent_tier.and_then(|pt| {
                    doc.tiers[pt].annotations.iter().enumerate().find_map(|(i, u)| {
                        (u.begin_ms == ann.begin_ms && u.end_ms == ann.end_ms)
                            .then(|| by_ref.get(&AnnotationRef { tier: pt, index: i }).copied())
                            .flatten()
                    })
                }),
            };
            let target = target.filter(|&n| {
                let turn = &pending[n].turn;
                turn.begin_ms == ann.begin_ms && turn.end_ms == ann.end_ms
            });
            let text = normalize_utterance_text(&ann.text, tags);
            match target {
                Some(n) => {
                    if text.is_empty() {
                        continue;
                    }
                    let turn = &mut pending[n].turn;
                    let joined = match turn.extra.get(&column) {
                        Some(prev) => format!("{prev} {text}"),
                        None => text,
                    };
                    turn.set_extra(column.clone(), joined);
                }
                None => unmatched.push(UnmatchedAnnotation {
                    source_id: doc.source_id.clone(),
                    tier_id: tier.tier_id.clone(),
                    role: roles[t].clone().expect("role checked above"),
                    begin_ms: ann.begin_ms,
                    end_ms: ann.end_ms,
                    text: ann.text.clone(),
                }),
            }
        }
    }

    let language = doc
        .metadata
        .get("Languages")
        .and_then(|l| l.split([',', ' ']).find(|s| !s.is_empty()))
        .unwrap_or("")
        .to_string();
    let table = CorpusTable::new(doc.source_id.clone(), language, pending.into_iter().map(|p| p.turn).collect())?;
    Ok(Unified { table, unmatched })
}

fn participant_for(tier: &RawTier, hint: &str, from: ParticipantSource) -> String {
    let chosen = match from {
        ParticipantSource::TierAttribute => {
            if !tier.participant.is_empty() {
                tier.participant.as_str()
            } else {
                hint
            }
        }
        ParticipantSource::TierIdPrefix => tier
            .tier_id
            .split(['-', '_', '@', ' ', '.'])
            .next()
            .unwrap_or(""),
    };
    if chosen.is_empty() {
        tier.tier_id.clone()
    } else {
        chosen.to_string()
    }
}
