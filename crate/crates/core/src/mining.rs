//! Sequential detection of continuer and repair-initiator candidates.
//!
//! A recurrent turn format `t2` is looked at between the nearest earlier
//! turn `t1` by another participant and that participant's next turn `t3`.
//! When both flanks are near-unique, `t3` repeating `t1` (normalised edit
//! distance below δ) marks a repair context; otherwise a continuer context.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CorpusTable, Turn};
use crate::text::{is_bracketed_tag, tokenize, WhitespaceSegmenter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// δ: flanks closer than this are near-copies.
    pub similarity_threshold: f64,
    /// r: minimum occurrences of a recurrent format.
    pub recurrent_min_count: usize,
    /// u: maximum occurrences of a near-unique flank.
    pub unique_max_count: usize,
    /// Minimum length of a format, in characters.
    pub min_format_length: usize,
    /// Flank search gives up after this many intervening turns...
    pub max_intervening_turns: usize,
    /// ...or this much silence between a flank and the candidate.
    pub max_flank_gap_ms: i64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            similarity_threshold: 0.20,
            recurrent_min_count: 5,
            unique_max_count: 2,
            min_format_length: 1,
            max_intervening_turns: 5,
            max_flank_gap_ms: 30_000,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return bad("similarity_threshold must lie in [0, 1]");
        }
        if self.recurrent_min_count < 2 {
            return bad("recurrent_min_count must be at least 2");
        }
        if self.unique_max_count < 1 {
            return bad("unique_max_count must be at least 1");
        }
        if self.unique_max_count >= self.recurrent_min_count {
            return bad("unique_max_count must be below recurrent_min_count");
        }
        if self.min_format_length < 1 {
            return bad("min_format_length must be at least 1");
        }
        if self.max_flank_gap_ms < 0 {
            return bad("max_flank_gap_ms must not be negative");
        }
        Ok(())
    }
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let next = (row[j + 1] + 1).min(row[j] + 1).min(diag + usize::from(ca != cb));
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Edit distance divided by the longer length; 0 for two empty strings.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

/// Lowercased word tokens without bracketed tags or edge punctuation,
/// joined by single spaces. Empty for `[unk]` and tag-only turns.
pub fn normalize_form(utterance: &str) -> String {
    tokenize(utterance, &WhitespaceSegmenter, true)
        .into_iter()
        .filter(|t| !is_bracketed_tag(t))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnFormat {
    pub normalized_form: String,
    pub count: usize,
    /// Up to five turn ids, in table order.
    pub example_uids: Vec<String>,
}

const EXAMPLES: usize = 5;

fn form_counts(forms: &[String]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for f in forms.iter().filter(|f| !f.is_empty()) {
        *counts.entry(f.as_str()).or_insert(0) += 1;
    }
    counts
}

pub fn recurrent_formats(table: &CorpusTable, cfg: &MiningConfig) -> Vec<TurnFormat> {
    let mut groups: BTreeMap<String, TurnFormat> = BTreeMap::new();
    for t in table.turns() {
        let form = normalize_form(&t.utterance);
        if form.is_empty() {
            continue;
        }
        let g = groups.entry(form.clone()).or_insert_with(|| TurnFormat { normalized_form: form, count: 0, example_uids: vec![] });
        g.count += 1;
        if g.example_uids.len() < EXAMPLES {
            g.example_uids.push(t.uid.clone());
        }
    }
    let mut out: Vec<TurnFormat> = groups
        .into_values()
        .filter(|g| g.count >= cfg.recurrent_min_count && g.normalized_form.chars().count() >= cfg.min_format_length)
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.normalized_form.cmp(&b.normalized_form)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateLabel {
    Continuer,
    RepairInitiator,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub format: TurnFormat,
    pub continuer_contexts: usize,
    pub repair_contexts: usize,
    pub continuer_rate: f64,
    pub repair_rate: f64,
    pub label: CandidateLabel,
}

/// Which way a rate dominates: one label needs at least twice the other's
/// rate and a non-zero count.
pub fn label_for(continuer_contexts: usize, repair_contexts: usize) -> CandidateLabel {
    let (c, r) = (continuer_contexts, repair_contexts);
    if c > 0 && c >= 2 * r {
        CandidateLabel::Continuer
    } else if r > 0 && r >= 2 * c {
        CandidateLabel::RepairInitiator
    } else {
        CandidateLabel::Ambiguous
    }
}

/// Context found around one occurrence of a recurrent format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    Continuer,
    Repair,
}

/// Flank indices `(t1, t3)` for the turn at `i` within one recording.
fn flanks(turns: &[&Turn], i: usize, cfg: &MiningConfig) -> Option<(usize, usize)> {
    let t2 = turns[i];
    let lowest = i.saturating_sub(cfg.max_intervening_turns + 1);
    let j = (lowest..i).rev().find(|&j| turns[j].participant != t2.participant)?;
    if t2.begin_ms - turns[j].end_ms > cfg.max_flank_gap_ms {
        return None;
    }
    let other = &turns[j].participant;
    let highest = (i + cfg.max_intervening_turns + 1).min(turns.len() - 1);
    let k = (i + 1..=highest).find(|&k| turns[k].participant == *other)?;
    if turns[k].begin_ms - t2.end_ms > cfg.max_flank_gap_ms {
        return None;
    }
    Some((j, k))
}

/// Per-occurrence contexts: `(turn index in table, format, context)`.
pub fn occurrence_contexts(table: &CorpusTable, formats: &[TurnFormat], cfg: &MiningConfig) -> Vec<(usize, String, Context)> {
    let forms: Vec<String> = table.turns().iter().map(|t| normalize_form(&t.utterance)).collect();
    let counts = form_counts(&forms);
    let recurrent: HashSet<&str> = formats.iter().map(|f| f.normalized_form.as_str()).collect();
    let near_unique = |f: &str| !f.is_empty() && counts.get(f).is_some_and(|&c| c <= cfg.unique_max_count);

    let mut out = Vec::new();
    let mut offset = 0;
    for group in table.by_source() {
        let turns: Vec<&Turn> = group.iter().collect();
        for i in 0..turns.len() {
            let f2 = &forms[offset + i];
            if !recurrent.contains(f2.as_str()) {
                continue;
            }
            let Some((j, k)) = flanks(&turns, i, cfg) else { continue };
            let (f1, f3) = (&forms[offset + j], &forms[offset + k]);
            if !near_unique(f1) || !near_unique(f3) {
                continue;
            }
            let ctx = if normalized_levenshtein(f1, f3) < cfg.similarity_threshold { Context::Repair } else { Context::Continuer };
            out.push((offset + i, f2.clone(), ctx));
        }
        offset += group.len();
    }
    out
}

pub fn classify_contexts(table: &CorpusTable, formats: &[TurnFormat], cfg: &MiningConfig) -> Vec<CandidateScore> {
    let mut tally: HashMap<String, (usize, usize)> = HashMap::new();
    for (_, form, ctx) in occurrence_contexts(table, formats, cfg) {
        let e = tally.entry(form).or_default();
        match ctx {
            Context::Continuer => e.0 += 1,
            Context::Repair => e.1 += 1,
        }
    }
    formats
        .iter()
        .map(|f| {
            let (c, r) = tally.get(&f.normalized_form).copied().unwrap_or_default();
            CandidateScore {
                format: f.clone(),
                continuer_contexts: c,
                repair_contexts: r,
                continuer_rate: c as f64 / f.count as f64,
                repair_rate: r as f64 / f.count as f64,
                label: label_for(c, r),
            }
        })
        .collect()
}

/// Continuers by continuer contexts and repair initiators by repair
/// contexts, descending, ties alphabetical, each truncated to `top_n`.
pub fn rank_candidates(scores: &[CandidateScore], top_n: usize) -> (Vec<CandidateScore>, Vec<CandidateScore>) {
    let pick = |label: CandidateLabel, key: fn(&CandidateScore) -> usize| {
        let mut v: Vec<CandidateScore> = scores.iter().filter(|s| s.label == label).cloned().collect();
        v.sort_by(|a, b| key(b).cmp(&key(a)).then_with(|| a.format.normalized_form.cmp(&b.format.normalized_form)));
        v.truncate(top_n);
        v
    };
    (
        pick(CandidateLabel::Continuer, |s| s.continuer_contexts),
        pick(CandidateLabel::RepairInitiator, |s| s.repair_contexts),
    )
}

/// Everything a mining run produces, with the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub corpus_id: String,
    pub config: MiningConfig,
    pub n_turns: usize,
    pub candidates: Vec<CandidateScore>,
    pub continuers: Vec<String>,
    pub repair_initiators: Vec<String>,
}

pub fn mine(table: &CorpusTable, cfg: &MiningConfig, top_n: usize) -> Result<MiningResult> {
    cfg.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let formats = recurrent_formats(table, cfg);
    let candidates = classify_contexts(table, &formats, cfg);
    let (c, r) = rank_candidates(&candidates, top_n);
    let names = |v: Vec<CandidateScore>| v.into_iter().map(|s| s.format.normalized_form).collect();
    Ok(MiningResult {
        corpus_id: table.corpus_id.clone(),
        config: cfg.clone(),
        n_turns: table.len(),
        candidates,
        continuers: names(c),
        repair_initiators: names(r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UNK;
    use proptest::prelude::*;

    fn table(lines: &[(&str, &str)]) -> CorpusTable {
        let turns = lines
            .iter()
            .enumerate()
            .map(|(i, (who, text))| Turn::new(format!("u{i:04}"), i as i64 * 1000, i as i64 * 1000 + 800, *who, *text, "rec"))
            .collect();
        CorpusTable::new("c", "", turns).unwrap()
    }

    fn oracle(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                if x == y {
                    oracle(ra, rb)
                } else {
                    1 + oracle(ra, b).min(oracle(a, rb)).min(oracle(ra, rb))
                }
            }
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(normalized_levenshtein("abc", "abc"), 0.0);
        assert_eq!(normalized_levenshtein("", "abc"), 1.0);
        assert_eq!(normalized_levenshtein("", ""), 0.0);
        assert_eq!(normalized_levenshtein("kitten", "sitting"), 3.0 / 7.0);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("ünï", "uni"), 2);
    }

    #[test]
    fn form_normalisation() {
        assert_eq!(normalize_form("Huh?"), "huh");
        assert_eq!(normalize_form("[laugh] Mhm ."), "mhm");
        assert_eq!(normalize_form(UNK), "");
        assert_eq!(normalize_form("I saw  the cat!"), "i saw the cat");
    }

    #[test]
    fn recurrence_threshold() {
        let mut lines = vec![("A", "the cat ran")];
        lines.extend(std::iter::repeat_n(("B", "mhm"), 20));
        lines.extend(std::iter::repeat_n(("A", "ja"), 6));
        lines.extend(std::iter::repeat_n(("A", UNK), 50));
        let f = recurrent_formats(&table(&lines), &MiningConfig::default());
        let got: Vec<(&str, usize)> = f.iter().map(|f| (f.normalized_form.as_str(), f.count)).collect();
        assert_eq!(got, [("mhm", 20), ("ja", 6)]);
        assert_eq!(f[0].example_uids.len(), 5);
        assert!(recurrent_formats(&table(&[("A", "a"), ("B", "b")]), &MiningConfig::default()).is_empty());
    }

    fn with_fillers(core: &[(&str, &str)], filler: &str) -> CorpusTable {
        let mut lines: Vec<(&str, &str)> = core.to_vec();
        // Pad the format to recurrence without creating contexts.
        lines.extend(std::iter::repeat_n(("C", filler), 5));
        table(&lines)
    }

    #[test]
    fn continuer_context() {
        let t = with_fillers(&[("A", "we walked for hours"), ("B", "mhm"), ("A", "then it started raining")], "mhm");
        let cfg = MiningConfig::default();
        let s = classify_contexts(&t, &recurrent_formats(&t, &cfg), &cfg);
        assert_eq!((s[0].continuer_contexts, s[0].repair_contexts), (1, 0));
        assert_eq!(s[0].label, CandidateLabel::Continuer);
    }

    #[test]
    fn repair_context() {
        let t = with_fillers(&[("A", "I saw the cat"), ("B", "huh?"), ("A", "I saw the cat")], "huh");
        let cfg = MiningConfig::default();
        let s = classify_contexts(&t, &recurrent_formats(&t, &cfg), &cfg);
        assert_eq!((s[0].continuer_contexts, s[0].repair_contexts), (0, 1));
        assert_eq!(s[0].label, CandidateLabel::RepairInitiator);

        let strict = MiningConfig { similarity_threshold: 0.0, ..cfg };
        let s = classify_contexts(&t, &recurrent_formats(&t, &strict), &strict);
        assert_eq!(s[0].repair_contexts, 0);
    }

    #[test]
    fn flank_bounds() {
        let cfg = MiningConfig::default();
        let mut lines = vec![("A", "first unique"), ("B", "mhm")];
        lines.extend(["one", "two", "three", "four", "five", "six"].map(|w| ("B", w)));
        lines.push(("A", "second unique"));
        let t = with_fillers(&lines, "mhm");
        let s = classify_contexts(&t, &recurrent_formats(&t, &cfg), &cfg);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].continuer_contexts + s[0].repair_contexts, 0);
    }

    #[test]
    fn labels_and_ranking() {
        assert_eq!(label_for(0, 0), CandidateLabel::Ambiguous);
        assert_eq!(label_for(4, 2), CandidateLabel::Continuer);
        assert_eq!(label_for(3, 2), CandidateLabel::Ambiguous);
        assert_eq!(label_for(1, 2), CandidateLabel::RepairInitiator);
        let score = |f: &str, c, r| CandidateScore {
            format: TurnFormat { normalized_form: f.into(), count: 10, example_uids: vec![] },
            continuer_contexts: c,
            repair_contexts: r,
            continuer_rate: c as f64 / 10.0,
            repair_rate: r as f64 / 10.0,
            label: label_for(c, r),
        };
        let scores = vec![score("yeah", 4, 0), score("mhm", 4, 0), score("uh", 1, 1), score("huh", 0, 3)];
        let (c, r) = rank_candidates(&scores, 1);
        assert_eq!(c[0].format.normalized_form, "mhm");
        assert_eq!(r[0].format.normalized_form, "huh");
        let (c, r) = rank_candidates(&[], 3);
        assert!(c.is_empty() && r.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(MiningConfig::default().validate().is_ok());
        assert!(MiningConfig { recurrent_min_count: 2, unique_max_count: 2, ..Default::default() }.validate().is_err());
        assert!(MiningConfig { similarity_threshold: 1.5, ..Default::default() }.validate().is_err());
        assert!(MiningConfig { similarity_threshold: 0.0, ..Default::default() }.validate().is_ok());
    }

    fn brute_contexts(table: &CorpusTable, cfg: &MiningConfig) -> Vec<(usize, Context)> {
        let turns = table.turns();
        let forms: Vec<String> = turns.iter().map(|t| normalize_form(&t.utterance)).collect();
        let count = |f: &str| forms.iter().filter(|g| g.as_str() == f).count();
        let mut out = Vec::new();
        for i in 0..turns.len() {
            if forms[i].is_empty() || count(&forms[i]) < cfg.recurrent_min_count {
                continue;
            }
            let mut found = None;
            'outer: for j in (0..i).rev() {
                if turns[j].source != turns[i].source || i - j - 1 > cfg.max_intervening_turns {
                    break;
                }
                if turns[j].participant == turns[i].participant {
                    continue;
                }
                for k in i + 1..turns.len() {
                    if turns[k].source != turns[i].source || k - i - 1 > cfg.max_intervening_turns {
                        break 'outer;
                    }
                    if turns[k].participant == turns[j].participant {
                        found = Some((j, k));
                        break 'outer;
                    }
                }
                break;
            }
            let Some((j, k)) = found else { continue };
            if turns[i].begin_ms - turns[j].end_ms > cfg.max_flank_gap_ms || turns[k].begin_ms - turns[i].end_ms > cfg.max_flank_gap_ms {
                continue;
            }
            let ok = |f: &str| !f.is_empty() && count(f) <= cfg.unique_max_count;
            if !ok(&forms[j]) || !ok(&forms[k]) {
                continue;
            }
            let d = oracle(&forms[j].chars().collect::<Vec<_>>(), &forms[k].chars().collect::<Vec<_>>()) as f64
                / forms[j].chars().count().max(forms[k].chars().count()) as f64;
            out.push((i, if d < cfg.similarity_threshold { Context::Repair } else { Context::Continuer }));
        }
        out
    }

    fn arb_corpus() -> impl Strategy<Value = CorpusTable> {
        let words = prop::sample::select(vec!["mhm", "huh", "ja", "the cat", "the hat", "a dog ran", "so", "[unk]", "okay then"]);
        prop::collection::vec((0usize..3, words, 0i64..40_000, 0usize..2), 0..120).prop_map(|rows| {
            let mut t = 0;
            let turns = rows
                .into_iter()
                .enumerate()
                .map(|(i, (p, w, gap, s))| {
                    t += gap / 4;
                    Turn::new(format!("u{i}"), t, t + 500, ["A", "B", "C"][p], w, ["r1", "r2"][s])
                })
                .collect();
            CorpusTable::new("c", "", turns).unwrap()
        })
    }

    proptest! {
        #[test]
        fn distance_properties(a in "[abc]{0,6}", b in "[abc]{0,6}", c in "[abc]{0,6}") {
            let d = normalized_levenshtein(&a, &b);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, normalized_levenshtein(&b, &a));
            prop_assert_eq!(normalized_levenshtein(&a, &a), 0.0);
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        }

        #[test]
        fn contexts_match_brute_force(t in arb_corpus(), r in 2usize..6) {
            let cfg = MiningConfig { recurrent_min_count: r, unique_max_count: 1, ..Default::default() };
            let fast: Vec<(usize, Context)> = occurrence_contexts(&t, &recurrent_formats(&t, &cfg), &cfg).into_iter().map(|(i, _, c)| (i, c)).collect();
            prop_assert_eq!(fast, brute_contexts(&t, &cfg));
        }

        #[test]
        fn invariant_under_shift_and_relabel(t in arb_corpus(), shift in 0i64..100_000) {
            let cfg = MiningConfig { recurrent_min_count: 3, unique_max_count: 2, ..Default::default() };
            let base = classify_contexts(&t, &recurrent_formats(&t, &cfg), &cfg);
            let moved = t.clone().map_turns(|mut x| {
                x.begin_ms += shift;
                x.end_ms += shift;
                x.participant = format!("spk-{}", x.participant);
                x
            }).unwrap();
            prop_assert_eq!(base, classify_contexts(&moved, &recurrent_formats(&moved, &cfg), &cfg));
        }

        #[test]
        fn threshold_only_splits_contexts(t in arb_corpus(), d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
            let (lo, hi) = (d1.min(d2), d1.max(d2));
            let at = |d| {
                let cfg = MiningConfig { similarity_threshold: d, recurrent_min_count: 3, ..Default::default() };
                classify_contexts(&t, &recurrent_formats(&t, &cfg), &cfg)
            };
            for (a, b) in at(lo).iter().zip(at(hi).iter()) {
                prop_assert_eq!(a.continuer_contexts + a.repair_contexts, b.continuer_contexts + b.repair_contexts);
                prop_assert!(b.repair_contexts >= a.repair_contexts);
            }
        }

        #[test]
        fn raising_r_never_adds_formats(t in arb_corpus(), r in 2usize..8) {
            let f = |r| recurrent_formats(&t, &MiningConfig { recurrent_min_count: r, unique_max_count: 1, ..Default::default() })
                .into_iter().map(|f| f.normalized_form).collect::<std::collections::BTreeSet<_>>();
            prop_assert!(f(r + 1).is_subset(&f(r)));
        }
    }
}
