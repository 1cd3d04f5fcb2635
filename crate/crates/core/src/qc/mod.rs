//! Corpus quality control: turn-transition timing, annotation density,
//! rank/frequency sanity checks, sampled dyadic stretches and media checks,
//! bundled into an [`AssessmentReport`].

mod media;
mod render;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CorpusTable, Turn, UNK};
use crate::stats::{ols, HistogramSeries};
use crate::text::{tokenize, Segmenter, WhitespaceSegmenter};

pub use media::{strip_media_extension, verify_sources, wav_duration_ms, SourceCheck, MEDIA_EXTENSIONS};
pub use render::{render_report_svg, ReportPanels};

/// Context margin on either side of a transition for the dyadic test.
pub const DYADIC_CONTEXT_MS: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcConfig {
    pub fto_bin_ms: i64,
    pub duration_bin_ms: i64,
    pub sample_count: usize,
    pub sample_window_ms: i64,
    pub seed: u64,
}

impl Default for QcConfig {
    fn default() -> Self {
        QcConfig { fto_bin_ms: 50, duration_bin_ms: 100, sample_count: 3, sample_window_ms: 10_000, seed: 1 }
    }
}

impl QcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fto_bin_ms <= 0 || self.duration_bin_ms <= 0 {
            return Err(Error::InvalidConfig("histogram bin widths must be positive".into()));
        }
        if self.sample_window_ms <= 0 {
            return Err(Error::InvalidConfig("sample window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub prev_uid: String,
    pub next_uid: String,
    pub fto_ms: i64,
    pub prev_duration_ms: i64,
    pub next_duration_ms: i64,
    pub dyadic: bool,
}

/// Whether a turn overlaps `[lo, hi)`. Zero-length turns count when their
/// instant falls inside the window.
fn intersects(t: &Turn, lo: i64, hi: i64) -> bool {
    if t.begin_ms == t.end_ms {
        lo <= t.begin_ms && t.begin_ms < hi
    } else {
        t.begin_ms < hi && t.end_ms > lo
    }
}

/// Timed turns of one recording, ordered by onset.
struct Recording<'a> {
    turns: Vec<&'a Turn>,
    max_duration: i64,
}

impl<'a> Recording<'a> {
    fn new(turns: &'a [Turn]) -> Self {
        let turns: Vec<&Turn> = turns.iter().filter(|t| !t.is_untimed()).collect();
        let max_duration = turns.iter().map(|t| t.duration_ms()).max().unwrap_or(0);
        Recording { turns, max_duration }
    }

    fn window(&self, lo: i64, hi: i64) -> impl Iterator<Item = &'a Turn> + '_ {
        let start = self.turns.partition_point(|t| t.begin_ms < lo - self.max_duration);
        let stop = self.turns.partition_point(|t| t.begin_ms < hi);
        self.turns[start..stop.max(start)].iter().copied().filter(move |t| intersects(t, lo, hi))
    }

    /// Distinct participants in the window, giving up once `limit` is exceeded.
    fn participants(&self, lo: i64, hi: i64, limit: usize) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::new();
        for t in self.window(lo, hi) {
            seen.insert(t.participant.as_str());
            if seen.len() > limit {
                break;
            }
        }
        seen
    }
}

/// Speaker-change transitions between onset-consecutive timed turns of
/// each recording.
pub fn compute_transitions(table: &CorpusTable) -> Vec<TransitionRecord> {
    let mut out = Vec::new();
    for group in table.by_source() {
        let rec = Recording::new(group);
        for pair in rec.turns.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            if prev.participant == next.participant {
                continue;
            }
            let lo = prev.begin_ms - DYADIC_CONTEXT_MS;
            let hi = next.end_ms + DYADIC_CONTEXT_MS;
            out.push(TransitionRecord {
                prev_uid: prev.uid.clone(),
                next_uid: next.uid.clone(),
                fto_ms: next.begin_ms - prev.end_ms,
                prev_duration_ms: prev.duration_ms(),
                next_duration_ms: next.duration_ms(),
                dyadic: rec.participants(lo, hi, 2).len() == 2,
            });
        }
    }
    out
}

/// Total length of the union of `[begin, end)` intervals.
pub fn union_length(intervals: impl IntoIterator<Item = (i64, i64)>) -> i64 {
    let mut v: Vec<(i64, i64)> = intervals.into_iter().filter(|(b, e)| e > b).collect();
    v.sort_unstable();
    let mut total = 0;
    let mut current: Option<(i64, i64)> = None;
    for (b, e) in v {
        match current {
            Some((cb, ce)) if b <= ce => current = Some((cb, ce.max(e))),
            Some((cb, ce)) => {
                total += ce - cb;
                current = Some((b, e));
            }
            None => current = Some((b, e)),
        }
    }
    if let Some((cb, ce)) = current {
        total += ce - cb;
    }
    total
}

/// Annotated time summed per recording, so that turns from different
/// recordings never merge.
pub fn annotated_ms(table: &CorpusTable) -> i64 {
    table.by_source().map(|g| union_length(g.iter().map(|t| (t.begin_ms, t.end_ms)))).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub total_annotated_ms: i64,
    /// `raw_density` clamped to `[0, 1]`.
    pub density: f64,
    pub raw_density: f64,
    pub over_density: bool,
    pub turns_per_minute: f64,
}

pub fn annotation_density(table: &CorpusTable, recording_ms: i64) -> Result<Density> {
    if recording_ms <= 0 {
        return Err(Error::ZeroRecording);
    }
    let total = annotated_ms(table);
    let raw = total as f64 / recording_ms as f64;
    Ok(Density {
        total_annotated_ms: total,
        density: raw.clamp(0.0, 1.0),
        raw_density: raw,
        over_density: raw > 1.0,
        turns_per_minute: table.len() as f64 / (recording_ms as f64 / 60_000.0),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub token: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankFrequency {
    pub series: Vec<RankEntry>,
    pub zipf_slope: f64,
    pub zipf_r2: f64,
}

pub fn token_counts(table: &CorpusTable, segmenter: &dyn Segmenter) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for t in table.turns().iter().filter(|t| !t.is_unk()) {
        for tok in tokenize(&t.utterance, segmenter, true) {
            if tok != UNK {
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Token ranks by descending count (ties alphabetical) and the OLS slope
/// of log10(count) on log10(rank) over all ranks.
pub fn rank_frequency(table: &CorpusTable, segmenter: &dyn Segmenter) -> Result<RankFrequency> {
    let mut counts: Vec<(String, u64)> = token_counts(table, segmenter).into_iter().collect();
    if counts.len() < 2 {
        return Err(Error::TooFewTokens);
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let series: Vec<RankEntry> = counts
        .into_iter()
        .enumerate()
        .map(|(i, (token, count))| RankEntry { rank: i + 1, token, count })
        .collect();
    let points: Vec<(f64, f64)> = series.iter().map(|e| ((e.rank as f64).log10(), (e.count as f64).log10())).collect();
    let fit = ols(&points).ok_or(Error::TooFewTokens)?;
    Ok(RankFrequency { series, zipf_slope: fit.slope, zipf_r2: fit.r2 })
}

/// 64-bit linear congruential generator. Each draw advances
/// `state = state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`
/// and returns the new state; the seed is the initial state.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Lcg { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Index in `0..n` from the high 31 bits of the next state.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.next_u64() >> 33) % n as u64) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTurn {
    pub uid: String,
    pub begin_ms: i64,
    pub end_ms: i64,
    pub participant: String,
    pub utterance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicSample {
    pub source: String,
    pub start_ms: i64,
    pub end_ms: i64,
    pub participants: Vec<String>,
    pub turns: Vec<SampleTurn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: Vec<DyadicSample>,
    pub candidates: usize,
    pub shortfall: bool,
}

/// Candidate windows start at each timed turn onset; a window qualifies
/// when exactly two participants and at least two turns fall inside it.
/// `n` candidates are drawn without replacement (partial Fisher–Yates
/// driven by [`Lcg`]) and returned in table order.
pub fn sample_dyadic_stretches(table: &CorpusTable, n: usize, window_ms: i64, seed: u64) -> Sampling {
    let mut candidates: Vec<DyadicSample> = Vec::new();
    for group in table.by_source() {
        let rec = Recording::new(group);
        let mut last_start = None;
        for t in &rec.turns {
            if last_start == Some(t.begin_ms) {
                continue;
            }
            last_start = Some(t.begin_ms);
            let (lo, hi) = (t.begin_ms, t.begin_ms + window_ms);
            if rec.participants(lo, hi, 2).len() != 2 {
                continue;
            }
            let turns: Vec<&Turn> = rec.window(lo, hi).collect();
            if turns.len() < 2 {
                continue;
            }
            let participants: BTreeSet<&str> = turns.iter().map(|t| t.participant.as_str()).collect();
            candidates.push(DyadicSample {
                source: t.source.clone(),
                start_ms: lo,
                end_ms: hi,
                participants: participants.into_iter().map(str::to_string).collect(),
                turns: turns
                    .into_iter()
                    .map(|t| SampleTurn {
                        uid: t.uid.clone(),
                        begin_ms: t.begin_ms,
                        end_ms: t.end_ms,
                        participant: t.participant.clone(),
                        utterance: t.utterance.clone(),
                    })
                    .collect(),
            });
        }
    }
    let total = candidates.len();
    if total <= n {
        return Sampling { samples: candidates, candidates: total, shortfall: total < n };
    }
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = Lcg::new(seed);
    for i in 0..n {
        let j = i + rng.below(total - i);
        order.swap(i, j);
    }
    let mut chosen: Vec<usize> = order[..n].to_vec();
    chosen.sort_unstable();
    let mut slots: Vec<Option<DyadicSample>> = candidates.into_iter().map(Some).collect();
    let samples = chosen.into_iter().map(|i| slots[i].take().expect("indices are distinct")).collect();
    Sampling { samples, candidates: total, shortfall: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub corpus_id: String,
    pub language: String,
    pub n_turns: usize,
    pub n_sources: usize,
    pub total_annotated_ms: i64,
    pub recording_ms: i64,
    /// True when at least one recording length was taken from its last
    /// turn end instead of the media file.
    pub recording_estimated: bool,
    pub density: f64,
    pub over_density: bool,
    pub turns_per_minute: f64,
    pub n_unk: usize,
    pub n_untimed: usize,
    pub n_transitions: usize,
    pub n_dyadic_transitions: usize,
    pub transition_histogram: HistogramSeries,
    pub duration_histogram: HistogramSeries,
    /// `(fto_ms, next turn duration_ms)` for dyadic transitions.
    pub duration_vs_fto: Vec<(i64, i64)>,
    pub rank_frequency: Vec<RankEntry>,
    /// `None` when the corpus has fewer than two distinct tokens.
    pub zipf_slope: Option<f64>,
    pub zipf_r2: Option<f64>,
    pub samples: Vec<DyadicSample>,
    pub sample_shortfall: bool,
    pub seed: u64,
    pub source_check: BTreeMap<String, SourceCheck>,
}

/// Assembles the report. `media` is the result of [`verify_sources`], or
/// `None` when no media directory is available.
pub fn build_report(
    table: &CorpusTable,
    media: Option<&BTreeMap<String, SourceCheck>>,
    cfg: &QcConfig,
) -> Result<AssessmentReport> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    cfg.validate()?;

    let mut recording_ms = 0;
    let mut estimated = false;
    let mut source_check = BTreeMap::new();
    for group in table.by_source() {
        let source = &group[0].source;
        let check = media.and_then(|m| m.get(source)).cloned().unwrap_or_default();
        match check.duration_ms {
            Some(d) => recording_ms += d,
            None => {
                estimated = true;
                recording_ms += group.iter().map(|t| t.end_ms).max().unwrap_or(0);
            }
        }
        source_check.insert(source.clone(), check);
    }

    let total_annotated_ms = annotated_ms(table);
    let (raw_density, turns_per_minute) = if recording_ms > 0 {
        let r = recording_ms as f64;
        (total_annotated_ms as f64 / r, table.len() as f64 / (r / 60_000.0))
    } else {
        (0.0, 0.0)
    };

    let transitions = compute_transitions(table);
    let dyadic: Vec<&TransitionRecord> = transitions.iter().filter(|t| t.dyadic).collect();
    let fto_origin = -(cfg.fto_bin_ms / 2);
    let transition_histogram = HistogramSeries::from_values(dyadic.iter().map(|t| t.fto_ms), cfg.fto_bin_ms, fto_origin);
    let duration_histogram = HistogramSeries::from_values(
        table.turns().iter().filter(|t| !t.is_untimed()).map(|t| t.duration_ms()),
        cfg.duration_bin_ms,
        0,
    );

    let (rank_frequency, zipf_slope, zipf_r2) = match rank_frequency(table, &WhitespaceSegmenter) {
        Ok(rf) => (rf.series, Some(rf.zipf_slope), Some(rf.zipf_r2)),
        Err(Error::TooFewTokens) => {
            let mut series: Vec<RankEntry> = token_counts(table, &WhitespaceSegmenter)
                .into_iter()
                .map(|(token, count)| RankEntry { rank: 1, token, count })
                .collect();
            series.truncate(1);
            (series, None, None)
        }
        Err(e) => return Err(e),
    };

    let sampling = sample_dyadic_stretches(table, cfg.sample_count, cfg.sample_window_ms, cfg.seed);

    Ok(AssessmentReport {
        corpus_id: table.corpus_id.clone(),
        language: table.language.clone(),
        n_turns: table.len(),
        n_sources: source_check.len(),
        total_annotated_ms,
        recording_ms,
        recording_estimated: estimated,
        density: raw_density.clamp(0.0, 1.0),
        over_density: raw_density > 1.0,
        turns_per_minute,
        n_unk: table.turns().iter().filter(|t| t.is_unk()).count(),
        n_untimed: table.turns().iter().filter(|t| t.is_untimed()).count(),
        n_transitions: transitions.len(),
        n_dyadic_transitions: dyadic.len(),
        transition_histogram,
        duration_histogram,
        duration_vs_fto: dyadic.iter().map(|t| (t.fto_ms, t.next_duration_ms)).collect(),
        rank_frequency,
        zipf_slope,
        zipf_r2,
        samples: sampling.samples,
        sample_shortfall: sampling.shortfall,
        seed: cfg.seed,
        source_check,
    })
}
