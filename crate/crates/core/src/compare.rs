//! Two-corpus comparison: utterance duration distributions and
//! distinctive tokens by a rank-normalised Scaled F score.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CorpusTable;
use crate::stats::{average_ranks, median, HistogramSeries, Welford};
use crate::svg::{plain, Chart};
use crate::text::{is_bracketed_tag, tokenize, WhitespaceSegmenter};

pub const SFS_VARIANT: &str = "rank";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub bin_width_ms: i64,
    pub min_count: usize,
    pub top_k: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { bin_width_ms: 100, min_count: 5, top_k: 20 }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_width_ms <= 0 {
            return Err(Error::InvalidConfig("bin_width_ms must be positive".into()));
        }
        if self.min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationDistribution {
    pub n: usize,
    pub mean_ms: f64,
    /// Sample standard deviation; 0 when `single_observation`.
    pub sd_ms: f64,
    pub single_observation: bool,
    pub median_ms: f64,
    /// Midpoint of the fullest histogram bin (lowest bin on ties).
    pub modal_ms: i64,
    pub histogram: HistogramSeries,
    /// Per non-`[unk]` turn.
    pub mean_words: f64,
    pub mean_chars: f64,
}

/// Durations of timed turns, binned as `[k*w, (k+1)*w)`.
pub fn duration_distribution(table: &CorpusTable, bin_width_ms: i64) -> Result<DurationDistribution> {
    if bin_width_ms <= 0 {
        return Err(Error::InvalidConfig("bin width must be positive".into()));
    }
    let timed: Vec<_> = table.turns().iter().filter(|t| !t.is_untimed()).collect();
    if timed.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut durations: Vec<i64> = timed.iter().map(|t| t.duration_ms()).collect();
    let mut w = Welford::default();
    for &d in &durations {
        w.push(d as f64);
    }
    let histogram = HistogramSeries::from_values(durations.iter().copied(), bin_width_ms, 0);
    durations.sort_unstable();
    let modal_ms = histogram.bin_center(histogram.modal_bin().expect("non-empty histogram"));

    let contentful: Vec<_> = timed.iter().filter(|t| !t.is_unk()).collect();
    let (mut words, mut chars) = (0usize, 0usize);
    for t in &contentful {
        words += tokenize(&t.utterance, &WhitespaceSegmenter, false).iter().filter(|w| !is_bracketed_tag(w)).count();
        chars += t.utterance.chars().count();
    }
    let per_turn = |x: usize| if contentful.is_empty() { 0.0 } else { x as f64 / contentful.len() as f64 };

    Ok(DurationDistribution {
        n: durations.len(),
        mean_ms: w.mean(),
        sd_ms: w.sd(),
        single_observation: durations.len() == 1,
        median_ms: median(&durations).expect("non-empty"),
        modal_ms,
        histogram,
        mean_words: per_turn(words),
        mean_chars: per_turn(chars),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAssociation {
    pub token: String,
    pub count_a: u64,
    pub count_b: u64,
    /// Positive when distinctive of corpus A.
    pub score: f64,
}

/// Lowercased token counts, skipping `[unk]` turns and bracketed tags.
pub fn association_counts(table: &CorpusTable) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for t in table.turns().iter().filter(|t| !t.is_unk()) {
        for tok in tokenize(&t.utterance, &WhitespaceSegmenter, true) {
            if !is_bracketed_tag(&tok) {
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn harmonic(x: f64, y: f64) -> f64 {
    if x + y == 0.0 { 0.0 } else { 2.0 * x * y / (x + y) }
}

fn category_f(ca: &[f64], cb: &[f64], total_a: f64) -> Vec<f64> {
    let precision: Vec<f64> = ca.iter().zip(cb).map(|(a, b)| a / (a + b)).collect();
    let share: Vec<f64> = ca.iter().map(|a| a / total_a).collect();
    let n1 = (ca.len() + 1) as f64;
    let rp = average_ranks(&precision);
    let rf = average_ranks(&share);
    rp.iter().zip(&rf).map(|(p, f)| harmonic(p / n1, f / n1)).collect()
}

/// Scaled F score with rank normalisation.
///
/// For each token with `count_a + count_b >= min_count`, precision
/// `count_a / (count_a + count_b)` and frequency share `count_a / N_a` are
/// replaced by their average rank over the retained tokens divided by
/// `n + 1`; `F_a` is their harmonic mean. `F_b` is the same with the
/// corpora swapped, and the score is `F_a − F_b`. `N_a` counts every token
/// of A, including those below `min_count`. Sorted by score descending,
/// then token.
pub fn scaled_f_score(a: &CorpusTable, b: &CorpusTable, min_count: usize) -> Result<Vec<TokenAssociation>> {
    let (counts_a, counts_b) = (association_counts(a), association_counts(b));
    let (total_a, total_b): (u64, u64) = (counts_a.values().sum(), counts_b.values().sum());
    for total in [total_a, total_b] {
        if (total as usize) < min_count || total == 0 {
            return Err(Error::CorpusTooSmall { tokens: total as usize, min_count });
        }
    }
    let vocab: BTreeSet<&String> = counts_a.keys().chain(counts_b.keys()).collect();
    let kept: Vec<(&String, u64, u64)> = vocab
        .into_iter()
        .map(|t| (t, counts_a.get(t).copied().unwrap_or(0), counts_b.get(t).copied().unwrap_or(0)))
        .filter(|(_, x, y)| (x + y) as usize >= min_count)
        .collect();
    let ca: Vec<f64> = kept.iter().map(|k| k.1 as f64).collect();
    let cb: Vec<f64> = kept.iter().map(|k| k.2 as f64).collect();
    let fa = category_f(&ca, &cb, total_a as f64);
    let fb = category_f(&cb, &ca, total_b as f64);
    let mut out: Vec<TokenAssociation> = kept
        .iter()
        .enumerate()
        .map(|(i, (t, x, y))| TokenAssociation { token: (*t).clone(), count_a: *x, count_b: *y, score: fa[i] - fb[i] })
        .collect();
    out.sort_by(|p, q| q.score.total_cmp(&p.score).then_with(|| p.token.cmp(&q.token)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub corpus_a: String,
    pub corpus_b: String,
    pub config: CompareConfig,
    pub sfs_variant: String,
    pub duration_a: DurationDistribution,
    pub duration_b: DurationDistribution,
    /// `modal_ms` of B over that of A.
    pub modal_ratio: f64,
    pub overlap_coefficient: f64,
    /// Highest-scoring tokens (distinctive of A).
    pub top_a: Vec<TokenAssociation>,
    /// Lowest-scoring tokens (distinctive of B), most negative first.
    pub top_b: Vec<TokenAssociation>,
    #[serde(skip)]
    pub associations: Vec<TokenAssociation>,
}

pub fn compare_corpora(a: &CorpusTable, b: &CorpusTable, cfg: &CompareConfig) -> Result<Comparison> {
    cfg.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyTable);
    }
    let duration_a = duration_distribution(a, cfg.bin_width_ms)?;
    let duration_b = duration_distribution(b, cfg.bin_width_ms)?;
    let associations = scaled_f_score(a, b, cfg.min_count)?;
    let top_a = associations.iter().filter(|t| t.score > 0.0).take(cfg.top_k).cloned().collect();
    let top_b = associations.iter().rev().filter(|t| t.score < 0.0).take(cfg.top_k).cloned().collect();
    Ok(Comparison {
        corpus_a: a.corpus_id.clone(),
        corpus_b: b.corpus_id.clone(),
        config: cfg.clone(),
        sfs_variant: SFS_VARIANT.to_string(),
        modal_ratio: duration_b.modal_ms as f64 / duration_a.modal_ms as f64,
        overlap_coefficient: duration_a.histogram.overlap_coefficient(&duration_b.histogram),
        duration_a,
        duration_b,
        top_a,
        top_b,
        associations,
    })
}

/// Both duration histograms as normalised step lines on one chart.
pub fn render_duration_overlay(cmp: &Comparison) -> String {
    let series = [(&cmp.duration_a, &cmp.corpus_a, "#c2524a"), (&cmp.duration_b, &cmp.corpus_b, "#4a7ab5")];
    let w = cmp.config.bin_width_ms;
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    let mut peak: f64 = 0.0;
    for (d, _, _) in &series {
        let n = d.histogram.total() as f64;
        for (&k, &c) in &d.histogram.counts {
            lo = lo.min(k);
            hi = hi.max(k + 1);
            peak = peak.max(c as f64 / n);
        }
    }
    let mut chart = Chart::new(((lo * w) as f64, (hi * w) as f64), (0.0, peak));
    for (i, (d, name, colour)) in series.iter().enumerate() {
        let n = d.histogram.total() as f64;
        let mut pts = Vec::new();
        for k in lo..hi {
            let p = d.histogram.counts.get(&k).copied().unwrap_or(0) as f64 / n;
            pts.push(((k * w) as f64, p));
            pts.push((((k + 1) * w) as f64, p));
        }
        chart.polyline(&pts, colour);
        let legend = format!("{name}: mode {} ms, n = {}", d.modal_ms, d.n);
        chart.label(crate::svg::WIDTH - 20.0, 44.0 + 14.0 * i as f64, &legend, "end", 10);
    }
    chart.finish("Utterance durations", "duration (ms)", "share of turns", plain, plain)
}
