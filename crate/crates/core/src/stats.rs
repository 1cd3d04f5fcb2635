//! Small numeric helpers shared by the QC and comparison code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Fixed-width histogram. Bin `k` covers `[origin + k*w, origin + (k+1)*w)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramSeries {
    pub bin_width_ms: i64,
    pub origin_ms: i64,
    pub counts: BTreeMap<i64, u64>,
}

impl HistogramSeries {
    pub fn new(bin_width_ms: i64, origin_ms: i64) -> Self {
        assert!(bin_width_ms > 0, "bin width must be positive");
        HistogramSeries { bin_width_ms, origin_ms, counts: BTreeMap::new() }
    }

    pub fn from_values(values: impl IntoIterator<Item = i64>, bin_width_ms: i64, origin_ms: i64) -> Self {
        let mut h = HistogramSeries::new(bin_width_ms, origin_ms);
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn bin_of(&self, value: i64) -> i64 {
        (value - self.origin_ms).div_euclid(self.bin_width_ms)
    }

    pub fn add(&mut self, value: i64) {
        *self.counts.entry(self.bin_of(value)).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn bin_start(&self, bin: i64) -> i64 {
        self.origin_ms + bin * self.bin_width_ms
    }

    /// Midpoint of a bin, rounded down for odd widths.
    pub fn bin_center(&self, bin: i64) -> i64 {
        self.bin_start(bin) + self.bin_width_ms / 2
    }

    /// Highest-count bin; ties go to the lowest bin.
    pub fn modal_bin(&self) -> Option<i64> {
        let mut best: Option<(i64, u64)> = None;
        for (&k, &c) in &self.counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Σ min(p_i, q_i) over the two normalised histograms. Both must share
    /// width and origin. Returns 0 when either is empty.
    pub fn overlap_coefficient(&self, other: &HistogramSeries) -> f64 {
        assert_eq!(
            (self.bin_width_ms, self.origin_ms),
            (other.bin_width_ms, other.origin_ms),
            "histograms must share binning"
        );
        let (na, nb) = (self.total(), other.total());
        if na == 0 || nb == 0 {
            return 0.0;
        }
        // Σ min(ca/na, cb/nb) = Σ min(ca·nb, cb·na) / (na·nb), summed exactly.
        let mut s: u128 = 0;
        for (k, &ca) in &self.counts {
            if let Some(&cb) = other.counts.get(k) {
                s += (u128::from(ca) * u128::from(nb)).min(u128::from(cb) * u128::from(na));
            }
        }
        s as f64 / (u128::from(na) * u128::from(nb)) as f64
    }
}

/// Ordinary least squares fit of y on x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when y is constant.
    pub r2: f64,
}

pub fn ols(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Single-pass mean and sample standard deviation (n−1 denominator).
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// 0 for fewer than two observations.
    pub fn sd(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }
}

pub fn median(sorted: &[i64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some((sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0),
    }
}

/// 1-based ranks in ascending order of value, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn histogram_bins() {
        let h = HistogramSeries::from_values([-26, -25, 0, 24, 25, 200], 50, -25);
        assert_eq!(h.counts, BTreeMap::from([(-1, 1), (0, 3), (1, 1), (4, 1)]));
        assert_eq!(h.bin_center(0), 0);
        assert_eq!(h.bin_center(4), 200);
        assert_eq!(h.total(), 6);
        assert_eq!(h.modal_bin(), Some(0));
    }

    #[test]
    fn modal_ties_take_lowest() {
        let h = HistogramSeries::from_values([450, 480, 520, 530, 900], 100, 0);
        assert_eq!(h.modal_bin(), Some(4));
        assert_eq!(h.bin_center(4), 450);
        assert_eq!(HistogramSeries::new(100, 0).modal_bin(), None);
    }

    #[test]
    fn overlap() {
        let a = HistogramSeries::from_values([10, 20, 150], 100, 0);
        assert_eq!(a.overlap_coefficient(&a), 1.0);
        let b = HistogramSeries::from_values([510], 100, 0);
        assert_eq!(a.overlap_coefficient(&b), 0.0);
        let c = HistogramSeries::from_values([10, 150], 100, 0);
        assert!((a.overlap_coefficient(&c) - (0.5 + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn zipf_doubling_fit() {
        let pts: Vec<(f64, f64)> =
            [8.0f64, 4.0, 2.0, 1.0].iter().enumerate().map(|(i, c)| (((i + 1) as f64).log10(), c.log10())).collect();
        let fit = ols(&pts).unwrap();
        assert!((fit.slope - -1.4590219582913306).abs() < 1e-12);
        assert!((fit.r2 - 0.960760488307716).abs() < 1e-12);
    }

    #[test]
    fn flat_fit() {
        let fit = ols(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 1.0);
        assert!(ols(&[(1.0, 2.0)]).is_none());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[0.5, 0.1, 0.5, 0.9]), vec![2.5, 1.0, 2.5, 4.0]);
        assert!(average_ranks(&[]).is_empty());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3]), Some(3.0));
        assert_eq!(median(&[1, 2, 4, 10]), Some(3.0));
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(xs in prop::collection::vec(0i64..100_000, 2..200)) {
            let mut w = Welford::default();
            for &x in &xs { w.push(x as f64); }
            let n = xs.len() as f64;
            let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
            let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((w.mean() - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            prop_assert!((w.sd() - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1.0));
        }

        #[test]
        fn histogram_total_and_shift(xs in prop::collection::vec(-50_000i64..50_000, 0..300), k in -1000i64..1000) {
            let h = HistogramSeries::from_values(xs.iter().copied(), 50, -25);
            prop_assert_eq!(h.total(), xs.len() as u64);
            // Shifting by whole bins relabels bins without changing counts.
            let s = HistogramSeries::from_values(xs.iter().map(|x| x + k * 50), 50, -25);
            let shifted: BTreeMap<i64, u64> = h.counts.iter().map(|(b, c)| (b + k, *c)).collect();
            prop_assert_eq!(s.counts, shifted);
        }
    }
}
