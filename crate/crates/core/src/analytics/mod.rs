//! Corpus-level sentiment aggregation: score distribution, yearly trend and
//! per-journal comparison, with machine-readable CSV tables and chart files.
//!
//! All aggregates consume the normalized score. The numbers live in the CSV
//! tables; charts are presentation only.

pub mod charts;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AbstractRecord;
use crate::scoring::SentimentResult;

/// Default number of uniform bins over [0, 1].
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("year range {from}..={to} is inverted")]
    BadYearRange { from: i32, to: i32 },
    #[error("top_n must be at least 1")]
    BadTopN,
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Score distribution over uniform bins spanning [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` strictly increasing edges from 0 to 1.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bin index for a score: bin i covers edges[i] <= s < edges[i+1], and
    /// s = 1.0 falls in the last bin.
    pub fn bin_of(&self, score: f64) -> usize {
        let last = self.counts.len() - 1;
        let idx = self.bin_edges.partition_point(|&e| e <= score);
        idx.saturating_sub(1).min(last)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Per-year mean scores over a contiguous requested range. Years with no
/// records carry a count of 0 and no mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyTrend {
    pub entries: Vec<YearEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearEntry {
    pub year: i32,
    pub count: u64,
    pub mean_score: Option<f64>,
}

/// Journals ranked by abstract count with per-journal score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalStats {
    pub entries: Vec<JournalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub journal: String,
    pub count: u64,
    pub mean_score: f64,
    /// Population standard deviation; 0 for a single abstract.
    pub std_dev: f64,
}

/// Build a histogram with the given number of uniform bins.
pub fn build_histogram_with_bins(
    results: &[SentimentResult],
    bins: usize,
) -> Result<Histogram, AnalyticsError> {
    if bins == 0 {
        return Err(AnalyticsError::NoBins);
    }
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut histogram = Histogram {
        bin_edges,
        counts: vec![0; bins],
    };
    for result in results {
        let bin = histogram.bin_of(result.normalized_score.clamp(0.0, 1.0));
        histogram.counts[bin] += 1;
    }
    Ok(histogram)
}

/// Build the standard 20-bin histogram of normalized scores.
pub fn build_histogram(results: &[SentimentResult]) -> Histogram {
    build_histogram_with_bins(results, DEFAULT_BINS).expect("default bin count is nonzero")
}

fn score_by_id(results: &[SentimentResult]) -> HashMap<u64, f64> {
    results
        .iter()
        .map(|r| (r.record_id, r.normalized_score))
        .collect()
}

/// Mean normalized score per publication year over [year_from, year_to].
/// Records outside the range are ignored; the returned entries are
/// contiguous and strictly increasing in year.
pub fn yearly_trend(
    records: &[AbstractRecord],
    results: &[SentimentResult],
    year_from: i32,
    year_to: i32,
) -> Result<YearlyTrend, AnalyticsError> {
    if year_from > year_to {
        return Err(AnalyticsError::BadYearRange {
            from: year_from,
            to: year_to,
        });
    }
    let scores = score_by_id(results);
    let span = (year_to - year_from + 1) as usize;
    // accumulate in record-id order so sums do not depend on input order
    let mut scored: Vec<(u64, i32, f64)> = records
        .iter()
        .filter(|r| (year_from..=year_to).contains(&r.year))
        .filter_map(|r| scores.get(&r.record_id).map(|&s| (r.record_id, r.year, s)))
        .collect();
    scored.sort_unstable_by_key(|&(id, _, _)| id);
    let mut sums = vec![0.0f64; span];
    let mut counts = vec![0u64; span];
    for (_, year, score) in scored {
        let slot = (year - year_from) as usize;
        sums[slot] += score;
        counts[slot] += 1;
    }
    let entries = (0..span)
        .map(|i| YearEntry {
            year: year_from + i as i32,
            count: counts[i],
            mean_score: (counts[i] > 0).then(|| sums[i] / counts[i] as f64),
        })
        .collect();
    Ok(YearlyTrend { entries })
}

/// Per-journal count, mean and population standard deviation of the
/// normalized score, ranked by count descending with journal name as the
/// tiebreak, truncated to `top_n`.
pub fn journal_stats(
    records: &[AbstractRecord],
    results: &[SentimentResult],
    top_n: usize,
) -> Result<JournalStats, AnalyticsError> {
    if top_n == 0 {
        return Err(AnalyticsError::BadTopN);
    }
    let scores = score_by_id(results);
    // accumulate in record-id order so sums do not depend on input order
    let mut scored: Vec<(u64, &str, f64)> = records
        .iter()
        .filter_map(|r| {
            scores
                .get(&r.record_id)
                .map(|&s| (r.record_id, r.journal.as_str(), s))
        })
        .collect();
    scored.sort_unstable_by_key(|&(id, _, _)| id);
    let mut grouped: HashMap<&str, Vec<f64>> = HashMap::new();
    for (_, journal, score) in scored {
        grouped.entry(journal).or_default().push(score);
    }
    let mut entries: Vec<JournalEntry> = grouped
        .into_iter()
        .map(|(journal, scores)| {
            let count = scores.len() as u64;
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let variance =
                scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
            JournalEntry {
                journal: journal.to_string(),
                count,
                mean_score: mean,
                std_dev: variance.sqrt(),
            }
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.journal.cmp(&b.journal)));
    entries.truncate(top_n);
    Ok(JournalStats { entries })
}

/// Write the three fixed-schema CSV tables. Returns the paths written.
pub fn write_tables(
    histogram: &Histogram,
    trend: &YearlyTrend,
    stats: &JournalStats,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, AnalyticsError> {
    std::fs::create_dir_all(out_dir).map_err(|source| AnalyticsError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;

    let histogram_path = out_dir.join("histogram.csv");
    let mut w = csv::Writer::from_path(&histogram_path)?;
    w.write_record(["bin_low", "bin_high", "count"])?;
    for (i, &count) in histogram.counts.iter().enumerate() {
        w.write_record([
            histogram.bin_edges[i].to_string(),
            histogram.bin_edges[i + 1].to_string(),
            count.to_string(),
        ])?;
    }
    w.flush().map_err(|source| AnalyticsError::Write {
        path: histogram_path.display().to_string(),
        source,
    })?;

    let trend_path = out_dir.join("trend.csv");
    let mut w = csv::Writer::from_path(&trend_path)?;
    w.write_record(["year", "count", "mean_score"])?;
    for entry in &trend.entries {
        w.write_record([
            entry.year.to_string(),
            entry.count.to_string(),
            entry.mean_score.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|source| AnalyticsError::Write {
        path: trend_path.display().to_string(),
        source,
    })?;

    let journals_path = out_dir.join("journals.csv");
    let mut w = csv::Writer::from_path(&journals_path)?;
    w.write_record(["journal", "count", "mean_score", "std_dev"])?;
    for entry in &stats.entries {
        w.write_record([
            entry.journal.clone(),
            entry.count.to_string(),
            entry.mean_score.to_string(),
            entry.std_dev.to_string(),
        ])?;
    }
    w.flush().map_err(|source| AnalyticsError::Write {
        path: journals_path.display().to_string(),
        source,
    })?;

    Ok(vec![histogram_path, trend_path, journals_path])
}

/// Render the three chart files and the three CSV tables into `out_dir`.
/// Returns all six paths.
pub fn render_charts(
    histogram: &Histogram,
    trend: &YearlyTrend,
    stats: &JournalStats,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, AnalyticsError> {
    let mut paths = charts::render_svg_charts(histogram, trend, stats, out_dir)?;
    paths.extend(write_tables(histogram, trend, stats, out_dir)?);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Star;

    fn result(id: u64, score: f64) -> SentimentResult {
        let label = Star::new(((score * 4.0).round() as u8 + 1).clamp(1, 5)).unwrap();
        SentimentResult::from_persisted(id, label, score)
    }

    fn record(id: u64, journal: &str, year: i32) -> AbstractRecord {
        AbstractRecord {
            record_id: id,
            journal: journal.into(),
            title: format!("T{id}"),
            year,
            abstract_text: format!("text {id}"),
        }
    }

    #[test]
    fn histogram_empty_input() {
        let h = build_histogram(&[]);
        assert_eq!(h.counts, vec![0; 20]);
        assert_eq!(h.bin_edges.len(), 21);
        assert_eq!(h.bin_edges[0], 0.0);
        assert_eq!(*h.bin_edges.last().unwrap(), 1.0);
    }

    #[test]
    fn histogram_edge_rules() {
        let results = vec![result(0, 0.0), result(1, 0.05), result(2, 1.0)];
        let h = build_histogram(&results);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[19], 1);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn histogram_matches_linear_scan_oracle() {
        // 200 deterministic pseudo-random scores
        let mut x = 0x2545F4914F6CDD1Du64;
        let scores: Vec<f64> = (0..200)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                (x % 10_001) as f64 / 10_000.0
            })
            .collect();
        let results: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| result(i as u64, s))
            .collect();
        let h = build_histogram(&results);

        // oracle: per-score linear scan over the stored edges
        let mut expected = vec![0u64; 20];
        for &s in &scores {
            let mut bin = 19;
            for i in 0..20 {
                if h.bin_edges[i] <= s && s < h.bin_edges[i + 1] {
                    bin = i;
                    break;
                }
            }
            expected[bin] += 1;
        }
        assert_eq!(h.counts, expected);
        assert_eq!(h.total(), 200);
    }

    #[test]
    fn trend_singleton() {
        let records = vec![record(0, "J", 2015)];
        let results = vec![result(0, 0.75)];
        let t = yearly_trend(&records, &results, 2015, 2015).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].count, 1);
        assert_eq!(t.entries[0].mean_score, Some(0.75));
    }

    #[test]
    fn trend_gap_years_present_without_mean() {
        let records = vec![record(0, "J", 2010), record(1, "J", 2012)];
        let results = vec![result(0, 0.5), result(1, 0.7)];
        let t = yearly_trend(&records, &results, 2010, 2012).unwrap();
        assert_eq!(t.entries.len(), 3);
        assert_eq!(t.entries[1].year, 2011);
        assert_eq!(t.entries[1].count, 0);
        assert_eq!(t.entries[1].mean_score, None);
    }

    #[test]
    fn trend_matches_grouped_accumulation() {
        // 12 records across 3 years
        let years = [2010, 2010, 2010, 2010, 2011, 2011, 2011, 2012, 2012, 2012, 2012, 2012];
        let scores = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0, 0.5];
        let records: Vec<_> = years
            .iter()
            .enumerate()
            .map(|(i, &y)| record(i as u64, "J", y))
            .collect();
        let results: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| result(i as u64, s))
            .collect();
        let t = yearly_trend(&records, &results, 2010, 2012).unwrap();

        // oracle: grouped sums and counts
        let mut sums: HashMap<i32, (f64, u64)> = HashMap::new();
        for (&y, &s) in years.iter().zip(&scores) {
            let e = sums.entry(y).or_default();
            e.0 += s;
            e.1 += 1;
        }
        for entry in &t.entries {
            let (sum, count) = sums[&entry.year];
            assert_eq!(entry.count, count);
            let expected = sum / count as f64;
            assert!((entry.mean_score.unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn trend_ignores_out_of_range_records() {
        let records = vec![record(0, "J", 2005), record(1, "J", 2015)];
        let results = vec![result(0, 0.9), result(1, 0.4)];
        let t = yearly_trend(&records, &results, 2010, 2020).unwrap();
        let total: u64 = t.entries.iter().map(|e| e.count).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn trend_rejects_inverted_range() {
        assert!(matches!(
            yearly_trend(&[], &[], 2020, 2010),
            Err(AnalyticsError::BadYearRange { .. })
        ));
    }

    #[test]
    fn single_year_range_mean_is_corpus_mean() {
        let records: Vec<_> = (0..9).map(|i| record(i, "J", 2014)).collect();
        let results: Vec<_> = (0..9).map(|i| result(i, (i as f64) / 8.0)).collect();
        let t = yearly_trend(&records, &results, 2014, 2014).unwrap();
        let corpus_mean: f64 =
            results.iter().map(|r| r.normalized_score).sum::<f64>() / results.len() as f64;
        assert!((t.entries[0].mean_score.unwrap() - corpus_mean).abs() < 1e-12);
    }

    #[test]
    fn journal_single_journal_mean() {
        let records = vec![record(0, "Only", 2010), record(1, "Only", 2011)];
        let results = vec![result(0, 0.2), result(1, 0.4)];
        let s = journal_stats(&records, &results, 20).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert!((s.entries[0].mean_score - 0.3).abs() < 1e-12);
        assert_eq!(s.entries[0].count, 2);
    }

    #[test]
    fn journal_ranking_and_truncation() {
        let records = vec![
            record(0, "A", 2010),
            record(1, "A", 2010),
            record(2, "A", 2010),
            record(3, "B", 2010),
            record(4, "B", 2010),
        ];
        let results: Vec<_> = (0..5).map(|i| result(i, 0.5)).collect();
        let s = journal_stats(&records, &results, 1).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.entries[0].journal, "A");
    }

    #[test]
    fn journal_count_tie_breaks_by_name() {
        let records = vec![
            record(0, "Zeta", 2010),
            record(1, "Alpha", 2010),
            record(2, "Zeta", 2011),
            record(3, "Alpha", 2011),
        ];
        let results: Vec<_> = (0..4).map(|i| result(i, 0.5)).collect();
        let s = journal_stats(&records, &results, 20).unwrap();
        assert_eq!(s.entries[0].journal, "Alpha");
        assert_eq!(s.entries[1].journal, "Zeta");
    }

    #[test]
    fn journal_matches_sorted_group_oracle() {
        // 15 journals, varying sizes, top_n larger than the journal count
        let mut records = Vec::new();
        let mut results = Vec::new();
        let mut id = 0u64;
        for j in 0..15usize {
            let size = 1 + (j * 7) % 5;
            for k in 0..size {
                records.push(record(id, &format!("J{j:02}"), 2010));
                results.push(result(id, ((id * 37) % 101) as f64 / 100.0));
                let _ = k;
                id += 1;
            }
        }
        let s = journal_stats(&records, &results, 20).unwrap();
        assert_eq!(s.entries.len(), 15);

        // oracle: group counts then sort
        let mut counts: HashMap<String, u64> = HashMap::new();
        for r in &records {
            *counts.entry(r.journal.clone()).or_default() += 1;
        }
        let mut expected: Vec<(String, u64)> = counts.into_iter().collect();
        expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let got: Vec<(String, u64)> = s
            .entries
            .iter()
            .map(|e| (e.journal.clone(), e.count))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn std_dev_is_population_and_zero_for_singletons() {
        let records = vec![record(0, "A", 2010), record(1, "B", 2010), record(2, "B", 2010)];
        let results = vec![result(0, 0.7), result(1, 0.2), result(2, 0.4)];
        let s = journal_stats(&records, &results, 20).unwrap();
        let a = s.entries.iter().find(|e| e.journal == "A").unwrap();
        assert_eq!(a.std_dev, 0.0);
        let b = s.entries.iter().find(|e| e.journal == "B").unwrap();
        // population: sqrt(((0.2-0.3)^2 + (0.4-0.3)^2) / 2) = 0.1
        assert!((b.std_dev - 0.1).abs() < 1e-12);
    }

    #[test]
    fn corpus_mean_equals_weighted_journal_means() {
        let mut records = Vec::new();
        let mut results = Vec::new();
        for i in 0..60u64 {
            records.push(record(i, &format!("J{}", i % 7), 2010));
            results.push(result(i, ((i * 13) % 97) as f64 / 96.0));
        }
        let s = journal_stats(&records, &results, 100).unwrap();
        let corpus_mean: f64 =
            results.iter().map(|r| r.normalized_score).sum::<f64>() / results.len() as f64;
        let weighted: f64 = s
            .entries
            .iter()
            .map(|e| e.mean_score * e.count as f64)
            .sum::<f64>()
            / results.len() as f64;
        assert!((corpus_mean - weighted).abs() < 1e-9);
    }

    #[test]
    fn tables_round_trip_exactly() {
        let records = vec![record(0, "A", 2010), record(1, "B", 2011)];
        let results = vec![result(0, 0.123456789), result(1, 0.5)];
        let histogram = build_histogram(&results);
        let trend = yearly_trend(&records, &results, 2010, 2011).unwrap();
        let stats = journal_stats(&records, &results, 20).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let paths = write_tables(&histogram, &trend, &stats, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);

        // histogram counts re-parse to the in-memory values
        let mut reader = csv::Reader::from_path(&paths[0]).unwrap();
        let counts: Vec<u64> = reader
            .records()
            .map(|r| r.unwrap().get(2).unwrap().parse().unwrap())
            .collect();
        assert_eq!(counts, histogram.counts);

        // trend means re-parse exactly (float round-trip via Display)
        let mut reader = csv::Reader::from_path(&paths[1]).unwrap();
        for (row, entry) in reader.records().zip(&trend.entries) {
            let row = row.unwrap();
            assert_eq!(row.get(0).unwrap().parse::<i32>().unwrap(), entry.year);
            let mean = row.get(2).unwrap();
            match entry.mean_score {
                Some(m) => assert_eq!(mean.parse::<f64>().unwrap(), m),
                None => assert!(mean.is_empty()),
            }
        }

        // journal stats re-parse exactly
        let mut reader = csv::Reader::from_path(&paths[2]).unwrap();
        for (row, entry) in reader.records().zip(&stats.entries) {
            let row = row.unwrap();
            assert_eq!(row.get(0).unwrap(), entry.journal);
            assert_eq!(row.get(2).unwrap().parse::<f64>().unwrap(), entry.mean_score);
            assert_eq!(row.get(3).unwrap().parse::<f64>().unwrap(), entry.std_dev);
        }
    }

    #[test]
    fn charts_emitted_even_for_empty_corpus() {
        let histogram = build_histogram(&[]);
        let trend = yearly_trend(&[], &[], 2010, 2012).unwrap();
        let stats = journal_stats(&[], &[], 20).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = render_charts(&histogram, &trend, &stats, dir.path()).unwrap();
        assert_eq!(paths.len(), 6);
        for path in &paths {
            let meta = std::fs::metadata(path).unwrap();
            assert!(meta.len() > 0, "{} is empty", path.display());
        }
    }

    #[test]
    fn aggregates_are_permutation_invariant() {
        let records: Vec<_> = (0..10)
            .map(|i| record(i, &format!("J{}", i % 3), 2010 + (i % 4) as i32))
            .collect();
        let results: Vec<_> = (0..10).map(|i| result(i, (i as f64) / 9.0)).collect();

        let mut shuffled_records = records.clone();
        shuffled_records.reverse();
        let mut shuffled_results = results.clone();
        shuffled_results.reverse();

        assert_eq!(
            build_histogram(&results),
            build_histogram(&shuffled_results)
        );
        assert_eq!(
            yearly_trend(&records, &results, 2010, 2013).unwrap(),
            yearly_trend(&shuffled_records, &shuffled_results, 2010, 2013).unwrap()
        );
        assert_eq!(
            journal_stats(&records, &results, 20).unwrap(),
            journal_stats(&shuffled_records, &shuffled_results, 20).unwrap()
        );
    }
}
