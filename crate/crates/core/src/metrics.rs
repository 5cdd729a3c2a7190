//! Mean performance under corruption (mPC).
//!
//! Consumes a grid of precomputed detection scores `P[C, S]` (mAP
//! percentages, one per corruption type and severity level) and averages
//! first over severities, then over corruptions.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 3] = ["corruption", "severity", "map"];

/// Known benchmark grid shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetMode {
    /// Four adverse-weather domains, one severity each.
    Dwd,
    /// Fifteen corruption types at five severities.
    CityscapesC,
    /// Shape inferred from the file.
    Custom,
}

impl DatasetMode {
    /// `(N_C, N_S)` or `None` for [`DatasetMode::Custom`].
    pub fn expected_shape(self) -> Option<(usize, usize)> {
        match self {
            DatasetMode::Dwd => Some((4, 1)),
            DatasetMode::CityscapesC => Some((15, 5)),
            DatasetMode::Custom => None,
        }
    }
}

impl std::str::FromStr for DatasetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dwd" => Ok(DatasetMode::Dwd),
            "cityscapes_c" => Ok(DatasetMode::CityscapesC),
            "custom" => Ok(DatasetMode::Custom),
            other => Err(Error::invalid(format!(
                "unknown dataset mode {other:?} (expected dwd, cityscapes_c or custom)"
            ))),
        }
    }
}

/// A complete, validated `corruption x severity` score grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionResultsTable {
    /// Corruption names in first-appearance order.
    corruptions: Vec<String>,
    num_severities: usize,
    /// `scores[c][s - 1]`
    scores: Vec<Vec<f64>>,
}

impl CorruptionResultsTable {
    /// Builds a table from `(corruption, severity, score)` cells. Severities
    /// are 1-based; every corruption must cover `1..=N_S`.
    pub fn from_cells<I, S>(cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u32, f64)>,
        S: Into<String>,
    {
        let rows = cells
            .into_iter()
            .enumerate()
            .map(|(i, (c, s, v))| (i + 1, c.into(), s, v));
        Self::from_rows(rows)
    }

    fn from_rows(rows: impl Iterator<Item = (usize, String, u32, f64)>) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut cells: HashMap<String, BTreeMap<u32, f64>> = HashMap::new();
        let mut last_row = 0;
        for (row, name, severity, score) in rows {
            last_row = row;
            if name.is_empty() {
                return Err(Error::Parse { row, message: "empty corruption name".into() });
            }
            if severity == 0 {
                return Err(Error::Parse { row, message: "severity must be a positive integer".into() });
            }
            if !score.is_finite() || score < 0.0 {
                return Err(Error::Parse {
                    row,
                    message: format!("score {score} must be finite and nonnegative"),
                });
            }
            let entry = cells.entry(name.clone()).or_insert_with(|| {
                order.push(name.clone());
                BTreeMap::new()
            });
            if entry.insert(severity, score).is_some() {
                return Err(Error::Parse {
                    row,
                    message: format!("duplicate cell ({name}, {severity})"),
                });
            }
        }
        if order.is_empty() {
            return Err(Error::Parse { row: last_row, message: "no result rows".into() });
        }
        let num_severities = cells
            .values()
            .flat_map(|m| m.keys().copied())
            .max()
            .unwrap_or(0) as usize;
        let mut scores = Vec::with_capacity(order.len());
        for name in &order {
            let m = &cells[name];
            let mut row = Vec::with_capacity(num_severities);
            for s in 1..=num_severities as u32 {
                match m.get(&s) {
                    Some(v) => row.push(*v),
                    None => {
                        return Err(Error::Parse {
                            row: last_row,
                            message: format!("missing cell ({name}, {s})"),
                        })
                    }
                }
            }
            scores.push(row);
        }
        Ok(Self {
            corruptions: order,
            num_severities,
            scores,
        })
    }

    pub fn num_corruptions(&self) -> usize {
        self.corruptions.len()
    }

    pub fn num_severities(&self) -> usize {
        self.num_severities
    }

    pub fn corruptions(&self) -> &[String] {
        &self.corruptions
    }

    pub fn score(&self, corruption: usize, severity: usize) -> f64 {
        self.scores[corruption][severity - 1]
    }

    /// Mean over severities for each corruption, in table order.
    pub fn corruption_means(&self) -> Vec<f64> {
        self.scores
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    /// Fails unless the grid is `N_C x N_S` for the given mode.
    pub fn check_mode(&self, mode: DatasetMode) -> Result<()> {
        match mode.expected_shape() {
            Some((nc, ns)) if (nc, ns) != (self.num_corruptions(), self.num_severities()) => {
                Err(Error::ShapeMismatch {
                    expected: format!("{nc} corruptions x {ns} severities"),
                    found: format!(
                        "{} corruptions x {} severities",
                        self.num_corruptions(),
                        self.num_severities()
                    ),
                })
            }
            _ => Ok(()),
        }
    }
}

/// Parses `corruption,severity,map` CSV text. Row numbers in errors count
/// the header as row 1.
pub fn parse_results(text: &str) -> Result<CorruptionResultsTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse {
            row: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                RESULTS_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if record.len() != 3 {
            return Err(Error::Parse {
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let severity: u32 = record[1].parse().map_err(|_| Error::Parse {
            row,
            message: format!("severity {:?} is not a positive integer", &record[1]),
        })?;
        let score: f64 = record[2].parse().map_err(|_| Error::Parse {
            row,
            message: format!("score {:?} is not numeric", &record[2]),
        })?;
        rows.push((row, record[0].to_owned(), severity, score));
    }
    CorruptionResultsTable::from_rows(rows.into_iter())
}

/// `(1/N_C) * sum_C (1/N_S) * sum_S P[C, S]`
pub fn mpc(table: &CorruptionResultsTable) -> f64 {
    let means = table.corruption_means();
    means.iter().sum::<f64>() / means.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorruptionSummary {
    pub corruption: String,
    pub mean_map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub corruptions: Vec<CorruptionSummary>,
    pub num_corruptions: usize,
    pub num_severities: usize,
    pub mpc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clean_map: Option<f64>,
    /// A previously published mPC to compare against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_mpc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReportOptions {
    pub clean_score: Option<f64>,
    pub reference_mpc: Option<f64>,
}

pub fn report(table: &CorruptionResultsTable, opts: ReportOptions) -> Report {
    let value = mpc(table);
    Report {
        corruptions: table
            .corruptions()
            .iter()
            .zip(table.corruption_means())
            .map(|(c, m)| CorruptionSummary {
                corruption: c.clone(),
                mean_map: m,
            })
            .collect(),
        num_corruptions: table.num_corruptions(),
        num_severities: table.num_severities(),
        mpc: value,
        clean_map: opts.clean_score,
        reference_mpc: opts.reference_mpc,
        reference_delta: opts.reference_mpc.map(|r| value - r),
    }
}

impl Report {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self
            .corruptions
            .iter()
            .map(|c| c.corruption.len())
            .chain(["corruption".len(), "mPC".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} corruptions x {} severities",
            self.num_corruptions, self.num_severities
        );
        if let Some(clean) = self.clean_map {
            let _ = writeln!(out, "{:<width$}  {:>8.2}", "clean", clean);
        }
        let _ = writeln!(out, "{:<width$}  {:>8}", "corruption", "mAP");
        for c in &self.corruptions {
            let _ = writeln!(out, "{:<width$}  {:>8.2}", c.corruption, c.mean_map);
        }
        let _ = writeln!(out, "{:<width$}  {:>8.2}", "mPC", self.mpc);
        if let (Some(r), Some(d)) = (self.reference_mpc, self.reference_delta) {
            let _ = writeln!(out, "reference mPC {r:.2}, delta {d:+.2}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DWD_PHYSAUG: [f64; 4] = [44.9, 41.2, 23.1, 40.8];
    const DWD_OA_DG: [f64; 4] = [38.0, 33.9, 16.8, 38.3];
    const DWD_NAMES: [&str; 4] = ["night_sunny", "dusk_rainy", "night_rainy", "daytime_foggy"];

    fn single_severity(names: &[&str], values: &[f64]) -> CorruptionResultsTable {
        CorruptionResultsTable::from_cells(names.iter().zip(values).map(|(n, v)| (*n, 1, *v))).unwrap()
    }

    #[test]
    fn dwd_rows() {
        let t = single_severity(&DWD_NAMES, &DWD_PHYSAUG);
        assert_eq!((t.num_corruptions(), t.num_severities()), (4, 1));
        assert!((mpc(&t) - 37.5).abs() < 1e-9);
        let t = single_severity(&DWD_NAMES, &DWD_OA_DG);
        assert!((mpc(&t) - 31.75).abs() < 1e-9);
    }

    #[test]
    fn constant_cells() {
        let cells = (1..=3).flat_map(|s| ["a", "b"].map(|c| (c, s, 7.25)));
        assert!((mpc(&CorruptionResultsTable::from_cells(cells).unwrap()) - 7.25).abs() < 1e-12);
    }

    #[test]
    fn parses_csv() {
        let text = "corruption,severity,map\nfog,1,30\nfog,2,20\nsnow,1,10\nsnow,2,0\n";
        let t = parse_results(text).unwrap();
        assert_eq!(t.corruptions(), &["fog", "snow"]);
        assert_eq!(t.num_severities(), 2);
        assert_eq!(t.score(1, 1), 10.0);
        assert!((mpc(&t) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn missing_cell_is_named() {
        let text = "corruption,severity,map\nfog,1,1\nfog,2,1\nsnow,1,1\nsnow,2,1\nsnow,3,1\n";
        match parse_results(text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("(fog, 3)"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_cell_is_named() {
        let text = "corruption,severity,map\nsnow,1,1\nsnow,2,1\nsnow,2,3\n";
        match parse_results(text) {
            Err(Error::Parse { row, message }) => {
                assert_eq!(row, 4);
                assert!(message.contains("(snow, 2)"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_fields_report_rows() {
        let cases = [
            ("corruption,severity,map\nfog,1,abc\n", 2),
            ("corruption,severity,map\nfog,1,1\nfog,x,1\n", 3),
            ("corruption,severity,map\nfog,0,1\n", 2),
            ("corruption,severity,map\nfog,1,-4\n", 2),
            ("corruption,severity,map\nfog,1\n", 2),
            ("name,level,score\nfog,1,1\n", 1),
        ];
        for (text, want) in cases {
            match parse_results(text) {
                Err(Error::Parse { row, .. }) => assert_eq!(row, want, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn empty_results_rejected() {
        assert!(parse_results("corruption,severity,map\n").is_err());
    }

    #[test]
    fn mode_shapes() {
        let t = single_severity(&DWD_NAMES, &DWD_PHYSAUG);
        assert!(t.check_mode(DatasetMode::Dwd).is_ok());
        assert!(t.check_mode(DatasetMode::Custom).is_ok());
        assert!(matches!(t.check_mode(DatasetMode::CityscapesC), Err(Error::ShapeMismatch { .. })));
        assert_eq!("cityscapes_c".parse::<DatasetMode>().unwrap(), DatasetMode::CityscapesC);
        assert!("imagenet_c".parse::<DatasetMode>().is_err());
    }

    #[test]
    fn report_columns() {
        let t = single_severity(&["only"], &[12.0]);
        let r = report(&t, ReportOptions::default());
        assert_eq!(r.mpc, 12.0);
        assert!(!r.to_text().contains("clean"));
        assert!(!r.to_json().contains("clean_map"));
        let r = report(&t, ReportOptions { clean_score: Some(42.6), reference_mpc: Some(12.5) });
        assert!(r.to_text().contains("clean"));
        assert!(r.to_text().contains("delta -0.50"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["clean_map"], 42.6);
        assert_eq!(v["corruptions"][0]["corruption"], "only");
    }

    proptest! {
        #[test]
        fn grand_mean_and_permutation(
            values in proptest::collection::vec(0.0f64..100.0, 12),
            rot in 0usize..12,
        ) {
            let cells: Vec<(String, u32, f64)> = values
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("c{}", i / 3), (i % 3) as u32 + 1, *v))
                .collect();
            let t = CorruptionResultsTable::from_cells(cells.clone()).unwrap();
            let grand = values.iter().sum::<f64>() / 12.0;
            prop_assert!((mpc(&t) - grand).abs() < 1e-12);

            let mut rotated = cells.clone();
            rotated.rotate_left(rot);
            let t2 = CorruptionResultsTable::from_cells(rotated).unwrap();
            prop_assert!((mpc(&t2) - mpc(&t)).abs() < 1e-12);

            let mut bumped = cells;
            bumped[rot].2 += 1.0;
            let t3 = CorruptionResultsTable::from_cells(bumped).unwrap();
            prop_assert!(mpc(&t3) >= mpc(&t));
        }
    }
}
