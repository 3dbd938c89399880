//! Loading return series from CSV files.
//!
//! The reader accepts comma-separated files with an optional header row. A
//! header is assumed whenever the first line does not parse as numbers in the
//! selected column. Missing values are rejected rather than imputed.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, SgarchError};

/// Minimum sample size accepted by the estimation routines.
pub const MIN_ESTIMATION_LENGTH: usize = 50;

/// An ordered sequence of observations y_1..y_T.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    label: String,
}

impl ReturnSeries {
    /// Builds a series, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(SgarchError::TooShort { needed: 1, got: 0 });
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(SgarchError::NonFinite { row });
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Squared observations.
    pub fn squares(&self) -> Vec<f64> {
        self.values.iter().map(|y| y * y).collect()
    }

    /// The first `n` observations as a new series.
    pub fn head(&self, n: usize) -> Result<Self> {
        Self::new(self.values[..n.min(self.len())].to_vec(), self.label.clone())
    }

    /// Fails unless the series is long enough for estimation.
    pub fn require_estimable(&self) -> Result<()> {
        if self.len() < MIN_ESTIMATION_LENGTH {
            return Err(SgarchError::TooShort {
                needed: MIN_ESTIMATION_LENGTH,
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Which CSV column holds the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Index(i) => write!(f, "{i}"),
            ColumnSelector::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    /// Values are used as given.
    #[default]
    None,
    /// Prices are converted to percentage log returns 100·(ln P_t − ln P_{t−1}).
    LogReturnPct,
}

/// Reads one column of a CSV file into a [`ReturnSeries`].
pub fn load_series(path: &Path, column: &ColumnSelector, transform: Transform) -> Result<ReturnSeries> {
    let file = std::fs::File::open(path).map_err(|source| SgarchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let Some(first) = records.first() else {
        return Err(SgarchError::TooShort { needed: 1, got: 0 });
    };

    // A first line with any non-numeric field is treated as a header.
    let has_header = first.iter().any(|field| field.parse::<f64>().is_err());
    let col = match column {
        ColumnSelector::Index(i) => {
            if *i >= first.len() {
                return Err(SgarchError::MissingColumn(column.to_string()));
            }
            *i
        }
        ColumnSelector::Name(name) => {
            if !has_header {
                return Err(SgarchError::MissingColumn(name.clone()));
            }
            first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| SgarchError::MissingColumn(name.clone()))?
        }
    };

    let body = if has_header { &records[1..] } else { &records[..] };
    let offset = usize::from(has_header);
    let mut raw = Vec::with_capacity(body.len());
    for (i, rec) in body.iter().enumerate() {
        let row = i + offset;
        let value = rec
            .get(col)
            .filter(|s| !s.is_empty())
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or(SgarchError::NonFinite { row })?;
        raw.push(value);
    }

    let label = match column {
        ColumnSelector::Name(n) => n.clone(),
        ColumnSelector::Index(i) if has_header => first.get(*i).unwrap_or_default().to_string(),
        ColumnSelector::Index(i) => format!("column {i}"),
    };

    match transform {
        Transform::None => ReturnSeries::new(raw, label),
        Transform::LogReturnPct => {
            let returns = log_returns_pct(&raw, offset)?;
            ReturnSeries::new(returns, label)
        }
    }
}

/// Percentage log returns; `row_offset` only affects error reporting.
pub fn log_returns_pct(prices: &[f64], row_offset: usize) -> Result<Vec<f64>> {
    if let Some((i, &value)) = prices.iter().enumerate().find(|(_, p)| **p <= 0.0) {
        return Err(SgarchError::NonPositivePrice {
            row: i + row_offset,
            value,
        });
    }
    if prices.len() < 2 {
        return Err(SgarchError::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    Ok(prices
        .windows(2)
        .map(|w| 100.0 * (w[1].ln() - w[0].ln()))
        .collect())
}

/// Writes the series as a single-column CSV with a header row.
pub fn write_series<W: Write>(series: &ReturnSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header = if series.label().is_empty() { "y" } else { series.label() };
    w.write_record([header])?;
    for v in series.values() {
        w.write_record([v.to_string()])?;
    }
    w.flush().map_err(|source| SgarchError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// Sample variance with divisor T.
pub fn sample_variance(series: &ReturnSeries) -> Result<f64> {
    variance(series.values())
}

pub(crate) fn variance(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(SgarchError::TooShort { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn identical_prices_give_zero_return() {
        let r = log_returns_pct(&[100.0, 100.0], 0).unwrap();
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn ten_percent_price_move() {
        let r = log_returns_pct(&[100.0, 110.0], 0).unwrap();
        assert_relative_eq!(r[0], 9.531018, epsilon = 1e-6);
    }

    #[test]
    fn identity_transform_from_file() {
        let f = write_tmp("ret\n0.5\n-1.25\n2\n");
        let s = load_series(f.path(), &ColumnSelector::Name("ret".into()), Transform::None).unwrap();
        assert_eq!(s.values(), &[0.5, -1.25, 2.0]);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn headerless_file_by_index() {
        let f = write_tmp("1,100\n2,110\n3,121\n");
        let s = load_series(f.path(), &ColumnSelector::Index(1), Transform::LogReturnPct).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.values()[0], 100.0 * 1.1f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn missing_column_is_reported() {
        let f = write_tmp("a,b\n1,2\n");
        let err = load_series(f.path(), &ColumnSelector::Name("c".into()), Transform::None).unwrap_err();
        assert!(matches!(err, SgarchError::MissingColumn(_)));
        let err = load_series(f.path(), &ColumnSelector::Index(5), Transform::None).unwrap_err();
        assert!(matches!(err, SgarchError::MissingColumn(_)));
    }

    #[test]
    fn missing_file_is_reported() {
        let err = load_series(Path::new("/nonexistent/x.csv"), &ColumnSelector::Index(0), Transform::None)
            .unwrap_err();
        assert!(matches!(err, SgarchError::Io { .. }));
    }

    #[test]
    fn non_finite_entry_reports_row() {
        let f = write_tmp("y\n1\nNaN\n3\n");
        let err = load_series(f.path(), &ColumnSelector::Index(0), Transform::None).unwrap_err();
        assert!(matches!(err, SgarchError::NonFinite { row: 2 }), "{err}");
        let f = write_tmp("y,z\n1,1\n,2\n");
        let err = load_series(f.path(), &ColumnSelector::Index(0), Transform::None).unwrap_err();
        assert!(matches!(err, SgarchError::NonFinite { row: 2 }), "{err}");
    }

    #[test]
    fn non_positive_price_rejected() {
        let f = write_tmp("p\n100\n0\n");
        let err = load_series(f.path(), &ColumnSelector::Index(0), Transform::LogReturnPct).unwrap_err();
        assert!(matches!(err, SgarchError::NonPositivePrice { row: 2, .. }), "{err}");
    }

    #[test]
    fn sample_variance_examples() {
        let v = |xs: &[f64]| sample_variance(&ReturnSeries::new(xs.to_vec(), "").unwrap()).unwrap();
        assert_eq!(v(&[1.0, 1.0, 1.0]), 0.0);
        assert_relative_eq!(v(&[0.0, 2.0]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(v(&[-1.0, 0.0, 1.0]), 2.0 / 3.0, epsilon = 1e-15);
        assert!(sample_variance(&ReturnSeries::new(vec![1.0], "").unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = ReturnSeries::new(values, "y").unwrap();
            let mut buf = Vec::new();
            write_series(&s, &mut buf).unwrap();
            let f = write_tmp(std::str::from_utf8(&buf).unwrap());
            let back = load_series(f.path(), &ColumnSelector::Name("y".into()), Transform::None).unwrap();
            prop_assert_eq!(back.values(), s.values());
        }

        #[test]
        fn variance_is_shift_invariant(
            values in prop::collection::vec(-10.0f64..10.0, 2..60),
            shift in -100.0f64..100.0,
        ) {
            let a = variance(&values).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let b = variance(&shifted).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
        }
    }
}
