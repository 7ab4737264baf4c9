//! CSV ingestion and emission for series matrices.
//!
//! Schema: header `date,<station1>,<station2>,...`; one row per day,
//! `YYYY-MM-DD` first, then one float per station with an empty cell
//! meaning missing. Values are written with Rust's shortest round-trip
//! float formatting, so write-then-read reproduces the matrix exactly.

use std::path::Path;

use crate::date::Date;
use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

/// Parse a series matrix from CSV text. Errors carry the 1-based line and
/// column of the offending cell.
pub fn parse_series_csv(text: &str) -> Result<SeriesMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::ParseError { line: 1, column: 1, reason: "empty file".into() })?;
    let mut cols = header.split(',');
    let first = cols.next().unwrap_or("");
    if first.trim() != "date" {
        return Err(Error::ParseError {
            line: 1,
            column: 1,
            reason: format!("header must start with 'date', got {first:?}"),
        });
    }
    let stations: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    if stations.is_empty() {
        return Err(Error::ParseError {
            line: 1,
            column: 2,
            reason: "no station columns".into(),
        });
    }
    if stations.iter().any(|s| s.is_empty()) {
        return Err(Error::ParseError {
            line: 1,
            column: 2,
            reason: "empty station name in header".into(),
        });
    }

    let mut dates: Vec<Date> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut mask: Vec<bool> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != stations.len() + 1 {
            return Err(Error::ParseError {
                line: line_no,
                column: fields.len().min(stations.len() + 1),
                reason: format!("expected {} fields, got {}", stations.len() + 1, fields.len()),
            });
        }
        let date = Date::parse_iso(fields[0].trim()).map_err(|_| Error::ParseError {
            line: line_no,
            column: 1,
            reason: format!("invalid date {:?}", fields[0]),
        })?;
        if let Some(last) = dates.last() {
            if date <= *last {
                return Err(Error::NonMonotoneDates { line: line_no });
            }
        }
        dates.push(date);
        for (col, field) in fields[1..].iter().enumerate() {
            let trimmed = field.trim();
            if trimmed.is_empty() {
                values.push(0.0);
                mask.push(false);
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::ParseError {
                line: line_no,
                column: col + 2,
                reason: format!("invalid number {trimmed:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseError {
                    line: line_no,
                    column: col + 2,
                    reason: format!("non-finite value {trimmed:?}"),
                });
            }
            values.push(v);
            mask.push(true);
        }
    }
    if dates.is_empty() {
        return Err(Error::ParseError { line: 2, column: 1, reason: "no data rows".into() });
    }
    SeriesMatrix::new(dates, stations, values, mask)
}

/// Load a series matrix from a CSV file.
pub fn load_series_csv(path: impl AsRef<Path>) -> Result<SeriesMatrix> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_series_csv(&text)
}

/// Render a series matrix as CSV text (exact round-trip formatting).
pub fn series_to_csv(sm: &SeriesMatrix) -> String {
    let mut out = String::from("date");
    for st in sm.stations() {
        out.push(',');
        out.push_str(st);
    }
    out.push('\n');
    for (t, date) in sm.dates().iter().enumerate() {
        out.push_str(&date.to_string());
        for s in 0..sm.n_stations() {
            out.push(',');
            if let Some(v) = sm.value(t, s) {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Write a series matrix to a CSV file.
pub fn write_series_csv(sm: &SeriesMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), series_to_csv(sm))
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn parses_missing_cells() {
        let text = "date,A,B\n2020-01-01,1.5,\n2020-01-02,,2.25\n";
        let sm = parse_series_csv(text).unwrap();
        assert_eq!(sm.n_dates(), 2);
        assert_eq!(sm.value(0, 0), Some(1.5));
        assert_eq!(sm.value(0, 1), None);
        assert_eq!(sm.value(1, 0), None);
        assert_eq!(sm.value(1, 1), Some(2.25));
    }

    #[test]
    fn rejects_duplicate_and_backward_dates() {
        let dup = "date,A\n2020-01-01,1\n2020-01-01,2\n";
        assert!(matches!(parse_series_csv(dup), Err(Error::NonMonotoneDates { line: 3 })));
        let back = "date,A\n2020-01-02,1\n2020-01-01,2\n";
        assert!(matches!(parse_series_csv(back), Err(Error::NonMonotoneDates { .. })));
    }

    #[test]
    fn reports_parse_error_location() {
        let text = "date,A,B\n2020-01-01,1.5,oops\n";
        match parse_series_csv(text) {
            Err(Error::ParseError { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, 3);
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
        let nan = "date,A\n2020-01-01,NaN\n";
        assert!(matches!(parse_series_csv(nan), Err(Error::ParseError { .. })));
    }

    #[test]
    fn rejects_bad_header_and_shape() {
        assert!(parse_series_csv("time,A\n2020-01-01,1\n").is_err());
        assert!(parse_series_csv("date\n2020-01-01\n").is_err());
        let ragged = "date,A,B\n2020-01-01,1\n";
        assert!(matches!(ragged.parse::<f64>(), Err(_)));
        assert!(matches!(parse_series_csv(ragged), Err(Error::ParseError { line: 2, .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = Rng::with_seed(101);
        for trial in 0..20 {
            let t = 2 + rng.next_below(30) as usize;
            let s = 1 + rng.next_below(5) as usize;
            let dates: Vec<Date> = {
                let d0 = Date::from_ymd(1991, 6, 1).unwrap();
                (0..t).map(|i| d0.add_days(i as i64 * 2)).collect()
            };
            let stations: Vec<String> = (0..s).map(|i| format!("ST{i}")).collect();
            let values: Vec<f64> = (0..t * s)
                .map(|_| {
                    // mix of scales, including awkward decimals
                    let v = rng.normal() * 10f64.powi(rng.next_below(7) as i32 - 3);
                    v
                })
                .collect();
            let mask: Vec<bool> = (0..t * s).map(|_| rng.next_f64() > 0.3).collect();
            let sm = SeriesMatrix::new(dates, stations, values, mask).unwrap();
            let text = series_to_csv(&sm);
            let back = parse_series_csv(&text).unwrap();
            assert_eq!(back.n_dates(), sm.n_dates());
            assert_eq!(back.stations(), sm.stations());
            for ti in 0..sm.n_dates() {
                for si in 0..sm.n_stations() {
                    assert_eq!(back.value(ti, si), sm.value(ti, si), "trial {trial} ({ti},{si})");
                }
            }
        }
    }
}
