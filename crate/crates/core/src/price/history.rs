use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use super::PriceError;

/// One row of an asset CSV.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct Close {
    pub date: NaiveDate,
    pub close: f64,
}

/// Reads a `date,close` CSV with ISO-8601 dates in strictly ascending order.
pub fn read_closes(path: &Path) -> Result<Vec<Close>, PriceError> {
    let bad = |detail: String| PriceError::BadCsv {
        path: path.display().to_string(),
        detail,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["date", "close"] {
        return Err(bad(format!("header must be `date,close`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows: Vec<Close> = Vec::new();
    for (i, rec) in reader.deserialize::<Close>().enumerate() {
        let row = rec.map_err(|e| bad(format!("row {}: {e}", i + 2)))?;
        if !(row.close > 0.0 && row.close.is_finite()) {
            return Err(PriceError::NonPositivePrice {
                index: i,
                value: row.close,
            });
        }
        if let Some(prev) = rows.last() {
            if row.date <= prev.date {
                return Err(bad(format!("row {}: {} does not follow {}", i + 2, row.date, prev.date)));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
