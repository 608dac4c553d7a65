use std::io::Read;

use crate::error::{LroError, Result};
use crate::estimators::TwoSample;

/// Labels that assign rows to the two samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLabels {
    pub x: String,
    pub y: String,
}

impl Default for GroupLabels {
    fn default() -> Self {
        Self {
            x: "x".into(),
            y: "y".into(),
        }
    }
}

/// Reads a `value,group` CSV. Column names and group labels are matched
/// case-insensitively; missing or non-finite values are rejected with their
/// line number.
pub fn read_two_sample<R: Read>(reader: R, labels: &GroupLabels) -> Result<TwoSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(LroError::InvalidInput("no observations".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| LroError::Parse {
                line: 1,
                message: format!("missing column {name:?} in header"),
            })
    };
    let (vi, gi) = (column("value")?, column("group")?);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let err = |message: String| LroError::Parse { line, message };
        let raw = rec.get(vi).ok_or_else(|| err("missing value field".into()))?;
        let value: f64 = raw
            .parse()
            .map_err(|_| err(format!("cannot parse value {raw:?}")))?;
        if !value.is_finite() {
            return Err(err(format!("value {raw:?} is missing or not finite")));
        }
        let group = rec.get(gi).ok_or_else(|| err("missing group field".into()))?;
        if group.eq_ignore_ascii_case(&labels.x) {
            x.push(value);
        } else if group.eq_ignore_ascii_case(&labels.y) {
            y.push(value);
        } else {
            return Err(err(format!(
                "group {group:?} is neither {:?} nor {:?}",
                labels.x, labels.y
            )));
        }
    }
    if x.is_empty() && y.is_empty() {
        return Err(LroError::InvalidInput("no observations".into()));
    }
    TwoSample::new(x, y)
}
