//! Dataset files: one CSV row per observation with curve values `t_1..t_p`,
//! a response `y` and an optional `split` column (`train`/`test`), plus a
//! sidecar CSV declaring the equispaced grid (`start,end,count`).

use std::path::Path;
use std::sync::Arc;

use fllr_core::funcspace::{CurveSet, Grid};

use crate::config::ResponseTransform;
use crate::HarnessError;

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Curves with their responses.
    pub curves: CurveSet<f64>,
    /// `true` for training rows, when the file fixes the split.
    pub split: Option<Vec<bool>>,
}

fn io_err(path: &Path, e: impl ToString) -> HarnessError {
    HarnessError::Io(path.to_path_buf(), e.to_string())
}

fn parse_err(path: &Path, row: usize, column: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

pub fn read_grid_header(path: &Path) -> Result<Grid<f64>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| io_err(path, e))?;
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let expected = ["start", "end", "count"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(path, 0, "header", "grid header must have columns start,end,count"));
    }
    let record = rdr
        .records()
        .next()
        .ok_or_else(|| parse_err(path, 1, "start", "missing grid row"))?
        .map_err(|e| io_err(path, e))?;
    let num = |c: usize| -> Result<f64, HarnessError> {
        record[c]
            .parse::<f64>()
            .map_err(|_| parse_err(path, 1, expected[c], format!("not a number: {:?}", &record[c])))
    };
    let (start, end) = (num(0)?, num(1)?);
    let count: usize = record[2]
        .parse()
        .map_err(|_| parse_err(path, 1, "count", format!("not a count: {:?}", &record[2])))?;
    Grid::equispaced(start, end, count).map_err(|e| parse_err(path, 1, "count", e.to_string()))
}

pub fn write_grid_header(path: &Path, grid: &Grid<f64>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["start", "end", "count"]).map_err(|e| io_err(path, e))?;
    w.write_record([grid.start().to_string(), grid.end().to_string(), grid.len().to_string()])
        .map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a dataset. Rows and columns in parse errors are 1-based; row 1 is
/// the first data row.
pub fn read_dataset(data: &Path, grid_header: &Path, transform: ResponseTransform) -> Result<Dataset, HarnessError> {
    let grid = Arc::new(read_grid_header(grid_header)?);
    let p = grid.len();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(data).map_err(|e| io_err(data, e))?;
    let headers = rdr.headers().map_err(|e| io_err(data, e))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let curve_cols: Vec<usize> = (1..=p)
        .map(|k| {
            let name = format!("t_{k}");
            find(&name).ok_or_else(|| parse_err(data, 0, &name, "missing curve column"))
        })
        .collect::<Result<_, _>>()?;
    let y_col = find("y").ok_or_else(|| parse_err(data, 0, "y", "missing response column"))?;
    let split_col = find("split");
    if let Some(extra) = headers.iter().position(|h| h.starts_with("t_") && !curve_cols.iter().any(|&c| headers[c] == *h)) {
        return Err(parse_err(
            data,
            0,
            &headers[extra],
            format!("curve column beyond the {p} grid points"),
        ));
    }

    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut split = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| parse_err(data, row, "-", e.to_string()))?;
        let cell = |c: usize| -> Result<f64, HarnessError> {
            let raw = record.get(c).ok_or_else(|| parse_err(data, row, &headers[c], "missing value"))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(data, row, &format!("{} (column {})", &headers[c], c + 1), format!("not a number: {raw:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(data, row, &format!("{} (column {})", &headers[c], c + 1), "non-finite value"))
            }
        };
        rows.push(curve_cols.iter().map(|&c| cell(c)).collect::<Result<Vec<_>, _>>()?);
        let yv = cell(y_col)?;
        y.push(match transform {
            ResponseTransform::None => yv,
            ResponseTransform::Exp => yv.exp(),
        });
        if let Some(c) = split_col {
            split.push(match record.get(c) {
                Some("train") => true,
                Some("test") => false,
                other => {
                    return Err(parse_err(
                        data,
                        row,
                        &format!("split (column {})", c + 1),
                        format!("expected train or test, got {other:?}"),
                    ))
                }
            });
        }
    }
    if rows.len() < 3 {
        return Err(parse_err(data, rows.len(), "-", "need at least three observations"));
    }
    let curves = CurveSet::from_rows(grid, rows, Some(y))?;
    Ok(Dataset {
        curves,
        split: split_col.map(|_| split),
    })
}

/// Writes curves and responses in the format `read_dataset` accepts.
pub fn write_dataset(
    data: &Path,
    grid_header: &Path,
    curves: &CurveSet<f64>,
    split: Option<&[bool]>,
) -> Result<(), HarnessError> {
    let y = curves
        .responses()
        .ok_or_else(|| HarnessError::Config("curves carry no responses".into()))?;
    write_grid_header(grid_header, curves.grid())?;
    let mut w = csv::Writer::from_path(data).map_err(|e| io_err(data, e))?;
    let p = curves.grid().len();
    let mut header: Vec<String> = (1..=p).map(|k| format!("t_{k}")).collect();
    header.push("y".into());
    if split.is_some() {
        header.push("split".into());
    }
    w.write_record(&header).map_err(|e| io_err(data, e))?;
    for (i, c) in curves.curves().iter().enumerate() {
        let mut rec: Vec<String> = c.values().iter().map(|v| v.to_string()).collect();
        rec.push(y[i].to_string());
        if let Some(s) = split {
            rec.push(if s[i] { "train" } else { "test" }.into());
        }
        w.write_record(&rec).map_err(|e| io_err(data, e))?;
    }
    w.flush().map_err(|e| io_err(data, e))
}
