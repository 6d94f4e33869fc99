//! CSV ingestion and emission for panels and simulation truth sidecars.
//!
//! Panel files carry a header row of series names and one row per time
//! point. A leading date column is recognised when its header names a date
//! (`date`, `sasdate`, `time`, `period`) or when its first data cell is not a
//! number. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, Trim};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::TimeSeriesPanel;

const DATE_HEADERS: [&str; 4] = ["date", "sasdate", "time", "period"];

pub fn read_panel_csv(path: impl AsRef<Path>) -> Result<TimeSeriesPanel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_panel_csv(BufReader::new(file))
}

fn csv_err(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        row,
        column,
        message: message.into(),
    }
}

pub fn parse_panel_csv<R: Read>(reader: R) -> Result<TimeSeriesPanel> {
    let mut rdr = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header_line = rdr.position().line() as usize;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(header_line.max(1), 0, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() {
        return Err(csv_err(1, 0, "missing header row"));
    }

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_err(line, 0, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(csv_err(2, 0, "no observations"));
    }

    let has_dates = DATE_HEADERS.contains(&headers[0].to_ascii_lowercase().as_str())
        || records[0].1.get(0).is_some_and(|c| !c.is_empty() && c.parse::<f64>().is_err());
    let first = usize::from(has_dates);
    let names: Vec<String> = headers[first..].to_vec();
    let p = names.len();
    if p == 0 {
        return Err(csv_err(1, 0, "no series columns"));
    }

    let mut values = Vec::with_capacity(records.len() * p);
    let mut dates = Vec::new();
    for (line, rec) in &records {
        if rec.len() != headers.len() {
            return Err(csv_err(
                *line,
                0,
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        if has_dates {
            dates.push(rec[0].to_owned());
        }
        for col in first..headers.len() {
            let cell = &rec[col];
            if cell.is_empty() {
                return Err(csv_err(*line, col + 1, "empty cell"));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| csv_err(*line, col + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(*line, col + 1, format!("non-finite value {cell:?}")));
            }
            values.push(v);
        }
    }
    let data = DMatrix::from_row_slice(records.len(), p, &values);
    let panel = TimeSeriesPanel::with_names(data, names)?;
    if has_dates {
        panel.with_dates(dates)
    } else {
        Ok(panel)
    }
}

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}

/// Writes `panel` with `# ` comment lines first. Values use Rust's shortest
/// round-trip formatting, so reading the file back is lossless.
pub fn write_panel_csv<W: Write>(
    panel: &TimeSeriesPanel,
    mut w: W,
    comments: &[String],
) -> std::io::Result<()> {
    write_comments(&mut w, comments)?;
    let dates = panel.dates();
    if dates.is_some() {
        write!(w, "date,")?;
    }
    writeln!(w, "{}", panel.names().join(","))?;
    for t in 0..panel.n_obs() {
        if let Some(d) = dates {
            write!(w, "{},", d[t])?;
        }
        let row: Vec<String> = panel.data().row(t).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// True coefficients (`p x pq`) and innovations (`p x n`) of a simulated panel.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSidecar {
    pub beta: DMatrix<f64>,
    pub innovations: DMatrix<f64>,
}

/// Long format: `kind,row,col,value` with `kind` either `coef` or `eps`.
pub fn write_truth_csv<W: Write>(
    truth: &TruthSidecar,
    mut w: W,
    comments: &[String],
) -> std::io::Result<()> {
    write_comments(&mut w, comments)?;
    writeln!(w, "kind,row,col,value")?;
    for (kind, m) in [("coef", &truth.beta), ("eps", &truth.innovations)] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                writeln!(w, "{kind},{i},{j},{}", m[(i, j)])?;
            }
        }
    }
    Ok(())
}

pub fn read_truth_csv(path: impl AsRef<Path>) -> Result<TruthSidecar> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(BufReader::new(file));
    let mut coef = Vec::new();
    let mut eps = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(0, 0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse_idx = |col: usize| -> Result<usize> {
            rec[col]
                .parse()
                .map_err(|_| csv_err(line, col + 1, "bad index"))
        };
        let (i, j) = (parse_idx(1)?, parse_idx(2)?);
        let v: f64 = rec[3]
            .parse()
            .map_err(|_| csv_err(line, 4, "bad value"))?;
        match &rec[0] {
            "coef" => coef.push((i, j, v)),
            "eps" => eps.push((i, j, v)),
            other => return Err(csv_err(line, 1, format!("unknown kind {other:?}"))),
        }
    }
    let assemble = |entries: &[(usize, usize, f64)]| {
        let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let cols = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        let mut m = DMatrix::zeros(rows, cols);
        for &(i, j, v) in entries {
            m[(i, j)] = v;
        }
        m
    };
    Ok(TruthSidecar {
        beta: assemble(&coef),
        innovations: assemble(&eps),
    })
}
