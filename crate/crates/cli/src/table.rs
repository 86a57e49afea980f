//! CSV ingestion and emission.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use stockflow::calibrate::{parse_quarter, CalibrateError, QuarterlySeries};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {error}", path.display())]
    Io { path: PathBuf, error: io::Error },
    #[error("{}: empty input (no data rows)", .0.display())]
    Empty(PathBuf),
    #[error("{}: row {row}: {message}", path.display())]
    Row {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}: {error}", path.display())]
    Quarterly {
        path: PathBuf,
        error: CalibrateError,
    },
}

/// How the first column of a table is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Number,
    /// ISO-8601 date; positions are days since the first row.
    Date,
    /// `YYYYQn`; positions are quarters since the first row.
    Quarter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// A CSV file with an index column and numeric data columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub index_name: String,
    pub kind: IndexKind,
    /// Index cells as written.
    pub labels: Vec<String>,
    /// Index positions, strictly increasing.
    pub x: Vec<f64>,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        match self.kind {
            IndexKind::Date => self.labels.first().and_then(|s| parse_date(s)),
            _ => None,
        }
    }

    /// Resolves column names, or all data columns when `names` is empty.
    pub fn select(&self, names: &[String], path: &Path) -> Result<Vec<&Column>, IngestError> {
        if names.is_empty() {
            return Ok(self.columns.iter().collect());
        }
        names
            .iter()
            .map(|n| {
                self.column(n).ok_or_else(|| IngestError::Schema {
                    path: path.to_path_buf(),
                    message: format!(
                        "unknown column `{n}` (available: {})",
                        self.columns
                            .iter()
                            .map(|c| c.name.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                })
            })
            .collect()
    }
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

fn detect(cell: &str) -> Option<IndexKind> {
    if cell.trim().parse::<f64>().is_ok() {
        Some(IndexKind::Number)
    } else if parse_date(cell).is_some() {
        Some(IndexKind::Date)
    } else if parse_quarter(cell).is_some() {
        Some(IndexKind::Quarter)
    } else {
        None
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>, IngestError> {
    let file = File::open(path).map_err(|error| IngestError::Io {
        path: path.to_path_buf(),
        error,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads a headed CSV whose first column is a number, date or quarter and
/// whose other columns are finite numbers. Index values must strictly
/// increase; empty cells are rejected.
pub fn read_table(path: &Path) -> Result<Table, IngestError> {
    let mut reader = open(path)?;
    let row_err = |row: u64, message: String| IngestError::Row {
        path: path.to_path_buf(),
        row,
        message,
    };
    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(IngestError::Empty(path.to_path_buf())),
        Err(e) => return Err(row_err(1, e.to_string())),
    };
    if headers.len() < 2 {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: "need an index column and at least one data column".into(),
        });
    }

    let mut kind = None;
    let mut labels = Vec::new();
    let mut x = Vec::new();
    let mut columns: Vec<Column> = headers
        .iter()
        .skip(1)
        .map(|name| Column {
            name: name.to_string(),
            values: Vec::new(),
        })
        .collect();
    let mut origin: Option<(NaiveDate, i64)> = None;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            row_err(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let cell = &record[0];
        let k = *kind.get_or_insert(
            detect(cell).ok_or_else(|| row_err(row, format!("cannot read index `{cell}`")))?,
        );
        let pos = match k {
            IndexKind::Number => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
            IndexKind::Date => parse_date(cell).map(|d| {
                let (d0, _) = *origin.get_or_insert((d, 0));
                (d - d0).num_days() as f64
            }),
            IndexKind::Quarter => parse_quarter(cell).map(|q| {
                let (_, q0) = *origin.get_or_insert((NaiveDate::MIN, q));
                (q - q0) as f64
            }),
        }
        .ok_or_else(|| row_err(row, format!("bad index `{cell}`")))?;
        if x.last().is_some_and(|&prev| pos <= prev) {
            return Err(row_err(
                row,
                format!("`{cell}` does not come after the previous row"),
            ));
        }
        for (col, cell) in columns.iter_mut().zip(record.iter().skip(1)) {
            if cell.is_empty() {
                return Err(row_err(row, format!("missing value for `{}`", col.name)));
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| row_err(row, format!("`{cell}` is not a finite number")))?;
            col.values.push(v);
        }
        labels.push(cell.to_string());
        x.push(pos);
    }

    match kind {
        None => Err(IngestError::Empty(path.to_path_buf())),
        Some(kind) => Ok(Table {
            index_name: headers[0].to_string(),
            kind,
            labels,
            x,
            columns,
        }),
    }
}

/// Daily prices on trading days; dates need not be evenly spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl DailySeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Days since `origin` for each sample.
    pub fn days_since(&self, origin: NaiveDate) -> Vec<f64> {
        self.dates
            .iter()
            .map(|d| (*d - origin).num_days() as f64)
            .collect()
    }
}

/// `date,price` file.
pub fn read_daily(path: &Path) -> Result<DailySeries, IngestError> {
    let table = read_table(path)?;
    if table.kind != IndexKind::Date || table.columns.len() != 1 {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: "expected columns `date,price` with ISO-8601 dates".into(),
        });
    }
    let column = table.columns.into_iter().next().expect("one column");
    Ok(DailySeries {
        name: column.name,
        dates: table
            .labels
            .iter()
            .map(|s| parse_date(s).expect("validated"))
            .collect(),
        values: column.values,
    })
}

/// `quarter,demand,supply,price` file with consecutive quarters.
pub fn read_quarterly(path: &Path) -> Result<QuarterlySeries, IngestError> {
    let table = read_table(path)?;
    let names: Vec<String> = table
        .columns
        .iter()
        .map(|c| c.name.to_ascii_lowercase())
        .collect();
    if table.kind != IndexKind::Quarter || names != ["demand", "supply", "price"] {
        return Err(IngestError::Schema {
            path: path.to_path_buf(),
            message: "expected columns `quarter,demand,supply,price` with labels like 2010Q1"
                .into(),
        });
    }
    if let Some(i) = table.x.windows(2).position(|w| w[1] - w[0] != 1.0) {
        return Err(IngestError::Row {
            path: path.to_path_buf(),
            row: i as u64 + 3,
            message: format!("gap before quarter `{}`", table.labels[i + 1]),
        });
    }
    let mut cols = table.columns.into_iter().map(|c| c.values);
    let (demand, supply, price) = (
        cols.next().expect("3 columns"),
        cols.next().expect("3 columns"),
        cols.next().expect("3 columns"),
    );
    QuarterlySeries::new(table.labels, demand, supply, price).map_err(|error| {
        IngestError::Quarterly {
            path: path.to_path_buf(),
            error,
        }
    })
}

/// Writes `index,<columns>` rows; numbers use the shortest exact form.
pub fn write_csv<W: Write>(
    out: W,
    index_name: &str,
    index: &[String],
    columns: &[(&str, &[f64])],
) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec![index_name];
    header.extend(columns.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    for (i, label) in index.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(columns.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_table<W: Write>(out: W, table: &Table) -> io::Result<()> {
    let cols: Vec<(&str, &[f64])> = table
        .columns
        .iter()
        .map(|c| (c.name.as_str(), c.values.as_slice()))
        .collect();
    write_csv(out, &table.index_name, &table.labels, &cols)
}
