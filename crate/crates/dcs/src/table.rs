//! Numeric result tables and their CSV form.
//!
//! A file starts with `# key: value` metadata lines, then a header row, then
//! one row per record. Numbers carry 12 significant digits.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Version stamped into every emitted file.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum TableError {
    Io { path: PathBuf, source: io::Error },
    Csv { path: PathBuf, source: csv::Error },
    NotRectangular { row: usize, len: usize, columns: usize },
    Parse { path: PathBuf, line: usize, msg: String },
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            TableError::Csv { path, source } => write!(f, "{}: {source}", path.display()),
            TableError::NotRectangular { row, len, columns } => {
                write!(f, "row {row} has {len} values but the table has {columns} columns")
            }
            TableError::Parse { path, line, msg } => {
                write!(f, "{}:{line}: {msg}", path.display())
            }
        }
    }
}

impl std::error::Error for TableError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            TableError::Io { source, .. } => Some(source),
            TableError::Csv { source, .. } => Some(source),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Ordered `key: value` pairs written above the header.
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        ResultTable {
            columns: columns.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl fmt::Display) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::NotRectangular {
                row: self.rows.len(),
                len: row.len(),
                columns: self.columns.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn check(&self) -> Result<(), TableError> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.columns.len() {
                return Err(TableError::NotRectangular {
                    row: i,
                    len: r.len(),
                    columns: self.columns.len(),
                });
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, TableError> {
        self.check()?;
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {}: {}\n", k, v.replace('\n', " ")));
        }
        let csv_err = |source| TableError::Csv {
            path: PathBuf::from("<memory>"),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_number(*v)))
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }

    pub fn parse(text: &str, path: &Path) -> Result<ResultTable, TableError> {
        let mut metadata = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix('#') else { break };
            let rest = rest.trim_end_matches(['\n', '\r']).trim_start();
            let (k, v) = rest.split_once(": ").unwrap_or((rest, ""));
            metadata.push((k.to_string(), v.to_string()));
            body_start += line.len();
        }
        let csv_err = |source| TableError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::ReaderBuilder::new().from_reader(text[body_start..].as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|e| TableError::Parse {
                        path: path.to_path_buf(),
                        line: metadata.len() + i + 2,
                        msg: format!("`{s}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let table = ResultTable {
            columns,
            rows,
            metadata,
        };
        table.check()?;
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<(), TableError> {
        let text = self.to_csv_string()?;
        fs::write(path, text).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<ResultTable, TableError> {
        let text = fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ResultTable::parse(&text, path)
    }
}

/// Shortest of fixed or scientific notation at 12 significant digits.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1024.0), "1024");
        assert_eq!(format_number(-2.5e-9), "-2.5e-9");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(0.02781), "0.02781");
        assert_eq!(format_number(6.02e23), "6.02e23");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(["a", "b"]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut t = ResultTable::new(["a", "b"]);
        assert!(matches!(
            t.push(vec![1.0]),
            Err(TableError::NotRectangular { .. })
        ));
    }
}
