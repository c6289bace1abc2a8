//! CSV and aligned-text rendering of result tables.
//!
//! IVs are printed in percent to 3 decimals, standard errors and absolute
//! errors in basis points to 2 decimals. Prices keep full precision.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spde_pricing::harness::ResultTable;

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 11] = [
    "method",
    "scheme",
    "steps_per_day",
    "n_paths",
    "m_points",
    "seed",
    "price",
    "iv_pct",
    "se_bp",
    "abs_err_bp",
    "runtime_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            other => Err(format!("unknown format `{other}` (expected csv or text)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmitOptions {
    /// Leave `runtime_s` empty so output depends only on config and seed.
    pub omit_runtime: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("nothing to write: the table has no rows")]
    Empty,
    #[error("row `{0}` failed; refusing to write a partial table")]
    FailedRow(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One CSV line, as written and as read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub method: String,
    pub scheme: Option<String>,
    pub steps_per_day: f64,
    pub n_paths: u64,
    pub m_points: Option<usize>,
    pub seed: u64,
    pub price: f64,
    pub iv_pct: Option<String>,
    pub se_bp: Option<String>,
    pub abs_err_bp: Option<String>,
    pub runtime_s: Option<String>,
}

fn fixed(x: Option<f64>, scale: f64, decimals: usize) -> Option<String> {
    x.map(|v| format!("{:.*}", decimals, v * scale))
}

/// The table as CSV records; fails if any row failed.
pub fn records(table: &ResultTable, opts: EmitOptions) -> Result<Vec<CsvRecord>, OutputError> {
    if table.rows.is_empty() {
        return Err(OutputError::Empty);
    }
    table
        .rows
        .iter()
        .map(|row| {
            let r = row
                .outcome
                .as_ref()
                .map_err(|_| OutputError::FailedRow(row.config.name.clone()))?;
            Ok(CsvRecord {
                method: r.method.as_str().to_string(),
                scheme: r.scheme.map(|s| s.as_str().to_string()),
                steps_per_day: row.config.steps_per_day,
                n_paths: r.n_paths,
                m_points: r.m_points,
                seed: row.config.seed,
                price: r.price,
                iv_pct: fixed(r.implied_vol, 100.0, 3),
                se_bp: fixed(r.std_error_iv_bp, 1.0, 2),
                abs_err_bp: fixed(r.abs_err_bp, 1.0, 2),
                runtime_s: (!opts.omit_runtime).then(|| format!("{:.3}", r.runtime_s)),
            })
        })
        .collect()
}

pub fn render_csv(table: &ResultTable, opts: EmitOptions) -> Result<String, OutputError> {
    let recs = records(table, opts)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in &recs {
        w.serialize(rec)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| OutputError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Aligned columns in the layout of the published tables.
pub fn render_text(table: &ResultTable, opts: EmitOptions) -> Result<String, OutputError> {
    let recs = records(table, opts)?;
    let header = [
        "Row",
        "Method",
        "Scheme",
        "#Steps/day",
        "#Path",
        "IV(%)",
        "S.E.(bp)",
        "Abs Err(bp)",
        "Run(s)",
    ];
    let na = |s: &Option<String>| s.clone().unwrap_or_else(|| "N/A".into());
    let cells: Vec<[String; 9]> = table
        .rows
        .iter()
        .zip(&recs)
        .map(|(row, rec)| {
            [
                row.config.name.clone(),
                rec.method.clone(),
                rec.scheme.clone().unwrap_or_else(|| "-".into()),
                format!("{}", rec.steps_per_day),
                rec.n_paths.to_string(),
                na(&rec.iv_pct),
                na(&rec.se_bp),
                na(&rec.abs_err_bp),
                rec.runtime_s.clone().unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: &[&str]| {
        for (i, (c, w)) in cols.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in &cells {
        let cols: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &cols);
    }
    Ok(out)
}

pub fn render(
    table: &ResultTable,
    format: Format,
    opts: EmitOptions,
) -> Result<String, OutputError> {
    match format {
        Format::Csv => render_csv(table, opts),
        Format::Text => render_text(table, opts),
    }
}

/// Writes `contents` to a temporary file beside `path`, then renames it over
/// `path`, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), OutputError> {
    let io = |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Renders `table` and writes it to `path`. Nothing is written unless every
/// row succeeded.
pub fn emit_results(
    table: &ResultTable,
    format: Format,
    path: &Path,
    opts: EmitOptions,
) -> Result<(), OutputError> {
    let text = render(table, format, opts)?;
    write_atomic(path, &text)
}

/// Parses CSV produced by [`render_csv`].
pub fn read_csv(text: &str) -> Result<Vec<CsvRecord>, OutputError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(OutputError::Csv(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header {headers:?}"),
        ))));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spde_pricing::harness::{ExperimentConfig, TableRow};
    use spde_pricing::{InverseGammaParams, Method, PricingResult, Scheme};

    fn row(name: &str, method: Method, abs_err: Option<f64>) -> TableRow {
        let mut config = ExperimentConfig::new(name, InverseGammaParams::reference(), method);
        config.steps_per_day = 0.5;
        let mixed = method == Method::Mixed;
        TableRow {
            config,
            outcome: Ok(PricingResult {
                method,
                scheme: mixed.then_some(Scheme::CrankNicolson),
                price: 5.093960637478154,
                std_error_price: 0.0033,
                implied_vol: Some(0.188723456),
                std_error_iv_bp: Some(1.2049),
                abs_err_bp: abs_err,
                n_paths: 1000,
                n_steps: 63,
                m_points: mixed.then_some(250),
                runtime_s: 1.23456,
                seed: 77,
            }),
            benchmark: None,
        }
    }

    #[test]
    fn benchmark_row_has_header_and_empty_abs_err() {
        let t = ResultTable {
            rows: vec![row("bench", Method::Mixing, None)],
        };
        let csv = render_csv(&t, EmitOptions::default()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "mixing,,0.5,1000,,42,5.093960637478154,18.872,1.20,,1.235"
        );
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn csv_round_trips_to_printed_precision() {
        let t = ResultTable {
            rows: vec![
                row("bench", Method::Mixing, None),
                row("mixed", Method::Mixed, Some(11.3456)),
            ],
        };
        let csv = render_csv(&t, EmitOptions::default()).unwrap();
        let back = read_csv(&csv).unwrap();
        assert_eq!(back, records(&t, EmitOptions::default()).unwrap());
        let m = &back[1];
        assert_eq!(m.method, "mixed");
        assert_eq!(m.scheme.as_deref(), Some("crank_nicolson"));
        assert_eq!(m.m_points, Some(250));
        assert_eq!(m.price, 5.093960637478154);
        assert_eq!(m.iv_pct.as_deref(), Some("18.872"));
        assert_eq!(m.abs_err_bp.as_deref(), Some("11.35"));
        assert!((m.iv_pct.as_ref().unwrap().parse::<f64>().unwrap() - 18.8723456).abs() < 5e-4);
    }

    #[test]
    fn omitted_runtime_is_blank() {
        let t = ResultTable {
            rows: vec![row("bench", Method::Mixing, None)],
        };
        let csv = render_csv(&t, EmitOptions { omit_runtime: true }).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",1.20,,"));
    }

    #[test]
    fn failed_or_empty_tables_are_not_rendered() {
        let mut bad = row("broken", Method::FullMc, None);
        bad.outcome = Err(spde_pricing::Error::NonFiniteAggregate("price"));
        let t = ResultTable { rows: vec![bad] };
        assert!(matches!(
            render_csv(&t, EmitOptions::default()),
            Err(OutputError::FailedRow(name)) if name == "broken"
        ));
        assert!(matches!(
            render_csv(&ResultTable { rows: vec![] }, EmitOptions::default()),
            Err(OutputError::Empty)
        ));
    }

    #[test]
    fn text_columns_are_aligned() {
        let t = ResultTable {
            rows: vec![
                row("benchmark", Method::Mixing, None),
                row("m", Method::Mixed, Some(1.68)),
            ],
        };
        let text = render_text(&t, EmitOptions::default()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Row"));
        assert!(lines[0].contains("Abs Err(bp)"));
        let len = lines[0].len();
        assert!(lines.iter().all(|l| l.len() == len), "{text}");
        assert!(lines[2].contains("N/A"));
        assert!(lines[3].contains("1.68"));
        assert!(lines[3].contains("18.872"));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "old contents that are longer than the new ones").unwrap();
        write_atomic(&path, "new").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "new");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = dir.path().join("no/such/dir/out.csv");
        assert!(matches!(
            write_atomic(&missing, "x"),
            Err(OutputError::Io { .. })
        ));
    }
}
