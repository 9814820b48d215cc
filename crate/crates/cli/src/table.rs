//! Plain CSV matrices: one row per line, `#` comment lines ignored, an
//! optional non-numeric header line.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::CliError;

/// Reads a numeric matrix from a CSV file, or standard input for `-`.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)?;
    } else {
        File::open(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            .read_to_string(&mut text)?;
    }
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            // Only the first record may be a header.
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Input(format!(
                    "line {}: non-numeric field",
                    record.position().map_or(0, |p| p.line())
                )))
            }
        }
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(CliError::Input("no numeric rows".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::Input(format!(
            "row {} has {} fields, expected {ncols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Comma separated rows. `{}` prints the shortest decimal that parses back
/// to the same `f64`.
pub fn format_matrix(m: &DMatrix<f64>) -> Vec<String> {
    m.row_iter()
        .map(|row| row.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
        .collect()
}

/// Single-line `a,b;c,d` form used in comment headers.
pub fn inline_matrix(m: &DMatrix<f64>) -> String {
    format_matrix(m).join(";")
}

/// Destination for command output: a file or standard output.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}
