//! Grid and table file formats.
//!
//! Grids are headerless CSV: one line per row index `s`, one integer per column
//! index `t`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use cinar_core::{AcfTable, CountGrid};

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("empty grid file")]
    Empty,
    #[error("ragged grid: row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("row {row}, column {col}: {cell:?} is not a non-negative integer count")]
    BadCell { row: usize, col: usize, cell: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses a grid; with `header`, the first line is skipped. Locations in errors
/// are 1-based.
pub fn parse_grid<R: Read>(reader: R, header: bool) -> Result<CountGrid, GridError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut n2 = None;
    let mut n1 = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let row = r + 1 + usize::from(header);
        let expected = *n2.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(GridError::Ragged {
                row,
                expected,
                got: rec.len(),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let v = cell.parse::<u32>().map_err(|_| GridError::BadCell {
                row,
                col: c + 1,
                cell: cell.to_string(),
            })?;
            values.push(v);
        }
        n1 += 1;
    }
    let n2 = n2.ok_or(GridError::Empty)?;
    Ok(CountGrid::new(n1, n2, values).expect("shape checked while parsing"))
}

pub fn read_grid(path: &Path, header: bool) -> Result<CountGrid, GridError> {
    parse_grid(BufReader::new(File::open(path)?), header)
}

pub fn write_grid<W: Write>(writer: W, grid: &CountGrid) -> Result<(), GridError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in grid.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// ACF table with `l` descending down the rows and `k` ascending across the
/// columns; the first column holds `l`.
pub fn write_acf_table<W: Write>(writer: W, table: &AcfTable) -> Result<(), GridError> {
    let (kk, _) = table.window();
    let kk = kk as isize;
    let mut w = csv::Writer::from_writer(writer);
    let mut head = vec!["l\\k".to_string()];
    head.extend((-kk..=kk).map(|k| k.to_string()));
    w.write_record(&head)?;
    for (l, row) in table.display_rows() {
        let mut rec = vec![l.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a single column of values with a header.
pub fn write_column<W: Write>(writer: W, name: &str, values: &[f64]) -> Result<(), GridError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin", name])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{v:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a real-valued `rows x cols` field as headerless CSV.
pub fn write_field<W: Write>(writer: W, cols: usize, values: &[f64]) -> Result<(), GridError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in values.chunks(cols) {
        w.write_record(row.iter().map(|v| format!("{v:.6}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_grid() {
        let g = parse_grid("1,2,0\n3,1,4".as_bytes(), false).unwrap();
        assert_eq!((g.n1(), g.n2()), (2, 3));
        assert_eq!(g.get(1, 2), 4);
    }

    #[test]
    fn header_is_skipped() {
        let g = parse_grid("a,b\n1,2\n3,4\n".as_bytes(), true).unwrap();
        assert_eq!((g.n1(), g.n2()), (2, 2));
    }

    #[test]
    fn negative_cell_is_located() {
        let e = parse_grid("1,2\n3,-1".as_bytes(), false).unwrap_err();
        assert!(matches!(e, GridError::BadCell { row: 2, col: 2, .. }), "{e}");
        assert!(e.to_string().contains("row 2, column 2"));
    }

    #[test]
    fn non_integer_and_ragged() {
        assert!(matches!(
            parse_grid("1,2.5".as_bytes(), false),
            Err(GridError::BadCell { row: 1, col: 2, .. })
        ));
        assert!(matches!(
            parse_grid("1,2\n3".as_bytes(), false),
            Err(GridError::Ragged { row: 2, expected: 2, got: 1 })
        ));
        assert!(matches!(parse_grid("".as_bytes(), false), Err(GridError::Empty)));
    }

    #[test]
    fn round_trip() {
        let g = CountGrid::from_rows(&[vec![0, 7, 3], vec![12, 1, 0]]).unwrap();
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        assert_eq!(parse_grid(buf.as_slice(), false).unwrap(), g);
    }

    #[test]
    fn acf_layout() {
        let t = cinar_core::theoretical_acf(
            &cinar_core::CinarParams::poisson(
                cinar_core::ModelOrder::new(1, 1).unwrap(),
                vec![0.2, 0.2, 0.5],
                1.0,
            )
            .unwrap(),
            1,
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_acf_table(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "l\\k,-1,0,1");
        // Top row is l = 1: rho(-1,1), rho(0,1), rho(1,1).
        assert_eq!(lines[1], "1,0.250000,0.500000,0.700000");
        assert_eq!(lines[2], "0,0.500000,1.000000,0.500000");
    }
}
