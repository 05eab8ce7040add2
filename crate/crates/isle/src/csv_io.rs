//! CSV ingestion and export: header row, comma separated, decimal point.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use isle_core::{Dataset, FoldAssignment, Matrix};

use crate::error::{CliError, Result};

/// Raw numeric table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::Data("missing header row".into()));
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        // row numbers are 1-based data rows, the header being row 0
        let rec = rec.map_err(|e| CliError::Data(format!("row {}: {e}", r + 1)))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CliError::Data(format!("row {}, column {:?}: cannot parse {cell:?} as a number", r + 1, header[c]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn read_table_file(path: &Path) -> Result<Table> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_table(f)
}

/// Splits `target` out of the table; every other column becomes a feature.
pub fn table_to_dataset(t: Table, target: &str) -> Result<Dataset> {
    let ti = t
        .column_index(target)
        .ok_or_else(|| CliError::Config(format!("target column {target:?} not in header {:?}", t.header)))?;
    let names: Vec<String> = t.header.iter().enumerate().filter(|(i, _)| *i != ti).map(|(_, h)| h.clone()).collect();
    let y: Vec<f64> = t.rows.iter().map(|r| r[ti]).collect();
    let feats: Vec<Vec<f64>> =
        t.rows.iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != ti).map(|(_, v)| *v).collect()).collect();
    let x = if feats.is_empty() { Matrix::zeros(0, names.len()) } else { Matrix::from_rows(&feats)? };
    Ok(Dataset::new(x, y, names)?)
}

pub fn load_csv(path: &Path, target: &str) -> Result<Dataset> {
    table_to_dataset(read_table_file(path)?, target)
}

/// Features in the order of `names`, looked up by header name. The target
/// column, when present, is returned too.
pub fn select_features(t: &Table, names: &[String], target: Option<&str>) -> Result<(Matrix, Option<Vec<f64>>)> {
    let idx = names
        .iter()
        .map(|n| t.column_index(n).ok_or_else(|| CliError::Data(format!("column {n:?} missing from input"))))
        .collect::<Result<Vec<usize>>>()?;
    let rows: Vec<Vec<f64>> = t.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect();
    let x = if rows.is_empty() { Matrix::zeros(0, names.len()) } else { Matrix::from_rows(&rows)? };
    let y = target.and_then(|name| t.column_index(name)).map(|ti| t.rows.iter().map(|r| r[ti]).collect());
    Ok((x, y))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_dataset<W: Write>(w: W, d: &Dataset, target: &str) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = d.column_names().iter().map(String::as_str).collect();
    header.push(target);
    wr.write_record(&header)?;
    for (i, row) in d.features().iter_rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(d.target()[i].to_string());
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, d: &Dataset, target: &str) -> Result<()> {
    write_dataset(create(path)?, d, target).map_err(csv_err(path))
}

/// Two columns, `row_index,fold`.
pub fn write_folds<W: Write>(w: W, folds: &FoldAssignment) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["row_index", "fold"])?;
    for (i, f) in folds.fold_of().iter().enumerate() {
        wr.write_record([i.to_string(), f.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_folds_file(path: &Path, folds: &FoldAssignment) -> Result<()> {
    write_folds(create(path)?, folds).map_err(csv_err(path))
}

/// One named column of values.
pub fn write_column<W: Write>(w: W, name: &str, values: &[f64]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([name])?;
    for v in values {
        wr.write_record([v.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_column_file(path: &Path, name: &str, values: &[f64]) -> Result<()> {
    write_column(create(path)?, name, values).map_err(csv_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_two_features() {
        let d = table_to_dataset(read_table("a,b,y\n1,2,3\n4,5,6\n7,8,9\n".as_bytes()).unwrap(), "y").unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.target(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.column_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn blank_cell_names_its_location() {
        let err = read_table("a,b,y\n1,2,3\n4,,6\n".as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CliError::Data(_)));
        assert!(msg.contains("row 2") && msg.contains("\"b\""), "{msg}");
    }

    #[test]
    fn missing_target_is_a_config_error() {
        let t = read_table("a,b\n1,2\n".as_bytes()).unwrap();
        assert!(matches!(table_to_dataset(t, "y"), Err(CliError::Config(_))));
    }

    #[test]
    fn round_trip_is_exact() {
        let (d, _) = isle_core::dataset::gen_linear_sparse(3);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d, "y").unwrap();
        let back = table_to_dataset(read_table(buf.as_slice()).unwrap(), "y").unwrap();
        assert_eq!(back.features(), d.features());
        assert_eq!(back.target(), d.target());
    }

    #[test]
    fn folds_export() {
        let f = isle_core::dataset::kfold_split(5, 2, 1).unwrap();
        let mut buf = Vec::new();
        write_folds(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row_index,fold");
        assert_eq!(lines.len(), 6);
        for (i, l) in lines[1..].iter().enumerate() {
            assert_eq!(*l, format!("{i},{}", f.fold_of()[i]));
        }
    }
}
