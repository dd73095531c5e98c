use std::fs::File;
use std::path::Path;

use crate::data::{Bag, Example, LabelKind};
use crate::error::{ConformalError, Result};

/// Label column chosen by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
    Last,
}

impl ColumnSelector {
    /// A header name wins over an index reading of the same string.
    fn resolve(&self, headers: &[String]) -> Option<usize> {
        match self {
            ColumnSelector::Last => headers.len().checked_sub(1),
            ColumnSelector::Index(i) => (*i < headers.len()).then_some(*i),
            ColumnSelector::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .or_else(|| name.parse::<usize>().ok().filter(|&i| i < headers.len())),
        }
    }
}

impl std::str::FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(ColumnSelector::Name(s.to_string()))
    }
}

/// Reads a headed, comma-separated file. Every non-label column is a real
/// feature. Class mode builds the label space from the sorted distinct
/// label cells; rows keep file order.
pub fn load_csv(path: &Path, label_column: &ColumnSelector, kind: LabelKind) -> Result<Bag> {
    let csv_err = |message: String| ConformalError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| csv_err(e.to_string()))?;
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_col = label_column
        .resolve(&headers)
        .ok_or_else(|| csv_err(format!("unknown label column {label_column:?}")))?;

    let mut rows: Vec<(Vec<f64>, String)> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // 1-based data row numbering, header excluded.
        let row = r + 1;
        let record = record.map_err(|e| csv_err(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(csv_err(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let mut x = Vec::with_capacity(headers.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            if c == label_col {
                continue;
            }
            let cell_err = |message: String| ConformalError::CsvCell {
                path: path.to_path_buf(),
                row,
                column: headers[c].clone(),
                message,
            };
            let v: f64 = cell
                .parse()
                .map_err(|_| cell_err(format!("cannot parse `{cell}` as a number")))?;
            if !v.is_finite() {
                return Err(cell_err(format!("non-finite value `{cell}`")));
            }
            x.push(v);
        }
        rows.push((x, record[label_col].to_string()));
    }

    match kind {
        LabelKind::Class => {
            let (xs, ys): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            Bag::from_symbols(xs, &ys)
        }
        LabelKind::Real => {
            let mut bag = Bag::regression_empty();
            for (r, (x, y)) in rows.into_iter().enumerate() {
                let target: f64 = y.parse().map_err(|_| ConformalError::CsvCell {
                    path: path.to_path_buf(),
                    row: r + 1,
                    column: headers[label_col].clone(),
                    message: format!("cannot parse target `{y}` as a number"),
                })?;
                bag.push(Example::real(x, target))?;
            }
            Ok(bag)
        }
    }
}

/// Writes `bag` with header `x0,…,x{d-1},label`. Reals use Rust's shortest
/// round-trip formatting, so [`load_csv`] reads back identical values.
pub fn write_csv(bag: &Bag, path: &Path) -> Result<()> {
    let mut writer = ::csv::Writer::from_path(path).map_err(|e| ConformalError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let dim = bag.dim().unwrap_or(0);
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    let wrap = |e: ::csv::Error| ConformalError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    writer.write_record(&header).map_err(wrap)?;
    for e in bag {
        let mut record: Vec<String> = e.x.iter().map(|v| v.to_string()).collect();
        record.push(match e.y {
            crate::data::Label::Class(c) => bag.label_space()[c].clone(),
            crate::data::Label::Real(v) => v.to_string(),
        });
        writer.write_record(&record).map_err(wrap)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows_two_labels() {
        let f = file("a,b,class\n1,2,A\n3,4,B\n5,6,A\n");
        let bag = load_csv(
            f.path(),
            &ColumnSelector::Name("class".into()),
            LabelKind::Class,
        )
        .unwrap();
        assert_eq!(bag.len(), 3);
        assert_eq!(bag.label_space(), ["A", "B"]);
        assert_eq!(bag.classes().unwrap(), vec![0, 1, 0]);
        assert_eq!(bag.get(1).x, vec![3.0, 4.0]);
    }

    #[test]
    fn label_column_by_index_and_default_last() {
        let f = file("y,a\nB,1\nA,2\n");
        let bag = load_csv(f.path(), &ColumnSelector::Index(0), LabelKind::Class).unwrap();
        assert_eq!(bag.get(0).x, vec![1.0]);
        let bag = load_csv(
            f.path(),
            &ColumnSelector::Name("0".into()),
            LabelKind::Class,
        )
        .unwrap();
        assert_eq!(bag.classes().unwrap(), vec![1, 0]);

        let g = file("a,y\n1,0.5\n2,1.5\n");
        let bag = load_csv(g.path(), &ColumnSelector::Last, LabelKind::Real).unwrap();
        assert_eq!(bag.targets().unwrap(), vec![0.5, 1.5]);
    }

    #[test]
    fn bad_cell_is_named() {
        let f = file("a,b,y\n1,2,A\n3,oops,B\n");
        let err = load_csv(f.path(), &ColumnSelector::Last, LabelKind::Class).unwrap_err();
        match err {
            ConformalError::CsvCell { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_column_and_non_finite() {
        let f = file("a,y\n1,A\n");
        assert!(load_csv(
            f.path(),
            &ColumnSelector::Name("nope".into()),
            LabelKind::Class
        )
        .is_err());
        let g = file("a,y\ninf,A\n");
        assert!(matches!(
            load_csv(g.path(), &ColumnSelector::Last, LabelKind::Class),
            Err(ConformalError::CsvCell { .. })
        ));
        let h = file("a,y\n1,A\n2\n");
        assert!(load_csv(h.path(), &ColumnSelector::Last, LabelKind::Class).is_err());
    }
}
