//! Reading and writing tabular data: headered numeric CSV and the sparse
//! `label index:value ...` text format with 1-based, strictly increasing
//! indices per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::design::{Design, DenseMatrix, DesignMatrix, SparseMatrix};
use crate::error::{Result, SlopeError};

/// A parsed data set: unstandardized predictors plus raw numeric labels.
#[derive(Debug, Clone)]
pub struct TabularData {
    pub design: Design,
    pub labels: Vec<f64>,
    pub feature_names: Vec<String>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> SlopeError {
    SlopeError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a headered numeric CSV; `response_column` names the label column.
pub fn read_csv(path: impl AsRef<Path>, response_column: &str) -> Result<TabularData> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let response_idx = names
        .iter()
        .position(|n| n == response_column)
        .ok_or_else(|| {
            parse_err(
                path,
                1,
                format!("response column '{response_column}' not found in header"),
            )
        })?;
    let width = names.len();
    if width < 2 {
        return Err(parse_err(path, 1, "need at least one predictor column"));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {width} cells, found {}", cells.len()),
            ));
        }
        for (col, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                parse_err(
                    path,
                    line_no,
                    format!("column {}: invalid number '{}'", col + 1, cell.trim()),
                )
            })?;
            if col == response_idx {
                labels.push(value);
            } else {
                rows.push(value);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(parse_err(path, 2, "no data rows"));
    }

    let p = width - 1;
    let matrix = DenseMatrix::from_rows(n, p, &rows)?;
    let feature_names = names
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, n)| n)
        .collect();
    Ok(TabularData {
        design: Design::from_dense(matrix),
        labels,
        feature_names,
    })
}

/// Reads the sparse text format `label idx:val idx:val ...`; indices are
/// 1-based and must be strictly increasing within a line. A line holding only
/// a label is an all-zero row.
pub fn read_libsvm(path: impl AsRef<Path>) -> Result<TabularData> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);

    let mut labels: Vec<f64> = Vec::new();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut p = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut tokens = trimmed.split_ascii_whitespace();
        let label: f64 = tokens
            .next()
            .expect("non-empty line has a first token")
            .parse()
            .map_err(|_| parse_err(path, line_no, "invalid label"))?;
        let row = labels.len();
        labels.push(label);

        let mut last_index = 0usize;
        for token in tokens {
            let (idx_str, val_str) = token.split_once(':').ok_or_else(|| {
                parse_err(path, line_no, format!("malformed feature '{token}'"))
            })?;
            let index: usize = idx_str
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("invalid index '{idx_str}'")))?;
            if index == 0 {
                return Err(parse_err(path, line_no, "feature indices are 1-based"));
            }
            if index <= last_index {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("feature index {index} is not strictly increasing"),
                ));
            }
            let value: f64 = val_str
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("invalid value '{val_str}'")))?;
            triplets.push((row, index - 1, value));
            last_index = index;
            p = p.max(index);
        }
    }
    if labels.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    if p == 0 {
        return Err(parse_err(path, 1, "no features present"));
    }

    let matrix = SparseMatrix::from_triplets(labels.len(), p, &triplets)?;
    let feature_names = (1..=p).map(|j| format!("x{j}")).collect();
    Ok(TabularData {
        design: Design::from_sparse(matrix),
        labels,
        feature_names,
    })
}

/// Writes a dense design and labels as a headered CSV. Values use the
/// shortest round-trip decimal form, so reading the file back reproduces them
/// exactly.
pub fn write_csv(
    path: impl AsRef<Path>,
    design: &Design,
    labels: &[f64],
    response_name: &str,
) -> Result<()> {
    let matrix = match &design.matrix {
        DesignMatrix::Dense(m) => m,
        DesignMatrix::Sparse(_) => {
            return Err(SlopeError::InvalidParameter(
                "csv output supports dense designs only".into(),
            ))
        }
    };
    if labels.len() != matrix.n() {
        return Err(SlopeError::DimensionMismatch {
            context: "write_csv",
            expected: matrix.n(),
            got: labels.len(),
        });
    }
    let mut out = BufWriter::new(File::create(path)?);
    for j in 0..matrix.p() {
        write!(out, "x{},", j + 1)?;
    }
    writeln!(out, "{response_name}")?;
    for i in 0..matrix.n() {
        for j in 0..matrix.p() {
            write!(out, "{},", matrix.get(i, j))?;
        }
        writeln!(out, "{}", labels[i])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        path.push(format!("slope-io-test-{}-{name}", std::process::id()));
        let mut f = File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn libsvm_basic_line() {
        let path = temp_file("basic.svm", "1 3:0.5 7:1.2\n");
        let data = read_libsvm(&path).unwrap();
        assert_eq!(data.labels, vec![1.0]);
        assert_eq!(data.design.p(), 7);
        assert_eq!(data.design.col_dot(2, &[1.0]), 0.5);
        assert_eq!(data.design.col_dot(6, &[1.0]), 1.2);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn libsvm_empty_feature_list() {
        let path = temp_file("empty-row.svm", "0\n1 2:1.0\n");
        let data = read_libsvm(&path).unwrap();
        assert_eq!(data.labels, vec![0.0, 1.0]);
        assert_eq!(data.design.col_dot(1, &[1.0, 0.0]), 0.0);
        assert_eq!(data.design.col_dot(1, &[0.0, 1.0]), 1.0);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn libsvm_duplicate_index_is_an_error() {
        let path = temp_file("dup.svm", "1 3:1 3:2\n");
        match read_libsvm(&path) {
            Err(SlopeError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let matrix =
            DenseMatrix::from_rows(2, 2, &[0.1, 2.0 / 3.0, -1.25e-7, 3.00000000000004]).unwrap();
        let design = Design::from_dense(matrix);
        let labels = vec![1.0, -0.5];
        let mut path = std::env::temp_dir();
        path.push(format!("slope-io-roundtrip-{}.csv", std::process::id()));
        write_csv(&path, &design, &labels, "y").unwrap();
        let back = read_csv(&path, "y").unwrap();
        assert_eq!(back.labels, labels);
        match (&design.matrix, &back.design.matrix) {
            (DesignMatrix::Dense(a), DesignMatrix::Dense(b)) => {
                assert_eq!(a.data(), b.data());
            }
            _ => unreachable!(),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_reports_bad_cells_with_position() {
        let path = temp_file("bad.csv", "x1,y\n1.0,2.0\noops,3.0\n");
        match read_csv(&path, "y") {
            Err(SlopeError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("invalid number"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_missing_response_column() {
        let path = temp_file("nohdr.csv", "x1,x2\n1.0,2.0\n");
        assert!(read_csv(&path, "y").is_err());
        std::fs::remove_file(path).ok();
    }
}
