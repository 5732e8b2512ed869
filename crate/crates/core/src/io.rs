//! Comma-separated loaders and writers.
//!
//! Networks are square numeric tables. A header row and a row-label column
//! are both optional and detected from a non-numeric first cell. Numbers are
//! written with Rust's shortest round-trip formatting, so every `f64` reads
//! back bit-identical.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{GergmError, Result};
use crate::network::{CovariateSet, ObservedNetwork, RestrictedNetwork};

fn read_records(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| GergmError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| GergmError::parse(path, format!("row {}: {e}", k + 1)))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

fn parse_cell(path: &Path, s: &str, row: usize, col: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| GergmError::parse(path, format!("non-numeric cell '{s}' at row {row}, column {col}")))
}

/// Square numeric table with optional header row and row-label column.
/// Reported row and column numbers are 1-based positions in the file.
pub fn load_matrix(path: &Path) -> Result<(usize, Vec<f64>, Option<Vec<String>>)> {
    let rows = read_records(path)?;
    if rows.is_empty() {
        return Err(GergmError::parse(path, "empty file"));
    }
    // A header has an empty corner cell or a non-numeric cell past the first;
    // a lone non-numeric first cell is a row label.
    let has_header = rows[0].first().is_some_and(String::is_empty) || rows[0].iter().skip(1).any(|c| !is_number(c));
    let body_start = usize::from(has_header);
    let has_labels = rows
        .get(body_start)
        .and_then(|r| r.first())
        .is_some_and(|c| !is_number(c));
    let col_start = usize::from(has_labels);
    let body = &rows[body_start..];
    let n = body.len();
    let width = body.first().map_or(0, |r| r.len() - col_start);
    for (k, r) in body.iter().enumerate() {
        if r.len() - col_start.min(r.len()) != width {
            return Err(GergmError::parse(
                path,
                format!("row {} has {} values, expected {width}", k + 1 + body_start, r.len() - col_start.min(r.len())),
            ));
        }
    }
    if n != width {
        return Err(GergmError::parse(path, format!("table is {n}×{width}, expected a square matrix")));
    }
    if n < 2 {
        return Err(GergmError::parse(path, format!("need at least 2 nodes, got {n}")));
    }
    let mut w = vec![0.0; n * n];
    for (i, r) in body.iter().enumerate() {
        for j in 0..n {
            let cell = &r[j + col_start];
            w[i * n + j] = if i == j && !is_number(cell) {
                0.0
            } else {
                parse_cell(path, cell, i + 1 + body_start, j + 1 + col_start)?
            };
        }
    }
    let names = if has_labels {
        Some(body.iter().map(|r| r[0].clone()).collect())
    } else if has_header {
        Some(rows[0][col_start.min(rows[0].len())..].to_vec()).filter(|v: &Vec<String>| v.len() == n)
    } else {
        None
    };
    Ok((n, w, names))
}

pub fn load_network(path: &Path) -> Result<ObservedNetwork> {
    let (n, w, _) = load_matrix(path)?;
    ObservedNetwork::new(n, w).map_err(|e| GergmError::parse(path, e.to_string()))
}

/// Node covariates: header row of column names, then one row per node. A
/// leading non-numeric column is taken as node labels and dropped.
pub fn load_node_covariates(path: &Path, n: usize, into: &mut CovariateSet) -> Result<()> {
    let rows = read_records(path)?;
    if rows.is_empty() {
        return Err(GergmError::parse(path, "empty file"));
    }
    let header = &rows[0];
    let body = &rows[1..];
    if body.len() != n {
        return Err(GergmError::parse(path, format!("has {} data rows but the network has {n} nodes", body.len())));
    }
    let has_labels = body.first().and_then(|r| r.first()).is_some_and(|c| !is_number(c));
    let col_start = usize::from(has_labels);
    let names = &header[col_start.min(header.len())..];
    let mut cols = vec![Vec::with_capacity(n); names.len()];
    for (i, r) in body.iter().enumerate() {
        if r.len() != header.len() {
            return Err(GergmError::parse(path, format!("row {} has {} cells, header has {}", i + 2, r.len(), header.len())));
        }
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(parse_cell(path, &r[k + col_start], i + 2, k + 1 + col_start)?);
        }
    }
    for (name, col) in names.iter().zip(cols) {
        into.add_node(name.clone(), col).map_err(|e| GergmError::parse(path, e.to_string()))?;
    }
    Ok(())
}

/// Dyadic covariate: an `n × n` numeric table in the network format.
pub fn load_dyadic_covariate(path: &Path, name: &str, n: usize, into: &mut CovariateSet) -> Result<()> {
    let (m, w, _) = load_matrix(path)?;
    if m != n {
        return Err(GergmError::parse(path, format!("dyadic covariate is {m}×{m} but the network has {n} nodes")));
    }
    into.add_dyadic(name.to_string(), w).map_err(|e| GergmError::parse(path, e.to_string()))
}

/// All covariates for an `n`-node network.
pub fn load_covariates(n: usize, node_path: Option<&Path>, dyadic: &[(String, &Path)]) -> Result<CovariateSet> {
    let mut set = CovariateSet::new(n);
    if let Some(p) = node_path {
        load_node_covariates(p, n, &mut set)?;
    }
    for (name, p) in dyadic {
        load_dyadic_covariate(p, name, n, &mut set)?;
    }
    Ok(set)
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| GergmError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> GergmError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GergmError::io(path, io),
        other => GergmError::parse(path, format!("{other:?}")),
    }
}

/// Writes rows of strings under a header.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| GergmError::io(path, e))
}

/// `sample,<labels…>,accepted`, one row per kept sample.
pub fn write_trace(path: &Path, labels: &[String], trace: &[Vec<f64>], accepted: &[bool]) -> Result<()> {
    let mut header = vec!["sample".to_string()];
    header.extend(labels.iter().cloned());
    header.push("accepted".into());
    let rows: Vec<Vec<String>> = trace
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let mut r = vec![k.to_string()];
            r.extend(h.iter().map(|v| fmt_f64(*v)));
            r.push(u8::from(accepted.get(k).copied().unwrap_or(true)).to_string());
            r
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Reads a trace file back as `(labels, values, accepted)`.
pub fn read_trace(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<bool>)> {
    let rows = read_records(path)?;
    let Some((header, body)) = rows.split_first() else {
        return Err(GergmError::parse(path, "empty trace file"));
    };
    if header.len() < 2 {
        return Err(GergmError::parse(path, "trace header too short"));
    }
    let labels = header[1..header.len() - 1].to_vec();
    let mut values = Vec::with_capacity(body.len());
    let mut flags = Vec::with_capacity(body.len());
    for (k, r) in body.iter().enumerate() {
        if r.len() != header.len() {
            return Err(GergmError::parse(path, format!("row {} has {} cells, header has {}", k + 2, r.len(), header.len())));
        }
        values.push(
            (1..r.len() - 1)
                .map(|c| parse_cell(path, &r[c], k + 2, c + 1))
                .collect::<Result<Vec<f64>>>()?,
        );
        flags.push(r[r.len() - 1] == "1");
    }
    Ok((labels, values, flags))
}

/// Square matrix as a headerless table.
pub fn write_matrix<W: Write>(out: &mut W, n: usize, weights: &[f64]) -> std::io::Result<()> {
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_f64(weights[i * n + j])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_network(path: &Path, y: &ObservedNetwork) -> Result<()> {
    let mut f = File::create(path).map_err(|e| GergmError::io(path, e))?;
    write_matrix(&mut f, y.n(), y.weights()).map_err(|e| GergmError::io(path, e))
}

pub fn save_restricted(path: &Path, x: &RestrictedNetwork) -> Result<()> {
    let mut f = File::create(path).map_err(|e| GergmError::io(path, e))?;
    write_matrix(&mut f, x.n(), x.weights()).map_err(|e| GergmError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_by_two() {
        let f = file_with("0,1.5\n2.5,0\n");
        let y = load_network(f.path()).unwrap();
        assert_eq!(y.n(), 2);
        assert_eq!(y.get(0, 1), 1.5);
        assert_eq!(y.get(1, 0), 2.5);
    }

    #[test]
    fn header_and_labels_detected() {
        let f = file_with(",a,b,c\na,0,1,2\nb,3,0,4\nc,5,6,0\n");
        let (n, w, names) = load_matrix(f.path()).unwrap();
        assert_eq!(n, 3);
        assert_eq!(w[1 * 3 + 2], 4.0);
        assert_eq!(names.unwrap(), vec!["a", "b", "c"]);
        let f = file_with("x,y\n0,1\n2,0\n");
        let y = load_network(f.path()).unwrap();
        assert_eq!(y.get(1, 0), 2.0);
        let f = file_with("u,0,1\nv,2,0\n");
        assert_eq!(load_network(f.path()).unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn non_square_names_dimensions() {
        let f = file_with("0,1,2,3\n1,0,2,3\n1,2,0,3\n");
        let err = load_network(f.path()).unwrap_err().to_string();
        assert!(err.contains("3×4"), "{err}");
    }

    #[test]
    fn bad_cell_has_location() {
        let f = file_with("0,1,2\n1,0,zz\n1,2,0\n");
        let err = load_network(f.path()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("column 3"), "{err}");
    }

    #[test]
    fn too_small_and_ragged() {
        let f = file_with("0\n");
        assert!(load_network(f.path()).is_err());
        let f = file_with("0,1\n2\n");
        assert!(load_network(f.path()).unwrap_err().to_string().contains("row 2"));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_network(Path::new("/nonexistent/net.csv")), Err(GergmError::Io { .. })));
    }

    #[test]
    fn node_covariates() {
        let f = file_with("gdp,population\n1,2\n3,4\n5,6\n");
        let c = load_covariates(3, Some(f.path()), &[]).unwrap();
        assert_eq!(c.node_names().collect::<Vec<_>>(), vec!["gdp", "population"]);
        assert_eq!(c.node_covariate("population").unwrap(), &[2.0, 4.0, 6.0]);
        assert!(load_covariates(4, Some(f.path()), &[]).is_err());
        let f = file_with("name,gdp\nx,1\ny,3\n");
        let c = load_covariates(2, Some(f.path()), &[]).unwrap();
        assert_eq!(c.node_names().collect::<Vec<_>>(), vec!["gdp"]);
    }

    #[test]
    fn dyadic_covariates() {
        let f = file_with("0,1,2\n3,0,4\n5,6,0\n");
        let c = load_covariates(3, None, &[("dist".into(), f.path())]).unwrap();
        assert_eq!(c.dyadic_names().collect::<Vec<_>>(), vec!["dist"]);
        assert!(load_covariates(4, None, &[("dist".into(), f.path())]).is_err());
        let dup = load_covariates(3, None, &[("d".into(), f.path()), ("d".into(), f.path())]);
        assert!(dup.is_err());
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let y = ObservedNetwork::from_fn(4, |i, j| (i as f64 + 0.1).powf(j as f64 + 0.3) / 7.0).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_network(f.path(), &y).unwrap();
        assert_eq!(load_network(f.path()).unwrap(), y);
    }

    #[test]
    fn trace_round_trip() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let labels = vec!["a".to_string(), "b".to_string()];
        let trace = vec![vec![0.1, 1.0 / 3.0], vec![2.0, -5e-300], vec![1e10, 0.0]];
        write_trace(f.path(), &labels, &trace, &[true, false, true]).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), "sample,a,b,accepted");
        let (l, v, a) = read_trace(f.path()).unwrap();
        assert_eq!(l, labels);
        assert_eq!(v, trace);
        assert_eq!(a, vec![true, false, true]);
    }
}
