//! Text formats: edge-vector CSV (`d=<n>` header, one value per line),
//! headerless matrix CSV, LLA trace CSV and its JSON sidecar.
//!
//! Values are written with 17 significant digits so that `f64` round-trips
//! bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{FclsError, Result};
use crate::graph::{edge_count, EdgeVector};
use crate::lla::LlaTrace;
use crate::penalty::{Penalty, PenaltyKind};
use crate::scalar::Scalar;

pub fn format_value<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn parse_error(line: usize, message: impl Into<String>) -> FclsError {
    FclsError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_value<T: Scalar>(field: &str, line: usize) -> Result<T> {
    let field = field.trim();
    let v: f64 = field
        .parse()
        .map_err(|_| parse_error(line, format!("cannot parse '{field}' as a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite value '{field}'")));
    }
    Ok(T::lit(v))
}

/// Nonblank lines paired with their 1-based line numbers.
fn content_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push((k + 1, line));
        }
    }
    Ok(out)
}

pub fn write_edge_vector<T: Scalar, W: Write>(mut w: W, beta: &EdgeVector<T>) -> Result<()> {
    writeln!(w, "d={}", beta.d())?;
    for v in beta.values() {
        writeln!(w, "{}", format_value(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edge_vector<T: Scalar, R: BufRead>(reader: R) -> Result<EdgeVector<T>> {
    let lines = content_lines(reader)?;
    let Some((first_no, header)) = lines.first() else {
        return Err(parse_error(1, "empty edge-vector file"));
    };
    let d: usize = header
        .trim()
        .strip_prefix("d=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| parse_error(*first_no, format!("expected header 'd=<n>', got '{}'", header.trim())))?;
    let values = lines[1..]
        .iter()
        .map(|(no, l)| parse_value(l, *no))
        .collect::<Result<Vec<T>>>()?;
    if values.len() != edge_count(d) {
        let last = lines.last().map_or(1, |(no, _)| *no);
        return Err(parse_error(
            last,
            format!("d={d} needs {} values, found {}", edge_count(d), values.len()),
        ));
    }
    EdgeVector::from_vec(d, values)
}

pub fn write_matrix<T: Scalar, W: Write>(mut w: W, m: &Array2<T>) -> Result<()> {
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<T: Scalar, R: BufRead>(reader: R) -> Result<Array2<T>> {
    let lines = content_lines(reader)?;
    let mut width = None;
    let mut data = Vec::new();
    for (no, line) in &lines {
        let row = line
            .split(',')
            .map(|f| parse_value(f, *no))
            .collect::<Result<Vec<T>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_error(*no, format!("expected {w} columns, found {}", row.len())));
            }
            _ => {}
        }
        data.extend(row);
    }
    let cols = width.ok_or_else(|| parse_error(1, "empty matrix file"))?;
    Ok(Array2::from_shape_vec((lines.len(), cols), data).expect("rows checked for equal width"))
}

pub fn write_column<T: Scalar, W: Write>(mut w: W, y: &Array1<T>) -> Result<()> {
    for v in y {
        writeln!(w, "{}", format_value(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// Single-column CSV.
pub fn read_column<T: Scalar, R: BufRead>(reader: R) -> Result<Array1<T>> {
    let lines = content_lines(reader)?;
    if lines.is_empty() {
        return Err(parse_error(1, "empty column file"));
    }
    lines
        .iter()
        .map(|(no, l)| {
            if l.contains(',') {
                Err(parse_error(*no, "expected a single column"))
            } else {
                parse_value(l, *no)
            }
        })
        .collect::<Result<Vec<T>>>()
        .map(Array1::from)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn load_edge_vector<T: Scalar>(path: &Path) -> Result<EdgeVector<T>> {
    read_edge_vector(open(path)?)
}

pub fn save_edge_vector<T: Scalar>(path: &Path, beta: &EdgeVector<T>) -> Result<()> {
    write_edge_vector(create(path)?, beta)
}

pub fn load_matrix<T: Scalar>(path: &Path) -> Result<Array2<T>> {
    read_matrix(open(path)?)
}

pub fn save_matrix<T: Scalar>(path: &Path, m: &Array2<T>) -> Result<()> {
    write_matrix(create(path)?, m)
}

pub fn load_column<T: Scalar>(path: &Path) -> Result<Array1<T>> {
    read_column(open(path)?)
}

pub fn save_column<T: Scalar>(path: &Path, y: &Array1<T>) -> Result<()> {
    write_column(create(path)?, y)
}

/// Every iterate of a trace as `step,edge_id,value` rows; step 0 is the
/// initializer.
pub fn write_trace_csv<T: Scalar, W: Write>(mut w: W, trace: &LlaTrace<T>) -> Result<()> {
    writeln!(w, "step,edge_id,value")?;
    for (step, beta) in trace.iterates.iter().enumerate() {
        for (l, v) in beta.values().iter().enumerate() {
            writeln!(w, "{step},{l},{}", format_value(*v))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRecord {
    pub kind: PenaltyKind,
    pub tau: f64,
    pub a: f64,
}

impl<T: Scalar> From<&Penalty<T>> for PenaltyRecord {
    fn from(p: &Penalty<T>) -> Self {
        Self {
            kind: p.kind,
            tau: p.tau.as_f64(),
            a: p.a.as_f64(),
        }
    }
}

/// JSON sidecar describing a finished LLA run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub steps_taken: usize,
    pub converged: bool,
    pub tau: f64,
    pub penalty: PenaltyRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<serde_json::Value>,
}

impl TraceSidecar {
    pub fn new<T: Scalar>(trace: &LlaTrace<T>, penalty: &Penalty<T>) -> Self {
        Self {
            steps_taken: trace.steps_taken,
            converged: trace.converged,
            tau: penalty.tau.as_f64(),
            penalty: penalty.into(),
            tau_max: None,
            init: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn edge_vector_round_trip_is_exact() {
        let b = EdgeVector::<f64>::from_vec(4, vec![0.1, -1.0 / 3.0, 2e-300, 0.0, 1e17, f64::EPSILON]).unwrap();
        let mut buf = Vec::new();
        write_edge_vector(&mut buf, &b).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d=4\n"));
        let back: EdgeVector<f64> = read_edge_vector(&buf[..]).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn edge_vector_errors_name_lines() {
        let err = read_edge_vector::<f64, _>("d=3\n1.0\nfoo\n2.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FclsError::Parse { line: 3, .. }), "{err}");
        let err = read_edge_vector::<f64, _>("3\n1\n2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FclsError::Parse { line: 1, .. }));
        let err = read_edge_vector::<f64, _>("d=3\n1\n2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FclsError::Parse { .. }));
    }

    #[test]
    fn matrix_round_trip_and_ragged_rows() {
        let m: Array2<f64> = array![[1.0, 2.5], [-3.0, 1e-9]];
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix::<f64, _>(&buf[..]).unwrap(), m);
        let err = read_matrix::<f64, _>("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FclsError::Parse { line: 2, .. }));
        let err = read_column::<f64, _>("1\n2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FclsError::Parse { line: 2, .. }));
        assert_eq!(read_column::<f64, _>("1\n\n2\n".as_bytes()).unwrap(), array![1.0, 2.0]);
    }
}
