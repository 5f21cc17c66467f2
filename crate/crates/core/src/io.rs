//! File formats: dense CSV matrices, `i j w` edge lists, sample manifests,
//! operator/solve/spectrum exports and trajectories.
//!
//! Reals are written with 17 significant digits so every `f64` round-trips.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::kernel::GraphonKernel;
use crate::operators::{LinearizedOperator, OperatorKind};
use crate::sampling::{SampledGraph, SamplingMode};
use crate::solver::SolveReport;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

pub fn write_dense_csv<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.row_iter() {
        out.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dense_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(parse_f64).collect::<Result<_>>()?);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged rows in dense CSV".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Upper-triangle nonzeros as `i j w` lines, 1-indexed, after a `# n <n>` header.
pub fn write_edge_list<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    writeln!(w, "# n {n}")?;
    for i in 0..n {
        for j in i..n {
            let v = m[(i, j)];
            if v != 0.0 {
                writeln!(w, "{} {} {}", i + 1, j + 1, fmt_f64(v))?;
            }
        }
    }
    Ok(())
}

/// Reads an undirected edge list; the size comes from a `# n <n>` header or
/// else the largest index seen.
pub fn read_edge_list<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut n_header = None;
    let mut edges = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("n") {
                n_header = it.next().and_then(|s| s.parse::<usize>().ok());
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("expected `i j w`, got {t:?}")));
        }
        let idx = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::Parse(format!("bad vertex index {s:?}")))
        };
        edges.push((idx(f[0])? - 1, idx(f[1])? - 1, parse_f64(f[2])?));
    }
    let n = n_header.unwrap_or_else(|| edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0));
    let mut m = DMatrix::zeros(n, n);
    for (i, j, w) in edges {
        if i >= n || j >= n {
            return Err(Error::Parse(format!("vertex {} exceeds n = {n}", i.max(j) + 1)));
        }
        m[(i, j)] = w;
        m[(j, i)] = w;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub kernel: GraphonKernel,
    pub kernel_id: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub mode: SamplingMode,
    pub adjacency_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl SampleManifest {
    pub fn for_graph(graph: &SampledGraph, kernel: &GraphonKernel, adjacency_file: impl Into<String>) -> Self {
        Self {
            kernel: kernel.clone(),
            kernel_id: graph.kernel_id.clone(),
            n: graph.n(),
            seed: graph.seed,
            mode: graph.mode,
            adjacency_file: adjacency_file.into(),
            created_unix: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorHeader {
    pub kind: OperatorKind,
    pub n: usize,
    pub min_q: f64,
}

/// The JSON header and dense CSV body of a linearization.
pub fn write_operator<W1: Write, W2: Write>(header: W1, body: W2, op: &LinearizedOperator) -> Result<()> {
    let h = OperatorHeader { kind: op.kind, n: op.n(), min_q: op.min_q() };
    serde_json::to_writer_pretty(header, &h)?;
    write_dense_csv(body, &op.matrix)
}

pub fn read_operator_header<R: Read>(r: R) -> Result<OperatorHeader> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_json<W: Write, T: Serialize>(w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

/// `iteration,residual` rows.
pub fn write_residual_csv<W: Write>(w: W, report: &SolveReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "residual"])?;
    for (k, r) in report.residual_history.iter().enumerate() {
        out.write_record([k.to_string(), fmt_f64(*r)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_residual_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.records().map(|rec| parse_f64(&rec?[1])).collect()
}

/// One eigenvalue of one instance: a row of an eigenvalue cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub re: f64,
    pub im: f64,
    pub n: usize,
    /// Empty for deterministic graphs.
    pub seed: Option<u64>,
}

pub fn eigen_rows(eigs: &[Complex64], n: usize, seed: Option<u64>) -> Vec<EigenRow> {
    eigs.iter().map(|z| EigenRow { re: z.re, im: z.im, n, seed }).collect()
}

pub fn write_eigen_csv<W: Write>(w: W, rows: &[EigenRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["re", "im", "n", "seed"])?;
    for r in rows {
        let seed = r.seed.map_or_else(String::new, |s| s.to_string());
        out.write_record([fmt_f64(r.re), fmt_f64(r.im), r.n.to_string(), seed])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_eigen_csv<R: Read>(r: R) -> Result<Vec<EigenRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let int = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
            let seed = if rec[3].trim().is_empty() { None } else { Some(int(&rec[3])?) };
            Ok(EigenRow { re: parse_f64(&rec[0])?, im: parse_f64(&rec[1])?, n: int(&rec[2])? as usize, seed })
        })
        .collect()
}

/// `t,u_1,...,u_n` rows, keeping every `stride`-th sample.
pub fn write_trajectory_csv<W: Write>(w: W, tr: &Trajectory, stride: usize) -> Result<()> {
    let tr = tr.subsample(stride);
    let n = tr.states.first().map_or(0, Vec::len);
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("u_{i}")));
    out.write_record(&header)?;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let mut rec = vec![fmt_f64(*t)];
        rec.extend(s.iter().map(|&v| fmt_f64(v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `(times, states)` from a trajectory CSV.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut times = Vec::new();
    let mut states = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        times.push(parse_f64(&rec[0])?);
        states.push(rec.iter().skip(1).map(parse_f64).collect::<Result<Vec<_>>>()?);
    }
    Ok((times, states))
}
