//! File formats: CSV datasets and matrices, newline-delimited JSON traces,
//! and JSON run summaries.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{PosteriorTrace, SimilarityMatrix, TraceSample};
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::sampler::StepDiagnostics;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads a comma-separated file with one header row. Rows in parse errors are
/// file line numbers (the header is row 1); columns are 1-based.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let width = match reader.headers() {
        Ok(h) if h.is_empty() || (h.len() == 1 && h[0].trim().is_empty()) => {
            return Err(format_err(path, "empty file"))
        }
        Ok(h) => h.len(),
        Err(e) => return Err(format_err(path, e.to_string())),
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format_err(path, e.to_string()))?;
        let line = record.position().map_or(rows.len() + 2, |p| p.line() as usize);
        if record.len() != width {
            return Err(format_err(
                path,
                format!("row {line}: {} fields, expected {width}", record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                let bad = |reason: String| Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: j + 1,
                    reason,
                };
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("`{cell}` is not a number")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad(format!("`{cell}` is not finite")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(format_err(path, "no data rows"));
    }
    Dataset::new(rows)
}

/// Writes a dataset with header `y1,…,yD`.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = create(path)?;
    let header: Vec<String> = (1..=data.dim()).map(|d| format!("y{d}")).collect();
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in data.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes labels, one per line under the header `cluster`, shifted to start at 1.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "cluster").map_err(io)?;
    for l in labels {
        writeln!(w, "{}", l + 1).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes a similarity matrix as `N` lines of `N` comma-separated values.
pub fn write_similarity(path: &Path, psm: &SimilarityMatrix) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for i in 0..psm.n() {
        let cells: Vec<String> = psm.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    m: usize,
    m_a: usize,
    /// Labels in `1..=m`.
    alloc: Vec<usize>,
    gamma: f64,
    zeta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

/// One JSON object per line with keys `m, m_a, alloc, gamma, zeta` and
/// optionally `weights`. Labels are written from 1.
pub fn write_trace(path: &Path, trace: &PosteriorTrace) -> Result<()> {
    let mut w = create(path)?;
    for s in &trace.samples {
        let rec = TraceRecord {
            m: s.m,
            m_a: s.m_a,
            alloc: s.alloc.iter().map(|c| c + 1).collect(),
            gamma: s.gamma,
            zeta: s.zeta,
            weights: s.weights.clone(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| format_err(path, e.to_string()))?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<PosteriorTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| format_err(path, format!("line {}: {e}", k + 1)))?;
        if rec.alloc.contains(&0) {
            return Err(format_err(path, format!("line {}: labels start at 1", k + 1)));
        }
        samples.push(TraceSample {
            m: rec.m,
            m_a: rec.m_a,
            alloc: rec.alloc.iter().map(|c| c - 1).collect(),
            gamma: rec.gamma,
            zeta: rec.zeta,
            weights: rec.weights,
        });
    }
    let trace = PosteriorTrace::new(samples);
    trace
        .validate()
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub means: f64,
    pub weights: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub birth: f64,
    pub death: f64,
}

impl From<&StepDiagnostics> for AcceptanceRates {
    fn from(d: &StepDiagnostics) -> Self {
        Self {
            means: d.means.rate(),
            weights: d.weights.rate(),
            gamma: d.gamma.rate(),
            zeta: d.zeta.rate(),
            birth: d.birth.rate(),
            death: d.death.rate(),
        }
    }
}

/// Scalar summaries of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_samples: usize,
    pub mean_m_a: f64,
    /// Entry `k` is the posterior frequency of `M_a = k`.
    pub m_a_histogram: Vec<f64>,
    pub m_histogram: Vec<f64>,
    pub acceptance: AcceptanceRates,
}

impl RunSummary {
    pub fn new(trace: &PosteriorTrace, diag: &StepDiagnostics) -> Self {
        Self {
            n_samples: trace.len(),
            mean_m_a: trace.mean_m_a(),
            m_a_histogram: trace.m_a_histogram(),
            m_histogram: trace.m_histogram(),
            acceptance: diag.into(),
        }
    }
}

/// Pretty-printed JSON of any serializable value.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| format_err(path, e.to_string()))?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| format_err(path, e.to_string()))
}
