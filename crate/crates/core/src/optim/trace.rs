use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Mat;

pub const CSV_HEADER: [&str; 8] = [
    "iter",
    "cost",
    "normalized_error",
    "grad_k_norm",
    "grad_sigma_norm",
    "sigma_min_sigma",
    "step_ratio",
    "superlinear_ratio",
];

#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub t: usize,
    /// Kept only when the run was asked to retain iterates.
    pub k: Option<Mat>,
    pub sigma: Option<Mat>,
    pub cost: f64,
    /// `C - C*`.
    pub gap: f64,
    /// `(C - C*)/|C*|`.
    pub normalized_error: f64,
    pub grad_k_norm: f64,
    pub grad_sigma_norm: f64,
    pub sigma_min_sigma: f64,
    pub sigma_max_sigma: f64,
    /// `gap_t / gap_{t-1}`; NaN at `t = 0` or when the previous gap is at
    /// floating-point noise level.
    pub step_ratio: f64,
    /// `gap_t / gap_{t-1}^{1.5}`, same exclusions as `step_ratio`.
    pub superlinear_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    Rpg,
    Ipo,
    GaussNewton,
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodTag::Rpg => "rpg",
            MethodTag::Ipo => "ipo",
            MethodTag::GaussNewton => "gn",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceStatus {
    Converged,
    MaxIters,
    StepError(String),
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStatus::Converged => f.write_str("converged"),
            TraceStatus::MaxIters => f.write_str("max_iters"),
            TraceStatus::StepError(e) => write!(f, "step_error: {e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub method: MethodTag,
    pub records: Vec<IterateRecord>,
    pub status: TraceStatus,
    pub cost_star: f64,
}

impl IterateTrace {
    /// Number of update steps applied (the last record's index).
    pub fn iterations(&self) -> usize {
        self.records.last().map(|r| r.t).unwrap_or(0)
    }

    pub fn final_normalized_error(&self) -> f64 {
        self.records.last().map(|r| r.normalized_error).unwrap_or(f64::NAN)
    }

    /// First iteration whose normalized error is at most `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.normalized_error <= tol).map(|r| r.t)
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.records
            .iter()
            .map(|r| TraceRow {
                iter: r.t,
                cost: r.cost,
                normalized_error: r.normalized_error,
                grad_k_norm: r.grad_k_norm,
                grad_sigma_norm: r.grad_sigma_norm,
                sigma_min_sigma: r.sigma_min_sigma,
                step_ratio: r.step_ratio,
                superlinear_ratio: r.superlinear_ratio,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// One CSV row of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub cost: f64,
    pub normalized_error: f64,
    pub grad_k_norm: f64,
    pub grad_sigma_norm: f64,
    pub sigma_min_sigma: f64,
    pub step_ratio: f64,
    pub superlinear_ratio: f64,
}

impl TraceRow {
    fn values(&self) -> [f64; 7] {
        [
            self.cost,
            self.normalized_error,
            self.grad_k_norm,
            self.grad_sigma_norm,
            self.sigma_min_sigma,
            self.step_ratio,
            self.superlinear_ratio,
        ]
    }

    /// Equality that treats NaN as equal to NaN.
    pub fn same_as(&self, other: &TraceRow) -> bool {
        self.iter == other.iter
            && self
                .values()
                .iter()
                .zip(other.values().iter())
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

/// 17 significant digits: enough for every f64 to survive a round trip.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let mut rec = vec![row.iter.to_string()];
        rec.extend(row.values().iter().map(|v| format_float(*v)));
        w.write_record(&rec)?;
    }
    w.flush()
        .map_err(|e| crate::error::Error::Serialization(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RawRow {
    iter: usize,
    cost: f64,
    normalized_error: f64,
    grad_k_norm: f64,
    grad_sigma_norm: f64,
    sigma_min_sigma: f64,
    step_ratio: f64,
    superlinear_ratio: f64,
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(crate::error::Error::Serialization(format!(
            "unexpected trace header {header:?}"
        )));
    }
    rdr.deserialize::<RawRow>()
        .map(|r| {
            let r = r?;
            Ok(TraceRow {
                iter: r.iter,
                cost: r.cost,
                normalized_error: r.normalized_error,
                grad_k_norm: r.grad_k_norm,
                grad_sigma_norm: r.grad_sigma_norm,
                sigma_min_sigma: r.sigma_min_sigma,
                step_ratio: r.step_ratio,
                superlinear_ratio: r.superlinear_ratio,
            })
        })
        .collect()
}
