//! PK observations, log-transform and pooled two-sample summaries.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Arm {
    Test,
    Reference,
}

impl Arm {
    /// Parses `T`/`R` (case-insensitive, surrounding whitespace ignored).
    pub fn parse(label: &str) -> Option<Arm> {
        match label.trim() {
            s if s.eq_ignore_ascii_case("t") => Some(Arm::Test),
            s if s.eq_ignore_ascii_case("r") => Some(Arm::Reference),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PkRecord {
    pub subject_id: String,
    pub arm: Arm,
    /// Positive value in original PK units (AUC, Cmax, ...).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PkDataset {
    pub records: Vec<PkRecord>,
}

impl PkDataset {
    pub fn new(records: Vec<PkRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !(r.value > 0.0) || !r.value.is_finite() {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("value must be a positive finite number (got {})", r.value),
                });
            }
        }
        Ok(PkDataset { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self, arm: Arm) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter(move |r| r.arm == arm).map(|r| r.value)
    }

    pub fn count(&self, arm: Arm) -> usize {
        self.records.iter().filter(|r| r.arm == arm).count()
    }
}

/// Reads a `subject_id,arm,value` CSV.
///
/// Error rows are 1-based data rows; header problems are reported at row 0.
pub fn parse_csv<R: Read>(reader: R) -> Result<PkDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?
        .clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse { row: 0, message: format!("missing column `{name}`") })
    };
    let id_col = column("subject_id")?;
    let arm_col = column("arm")?;
    let value_col = column("value")?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Parse { row: row_no, message: e.to_string() })?;
        let field = |col: usize, name: &str| -> Result<&str> {
            row.get(col)
                .ok_or_else(|| Error::Parse { row: row_no, message: format!("missing column `{name}`") })
        };
        let subject_id = field(id_col, "subject_id")?.to_string();
        let arm_label = field(arm_col, "arm")?;
        let arm = Arm::parse(arm_label).ok_or_else(|| Error::Parse {
            row: row_no,
            message: format!("unknown arm label `{arm_label}` (expected T or R)"),
        })?;
        let raw = field(value_col, "value")?;
        let value: f64 = raw.parse().map_err(|_| Error::Parse {
            row: row_no,
            message: format!("value `{raw}` is not a decimal number"),
        })?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Parse {
                row: row_no,
                message: format!("value must be strictly positive (got {raw})"),
            });
        }
        records.push(PkRecord { subject_id, arm, value });
    }
    let dataset = PkDataset { records };
    for arm in [Arm::Test, Arm::Reference] {
        if dataset.count(arm) == 0 {
            return Err(Error::Parse {
                row: dataset.len(),
                message: format!("empty arm: no {arm:?} records"),
            });
        }
    }
    Ok(dataset)
}

pub fn parse_csv_path(path: impl AsRef<Path>) -> Result<PkDataset> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_csv(std::io::BufReader::new(file))
}

/// exp of the mean of the logs.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("geometric mean of an empty list"));
    }
    let mut sum = 0.0;
    for &v in values {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("geometric mean requires positive values (got {v})")));
        }
        sum += v.ln();
    }
    Ok((sum / values.len() as f64).exp())
}

/// E[GM] for n iid lognormal(μ, σ²) draws: exp(μ + σ²/(2n)).
pub fn gm_expectation(mu: f64, sigma: f64, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("gm_expectation requires n >= 1"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::domain(format!(
            "gm_expectation requires finite mu and sigma >= 0 (got mu={mu}, sigma={sigma})"
        )));
    }
    Ok((mu + sigma * sigma / (2.0 * n as f64)).exp())
}

/// Log-scale two-sample summary under the pooled (equal variance) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSummary {
    pub n_t: usize,
    pub n_r: usize,
    pub xbar_t: f64,
    pub xbar_r: f64,
    pub s_t: f64,
    pub s_r: f64,
    pub s_p: f64,
    pub se_diff: f64,
    pub df: f64,
}

impl GroupSummary {
    /// Builds a summary from per-arm sizes, means and sample SDs.
    pub fn from_moments(
        n_t: usize,
        n_r: usize,
        xbar_t: f64,
        xbar_r: f64,
        s_t: f64,
        s_r: f64,
    ) -> Result<Self> {
        if n_t < 2 || n_r < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 observations per arm (T: {n_t}, R: {n_r})"
            )));
        }
        if !(s_t >= 0.0 && s_r >= 0.0) {
            return Err(Error::domain("standard deviations must be nonnegative"));
        }
        let df = (n_t + n_r - 2) as f64;
        let pooled_var =
            ((n_t - 1) as f64 * s_t * s_t + (n_r - 1) as f64 * s_r * s_r) / df;
        let s_p = pooled_var.sqrt();
        let se_scale = (1.0 / n_t as f64 + 1.0 / n_r as f64).sqrt();
        Ok(GroupSummary {
            n_t,
            n_r,
            xbar_t,
            xbar_r,
            s_t,
            s_r,
            s_p,
            se_diff: s_p * se_scale,
            df,
        })
    }

    /// Builds a summary from a desired mean difference and standard error,
    /// with xbar_r = 0 and equal arm SDs.
    pub fn from_difference(mean_diff: f64, se_diff: f64, n_t: usize, n_r: usize) -> Result<Self> {
        let se_scale = (1.0 / n_t as f64 + 1.0 / n_r as f64).sqrt();
        let s = se_diff / se_scale;
        let mut summary = Self::from_moments(n_t, n_r, mean_diff, 0.0, s, s)?;
        summary.se_diff = se_diff;
        summary.s_p = s;
        Ok(summary)
    }

    /// Summary of already log-transformed samples.
    pub fn from_log_samples(test: &[f64], reference: &[f64]) -> Result<Self> {
        let (m_t, s_t) = mean_sd(test);
        let (m_r, s_r) = mean_sd(reference);
        Self::from_moments(test.len(), reference.len(), m_t, m_r, s_t, s_r)
    }

    /// x̄_T − x̄_R on the log scale.
    pub fn mean_diff(&self) -> f64 {
        self.xbar_t - self.xbar_r
    }

    /// Point estimate of the geometric mean ratio T/R.
    pub fn gmr(&self) -> f64 {
        self.mean_diff().exp()
    }
}

// two-pass mean and sample SD
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Log-transforms each arm and pools.
///
/// Per-arm values are sorted before accumulation so the result does not
/// depend on record order.
pub fn summarize(dataset: &PkDataset) -> Result<GroupSummary> {
    let arm_logs = |arm: Arm| -> Vec<f64> {
        let mut logs: Vec<f64> = dataset.values(arm).map(f64::ln).collect();
        logs.sort_by(f64::total_cmp);
        logs
    };
    let test = arm_logs(Arm::Test);
    let reference = arm_logs(Arm::Reference);
    if test.len() < 2 || reference.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records per arm (T: {}, R: {})",
            test.len(),
            reference.len()
        )));
    }
    GroupSummary::from_log_samples(&test, &reference)
}
