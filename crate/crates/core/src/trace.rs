//! Uniformly sampled time series and their `time_s,value` CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

/// Spacing tolerance applied when loading a trace from CSV.
pub const TIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// N
    Force,
    /// Pa
    Stress,
    Strain,
    /// Ω
    Resistance,
    /// S
    Conductance,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Force => "N",
            Unit::Stress => "Pa",
            Unit::Strain => "-",
            Unit::Resistance => "ohm",
            Unit::Conductance => "S",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    unit: Unit,
}

impl Trace {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(
                "dt",
                format!("sample period must be positive, got {dt}"),
            ));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "start time must be finite"));
        }
        if values.is_empty() {
            return Err(Error::invalid("values", "trace has no samples"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid("values", format!("sample {i} is not finite ({v})")));
        }
        match unit {
            Unit::Strain => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..1.0).contains(*v)) {
                    return Err(Error::invalid(
                        "values",
                        format!("strain sample {i} = {v} outside [0, 1)"),
                    ));
                }
            }
            Unit::Resistance | Unit::Conductance => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(Error::invalid(
                        "values",
                        format!("{} sample {i} = {v} is not positive", unit.symbol()),
                    ));
                }
            }
            Unit::Force | Unit::Stress => {}
        }
        Ok(Self { t0, dt, values, unit })
    }

    /// Samples `f` at `t0 + i*dt` for `i in 0..n`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        Self::new(t0, dt, values, unit)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// Builds a trace on the same time base with new values and unit.
    pub fn with_values(&self, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::TimeBaseMismatch(format!(
                "expected {} samples, got {}",
                self.len(),
                values.len()
            )));
        }
        Self::new(self.t0, self.dt, values, unit)
    }

    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect(), unit)
    }

    /// Linear interpolation at time `t`, held constant outside the trace.
    pub fn sample_at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        let last = self.len() - 1;
        if !(x > 0.0) {
            return self.values[0];
        }
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn same_time_base(&self, other: &Trace) -> bool {
        self.len() == other.len()
            && (self.t0 - other.t0).abs() <= TIME_TOLERANCE
            && (self.dt - other.dt).abs() <= TIME_TOLERANCE
    }

    pub fn check_time_base(&self, other: &Trace) -> Result<()> {
        if self.same_time_base(other) {
            Ok(())
        } else {
            Err(Error::TimeBaseMismatch(format!(
                "(t0={}, dt={}, n={}) vs (t0={}, dt={}, n={})",
                self.t0,
                self.dt,
                self.len(),
                other.t0,
                other.dt,
                other.len()
            )))
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.len() * 24 + 16);
        out.push_str("time_s,value\n");
        for (t, v) in self.times().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, self.to_csv_string().as_bytes())
    }

    /// Parses `time_s,value` CSV text. At least two rows are needed to infer
    /// the sample period; every row must sit within [`TIME_TOLERANCE`] of the
    /// uniform grid.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, unit: Unit, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|source| Error::Csv {
            path: origin.to_path_buf(),
            source,
        })?;
        if headers.len() != 2 || &headers[0] != "time_s" || &headers[1] != "value" {
            return Err(Error::TraceFormat(format!(
                "{}: expected header `time_s,value`, found `{}`",
                origin.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|source| Error::Csv {
                path: origin.to_path_buf(),
                source,
            })?;
            let parse = |idx: usize| -> Result<f64> {
                rec.get(idx)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::TraceFormat(format!("{}: row {} is not numeric", origin.display(), row + 1)))
            };
            times.push(parse(0)?);
            values.push(parse(1)?);
        }
        if times.len() < 2 {
            return Err(Error::TraceFormat(format!(
                "{}: need at least two samples to infer the sample period",
                origin.display()
            )));
        }
        let t0 = times[0];
        let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
        for (i, &t) in times.iter().enumerate() {
            let expected = t0 + i as f64 * dt;
            if (t - expected).abs() > TIME_TOLERANCE {
                return Err(Error::TraceFormat(format!(
                    "{}: row {} at t={t} breaks uniform spacing (expected {expected})",
                    origin.display(),
                    i + 1
                )));
            }
        }
        Self::new(t0, dt, values, unit)
    }

    pub fn read_csv(path: &Path, unit: Unit) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, unit, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_samples() {
        assert!(Trace::new(0.0, 0.0, vec![1.0], Unit::Force).is_err());
        assert!(Trace::new(0.0, 0.1, vec![], Unit::Force).is_err());
        assert!(Trace::new(0.0, 0.1, vec![1.0], Unit::Strain).is_err());
        assert!(Trace::new(0.0, 0.1, vec![-1.0], Unit::Resistance).is_err());
        assert!(Trace::new(0.0, 0.1, vec![-1.0], Unit::Stress).is_ok());
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let tr = Trace::from_fn(1.5, 1.0 / 6.0, 50, Unit::Resistance, |t| 100.0 + t.sin()).unwrap();
        let text = tr.to_csv_string();
        let back = Trace::from_csv_reader(text.as_bytes(), Unit::Resistance, Path::new("mem")).unwrap();
        assert_eq!(back.values(), tr.values());
        assert!(back.same_time_base(&tr));
    }

    #[test]
    fn csv_rejects_non_uniform_rows() {
        let text = "time_s,value\n0,1\n0.1,1\n0.25,1\n";
        let err = Trace::from_csv_reader(text.as_bytes(), Unit::Force, Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::TraceFormat(_)));
    }

    #[test]
    fn csv_rejects_bad_header() {
        let text = "t,v\n0,1\n1,1\n";
        assert!(Trace::from_csv_reader(text.as_bytes(), Unit::Force, Path::new("mem")).is_err());
    }
}
