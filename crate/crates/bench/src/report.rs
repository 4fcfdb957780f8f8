//! Report rows and their CSV/JSON serialization.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::error::Result;

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "estimator",
    "param_name",
    "param_value",
    "metric",
    "value",
    "p5",
    "p50",
    "p95",
    "reps",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    Rmse,
    Bias,
    Variance,
    Mean,
    Analytic,
    Gap,
    TrueValue,
    VarianceGap,
    EmpiricalGap,
    MinGap,
    RankCorrelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub experiment: String,
    pub estimator: String,
    pub param_name: String,
    pub param_value: f64,
    pub metric: Metric,
    pub value: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub reps: u64,
    pub seed: u64,
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| Ok(row?)).collect()
}

pub fn write_json<W: Write>(rows: &[BenchRow], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, rows).map_err(|e| crate::error::BenchError::IoFailure(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `rows` to `path`, or to stdout when `path` is `None`.
pub fn emit_report(rows: &[BenchRow], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let write = |w: &mut dyn Write| match format {
        OutputFormat::Csv => write_csv(rows, w),
        OutputFormat::Json => write_json(rows, w),
    };
    match path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
            write(&mut f)?;
            f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            Ok(())
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> BenchRow {
        BenchRow {
            experiment: "figure1".into(),
            estimator: "BIS".into(),
            param_name: "p".into(),
            param_value: 0.1,
            metric: Metric::Mse,
            value: 0.011_234_567_890_123,
            p5: 1e-20,
            p50: 0.3,
            p95: 12.5,
            reps: 10_000,
            seed: 42,
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut a = Vec::new();
        write_csv(&[row()], &mut a).unwrap();
        let parsed = read_csv(&a[..]).unwrap();
        assert_eq!(parsed, vec![row()]);
        let mut b = Vec::new();
        write_csv(&parsed, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.contains(",mse,0.011234567890123,1e-20,0.3,12.5,10000,42\n"));
    }

    #[test]
    fn json_mirrors_fields() {
        let mut buf = Vec::new();
        write_json(&[row()], &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        for k in CSV_HEADER {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(obj["metric"], "mse");
    }
}
