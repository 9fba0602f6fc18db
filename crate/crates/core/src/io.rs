//! CSV and JSON serialisation of data sets and trajectories.
//!
//! Data sets:
//!
//! * PPCA observations: header `y1,...,yd`, one observation per row.
//! * Count observations: header `y`, one non-negative integer per row.
//!
//! Trajectories: header `step,<parameter labels>,loglik`. For PPCA the
//! labels are `u1,...,ud,lambda`; for an `m`-component Poisson mixture they
//! are `w1,...,wm,mean1,...,meanm`. An empty `loglik` cell means the value
//! was not tracked.
//!
//! Floats are written in their shortest round-trip decimal form, so reading
//! a file back yields bit-identical values.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::estimators::Trajectory;
use crate::model::LatentModel;

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// An observation type that can be stored as one CSV row.
pub trait CsvObservation: Sized {
    /// Column names for observations with `width` coordinates.
    fn header(width: usize) -> Vec<String>;
    fn width(&self) -> usize;
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &csv::StringRecord, row: usize) -> Result<Self>;
}

impl CsvObservation for Vec<f64> {
    fn header(width: usize) -> Vec<String> {
        (1..=width).map(|i| format!("y{i}")).collect()
    }

    fn width(&self) -> usize {
        self.len()
    }

    fn to_fields(&self) -> Vec<String> {
        self.iter().map(|&x| format_f64(x)).collect()
    }

    fn from_fields(fields: &csv::StringRecord, row: usize) -> Result<Self> {
        fields
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Data(format!("row {row}, column {}: {e} ({f:?})", j + 1)))
            })
            .collect()
    }
}

impl CsvObservation for u64 {
    fn header(_width: usize) -> Vec<String> {
        vec!["y".into()]
    }

    fn width(&self) -> usize {
        1
    }

    fn to_fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }

    fn from_fields(fields: &csv::StringRecord, row: usize) -> Result<Self> {
        if fields.len() != 1 {
            return Err(Error::Data(format!(
                "row {row}: expected one count, found {} fields",
                fields.len()
            )));
        }
        let f = fields[0].trim();
        f.parse::<u64>()
            .map_err(|e| Error::Data(format!("row {row}: {e} ({f:?}); counts must be non-negative integers")))
    }
}

/// Write observations with `width` coordinates each (the width is needed
/// for the header when `data` is empty).
pub fn write_dataset<T: CsvObservation, W: Write>(writer: W, data: &[T], width: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(T::header(width))?;
    for (i, y) in data.iter().enumerate() {
        if y.width() != width {
            return Err(Error::Data(format!(
                "observation {i} has {} coordinates, expected {width}",
                y.width()
            )));
        }
        w.write_record(y.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a data set written by [`write_dataset`]. Returns the observations
/// and the number of columns in the header.
pub fn read_dataset<T: CsvObservation, R: Read>(reader: R) -> Result<(Vec<T>, usize)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let width = r.headers()?.len();
    if width == 0 {
        return Err(Error::Data("data set has an empty header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("row {}: {e}", i + 1)))?;
        out.push(T::from_fields(&rec, i + 1)?);
    }
    Ok((out, width))
}

pub fn write_dataset_file<T: CsvObservation>(path: &Path, data: &[T], width: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| io_context(e, path))?;
    write_dataset(file, data, width)
}

pub fn read_dataset_file<T: CsvObservation>(path: &Path) -> Result<(Vec<T>, usize)> {
    let file = File::open(path).map_err(|e| io_context(e, path))?;
    read_dataset(file).map_err(|e| e.context(path.display()))
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Write a trajectory as CSV, one row per recorded step.
pub fn write_trajectory_csv<M: LatentModel, W: Write>(
    writer: W,
    model: &M,
    trajectory: &Trajectory<M::Param, M::Stat>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["step".to_string()];
    header.extend(model.param_labels());
    header.push("loglik".into());
    w.write_record(&header)?;
    for r in &trajectory.records {
        let mut row = vec![r.step.to_string()];
        row.extend(model.param_coords(&r.theta).into_iter().map(format_f64));
        row.push(r.loglik.map(format_f64).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A parameter as a `{label: value}` JSON object.
pub fn param_json<M: LatentModel>(model: &M, theta: &M::Param) -> Value {
    let map: Map<String, Value> = model
        .param_labels()
        .into_iter()
        .zip(model.param_coords(theta))
        .map(|(k, v)| (k, json!(v)))
        .collect();
    Value::Object(map)
}

#[derive(Serialize)]
struct JsonRecord {
    step: u64,
    theta: Value,
    loglik: Option<f64>,
}

/// A trajectory as JSON: the recorded steps plus the final and averaged
/// parameters, per-tour log-likelihoods and freeze/projection events.
pub fn trajectory_json<M: LatentModel>(model: &M, trajectory: &Trajectory<M::Param, M::Stat>) -> Value {
    let records: Vec<JsonRecord> = trajectory
        .records
        .iter()
        .map(|r| JsonRecord {
            step: r.step,
            theta: param_json(model, &r.theta),
            loglik: r.loglik,
        })
        .collect();
    json!({
        "records": records,
        "final_theta": param_json(model, &trajectory.final_theta),
        "averaged_theta": trajectory.averaged_theta.as_ref().map(|t| param_json(model, t)),
        "tour_logliks": trajectory.tour_logliks,
        "frozen_steps": trajectory.frozen_steps,
        "projected_steps": trajectory.projected_steps,
        "last_step": trajectory.last_step,
    })
}

/// Pretty-printed JSON file with a trailing newline.
pub fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut file = File::create(path).map_err(|e| io_context(e, path))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            1e20,
            123456.789,
            0.0,
            -0.0,
            5e-6,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_f64(1.0), "1");
        assert_eq!(format_f64(0.25), "0.25");
    }

    #[test]
    fn vector_dataset_round_trip() {
        let data = vec![vec![0.1, -2.0, 1.0 / 7.0], vec![3e-9, 4.0, 5.5]];
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data, 3).unwrap();
        assert!(std::str::from_utf8(&buf).unwrap().starts_with("y1,y2,y3\n"));
        let (back, width): (Vec<Vec<f64>>, _) = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(width, 3);
        assert_eq!(back, data);
    }

    #[test]
    fn empty_dataset_keeps_header() {
        let mut buf = Vec::new();
        write_dataset::<u64, _>(&mut buf, &[], 1).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "y\n");
        let (back, width): (Vec<u64>, _) = read_dataset(buf.as_slice()).unwrap();
        assert!(back.is_empty());
        assert_eq!(width, 1);
    }

    #[test]
    fn bad_counts_are_data_errors() {
        for text in ["y\n1\n-2\n", "y\n1.5\n", "y\nabc\n"] {
            let err = read_dataset::<u64, _>(text.as_bytes()).unwrap_err();
            assert!(matches!(err, Error::Data(_)), "{err}");
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = read_dataset::<Vec<f64>, _>("y1,y2\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }
}
