//! Artifact emission: hashed run directories, finiteness-checked JSON,
//! and the CSV schemas shared by the subcommands.

use pressure_transport::hj::SpaceTimeField;
use pressure_transport::torus::TorusPoint;
use pressure_transport::transport::DiscreteMeasure;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum IoError {
    Io(std::io::Error),
    Csv(String),
    NonFinite(String),
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IoError::Io(e) => write!(f, "io error: {e}"),
            IoError::Csv(e) => write!(f, "csv error: {e}"),
            IoError::NonFinite(path) => write!(f, "non-finite value in emitted report at {path}"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError::Io(e)
    }
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Csv(e.to_string())
    }
}

/// Content-addressed run directory: <out>/<subcommand>-<hash12> where the
/// hash covers the config text, the subcommand and the effective seed, so
/// differing runs never overwrite each other.
pub fn run_dir(out: &Path, subcommand: &str, config_text: &str, seed: u64) -> PathBuf {
    let mut hasher = Sha256::new();
    hasher.update(subcommand.as_bytes());
    hasher.update([0]);
    hasher.update(config_text.as_bytes());
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    out.join(format!("{subcommand}-{hex}"))
}

/// Serialises a report as pretty JSON after checking every numeric leaf
/// is finite (serde_json would silently turn NaN into null).
pub fn write_json<T: Serialize>(path: &Path, report: &T) -> Result<(), IoError> {
    let value = serde_json::to_value(report).map_err(|e| IoError::Csv(e.to_string()))?;
    check_finite(&value, "$")?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| IoError::Csv(e.to_string()))?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

fn check_finite(value: &serde_json::Value, path: &str) -> Result<(), IoError> {
    match value {
        serde_json::Value::Null => Err(IoError::NonFinite(path.to_string())),
        serde_json::Value::Number(n) => {
            if n.as_f64().map_or(true, |x| x.is_finite()) {
                Ok(())
            } else {
                Err(IoError::NonFinite(path.to_string()))
            }
        }
        serde_json::Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                check_finite(item, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        serde_json::Value::Object(map) => {
            for (key, item) in map {
                check_finite(item, &format!("{path}.{key}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Measures: one row per atom, columns x_0..x_{n-1}, weight (no header).
pub fn read_measure_csv(path: &Path, dim: usize) -> Result<DiscreteMeasure, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut atoms = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != dim + 1 {
            return Err(IoError::Csv(format!(
                "expected {} columns, got {}",
                dim + 1,
                record.len()
            )));
        }
        let coords: Vec<f64> = record
            .iter()
            .take(dim)
            .map(|f| f.trim().parse::<f64>().map_err(|e| IoError::Csv(e.to_string())))
            .collect::<Result<_, _>>()?;
        let weight: f64 = record[dim].trim().parse().map_err(|e: std::num::ParseFloatError| IoError::Csv(e.to_string()))?;
        let point = TorusPoint::wrap(&coords).map_err(|e| IoError::Csv(e.to_string()))?;
        atoms.push((point, weight));
    }
    DiscreteMeasure::new(atoms).map_err(|e| IoError::Csv(e.to_string()))
}

pub fn write_measure_csv(path: &Path, measure: &DiscreteMeasure) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for (p, w) in measure.atoms() {
        let mut row: Vec<String> = p.coords().iter().map(|c| format!("{c:.17e}")).collect();
        row.push(format!("{w:.17e}"));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Field slices: rows (t, flat_index, value).
pub fn write_field_csv(path: &Path, field: &SpaceTimeField) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for slice in &field.slices {
        for (i, v) in slice.values.iter().enumerate() {
            writer.write_record(&[
                format!("{:.17e}", slice.time_tag),
                i.to_string(),
                format!("{v:.17e}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Pair summary: rows (time_index, flat_index, upper, lower, mask).
pub fn write_pair_csv(path: &Path, pair: &pressure_transport::hj::ReversiblePair) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    let slices = pair.upper.slices.len();
    for k in 0..slices {
        let mask = pair.mask_at(k);
        for i in 0..pair.upper.slices[k].values.len() {
            let masked = mask.map_or(false, |m| m[i]);
            writer.write_record(&[
                k.to_string(),
                i.to_string(),
                format!("{:.17e}", pair.upper.slices[k].values[i]),
                format!("{:.17e}", pair.lower.slices[k].values[i]),
                (masked as u8).to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Reads a pair back from the CSV written by `write_pair_csv`.
pub fn read_pair_csv(
    path: &Path,
    grid: &pressure_transport::torus::Grid,
    eps_rev: f64,
) -> Result<pressure_transport::hj::ReversiblePair, IoError> {
    use pressure_transport::hj::{Direction, GridFunction, ReversiblePair, SpaceTimeField};
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let slices = grid.time_steps() + 1;
    let n = grid.node_count();
    let mut upper = vec![vec![0.0; n]; slices];
    let mut lower = vec![vec![0.0; n]; slices];
    let mut mask = vec![vec![false; n]; slices];
    for record in reader.records() {
        let record = record?;
        let k: usize = record[0].parse().map_err(|_| IoError::Csv("bad time index".into()))?;
        let i: usize = record[1].parse().map_err(|_| IoError::Csv("bad node index".into()))?;
        if k >= slices || i >= n {
            return Err(IoError::Csv("index outside the configured grid".into()));
        }
        upper[k][i] = record[2].parse().map_err(|_| IoError::Csv("bad upper value".into()))?;
        lower[k][i] = record[3].parse().map_err(|_| IoError::Csv("bad lower value".into()))?;
        mask[k][i] = &record[4] == "1";
    }
    let build = |values: Vec<Vec<f64>>, direction: Direction| SpaceTimeField {
        grid: grid.clone(),
        direction,
        slices: values
            .into_iter()
            .enumerate()
            .map(|(k, v)| GridFunction { grid: grid.clone(), values: v, time_tag: grid.times()[k] })
            .collect(),
    };
    Ok(ReversiblePair {
        upper: build(upper, Direction::Forward),
        lower: build(lower, Direction::Backward),
        k0_mask: mask[1..slices - 1].to_vec(),
        eps_rev,
    })
}

/// Seed points: one row per seed, columns x_0..x_{n-1}.
pub fn read_points_csv(path: &Path, dim: usize) -> Result<Vec<TorusPoint>, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != dim {
            return Err(IoError::Csv(format!("expected {dim} columns, got {}", record.len())));
        }
        let coords: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| IoError::Csv(e.to_string())))
            .collect::<Result<_, _>>()?;
        points.push(TorusPoint::wrap(&coords).map_err(|e| IoError::Csv(e.to_string()))?);
    }
    Ok(points)
}

/// Orbit measures: rows (orbit_id, t, x_0..x_{n-1}, weight); samples of
/// one orbit must share the weight and cover the common time axis.
pub fn read_orbits_csv(
    path: &Path,
    dim: usize,
) -> Result<pressure_transport::norm::OrbitMeasure, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    use std::collections::BTreeMap;
    let mut orbits: BTreeMap<u64, (f64, Vec<(f64, Vec<f64>)>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != dim + 3 {
            return Err(IoError::Csv(format!("expected {} columns, got {}", dim + 3, record.len())));
        }
        let id: u64 = record[0].trim().parse().map_err(|_| IoError::Csv("bad orbit id".into()))?;
        let t: f64 = record[1].trim().parse().map_err(|_| IoError::Csv("bad time".into()))?;
        let coords: Vec<f64> = (2..2 + dim)
            .map(|c| record[c].trim().parse::<f64>().map_err(|e| IoError::Csv(e.to_string())))
            .collect::<Result<_, _>>()?;
        let w: f64 = record[dim + 2].trim().parse().map_err(|_| IoError::Csv("bad weight".into()))?;
        orbits.entry(id).or_insert((w, Vec::new())).1.push((t, coords));
    }
    if orbits.is_empty() {
        return Err(IoError::Csv("no orbit samples".into()));
    }
    let mut times: Option<Vec<f64>> = None;
    let mut built = Vec::new();
    for (_, (w, mut samples)) in orbits {
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let ts: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
        match &times {
            None => times = Some(ts),
            Some(existing) => {
                if existing.len() != ts.len()
                    || existing.iter().zip(&ts).any(|(a, b)| (a - b).abs() > 1e-12)
                {
                    return Err(IoError::Csv("orbits must share the time axis".into()));
                }
            }
        }
        let positions: Vec<f64> = samples.into_iter().flat_map(|(_, x)| x).collect();
        built.push((w, positions));
    }
    pressure_transport::norm::OrbitMeasure::new(times.unwrap(), dim, built)
        .map_err(|e| IoError::Csv(e.to_string()))
}
