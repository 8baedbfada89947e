//! CSV/JSON writers and the run manifest stored next to every output file.
//!
//! Floats in CSV are written with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fringes::FringeMetrics;
use crate::model::{ExperimentConfig, PathAmplitudes};
use crate::montecarlo::SampleRecord;
use crate::optics::{Conditioning, IntensityPattern, Mode};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_pattern_csv(path: &Path, pattern: &IntensityPattern) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "intensity"])?;
    for (x, v) in pattern.xs.iter().zip(&pattern.values) {
        w.write_record([fmt_f64(*x), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back `(xs, values)` from a pattern CSV.
pub fn read_pattern_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for row in r.deserialize() {
        let (x, v): (f64, f64) = row?;
        xs.push(x);
        vs.push(v);
    }
    Ok((xs, vs))
}

pub fn write_records_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["trial", "outcome", "x"])?;
    for r in records {
        w.write_record([r.trial.to_string(), r.outcome.to_string(), fmt_f64(r.x)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(to_json(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// `<path>.<suffix>`, e.g. `pattern.csv.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Metadata that accompanies a pattern CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSidecar {
    pub mode: Mode,
    pub conditioning: Conditioning,
    pub points: usize,
    pub norm_estimate: f64,
    pub fringes: FringeMetrics,
}

impl PatternSidecar {
    pub fn new(pattern: &IntensityPattern, fringes: FringeMetrics) -> Self {
        PatternSidecar {
            mode: pattern.mode,
            conditioning: pattern.conditioning,
            points: pattern.xs.len(),
            norm_estimate: pattern.norm_estimate,
            fringes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: ExperimentConfig,
    pub amplitudes: Option<PathAmplitudes>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write_next_to(&self, output: &Path) -> Result<PathBuf> {
        let path = sibling(output, "manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(250.0), "2.5000000000000000e2");
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -7.25e12, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn sibling_appends_suffix() {
        assert_eq!(sibling(Path::new("out/p.csv"), "json"), PathBuf::from("out/p.csv.json"));
    }
}
