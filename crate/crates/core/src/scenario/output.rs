use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Writes scenario artifacts into one directory and remembers what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<Value>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Entries for the manifest's `outputs` list.
    pub fn files(&self) -> &[Value] {
        &self.files
    }

    /// CSV with a header row; every value is written with 17 significant
    /// digits so that doubles round-trip.
    pub fn write_csv<I>(&mut self, name: &str, headers: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.root.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "{}", headers.join(","))?;
        let mut count = 0usize;
        for row in rows {
            if row.len() != headers.len() {
                return Err(Error::DimensionMismatch {
                    expected: headers.len(),
                    got: row.len(),
                });
            }
            let line: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
            count += 1;
        }
        w.flush()?;
        self.files.push(json!({ "file": name, "kind": "csv", "rows": count }));
        Ok(path)
    }

    /// Mono 32-bit float WAV, scaled so the largest sample is ±1.
    /// Returns the gain that was applied.
    pub fn write_wav(&mut self, name: &str, signal: &[f64], sample_rate: f64) -> Result<f64> {
        let rate = sample_rate.round();
        if !(rate >= 1.0 && rate <= u32::MAX as f64 && (rate - sample_rate).abs() < 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "WAV needs an integral sample rate, got {sample_rate}"
            )));
        }
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: rate as u32,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let peak = signal.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let gain = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        let path = self.root.join(name);
        let mut w = hound::WavWriter::create(&path, spec).map_err(wav_error)?;
        for x in signal {
            w.write_sample((gain * x) as f32).map_err(wav_error)?;
        }
        w.finalize().map_err(wav_error)?;
        self.files.push(json!({
            "file": name,
            "kind": "wav",
            "sample_rate": rate,
            "samples": signal.len(),
            "gain": gain,
        }));
        Ok(gain)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, text)?;
        self.files.push(json!({ "file": name, "kind": "text" }));
        Ok(path)
    }
}

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(other.to_string())),
    }
}

/// 17 significant digits.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Newton iteration counts over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NewtonStats {
    pub steps: usize,
    pub total: usize,
    pub mean: f64,
    pub max: usize,
}

impl NewtonStats {
    pub fn from_counts(counts: &[usize]) -> Self {
        let total: usize = counts.iter().sum();
        Self {
            steps: counts.len(),
            total,
            mean: if counts.is_empty() {
                0.0
            } else {
                total as f64 / counts.len() as f64
            },
            max: counts.iter().copied().max().unwrap_or(0),
        }
    }
}

/// Every `stride`-th index of `0..len`, always including the last one.
pub fn strided(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    let stride = stride.max(1);
    (0..len)
        .filter(move |i| i % stride == 0 || *i + 1 == len)
}
