//! Labelled feature datasets: a synthetic Gaussian-blob generator and
//! loaders for external data.
//!
//! External data comes as a data file plus a JSON sidecar at
//! `<data path>.json` holding `{"n_samples", "n_features", "n_classes"}`.
//! The data file is either CSV (`.csv`, one `label,f_1,..,f_n` row per
//! sample, no header) or binary: `n_samples` records of a little-endian
//! `u32` label followed by `n_features` little-endian `f32` values.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(
        n_features: usize,
        n_classes: usize,
        features: Vec<f64>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if n_features == 0 || n_classes == 0 {
            return Err(Error::param(
                "dataset",
                "need at least one feature and one class",
            ));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::param(
                "dataset",
                format!(
                    "{} feature values for {} samples of width {n_features}",
                    features.len(),
                    labels.len()
                ),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= n_classes) {
            return Err(Error::param(
                "dataset",
                format!("label {bad} out of range for {n_classes} classes"),
            ));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("dataset", "non-finite feature value"));
        }
        Ok(Self {
            n_features,
            n_classes,
            features,
            labels,
        })
    }

    /// Balanced Gaussian blobs: class centres are drawn from
    /// `N(0, separation^2)` per coordinate and samples add unit noise.
    pub fn synthetic_blobs(
        n_samples: usize,
        n_features: usize,
        n_classes: usize,
        separation: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if n_classes == 0 || n_features == 0 {
            return Err(Error::param(
                "dataset",
                "need at least one feature and one class",
            ));
        }
        let centres: Vec<f64> = (0..n_classes * n_features)
            .map(|_| separation * rng.standard_normal())
            .collect();
        let mut features = Vec::with_capacity(n_samples * n_features);
        let mut labels = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let class = i % n_classes;
            labels.push(class as u32);
            let centre = &centres[class * n_features..(class + 1) * n_features];
            features.extend(centre.iter().map(|c| c + rng.standard_normal()));
        }
        Self::new(n_features, n_classes, features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.features[index * self.n_features..(index + 1) * self.n_features]
    }

    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            n_samples: self.len(),
            n_features: self.n_features,
            n_classes: self.n_classes,
        }
    }

    /// Splits into the first `n` samples and the rest.
    pub fn split_at(self, n: usize) -> Result<(Dataset, Dataset)> {
        if n > self.len() {
            return Err(Error::param(
                "dataset",
                format!("cannot take {n} of {} samples", self.len()),
            ));
        }
        let Dataset {
            n_features,
            n_classes,
            mut features,
            mut labels,
        } = self;
        let tail_features = features.split_off(n * n_features);
        let tail_labels = labels.split_off(n);
        Ok((
            Dataset::new(n_features, n_classes, features, labels)?,
            Dataset::new(n_features, n_classes, tail_features, tail_labels)?,
        ))
    }

    /// Sample indices grouped by label.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l as usize].push(i);
        }
        by_class
    }

    /// Loads a CSV or binary data file and its sidecar.
    pub fn load(path: &Path) -> Result<Self> {
        let meta_path = sidecar_path(path);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text)
            .map_err(|e| Error::config(meta_path.display().to_string(), e.to_string()))?;
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let data = if is_csv {
            Self::read_csv(path, &meta)?
        } else {
            Self::read_binary(path, &meta)?
        };
        if data.len() != meta.n_samples {
            return Err(Error::config(
                path.display().to_string(),
                format!(
                    "sidecar declares {} samples, file holds {}",
                    meta.n_samples,
                    data.len()
                ),
            ));
        }
        Ok(data)
    }

    fn read_csv(path: &Path, meta: &DatasetMeta) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut features = Vec::with_capacity(meta.n_samples * meta.n_features);
        let mut labels = Vec::with_capacity(meta.n_samples);
        for (line_no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| {
                Error::config(format!("{}:{}", path.display(), line_no + 1), reason)
            };
            let mut fields = line.split(',').map(str::trim);
            let label = fields
                .next()
                .unwrap_or_default()
                .parse::<u32>()
                .map_err(|e| bad(format!("label: {e}")))?;
            let before = features.len();
            for f in fields {
                features.push(f.parse::<f64>().map_err(|e| bad(format!("feature: {e}")))?);
            }
            if features.len() - before != meta.n_features {
                return Err(bad(format!("expected {} features", meta.n_features)));
            }
            labels.push(label);
        }
        Self::new(meta.n_features, meta.n_classes, features, labels)
    }

    fn read_binary(path: &Path, meta: &DatasetMeta) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let record = 4 * (1 + meta.n_features);
        if bytes.len() != record * meta.n_samples {
            return Err(Error::config(
                path.display().to_string(),
                format!(
                    "expected {} bytes, found {}",
                    record * meta.n_samples,
                    bytes.len()
                ),
            ));
        }
        let mut features = Vec::with_capacity(meta.n_samples * meta.n_features);
        let mut labels = Vec::with_capacity(meta.n_samples);
        for chunk in bytes.chunks_exact(record) {
            let mut words = chunk.chunks_exact(4).map(|w| [w[0], w[1], w[2], w[3]]);
            labels.push(u32::from_le_bytes(
                words.next().expect("record has a label"),
            ));
            features.extend(words.map(|w| f64::from(f32::from_le_bytes(w))));
        }
        Self::new(meta.n_features, meta.n_classes, features, labels)
    }

    /// Writes the dataset in CSV form plus its sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            write!(out, "{}", self.labels[i]).expect("write to vec");
            for x in self.features(i) {
                write!(out, ",{x}").expect("write to vec");
            }
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
        self.write_sidecar(path)
    }

    /// Writes the binary form (features narrowed to `f32`) plus its sidecar.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(self.len() * 4 * (1 + self.n_features));
        for i in 0..self.len() {
            out.extend_from_slice(&self.labels[i].to_le_bytes());
            for &x in self.features(i) {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
        self.write_sidecar(path)
    }

    fn write_sidecar(&self, path: &Path) -> Result<()> {
        let meta_path = sidecar_path(path);
        let text = serde_json::to_string_pretty(&self.meta()).expect("meta serializes");
        fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Dataset {
        Dataset::synthetic_blobs(40, 3, 4, 3.0, &mut RngStream::new(1, "dataset")).unwrap()
    }

    #[test]
    fn synthetic_is_balanced() {
        let d = blobs();
        assert_eq!(d.len(), 40);
        assert!(d.indices_by_class().iter().all(|c| c.len() == 10));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        let d = blobs();
        d.write_csv(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), d);
    }

    #[test]
    fn binary_round_trip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.bin");
        let d = blobs();
        d.write_binary(&path).unwrap();
        let back = Dataset::load(&path).unwrap();
        assert_eq!(back.labels(), d.labels());
        for i in 0..d.len() {
            for (a, b) in back.features(i).iter().zip(d.features(i)) {
                assert_eq!(*a, f64::from(*b as f32));
            }
        }
    }

    #[test]
    fn binary_layout_is_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.bin");
        Dataset::new(1, 3, vec![1.0], vec![2])
            .unwrap()
            .write_binary(&path)
            .unwrap();
        assert_eq!(fs::read(&path).unwrap(), [2, 0, 0, 0, 0, 0, 0x80, 0x3f]);
    }

    #[test]
    fn sidecar_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        blobs().write_csv(&path).unwrap();
        fs::write(
            sidecar_path(&path),
            r#"{"n_samples": 41, "n_features": 3, "n_classes": 4}"#,
        )
        .unwrap();
        assert!(Dataset::load(&path).is_err());
    }

    #[test]
    fn labels_out_of_range_rejected() {
        assert!(Dataset::new(1, 2, vec![0.0], vec![2]).is_err());
        assert!(Dataset::new(2, 2, vec![0.0], vec![0]).is_err());
    }
}
