//! Synthetic datasets and CSV files.
//!
//! CSV layout: a header `f0,...,f{d-1},label`, then one example per row.
//! Labels are `-1`/`1` for binary data or `0..K-1` for class indices.
//! Floats are written in their shortest round-trip decimal form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::math::tensor::{dot, norm2};
use crate::math::{RngStream, Tensor};
use crate::models::{Label, LabeledExample};

const DATA_STREAM: u64 = 0xda7a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// `y ~ Unif{-1, 1}`, `x | y ~ N(theta* y, noise^2 I)`.
    GaussianMixtureHalfspace,
    TwoMoons,
    /// Bright square (`+1`) vs bright cross (`-1`) on a noisy square grid.
    GridImages,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    #[serde(default)]
    pub n_train: usize,
    #[serde(default)]
    pub n_test: usize,
    #[serde(default)]
    pub d: usize,
    /// Defaults to `e_1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Training file for the `csv` kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Optional test file for the `csv` kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
}

fn default_noise() -> f64 {
    1.0
}

impl DatasetSpec {
    pub fn halfspace(n_train: usize, n_test: usize, d: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            kind: DatasetKind::GaussianMixtureHalfspace,
            n_train,
            n_test,
            d,
            theta_star: None,
            noise_sigma,
            seed,
            path: None,
            test_path: None,
        }
    }

    /// `theta*`, explicit or the default `e_1`.
    pub fn theta_star(&self) -> Vec<f64> {
        self.theta_star.clone().unwrap_or_else(|| {
            let mut t = vec![0.0; self.d];
            if let Some(first) = t.first_mut() {
                *first = 1.0;
            }
            t
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(m));
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            ));
        }
        match self.kind {
            DatasetKind::Csv => {
                if self.path.is_none() {
                    return bad("csv datasets need a path".into());
                }
            }
            _ if self.d == 0 => return bad("dimension d must be positive".into()),
            DatasetKind::GaussianMixtureHalfspace => {
                let t = self.theta_star();
                if t.len() != self.d {
                    return bad(format!(
                        "theta_star has length {}, expected {}",
                        t.len(),
                        self.d
                    ));
                }
                if t.iter().all(|&v| v == 0.0) || t.iter().any(|v| !v.is_finite()) {
                    return bad("theta_star must be finite and nonzero".into());
                }
            }
            DatasetKind::TwoMoons if self.d != 2 => {
                return bad("two_moons is two-dimensional".into())
            }
            DatasetKind::GridImages => {
                let side = (self.d as f64).sqrt().round() as usize;
                if side * side != self.d || side < 3 {
                    return bad(format!(
                        "grid_images needs d = h*h with h >= 3, got {}",
                        self.d
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A list of examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>) -> Self {
        Self { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.examples.first().map_or(0, |e| e.x.len())
    }

    /// Number of classes for class-labelled data, `None` for binary data.
    pub fn num_classes(&self) -> Option<usize> {
        self.examples
            .iter()
            .filter_map(|e| match e.y {
                Label::Class(k) => Some(k + 1),
                Label::Binary(_) => None,
            })
            .max()
    }

    /// SHA-256 over shapes, feature bits and labels, as 16 hex digits.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.examples {
            h.update((e.x.len() as u64).to_le_bytes());
            for v in e.x.data() {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(e.y.to_field().as_bytes());
        }
        h.finalize()[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Generate (train, test) from the spec; train and test use disjoint streams.
pub fn generate(spec: &DatasetSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    if spec.kind == DatasetKind::Csv {
        let train = load_csv(spec.path.as_deref().expect("validated"))?;
        let test = match &spec.test_path {
            Some(p) => load_csv(p)?,
            None => Dataset::default(),
        };
        if spec.d != 0 && train.dim() != spec.d {
            return Err(Error::DimensionMismatch {
                path: spec.path.clone().expect("validated"),
                line: 1,
                expected: spec.d,
                found: train.dim(),
            });
        }
        return Ok((train, test));
    }
    let split = |part: u64, n: usize| {
        let mut rng = RngStream::derived(spec.seed, &[DATA_STREAM, part]);
        Dataset::new((0..n).map(|_| draw_example(spec, &mut rng)).collect())
    };
    Ok((split(0, spec.n_train), split(1, spec.n_test)))
}

fn draw_example(spec: &DatasetSpec, rng: &mut RngStream) -> LabeledExample {
    let y = rng.sign();
    let d = spec.d;
    let x = match spec.kind {
        DatasetKind::GaussianMixtureHalfspace => spec
            .theta_star()
            .iter()
            .map(|t| t * y + spec.noise_sigma * rng.standard_normal())
            .collect(),
        DatasetKind::TwoMoons => {
            let t = std::f64::consts::PI * rng.uniform();
            let (a, b) = if y > 0.0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            vec![
                a + spec.noise_sigma * rng.standard_normal(),
                b + spec.noise_sigma * rng.standard_normal(),
            ]
        }
        DatasetKind::GridImages => {
            let h = (d as f64).sqrt().round() as usize;
            let mut img = vec![0.0; d];
            let side = (h / 2).max(2);
            let top = rng.below(h - side + 1);
            let left = rng.below(h - side + 1);
            if y > 0.0 {
                for r in top..top + side {
                    img[r * h + left..r * h + left + side].fill(1.0);
                }
            } else {
                let (cr, cc) = (top + side / 2, left + side / 2);
                for r in top..top + side {
                    img[r * h + cc] = 1.0;
                }
                img[cr * h + left..cr * h + left + side].fill(1.0);
            }
            for v in &mut img {
                *v += spec.noise_sigma * rng.standard_normal();
            }
            img
        }
        DatasetKind::Csv => unreachable!("csv data is loaded, not drawn"),
    };
    LabeledExample::new(x, Label::Binary(y))
}

/// `(1/n) sum y_i x_i`, the Bayes direction for an isotropic mixture.
pub fn mean_difference_direction(data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = vec![0.0; data.dim()];
    for e in &data.examples {
        let y = match e.y {
            Label::Binary(v) => v,
            Label::Class(k) => {
                return Err(Error::BadLabel {
                    label: k.to_string(),
                    reason: "binary labels are required",
                })
            }
        };
        for (a, x) in acc.iter_mut().zip(e.x.data()) {
            *a += y * x;
        }
    }
    let n = data.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Angle between two nonzero vectors, in degrees.
pub fn angle_degrees(a: &[f64], b: &[f64]) -> f64 {
    let c = (dot(a, b) / (norm2(a) * norm2(b))).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

pub fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let d = data.dim();
    let mut out = String::new();
    let header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    out.push_str(&header.join(","));
    out.push_str(if d > 0 { ",label\n" } else { "label\n" });
    for e in &data.examples {
        for v in e.x.data() {
            let _ = write!(out, "{v:?},");
        }
        out.push_str(&e.y.to_field());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = cols.len().saturating_sub(1);
    let expected: Vec<String> = (0..d)
        .map(|j| format!("f{j}"))
        .chain(["label".to_string()])
        .collect();
    if cols != expected {
        return Err(parse_err(
            1,
            format!("header must be `{}`", expected.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != d + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", d + 1, fields.len()),
            ));
        }
        let x = fields[..d]
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(line, format!("feature f{j} is not a finite number: `{f}`"))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, x, fields[d].to_string()));
    }

    let binary = rows.iter().any(|(_, _, l)| l == "-1") || rows.iter().all(|(_, _, l)| l == "1");
    let examples = rows
        .into_iter()
        .map(|(line, x, label)| {
            let y = if binary {
                match label.as_str() {
                    "1" => Some(Label::Binary(1.0)),
                    "-1" => Some(Label::Binary(-1.0)),
                    _ => None,
                }
            } else {
                label.parse::<usize>().ok().map(Label::Class)
            };
            y.map(|y| LabeledExample {
                x: Tensor::vector(x),
                y,
            })
            .ok_or_else(|| Error::UnknownLabel {
                path: path.to_path_buf(),
                line,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(examples))
}

/// Sidecar describing a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: DatasetKind,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub train_hash: String,
    pub test_hash: String,
}

impl DatasetMeta {
    pub fn describe(spec: &DatasetSpec, train: &Dataset, test: &Dataset) -> Self {
        Self {
            kind: spec.kind,
            seed: spec.seed,
            n_train: train.len(),
            n_test: test.len(),
            d: train.dim(),
            train_hash: train.content_hash(),
            test_hash: test.content_hash(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
