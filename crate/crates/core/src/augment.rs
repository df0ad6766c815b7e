//! Random perturbations `x' ~ P(.|x)`.
//!
//! Draws happen outside any tape: augmented copies are plain inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    /// `x + sigma * z`, `z ~ N(0, I)`.
    Gaussian,
    /// One square patch of the `h x w` grid set to `fill_value`.
    Cutout,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    pub kind: AugmentKind,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_patch_fraction")]
    pub patch_fraction: f64,
    #[serde(default)]
    pub fill_value: f64,
    /// Grid `(h, w)` for cutout; a square grid is assumed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(usize, usize)>,
}

fn default_patch_fraction() -> f64 {
    0.25
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl AugmentationSpec {
    pub fn identity() -> Self {
        Self {
            kind: AugmentKind::Identity,
            sigma: 0.0,
            patch_fraction: default_patch_fraction(),
            fill_value: 0.0,
            grid: None,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self {
            kind: AugmentKind::Gaussian,
            sigma,
            ..Self::identity()
        }
    }

    pub fn cutout(patch_fraction: f64, fill_value: f64, grid: Option<(usize, usize)>) -> Self {
        Self {
            kind: AugmentKind::Cutout,
            patch_fraction,
            fill_value,
            grid,
            ..Self::identity()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AugmentKind::Gaussian if !(self.sigma > 0.0 && self.sigma.is_finite()) => {
                Err(Error::BadSpec(format!(
                    "gaussian sigma must be positive, got {}",
                    self.sigma
                )))
            }
            AugmentKind::Cutout if !(self.patch_fraction > 0.0 && self.patch_fraction <= 1.0) => {
                Err(Error::BadSpec(format!(
                    "patch_fraction must lie in (0, 1], got {}",
                    self.patch_fraction
                )))
            }
            AugmentKind::Cutout if !self.fill_value.is_finite() => {
                Err(Error::BadSpec("fill_value must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Grid shape used for an input of length `len`.
    pub fn grid_for(&self, len: usize) -> Result<(usize, usize)> {
        match self.grid {
            Some((h, w)) if h * w == len => Ok((h, w)),
            Some((h, w)) => Err(Error::BadSpec(format!(
                "grid {h}x{w} does not cover an input of length {len}"
            ))),
            None => {
                let side = (len as f64).sqrt().round() as usize;
                if side * side == len {
                    Ok((side, side))
                } else {
                    Err(Error::BadSpec(format!(
                        "input of length {len} is not a square grid"
                    )))
                }
            }
        }
    }

    /// Side of the cutout patch on an `h x w` grid.
    pub fn patch_side(&self, h: usize, w: usize) -> usize {
        let side = (self.patch_fraction.sqrt() * h.min(w) as f64).round() as usize;
        side.clamp(1, h.min(w))
    }

    /// Write one perturbed copy of `x` into `out`.
    pub fn perturb_into(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(x);
        match self.kind {
            AugmentKind::Identity => {}
            AugmentKind::Gaussian => {
                for o in out.iter_mut() {
                    *o += self.sigma * rng.standard_normal();
                }
            }
            AugmentKind::Cutout => {
                let (h, w) = self.grid_for(x.len())?;
                let side = self.patch_side(h, w);
                let top = rng.below(h - side + 1);
                let left = rng.below(w - side + 1);
                for r in top..top + side {
                    out[r * w + left..r * w + left + side].fill(self.fill_value);
                }
            }
        }
        Ok(())
    }
}

/// `m` independent perturbed copies of `x`.
pub fn sample(
    spec: &AugmentationSpec,
    x: &Tensor,
    m: usize,
    rng: &mut RngStream,
) -> Result<Vec<Tensor>> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::BadSpec("at least one copy is required".into()));
    }
    if !x.all_finite() {
        return Err(Error::BadSpec("input contains non-finite values".into()));
    }
    (0..m)
        .map(|_| {
            let mut out = vec![0.0; x.len()];
            spec.perturb_into(x.data(), rng, &mut out)?;
            Tensor::new(x.shape().to_vec(), out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::monte_carlo_vec;
    use proptest::prelude::*;

    #[test]
    fn identity_copies() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.5]);
        let copies = sample(
            &AugmentationSpec::identity(),
            &x,
            3,
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(copies, vec![x.clone(), x.clone(), x]);
    }

    #[test]
    fn gaussian_moments() {
        let spec = AugmentationSpec::gaussian(0.1);
        let x = [0.5, -1.0, 2.0];
        let est = monte_carlo_vec(100_000, 6, 11, 3, |rng, out| {
            let mut y = [0.0; 3];
            spec.perturb_into(&x, rng, &mut y).unwrap();
            for j in 0..3 {
                out[j] = y[j];
                out[3 + j] = (y[j] - x[j]).powi(2);
            }
        });
        for j in 0..3 {
            assert!((est[j].mean - x[j]).abs() <= 4.0 * est[j].standard_error);
            let var = &est[3 + j];
            assert!(
                (var.mean - 0.01).abs() <= 3.0 * var.standard_error,
                "{var:?}"
            );
        }
    }

    #[test]
    fn cutout_area_and_locality() {
        let spec = AugmentationSpec::cutout(0.25, -7.0, Some((8, 8)));
        let x: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let mut rng = RngStream::new(4, 4);
        for _ in 0..50 {
            let mut out = vec![0.0; 64];
            spec.perturb_into(&x, &mut rng, &mut out).unwrap();
            assert_eq!(out.iter().filter(|&&v| v == -7.0).count(), 16);
            for (o, xi) in out.iter().zip(&x) {
                assert!(*o == -7.0 || o.to_bits() == xi.to_bits());
            }
        }
    }

    #[test]
    fn bad_specs() {
        let x = Tensor::vector(vec![0.0; 4]);
        let mut rng = RngStream::new(0, 0);
        for spec in [
            AugmentationSpec::gaussian(0.0),
            AugmentationSpec::gaussian(-1.0),
            AugmentationSpec::cutout(0.0, 0.0, None),
            AugmentationSpec::cutout(1.5, 0.0, None),
            AugmentationSpec::cutout(0.5, 0.0, Some((3, 3))),
        ] {
            assert!(
                matches!(sample(&spec, &x, 1, &mut rng), Err(Error::BadSpec(_))),
                "{spec:?}"
            );
        }
    }

    proptest! {
        #[test]
        fn determinism(seed in any::<u64>(), stream in any::<u64>(), m in 1usize..5, sigma in 1e-3f64..2.0) {
            let x = Tensor::vector(vec![0.25; 16]);
            for spec in [AugmentationSpec::gaussian(sigma), AugmentationSpec::cutout(0.3, 0.0, None)] {
                let a = sample(&spec, &x, m, &mut RngStream::new(seed, stream)).unwrap();
                let b = sample(&spec, &x, m, &mut RngStream::new(seed, stream)).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
