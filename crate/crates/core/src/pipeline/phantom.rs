use crate::convection::ConvectionField;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, GridSpec, SUPPORT_FRACTION};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// `exp(-|z - c|^2 / (2 w^2))`.
    Gauss,
    /// `exp(1 - 1 / (1 - |z - c|^2 / w^2))` inside `|z - c| < w`.
    Bump,
    /// Sum of two Gaussian blobs.
    TwoBlob,
}

/// One blob: its center, width and the peak values it contributes to `b1`, `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: [f64; 2],
    pub width: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Smooth compactly supported convection coefficients.
///
/// Every blob is multiplied by a `C^inf` cutoff equal to 1 on `|z| <= 0.75 R` and 0
/// beyond `R = support_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub kind: PhantomKind,
    pub blobs: Vec<Blob>,
    pub support_radius: f64,
}

/// Smooth step from 1 at `r <= r1` to 0 at `r >= r2`.
pub fn smooth_cutoff(r: f64, r1: f64, r2: f64) -> f64 {
    if r <= r1 {
        return 1.0;
    }
    if r >= r2 {
        return 0.0;
    }
    let t = (r - r1) / (r2 - r1);
    let a = (-1.0 / (1.0 - t)).exp();
    let b = (-1.0 / t).exp();
    a / (a + b)
}

impl Phantom {
    /// Single Gaussian at the origin.
    pub fn gauss(b1: f64, b2: f64, width: f64) -> Self {
        Phantom {
            kind: PhantomKind::Gauss,
            blobs: vec![Blob {
                center: [0.0, 0.0],
                width,
                b1,
                b2,
            }],
            support_radius: SUPPORT_FRACTION,
        }
    }

    /// The corpus phantom used by the acceptance runs: two offset Gaussians so that
    /// `b1` and `b2` have different shapes.
    pub fn calibrated() -> Self {
        Phantom {
            kind: PhantomKind::TwoBlob,
            blobs: vec![
                Blob {
                    center: [0.1, 0.05],
                    width: 0.2,
                    b1: 0.3,
                    b2: 0.1,
                },
                Blob {
                    center: [-0.1, -0.1],
                    width: 0.22,
                    b1: -0.1,
                    b2: 0.25,
                },
            ],
            support_radius: SUPPORT_FRACTION,
        }
    }

    pub fn zero() -> Self {
        Phantom {
            kind: PhantomKind::Gauss,
            blobs: Vec::new(),
            support_radius: SUPPORT_FRACTION,
        }
    }

    pub fn validate(&self, half_width: f64) -> Result<()> {
        let limit = SUPPORT_FRACTION * half_width;
        if !(self.support_radius > 0.0) || self.support_radius > limit * (1.0 + 1e-12) {
            return Err(Error::SupportViolation {
                radius: self.support_radius,
                limit,
            });
        }
        if self.kind == PhantomKind::TwoBlob && self.blobs.len() != 2 {
            return Err(Error::Precondition(format!(
                "a two-blob phantom needs 2 blobs, got {}",
                self.blobs.len()
            )));
        }
        for blob in &self.blobs {
            let finite = blob.center.iter().chain([&blob.width, &blob.b1, &blob.b2]).all(|v| v.is_finite());
            if !finite || !(blob.width > 0.0) {
                return Err(Error::Precondition(format!("invalid blob {blob:?}")));
            }
        }
        Ok(())
    }

    fn profile(&self, blob: &Blob, z: Complex64) -> f64 {
        let d2 = (z - Complex64::new(blob.center[0], blob.center[1])).norm_sqr();
        let w2 = blob.width * blob.width;
        match self.kind {
            PhantomKind::Gauss | PhantomKind::TwoBlob => (-d2 / (2.0 * w2)).exp(),
            PhantomKind::Bump => {
                if d2 >= w2 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - d2 / w2)).exp()
                }
            }
        }
    }

    /// `(b1(z), b2(z))` at an arbitrary point.
    pub fn eval(&self, z: Complex64) -> (f64, f64) {
        let r = self.support_radius;
        let cut = smooth_cutoff(z.norm(), 0.75 * r, r);
        if cut == 0.0 {
            return (0.0, 0.0);
        }
        self.blobs.iter().fold((0.0, 0.0), |(a, b), blob| {
            let p = cut * self.profile(blob, z);
            (a + blob.b1 * p, b + blob.b2 * p)
        })
    }
}

/// Samples the phantom on the `nx x nx` grid of half-width `half_width`.
pub fn make_phantom(phantom: &Phantom, nx: usize, half_width: f64) -> Result<ConvectionField> {
    let spec = GridSpec::new(nx, half_width)?;
    phantom.validate(half_width)?;
    let values: Vec<(f64, f64)> = spec.nodes().map(|z| phantom.eval(z)).collect();
    let b1 = ComplexGrid::from_samples(spec, values.iter().map(|v| Complex64::new(v.0, 0.0)).collect())?;
    let b2 = ComplexGrid::from_samples(spec, values.iter().map(|v| Complex64::new(v.1, 0.0)).collect())?;
    ConvectionField::new(b1, b2, phantom.support_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::grid_norm;

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let mut p = Phantom::gauss(0.0, 0.0, 0.2);
        p.blobs[0].b1 = 0.0;
        let f = make_phantom(&p, 32, 1.0).unwrap();
        assert!(f.b().is_zero());
    }

    #[test]
    fn gaussian_peak_is_the_amplitude() {
        let f = make_phantom(&Phantom::gauss(1.0, 0.0, 0.2), 64, 1.0).unwrap();
        assert_eq!(f.b1().max_abs(), 1.0);
        assert_eq!(f.b1().get(32, 32).re, 1.0);
    }

    #[test]
    fn two_blob_is_the_sum_of_its_parts() {
        let p = Phantom::calibrated();
        let whole = make_phantom(&p, 64, 1.0).unwrap();
        let parts: Vec<ConvectionField> = p
            .blobs
            .iter()
            .map(|b| {
                let single = Phantom {
                    kind: PhantomKind::Gauss,
                    blobs: vec![*b],
                    support_radius: p.support_radius,
                };
                make_phantom(&single, 64, 1.0).unwrap()
            })
            .collect();
        let h2 = whole.b().spec().spacing().powi(2);
        let integral = |g: &ComplexGrid| g.samples().iter().map(|v| v.re).sum::<f64>() * h2;
        let total = integral(whole.b1());
        let sum = integral(parts[0].b1()) + integral(parts[1].b1());
        assert!((total - sum).abs() < 1e-12);
        assert!(grid_norm(whole.b2(), 2.0) > 0.0);
    }

    #[test]
    fn support_is_checked() {
        let mut p = Phantom::gauss(1.0, 0.0, 0.2);
        p.support_radius = 0.9;
        assert!(make_phantom(&p, 32, 1.0).is_err());
        let mut p = Phantom::calibrated();
        p.blobs.pop();
        assert!(p.validate(1.0).is_err());
    }

    #[test]
    fn values_vanish_outside_support() {
        let p = Phantom::gauss(1.0, 1.0, 0.5);
        assert_eq!(p.eval(Complex64::new(0.8, 0.0)), (0.0, 0.0));
        assert!(p.eval(Complex64::new(0.7, 0.0)).0 > 0.0);
    }
}
