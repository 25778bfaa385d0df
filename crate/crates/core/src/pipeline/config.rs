use crate::boundary::{DtnOptions, TraceOptions};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, SUPPORT_FRACTION};
use crate::solve::GmresOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

/// Every numerical knob of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Spatial grid size.
    pub nx: usize,
    /// Spatial half-width `L`.
    #[serde(rename = "L")]
    pub half_width: f64,
    /// Truncation radius `K` of the scattering transform.
    #[serde(rename = "K")]
    pub k_radius: f64,
    /// Size of the `k` grid; its half-width is `K / 0.8`.
    pub kgrid_n: usize,
    /// Fourier modes `M` of the DtN map.
    pub modes: usize,
    /// Chebyshev degree of the DtN solver (odd).
    pub radial_degree: usize,
    /// Boundary sample count.
    pub samples: usize,
    /// Series order `N` of the trace ansatz.
    pub series_n: usize,
    pub reg: f64,
    /// `|k|` used for the large-`k` limit.
    pub kmax: f64,
    pub directions: usize,
    pub gmres: GmresOptions,
    /// Seed of every randomized diagnostic.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: 128,
            half_width: 1.0,
            k_radius: 6.0,
            kgrid_n: 64,
            modes: 32,
            radial_degree: DtnOptions::default().radial_degree,
            samples: 128,
            series_n: 16,
            reg: 1e-8,
            kmax: 8.0,
            directions: 8,
            gmres: GmresOptions::default(),
            seed: 0,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.nx, self.half_width)?;
        self.k_spec()?;
        let positive = [self.half_width, self.k_radius, self.kmax, self.gmres.tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Precondition("L, K, kmax and the solver tolerance must be positive".into()));
        }
        if !(self.reg.is_finite() && self.reg >= 0.0) {
            return Err(Error::Precondition(format!("reg must be non-negative, got {}", self.reg)));
        }
        if self.half_width < 1.0 {
            return Err(Error::Precondition(format!(
                "the grid must contain the unit disk, got L = {}",
                self.half_width
            )));
        }
        if self.modes < 2 || self.series_n < 1 || self.directions < 1 || self.gmres.max_iter < 1 || self.gmres.restart < 1 {
            return Err(Error::Precondition("modes, series_n, directions and solver limits must be positive".into()));
        }
        if self.samples < 2 * self.modes + 2 || self.series_n > self.samples / 4 {
            return Err(Error::Precondition(format!(
                "{} boundary samples cannot carry {} modes and series order {}",
                self.samples, self.modes, self.series_n
            )));
        }
        Ok(())
    }

    pub fn x_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.nx, self.half_width)
    }

    pub fn k_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.kgrid_n, self.k_radius / SUPPORT_FRACTION)
    }

    pub fn dtn_options(&self) -> DtnOptions {
        DtnOptions {
            modes: self.modes,
            radial_degree: self.radial_degree,
        }
    }

    pub fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            series_n: self.series_n,
            reg: self.reg,
            samples: self.samples,
            ..TraceOptions::default()
        }
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"nx": 64, "K": 4.0}"#).unwrap();
        assert_eq!(cfg.nx, 64);
        assert_eq!(cfg.k_radius, 4.0);
        assert_eq!(cfg.modes, 32);
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash(), b.hash());
        b.reg = 1e-6;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = RunConfig::default();
        c.nx = 100;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.reg = -1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.series_n = 64;
        assert!(c.validate().is_err());
    }
}
