//! Experiment configuration files.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dqpt::DEFAULT_PROMINENCE;
use crate::error::{Error, Result};
use crate::grid::{KGrid, Window};
use crate::model::{Boundary, ModelSpec};
use crate::wavepacket::GaussianSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Momentum points, equal to the number of lattice cells.
    pub n: usize,
    #[serde(default)]
    pub window: Window,
    pub t_max: f64,
    pub dt: f64,
    /// Boundary used for finite-chain spectra.
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_scan_re")]
    pub scan_re: [f64; 2],
    #[serde(default = "default_scan_re")]
    pub scan_im: [f64; 2],
    #[serde(default = "default_resolution")]
    pub scan_resolution: f64,
    /// Reference energies for the characteristic-polynomial roots, as `[re, im]`.
    #[serde(default = "default_gbz")]
    pub gbz_energies: Vec<[f64; 2]>,
    #[serde(default = "default_prominence")]
    pub prominence: f64,
    #[serde(default)]
    pub scaling_sizes: Vec<usize>,
    /// Write the time-by-momentum and time-by-site density matrices.
    #[serde(default = "default_true")]
    pub heatmaps: bool,
}

fn default_scan_re() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_resolution() -> f64 {
    0.05
}
fn default_gbz() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}
fn default_prominence() -> f64 {
    DEFAULT_PROMINENCE
}
fn default_true() -> bool {
    true
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            scan_re: default_scan_re(),
            scan_im: default_scan_re(),
            scan_resolution: default_resolution(),
            gbz_energies: default_gbz(),
            prominence: default_prominence(),
            scaling_sizes: Vec::new(),
            heatmaps: true,
        }
    }
}

impl AnalysisConfig {
    pub fn gbz_references(&self) -> Vec<Complex<f64>> {
        self.gbz_energies.iter().map(|[re, im]| Complex::new(*re, *im)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub model: ModelSpec,
    pub wavepacket: GaussianSpec,
    pub grid: GridConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kgrid(&self) -> Result<KGrid> {
        KGrid::new(self.grid.n, self.grid.window)
    }

    pub fn validate(&self) -> Result<()> {
        self.kgrid()?;
        self.wavepacket.validate()?;
        if !(self.grid.dt > 0.0) || !(self.grid.t_max >= 0.0) || !self.grid.t_max.is_finite() {
            return Err(Error::Config("grid needs dt > 0 and a finite t_max >= 0".into()));
        }
        let a = &self.analysis;
        if !(a.scan_resolution > 0.0) || a.scan_re[0] > a.scan_re[1] || a.scan_im[0] > a.scan_im[1] {
            return Err(Error::Config("winding scan needs ordered bounds and a positive resolution".into()));
        }
        if !(a.prominence > 0.0) {
            return Err(Error::Config("prominence must be positive".into()));
        }
        if a.scaling_sizes.iter().any(|&n| n < KGrid::MIN_POINTS) {
            return Err(Error::Config(format!("scaling sizes must be at least {}", KGrid::MIN_POINTS)));
        }
        Ok(())
    }
}
