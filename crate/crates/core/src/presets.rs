//! Named experiment presets.

use std::f64::consts::PI;

use crate::config::{AnalysisConfig, ExperimentConfig, GridConfig};
use crate::error::{Error, Result};
use crate::grid::Window;
use crate::model::{Boundary, EndHops, ModelSpec};
use crate::wavepacket::GaussianSpec;

pub const PRESET_NAMES: [&str; 11] = [
    "fig1-case1",
    "fig1-case2",
    "fig1-case3",
    "fig2-dqpt-N120",
    "fig2-dqpt-N100",
    "fig2-dqpt-N80",
    "supp-ordinary-win02pi",
    "supp-ordinary-winpm",
    "supp-winding-control",
    "supp-n0-different",
    "supp-c-different",
];

pub const SIGMA: f64 = 0.4;

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    preset_sized(name, None)
}

/// Preset with an optional override of the system size; site centres
/// follow `N`.
pub fn preset_sized(name: &str, sites: Option<usize>) -> Result<ExperimentConfig> {
    let default_n = match name {
        "fig2-dqpt-N100" => 100,
        "fig2-dqpt-N80" => 80,
        _ => 120,
    };
    let n = sites.unwrap_or(default_n);
    let half = (n / 2) as f64;
    let kramers = |k0_minus: f64, k0_plus: f64| GaussianSpec {
        k0_minus,
        k0_plus,
        ..GaussianSpec::symmetric(PI, half, SIGMA)
    };
    let skin = |wavepacket: GaussianSpec| ExperimentConfig {
        out_dir: None,
        model: ModelSpec::reference(),
        wavepacket,
        grid: GridConfig { n, window: Window::ZeroTo2Pi, t_max: 30.0, dt: 0.05, boundary: Boundary::Open },
        analysis: AnalysisConfig::default(),
    };
    let dqpt = || {
        let mut c = skin(GaussianSpec::symmetric(PI, half, SIGMA));
        c.grid.t_max = 100.0;
        c.grid.dt = 0.1;
        c.analysis.heatmaps = false;
        c.analysis.scaling_sizes = vec![80, 100, 120];
        c
    };
    let ordinary = |window: Window| {
        let mut c = skin(GaussianSpec {
            c_plus: 1.0,
            c_minus: 0.0,
            ..GaussianSpec::symmetric(PI / 9.0, half, SIGMA)
        });
        c.model = ModelSpec::Ordinary;
        c.grid.window = window;
        c.analysis.gbz_energies = vec![[1.0, 0.0], [-1.0, 0.0]];
        c
    };
    let cfg = match name {
        "fig1-case1" => skin(kramers(PI, PI)),
        "fig1-case2" => skin(kramers(3.0 * PI / 5.0, 7.0 * PI / 5.0)),
        "fig1-case3" => skin(kramers(PI / 2.0, 3.0 * PI / 2.0)),
        "fig2-dqpt-N120" | "fig2-dqpt-N100" | "fig2-dqpt-N80" => dqpt(),
        "supp-ordinary-win02pi" => ordinary(Window::ZeroTo2Pi),
        "supp-ordinary-winpm" => ordinary(Window::MinusPiToPi),
        "supp-winding-control" => {
            let mut c = skin(kramers(PI, PI));
            c.grid.boundary = Boundary::WindingControl(EndHops::Leftward);
            c
        }
        "supp-n0-different" => skin(GaussianSpec {
            n0_plus: (n / 4) as f64,
            n0_minus: (3 * n / 4) as f64,
            ..kramers(PI, PI)
        }),
        "supp-c-different" => {
            let norm = 0.89f64.sqrt();
            skin(GaussianSpec { c_plus: 0.5 / norm, c_minus: 0.8 / norm, ..kramers(PI, PI) })
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(cfg)
}
