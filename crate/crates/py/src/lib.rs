use std::path::PathBuf;

use num_complex::Complex;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nhskin::config::ExperimentConfig;
use nhskin::dqpt::{detect_critical_points, loschmidt};
use nhskin::experiment::{self, Command};
use nhskin::grid::{KGrid, Window};
use nhskin::model::{build_ordinary_model, build_symplectic_hn, BlochModel, Boundary, EndHops, ModelParams};
use nhskin::presets::{preset_sized, PRESET_NAMES};
use nhskin::spectral::{band_structure, chain_spectrum, char_poly_roots, winding_number, BandStructure};
use nhskin::wavepacket::{evolve, time_grid, WavepacketRun};

type C64 = Complex<f64>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn boundary(name: &str) -> PyResult<Boundary> {
    Ok(match name {
        "open" => Boundary::Open,
        "periodic" => Boundary::Periodic,
        "leftward" => Boundary::WindingControl(EndHops::Leftward),
        "rightward" => Boundary::WindingControl(EndHops::Rightward),
        other => return Err(err(format!("unknown boundary '{other}'"))),
    })
}

/// A translation-invariant lattice Hamiltonian.
#[pyclass(name = "Model", module = "pynhskin", frozen)]
struct PyModel {
    inner: BlochModel,
}

#[pymethods]
impl PyModel {
    /// Two-orbital chain with non-reciprocal hopping and Kramers-paired bands.
    #[staticmethod]
    #[pyo3(signature = (t_h = 2.0, g = 0.8, delta = 0.1))]
    fn symplectic_hn(t_h: f64, g: f64, delta: f64) -> PyResult<Self> {
        let p = ModelParams { t_h, g, delta };
        if !p.is_finite() {
            return Err(err("model parameters must be finite"));
        }
        Ok(PyModel { inner: build_symplectic_hn(p) })
    }

    /// Single-band reference model.
    #[staticmethod]
    fn ordinary() -> Self {
        PyModel { inner: build_ordinary_model() }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn bloch_matrix(&self, k: f64) -> Vec<Vec<C64>> {
        let h = self.inner.bloch_matrix(k);
        (0..h.rows()).map(|i| (0..h.cols()).map(|j| h[(i, j)]).collect()).collect()
    }

    /// Returns `(ks, energies)` with `energies[m][band]`.
    #[pyo3(signature = (n, window = "0_2pi"))]
    fn bands(&self, n: usize, window: &str) -> PyResult<(Vec<f64>, Vec<Vec<C64>>)> {
        let grid = KGrid::new(n, window.parse().map_err(err)?).map_err(err)?;
        let b: BandStructure<f64> = band_structure(&self.inner, grid).map_err(err)?;
        let energies = (0..n).map(|m| (0..b.bands()).map(|j| b.energy(m, j)).collect()).collect();
        Ok((b.ks().to_vec(), energies))
    }

    #[pyo3(signature = (eps0, nk = 256))]
    fn winding(&self, eps0: C64, nk: usize) -> PyResult<i64> {
        Ok(winding_number(&self.inner, eps0, nk).map_err(err)?.winding)
    }

    /// Eigenvalues of a finite chain; boundary is open, periodic, leftward or rightward.
    #[pyo3(signature = (sites, boundary = "open"))]
    fn chain_spectrum(&self, sites: usize, boundary: &str) -> PyResult<Vec<C64>> {
        chain_spectrum(&self.inner, sites, self::boundary(boundary)?).map_err(err)
    }

    /// Roots of the characteristic polynomial, ascending in modulus.
    fn gbz_roots(&self, eps0: C64) -> PyResult<Vec<C64>> {
        Ok(char_poly_roots(&self.inner, eps0).map_err(err)?.roots)
    }
}

/// A full experiment configuration.
#[pyclass(name = "Experiment", module = "pynhskin")]
struct PyExperiment {
    cfg: ExperimentConfig,
}

#[pymethods]
impl PyExperiment {
    #[staticmethod]
    #[pyo3(signature = (name, nk = None))]
    fn preset(name: &str, nk: Option<usize>) -> PyResult<Self> {
        Ok(PyExperiment { cfg: preset_sized(name, nk).map_err(err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyExperiment { cfg: ExperimentConfig::from_toml(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyExperiment { cfg: ExperimentConfig::load(&path).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.cfg.to_toml().map_err(err)
    }

    fn model(&self) -> PyResult<PyModel> {
        Ok(PyModel { inner: self.cfg.model.build().map_err(err)? })
    }

    /// Runs one pipeline command, writing CSV files under `out_dir`.
    /// Returns `(files, summary_lines)`.
    fn run(&self, py: Python<'_>, command: &str, out_dir: PathBuf) -> PyResult<(Vec<PathBuf>, Vec<String>)> {
        let cmd: Command = command.parse().map_err(err)?;
        let cfg = self.cfg.clone();
        let o = py.detach(move || experiment::run(&cfg, cmd, &out_dir)).map_err(err)?;
        Ok((o.files, o.summary))
    }

    /// Evolves the configured wavepacket over the configured time grid.
    #[pyo3(signature = (t_max = None, dt = None))]
    fn evolve(&self, py: Python<'_>, t_max: Option<f64>, dt: Option<f64>) -> PyResult<PyRun> {
        let cfg = self.cfg.clone();
        let run = py
            .detach(move || -> nhskin::Result<WavepacketRun> {
                let model = cfg.model.build()?;
                let times = time_grid(t_max.unwrap_or(cfg.grid.t_max), dt.unwrap_or(cfg.grid.dt))?;
                evolve(&model, &cfg.wavepacket, cfg.kgrid()?, &times)
            })
            .map_err(err)?;
        Ok(PyRun { run })
    }
}

/// An evolved wavepacket.
#[pyclass(name = "Run", module = "pynhskin", frozen)]
struct PyRun {
    run: WavepacketRun,
}

#[pymethods]
impl PyRun {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.run.times.clone()
    }

    #[getter]
    fn sites(&self) -> usize {
        self.run.sites()
    }

    fn real_density(&self, index: usize) -> PyResult<Vec<f64>> {
        self.check(index)?;
        Ok(self.run.real_density(index))
    }

    fn momentum_density(&self, index: usize) -> PyResult<Vec<f64>> {
        self.check(index)?;
        Ok(self.run.momentum_density(index))
    }

    /// Unwrapped circular centre of mass per time; `channel=None` for the full state.
    #[pyo3(signature = (channel = None))]
    fn com(&self, channel: Option<usize>) -> Vec<Option<f64>> {
        match channel {
            None => self.run.com_total.clone(),
            Some(b) => self.run.com_numeric.iter().map(|c| c.get(b).copied().flatten()).collect(),
        }
    }

    fn com_analytic(&self, channel: usize) -> Vec<f64> {
        self.run.com_analytic.iter().map(|c| c.get(channel).copied().unwrap_or(f64::NAN)).collect()
    }

    fn kmax(&self, channel: usize) -> Vec<f64> {
        self.run.kmax_numeric.iter().map(|c| c.get(channel).copied().unwrap_or(f64::NAN)).collect()
    }

    /// Returns `(echo, rate)`.
    fn loschmidt(&self) -> (Vec<f64>, Vec<f64>) {
        let s = loschmidt(&self.run);
        (s.echo, s.rate)
    }

    #[pyo3(signature = (prominence = 0.2))]
    fn critical_points<'py>(&self, py: Python<'py>, prominence: f64) -> PyResult<Bound<'py, PyDict>> {
        let mut set = detect_critical_points(&loschmidt(&self.run), prominence).map_err(err)?;
        set.attach_run(&self.run);
        let d = PyDict::new(py);
        d.set_item("critical_times", set.critical_times)?;
        d.set_item("intervals", set.intervals)?;
        d.set_item("revival_times", set.revival_times)?;
        d.set_item("predicted_times", set.predicted_times)?;
        d.set_item("mean_velocity", set.mean_velocity)?;
        Ok(d)
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.run.warnings.clone()
    }
}

impl PyRun {
    fn check(&self, index: usize) -> PyResult<()> {
        if index < self.run.times.len() {
            Ok(())
        } else {
            Err(err(format!("time index {index} out of range")))
        }
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

#[pyfunction]
fn window_names() -> Vec<String> {
    [Window::ZeroTo2Pi, Window::MinusPiToPi].iter().map(|w| w.to_string()).collect()
}

#[pymodule]
fn pynhskin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(window_names, m)?)?;
    Ok(())
}
