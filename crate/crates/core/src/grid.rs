//! Uniform momentum grids over one Brillouin-zone window.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Which interval of length `2 pi` the grid covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    #[default]
    #[serde(rename = "0_2pi")]
    ZeroTo2Pi,
    #[serde(rename = "pm_pi")]
    MinusPiToPi,
}

impl Window {
    pub fn start<T: Real>(self) -> T {
        match self {
            Window::ZeroTo2Pi => T::zero(),
            Window::MinusPiToPi => -T::pi(),
        }
    }

    /// Maps `k` into `[start, start + 2 pi)`.
    pub fn wrap(self, k: f64) -> f64 {
        let s = self.start::<f64>();
        s + (k - s).rem_euclid(std::f64::consts::TAU)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::ZeroTo2Pi => "0_2pi",
            Window::MinusPiToPi => "pm_pi",
        })
    }
}

impl FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0_2pi" => Ok(Window::ZeroTo2Pi),
            "pm_pi" => Ok(Window::MinusPiToPi),
            other => Err(Error::InvalidInput(format!("unknown window '{other}' (expected 0_2pi or pm_pi)"))),
        }
    }
}

/// `k_m = start + 2 pi m / N`, `m = 0..N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KGrid {
    n: usize,
    window: Window,
}

impl KGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, window: Window) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidInput(format!("grid needs at least {} points, got {n}", Self::MIN_POINTS)));
        }
        Ok(KGrid { n, window })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn step(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    pub fn point<T: Real>(&self, m: usize) -> T {
        let two_pi = T::pi() + T::pi();
        self.window.start::<T>() + two_pi * T::from_f64(m as f64) / T::from_f64(self.n as f64)
    }

    pub fn points<T: Real>(&self) -> Vec<T> {
        (0..self.n).map(|m| self.point(m)).collect()
    }

    /// Grid index nearest to `k` (mod `2 pi`).
    pub fn nearest(&self, k: f64) -> usize {
        let s = self.window.start::<f64>();
        let x = (k - s).rem_euclid(std::f64::consts::TAU) / self.step();
        (x.round() as usize) % self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spacing_and_windows() {
        let g = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let p: Vec<f64> = g.points();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - p[0] - 2.0 * PI / 120.0).abs() < 1e-15);
        let h = KGrid::new(120, Window::MinusPiToPi).unwrap();
        assert_eq!(h.point::<f64>(0), -PI);
        assert_eq!(g.nearest(PI / 2.0), 30);
        assert_eq!(h.nearest(PI / 2.0), 90);
        assert_eq!(g.nearest(2.0 * PI - 1e-9), 0);
        assert!(KGrid::new(8, Window::ZeroTo2Pi).is_err());
    }

    #[test]
    fn window_parse() {
        assert_eq!("pm_pi".parse::<Window>().unwrap(), Window::MinusPiToPi);
        assert_eq!(Window::ZeroTo2Pi.to_string(), "0_2pi");
        assert!("x".parse::<Window>().is_err());
        assert!((Window::MinusPiToPi.wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
