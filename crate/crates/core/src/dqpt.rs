//! Loschmidt echo, rate function and effective critical points.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::model::BlochModel;
use crate::real::{Dd, Real};
use crate::wavepacket::{evolve, time_grid, GaussianSpec, WavepacketRun};

/// Smallest echo passed to the logarithm.
pub const ECHO_FLOOR: f64 = 1e-300;
/// Default peak prominence as a fraction of the rate-function range.
pub const DEFAULT_PROMINENCE: f64 = 0.2;

#[derive(Clone, Debug)]
pub struct LoschmidtSeries {
    pub times: Vec<f64>,
    pub echo: Vec<f64>,
    pub rate: Vec<f64>,
    pub sites: usize,
}

/// `L(t) = |<psi(0)|psi(t)>|^2` between unit-normalized states and
/// `lambda = -ln(L) / N`.
///
/// The overlap is taken in momentum space, where the DFT is unitary, and
/// accumulated in double-double: at the echo minima the overlap is many
/// orders of magnitude below the individual terms.
pub fn loschmidt(run: &WavepacketRun) -> LoschmidtSeries {
    let p = &run.precise;
    let a0 = p.amplitudes(0.0);
    let n0 = p.overlap(&a0, &a0).re;
    let mut echo = Vec::with_capacity(run.times.len());
    for &t in &run.times {
        let at = p.amplitudes(t);
        let ov = p.overlap(&a0, &at);
        let nt = p.overlap(&at, &at).re;
        echo.push((norm_sqr(ov) / (n0 * nt)).to_f64());
    }
    from_echo(run.times.clone(), echo, run.sites())
}

fn norm_sqr(z: Complex<Dd>) -> Dd {
    z.re * z.re + z.im * z.im
}

/// Builds a series from precomputed echo values.
pub fn from_echo(times: Vec<f64>, echo: Vec<f64>, sites: usize) -> LoschmidtSeries {
    let rate = echo.iter().map(|l| -l.max(ECHO_FLOOR).ln() / sites as f64).collect();
    LoschmidtSeries { times, echo, rate, sites }
}

#[derive(Clone, Debug, Default)]
pub struct CriticalPointSet {
    pub critical_times: Vec<f64>,
    /// `t_c^{i+1} - t_c^i`.
    pub intervals: Vec<f64>,
    pub predicted_times: Vec<f64>,
    pub predicted_intervals: Vec<f64>,
    pub revival_times: Vec<f64>,
    /// Time-averaged `|V_g|` between successive critical points.
    pub mean_velocity: Vec<f64>,
}

impl CriticalPointSet {
    pub fn is_empty(&self) -> bool {
        self.critical_times.is_empty()
    }

    /// Mean of up to the first `count` intervals.
    pub fn early_interval(&self, count: usize) -> Option<f64> {
        let xs = &self.intervals[..self.intervals.len().min(count)];
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    }

    /// Fills predictions and per-interval mean speeds from the run.
    pub fn attach_run(&mut self, run: &WavepacketRun) {
        if let Ok(pred) = predict_intervals(run, run.sites()) {
            self.predicted_intervals = pred.windows(2).map(|w| w[1] - w[0]).collect();
            self.predicted_times = pred;
        }
        let speed = mean_speed(run);
        self.mean_velocity = self
            .critical_times
            .windows(2)
            .map(|w| {
                let (mut acc, mut span) = (0.0, 0.0);
                for i in 1..run.times.len() {
                    let (ta, tb) = (run.times[i - 1], run.times[i]);
                    if ta >= w[0] && tb <= w[1] {
                        acc += 0.5 * (speed[i - 1] + speed[i]) * (tb - ta);
                        span += tb - ta;
                    }
                }
                if span > 0.0 {
                    acc / span
                } else {
                    f64::NAN
                }
            })
            .collect();
    }
}

/// Prominence of the local maximum at `i`.
fn prominence(xs: &[f64], i: usize) -> f64 {
    let peak = xs[i];
    let mut left = peak;
    for &x in xs[..i].iter().rev() {
        if x > peak {
            break;
        }
        left = left.min(x);
    }
    let mut right = peak;
    for &x in &xs[i + 1..] {
        if x > peak {
            break;
        }
        right = right.min(x);
    }
    peak - left.max(right)
}

/// Interior local maxima of `xs` whose prominence reaches `threshold`.
pub fn find_peaks(xs: &[f64], threshold: f64) -> Vec<usize> {
    (1..xs.len().saturating_sub(1))
        .filter(|&i| xs[i] > xs[i - 1] && xs[i] >= xs[i + 1])
        .filter(|&i| prominence(xs, i) >= threshold)
        .collect()
}

/// Critical points are prominent maxima of the rate function, with
/// `prominence` given as a fraction of its global range. One revival (the
/// echo maximum) is recorded between each pair of successive critical
/// points, and one after the last if the echo has an interior maximum there.
pub fn detect_critical_points(series: &LoschmidtSeries, prominence: f64) -> Result<CriticalPointSet> {
    if !(prominence > 0.0) {
        return Err(Error::InvalidInput("prominence must be positive".into()));
    }
    let lo = series.rate.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.rate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let mut set = CriticalPointSet::default();
    if !(range > 0.0) {
        return Ok(set);
    }
    let peaks = find_peaks(&series.rate, prominence * range);
    set.critical_times = peaks.iter().map(|&i| series.times[i]).collect();
    set.intervals = set.critical_times.windows(2).map(|w| w[1] - w[0]).collect();
    let echo = &series.echo;
    let argmax = |a: usize, b: usize| (a..b).max_by(|&x, &y| echo[x].partial_cmp(&echo[y]).unwrap());
    for w in peaks.windows(2) {
        if let Some(i) = argmax(w[0] + 1, w[1]) {
            set.revival_times.push(series.times[i]);
        }
    }
    if let Some(&last) = peaks.last() {
        if let Some(i) = argmax(last + 1, echo.len()) {
            if i + 1 < echo.len() && echo[i] > echo[i - 1] {
                set.revival_times.push(series.times[i]);
            }
        }
    }
    Ok(set)
}

fn mean_speed(run: &WavepacketRun) -> Vec<f64> {
    run.vg
        .iter()
        .map(|v| {
            let active: Vec<f64> = (0..run.channels).filter(|&b| run.is_active(b)).map(|b| v[b].abs()).collect();
            active.iter().sum::<f64>() / active.len() as f64
        })
        .collect()
}

/// Predicted critical times: instants where the accumulated distance
/// `int |V_g| dt` reaches `N/2, 3N/2, ...`, i.e. where the channels pass the
/// antipode of their starting site. Successive predictions are `N` apart in
/// travelled distance.
pub fn predict_intervals(run: &WavepacketRun, sites: usize) -> Result<Vec<f64>> {
    predict_from_speed(&run.times, &mean_speed(run), sites)
}

pub fn predict_from_speed(times: &[f64], speed: &[f64], sites: usize) -> Result<Vec<f64>> {
    let n = sites as f64;
    let mut out = Vec::new();
    let mut dist = 0.0;
    let mut target = 0.5 * n;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        let step = 0.5 * (speed[i - 1] + speed[i]) * dt;
        while dist + step >= target && step > 0.0 {
            out.push(times[i - 1] + dt * (target - dist) / step);
            target += n;
        }
        dist += step;
    }
    if dist < n {
        return Err(Error::ShortVelocitySeries(n));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ScalingEntry {
    pub sites: usize,
    pub critical: CriticalPointSet,
    pub early_interval: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub entries: Vec<ScalingEntry>,
    /// Least-squares slope of early interval against `N` through the origin.
    pub slope: Option<f64>,
    /// RMS relative residual of that fit.
    pub residual: Option<f64>,
}

/// Number of leading intervals averaged per system size.
pub const EARLY_INTERVALS: usize = 2;

/// Runs the echo analysis for every `N`; `spec_for(N)` supplies the
/// excitation so that site centres can follow the system size.
pub fn scaling_study(
    model: &BlochModel,
    spec_for: impl Fn(usize) -> GaussianSpec + Sync,
    sizes: &[usize],
    t_max: f64,
    dt: f64,
    prominence: f64,
) -> Result<ScalingReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("scaling study needs at least one size".into()));
    }
    let times = time_grid(t_max, dt)?;
    let results: Vec<Result<ScalingEntry>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sizes
            .iter()
            .map(|&n| {
                let spec = spec_for(n);
                let times = &times;
                scope.spawn(move || -> Result<ScalingEntry> {
                    let grid = KGrid::new(n, Default::default())?;
                    let run = evolve(model, &spec, grid, times)?;
                    let mut critical = detect_critical_points(&loschmidt(&run), prominence)?;
                    critical.attach_run(&run);
                    let early_interval = critical.early_interval(EARLY_INTERVALS);
                    Ok(ScalingEntry { sites: n, critical, early_interval })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scaling worker panicked")).collect()
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> =
        entries.iter().filter_map(|e| e.early_interval.map(|y| (e.sites as f64, y))).collect();
    let (slope, residual) = if points.len() >= 2 {
        let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * y, b + x * x));
        let s = sxy / sxx;
        let r = (points.iter().map(|(x, y)| ((y - s * x) / y).powi(2)).sum::<f64>() / points.len() as f64).sqrt();
        (Some(s), Some(r))
    } else {
        (None, None)
    };
    Ok(ScalingReport { entries, slope, residual })
}
