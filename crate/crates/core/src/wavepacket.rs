//! Gaussian skin-channel wavepackets under periodic boundary conditions.
//!
//! Evolution is spectral: each band component picks up `e^{-i E_b(k) t}`.
//! Amplitudes grow like `e^{E^I t}`, so every instant is assembled in the log
//! domain and renormalized.

use std::f64::consts::TAU;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::linalg::inner;
use crate::model::BlochModel;
use crate::real::{ComplexExt, Dd, Real};
use crate::spectral::{band_structure, BandStructure};

type C64 = Complex<f64>;

/// Channel index of the `+` band (largest `Im E` near `k = pi/2`).
pub const PLUS: usize = 0;
/// Channel index of the `-` band.
pub const MINUS: usize = 1;

/// Two-band Gaussian excitation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub k0_plus: f64,
    pub k0_minus: f64,
    pub n0_plus: f64,
    pub n0_minus: f64,
    /// Momentum width.
    pub sigma: f64,
    /// Separate width for the `-` band; defaults to `sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_minus: Option<f64>,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl GaussianSpec {
    /// Both bands excited at the same momentum and site with equal weight.
    pub fn symmetric(k0: f64, n0: f64, sigma: f64) -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        GaussianSpec {
            k0_plus: k0,
            k0_minus: k0,
            n0_plus: n0,
            n0_minus: n0,
            sigma,
            sigma_minus: None,
            c_plus: c,
            c_minus: c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k0_plus, self.k0_minus, self.n0_plus, self.n0_minus, self.sigma, self.c_plus, self.c_minus]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("wavepacket parameters must be finite".into()));
        }
        if !(self.sigma > 0.0) || self.sigma_minus.is_some_and(|s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("sigma must be positive".into()));
        }
        for c in [self.c_plus, self.c_minus] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidInput(format!("participation coefficient {c} outside [0, 1]")));
            }
        }
        if self.c_plus == 0.0 && self.c_minus == 0.0 {
            return Err(Error::InvalidInput("at least one participation coefficient must be nonzero".into()));
        }
        Ok(())
    }

    pub fn k0(&self, channel: usize) -> f64 {
        if channel == PLUS {
            self.k0_plus
        } else {
            self.k0_minus
        }
    }

    pub fn n0(&self, channel: usize) -> f64 {
        if channel == PLUS {
            self.n0_plus
        } else {
            self.n0_minus
        }
    }

    pub fn sigma(&self, channel: usize) -> f64 {
        if channel == PLUS {
            self.sigma
        } else {
            self.sigma_minus.unwrap_or(self.sigma)
        }
    }

    pub fn weight(&self, channel: usize) -> f64 {
        if channel == PLUS {
            self.c_plus
        } else {
            self.c_minus
        }
    }

    /// Periodized `exp[-(k-k0)^2 / 2 sigma^2 - i (k-k0) n0]`.
    ///
    /// For integer `n0` the phase is `2 pi`-periodic and the result is the
    /// exact periodization of the Gaussian, so every Brillouin-zone window
    /// sees the same function.
    pub fn envelope<T: Real>(&self, channel: usize, k: T) -> Complex<T> {
        let two_pi = T::pi() + T::pi();
        let mut d = k - T::from_f64(self.k0(channel));
        let turns = (d.to_f64() / TAU).round();
        d -= two_pi * T::from_f64(turns);
        let inv = T::one() / (T::from_f64(2.0) * T::from_f64(self.sigma(channel)).powi2());
        let mut mag = T::zero();
        for j in -2i32..=2 {
            let x = d + two_pi * T::from_f64(j as f64);
            mag += (-(x * x) * inv).exp();
        }
        let (s, c) = (d * T::from_f64(self.n0(channel))).sin_cos();
        Complex::new(c * mag, -s * mag)
    }
}

trait Square {
    fn powi2(self) -> Self;
}

impl<T: Real> Square for T {
    fn powi2(self) -> Self {
        self * self
    }
}

/// `A_ab(k,k) = conj(W_a C_a) W_b C_b <u_a|u_b>` on the grid.
#[derive(Clone, Debug)]
pub struct OverlapKernel {
    pub channels: usize,
    /// `values[m][a][b]`.
    pub values: Vec<Vec<Vec<C64>>>,
}

impl OverlapKernel {
    pub fn build(spec: &GaussianSpec, bands: &BandStructure<f64>, channels: usize) -> Self {
        let n = bands.grid().len();
        let values = (0..n)
            .map(|m| {
                let k = bands.ks()[m];
                let amp: Vec<C64> = (0..channels).map(|a| spec.envelope(a, k) * spec.weight(a)).collect();
                (0..channels)
                    .map(|a| {
                        (0..channels)
                            .map(|b| amp[a].conj() * amp[b] * inner(bands.right(m, a), bands.right(m, b)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        OverlapKernel { channels, values }
    }

    /// Largest `|A_ab - conj(A_ba)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in &self.values {
            for a in 0..self.channels {
                for b in 0..self.channels {
                    worst = worst.max((v[a][b] - v[b][a].conj()).norm());
                }
            }
        }
        worst
    }
}

/// Extended-precision band data and initial coefficients, used where
/// cancellation pushes results below the double-precision floor.
#[derive(Clone, Debug)]
pub struct PreciseSpectrum {
    /// `energies[m][b]`.
    pub energies: Vec<Vec<Complex<Dd>>>,
    /// `coefficients[m][b] = W_b(k_m) C_b`.
    pub coefficients: Vec<Vec<Complex<Dd>>>,
    /// `gram[m][a][b] = <u_a(k_m)|u_b(k_m)>`.
    pub gram: Vec<Vec<Vec<Complex<Dd>>>>,
}

impl PreciseSpectrum {
    /// Unnormalized band amplitudes `W C e^{-iEt}` scaled by `e^{-shift}`,
    /// where `shift` is the largest log-magnitude at this instant.
    pub fn amplitudes(&self, t: f64) -> Vec<Vec<Complex<Dd>>> {
        let td = Dd::new(t);
        let mut shift = f64::NEG_INFINITY;
        for (cs, es) in self.coefficients.iter().zip(&self.energies) {
            for (c, e) in cs.iter().zip(es) {
                let mag = c.modulus().to_f64();
                if mag > 0.0 {
                    shift = shift.max(mag.ln() + e.im.to_f64() * t);
                }
            }
        }
        let sd = Dd::new(if shift.is_finite() { shift } else { 0.0 });
        self.coefficients
            .iter()
            .zip(&self.energies)
            .map(|(cs, es)| {
                cs.iter()
                    .zip(es)
                    .map(|(c, e)| {
                        if c.is_zero() {
                            return Complex::zero();
                        }
                        let grow = (e.im * td - sd).exp();
                        let (s, co) = (e.re * td).sin_cos();
                        *c * Complex::new(co * grow, -s * grow)
                    })
                    .collect()
            })
            .collect()
    }

    /// `sum_k <psi_a(k)|psi_b(k)>` for two band-amplitude sets.
    pub fn overlap(&self, a: &[Vec<Complex<Dd>>], b: &[Vec<Complex<Dd>>]) -> Complex<Dd> {
        let mut acc = Complex::<Dd>::zero();
        for m in 0..a.len() {
            for (i, ai) in a[m].iter().enumerate() {
                if ai.is_zero() {
                    continue;
                }
                for (j, bj) in b[m].iter().enumerate() {
                    acc = acc + ai.conj() * *bj * self.gram[m][i][j];
                }
            }
        }
        acc
    }
}

/// Time series of a wavepacket evolution.
#[derive(Clone, Debug)]
pub struct WavepacketRun {
    pub grid: KGrid,
    pub dim: usize,
    pub channels: usize,
    pub spec: GaussianSpec,
    pub times: Vec<f64>,
    pub bands: BandStructure<f64>,
    pub precise: PreciseSpectrum,
    /// Per time, normalized band amplitudes `band_amps[t][b][m]`.
    pub band_amps: Vec<Vec<Vec<C64>>>,
    /// Per time, normalized momentum state, index `m * dim + component`.
    pub momentum: Vec<Vec<C64>>,
    /// Per time, normalized real-space state, index `n * dim + component`.
    pub real: Vec<Vec<C64>>,
    /// Log of the scale removed at each instant.
    pub log_scale: Vec<f64>,
    /// Per time and channel, separately normalized site densities.
    pub channel_density: Vec<Vec<Vec<f64>>>,
    /// Per time and channel, share of the total band weight.
    pub channel_weight: Vec<Vec<f64>>,
    pub kmax_numeric: Vec<Vec<f64>>,
    /// Unwrapped circular COM per channel (`None` where undefined).
    pub com_numeric: Vec<Vec<Option<f64>>>,
    pub com_total: Vec<Option<f64>>,
    pub com_analytic: Vec<Vec<f64>>,
    pub vg: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl WavepacketRun {
    pub fn sites(&self) -> usize {
        self.grid.len()
    }

    pub fn momentum_density(&self, ti: usize) -> Vec<f64> {
        density(&self.momentum[ti], self.dim)
    }

    pub fn real_density(&self, ti: usize) -> Vec<f64> {
        density(&self.real[ti], self.dim)
    }

    /// Per-band momentum density `|a_b(k)|^2` relative to the state norm.
    pub fn band_density(&self, ti: usize, channel: usize) -> Vec<f64> {
        self.band_amps[ti][channel].iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn is_active(&self, channel: usize) -> bool {
        channel < self.channels && self.spec.weight(channel) > 0.0
    }
}

fn density(state: &[C64], dim: usize) -> Vec<f64> {
    state.chunks(dim).map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect()
}

/// Inverse DFT per component: `psi(n) = N^{-1/2} sum_m e^{i k_m n} psi(k_m)`.
pub fn momentum_to_real(grid: KGrid, dim: usize, psi_k: &[C64]) -> Vec<C64> {
    transform(grid, dim, psi_k, true)
}

/// Forward DFT per component, the inverse of [`momentum_to_real`].
pub fn real_to_momentum(grid: KGrid, dim: usize, psi_n: &[C64]) -> Vec<C64> {
    transform(grid, dim, psi_n, false)
}

fn transform(grid: KGrid, dim: usize, input: &[C64], to_real: bool) -> Vec<C64> {
    let n = grid.len();
    assert_eq!(input.len(), n * dim);
    let start = grid.window().start::<f64>();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if to_real { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let norm = 1.0 / (n as f64).sqrt();
    let mut out = vec![C64::zero(); n * dim];
    let mut buf = vec![C64::zero(); n];
    for c in 0..dim {
        if to_real {
            for m in 0..n {
                buf[m] = input[m * dim + c];
            }
            fft.process(&mut buf);
            for site in 0..n {
                out[site * dim + c] = buf[site] * C64::from_polar(norm, start * site as f64);
            }
        } else {
            for site in 0..n {
                buf[site] = input[site * dim + c] * C64::from_polar(norm, -start * site as f64);
            }
            fft.process(&mut buf);
            for m in 0..n {
                out[m * dim + c] = buf[m];
            }
        }
    }
    out
}

/// Circular centre of mass `N arg(sum p_n e^{2 pi i n/N}) / 2 pi` in `[0, N)`.
/// `None` when the first Fourier moment vanishes.
pub fn circular_com(density: &[f64]) -> Option<f64> {
    let n = density.len() as f64;
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let moment: C64 = density
        .iter()
        .enumerate()
        .map(|(i, p)| C64::from_polar(*p, TAU * i as f64 / n))
        .sum();
    if moment.norm() <= 1e-9 * total {
        return None;
    }
    Some((moment.arg() / TAU * n).rem_euclid(n))
}

/// Continues ring positions across time by minimal displacement.
pub fn unwrap_ring(xs: &[Option<f64>], n: f64) -> Vec<Option<f64>> {
    let mut last: Option<f64> = None;
    xs.iter()
        .map(|x| {
            let x = (*x)?;
            let y = match last {
                None => x,
                Some(prev) => prev + centered_mod(x - prev, n),
            };
            last = Some(y);
            Some(y)
        })
        .collect()
}

/// `x` reduced to `[-n/2, n/2)`.
pub fn centered_mod(x: f64, n: f64) -> f64 {
    (x + n / 2.0).rem_euclid(n) - n / 2.0
}

/// Uniform samples `0, dt, ..., t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidInput("time grid needs dt > 0 and t_max >= 0".into()));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| i as f64 * dt).collect())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidInput("times must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("times must be strictly ascending".into()));
    }
    Ok(())
}

/// Initial momentum-space state `sum_b W_b C_b |u_b(k)>`, globally normalized.
pub fn initial_state(spec: &GaussianSpec, bands: &BandStructure<f64>) -> Result<Vec<C64>> {
    spec.validate()?;
    let channels = bands.bands().min(2);
    check_support(spec, bands, channels)?;
    let n = bands.grid().len();
    let dim = bands.right(0, 0).len();
    let mut psi = vec![C64::zero(); n * dim];
    for m in 0..n {
        let k = bands.ks()[m];
        for b in 0..channels {
            let a = spec.envelope(b, k) * spec.weight(b);
            for (c, u) in bands.right(m, b).iter().enumerate() {
                psi[m * dim + c] += a * u;
            }
        }
    }
    let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(psi.into_iter().map(|z| z / nrm).collect())
}

fn check_support(spec: &GaussianSpec, bands: &BandStructure<f64>, channels: usize) -> Result<()> {
    for m in bands.unreliable() {
        let k = bands.ks()[m];
        for b in 0..channels {
            if spec.weight(b) == 0.0 {
                continue;
            }
            let d = centered_mod(k - spec.k0(b), TAU).abs();
            if d <= 5.0 * spec.sigma(b) {
                return Err(Error::ExceptionalSupport { k });
            }
        }
    }
    Ok(())
}

/// Evolves the Gaussian excitation on the periodic chain.
pub fn evolve(model: &BlochModel, spec: &GaussianSpec, grid: KGrid, times: &[f64]) -> Result<WavepacketRun> {
    spec.validate()?;
    check_times(times)?;
    let bands_dd: BandStructure<Dd> = band_structure(model, grid)?;
    let bands = bands_dd.to_f64();
    let dim = model.dim();
    let channels = dim.min(2);
    let n = grid.len();
    let mut warnings = Vec::new();
    if channels == 1 && spec.c_minus != 0.0 {
        warnings.push("single-band model: the minus-channel excitation is ignored".to_string());
    }
    if spec.sigma_minus.is_some_and(|s| s != spec.sigma) {
        warnings.push("bands use different widths; the two channels will not evolve symmetrically".to_string());
    }
    for b in 0..channels {
        let n0 = spec.n0(b);
        if n0.fract() != 0.0 {
            warnings.push(format!("non-integer centre n0 = {n0}: the envelope depends on the Brillouin-zone window"));
        }
    }
    check_support(spec, &bands, channels)?;

    let precise = PreciseSpectrum {
        energies: (0..n).map(|m| (0..channels).map(|b| bands_dd.energy(m, b)).collect()).collect(),
        coefficients: (0..n)
            .map(|m| {
                let k = bands_dd.ks()[m];
                (0..channels)
                    .map(|b| {
                        let w = spec.weight(b);
                        if w == 0.0 {
                            Complex::zero()
                        } else {
                            spec.envelope(b, k) * Complex::new(Dd::new(w), Dd::ZERO)
                        }
                    })
                    .collect()
            })
            .collect(),
        gram: (0..n)
            .map(|m| {
                (0..channels)
                    .map(|a| (0..channels).map(|b| inner(bands_dd.right(m, a), bands_dd.right(m, b))).collect())
                    .collect()
            })
            .collect(),
    };
    let coeff: Vec<Vec<C64>> =
        (0..channels).map(|b| (0..n).map(|m| precise.coefficients[m][b].to_f64c()).collect()).collect();

    let mut run = WavepacketRun {
        grid,
        dim,
        channels,
        spec: spec.clone(),
        times: times.to_vec(),
        bands,
        precise,
        band_amps: Vec::with_capacity(times.len()),
        momentum: Vec::with_capacity(times.len()),
        real: Vec::with_capacity(times.len()),
        log_scale: Vec::with_capacity(times.len()),
        channel_density: Vec::with_capacity(times.len()),
        channel_weight: Vec::with_capacity(times.len()),
        kmax_numeric: Vec::with_capacity(times.len()),
        com_numeric: Vec::new(),
        com_total: Vec::new(),
        com_analytic: Vec::with_capacity(times.len()),
        vg: Vec::with_capacity(times.len()),
        warnings,
    };

    let mut raw_com: Vec<Vec<Option<f64>>> = vec![Vec::new(); channels];
    let mut raw_total = Vec::with_capacity(times.len());
    for &t in times {
        let bands = &run.bands;
        let mut shift = f64::NEG_INFINITY;
        for b in 0..channels {
            for m in 0..n {
                let mag = coeff[b][m].norm();
                if mag > 0.0 {
                    shift = shift.max(mag.ln() + bands.energy(m, b).im * t);
                }
            }
        }
        let mut amps: Vec<Vec<C64>> = (0..channels)
            .map(|b| {
                (0..n)
                    .map(|m| {
                        let c = coeff[b][m];
                        if c == C64::zero() {
                            return C64::zero();
                        }
                        let e = bands.energy(m, b);
                        c * C64::from_polar((e.im * t - shift).exp(), -e.re * t)
                    })
                    .collect()
            })
            .collect();
        let mut psi = vec![C64::zero(); n * dim];
        let mut parts: Vec<Vec<C64>> = vec![vec![C64::zero(); n * dim]; channels];
        for b in 0..channels {
            for m in 0..n {
                for (c, u) in bands.right(m, b).iter().enumerate() {
                    let v = amps[b][m] * u;
                    parts[b][m * dim + c] = v;
                    psi[m * dim + c] += v;
                }
            }
        }
        let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in psi.iter_mut() {
            *z /= nrm;
        }
        for a in amps.iter_mut() {
            for z in a.iter_mut() {
                *z /= nrm;
            }
        }
        let real = momentum_to_real(grid, dim, &psi);
        raw_total.push(circular_com(&density(&real, dim)));

        let mut dens = Vec::with_capacity(channels);
        let mut weights = Vec::with_capacity(channels);
        let mut kmax = Vec::with_capacity(channels);
        let mut vg = Vec::with_capacity(channels);
        let mut com_a = Vec::with_capacity(channels);
        for b in 0..channels {
            let part = momentum_to_real(grid, dim, &parts[b]);
            let mut d = density(&part, dim);
            let w: f64 = d.iter().sum();
            if w > 0.0 {
                d.iter_mut().for_each(|x| *x /= w);
            }
            raw_com[b].push(if w > 0.0 { circular_com(&d) } else { None });
            dens.push(d);
            weights.push(w);
            kmax.push(if w > 0.0 {
                let m = (0..n).max_by(|&x, &y| amps[b][x].norm().partial_cmp(&amps[b][y].norm()).unwrap()).unwrap();
                bands.ks()[m]
            } else {
                f64::NAN
            });
            let v = if spec.weight(b) > 0.0 { velocity(bands, &coeff[b], b, t) } else { f64::NAN };
            vg.push(v);
            com_a.push(spec.n0(b) + v * t);
        }
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);

        run.log_scale.push(shift + nrm.ln());
        run.band_amps.push(amps);
        run.momentum.push(psi);
        run.real.push(real);
        run.channel_density.push(dens);
        run.channel_weight.push(weights);
        run.kmax_numeric.push(kmax);
        run.vg.push(vg);
        run.com_analytic.push(com_a);
    }
    let nf = n as f64;
    let unwrapped: Vec<Vec<Option<f64>>> = raw_com.iter().map(|xs| unwrap_ring(xs, nf)).collect();
    run.com_numeric = (0..times.len()).map(|ti| (0..channels).map(|b| unwrapped[b][ti]).collect()).collect();
    run.com_total = unwrap_ring(&raw_total, nf);
    Ok(run)
}

// `sum A_bb E_R' e^{2 E_I t} / sum A_bb e^{2 E_I t}`, log-shifted.
fn velocity(bands: &BandStructure<f64>, coeff: &[C64], band: usize, t: f64) -> f64 {
    let n = coeff.len();
    let logs: Vec<f64> = (0..n)
        .map(|m| {
            let c = coeff[m].norm();
            if c > 0.0 {
                2.0 * (c.ln() + bands.energy(m, band).im * t)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for m in 0..n {
        let w = (logs[m] - top).exp();
        num += w * bands.slope(m, band).re;
        den += w;
    }
    num / den
}

/// Analytic COM velocity `V_g(t)` for one channel.
pub fn group_velocity(spec: &GaussianSpec, bands: &BandStructure<f64>, channel: usize, t: f64) -> f64 {
    let coeff: Vec<C64> = bands.ks().iter().map(|&k| spec.envelope(channel, k) * spec.weight(channel)).collect();
    velocity(bands, &coeff, channel, t)
}

/// Analytic COM `n0 + V_g(t) t`.
pub fn com_analytic(spec: &GaussianSpec, bands: &BandStructure<f64>, channel: usize, t: f64) -> f64 {
    spec.n0(channel) + group_velocity(spec, bands, channel, t) * t
}

/// Circular COM of one channel at one instant, unwrapped along the run.
pub fn com_numeric(run: &WavepacketRun, ti: usize, channel: Option<usize>) -> Result<f64> {
    let v = match channel {
        Some(b) => run.com_numeric[ti].get(b).copied().flatten(),
        None => run.com_total[ti],
    };
    v.ok_or(Error::EmptyChannel)
}

/// Options for the damped fixed-point solve of the peak momentum.
#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { damping: 0.5, tol: 1e-10, max_iter: 10_000 }
    }
}

fn imag_slope(model: &BlochModel, bands: &BandStructure<f64>, channel: usize, k: f64) -> Result<f64> {
    Ok(bands.evaluate(model, k)?.slopes[channel].im)
}

fn imag_curvature(model: &BlochModel, bands: &BandStructure<f64>, channel: usize, k: f64) -> Result<f64> {
    let h = 1e-4;
    Ok((imag_slope(model, bands, channel, k + h)? - imag_slope(model, bands, channel, k - h)?) / (2.0 * h))
}

/// Solves `k = k0 + sigma^2 t dE_I/dk (k)` starting from `start`.
///
/// The damping starts at `opts.damping` and halves whenever the residual
/// grows, which keeps the map contractive at large `sigma^2 t`.
pub fn kmax_selfconsistent(
    model: &BlochModel,
    bands: &BandStructure<f64>,
    spec: &GaussianSpec,
    channel: usize,
    t: f64,
    start: f64,
    opts: FixedPointOptions,
) -> Result<f64> {
    let k0 = spec.k0(channel);
    if t == 0.0 {
        return Ok(k0);
    }
    let s2t = spec.sigma(channel).powi(2) * t;
    let residual = |k: f64| -> Result<f64> { Ok(k0 + s2t * imag_slope(model, bands, channel, k)? - k) };
    let mut k = start;
    let mut r = residual(k)?;
    let mut alpha = opts.damping;
    for _ in 0..opts.max_iter {
        if r.abs() < opts.tol {
            return Ok(k);
        }
        let trial = k + alpha * r;
        let rt = residual(trial)?;
        if rt.abs() < r.abs() || alpha < 1e-12 {
            k = trial;
            r = rt;
            alpha = (alpha * 1.5).min(opts.damping);
        } else {
            alpha *= 0.5;
        }
    }
    Err(Error::FixedPointDiverged { t, last: k })
}

/// Peak momentum along a time series by continuation from `k0`.
pub fn kmax_trajectory(
    model: &BlochModel,
    bands: &BandStructure<f64>,
    spec: &GaussianSpec,
    channel: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    let opts = FixedPointOptions::default();
    let k0 = spec.k0(channel);
    let s2 = spec.sigma(channel).powi(2);
    let mut out = Vec::with_capacity(times.len());
    let mut k = k0;
    for &t in times {
        if t == 0.0 {
            out.push(k0);
            continue;
        }
        let stable = |x: f64| -> Result<bool> { Ok(1.0 - s2 * t * imag_curvature(model, bands, channel, x)? > 0.0) };
        k = match kmax_selfconsistent(model, bands, spec, channel, t, k, opts) {
            Ok(next) if stable(next)? => next,
            // Past a bifurcation, or where the map is too flat to contract:
            // move to the nearest stable branch, preferring lower momentum.
            _ => {
                let prev = k;
                kmax_branches(model, bands, spec, channel, t)?
                    .into_iter()
                    .map(|b| prev + centered_mod(b - prev, TAU))
                    .min_by(|a, b| {
                        let (da, db) = ((a - prev).abs(), (b - prev).abs());
                        if (da - db).abs() < 1e-9 {
                            a.partial_cmp(b).unwrap()
                        } else {
                            da.partial_cmp(&db).unwrap()
                        }
                    })
                    .ok_or(Error::FixedPointDiverged { t, last: prev })?
            }
        };
        out.push(k);
    }
    Ok(out)
}

/// Every stable solution of the peak-momentum equation at time `t`, found by
/// scanning the residual over `[k0 - pi, k0 + pi]`. Wrapped into the grid
/// window and sorted ascending.
pub fn kmax_branches(
    model: &BlochModel,
    bands: &BandStructure<f64>,
    spec: &GaussianSpec,
    channel: usize,
    t: f64,
) -> Result<Vec<f64>> {
    let k0 = spec.k0(channel);
    if t == 0.0 {
        return Ok(vec![k0]);
    }
    let s2t = spec.sigma(channel).powi(2) * t;
    let residual = |k: f64| -> Result<f64> { Ok(k0 + s2t * imag_slope(model, bands, channel, k)? - k) };
    let samples = 2048;
    let lo = k0 - std::f64::consts::PI;
    let step = TAU / samples as f64;
    let mut roots = Vec::new();
    let mut prev_k = lo;
    let mut prev_r = residual(lo)?;
    for i in 1..=samples {
        let k = lo + step * i as f64;
        let r = residual(k)?;
        // Stable roots are where the residual decreases through zero.
        if prev_r > 0.0 && r <= 0.0 {
            let (mut a, mut b) = (prev_k, k);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if residual(mid)? > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            let h = 1e-6;
            if residual(root + h)? < residual(root - h)? {
                roots.push(bands.grid().window().wrap(root));
            }
        }
        prev_k = k;
        prev_r = r;
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(roots)
}

/// Cross-term versus dominant-term magnitude per instant.
#[derive(Clone, Debug)]
pub struct SeparationReport {
    pub times: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Earliest time after which the ratio stays below the threshold.
    pub settled_at: Option<f64>,
    pub threshold: f64,
    /// Ratio never increases for `t > 1` (relative slack 1e-9).
    pub nonincreasing_after_1: bool,
}

pub fn channel_separation_check(run: &WavepacketRun) -> SeparationReport {
    let threshold = 1e-3;
    let n = run.sites();
    let mut ratio = Vec::with_capacity(run.times.len());
    let kernel = OverlapKernel::build(&run.spec, &run.bands, run.channels);
    for &t in &run.times {
        if run.channels < 2 || !run.is_active(MINUS) || !run.is_active(PLUS) {
            ratio.push(0.0);
            continue;
        }
        let mut log_cross = Vec::with_capacity(n);
        let mut log_dom = Vec::with_capacity(n);
        for m in 0..n {
            let ep = run.bands.energy(m, PLUS);
            let em = run.bands.energy(m, MINUS);
            let cross = kernel.values[m][PLUS][MINUS].norm();
            if cross > 0.0 {
                log_cross.push(cross.ln() + (ep.im + em.im) * t);
            }
            let dom = kernel.values[m][PLUS][PLUS].re;
            if dom > 0.0 {
                log_dom.push(dom.ln() + 2.0 * ep.im * t);
            }
        }
        ratio.push((log_sum_exp(&log_cross) - log_sum_exp(&log_dom)).exp());
    }
    let mut settled_at = None;
    for i in (0..ratio.len()).rev() {
        if ratio[i] < threshold {
            settled_at = Some(run.times[i]);
        } else {
            break;
        }
    }
    let nonincreasing_after_1 = run
        .times
        .windows(2)
        .zip(ratio.windows(2))
        .filter(|(t, _)| t[0] > 1.0)
        .all(|(_, r)| r[1] <= r[0] * (1.0 + 1e-9));
    SeparationReport { times: run.times.clone(), ratio, settled_at, threshold, nonincreasing_after_1 }
}

/// `ln sum e^{x_i}`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Window;
    use crate::model::{build_ordinary_model, build_symplectic_hn, ModelParams};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn reference() -> BlochModel {
        build_symplectic_hn(ModelParams::REFERENCE)
    }

    fn case1() -> GaussianSpec {
        GaussianSpec::symmetric(PI, 60.0, 0.4)
    }

    #[test]
    fn envelope_shape() {
        let s = case1();
        let peak = s.envelope(PLUS, PI).norm();
        let side = s.envelope(PLUS, PI + 0.4).norm();
        assert!((side / peak - (-0.5f64).exp()).abs() < 1e-12);
        // periodic for integer n0
        assert!((s.envelope(PLUS, 0.3) - s.envelope(PLUS, 0.3 + TAU)).norm() < 1e-12);
        let d: Complex<Dd> = s.envelope(PLUS, Dd::new(2.5));
        assert!((d.to_f64c() - s.envelope(PLUS, 2.5)).norm() < 1e-15);
    }

    #[test]
    fn single_band_limit_and_initial_state() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let mut s = case1();
        s.c_minus = 0.0;
        let run = evolve(&m, &s, grid, &[0.0, 1.0]).unwrap();
        assert!(run.band_amps[1][MINUS].iter().all(|z| *z == C64::zero()));
        let psi0 = initial_state(&s, &run.bands).unwrap();
        let diff: f64 = psi0.iter().zip(&run.momentum[0]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn normalization_and_round_trip() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let times = time_grid(30.0, 0.5).unwrap();
        let run = evolve(&m, &case1(), grid, &times).unwrap();
        for ti in 0..times.len() {
            let pk: f64 = run.momentum_density(ti).iter().sum();
            let px: f64 = run.real_density(ti).iter().sum();
            assert!((pk - 1.0).abs() < 1e-10 && (px - 1.0).abs() < 1e-10);
            let back = real_to_momentum(grid, 2, &run.real[ti]);
            let err = back.iter().zip(&run.momentum[ti]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn case1_peaks_migrate_to_imaginary_maxima() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let run = evolve(&m, &case1(), grid, &[0.0, 30.0]).unwrap();
        let kp = run.kmax_numeric[1][PLUS];
        let km = run.kmax_numeric[1][MINUS];
        assert!(kp > FRAC_PI_2 - 0.05 && kp < PI);
        assert!(km > PI && km < 3.0 * FRAC_PI_2 + 0.05);
    }

    #[test]
    fn fixed_point_hand_value() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let bands: BandStructure<f64> = band_structure(&m, grid).unwrap();
        let s = case1();
        let opts = FixedPointOptions::default();
        assert_eq!(kmax_selfconsistent(&m, &bands, &s, PLUS, 0.0, 1.0, opts).unwrap(), PI);
        let k = kmax_selfconsistent(&m, &bands, &s, PLUS, 1.0, PI, opts).unwrap();
        // dense residual scan
        let gp = 0.63f64.sqrt();
        let best = (0..1_000_000)
            .map(|i| 2.0 + 1.5 * i as f64 / 1e6)
            .min_by(|a, b| {
                let ra = (PI + 0.16 * 2.0 * gp * a.cos() - a).abs();
                let rb = (PI + 0.16 * 2.0 * gp * b.cos() - b).abs();
                ra.partial_cmp(&rb).unwrap()
            })
            .unwrap();
        assert!((k - best).abs() < 1e-5);
        assert!((k - 2.895).abs() < 1e-3);
        let late = kmax_trajectory(&m, &bands, &s, PLUS, &time_grid(400.0, 1.0).unwrap()).unwrap();
        assert!((late.last().unwrap() - FRAC_PI_2).abs() < 0.03);
    }

    #[test]
    fn branches_bifurcate_at_minimum() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let bands: BandStructure<f64> = band_structure(&m, grid).unwrap();
        let mut s = case1();
        s.k0_plus = 3.0 * FRAC_PI_2;
        assert_eq!(kmax_branches(&m, &bands, &s, PLUS, 2.0).unwrap().len(), 1);
        let two = kmax_branches(&m, &bands, &s, PLUS, 10.0).unwrap();
        assert_eq!(two.len(), 2);
        assert!(centered_mod(two[0] + two[1] - 2.0 * s.k0_plus, TAU).abs() < 1e-6);
        // the symmetric point is unstable past the bifurcation
        assert_eq!(kmax_branches(&m, &bands, &s, PLUS, 5.0).unwrap().len(), 2);
        let traj = kmax_trajectory(&m, &bands, &s, PLUS, &time_grid(10.0, 0.05).unwrap()).unwrap();
        let last = *traj.last().unwrap();
        assert!(last < s.k0_plus);
        assert!(two.iter().any(|b| centered_mod(b - last, TAU).abs() < 1e-8));
    }

    #[test]
    fn velocity_saturates() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let bands: BandStructure<f64> = band_structure(&m, grid).unwrap();
        let s = case1();
        assert_eq!(com_analytic(&s, &bands, PLUS, 0.0), 60.0);
        let v = group_velocity(&s, &bands, PLUS, 200.0);
        assert!((v.abs() - 4.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn circular_com_basics() {
        let mut d = vec![0.0; 40];
        d[7] = 1.0;
        assert!((circular_com(&d).unwrap() - 7.0).abs() < 1e-9);
        assert!(circular_com(&[0.25; 40]).is_none());
        let xs = [Some(38.0), Some(39.5), Some(0.5), None, Some(2.0)];
        let u = unwrap_ring(&xs, 40.0);
        assert_eq!(u[2], Some(40.5));
        assert_eq!(u[4], Some(42.0));
    }

    #[test]
    fn separation_ratio() {
        let m = reference();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let run = evolve(&m, &case1(), grid, &time_grid(10.0, 0.1).unwrap()).unwrap();
        let rep = channel_separation_check(&run);
        assert!(rep.ratio[0] > 0.05);
        assert!(rep.settled_at.unwrap() <= 5.0);
        assert!(rep.nonincreasing_after_1);
        let mut s = case1();
        s.c_minus = 0.0;
        let run = evolve(&m, &s, grid, &[0.0, 1.0]).unwrap();
        assert!(channel_separation_check(&run).ratio.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn kernel_is_hermitian() {
        let m = reference();
        let grid = KGrid::new(64, Window::ZeroTo2Pi).unwrap();
        let bands: BandStructure<f64> = band_structure(&m, grid).unwrap();
        assert!(OverlapKernel::build(&case1(), &bands, 2).hermiticity_defect() < 1e-15);
    }

    #[test]
    fn ordinary_single_channel() {
        let m = build_ordinary_model();
        let grid = KGrid::new(120, Window::ZeroTo2Pi).unwrap();
        let s = GaussianSpec {
            k0_plus: PI / 9.0,
            k0_minus: PI / 9.0,
            n0_plus: 60.0,
            n0_minus: 60.0,
            sigma: 0.4,
            sigma_minus: None,
            c_plus: 1.0,
            c_minus: 0.0,
        };
        let run = evolve(&m, &s, grid, &time_grid(5.0, 0.5).unwrap()).unwrap();
        assert_eq!(run.channels, 1);
        assert!(run.warnings.is_empty());
        assert!(run.com_numeric.iter().all(|c| c[0].is_some()));
    }

    #[test]
    fn bad_inputs() {
        let mut s = case1();
        s.sigma = 0.0;
        assert!(s.validate().is_err());
        let m = reference();
        let grid = KGrid::new(32, Window::ZeroTo2Pi).unwrap();
        assert!(evolve(&m, &case1(), grid, &[1.0]).is_err());
        assert!(evolve(&m, &case1(), grid, &[0.0, 2.0, 1.0]).is_err());
    }
}
