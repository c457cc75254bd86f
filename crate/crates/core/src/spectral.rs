//! Band structures, spectral winding numbers, characteristic-polynomial roots
//! and finite-chain spectra.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::linalg::{eigenvalues, inner, small_eig, EigOptions, Mat, SmallEig};
use crate::model::{check_symmetry, real_space_hamiltonian, BlochModel, Boundary, EndHops, SymmetryDescriptor};
use crate::real::{ComplexExt, Dd, Real};

type C64 = Complex<f64>;
type Vector<T> = Vec<Complex<T>>;

/// Eigenvector condition number beyond which a k-point is flagged.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Eigen-data at one momentum, ordered by band label.
#[derive(Clone, Debug)]
pub struct BandPoint<T> {
    pub energies: Vec<Complex<T>>,
    /// `dE/dk` per band.
    pub slopes: Vec<Complex<T>>,
    /// Unit-norm right eigenvectors.
    pub right: Vec<Vector<T>>,
    /// Left eigenvectors with `<left_m|right_n> = delta_mn`.
    pub left: Vec<Vector<T>>,
    pub condition: f64,
    pub degenerate: bool,
    pub defective: bool,
}

impl<T: Real> BandPoint<T> {
    pub fn unreliable(&self) -> bool {
        self.defective || !(self.condition < CONDITION_LIMIT)
    }

    fn to_f64(&self) -> BandPoint<f64> {
        let v = |x: &Vec<Complex<T>>| x.iter().map(|z| z.to_f64c()).collect::<Vec<_>>();
        BandPoint {
            energies: v(&self.energies),
            slopes: v(&self.slopes),
            right: self.right.iter().map(v).collect(),
            left: self.left.iter().map(v).collect(),
            condition: self.condition,
            degenerate: self.degenerate,
            defective: self.defective,
        }
    }
}

/// Per-k eigen-decomposition with continuous band labels.
#[derive(Clone, Debug)]
pub struct BandStructure<T> {
    grid: KGrid,
    ks: Vec<T>,
    points: Vec<BandPoint<T>>,
}

impl<T: Real> BandStructure<T> {
    pub fn grid(&self) -> KGrid {
        self.grid
    }

    pub fn ks(&self) -> &[T] {
        &self.ks
    }

    pub fn bands(&self) -> usize {
        self.points[0].energies.len()
    }

    pub fn point(&self, m: usize) -> &BandPoint<T> {
        &self.points[m]
    }

    pub fn energy(&self, m: usize, band: usize) -> Complex<T> {
        self.points[m].energies[band]
    }

    pub fn slope(&self, m: usize, band: usize) -> Complex<T> {
        self.points[m].slopes[band]
    }

    pub fn right(&self, m: usize, band: usize) -> &[Complex<T>] {
        &self.points[m].right[band]
    }

    pub fn left(&self, m: usize, band: usize) -> &[Complex<T>] {
        &self.points[m].left[band]
    }

    /// Indices of k-points whose eigenvectors are unreliable.
    pub fn unreliable(&self) -> Vec<usize> {
        (0..self.points.len()).filter(|&m| self.points[m].unreliable()).collect()
    }

    /// Band data at an arbitrary momentum, labelled consistently with the
    /// nearest grid point.
    pub fn evaluate(&self, model: &BlochModel, k: T) -> Result<BandPoint<T>> {
        let m = self.grid.nearest(k.to_f64());
        let reference = &self.points[m];
        point_at(model, k, Some((&reference.energies, &reference.right)))
    }

    pub fn to_f64(&self) -> BandStructure<f64> {
        BandStructure {
            grid: self.grid,
            ks: self.ks.iter().map(|k| k.to_f64()).collect(),
            points: self.points.iter().map(BandPoint::to_f64).collect(),
        }
    }

    /// Largest `|<left_m|right_n> - delta_mn|` over reliable points.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in self.points.iter().filter(|p| !p.unreliable()) {
            for (a, l) in p.left.iter().enumerate() {
                for (b, r) in p.right.iter().enumerate() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((inner(l, r).to_f64c() - C64::new(want, 0.0)).norm());
                }
            }
        }
        worst
    }
}

/// Diagonalizes `H(k)` on the grid and labels bands by eigenvector continuity.
///
/// Band 0 is the band with the largest imaginary energy at the
/// non-degenerate grid point nearest `k = pi/2`.
pub fn band_structure<T: Real>(model: &BlochModel, grid: KGrid) -> Result<BandStructure<T>> {
    let n = grid.len();
    let ks: Vec<T> = grid.points();
    let raw: Vec<SmallEig<T>> = ks
        .iter()
        .map(|&k| small_eig(&model.bloch_matrix(k)))
        .collect::<Result<_>>()?;

    let circ = |k: f64| {
        let d = (k - FRAC_PI_2).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let anchor = (0..n)
        .filter(|&m| !raw[m].degenerate.iter().any(|&d| d))
        .min_by(|&a, &b| circ(ks[a].to_f64()).partial_cmp(&circ(ks[b].to_f64())).unwrap())
        .ok_or_else(|| Error::InvalidModel("every grid point is degenerate".into()))?;

    let mut points: Vec<Option<BandPoint<T>>> = vec![None; n];
    points[anchor] = Some(point_at(model, ks[anchor], None)?);
    for m in anchor + 1..n {
        let prev = points[m - 1].as_ref().unwrap();
        let p = point_at(model, ks[m], Some((&prev.energies, &prev.right)))?;
        points[m] = Some(p);
    }
    for m in (0..anchor).rev() {
        let prev = points[m + 1].as_ref().unwrap();
        let p = point_at(model, ks[m], Some((&prev.energies, &prev.right)))?;
        points[m] = Some(p);
    }
    Ok(BandStructure { grid, ks, points: points.into_iter().map(Option::unwrap).collect() })
}

fn point_at<T: Real>(
    model: &BlochModel,
    k: T,
    reference: Option<(&Vec<Complex<T>>, &Vec<Vector<T>>)>,
) -> Result<BandPoint<T>> {
    let h = model.bloch_matrix(k);
    let eig = small_eig(&h)?;
    let q = eig.values.len();
    let degenerate = eig.degenerate.iter().any(|&d| d);
    let (energies, right) = match reference {
        None => anchor_order(&eig),
        Some((vals, vecs)) => track(vals, vecs, &eig),
    };

    let mut v = Mat::zeros(q, q);
    for (b, u) in right.iter().enumerate() {
        for i in 0..q {
            v[(i, b)] = u[i];
        }
    }
    let (left, condition) = match v.inverse() {
        Some(inv) => {
            let cond = v.frobenius().to_f64() * inv.frobenius().to_f64();
            let left: Vec<Vector<T>> = (0..q).map(|b| inv.row(b).iter().map(|z| z.conj()).collect()).collect();
            (left, cond)
        }
        None => (right.clone(), f64::INFINITY),
    };

    let dh = model.bloch_derivative(k);
    let mut point = BandPoint {
        slopes: vec![Complex::zero(); q],
        energies,
        right,
        left,
        condition,
        degenerate,
        defective: eig.defective,
    };
    if point.unreliable() {
        point.slopes = difference_slopes(model, k, &point.energies)?;
    } else {
        for b in 0..q {
            let hu = dh.matvec(&point.right[b]);
            point.slopes[b] = inner(&point.left[b], &hu);
        }
    }
    Ok(point)
}

// Centered difference with eigenvalue-proximity matching, used near
// exceptional points where Hellmann-Feynman is ill-conditioned.
fn difference_slopes<T: Real>(model: &BlochModel, k: T, energies: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let h = T::from_f64(1e-5);
    let plus = small_eig(&model.bloch_matrix(k + h))?.values;
    let minus = small_eig(&model.bloch_matrix(k - h))?.values;
    let nearest = |set: &[Complex<T>], e: Complex<T>| {
        *set.iter().min_by(|a, b| (**a - e).l1().partial_cmp(&(**b - e).l1()).unwrap()).unwrap()
    };
    Ok(energies
        .iter()
        .map(|&e| (nearest(&plus, e) - nearest(&minus, e)).unscale(h + h))
        .collect())
}

fn anchor_order<T: Real>(eig: &SmallEig<T>) -> (Vec<Complex<T>>, Vec<Vector<T>>) {
    let mut idx: Vec<usize> = (0..eig.values.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (eig.values[a], eig.values[b]);
        y.im.partial_cmp(&x.im).unwrap().then(y.re.partial_cmp(&x.re).unwrap())
    });
    let values = idx.iter().map(|&i| eig.values[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| {
            let mut v = eig.vectors[i].clone();
            let big = v.iter().fold(T::zero(), |m, z| m.max(z.modulus()));
            if let Some(z) = v.iter().find(|z| z.modulus() == big).copied() {
                let phase = z.conj().unscale(z.modulus());
                for x in v.iter_mut() {
                    *x = *x * phase;
                }
            }
            v
        })
        .collect();
    (values, vectors)
}

// Orthonormal basis of the eigenspace shared by the degenerate cluster of `i`.
fn cluster_basis<T: Real>(eig: &SmallEig<T>, i: usize) -> Vec<Vector<T>> {
    let tol = T::epsilon().sqrt() * eig.values.iter().fold(T::one(), |m, z| m.max(z.modulus()));
    let mut basis: Vec<Vector<T>> = Vec::new();
    for j in 0..eig.values.len() {
        if !eig.degenerate[j] || (eig.values[j] - eig.values[i]).modulus() >= tol {
            continue;
        }
        let mut v = eig.vectors[j].clone();
        for b in &basis {
            let c = inner(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x = *x - c * *y;
            }
        }
        if crate::linalg::normalize(&mut v) > T::from_f64(1e-8) {
            basis.push(v);
        }
    }
    basis
}

fn project<T: Real>(basis: &[Vector<T>], v: &[Complex<T>]) -> Vector<T> {
    let mut out = vec![Complex::zero(); v.len()];
    for b in basis {
        let c = inner(b, v);
        for (o, x) in out.iter_mut().zip(b) {
            *o = *o + c * *x;
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn track<T: Real>(
    prev_vals: &[Complex<T>],
    prev_vecs: &[Vector<T>],
    eig: &SmallEig<T>,
) -> (Vec<Complex<T>>, Vec<Vector<T>>) {
    let q = eig.values.len();
    if eig.defective {
        // Eigenvectors are incomplete; keep the previous frame.
        let vals = prev_vals
            .iter()
            .map(|&e| {
                *eig.values.iter().min_by(|a, b| (**a - e).l1().partial_cmp(&(**b - e).l1()).unwrap()).unwrap()
            })
            .collect();
        return (vals, prev_vecs.to_vec());
    }
    let bases: Vec<Option<Vec<Vector<T>>>> =
        (0..q).map(|i| eig.degenerate[i].then(|| cluster_basis(eig, i))).collect();
    let mut overlap = vec![vec![0.0f64; q]; q];
    let mut distance = vec![vec![0.0f64; q]; q];
    for a in 0..q {
        for b in 0..q {
            overlap[a][b] = match &bases[b] {
                Some(basis) => project(basis, &prev_vecs[a]).iter().map(|z| z.norm_sqr().to_f64()).sum::<f64>().sqrt(),
                None => inner(&prev_vecs[a], &eig.vectors[b]).modulus().to_f64(),
            };
            distance[a][b] = (prev_vals[a] - eig.values[b]).modulus().to_f64();
        }
    }
    let assignment: Vec<usize> = if q <= 6 {
        let mut best: Option<(f64, f64, Vec<usize>)> = None;
        for p in permutations(q) {
            let ov: f64 = (0..q).map(|a| overlap[a][p[a]]).sum();
            let d: f64 = (0..q).map(|a| distance[a][p[a]]).sum();
            let better = match &best {
                None => true,
                Some((bo, bd, _)) => ov > bo + 1e-9 || ((ov - bo).abs() <= 1e-9 && d < *bd),
            };
            if better {
                best = Some((ov, d, p));
            }
        }
        best.unwrap().2
    } else {
        let mut used = vec![false; q];
        (0..q)
            .map(|a| {
                let b = (0..q)
                    .filter(|&b| !used[b])
                    .max_by(|&x, &y| {
                        overlap[a][x]
                            .partial_cmp(&overlap[a][y])
                            .unwrap()
                            .then(distance[a][y].partial_cmp(&distance[a][x]).unwrap())
                    })
                    .unwrap();
                used[b] = true;
                b
            })
            .collect()
    };
    let mut vals = Vec::with_capacity(q);
    let mut vecs = Vec::with_capacity(q);
    for a in 0..q {
        let b = assignment[a];
        vals.push(eig.values[b]);
        let mut v = match &bases[b] {
            Some(basis) => {
                let mut p = project(basis, &prev_vecs[a]);
                if crate::linalg::normalize(&mut p) > T::from_f64(1e-8) {
                    p
                } else {
                    eig.vectors[b].clone()
                }
            }
            None => eig.vectors[b].clone(),
        };
        let c = inner(&prev_vecs[a], &v);
        let cm = c.modulus();
        if cm > T::zero() {
            let phase = c.conj().unscale(cm);
            for x in v.iter_mut() {
                *x = *x * phase;
            }
        }
        vecs.push(v);
    }
    (vals, vecs)
}

/// Closed-form bands of the symplectic Hatano-Nelson chain,
/// `2 t_h cos k +/- 2 i sqrt(g^2 - delta^2) sin k`.
pub fn symplectic_hn_bands(params: crate::model::ModelParams, k: f64) -> [C64; 2] {
    let re = 2.0 * params.t_h * k.cos();
    let im = 2.0 * (params.g * params.g - params.delta * params.delta).sqrt() * k.sin();
    [C64::new(re, im), C64::new(re, -im)]
}

/// Outcome of a spectral winding computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingResult {
    pub reference: C64,
    pub winding: i64,
    /// Smallest `|f(k)|` along the sampled contour.
    pub phase_margin: f64,
    /// Contour samples used after refinement.
    pub samples: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct WindingOptions {
    pub nk: usize,
    pub margin_threshold: f64,
    pub max_samples: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions { nk: 256, margin_threshold: 1e-8, max_samples: 1 << 16 }
    }
}

/// Counts the windings of `f` around the origin along `k in [0, 2 pi]`,
/// doubling the sample count until every phase step is below `pi/2`.
pub fn contour_winding(
    reference: C64,
    opts: WindingOptions,
    refine: bool,
    mut f: impl FnMut(f64) -> Result<C64>,
) -> Result<WindingResult> {
    let mut n = opts.nk.max(4);
    loop {
        let vals: Vec<C64> = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect::<Result<_>>()?;
        let margin = vals.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if !(margin > opts.margin_threshold) {
            return Err(Error::ContourDegenerate { re: reference.re, im: reference.im, margin });
        }
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for j in 0..n {
            let step = (vals[(j + 1) % n] / vals[j]).arg();
            worst = worst.max(step.abs());
            total += step;
        }
        if worst < FRAC_PI_2 {
            let w = total / TAU;
            let rounded = w.round();
            if (w - rounded).abs() >= 0.01 {
                return Err(Error::CoarseGrid { step: worst });
            }
            return Ok(WindingResult { reference, winding: rounded as i64, phase_margin: margin, samples: n });
        }
        if !refine || n * 2 > opts.max_samples {
            return Err(Error::CoarseGrid { step: worst });
        }
        n *= 2;
    }
}

/// Winding of `det[H(k) - eps0]` over one Brillouin zone.
pub fn winding_number(model: &BlochModel, eps0: C64, nk: usize) -> Result<WindingResult> {
    winding_number_with(model, eps0, WindingOptions { nk, ..Default::default() })
}

pub fn winding_number_with(model: &BlochModel, eps0: C64, opts: WindingOptions) -> Result<WindingResult> {
    contour_winding(eps0, opts, true, |k| Ok(model.bloch_matrix(k).shifted(eps0).det()))
}

/// Winding of a single labelled band around `eps0`, on the band grid.
pub fn per_band_winding(bands: &BandStructure<f64>, band: usize, eps0: C64) -> Result<i64> {
    let n = bands.grid().len();
    let opts = WindingOptions { nk: n, ..Default::default() };
    contour_winding(eps0, opts, false, |k| {
        let m = ((k / TAU) * n as f64).round() as usize % n;
        Ok(bands.energy(m, band) - eps0)
    })
    .map(|r| r.winding)
}

/// Band winding on an adaptively refined contour, evaluating the band
/// off-grid through [`BandStructure::evaluate`].
pub fn band_winding_refined(
    model: &BlochModel,
    bands: &BandStructure<f64>,
    band: usize,
    eps0: C64,
) -> Result<WindingResult> {
    let opts = WindingOptions { nk: bands.grid().len(), ..Default::default() };
    let start = bands.grid().window().start::<f64>();
    contour_winding(eps0, opts, true, |k| Ok(bands.evaluate(model, start + k)?.energies[band] - eps0))
}

/// Root data of `z^p det[H(z) - eps0]`.
#[derive(Clone, Debug)]
pub struct GbzReport {
    pub reference: C64,
    /// Pole order `p` at `z = 0`.
    pub pole_order: usize,
    /// Polynomial coefficients in ascending powers of `z`.
    pub coefficients: Vec<C64>,
    /// Roots sorted by ascending modulus.
    pub roots: Vec<C64>,
    /// `|z_{p+1}| - |z_p|`.
    pub ordinary_gap: f64,
    pub symplectic_pair: Option<PairCheck>,
    /// `max_i min_j |z_i z_j - 1|`: closure of the root set under `z -> 1/z`.
    pub reciprocal_defect: f64,
    pub inside: usize,
    pub on_circle: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCheck {
    /// `|z_p| - |z_{p-1}|`.
    pub lower_gap: f64,
    /// `|z_{p+2}| - |z_{p+1}|`.
    pub upper_gap: f64,
}

impl PairCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower_gap.abs() <= tol && self.upper_gap.abs() <= tol
    }
}

impl GbzReport {
    /// Winding implied by the argument principle: zeros inside minus poles.
    /// `None` when a root lies on the unit circle.
    pub fn winding_from_roots(&self) -> Option<i64> {
        (self.on_circle == 0).then(|| self.inside as i64 - self.pole_order as i64)
    }

    /// Product of roots against `(-1)^D c_0 / c_D`.
    pub fn vieta_defect(&self) -> f64 {
        let d = self.coefficients.len() - 1;
        let prod: C64 = self.roots.iter().product();
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        let want = self.coefficients[0] / self.coefficients[d] * sign;
        (prod - want).norm() / want.norm().max(1.0)
    }
}

pub const ON_CIRCLE_TOL: f64 = 1e-8;

pub fn char_poly_roots(model: &BlochModel, eps0: C64) -> Result<GbzReport> {
    let q = model.dim() as i64;
    let (lo, hi) = model.offset_span();
    let low = q * lo.min(0) as i64;
    let high = q * hi.max(0) as i64;
    let degree = (high - low) as usize;
    if degree == 0 {
        return Err(Error::DegeneratePolynomial("no momentum dependence".into()));
    }
    // Sample z^{-low} det[H(z) - eps0] on the unit circle and invert the DFT.
    let samples = degree + 1;
    let vals: Vec<C64> = (0..samples)
        .map(|j| {
            let theta = TAU * j as f64 / samples as f64;
            let z = C64::from_polar(1.0, theta);
            model.bloch_matrix(theta).shifted(eps0).det() * z.powi((-low) as i32)
        })
        .collect();
    let mut coeffs: Vec<C64> = (0..samples)
        .map(|m| {
            let s: C64 = (0..samples)
                .map(|j| vals[j] * C64::from_polar(1.0, -TAU * (j * m) as f64 / samples as f64))
                .sum();
            s / samples as f64
        })
        .collect();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegeneratePolynomial("determinant vanishes identically".into()));
    }
    let tiny = 1e-13 * scale;
    let mut shift = 0usize;
    while coeffs.first().is_some_and(|c| c.norm() <= tiny) {
        coeffs.remove(0);
        shift += 1;
    }
    while coeffs.last().is_some_and(|c| c.norm() <= tiny) {
        coeffs.pop();
    }
    for c in coeffs.iter_mut() {
        if c.norm() <= tiny {
            *c = C64::zero();
        }
    }
    let pole_order = (-low - shift as i64).max(0) as usize;
    if coeffs.len() < 2 {
        return Err(Error::DegeneratePolynomial("constant after reduction".into()));
    }
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let mut comp = Mat::<Dd>::zeros(d, d);
    for j in 0..d {
        comp[(0, j)] = Complex::<Dd>::from_f64c(-coeffs[d - 1 - j] / lead);
    }
    for i in 1..d {
        comp[(i, i - 1)] = Complex::one();
    }
    let mut roots: Vec<C64> = eigenvalues(&comp, EigOptions::default())?.iter().map(|z| z.to_f64c()).collect();
    roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap().then(a.arg().partial_cmp(&b.arg()).unwrap()));

    let p = pole_order;
    let ordinary_gap = if p >= 1 && p < roots.len() { roots[p].norm() - roots[p - 1].norm() } else { f64::NAN };
    let atrs = model.dim() == 2 && {
        let ks: Vec<f64> = (0..16).map(|i| TAU * i as f64 / 16.0 + 0.1).collect();
        check_symmetry(model, &SymmetryDescriptor::sigma_y_atrs(), &ks)?.max_deviation < 1e-10
    };
    let symplectic_pair = (atrs && p >= 2 && p + 1 < roots.len()).then(|| PairCheck {
        lower_gap: roots[p - 1].norm() - roots[p - 2].norm(),
        upper_gap: roots[p + 1].norm() - roots[p].norm(),
    });
    let reciprocal_defect = roots
        .iter()
        .map(|z| roots.iter().map(|w| (z * w - 1.0).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let on_circle = roots.iter().filter(|z| (z.norm() - 1.0).abs() <= ON_CIRCLE_TOL).count();
    let inside = roots.iter().filter(|z| z.norm() < 1.0 - ON_CIRCLE_TOL).count();
    Ok(GbzReport {
        reference: eps0,
        pole_order,
        coefficients: coeffs,
        roots,
        ordinary_gap,
        symplectic_pair,
        reciprocal_defect,
        inside,
        on_circle,
    })
}

/// Smallest chain accepted by the finite-chain spectra.
pub const MIN_CHAIN: usize = 20;

/// Eigenvalues of the finite chain in double-double precision.
///
/// Open chains of non-reciprocal models are exponentially non-normal, so a
/// double-precision eigensolve returns pseudospectral noise for `N >~ 60`.
pub fn chain_spectrum(model: &BlochModel, sites: usize, boundary: Boundary) -> Result<Vec<C64>> {
    if sites < MIN_CHAIN {
        return Err(Error::InvalidInput(format!("chain needs at least {MIN_CHAIN} sites, got {sites}")));
    }
    let h = real_space_hamiltonian::<Dd>(model, sites, boundary)?;
    let mut ev: Vec<C64> = eigenvalues(&h.matrix, EigOptions::default())?.iter().map(|z| z.to_f64c()).collect();
    ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    Ok(ev)
}

pub fn obc_spectrum(model: &BlochModel, sites: usize) -> Result<Vec<C64>> {
    chain_spectrum(model, sites, Boundary::Open)
}

pub fn pbc_spectrum(model: &BlochModel, sites: usize) -> Result<Vec<C64>> {
    chain_spectrum(model, sites, Boundary::Periodic)
}

pub fn winding_control_spectrum(model: &BlochModel, sites: usize, suppress: EndHops) -> Result<Vec<C64>> {
    chain_spectrum(model, sites, Boundary::WindingControl(suppress))
}

/// Values of one labelled band on its grid.
pub fn band_loop(bands: &BandStructure<f64>, band: usize) -> Vec<C64> {
    (0..bands.grid().len()).map(|m| bands.energy(m, band)).collect()
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let directed = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    directed(a, b).max(directed(b, a))
}

/// Windings seen just off an OBC eigenvalue, on either side of the curve.
#[derive(Clone, Debug)]
pub struct ObcProbe {
    pub energy: C64,
    /// Unit normal to the local OBC curve.
    pub normal: C64,
    /// Determinant and per-band windings at `energy + offset * normal`
    /// and `energy - offset * normal`; `None` where undefined.
    pub sides: [Vec<Option<i64>>; 2],
}

impl ObcProbe {
    pub fn adjacent_to_winding(&self) -> bool {
        self.sides.iter().any(|s| s.iter().any(|w| matches!(w, Some(x) if *x != 0)))
    }
}

/// Probes `count` OBC eigenvalues (deterministic stride) for an adjacent
/// nonzero-winding region.
pub fn probe_obc_windings(
    model: &BlochModel,
    obc: &[C64],
    bands: &BandStructure<f64>,
    count: usize,
    offset: f64,
) -> Result<Vec<ObcProbe>> {
    if obc.len() < 3 {
        return Err(Error::InvalidInput("need at least three OBC eigenvalues".into()));
    }
    let scale = obc.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let distinct = 1e-6 * scale;
    let stride = (obc.len() as f64 / count.max(1) as f64).max(1.0);
    let mut out = Vec::new();
    for i in 0..count.min(obc.len()) {
        let e = obc[((i as f64 * stride) as usize).min(obc.len() - 1)];
        let mut near: Vec<C64> = obc.iter().copied().filter(|z| (z - e).norm() > distinct).collect();
        near.sort_by(|a, b| (a - e).norm().partial_cmp(&(b - e).norm()).unwrap());
        let a = near[0];
        let b = near.iter().copied().find(|z| (z - a).norm() > distinct).unwrap_or(e);
        let tangent = if (b - a).norm() > distinct { b - a } else { a - e };
        let normal = C64::i() * tangent / tangent.norm();
        let mut sides: [Vec<Option<i64>>; 2] = [Vec::new(), Vec::new()];
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            let probe = e + normal * (sign * offset);
            sides[s].push(winding_number(model, probe, 256).ok().map(|r| r.winding));
            if model.dim() > 1 {
                for band in 0..bands.bands() {
                    sides[s].push(band_winding_refined(model, bands, band, probe).ok().map(|r| r.winding));
                }
            }
        }
        out.push(ObcProbe { energy: e, normal, sides });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Window;
    use crate::model::{build_ordinary_model, build_symplectic_hn, ModelParams};

    fn reference() -> BlochModel {
        build_symplectic_hn(ModelParams::REFERENCE)
    }

    #[test]
    fn dispersion_and_kramers() {
        let bands: BandStructure<f64> = band_structure(&reference(), KGrid::new(240, Window::ZeroTo2Pi).unwrap()).unwrap();
        for m in 0..240 {
            let k = bands.ks()[m];
            let want = symplectic_hn_bands(ModelParams::REFERENCE, k);
            assert!((bands.energy(m, 0) - want[0]).norm() < 1e-9, "k={k}");
            assert!((bands.energy(m, 1) - want[1]).norm() < 1e-9);
            assert!((bands.energy(m, 0) - bands.energy(m, 1).conj()).norm() < 1e-9);
            let mirror = (240 - m) % 240;
            assert!((bands.energy(m, 0) - bands.energy(mirror, 1)).norm() < 1e-9);
        }
        assert!((bands.energy(120, 0) - C64::new(-4.0, 0.0)).norm() < 1e-12);
        let e = bands.energy(60, 0);
        assert!((e - C64::new(0.0, 2.0 * 0.63f64.sqrt())).norm() < 1e-12);
        assert!(bands.biorthogonality_defect() < 1e-8);
        assert!(bands.unreliable().is_empty());
    }

    #[test]
    fn slopes_match_closed_form() {
        let bands: BandStructure<f64> = band_structure(&reference(), KGrid::new(240, Window::ZeroTo2Pi).unwrap()).unwrap();
        let gp = 0.63f64.sqrt();
        for m in 0..240 {
            let k = bands.ks()[m];
            let want = C64::new(-4.0 * k.sin(), 2.0 * gp * k.cos());
            assert!((bands.slope(m, 0) - want).norm() < 1e-10);
            assert!((bands.slope(m, 1) - want.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn double_double_band_structure() {
        let bands: BandStructure<Dd> = band_structure(&reference(), KGrid::new(64, Window::MinusPiToPi).unwrap()).unwrap();
        for m in 0..64 {
            let k = bands.ks()[m].to_f64();
            let e = bands.energy(m, 0).to_f64c();
            assert!((e - symplectic_hn_bands(ModelParams::REFERENCE, k)[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn evaluate_off_grid_keeps_labels() {
        let m = reference();
        let bands: BandStructure<f64> = band_structure(&m, KGrid::new(64, Window::ZeroTo2Pi).unwrap()).unwrap();
        for i in 0..50 {
            let k = 0.123 * i as f64;
            let p = bands.evaluate(&m, k).unwrap();
            let want = symplectic_hn_bands(ModelParams::REFERENCE, k);
            assert!((p.energies[0] - want[0]).norm() < 1e-10);
        }
    }

    #[test]
    fn windings() {
        let hn = reference();
        assert_eq!(winding_number(&hn, C64::zero(), 256).unwrap().winding, 0);
        let ord = build_ordinary_model();
        assert_eq!(winding_number(&ord, C64::new(3.0, 3.0), 256).unwrap().winding, 0);
        // The two loops sit on either side of the imaginary axis.
        assert_eq!(winding_number(&ord, C64::new(0.0, 1.0), 256).unwrap().winding, 0);
        let up = winding_number(&ord, C64::new(1.0, 0.0), 256).unwrap().winding;
        let down = winding_number(&ord, C64::new(-1.0, 0.0), 256).unwrap().winding;
        assert_eq!(up.abs(), 1);
        assert_eq!(up, -down);
        assert!(matches!(
            winding_number(&ord, C64::new(2.0, 0.0), 256),
            Err(Error::ContourDegenerate { .. })
        ));
    }

    #[test]
    fn per_band_windings_split() {
        let hn = reference();
        let bands: BandStructure<f64> = band_structure(&hn, KGrid::new(240, Window::ZeroTo2Pi).unwrap()).unwrap();
        let w0 = per_band_winding(&bands, 0, C64::zero()).unwrap();
        let w1 = per_band_winding(&bands, 1, C64::zero()).unwrap();
        assert_eq!((w0, w1), (1, -1));
        assert_eq!(per_band_winding(&bands, 0, C64::new(10.0, 0.0)).unwrap(), 0);
        let total = winding_number(&hn, C64::new(0.5, 0.3), 256).unwrap().winding;
        let sum = per_band_winding(&bands, 0, C64::new(0.5, 0.3)).unwrap()
            + per_band_winding(&bands, 1, C64::new(0.5, 0.3)).unwrap();
        assert_eq!(total, sum);
    }

    #[test]
    fn roots_pair_and_count() {
        let hn = reference();
        let r = char_poly_roots(&hn, C64::zero()).unwrap();
        assert_eq!(r.pole_order, 2);
        assert_eq!(r.roots.len(), 2 * r.pole_order);
        assert!(r.reciprocal_defect < 1e-6);
        assert!(r.symplectic_pair.unwrap().holds(1e-6));
        assert!(r.vieta_defect() < 1e-8);
        assert!((r.roots[0].norm() - 0.657).abs() < 1e-3);
        assert_eq!(r.winding_from_roots(), Some(0));

        let ord = build_ordinary_model();
        let out = char_poly_roots(&ord, C64::new(3.0, 3.0)).unwrap();
        assert_eq!(out.pole_order, 2);
        assert!(out.ordinary_gap > 0.0);
        assert!(out.symplectic_pair.is_none());
        assert_eq!(out.winding_from_roots(), Some(0));
        let inside = char_poly_roots(&ord, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(inside.winding_from_roots(), Some(winding_number(&ord, C64::new(1.0, 0.0), 256).unwrap().winding));
    }

    #[test]
    fn hermitian_obc_is_real() {
        let m = build_symplectic_hn(ModelParams { t_h: 2.0, g: 0.0, delta: 0.1 });
        let ev = obc_spectrum(&m, 24).unwrap();
        assert!(ev.iter().all(|z| z.im.abs() < 1e-8));
        assert!(obc_spectrum(&m, 10).is_err());
    }

    #[test]
    fn obc_of_symplectic_hn_is_real_segment() {
        let ev = obc_spectrum(&reference(), 40).unwrap();
        let gp2 = 0.63;
        let half_width = 2.0 * (4.0f64 - gp2).sqrt();
        assert_eq!(ev.len(), 80);
        for z in &ev {
            assert!(z.im.abs() < 1e-6, "{z}");
            assert!(z.re.abs() < half_width + 1e-6);
        }
    }

    #[test]
    fn hausdorff_basics() {
        let a = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let b = [C64::new(0.0, 0.0)];
        assert_eq!(hausdorff(&a, &b), 1.0);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }
}
