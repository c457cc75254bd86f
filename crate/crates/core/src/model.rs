//! Tight-binding models as matrix-valued Laurent polynomials in `e^{ik}`.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::{ComplexExt, Real};

type C64 = Complex<f64>;

/// Parameters of the symplectic Hatano-Nelson chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Symmetric hopping amplitude.
    pub t_h: f64,
    /// Gain/loss amplitude.
    pub g: f64,
    /// Inter-orbital coupling.
    #[serde(rename = "delta")]
    pub delta: f64,
}

impl ModelParams {
    pub const REFERENCE: ModelParams = ModelParams { t_h: 2.0, g: 0.8, delta: 0.1 };

    pub fn is_finite(&self) -> bool {
        self.t_h.is_finite() && self.g.is_finite() && self.delta.is_finite()
    }

    /// `|g| > |delta|`: the bands are complex-conjugate partners.
    pub fn is_broken(&self) -> bool {
        self.g.abs() > self.delta.abs()
    }

    /// Magnitude of the imaginary band splitting, `sqrt(g^2 - delta^2)`.
    pub fn splitting(&self) -> f64 {
        (self.g * self.g - self.delta * self.delta).abs().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    SymplecticHn(ModelParams),
    Ordinary,
    Custom,
}

/// `H(k) = sum_r H_r e^{ikr}` with `q x q` blocks `H_r`, `|r| <= l`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochModel {
    kind: ModelKind,
    dim: usize,
    range: usize,
    hoppings: BTreeMap<i32, Mat<f64>>,
}

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

impl BlochModel {
    /// Builds a model from explicit hopping blocks; zero blocks are dropped.
    pub fn from_hoppings(dim: usize, hoppings: BTreeMap<i32, Mat<f64>>, kind: ModelKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("internal dimension must be positive".into()));
        }
        let mut kept = BTreeMap::new();
        for (r, m) in hoppings {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.rows().max(m.cols()) });
            }
            if m.max_abs() > 0.0 {
                if (0..dim).any(|i| (0..dim).any(|j| !m[(i, j)].is_finite())) {
                    return Err(Error::InvalidModel(format!("non-finite hopping at offset {r}")));
                }
                kept.insert(r, m);
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidModel("all hopping blocks vanish".into()));
        }
        let range = kept.keys().map(|r| r.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(BlochModel { kind, dim, range, hoppings: kept })
    }

    /// Builds a model from `(offset, row, col, re, im)` entries.
    pub fn from_entries(dim: usize, entries: &[HoppingEntry]) -> Result<Self> {
        let mut blocks: BTreeMap<i32, Mat<f64>> = BTreeMap::new();
        for e in entries {
            if e.row >= dim || e.col >= dim {
                return Err(Error::InvalidModel(format!(
                    "entry ({}, {}) outside a {dim}x{dim} block",
                    e.row, e.col
                )));
            }
            let m = blocks.entry(e.offset).or_insert_with(|| Mat::zeros(dim, dim));
            m[(e.row, e.col)] += c(e.re, e.im);
        }
        Self::from_hoppings(dim, blocks, ModelKind::Custom)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Internal dimension `q`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hopping range `l`.
    pub fn range(&self) -> usize {
        self.range
    }

    pub fn hoppings(&self) -> &BTreeMap<i32, Mat<f64>> {
        &self.hoppings
    }

    pub fn hopping(&self, r: i32) -> Option<&Mat<f64>> {
        self.hoppings.get(&r)
    }

    /// Smallest and largest offsets carrying a nonzero block.
    pub fn offset_span(&self) -> (i32, i32) {
        let lo = *self.hoppings.keys().next().unwrap();
        let hi = *self.hoppings.keys().next_back().unwrap();
        (lo, hi)
    }

    /// Flattened `(offset, row, col, re, im)` list.
    pub fn entries(&self) -> Vec<HoppingEntry> {
        let mut out = Vec::new();
        for (&r, m) in &self.hoppings {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let z = m[(i, j)];
                    if z != C64::zero() {
                        out.push(HoppingEntry { offset: r, row: i, col: j, re: z.re, im: z.im });
                    }
                }
            }
        }
        out
    }

    /// Adds `shift * I` to the on-site block.
    pub fn with_onsite_shift(&self, shift: C64) -> Result<Self> {
        let mut h = self.hoppings.clone();
        let m = h.entry(0).or_insert_with(|| Mat::zeros(self.dim, self.dim));
        *m = m.shifted(-shift);
        Self::from_hoppings(self.dim, h, ModelKind::Custom)
    }

    /// `H(z) = sum_r H_r z^r` for complex `z`.
    pub fn at_z<T: Real>(&self, z: Complex<T>) -> Mat<T> {
        let zinv = Complex::<T>::one() / z;
        let mut out = Mat::zeros(self.dim, self.dim);
        for (&r, m) in &self.hoppings {
            let mut p = Complex::<T>::one();
            let (base, e) = if r >= 0 { (z, r) } else { (zinv, -r) };
            for _ in 0..e {
                p = p * base;
            }
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out[(i, j)] = out[(i, j)] + Complex::<T>::from_f64c(m[(i, j)]) * p;
                }
            }
        }
        out
    }

    /// `H(k)`; exactly periodic in `2 pi` up to the accuracy of `sin_cos`.
    pub fn bloch_matrix<T: Real>(&self, k: T) -> Mat<T> {
        let mut out = Mat::zeros(self.dim, self.dim);
        for (&r, m) in &self.hoppings {
            let (s, co) = (k * T::from_f64(r as f64)).sin_cos();
            let phase = Complex::new(co, s);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out[(i, j)] = out[(i, j)] + Complex::<T>::from_f64c(m[(i, j)]) * phase;
                }
            }
        }
        out
    }

    /// `dH/dk = sum_r i r H_r e^{ikr}`.
    pub fn bloch_derivative<T: Real>(&self, k: T) -> Mat<T> {
        let mut out = Mat::zeros(self.dim, self.dim);
        for (&r, m) in &self.hoppings {
            if r == 0 {
                continue;
            }
            let rf = T::from_f64(r as f64);
            let (s, co) = (k * rf).sin_cos();
            let phase = Complex::new(-s * rf, co * rf);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out[(i, j)] = out[(i, j)] + Complex::<T>::from_f64c(m[(i, j)]) * phase;
                }
            }
        }
        out
    }

    /// Scalar value for single-band models.
    pub fn scalar(&self, k: f64) -> Option<C64> {
        (self.dim == 1).then(|| self.bloch_matrix(k)[(0, 0)])
    }

    /// `H(k)^dagger == H(k)` on every grid point to `tol`.
    pub fn is_hermitian_on(&self, ks: &[f64], tol: f64) -> bool {
        ks.iter().all(|&k| {
            let h = self.bloch_matrix(k);
            h.sub(&h.adjoint()).max_abs() <= tol
        })
    }
}

/// `H(k) = 2 t_h cos k - 2 (delta sigma_x + i g sigma_z) sin k`.
pub fn build_symplectic_hn(params: ModelParams) -> BlochModel {
    let ModelParams { t_h, g, delta } = params;
    // i * (delta sigma_x + i g sigma_z)
    let im = [[c(-g, 0.0), c(0.0, delta)], [c(0.0, delta), c(g, 0.0)]];
    let mut plus = Mat::zeros(2, 2);
    let mut minus = Mat::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let diag = if i == j { c(t_h, 0.0) } else { C64::zero() };
            plus[(i, j)] = diag + im[i][j];
            minus[(i, j)] = diag - im[i][j];
        }
    }
    let mut h = BTreeMap::new();
    h.insert(1, plus);
    h.insert(-1, minus);
    BlochModel::from_hoppings(2, h, ModelKind::SymplecticHn(params)).unwrap_or_else(|_| BlochModel {
        kind: ModelKind::SymplecticHn(params),
        dim: 2,
        range: 1,
        hoppings: BTreeMap::new(),
    })
}

/// `H(k) = 2 sin k - i sin 2k`.
pub fn build_ordinary_model() -> BlochModel {
    let mut h = BTreeMap::new();
    let one = |z: C64| Mat::from_rows(vec![vec![z]]);
    h.insert(1, one(c(0.0, -1.0)));
    h.insert(-1, one(c(0.0, 1.0)));
    h.insert(2, one(c(-0.5, 0.0)));
    h.insert(-2, one(c(0.5, 0.0)));
    BlochModel::from_hoppings(1, h, ModelKind::Ordinary).expect("nonzero blocks")
}

/// One hopping matrix element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoppingEntry {
    pub offset: i32,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

impl Serialize for HoppingEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.offset as f64, self.row as f64, self.col as f64, self.re, self.im).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HoppingEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v: Vec<f64> = Vec::deserialize(d)?;
        if v.len() != 5 {
            return Err(D::Error::custom("hopping entry must be [offset, row, col, re, im]"));
        }
        let int = |x: f64, what: &str| -> std::result::Result<i64, D::Error> {
            if x.fract() != 0.0 || !x.is_finite() {
                Err(D::Error::custom(format!("{what} must be an integer")))
            } else {
                Ok(x as i64)
            }
        };
        let offset = int(v[0], "offset")?;
        let row = int(v[1], "row")?;
        let col = int(v[2], "col")?;
        if row < 0 || col < 0 {
            return Err(D::Error::custom("row and col must be non-negative"));
        }
        Ok(HoppingEntry { offset: offset as i32, row: row as usize, col: col as usize, re: v[3], im: v[4] })
    }
}

/// Boundary conditions for the finite chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Open,
    /// Periodic, with the wrap-around hops of one direction removed.
    WindingControl(EndHops),
}

/// Direction of the wrap-around hops removed under [`Boundary::WindingControl`].
///
/// With `H[n, n + r] = H_r`, a positive offset moves amplitude from site
/// `n + r` to site `n`, i.e. leftwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndHops {
    Leftward,
    Rightward,
}

/// Finite-chain Hamiltonian of `N` cells with `q` orbitals each.
#[derive(Clone, Debug)]
pub struct RealSpaceHamiltonian<T> {
    pub sites: usize,
    pub dim: usize,
    pub boundary: Boundary,
    pub matrix: Mat<T>,
}

/// Assembles the `(Nq) x (Nq)` matrix with `H[n, n + r] = H_r`.
pub fn real_space_hamiltonian<T: Real>(
    model: &BlochModel,
    sites: usize,
    boundary: Boundary,
) -> Result<RealSpaceHamiltonian<T>> {
    let l = model.range();
    if sites <= 2 * l {
        return Err(Error::TooFewSites { n: sites, range: l, min: 2 * l });
    }
    let q = model.dim();
    let n = sites as i64;
    let mut m = Mat::zeros(sites * q, sites * q);
    for (&r, block) in model.hoppings() {
        for site in 0..n {
            let target = site + r as i64;
            let wraps = !(0..n).contains(&target);
            let keep = match boundary {
                Boundary::Periodic => true,
                Boundary::Open => !wraps,
                Boundary::WindingControl(EndHops::Leftward) => !(wraps && r > 0),
                Boundary::WindingControl(EndHops::Rightward) => !(wraps && r < 0),
            };
            if !keep {
                continue;
            }
            let col = target.rem_euclid(n) as usize;
            let row = site as usize;
            for i in 0..q {
                for j in 0..q {
                    let v = Complex::<T>::from_f64c(block[(i, j)]);
                    m[(row * q + i, col * q + j)] = m[(row * q + i, col * q + j)] + v;
                }
            }
        }
    }
    Ok(RealSpaceHamiltonian { sites, dim: q, boundary, matrix: m })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    /// `T H(k)^T T^-1 = H(-k)` with `T T* = -1`.
    Atrs,
    /// `eta H(k)^dagger eta^-1 = H(k)`.
    PseudoHermiticity,
}

#[derive(Clone, Debug)]
pub struct SymmetryDescriptor {
    pub kind: SymmetryKind,
    pub operator: Mat<f64>,
}

impl SymmetryDescriptor {
    pub fn sigma_y_atrs() -> Self {
        SymmetryDescriptor { kind: SymmetryKind::Atrs, operator: pauli_y() }
    }

    pub fn sigma_x_pseudo() -> Self {
        SymmetryDescriptor { kind: SymmetryKind::PseudoHermiticity, operator: pauli_x() }
    }

    /// Deviation of the operator from its defining algebraic constraint.
    pub fn operator_defect(&self) -> f64 {
        let op = &self.operator;
        let n = op.rows();
        let id = Mat::<f64>::identity(n);
        let unitary = op.matmul(&op.adjoint()).sub(&id).max_abs();
        let constraint = match self.kind {
            SymmetryKind::Atrs => op.matmul(&op.conj()).add(&id).max_abs(),
            SymmetryKind::PseudoHermiticity => op.sub(&op.adjoint()).max_abs(),
        };
        unitary.max(constraint)
    }
}

pub fn pauli_x() -> Mat<f64> {
    Mat::from_rows(vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
}

pub fn pauli_y() -> Mat<f64> {
    Mat::from_rows(vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn pauli_z() -> Mat<f64> {
    Mat::from_rows(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    /// Largest entry-wise deviation over the grid.
    pub max_deviation: f64,
    /// Grid point where it occurs.
    pub worst_k: f64,
}

pub fn check_symmetry(model: &BlochModel, sym: &SymmetryDescriptor, ks: &[f64]) -> Result<SymmetryReport> {
    let q = model.dim();
    if !sym.operator.is_square() || sym.operator.rows() != q {
        return Err(Error::DimensionMismatch { expected: q, got: sym.operator.rows() });
    }
    let op = &sym.operator;
    let op_inv = op.inverse().ok_or_else(|| Error::InvalidInput("symmetry operator is singular".into()))?;
    let mut report = SymmetryReport { max_deviation: 0.0, worst_k: ks.first().copied().unwrap_or(0.0) };
    for &k in ks {
        let h = model.bloch_matrix(k);
        let dev = match sym.kind {
            SymmetryKind::Atrs => op.matmul(&h.transpose()).matmul(&op_inv).sub(&model.bloch_matrix(-k)),
            SymmetryKind::PseudoHermiticity => op.matmul(&h.adjoint()).matmul(&op_inv).sub(&h),
        }
        .max_abs();
        if dev > report.max_deviation {
            report = SymmetryReport { max_deviation: dev, worst_k: k };
        }
    }
    Ok(report)
}

/// Model selection as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    SymplecticHn {
        #[serde(default = "default_t_h")]
        t_h: f64,
        #[serde(default = "default_g")]
        g: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Ordinary,
    Custom {
        dim: usize,
        hoppings: Vec<HoppingEntry>,
    },
}

fn default_t_h() -> f64 {
    ModelParams::REFERENCE.t_h
}
fn default_g() -> f64 {
    ModelParams::REFERENCE.g
}
fn default_delta() -> f64 {
    ModelParams::REFERENCE.delta
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::reference()
    }
}

impl ModelSpec {
    pub fn reference() -> Self {
        let p = ModelParams::REFERENCE;
        ModelSpec::SymplecticHn { t_h: p.t_h, g: p.g, delta: p.delta }
    }

    pub fn build(&self) -> Result<BlochModel> {
        match self {
            ModelSpec::SymplecticHn { t_h, g, delta } => {
                let p = ModelParams { t_h: *t_h, g: *g, delta: *delta };
                if !p.is_finite() {
                    return Err(Error::InvalidModel("parameters must be finite".into()));
                }
                let m = build_symplectic_hn(p);
                if m.hoppings().is_empty() {
                    return Err(Error::InvalidModel("all hopping blocks vanish".into()));
                }
                Ok(m)
            }
            ModelSpec::Ordinary => Ok(build_ordinary_model()),
            ModelSpec::Custom { dim, hoppings } => BlochModel::from_entries(*dim, hoppings),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, EigOptions};
    use std::f64::consts::PI;

    fn reference() -> BlochModel {
        build_symplectic_hn(ModelParams::REFERENCE)
    }

    #[test]
    fn symplectic_hn_hand_values() {
        let m = reference();
        let h0 = m.bloch_matrix(0.0);
        assert!(h0.sub(&Mat::identity(2).scale(c(4.0, 0.0))).max_abs() < 1e-15);
        let h = m.bloch_matrix(PI / 2.0);
        let want = Mat::from_rows(vec![vec![c(0.0, -1.6), c(-0.2, 0.0)], vec![c(-0.2, 0.0), c(0.0, 1.6)]]);
        assert!(h.sub(&want).max_abs() < 1e-14);
        let hpi = m.bloch_matrix(PI);
        assert!(hpi.sub(&Mat::identity(2).scale(c(-4.0, 0.0))).max_abs() < 1e-14);
    }

    #[test]
    fn symplectic_hn_matches_pauli_form() {
        let m = reference();
        let (sx, sz) = (pauli_x(), pauli_z());
        for i in 0..37 {
            let k = -3.0 + 0.17 * i as f64;
            let direct = Mat::identity(2)
                .scale(c(4.0 * k.cos(), 0.0))
                .sub(&sx.scale(c(0.2 * k.sin(), 0.0)))
                .sub(&sz.scale(c(0.0, 1.6 * k.sin())));
            assert!(m.bloch_matrix(k).sub(&direct).max_abs() < 1e-13);
        }
    }

    #[test]
    fn ordinary_hand_values() {
        let m = build_ordinary_model();
        assert!(m.scalar(0.0).unwrap().norm() < 1e-15);
        assert!(m.scalar(PI).unwrap().norm() < 1e-14);
        assert!((m.scalar(PI / 2.0).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
        let z = m.scalar(PI / 9.0).unwrap();
        assert!((z - c(0.6840, -0.6428)).norm() < 1e-4);
        assert!((z - c(2.0 * (PI / 9.0).sin(), -(2.0 * PI / 9.0).sin())).norm() < 1e-14);
    }

    #[test]
    fn periodicity() {
        for m in [reference(), build_ordinary_model()] {
            for i in 0..20 {
                let k = 0.31 * i as f64;
                assert!(m.bloch_matrix(k).sub(&m.bloch_matrix(k + 2.0 * PI)).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let m = build_ordinary_model();
        let h = 1e-6;
        for i in 0..10 {
            let k = 0.6 * i as f64;
            let fd = m.bloch_matrix(k + h).sub(&m.bloch_matrix(k - h)).scale(c(0.5 / h, 0.0));
            assert!(fd.sub(&m.bloch_derivative(k)).max_abs() < 1e-8);
        }
    }

    #[test]
    fn at_z_on_unit_circle_is_bloch_matrix() {
        let m = reference();
        let k: f64 = 0.7;
        let z = c(k.cos(), k.sin());
        assert!(m.at_z(z).sub(&m.bloch_matrix(k)).max_abs() < 1e-14);
    }

    #[test]
    fn boundary_structure() {
        let m = build_ordinary_model();
        let obc = real_space_hamiltonian::<f64>(&m, 10, Boundary::Open).unwrap().matrix;
        for i in 0..10 {
            for j in 0..10 {
                if (i as i64 - j as i64).abs() > 2 {
                    assert_eq!(obc[(i, j)], C64::zero());
                }
            }
        }
        let hn = reference();
        let pbc = real_space_hamiltonian::<f64>(&hn, 8, Boundary::Periodic).unwrap().matrix;
        let left = real_space_hamiltonian::<f64>(&hn, 8, Boundary::WindingControl(EndHops::Leftward)).unwrap().matrix;
        let right =
            real_space_hamiltonian::<f64>(&hn, 8, Boundary::WindingControl(EndHops::Rightward)).unwrap().matrix;
        // Leftward wrap: last cell row, first cell column (offset +1).
        let plus = hn.hopping(1).unwrap();
        let minus = hn.hopping(-1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(left[(14 + i, j)], C64::zero());
                assert_eq!(left[(i, 14 + j)], minus[(i, j)]);
                assert_eq!(right[(i, 14 + j)], C64::zero());
                assert_eq!(right[(14 + i, j)], plus[(i, j)]);
            }
        }
        let diff = pbc.sub(&left);
        let nonzero = (0..16).flat_map(|i| (0..16).map(move |j| (i, j))).filter(|&p| diff[p] != C64::zero()).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn too_few_sites() {
        let m = build_ordinary_model();
        assert!(matches!(
            real_space_hamiltonian::<f64>(&m, 4, Boundary::Open),
            Err(Error::TooFewSites { .. })
        ));
    }

    #[test]
    fn pbc_spectrum_is_union_of_bloch_spectra() {
        let m = reference();
        let n = 24;
        let h = real_space_hamiltonian::<f64>(&m, n, Boundary::Periodic).unwrap();
        let mut got = eigenvalues(&h.matrix, EigOptions::default()).unwrap();
        let mut want = Vec::new();
        for j in 0..n {
            let k = 2.0 * PI * j as f64 / n as f64;
            want.extend(eigenvalues(&m.bloch_matrix(k), EigOptions::default()).unwrap());
        }
        let key = |a: &C64, b: &C64| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap());
        got.sort_by(key);
        want.sort_by(key);
        // Pair greedily to be robust to near-ties in the sort key.
        for w in &want {
            let best = got.iter().map(|g| (g - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9);
        }
    }

    #[test]
    fn symmetry_checks() {
        let m = reference();
        let ks: Vec<f64> = (0..64).map(|i| 2.0 * PI * i as f64 / 64.0).collect();
        assert!(check_symmetry(&m, &SymmetryDescriptor::sigma_y_atrs(), &ks).unwrap().max_deviation < 1e-12);
        assert!(check_symmetry(&m, &SymmetryDescriptor::sigma_x_pseudo(), &ks).unwrap().max_deviation < 1e-12);
        assert!(SymmetryDescriptor::sigma_y_atrs().operator_defect() < 1e-15);
        assert!(SymmetryDescriptor::sigma_x_pseudo().operator_defect() < 1e-15);
        let ord = build_ordinary_model();
        assert!(matches!(
            check_symmetry(&ord, &SymmetryDescriptor::sigma_y_atrs(), &ks),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn atrs_negative_control() {
        // 0.3 sigma_y sin k is itself ATRS-even; 0.3 sigma_y cos k is not.
        let m = reference();
        let mut h = m.hoppings().clone();
        let sy = pauli_y();
        for r in [1, -1] {
            let add = sy.scale(c(0.15, 0.0));
            let b = h.get_mut(&r).unwrap();
            *b = b.add(&add);
        }
        let broken = BlochModel::from_hoppings(2, h, ModelKind::Custom).unwrap();
        let ks: Vec<f64> = (0..64).map(|i| 2.0 * PI * i as f64 / 64.0).collect();
        let k: f64 = 0.9;
        let direct = m.bloch_matrix(k).add(&sy.scale(c(0.3 * k.cos(), 0.0)));
        assert!(broken.bloch_matrix(k).sub(&direct).max_abs() < 1e-14);
        assert!(check_symmetry(&broken, &SymmetryDescriptor::sigma_y_atrs(), &ks).unwrap().max_deviation > 0.1);
    }

    #[test]
    fn hermitian_reduction() {
        let m = build_symplectic_hn(ModelParams { t_h: 2.0, g: 0.0, delta: 0.1 });
        let ks: Vec<f64> = (0..50).map(|i| 0.13 * i as f64).collect();
        assert!(m.is_hermitian_on(&ks, 1e-14));
        assert!(!reference().is_hermitian_on(&ks, 1e-3));
    }

    #[test]
    fn spec_round_trip_and_entries() {
        let s: ModelSpec = toml::from_str("name = \"custom\"\ndim = 1\nhoppings = [[1, 0, 0, 1.0, 0.0], [-1, 0, 0, 0.5, 0.0]]").unwrap();
        let m = s.build().unwrap();
        assert_eq!(m.range(), 1);
        let rebuilt = ModelSpec::Custom { dim: 1, hoppings: m.entries() }.build().unwrap();
        assert_eq!(rebuilt.hoppings(), m.hoppings());
        let text = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<ModelSpec>(&text).unwrap(), s);
        assert!(toml::from_str::<ModelSpec>("name = \"custom\"\ndim = 1\nhoppings = [[0.5, 0, 0, 1.0, 0.0]]").is_err());
    }
}
