//! Dense complex linear algebra generic over [`Real`].
//!
//! Only what the lattice code needs: Householder reduction to Hessenberg
//! form, a single-shift complex QR iteration for eigenvalues, Parlett-Reinsch
//! balancing, LU-based determinant and inverse, and forced-nullity null
//! spaces for eigenvectors of small blocks.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::real::{ComplexExt, Real};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn conj(&self) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| *z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-Complex::one()))
    }

    /// `self - shift * I`.
    pub fn shifted(&self, shift: Complex<T>) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] = m[(i, i)] - shift;
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.modulus()))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.to_f64c()).collect() }
    }

    pub fn from_f64(m: &Mat<f64>) -> Self {
        Mat { rows: m.rows, cols: m.cols, data: m.data.iter().map(|z| Complex::<T>::from_f64c(*z)).collect() }
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Complex<T> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Complex::<T>::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].l1().partial_cmp(&a[(j, k)].l1()).unwrap())
                .unwrap();
            if a[(p, k)].is_zero() {
                return Complex::zero();
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let piv = a[(k, k)];
            det = det * piv;
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    a[(i, j)] = a[(i, j)] - f * a[(k, j)];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].l1().partial_cmp(&a[(j, k)].l1()).unwrap())
                .unwrap();
            if a[(p, k)].is_zero() {
                return None;
            }
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let piv = a[(k, k)];
            for j in 0..n {
                a[(k, j)] = a[(k, j)] / piv;
                inv[(k, j)] = inv[(k, j)] / piv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] - f * a[(k, j)];
                    inv[(i, j)] = inv[(i, j)] - f * inv[(k, j)];
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable. Eigenvalues are unchanged (up to roundoff).
pub fn balance<T: Real>(a: &mut Mat<T>) {
    const RADIX: f64 = 2.0;
    let n = a.rows;
    for _sweep in 0..200 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1().to_f64();
                    r += a[(i, j)].l1().to_f64();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                let fi = T::from_f64(1.0 / f);
                let ff = T::from_f64(f);
                for j in 0..n {
                    let v = a[(i, j)];
                    a[(i, j)] = Complex::new(v.re * fi, v.im * fi);
                    let w = a[(j, i)];
                    a[(j, i)] = Complex::new(w.re * ff, w.im * ff);
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
pub fn hessenberg<T: Real>(a: &mut Mat<T>) {
    let n = a.rows;
    if n < 3 {
        return;
    }
    let mut v = vec![Complex::<T>::zero(); n];
    for k in 0..n - 2 {
        let norm = (k + 1..n).fold(T::zero(), |s, i| s + a[(i, k)].norm_sqr()).sqrt();
        if norm == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let x0abs = x0.modulus();
        let phase = if x0abs == T::zero() {
            Complex::one()
        } else {
            x0.unscale(x0abs)
        };
        let alpha = -phase.scale(norm);
        let mut vnorm2 = T::zero();
        for i in k + 1..n {
            v[i] = a[(i, k)];
            if i == k + 1 {
                v[i] = v[i] - alpha;
            }
            vnorm2 += v[i].norm_sqr();
        }
        if vnorm2 == T::zero() {
            continue;
        }
        let two_over = T::from_f64(2.0) / vnorm2;
        // H <- (I - 2 v v^H / |v|^2) H
        for j in k..n {
            let mut s = Complex::<T>::zero();
            for i in k + 1..n {
                s = s + v[i].conj() * a[(i, j)];
            }
            let s = s.scale(two_over);
            for i in k + 1..n {
                a[(i, j)] = a[(i, j)] - v[i] * s;
            }
        }
        // H <- H (I - 2 v v^H / |v|^2)
        for i in 0..n {
            let mut s = Complex::<T>::zero();
            for j in k + 1..n {
                s = s + a[(i, j)] * v[j];
            }
            let s = s.scale(two_over);
            for j in k + 1..n {
                a[(i, j)] = a[(i, j)] - s * v[j].conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex::zero();
        }
    }
}

/// Options for the dense eigenvalue routine.
#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    pub balance: bool,
    /// Iterations allowed per deflated eigenvalue.
    pub max_iter_per_eig: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { balance: true, max_iter_per_eig: 60 }
    }
}

/// All eigenvalues of a general complex matrix.
pub fn eigenvalues<T: Real>(a: &Mat<T>, opts: EigOptions) -> Result<Vec<Complex<T>>> {
    assert!(a.is_square());
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    if opts.balance {
        balance(&mut h);
    }
    hessenberg(&mut h);
    hessenberg_qr(&mut h, opts.max_iter_per_eig)
}

// Complex Givens rotation [[c, s], [-conj(s), c]] sending (x, y) to (r, 0).
#[inline]
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let ax = x.modulus();
    let ay = y.modulus();
    if ay == T::zero() {
        return (T::one(), Complex::zero());
    }
    if ax == T::zero() {
        return (T::zero(), y.conj().unscale(ay));
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = x.unscale(ax) * y.conj().unscale(r);
    (c, s)
}

fn hessenberg_qr<T: Real>(h: &mut Mat<T>, max_iter_per_eig: usize) -> Result<Vec<Complex<T>>> {
    let n = h.rows;
    let eps = T::epsilon();
    let mut eig = vec![Complex::<T>::zero(); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let mut rot: Vec<(T, Complex<T>)> = Vec::with_capacity(n);
    let norm_scale = h.max_abs();
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].l1();
            let mut diag = h[(l - 1, l - 1)].l1() + h[(l, l)].l1();
            if diag == T::zero() {
                diag = norm_scale;
            }
            if sub <= eps * diag {
                h[(l, l - 1)] = Complex::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > max_iter_per_eig {
            return Err(Error::NoConvergence { iterations: total });
        }

        let shift = if iter % 11 == 0 {
            // Exceptional shift to break cycles.
            let s = h[(hi, hi - 1)].l1() + if hi >= 2 { h[(hi - 1, hi - 2)].l1() } else { T::zero() };
            h[(hi, hi)] + Complex::new(s, T::zero())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for i in l..=hi {
            h[(i, i)] = h[(i, i)] - shift;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            let cc = Complex::new(c, T::zero());
            for j in k..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = cc * a + s * b;
                h[(k + 1, j)] = cc * b - s.conj() * a;
            }
            h[(k + 1, k)] = Complex::zero();
            rot.push((c, s));
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            let cc = Complex::new(c, T::zero());
            let top = (k + 2).min(hi);
            for i in l..=top {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = cc * a + s.conj() * b;
                h[(i, k + 1)] = cc * b - s * a;
            }
        }
        for i in l..=hi {
            h[(i, i)] = h[(i, i)] + shift;
        }
    }
    Ok(eig)
}

fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = T::from_f64(0.5);
    let m = (a - d).scale(half);
    let disc = (m * m + b * c).csqrt();
    let mid = (a + d).scale(half);
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).l1() < (l2 - d).l1() {
        l1
    } else {
        l2
    }
}

/// Basis of the (numerical) null space of `a`, forcing nullity `dim`.
///
/// Gaussian elimination with complete pivoting; the last `dim` pivots are
/// treated as zero. Returned vectors have unit 2-norm.
pub fn null_space<T: Real>(a: &Mat<T>, dim: usize) -> Vec<Vec<Complex<T>>> {
    let n = a.cols;
    let m = a.rows;
    let rank = n.saturating_sub(dim).min(m);
    let mut w = a.clone();
    let mut colperm: Vec<usize> = (0..n).collect();
    for k in 0..rank {
        let mut best = (k, k);
        let mut bv = T::zero();
        for i in k..m {
            for j in k..n {
                let v = w[(i, j)].l1();
                if v > bv {
                    bv = v;
                    best = (i, j);
                }
            }
        }
        w.swap_rows(k, best.0);
        if best.1 != k {
            for i in 0..m {
                w.data.swap(i * n + k, i * n + best.1);
            }
            colperm.swap(k, best.1);
        }
        let piv = w[(k, k)];
        if piv.is_zero() {
            continue;
        }
        for i in k + 1..m {
            let f = w[(i, k)] / piv;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                w[(i, j)] = w[(i, j)] - f * w[(k, j)];
            }
        }
    }
    let mut basis = Vec::with_capacity(dim);
    for free in rank..n {
        // x[free] = 1, other free vars 0, back-substitute pivots.
        let mut x = vec![Complex::<T>::zero(); n];
        x[free] = Complex::one();
        for k in (0..rank).rev() {
            let mut s = Complex::<T>::zero();
            for j in k + 1..n {
                s = s + w[(k, j)] * x[j];
            }
            let piv = w[(k, k)];
            x[k] = if piv.is_zero() { Complex::zero() } else { -s / piv };
        }
        let mut v = vec![Complex::<T>::zero(); n];
        for (pos, &orig) in colperm.iter().enumerate() {
            v[orig] = x[pos];
        }
        normalize(&mut v);
        basis.push(v);
    }
    basis
}

/// Scale to unit 2-norm in place; returns the original norm.
pub fn normalize<T: Real>(v: &mut [Complex<T>]) -> T {
    let nrm = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
    if nrm > T::zero() {
        for z in v.iter_mut() {
            *z = z.unscale(nrm);
        }
    }
    nrm
}

/// Hermitian inner product `<a|b>`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |s, (x, y)| s + x.conj() * *y)
}

/// Eigen-decomposition of a small block.
#[derive(Clone, Debug)]
pub struct SmallEig<T> {
    pub values: Vec<Complex<T>>,
    /// Unit-norm right eigenvectors, one per value.
    pub vectors: Vec<Vec<Complex<T>>>,
    /// Indices of eigenvalues belonging to a degenerate cluster.
    pub degenerate: Vec<bool>,
    /// Set when a degenerate cluster lacks a full eigenvector set.
    pub defective: bool,
}

/// Eigenvalues and right eigenvectors of a small matrix.
///
/// Two-by-two blocks use the closed-form quadratic; larger blocks use QR for
/// the values and forced-nullity null spaces for the vectors.
pub fn small_eig<T: Real>(a: &Mat<T>) -> Result<SmallEig<T>> {
    let n = a.rows;
    let scale = a.max_abs().max(T::one());
    let cluster_tol = T::epsilon().sqrt() * scale;
    match n {
        1 => Ok(SmallEig {
            values: vec![a[(0, 0)]],
            vectors: vec![vec![Complex::one()]],
            degenerate: vec![false],
            defective: false,
        }),
        2 => Ok(eig2(a, cluster_tol)),
        _ => {
            let values = eigenvalues(a, EigOptions::default())?;
            let mut vectors = vec![Vec::new(); n];
            let mut degenerate = vec![false; n];
            let mut defective = false;
            let mut done = vec![false; n];
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let members: Vec<usize> =
                    (i..n).filter(|&j| !done[j] && (values[j] - values[i]).modulus() < cluster_tol).collect();
                let mean = members
                    .iter()
                    .fold(Complex::<T>::zero(), |s, &j| s + values[j])
                    .unscale(T::from_f64(members.len() as f64));
                let shifted = a.shifted(mean);
                let basis = null_space(&shifted, members.len());
                let resid_tol = T::from_f64(1e3) * T::epsilon().sqrt() * scale;
                for (slot, &j) in members.iter().enumerate() {
                    let v = basis[slot].clone();
                    let r = shifted.matvec(&v).iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
                    if r > resid_tol {
                        defective = true;
                    }
                    vectors[j] = v;
                    degenerate[j] = members.len() > 1;
                    done[j] = true;
                }
            }
            Ok(SmallEig { values, vectors, degenerate, defective })
        }
    }
}

fn eig2<T: Real>(a: &Mat<T>, cluster_tol: T) -> SmallEig<T> {
    let (p, b, c, d) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let half = T::from_f64(0.5);
    let mid = (p + d).scale(half);
    let m = (p - d).scale(half);
    let s = (m * m + b * c).csqrt();
    let values = vec![mid + s, mid - s];
    if (s + s).modulus() < cluster_tol {
        let scalar = b.modulus() < cluster_tol && c.modulus() < cluster_tol && (p - d).modulus() < cluster_tol;
        let e1 = vec![Complex::one(), Complex::zero()];
        let e2 = vec![Complex::zero(), Complex::one()];
        return SmallEig { values, vectors: vec![e1, e2], degenerate: vec![true, true], defective: !scalar };
    }
    let vectors = values
        .iter()
        .map(|&lam| {
            let mut u = vec![b, lam - p];
            let mut w = vec![lam - d, c];
            let nu = normalize(&mut u);
            let nw = normalize(&mut w);
            if nu >= nw {
                u
            } else {
                w
            }
        })
        .collect();
    SmallEig { values, vectors, degenerate: vec![false, false], defective: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Dd;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn triangular_matrix_eigenvalues_are_its_diagonal() {
        let m = Mat::from_rows(vec![
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.5, -1.0)],
            vec![c(0.0, 0.0), c(-3.0, 0.5), c(4.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, -2.0)],
        ]);
        let ev = sorted(eigenvalues(&m, EigOptions::default()).unwrap());
        let want = sorted(vec![c(1.0, 1.0), c(-3.0, 0.5), c(2.0, -2.0)]);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn companion_of_known_polynomial() {
        // (z-1)(z-2i)(z+3) = z^3 + (2-2i) z^2 + (-3-4i) z + 6i
        let coeffs = [c(2.0, -2.0), c(-3.0, -4.0), c(0.0, 6.0)];
        let mut m = Mat::<f64>::zeros(3, 3);
        for j in 0..3 {
            m[(0, j)] = -coeffs[j];
        }
        m[(1, 0)] = c(1.0, 0.0);
        m[(2, 1)] = c(1.0, 0.0);
        let ev = sorted(eigenvalues(&m, EigOptions::default()).unwrap());
        let want = sorted(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn trace_and_determinant_are_preserved() {
        let n = 9;
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let x = ((i * 7 + j * 3) % 11) as f64 - 5.0;
                let y = ((i * 5 + j * 2) % 7) as f64 - 3.0;
                m[(i, j)] = c(x / 3.0, y / 4.0);
            }
        }
        let ev = eigenvalues(&m, EigOptions::default()).unwrap();
        let tr: Complex<f64> = (0..n).map(|i| m[(i, i)]).sum();
        let sum: Complex<f64> = ev.iter().sum();
        assert!((tr - sum).norm() < 1e-10);
        let prod: Complex<f64> = ev.iter().product();
        let det = m.det();
        assert!((prod - det).norm() < 1e-8 * det.norm().max(1.0));
    }

    #[test]
    fn double_double_matches_double_on_benign_input() {
        let m = Mat::from_rows(vec![
            vec![c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.2, 0.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)],
            vec![c(0.3, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, -1.0)],
        ]);
        let ev = sorted(eigenvalues(&m, EigOptions::default()).unwrap());
        let md: Mat<Dd> = Mat::from_f64(&m);
        let evd = sorted(eigenvalues(&md, EigOptions::default()).unwrap().iter().map(|z| z.to_f64c()).collect());
        for (a, b) in ev.iter().zip(&evd) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_and_det() {
        let m = Mat::from_rows(vec![vec![c(1.0, 2.0), c(0.0, 1.0)], vec![c(3.0, 0.0), c(-1.0, 0.5)]]);
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        assert!(id.sub(&Mat::identity(2)).max_abs() < 1e-14);
        let det = m.det();
        let want = c(1.0, 2.0) * c(-1.0, 0.5) - c(0.0, 1.0) * c(3.0, 0.0);
        assert!((det - want).norm() < 1e-14);
    }

    #[test]
    fn small_eig_flags_jordan_block() {
        let j = Mat::from_rows(vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(small_eig(&j).unwrap().defective);
        let s = Mat::from_rows(vec![vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(2.0, 0.0)]]);
        let e = small_eig(&s).unwrap();
        assert!(!e.defective && e.degenerate.iter().all(|&d| d));
        let j3 = Mat::from_rows(vec![
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
        ]);
        assert!(small_eig(&j3).unwrap().defective);
    }

    #[test]
    fn small_eig_vectors_satisfy_eigen_equation() {
        let m = Mat::from_rows(vec![
            vec![c(1.0, 0.5), c(0.3, 0.0), c(0.0, -0.2)],
            vec![c(0.7, 0.0), c(-0.4, 0.0), c(1.1, 0.0)],
            vec![c(0.0, 0.0), c(0.2, 0.9), c(0.6, -0.3)],
        ]);
        let e = small_eig(&m).unwrap();
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            let r: f64 = m.shifted(*lam).matvec(v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(r < 1e-10);
        }
    }
}
