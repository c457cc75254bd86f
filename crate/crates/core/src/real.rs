//! Scalar layer shared by every numerical routine.
//!
//! Most of the crate is generic over [`Real`], implemented for `f64` and for
//! the double-double type [`Dd`] (about 32 significant digits). The extended
//! type is used where double precision is provably not enough: eigenvalues of
//! strongly non-normal open-chain Hamiltonians, and Loschmidt overlaps that
//! fall many orders of magnitude below the cancellation floor of `f64`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

/// Real scalar usable by the generic linear algebra and propagation code.
pub trait Real:
    Copy
    + fmt::Debug
    + PartialOrd
    + Num
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Unit roundoff of the type.
    fn epsilon() -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn pi() -> Self;

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn hypot(self, other: Self) -> Self {
        let a = self.abs();
        let b = other.abs();
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big == Self::zero() {
            return big;
        }
        let r = small / big;
        big * (Self::one() + r * r).sqrt()
    }

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn hypot(self, other: Self) -> Self {
        f64::hypot(self, other)
    }
}

/// Complex helpers that only need the [`Real`] operations.
pub trait ComplexExt<T: Real> {
    fn modulus(&self) -> T;
    fn csqrt(&self) -> Complex<T>;
    fn cexp(&self) -> Complex<T>;
    fn from_f64c(z: Complex<f64>) -> Complex<T>;
    fn to_f64c(&self) -> Complex<f64>;
    /// |re| + |im|, cheap norm used for pivoting and deflation tests.
    fn l1(&self) -> T;
}

impl<T: Real> ComplexExt<T> for Complex<T> {
    fn modulus(&self) -> T {
        self.re.hypot(self.im)
    }

    fn csqrt(&self) -> Complex<T> {
        let zero = T::zero();
        let half = T::from_f64(0.5);
        let r = self.modulus();
        if r == zero {
            return Complex::new(zero, zero);
        }
        if self.re >= zero {
            let s = ((r + self.re) * half).sqrt();
            Complex::new(s, self.im / (s + s))
        } else {
            let s = ((r - self.re) * half).sqrt();
            let s = if self.im < zero { -s } else { s };
            Complex::new(self.im / (s + s), s)
        }
    }

    fn cexp(&self) -> Complex<T> {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex::new(m * c, m * s)
    }

    fn from_f64c(z: Complex<f64>) -> Complex<T> {
        Complex::new(T::from_f64(z.re), T::from_f64(z.im))
    }

    fn to_f64c(&self) -> Complex<f64> {
        Complex::new(self.re.to_f64(), self.im.to_f64())
    }

    fn l1(&self) -> T {
        self.re.abs() + self.im.abs()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const DD_EPS: f64 = 4.93038065763132e-32; // 2^-104

#[allow(clippy::excessive_precision)]
impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224646799147353207e-16,
    };
    pub const TWO_PI: Dd = Dd {
        hi: std::f64::consts::TAU,
        lo: 2.449293598294706414e-16,
    };
    pub const HALF_PI: Dd = Dd {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123233995736766036e-17,
    };
    pub const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319046813846299558e-17,
    };

    pub const fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn from_parts(hi: f64, lo: f64) -> Dd {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        Dd::from_parts(p1, p2 + self.lo * b)
    }

    fn mul_pow2(self, b: f64) -> Dd {
        Dd { hi: self.hi * b, lo: self.lo * b }
    }

    fn sqr(self) -> Dd {
        let (p1, p2) = two_prod(self.hi, self.hi);
        Dd::from_parts(p1, p2 + 2.0 * self.hi * self.lo + self.lo * self.lo)
    }

    /// Nearest integer, ties away from zero.
    pub fn round(self) -> Dd {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            Dd::from_parts(hi, lo)
        } else if (hi - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // hi sits exactly on a half; lo decides.
            if (self.lo > 0.0) == (hi > self.hi) {
                Dd::new(hi)
            } else {
                Dd::new(if hi > self.hi { hi - 1.0 } else { hi + 1.0 })
            }
        } else {
            Dd::new(hi)
        }
    }

    pub fn trunc(self) -> Dd {
        if self.hi >= 0.0 {
            let f = self.hi.floor();
            if f == self.hi {
                Dd::from_parts(f, self.lo.floor())
            } else {
                Dd::new(f)
            }
        } else {
            let c = self.hi.ceil();
            if c == self.hi {
                Dd::from_parts(c, self.lo.ceil())
            } else {
                Dd::new(c)
            }
        }
    }

    fn ldexp(self, k: i32) -> Dd {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    // Taylor series on |r| <= pi/4.
    fn sin_taylor(r: Dd) -> Dd {
        if r.hi == 0.0 {
            return Dd::ZERO;
        }
        let r2 = -r.sqr();
        let mut term = r;
        let mut sum = r;
        let mut n = 1.0;
        loop {
            term = term * r2;
            term = term / Dd::new((n + 1.0) * (n + 2.0));
            n += 2.0;
            sum += term;
            if term.hi.abs() <= DD_EPS * 1e-2 * sum.hi.abs() {
                break;
            }
        }
        sum
    }

    fn cos_taylor(r: Dd) -> Dd {
        let r2 = -r.sqr();
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        let mut n = 0.0;
        loop {
            term = term * r2;
            term = term / Dd::new((n + 1.0) * (n + 2.0));
            n += 2.0;
            sum += term;
            if term.hi.abs() <= DD_EPS * 1e-2 {
                break;
            }
        }
        sum
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        Dd { hi: h, lo: l }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p1, p2);
        Dd { hi: h, lo: l }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd { hi: q1, lo: q2 } + Dd::new(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - b * (self / b).trunc()
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl DivAssign for Dd {
    fn div_assign(&mut self, b: Dd) {
        *self = *self / b;
    }
}

impl Zero for Dd {
    fn zero() -> Dd {
        Dd::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Dd {
        Dd::ONE
    }
}

impl Num for Dd {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        <f64 as Num>::from_str_radix(s, radix).map(Dd::new)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::new(x)
    }
}

impl Real for Dd {
    fn from_f64(x: f64) -> Self {
        Dd::new(x)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn epsilon() -> Self {
        Dd::new(DD_EPS)
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (h, l) = two_sum(ax, (self - Dd::new(ax).sqr()).hi * (x * 0.5));
        Dd::from_parts(h, l)
    }

    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / Dd::LN2.hi + 0.5).floor();
        let r = (self - Dd::LN2.mul_f64(k)).mul_pow2(1.0 / 512.0);
        // expm1(r) by Taylor, then square back up: (1+s)^2 - 1 = 2s + s^2.
        let mut s = r;
        let mut term = r;
        let mut n = 1.0;
        loop {
            n += 1.0;
            term = term * r / Dd::new(n);
            s += term;
            if term.hi.abs() <= 1e-2 * DD_EPS * s.hi.abs() {
                break;
            }
        }
        for _ in 0..9 {
            s = s.mul_pow2(2.0) + s.sqr();
        }
        (s + Dd::ONE).ldexp(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::new(f64::NAN);
        }
        if self == Dd::ONE {
            return Dd::ZERO;
        }
        let x = Dd::new(self.hi.ln());
        let x = x + self * (-x).exp() - Dd::ONE;
        x + self * (-x).exp() - Dd::ONE
    }

    fn sin_cos(self) -> (Self, Self) {
        if self.hi == 0.0 {
            return (Dd::ZERO, Dd::ONE);
        }
        let z = (self / Dd::TWO_PI).round();
        let r = self - Dd::TWO_PI * z;
        let j = (r.hi / Dd::HALF_PI.hi).round();
        let r = r - Dd::HALF_PI.mul_f64(j);
        let s = Dd::sin_taylor(r);
        let c = Dd::cos_taylor(r);
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    fn pi() -> Self {
        Dd::PI
    }
}
