//! Double-double arithmetic and the global precision switch.
//!
//! Only orbit iteration in the Koenigs charts is precision-generic; everything
//! else runs in plain `f64`.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU8, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::DoubleDouble => "double-double",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "double" | "f64" => Some(Precision::Double),
            "double-double" | "dd" => Some(Precision::DoubleDouble),
            _ => None,
        }
    }
}

static GLOBAL: AtomicU8 = AtomicU8::new(0);

pub fn global() -> Precision {
    match GLOBAL.load(Ordering::Relaxed) {
        0 => Precision::Double,
        _ => Precision::DoubleDouble,
    }
}

pub fn set_global(p: Precision) {
    GLOBAL.store(p as u8, Ordering::Relaxed);
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

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::new(0.0);
        }
        let x = self.hi.sqrt();
        // one Newton correction
        let r = self - Dd::from(x) * Dd::from(x);
        Dd::from(x) + Dd::new(r.hi / (2.0 * x))
    }
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const HALF_PI: Dd = Dd {
    hi: std::f64::consts::FRAC_PI_2,
    lo: 6.123_233_995_736_766e-17,
};
/// `2π` in double-double.
pub const TAU_DD: Dd = Dd {
    hi: std::f64::consts::TAU,
    lo: 2.449_293_598_294_706_4e-16,
};

impl Dd {
    pub fn exp(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::new(1.0);
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)) * Dd::new(1.0 / 64.0);
        let mut term = Dd::new(1.0);
        let mut sum = Dd::new(1.0);
        for n in 1..=14 {
            term = term * r / Dd::new(n as f64);
            sum = sum + term;
        }
        for _ in 0..6 {
            sum = sum * sum;
        }
        let scale = 2f64.powi(k as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// Natural log of a positive number.
    pub fn ln(self) -> Dd {
        let y = Dd::new(self.hi.ln());
        y + self * (-y).exp() - Dd::new(1.0)
    }

    pub fn sin_cos(self) -> (Dd, Dd) {
        let j = (self.hi / HALF_PI.hi).round();
        let r = self - HALF_PI * Dd::new(j);
        let r2 = r * r;
        let mut s = r;
        let mut c = Dd::new(1.0);
        let mut ts = r;
        let mut tc = Dd::new(1.0);
        for n in 1..=14 {
            let n2 = (2 * n) as f64;
            ts = -(ts * r2) / Dd::new(n2 * (n2 + 1.0));
            tc = -(tc * r2) / Dd::new(n2 * (n2 - 1.0));
            s = s + ts;
            c = c + tc;
        }
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Complex number over [`Dd`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub fn new(hi: Complex64, lo: Complex64) -> Self {
        CDd {
            re: Dd::new(hi.re) + Dd::new(lo.re),
            im: Dd::new(hi.im) + Dd::new(lo.im),
        }
    }

    /// High and low parts.
    pub fn split(self) -> (Complex64, Complex64) {
        (
            Complex64::new(self.re.hi, self.im.hi),
            Complex64::new(self.re.lo, self.im.lo),
        )
    }

    /// Principal logarithm.
    pub fn ln(self) -> CDd {
        let a0 = self.to_c64().arg();
        let m2 = self.re * self.re + self.im * self.im;
        let lnabs = m2.ln() * Dd::new(0.5);
        let (s, c) = Dd::new(a0).sin_cos();
        let re = self.re * c + self.im * s;
        let im = self.im * c - self.re * s;
        CDd {
            re: lnabs,
            im: Dd::new(a0) + im / re,
        }
    }
}

/// Minimal complex field interface shared by `Complex64` and [`CDd`].
pub trait CField:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
    fn zero() -> Self {
        Self::from_c64(Complex64::new(0.0, 0.0))
    }
    fn one() -> Self {
        Self::from_c64(Complex64::new(1.0, 0.0))
    }
    /// Modulus rounded to `f64`.
    fn norm(self) -> f64 {
        self.to_c64().norm()
    }
}

impl CField for Complex64 {
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

impl CField for CDd {
    fn from_c64(z: Complex64) -> Self {
        CDd {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for CDd {
    type Output = CDd;
    fn add(self, o: CDd) -> CDd {
        CDd {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for CDd {
    type Output = CDd;
    fn sub(self, o: CDd) -> CDd {
        CDd {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for CDd {
    type Output = CDd;
    fn mul(self, o: CDd) -> CDd {
        CDd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl Div for CDd {
    type Output = CDd;
    fn div(self, o: CDd) -> CDd {
        let d = o.re * o.re + o.im * o.im;
        let n = self
            * CDd {
                re: o.re,
                im: -o.im,
            };
        CDd {
            re: n.re / d,
            im: n.im / d,
        }
    }
}
