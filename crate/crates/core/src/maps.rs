//! Rational maps `N(t)/D(t)` with derivatives, Newton inversion and local
//! coordinates at fixed points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::CField;
use crate::roots::{poly_add, poly_eval, poly_eval_d, poly_mul, taylor_shift};
use crate::series::TruncatedSeries;

type C = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalMap {
    pub num: Vec<C>,
    pub den: Vec<C>,
}

impl RationalMap {
    pub fn polynomial(num: Vec<C>) -> Self {
        Self {
            num,
            den: vec![C::new(1.0, 0.0)],
        }
    }

    pub fn new(num: Vec<C>, den: Vec<C>) -> Self {
        Self { num, den }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.len() == 1
    }

    pub fn eval(&self, t: C) -> C {
        if self.is_polynomial() {
            poly_eval(&self.num, t) / self.den[0]
        } else {
            poly_eval(&self.num, t) / poly_eval(&self.den, t)
        }
    }

    /// Value and derivative.
    pub fn eval_d(&self, t: C) -> (C, C) {
        let (n, dn) = poly_eval_d(&self.num, t);
        if self.is_polynomial() {
            return (n / self.den[0], dn / self.den[0]);
        }
        let (d, dd) = poly_eval_d(&self.den, t);
        (n / d, (dn * d - n * dd) / (d * d))
    }

    /// Evaluation in an arbitrary complex field (used for extended precision).
    pub fn eval_in<F: CField>(&self, t: F) -> F {
        let horner = |p: &[C]| {
            p.iter()
                .rev()
                .fold(F::zero(), |acc, c| acc * t + F::from_c64(*c))
        };
        if self.is_polynomial() {
            horner(&self.num) / F::from_c64(self.den[0])
        } else {
            horner(&self.num) / horner(&self.den)
        }
    }

    /// Value and derivative in an arbitrary complex field.
    pub fn eval_d_in<F: CField>(&self, t: F) -> (F, F) {
        let hd = |p: &[C]| {
            let mut v = F::zero();
            let mut d = F::zero();
            for c in p.iter().rev() {
                d = d * t + v;
                v = v * t + F::from_c64(*c);
            }
            (v, d)
        };
        let (n, dn) = hd(&self.num);
        if self.is_polynomial() {
            let d0 = F::from_c64(self.den[0]);
            return (n / d0, dn / d0);
        }
        let (d, dd) = hd(&self.den);
        (n / d, (dn * d - n * dd) / (d * d))
    }

    /// [`RationalMap::inverse_near`] refined by Newton steps in `F`.
    pub fn inverse_near_in<F: CField>(&self, t: F) -> Result<F> {
        let mut s = F::from_c64(self.inverse_near(t.to_c64())?);
        for _ in 0..2 {
            let (v, d) = self.eval_d_in(s);
            s = s - (v - t) / d;
        }
        Ok(s)
    }

    /// Solves `f(s) = target` by Newton from `seed`; at most `max_iter` steps.
    pub fn solve(&self, target: C, seed: C, max_iter: usize) -> Result<C> {
        let mut s = seed;
        let scale = target.norm().max(seed.norm()).max(1e-300);
        for _ in 0..max_iter {
            let (v, d) = self.eval_d(s);
            let step = (v - target) / d;
            if !step.is_finite() {
                break;
            }
            s -= step;
            if step.norm() <= 4.0 * f64::EPSILON * scale {
                return Ok(s);
            }
        }
        let (v, _) = self.eval_d(s);
        if (v - target).norm() <= 1e-13 * scale {
            return Ok(s);
        }
        Err(Error::NewtonFailed(format!(
            "inverse of f at {target} did not converge"
        )))
    }

    /// `f^{-1}(t)` near `t`, seeded first with `2t − f(t)`.
    pub fn inverse_near(&self, t: C) -> Result<C> {
        let first = 2.0 * t - self.eval(t);
        let mut last = None;
        for seed in [first, t, 0.5 * (first + t)] {
            match self.solve(t, seed, 50) {
                Ok(s) if (s - t).norm() <= t.norm() => return Ok(s),
                Ok(_) => {}
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::NewtonFailed(format!("no preimage of {t} near it"))))
    }

    /// Taylor jet at 0 through `order` (requires `D(0) ≠ 0`).
    pub fn jet(&self, order: usize) -> Result<TruncatedSeries> {
        let d0 = self.den[0];
        if d0.norm() == 0.0 {
            return Err(Error::DegenerateInput("denominator vanishes at 0".into()));
        }
        let coef = |p: &[C], m: usize| p.get(m).copied().unwrap_or_default();
        let mut out: Vec<C> = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut acc = coef(&self.num, m);
            for j in 1..=m {
                acc -= coef(&self.den, j) * out[m - j];
            }
            out.push(acc / d0);
        }
        TruncatedSeries::from_coeffs(order, &out)
    }

    /// The map in the local coordinate `w = t − a` at a fixed point `a`, with
    /// the (analytically zero) constant term removed.
    pub fn localize(&self, a: C) -> RationalMap {
        let shifted_num = poly_add(&self.num, &poly_mul(&self.den, &[-a]));
        let mut num = taylor_shift(&shifted_num, a);
        num[0] = C::new(0.0, 0.0);
        let den = taylor_shift(&self.den, a);
        RationalMap { num, den }
    }
}
