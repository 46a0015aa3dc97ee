//! Truncated complex power series (jets) with explicit truncation order.
//!
//! Every binary operation requires both operands to carry the same order;
//! mismatches are errors rather than silent truncations.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

type C = Complex64;

/// Jet `c_0 + c_1 t + ... + c_N t^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<C>,
}

impl TruncatedSeries {
    /// Builds a jet of order `order` from a (possibly shorter) coefficient list.
    /// Coefficients beyond `order` are an error.
    pub fn from_coeffs(order: usize, coeffs: &[C]) -> Result<Self> {
        if order == 0 {
            return Err(Error::OrderTooLow { have: 0, need: 1 });
        }
        if coeffs.len() > order + 1 {
            return Err(Error::OrderMismatch(coeffs.len() - 1, order));
        }
        let mut c = coeffs.to_vec();
        c.resize(order + 1, C::new(0.0, 0.0));
        Ok(Self { coeffs: c })
    }

    pub fn zeros(order: usize) -> Self {
        assert!(order >= 1, "truncation order must be >= 1");
        Self {
            coeffs: vec![C::new(0.0, 0.0); order + 1],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[1] = C::new(1.0, 0.0);
        s
    }

    /// Jet of the monomial `c t^m`.
    pub fn monomial(order: usize, m: usize, c: C) -> Self {
        let mut s = Self::zeros(order);
        if m <= order {
            s.coeffs[m] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> C {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    pub fn set_coeff(&mut self, m: usize, c: C) {
        self.coeffs[m] = c;
    }

    /// Index of the first nonzero coefficient, `None` for the zero jet.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| *c != C::new(0.0, 0.0))
    }

    pub fn is_germ_at_zero(&self) -> bool {
        self.coeffs[0] == C::new(0.0, 0.0)
    }

    pub fn is_invertible_germ(&self) -> bool {
        self.is_germ_at_zero() && self.coeffs[1] != C::new(0.0, 0.0)
    }

    /// Explicit reduction to a lower order.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order > self.order() {
            return Err(Error::OrderMismatch(self.order(), order));
        }
        Self::from_coeffs(order, &self.coeffs[..=order])
    }

    /// Explicit zero-padding to a higher order. The caller asserts that the
    /// missing coefficients are genuinely zero (e.g. a polynomial).
    pub fn pad_zero(&self, order: usize) -> Result<Self> {
        if order < self.order() {
            return Err(Error::OrderMismatch(self.order(), order));
        }
        Self::from_coeffs(order, &self.coeffs)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { coeffs })
    }

    pub fn scale(&self, c: C) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: mul_trunc(&self.coeffs, &other.coeffs, self.order()),
        })
    }

    /// Derivative; exact through order `N - 1`, so the result has order `N - 1`.
    pub fn derivative(&self) -> Result<Self> {
        let n = self.order();
        if n < 2 {
            return Err(Error::OrderTooLow { have: n, need: 2 });
        }
        let coeffs = (1..=n).map(|m| self.coeffs[m] * m as f64).collect();
        Ok(Self { coeffs })
    }

    pub fn eval(&self, t: C) -> C {
        self.coeffs
            .iter()
            .rev()
            .fold(C::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    /// Value and first derivative at `t`.
    pub fn eval_with_derivative(&self, t: C) -> (C, C) {
        let mut p = C::new(0.0, 0.0);
        let mut dp = C::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * t + p;
            p = p * t + c;
        }
        (p, dp)
    }

    /// Largest coefficient modulus, used as a scale for relative comparisons.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn mul_trunc(a: &[C], b: &[C], order: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        if *ai == C::new(0.0, 0.0) {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `outer ∘ inner` through the common order. `inner` must fix 0.
pub fn series_compose(outer: &TruncatedSeries, inner: &TruncatedSeries) -> Result<TruncatedSeries> {
    outer.check_order(inner)?;
    if !inner.is_germ_at_zero() {
        return Err(Error::InnerNotGerm(inner.coeffs[0].norm()));
    }
    let n = outer.order();
    // Horner in the ring of jets.
    let mut acc = vec![C::new(0.0, 0.0); n + 1];
    for c in outer.coeffs.iter().rev() {
        acc = mul_trunc(&acc, &inner.coeffs, n);
        acc[0] += c;
    }
    Ok(TruncatedSeries { coeffs: acc })
}

/// Compositional inverse of an invertible germ.
pub fn series_reverse(s: &TruncatedSeries) -> Result<TruncatedSeries> {
    if !s.is_germ_at_zero() {
        return Err(Error::InnerNotGerm(s.coeffs[0].norm()));
    }
    let c1 = s.coeffs[1];
    if c1 == C::new(0.0, 0.0) {
        return Err(Error::NotInvertible);
    }
    let n = s.order();
    let mut r = TruncatedSeries::monomial(n, 1, c1.inv());
    for m in 2..=n {
        let e = series_compose(s, &r)?.coeffs[m];
        r.coeffs[m] -= e / c1;
    }
    Ok(r)
}

/// Jet of the time-one flow of `ṫ = field(t)` by Lie-series exponentiation
/// `Σ L^m(id)/m!` with `L h = field · h'`.
///
/// Each application of `L` raises the valuation by at least one, so the sum
/// is exact through order `n` after `n` terms.
pub fn series_time1_flow(field: &TruncatedSeries, n: usize) -> Result<TruncatedSeries> {
    if field.order() < n {
        return Err(Error::OrderMismatch(field.order(), n));
    }
    let field = field.truncate(n)?;
    if let Some(v) = field.valuation() {
        if v < 2 {
            return Err(Error::BadOrder(v));
        }
    } else {
        return Ok(TruncatedSeries::identity(n));
    }
    let mut term = TruncatedSeries::identity(n).coeffs;
    let mut total = term.clone();
    for m in 1..=n {
        // derivative of the current term, kept at order n (top coefficient is
        // multiplied by field's zero constant and linear parts only)
        let mut d = vec![C::new(0.0, 0.0); n + 1];
        for j in 1..=n {
            d[j - 1] = term[j] * j as f64;
        }
        term = mul_trunc(&field.coeffs, &d, n);
        let inv = 1.0 / m as f64;
        term.iter_mut().for_each(|c| *c *= inv);
        if term.iter().all(|c| *c == C::new(0.0, 0.0)) {
            break;
        }
        for (t, c) in total.iter_mut().zip(&term) {
            *t += c;
        }
    }
    Ok(TruncatedSeries { coeffs: total })
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    order: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            order: self.order(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SeriesRepr::deserialize(d)?;
        if r.coeffs.len() != r.order + 1 || r.order == 0 {
            return Err(serde::de::Error::custom(format!(
                "series of order {} needs {} coefficients, got {}",
                r.order,
                r.order + 1,
                r.coeffs.len()
            )));
        }
        Ok(TruncatedSeries {
            coeffs: r.coeffs.iter().map(|p| C::new(p[0], p[1])).collect(),
        })
    }
}
