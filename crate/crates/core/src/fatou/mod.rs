//! Fatou coordinates of a parabolic germ `f(t) = t + 2πi t^{k+1}(1 + O(t))`.
//!
//! Each chart solves the Abel equation `τ∘f = τ + 1` as the limit of
//! `F(f^{±n}(t)) ∓ n`, where `F = T_λ∘h` is the formal Fatou coordinate built
//! from the normalizing jet `h` and the model time `T_λ`.

pub mod transition;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formal::formal_invariant;
use crate::geometry::{imaginary_dividing_rays, Sector};
use crate::maps::RationalMap;
use crate::roots::poly_roots;
use crate::series::TruncatedSeries;
use crate::TWO_PI_I;

pub use transition::{
    depth_floor, ev_transitions, fourier_coefficients, integral_from_time, min_line_depth,
    sample_transition, sample_with_floor, split_composition, time_to_integral, EVModulus,
    IntegralChart, IntegralTransition, Normalization, Parity, SplitPair, TimeChart, TransitionOptions,
    TransitionSample,
};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GermKind {
    Polynomial,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermSpec {
    pub k: usize,
    pub kind: GermKind,
    pub num: Vec<C>,
    pub den: Vec<C>,
    pub radius_hint: f64,
}

impl GermSpec {
    pub fn polynomial(k: usize, coeffs: Vec<C>, radius_hint: f64) -> Result<Self> {
        let g = Self {
            k,
            kind: GermKind::Polynomial,
            num: coeffs,
            den: vec![C::new(1.0, 0.0)],
            radius_hint,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn rational(k: usize, num: Vec<C>, den: Vec<C>, radius_hint: f64) -> Result<Self> {
        let g = Self {
            k,
            kind: GermKind::Rational,
            num,
            den,
            radius_hint,
        };
        g.validate()?;
        Ok(g)
    }

    /// `t/(1 − 2πi t)`, the time-one map of `2πi t²`.
    /// The pole sits at `|t| = 1/2π`, so `radius_hint` must stay below it.
    pub fn moebius(radius_hint: f64) -> Result<Self> {
        Self::rational(
            1,
            vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), -TWO_PI_I],
            radius_hint,
        )
    }

    /// `t + 2πi t^{k+1}(1 + b t)`.
    pub fn cubic_like(k: usize, b: C, radius_hint: f64) -> Self {
        let mut c = vec![C::new(0.0, 0.0); k + 3];
        c[1] = C::new(1.0, 0.0);
        c[k + 1] = TWO_PI_I;
        c[k + 2] = TWO_PI_I * b;
        Self::polynomial(k, c, radius_hint).expect("normalized")
    }

    pub fn map(&self) -> RationalMap {
        RationalMap::new(self.num.clone(), self.den.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.radius_hint > 0.0) {
            return Err(Error::Config("radius_hint must be positive".into()));
        }
        if self.kind == GermKind::Polynomial && self.den.len() != 1 {
            return Err(Error::Config("polynomial germ with a denominator".into()));
        }
        if self.den.len() > 1 {
            if let Ok(r) = poly_roots(&self.den) {
                if r.iter().any(|z| z.norm() <= self.radius_hint) {
                    return Err(Error::DegenerateInput(
                        "denominator vanishes inside the radius hint".into(),
                    ));
                }
            }
        }
        let jet = self.map().jet(self.k + 1)?;
        let bad = jet.coeff(0).norm() > 1e-12
            || (jet.coeff(1) - 1.0).norm() > 1e-12
            || (2..=self.k).any(|m| jet.coeff(m).norm() > 1e-12)
            || (jet.coeff(self.k + 1) - TWO_PI_I).norm() > 1e-12;
        if bad {
            return Err(Error::WrongNormalization(format!(
                "germ is not t + 2πi t^{} + O(t^{})",
                self.k + 1,
                self.k + 2
            )));
        }
        Ok(())
    }
}

/// Log with argument in `(arg(base) − π, arg(base) + π]`.
pub fn log_near(t: C, center: f64) -> C {
    let a = t.arg();
    let shift = ((center - a) / TAU).round();
    C::new(t.norm().ln(), a + TAU * shift)
}

/// `T_λ(t) = −1/(2πi k t^k) + (λ/2πi) log t`, log branch centered on `arg(branch_base)`.
pub fn model_time(k: usize, lambda: C, t: C, branch_base: C) -> Result<C> {
    if t.norm() == 0.0 {
        return Err(Error::OriginPole);
    }
    Ok(model_time_centered(k, lambda, t, branch_base.arg()).0)
}

fn model_time_centered(k: usize, lambda: C, t: C, center: f64) -> (C, C) {
    let tk = t.powu(k as u32);
    let v = -1.0 / (TWO_PI_I * k as f64 * tk) + lambda / TWO_PI_I * log_near(t, center);
    let d = (1.0 + lambda * tk) / (TWO_PI_I * tk * t);
    (v, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Attracting,
    Repelling,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FatouOptions {
    pub tol: f64,
    pub iter_cap: usize,
    /// Order of the normalizing jet; `0` selects `2k + 12`.
    pub formal_order: usize,
    /// Angular margin removed from the `2π/k` petal sectors.
    pub opening_margin: f64,
}

impl Default for FatouOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            iter_cap: 100_000,
            formal_order: 0,
            opening_margin: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FatouChart {
    pub j: usize,
    pub sector: Sector,
    pub norm_constant: C,
    pub mode: Mode,
    /// Direction around which the logarithm in the model time is taken.
    pub branch_center: f64,
}

/// A germ prepared for Fatou-coordinate evaluation.
#[derive(Debug, Clone)]
pub struct FatouGerm {
    pub germ: GermSpec,
    pub map: RationalMap,
    pub lambda: C,
    pub conjugator: TruncatedSeries,
    pub opts: FatouOptions,
}

impl FatouGerm {
    pub fn new(germ: GermSpec, opts: FatouOptions) -> Result<Self> {
        germ.validate()?;
        let k = germ.k;
        let order = if opts.formal_order == 0 {
            2 * k + 12
        } else {
            opts.formal_order.max(2 * k + 1)
        };
        let map = germ.map();
        let inv = formal_invariant(&map.jet(order)?, k)?;
        Ok(Self {
            germ,
            map,
            lambda: inv.lambda,
            conjugator: inv.conjugator,
            opts,
        })
    }

    pub fn k(&self) -> usize {
        self.germ.k
    }

    /// Raw chart `j` (constant zero). Index `2k` is chart 0 continued once
    /// around the origin.
    pub fn chart(&self, j: usize) -> Result<FatouChart> {
        let k = self.k();
        let rays = imaginary_dividing_rays(k);
        let (base, extra) = if j == 2 * k { (0, TAU) } else { (j, 0.0) };
        let theta = *rays
            .get(base)
            .ok_or_else(|| Error::Config(format!("chart index {j} out of range")))?;
        let sector = Sector::new(
            theta,
            TAU / k as f64 - self.opts.opening_margin,
            self.germ.radius_hint,
        )?;
        let probe = C::from_polar(0.1 * self.germ.radius_hint, theta);
        let mode = if self.map.eval(probe).norm() < probe.norm() {
            Mode::Attracting
        } else {
            Mode::Repelling
        };
        Ok(FatouChart {
            j,
            sector,
            norm_constant: C::new(0.0, 0.0),
            mode,
            branch_center: theta + extra,
        })
    }

    /// Formal Fatou coordinate `T_λ(h(t))` and its derivative.
    pub fn formal_time(&self, t: C, center: f64) -> (C, C) {
        let (u, du) = self.conjugator.eval_with_derivative(t);
        let (v, dv) = model_time_centered(self.k(), self.lambda, u, center);
        (v, dv * du)
    }

    /// `τ(t)`, `τ'(t)` and the number of iterations used.
    pub fn evaluate(&self, chart: &FatouChart, t: C) -> Result<(C, C, usize)> {
        if !chart.sector.contains(t) {
            return Err(Error::OutsideDomain(format!(
                "{t} not in sector of chart {}",
                chart.j
            )));
        }
        let escape = 2.0 * self.germ.radius_hint;
        let stop = self.opts.tol * 1e-3;
        let mut z = t;
        let mut dz = C::new(1.0, 0.0);
        let (mut est, _) = self.formal_time(z, chart.branch_center);
        for n in 1..=self.opts.iter_cap {
            match chart.mode {
                Mode::Attracting => {
                    let (fz, fp) = self.map.eval_d(z);
                    z = fz;
                    dz *= fp;
                }
                Mode::Repelling => {
                    let s = self.map.inverse_near(z)?;
                    let (_, fp) = self.map.eval_d(s);
                    z = s;
                    dz /= fp;
                }
            }
            if !(z.norm() < escape) || !z.is_finite() || z.norm() == 0.0 {
                return Err(Error::NotConverged(format!(
                    "orbit of {t} leaves the chart domain"
                )));
            }
            let (ft, dft) = self.formal_time(z, chart.branch_center);
            let next = match chart.mode {
                Mode::Attracting => ft - n as f64,
                Mode::Repelling => ft + n as f64,
            };
            let diff = (next - est).norm();
            est = next;
            if diff <= stop {
                return Ok((est + chart.norm_constant, dft * dz, n));
            }
        }
        Err(Error::NotConverged(format!(
            "iteration cap {} reached at {t}",
            self.opts.iter_cap
        )))
    }
}

/// `τ(t)` for a chart.
pub fn fatou_coordinate(sys: &FatouGerm, chart: &FatouChart, t: C) -> Result<C> {
    sys.evaluate(chart, t).map(|r| r.0)
}

/// Charts paired with their germ; implements [`TimeChart`].
#[derive(Clone, Copy)]
pub struct FatouTime<'a> {
    pub sys: &'a FatouGerm,
    pub chart: FatouChart,
}

impl TimeChart for FatouTime<'_> {
    fn time(&self, t: C, _hint: Option<C>) -> Result<(C, C)> {
        self.sys.evaluate(&self.chart, t).map(|(v, d, _)| (v, d))
    }
}

/// Point on the ray of argument `theta` where `|T_0| = depth`.
pub fn point_at_depth(k: usize, depth: f64, theta: f64) -> C {
    C::from_polar((1.0 / (TAU * k as f64 * depth)).powf(1.0 / k as f64), theta)
}

/// `depth`, raised so that the point it reaches stays within `0.8·radius`.
pub fn anchor_depth(k: usize, radius: f64, depth: f64) -> f64 {
    depth.max(1.0 / (TAU * k as f64 * (0.8 * radius).powi(k as i32)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedCharts {
    pub charts: Vec<FatouChart>,
    /// `τ_0 − τ_{2k−1}` near 0 on their common overlap; tends to `−λ`.
    pub closure: C,
    /// Largest change of an offset between the two extrapolation depths.
    pub offset_residual: f64,
}

/// Sets chart constants so that `τ_j − τ_{j+1} → 0` on the overlaps, chart 0 fixed.
///
/// The limit is the period mean of `τ_{j+1} − τ_j` on a horizontal line of
/// the overlap, which removes every oscillating mode however large.
pub fn normalize_charts(sys: &FatouGerm) -> Result<NormalizedCharts> {
    let k = sys.k();
    let mut charts: Vec<FatouChart> = (0..2 * k).map(|j| sys.chart(j)).collect::<Result<_>>()?;
    let d0 = anchor_depth(k, sys.germ.radius_hint, 6.0);
    let opts = TransitionOptions { fourier_range: 1, samples: 64, ..TransitionOptions::default() };
    let mut residual = 0.0f64;
    // mean of `to − from` across the overlap on ray `theta`, at two depths
    let mean = |from: &FatouChart, to: &FatouChart, theta: f64, sign: i32| -> Result<(C, f64)> {
        let mut vals = Vec::with_capacity(2);
        for d in [d0, d0 * 4.0 / 3.0] {
            let s = sample_transition(
                &FatouTime { sys, chart: *from },
                &FatouTime { sys, chart: *to },
                0,
                sign,
                point_at_depth(k, d, theta),
                &opts,
            )?;
            vals.push(s.c0);
        }
        Ok((vals[1], (vals[1] - vals[0]).norm()))
    };
    for j in 0..2 * k - 1 {
        let theta = PI * (j + 1) as f64 / k as f64;
        let sign = if j % 2 == 0 { 1 } else { -1 };
        let (d, r) = mean(&charts[j], &charts[j + 1], theta, sign)?;
        charts[j + 1].norm_constant -= d;
        residual = residual.max(r);
    }
    let (d, r) = mean(&charts[2 * k - 1], &charts[0], 0.0, -1)?;
    residual = residual.max(r);
    Ok(NormalizedCharts {
        charts,
        closure: d,
        offset_residual: residual,
    })
}
