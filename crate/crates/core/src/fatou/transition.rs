//! Transition functions between time charts, their Fourier coefficients,
//! splitting of composed transitions and conversion to integral coordinates.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{anchor_depth, normalize_charts, point_at_depth, FatouGerm, FatouTime};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::precision::{CDd, CField};
use crate::series::TruncatedSeries;
use crate::TWO_PI_I;

type C = Complex64;

/// A complex time defined near a curve of points; `hint` is a nearby value of
/// the same branch (multivalued charts pick the branch closest to it).
pub trait TimeChart: Sync {
    /// Time at `t` on the branch nearest `hint`, and its derivative.
    fn time(&self, t: C, hint: Option<C>) -> Result<(C, C)>;

    /// Time split as `hi + lo` for charts evaluated beyond double precision.
    fn time_split(&self, t: C, hint: Option<C>) -> Result<(C, C, C)> {
        let (v, d) = self.time(t, hint)?;
        Ok((v, C::new(0.0, 0.0), d))
    }
}

/// Chart shifted by a constant time.
pub struct Shifted<'a, T: TimeChart> {
    pub inner: &'a T,
    pub shift: C,
}

impl<T: TimeChart> TimeChart for Shifted<'_, T> {
    fn time(&self, t: C, hint: Option<C>) -> Result<(C, C)> {
        let (v, d) = self.inner.time(t, hint.map(|h| h - self.shift))?;
        Ok((v + self.shift, d))
    }

    fn time_split(&self, t: C, hint: Option<C>) -> Result<(C, C, C)> {
        let (hi, lo, d) = self.inner.time_split(t, hint.map(|h| h - self.shift))?;
        let (hi, lo) = (CDd::new(hi, lo) + CDd::from_c64(self.shift)).split();
        Ok((hi, lo, d))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransitionOptions {
    pub fourier_range: usize,
    /// Depth `Y` of the base sampling line, `|Im τ| = Y`.
    pub depth: f64,
    pub samples: usize,
    /// Shallowest admissible line depth, set from the chart radius.
    pub min_depth: f64,
    pub exec: ExecMode,
}

/// Serializable mirror of [`Exec`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl From<ExecMode> for Exec {
    fn from(m: ExecMode) -> Exec {
        match m {
            ExecMode::Sequential => Exec::Sequential,
            ExecMode::Parallel => Exec::Parallel,
        }
    }
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self {
            fourier_range: 3,
            depth: 2.0,
            samples: 256,
            min_depth: 0.0,
            exec: ExecMode::Parallel,
        }
    }
}

/// How the chart constants behind a transition were fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Period means of consecutive transitions set to zero.
    #[default]
    PeriodMean,
    /// Each chart matches the model time at a shared base point.
    ModelAnchor,
    /// Charts left unanchored; only translation-invariant observables mean anything.
    InvariantOnly,
}

impl Normalization {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "period-mean" => Some(Self::PeriodMean),
            "model-anchor" => Some(Self::ModelAnchor),
            "invariant-only" => Some(Self::InvariantOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionSample {
    pub j: usize,
    /// `s` in the half-plane `s·Im τ < c` where the transition lives.
    pub half_plane_sign: i32,
    /// `Im τ` of the base sampling line.
    pub line_im: f64,
    /// `(τ, ψ(τ))` along the base line.
    pub samples: Vec<(C, C)>,
    pub c0: C,
    pub fourier: BTreeMap<i32, C>,
    /// `|ψ(τ+1) − ψ(τ) − 1|` at the line end.
    pub periodicity_error: f64,
    /// Estimated error of `c_l` from line noise, per mode; reliable to about
    /// an order of magnitude.
    #[serde(default)]
    pub noise_floor: BTreeMap<i32, f64>,
    #[serde(default)]
    pub normalization: Normalization,
}

impl TransitionSample {
    pub fn coeff(&self, l: i32) -> C {
        if l == 0 {
            self.c0
        } else {
            self.fourier.get(&l).copied().unwrap_or_default()
        }
    }

    /// True when `|c_l|` stands above the noise of the line it was read on.
    pub fn resolved(&self, l: i32) -> bool {
        self.noise_floor.get(&l).is_none_or(|f| self.coeff(l).norm() > *f)
    }

    /// True when mode `l` is on the side allowed by the half-plane.
    pub fn allowed(&self, l: i32) -> bool {
        self.half_plane_sign * l < 0
    }

    /// Largest disallowed-side coefficient.
    pub fn disallowed_mass(&self) -> f64 {
        self.fourier
            .iter()
            .filter(|(l, _)| !self.allowed(**l))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Modulus of the first allowed-side coefficient.
    pub fn leading_abs(&self) -> f64 {
        self.coeff(-self.half_plane_sign).norm()
    }

    /// `c_{∓2}/c_{∓1}²` on the allowed side, invariant under any translation.
    pub fn ratio_invariant(&self) -> Option<C> {
        let s = -self.half_plane_sign;
        let c1 = self.coeff(s);
        if c1.norm() == 0.0 {
            return None;
        }
        Some(self.coeff(2 * s) / (c1 * c1))
    }

    /// The same transition after shifting the source chart by `a`.
    pub fn shifted_source(&self, a: C) -> TransitionSample {
        let mut out = self.clone();
        out.c0 -= a;
        for (l, c) in out.fourier.iter_mut() {
            *c *= (-TWO_PI_I * (*l as f64) * a).exp();
        }
        for (l, f) in out.noise_floor.iter_mut() {
            *f *= (TAU * (*l as f64) * a.im).exp();
        }
        out
    }
}

/// `c_l = mean((ψ(τ) − τ) e^{−2πilτ})` over samples covering one period.
pub fn fourier_coefficients(samples: &[(C, C)], ls: &[i32]) -> BTreeMap<i32, C> {
    let m = samples.len() as f64;
    ls.iter()
        .map(|&l| {
            let s: C = samples
                .iter()
                .map(|(t, p)| (p - t) * (-TWO_PI_I * l as f64 * t).exp())
                .sum();
            (l, s / m)
        })
        .collect()
}

/// Newton solve of `chart(t) = target` starting from `seed`.
/// Returns the point and the chart value actually attained there.
fn invert(chart: &dyn TimeChart, target: C, seed: C, hint: C) -> Result<(C, (C, C))> {
    let mut t = seed;
    let mut h = hint;
    let mut best: Option<(f64, C, (C, C))> = None;
    for _ in 0..40 {
        let (hi, lo, d) = chart.time_split(t, Some(h))?;
        let v = (hi, lo);
        let r = (hi - target) + lo;
        let rn = r.norm();
        if let Some((b, bt, bv)) = best {
            // converged to rounding: the residual stopped shrinking
            if rn >= 0.5 * b && b <= 1e-12 * target.norm().max(1.0) {
                return Ok((bt, bv));
            }
        }
        if best.is_none_or(|(b, _, _)| rn < b) {
            best = Some((rn, t, v));
        }
        if rn == 0.0 {
            return Ok((t, v));
        }
        let step = r / d;
        if !step.is_finite() {
            break;
        }
        // damp steps that would move far relative to |t|
        let lim = 0.25 * t.norm();
        let step = if step.norm() > lim {
            step * (lim / step.norm())
        } else {
            step
        };
        t -= step;
        h = target;
    }
    match best {
        Some((b, bt, bv)) if b <= 1e-12 * target.norm().max(1.0) => Ok((bt, bv)),
        _ => Err(Error::NewtonFailed(format!(
            "time inversion for τ = {target}"
        ))),
    }
}

/// Follows `targets` by Newton continuation; returns points and attained values.
fn continue_path(chart: &dyn TimeChart, targets: &[C], t0: C) -> Result<Vec<(C, (C, C))>> {
    let mut out = Vec::with_capacity(targets.len());
    let mut t = t0;
    let mut prev: Option<C> = None;
    for &target in targets {
        let hint = prev.unwrap_or(target);
        let (tn, v) = invert(chart, target, t, hint)?;
        t = tn;
        out.push((tn, v));
        prev = Some(v.0 + v.1);
    }
    Ok(out)
}

fn segment(a: C, b: C, max_step: f64) -> Vec<C> {
    let n = ((b - a).norm() / max_step).ceil().max(1.0) as usize;
    (1..=n)
        .map(|i| a + (b - a) * (i as f64 / n as f64))
        .collect()
}

/// Samples `ψ = to∘from⁻¹` on horizontal lines and extracts Fourier modes.
///
/// `anchor` is a point of the overlap; the base line passes through
/// `from(anchor)` and mode `l` is read off the line at depth `Y/|l|` from the
/// real axis on the same side.
pub fn sample_transition(
    from: &dyn TimeChart,
    to: &dyn TimeChart,
    j: usize,
    half_plane_sign: i32,
    anchor: C,
    opts: &TransitionOptions,
) -> Result<TransitionSample> {
    let (tau_b, _) = from.time(anchor, None)?;
    let (to_b, _) = to.time(anchor, None)?;
    let side = -(half_plane_sign as f64);
    let y0 = tau_b.im.abs();
    let r = opts.fourier_range as i32;
    let m = opts.samples.max(8);
    let x0 = tau_b.re - 0.5;

    let line = |depth: f64, n: usize| -> Vec<C> {
        (0..=n)
            .map(|i| C::new(x0 + i as f64 / n as f64, side * depth))
            .collect()
    };

    // mode l is read at depth Y/|l|, never shallower than the chart allows
    // shallow lines get denser sampling to damp the amplified rounding noise
    let mut lines: Vec<(f64, usize)> = vec![(y0, m)];
    for l in 2..=r {
        lines.push(((y0 / l as f64).max(opts.min_depth).min(y0), 4 * m));
    }

    let exec: Exec = opts.exec.into();
    let results = exec.map(&lines, |&(depth, n)| -> Result<Vec<(C, C)>> {
        let pts = line(depth, n);
        let start = C::new(tau_b.re, side * depth);
        let mut path = segment(tau_b, start, 0.02);
        path.extend(segment(start, pts[0], 1.0 / n as f64));
        let lead = path.len();
        path.extend(pts.iter().skip(1).copied());
        let found = continue_path(from, &path, anchor)?;
        let found = &found[lead - 1..];
        // the target chart is continued along the same points
        let mut out = Vec::with_capacity(found.len());
        let mut hint = to_b;
        let mut approach = segment(anchor, found[0].0, anchor.norm() * 0.05);
        approach.pop();
        for t in approach {
            hint = to.time(t, Some(hint))?.0;
        }
        // ψ(τ) − τ is read at the attained τ and placed on the uniform node
        for (&(t, (tau, tau_lo)), node) in found.iter().zip(&pts) {
            let (v, v_lo, _) = to.time_split(t, Some(hint))?;
            hint = v + v_lo;
            out.push((*node, *node + ((v - tau) + (v_lo - tau_lo))));
        }
        Ok(out)
    });
    let mut per_line = Vec::with_capacity(results.len());
    for r in results {
        per_line.push(r?);
    }

    let base = &per_line[0];
    let samples: Vec<(C, C)> = base[..m].to_vec();
    let periodicity_error = (base[m].1 - base[0].1 - 1.0).norm();
    let mut fourier = BTreeMap::new();
    let mut noise_floor = BTreeMap::new();
    let c0 = fourier_coefficients(&samples, &[0])[&0];
    // rounding of τ itself is the noise; mode l is amplified by e^{2π|l|depth}
    let scale = base.iter().map(|(t, _)| t.norm()).fold(1.0, f64::max);
    let noise = periodicity_error.max(f64::EPSILON * scale);
    for l in 1..=r {
        let pl = &per_line[(l - 1) as usize];
        let f = fourier_coefficients(&pl[..pl.len() - 1], &[l, -l]);
        fourier.insert(l, f[&l]);
        fourier.insert(-l, f[&-l]);
        // disallowed modes vanish exactly, so what is read there is line noise
        let gain = (TAU * l as f64 * lines[(l - 1) as usize].0).exp();
        let stray = f[&(half_plane_sign * l)].norm() * gain;
        let floor = noise.max(stray) * gain;
        noise_floor.insert(l, floor);
        noise_floor.insert(-l, floor);
    }
    Ok(TransitionSample {
        j,
        half_plane_sign,
        line_im: side * y0,
        samples,
        c0,
        fourier,
        periodicity_error,
        noise_floor,
        normalization: Normalization::default(),
    })
}

/// Fractions of the radius that sampling lines may reach, tried in order.
/// The first matches the model bound; orbits started that close to the rim
/// can leave the disc, so the second stays well inside.
pub const REACH: [f64; 2] = [0.995, 0.8];

/// Samples the transition `j` with the line floor raised by `depth_floor` for
/// each entry of `REACH` in turn, keeping the first that succeeds.
#[allow(clippy::too_many_arguments)]
pub fn sample_with_floor(
    from: &dyn TimeChart,
    to: &dyn TimeChart,
    k: usize,
    radius: f64,
    theta: f64,
    j: usize,
    sign: i32,
    anchor: C,
    opts: &TransitionOptions,
) -> Result<TransitionSample> {
    let hint = from.time(anchor, None)?.0;
    let mut last = None;
    for reach in REACH {
        let mut o = *opts;
        o.min_depth = o.min_depth.max(depth_floor(
            from,
            k,
            theta,
            radius,
            reach,
            -(sign as f64),
            hint,
        ));
        match sample_transition(from, to, j, sign, anchor, &o) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("reach list is nonempty"))
}

/// Depth of the shallowest line `Im τ = const` whose model image stays
/// inside the disc of radius `radius`.
pub fn min_line_depth(k: usize, radius: f64) -> f64 {
    let reach = 0.995 * radius;
    1.0 / (std::f64::consts::TAU * k as f64 * reach.powi(k as i32))
}

/// Shallowest safe line depth for `chart` around the overlap direction
/// `theta`: the model bound, raised to the deepest image of the arc
/// `|t| = reach·radius` across the overlap. Arc points the chart rejects are
/// skipped.
pub fn depth_floor(
    chart: &dyn TimeChart,
    k: usize,
    theta: f64,
    radius: f64,
    reach: f64,
    side: f64,
    hint: C,
) -> f64 {
    let half = 0.9 * PI / (4.0 * k as f64);
    let n = 24;
    (0..=n)
        .filter_map(|m| {
            let a = theta - half + 2.0 * half * m as f64 / n as f64;
            chart
                .time(C::from_polar(reach * radius, a), Some(hint))
                .ok()
        })
        .map(|(v, _)| side * v.im)
        .fold(min_line_depth(k, radius), f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EVModulus {
    pub k: usize,
    pub lambda: C,
    pub norm_constants: Vec<C>,
    pub closure: C,
    pub transitions: Vec<TransitionSample>,
}

/// All `2k` transitions `ψ_j = τ_{j+1}∘τ_j⁻¹` with `τ_{2k} = τ_0 + λ`.
pub fn ev_transitions(sys: &FatouGerm, opts: &TransitionOptions) -> Result<EVModulus> {
    let k = sys.k();
    let norm = normalize_charts(sys)?;
    let mut wrap = sys.chart(2 * k)?;
    wrap.norm_constant = norm.charts[0].norm_constant;
    let mut opts = *opts;
    opts.min_depth = opts.min_depth.max(min_line_depth(k, sys.germ.radius_hint));
    let opts = &opts;
    let mut transitions = Vec::with_capacity(2 * k);
    for j in 0..2 * k {
        let from = FatouTime {
            sys,
            chart: norm.charts[j],
        };
        let to = FatouTime {
            sys,
            chart: if j + 1 == 2 * k {
                wrap
            } else {
                norm.charts[j + 1]
            },
        };
        let theta = PI * (j + 1) as f64 / k as f64;
        let anchor = point_at_depth(k, anchor_depth(k, sys.germ.radius_hint, opts.depth), theta);
        let sign = if j % 2 == 0 { 1 } else { -1 };
        transitions.push(sample_with_floor(
            &from,
            &to,
            k,
            sys.germ.radius_hint,
            theta,
            j,
            sign,
            anchor,
            opts,
        )?);
    }
    Ok(EVModulus {
        k,
        lambda: sys.lambda,
        norm_constants: norm.charts.iter().map(|c| c.norm_constant).collect(),
        closure: norm.closure,
        transitions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// The pair `(φ_l, φ_{l+1})` recovered from `φ_{l,l+2} = φ_{l+1}∘φ_l`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitPair {
    pub parity: Parity,
    /// `φ_{l,l+2}(0)` (even) or `φ_{l,l+2}^{-1}(0)` (odd).
    pub shift: C,
}

impl SplitPair {
    pub fn phi_l(&self, composed: impl Fn(C) -> C, s: C) -> C {
        match self.parity {
            Parity::Even => composed(s) - self.shift,
            Parity::Odd => s - self.shift,
        }
    }

    pub fn phi_l1(&self, composed: impl Fn(C) -> C, s: C) -> C {
        match self.parity {
            Parity::Even => s + self.shift,
            Parity::Odd => composed(s + self.shift),
        }
    }
}

/// Splits a composed integral-coordinate transition into its two factors.
///
/// `composed` returns value and derivative; the odd case inverts it near 0 by
/// Newton from `seed`.
pub fn split_composition(
    composed: impl Fn(C) -> (C, C),
    parity: Parity,
    seed: C,
) -> Result<SplitPair> {
    let shift = match parity {
        Parity::Even => composed(C::new(0.0, 0.0)).0,
        Parity::Odd => {
            let mut s = seed;
            let mut ok = false;
            for _ in 0..60 {
                let (v, d) = composed(s);
                let step = v / d;
                if !step.is_finite() {
                    break;
                }
                s -= step;
                if step.norm() <= 1e-16 * s.norm().max(1.0) {
                    ok = true;
                    break;
                }
            }
            let (v, d) = composed(s);
            if !ok && v.norm() > 1e-14 {
                return Err(Error::NotUnivalent(format!("no preimage of 0 near {seed}")));
            }
            if d.norm() < 1e-12 {
                return Err(Error::NotUnivalent(format!(
                    "critical point near the preimage {s}"
                )));
            }
            -s
        }
    };
    // for the odd case φ_l(σ) = σ − φ^{-1}(0): store φ^{-1}(0) with sign folded in
    let shift = match parity {
        Parity::Even => shift,
        Parity::Odd => -shift,
    };
    Ok(SplitPair { parity, shift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralChart {
    /// `σ = e^{2πiτ}`, small as `Im τ → +∞`.
    Zero,
    /// `σ = e^{−2πiτ}`, small as `Im τ → −∞`.
    Infinity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralTransition {
    pub chart: IntegralChart,
    /// `φ'(0)`.
    pub multiplier: C,
    /// Taylor jet of `φ(σ)` at 0.
    pub series: TruncatedSeries,
    /// `(σ, φ(σ))` mapped from the time samples.
    pub samples: Vec<(C, C)>,
}

impl IntegralTransition {
    /// `|φ''(0) / (2 φ'(0))|`, the first nonlinear invariant of the germ.
    pub fn second_coefficient_ratio(&self) -> f64 {
        (self.series.coeff(2) / self.series.coeff(1)).norm()
    }
}

/// `E(τ) = e^{2πiτ}`.
pub fn integral_from_time(tau: C) -> C {
    (TWO_PI_I * tau).exp()
}

/// `φ = E∘ψ∘E⁻¹` for the chart whose small values lie on the allowed side.
pub fn time_to_integral(
    psi: &TransitionSample,
    chart: IntegralChart,
) -> Result<IntegralTransition> {
    // allowed side l < 0 ⇔ Im τ → −∞ ⇔ the Infinity chart
    let want = match chart {
        IntegralChart::Zero => -1,
        IntegralChart::Infinity => 1,
    };
    if psi.half_plane_sign != want {
        return Err(Error::BranchMismatch);
    }
    let sgn = if chart == IntegralChart::Zero {
        1.0
    } else {
        -1.0
    };
    let e = |tau: C| (sgn * TWO_PI_I * tau).exp();
    let r = psi
        .fourier
        .keys()
        .map(|l| l.unsigned_abs() as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    let order = r + 1;
    // φ(σ) = σ · exp(s(σ)), s = ±2πi (c_0 + Σ c_l σ^{|l|}) over the allowed side
    let mut s = vec![C::new(0.0, 0.0); order + 1];
    s[0] = sgn * TWO_PI_I * psi.c0;
    for (l, c) in &psi.fourier {
        if psi.allowed(*l) {
            let p = l.unsigned_abs() as usize;
            if p < order {
                s[p] += sgn * TWO_PI_I * c;
            }
        }
    }
    let ex = series_exp(&s);
    let mut coeffs = vec![C::new(0.0, 0.0); order + 1];
    coeffs[1..(order + 1)].copy_from_slice(&ex[..order]);
    let series = TruncatedSeries::from_coeffs(order, &coeffs)?;
    let samples = psi.samples.iter().map(|(t, p)| (e(*t), e(*p))).collect();
    Ok(IntegralTransition {
        chart,
        multiplier: ex[0],
        series,
        samples,
    })
}

/// `exp` of a power series, same truncation.
fn series_exp(s: &[C]) -> Vec<C> {
    let n = s.len();
    let mut e = vec![C::new(0.0, 0.0); n];
    e[0] = s[0].exp();
    for m in 1..n {
        let mut acc = C::new(0.0, 0.0);
        for j in 1..=m {
            acc += s[j] * j as f64 * e[m - j];
        }
        e[m] = acc / m as f64;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fatou::{FatouOptions, GermSpec};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn synthetic_fourier() {
        let m = 256;
        let samples: Vec<(C, C)> = (0..m)
            .map(|i| {
                let t = c(i as f64 / m as f64, -0.25);
                (t, t + 3.0 + 0.5 * (-TWO_PI_I * t).exp())
            })
            .collect();
        let f = fourier_coefficients(&samples, &[0, -1, 1]);
        assert!((f[&0] - 3.0).norm() < 1e-12);
        assert!((f[&-1] - 0.5).norm() < 1e-12);
        assert!(f[&1].norm() < 1e-12);
    }

    #[test]
    fn moebius_transitions_are_translations() {
        let sys =
            FatouGerm::new(GermSpec::moebius(0.155).unwrap(), FatouOptions::default()).unwrap();
        let ev = ev_transitions(&sys, &TransitionOptions::default()).unwrap();
        assert_eq!(ev.transitions.len(), 2);
        for tr in &ev.transitions {
            for l in 1..=3 {
                assert!(
                    tr.coeff(l).norm() <= 1e-8 && tr.coeff(-l).norm() <= 1e-8,
                    "{} {:?}",
                    tr.j,
                    tr.fourier
                );
            }
            assert!(tr.periodicity_error < 1e-9);
        }
    }

    #[test]
    fn time_to_integral_examples() {
        let mk = |sign: i32, c0: C, f: &[(i32, C)]| TransitionSample {
            j: 0,
            half_plane_sign: sign,
            line_im: 0.0,
            samples: vec![],
            c0,
            fourier: f.iter().copied().collect(),
            periodicity_error: 0.0,
            noise_floor: BTreeMap::new(),
            normalization: Normalization::default(),
        };
        let a = c(0.2, 0.05);
        let it = time_to_integral(&mk(-1, a, &[]), IntegralChart::Zero).unwrap();
        assert!((it.multiplier - (TWO_PI_I * a).exp()).norm() < 1e-15);
        let it = time_to_integral(
            &mk(-1, c(0.0, 0.0), &[(1, c(0.1, 0.0))]),
            IntegralChart::Zero,
        )
        .unwrap();
        // σ exp(0.2πiσ) = σ + 0.2πi σ² + ...
        assert!((it.series.coeff(2) - c(0.0, 0.2 * PI)).norm() < 1e-15);
        assert!(matches!(
            time_to_integral(&mk(1, a, &[]), IntegralChart::Zero),
            Err(Error::BranchMismatch)
        ));
    }

    #[test]
    fn split_examples() {
        let f = |s: C| (s + 0.2 * s * s, 1.0 + 0.4 * s);
        let p = split_composition(f, Parity::Even, c(0.0, 0.0)).unwrap();
        assert!(p.shift.norm() == 0.0);
        let g = |s: C| (0.3 + s + 0.2 * s * s, 1.0 + 0.4 * s);
        let p = split_composition(g, Parity::Even, c(0.0, 0.0)).unwrap();
        let s = c(0.1, 0.2);
        assert!((p.phi_l1(|x| g(x).0, s) - (s + 0.3)).norm() < 1e-15);
        assert!((p.phi_l(|x| g(x).0, s) - (s + 0.2 * s * s)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn split_round_trip(a in -0.3f64..0.3, b in -0.3f64..0.3, q in -0.2f64..0.2, odd in proptest::bool::ANY) {
            let a0 = c(a, b);
            let comp = move |s: C| (a0 + s + q * s * s, 1.0 + 2.0 * q * s);
            let parity = if odd { Parity::Odd } else { Parity::Even };
            let p = split_composition(comp, parity, c(0.0, 0.0)).unwrap();
            for m in 0..12 {
                let s = C::from_polar(0.05 + 0.02 * m as f64, 0.7 * m as f64);
                let back = p.phi_l1(|x| comp(x).0, p.phi_l(|x| comp(x).0, s));
                prop_assert!((back - comp(s).0).norm() <= 1e-12);
            }
        }
    }
}
