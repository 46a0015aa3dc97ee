//! Koenigs linearizers `φ(f(t)) = μ φ(t)` and the complex times
//! `τ = ln φ / ln μ` on slit domains.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{fixed_point_of, model_field_from, FixedPointData, GermFamily, Stability};
use crate::error::{Error, Result};
use crate::fatou::TimeChart;
use crate::geometry::{sector_for_singularity, Sector};
use crate::maps::RationalMap;
use crate::precision::{CDd, CField, Dd, Precision, TAU_DD};
use crate::series::mul_trunc;
use crate::TWO_PI_I;

type C = Complex64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KoenigsOptions {
    pub iter_cap: usize,
    /// Order of the local linearizing series at the fixed point.
    pub series_order: usize,
    pub precision: Precision,
}

impl Default for KoenigsOptions {
    fn default() -> Self {
        Self {
            iter_cap: 200_000,
            series_order: 24,
            precision: Precision::Double,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KoenigsChart {
    pub fp: FixedPointData,
    pub map: RationalMap,
    /// Slits are the segments `[0, s]` for each listed endpoint.
    pub slits: Vec<C>,
    pub sector: Option<Sector>,
    pub radius: f64,
    pub base_point: C,
    /// `φ(base_point)`; times are `ln(φ/φ_b)/ln μ + τ_b`.
    pub base_phi: C,
    #[serde(default)]
    pub base_phi_lo: C,
    /// `τ(base_point)` on the branch everything is continued from.
    pub base_tau: C,
    /// Local series `φ(α + w) = Σ b_m w^m`, `b_0 = 0`, `b_1 = 1`.
    pub local: Vec<C>,
    /// Orbits are iterated until they enter this disc around `α`.
    pub stop_radius: f64,
    /// Low part of `α` for double-double orbits.
    pub alpha_lo: C,
    /// Low part of `ln μ` for double-double times.
    #[serde(default)]
    pub log_mu_lo: C,
    pub opts: KoenigsOptions,
}

#[derive(Debug, Clone, Copy)]
pub struct KoenigsValue {
    pub phi: C,
    pub phi_lo: C,
    pub dphi: C,
    pub iters: usize,
}

/// How a continuation treats slit crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    SingleValued,
    Continue,
}

fn local_series(map: &RationalMap, fp: &FixedPointData, n: usize) -> Result<Vec<C>> {
    let g = map.localize(fp.alpha).jet(n)?;
    let mut powers: Vec<Vec<C>> = vec![g.coeffs().to_vec()];
    for j in 1..n {
        let next = mul_trunc(&powers[j - 1], g.coeffs(), n);
        powers.push(next);
    }
    let mut b = vec![C::new(0.0, 0.0); n + 1];
    b[1] = C::new(1.0, 0.0);
    let mu = fp.mu;
    for m in 2..=n {
        let mut known = C::new(0.0, 0.0);
        for j in 1..m {
            known += b[j] * powers[j - 1][m];
        }
        b[m] = known / (mu - mu.powu(m as u32));
    }
    Ok(b)
}

fn powi<F: CField>(x: F, mut n: usize) -> F {
    let mut acc = F::one();
    let mut base = x;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        n >>= 1;
    }
    acc
}

fn dd(hi: C, lo: C) -> CDd {
    CDd {
        re: Dd::new(hi.re) + Dd::new(lo.re),
        im: Dd::new(hi.im) + Dd::new(lo.im),
    }
}

fn orient(a: C, b: C, c: C) -> f64 {
    (b - a).re * (c - a).im - (b - a).im * (c - a).re
}

/// Closed segments `[p, q]` and `[a, b]` intersect.
fn segments_meet(p: C, q: C, a: C, b: C) -> bool {
    let d1 = orient(a, b, p);
    let d2 = orient(a, b, q);
    let d3 = orient(p, q, a);
    let d4 = orient(p, q, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |x: C, y: C, z: C, d: f64| {
        d == 0.0
            && z.re >= x.re.min(y.re)
            && z.re <= x.re.max(y.re)
            && z.im >= x.im.min(y.im)
            && z.im <= x.im.max(y.im)
    };
    on(a, b, p, d1) || on(a, b, q, d2) || on(p, q, a, d3) || on(p, q, b, d4)
}

fn dist_to_segment(t: C, a: C, b: C) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (t - a).norm();
    }
    let u = (((t - a) * ab.conj()).re / l2).clamp(0.0, 1.0);
    (t - (a + ab * u)).norm()
}

impl KoenigsChart {
    /// Chart at the fixed point of `map` near `seed`, without slits or sector.
    pub fn for_map(map: RationalMap, seed: C, radius: f64, opts: KoenigsOptions) -> Result<Self> {
        let fp = fixed_point_of(&map, seed)?;
        Self::assemble(map, fp, Vec::new(), None, radius, opts)
    }

    fn assemble(
        map: RationalMap,
        fp: FixedPointData,
        slits: Vec<C>,
        sector: Option<Sector>,
        radius: f64,
        opts: KoenigsOptions,
    ) -> Result<Self> {
        let n = opts.series_order.max(2);
        let local = local_series(&map, &fp, n)?;
        let mut r = f64::INFINITY;
        for (m, b) in local.iter().enumerate().skip(2) {
            if b.norm() > 0.0 {
                r = r.min(b.norm().powf(-1.0 / (m - 1) as f64));
            }
        }
        let stop_radius = (0.05 * r).min(radius);
        // refine α in double-double
        let mut a = dd(fp.alpha, C::new(0.0, 0.0));
        for _ in 0..2 {
            let (v, d) = map.eval_d_in(a);
            a = a - (v - a) / (d - CDd::one());
        }
        let alpha_lo = (a - CDd::from_c64(fp.alpha)).to_c64();
        let mut lm = map.eval_d_in(a).1.ln();
        let gap = fp.log_mu.im - lm.im.hi;
        if gap > std::f64::consts::PI {
            lm.im = lm.im + TAU_DD;
        } else if gap < -std::f64::consts::PI {
            lm.im = lm.im - TAU_DD;
        }
        let log_mu_lo = (lm - CDd::from_c64(fp.log_mu)).to_c64();
        let mut chart = Self {
            fp,
            map,
            slits,
            sector,
            radius,
            base_point: C::new(0.0, 0.0),
            base_phi: C::new(1.0, 0.0),
            base_phi_lo: C::new(0.0, 0.0),
            base_tau: C::new(0.0, 0.0),
            local,
            stop_radius,
            alpha_lo,
            log_mu_lo,
            opts,
        };
        let probe = fp.alpha + C::from_polar(0.5 * stop_radius.min(radius), 0.3);
        let v = chart.eval_unchecked(probe)?;
        chart.base_point = probe;
        chart.base_phi = v.phi;
        chart.base_phi_lo = v.phi_lo;
        chart.base_tau = v.phi.ln() / fp.log_mu;
        Ok(chart)
    }

    /// Shifts the chart so that `τ(b) = target`, with `b` the new base point.
    pub fn anchor(&mut self, b: C, target: C) -> Result<()> {
        self.check_domain(b)?;
        let v = self.eval_unchecked(b)?;
        self.base_phi = v.phi;
        self.base_phi_lo = v.phi_lo;
        self.base_point = b;
        self.base_tau = target;
        Ok(())
    }

    pub fn check_domain(&self, t: C) -> Result<()> {
        if !(t.norm() < self.radius) {
            return Err(Error::OutsideDomain(format!(
                "{t} outside the disc of radius {}",
                self.radius
            )));
        }
        if let Some(s) = &self.sector {
            if !s.contains(t) {
                return Err(Error::OutsideDomain(format!(
                    "{t} outside the chart sector"
                )));
            }
        }
        for a in &self.slits {
            if dist_to_segment(t, C::new(0.0, 0.0), *a) <= 1e-12 * a.norm().max(t.norm()) {
                return Err(Error::OutsideDomain(format!(
                    "{t} lies on the slit [0, {a}]"
                )));
            }
        }
        Ok(())
    }

    /// `2πi / ln μ`, the ambiguity of the time.
    pub fn period(&self) -> C {
        TWO_PI_I / self.fp.log_mu
    }

    fn orbit<F: CField>(&self, t: C, alpha: F) -> Result<(F, F, usize)> {
        let mut z = F::from_c64(t);
        let mut dz = F::one();
        let mut n = 0usize;
        let escape = 2.0 * self.radius;
        while (z - alpha).norm() > self.stop_radius {
            if n >= self.opts.iter_cap {
                return Err(Error::NotConverged(format!(
                    "iteration cap {} reached at {t}",
                    self.opts.iter_cap
                )));
            }
            match self.fp.stability {
                Stability::Attracting => {
                    let (fz, fp) = self.map.eval_d_in(z);
                    z = fz;
                    dz = dz * fp;
                }
                Stability::Repelling => {
                    let s = self.map.inverse_near_in(z)?;
                    let (_, fp) = self.map.eval_d_in(s);
                    z = s;
                    dz = dz / fp;
                }
            }
            n += 1;
            let zn = z.norm();
            if !(zn < escape) {
                return Err(Error::NotConverged(format!(
                    "orbit of {t} leaves the evaluation disc"
                )));
            }
        }
        let w = z - alpha;
        let mut v = F::zero();
        let mut d = F::zero();
        for b in self.local.iter().rev() {
            d = d * w + v;
            v = v * w + F::from_c64(*b);
        }
        let (_, mu) = self.map.eval_d_in(alpha);
        let scale = match self.fp.stability {
            Stability::Attracting => F::one() / powi(mu, n),
            Stability::Repelling => powi(mu, n),
        };
        Ok((scale * v, scale * d * dz, n))
    }

    /// `φ(t)`, `φ'(t)` without domain checks.
    pub fn eval_unchecked(&self, t: C) -> Result<KoenigsValue> {
        let (phi, phi_lo, dphi, iters) = match self.opts.precision {
            Precision::Double => {
                let (p, d, n) = self.orbit::<C>(t, self.fp.alpha)?;
                (p, C::new(0.0, 0.0), d, n)
            }
            Precision::DoubleDouble => {
                let (p, d, n) = self.orbit::<CDd>(t, dd(self.fp.alpha, self.alpha_lo))?;
                let (hi, lo) = p.split();
                (hi, lo, d.to_c64(), n)
            }
        };
        if !phi.is_finite() || phi.norm() == 0.0 {
            return Err(Error::NotConverged(format!("linearizer degenerate at {t}")));
        }
        Ok(KoenigsValue {
            phi,
            phi_lo,
            dphi,
            iters,
        })
    }

    pub fn eval(&self, t: C) -> Result<KoenigsValue> {
        self.check_domain(t)?;
        self.eval_unchecked(t)
    }

    /// `Ln(φ/φ_b)/ln μ + τ_b` with the principal log, its derivative and the
    /// iteration count.
    pub fn raw_time(&self, t: C) -> Result<(C, C, usize)> {
        let (hi, lo, d, n) = self.raw_time_split(t)?;
        Ok((hi + lo, d, n))
    }

    /// [`Self::raw_time`] with the value split into high and low parts; the
    /// low part is zero in double precision.
    fn raw_time_split(&self, t: C) -> Result<(C, C, C, usize)> {
        let v = self.eval_unchecked(t)?;
        let lm = self.fp.log_mu;
        let d = v.dphi / (v.phi * lm);
        match self.opts.precision {
            Precision::Double => Ok((
                (v.phi / self.base_phi).ln() / lm + self.base_tau,
                C::new(0.0, 0.0),
                d,
                v.iters,
            )),
            Precision::DoubleDouble => {
                let ratio = dd(v.phi, v.phi_lo) / dd(self.base_phi, self.base_phi_lo);
                let tau = ratio.ln() / dd(lm, self.log_mu_lo) + CDd::from_c64(self.base_tau);
                let (hi, lo) = tau.split();
                Ok((hi, lo, d, v.iters))
            }
        }
    }

    /// The branch of the time closest to `hint`.
    pub fn time_near(&self, t: C, hint: C) -> Result<(C, C)> {
        let (hi, lo, d) = self.time_near_split(t, hint)?;
        Ok((hi + lo, d))
    }

    fn time_near_split(&self, t: C, hint: C) -> Result<(C, C, C)> {
        self.check_domain(t)?;
        let (hi, lo, d, _) = self.raw_time_split(t)?;
        let p = self.period();
        let n = ((hint - hi - lo) / p).re.round();
        if n == 0.0 {
            return Ok((hi, lo, d));
        }
        let (hi, lo) = (dd(hi, lo) + CDd::from_c64(p * n)).split();
        Ok((hi, lo, d))
    }

    fn crosses_slit(&self, p: C, q: C) -> bool {
        self.slits
            .iter()
            .any(|a| segments_meet(p, q, C::new(0.0, 0.0), *a))
    }

    /// Continues the time along a polyline starting at the base point.
    pub fn continue_along(&self, path: &[C], mode: PathMode) -> Result<C> {
        let skip = usize::from(path.first() == Some(&self.base_point));
        let mut pts = vec![self.base_point];
        pts.extend(path.iter().skip(skip).copied());
        let mut tau = self.base_tau;
        let mut cur = self.base_point;
        for &next in &pts[1..] {
            if self.crosses_slit(cur, next) && mode == PathMode::SingleValued {
                return Err(Error::BranchCut(format!("{cur} → {next}")));
            }
            while cur != next {
                let near = self
                    .slits
                    .iter()
                    .map(|a| (cur - a).norm())
                    .chain(std::iter::once(cur.norm()))
                    .fold(f64::INFINITY, f64::min);
                let h = (0.1 * near).max(1e-4 * (next - cur).norm());
                let step = next - cur;
                let p = if step.norm() <= h {
                    next
                } else {
                    cur + step * (h / step.norm())
                };
                tau = self.time_near(p, tau)?.0;
                cur = p;
            }
        }
        Ok(tau)
    }
}

impl TimeChart for KoenigsChart {
    fn time(&self, t: C, hint: Option<C>) -> Result<(C, C)> {
        let (hi, lo, d) = self.time_split(t, hint)?;
        Ok((hi + lo, d))
    }

    fn time_split(&self, t: C, hint: Option<C>) -> Result<(C, C, C)> {
        let h = match hint {
            Some(h) => h,
            None => self.continue_along(&[t], PathMode::SingleValued)?,
        };
        self.time_near_split(t, h)
    }
}

/// Chart at `α_i(ε)`, anchored so that `τ(b) = T_w(b)` for the model field `w`.
pub fn build_chart(
    fam: &GermFamily,
    eps: C,
    i: usize,
    b: C,
    opts: KoenigsOptions,
) -> Result<KoenigsChart> {
    let roots = fam.roots_at(eps)?;
    let map = fam.map_at(&roots)?;
    let a = *roots
        .roots
        .get(i)
        .ok_or_else(|| Error::Config(format!("no root with index {i}")))?;
    let fp = fixed_point_of(&map, a)?;
    let family = fam.all_roots()?;
    let (sector, _) = sector_for_singularity(&family, i, fam.radius)?;
    let slits = roots.roots.clone();
    let field = model_field_from(roots, i, fp.log_mu)?;
    let mut chart = KoenigsChart::assemble(map, fp, slits, Some(sector), fam.radius, opts)?;
    chart.anchor(b, field.time(b))?;
    Ok(chart)
}

pub fn koenigs_eval(chart: &KoenigsChart, t: C) -> Result<C> {
    chart.eval(t).map(|v| v.phi)
}

/// `τ(t)` continued from the base point along `path` (ending at `t`).
pub fn perturbed_time(chart: &KoenigsChart, path: &[C], mode: PathMode) -> Result<C> {
    chart.continue_along(path, mode)
}

/// `ln μ · φ(t) / φ'(t)`.
pub fn generator_eval(chart: &KoenigsChart, t: C) -> Result<C> {
    let v = chart.eval(t)?;
    Ok(chart.fp.log_mu * v.phi / v.dphi)
}

/// `max |τ(f(t)) − τ(t) − 1|` over `grid`.
pub fn abel_residual(chart: &KoenigsChart, grid: &[C]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in grid {
        let (a, _) = chart.time(t, None)?;
        let (b, _) = chart.time_near(chart.map.eval(t), a + 1.0)?;
        worst = worst.max((b - a - 1.0).norm());
    }
    Ok(worst)
}

/// `max |φ(f(t)) − μ φ(t)| / |φ(t)|` over `grid`.
pub fn koenigs_residual(chart: &KoenigsChart, grid: &[C]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in grid {
        let a = chart.eval(t)?.phi;
        let b = chart.eval(chart.map.eval(t))?.phi;
        worst = worst.max((b - chart.fp.mu * a).norm() / a.norm());
    }
    Ok(worst)
}
