//! Perturbed parabolic families `f_ε`: fixed points and multipliers, Koenigs
//! charts and their complex times, the model field `w_ε`, and transitions
//! between neighbouring charts as `ε → 0`.

mod chart;
mod sweep;

pub use chart::{
    abel_residual, build_chart, generator_eval, koenigs_eval, koenigs_residual, perturbed_time,
    KoenigsChart, KoenigsOptions, KoenigsValue, PathMode,
};
pub use sweep::{
    anchored_reference, convergence_sweep, perturbed_transition, Observable, ObservableSeries,
    PerturbedTransition, SweepError, SweepOptions, SweepReport, SweepRow,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fatou::GermSpec;
use crate::geometry::FamilyRoots;
use crate::maps::RationalMap;
use crate::ode::{integrate, OdeOptions};
use crate::roots::{newton_root, poly_from_roots, poly_mul, poly_roots};
use crate::TWO_PI_I;

type C = Complex64;

/// Where the roots `α_i(ε)` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSource {
    /// One root list per entry of `eps_list`.
    Explicit(Vec<Vec<C>>),
    /// `p(t, ε) = Σ p[a][b] t^a ε^b`, monic of degree `k + 1` in `t`.
    Bivariate(Vec<Vec<C>>),
}

/// The shape of `f_ε` around its fixed points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMap {
    /// `t + 2πi (1 + q(t, ε)) ∏(t − α_i)`, `q = Σ q[a][b] t^a ε^b`.
    Product { q: Vec<Vec<C>> },
    /// The Möbius map fixing `±α` with multiplier `e^{4πiα}` at `α` (k = 1).
    Moebius,
    /// Polynomial maps given per entry of `eps_list`, plus the map at `ε = 0`;
    /// used for fitted monodromy germs.
    Tabulated { maps: Vec<Vec<C>>, unperturbed: Vec<C> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermFamily {
    pub k: usize,
    pub roots: RootSource,
    pub map: FamilyMap,
    pub eps_list: Vec<C>,
    /// Radius `δ` of the evaluation disc.
    pub radius: f64,
}

fn eval_bivariate(p: &[Vec<C>], t: C, eps: C) -> C {
    t_coeffs(p, eps)
        .iter()
        .rev()
        .fold(C::new(0.0, 0.0), |acc, c| acc * t + c)
}

/// `t`-coefficients of a bivariate table at fixed `ε`.
pub(crate) fn t_coeffs(p: &[Vec<C>], eps: C) -> Vec<C> {
    p.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(b, v)| v * eps.powu(b as u32))
                .sum()
        })
        .collect()
}

impl GermFamily {
    /// `t + 2πi (1 + q) (t² − ε)`, roots `±√ε`.
    pub fn quadratic(q: Vec<Vec<C>>, eps_list: Vec<C>, radius: f64) -> Self {
        let p = vec![
            vec![C::new(0.0, 0.0), C::new(-1.0, 0.0)],
            vec![],
            vec![C::new(1.0, 0.0)],
        ];
        Self {
            k: 1,
            roots: RootSource::Bivariate(p),
            map: FamilyMap::Product { q },
            eps_list,
            radius,
        }
    }

    /// Möbius maps fixing `±√ε`.
    pub fn moebius(eps_list: Vec<C>, radius: f64) -> Self {
        let p = vec![
            vec![C::new(0.0, 0.0), C::new(-1.0, 0.0)],
            vec![],
            vec![C::new(1.0, 0.0)],
        ];
        Self {
            k: 1,
            roots: RootSource::Bivariate(p),
            map: FamilyMap::Moebius,
            eps_list,
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Config("radius must be positive".into()));
        }
        match &self.map {
            FamilyMap::Product { q } => {
                let q00 = q
                    .first()
                    .and_then(|r| r.first())
                    .copied()
                    .unwrap_or_default();
                if q00.norm() != 0.0 {
                    return Err(Error::Config("q(0, 0) must vanish".into()));
                }
            }
            FamilyMap::Moebius => {
                if self.k != 1 {
                    return Err(Error::Config("Möbius families need k = 1".into()));
                }
            }
            FamilyMap::Tabulated { maps, .. } => {
                if maps.len() != self.eps_list.len() {
                    return Err(Error::Config("one tabulated map per ε is required".into()));
                }
            }
        }
        if let RootSource::Explicit(r) = &self.roots {
            if r.len() != self.eps_list.len() {
                return Err(Error::Config("one root list per ε is required".into()));
            }
        }
        Ok(())
    }

    fn eps_index(&self, eps: C) -> Option<usize> {
        self.eps_list
            .iter()
            .position(|e| (e - eps).norm() <= 1e-15 * eps.norm().max(1e-300))
    }

    /// Roots at `ε`, sorted by argument in `[0, 2π)`.
    pub fn roots_at(&self, eps: C) -> Result<FamilyRoots> {
        let mut roots = match &self.roots {
            RootSource::Explicit(lists) => {
                let i = self
                    .eps_index(eps)
                    .ok_or_else(|| Error::Config(format!("ε = {eps} is not in eps_list")))?;
                lists[i].clone()
            }
            RootSource::Bivariate(p) => {
                let c = t_coeffs(p, eps);
                if c.len() != self.k + 2 {
                    return Err(Error::Config(format!(
                        "p must have degree {} in t",
                        self.k + 1
                    )));
                }
                poly_roots(&c)?
            }
        };
        roots.sort_by(|a, b| {
            a.arg()
                .rem_euclid(std::f64::consts::TAU)
                .total_cmp(&b.arg().rem_euclid(std::f64::consts::TAU))
        });
        FamilyRoots::new(self.k, roots, eps)
    }

    pub fn all_roots(&self) -> Result<Vec<FamilyRoots>> {
        self.eps_list.iter().map(|e| self.roots_at(*e)).collect()
    }

    /// `f_ε` as a rational map.
    pub fn map_at(&self, roots: &FamilyRoots) -> Result<RationalMap> {
        match &self.map {
            FamilyMap::Product { q } => {
                let mut one_q = t_coeffs(q, roots.eps);
                if one_q.is_empty() {
                    one_q.push(C::new(0.0, 0.0));
                }
                one_q[0] += 1.0;
                let prod = poly_mul(&one_q, &poly_from_roots(&roots.roots));
                let mut num: Vec<C> = prod.iter().map(|c| c * TWO_PI_I).collect();
                num[1] += 1.0;
                Ok(RationalMap::polynomial(num))
            }
            FamilyMap::Moebius => {
                let a = roots.roots[0];
                let mu = (2.0 * TWO_PI_I * a).exp();
                let num = vec![a * a * (1.0 - mu), a * (1.0 + mu)];
                let den = vec![a * (1.0 + mu), 1.0 - mu];
                Ok(RationalMap::new(num, den))
            }
            FamilyMap::Tabulated { maps, .. } => {
                let i = self
                    .eps_index(roots.eps)
                    .ok_or_else(|| Error::Config(format!("ε = {} is not in eps_list", roots.eps)))?;
                Ok(RationalMap::polynomial(maps[i].clone()))
            }
        }
    }

    /// The germ at `ε = 0`.
    pub fn unperturbed(&self) -> Result<GermSpec> {
        match &self.map {
            FamilyMap::Product { q } => {
                let mut one_q = t_coeffs(q, C::new(0.0, 0.0));
                if one_q.is_empty() {
                    one_q.push(C::new(0.0, 0.0));
                }
                one_q[0] += 1.0;
                let mut num = vec![C::new(0.0, 0.0); self.k + 1];
                num.extend(one_q.iter().map(|c| c * TWO_PI_I));
                num[1] += 1.0;
                GermSpec::polynomial(self.k, num, self.radius)
            }
            FamilyMap::Moebius => GermSpec::moebius(self.radius),
            FamilyMap::Tabulated { unperturbed, .. } => GermSpec::polynomial(self.k, unperturbed.clone(), self.radius),
        }
    }

    /// `q(t, ε)` for the product form, 0 otherwise.
    pub fn q_at(&self, t: C, eps: C) -> C {
        match &self.map {
            FamilyMap::Product { q } => eval_bivariate(q, t, eps),
            FamilyMap::Moebius | FamilyMap::Tabulated { .. } => C::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FixedPointData {
    pub alpha: C,
    pub mu: C,
    pub log_mu: C,
    pub stability: Stability,
}

/// `ln μ` with imaginary part in `(−π/2, 3π/2)`.
pub fn canonic_log(mu: C) -> Result<C> {
    if (mu.norm() - 1.0).abs() <= 1e-10 {
        return Err(Error::DegenerateInput(format!(
            "multiplier {mu} lies on the unit circle"
        )));
    }
    let mut l = mu.ln();
    if l.im <= -std::f64::consts::FRAC_PI_2 {
        if l.im + std::f64::consts::FRAC_PI_2 > -1e-12 {
            return Err(Error::DegenerateInput(format!(
                "multiplier {mu} lies on the negative imaginary axis"
            )));
        }
        l.im += std::f64::consts::TAU;
    }
    Ok(l)
}

/// Fixed point of `map` polished from `seed`, with its multiplier.
pub fn fixed_point_of(map: &RationalMap, seed: C) -> Result<FixedPointData> {
    let scale = seed.norm().max(1e-300);
    let alpha = newton_root(
        |t| {
            let (v, d) = map.eval_d(t);
            (v - t, d - 1.0)
        },
        seed,
        1e-15 * scale,
        50,
    )
    .unwrap_or(seed);
    let (v, mu) = map.eval_d(alpha);
    if (v - alpha).norm() > 1e-12 * scale.max(1.0) {
        return Err(Error::NotConverged(format!("no fixed point near {seed}")));
    }
    let log_mu = canonic_log(mu)?;
    let stability = if mu.norm() < 1.0 {
        Stability::Attracting
    } else {
        Stability::Repelling
    };
    Ok(FixedPointData {
        alpha,
        mu,
        log_mu,
        stability,
    })
}

pub fn fixed_point_data(fam: &GermFamily, eps: C, i: usize) -> Result<FixedPointData> {
    let roots = fam.roots_at(eps)?;
    let map = fam.map_at(&roots)?;
    let a = *roots
        .roots
        .get(i)
        .ok_or_else(|| Error::Config(format!("no root with index {i}")))?;
    fixed_point_of(&map, a)
}

/// `w_ε(t) = a ∏(t − α_s)` normalized so that `w_ε'(α_i) = ln μ_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelField {
    pub a_eps: C,
    pub roots: FamilyRoots,
    pub i: usize,
}

impl ModelField {
    pub fn eval(&self, t: C) -> C {
        self.roots
            .roots
            .iter()
            .fold(self.a_eps, |acc, r| acc * (t - r))
    }

    /// `w'(α_i)`.
    pub fn multiplier(&self) -> C {
        let a = self.roots.roots[self.i];
        self.roots
            .roots
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != self.i)
            .fold(self.a_eps, |acc, (_, r)| acc * (a - r))
    }

    /// Residues of `1/w` at the roots.
    pub fn residues(&self) -> Vec<C> {
        let r = &self.roots.roots;
        (0..r.len())
            .map(|s| {
                let p: C = (0..r.len())
                    .filter(|u| *u != s)
                    .map(|u| r[s] - r[u])
                    .product();
                1.0 / (self.a_eps * p)
            })
            .collect()
    }

    /// `T_w(t) = Σ res_s Log(1 − α_s/t)`, a time of `w` on `|t| > max|α_s|`.
    pub fn time(&self, t: C) -> C {
        self.residues()
            .iter()
            .zip(&self.roots.roots)
            .map(|(c, a)| c * (1.0 - a / t).ln())
            .sum()
    }

    /// Time-`s` flow of `w` from `t` by adaptive integration.
    pub fn flow(&self, t: C, s: f64) -> Result<C> {
        let opts = OdeOptions {
            rtol: 1e-12,
            atol: 1e-15,
            ..OdeOptions::default()
        };
        Ok(integrate(|_, y| Ok(vec![self.eval(y[0])]), 0.0, s, &[t], &opts)?.y[0])
    }
}

pub fn model_field(fam: &GermFamily, eps: C, i: usize) -> Result<ModelField> {
    let roots = fam.roots_at(eps)?;
    let fp = fixed_point_data(fam, eps, i)?;
    model_field_from(roots, i, fp.log_mu)
}

fn model_field_from(roots: FamilyRoots, i: usize, log_mu: C) -> Result<ModelField> {
    let a = roots.roots[i];
    let p: C = roots
        .roots
        .iter()
        .enumerate()
        .filter(|(s, _)| *s != i)
        .map(|(_, r)| a - r)
        .product();
    if p.norm() == 0.0 {
        return Err(Error::DegenerateInput("roots collide".into()));
    }
    Ok(ModelField {
        a_eps: log_mu / p,
        roots,
        i,
    })
}

/// `max |f(g_w^{-1}(t)) − t| / |w(t)(t − α_i)|` over `grid`.
pub fn model_field_residual(field: &ModelField, map: &RationalMap, grid: &[C]) -> Result<f64> {
    let a = field.roots.roots[field.i];
    let mut worst = 0.0f64;
    for &t in grid {
        let back = field.flow(t, -1.0)?;
        let r = (map.eval(back) - t).norm() / (field.eval(t) * (t - a)).norm();
        worst = worst.max(r);
    }
    Ok(worst)
}
