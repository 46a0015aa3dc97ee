//! Experiment configuration: TOML in, validated totally or rejected.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fatou::GermSpec;
use crate::formal::{FormalFieldSpec, Monomial, MultiJet};
use crate::holonomy::{PlanarField, PlanarFieldFamily};
use crate::koenigs::{FamilyMap, GermFamily, RootSource};
use crate::fatou::Normalization;
use crate::precision::Precision;

type C = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    #[serde(default)]
    pub eps: Option<EpsConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapShape {
    Product,
    Moebius,
}

/// What is being studied. Complex numbers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// A single parabolic germ `num/den`, or the Möbius germ.
    Germ {
        k: usize,
        #[serde(default)]
        num: Vec<C>,
        #[serde(default)]
        den: Vec<C>,
        #[serde(default)]
        moebius: bool,
        radius: f64,
    },
    /// A map family `f_ε`.
    Map {
        k: usize,
        roots: RootSource,
        #[serde(default = "default_shape")]
        shape: MapShape,
        /// `q[a][b]` multiplies `t^a ε^b`.
        #[serde(default)]
        q: Vec<Vec<C>>,
        radius: f64,
    },
    /// A planar field family `(1)_ε`.
    Field2d {
        k: usize,
        roots: RootSource,
        /// `q[a][b][c]` multiplies `z^a t^b ε^c`.
        #[serde(default)]
        q: Vec<Vec<Vec<C>>>,
        /// `g[b][c]` multiplies `t^b ε^c`.
        #[serde(default = "unit_g")]
        g: Vec<Vec<C>>,
        #[serde(default = "default_field_radius")]
        radius: f64,
    },
    /// `ż = z(1 + λt^k)`, `ṫ = t^{k+1}`.
    NormalForm { k: usize, lambda: C },
    /// `ż = νz`, `ṫ = μt`.
    Linear { nu: C, mu: C },
    /// A saddle-node field in `n` dimensions by its jets.
    Formal {
        n: usize,
        k: usize,
        /// Rows of the linear part `B`.
        b: Vec<Vec<C>>,
        degree: u32,
        /// Terms of each `y` component, the linear part included.
        y_terms: Vec<Vec<Monomial>>,
        t_terms: Vec<Monomial>,
    },
}

fn default_shape() -> MapShape {
    MapShape::Product
}

fn unit_g() -> Vec<Vec<C>> {
    vec![vec![C::new(1.0, 0.0)]]
}

fn default_field_radius() -> f64 {
    4.0
}

/// An explicit list, or `count` values log-spaced from `start` down to
/// `stop` at the fixed argument `arg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EpsConfig {
    pub list: Option<Vec<C>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    pub arg: Option<f64>,
}

impl EpsConfig {
    pub fn values(&self) -> Result<Vec<C>> {
        let gen = [self.start.is_some(), self.stop.is_some(), self.count.is_some(), self.arg.is_some()];
        match (&self.list, gen) {
            (Some(l), [false, false, false, false]) => {
                if l.is_empty() {
                    return Err(Error::Config("eps.list is empty".into()));
                }
                Ok(l.clone())
            }
            (None, [true, true, true, true]) => {
                let (a, b, n, arg) = (self.start.unwrap(), self.stop.unwrap(), self.count.unwrap(), self.arg.unwrap());
                if !(a > b && b > 0.0) {
                    return Err(Error::Config("eps: need start > stop > 0".into()));
                }
                if n < 2 {
                    return Err(Error::Config("eps.count must be at least 2".into()));
                }
                Ok((0..n)
                    .map(|i| {
                        let x = a.log10() + (b.log10() - a.log10()) * i as f64 / (n - 1) as f64;
                        C::from_polar(10f64.powf(x), arg)
                    })
                    .collect())
            }
            _ => Err(Error::Config(
                "eps: give either `list` or all of `start`, `stop`, `count`, `arg`".into(),
            )),
        }
    }
}

/// Points on a circle, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: Option<Vec<C>>,
    pub rho: Option<f64>,
    pub count: Option<usize>,
}

impl GridConfig {
    pub fn values(&self) -> Result<Vec<C>> {
        match (&self.points, self.rho, self.count) {
            (Some(p), None, None) if !p.is_empty() => Ok(p.clone()),
            (None, Some(r), Some(n)) if r > 0.0 && n > 0 => Ok(crate::holonomy::circle_grid(r, n)),
            _ => Err(Error::Config("grid: give either `points` or both `rho` > 0 and `count` > 0".into())),
        }
    }
}

/// Every tunable that affects results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Residual above which work is redone in double-double.
    pub tol: f64,
    pub iter_cap: usize,
    pub precision: Precision,
    pub fourier_range: usize,
    /// Samples per sampling line.
    pub grid: usize,
    /// Depth of the base sampling line.
    pub depth: f64,
    /// Truncation order for jets.
    pub order: usize,
    /// Transversal height; the family default when absent.
    pub delta: Option<f64>,
    /// Degree of the fitted monodromy jet; `k + 3` when absent.
    pub jet_degree: Option<usize>,
    /// Root index for the separatrix.
    pub root: usize,
    pub ode_rtol: f64,
    pub nondegeneracy_threshold: f64,
    /// Chart constants in sweeps: `model-anchor` or `invariant-only`.
    pub normalization: Normalization,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            iter_cap: 200_000,
            precision: Precision::Double,
            fourier_range: 3,
            grid: 256,
            depth: 2.0,
            order: 12,
            delta: None,
            jet_degree: None,
            root: 0,
            ode_rtol: 1e-11,
            nondegeneracy_threshold: 0.1,
            normalization: Normalization::ModelAnchor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown format `{s}` (json or csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        if !(n.tol > 0.0) || !(n.depth > 0.0) || !(n.ode_rtol > 0.0) {
            return Err(Error::Config("numerics: tol, depth and ode_rtol must be positive".into()));
        }
        if n.grid < 8 || n.fourier_range == 0 || n.iter_cap == 0 || n.order == 0 {
            return Err(Error::Config(
                "numerics: grid >= 8 and fourier_range, iter_cap, order >= 1 are required".into(),
            ));
        }
        if let Some(e) = &self.eps {
            e.values()?;
        }
        if let Some(g) = &self.grid {
            g.values()?;
        }
        match &self.family {
            FamilyConfig::Germ { .. } => {
                self.germ()?;
            }
            FamilyConfig::Map { .. } => {
                self.map_family()?.validate()?;
            }
            FamilyConfig::Field2d { .. } => {
                self.field_family()?.validate()?;
            }
            FamilyConfig::Formal { .. } => {
                self.formal_field()?.validate()?;
            }
            FamilyConfig::NormalForm { k, .. } if *k == 0 => {
                return Err(Error::Config("k must be at least 1".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// `ε` values; the sweep requires strictly decreasing `|ε|`.
    pub fn eps_values(&self) -> Result<Vec<C>> {
        match &self.eps {
            Some(e) => e.values(),
            None => Ok(Vec::new()),
        }
    }

    pub fn k(&self) -> Option<usize> {
        match &self.family {
            FamilyConfig::Germ { k, .. }
            | FamilyConfig::Map { k, .. }
            | FamilyConfig::Field2d { k, .. }
            | FamilyConfig::NormalForm { k, .. }
            | FamilyConfig::Formal { k, .. } => Some(*k),
            FamilyConfig::Linear { .. } => None,
        }
    }

    pub fn germ(&self) -> Result<GermSpec> {
        match &self.family {
            FamilyConfig::Germ { k, num, den, moebius, radius } => {
                if *moebius {
                    if *k != 1 || !num.is_empty() || !den.is_empty() {
                        return Err(Error::Config("the Möbius germ has k = 1 and no coefficients".into()));
                    }
                    GermSpec::moebius(*radius)
                } else if den.is_empty() {
                    GermSpec::polynomial(*k, num.clone(), *radius)
                } else {
                    GermSpec::rational(*k, num.clone(), den.clone(), *radius)
                }
            }
            FamilyConfig::Map { .. } => self.map_family()?.unperturbed(),
            _ => Err(Error::Config("this command needs family.kind = germ or map".into())),
        }
    }

    pub fn map_family(&self) -> Result<GermFamily> {
        match &self.family {
            FamilyConfig::Map { k, roots, shape, q, radius } => Ok(GermFamily {
                k: *k,
                roots: roots.clone(),
                map: match shape {
                    MapShape::Product => FamilyMap::Product { q: q.clone() },
                    MapShape::Moebius => FamilyMap::Moebius,
                },
                eps_list: self.eps_values()?,
                radius: *radius,
            }),
            _ => Err(Error::Config("this command needs family.kind = map".into())),
        }
    }

    pub fn field_family(&self) -> Result<PlanarFieldFamily> {
        match &self.family {
            FamilyConfig::Field2d { k, roots, q, g, radius } => Ok(PlanarFieldFamily {
                k: *k,
                roots: roots.clone(),
                q: q.clone(),
                g: g.clone(),
                eps_list: self.eps_values()?,
                radius: *radius,
            }),
            _ => Err(Error::Config("this command needs family.kind = field2d".into())),
        }
    }

    /// A single planar field and its parabolic order, if it has one.
    pub fn planar_field(&self, eps: C) -> Result<(PlanarField, Option<usize>, f64)> {
        match &self.family {
            FamilyConfig::NormalForm { k, lambda } => Ok((PlanarField::normal_form(*k, *lambda), Some(*k), 1.0)),
            FamilyConfig::Linear { nu, mu } => Ok((PlanarField::linear(*nu, *mu), None, 1.0)),
            FamilyConfig::Field2d { .. } => {
                let f = self.field_family()?;
                Ok((f.field_at(eps)?, Some(f.k), f.default_delta()))
            }
            _ => Err(Error::Config("this command needs a planar field (field2d, normal_form, linear)".into())),
        }
    }

    pub fn formal_field(&self) -> Result<FormalFieldSpec> {
        match &self.family {
            FamilyConfig::Formal { n, k, b, degree, y_terms, t_terms } => {
                let ny = n.checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| Error::Config("n must be >= 2".into()))?;
                if b.len() != ny || b.iter().any(|r| r.len() != ny) || y_terms.len() != ny {
                    return Err(Error::Config(format!("b and y_terms need {ny} rows")));
                }
                let bm = DMatrix::from_fn(ny, ny, |i, j| b[i][j]);
                let y_jet = y_terms
                    .iter()
                    .map(|t| MultiJet::from_terms(*n, *degree, t))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FormalFieldSpec {
                    n: *n,
                    b: bm,
                    k: *k,
                    y_jet,
                    t_jet: MultiJet::from_terms(*n, *degree, t_terms)?,
                })
            }
            _ => Err(Error::Config("this command needs family.kind = formal".into())),
        }
    }
}
