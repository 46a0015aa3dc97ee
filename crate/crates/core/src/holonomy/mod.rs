//! Planar saddle-node families `ż = z(1 + q) + g·p`, `ṫ = p`: phase curves
//! along complex paths, the monodromy germ on the transversal `z = δ`, and
//! continuation of the separatrices through `(0, α_i)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fatou::GermSpec;
use crate::koenigs::{t_coeffs, FamilyMap, GermFamily, RootSource};
use crate::ode::{integrate, OdeOptions};
use crate::roots::{poly_derivative, poly_eval, poly_eval_d, poly_from_roots};
use crate::series::TruncatedSeries;
use crate::TWO_PI_I;

pub use crate::fatou::integral_from_time;

type C = Complex64;

/// A polynomial field `ż = Σ zdot[a][b] z^a t^b`, `ṫ = Σ tdot[a][b] z^a t^b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarField {
    pub zdot: Vec<Vec<C>>,
    pub tdot: Vec<Vec<C>>,
}

/// Value and partial derivatives in `z` and `t`.
fn eval_table(tab: &[Vec<C>], z: C, t: C) -> (C, C, C) {
    let zero = C::new(0.0, 0.0);
    let (mut v, mut dz, mut dt) = (zero, zero, zero);
    for row in tab.iter().rev() {
        let (r, rd) = poly_eval_d(row, t);
        dz = dz * z + v;
        v = v * z + r;
        dt = dt * z + rd;
    }
    (v, dz, dt)
}

fn add_at(tab: &mut Vec<Vec<C>>, a: usize, b: usize, c: C) {
    if tab.len() <= a {
        tab.resize(a + 1, Vec::new());
    }
    if tab[a].len() <= b {
        tab[a].resize(b + 1, C::new(0.0, 0.0));
    }
    tab[a][b] += c;
}

impl PlanarField {
    /// `ż = νz`, `ṫ = μt`.
    pub fn linear(nu: C, mu: C) -> Self {
        Self {
            zdot: vec![vec![], vec![nu]],
            tdot: vec![vec![C::new(0.0, 0.0), mu]],
        }
    }

    /// `ż = z(1 + λt^k)`, `ṫ = t^{k+1}`.
    pub fn normal_form(k: usize, lambda: C) -> Self {
        let mut zdot = Vec::new();
        add_at(&mut zdot, 1, 0, C::new(1.0, 0.0));
        add_at(&mut zdot, 1, k, lambda);
        let mut tdot = Vec::new();
        add_at(&mut tdot, 0, k + 1, C::new(1.0, 0.0));
        Self { zdot, tdot }
    }

    /// `(ż, ∂ż/∂z, ∂ż/∂t)` and the same for `ṫ`.
    pub fn eval(&self, z: C, t: C) -> [(C, C, C); 2] {
        [eval_table(&self.zdot, z, t), eval_table(&self.tdot, z, t)]
    }

    /// Jacobian `[[ż_z, ż_t], [ṫ_z, ṫ_t]]` at `(z, t)`.
    pub fn jacobian(&self, z: C, t: C) -> [[C; 2]; 2] {
        let [(_, a, b), (_, c, d)] = self.eval(z, t);
        [[a, b], [c, d]]
    }
}

/// A family `(1)_ε`: `ż = z(1 + q(z, t, ε)) + g(t, ε)·p(t, ε)`, `ṫ = p(t, ε)`
/// with `p = ∏(t − α_i(ε))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarFieldFamily {
    pub k: usize,
    pub roots: RootSource,
    /// `q = Σ q[a][b][c] z^a t^b ε^c`.
    pub q: Vec<Vec<Vec<C>>>,
    /// `g = Σ g[b][c] t^b ε^c`.
    pub g: Vec<Vec<C>>,
    pub eps_list: Vec<C>,
    /// Radius of the holomorphy domain; the transversal height defaults to a
    /// quarter of it.
    pub radius: f64,
}

impl PlanarFieldFamily {
    /// `q ≡ 0`, `g ≡ 1`, roots `±√ε`.
    pub fn quadratic(eps_list: Vec<C>) -> Self {
        let p = vec![
            vec![C::new(0.0, 0.0), C::new(-1.0, 0.0)],
            vec![],
            vec![C::new(1.0, 0.0)],
        ];
        Self {
            k: 1,
            roots: RootSource::Bivariate(p),
            q: vec![],
            g: vec![vec![C::new(1.0, 0.0)]],
            eps_list,
            radius: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.roots_family().validate()?;
        let q000 = self.q.first().and_then(|r| r.first()).and_then(|r| r.first()).copied().unwrap_or_default();
        if q000.norm() != 0.0 {
            return Err(Error::Config("q(0, 0, 0) must vanish".into()));
        }
        Ok(())
    }

    /// The same roots and ε-list viewed as a map family, for root lookup.
    fn roots_family(&self) -> GermFamily {
        GermFamily {
            k: self.k,
            roots: self.roots.clone(),
            map: FamilyMap::Product { q: vec![] },
            eps_list: self.eps_list.clone(),
            radius: self.radius,
        }
    }

    /// Roots `α_i(ε)` sorted by argument.
    pub fn roots_at(&self, eps: C) -> Result<Vec<C>> {
        Ok(self.roots_family().roots_at(eps)?.roots)
    }

    /// `t`-coefficients of `p(·, ε)`.
    pub fn p_coeffs(&self, eps: C) -> Result<Vec<C>> {
        if let RootSource::Bivariate(p) = &self.roots {
            let c = t_coeffs(p, eps);
            if c.len() != self.k + 2 {
                return Err(Error::Config(format!("p must have degree {} in t", self.k + 1)));
            }
            return Ok(c);
        }
        if eps.norm() == 0.0 {
            let mut c = vec![C::new(0.0, 0.0); self.k + 2];
            c[self.k + 1] = C::new(1.0, 0.0);
            return Ok(c);
        }
        Ok(poly_from_roots(&self.roots_at(eps)?))
    }

    /// The field at `ε` as dense tables.
    pub fn field_at(&self, eps: C) -> Result<PlanarField> {
        let p = self.p_coeffs(eps)?;
        let mut zdot = Vec::new();
        add_at(&mut zdot, 1, 0, C::new(1.0, 0.0));
        for (a, qa) in self.q.iter().enumerate() {
            for (b, c) in t_coeffs(qa, eps).iter().enumerate() {
                add_at(&mut zdot, a + 1, b, *c);
            }
        }
        let g = t_coeffs(&self.g, eps);
        for (i, gi) in g.iter().enumerate() {
            for (j, pj) in p.iter().enumerate() {
                add_at(&mut zdot, 0, i + j, gi * pj);
            }
        }
        let mut tdot = Vec::new();
        for (j, pj) in p.iter().enumerate() {
            add_at(&mut tdot, 0, j, *pj);
        }
        Ok(PlanarField { zdot, tdot })
    }

    pub fn default_delta(&self) -> f64 {
        0.25 * self.radius
    }
}

/// Which coordinate a phase path is parametrized by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driver {
    /// `z(s) = z₀ e^{2πi·turns·s}`.
    ZCircle { turns: f64 },
    /// `z(s) = z₀ + (to − z₀)s`.
    ZSegment { to: C },
    /// `t(s) = t₀ + (to − t₀)s`.
    TSegment { to: C },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEndpoint {
    pub z: C,
    pub t: C,
    pub err_est: f64,
    pub steps: usize,
}

fn ratio(num: C, den: C, at: (C, C)) -> Result<C> {
    let r = num / den;
    if den.norm() == 0.0 || !r.is_finite() {
        return Err(Error::OffDomain(format!("field degenerates at z = {}, t = {}", at.0, at.1)));
    }
    Ok(r)
}

/// Follows the phase curve of `field` through `start = (z, t)` along the
/// path described by `driver`, for `s ∈ [0, 1]`.
pub fn integrate_phase_path(field: &PlanarField, start: (C, C), driver: Driver, opts: &OdeOptions) -> Result<PhaseEndpoint> {
    let (z0, t0) = start;
    let r = match driver {
        Driver::ZCircle { turns } => {
            let w = TWO_PI_I * turns;
            integrate(
                |s, y| {
                    let z = z0 * (w * s).exp();
                    let [(zd, ..), (td, ..)] = field.eval(z, y[0]);
                    Ok(vec![w * z * ratio(td, zd, (z, y[0]))?])
                },
                0.0,
                1.0,
                &[t0],
                opts,
            )?
        }
        Driver::ZSegment { to } => {
            let dz = to - z0;
            integrate(
                |s, y| {
                    let z = z0 + dz * s;
                    let [(zd, ..), (td, ..)] = field.eval(z, y[0]);
                    Ok(vec![dz * ratio(td, zd, (z, y[0]))?])
                },
                0.0,
                1.0,
                &[t0],
                opts,
            )?
        }
        Driver::TSegment { to } => {
            let dt = to - t0;
            integrate(
                |s, y| {
                    let t = t0 + dt * s;
                    let [(zd, ..), (td, ..)] = field.eval(y[0], t);
                    Ok(vec![dt * ratio(zd, td, (y[0], t))?])
                },
                0.0,
                1.0,
                &[z0],
                opts,
            )?
        }
    };
    let (z, t) = match driver {
        Driver::ZCircle { turns } => (z0 * (TWO_PI_I * turns).exp(), r.y[0]),
        Driver::ZSegment { to } => (to, r.y[0]),
        Driver::TSegment { to } => (r.y[0], to),
    };
    Ok(PhaseEndpoint { z, t, err_est: r.err_est, steps: r.steps })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonodromyOptions {
    /// Transversal height; the family default when absent.
    pub delta: Option<f64>,
    pub ode: OdeOptions,
    /// Degree of the fitted jet; `k + 3` when absent.
    pub jet_degree: Option<usize>,
    /// Largest accepted fit residual, relative to the largest `|f(t₀)|`.
    pub fit_threshold: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            delta: None,
            ode: OdeOptions::default(),
            jet_degree: None,
            fit_threshold: 1e-2,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyPoint {
    pub t0: C,
    pub ft: C,
    /// `f'(t₀)` from the variational equation.
    pub dft: C,
    pub err_est: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonodromyGerm {
    pub delta: f64,
    pub points: Vec<MonodromyPoint>,
    pub fitted_jet: Option<TruncatedSeries>,
    /// Largest `|jet(t₀) − f(t₀)|` over the grid.
    pub fit_residual: f64,
}

impl MonodromyGerm {
    pub fn eval(&self, t0: C) -> Option<C> {
        self.points.iter().find(|p| p.t0 == t0).map(|p| p.ft)
    }
}

/// Lifts the loop `z = δe^{2πis}` to the leaf through `(δ, t₀)`: integrates
/// `dt/ds = 2πi z ṫ/ż` with its variational equation.
pub fn monodromy_map(field: &PlanarField, delta: f64, t0: C, opts: &OdeOptions) -> Result<MonodromyPoint> {
    let r = integrate(
        |s, y| {
            let z = C::from_polar(delta, std::f64::consts::TAU * s);
            let [(zd, _, zd_t), (td, _, td_t)] = field.eval(z, y[0]);
            let f = ratio(td, zd, (z, y[0]))?;
            let df = (td_t * zd - td * zd_t) / (zd * zd);
            Ok(vec![TWO_PI_I * z * f, TWO_PI_I * z * df * y[1]])
        },
        0.0,
        1.0,
        &[t0, C::new(1.0, 0.0)],
        opts,
    )?;
    Ok(MonodromyPoint { t0, ft: r.y[0], dft: r.y[1], err_est: r.err_est })
}

/// `m` equally spaced points on `|t| = rho`.
pub fn circle_grid(rho: f64, m: usize) -> Vec<C> {
    (0..m).map(|j| C::from_polar(rho, std::f64::consts::TAU * j as f64 / m as f64)).collect()
}

/// Least-squares polynomial of the given degree through `(t, f)` pairs, with
/// its largest pointwise residual.
pub fn fit_polynomial(points: &[(C, C)], degree: usize) -> Result<(Vec<C>, f64)> {
    if points.len() <= degree {
        return Err(Error::Config(format!("{} points cannot fix degree {degree}", points.len())));
    }
    let scale = points.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("fit grid collapses to the origin".into()));
    }
    let a = DMatrix::from_fn(points.len(), degree + 1, |i, n| (points[i].0 / scale).powu(n as u32));
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|_| Error::SingularSolve(degree))?;
    let coeffs: Vec<C> = x.iter().enumerate().map(|(n, c)| c / scale.powi(n as i32)).collect();
    let residual = points.iter().map(|(t, f)| (poly_eval(&coeffs, *t) - f).norm()).fold(0.0, f64::max);
    Ok((coeffs, residual))
}

/// The `t^{k+1}` coefficient of an unperturbed monodromy must be `+2πi`; a
/// value near `−2πi` means the loop ran the wrong way round.
pub fn check_orientation(jet: &TruncatedSeries, k: usize) -> Result<()> {
    if jet.order() < k + 1 {
        return Ok(());
    }
    let c = jet.coeff(k + 1);
    if (c - TWO_PI_I).norm() > (c + TWO_PI_I).norm() {
        return Err(Error::WrongNormalization(format!(
            "t^{} coefficient {c} matches −2πi: loop orientation is reversed",
            k + 1
        )));
    }
    Ok(())
}

/// Checks that the low coefficients of an unperturbed monodromy are within
/// `tol` of `t + 2πi t^{k+1}` and sets them to it exactly.
pub fn snap_normalization(coeffs: &mut [C], k: usize, tol: f64) -> Result<()> {
    if coeffs.len() < k + 2 {
        return Err(Error::OrderTooLow { have: coeffs.len().saturating_sub(1), need: k + 1 });
    }
    for (m, c) in coeffs.iter_mut().enumerate().take(k + 2) {
        let w = match m {
            1 => C::new(1.0, 0.0),
            _ if m == k + 1 => TWO_PI_I,
            _ => C::new(0.0, 0.0),
        };
        let d = (*c - w).norm();
        if d > tol {
            return Err(Error::WrongNormalization(format!("t^{m} coefficient of the monodromy is off by {d:e}")));
        }
        *c = w;
    }
    Ok(())
}

/// Monodromy of `field` on `z = delta` at each point of `t_grid`, with a
/// fitted jet of degree `jet_degree` (skipped when the grid is too small).
pub fn field_monodromy(field: &PlanarField, delta: f64, t_grid: &[C], degree: usize, opts: &MonodromyOptions) -> Result<MonodromyGerm> {
    let points: Vec<MonodromyPoint> = opts
        .exec
        .map(t_grid, |t0| monodromy_map(field, delta, *t0, &opts.ode))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut germ = MonodromyGerm { delta, points, fitted_jet: None, fit_residual: 0.0 };
    if t_grid.len() > degree {
        let pairs: Vec<(C, C)> = germ.points.iter().map(|p| (p.t0, p.ft)).collect();
        let (coeffs, residual) = fit_polynomial(&pairs, degree)?;
        let size = pairs.iter().map(|p| p.1.norm()).fold(0.0, f64::max).max(1e-300);
        if residual > opts.fit_threshold * size {
            return Err(Error::FitBad(residual / size));
        }
        germ.fitted_jet = Some(TruncatedSeries::from_coeffs(degree, &coeffs)?);
        germ.fit_residual = residual;
    }
    Ok(germ)
}

/// The monodromy germ of the family at `ε`; at `ε = 0` the fitted jet must
/// pass the orientation gate.
pub fn monodromy_germ(fam: &PlanarFieldFamily, eps: C, t_grid: &[C], opts: &MonodromyOptions) -> Result<MonodromyGerm> {
    fam.validate()?;
    let field = fam.field_at(eps)?;
    let delta = opts.delta.unwrap_or_else(|| fam.default_delta());
    let degree = opts.jet_degree.unwrap_or(fam.k + 3);
    let germ = field_monodromy(&field, delta, t_grid, degree, opts)?;
    if eps.norm() == 0.0 {
        if let Some(j) = &germ.fitted_jet {
            check_orientation(j, fam.k)?;
        }
    }
    Ok(germ)
}

/// How monodromy germs are tabulated as polynomial maps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TabulationOptions {
    /// Radius of the fitting circle.
    pub rho: f64,
    pub nodes: usize,
    pub degree: usize,
    /// Radius of the evaluation disc of the resulting map family.
    pub radius: f64,
    pub monodromy: MonodromyOptions,
}

impl Default for TabulationOptions {
    fn default() -> Self {
        Self {
            rho: 0.08,
            nodes: 160,
            degree: 64,
            radius: 0.1,
            monodromy: MonodromyOptions { fit_threshold: 1e-9, ..MonodromyOptions::default() },
        }
    }
}

/// The monodromy germs of the family, fitted on a circle and tabulated as a
/// map family with the same roots. The unperturbed jet is checked against the
/// normalization `t + 2πi t^{k+1} + …` and then set to it exactly.
pub fn monodromy_family(fam: &PlanarFieldFamily, opts: &TabulationOptions) -> Result<GermFamily> {
    let grid = circle_grid(opts.rho, opts.nodes);
    let fit = |eps: C| -> Result<Vec<C>> {
        let g = monodromy_germ(fam, eps, &grid, &MonodromyOptions { jet_degree: Some(opts.degree), ..opts.monodromy })?;
        Ok(g.fitted_jet.expect("grid exceeds degree").coeffs().to_vec())
    };
    let maps = fam.eps_list.iter().map(|e| fit(*e)).collect::<Result<Vec<_>>>()?;
    let mut unperturbed = fit(C::new(0.0, 0.0))?;
    snap_normalization(&mut unperturbed, fam.k, 1e-7)?;
    let k = fam.k;
    let out = GermFamily {
        k,
        roots: fam.roots.clone(),
        map: FamilyMap::Tabulated { maps, unperturbed },
        eps_list: fam.eps_list.clone(),
        radius: opts.radius,
    };
    out.validate()?;
    GermSpec::polynomial(k, out.unperturbed()?.num, opts.radius)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixSample {
    pub t: C,
    pub z: C,
    /// `dz/dt = ż/ṫ` on the separatrix.
    pub dzdt: C,
    /// Whether `|dz/dt| < 1` and `|z| < |t − α|` hold here.
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatrixTrace {
    pub alpha: C,
    pub slope_at_alpha: C,
    /// Rotation `e^{iθ}` of the field whose trajectories carry the trace.
    pub theta: f64,
    pub samples: Vec<SeparatrixSample>,
    pub err_est: f64,
}

impl SeparatrixTrace {
    /// Fails on the first sample breaking the inequalities.
    pub fn certify(&self) -> Result<()> {
        match self.samples.iter().find(|s| !s.certified) {
            Some(s) => Err(Error::InequalityViolated(s.t.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeparatrixOptions {
    /// Seed distance from `α` relative to the distance to the nearest other root.
    pub seed_offset: f64,
    pub ode: OdeOptions,
    /// Accepted mismatch between the trajectory end and the target, relative to the seed distance.
    pub landing_tol: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SeparatrixOptions {
    fn default() -> Self {
        Self {
            seed_offset: 1e-6,
            ode: OdeOptions { rtol: 1e-12, atol: 1e-16, ..OdeOptions::default() },
            landing_tol: 1e-2,
            exec: Exec::default(),
        }
    }
}

/// Slope `dz/dt` of the eigenline at `(0, α)` for the eigenvalue nearest
/// `∂ṫ/∂t`.
pub fn eigen_slope(field: &PlanarField, alpha: C) -> Result<C> {
    let [[a, b], [c, d]] = field.jacobian(C::new(0.0, 0.0), alpha);
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * c).sqrt();
    let l = [(tr + disc) / 2.0, (tr - disc) / 2.0]
        .into_iter()
        .min_by(|x, y| (x - d).norm().total_cmp(&(y - d).norm()))
        .expect("two eigenvalues");
    let den = l - a;
    if den.norm() <= 1e-14 * (a.norm() + d.norm()) {
        return Err(Error::DegenerateInput(format!("resonant linear part at α = {alpha}")));
    }
    Ok(b / den)
}

/// The separatrix through `(0, α_i(ε))` transversal to `z = 0`, continued to
/// each target.
///
/// Each target is reached along a trajectory of `e^{iθ}(ż, ṫ)` leaving `α`,
/// with `θ` chosen so that the `z`-direction contracts. The seed angle on the
/// eigenline is solved in the rectifying time `T = ∫dt/p` so that the
/// trajectory ends at the target.
pub fn separatrix_trace(fam: &PlanarFieldFamily, eps: C, i: usize, t_targets: &[C], opts: &SeparatrixOptions) -> Result<SeparatrixTrace> {
    if eps.norm() == 0.0 {
        return Err(Error::DegenerateInput("separatrix continuation needs ε ≠ 0".into()));
    }
    fam.validate()?;
    let field = fam.field_at(eps)?;
    let roots = fam.roots_at(eps)?;
    let alpha = *roots.get(i).ok_or_else(|| Error::Config(format!("no root with index {i}")))?;
    let p = fam.p_coeffs(eps)?;
    let dp = poly_derivative(&p);
    let res: Vec<C> = roots.iter().map(|a| 1.0 / poly_eval(&dp, *a)).collect();
    if res.iter().any(|r| !r.is_finite()) {
        return Err(Error::DegenerateInput("roots of p collide".into()));
    }
    let slope = eigen_slope(&field, alpha)?;
    let [[lz, _], [_, lt]] = field.jacobian(C::new(0.0, 0.0), alpha);
    // contraction across: Re(e^{iθ} lz) < 0; leaving α: Re(e^{iθ} lt) > 0
    let u1 = -lz.conj() / lz.norm();
    let u2 = lt.conj() / lt.norm();
    let mid = u1 + u2;
    let width = std::f64::consts::PI - (u1 * u2.conj()).arg().abs();
    if mid.norm() < 1e-12 || width < 0.05 {
        return Err(Error::DegenerateInput(format!(
            "no rotation contracts across the separatrix at α = {alpha}: the root is in a real dividing direction"
        )));
    }
    let theta0 = mid.arg();
    let d_min = roots
        .iter()
        .enumerate()
        .filter(|(s, _)| *s != i)
        .map(|(_, r)| (r - alpha).norm())
        .fold(f64::INFINITY, f64::min);
    let h = opts.seed_offset * if d_min.is_finite() { d_min } else { alpha.norm().max(1.0) };
    let t_others = |t: C| -> C {
        roots
            .iter()
            .zip(&res)
            .enumerate()
            .filter(|(s, _)| *s != i)
            .map(|(_, (a, r))| r * (t - a).ln())
            .sum()
    };
    let run = |target: C| -> Result<(SeparatrixSample, f64, f64)> {
        let tstar = t_others(target) + res[i] * (target - alpha).ln();
        // T(seed) = r_i (ln h + iφ) + others; pick φ so arg(T* − T(seed)) = θ₀
        let d0 = tstar - t_others(alpha + h) - res[i] * h.ln();
        let rot = C::from_polar(1.0, -theta0);
        let phi = (rot * d0).im / (rot * res[i]).re;
        let seed = alpha + C::from_polar(h, phi);
        let dd = tstar - t_others(seed) - res[i] * C::new(h.ln(), phi);
        let (len, theta) = (dd.norm(), dd.arg());
        let e = C::from_polar(1.0, theta);
        let r = integrate(
            |_, y| {
                let [(zd, ..), (td, ..)] = field.eval(y[1], y[0]);
                Ok(vec![e * td, e * zd])
            },
            0.0,
            len,
            &[seed, slope * (seed - alpha)],
            &opts.ode,
        )?;
        let (t_end, z_end) = (r.y[0], r.y[1]);
        if (t_end - target).norm() > opts.landing_tol * (target - alpha).norm() {
            return Err(Error::OffDomain(format!(
                "trajectory to {target} lands at {t_end}; target not reachable from α = {alpha}"
            )));
        }
        let fin = integrate_phase_path(&field, (z_end, t_end), Driver::TSegment { to: target }, &opts.ode)?;
        let [(zd, ..), (td, ..)] = field.eval(fin.z, target);
        let dzdt = ratio(zd, td, (fin.z, target))?;
        let certified = dzdt.norm() < 1.0 && fin.z.norm() < (target - alpha).norm();
        Ok((SeparatrixSample { t: target, z: fin.z, dzdt, certified }, r.err_est + fin.err_est, theta))
    };
    let out: Vec<(SeparatrixSample, f64, f64)> = opts.exec.map(t_targets, |t| run(*t)).into_iter().collect::<Result<_>>()?;
    Ok(SeparatrixTrace {
        alpha,
        slope_at_alpha: slope,
        theta: theta0,
        err_est: out.iter().map(|o| o.1).fold(0.0, f64::max),
        samples: out.into_iter().map(|o| o.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal::formal_invariant;
    use crate::series::series_time1_flow;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn linear_field_radial_segment() {
        let mu = c(0.3, -0.2);
        let f = PlanarField::linear(c(1.0, 0.0), mu);
        let (z0, z1, t0) = (c(0.5, 0.1), c(1.5, 0.3), c(0.2, 0.1));
        let e = integrate_phase_path(&f, (z0, t0), Driver::ZSegment { to: z1 }, &OdeOptions::default()).unwrap();
        let want = t0 * (mu * (z1 / z0).ln()).exp();
        assert!((e.t - want).norm() < 1e-10, "{} {}", e.t, want);
    }

    #[test]
    fn normal_form_loop_is_moebius() {
        let f = PlanarField::normal_form(1, c(0.0, 0.0));
        let t0 = c(0.02, 0.0);
        let e = integrate_phase_path(&f, (c(1.0, 0.0), t0), Driver::ZCircle { turns: 1.0 }, &OdeOptions::default()).unwrap();
        assert!((e.t - t0 / (1.0 - TWO_PI_I * t0)).norm() < 1e-12);
        assert!((e.z - 1.0).norm() < 1e-14);
    }

    #[test]
    fn quadratic_family_field() {
        let eps = c(1e-3, 2e-3);
        let fam = PlanarFieldFamily::quadratic(vec![eps]);
        let f = fam.field_at(eps).unwrap();
        let (z, t) = (c(0.3, -0.1), c(0.05, 0.02));
        let [(zd, ..), (td, ..)] = f.eval(z, t);
        assert!((zd - (z + t * t - eps)).norm() < 1e-15);
        assert!((td - (t * t - eps)).norm() < 1e-15);
        for a in fam.roots_at(eps).unwrap() {
            let [(zd, ..), (td, ..)] = f.eval(c(0.0, 0.0), a);
            assert!(zd.norm() < 1e-12 * eps.norm() && td.norm() < 1e-12 * eps.norm());
        }
    }

    #[test]
    fn linear_multiplier() {
        let (nu, mu) = (c(1.0, 0.5), c(0.1, 0.3));
        let p = monodromy_map(&PlanarField::linear(nu, mu), 1.0, c(0.0, 0.0), &OdeOptions::default()).unwrap();
        assert!((p.dft - (TWO_PI_I * mu / nu).exp()).norm() < 1e-9);
        assert_eq!(p.ft, c(0.0, 0.0));
    }

    #[test]
    fn normal_form_monodromy_jet() {
        let lambda = c(0.2, 0.0);
        let germ = field_monodromy(&PlanarField::normal_form(1, lambda), 1.0, &circle_grid(0.05, 20), 4, &MonodromyOptions::default()).unwrap();
        let mut jet = germ.fitted_jet.unwrap();
        check_orientation(&jet, 1).unwrap();
        let mut cs = jet.coeffs().to_vec();
        snap_normalization(&mut cs, 1, 1e-8).unwrap();
        jet = TruncatedSeries::from_coeffs(4, &cs).unwrap();
        let want = series_time1_flow(&crate::formal::model_field_jet(1, lambda, 4), 4).unwrap();
        for m in 0..=4 {
            assert!((jet.coeff(m) - want.coeff(m)).norm() < 1e-5, "{m}");
        }
        let l = formal_invariant(&jet, 1).unwrap().lambda;
        assert!((l - lambda).norm() < 1e-3, "{l}");
    }

    #[test]
    fn reversed_loop_fails_the_gate() {
        let mut jet = TruncatedSeries::identity(3);
        jet.set_coeff(2, -TWO_PI_I);
        assert!(matches!(check_orientation(&jet, 1), Err(Error::WrongNormalization(_))));
    }

    #[test]
    fn monodromy_fixes_the_roots() {
        let eps = c(-2e-3, 1e-3);
        let fam = PlanarFieldFamily::quadratic(vec![eps]);
        let roots = fam.roots_at(eps).unwrap();
        let g = monodromy_germ(&fam, eps, &roots, &MonodromyOptions::default()).unwrap();
        for p in &g.points {
            assert!((p.ft - p.t0).norm() < 1e-14);
        }
    }

    #[test]
    fn polynomial_fit_recovers_coefficients() {
        let want = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, -2.0), c(3.0, 1.0)];
        let pts: Vec<(C, C)> = circle_grid(0.1, 12).into_iter().map(|t| (t, poly_eval(&want, t))).collect();
        let (got, res) = fit_polynomial(&pts, 5).unwrap();
        assert!(res < 1e-14);
        for (m, w) in want.iter().enumerate() {
            assert!((got[m] - w).norm() < 1e-10);
        }
        assert!(got[4].norm() < 1e-8 && got[5].norm() < 1e-6);
    }

    #[test]
    fn separatrix_slope_and_certificates() {
        for e in [1e-3, 1e-4] {
            let eps = C::from_polar(e, 1.6);
            let fam = PlanarFieldFamily::quadratic(vec![eps]);
            let roots = fam.roots_at(eps).unwrap();
            let i = roots.iter().position(|r| (r - eps.sqrt()).norm() < 1e-12).unwrap();
            let s = eps.sqrt();
            let targets: Vec<C> = (0..6).map(|m| C::from_polar(0.02 + 0.01 * m as f64, -0.5)).collect();
            let tr = separatrix_trace(&fam, eps, i, &targets, &SeparatrixOptions::default()).unwrap();
            let want = -2.0 * s / (1.0 - 2.0 * s);
            assert!((tr.slope_at_alpha - want).norm() < 1e-10 * want.norm());
            tr.certify().unwrap();
        }
    }

    #[test]
    fn decoupled_separatrix_is_the_axis() {
        let eps = C::from_polar(1e-3, 1.6);
        let mut fam = PlanarFieldFamily::quadratic(vec![eps]);
        fam.g = vec![];
        let targets = [c(0.03, -0.02), c(0.05, -0.03)];
        let tr = separatrix_trace(&fam, eps, 0, &targets, &SeparatrixOptions::default()).unwrap();
        assert_eq!(tr.slope_at_alpha, c(0.0, 0.0));
        for s in &tr.samples {
            assert!(s.z.norm() == 0.0);
        }
    }
}
