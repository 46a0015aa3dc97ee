//! Transitions between Koenigs charts of neighbouring fixed points and their
//! behaviour along an ε-sequence.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chart::{abel_residual, build_chart, koenigs_residual, KoenigsOptions};
use super::GermFamily;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fatou::{
    anchor_depth, min_line_depth, point_at_depth, sample_with_floor, FatouGerm, FatouOptions, FatouTime,
    Normalization, TimeChart, TransitionOptions, TransitionSample,
};
use crate::geometry::{check_nondegenerate, sector_for_singularity};
use crate::precision::Precision;
use crate::TWO_PI_I;

type C = Complex64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepOptions {
    pub transition: TransitionOptions,
    pub koenigs: KoenigsOptions,
    pub fatou: FatouOptions,
    /// Abel/Koenigs residual above which a row is redone in double-double.
    pub tol: f64,
    /// Smallest admissible angular margin of the root configuration.
    pub nondegeneracy_threshold: f64,
    /// `ModelAnchor` or `InvariantOnly`.
    pub normalization: Normalization,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            transition: TransitionOptions::default(),
            koenigs: KoenigsOptions::default(),
            fatou: FatouOptions::default(),
            tol: 1e-8,
            nondegeneracy_threshold: 0.1,
            normalization: Normalization::ModelAnchor,
        }
    }
}

/// A perturbed transition with its diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbedTransition {
    pub sample: TransitionSample,
    pub residual_abel: f64,
    pub residual_koenigs: f64,
    pub iter_count: usize,
    pub precision: Precision,
}

struct PairGeometry {
    from: usize,
    to: usize,
    theta: f64,
    base: C,
    anchor: C,
    sign: i32,
}

fn pair_geometry(fam: &GermFamily, j: usize, depth: f64) -> Result<PairGeometry> {
    let k = fam.k;
    if j >= 2 * k {
        return Err(Error::Config(format!("transition index {j} out of range")));
    }
    let family = fam.all_roots()?;
    let mut rays = Vec::with_capacity(k + 1);
    for i in 0..=k {
        rays.push(sector_for_singularity(&family, i, fam.radius)?.1);
    }
    let find = |ray: usize| rays.iter().position(|r| *r == ray);
    let next = (j + 1) % (2 * k);
    let (from, to) = match (find(j), find(next)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::NoOverlap(format!(
                "no fixed points assigned to rays {j} and {next}"
            )))
        }
    };
    let theta = PI * (j + 1) as f64 / k as f64;
    Ok(PairGeometry {
        from,
        to,
        theta,
        base: C::from_polar(0.5 * fam.radius, theta),
        anchor: point_at_depth(k, anchor_depth(k, fam.radius, depth), theta),
        sign: if j.is_multiple_of(2) { 1 } else { -1 },
    })
}

fn transition_options(fam: &GermFamily, opts: &TransitionOptions) -> TransitionOptions {
    let mut o = *opts;
    o.min_depth = o.min_depth.max(min_line_depth(fam.k, fam.radius));
    o
}

/// Points between the sampling anchor and the base point, used for residuals.
fn residual_grid(g: &PairGeometry) -> Vec<C> {
    let (r0, r1) = (g.anchor.norm(), g.base.norm());
    (0..10)
        .map(|m| {
            let u = m as f64 / 9.0;
            C::from_polar(r0 + (r1 - r0) * u, g.theta + 0.15 * (2.0 * u - 1.0))
        })
        .collect()
}

fn transition_at(
    fam: &GermFamily,
    eps: C,
    j: usize,
    opts: &SweepOptions,
    precision: Precision,
) -> Result<PerturbedTransition> {
    let g = pair_geometry(fam, j, opts.transition.depth)?;
    let mut kopts = opts.koenigs;
    kopts.precision = precision;
    let mut from = build_chart(fam, eps, g.from, g.base, kopts)?;
    let mut to = build_chart(fam, eps, g.to, g.base, kopts)?;
    if opts.normalization == Normalization::InvariantOnly {
        from.anchor(g.base, C::new(0.0, 0.0))?;
        to.anchor(g.base, C::new(0.0, 0.0))?;
    }
    let grid = residual_grid(&g);
    let mut residual_abel = 0.0f64;
    let mut residual_koenigs = 0.0f64;
    for ch in [&from, &to] {
        residual_abel = residual_abel.max(abel_residual(ch, &grid)?);
        residual_koenigs = residual_koenigs.max(koenigs_residual(ch, &grid)?);
    }
    let iter_count = from.eval(g.anchor)?.iters.max(to.eval(g.anchor)?.iters);
    let topts = transition_options(fam, &opts.transition);
    let mut sample = sample_with_floor(
        &from, &to, fam.k, fam.radius, g.theta, j, g.sign, g.anchor, &topts,
    )?;
    sample.normalization = opts.normalization;
    Ok(PerturbedTransition {
        sample,
        residual_abel,
        residual_koenigs,
        iter_count,
        precision,
    })
}

/// `τ_{to}∘τ_{from}⁻¹` for the transition `j` at `ε`; retried in
/// double-double when the residuals exceed `opts.tol`.
pub fn perturbed_transition(
    fam: &GermFamily,
    eps: C,
    j: usize,
    opts: &SweepOptions,
) -> Result<PerturbedTransition> {
    let first = transition_at(fam, eps, j, opts, opts.koenigs.precision);
    let bad = match &first {
        Ok(t) => t.residual_abel > opts.tol || t.residual_koenigs > opts.tol,
        Err(Error::NotConverged(_)) => true,
        Err(_) => false,
    };
    if bad && opts.koenigs.precision == Precision::Double {
        let second = transition_at(fam, eps, j, opts, Precision::DoubleDouble)?;
        if second.residual_abel > opts.tol || second.residual_koenigs > opts.tol {
            return Err(Error::NotConverged(format!(
                "residuals {:e}/{:e} above {:e} after escalation",
                second.residual_abel, second.residual_koenigs, opts.tol
            )));
        }
        return Ok(second);
    }
    first
}

/// The unperturbed transition `j`, with both charts anchored to the model
/// time at the same base point as the perturbed charts.
pub fn anchored_reference(
    fam: &GermFamily,
    j: usize,
    opts: &SweepOptions,
) -> Result<TransitionSample> {
    let g = pair_geometry(fam, j, opts.transition.depth)?;
    let sys = FatouGerm::new(fam.unperturbed()?, opts.fatou)?;
    let k = fam.k;
    let model = -1.0 / (TWO_PI_I * k as f64 * g.base.powu(k as u32));
    let mut from = sys.chart(j)?;
    let mut to = sys.chart(j + 1)?;
    for ch in [&mut from, &mut to] {
        let (v, _) = FatouTime {
            sys: &sys,
            chart: *ch,
        }
        .time(g.base, None)?;
        ch.norm_constant = model - v;
    }
    let (from, to) = (
        FatouTime {
            sys: &sys,
            chart: from,
        },
        FatouTime {
            sys: &sys,
            chart: to,
        },
    );
    let topts = transition_options(fam, &opts.transition);
    let mut sample = sample_with_floor(
        &from, &to, k, fam.radius, g.theta, j, g.sign, g.anchor, &topts,
    )?;
    sample.normalization = Normalization::ModelAnchor;
    Ok(sample)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: C,
    pub pair: usize,
    pub l: i32,
    pub c: C,
    pub abs_c: f64,
    pub residual_abel: f64,
    pub residual_koenigs: f64,
    pub iter_count: usize,
    pub precision_mode: Precision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `|c_l|`.
    Abs,
    /// `|c_l/c_{l/2}²|`, unchanged by any translation of either chart.
    Ratio,
}

impl Observable {
    fn read(self, s: &TransitionSample, l: i32) -> Option<f64> {
        match self {
            Observable::Abs => Some(s.coeff(l).norm()),
            Observable::Ratio => s.ratio_invariant().map(|r| r.norm()),
        }
    }
}

/// One observable along the ε-sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub pair: usize,
    pub l: i32,
    pub observable: Observable,
    /// `|c_l|` per ε, `None` where the row failed.
    pub values: Vec<Option<f64>>,
    pub decreasing_differences: bool,
    /// Richardson extrapolation in `|ε|^{1/(k+1)}`, quadratic through the
    /// three smallest samples.
    pub extrapolated: Option<f64>,
    pub reference: Option<f64>,
    /// `|extrapolated − reference| / max(reference, floor)`.
    pub rel_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepError {
    pub eps: C,
    pub pair: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub k: usize,
    pub eps_list: Vec<C>,
    pub rows: Vec<SweepRow>,
    pub series: Vec<ObservableSeries>,
    pub errors: Vec<SweepError>,
    pub nondegeneracy_margin: f64,
}

impl SweepReport {
    pub fn series_for(&self, pair: usize, l: i32) -> Option<&ObservableSeries> {
        self.series.iter().find(|s| s.pair == pair && s.l == l)
    }

    pub fn ratio_series(&self, pair: usize) -> Option<&ObservableSeries> {
        self.series.iter().find(|s| s.pair == pair && s.observable == Observable::Ratio)
    }
}

fn extrapolate(k: usize, eps: &[C], vals: &[Option<f64>]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(vals)
        .filter_map(|(e, v)| v.map(|v| (e.norm().powf(1.0 / (k + 1) as f64), v)))
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let n = pts.len();
    if n < 2 {
        return pts.first().map(|p| p.1);
    }
    // Neville's scheme at x = 0 through the two or three smallest samples
    let tail = &pts[n.saturating_sub(3)..];
    let mut p: Vec<f64> = tail.iter().map(|q| q.1).collect();
    for d in 1..tail.len() {
        for i in 0..tail.len() - d {
            let (xi, xj) = (tail[i].0, tail[i + d].0);
            p[i] = (xi * p[i + 1] - xj * p[i]) / (xi - xj);
        }
    }
    Some(p[0])
}

/// Perturbed transitions over `fam.eps_list`, compared with the unperturbed ones.
pub fn convergence_sweep(fam: &GermFamily, opts: &SweepOptions) -> Result<SweepReport> {
    fam.validate()?;
    let family = fam.all_roots()?;
    let nd = check_nondegenerate(&family, fam.k, opts.nondegeneracy_threshold);
    if !nd.ok {
        return Err(Error::DegenerateInput(format!(
            "the family is not nondegenerate: its root configuration comes within {:.3e} rad of a real dividing \
             direction (threshold {})",
            nd.margin, opts.nondegeneracy_threshold
        )));
    }
    let k = fam.k;
    let r = opts.transition.fourier_range as i32;
    let invariant_only = match opts.normalization {
        Normalization::ModelAnchor => false,
        Normalization::InvariantOnly if r >= 2 => true,
        Normalization::InvariantOnly => {
            return Err(Error::Config("invariant-only sweeps need fourier_range >= 2".into()))
        }
        Normalization::PeriodMean => {
            return Err(Error::Config("sweeps normalize by model-anchor or invariant-only".into()))
        }
    };
    let geoms: Vec<(usize, i32)> = (0..2 * k)
        .filter_map(|j| pair_geometry(fam, j, opts.transition.depth).ok().map(|g| (j, g.sign)))
        .collect();
    let pairs: Vec<usize> = geoms.iter().map(|g| g.0).collect();
    let mut eps_sorted = fam.eps_list.clone();
    eps_sorted.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let jobs: Vec<(C, usize)> = eps_sorted
        .iter()
        .flat_map(|e| pairs.iter().map(move |j| (*e, *j)))
        .collect();
    let exec: Exec = opts.transition.exec.into();
    // rows are parallel; transitions inside a row run sequentially
    let mut inner = *opts;
    if exec == Exec::Parallel {
        inner.transition.exec = crate::fatou::transition::ExecMode::Sequential;
    }
    let results = exec.map(&jobs, |(e, j)| perturbed_transition(fam, *e, *j, &inner));
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let ls: Vec<i32> = (1..=r).flat_map(|l| [-l, l]).collect();
    // per pair: |c_l| for every l, or the single allowed-side ratio
    let observed: Vec<Vec<(i32, Observable)>> = geoms
        .iter()
        .map(|&(_, sign)| {
            if invariant_only {
                vec![(-2 * sign, Observable::Ratio)]
            } else {
                ls.iter().map(|&l| (l, Observable::Abs)).collect()
            }
        })
        .collect();
    let mut table: Vec<Vec<Vec<Option<f64>>>> = observed
        .iter()
        .map(|obs| vec![vec![None; eps_sorted.len()]; obs.len()])
        .collect();
    for (n, ((e, j), res)) in jobs.iter().zip(results).enumerate() {
        let ei = n / pairs.len();
        let pi = n % pairs.len();
        match res {
            Ok(tr) => {
                for (oi, &(l, obs)) in observed[pi].iter().enumerate() {
                    table[pi][oi][ei] = obs.read(&tr.sample, l);
                }
                for &l in &ls {
                    let c = tr.sample.coeff(l);
                    rows.push(SweepRow {
                        eps: *e,
                        pair: *j,
                        l,
                        c,
                        abs_c: c.norm(),
                        residual_abel: tr.residual_abel,
                        residual_koenigs: tr.residual_koenigs,
                        iter_count: tr.iter_count,
                        precision_mode: tr.precision,
                    });
                }
            }
            Err(err) => errors.push(SweepError {
                eps: *e,
                pair: *j,
                message: err.to_string(),
            }),
        }
    }
    let refs = exec.map(&pairs, |j| anchored_reference(fam, *j, opts));
    let mut series = Vec::new();
    for (pi, (&j, reference)) in pairs.iter().zip(refs).enumerate() {
        let reference = reference.ok();
        for (oi, &(l, observable)) in observed[pi].iter().enumerate() {
            let values = table[pi][oi].clone();
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let diffs: Vec<f64> = present.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let decreasing_differences = diffs.windows(2).all(|w| w[1] < w[0]);
            let extrapolated = extrapolate(k, &eps_sorted, &values);
            let refv = reference.as_ref().and_then(|s| observable.read(s, l));
            let rel_distance = match (extrapolated, refv) {
                (Some(x), Some(r)) => Some((x - r).abs() / r.max(1e-300)),
                _ => None,
            };
            series.push(ObservableSeries {
                pair: j,
                l,
                observable,
                values,
                decreasing_differences,
                extrapolated,
                reference: refv,
                rel_distance,
            });
        }
    }
    Ok(SweepReport {
        k,
        eps_list: eps_sorted,
        rows,
        series,
        errors,
        nondegeneracy_margin: nd.margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koenigs::chart::{perturbed_time, PathMode};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn quick() -> SweepOptions {
        let mut o = SweepOptions::default();
        o.transition.samples = 128;
        o
    }

    #[test]
    fn moebius_family_transition_is_translation() {
        let eps = c(-1e-3, 0.0);
        let fam = GermFamily::moebius(vec![eps], 0.155);
        let mut o = SweepOptions::default();
        o.koenigs.precision = Precision::DoubleDouble;
        let tr = perturbed_transition(&fam, eps, 0, &o).unwrap();
        for l in 1..=3 {
            assert!(
                tr.sample.coeff(l).norm() < 1e-8 && tr.sample.coeff(-l).norm() < 1e-8,
                "{:?}",
                tr.sample.fourier
            );
        }
    }

    #[test]
    fn abel_residual_small_on_generic_family() {
        let eps = C::from_polar(1e-3, PI);
        let fam = GermFamily::quadratic(vec![vec![], vec![c(0.3, 0.0)]], vec![eps], 0.1);
        let g = pair_geometry(&fam, 0, 2.0).unwrap();
        let ch = build_chart(&fam, eps, g.from, g.base, KoenigsOptions::default()).unwrap();
        let grid: Vec<C> = (0..50)
            .map(|m| C::from_polar(0.03 + 0.0004 * m as f64, PI + 0.4 * (m as f64 / 49.0 - 0.5)))
            .collect();
        assert!(abel_residual(&ch, &grid).unwrap() < 1e-8);
        assert!(koenigs_residual(&ch, &grid).unwrap() < 1e-8);
    }

    #[test]
    fn winding_changes_time_by_period() {
        let eps = C::from_polar(1e-3, PI);
        let fam = GermFamily::quadratic(vec![], vec![eps], 0.1);
        let g = pair_geometry(&fam, 0, 2.0).unwrap();
        let ch = build_chart(&fam, eps, g.from, g.base, KoenigsOptions::default()).unwrap();
        let a = ch.fp.alpha;
        let rad = 0.5 * a.norm();
        let start = a + C::from_polar(rad, 0.1);
        let loop_pts: Vec<C> = (0..=64)
            .map(|m| a + C::from_polar(rad, 0.1 + std::f64::consts::TAU * m as f64 / 64.0))
            .collect();
        let mut path = vec![start];
        let before = perturbed_time(&ch, &path, PathMode::Continue).unwrap();
        path.extend(loop_pts);
        let after = perturbed_time(&ch, &path, PathMode::Continue).unwrap();
        assert!(
            (after - before - ch.period()).norm() < 1e-9,
            "{} vs {}",
            after - before,
            ch.period()
        );
        assert!(matches!(
            perturbed_time(&ch, &path, PathMode::SingleValued),
            Err(Error::BranchCut(_))
        ));
    }

    #[test]
    fn real_root_pair_is_degenerate() {
        let fam =
            GermFamily::quadratic(vec![], vec![c(1e-3, 0.0), c(1e-4, 0.0), c(1e-5, 0.0)], 0.1);
        assert!(matches!(
            convergence_sweep(&fam, &quick()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn extrapolation_removes_powers_of_root_scale() {
        let eps = [c(1e-2, 0.0), c(1e-4, 0.0)];
        let v = [Some(1.0 + 0.1), Some(1.0 + 0.01)];
        assert!((extrapolate(1, &eps, &v).unwrap() - 1.0).abs() < 1e-12);
        // quadratic in x = |ε|^{1/2} is removed exactly with three samples
        let eps = [c(1e-2, 0.0), c(0.0, 1e-3), c(1e-4, 0.0), c(1e-5, 0.0)];
        let f = |e: C| {
            let x = e.norm().sqrt();
            Some(2.0 - 3.0 * x + 5.0 * x * x)
        };
        let v: Vec<_> = eps.iter().map(|e| f(*e)).collect();
        assert!((extrapolate(1, &eps, &v).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invariant_only_keeps_the_ratio_and_drops_the_anchor() {
        let eps = C::from_polar(1e-4, 2.0);
        let fam = GermFamily::quadratic(vec![vec![], vec![c(0.3, 0.0)]], vec![eps], 0.2);
        let anchored = perturbed_transition(&fam, eps, 0, &quick()).unwrap().sample;
        let o = SweepOptions { normalization: Normalization::InvariantOnly, ..quick() };
        let free = perturbed_transition(&fam, eps, 0, &o).unwrap().sample;
        assert_eq!(free.normalization, Normalization::InvariantOnly);
        assert!((anchored.c0 - free.c0).norm() > 1e-3);
        let (a, b) = (anchored.ratio_invariant().unwrap(), free.ratio_invariant().unwrap());
        assert!((a - b).norm() < 1e-6 * a.norm(), "{a} vs {b}");
        let bad = SweepOptions { normalization: Normalization::PeriodMean, ..quick() };
        assert!(matches!(convergence_sweep(&fam, &bad), Err(Error::Config(_))));
    }
}
