//! Acceptance criteria A1 to A10. Each prints one PASS/FAIL line; the
//! process fails when any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use stokes_core::fatou::{
    ev_transitions, fatou_coordinate, sample_transition, split_composition, FatouGerm, FatouOptions, FatouTime,
    GermSpec, Parity, TransitionOptions,
};
use stokes_core::formal::{
    central_manifold_defect, formal_central_manifold, formal_invariant, model_field_jet, FormalFieldSpec, Monomial,
    MultiJet,
};
use stokes_core::harness::{execute, Command, ExperimentConfig, Flags};
use stokes_core::holonomy::{
    check_orientation, circle_grid, field_monodromy, monodromy_family, monodromy_map, separatrix_trace,
    snap_normalization, MonodromyOptions, PlanarField, PlanarFieldFamily, SeparatrixOptions, TabulationOptions,
};
use stokes_core::koenigs::{convergence_sweep, perturbed_transition, GermFamily, SweepOptions};
use stokes_core::ode::OdeOptions;
use stokes_core::precision::Precision;
use stokes_core::series::{series_time1_flow, TruncatedSeries};
use stokes_core::{Complex64 as C, TWO_PI_I};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn within(t0: Instant, limit: Duration) -> Result<(), String> {
    let el = t0.elapsed();
    check(el < limit, format!("runtime {el:?} over {limit:?}"))
}

/// `count` values of modulus from `1e-2` down to `1e-5` at argument `arg`.
fn eps_ladder(count: usize, arg: f64) -> Vec<C> {
    (0..count)
        .map(|i| C::from_polar(10f64.powf(-2.0 - 3.0 * i as f64 / (count - 1) as f64), arg))
        .collect()
}

fn a1() -> Outcome {
    let t0 = Instant::now();
    let sys = FatouGerm::new(GermSpec::moebius(0.155).map_err(err)?, FatouOptions::default()).map_err(err)?;
    let mut worst = 0.0f64;
    for j in 0..2 {
        let chart = sys.chart(j).map_err(err)?;
        let axis = chart.sector.bisector_arg;
        let grid: Vec<C> = (0..100)
            .map(|m| C::from_polar(0.02 + 0.0008 * (m / 10) as f64, axis + 0.08 * (m % 10) as f64 - 0.36))
            .collect();
        let model = |t: C| -1.0 / (TWO_PI_I * t);
        let offset = fatou_coordinate(&sys, &chart, grid[0]).map_err(err)? - model(grid[0]);
        for &t in &grid {
            let tau = fatou_coordinate(&sys, &chart, t).map_err(err)?;
            worst = worst.max((tau - model(t) - offset).norm());
        }
    }
    check(worst <= 1e-9, format!("chart deviation {worst:e}"))?;
    let ev = ev_transitions(&sys, &TransitionOptions::default()).map_err(err)?;
    let fourier = ev
        .transitions
        .iter()
        .flat_map(|s| (1..=3).flat_map(move |l| [s.coeff(l).norm(), s.coeff(-l).norm()]))
        .fold(0.0, f64::max);
    check(fourier <= 1e-8, format!("max |c_l| {fourier:e}"))?;
    let jet = sys.map.jet(8).map_err(err)?;
    let lambda = formal_invariant(&jet, 1).map_err(err)?.lambda;
    check(lambda.norm() <= 1e-12, format!("lambda {lambda}"))?;
    within(t0, Duration::from_secs(10))?;
    Ok(format!("chart dev {worst:.1e}, max |c_l| {fourier:.1e}, |lambda| {:.1e}", lambda.norm()))
}

fn a2() -> Outcome {
    let t0 = Instant::now();
    // Fatou charts of cubic germs, both petal kinds
    let mut fatou = 0.0f64;
    for (k, b) in [(1usize, c(0.3, 0.0)), (2, c(-0.2, 0.4))] {
        let sys = FatouGerm::new(GermSpec::cubic_like(k, b, 0.1), FatouOptions::default()).map_err(err)?;
        for j in 0..2 * k {
            let chart = sys.chart(j).map_err(err)?;
            let axis = chart.sector.bisector_arg;
            for m in 0..20 {
                let t = C::from_polar(0.02 + 0.002 * (m / 4) as f64, axis + 0.1 * (m % 4) as f64 - 0.15);
                let ft = sys.map.eval(t);
                if !chart.sector.contains(ft) {
                    continue;
                }
                let a = fatou_coordinate(&sys, &chart, t).map_err(err)?;
                let b = fatou_coordinate(&sys, &chart, ft).map_err(err)?;
                fatou = fatou.max((b - a - 1.0).norm());
            }
        }
    }
    check(fatou <= 1e-8, format!("Fatou Abel residual {fatou:e}"))?;
    // Koenigs charts of the generic quadratic family
    let (mut abel, mut koenigs) = (0.0f64, 0.0f64);
    for e in [1e-3, 1e-4, 1e-5] {
        let eps = C::from_polar(e, 1.6);
        let fam = GermFamily::quadratic(vec![vec![], vec![c(0.3, 0.0)]], vec![eps], 0.2);
        for j in 0..2 {
            let tr = perturbed_transition(&fam, eps, j, &SweepOptions::default()).map_err(err)?;
            abel = abel.max(tr.residual_abel);
            koenigs = koenigs.max(tr.residual_koenigs);
        }
    }
    check(abel <= 1e-8 && koenigs <= 1e-8, format!("Koenigs residuals {abel:e} / {koenigs:e}"))?;
    within(t0, Duration::from_secs(60))?;
    Ok(format!("Fatou {fatou:.1e}, Abel {abel:.1e}, Koenigs {koenigs:.1e}"))
}

fn a3() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for k in [1usize, 2] {
        for lam in [c(0.0, 0.0), c(0.3, 0.1), c(-0.5, 0.0)] {
            let n = 2 * k + 6;
            let f = series_time1_flow(&model_field_jet(k, lam, n), n).map_err(err)?;
            let got = formal_invariant(&f, k).map_err(err)?.lambda;
            worst = worst.max((got - lam).norm());
        }
    }
    check(worst <= 1e-10, format!("lambda error {worst:e}"))?;
    within(t0, Duration::from_secs(5))?;
    Ok(format!("max lambda error {worst:.1e}"))
}

fn a4() -> Outcome {
    let t0 = Instant::now();
    let mono = |exp: &[u32]| Monomial { exp: exp.to_vec(), c: [1.0, 0.0] };
    let order = 8;
    let field = FormalFieldSpec {
        n: 2,
        b: DMatrix::from_element(1, 1, c(1.0, 0.0)),
        k: 1,
        y_jet: vec![MultiJet::from_terms(2, 2, &[mono(&[1, 0]), mono(&[0, 2])]).map_err(err)?],
        t_jet: MultiJet::from_terms(2, 2, &[mono(&[0, 2])]).map_err(err)?,
    };
    let cm = formal_central_manifold(&field, order).map_err(err)?;
    let s = &cm.component_series[0];
    let mut worst = 0.0f64;
    let mut fact = 1.0;
    for m in 2..=order {
        fact *= (m - 1) as f64;
        worst = worst.max((s.coeff(m) + fact).norm() / fact);
    }
    check(worst <= 1e-10, format!("coefficient error {worst:e}"))?;
    let q = vec![s.coeffs().to_vec()];
    let defect = central_manifold_defect(&field, &q, order);
    let mut dworst = 0.0f64;
    let mut scale = 1.0;
    for m in 0..=order {
        if m > 1 {
            scale *= (m - 1) as f64;
        }
        dworst = dworst.max(defect[0][m].norm() / scale);
    }
    check(dworst <= 1e-12, format!("defect {dworst:e}"))?;
    within(t0, Duration::from_secs(5))?;
    Ok(format!("coefficient error {worst:.1e}, defect {dworst:.1e}"))
}

fn a5() -> Outcome {
    let t0 = Instant::now();
    let cases = [
        (c(1.0, 0.0), c(0.1, 0.3)),
        (c(1.0, 0.5), c(-0.2, 0.25)),
        (c(-0.7, 1.1), c(0.3, -0.2)),
        (c(0.4, -1.3), c(0.05, 0.5)),
        (c(2.0, 0.3), c(-0.6, -0.7)),
    ];
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-16, ..OdeOptions::default() };
    let mut worst = 0.0f64;
    for (nu, mu) in cases {
        let r = mu / nu;
        check(r.norm() < 0.5 && r.im != 0.0, format!("bad ratio {r}"))?;
        let want = (TWO_PI_I * r).exp();
        let field = PlanarField::linear(nu, mu);
        let p = monodromy_map(&field, 1.0, c(0.0, 0.0), &opts).map_err(err)?;
        worst = worst.max((p.dft - want).norm());
        let t = c(0.01, -0.004);
        let p = monodromy_map(&field, 1.0, t, &opts).map_err(err)?;
        worst = worst.max((p.ft / t - want).norm());
    }
    check(worst <= 1e-8, format!("multiplier error {worst:e}"))?;
    within(t0, Duration::from_secs(30))?;
    Ok(format!("max multiplier error {worst:.1e}"))
}

fn a6() -> Outcome {
    let t0 = Instant::now();
    let grid = circle_grid(0.05, 20);
    let opts = MonodromyOptions::default();
    let g = field_monodromy(&PlanarField::normal_form(1, c(0.0, 0.0)), 1.0, &grid, 4, &opts).map_err(err)?;
    let pointwise = g
        .points
        .iter()
        .map(|p| (p.ft - p.t0 / (1.0 - TWO_PI_I * p.t0)).norm())
        .fold(0.0, f64::max);
    check(pointwise <= 1e-7, format!("pointwise error {pointwise:e}"))?;
    let lambda = c(0.2, 0.0);
    let g = field_monodromy(&PlanarField::normal_form(1, lambda), 1.0, &grid, 4, &opts).map_err(err)?;
    let jet = g.fitted_jet.ok_or("no fitted jet")?;
    check_orientation(&jet, 1).map_err(err)?;
    let mut cs = jet.coeffs().to_vec();
    snap_normalization(&mut cs, 1, 1e-7).map_err(err)?;
    let jet = TruncatedSeries::from_coeffs(4, &cs).map_err(err)?;
    let got = formal_invariant(&jet, 1).map_err(err)?.lambda;
    check((got - lambda).norm() <= 1e-3, format!("lambda {got}"))?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!("pointwise {pointwise:.1e}, lambda error {:.1e}", (got - lambda).norm()))
}

/// Rows may fail only where the fixed points reach the base circle,
/// `sqrt|ε| >= r/4`; every other row must succeed.
fn only_outer_rows_fail(rep: &stokes_core::koenigs::SweepReport, radius: f64) -> Result<(), String> {
    match rep.errors.iter().find(|e| e.eps.norm().sqrt() < radius / 4.0) {
        Some(e) => Err(format!("row at eps {} failed: {}", e.eps, e.message)),
        None => Ok(()),
    }
}

fn a7() -> Outcome {
    let t0 = Instant::now();
    let arg = 2.0;
    let eps = eps_ladder(7, arg);
    let fam = GermFamily::quadratic(vec![vec![], vec![c(0.3, 0.0)]], eps.clone(), 0.2);
    let rep = convergence_sweep(&fam, &SweepOptions::default()).map_err(err)?;
    only_outer_rows_fail(&rep, 0.2)?;
    let s = rep.series_for(0, -1).ok_or("no observable for pair 0")?;
    let rel = s.rel_distance.ok_or("no extrapolation")?;
    check(s.decreasing_differences, format!("differences not decreasing: {:?}", s.values))?;
    check(rel <= 0.02, format!("extrapolated {:?} vs {:?}", s.extrapolated, s.reference))?;
    // Möbius control: the perturbed transitions are exact translations
    let mob = GermFamily::moebius(eps.iter().map(|e| e * C::from_polar(1.0, PI - arg)).collect(), 0.155);
    let mut o = SweepOptions::default();
    o.koenigs.precision = Precision::DoubleDouble;
    let mrep = convergence_sweep(&mob, &o).map_err(err)?;
    only_outer_rows_fail(&mrep, 0.155)?;
    let control = mrep.rows.iter().map(|r| r.abs_c).fold(0.0, f64::max);
    check(control <= 1e-6, format!("Möbius control {control:e}"))?;
    within(t0, Duration::from_secs(900))?;
    Ok(format!(
        "|c_-1| -> {:.6} vs {:.6} (rel {rel:.1e}), {} outer rows failed, Möbius max {control:.1e} ({} outer rows failed)",
        s.extrapolated.unwrap_or(f64::NAN),
        s.reference.unwrap_or(f64::NAN),
        rep.errors.len(),
        mrep.errors.len()
    ))
}

fn a8() -> Outcome {
    let t0 = Instant::now();
    let fields = PlanarFieldFamily::quadratic(eps_ladder(7, 1.6));
    let fam = monodromy_family(&fields, &TabulationOptions::default()).map_err(err)?;
    let rep = convergence_sweep(&fam, &SweepOptions::default()).map_err(err)?;
    only_outer_rows_fail(&rep, fam.radius)?;
    // pair 0 carries a pure translation for this family; pair 1 holds the invariant
    let s = rep.series_for(1, 1).ok_or("no observable for pair 1")?;
    check(s.decreasing_differences, format!("differences not decreasing: {:?}", s.values))?;
    // in the integral chart the first nonlinear coefficient ratio is 2π|c_l|
    let x = 2.0 * PI * s.extrapolated.ok_or("no extrapolation")?;
    let r = 2.0 * PI * s.reference.ok_or("no reference")?;
    let rel = (x - r).abs() / r;
    check(rel <= 0.05, format!("integral ratio {x} vs {r}"))?;
    within(t0, Duration::from_secs(1800))?;
    Ok(format!("integral ratio {x:.6} vs {r:.6} (rel {rel:.1e}), {} outer rows failed", rep.errors.len()))
}

fn a9() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut samples = 0;
    for e in [1e-3, 1e-4] {
        let eps = C::from_polar(e, 1.6);
        let fam = PlanarFieldFamily::quadratic(vec![eps]);
        let s = eps.sqrt();
        let i = fam
            .roots_at(eps)
            .map_err(err)?
            .iter()
            .position(|r| (r - s).norm() < 1e-12)
            .ok_or("root sqrt(eps) not found")?;
        let targets: Vec<C> = (0..10).map(|m| C::from_polar(0.02 + 0.006 * m as f64, -0.5)).collect();
        let tr = separatrix_trace(&fam, eps, i, &targets, &SeparatrixOptions::default()).map_err(err)?;
        let want = -2.0 * s / (1.0 - 2.0 * s);
        worst = worst.max((tr.slope_at_alpha - want).norm());
        check(tr.samples.iter().all(|x| x.certified), format!("uncertified samples at eps {eps}"))?;
        samples += tr.samples.len();
    }
    check(worst <= 1e-10, format!("slope error {worst:e}"))?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!("{samples} samples certified, slope error {worst:.1e}"))
}

fn a10() -> Outcome {
    let t0 = Instant::now();
    // gauge covariance: shifting the source chart by a multiplies c_l by e^{-2πila}
    let sys = FatouGerm::new(GermSpec::cubic_like(1, c(0.3, 0.0), 0.1), FatouOptions::default()).map_err(err)?;
    let ev = ev_transitions(&sys, &TransitionOptions::default()).map_err(err)?;
    let a = 0.37;
    let base = &ev.transitions[0];
    let mut from = sys.chart(0).map_err(err)?;
    from.norm_constant = ev.norm_constants[0] + a;
    let mut to = sys.chart(1).map_err(err)?;
    to.norm_constant = ev.norm_constants[1];
    let opts = TransitionOptions { min_depth: 0.0, ..TransitionOptions::default() };
    let anchor = stokes_core::fatou::point_at_depth(1, opts.depth, PI);
    let moved = sample_transition(
        &FatouTime { sys: &sys, chart: from },
        &FatouTime { sys: &sys, chart: to },
        0,
        base.half_plane_sign,
        anchor,
        &opts,
    )
    .map_err(err)?;
    let plain = {
        let mut f = from;
        f.norm_constant -= a;
        sample_transition(
            &FatouTime { sys: &sys, chart: f },
            &FatouTime { sys: &sys, chart: to },
            0,
            base.half_plane_sign,
            anchor,
            &opts,
        )
        .map_err(err)?
    };
    let predicted = plain.shifted_source(c(a, 0.0));
    let mut gauge = 0.0f64;
    for l in [-3, -2, -1, 1, 2, 3] {
        let (m, p) = (moved.coeff(l), predicted.coeff(l));
        gauge = gauge.max((m - p).norm() / p.norm().max(1e-6));
    }
    check(gauge <= 1e-6, format!("gauge covariance error {gauge:e}"))?;
    // parity: the disallowed side is at the noise floor
    let (mut parity, mut mass) = (0.0f64, 0.0f64);
    for s in &ev.transitions {
        let floor = [3, -3].iter().map(|l| s.coeff(*l).norm()).fold(1e-14, f64::max);
        parity = parity.max(s.disallowed_mass() / floor);
        mass = mass.max(s.disallowed_mass());
    }
    check(parity <= 10.0, format!("disallowed mass is {parity:.1}x the noise floor"))?;
    // split/compose round trip on random univalent quadratics
    let mut runner = TestRunner::new(PropConfig { cases: 64, failure_persistence: None, ..PropConfig::default() });
    runner
        .run(
            &(-0.3f64..0.3, -0.3f64..0.3, -0.2f64..0.2, proptest::bool::ANY),
            |(re, im, q, odd)| {
                let a0 = c(re, im);
                let comp = move |s: C| (a0 + s + q * s * s, 1.0 + 2.0 * q * s);
                let parity = if odd { Parity::Odd } else { Parity::Even };
                let p = split_composition(comp, parity, c(0.0, 0.0)).unwrap();
                for m in 0..12 {
                    let s = C::from_polar(0.05 + 0.02 * m as f64, 0.7 * m as f64);
                    let back = p.phi_l1(|x| comp(x).0, p.phi_l(|x| comp(x).0, s));
                    prop_assert!((back - comp(s).0).norm() <= 1e-12);
                }
                Ok(())
            },
        )
        .map_err(|e| format!("split round trip: {e}"))?;
    // determinism: identical runs give identical bytes
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("modulus.json");
    let cfg = ExperimentConfig::from_toml(
        "[family]\nkind = \"germ\"\nk = 1\nnum = [[0.0, 0.0], [1.0, 0.0], [0.0, 6.283185307179586], [0.0, 1.8849555921538759]]\nradius = 0.1\n",
    )
    .map_err(err)?;
    let flags = Flags { out: Some(path.clone()), ..Flags::default() };
    let mut bytes = Vec::new();
    for _ in 0..2 {
        execute(Command::Modulus, Some(cfg.clone()), &flags).map_err(err)?;
        bytes.push((
            std::fs::read(&path).map_err(err)?,
            std::fs::read(dir.path().join("modulus.json.manifest.json")).map_err(err)?,
        ));
    }
    check(bytes[0] == bytes[1], "artifacts differ between identical runs")?;
    within(t0, Duration::from_secs(300))?;
    Ok(format!("gauge {gauge:.1e}, disallowed mass {mass:.1e} ({parity:.1e}x floor), 64 split cases, artifacts stable"))
}

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let all: [(&str, fn() -> Outcome); 10] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
    ];
    let mut failed = 0;
    for (name, f) in all {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let t0 = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let el = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("{name} PASS ({el:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL ({el:.1}s): {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
