//! Radial sectors, dividing rays, nondegeneracy of root configurations,
//! limit polygons and the rotation disc for a root pair.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

pub fn canon(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Shortest arc between two directions.
pub fn ang_dist(a: f64, b: f64) -> f64 {
    let d = canon(a - b);
    d.min(TAU - d)
}

/// Distance between two undirected lines through the origin.
pub fn line_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Arguments `π(1+2j)/(2k)` of the rays where `t^k` is purely imaginary.
pub fn imaginary_dividing_rays(k: usize) -> Vec<f64> {
    (0..2 * k)
        .map(|j| PI * (1 + 2 * j) as f64 / (2 * k) as f64)
        .collect()
}

/// Arguments `πm/k` of the rays where `t^k` is real.
pub fn real_dividing_rays(k: usize) -> Vec<f64> {
    (0..2 * k).map(|m| PI * m as f64 / k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    #[serde(rename = "bisector")]
    pub bisector_arg: f64,
    pub opening: f64,
    pub radius: f64,
}

impl Sector {
    pub fn new(bisector_arg: f64, opening: f64, radius: f64) -> Result<Self> {
        if !(opening > 0.0 && opening < TAU) || !(radius > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "sector opening {opening} / radius {radius}"
            )));
        }
        Ok(Self {
            bisector_arg: canon(bisector_arg),
            opening,
            radius,
        })
    }

    pub fn contains(&self, t: C) -> bool {
        let r = t.norm();
        r > 0.0 && r < self.radius && ang_dist(t.arg(), self.bisector_arg) < self.opening / 2.0
    }

    /// Angular distance from `arg t` to the nearer boundary ray (negative outside).
    pub fn angular_margin(&self, t: C) -> f64 {
        self.opening / 2.0 - ang_dist(t.arg(), self.bisector_arg)
    }
}

/// Index of the unique dividing ray in a good sector, `None` otherwise.
pub fn is_good_sector(s: &Sector, k: usize) -> Option<usize> {
    let half = s.opening / 2.0;
    let mut inside = None;
    for (j, r) in imaginary_dividing_rays(k).into_iter().enumerate() {
        let d = ang_dist(r, s.bisector_arg);
        if d < half {
            if inside.is_some() {
                return None;
            }
            inside = Some(j);
        } else if d <= half {
            return None;
        }
    }
    inside
}

/// Roots `α_0..α_k` of `p(·, ε)` at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRoots {
    pub k: usize,
    pub roots: Vec<C>,
    pub eps: C,
}

impl FamilyRoots {
    pub fn new(k: usize, roots: Vec<C>, eps: C) -> Result<Self> {
        if roots.len() != k + 1 {
            return Err(Error::Config(format!(
                "expected {} roots, got {}",
                k + 1,
                roots.len()
            )));
        }
        let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let sum: C = roots.iter().sum();
        if sum.norm() > 1e-12 * scale.max(1e-300) {
            return Err(Error::DegenerateInput(format!(
                "roots do not sum to zero (|Σα| = {:e})",
                sum.norm()
            )));
        }
        for i in 0..roots.len() {
            for j in 0..i {
                if (roots[i] - roots[j]).norm() <= 1e-14 * scale {
                    return Err(Error::DegenerateInput(format!("roots {j} and {i} collide")));
                }
            }
        }
        Ok(Self { k, roots, eps })
    }

    pub fn max_abs(&self) -> f64 {
        self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Smallest distance from root `i` to another root.
    pub fn separation(&self, i: usize) -> f64 {
        self.roots
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| (r - self.roots[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

fn smallest_sample(family: &[FamilyRoots]) -> Result<&FamilyRoots> {
    family
        .iter()
        .min_by(|a, b| a.eps.norm().total_cmp(&b.eps.norm()))
        .ok_or_else(|| Error::Config("empty ε-sequence".into()))
}

/// Good sector around the imaginary ray nearest to the radial ray of `α_i`.
///
/// The sector is the smallest one holding both neighbouring real dividing
/// rays with a margin of `π/(4k)` and the root direction with a little more
/// than `π/(2k)` to spare on each side.
pub fn sector_for_singularity(
    family: &[FamilyRoots],
    i: usize,
    radius: f64,
) -> Result<(Sector, usize)> {
    let s = smallest_sample(family)?;
    let k = s.k;
    let a = s
        .roots
        .get(i)
        .ok_or_else(|| Error::Config(format!("no root with index {i}")))?;
    let theta = a.arg();
    let rays = imaginary_dividing_rays(k);
    let mut d: Vec<(f64, usize)> = rays
        .iter()
        .enumerate()
        .map(|(j, r)| (ang_dist(*r, theta), j))
        .collect();
    d.sort_by(|x, y| x.0.total_cmp(&y.0));
    if (d[1].0 - d[0].0).abs() <= 1e-12 {
        return Err(Error::DegenerateInput(format!(
            "root {i} lies on a real dividing line (argument {theta:.6}); the family violates nondegeneracy"
        )));
    }
    let j = d[0].1;
    let r = rays[j];
    let diff = (theta - r + PI).rem_euclid(TAU) - PI;
    let half = PI / (2.0 * k as f64);
    // strictly more than π/(2k) around the root, short of the next ray
    let clear = half + 0.05f64.min(0.5 * (half - diff.abs()));
    let lo = (-1.5 * half).min(diff - clear);
    let hi = (1.5 * half).max(diff + clear);
    let sector = Sector::new(r + 0.5 * (lo + hi), hi - lo, radius)?;
    Ok((sector, j))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub ok: bool,
    pub margin: f64,
}

/// Worst angular distance of the root configuration to the forbidden set.
pub fn check_nondegenerate(
    family: &[FamilyRoots],
    k: usize,
    threshold: f64,
) -> NondegeneracyReport {
    let mut margin = f64::INFINITY;
    for s in family {
        let m = if k == 1 {
            if s.roots.len() != 2 {
                0.0
            } else {
                line_dist((s.roots[0] - s.roots[1]).arg(), 0.0)
            }
        } else {
            let scale = s.max_abs();
            if scale == 0.0 {
                0.0
            } else {
                let v: Vec<C> = s.roots.iter().map(|r| r / (2.0 * scale)).collect();
                let phi = polygon_orientation(&v, k);
                let mut best = f64::INFINITY;
                for m in 0..(2 * k + 2) {
                    let axis = phi + PI * m as f64 / (k + 1) as f64;
                    for real in real_dividing_rays(k) {
                        best = best.min(line_dist(axis, real));
                    }
                }
                best
            }
        };
        margin = margin.min(m);
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    NondegeneracyReport {
        ok: margin > threshold,
        margin,
    }
}

fn polygon_orientation(v: &[C], k: usize) -> f64 {
    let s: C = v.iter().map(|z| z.powu(k as u32 + 1)).sum();
    s.arg() / (k + 1) as f64
}

fn fit_regular(v: &[C], k: usize) -> (Vec<C>, f64) {
    let phi = polygon_orientation(v, k);
    let r = v.iter().map(|z| z.norm()).sum::<f64>() / v.len() as f64;
    let verts: Vec<C> = (0..=k)
        .map(|m| C::from_polar(r, phi + TAU * m as f64 / (k + 1) as f64))
        .collect();
    let defect = v
        .iter()
        .map(|z| {
            verts
                .iter()
                .map(|w| (z - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    (verts, defect)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitPolygon {
    pub vertices: Vec<C>,
    /// Deviation from the fitted regular polygon at the smallest sample.
    pub defect: f64,
    /// Deviation of the extrapolated vertices from their fitted polygon.
    pub extrapolated_defect: f64,
}

/// Extrapolates the rescaled root configuration to `ε = 0`.
///
/// Each sample is scaled so that `max|α| = 1/2`; the two smallest samples are
/// combined linearly in `|ε|^{1/(k+1)}`.
pub fn limit_polygon(family: &[FamilyRoots], threshold: f64) -> Result<LimitPolygon> {
    if family.len() < 3 {
        return Err(Error::Config(
            "limit polygon needs at least 3 ε-samples".into(),
        ));
    }
    let mut sorted: Vec<&FamilyRoots> = family.iter().collect();
    sorted.sort_by(|a, b| b.eps.norm().total_cmp(&a.eps.norm()));
    let k = sorted[0].k;
    let scaled = |s: &FamilyRoots| -> Vec<C> {
        let m = s.max_abs();
        s.roots.iter().map(|r| r / (2.0 * m)).collect()
    };
    let n = sorted.len();
    let (s1, s2) = (sorted[n - 2], sorted[n - 1]);
    let v1 = scaled(s1);
    let v2 = scaled(s2);
    let x1 = s1.eps.norm().powf(1.0 / (k + 1) as f64);
    let x2 = s2.eps.norm().powf(1.0 / (k + 1) as f64);
    if !(x1 > x2) {
        return Err(Error::Config(
            "ε-samples must have decreasing modulus".into(),
        ));
    }
    let vertices: Vec<C> = v2
        .iter()
        .map(|a| {
            let b = v1
                .iter()
                .min_by(|p, q| (*p - a).norm().total_cmp(&(*q - a).norm()))
                .expect("nonempty");
            a + (a - b) * (x2 / (x1 - x2))
        })
        .collect();
    let (_, defect) = fit_regular(&v2, k);
    let (_, extrapolated_defect) = fit_regular(&vertices, k);
    if extrapolated_defect > threshold {
        return Err(Error::NotRegular(extrapolated_defect));
    }
    Ok(LimitPolygon {
        vertices,
        defect,
        extrapolated_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: C,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, t: C) -> bool {
        (t - self.center).norm() < self.radius
    }
}

/// Largest circle of the Apollonius family `|(t−α)/(t+α)| = c` inside `|t| < δ`.
pub fn rotation_disc_k1(roots: &FamilyRoots, delta: f64) -> Result<Disc> {
    if roots.k != 1 || roots.roots.len() != 2 {
        return Err(Error::Config("rotation disc needs a root pair".into()));
    }
    let a = roots.roots[0];
    let r = a.norm();
    if r >= delta {
        return Err(Error::RootsOutside(delta));
    }
    // c = (δ−r)/(δ+r) substituted into center α(1+c²)/(1−c²) and radius 2cr/(1−c²)
    let center = (a / r) * ((delta * delta + r * r) / (2.0 * delta));
    Ok(Disc {
        center,
        radius: (delta * delta - r * r) / (2.0 * delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::poly_roots;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn pair(a: C, eps: C) -> FamilyRoots {
        FamilyRoots::new(1, vec![a, -a], eps).unwrap()
    }

    fn roots_of_power(k: usize, eps: C) -> FamilyRoots {
        let r = eps.powf(1.0 / (k + 1) as f64);
        let roots = (0..=k)
            .map(|m| r * C::from_polar(1.0, TAU * m as f64 / (k + 1) as f64))
            .collect();
        FamilyRoots::new(k, roots, eps).unwrap()
    }

    #[test]
    fn rays() {
        let r = imaginary_dividing_rays(1);
        assert!((r[0] - PI / 2.0).abs() < 1e-15 && (r[1] - 1.5 * PI).abs() < 1e-15);
        let r = imaginary_dividing_rays(3);
        assert_eq!(r.len(), 6);
        assert!((r[0] - PI / 6.0).abs() < 1e-15 && (r[1] - r[0] - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rays_are_sign_changes_of_re_inverse_power() {
        for k in 1..=4 {
            let rays = imaginary_dividing_rays(k);
            let n = 4000;
            let mut found = Vec::new();
            for s in 0..n {
                let a0 = TAU * s as f64 / n as f64;
                let a1 = TAU * (s + 1) as f64 / n as f64;
                let f = |a: f64| (1.0 / C::from_polar(1.0, a).powu(k as u32)).re;
                if f(a0).signum() != f(a1).signum() {
                    found.push(0.5 * (a0 + a1));
                }
            }
            assert_eq!(found.len(), 2 * k);
            for a in found {
                assert!(rays.iter().any(|r| ang_dist(*r, a) < 2.0 * TAU / n as f64));
            }
        }
    }

    #[test]
    fn good_sectors() {
        let s = Sector::new(PI / 2.0, 1.5 * PI - 0.2, 1.0).unwrap();
        assert_eq!(is_good_sector(&s, 1), Some(0));
        let s = Sector::new(0.0, 1.2 * PI, 1.0).unwrap();
        assert_eq!(is_good_sector(&s, 1), None);
        let s = Sector::new(PI / 4.0, PI / 2.0 - 0.1, 1.0).unwrap();
        assert_eq!(is_good_sector(&s, 2), Some(0));
    }

    #[test]
    fn sector_assignment() {
        let fam: Vec<FamilyRoots> = [1e-2, 1e-3]
            .iter()
            .map(|&s: &f64| pair(c(0.0, s.sqrt()), c(-s, 0.0)))
            .collect();
        let (sec, j) = sector_for_singularity(&fam, 0, 1.0).unwrap();
        assert_eq!(j, 0);
        assert!(sec.contains(c(0.0, 0.5)));
        assert_eq!(is_good_sector(&sec, 1), Some(0));
        let (_, j1) = sector_for_singularity(&fam, 1, 1.0).unwrap();
        assert_eq!(j1, 1);

        let real = vec![pair(c(0.1, 0.0), c(0.01, 0.0))];
        assert!(matches!(
            sector_for_singularity(&real, 0, 1.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn sector_assignment_k2_by_angle_comparison() {
        for arg in [0.2, 1.0, 2.0, 4.0] {
            let eps = C::from_polar(1e-3, arg);
            let fam = vec![roots_of_power(2, eps)];
            for i in 0..3 {
                let theta = fam[0].roots[i].arg();
                let (sec, j) = sector_for_singularity(&fam, i, 1.0).unwrap();
                let rays = imaginary_dividing_rays(2);
                let brute = (0..4)
                    .min_by(|a, b| ang_dist(rays[*a], theta).total_cmp(&ang_dist(rays[*b], theta)))
                    .unwrap();
                assert_eq!(j, brute);
                assert_eq!(is_good_sector(&sec, 2), Some(j));
                assert!(sec.angular_margin(fam[0].roots[i]) > PI / 4.0);
            }
        }
    }

    #[test]
    fn nondegeneracy() {
        let r = check_nondegenerate(&[pair(c(0.0, 0.1), c(-0.01, 0.0))], 1, 0.05);
        assert!(r.ok && (r.margin - PI / 2.0).abs() < 1e-12);
        let r = check_nondegenerate(&[pair(c(0.1, 0.0), c(0.01, 0.0))], 1, 0.05);
        assert!(!r.ok && r.margin == 0.0);

        let fam = vec![roots_of_power(2, C::from_polar(1e-3, 0.3))];
        let r = check_nondegenerate(&fam, 2, 0.05);
        // brute force over the three vertex directions and three edge midpoints
        let v = &fam[0].roots;
        let mut axes: Vec<f64> = v.iter().map(|z| z.arg()).collect();
        for i in 0..3 {
            axes.push((v[i] + v[(i + 1) % 3]).arg());
        }
        let brute = axes
            .iter()
            .flat_map(|a| [0.0, PI / 2.0].map(|b| line_dist(*a, b)))
            .fold(f64::INFINITY, f64::min);
        assert!((r.margin - brute).abs() < 1e-12, "{} {}", r.margin, brute);
        assert!(r.ok);
    }

    #[test]
    fn polygons() {
        let fam: Vec<FamilyRoots> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| roots_of_power(2, c(e, 0.0)))
            .collect();
        let p = limit_polygon(&fam, 1e-2).unwrap();
        assert!(p.defect < 1e-12 && p.extrapolated_defect < 1e-12);
        let fam: Vec<FamilyRoots> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| roots_of_power(1, c(e, 0.0)))
            .collect();
        let p = limit_polygon(&fam, 1e-2).unwrap();
        assert!(p.defect < 1e-12);
        assert!((p.vertices[0] + p.vertices[1]).norm() < 1e-12);

        let fam: Vec<FamilyRoots> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                let r = poly_roots(&[c(-e, 0.0), c(-e, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
                FamilyRoots::new(2, r, c(e, 0.0)).unwrap()
            })
            .collect();
        let p = limit_polygon(&fam, 1e-2).unwrap();
        assert!(p.extrapolated_defect < p.defect);
    }

    fn bisect_disc(alpha: f64, delta: f64) -> (f64, f64) {
        // largest c with the Apollonius circle inside |t| < delta
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let cm = 0.5 * (lo + hi);
            let far = alpha * (1.0 + cm) / (1.0 - cm);
            if far < delta {
                lo = cm;
            } else {
                hi = cm;
            }
        }
        let far = alpha * (1.0 + lo) / (1.0 - lo);
        let near = alpha * (1.0 - lo) / (1.0 + lo);
        (0.5 * (far + near), 0.5 * (far - near))
    }

    #[test]
    fn rotation_disc() {
        let d = rotation_disc_k1(&pair(c(0.1, 0.0), c(0.01, 0.0)), 1.0).unwrap();
        let (cen, rad) = bisect_disc(0.1, 1.0);
        assert!((d.center - c(cen, 0.0)).norm() < 1e-12 && (d.radius - rad).abs() < 1e-12);
        let small = rotation_disc_k1(&pair(c(1e-9, 0.0), c(1e-18, 0.0)), 1.0).unwrap();
        assert!((small.center - c(0.5, 0.0)).norm() < 1e-8 && (small.radius - 0.5).abs() < 1e-8);
        let rot = rotation_disc_k1(&pair(c(0.0, 0.1), c(-0.01, 0.0)), 1.0).unwrap();
        assert!((rot.center - c(0.0, cen)).norm() < 1e-12);
        assert!(matches!(
            rotation_disc_k1(&pair(c(1.5, 0.0), c(2.25, 0.0)), 1.0),
            Err(Error::RootsOutside(_))
        ));
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(Sector::new(1.0, 2.0, 0.5).unwrap()).unwrap();
        assert_eq!(v["bisector"], 1.0);
        assert_eq!(v["opening"], 2.0);
        assert_eq!(v["radius"], 0.5);
    }

    proptest! {
        #[test]
        fn rotation_equivariance(phi in 0.1f64..1.2, s in 0.01f64..0.3, th in 0.3f64..1.2) {
            let a = C::from_polar(s, th);
            let rot = C::from_polar(1.0, phi);
            let fam = vec![pair(a, a * a)];
            let famr = vec![pair(a * rot, a * a * rot * rot)];
            // rotations by multiples of π/k permute the dividing rays
            let (s0, _) = sector_for_singularity(&fam, 0, 1.0).unwrap();
            let famr_sym = vec![pair(-a, a * a)];
            let (s1, _) = sector_for_singularity(&famr_sym, 0, 1.0).unwrap();
            prop_assert!(ang_dist(s1.bisector_arg, s0.bisector_arg + PI) < 1e-12);
            let d0 = rotation_disc_k1(&fam[0], 1.0).unwrap();
            let d1 = rotation_disc_k1(&famr[0], 1.0).unwrap();
            prop_assert!((d0.center * rot - d1.center).norm() < 1e-12);
            prop_assert!((d0.radius - d1.radius).abs() < 1e-12);
            for m in 0..32 {
                let b = d1.center + C::from_polar(d1.radius * (1.0 - 1e-12), TAU * m as f64 / 32.0);
                prop_assert!(b.norm() < 1.0);
            }
            prop_assert!(d1.contains(a * rot));
        }

        #[test]
        fn produced_sectors_are_good(k in 1usize..=4, arg in 0.0f64..std::f64::consts::TAU) {
            let fam = vec![roots_of_power(k, C::from_polar(1e-3, arg))];
            for i in 0..=k {
                if let Ok((s, j)) = sector_for_singularity(&fam, i, 1.0) {
                    prop_assert_eq!(is_good_sector(&s, k), Some(j));
                }
            }
        }
    }
}
