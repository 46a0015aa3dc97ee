//! Dense complex polynomials and their roots.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Coefficients in ascending powers.
pub fn poly_eval(p: &[C], t: C) -> C {
    p.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * t + c)
}

/// Value and derivative.
pub fn poly_eval_d(p: &[C], t: C) -> (C, C) {
    let mut v = C::new(0.0, 0.0);
    let mut d = C::new(0.0, 0.0);
    for c in p.iter().rev() {
        d = d * t + v;
        v = v * t + c;
    }
    (v, d)
}

pub fn poly_derivative(p: &[C]) -> Vec<C> {
    if p.len() <= 1 {
        return vec![C::new(0.0, 0.0)];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(m, c)| c * m as f64)
        .collect()
}

pub fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

/// `∏ (t - r)` in ascending coefficients.
pub fn poly_from_roots(roots: &[C]) -> Vec<C> {
    roots.iter().fold(vec![C::new(1.0, 0.0)], |acc, r| {
        poly_mul(&acc, &[-r, C::new(1.0, 0.0)])
    })
}

/// Coefficients of `p(a + w)` in powers of `w`.
pub fn taylor_shift(p: &[C], a: C) -> Vec<C> {
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = q[j + 1] * a;
            q[j] += t;
        }
    }
    q
}

fn trim(p: &[C]) -> &[C] {
    let mut n = p.len();
    while n > 0 && p[n - 1] == C::new(0.0, 0.0) {
        n -= 1;
    }
    &p[..n]
}

/// All roots via companion-matrix eigenvalues followed by one Newton polish
/// step per root.
pub fn poly_roots(p: &[C]) -> Result<Vec<C>> {
    let p = trim(p);
    if p.len() < 2 {
        return Err(Error::DegenerateInput("polynomial of degree < 1".into()));
    }
    let n = p.len() - 1;
    let lead = p[n];
    let mut roots = if n == 1 {
        vec![-p[0] / lead]
    } else {
        let mut m = DMatrix::<C>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = C::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -p[i] / lead;
        }
        let schur = Schur::try_new(m, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::NotConverged("companion eigenvalue iteration".into()))?;
        let ev = schur
            .eigenvalues()
            .ok_or_else(|| Error::NotConverged("companion Schur form not triangular".into()))?;
        ev.iter().copied().collect()
    };
    let dp = poly_derivative(p);
    for r in roots.iter_mut() {
        let d = poly_eval(&dp, *r);
        if d.norm() > 0.0 {
            let step = poly_eval(p, *r) / d;
            if step.is_finite() {
                *r -= step;
            }
        }
    }
    Ok(roots)
}

/// Newton refinement of a single root from a seed.
pub fn newton_root(f: impl Fn(C) -> (C, C), seed: C, tol: f64, max_iter: usize) -> Result<C> {
    let mut t = seed;
    for _ in 0..max_iter {
        let (v, d) = f(t);
        let step = v / d;
        if !step.is_finite() {
            return Err(Error::NewtonFailed(format!("zero derivative near {t}")));
        }
        t -= step;
        if step.norm() <= tol * t.norm().max(1e-300) {
            return Ok(t);
        }
    }
    Err(Error::NewtonFailed(format!(
        "no convergence from seed {seed}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(roots: &[C], z: C, tol: f64) -> bool {
        roots.iter().any(|r| (r - z).norm() < tol)
    }

    #[test]
    fn companion_roots_match_known() {
        let expect = [
            C::new(0.5, 0.1),
            C::new(-1.0, 2.0),
            C::new(0.0, -0.7),
            C::new(3.0, 0.0),
        ];
        let p = poly_from_roots(&expect);
        let r = poly_roots(&p).unwrap();
        assert_eq!(r.len(), 4);
        for z in expect {
            assert!(near(&r, z, 1e-12), "{z}");
        }
    }

    #[test]
    fn cube_roots_of_eps() {
        let eps = C::from_polar(1e-6, 0.3);
        let p = vec![-eps, C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let r = poly_roots(&p).unwrap();
        for z in &r {
            assert!((z.powu(3) - eps).norm() < 1e-20);
        }
    }

    #[test]
    fn shift_agrees_with_eval() {
        let p = vec![
            C::new(1.0, 2.0),
            C::new(-0.5, 0.0),
            C::new(0.0, 3.0),
            C::new(2.0, -1.0),
        ];
        let a = C::new(0.3, -0.2);
        let q = taylor_shift(&p, a);
        let w = C::new(-0.11, 0.07);
        assert!((poly_eval(&q, w) - poly_eval(&p, a + w)).norm() < 1e-14);
    }
}
