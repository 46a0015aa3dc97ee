//! Formal invariants: the parameter `λ` of a parabolic germ and the formal
//! central manifold of a saddle-node field.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{mul_trunc, series_compose, series_time1_flow, TruncatedSeries};
use crate::TWO_PI_I;

type C = Complex64;

/// Jet of `v_λ(t) = 2πi t^{k+1} / (1 + λ t^k)` through order `n`.
pub fn model_field_jet(k: usize, lambda: C, n: usize) -> TruncatedSeries {
    let mut s = TruncatedSeries::zeros(n);
    let mut coef = TWO_PI_I;
    let mut m = k + 1;
    while m <= n {
        s.set_coeff(m, coef);
        coef *= -lambda;
        m += k;
    }
    s
}

/// Jet of the time-one map of `v_λ`.
pub fn model_map_jet(k: usize, lambda: C, n: usize) -> Result<TruncatedSeries> {
    series_time1_flow(&model_field_jet(k, lambda, n), n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormalInvariantResult {
    pub k: usize,
    pub lambda: C,
    pub conjugator: TruncatedSeries,
    /// Largest coefficient of `h∘f − g_λ∘h` after the solve, relative to `h∘f`.
    pub residual: f64,
}

/// `λ` and the normalizing jet `h` with `h∘f = g_λ∘h` through the jet order.
///
/// The conjugator is tangent to the identity and its `t^{k+1}` coefficient
/// is fixed to zero.
pub fn formal_invariant(f_jet: &TruncatedSeries, k: usize) -> Result<FormalInvariantResult> {
    if k == 0 {
        return Err(Error::DegenerateInput("multiplicity k must be >= 1".into()));
    }
    let n = f_jet.order();
    if n < 2 * k + 1 {
        return Err(Error::OrderTooLow {
            have: n,
            need: 2 * k + 1,
        });
    }
    check_parabolic(f_jet, k)?;

    let mut h = TruncatedSeries::identity(n);
    let mut lambda = C::new(0.0, 0.0);
    let residual = |h: &TruncatedSeries, lambda: C| -> Result<TruncatedSeries> {
        let g = model_map_jet(k, lambda, n)?;
        series_compose(h, f_jet)?.sub(&series_compose(&g, h)?)
    };

    for m in (k + 2)..=n {
        let r0 = residual(&h, lambda)?.coeff(m);
        if m == 2 * k + 1 {
            // R_m is affine in λ; measure the slope instead of trusting a sign
            let r1 = residual(&h, lambda + 1.0)?.coeff(m);
            lambda -= r0 / (r1 - r0);
        } else {
            let j = m - k;
            let mut trial = h.clone();
            trial.set_coeff(j, h.coeff(j) + 1.0);
            let r1 = residual(&trial, lambda)?.coeff(m);
            h.set_coeff(j, h.coeff(j) - r0 / (r1 - r0));
        }
    }
    let scale = series_compose(&h, f_jet)?.max_abs().max(1.0);
    let res = residual(&h, lambda)?.max_abs() / scale;
    Ok(FormalInvariantResult {
        k,
        lambda,
        conjugator: h,
        residual: res,
    })
}

fn check_parabolic(f: &TruncatedSeries, k: usize) -> Result<()> {
    if f.coeff(0).norm() > 1e-12 || (f.coeff(1) - 1.0).norm() > 1e-12 {
        return Err(Error::WrongNormalization("germ must be t + O(t^2)".into()));
    }
    for m in 2..=k {
        if f.coeff(m).norm() > 1e-12 {
            return Err(Error::WrongNormalization(format!(
                "nonzero t^{m} coefficient below the parabolic order"
            )));
        }
    }
    let lead = f.coeff(k + 1);
    if (lead - TWO_PI_I).norm() > 1e-12 {
        return Err(Error::WrongNormalization(format!(
            "t^{} coefficient is {lead}, expected 2πi",
            k + 1
        )));
    }
    Ok(())
}

/// A single monomial `c · y_1^{e_1} ... y_{n-1}^{e_{n-1}} t^{e_n}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Monomial {
    pub exp: Vec<u32>,
    pub c: [f64; 2],
}

/// Multivariate jet over `(y_1, .., y_{n-1}, t)` stored densely by exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiJet {
    nvars: usize,
    degree: u32,
    table: BTreeMap<Vec<u32>, C>,
}

impl MultiJet {
    /// Densifies a sparse term list; every multi-index of total degree up to
    /// `degree` gets an entry.
    pub fn from_terms(nvars: usize, degree: u32, terms: &[Monomial]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for e in multi_indices(nvars, degree) {
            table.insert(e, C::new(0.0, 0.0));
        }
        for t in terms {
            if t.exp.len() != nvars {
                return Err(Error::Config(format!(
                    "monomial {:?} has {} exponents, expected {nvars}",
                    t.exp,
                    t.exp.len()
                )));
            }
            let deg: u32 = t.exp.iter().sum();
            if deg > degree {
                return Err(Error::Config(format!(
                    "monomial {:?} exceeds jet degree {degree}",
                    t.exp
                )));
            }
            *table.get_mut(&t.exp).expect("densified") += C::new(t.c[0], t.c[1]);
        }
        Ok(Self {
            nvars,
            degree,
            table,
        })
    }

    pub fn coeff(&self, exp: &[u32]) -> C {
        self.table.get(exp).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Substitutes `y = q(t)` and returns the univariate jet through `order`.
    pub fn substitute(&self, q: &[Vec<C>], order: usize) -> Vec<C> {
        let ny = self.nvars - 1;
        let d = self.degree as usize;
        // powers[i][p] = q_i^p truncated
        let powers: Vec<Vec<Vec<C>>> = (0..ny)
            .map(|i| {
                let mut pw = vec![unit(order)];
                for p in 1..=d {
                    pw.push(mul_trunc(&pw[p - 1], &q[i], order));
                }
                pw
            })
            .collect();
        let mut out = vec![C::new(0.0, 0.0); order + 1];
        for (e, &coef) in &self.table {
            if coef == C::new(0.0, 0.0) {
                continue;
            }
            let tpow = e[ny] as usize;
            if tpow > order {
                continue;
            }
            let mut term = unit(order);
            for i in 0..ny {
                if e[i] > 0 {
                    term = mul_trunc(&term, &powers[i][e[i] as usize], order);
                }
            }
            for m in 0..=(order - tpow) {
                out[m + tpow] += coef * term[m];
            }
        }
        out
    }
}

fn unit(order: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); order + 1];
    v[0] = C::new(1.0, 0.0);
    v
}

fn multi_indices(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..nvars {
        let mut next = Vec::new();
        for e in &out {
            let used: u32 = e.iter().sum();
            for p in 0..=(degree - used) {
                let mut f = e.clone();
                f.push(p);
                next.push(f);
            }
        }
        out = next;
    }
    out
}

/// Saddle-node field `ẏ = B y + …, ṫ = t^{k+1} + …` given by jets.
#[derive(Debug, Clone)]
pub struct FormalFieldSpec {
    pub n: usize,
    pub b: DMatrix<C>,
    pub k: usize,
    /// One jet per `y` component, each including the linear part `B y`.
    pub y_jet: Vec<MultiJet>,
    pub t_jet: MultiJet,
}

impl FormalFieldSpec {
    pub fn validate(&self) -> Result<()> {
        let ny = self
            .n
            .checked_sub(1)
            .filter(|&m| m >= 1)
            .ok_or_else(|| Error::Config("phase dimension must be >= 2".into()))?;
        if self.b.nrows() != ny || self.b.ncols() != ny || self.y_jet.len() != ny {
            return Err(Error::Config("B and y-jets must have n-1 rows".into()));
        }
        if self.b.determinant().norm() <= 1e-14 {
            return Err(Error::SingularSolve(0));
        }
        let mut e = vec![0u32; self.n];
        for i in 0..ny {
            for jx in 0..ny {
                e[jx] = 1;
                if (self.y_jet[i].coeff(&e) - self.b[(i, jx)]).norm() > 1e-12 {
                    return Err(Error::Config(format!(
                        "linear part of y-jet {i} disagrees with B"
                    )));
                }
                e[jx] = 0;
            }
        }
        for p in 0..=(self.k as u32 + 1) {
            e[ny] = p;
            let want = if p as usize == self.k + 1 { 1.0 } else { 0.0 };
            if (self.t_jet.coeff(&e) - want).norm() > 1e-12 {
                return Err(Error::Config(format!(
                    "t-jet must start with t^{}",
                    self.k + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralManifoldSeries {
    pub component_series: Vec<TruncatedSeries>,
}

/// Tangency defect `q'·ṫ(q,t) − ẏ(q,t)` of a candidate `q`, one jet per component.
pub fn central_manifold_defect(field: &FormalFieldSpec, q: &[Vec<C>], order: usize) -> Vec<Vec<C>> {
    let tdot = field.t_jet.substitute(q, order);
    (0..field.n - 1)
        .map(|i| {
            let mut dq = vec![C::new(0.0, 0.0); order + 1];
            for m in 1..=order.min(q[i].len() - 1) {
                dq[m - 1] = q[i][m] * m as f64;
            }
            let lhs = mul_trunc(&dq, &tdot, order);
            let rhs = field.y_jet[i].substitute(q, order);
            lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect()
        })
        .collect()
}

/// Formal central manifold `y = q̂(t)` through `order`.
pub fn formal_central_manifold(
    field: &FormalFieldSpec,
    order: usize,
) -> Result<CentralManifoldSeries> {
    field.validate()?;
    if order < 2 {
        return Err(Error::OrderTooLow {
            have: order,
            need: 2,
        });
    }
    let ny = field.n - 1;
    let lu = field.b.clone().lu();
    let mut q = vec![vec![C::new(0.0, 0.0); order + 1]; ny];
    for m in 2..=order {
        let defect = central_manifold_defect(field, &q, order);
        // adding q_m shifts the order-m defect by −B q_m
        let rhs = nalgebra::DVector::from_iterator(ny, defect.iter().map(|d| d[m]));
        let sol = lu.solve(&rhs).ok_or(Error::SingularSolve(m))?;
        if sol.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularSolve(m));
        }
        for i in 0..ny {
            q[i][m] = sol[i];
        }
    }
    let component_series = q
        .iter()
        .map(|c| TruncatedSeries::from_coeffs(order, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(CentralManifoldSeries { component_series })
}
