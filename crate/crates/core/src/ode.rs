//! Embedded Dormand–Prince 5(4) integration of complex systems along a real
//! parameter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Minimum number of accepted steps over the whole interval.
    pub min_steps: usize,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            min_steps: 64,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeResult {
    pub y: Vec<C>,
    /// Sum of the accepted local error estimates.
    pub err_est: f64,
    pub steps: usize,
    pub rejected: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb(y: &[C], h: f64, terms: &[(f64, &[C])]) -> Vec<C> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, ki) in out.iter_mut().zip(k.iter()) {
                *o += ki * (h * c);
            }
        }
    }
    out
}

/// Integrates `y' = f(s, y)` from `s0` to `s1`.
///
/// `f` may fail (for instance with [`Error::OffDomain`]); the error is passed
/// through.
pub fn integrate<F>(f: F, s0: f64, s1: f64, y0: &[C], opts: &OdeOptions) -> Result<OdeResult>
where
    F: Fn(f64, &[C]) -> Result<Vec<C>>,
{
    let span = s1 - s0;
    if span == 0.0 {
        return Ok(OdeResult {
            y: y0.to_vec(),
            err_est: 0.0,
            steps: 0,
            rejected: 0,
        });
    }
    let dir = span.signum();
    let h_max = span.abs() / opts.min_steps.max(1) as f64;
    let h_min = span.abs() * 1e-14;
    let mut h = h_max * 0.25;
    let mut s = s0;
    let mut y = y0.to_vec();
    let mut k1 = f(s, &y)?;
    let mut err_sum = 0.0;
    let mut steps = 0;
    let mut rejected = 0;
    while dir * (s1 - s) > 0.0 {
        if steps + rejected >= opts.max_steps {
            return Err(Error::StepFailure(format!(
                "step budget exhausted at s = {s}"
            )));
        }
        let last = h >= (s1 - s).abs();
        let hs = if last { s1 - s } else { dir * h };
        let k2 = f(s + A21 * hs, &comb(&y, hs, &[(A21, &k1)]))?;
        let k3 = f(s + 0.3 * hs, &comb(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(
            s + 0.8 * hs,
            &comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = f(
            s + 8.0 / 9.0 * hs,
            &comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = f(
            s + hs,
            &comb(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let yn = comb(
            &y,
            hs,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(s + hs, &yn)?;
        let mut err = 0.0f64;
        let mut abs_err = 0.0f64;
        for i in 0..y.len() {
            let e =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(yn[i].norm());
            err = err.max(e.norm() / sc);
            abs_err = abs_err.max(e.norm());
        }
        if !err.is_finite() {
            h *= 0.25;
            rejected += 1;
            if h < h_min {
                return Err(Error::StepFailure(format!(
                    "non-finite derivative near s = {s}"
                )));
            }
            continue;
        }
        if err <= 1.0 {
            s = if last { s1 } else { s + hs };
            y = yn;
            k1 = k7;
            err_sum += abs_err;
            steps += 1;
        } else {
            rejected += 1;
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * fac).min(h_max);
        if h < h_min {
            return Err(Error::StepFailure(format!(
                "step size underflow near s = {s}"
            )));
        }
    }
    Ok(OdeResult {
        y,
        err_est: err_sum,
        steps,
        rejected,
    })
}
