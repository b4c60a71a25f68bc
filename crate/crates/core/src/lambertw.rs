//! Principal branch of the Lambert W function on `[-1/e, 0]`.
//!
//! `W(x)` solves `w e^w = x`. On this interval `W` maps onto `[-1, 0]` and is
//! increasing, which is all the dual time-allocation solver needs.

use std::f64::consts::E;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
const MAX_ITERATIONS: usize = 100;

/// A point of the principal-branch domain used here.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WDomainValue(f64);

impl WDomainValue {
    pub fn new(x: f64) -> Result<Self> {
        // a few ulps of slack below -1/e so that -exp(-1) rounds into range
        if !(-INV_E * (1.0 + 4.0 * f64::EPSILON)..=0.0).contains(&x) {
            return Err(Error::Domain {
                value: x,
                domain: "[-1/e, 0]",
            });
        }
        Ok(Self(x.max(-INV_E)))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Evaluates `W0(x)` for `x` in `[-1/e, 0]`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    lambert_w0_at(WDomainValue::new(x)?)
}

pub fn lambert_w0_at(x: WDomainValue) -> Result<f64> {
    let x = x.get();
    if x == 0.0 {
        return Ok(0.0);
    }
    // distance to the branch point, scaled: 0 at x = -1/e
    let q = 1.0 + E * x;
    if q <= 0.0 {
        return Ok(-1.0);
    }

    let mut w = if x < -0.25 {
        // branch-point expansion in p = sqrt(2(1 + e x))
        let p = (2.0 * q).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    } else {
        x * (1.0 + x * (-1.0 + x * 1.5))
    };

    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 <= 0.0 {
            // overshot the branch point; pull back inside
            w = -1.0 + 0.5 * (2.0 * q).sqrt();
            continue;
        }
        // Halley step
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = (w - step).clamp(-1.0, 0.0);
        if (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs()) {
            return Ok(next);
        }
        w = next;
    }
    let residual = (w * w.exp() - x).abs();
    if residual <= 1e-13 {
        return Ok(w);
    }
    Err(Error::NoConvergence {
        what: "lambert_w0",
        iterations: MAX_ITERATIONS,
        residual,
    })
}
