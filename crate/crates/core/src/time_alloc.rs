//! Optimal energy-transfer / offloading time split for a fixed mode selection.
//!
//! With the modes fixed the problem is convex. Dualizing the shared time
//! budget with a price `nu` gives every offloading device a closed-form ratio
//! `tau_j / a = eta2 h_j g_j phi_j(nu)` through the Lambert W function, and
//! the optimal price is the unique root of the decreasing function `Q(nu)`.
//! The root is found by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambertw::lambert_w0;
use crate::model::{objective_unchecked, Allocation, ModeSelection, NetworkInstance};

/// Bisection controls for the dual price search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    /// Stop once the bracket on `nu` is no wider than this.
    pub sigma0: f64,
    /// Initial upper bracket is `upper_factor * max_j w_j * eps`.
    pub upper_factor: f64,
    /// How many times the upper bracket may double before giving up.
    pub max_doublings: usize,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            sigma0: 0.005,
            upper_factor: 50.0,
            max_doublings: 60,
        }
    }
}

impl BisectionOptions {
    /// Tight bracket used when comparing against independent oracles.
    pub fn precise() -> Self {
        Self {
            sigma0: 1e-10,
            ..Self::default()
        }
    }
}

/// Dual state at a price `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub nu: f64,
    /// `phi_j(nu)` per device; 0 for local devices.
    pub phi: Vec<f64>,
    /// Optimal energy-transfer fraction implied by `nu`.
    pub p1: f64,
    /// Bisection steps taken.
    pub iterations: usize,
}

/// `phi_j(nu) = [-1/W(-exp(-(1 + nu/(w eps)))) - 1]^(-1)`.
///
/// Positive and decreasing in `nu`; diverges as `nu -> 0+` and vanishes as
/// `nu -> inf`.
pub fn phi_j(epsilon: f64, weight: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain {
            value: nu,
            domain: "nu > 0",
        });
    }
    let t = nu / (weight * epsilon);
    let w = lambert_w0(-(-(1.0 + t)).exp())?;
    // [-1/W - 1]^(-1) == -W / (1 + W); the second form survives W -> 0
    let one_plus = 1.0 + w;
    if one_plus <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-w / one_plus)
}

fn phis(inst: &NetworkInstance, modes: &ModeSelection, nu: f64) -> Result<Vec<f64>> {
    let eps = inst.params().epsilon();
    let mut out = vec![0.0; inst.len()];
    for j in modes.offload_devices() {
        out[j] = phi_j(eps, inst.w()[j], nu)?;
    }
    Ok(out)
}

fn p1_from(inst: &NetworkInstance, modes: &ModeSelection, phi: &[f64]) -> f64 {
    let s: f64 = modes
        .offload_devices()
        .map(|j| inst.offload_gain(j) * phi[j])
        .sum();
    1.0 / (1.0 + s)
}

/// `Q(nu)`: the stationarity condition in `a` after substituting the
/// per-device optimal ratios. Strictly decreasing; its root is the optimal
/// price of time.
pub fn q_of_nu(inst: &NetworkInstance, modes: &ModeSelection, nu: f64) -> Result<f64> {
    let phi = phis(inst, modes, nu)?;
    Ok(q_with_phi(inst, modes, nu, &phi))
}

fn q_with_phi(inst: &NetworkInstance, modes: &ModeSelection, nu: f64, phi: &[f64]) -> f64 {
    let eps = inst.params().epsilon();
    let local = inst.local_weight_sum(modes);
    let p1 = p1_from(inst, modes, phi);
    let local_term = if local > 0.0 {
        local * p1.powf(-2.0 / 3.0) / 3.0
    } else {
        0.0
    };
    let offload_term: f64 = modes
        .offload_devices()
        .map(|j| inst.w()[j] * inst.offload_gain(j) / (1.0 + 1.0 / phi[j]))
        .sum();
    local_term + eps * offload_term - nu
}

/// Optimal `(a, tau)` for `modes` by bisection on the dual price.
///
/// With no offloading device the whole frame goes to energy transfer.
pub fn solve_time_allocation(
    inst: &NetworkInstance,
    modes: &ModeSelection,
    opts: &BisectionOptions,
) -> Result<(Allocation, DualState)> {
    let n = inst.len();
    if modes.len() != n {
        return Err(Error::Dimension {
            name: "modes",
            expected: n,
            got: modes.len(),
        });
    }
    if !(opts.sigma0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma0",
            value: opts.sigma0,
            reason: "must be > 0",
        });
    }
    if modes.offload_count() == 0 {
        let nu = inst.local_weight_sum(modes) / 3.0;
        return Ok((
            Allocation::all_wpt(n),
            DualState {
                nu,
                phi: vec![0.0; n],
                p1: 1.0,
                iterations: 0,
            },
        ));
    }

    let eps = inst.params().epsilon();
    let w_max = modes.offload_devices().map(|j| inst.w()[j]).fold(0.0, f64::max);
    let mut upper = opts.upper_factor * w_max * eps;
    let mut q_upper = q_of_nu(inst, modes, upper)?;
    let mut doublings = 0;
    while q_upper > 0.0 {
        if doublings == opts.max_doublings {
            return Err(Error::Bracketing {
                upper,
                value: q_upper,
            });
        }
        upper *= 2.0;
        q_upper = q_of_nu(inst, modes, upper)?;
        doublings += 1;
    }

    let (mut lb, mut ub) = (0.0f64, upper);
    let mut iterations = 0;
    while ub - lb > opts.sigma0 {
        let mid = 0.5 * (lb + ub);
        if mid <= lb || mid >= ub {
            break;
        }
        if q_of_nu(inst, modes, mid)? > 0.0 {
            lb = mid;
        } else {
            ub = mid;
        }
        iterations += 1;
    }

    let nu = 0.5 * (lb + ub);
    let phi = phis(inst, modes, nu)?;
    let p1 = p1_from(inst, modes, &phi);
    let mut tau = vec![0.0; n];
    for j in modes.offload_devices() {
        tau[j] = inst.offload_gain(j) * p1 * phi[j];
    }
    Ok((
        Allocation::new(p1, tau),
        DualState {
            nu,
            phi,
            p1,
            iterations,
        },
    ))
}

/// Optimal objective value for a fixed mode selection.
pub fn conditional_value(
    inst: &NetworkInstance,
    modes: &ModeSelection,
    opts: &BisectionOptions,
) -> Result<f64> {
    let (alloc, _) = solve_time_allocation(inst, modes, opts)?;
    Ok(objective_unchecked(inst, modes, &alloc))
}

/// Largest deviation of `dL/dtau_j + nu` from `nu` over the offloading
/// devices, i.e. how far the allocation is from first-order stationarity.
pub fn stationarity_residual(
    inst: &NetworkInstance,
    modes: &ModeSelection,
    alloc: &Allocation,
    nu: f64,
) -> f64 {
    let eps = inst.params().epsilon();
    modes
        .offload_devices()
        .map(|j| {
            let s = inst.offload_gain(j) * alloc.a / alloc.tau[j];
            let marginal = inst.w()[j] * eps * (s.ln_1p() - s / (1.0 + s));
            (marginal - nu).abs()
        })
        .fold(0.0, f64::max)
}
