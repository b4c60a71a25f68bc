//! ADMM decomposition of the joint mode-selection / time-allocation problem.
//!
//! Every device gets private copies `x_i` of the energy-transfer fraction and
//! `tau_i` of its offloading time, tied to the shared `(a, z)` by consensus
//! constraints. One iteration:
//!
//! 1. solves the `N` independent mixed-binary device subproblems,
//! 2. projects onto the shared budget `sum(z) + a <= 1` (bisection on the
//!    budget multiplier `psi`),
//! 3. takes a dual ascent step on the consensus multipliers.
//!
//! On termination the binary vector is frozen and the time split re-solved
//! exactly, so the reported allocation is always feasible.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{objective_unchecked, Mode, ModeSelection, NetworkInstance, SolveReport};
use crate::time_alloc::{phi_j, solve_time_allocation, BisectionOptions};

const NEWTON_MAX_ITERATIONS: usize = 200;
const NEWTON_TOLERANCE: f64 = 1e-11;
const RESIDUAL_LIMIT: f64 = 1e-8;
const X_FLOOR: f64 = 1e-12;

/// Coefficients of one device subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subproblem {
    /// `w eta1 (h/k)^(1/3)`.
    pub local_coeff: f64,
    /// `w eps`.
    pub offload_scale: f64,
    /// `eta2 h g`.
    pub gain: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a_ref: f64,
    pub z_ref: f64,
    pub c: f64,
}

/// Maximizer of one mode branch of a device subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSolution {
    pub x: f64,
    pub tau: f64,
    pub value: f64,
    /// First-order residual `max |p - max(0, p + grad/c)|` in variable units.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemSolution {
    pub x: f64,
    pub tau: f64,
    pub mode: Mode,
    pub local: BranchSolution,
    pub offload: BranchSolution,
}

impl Subproblem {
    pub fn for_device(
        inst: &NetworkInstance,
        i: usize,
        beta: f64,
        gamma: f64,
        a_ref: f64,
        z_ref: f64,
        c: f64,
    ) -> Self {
        Self {
            local_coeff: inst.w()[i] * inst.local_coeff(i),
            offload_scale: inst.w()[i] * inst.params().epsilon(),
            gain: inst.offload_gain(i),
            beta,
            gamma,
            a_ref,
            z_ref,
            c,
        }
    }

    fn proximal(&self, x: f64, tau: f64) -> f64 {
        self.beta * x + self.gamma * tau
            - 0.5 * self.c * (x - self.a_ref).powi(2)
            - 0.5 * self.c * (tau - self.z_ref).powi(2)
    }

    /// Objective of the local-computing branch.
    pub fn local_value(&self, x: f64, tau: f64) -> f64 {
        self.local_coeff * x.max(0.0).cbrt() + self.proximal(x, tau)
    }

    /// Objective of the offloading branch.
    pub fn offload_value(&self, x: f64, tau: f64) -> f64 {
        let rate = if tau > 0.0 && x > 0.0 {
            self.offload_scale * tau * (self.gain * x / tau).ln_1p()
        } else {
            0.0
        };
        rate + self.proximal(x, tau)
    }

    fn local_dx(&self, x: f64) -> f64 {
        self.local_coeff / (3.0 * x.powf(2.0 / 3.0)) + self.beta - self.c * (x - self.a_ref)
    }

    /// Gradient of the offloading branch at an interior point.
    fn offload_grad(&self, x: f64, tau: f64) -> (f64, f64) {
        let s = self.gain * x / tau;
        let gx = self.offload_scale * self.gain / (1.0 + s) + self.beta - self.c * (x - self.a_ref);
        let gt = self.offload_scale * (s.ln_1p() - s / (1.0 + s)) + self.gamma - self.c * (tau - self.z_ref);
        (gx, gt)
    }

    fn offload_residual(&self, x: f64, tau: f64) -> f64 {
        let (gx, gt) = if x > 0.0 && tau > 0.0 {
            self.offload_grad(x, tau)
        } else if x == 0.0 && tau > 0.0 {
            (
                self.offload_scale * self.gain + self.beta + self.c * self.a_ref,
                self.gamma - self.c * (tau - self.z_ref),
            )
        } else {
            // corner (0, 0): optimality was certified by the face test
            return 0.0;
        };
        let rx = (x - (x + gx / self.c).max(0.0)).abs();
        let rt = (tau - (tau + gt / self.c).max(0.0)).abs();
        rx.max(rt)
    }

    /// Local branch: `tau` in closed form, `x` by safeguarded Newton on the
    /// derivative.
    pub fn solve_local(&self) -> Result<BranchSolution> {
        let tau = (self.z_ref + self.gamma / self.c).max(0.0);
        let x = if self.local_coeff > 0.0 {
            let hi = 1.0f64.max(self.a_ref + (self.local_coeff / 3.0 + self.beta) / self.c);
            safeguarded_newton(
                |x| {
                    let d = self.local_dx(x);
                    let dd = -2.0 * self.local_coeff / (9.0 * x.powf(5.0 / 3.0)) - self.c;
                    (d, dd)
                },
                X_FLOOR,
                hi,
            )
        } else {
            (self.a_ref + self.beta / self.c).max(0.0)
        };
        let value = self.local_value(x, tau);
        // x = 0 is never better while local_coeff > 0, but check anyway
        let (x, value) = if self.local_value(0.0, tau) > value {
            (0.0, self.local_value(0.0, tau))
        } else {
            (x, value)
        };
        let residual = if x > 0.0 {
            (x - (x + self.local_dx(x) / self.c).max(0.0)).abs()
        } else {
            0.0
        };
        Ok(BranchSolution {
            x,
            tau,
            value,
            residual,
        })
    }

    /// Slope of `max_tau offload_value(x, tau)` at `x = 0+`.
    fn offload_slope_at_zero(&self) -> Result<f64> {
        let tau_edge = self.z_ref + self.gamma / self.c;
        let s0 = if tau_edge > 0.0 {
            0.0
        } else {
            // tau*(x) -> 0 with x/tau -> s0/gain, where s0 solves
            // scale [ln(1+s) - s/(1+s)] = -(gamma + c z_ref)
            let pull = -(self.gamma + self.c * self.z_ref);
            if pull <= 0.0 {
                0.0
            } else {
                1.0 / phi_j(self.offload_scale, 1.0, pull)?
            }
        };
        Ok(self.offload_scale * self.gain / (1.0 + s0) + self.beta + self.c * self.a_ref)
    }

    /// Offloading branch by projected Newton: the face `x = 0` is tested
    /// first, otherwise the maximizer is interior and damped Newton with a
    /// fraction-to-boundary rule converges to it.
    pub fn solve_offload(&self) -> Result<BranchSolution> {
        if self.offload_slope_at_zero()? <= 0.0 {
            let tau = (self.z_ref + self.gamma / self.c).max(0.0);
            return Ok(BranchSolution {
                x: 0.0,
                tau,
                value: self.offload_value(0.0, tau),
                residual: self.offload_residual(0.0, tau),
            });
        }
        match self.offload_newton() {
            Some(sol) if sol.residual <= RESIDUAL_LIMIT => Ok(sol),
            _ => self.offload_bisection(),
        }
    }

    fn offload_newton(&self) -> Option<BranchSolution> {
        let (mut x, mut tau) = (self.a_ref.max(1e-3), self.z_ref.max(1e-3));
        let mut value = self.offload_value(x, tau);
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let (gx, gt) = self.offload_grad(x, tau);
            let s = self.gain * x / tau;
            let curv = self.offload_scale * self.gain * self.gain / ((1.0 + s).powi(2) * tau);
            let u = x / tau;
            // negative definite Hessian
            let hxx = -curv - self.c;
            let hxt = curv * u;
            let htt = -curv * u * u - self.c;
            let det = hxx * htt - hxt * hxt;
            let dx = -(htt * gx - hxt * gt) / det;
            let dt = -(hxx * gt - hxt * gx) / det;

            let mut step = 1.0f64;
            if dx < 0.0 {
                step = step.min(0.99 * x / -dx);
            }
            if dt < 0.0 {
                step = step.min(0.99 * tau / -dt);
            }
            let slope = gx * dx + gt * dt;
            let mut accepted = false;
            for _ in 0..60 {
                let (nx, nt) = (x + step * dx, tau + step * dt);
                let nv = self.offload_value(nx, nt);
                if nv >= value + 1e-4 * step * slope || step * (dx.abs() + dt.abs()) < 1e-16 {
                    x = nx;
                    tau = nt;
                    value = nv;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                return None;
            }
            if (step * dx).abs().max((step * dt).abs()) <= NEWTON_TOLERANCE * (1.0 + x.max(tau)) {
                break;
            }
        }
        Some(BranchSolution {
            x,
            tau,
            value,
            residual: self.offload_residual(x, tau),
        })
    }

    /// `argmax_tau offload_value(x, tau)` for fixed `x > 0`.
    fn best_tau(&self, x: f64) -> f64 {
        let d = |tau: f64| self.offload_grad(x, tau).1;
        let mut hi = (self.z_ref + self.gamma / self.c).max(1e-3);
        while d(hi) > 0.0 {
            hi *= 2.0;
        }
        bisect_decreasing(d, 0.0, hi)
    }

    /// Fallback: bisection on `dV/dx` with the inner `tau` re-optimized.
    pub fn offload_bisection(&self) -> Result<BranchSolution> {
        let hi = (self.a_ref + (self.offload_scale * self.gain + self.beta) / self.c).max(X_FLOOR) + X_FLOOR;
        let dv = |x: f64| self.offload_grad(x, self.best_tau(x)).0;
        let x = bisect_decreasing(dv, 0.0, hi);
        if !(x > 0.0) {
            return Err(Error::NoConvergence {
                what: "offload subproblem",
                iterations: NEWTON_MAX_ITERATIONS,
                residual: f64::NAN,
            });
        }
        let tau = self.best_tau(x);
        let residual = self.offload_residual(x, tau);
        if residual > RESIDUAL_LIMIT {
            return Err(Error::NoConvergence {
                what: "offload subproblem",
                iterations: NEWTON_MAX_ITERATIONS,
                residual,
            });
        }
        Ok(BranchSolution {
            x,
            tau,
            value: self.offload_value(x, tau),
            residual,
        })
    }

    /// Solves both branches and keeps the better one (ties go local).
    pub fn solve(&self) -> Result<SubproblemSolution> {
        let local = self.solve_local()?;
        let offload = self.solve_offload()?;
        let (mode, best) = if offload.value > local.value {
            (Mode::Offload, offload)
        } else {
            (Mode::Local, local)
        };
        Ok(SubproblemSolution {
            x: best.x,
            tau: best.tau,
            mode,
            local,
            offload,
        })
    }
}

/// Root of a decreasing function on `(lo, hi)` where `f(lo+) > 0 >= f(hi)`.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Newton on a decreasing derivative, kept inside a shrinking bracket.
fn safeguarded_newton(f: impl Fn(f64) -> (f64, f64), lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    if f(lo).0 <= 0.0 {
        return lo;
    }
    while f(hi).0 > 0.0 {
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let (d, dd) = f(x);
        if d > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - d / dd;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-16 * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Solves device `i`'s subproblem for both modes and keeps the better one.
pub fn solve_subproblem(
    inst: &NetworkInstance,
    i: usize,
    beta_i: f64,
    gamma_i: f64,
    a_ref: f64,
    z_ref: f64,
    c: f64,
) -> Result<SubproblemSolution> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "step size must be > 0",
        });
    }
    Subproblem::for_device(inst, i, beta_i, gamma_i, a_ref, z_ref, c).solve()
}

/// Objective of the coupled `(z, a)` update for fixed local variables.
pub fn coupled_objective(
    z: &[f64],
    a: f64,
    x: &[f64],
    tau: &[f64],
    beta: &[f64],
    gamma: &[f64],
    c: f64,
) -> f64 {
    (0..x.len())
        .map(|i| {
            beta[i] * (x[i] - a) + gamma[i] * (tau[i] - z[i])
                - 0.5 * c * (x[i] - a).powi(2)
                - 0.5 * c * (tau[i] - z[i]).powi(2)
        })
        .sum()
}

/// Result of the coupled projection step.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledStep {
    pub z: Vec<f64>,
    pub a: f64,
    /// Budget multiplier; 0 when the budget is slack.
    pub psi: f64,
}

/// Maximizes the coupled objective over `{sum(z) + a <= 1, z, a >= 0}`.
///
/// For a multiplier `psi` the maximizer is
/// `a = (mean(x) - (sum(beta) + psi)/(cN))^+`, `z_i = (tau_i - (gamma_i + psi)/c)^+`;
/// `psi` is found by bisection when the budget binds.
pub fn coupled_step(x: &[f64], tau: &[f64], beta: &[f64], gamma: &[f64], c: f64) -> CoupledStep {
    let n = x.len() as f64;
    let sum_x: f64 = x.iter().sum();
    let sum_beta: f64 = beta.iter().sum();
    let at = |psi: f64| -> (Vec<f64>, f64) {
        let a = (sum_x / n - (sum_beta + psi) / (c * n)).max(0.0);
        let z = tau
            .iter()
            .zip(gamma)
            .map(|(&t, &g)| (t - (g + psi) / c).max(0.0))
            .collect();
        (z, a)
    };
    let used = |z: &[f64], a: f64| z.iter().sum::<f64>() + a;

    let (z, a) = at(0.0);
    if used(&z, a) <= 1.0 {
        return CoupledStep { z, a, psi: 0.0 };
    }
    // every component is zero beyond this price
    let mut hi = tau
        .iter()
        .zip(gamma)
        .map(|(&t, &g)| c * t - g)
        .fold(c * sum_x - sum_beta, f64::max);
    let mut lo = 0.0;
    for _ in 0..200 {
        let (z, a) = at(hi);
        if 1.0 - used(&z, a) <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (zm, am) = at(mid);
        if used(&zm, am) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (z, a) = at(hi);
    CoupledStep { z, a, psi: hi }
}

/// Variables of one ADMM iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub tau: Vec<f64>,
    pub m: ModeSelection,
    pub z: Vec<f64>,
    pub a: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: f64,
}

impl AdmmState {
    pub fn initial(n: usize, config: &AdmmConfig, c: f64) -> Self {
        Self {
            x: vec![config.a0; n],
            tau: vec![(1.0 - config.a0) / n as f64; n],
            m: ModeSelection::all_offload(n),
            z: vec![(1.0 - config.a0) / n as f64; n],
            a: config.a0,
            beta: vec![config.multiplier0; n],
            gamma: vec![config.multiplier0; n],
            c,
        }
    }

    /// `sum_i |x_i - a| + |tau_i - z_i|`.
    pub fn primal_residual(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.tau)
            .zip(&self.z)
            .map(|((&x, &t), &z)| (x - self.a).abs() + (t - z).abs())
            .sum()
    }
}

/// Dual ascent on the consensus multipliers.
pub fn multiplier_update(mut state: AdmmState) -> AdmmState {
    let c = state.c;
    for i in 0..state.x.len() {
        state.beta[i] -= c * (state.x[i] - state.a);
        state.gamma[i] -= c * (state.tau[i] - state.z[i]);
    }
    state
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    /// Initial value of every multiplier.
    pub multiplier0: f64,
    /// Initial energy-transfer fraction.
    pub a0: f64,
    /// Step size; `None` uses `eps`.
    pub c: Option<f64>,
    /// Tolerance per device; the stopping threshold is `sigma1 = n * this`.
    pub sigma1_per_device: f64,
    pub max_iterations: usize,
    pub parallel: bool,
    pub bisection: BisectionOptions,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            multiplier0: -100.0,
            a0: 0.9,
            c: None,
            sigma1_per_device: 0.0005,
            max_iterations: 5000,
            parallel: false,
            bisection: BisectionOptions::default(),
        }
    }
}

/// Per-iteration residuals, for convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmIterate {
    pub primal: f64,
    pub change: f64,
    pub offloaders: usize,
}

pub fn admm_solve(inst: &NetworkInstance, config: &AdmmConfig) -> Result<SolveReport> {
    admm_solve_traced(inst, config).map(|(r, _)| r)
}

/// Runs ADMM, returning the report and the residual history.
pub fn admm_solve_traced(
    inst: &NetworkInstance,
    config: &AdmmConfig,
) -> Result<(SolveReport, Vec<AdmmIterate>)> {
    let start = Instant::now();
    let n = inst.len();
    let c = config.c.unwrap_or_else(|| inst.params().epsilon());
    if !(c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "step size must be > 0",
        });
    }
    let sigma1 = config.sigma1_per_device * n as f64;
    let mut state = AdmmState::initial(n, config, c);
    let mut history = Vec::new();
    let mut seen = HashSet::new();
    let mut best: Option<(f64, ModeSelection)> = None;
    let mut converged = false;

    for _ in 0..config.max_iterations {
        // step 1
        let solve = |i: usize| {
            Subproblem::for_device(inst, i, state.beta[i], state.gamma[i], state.a, state.z[i], c).solve()
        };
        let sols: Vec<SubproblemSolution> = if config.parallel {
            (0..n).into_par_iter().map(solve).collect::<Result<_>>()?
        } else {
            (0..n).map(solve).collect::<Result<_>>()?
        };
        state.x = sols.iter().map(|s| s.x).collect();
        state.tau = sols.iter().map(|s| s.tau).collect();
        state.m = ModeSelection::new(sols.iter().map(|s| s.mode).collect());

        // step 2
        let step = coupled_step(&state.x, &state.tau, &state.beta, &state.gamma, c);
        let change = (step.a - state.a).abs()
            + step
                .z
                .iter()
                .zip(&state.z)
                .map(|(new, old)| (new - old).abs())
                .sum::<f64>();
        state.a = step.a;
        state.z = step.z;

        // step 3
        state = multiplier_update(state);

        let primal = state.primal_residual();
        history.push(AdmmIterate {
            primal,
            change,
            offloaders: state.m.offload_count(),
        });

        if seen.insert(state.m.clone()) {
            let (alloc, _) = solve_time_allocation(inst, &state.m, &config.bisection)?;
            let v = objective_unchecked(inst, &state.m, &alloc);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, state.m.clone()));
            }
        }
        if primal < 2.0 * sigma1 && change < sigma1 {
            converged = true;
            break;
        }
    }

    let modes = if converged {
        state.m.clone()
    } else {
        best.map(|(_, m)| m).unwrap_or_else(|| state.m.clone())
    };
    let (allocation, _) = solve_time_allocation(inst, &modes, &config.bisection)?;
    let objective = objective_unchecked(inst, &modes, &allocation);
    Ok((
        SolveReport {
            objective,
            allocation,
            modes,
            iterations: history.len(),
            residual: history.last().map_or(0.0, |h| h.primal),
            wall_time: start.elapsed(),
            converged,
        },
        history,
    ))
}
