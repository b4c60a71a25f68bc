//! Reference schemes: exhaustive mode enumeration, offloading-only,
//! local-computing-only, the partial-offloading relaxation bound, and its
//! per-device rounding.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{objective_unchecked, Mode, ModeSelection, NetworkInstance, SolveReport};
use crate::time_alloc::{conditional_value, solve_time_allocation, BisectionOptions};

/// Largest network the exhaustive search accepts.
pub const ENUMERATION_LIMIT: usize = 24;

fn report_for(
    inst: &NetworkInstance,
    modes: ModeSelection,
    opts: &BisectionOptions,
    iterations: usize,
    start: Instant,
) -> Result<SolveReport> {
    let (allocation, _) = solve_time_allocation(inst, &modes, opts)?;
    let objective = objective_unchecked(inst, &modes, &allocation);
    Ok(SolveReport {
        objective,
        allocation,
        modes,
        iterations,
        residual: 0.0,
        wall_time: start.elapsed(),
        converged: true,
    })
}

/// Exact optimum by trying all `2^n` mode vectors.
///
/// Ties go to the lexicographically smallest mode vector (local < offload).
pub fn enumerate_optimal(inst: &NetworkInstance, opts: &BisectionOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let n = inst.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let total = 1u64 << n;
    let best = (0..total)
        .into_par_iter()
        .map(|bits| {
            let m = ModeSelection::from_bits(bits, n);
            conditional_value(inst, &m, opts).map(|v| (v, m))
        })
        .try_reduce_with(|a, b| {
            Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            })
        })
        .expect("at least one mode vector")?;
    report_for(inst, best.1, opts, total as usize, start)
}

/// Every device offloads.
pub fn offloading_only(inst: &NetworkInstance, opts: &BisectionOptions) -> Result<SolveReport> {
    report_for(
        inst,
        ModeSelection::all_offload(inst.len()),
        opts,
        1,
        Instant::now(),
    )
}

/// Every device computes locally; the whole frame is energy transfer.
pub fn local_only(inst: &NetworkInstance, opts: &BisectionOptions) -> Result<SolveReport> {
    report_for(
        inst,
        ModeSelection::all_local(inst.len()),
        opts,
        1,
        Instant::now(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrOptions {
    /// Target first-order residual.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for LrOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iterations: 200_000,
        }
    }
}

/// Maximizer of the partial-offloading relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSolution {
    /// Relaxed optimum; an upper bound on the binary problem.
    pub upper_bound: f64,
    pub a: f64,
    pub tau: Vec<f64>,
    /// Offloading transmit power `e_i` (harvested energy per frame spent on offloading).
    pub e: Vec<f64>,
    /// Unweighted local computation rate `f_i / phi` per device.
    pub local_rate: Vec<f64>,
    /// Unweighted offloading rate per device.
    pub offload_rate: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-device constants of the relaxation.
struct LrDevice {
    w: f64,
    /// `mu P h`: harvested power per unit of energy-transfer time.
    harvest: f64,
    /// `1 / (phi k^(1/3))`: converts `(energy)^(1/3)` to a local rate.
    local: f64,
    /// `g / N0`.
    snr: f64,
}

struct LrProblem {
    eps: f64,
    devices: Vec<LrDevice>,
}

impl LrProblem {
    fn new(inst: &NetworkInstance) -> Self {
        let p = inst.params();
        let devices = (0..inst.len())
            .map(|i| LrDevice {
                w: inst.w()[i],
                harvest: p.harvest_eff * p.ap_power * inst.h()[i],
                local: 1.0 / (p.cycles_per_bit * inst.k()[i].cbrt()),
                snr: inst.g()[i] / p.noise,
            })
            .collect();
        Self {
            eps: p.epsilon(),
            devices,
        }
    }

    fn local_rate(&self, d: &LrDevice, a: f64, e: f64) -> f64 {
        d.local * (d.harvest * a - e).max(0.0).cbrt()
    }

    fn offload_rate(&self, d: &LrDevice, tau: f64, e: f64) -> f64 {
        if tau <= 0.0 || e <= 0.0 {
            0.0
        } else {
            self.eps * tau * (e * d.snr / tau).ln_1p()
        }
    }

    /// Best energy split for one device at fixed `(a, tau)`.
    fn best_e(&self, d: &LrDevice, a: f64, tau: f64) -> f64 {
        let budget = d.harvest * a;
        if tau <= 0.0 || budget <= 0.0 {
            return 0.0;
        }
        let slope = |e: f64| {
            -d.local / (3.0 * (budget - e).powf(2.0 / 3.0)) + self.eps * d.snr / (1.0 + e * d.snr / tau)
        };
        if slope(0.0) <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, budget);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Value and gradient of the inner-maximized objective at `y = (a, tau)`.
    fn eval(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let a = y[0];
        let mut grad = vec![0.0; y.len()];
        let mut es = Vec::with_capacity(self.devices.len());
        let mut value = 0.0;
        for (i, d) in self.devices.iter().enumerate() {
            let tau = y[i + 1];
            let e = self.best_e(d, a, tau);
            es.push(e);
            value += d.w * (self.local_rate(d, a, e) + self.offload_rate(d, tau, e));
            let rest = d.harvest * a - e;
            grad[0] += if rest > 0.0 {
                d.w * d.local * d.harvest / (3.0 * rest.powf(2.0 / 3.0))
            } else {
                f64::INFINITY
            };
            let u = if tau > 0.0 {
                e * d.snr / tau
            } else {
                // limiting ratio e/tau as tau -> 0+
                let marginal = d.local / (3.0 * (d.harvest * a).powf(2.0 / 3.0));
                (self.eps * d.snr / marginal - 1.0).max(0.0)
            };
            grad[i + 1] = d.w * self.eps * (u.ln_1p() - u / (1.0 + u));
        }
        (value, grad, es)
    }
}

/// Euclidean projection onto `{y >= 0, sum(y) <= 1}`.
pub fn project_capped_simplex(y: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

fn stationarity(y: &[f64], grad: &[f64]) -> f64 {
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return if scale == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let moved: Vec<f64> = y.iter().zip(grad).map(|(v, g)| v + g / scale).collect();
    project_capped_simplex(&moved)
        .iter()
        .zip(y)
        .map(|(p, v)| (p - v).abs())
        .fold(0.0, f64::max)
}

/// Solves the partial-offloading relaxation by projected gradient ascent on
/// `(a, tau)` with the energy split maximized in closed loop per device.
pub fn lr_bound(inst: &NetworkInstance, opts: &LrOptions) -> Result<LrSolution> {
    let prob = LrProblem::new(inst);
    let n = inst.len();
    let mut y = vec![0.5; n + 1];
    for v in y.iter_mut().skip(1) {
        *v = 0.5 / n as f64;
    }
    let (mut value, mut grad, mut es) = prob.eval(&y);
    let mut step = 1.0 / grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    let mut residual = stationarity(&y, &grad);
    let mut iterations = 0;

    while residual > opts.tol {
        if iterations == opts.max_iterations {
            return Err(Error::NoConvergence {
                what: "lr_bound",
                iterations,
                residual,
            });
        }
        iterations += 1;
        // Armijo backtracking along the projection arc
        let mut t = step;
        let (next, nv, ng, ne) = loop {
            let trial: Vec<f64> = y.iter().zip(&grad).map(|(v, g)| v + t * g).collect();
            let trial = project_capped_simplex(&trial);
            let (tv, tg, te) = prob.eval(&trial);
            let gain: f64 = trial
                .iter()
                .zip(&y)
                .zip(&grad)
                .map(|((p, v), g)| g * (p - v))
                .sum();
            if tv >= value + 1e-4 * gain || t < 1e-300 {
                break (trial, tv, tg, te);
            }
            t *= 0.5;
        };
        // Barzilai-Borwein step for the next iteration
        let s: Vec<f64> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
        let r: Vec<f64> = ng.iter().zip(&grad).map(|(a, b)| b - a).collect();
        let sr: f64 = s.iter().zip(&r).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sr > 0.0 && ss > 0.0 { ss / sr } else { 2.0 * t };
        if ss == 0.0 && nv <= value {
            // no movement possible
            y = next;
            grad = ng;
            es = ne;
            residual = stationarity(&y, &grad);
            if residual > opts.tol {
                return Err(Error::NoConvergence {
                    what: "lr_bound",
                    iterations,
                    residual,
                });
            }
            break;
        }
        y = next;
        value = nv;
        grad = ng;
        es = ne;
        residual = stationarity(&y, &grad);
    }

    let a = y[0];
    let tau = y[1..].to_vec();
    let local_rate = prob
        .devices
        .iter()
        .zip(&es)
        .map(|(d, &e)| prob.local_rate(d, a, e))
        .collect();
    let offload_rate = prob
        .devices
        .iter()
        .zip(&es)
        .zip(&tau)
        .map(|((d, &e), &t)| prob.offload_rate(d, t, e))
        .collect();
    Ok(LrSolution {
        upper_bound: value,
        a,
        tau,
        e: es,
        local_rate,
        offload_rate,
        iterations,
        residual,
    })
}

/// Value of the relaxation objective at an explicit `(a, tau, e)`.
pub fn lr_objective(inst: &NetworkInstance, a: f64, tau: &[f64], e: &[f64]) -> f64 {
    let prob = LrProblem::new(inst);
    prob.devices
        .iter()
        .enumerate()
        .map(|(i, d)| d.w * (prob.local_rate(d, a, e[i]) + prob.offload_rate(d, tau[i], e[i])))
        .sum()
}

/// Rounds a relaxed solution: a device computes locally when its local rate
/// is at least its offloading rate.
pub fn round_modes(lr: &LrSolution) -> ModeSelection {
    ModeSelection::new(
        lr.local_rate
            .iter()
            .zip(&lr.offload_rate)
            .map(|(l, o)| if l >= o { Mode::Local } else { Mode::Offload })
            .collect(),
    )
}

/// Relaxation, rounding, then the exact time split for the rounded modes.
pub fn lr_round(
    inst: &NetworkInstance,
    lr: &LrOptions,
    opts: &BisectionOptions,
) -> Result<(SolveReport, LrSolution)> {
    let start = Instant::now();
    let sol = lr_bound(inst, lr)?;
    let report = report_for(inst, round_modes(&sol), opts, sol.iterations, start)?;
    Ok((report, sol))
}
